"""Exact linear algebra over the rationals and over prime fields.

Everything downstream (cohomology, quasi-isomorphism tests, moduli
enumeration) reduces to exact Gaussian elimination, so this module is the
single arithmetic substrate. Matrices are sparse dict-of-rows; scalars are
`fractions.Fraction` in characteristic zero and plain ints reduced mod p in
characteristic p. No floats anywhere.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Optional


class RationalField:
    """The field of exact rationals (characteristic zero)."""

    char = 0

    def coerce(self, x):
        if isinstance(x, Fraction):
            return x
        if isinstance(x, int):
            return Fraction(x)
        if isinstance(x, str):
            return Fraction(x.strip())
        raise TypeError(f"cannot coerce {x!r} into QQ")

    def zero(self):
        return Fraction(0)

    def one(self):
        return Fraction(1)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def div(self, a, b):
        if b == 0:
            raise ZeroDivisionError("division by zero in QQ")
        return a / b

    def inv(self, a):
        return self.div(self.one(), a)

    def is_zero(self, a):
        return a == 0

    def eq(self, a, b):
        return a == b

    def __repr__(self):
        return "QQ"


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


class PrimeField:
    """Integers mod p. Division by a multiple of p raises, never wraps."""

    def __init__(self, p: int):
        if not _is_prime(p):
            raise ValueError(f"{p} is not prime")
        if p == 2:
            # 1/2 shows up in every Maurer-Cartan residual; refuse early.
            raise ValueError("characteristic 2 is not supported (1/2 is needed)")
        self.p = p
        self.char = p

    def coerce(self, x):
        p = self.p
        if isinstance(x, int):
            return x % p
        if isinstance(x, Fraction):
            num, den = x.numerator, x.denominator
            if den % p == 0:
                raise ZeroDivisionError(f"denominator {den} not invertible mod {p}")
            return (num * pow(den, -1, p)) % p
        if isinstance(x, str):
            return self.coerce(Fraction(x.strip()))
        raise TypeError(f"cannot coerce {x!r} into GF({p})")

    def zero(self):
        return 0

    def one(self):
        return 1

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    def neg(self, a):
        return (-a) % self.p

    def div(self, a, b):
        if b % self.p == 0:
            raise ZeroDivisionError(f"division by multiple of {self.p}")
        return (a * pow(b, -1, self.p)) % self.p

    def inv(self, a):
        return self.div(1, a)

    def is_zero(self, a):
        return a % self.p == 0

    def eq(self, a, b):
        return (a - b) % self.p == 0

    def __repr__(self):
        return f"GF({self.p})"


QQ = RationalField()

_gf_cache: dict[int, PrimeField] = {}


def GF(p: int) -> PrimeField:
    if p not in _gf_cache:
        _gf_cache[p] = PrimeField(p)
    return _gf_cache[p]


def field_of_char(char: int):
    return QQ if char == 0 else GF(char)


# ---------------------------------------------------------------------------
# Sparse vectors: dict {index: scalar}, zero entries pruned.


def vec_clean(field, v: dict) -> dict:
    return {i: c for i, c in v.items() if not field.is_zero(c)}

def vec_add(field, u: dict, v: dict) -> dict:
    out = dict(u)
    for i, c in v.items():
        s = field.add(out.get(i, field.zero()), c)
        if field.is_zero(s):
            out.pop(i, None)
        else:
            out[i] = s
    return out

def vec_sub(field, u: dict, v: dict) -> dict:
    return vec_add(field, u, vec_scale(field, field.neg(field.one()), v))

def vec_scale(field, a, v: dict) -> dict:
    if field.is_zero(a):
        return {}
    return {i: field.mul(a, c) for i, c in v.items()}

def vec_eq(field, u: dict, v: dict) -> bool:
    return not vec_sub(field, u, v)

def vec_coerce(field, v: dict) -> dict:
    return vec_clean(field, {i: field.coerce(c) for i, c in v.items()})


# ---------------------------------------------------------------------------
# Sparse matrices.


class Mat:
    """Sparse matrix: rows[i] is a dict {col: scalar}. Acts on column vectors."""

    def __init__(self, field, nrows: int, ncols: int, rows: Optional[list] = None):
        self.field = field
        self.nrows = nrows
        self.ncols = ncols
        self.rows = [dict() for _ in range(nrows)] if rows is None else rows

    @classmethod
    def from_entries(cls, field, nrows, ncols, entries: Iterable):
        """entries: iterable of (row, col, value); values are coerced."""
        m = cls(field, nrows, ncols)
        for r, c, v in entries:
            v = field.coerce(v)
            if not field.is_zero(v):
                m.rows[r][c] = v
        return m

    @classmethod
    def from_dense(cls, field, dense: list) -> "Mat":
        nrows = len(dense)
        ncols = len(dense[0]) if nrows else 0
        return cls.from_entries(
            field, nrows, ncols,
            ((r, c, dense[r][c]) for r in range(nrows) for c in range(ncols)),
        )

    @classmethod
    def identity(cls, field, n) -> "Mat":
        m = cls(field, n, n)
        one = field.one()
        for i in range(n):
            m.rows[i][i] = one
        return m

    def copy(self) -> "Mat":
        return Mat(self.field, self.nrows, self.ncols, [dict(r) for r in self.rows])

    def set(self, r, c, v):
        v = self.field.coerce(v)
        if self.field.is_zero(v):
            self.rows[r].pop(c, None)
        else:
            self.rows[r][c] = v

    def get(self, r, c):
        return self.rows[r].get(c, self.field.zero())

    def entries(self):
        for r, row in enumerate(self.rows):
            for c, v in row.items():
                yield r, c, v

    def is_zero(self) -> bool:
        return all(not row for row in self.rows)

    def mul_vec(self, v: dict) -> dict:
        F = self.field
        out: dict = {}
        for i, row in enumerate(self.rows):
            if not row:
                continue
            acc = F.zero()
            if len(row) <= len(v):
                for c, a in row.items():
                    x = v.get(c)
                    if x is not None:
                        acc = F.add(acc, F.mul(a, x))
            else:
                for c, x in v.items():
                    a = row.get(c)
                    if a is not None:
                        acc = F.add(acc, F.mul(a, x))
            if not F.is_zero(acc):
                out[i] = acc
        return out

    def mul_mat(self, other: "Mat") -> "Mat":
        if self.ncols != other.nrows:
            raise ValueError("shape mismatch")
        F = self.field
        # column dict of other for sparse product
        out = Mat(F, self.nrows, other.ncols)
        for i, row in enumerate(self.rows):
            acc: dict = {}
            for k, a in row.items():
                for j, b in other.rows[k].items():
                    s = F.add(acc.get(j, F.zero()), F.mul(a, b))
                    if F.is_zero(s):
                        acc.pop(j, None)
                    else:
                        acc[j] = s
            out.rows[i] = acc
        return out

    def add(self, other: "Mat") -> "Mat":
        F = self.field
        out = self.copy()
        for r, c, v in other.entries():
            s = F.add(out.get(r, c), v)
            out.set(r, c, s)
        return out

    def scale(self, a) -> "Mat":
        F = self.field
        a = F.coerce(a)
        return Mat(F, self.nrows, self.ncols,
                   [{c: F.mul(a, v) for c, v in row.items()} for row in self.rows])

    def transpose(self) -> "Mat":
        out = Mat(self.field, self.ncols, self.nrows)
        for r, c, v in self.entries():
            out.rows[c][r] = v
        return out

    def to_dense(self) -> list:
        z = self.field.zero()
        return [[self.rows[r].get(c, z) for c in range(self.ncols)]
                for r in range(self.nrows)]

    def eq(self, other: "Mat") -> bool:
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            return False
        F = self.field
        for r in range(self.nrows):
            cols = set(self.rows[r]) | set(other.rows[r])
            for c in cols:
                if not F.eq(self.get(r, c), other.get(r, c)):
                    return False
        return True

    def __repr__(self):
        return f"Mat({self.field}, {self.nrows}x{self.ncols}, nnz={sum(len(r) for r in self.rows)})"


def rref(mat: Mat):
    """Reduced row echelon form; returns (rows, pivot_cols).

    Deterministic: scans columns left to right, picks the first row with a
    nonzero entry. Exact over the fraction field or GF(p), so pivot
    magnitude is irrelevant; the fixed scan order makes representatives
    reproducible.
    """
    F = mat.field
    rows = [dict(r) for r in mat.rows if r]
    pivots: list[int] = []
    done: list[dict] = []
    col = 0
    while rows and col < mat.ncols:
        pividx = None
        for i, r in enumerate(rows):
            if col in r:
                pividx = i
                break
        if pividx is None:
            col += 1
            continue
        piv = rows.pop(pividx)
        inv = F.inv(piv[col])
        piv = {c: F.mul(inv, v) for c, v in piv.items()}
        for target in (rows, done):
            for i, r in enumerate(target):
                a = r.get(col)
                if a is not None:
                    new = dict(r)
                    for c, v in piv.items():
                        s = F.sub(new.get(c, F.zero()), F.mul(a, v))
                        if F.is_zero(s):
                            new.pop(c, None)
                        else:
                            new[c] = s
                    target[i] = new
        rows = [r for r in rows if r]
        done.append(piv)
        pivots.append(col)
        col += 1
    return done, pivots


def rank(mat: Mat) -> int:
    return len(rref(mat)[1])


def nullspace(mat: Mat) -> list:
    """Basis of {v : mat v = 0}, deterministic: free columns ascending,
    each basis vector has 1 in its free column."""
    F = mat.field
    rows, pivots = rref(mat)
    pivset = set(pivots)
    basis = []
    one = F.one()
    for j in range(mat.ncols):
        if j in pivset:
            continue
        v = {j: one}
        for r, pc in zip(rows, pivots):
            a = r.get(j)
            if a is not None:
                v[pc] = F.neg(a)
        basis.append(vec_clean(F, v))
    return basis


def solve(mat: Mat, rhs: dict) -> Optional[dict]:
    """One solution of mat x = rhs, or None. Free variables set to zero."""
    F = mat.field
    aug = Mat(F, mat.nrows, mat.ncols + 1, [dict(r) for r in mat.rows])
    for i, v in rhs.items():
        if not F.is_zero(v):
            aug.rows[i][mat.ncols] = v
    rows, pivots = rref(aug)
    x: dict = {}
    for r, pc in zip(rows, pivots):
        if pc == mat.ncols:
            return None  # inconsistent
        b = r.get(mat.ncols)
        if b is not None:
            x[pc] = b
    return x


class Echelon:
    """Echelonized span of a set of vectors, for membership and quotients."""

    def __init__(self, field, vectors: Iterable[dict], dim: int):
        self.field = field
        self.dim = dim
        self.rows: list[dict] = []
        self.pivots: list[int] = []
        for v in vectors:
            self.add(v)

    def _reduce(self, v: dict) -> dict:
        F = self.field
        v = dict(v)
        for r, pc in zip(self.rows, self.pivots):
            a = v.get(pc)
            if a is not None:
                for c, w in r.items():
                    s = F.sub(v.get(c, F.zero()), F.mul(a, w))
                    if F.is_zero(s):
                        v.pop(c, None)
                    else:
                        v[c] = s
        return v

    def add(self, v: dict) -> bool:
        """Insert v into the span; returns True if the span grew."""
        F = self.field
        v = self._reduce(vec_clean(F, v))
        if not v:
            return False
        pc = min(v)
        inv = F.inv(v[pc])
        v = {c: F.mul(inv, w) for c, w in v.items()}
        # back-substitute into existing rows to keep reduced form
        for i, r in enumerate(self.rows):
            a = r.get(pc)
            if a is not None:
                new = dict(r)
                for c, w in v.items():
                    s = F.sub(new.get(c, F.zero()), F.mul(a, w))
                    if F.is_zero(s):
                        new.pop(c, None)
                    else:
                        new[c] = s
                self.rows[i] = new
        self.rows.append(v)
        self.pivots.append(pc)
        order = sorted(range(len(self.pivots)), key=lambda i: self.pivots[i])
        self.rows = [self.rows[i] for i in order]
        self.pivots = [self.pivots[i] for i in order]
        return True

    def contains(self, v: dict) -> bool:
        return not self._reduce(vec_clean(self.field, v))

    def reduce(self, v: dict) -> dict:
        """Normal form of v modulo the span; empty iff contained."""
        return self._reduce(vec_clean(self.field, v))

    def coords_in_basis(self, vectors: list, v: dict) -> Optional[dict]:
        """Express v as a combination of the given vectors (if possible)."""
        F = self.field
        cols = len(vectors)
        m = Mat(F, self.dim, cols)
        for j, w in enumerate(vectors):
            for i, c in w.items():
                m.rows[i][j] = c
        return solve(m, v)

    @property
    def rank(self) -> int:
        return len(self.rows)


class SpanSolver:
    """Express many vectors in a fixed spanning list.

    Keeps forward-eliminated rows together with their expression in the
    original vectors, so each solve costs one reduction pass.
    """

    def __init__(self, field, vectors: list, dim: int):
        self.field = field
        self.dim = dim
        self.rows = []  # (reduced vector, combination over original indices)
        self.ncols = 0
        for v in vectors:
            self.append(v)

    def _reduce(self, v: dict, rep: dict):
        F = self.field
        v = vec_clean(F, dict(v))
        rep = dict(rep)
        for rv, rrep in self.rows:
            pc = min(rv)
            a = v.get(pc)
            if a is None:
                continue
            for c, w in rv.items():
                s = F.sub(v.get(c, F.zero()), F.mul(a, w))
                if F.is_zero(s):
                    v.pop(c, None)
                else:
                    v[c] = s
            for c, w in rrep.items():
                s = F.sub(rep.get(c, F.zero()), F.mul(a, w))
                if F.is_zero(s):
                    rep.pop(c, None)
                else:
                    rep[c] = s
        return v, rep

    def append(self, v: dict) -> bool:
        j = self.ncols
        self.ncols += 1
        v, rep = self._reduce(v, {j: self.field.one()})
        if not v:
            return False
        inv = self.field.inv(v[min(v)])
        v = {c: self.field.mul(inv, w) for c, w in v.items()}
        rep = {c: self.field.mul(inv, w) for c, w in rep.items()}
        self.rows.append((v, rep))
        self.rows.sort(key=lambda t: min(t[0]))
        return True

    def solve(self, v: dict) -> Optional[dict]:
        """Coordinates of v in the original vectors, or None."""
        rem, rep = self._reduce(v, {})
        if rem:
            return None
        F = self.field
        return {c: F.neg(w) for c, w in rep.items()}


def complement_indices(ech: Echelon) -> list:
    """Coordinate indices whose standard vectors complete the span to the
    whole space. Deterministic greedy scan."""
    out = []
    probe = Echelon(ech.field, ech.rows, ech.dim)
    one = ech.field.one()
    for j in range(ech.dim):
        if probe.add({j: one}):
            out.append(j)
    return out


# ---------------------------------------------------------------------------
# Cochain complexes and chain maps.


class CochainComplex:
    """Finite cochain complex: dims[k] and differentials d[k]: C^k -> C^{k+1}.

    Matrix convention: d[k] has shape (dims[k+1], dims[k]) acting on column
    vectors. d(k+1) * d(k) = 0 is validated on construction.
    """

    def __init__(self, field, dims: dict, d: dict, check: bool = True):
        self.field = field
        self.dims = {k: n for k, n in dims.items() if n > 0}
        self.d = {}
        for k, m in d.items():
            need_rows = self.dims.get(k + 1, 0)
            need_cols = self.dims.get(k, 0)
            if (m.nrows, m.ncols) != (need_rows, need_cols):
                raise ValueError(f"d[{k}] shape {(m.nrows, m.ncols)} vs dims {(need_rows, need_cols)}")
            if not m.is_zero():
                self.d[k] = m
        if check:
            for k in self.d:
                nxt = self.d.get(k + 1)
                if nxt is not None and not nxt.mul_mat(self.d[k]).is_zero():
                    raise ValueError(f"d^2 != 0 between degrees {k} and {k+2}")

    def degrees(self):
        return sorted(self.dims)

    def dmat(self, k) -> Mat:
        return self.d.get(k) or Mat(self.field, self.dims.get(k + 1, 0), self.dims.get(k, 0))

    def cocycles(self, k) -> list:
        n = self.dims.get(k, 0)
        if n == 0:
            return []
        dk = self.dmat(k)
        if dk.is_zero():
            one = self.field.one()
            return [{j: one} for j in range(n)]
        return nullspace(dk)

    def coboundaries(self, k) -> list:
        prev = self.d.get(k - 1)
        if prev is None:
            return []
        cols = prev.transpose()
        return [vec_clean(self.field, r) for r in cols.rows if r]

    def cohomology(self, k):
        """Returns (dimension, representatives). Representatives are the
        first kernel basis vectors independent modulo the image, in the
        deterministic kernel order."""
        ker = self.cocycles(k)
        img = self.coboundaries(k)
        ech = Echelon(self.field, img, self.dims.get(k, 0))
        reps = []
        for v in ker:
            if ech.add(v):
                reps.append(v)
        return len(reps), reps

    def betti(self) -> dict:
        out = {}
        lo = min(self.dims, default=0)
        hi = max(self.dims, default=-1)
        for k in range(lo, hi + 1):
            dim, _ = self.cohomology(k)
            if dim:
                out[k] = dim
        return out

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * n for k, n in self.dims.items())


class ChainMap:
    """Degreewise map f[k]: source C^k -> target C^k commuting with d."""

    def __init__(self, source: CochainComplex, target: CochainComplex,
                 mats: dict, check: bool = True):
        self.source = source
        self.target = target
        self.mats = {}
        for k in set(source.dims) | set(target.dims) | set(mats):
            m = mats.get(k)
            sn = source.dims.get(k, 0)
            tn = target.dims.get(k, 0)
            if m is None:
                m = Mat(source.field, tn, sn)
            if (m.nrows, m.ncols) != (tn, sn):
                raise ValueError(f"f[{k}] shape mismatch")
            self.mats[k] = m
        if check:
            for k in source.dims:
                left = self.mat(k + 1).mul_mat(source.dmat(k))
                right = target.dmat(k).mul_mat(self.mat(k))
                if not left.eq(right):
                    raise ValueError(f"chain map does not commute with d at degree {k}")

    def mat(self, k) -> Mat:
        m = self.mats.get(k)
        if m is None:
            m = Mat(self.source.field,
                    self.target.dims.get(k, 0),
                    self.source.dims.get(k, 0))
        return m

    def compose(self, inner: "ChainMap") -> "ChainMap":
        """self o inner (inner applied first)."""
        if inner.target is not self.source and inner.target.dims != self.source.dims:
            raise ValueError("composition mismatch")
        mats = {}
        for k in set(inner.source.dims) | set(self.target.dims):
            mats[k] = self.mat(k).mul_mat(inner.mat(k))
        return ChainMap(inner.source, self.target, mats, check=False)


def induced_cohomology_map(f: ChainMap, k):
    """Matrix of H^k(f) in the deterministic representative bases."""
    F = f.source.field
    sdim, sreps = f.source.cohomology(k)
    tdim, treps = f.target.cohomology(k)
    timg = f.target.coboundaries(k)
    n = f.target.dims.get(k, 0)
    cols = treps + timg
    m = Mat(F, n, len(cols))
    for j, w in enumerate(cols):
        for i, c in w.items():
            m.rows[i][j] = c
    out = Mat(F, tdim, sdim)
    for j, v in enumerate(sreps):
        image = f.mat(k).mul_vec(v)
        coords = solve(m, image)
        if coords is None:
            raise ValueError("image of a cocycle is not a cocycle; not a chain map?")
        for i in range(tdim):
            c = coords.get(i)
            if c is not None:
                out.rows[i][j] = c
    return out, sdim, tdim


def is_quasi_iso(f: ChainMap) -> bool:
    """True iff H^k(f) is an isomorphism in every degree."""
    degrees = set(f.source.dims) | set(f.target.dims)
    probe = set()
    for k in degrees:
        probe.update((k - 1, k, k + 1))
    for k in sorted(probe):
        m, sdim, tdim = induced_cohomology_map(f, k)
        if sdim != tdim:
            return False
        if sdim and rank(m) != sdim:
            return False
    return True
