"""Finite-dimensional nilpotent dg Lie algebras with exact scalars.

The core objects are `DgLieAlgebra` (basis with degrees, sparse structure
constants, sparse differential), gauge flows integrated in closed form, BCH
composition computed from the enveloping truncation, lower-central
filtrations, twists, and exhaustive Maurer-Cartan moduli over prime fields.

Conventions. The Maurer-Cartan residual of a degree 1 element is
dx + (1/2)[x, x]. The gauge vector field of a degree 0 element l is
x |-> [l, x] - dl (the unique dl sign compatible with that residual:
along the flow R' = [l, R], so Maurer-Cartan elements stay Maurer-Cartan),
and its time-1 flow is the terminating series

    x(1) = x0 + sum_{k>=1} (1/k!) ad_l^{k-1}([l, x0] - dl).
"""

from __future__ import annotations

from fractions import Fraction

from .linalg import (
    CochainComplex, ChainMap, Echelon, Mat, complement_indices,
    is_quasi_iso, nullspace, rank, solve, vec_add, vec_clean,
    vec_eq, vec_scale, vec_sub,
)


class BudgetExceeded(RuntimeError):
    """An enumeration would exceed the configured budget."""


class NotNilpotentError(ValueError):
    pass


def koszul_sign(d1: int, d2: int) -> int:
    return -1 if (d1 % 2) and (d2 % 2) else 1


class DgLieAlgebra:
    """Graded Lie algebra with differential, given by structure constants.

    bracket[(i, j)] = {k: c} means [x_i, x_j] = sum c * x_k. Pairs missing
    from the table are filled in by graded antisymmetry when
    `symmetrize=True` (the default); explicitly given pairs are kept as
    given and validated by `check_axioms`.
    """

    def __init__(self, field, names, degrees, d=None, bracket=None,
                 symmetrize: bool = True):
        if len(names) != len(degrees):
            raise ValueError("names/degrees length mismatch")
        if len(set(names)) != len(names):
            raise ValueError("duplicate basis names")
        self.field = field
        self.names = list(names)
        self.degrees = list(degrees)
        self.index = {nm: i for i, nm in enumerate(names)}
        n = len(names)
        self.n = n
        self.d = d if d is not None else Mat(field, n, n)
        if (self.d.nrows, self.d.ncols) != (n, n):
            raise ValueError("d must be a square matrix on the whole basis")
        for r, c, v in self.d.entries():
            if self.degrees[r] != self.degrees[c] + 1:
                raise ValueError(
                    f"d entry ({self.names[r]},{self.names[c]}) violates degree +1")
        self.bracket = {}
        bracket = bracket or {}
        for (i, j), vec in bracket.items():
            vec = vec_clean(field, {k: field.coerce(c) for k, c in vec.items()})
            for k in vec:
                if self.degrees[k] != self.degrees[i] + self.degrees[j]:
                    raise ValueError(
                        f"bracket ({self.names[i]},{self.names[j]}) -> {self.names[k]} violates grading")
            if vec:
                self.bracket[(i, j)] = vec
        if symmetrize:
            for (i, j) in list(self.bracket):
                if (j, i) not in bracket and (j, i) != (i, j):
                    sgn = koszul_sign(self.degrees[i], self.degrees[j])
                    self.bracket[(j, i)] = vec_clean(
                        field, vec_scale(field, field.coerce(-sgn), self.bracket[(i, j)]))
        self._complex = None
        self._lower_central = None

    # -- element helpers ----------------------------------------------------

    def el(self, coeffs: dict) -> dict:
        """Build a sparse element from {name_or_index: coefficient}."""
        out = {}
        for key, c in coeffs.items():
            i = self.index[key] if isinstance(key, str) else key
            out[i] = self.field.coerce(c)
        return vec_clean(self.field, out)

    def degree_of(self, v: dict):
        degs = {self.degrees[i] for i in v}
        if not degs:
            return None
        if len(degs) > 1:
            raise ValueError(f"element is not homogeneous: degrees {sorted(degs)}")
        return degs.pop()

    def homogeneous(self, v: dict, expected: int, what: str = "element"):
        deg = self.degree_of(v)
        if deg is not None and deg != expected:
            raise ValueError(f"{what} must have degree {expected}, got {deg}")
        return v

    def basis_indices(self, degree: int):
        return [i for i, dg in enumerate(self.degrees) if dg == degree]

    def d_vec(self, v: dict) -> dict:
        return self.d.mul_vec(v)

    def bracket_pair(self, i: int, j: int) -> dict:
        return self.bracket.get((i, j), {})

    def bracket_vec(self, u: dict, v: dict) -> dict:
        F = self.field
        out: dict = {}
        for i, a in u.items():
            for j, b in v.items():
                tbl = self.bracket.get((i, j))
                if not tbl:
                    continue
                ab = F.mul(a, b)
                for k, c in tbl.items():
                    s = F.add(out.get(k, F.zero()), F.mul(ab, c))
                    if F.is_zero(s):
                        out.pop(k, None)
                    else:
                        out[k] = s
        return out

    def ad(self, u: dict) -> Mat:
        """Matrix of [u, -] on the whole basis."""
        m = Mat(self.field, self.n, self.n)
        one = self.field.one()
        for j in range(self.n):
            col = self.bracket_vec(u, {j: one})
            for i, c in col.items():
                m.rows[i][j] = c
        return m

    # -- complexes -----------------------------------------------------------

    def complex(self) -> CochainComplex:
        if self._complex is None:
            degs = sorted(set(self.degrees))
            dims = {k: len(self.basis_indices(k)) for k in degs}
            pos = {}
            for k in degs:
                for loc, i in enumerate(self.basis_indices(k)):
                    pos[i] = loc
            ds = {}
            for k in degs:
                src = self.basis_indices(k)
                tgt = self.basis_indices(k + 1)
                m = Mat(self.field, len(tgt), len(src))
                for cloc, j in enumerate(src):
                    for i in tgt:
                        val = self.d.rows[i].get(j)
                        if val is not None:
                            m.rows[pos[i]][cloc] = val
                ds[k] = m
            self._complex = CochainComplex(self.field, dims, ds)
        return self._complex

    def global_to_graded(self, v: dict, degree: int) -> dict:
        idx = self.basis_indices(degree)
        pos = {i: loc for loc, i in enumerate(idx)}
        return {pos[i]: c for i, c in v.items() if i in pos}

    def graded_to_global(self, v: dict, degree: int) -> dict:
        idx = self.basis_indices(degree)
        return {idx[loc]: c for loc, c in v.items()}

    def cohomology(self, k):
        dim, reps = self.complex().cohomology(k)
        return dim, [self.graded_to_global(r, k) for r in reps]

    def dims_at(self, k: int) -> int:
        return len(self.basis_indices(k))

    # -- axioms ---------------------------------------------------------------

    def check_axioms(self, check_nilpotent: bool = True) -> list:
        """Returns a list of violation descriptions (empty means all pass)."""
        F = self.field
        bad = []
        dd = self.d.mul_mat(self.d)
        if not dd.is_zero():
            bad.append("d^2 != 0")
        one = F.one()
        for i in range(self.n):
            for j in range(self.n):
                lhs = self.bracket_pair(i, j)
                rhs = vec_scale(F, F.coerce(-koszul_sign(self.degrees[i], self.degrees[j])),
                                self.bracket_pair(j, i))
                if not vec_eq(F, lhs, vec_clean(F, rhs)):
                    bad.append(f"antisymmetry fails at ({self.names[i]},{self.names[j]})")
        for i in range(self.n):
            if self.degrees[i] % 2 == 0:
                if self.bracket_pair(i, i):
                    bad.append(f"[x,x] != 0 for even-degree {self.names[i]}")
        for i in range(self.n):
            ei = {i: one}
            for j in range(self.n):
                ej = {j: one}
                # Leibniz
                lhs = self.d_vec(self.bracket_pair(i, j))
                rhs = vec_add(F, self.bracket_vec(self.d_vec(ei), ej),
                              vec_scale(F, F.coerce((-1) ** (self.degrees[i] % 2)),
                                        self.bracket_vec(ei, self.d_vec(ej))))
                if not vec_eq(F, lhs, rhs):
                    bad.append(f"Leibniz fails at ({self.names[i]},{self.names[j]})")
                for k in range(self.n):
                    ek = {k: one}
                    lhs = self.bracket_vec(ei, self.bracket_vec(ej, ek))
                    sgn = F.coerce(koszul_sign(self.degrees[i], self.degrees[j]))
                    rhs = vec_add(F, self.bracket_vec(self.bracket_vec(ei, ej), ek),
                                  vec_scale(F, sgn, self.bracket_vec(ej, self.bracket_vec(ei, ek))))
                    if not vec_eq(F, lhs, rhs):
                        bad.append(
                            f"Jacobi fails at ({self.names[i]},{self.names[j]},{self.names[k]})")
        if check_nilpotent:
            try:
                self.nilpotency_degree()
            except NotNilpotentError:
                bad.append("not nilpotent (lower central series does not vanish)")
        return bad

    # -- lower central series -------------------------------------------------

    def lower_central(self) -> list:
        """Echelonized stages [F_1, F_2, ...] down to (not including) zero."""
        if self._lower_central is None:
            F = self.field
            one = F.one()
            stages = []
            cur = Echelon(F, ({i: one} for i in range(self.n)), self.n)
            while cur.rank > 0:
                stages.append(cur)
                nxt = Echelon(F, [], self.n)
                for w in cur.rows:
                    for i in range(self.n):
                        nxt.add(self.bracket_vec({i: one}, w))
                if nxt.rank >= cur.rank and nxt.rank > 0:
                    raise NotNilpotentError("lower central series does not decrease")
                cur = nxt
            self._lower_central = stages
        return self._lower_central

    def nilpotency_degree(self) -> int:
        """Least N with F_N = 0 for the lower central series."""
        return len(self.lower_central()) + 1

    def canonical_filtration(self) -> "Filtration":
        stages = [[dict(r) for r in st.rows] for st in self.lower_central()]
        return Filtration(stages)

    # -- Maurer-Cartan -------------------------------------------------------

    def series_bound(self) -> int:
        return self.nilpotency_degree()

    def mc_residual(self, x: dict) -> dict:
        return mc_residual_of(self, x)

    def is_mc(self, x: dict) -> bool:
        return not self.mc_residual(x)

    def gauge_flow(self, lam: dict, x0: dict) -> dict:
        return gauge_flow_of(self, lam, x0)

    def bch(self, u: dict, v: dict) -> dict:
        return bch_of(self, u, v)

    # -- twists and components -------------------------------------------------

    def twist(self, x: dict) -> "DgLieAlgebra":
        """Same algebra with differential d + ad_x, for x Maurer-Cartan."""
        res = self.mc_residual(x)
        if res:
            raise ValueError(f"twist point is not Maurer-Cartan, residual {res}")
        d2 = self.d.add(self.ad(x))
        return DgLieAlgebra(self.field, self.names, self.degrees, d2,
                            self.bracket, symmetrize=False)

    def component_at(self, x: dict):
        """Truncation of the twist at x: degrees < 0 intact, degree 0 replaced
        by ker(d^x), degrees > 0 dropped. Returns (algebra, basis_vectors)
        where basis_vectors[i] is the global vector realizing new basis i."""
        tw = self.twist(x)
        F = self.field
        keep = [i for i in range(self.n) if self.degrees[i] < 0]
        idx0 = self.basis_indices(0)
        m = Mat(F, self.n, len(idx0))
        for loc, j in enumerate(idx0):
            col = tw.d.mul_vec({j: F.one()})
            for i, c in col.items():
                m.rows[i][loc] = c
        kernel_loc = nullspace(m)
        kernel = [
            vec_clean(F, {idx0[loc]: c for loc, c in v.items()}) for v in kernel_loc
        ]
        vectors = [{i: F.one()} for i in keep] + kernel
        names = [self.names[i] for i in keep] + [f"z{t}" for t in range(len(kernel))]
        degrees = [self.degrees[i] for i in keep] + [0] * len(kernel)
        nb = len(vectors)
        coordmat = Mat(F, self.n, nb)
        for j, v in enumerate(vectors):
            for i, c in v.items():
                coordmat.rows[i][j] = c

        def express(vec: dict) -> dict:
            sol = solve(coordmat, vec)
            if sol is None:
                raise ValueError("component is not closed; truncation failed")
            return sol

        dd = Mat(F, nb, nb)
        brk = {}
        for j in range(nb):
            img = tw.d.mul_vec(vectors[j])
            if degrees[j] + 1 > 0:
                if img:
                    raise ValueError("kernel vector has nonzero differential")
            else:
                for i, c in express(img).items():
                    dd.rows[i][j] = c
        for a in range(nb):
            for b in range(nb):
                if degrees[a] + degrees[b] > 0:
                    continue
                img = self.bracket_vec(vectors[a], vectors[b])
                if img:
                    brk[(a, b)] = express(img)
        alg = DgLieAlgebra(F, names, degrees, dd, brk, symmetrize=False)
        return alg, vectors

    # -- quotients --------------------------------------------------------------

    def quotient_by(self, ideal_vectors: list):
        """Quotient by a homogeneous d-stable ideal. Returns
        (algebra, projection Mat, section index list)."""
        F = self.field
        one = F.one()
        ech = Echelon(F, ideal_vectors, self.n)
        for w in list(ech.rows):
            dv = self.d_vec(w)
            if not ech.contains(dv):
                raise ValueError("subspace is not d-stable")
            for i in range(self.n):
                if not ech.contains(self.bracket_vec({i: one}, w)):
                    raise ValueError("subspace is not an ideal")
        comp = complement_indices(ech)
        nb = len(comp)
        cols = [{c: one} for c in comp] + [dict(r) for r in ech.rows]
        m = Mat(F, self.n, len(cols))
        for j, v in enumerate(cols):
            for i, c in v.items():
                m.rows[i][j] = c

        def project(vec: dict) -> dict:
            sol = solve(m, vec)
            if sol is None:
                raise ValueError("projection failed")
            return {i: c for i, c in sol.items() if i < nb}

        proj = Mat(F, nb, self.n)
        for j in range(self.n):
            for i, c in project({j: one}).items():
                proj.rows[i][j] = c
        names = [self.names[c] for c in comp]
        degrees = [self.degrees[c] for c in comp]
        dd = Mat(F, nb, nb)
        for loc, j in enumerate(comp):
            for i, c in project(self.d_vec({j: one})).items():
                dd.rows[i][loc] = c
        brk = {}
        for la, a in enumerate(comp):
            for lb, b in enumerate(comp):
                img = self.bracket_vec({a: one}, {b: one})
                if img:
                    v = project(img)
                    if v:
                        brk[(la, lb)] = v
        alg = DgLieAlgebra(F, names, degrees, dd, brk, symmetrize=False)
        return alg, proj, comp

    def coerce_to(self, field) -> "DgLieAlgebra":
        """Same structure constants over another exact field."""
        d = Mat.from_entries(field, self.n, self.n,
                             ((r, c, v) for r, c, v in self.d.entries()))
        brk = {key: {k: field.coerce(v) for k, v in tbl.items()}
               for key, tbl in self.bracket.items()}
        return DgLieAlgebra(field, self.names, self.degrees, d, brk,
                            symmetrize=False)

    def __repr__(self):
        return f"DgLieAlgebra({self.field}, n={self.n})"


# ---------------------------------------------------------------------------
# Maurer-Cartan calculus over any object exposing field, d_vec, bracket_vec,
# homogeneous and series_bound (DgLieAlgebra and the free Lie truncations).


def mc_residual_of(g, x: dict) -> dict:
    g.homogeneous(x, 1, "Maurer-Cartan candidate")
    F = g.field
    half = F.div(F.one(), F.coerce(2))
    return vec_add(F, g.d_vec(x), vec_scale(F, half, g.bracket_vec(x, x)))


def gauge_flow_of(g, lam: dict, x0: dict) -> dict:
    """Time-1 flow of x' = [l, x] - dl starting at x0. Exact, terminating:

        x(1) = x0 + sum_{k >= 1} (1/k!) ad_l^{k-1}([l, x0] - dl).

    The sign of the dl term is forced by the requirement that the flow
    preserve the Maurer-Cartan set cut out by dx + (1/2)[x,x]: along this
    field the residual satisfies R' = [l, R], so R(x(1)) = exp(ad_l) R(x0).
    Both facts are asserted symbolically in the test suite on free
    nilpotent truncations.
    """
    g.homogeneous(lam, 0, "gauge parameter")
    g.homogeneous(x0, 1, "flow start")
    F = g.field
    bound = g.series_bound()
    out = dict(x0)
    term = vec_sub(F, g.bracket_vec(lam, x0), g.d_vec(lam))
    k = 1
    fact = F.one()
    while term:
        fact = F.mul(fact, F.coerce(k))
        out = vec_add(F, out, vec_scale(F, F.div(F.one(), fact), term))
        term = g.bracket_vec(lam, term)
        k += 1
        if k > bound + 1:
            raise NotNilpotentError("gauge series does not terminate")
    return out


def exp_ad(g, lam: dict, y: dict) -> dict:
    """exp(ad_lam) applied to y, exact and terminating."""
    F = g.field
    bound = g.series_bound()
    out = dict(y)
    term = dict(y)
    k = 0
    fact = F.one()
    while term:
        k += 1
        term = g.bracket_vec(lam, term)
        fact = F.mul(fact, F.coerce(k))
        out = vec_add(F, out, vec_scale(F, F.div(F.one(), fact), term))
        if k > bound + 1:
            raise NotNilpotentError("exp(ad) series does not terminate")
    return out


def bch_of(g, u: dict, v: dict) -> dict:
    """Baker-Campbell-Hausdorff composition of degree 0 elements."""
    g.homogeneous(u, 0, "bch argument")
    g.homogeneous(v, 0, "bch argument")
    F = g.field
    out: dict = {}
    for coeff, word in bch_words(g.series_bound()):
        val = u if word[0] == 0 else v
        val = dict(val)
        for letter in word[1:]:
            val = g.bracket_vec(val, u if letter == 0 else v)
            if not val:
                break
        if val:
            out = vec_add(F, out, vec_scale(F, F.coerce(coeff), val))
    return out


# ---------------------------------------------------------------------------
# BCH universal words.

_bch_cache: dict = {}


def bch_words(N: int):
    """Weight-graded BCH data: list of (Fraction coeff, word over {0,1}),
    word evaluated as the left-nested bracket [[..[w0,w1],w2]..]. Computed by
    multiplying exponentials in the free associative algebra truncated below
    weight N, taking log degreewise, and bracketizing with the Dynkin map."""
    if N in _bch_cache:
        return _bch_cache[N]
    if N < 2:
        return []

    def trunc_mul(A, B):
        out = {}
        for wa, ca in A.items():
            for wb, cb in B.items():
                w = wa + wb
                if len(w) >= N:
                    continue
                out[w] = out.get(w, Fraction(0)) + ca * cb
        return {w: c for w, c in out.items() if c}

    def exp_letter(letter):
        out = {(): Fraction(1)}
        word = ()
        fact = 1
        for k in range(1, N):
            word = word + (letter,)
            fact *= k
            out[word] = Fraction(1, fact)
        return out

    E = trunc_mul(exp_letter(0), exp_letter(1))
    X = {w: c for w, c in E.items() if w}
    L: dict = {}
    power = {(): Fraction(1)}
    for m in range(1, N):
        power = trunc_mul(power, X)
        if not power:
            break
        sign = Fraction((-1) ** (m + 1), m)
        for w, c in power.items():
            L[w] = L.get(w, Fraction(0)) + sign * c
    out = []
    for w, c in sorted(L.items(), key=lambda t: (len(t[0]), t[0])):
        if c:
            out.append((c / len(w), w))
    _bch_cache[N] = out
    return out


# ---------------------------------------------------------------------------
# Filtrations and towers.


class Filtration:
    """Descending filtration F_1 >= F_2 >= ... given by spanning vectors.

    stages[k] spans F_{k+1}; the filtration is zero beyond the last stage.
    """

    def __init__(self, stages: list):
        self.stages = [list(st) for st in stages]

    def __len__(self):
        return len(self.stages)

    def stage_echelon(self, g: DgLieAlgebra, n: int) -> Echelon:
        """Echelon of F_n (1-indexed); empty beyond the last stage."""
        if n <= len(self.stages):
            return Echelon(g.field, self.stages[n - 1], g.n)
        return Echelon(g.field, [], g.n)

    def validate(self, g: DgLieAlgebra) -> list:
        bad = []
        echs = [self.stage_echelon(g, n) for n in range(1, len(self.stages) + 2)]
        full = Echelon(g.field, ({i: g.field.one()} for i in range(g.n)), g.n)
        if echs[0].rank != full.rank:
            bad.append("F_1 is not the whole algebra")
        for n in range(1, len(echs)):
            for w in echs[n].rows:
                if not echs[n - 1].contains(w):
                    bad.append(f"F_{n+1} not contained in F_{n}")
                    break
        for n, ech in enumerate(echs, start=1):
            for w in ech.rows:
                if not ech.contains(g.d_vec(w)):
                    bad.append(f"d does not preserve F_{n}")
                    break
        for i1, e1 in enumerate(echs, start=1):
            for i2, e2 in enumerate(echs, start=1):
                tgt = self.stage_echelon(g, i1 + i2)
                ok = True
                for w1 in e1.rows:
                    for w2 in e2.rows:
                        if not tgt.contains(g.bracket_vec(w1, w2)):
                            ok = False
                            break
                    if not ok:
                        break
                if not ok:
                    bad.append(f"[F_{i1}, F_{i2}] not in F_{i1+i2}")
        if echs[-1].rank != 0:
            bad.append("filtration does not terminate at zero (not complete)")
        return bad

    def homogeneous_split(self, g: DgLieAlgebra, n: int) -> dict:
        """Spanning vectors of F_n split by degree: {degree: [graded vecs]}."""
        out: dict = {}
        for w in (self.stages[n - 1] if n <= len(self.stages) else []):
            parts: dict = {}
            for i, c in w.items():
                parts.setdefault(g.degrees[i], {})[i] = c
            for deg, v in parts.items():
                out.setdefault(deg, []).append(g.global_to_graded(v, deg))
        return out


class DglaMorphism:
    """Degree 0 linear map commuting with d and brackets."""

    def __init__(self, source: DgLieAlgebra, target: DgLieAlgebra, mat: Mat,
                 check: bool = True):
        self.source = source
        self.target = target
        self.mat = mat
        if (mat.nrows, mat.ncols) != (target.n, source.n):
            raise ValueError("morphism matrix shape mismatch")
        if check:
            for r, c, v in mat.entries():
                if target.degrees[r] != source.degrees[c]:
                    raise ValueError("morphism does not preserve degree")
            bad = self.defects()
            if bad:
                raise ValueError("not a dg Lie morphism: " + "; ".join(bad[:3]))

    def defects(self) -> list:
        F = self.source.field
        bad = []
        one = F.one()
        left = self.mat.mul_mat(self.source.d)
        right = self.target.d.mul_mat(self.mat)
        if not left.eq(right):
            bad.append("does not commute with d")
        for i in range(self.source.n):
            fi = self.mat.mul_vec({i: one})
            for j in range(self.source.n):
                fj = self.mat.mul_vec({j: one})
                lhs = self.mat.mul_vec(self.source.bracket_pair(i, j))
                rhs = self.target.bracket_vec(fi, fj)
                if not vec_eq(F, lhs, rhs):
                    bad.append(f"bracket not preserved at ({self.source.names[i]},{self.source.names[j]})")
        return bad

    def apply(self, v: dict) -> dict:
        return self.mat.mul_vec(v)

    def chain_map(self) -> ChainMap:
        src = self.source.complex()
        tgt = self.target.complex()
        mats = {}
        degs = set(self.source.degrees) | set(self.target.degrees)
        for k in degs:
            si = self.source.basis_indices(k)
            ti = self.target.basis_indices(k)
            tpos = {i: loc for loc, i in enumerate(ti)}
            m = Mat(self.source.field, len(ti), len(si))
            for cloc, j in enumerate(si):
                img = self.mat.mul_vec({j: self.source.field.one()})
                for i, c in img.items():
                    m.rows[tpos[i]][cloc] = c
            mats[k] = m
        return ChainMap(src, tgt, mats, check=False)

    def is_surjective(self, degrees=None) -> bool:
        cm = self.chain_map()
        degs = degrees if degrees is not None else sorted(set(self.target.degrees))
        for k in degs:
            tn = self.target.dims_at(k)
            if tn and rank(cm.mat(k)) < tn:
                return False
        return True

    def compose(self, inner: "DglaMorphism") -> "DglaMorphism":
        return DglaMorphism(inner.source, self.target,
                            self.mat.mul_mat(inner.mat), check=False)


class Tower:
    """Stages g^(2), g^(3), ... with surjective transitions g^(n+1) -> g^(n)."""

    def __init__(self, stages: list, transitions: list, check: bool = True):
        if len(transitions) != max(len(stages) - 1, 0):
            raise ValueError("need one transition per adjacent stage pair")
        self.stages = stages
        self.transitions = transitions
        if check:
            for n, g in enumerate(self.stages, start=2):
                if g.nilpotency_degree() > n:
                    raise ValueError(f"stage {n} has nilpotency degree > {n}")
            for t in transitions:
                if not t.is_surjective():
                    raise ValueError("tower transition is not surjective")

    def __len__(self):
        return len(self.stages)

    def stage(self, n: int) -> DgLieAlgebra:
        return self.stages[n - 2]


def canonical_tower(g: DgLieAlgebra, depth=None) -> Tower:
    """Quotients g/F_n of the lower central series, n = 2..nilpotency degree.

    The returned tower carries `projections` (g -> stage matrices) and
    `base` for building induced tower morphisms.
    """
    N = g.nilpotency_degree()
    depth = N if depth is None else depth
    stages = []
    projs = []
    filt = g.canonical_filtration()
    for n in range(2, depth + 1):
        vecs = filt.stages[n - 1] if n - 1 < len(filt.stages) else []
        q, proj, _ = g.quotient_by(vecs)
        stages.append(q)
        projs.append(proj)
    transitions = []
    for n in range(2, depth):
        hi = stages[n - 1]
        lo = stages[n - 2]
        m = Mat(g.field, lo.n, hi.n)
        for j, nm in enumerate(hi.names):
            col = projs[n - 2].mul_vec({g.index[nm]: g.field.one()})
            for i, c in col.items():
                m.rows[i][j] = c
        transitions.append(DglaMorphism(hi, lo, m, check=False))
    tower = Tower(stages, transitions, check=False)
    tower.projections = projs
    tower.base = g
    return tower


def canonical_tower_morphism(phi: DglaMorphism, depth=None) -> TowerMorphism:
    """Tower morphism induced by phi between the canonical towers.

    Always well-defined: a dg Lie morphism maps the lower central series
    into the lower central series.
    """
    if depth is None:
        depth = max(phi.source.nilpotency_degree(), phi.target.nilpotency_degree())
    ts = canonical_tower(phi.source, depth)
    tt = canonical_tower(phi.target, depth)
    g = phi.source
    maps = []
    for k in range(len(ts)):
        hi = ts.stages[k]
        lo = tt.stages[k]
        m = Mat(g.field, lo.n, hi.n)
        for j, nm in enumerate(hi.names):
            col = tt.projections[k].mul_vec(phi.apply({g.index[nm]: g.field.one()}))
            for i, c in col.items():
                m.rows[i][j] = c
        maps.append(DglaMorphism(hi, lo, m, check=True))
    return TowerMorphism(ts, tt, maps, check=True)


class TowerMorphism:
    def __init__(self, source: Tower, target: Tower, maps: list, check: bool = True):
        if len(maps) != len(source.stages) or len(maps) != len(target.stages):
            raise ValueError("tower morphism needs one map per stage")
        self.source = source
        self.target = target
        self.maps = maps
        if check:
            for k in range(len(maps) - 1):
                lhs = target.transitions[k].compose(maps[k + 1])
                rhs = maps[k].compose(source.transitions[k])
                if not lhs.mat.eq(rhs.mat):
                    raise ValueError(f"tower morphism does not commute at stage {k+2}")


# ---------------------------------------------------------------------------
# Exhaustive Maurer-Cartan moduli over prime fields.


class Pi0Result:
    def __init__(self, prime, mc_codes, orbit_of, reps, backend):
        self.prime = prime
        self.mc_codes = mc_codes
        self.orbit_of = orbit_of  # {code: orbit representative code}
        self.reps = reps
        self.backend = backend

    @property
    def mc_count(self):
        return len(self.mc_codes)

    @property
    def orbit_count(self):
        return len(self.reps)

    def witness(self) -> dict:
        return {
            "prime": self.prime,
            "mc_count": self.mc_count,
            "orbit_count": self.orbit_count,
            "reps": list(self.reps),
            "orbit_of": {str(k): v for k, v in sorted(self.orbit_of.items())},
            "backend": self.backend,
        }


def decode_code(code: int, p: int, idx: list) -> dict:
    out = {}
    for i in idx:
        code, digit = divmod(code, p)
        if digit:
            out[i] = digit
    return out


def encode_vec(v: dict, p: int, idx: list) -> int:
    code = 0
    for pos in range(len(idx) - 1, -1, -1):
        code = code * p + (v.get(idx[pos], 0) % p)
    return code


def pi0_bruteforce(g: DgLieAlgebra, max_ops: int = 10_000_000,
                   backend: str = "auto") -> Pi0Result:
    """Exhaustive pi0 = MC(g)/gauge over GF(p): enumerate all degree 1
    elements, filter Maurer-Cartan, close up under all single-parameter
    gauge flows with union-find. Deterministic representatives: the smallest
    code in each orbit."""
    p = g.field.char
    if p == 0:
        raise ValueError("pi0_bruteforce needs a prime field")
    N = g.nilpotency_degree()
    if p <= N - 1:
        raise ValueError(f"prime {p} too small for nilpotency degree {N}")
    idx1 = g.basis_indices(1)
    idx0 = g.basis_indices(0)
    n_candidates = p ** len(idx1)
    if n_candidates > max_ops:
        raise BudgetExceeded(
            f"{n_candidates} Maurer-Cartan candidates exceed budget {max_ops}")
    chosen = "python"
    if backend != "python":
        try:
            from . import _kernels
            chosen = _kernels.choose_backend(backend)
        except ImportError:
            chosen = "python"
    if chosen in ("numba", "numpy"):
        from . import _kernels
        mc_codes, orbit_of = _kernels.pi0_orbits(g, chosen, max_ops)
        reps = sorted(set(orbit_of.values()))
        return Pi0Result(p, mc_codes, orbit_of, reps, chosen)
    return _pi0_python(g, p, idx1, idx0, max_ops)


def _pi0_python(g, p, idx1, idx0, max_ops):
    F = g.field
    mc_codes = []
    for code in range(p ** len(idx1)):
        x = decode_code(code, p, idx1)
        if not g.mc_residual(x):
            mc_codes.append(code)
    if (p ** len(idx0)) * len(mc_codes) > max_ops:
        raise BudgetExceeded("gauge closure exceeds budget")
    pos = {c: i for i, c in enumerate(mc_codes)}
    parent = list(range(len(mc_codes)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for lcode in range(p ** len(idx0)):
        lam = decode_code(lcode, p, idx0)
        if not lam:
            continue
        for i, code in enumerate(mc_codes):
            x = decode_code(code, p, idx1)
            y = g.gauge_flow(lam, x)
            ycode = encode_vec(y, p, idx1)
            j = pos.get(ycode)
            if j is None:
                raise AssertionError("gauge flow left the Maurer-Cartan set")
            union(i, j)
    orbit_of = {}
    for i, code in enumerate(mc_codes):
        orbit_of[code] = mc_codes[find(i)]
    reps = sorted(set(orbit_of.values()))
    return Pi0Result(p, mc_codes, orbit_of, reps, "python")


# ---------------------------------------------------------------------------
# Filtered quasi-isomorphisms and stagewise moduli equivalences.


def quotient_complex_map(phi: DglaMorphism, src_sub: dict, tgt_sub: dict):
    """Chain map between quotient complexes (source/src_sub -> target/tgt_sub).
    Subspaces are {degree: [graded vectors]} and must be d-stable."""
    F = phi.source.field

    def build(g, sub):
        dims = {}
        projs = {}
        stdvecs = {}
        for k in sorted(set(g.degrees)):
            nk = g.dims_at(k)
            vecs = sub.get(k, [])
            ech = Echelon(F, vecs, nk)
            comp = complement_indices(ech)
            dims[k] = len(comp)
            cols = [{c: F.one()} for c in comp] + [dict(r) for r in ech.rows]
            m = Mat(F, nk, len(cols))
            for j, v in enumerate(cols):
                for i, c in v.items():
                    m.rows[i][j] = c
            projs[k] = (m, len(comp))
            stdvecs[k] = comp
        dmats = {}
        gc = g.complex()
        for k in dims:
            if dims.get(k, 0) == 0 or dims.get(k + 1, 0) == 0:
                continue
            m = Mat(F, dims[k + 1], dims[k])
            mat_k1, nb1 = projs[k + 1]
            for j, cidx in enumerate(stdvecs[k]):
                img = gc.dmat(k).mul_vec({cidx: F.one()})
                sol = solve(mat_k1, img)
                if sol is None:
                    raise ValueError("subspace not d-stable")
                for i, c in sol.items():
                    if i < nb1:
                        m.rows[i][j] = c
            dmats[k] = m
        cx = CochainComplex(F, dims, dmats, check=False)
        return cx, projs, stdvecs

    scx, sprojs, sstd = build(phi.source, src_sub)
    tcx, tprojs, tstd = build(phi.target, tgt_sub)
    mats = {}
    fcm = phi.chain_map()
    for k in set(scx.dims) | set(tcx.dims):
        sn = scx.dims.get(k, 0)
        tn = tcx.dims.get(k, 0)
        m = Mat(F, tn, sn)
        if sn and tn:
            tmat, tnb = tprojs[k]
            for j, cidx in enumerate(sstd[k]):
                img = fcm.mat(k).mul_vec({cidx: F.one()})
                sol = solve(tmat, img)
                if sol is None:
                    raise ValueError("map does not descend to quotient")
                for i, c in sol.items():
                    if i < tnb:
                        m.rows[i][j] = c
        mats[k] = m
    return ChainMap(scx, tcx, mats, check=False)


class FilteredQiReport:
    def __init__(self, filtered, qi, stage_results):
        self.filtered = filtered
        self.qi = qi
        self.stage_results = stage_results  # {n: bool}

    @property
    def ok(self):
        return self.filtered and self.qi and all(self.stage_results.values())


def is_filtered_qi(phi: DglaMorphism, filt_src: Filtration,
                   filt_tgt: Filtration) -> FilteredQiReport:
    """phi filtered + quasi-iso + quasi-iso on every quotient g/F_n."""
    F = phi.source.field
    depth = max(len(filt_src), len(filt_tgt)) + 1
    filtered = True
    for n in range(1, depth + 1):
        tgt_ech = filt_tgt.stage_echelon(phi.target, n)
        src_ech = filt_src.stage_echelon(phi.source, n)
        for w in src_ech.rows:
            if not tgt_ech.contains(phi.apply(w)):
                filtered = False
                break
        if not filtered:
            break
    qi = is_quasi_iso(phi.chain_map())
    stage_results = {}
    for n in range(2, depth + 1):
        src_sub = filt_src.homogeneous_split(phi.source, n)
        tgt_sub = filt_tgt.homogeneous_split(phi.target, n)
        if not src_sub and not tgt_sub:
            stage_results[n] = qi
            continue
        qmap = quotient_complex_map(phi, src_sub, tgt_sub)
        stage_results[n] = is_quasi_iso(qmap)
    return FilteredQiReport(filtered, qi, stage_results)


class BfmtReport:
    def __init__(self, stage_reports):
        self.stage_reports = stage_reports  # {n: {"pi0_bijection": bool, ...}}

    @property
    def ok(self):
        return all(r["pi0_bijection"] and r["components_qi"]
                   for r in self.stage_reports.values())


def is_bfmt_weak_equivalence(phi_stages: TowerMorphism, max_ops=10_000_000,
                             backend="auto") -> BfmtReport:
    """Stagewise: pi0 bijection plus quasi-iso of components at every
    Maurer-Cartan point (enumerated over the prime field)."""
    out = {}
    for k, phi in enumerate(phi_stages.maps):
        n = k + 2
        g = phi.source
        h = phi.target
        p = g.field.char
        rs = pi0_bruteforce(g, max_ops=max_ops, backend=backend)
        rt = pi0_bruteforce(h, max_ops=max_ops, backend=backend)
        idx1s = g.basis_indices(1)
        idx1t = h.basis_indices(1)
        image_orbits = set()
        for rep in rs.reps:
            x = decode_code(rep, p, idx1s)
            fx = phi.apply(x)
            image_orbits.add(rt.orbit_of[encode_vec(fx, p, idx1t)])
        bijection = (len(image_orbits) == len(rs.reps) == len(rt.reps))
        components_qi = True
        points = rs.mc_codes if len(rs.mc_codes) <= 64 else rs.reps
        for code in points:
            x = decode_code(code, p, idx1s)
            fx = phi.apply(x)
            comp_s, vecs_s = g.component_at(x)
            comp_t, vecs_t = h.component_at(fx)
            mats = _component_map(phi, comp_s, vecs_s, comp_t, vecs_t)
            if not is_quasi_iso(mats):
                components_qi = False
                break
        out[n] = {"pi0_bijection": bijection, "components_qi": components_qi,
                  "pi0_source": rs.orbit_count, "pi0_target": rt.orbit_count}
    return BfmtReport(out)


def _component_map(phi, comp_s, vecs_s, comp_t, vecs_t) -> ChainMap:
    F = phi.source.field
    cols = Mat(F, phi.target.n, len(vecs_t))
    for j, v in enumerate(vecs_t):
        for i, c in v.items():
            cols.rows[i][j] = c
    m = Mat(F, comp_t.n, comp_s.n)
    for j, v in enumerate(vecs_s):
        sol = solve(cols, phi.apply(v))
        if sol is None:
            raise ValueError("morphism does not restrict to components")
        for i, c in sol.items():
            m.rows[i][j] = c
    return DglaMorphism(comp_s, comp_t, m, check=False).chain_map()
