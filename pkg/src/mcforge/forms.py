"""Polynomial differential forms on simplices and the Dupont contraction.

Omega_n = Q[t_0..t_n, dt_0..dt_n] / (sum t_i = 1, sum dt_i = 0).  Internally
t_0 and dt_0 are eliminated, so a form is a Q-linear combination of
monomials t^a * dt_J with J an increasing subset of {1..n}; this normal form
makes equality a dict comparison.  The elementary Whitney forms w_I span a
finite subcomplex C_n stable under every simplicial map, and the Dupont
contraction (i, p, h) retracts Omega_n onto it.  The homotopy h is
assembled from fiber integrations along vertex dilations; its global sign
is the one free convention and is calibrated lazily against the contract
dh + hd = ip - id, never chosen by hand.

Forms are treated as immutable: every operation returns a fresh form, and
several hot paths are memoized on monomial keys.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import factorial

from .linalg import QQ, SpanSolver

_Z = Fraction(0)
_ONE = Fraction(1)


def _acc(dst: dict, form: "PolyForm", c=_ONE) -> None:
    # dst += c * form, merging term dicts in place
    for key, v in form.terms.items():
        s = dst.get(key, _Z) + c * v
        if s:
            dst[key] = s
        else:
            dst.pop(key, None)


def _merge_dts(a: tuple, b: tuple):
    """Koszul sign and merged index tuple for dt_a ^ dt_b, or None."""
    if not a:
        return 1, b
    if not b:
        return 1, a
    if set(a) & set(b):
        return None
    sign = 1
    for x in b:
        sign *= (-1) ** sum(1 for y in a if y > x)
    return sign, tuple(sorted(a + b))


class PolyForm:
    """Differential form on the n-simplex in canonical coordinates.

    terms maps (exponents, dt_indices) to a nonzero Fraction; exponents is
    a length-n tuple for t_1..t_n and dt_indices an increasing tuple of
    indices in 1..n.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: dict | None = None):
        self.n = n
        self.terms = {} if terms is None else terms

    def is_zero(self) -> bool:
        return not self.terms

    def degrees(self) -> set:
        return {len(J) for _, J in self.terms}

    def degree(self):
        """Form degree, None for the zero form; mixed degree raises."""
        degs = self.degrees()
        if not degs:
            return None
        if len(degs) > 1:
            raise ValueError(f"form of mixed degrees {sorted(degs)}")
        return degs.pop()

    def homogeneous_part(self, k: int) -> "PolyForm":
        return PolyForm(self.n, {key: c for key, c in self.terms.items()
                                 if len(key[1]) == k})

    def poly_degree(self) -> int:
        """Largest total polynomial degree among the coefficients."""
        return max((sum(e) for e, _ in self.terms), default=0)

    def __add__(self, other: "PolyForm") -> "PolyForm":
        if self.n != other.n:
            raise ValueError("forms live on different simplices")
        out = dict(self.terms)
        for key, c in other.terms.items():
            s = out.get(key, _Z) + c
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        return PolyForm(self.n, out)

    def __neg__(self) -> "PolyForm":
        return PolyForm(self.n, {key: -c for key, c in self.terms.items()})

    def __sub__(self, other: "PolyForm") -> "PolyForm":
        return self + (-other)

    def scale(self, c) -> "PolyForm":
        if not isinstance(c, Fraction):
            c = Fraction(c)
        if c == 0:
            return PolyForm(self.n)
        return PolyForm(self.n, {key: c * v for key, v in self.terms.items()})

    def wedge(self, other: "PolyForm") -> "PolyForm":
        if self.n != other.n:
            raise ValueError("wedge across different simplex dimensions")
        out: dict = {}
        for (e1, J1), c1 in self.terms.items():
            for (e2, J2), c2 in other.terms.items():
                m = _merge_dts(J1, J2)
                if m is None:
                    continue
                sign, J = m
                key = (tuple(x + y for x, y in zip(e1, e2)), J)
                s = out.get(key, _Z) + sign * c1 * c2
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return PolyForm(self.n, out)

    def __mul__(self, other):
        if isinstance(other, PolyForm):
            return self.wedge(other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, k: int) -> "PolyForm":
        if k < 0:
            raise ValueError("negative power of a form")
        out = unit_form(self.n)
        for _ in range(k):
            out = out * self
        return out

    def d(self) -> "PolyForm":
        out: dict = {}
        for (e, J), c in self.terms.items():
            for m, a in enumerate(e, start=1):
                if not a:
                    continue
                merged = _merge_dts((m,), J)
                if merged is None:
                    continue
                sign, J2 = merged
                key = (e[:m - 1] + (a - 1,) + e[m:], J2)
                s = out.get(key, _Z) + sign * a * c
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return PolyForm(self.n, out)

    def pullback(self, m: int, images: list) -> "PolyForm":
        """Substitute t_j -> images[j-1], dt_j -> d(images[j-1]).

        images must be 0-forms on the m-simplex; this realizes pullback
        along the polynomial map they describe.
        """
        if len(images) != self.n:
            raise ValueError(f"need {self.n} images, got {len(images)}")
        for f in images:
            if f.n != m or f.degrees() - {0}:
                raise ValueError("pullback images must be 0-forms on the target")
        dimages = [f.d() for f in images]
        powers: dict = {}

        def power(j, a):
            if (j, a) not in powers:
                powers[(j, a)] = unit_form(m) if a == 0 else power(j, a - 1) * images[j]
            return powers[(j, a)]

        out: dict = {}
        for (e, J), c in self.terms.items():
            acc = const_form(m, c)
            for j, a in enumerate(e):
                if a and not acc.is_zero():
                    acc = acc * power(j, a)
            for j in J:
                if acc.is_zero():
                    break
                acc = acc * dimages[j - 1]
            _acc(out, acc)
        return PolyForm(m, out)

    def __eq__(self, other) -> bool:
        return (isinstance(other, PolyForm) and self.n == other.n
                and self.terms == other.terms)

    __hash__ = None

    def __repr__(self):
        return f"PolyForm({self.n}; {form_str(self)})"


def zero_form(n: int) -> PolyForm:
    return PolyForm(n)


def unit_form(n: int) -> PolyForm:
    return PolyForm(n, {((0,) * n, ()): _ONE})


def const_form(n: int, c) -> PolyForm:
    c = Fraction(c)
    return PolyForm(n, {((0,) * n, ()): c}) if c else PolyForm(n)


def coord(n: int, i: int) -> PolyForm:
    """Barycentric coordinate t_i as a canonical form; t_0 = 1 - sum."""
    if not 0 <= i <= n:
        raise ValueError(f"coordinate {i} out of range for dimension {n}")
    if i == 0:
        terms = {((0,) * n, ()): _ONE}
        for j in range(n):
            terms[(tuple(1 if m == j else 0 for m in range(n)), ())] = -_ONE
        return PolyForm(n, terms)
    return PolyForm(n, {(tuple(1 if m == i - 1 else 0 for m in range(n)), ()): _ONE})


def dcoord(n: int, i: int) -> PolyForm:
    """dt_i as a canonical form; dt_0 = -sum of the others."""
    if not 0 <= i <= n:
        raise ValueError(f"coordinate {i} out of range for dimension {n}")
    zero = (0,) * n
    if i == 0:
        return PolyForm(n, {(zero, (j,)): -_ONE for j in range(1, n + 1)})
    return PolyForm(n, {(zero, (i,)): _ONE})


# ---------------------------------------------------------------------------
# Whitney elementary forms and the cochain space they span.


def elementary_form(n: int, I) -> PolyForm:
    """w_I = k! sum_j (-1)^j t_{i_j} dt_{i_0}...(skip j)...dt_{i_k}."""
    I = tuple(sorted(set(I)))
    if not I or I[0] < 0 or I[-1] > n:
        raise ValueError(f"I must be a nonempty subset of 0..{n}")
    return _elementary(n, I)


@lru_cache(maxsize=None)
def _elementary(n: int, I: tuple) -> PolyForm:
    k = len(I) - 1
    out = zero_form(n)
    for j, ij in enumerate(I):
        term = const_form(n, (-1) ** j * factorial(k)) * coord(n, ij)
        for pos, im in enumerate(I):
            if pos != j:
                term = term * dcoord(n, im)
        out = out + term
    return out


@lru_cache(maxsize=None)
def cochain_basis(n: int) -> tuple:
    """All nonempty subsets of {0..n}, ordered by (size, lex)."""
    out = []
    for k in range(1, n + 2):
        out.extend(combinations(range(n + 1), k))
    return tuple(out)


class Cochain:
    """Element of the Whitney cochain space C_n: coefficients on the e_I."""

    __slots__ = ("n", "coeffs")

    def __init__(self, n: int, coeffs: dict | None = None):
        self.n = n
        out = {}
        for I, c in (coeffs or {}).items():
            I = tuple(sorted(set(I)))
            if not I or I[0] < 0 or I[-1] > n:
                raise ValueError(f"index set {I} out of range for dimension {n}")
            c = Fraction(c)
            if c:
                out[I] = out.get(I, _Z) + c
        self.coeffs = {I: c for I, c in out.items() if c}

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "Cochain") -> "Cochain":
        if self.n != other.n:
            raise ValueError("cochains live on different simplices")
        out = dict(self.coeffs)
        for I, c in other.coeffs.items():
            s = out.get(I, _Z) + c
            if s:
                out[I] = s
            else:
                out.pop(I, None)
        return Cochain(self.n, out)

    def __neg__(self) -> "Cochain":
        return Cochain(self.n, {I: -c for I, c in self.coeffs.items()})

    def __sub__(self, other: "Cochain") -> "Cochain":
        return self + (-other)

    def scale(self, c) -> "Cochain":
        return Cochain(self.n, {I: Fraction(c) * v for I, v in self.coeffs.items()})

    __rmul__ = scale

    def __eq__(self, other) -> bool:
        return (isinstance(other, Cochain) and self.n == other.n
                and self.coeffs == other.coeffs)

    __hash__ = None

    def __repr__(self):
        return f"Cochain({self.n}; {cochain_str(self)})"


def basis_cochain(n: int, I) -> Cochain:
    return Cochain(n, {tuple(I): _ONE})


# ---------------------------------------------------------------------------
# Simplicial maps.  On Omega they are pullbacks along the cofaces
# (set t_i = 0, renumber) and codegeneracies (t_i -> u_i + u_{i+1});
# on C they restrict to the combinatorial rules below.


@lru_cache(maxsize=None)
def _simplicial_images(kind: str, n: int, i: int) -> tuple:
    if kind == "face":
        m = n - 1
        imgs = [zero_form(m) if j == i else coord(m, j if j < i else j - 1)
                for j in range(1, n + 1)]
    else:
        m = n + 1
        imgs = [coord(m, i) + coord(m, i + 1) if j == i
                else coord(m, j if j < i else j + 1)
                for j in range(1, n + 1)]
    return tuple(imgs)


@lru_cache(maxsize=None)
def _simplicial_tables(kind: str, n: int, i: int):
    # integer substitution tables: the coordinate images are linear with
    # integer coefficients, so the hot path below avoids Fraction entirely
    images = _simplicial_images(kind, n, i)
    m = n - 1 if kind == "face" else n + 1
    tpolys = tuple({e: int(c) for (e, _), c in f.terms.items()} for f in images)
    dtparts = tuple(tuple((int(c), J[0]) for (_, J), c in f.d().terms.items())
                    for f in images)
    return m, tpolys, dtparts


def _ipoly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for e1, c1 in a.items():
        for e2, c2 in b.items():
            e = tuple(x + y for x, y in zip(e1, e2))
            s = out.get(e, 0) + c1 * c2
            if s:
                out[e] = s
            else:
                del out[e]
    return out


@lru_cache(maxsize=200000)
def _mono_pullback(kind: str, n: int, i: int, exps: tuple, dts: tuple) -> PolyForm:
    m, tpolys, dtparts = _simplicial_tables(kind, n, i)
    poly = {(0,) * m: 1}
    for j, a in enumerate(exps):
        img = tpolys[j]
        for _ in range(a):
            if not poly:
                break
            poly = _ipoly_mul(poly, img)
    if not poly:
        return PolyForm(m)
    covectors = [(1, ())]
    for j in dts:
        nxt: dict = {}
        for c1, J in covectors:
            for c2, k in dtparts[j - 1]:
                merged = _merge_dts(J, (k,))
                if merged is None:
                    continue
                sign, J2 = merged
                s = nxt.get(J2, 0) + sign * c1 * c2
                if s:
                    nxt[J2] = s
                else:
                    del nxt[J2]
        covectors = list((c, J) for J, c in nxt.items())
        if not covectors:
            return PolyForm(m)
    terms = {}
    for e, c1 in poly.items():
        for c2, J in covectors:
            terms[(e, J)] = Fraction(c1 * c2)
    return PolyForm(m, terms)


def omega_face(a: PolyForm, i: int) -> PolyForm:
    """Face map Omega_n -> Omega_{n-1}: restrict to the face missing vertex i."""
    if a.n == 0:
        raise ValueError("no faces below dimension 0")
    if not 0 <= i <= a.n:
        raise ValueError(f"face index {i} out of range for dimension {a.n}")
    out: dict = {}
    for (e, J), c in a.terms.items():
        _acc(out, _mono_pullback("face", a.n, i, e, J), c)
    return PolyForm(a.n - 1, out)


def omega_degeneracy(a: PolyForm, i: int) -> PolyForm:
    """Degeneracy Omega_n -> Omega_{n+1}: collapse edge (i, i+1)."""
    if not 0 <= i <= a.n:
        raise ValueError(f"degeneracy index {i} out of range for dimension {a.n}")
    out: dict = {}
    for (e, J), c in a.terms.items():
        _acc(out, _mono_pullback("degeneracy", a.n, i, e, J), c)
    return PolyForm(a.n + 1, out)


def cochain_face(c: Cochain, i: int) -> Cochain:
    """Restriction C_n -> C_{n-1}: e_I dies if i in I, else indices shift down."""
    if c.n == 0:
        raise ValueError("no faces below dimension 0")
    if not 0 <= i <= c.n:
        raise ValueError(f"face index {i} out of range for dimension {c.n}")
    out: dict = {}
    for I, v in c.coeffs.items():
        if i in I:
            continue
        J = tuple(m if m < i else m - 1 for m in I)
        out[J] = out.get(J, _Z) + v
    return Cochain(c.n - 1, out)


def cochain_degeneracy(c: Cochain, i: int) -> Cochain:
    """C_n -> C_{n+1}: e_I goes to the sum of e_J with sigma_i(J) = I bijectively."""
    if not 0 <= i <= c.n:
        raise ValueError(f"degeneracy index {i} out of range for dimension {c.n}")
    out: dict = {}
    for I, v in c.coeffs.items():
        shifted = tuple(m if m < i else m + 1 for m in I if m != i)
        if i in I:
            for rep in (i, i + 1):
                J = tuple(sorted(shifted + (rep,)))
                out[J] = out.get(J, _Z) + v
        else:
            out[shifted] = out.get(shifted, _Z) + v
    return Cochain(c.n + 1, out)


@lru_cache(maxsize=None)
def _cochain_d_column(n: int, I: tuple) -> tuple:
    # d(w_I) stays inside the Whitney span; solve for its coordinates
    # instead of hand-picking signs.
    dI = elementary_form(n, I).d()
    if dI.is_zero():
        return ()
    Js = [J for J in cochain_basis(n) if len(J) == len(I) + 1]
    solver = SpanSolver(QQ, [dict(elementary_form(n, J).terms) for J in Js], 0)
    sol = solver.solve(dict(dI.terms))
    if sol is None:
        raise AssertionError(f"d(w_{I}) left the Whitney span on the {n}-simplex")
    return tuple((Js[idx], c) for idx, c in sorted(sol.items()))


def cochain_d(c: Cochain) -> Cochain:
    """The differential of C_n, transported from d on forms."""
    out: dict = {}
    for I, v in c.coeffs.items():
        for J, w in _cochain_d_column(c.n, I):
            s = out.get(J, _Z) + v * w
            if s:
                out[J] = s
            else:
                out.pop(J, None)
    return Cochain(c.n, out)


# ---------------------------------------------------------------------------
# Integration and the Dupont contraction.


def integrate_over_face(a: PolyForm, I) -> Fraction:
    """Pull a back to the face spanned by I and integrate exactly."""
    I = tuple(sorted(set(I)))
    if not I or I[0] < 0 or I[-1] > a.n:
        raise ValueError(f"I must be a nonempty subset of 0..{a.n}")
    total = _Z
    for (e, J), c in a.terms.items():
        total += c * _mono_face_integral(a.n, I, e, J)
    return total


def integrate(a: PolyForm) -> Fraction:
    return integrate_over_face(a, tuple(range(a.n + 1)))


@lru_cache(maxsize=200000)
def _mono_face_integral(n: int, I: tuple, exps: tuple, dts: tuple) -> Fraction:
    k = len(I) - 1
    if len(dts) != k:
        # only the degree-k component integrates over a k-face
        return _Z
    pos = {v: j for j, v in enumerate(I)}
    images = [coord(k, pos[j]) if j in pos else zero_form(k)
              for j in range(1, n + 1)]
    restricted = PolyForm(n, {(exps, dts): _ONE}).pullback(k, images)
    top = tuple(range(1, k + 1))
    total = _Z
    for (e, J), c in restricted.terms.items():
        if J != top:
            continue
        num = 1
        for am in e:
            num *= factorial(am)
        # Dirichlet: int_{simplex^k} t^a = a_1!...a_k! / (k + sum a)!
        total += c * Fraction(num, factorial(k + sum(e)))
    return total


def dupont_i(c: Cochain) -> PolyForm:
    """Inclusion C_n -> Omega_n, e_I -> w_I."""
    out: dict = {}
    for I, v in c.coeffs.items():
        _acc(out, elementary_form(c.n, I), v)
    return PolyForm(c.n, out)


def dupont_p(a: PolyForm) -> Cochain:
    """Projection Omega_n -> C_n by integration over all faces."""
    coeffs = {}
    for I in cochain_basis(a.n):
        v = integrate_over_face(a, I)
        if v:
            coeffs[I] = v
    return Cochain(a.n, coeffs)


def _emul(t1: tuple, t2: tuple):
    # product of normal-form terms u^s du^eps t^e dt_J on simplex x [0,1]
    e1, J1, s1, d1 = t1
    e2, J2, s2, d2 = t2
    if d1 and d2:
        return None
    merged = _merge_dts(J1, J2)
    if merged is None:
        return None
    sign, J = merged
    if d2 and len(J1) % 2:
        sign = -sign
    return (tuple(x + y for x, y in zip(e1, e2)), J, s1 + s2, d1 + d2), sign


@lru_cache(maxsize=200000)
def _mono_vertex_h(n: int, i: int, exps: tuple, dts: tuple) -> PolyForm:
    zero = (0,) * n
    # images of t_m and dt_m under the dilation u.x + (1-u).vertex_i
    t_imgs = {}
    dt_imgs = {}
    for m in range(1, n + 1):
        em = tuple(1 if j == m - 1 else 0 for j in range(n))
        tm = {(em, (), 1, 0): _ONE}
        dtm = {(zero, (m,), 1, 0): _ONE, (em, (), 0, 1): _ONE}
        if m == i:
            tm[(zero, (), 0, 0)] = _ONE
            tm[(zero, (), 1, 0)] = -_ONE
            dtm[(zero, (), 0, 1)] = -_ONE
        t_imgs[m] = tm
        dt_imgs[m] = dtm

    acc = {(zero, (), 0, 0): _ONE}
    def mul(a: dict, b: dict) -> dict:
        out: dict = {}
        for k1, c1 in a.items():
            for k2, c2 in b.items():
                r = _emul(k1, k2)
                if r is None:
                    continue
                key, sign = r
                s = out.get(key, _Z) + sign * c1 * c2
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return out

    for m, a in enumerate(exps, start=1):
        for _ in range(a):
            acc = mul(acc, t_imgs[m])
    for j in dts:
        acc = mul(acc, dt_imgs[j])

    out: dict = {}
    for (e, J, s, du), c in acc.items():
        if not du:
            continue
        key = (e, J)
        v = out.get(key, _Z) + c / (s + 1)
        if v:
            out[key] = v
        else:
            out.pop(key, None)
    return PolyForm(n, out)


def vertex_homotopy(a: PolyForm, i: int) -> PolyForm:
    """Fiber integration along the dilation toward vertex i; degree -1."""
    if not 0 <= i <= a.n:
        raise ValueError(f"vertex {i} out of range for dimension {a.n}")
    out: dict = {}
    for (e, J), c in a.terms.items():
        _acc(out, _mono_vertex_h(a.n, i, e, J), c)
    return PolyForm(a.n, out)


def _h_raw(a: PolyForm) -> PolyForm:
    # sum over nonempty I of (-1)^(|I|-1) w_I ^ (h_{i_k} o ... o h_{i_0});
    # the per-I sign is forced by dh + hd = +-(ip - id) from n = 3 on,
    # only the global sign is a convention
    out: dict = {}
    for I in cochain_basis(a.n):
        cur = a
        for i in I:
            cur = vertex_homotopy(cur, i)
            if cur.is_zero():
                break
        if cur.is_zero():
            continue
        _acc(out, elementary_form(a.n, I) * cur, Fraction((-1) ** (len(I) - 1)))
    return PolyForm(a.n, out)


_H_SIGN = None


def dupont_h_sign() -> int:
    """Global sign of the homotopy, fixed by dh + hd = ip - id.

    Conventions in the literature differ by this sign, so it is computed
    once on Omega_1 probes rather than chosen by hand.
    """
    global _H_SIGN
    if _H_SIGN is None:
        t1, dt1 = coord(1, 1), dcoord(1, 1)
        probes = [t1 * dt1, t1 * t1 * dt1, t1, dt1]
        for sign in (1, -1):
            if all((sign * _h_raw(x.d())) + (sign * _h_raw(x)).d()
                   == dupont_i(dupont_p(x)) - x for x in probes):
                _H_SIGN = sign
                break
        else:
            raise RuntimeError("no global sign satisfies dh + hd = ip - id")
    return _H_SIGN


def dupont_h(a: PolyForm) -> PolyForm:
    """Dupont homotopy Omega_n -> Omega_n of degree -1.

    Assembled from signed w_I wedges of composed vertex dilations; see
    _h_raw for the shape and dupont_h_sign for the one free sign.
    """
    return dupont_h_sign() * _h_raw(a)


# ---------------------------------------------------------------------------
# Textual serialization: "poly * dt{j1,j2}" with exact rationals.


def _poly_str(monos) -> str:
    chunks = []
    for e, c in monos:
        vars_ = "*".join(f"t{m}" if p == 1 else f"t{m}^{p}"
                         for m, p in enumerate(e, 1) if p)
        if not vars_:
            body = str(c)
        elif c == 1:
            body = vars_
        elif c == -1:
            body = "-" + vars_
        else:
            body = f"{c}*{vars_}"
        chunks.append(body)
    return " + ".join(chunks).replace("+ -", "- ")


def form_str(a: PolyForm) -> str:
    if not a.terms:
        return "0"
    groups: dict = {}
    for (e, J), c in a.terms.items():
        groups.setdefault(J, []).append((e, c))
    pieces = []
    for J in sorted(groups, key=lambda J: (len(J), J)):
        monos = sorted(groups[J], key=lambda t: (sum(t[0]), t[0]))
        poly = _poly_str(monos)
        if J:
            if len(monos) > 1:
                poly = f"({poly})"
            pieces.append(f"{poly} * dt{{{','.join(map(str, J))}}}")
        else:
            pieces.append(poly)
    return " + ".join(pieces).replace("+ -", "- ")


def cochain_str(c: Cochain) -> str:
    if not c.coeffs:
        return "0"
    pieces = []
    for I in sorted(c.coeffs, key=lambda I: (len(I), I)):
        v = c.coeffs[I]
        name = f"w{{{','.join(map(str, I))}}}"
        pieces.append(name if v == 1 else f"-{name}" if v == -1 else f"{v}*{name}")
    return " + ".join(pieces).replace("+ -", "- ")
