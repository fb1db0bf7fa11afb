"""Simplices of the deformation infinity-groupoid MC_n(g) = MC(g (x) Omega_n).

A point of MC_n(g) is a Maurer-Cartan element of the nilpotent dg Lie
algebra g (x) Omega_n of g-valued polynomial forms on the n-simplex. This
module materializes such points with exact rational form coefficients
(MCSimplex), applies the simplicial operators to them, fills horns by a
curvature correction driven by the vertex dilation homotopy, mediates
between morphisms out of the free simplex models and actual simplices
(hom_mcn, inclusion_to_mcn), and computes pi0 over prime fields twice:
once by bounded-degree enumeration of connecting 1-simplices and once by
brute-force gauge flows, so the two quotients can be compared exactly.

Only characteristic zero supports the polynomial-form simplices (their
coefficients are hardwired rationals); the pi0 enumerations instead work
with coefficient lists over a prime field and never touch PolyForm.
"""

from __future__ import annotations

import os
from fractions import Fraction
from itertools import product

from .dgla import (DgLieAlgebra, DglaMorphism, NotNilpotentError,
                   gauge_flow_of, mc_residual_of)
from .forms import (PolyForm, const_form, coord, dcoord, dupont_h,
                    elementary_form, form_str, omega_degeneracy, omega_face,
                    vertex_homotopy)
from .freelie import standard_factorization
from .linalg import Mat, QQ, vec_add, vec_eq, vec_scale, vec_sub
from .transfer import McnAlgebra, build_mcn, mcn_gen_name


class BudgetExceeded(RuntimeError):
    """An enumeration would exceed its configured work budget."""


# ---------------------------------------------------------------------------
# Elements of g (x) Omega_n: sparse dicts {basis index: PolyForm}.


def _clean_element(elem: dict) -> dict:
    return {i: f for i, f in elem.items() if not f.is_zero()}


def _element_add(e1: dict, e2: dict) -> dict:
    out = dict(e1)
    for i, f in e2.items():
        s = out[i] + f if i in out else f
        if s.is_zero():
            out.pop(i, None)
        else:
            out[i] = s
    return out


def _element_sub(e1: dict, e2: dict) -> dict:
    return _element_add(e1, {i: -f for i, f in e2.items()})


def _element_scale(elem: dict, c) -> dict:
    return _clean_element({i: f.scale(c) for i, f in elem.items()})


def tensor_d(g, elem: dict) -> dict:
    """Differential of the tensor algebra: d(x (x) a) = dx (x) a + (-1)^|x| x (x) da."""
    F = g.field
    out: dict = {}
    for i, f in elem.items():
        for j, c in g.d_vec({i: F.one()}).items():
            out[j] = out[j] + f.scale(c) if j in out else f.scale(c)
        df = f.d()
        if not df.is_zero():
            if g.degrees[i] % 2:
                df = -df
            out[i] = out[i] + df if i in out else df
    return _clean_element(out)


def tensor_bracket(g, e1: dict, e2: dict) -> dict:
    """Bracket [x (x) a, y (x) b] = (-1)^(|a||y|) [x,y] (x) (a ^ b)."""
    out: dict = {}
    for i, fa in e1.items():
        for j, fb in e2.items():
            tbl = g.bracket_pair(i, j)
            if not tbl:
                continue
            odd_j = g.degrees[j] % 2
            for fdeg in fa.degrees():
                part = fa.homogeneous_part(fdeg)
                w = part.wedge(fb)
                if w.is_zero():
                    continue
                if odd_j and fdeg % 2:
                    w = -w
                for k, c in tbl.items():
                    piece = w.scale(c)
                    out[k] = out[k] + piece if k in out else piece
    return _clean_element(out)


def mc_form_residual(g, elem: dict) -> dict:
    """d(elem) + (1/2)[elem, elem] as an element of g (x) Omega_n."""
    return _element_add(tensor_d(g, elem),
                        _element_scale(tensor_bracket(g, elem, elem),
                                       Fraction(1, 2)))


def element_face(elem: dict, i: int) -> dict:
    """i-th face applied to every form coefficient."""
    return _clean_element({j: omega_face(f, i) for j, f in elem.items()})


def element_degeneracy(elem: dict, i: int) -> dict:
    """i-th degeneracy applied to every form coefficient."""
    return _clean_element({j: omega_degeneracy(f, i) for j, f in elem.items()})


def _form_vertex_value(f: PolyForm, k: int) -> Fraction:
    # value of the 0-form part at vertex k (vertex 0 is the coordinate origin)
    val = Fraction(0)
    for (e, J), c in f.terms.items():
        if J:
            continue
        if k == 0:
            if not any(e):
                val += c
        elif all(a == 0 for m, a in enumerate(e, start=1) if m != k):
            val += c
    return val


def _validate_element(g, n: int, elem: dict) -> None:
    if g.field.char != 0:
        raise ValueError("simplex coefficients are exact rational forms; "
                         "build the algebra over the rationals")
    if n < 0:
        raise ValueError("simplex dimension must be nonnegative")
    for i, f in elem.items():
        if f.is_zero():
            continue
        if f.n != n:
            raise ValueError(f"coefficient of {g.names[i]} lives on the "
                             f"{f.n}-simplex, expected {n}")
        want = 1 - g.degrees[i]
        stray = f.degrees() - {want}
        if stray:
            raise ValueError(f"degree mismatch at {g.names[i]}: form degrees "
                             f"{sorted(stray)} do not give total degree 1")


def is_mc_simplex(g, n: int, elem: dict) -> bool:
    """Whether the degree 1 element of g (x) Omega_n satisfies the MC equation."""
    _validate_element(g, n, elem)
    return not mc_form_residual(g, elem)


class MCSimplex:
    """Maurer-Cartan element of g (x) Omega_n with exact coefficients.

    coeffs maps a basis index of g to the polynomial form it is paired
    with; the form attached to index i is homogeneous of form degree
    1 - deg(i), so the whole element has total degree 1. With check on,
    construction verifies the MC equation as a polynomial identity.
    """

    def __init__(self, g, n: int, coeffs: dict, check: bool = True):
        _validate_element(g, n, coeffs)
        self.g = g
        self.n = n
        self.coeffs = _clean_element(coeffs)
        if check:
            bad = mc_form_residual(g, self.coeffs)
            if bad:
                names = ", ".join(g.names[i] for i in sorted(bad))
                raise ValueError(f"element is not Maurer-Cartan: residual "
                                 f"supported on {names}")

    def residual(self) -> dict:
        return mc_form_residual(self.g, self.coeffs)

    def is_mc(self) -> bool:
        return not self.residual()

    def poly_degree(self) -> int:
        return max((f.poly_degree() for f in self.coeffs.values()), default=0)

    def face(self, i: int) -> "MCSimplex":
        # pullbacks along cofaces are dg algebra maps, so MC is preserved
        return MCSimplex(self.g, self.n - 1, element_face(self.coeffs, i),
                         check=False)

    def degeneracy(self, i: int) -> "MCSimplex":
        return MCSimplex(self.g, self.n + 1,
                         element_degeneracy(self.coeffs, i), check=False)

    def vertex(self, k: int) -> dict:
        """Maurer-Cartan element of g sitting at vertex k."""
        if not 0 <= k <= self.n:
            raise ValueError(f"vertex {k} out of range for dimension {self.n}")
        out = {}
        for i, f in self.coeffs.items():
            v = _form_vertex_value(f, k)
            if v:
                out[i] = self.g.field.coerce(v)
        return out

    def to_strings(self) -> dict:
        return {self.g.names[i]: form_str(f)
                for i, f in sorted(self.coeffs.items())}

    def __eq__(self, other) -> bool:
        return (isinstance(other, MCSimplex) and self.g is other.g
                and self.n == other.n and self.coeffs == other.coeffs)

    __hash__ = None

    def __repr__(self):
        return (f"MCSimplex(n={self.n}, support={len(self.coeffs)}, "
                f"poly_degree={self.poly_degree()})")


def constant_simplex(g, n: int, x: dict) -> MCSimplex:
    """The totally degenerate n-simplex at a Maurer-Cartan element x."""
    g.homogeneous(x, 1, "Maurer-Cartan element")
    if mc_residual_of(g, x):
        raise ValueError("base point is not Maurer-Cartan")
    coeffs = {i: const_form(n, c) for i, c in x.items()}
    return MCSimplex(g, n, coeffs, check=False)


def gauge_path_simplex(g, lam: dict, x0: dict, check: bool = True) -> MCSimplex:
    """The 1-simplex traced by the gauge flow of lam out of x0.

    Its 0-form part solves x' = [lam, x] - d(lam) with x(0) = x0 and its
    dt-part is -lam, which together make the MC residual vanish
    identically; the two faces are the flow endpoint and x0.
    """
    g.homogeneous(lam, 0, "gauge parameter")
    g.homogeneous(x0, 1, "path start")
    if mc_residual_of(g, x0):
        raise ValueError("path start is not Maurer-Cartan")
    F = g.field
    xs = [dict(x0)]
    term = vec_sub(F, g.bracket_vec(lam, x0), g.d_vec(lam))
    k = 1
    while term:
        xs.append(term)
        term = vec_scale(F, F.div(F.one(), F.coerce(k + 1)),
                         g.bracket_vec(lam, term))
        k += 1
        if k > g.series_bound() + 1:
            raise NotNilpotentError("gauge path series does not terminate")
    coeffs: dict = {}
    for deg, x in enumerate(xs):
        for i, c in x.items():
            f = coeffs.setdefault(i, PolyForm(1))
            f.terms[((deg,), ())] = f.terms.get(((deg,), ()), Fraction(0)) + c
    for i, c in lam.items():
        f = coeffs.setdefault(i, PolyForm(1))
        f.terms[((0,), (1,))] = f.terms.get(((0,), (1,)), Fraction(0)) - c
    coeffs = {i: PolyForm(1, {key: v for key, v in f.terms.items() if v})
              for i, f in coeffs.items()}
    return MCSimplex(g, 1, coeffs, check=check)


def map_simplex(phi: DglaMorphism, s: MCSimplex) -> MCSimplex:
    """Push a simplex forward along a dg Lie morphism, coefficientwise."""
    if phi.source is not s.g:
        raise ValueError("morphism source does not match the simplex algebra")
    out: dict = {}
    for r, c, v in phi.mat.entries():
        f = s.coeffs.get(c)
        if f is None:
            continue
        piece = f.scale(v)
        out[r] = out[r] + piece if r in out else piece
    return MCSimplex(phi.target, s.n, _clean_element(out), check=False)


# ---------------------------------------------------------------------------
# Horn filling. The extension of the horn by degeneracies is the classical
# zig-zag; the curvature is then pushed down the lower central series by
# the dilation homotopy toward the open vertex, whose fixed vertex keeps
# every correction supported away from the retained faces.


_VERTEX_H_SIGN = None


def _vertex_h_sign() -> int:
    """Orientation of the dilation homotopy: d h_k + h_k d = sign (1 - ev_k).

    Computed once on low-dimensional probes rather than chosen by hand,
    then frozen for the session.
    """
    global _VERTEX_H_SIGN
    if _VERTEX_H_SIGN is None:
        t = coord(1, 1)
        dt = dcoord(1, 1)
        probes = [(1, k, f) for k in (0, 1)
                  for f in (t, t * dt, t * t * dt, dt)]
        t1, t2 = coord(2, 1), coord(2, 2)
        dt1, dt2 = dcoord(2, 1), dcoord(2, 2)
        probes += [(2, k, f) for k in (0, 1, 2)
                   for f in (t1, t2 * dt1, t1 * t2 * dt2, dt1 * dt2,
                             t1 * dt1 * dt2)]
        for sign in (1, -1):
            if all(vertex_homotopy(f, k).d() + vertex_homotopy(f.d(), k)
                   == (f - const_form(n, _form_vertex_value(f, k))).scale(sign)
                   for n, k, f in probes):
                _VERTEX_H_SIGN = sign
                break
        else:
            raise RuntimeError("no orientation satisfies dh + hd = +-(1 - ev)")
    return _VERTEX_H_SIGN


def _element_vertex_h(g, elem: dict, k: int) -> dict:
    # (-1)^|x| x (x) h(a): the Koszul sign makes dH + Hd act on forms alone
    out = {}
    for i, f in elem.items():
        h = vertex_homotopy(f, k)
        if h.is_zero():
            continue
        out[i] = -h if g.degrees[i] % 2 else h
    return out


def _element_dupont_h(g, elem: dict) -> dict:
    out = {}
    for i, f in elem.items():
        h = dupont_h(f)
        if h.is_zero():
            continue
        out[i] = -h if g.degrees[i] % 2 else h
    return out


def horn_fill(g, n: int, k: int, faces: list) -> MCSimplex:
    """Fill the horn missing face k with an MCSimplex of dimension n <= 3.

    faces lists n+1 simplices of dimension n-1; the entry at position k is
    ignored (may be None). The retained faces of the filler match the
    inputs exactly, as polynomial identities.
    """
    if not 1 <= n <= 3:
        raise ValueError("horn filling is implemented for dimensions 1..3")
    if not 0 <= k <= n:
        raise ValueError(f"horn index {k} out of range for dimension {n}")
    if len(faces) != n + 1:
        raise ValueError(f"expected {n + 1} faces, got {len(faces)}")
    given = [j for j in range(n + 1) if j != k]
    for j in given:
        s = faces[j]
        if not isinstance(s, MCSimplex) or s.n != n - 1:
            raise ValueError(f"face {j} must be an MCSimplex of dimension {n - 1}")
        if s.g is not g:
            raise ValueError(f"face {j} belongs to a different algebra")
    for a in given:
        for b in given:
            if a < b and element_face(faces[b].coeffs, a) != \
                    element_face(faces[a].coeffs, b - 1):
                raise ValueError("incompatible horn: faces "
                                 f"{a} and {b} disagree on their overlap")

    # degeneracy zig-zag: after the two sweeps every retained face matches
    x: dict = {}
    for j in range(k):
        diff = _element_sub(faces[j].coeffs, element_face(x, j))
        x = _element_add(x, element_degeneracy(diff, j))
    for j in range(n, k, -1):
        diff = _element_sub(faces[j].coeffs, element_face(x, j))
        x = _element_add(x, element_degeneracy(diff, j - 1))

    sign = _vertex_h_sign()
    for _ in range(g.series_bound() + 1):
        res = mc_form_residual(g, x)
        if not res:
            break
        # ev_k of the residual vanishes because every horn face contains
        # vertex k, so each correction climbs the lower central series
        x = _element_sub(x, _element_scale(_element_vertex_h(g, res, k), sign))
    else:
        raise RuntimeError("horn curvature correction did not terminate")
    return MCSimplex(g, n, x, check=True)


# ---------------------------------------------------------------------------
# Morphisms from the free simplex models.


class ModelMorphism:
    """dg Lie map from a stage of a simplex model into g.

    Stored by generator images; values on the whole stage are recovered by
    expanding basis brackets through the images. The stage must be deep
    enough that brackets past it die in g, which hom_mcn enforces.
    """

    def __init__(self, mcn: McnAlgebra, g, images: dict, check: bool = True):
        self.mcn = mcn
        self.g = g
        self.lie = mcn.lie
        names = {mcn_gen_name(I) for I in mcn.ops.basis}
        stray = set(images) - names
        if stray:
            raise ValueError(f"unknown generators: {sorted(stray)}")
        self.images = {}
        for I in mcn.ops.basis:
            nm = mcn_gen_name(I)
            img = g.el(images.get(nm, {}))
            g.homogeneous(img, 2 - len(I), f"image of {nm}")
            self.images[nm] = img
        self._word_cache: dict = {}
        self._basis_cache: dict = {}
        if check:
            bad = self.chain_defects()
            if bad:
                raise ValueError("generator images do not commute with d at "
                                 + ", ".join(sorted(bad)))

    def _word_image(self, w: tuple) -> dict:
        if w not in self._word_cache:
            if len(w) == 1:
                out = self.images[self.lie.gens[w[0]][0]]
            else:
                u, v = standard_factorization(w)
                out = self.g.bracket_vec(self._word_image(u),
                                         self._word_image(v))
            self._word_cache[w] = out
        return self._word_cache[w]

    def apply_basis(self, i: int) -> dict:
        if i not in self._basis_cache:
            kind, w = self.lie.basis[i]
            img = self._word_image(w)
            if kind == "s":
                img = self.g.bracket_vec(img, img)
            self._basis_cache[i] = img
        return self._basis_cache[i]

    def apply(self, vec: dict) -> dict:
        F = self.g.field
        out: dict = {}
        for i, c in vec.items():
            out = vec_add(F, out, vec_scale(F, F.coerce(c),
                                            self.apply_basis(i)))
        return out

    def chain_defects(self) -> dict:
        """Nonzero phi(d gen) - d phi(gen) vectors, keyed by generator."""
        F = self.g.field
        out = {}
        for nm, dvec in self.mcn.d_images.items():
            lhs = self.apply(dvec)
            rhs = self.g.d_vec(self.images[nm])
            if not vec_eq(F, lhs, rhs):
                out[nm] = vec_sub(F, lhs, rhs)
        return out

    def is_chain_map(self) -> bool:
        return not self.chain_defects()

    def vertex_images(self) -> list:
        return [self.images[mcn_gen_name((j,))] for j in range(self.mcn.n + 1)]

    def __repr__(self):
        support = {nm: len(v) for nm, v in self.images.items() if v}
        return f"ModelMorphism(n={self.mcn.n}, support={support})"


def _vec_str(lie, vec: dict) -> str:
    if not vec:
        return "0"
    return " + ".join(f"({c})*{lie.names[i]}" for i, c in sorted(vec.items()))


class HomMcn:
    """The set hom(mc_n stage, g), presented by unknowns and equations.

    An element is an assignment of generator images commuting with d; over
    a prime field the assignments can be enumerated outright, over the
    rationals `morphism` verifies individual sample points against the
    same equations.
    """

    def __init__(self, g, mcn: McnAlgebra):
        self.g = g
        self.mcn = mcn

    def unknowns(self) -> list:
        """(generator, degree of its image, dimension of that degree)."""
        out = []
        for I in self.mcn.ops.basis:
            deg = 2 - len(I)
            out.append((mcn_gen_name(I), deg, len(self.g.basis_indices(deg))))
        return out

    def equation_strings(self) -> list:
        lie = self.mcn.lie
        return [f"phi(d {nm}) = d phi({nm})  where  d {nm} = "
                + _vec_str(lie, self.mcn.d_images[nm])
                for nm in (mcn_gen_name(I) for I in self.mcn.ops.basis)]

    def describe(self) -> str:
        lines = ["unknowns:"]
        lines += [f"  {nm}: image in degree {deg} ({dim} coordinates)"
                  for nm, deg, dim in self.unknowns()]
        lines.append("equations (one per generator):")
        lines += ["  " + eq for eq in self.equation_strings()]
        return "\n".join(lines)

    def morphism(self, images: dict, check: bool = True) -> ModelMorphism:
        return ModelMorphism(self.mcn, self.g, images, check=check)

    def enumerate_solutions(self, limit: int = 200000) -> list:
        """All morphisms over a prime field, by exhaustive enumeration."""
        g = self.g
        p = g.field.char
        if not p:
            raise ValueError("solution enumeration needs a prime field; "
                             "over the rationals verify points with morphism()")
        for nm, dvec in self.mcn.d_images.items():
            for c in dvec.values():
                if c.denominator % p == 0:
                    raise ValueError(
                        f"model differential of {nm} has denominator "
                        f"{c.denominator}, not invertible mod {p}; lower "
                        f"the stage or pick a larger prime")
        # vertex images must be Maurer-Cartan (their chain condition is
        # exactly the MC equation), so only those are enumerated
        verts = mc_points(g, limit=limit)
        higher = [(mcn_gen_name(I), g.basis_indices(2 - len(I)))
                  for I in self.mcn.ops.basis if len(I) > 1]
        total = len(verts) ** (self.mcn.n + 1)
        for _, idx in higher:
            total *= p ** len(idx)
        if total > limit:
            raise BudgetExceeded(f"budget exceeded: {total} candidate "
                                 f"morphisms (limit {limit})")
        idx1 = g.basis_indices(1)
        out = []
        for vchoice in product(verts, repeat=self.mcn.n + 1):
            base = {mcn_gen_name((j,)): dict(zip(idx1, tup))
                    for j, tup in enumerate(vchoice)}
            spaces = [product(range(p), repeat=len(idx)) for _, idx in higher]
            for hchoice in product(*spaces):
                images = dict(base)
                for (nm, idx), tup in zip(higher, hchoice):
                    images[nm] = dict(zip(idx, tup))
                m = ModelMorphism(self.mcn, g, images, check=False)
                if m.is_chain_map():
                    out.append(m)
        return out


def hom_mcn(g, n: int, stage: int | None = None) -> HomMcn:
    """Morphism-set description for maps out of the n-simplex model.

    The model is truncated at the given weight stage; anything at least
    the nilpotency degree of g minus one is faithful, and shallower stages
    are rejected.
    """
    N = g.nilpotency_degree()
    if stage is None:
        stage = max(1, N - 1)
    if stage + 1 < N:
        raise ValueError(f"stage too shallow: weight {stage} cannot see all "
                         f"brackets of a nilpotency degree {N} algebra")
    return HomMcn(g, build_mcn(n, stage))


# ---------------------------------------------------------------------------
# From morphisms to simplices: pair each generator image against its
# elementary form and remove the curvature with the full homotopy. The
# pairing signs and the correction orientation are probed, then frozen.


_LEAF_SIGNS = {1: 1}
_INCL_SIGMA = None


def _leaf_sign(k: int) -> int:
    """Sign on images of size-k generators in the elementary-form pairing.

    Pinned by a two-term abelian probe: with brackets off, the pairing of
    a chain map must itself satisfy the MC equation, which forces one sign
    per arity.
    """
    if k not in _LEAF_SIGNS:
        n = k - 1
        mcn = build_mcn(n, 1)
        g = DgLieAlgebra(QQ, ["u", "v"], [2 - k, 3 - k],
                         Mat.from_entries(QQ, 2, 2, [(1, 0, 1)]))
        top = tuple(range(n + 1))
        sub = tuple(range(n))
        dtop = mcn.d_images[mcn_gen_name(top)]
        c = dtop.get(mcn.lie.names.index(mcn_gen_name(sub)))
        if not c:
            raise RuntimeError("probe model lost its linear differential")
        # images: u on the top generator, v/c on one facet generator, all
        # else zero; this commutes with d by construction
        wsub = elementary_form(n, sub).scale(
            Fraction(_leaf_sign(k - 1)) / c)
        wtop = elementary_form(n, top)
        for s in (1, -1):
            elem = _clean_element({0: wtop.scale(s), 1: wsub})
            if not mc_form_residual(g, elem):
                _LEAF_SIGNS[k] = s
                break
        else:
            raise RuntimeError(f"no pairing sign works at arity {k}")
    return _LEAF_SIGNS[k]


def _contracted_leading_term(phi: ModelMorphism) -> dict:
    n = phi.mcn.n
    out: dict = {}
    for I in phi.mcn.ops.basis:
        img = phi.images[mcn_gen_name(I)]
        if not img:
            continue
        w = elementary_form(n, I).scale(_leaf_sign(len(I)))
        for i, c in img.items():
            piece = w.scale(c)
            out[i] = out[i] + piece if i in out else piece
    return _clean_element(out)


def _inclusion_iterate(phi: ModelMorphism, sigma: int):
    x0 = _contracted_leading_term(phi)
    g = phi.g
    x = x0
    for _ in range(g.series_bound() + 2):
        corr = _element_dupont_h(g, tensor_bracket(g, x, x))
        nxt = _element_add(x0, _element_scale(corr, Fraction(sigma, 2)))
        if nxt == x:
            return x
        x = nxt
    return None


def _inclusion_sigma() -> int:
    """Orientation of the homotopy correction in the inclusion fixed point.

    Probed once on a depth-5 instance whose correction term is forced to
    be nonzero: the frozen orientation must reproduce the gauge path as a
    Maurer-Cartan fixed point.
    """
    global _INCL_SIGMA
    if _INCL_SIGMA is None:
        from .zoo import gauge_chain
        g = gauge_chain(QQ)
        lam = g.el({"l": 1})
        x0 = g.el({"a": 1})
        hm = hom_mcn(g, 1)
        phi = hm.morphism({"g0": x0, "g01": lam,
                           "g1": gauge_flow_of(g, lam, x0)})
        path = gauge_path_simplex(g, lam, x0)
        for sigma in (1, -1):
            x = _inclusion_iterate(phi, sigma)
            if x is not None and not mc_form_residual(g, x) \
                    and x == path.coeffs:
                _INCL_SIGMA = sigma
                break
        else:
            raise RuntimeError("no orientation yields a Maurer-Cartan "
                               "fixed point")
    return _INCL_SIGMA


def inclusion_to_mcn(phi: ModelMorphism) -> MCSimplex:
    """The simplex carried by a morphism out of the n-simplex model.

    Generator images are paired against their elementary forms and the
    curvature of the pairing is then absorbed by the homotopy fixed point;
    the vertices of the result are the images of the vertex generators.
    """
    if phi.g.field.char != 0:
        raise ValueError("simplex coefficients are exact rational forms; "
                         "use a characteristic zero instance")
    n = phi.mcn.n
    if n > 3:
        raise ValueError("inclusion is implemented for dimensions 0..3")
    x = _inclusion_iterate(phi, _inclusion_sigma())
    if x is None:
        raise RuntimeError("inclusion fixed point did not stabilize")
    return MCSimplex(phi.g, n, x, check=True)


# ---------------------------------------------------------------------------
# pi0 over prime fields: the same quotient computed two ways.


def _require_prime(g) -> int:
    p = g.field.char
    if not p:
        raise ValueError("enumeration needs a prime field; coerce the "
                         "algebra with coerce_to first")
    return p


def _resolve_backend(backend: str | None) -> str:
    # dense kernels (numpy vectorized or numba compiled) are opt-in, via
    # argument or the MCFORGE_KERNEL environment variable
    return backend or os.environ.get("MCFORGE_KERNEL", "python")


def mc_points(g, limit: int = 200000, backend: str | None = None) -> list:
    """Maurer-Cartan elements over a prime field, as coordinate tuples.

    Coordinates run over the degree 1 basis in basis order.
    """
    p = _require_prime(g)
    idx = g.basis_indices(1)
    if p ** len(idx) > limit:
        raise BudgetExceeded(f"budget exceeded: {p ** len(idx)} degree 1 "
                             f"candidates (limit {limit})")
    backend = _resolve_backend(backend)
    if backend != "python":
        from . import _kernels
        return _kernels.mc_points_dense(g, backend)
    out = []
    for tup in product(range(p), repeat=len(idx)):
        x = {i: v for i, v in zip(idx, tup) if v}
        if not mc_residual_of(g, x):
            out.append(tup)
    return out


def _point_vec(g, tup: tuple) -> dict:
    return {i: v for i, v in zip(g.basis_indices(1), tup) if v}


def _point_tuple(g, vec: dict) -> tuple:
    return tuple(vec.get(i, 0) for i in g.basis_indices(1))


class Pi0Result:
    """Quotient of the Maurer-Cartan point set by an enumerated relation."""

    def __init__(self, points: list, classes: list):
        self.points = points
        self.classes = classes
        self._index = {t: ci for ci, cl in enumerate(classes) for t in cl}

    def class_of(self, tup: tuple) -> int:
        return self._index[tup]

    def __len__(self):
        return len(self.classes)

    def __repr__(self):
        return f"Pi0Result({len(self.classes)} classes on {len(self.points)} points)"


def _quotient(points: list, edges) -> Pi0Result:
    parent = {t: t for t in points}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    groups: dict = {}
    for t in points:
        groups.setdefault(find(t), []).append(t)
    classes = sorted((sorted(cl) for cl in groups.values()),
                     key=lambda cl: cl[0])
    return Pi0Result(points, classes)


def pi0_gauge(g, limit: int = 200000, backend: str | None = None) -> Pi0Result:
    """Quotient of the MC set by brute-force gauge flows."""
    p = _require_prime(g)
    points = mc_points(g, limit=limit, backend=backend)
    idx0 = g.basis_indices(0)
    if p ** len(idx0) * max(len(points), 1) > limit:
        raise BudgetExceeded(f"budget exceeded: {p ** len(idx0)} flows on "
                             f"{len(points)} points (limit {limit})")
    backend = _resolve_backend(backend)
    if backend != "python":
        from . import _kernels
        return _quotient(points, _kernels.gauge_edges_dense(g, points,
                                                            backend))
    edges = []
    for lam_tup in product(range(p), repeat=len(idx0)):
        lam = {i: v for i, v in zip(idx0, lam_tup) if v}
        if not lam:
            continue
        for t in points:
            y = gauge_flow_of(g, lam, _point_vec(g, t))
            edges.append((t, _point_tuple(g, y)))
    return _quotient(points, edges)


def pi0_simplices(g, degree_cap: int | None = None, limit: int = 200000,
                  backend: str | None = None) -> Pi0Result:
    """Quotient of the MC set by connecting 1-simplices of bounded degree.

    A 1-simplex x(t) + z(t) dt is reconstructed degree by degree from its
    start point and the coefficients of z, then kept only if the MC
    residual vanishes identically. The default polynomial degree cap is
    the nilpotency degree minus one, the exact degree profile of the
    gauge-generated paths; the cap must stay below the characteristic for
    the integrations to divide.
    """
    p = _require_prime(g)
    cap = degree_cap if degree_cap is not None else max(1, g.series_bound() - 1)
    if cap >= p:
        raise ValueError(f"degree cap {cap} needs a prime above it, got {p}")
    F = g.field
    points = mc_points(g, limit=limit, backend=backend)
    idx0 = g.basis_indices(0)
    work = p ** (len(idx0) * cap) * max(len(points), 1)
    if work > limit:
        raise BudgetExceeded(f"budget exceeded: {work} candidate 1-simplices "
                             f"(limit {limit})")
    backend = _resolve_backend(backend)
    if backend != "python":
        from . import _kernels
        return _quotient(points, _kernels.simplex_edges_dense(g, points, cap,
                                                              backend))
    inv = {k: F.div(F.one(), F.coerce(k)) for k in range(1, cap + 1)}
    half = F.div(F.one(), F.coerce(2))
    edges = []
    for zflat in product(range(p), repeat=len(idx0) * cap):
        zs = [{i: v for i, v in zip(idx0, zflat[k * len(idx0):(k + 1) * len(idx0)])
               if v} for k in range(cap)]
        for t in points:
            xs = [_point_vec(g, t)]
            for k in range(cap):
                rhs = g.d_vec(zs[k])
                for b in range(k + 1):
                    rhs = vec_add(F, rhs, g.bracket_vec(xs[k - b], zs[b]))
                xs.append(vec_scale(F, inv[k + 1], rhs))
            if not _simplex_closes(g, F, half, xs, zs, cap):
                continue
            end = {}
            for x in xs:
                end = vec_add(F, end, x)
            edges.append((t, _point_tuple(g, end)))
    return _quotient(points, edges)


def _simplex_closes(g, F, half, xs: list, zs: list, cap: int) -> bool:
    # dt-part beyond the reconstructed range and the full 0-form residual
    # must vanish for x(t) + z(t) dt to be Maurer-Cartan on the nose
    for k in range(cap, 2 * cap):
        acc: dict = {}
        for b in range(len(zs)):
            a = k - b
            if 0 <= a < len(xs):
                acc = vec_add(F, acc, g.bracket_vec(xs[a], zs[b]))
        if acc:
            return False
    for k in range(2 * cap + 1):
        acc = g.d_vec(xs[k]) if k < len(xs) else {}
        for a in range(max(0, k - cap), min(k, cap) + 1):
            acc = vec_add(F, acc,
                          vec_scale(F, half, g.bracket_vec(xs[a], xs[k - a])))
        if acc:
            return False
    return True
