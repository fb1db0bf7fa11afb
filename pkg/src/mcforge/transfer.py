"""Transferred operations on elementary-form cochains and the Lie models they cut out.

The contraction (i, p, h) of the polynomial forms onto the elementary-form
cochains induces a family of multilinear operations m_k on the cochains:
m_1 is the cochain differential, m_2 the projected wedge, and for k >= 3
the value m_k(x_1, ..., x_k) is the usual sum over rooted planar binary
trees with i on the leaves, the wedge at internal vertices, h on internal
edges and p at the root. The family satisfies the A-infinity relations and
kills signed shuffles, so its weightwise duals are Lie elements: after
suspending, they assemble into the differential of a weight-truncated free
Lie algebra on generators dual to the elementary forms. Those truncations,
their cosimplicial structure maps, and the cylinder and frame maps between
them are what this module builds.

Degree bookkeeping: the generator dual to w_I gets degree 2 - |I|, so the
single generator of the 0-simplex model is a Maurer-Cartan element of
degree 1. All Koszul signs flow from this one convention.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .dgla import DgLieAlgebra, DglaMorphism, koszul_sign
from .forms import (Cochain, basis_cochain, cochain_basis, cochain_d,
                    dupont_h, dupont_p, elementary_form)
from .freelie import FreeLieTruncation, standard_factorization
from .linalg import QQ, Mat, SpanSolver, vec_add, vec_clean, vec_scale, vec_sub

MAX_SIMPLEX = 4
MAX_ARITY = 6
MAX_MODEL_SIMPLEX = 2


class TransferredOps:
    """Tables of the transferred operations m_k on the cochains of one simplex.

    Values are computed on demand and memoized; `table(k)` materializes the
    nonzero entries for one arity. The A-infinity and shuffle defect methods
    return cochains that the test suite asserts to be zero.
    """

    def __init__(self, n: int, max_arity: int):
        if not 0 <= n <= MAX_SIMPLEX:
            raise ValueError(f"simplex dimension cutoff exceeded: n = {n}")
        if not 1 <= max_arity <= MAX_ARITY:
            raise ValueError(f"arity cutoff exceeded: K = {max_arity}")
        self.n = n
        self.max_arity = max_arity
        self.basis = cochain_basis(n)
        self.letter = {I: j for j, I in enumerate(self.basis)}
        self.deg = {I: len(I) - 1 for I in self.basis}
        self._form = {I: elementary_form(n, I) for I in self.basis}
        self._hlam: dict = {}
        self._m: dict = {}
        self._tables: dict = {}

    # -- tree sum --------------------------------------------------------------

    def _branch(self, word: tuple):
        """Minus h applied after the subtree sum; a leaf enters as minus i.

        The uniform minus encodes the homotopy convention dh + hd = id - ip
        that the tree recursion wants; our contraction satisfies the opposite
        sign, and compensating here keeps the relation suite exact at every
        arity (odd arities fail by twice the m_k contribution otherwise).
        """
        out = self._hlam.get(word)
        if out is None:
            if len(word) == 1:
                out = self._form[word[0]].scale(Fraction(-1))
            else:
                out = dupont_h(self._lam(word)).scale(Fraction(-1))
            self._hlam[word] = out
        return out

    def _lam(self, word: tuple):
        # Sum over the splits of the word into two branches. The split sign
        # is (-1)^(s+1); passing the right branch (an operator of degree
        # 1 - (k - s)) over the first s inputs costs the usual Koszul sign.
        k = len(word)
        total = None
        for s in range(1, k):
            left = self._branch(word[:s])
            if left.is_zero():
                continue
            right = self._branch(word[s:])
            if right.is_zero():
                continue
            pre = sum(self.deg[I] for I in word[:s])
            sgn = (-1) ** (s + 1) * koszul_sign(1 - (k - s), pre)
            piece = left.wedge(right)
            if sgn != 1:
                piece = piece.scale(Fraction(sgn))
            total = piece if total is None else total + piece
        return total if total is not None else self._form[word[0]].scale(Fraction(0))

    def m_value(self, word: tuple) -> Cochain:
        """m_k on a tuple of basis keys (k = len(word))."""
        if not 1 <= len(word) <= self.max_arity:
            raise ValueError(f"arity {len(word)} out of range")
        out = self._m.get(word)
        if out is None:
            if len(word) == 1:
                out = cochain_d(basis_cochain(self.n, word[0]))
            else:
                out = dupont_p(self._lam(word))
            self._m[word] = out
        return out

    def table(self, k: int) -> dict:
        """All nonzero values of m_k, keyed by basis-word tuples."""
        if k not in self._tables:
            tbl = {}
            for word in itertools.product(self.basis, repeat=k):
                out_deg = 2 - k + sum(self.deg[I] for I in word)
                if not 0 <= out_deg <= self.n:
                    continue
                val = self.m_value(word)
                if not val.is_zero():
                    tbl[word] = val
            self._tables[k] = tbl
        return self._tables[k]

    # -- relation defects --------------------------------------------------------

    def a_infinity_defect(self, word: tuple) -> Cochain:
        """Sum over splittings; zero exactly when the relations hold at this word."""
        k = len(word)
        out = Cochain(self.n)
        for s in range(1, k + 1):
            for r in range(0, k - s + 1):
                t = k - r - s
                inner = self.m_value(word[r:r + s])
                if inner.is_zero():
                    continue
                pre = sum(self.deg[I] for I in word[:r])
                sgn = (-1) ** (r + s * t) * koszul_sign(s, pre)
                for J, c in inner.coeffs.items():
                    outer = self.m_value(word[:r] + (J,) + word[r + s:])
                    if not outer.is_zero():
                        out = out + outer.scale(sgn * c)
        return out

    def shuffle_defect(self, word: tuple, split: int) -> Cochain:
        """m_k applied to the signed (split, k-split)-shuffles of the word.

        The signs are the Koszul signs at the desuspended degrees, together
        with the bookkeeping cost of feeding the reordered desuspensions
        back into m_k; this is the combination that vanishes for operations
        transferred from a commutative product.
        """
        k = len(word)
        if not 1 <= split < k:
            raise ValueError("split out of range")
        bar = [self.deg[I] - 1 for I in word]
        out = Cochain(self.n)
        for perm, sgn in _signed_shuffles(split, k - split, bar):
            w2 = tuple(word[i] for i in perm)
            ss = _suspension_sign([bar[i] for i in perm])
            val = self.m_value(w2)
            if not val.is_zero():
                out = out + val.scale(sgn * ss)
        return out


def _signed_shuffles(p: int, q: int, degs: list) -> list:
    """(permutation, Koszul sign) for all (p, q)-shuffles at the given degrees."""
    out = []

    def rec(ai, bi, acc, sgn):
        if ai == p and bi == p + q:
            out.append((tuple(acc), sgn))
            return
        if ai < p:
            rec(ai + 1, bi, acc + [ai], sgn)
        if bi < p + q:
            jumped = sum(degs[i] for i in range(ai, p))
            rec(ai, bi + 1, acc + [bi], sgn * koszul_sign(degs[bi], jumped))

    rec(0, p, [], 1)
    return out


def _suspension_sign(bar_degs: list) -> int:
    """Koszul cost of undoing the desuspensions of a word, rightmost first."""
    k = len(bar_degs)
    e = sum((k - 1 - j) * bar_degs[j] for j in range(k))
    return -1 if e % 2 else 1


# ---------------------------------------------------------------------------
# Lie models of the simplices.


def mcn_gen_name(I) -> str:
    return "g" + "".join(str(i) for i in I)


def _dual_sign(k: int) -> int:
    # Per-arity sign on the dual of m_k: the Koszul cost of reversing k
    # suspensions, globally negated. k <= 5 is pinned by the battery
    # (d^2 = 0 on the interval at weight 6 and on the 2-simplex at weight 4,
    # d(alpha) = -1/2 [alpha, alpha] on the point, the gauge-flow law on the
    # interval); k = 6 follows the pattern and is inert at these scales
    # because m_4 and m_6 vanish identically on the interval.
    return -1 if (1 + k * (k - 1) // 2) % 2 else 1


class McnAlgebra:
    """Weight-truncated free Lie model of one simplex.

    Generators are the suspended duals of the elementary-form cochains
    (degree 2 - |I|); the differential is assembled weightwise from the
    duals of the transferred operations. Stage quotients of the weight
    filtration are again free truncations and are exposed by `stage`.
    """

    def __init__(self, n: int, weight: int, ops: TransferredOps,
                 lie: FreeLieTruncation, d_images: dict):
        self.n = n
        self.weight = weight
        self.ops = ops
        self.lie = lie
        self.d_images = d_images
        self._stages: dict = {weight: lie}
        self._stage_dglas: dict = {}

    def generator(self, I) -> dict:
        return self.lie.gen(mcn_gen_name(I))

    def mc_faces(self) -> list:
        return [I for I in self.ops.basis if len(I) == 1]

    def stage(self, w: int) -> FreeLieTruncation:
        """The quotient by weights above w, as a free truncation."""
        if not 1 <= w <= self.weight:
            raise ValueError(f"stage {w} out of range 1..{self.weight}")
        if w not in self._stages:
            L = FreeLieTruncation(QQ, self.lie.gens, w)
            L.set_d({nm: _restrict_vec(self.lie, L, v)
                     for nm, v in self.d_images.items()})
            self._stages[w] = L
        return self._stages[w]

    def stage_dgla(self, w: int):
        if w not in self._stage_dglas:
            self._stage_dglas[w] = self.stage(w).as_dgla()
        return self._stage_dglas[w]

    def d_squared_defects(self) -> dict:
        """Nonzero d(d(basis element)) vectors, keyed by basis name."""
        out = {}
        for i in range(self.lie.n):
            dd = self.lie.d_vec(self.lie.d_basis(i))
            if dd:
                out[self.lie.names[i]] = dd
        return out


def _restrict_vec(src: FreeLieTruncation, dst: FreeLieTruncation, vec: dict) -> dict:
    out = {}
    for i, c in vec.items():
        b = src.basis[i]
        j = dst.index.get(b)
        if j is not None:
            out[j] = c
    return out


def build_mcn(n: int, weight: int, _signs=None) -> McnAlgebra:
    """Lie model of the n-simplex, truncated at the given weight.

    The dual of m_k lands in weight-k brackets, so the truncation only needs
    the operation tables up to arity = weight. The solve-back into the Lie
    basis doubles as a proof that each dual is a Lie element; its failure
    would indicate a transfer bug and raises immediately.
    """
    if not 0 <= n <= MAX_MODEL_SIMPLEX:
        raise ValueError(f"model cutoff exceeded: n = {n}")
    if not 1 <= weight <= MAX_ARITY:
        raise ValueError(f"weight cutoff exceeded: N = {weight}")
    ops = TransferredOps(n, weight)
    gens = [(mcn_gen_name(I), 2 - len(I)) for I in ops.basis]
    L = FreeLieTruncation(QQ, gens, weight)
    tensors: dict = {I: {} for I in ops.basis}
    d_images: dict = {}
    for k in range(1, weight + 1):
        sigma = _signs[k - 1] if _signs is not None else _dual_sign(k)
        for word, val in ops.table(k).items():
            letters = tuple(ops.letter[J] for J in word)
            ss = _suspension_sign([ops.deg[J] - 1 for J in word])
            for I, c in val.coeffs.items():
                acc = tensors[I]
                prev = acc.get((k, letters), Fraction(0))
                acc[(k, letters)] = prev + Fraction(sigma * ss) * c
    for I in ops.basis:
        by_arity: dict = {}
        for (k, letters), c in tensors[I].items():
            if c:
                by_arity.setdefault(k, {})[letters] = c
        vec: dict = {}
        for k, tensor in sorted(by_arity.items()):
            try:
                part = L.solve_back(tensor)
            except ValueError as exc:
                raise RuntimeError(
                    f"transfer bug: dual of m_{k} at {I} is not a Lie element"
                ) from exc
            vec = vec_add(QQ, vec, part)
        d_images[mcn_gen_name(I)] = vec
    L.set_d(d_images)
    return McnAlgebra(n, weight, ops, L, d_images)


def free_mc_coproduct(m: int, weight: int, prefix: str = "a") -> FreeLieTruncation:
    """Free Lie truncation on m Maurer-Cartan generators (their coproduct)."""
    gens = [(f"{prefix}{j}", 1) for j in range(m)]
    L = FreeLieTruncation(QQ, gens, weight)
    d = {}
    for j in range(m):
        g = L.gen(f"{prefix}{j}")
        d[f"{prefix}{j}"] = vec_scale(QQ, Fraction(-1, 2), L.bracket_vec(g, g))
    L.set_d(d)
    return L


# ---------------------------------------------------------------------------
# Morphisms of truncations.


class TruncationMorphism:
    """Lie morphism between free truncations, given on generators.

    Extends multiplicatively along the bracketed-word basis; `chain_defects`
    measures failure to commute with the differentials. Images of weight-w
    basis elements have weight >= w, so the morphism descends to every stage
    quotient; `stage_images` projects to one stage.
    """

    def __init__(self, source: FreeLieTruncation, target: FreeLieTruncation,
                 gen_images: dict, label: str = ""):
        self.source = source
        self.target = target
        self.label = label
        self.gen_images = {}
        for nm, _deg in source.gens:
            img = target.el(gen_images.get(nm, {}))
            want = source.letter_degrees[
                next(i for i, (gn, _) in enumerate(source.gens) if gn == nm)]
            target.homogeneous(img, want, f"image of {nm}")
            self.gen_images[nm] = img
        self._img_cache: dict = {}

    def _basis_image(self, i: int) -> dict:
        if i in self._img_cache:
            return self._img_cache[i]
        kind, w = self.source.basis[i]
        if kind == "l" and len(w) == 1:
            out = self.gen_images[self.source.gens[w[0]][0]]
        elif kind == "l":
            u, v = standard_factorization(w)
            iu = self.source.index[("l", u)]
            iv = self.source.index[("l", v)]
            out = self.target.bracket_vec(self._basis_image(iu),
                                          self._basis_image(iv))
        else:
            x = self._basis_image(self.source.index[("l", w)])
            out = self.target.bracket_vec(x, x)
        self._img_cache[i] = out
        return out

    def apply(self, vec: dict) -> dict:
        F = self.target.field
        out: dict = {}
        for i, c in vec.items():
            img = self._basis_image(i)
            if img:
                out = vec_add(F, out, vec_scale(F, c, img))
        return out

    def chain_defects(self) -> dict:
        """{generator: phi(d g) - d phi(g)} over the nonzero defects."""
        F = self.target.field
        out = {}
        for nm, _deg in self.source.gens:
            g = self.source.gen(nm)
            lhs = self.apply(self.source.d_vec(g))
            rhs = self.target.d_vec(self.apply(g))
            bad = vec_sub(F, lhs, rhs)
            if bad:
                out[nm] = bad
        return out

    def is_chain_map(self) -> bool:
        return not self.chain_defects()

    def stage_images(self, w: int) -> list:
        """(source index, projected image) for source basis of weight <= w."""
        out = []
        for i in range(self.source.n):
            if self.source.weights[i] > w:
                continue
            img = self._basis_image(i)
            proj = {j: c for j, c in img.items() if self.target.weights[j] <= w}
            out.append((i, proj))
        return out

    def injective_on_stage(self, w: int) -> bool:
        imgs = self.stage_images(w)
        solver = SpanSolver(self.target.field, [], self.target.n)
        rank = sum(1 for _i, v in imgs if v and solver.append(v))
        return rank == len(imgs)

    def surjective_on_stage(self, w: int) -> bool:
        imgs = self.stage_images(w)
        solver = SpanSolver(self.target.field, [], self.target.n)
        rank = sum(1 for _i, v in imgs if v and solver.append(v))
        dim = sum(1 for j in range(self.target.n) if self.target.weights[j] <= w)
        return rank == dim

    def same_as(self, other: "TruncationMorphism") -> bool:
        if self.source is not other.source or self.target is not other.target:
            return False
        F = self.target.field
        return all(not vec_sub(F, self.gen_images[nm], other.gen_images[nm])
                   for nm, _ in self.source.gens)


def compose(outer: TruncationMorphism, inner: TruncationMorphism) -> TruncationMorphism:
    if inner.target is not outer.source:
        raise ValueError("composition mismatch")
    images = {nm: outer.apply(inner.gen_images[nm]) for nm, _ in inner.source.gens}
    label = f"{outer.label}*{inner.label}" if outer.label or inner.label else ""
    return TruncationMorphism(inner.source, outer.target, images, label)


def identity_morphism(L: FreeLieTruncation) -> TruncationMorphism:
    return TruncationMorphism(L, L, {nm: {nm: 1} for nm, _ in L.gens}, "id")


def stage_dgla_morphism(phi: TruncationMorphism, w: int,
                        source: DgLieAlgebra, target: DgLieAlgebra,
                        check: bool = False) -> DglaMorphism:
    """Restrict phi to the weight <= w stages of its endpoints, as a map of
    materialized dg Lie algebras. source and target must be stage
    materializations of phi.source and phi.target (entries are matched by
    basis name, so cached stage_dgla results can be passed in)."""
    mat = Mat(target.field, target.n, source.n)
    for i_full, img in phi.stage_images(w):
        col = source.index[phi.source.names[i_full]]
        for j_full, c in img.items():
            mat.rows[target.index[phi.target.names[j_full]]][col] = c
    return DglaMorphism(source, target, mat, check=check)


# ---------------------------------------------------------------------------
# Cosimplicial structure maps.


def mcn_coface(src: McnAlgebra, tgt: McnAlgebra, i: int) -> TruncationMorphism:
    """Dual of the i-th face of the cochains; sends g_I to g at the shifted set."""
    if tgt.n != src.n + 1:
        raise ValueError("coface needs target dimension = source + 1")
    if not 0 <= i <= tgt.n:
        raise ValueError(f"coface index {i} out of range")
    images = {}
    for I in src.ops.basis:
        J = tuple(m if m < i else m + 1 for m in I)
        images[mcn_gen_name(I)] = {mcn_gen_name(J): 1}
    return TruncationMorphism(src.lie, tgt.lie, images, f"d^{i}")


def mcn_codegeneracy(src: McnAlgebra, tgt: McnAlgebra, i: int) -> TruncationMorphism:
    """Dual of the i-th degeneracy; collapses i, i+1 and kills their joint faces."""
    if tgt.n != src.n - 1:
        raise ValueError("codegeneracy needs target dimension = source - 1")
    if not 0 <= i <= tgt.n:
        raise ValueError(f"codegeneracy index {i} out of range")
    images = {}
    for I in src.ops.basis:
        if i in I and i + 1 in I:
            images[mcn_gen_name(I)] = {}
        else:
            J = tuple(m if m <= i else m - 1 for m in I)
            images[mcn_gen_name(I)] = {mcn_gen_name(J): 1}
    return TruncationMorphism(src.lie, tgt.lie, images, f"s^{i}")


# ---------------------------------------------------------------------------
# Cylinder and frame maps.


class CylinderMaps:
    """The interval model as a cylinder over the point model.

    legs[j]: point model -> interval model, alpha |-> beta_j;
    inclusion: their coproduct on the two-generator free model;
    collapse: interval -> point, beta_j |-> alpha, gauge |-> 0;
    fold: two-generator model -> point, both generators |-> alpha.
    """

    def __init__(self, weight: int, mc0: McnAlgebra, mc1: McnAlgebra):
        self.weight = weight
        self.mc0 = mc0
        self.mc1 = mc1
        self.pair = free_mc_coproduct(2, weight)
        a = mcn_gen_name((0,))
        b = [mcn_gen_name((0,)), mcn_gen_name((1,))]
        self.legs = [
            TruncationMorphism(mc0.lie, mc1.lie, {a: {b[j]: 1}}, f"i_{j}")
            for j in (0, 1)
        ]
        self.inclusion = TruncationMorphism(
            self.pair, mc1.lie, {"a0": {b[0]: 1}, "a1": {b[1]: 1}}, "i")
        self.collapse = TruncationMorphism(
            mc1.lie, mc0.lie,
            {b[0]: {a: 1}, b[1]: {a: 1}, mcn_gen_name((0, 1)): {}}, "t")
        self.fold = TruncationMorphism(
            self.pair, mc0.lie, {"a0": {a: 1}, "a1": {a: 1}}, "fold")
        for phi in self.legs + [self.inclusion, self.collapse, self.fold]:
            bad = phi.chain_defects()
            if bad:
                raise RuntimeError(
                    f"transfer bug: cylinder map {phi.label} does not commute "
                    f"with d at {sorted(bad)}")


def cylinder_maps(weight: int, mc0: McnAlgebra | None = None,
                  mc1: McnAlgebra | None = None) -> CylinderMaps:
    if mc0 is None:
        mc0 = build_mcn(0, weight)
    if mc1 is None:
        mc1 = build_mcn(1, weight)
    return CylinderMaps(weight, mc0, mc1)


class FrameMaps:
    """Point-to-simplex frame data.

    On the cochain side: w sends the point cochain to the sum of the vertex
    cochains, and p restricts to each vertex; both are plain linear maps
    strictly compatible with the transferred operations. Dualized: w gives
    simplex model -> point model (vertex generators to alpha, the rest to 0)
    and p gives the (n+1)-fold coproduct of point models -> simplex model
    (j-th generator to the j-th vertex generator).
    """

    def __init__(self, n: int, weight: int, mcn: McnAlgebra, mc0: McnAlgebra):
        self.n = n
        self.weight = weight
        self.mcn = mcn
        self.mc0 = mc0
        a = mcn_gen_name((0,))
        images = {}
        for I in mcn.ops.basis:
            images[mcn_gen_name(I)] = {a: 1} if len(I) == 1 else {}
        self.w_dual = TruncationMorphism(mcn.lie, mc0.lie, images, "w*")
        self.p_legs = [
            TruncationMorphism(mc0.lie, mcn.lie, {a: {mcn_gen_name((i,)): 1}},
                               f"p_{i}*")
            for i in range(n + 1)
        ]
        self.coproduct = free_mc_coproduct(n + 1, weight)
        self.p_dual = TruncationMorphism(
            self.coproduct, mcn.lie,
            {f"a{i}": {mcn_gen_name((i,)): 1} for i in range(n + 1)}, "p*")
        for phi in [self.w_dual, self.p_dual] + self.p_legs:
            bad = phi.chain_defects()
            if bad:
                raise RuntimeError(
                    f"transfer bug: frame map {phi.label} does not commute "
                    f"with d at {sorted(bad)}")

    # C-side matrices, for the coalgebra-level checks.

    def w_cochain(self) -> dict:
        """Point basis -> simplex cochain: 1 |-> sum of vertex cochains."""
        return {(0,): Cochain(self.n, {(i,): Fraction(1)
                                       for i in range(self.n + 1)})}

    def p_cochains(self) -> list:
        """Per-vertex restriction matrices, simplex basis -> point cochain."""
        out = []
        for i in range(self.n + 1):
            leg = {}
            for I in self.mcn.ops.basis:
                leg[I] = Cochain(0, {(0,): Fraction(1)} if I == (i,) else {})
            out.append(leg)
        return out


def frame_maps(n: int, weight: int, mcn: McnAlgebra | None = None,
               mc0: McnAlgebra | None = None) -> FrameMaps:
    if not 0 <= n <= MAX_MODEL_SIMPLEX:
        raise ValueError(f"model cutoff exceeded: n = {n}")
    if mcn is None:
        mcn = build_mcn(n, weight)
    if mc0 is None:
        mc0 = build_mcn(0, weight)
    return FrameMaps(n, weight, mcn, mc0)


def strict_compat_defects(cmap: dict, src: TransferredOps, tgt: TransferredOps,
                          max_arity: int) -> list:
    """Failures of a linear cochain map to commute with the transferred m_k.

    cmap sends each source basis key to a target Cochain. Returns
    (k, word, defect) triples with nonzero defect.
    """

    def push(c: Cochain) -> Cochain:
        out = Cochain(tgt.n)
        for I, v in c.coeffs.items():
            out = out + cmap[I].scale(v)
        return out

    bad = []
    for k in range(1, max_arity + 1):
        for word in itertools.product(src.basis, repeat=k):
            lhs = push(src.m_value(word))
            rhs = Cochain(tgt.n)
            images = [cmap[I] for I in word]
            for picks in itertools.product(*[im.coeffs.items() for im in images]):
                coeff = Fraction(1)
                tword = []
                for J, c in picks:
                    coeff *= c
                    tword.append(J)
                val = tgt.m_value(tuple(tword))
                if not val.is_zero():
                    rhs = rhs + val.scale(coeff)
            if not (lhs - rhs).is_zero():
                bad.append((k, word, lhs - rhs))
    return bad
