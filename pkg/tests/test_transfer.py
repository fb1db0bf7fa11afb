"""Transferred operation tables and the simplex Lie models built from them."""

import itertools
from fractions import Fraction

import pytest

from mcforge.dgla import gauge_flow_of, mc_residual_of
from mcforge.forms import Cochain
from mcforge.linalg import QQ, vec_eq, vec_scale, vec_sub
from mcforge.transfer import (CylinderMaps, McnAlgebra, TransferredOps,
                              TruncationMorphism, build_mcn, compose,
                              cylinder_maps, frame_maps, free_mc_coproduct,
                              identity_morphism, mcn_coface,
                              mcn_codegeneracy, mcn_gen_name,
                              strict_compat_defects)


def restrict(mc, L, vec):
    """Project a full-truncation vector into one of its stages."""
    return {L.index[mc.lie.basis[i]]: c for i, c in vec.items()
            if mc.lie.basis[i] in L.index}


def named(L, vec):
    return {L.names[i]: c for i, c in vec.items()}


# -- transferred operation tables ---------------------------------------------


def test_m2_values_on_interval():
    ops = TransferredOps(1, 2)
    e0, e1, e01 = (0,), (1,), (0, 1)
    assert ops.m_value((e0, e0)) == Cochain(1, {e0: Fraction(1)})
    assert ops.m_value((e1, e1)) == Cochain(1, {e1: Fraction(1)})
    assert ops.m_value((e0, e1)).is_zero()
    # the product picks up the averaged edge contribution
    half = Cochain(1, {e01: Fraction(1, 2)})
    assert ops.m_value((e0, e01)) == half
    assert ops.m_value((e01, e0)) == half
    assert ops.m_value((e1, e01)) == half
    assert ops.m_value((e01, e01)).is_zero()


def test_point_operations():
    ops = TransferredOps(0, 4)
    e = (0,)
    assert ops.m_value((e,)).is_zero()
    assert ops.m_value((e, e)) == Cochain(0, {e: Fraction(1)})
    assert ops.m_value((e, e, e)).is_zero()
    assert ops.m_value((e, e, e, e)).is_zero()


def test_m1_is_cochain_differential():
    ops = TransferredOps(1, 2)
    assert ops.m_value(((0,),)) == Cochain(1, {(0, 1): Fraction(-1)})
    assert ops.m_value(((1,),)) == Cochain(1, {(0, 1): Fraction(1)})


def test_interval_even_arities_vanish():
    # the weight-4 and weight-6 parts of the interval differential are zero;
    # only the odd arities contribute beyond the product
    ops = TransferredOps(1, 6)
    assert not ops.table(4)
    assert not ops.table(6)
    five = ops.table(5)
    assert five[((0,), (0, 1), (0, 1), (0, 1), (0, 1))] == \
        Cochain(1, {(0, 1): Fraction(1, 720)})


@pytest.mark.parametrize("n", [0, 1, 2])
def test_a_infinity_relations(n):
    ops = TransferredOps(n, 4)
    for k in range(1, 5):
        for word in itertools.product(ops.basis, repeat=k):
            defect = ops.a_infinity_defect(word)
            assert defect.is_zero(), (k, word, defect)


@pytest.mark.parametrize("n", [0, 1, 2])
def test_shuffle_vanishing(n):
    ops = TransferredOps(n, 3)
    for k in (2, 3):
        for word in itertools.product(ops.basis, repeat=k):
            for p in range(1, k):
                defect = ops.shuffle_defect(word, p)
                assert defect.is_zero(), (word, p, defect)


def test_ops_cutoffs():
    with pytest.raises(ValueError):
        TransferredOps(5, 2)
    with pytest.raises(ValueError):
        TransferredOps(1, 7)
    ops = TransferredOps(1, 2)
    with pytest.raises(ValueError):
        ops.m_value(((0,), (0,), (0,)))
    with pytest.raises(ValueError):
        ops.shuffle_defect(((0,), (0,)), 2)


# -- point and interval models ----------------------------------------------------


def test_mc0_structure():
    mc0 = build_mcn(0, 6)
    a = mc0.generator((0,))
    want = vec_scale(QQ, Fraction(-1, 2), mc0.lie.bracket_vec(a, a))
    assert vec_eq(QQ, mc0.lie.d_vec(a), want)
    assert not mc0.d_squared_defects()
    assert not mc_residual_of(mc0.lie, a)
    # one odd generator: the model stops at weight 2
    assert mc0.lie.dims_by_weight_degree() == {(1, 1): 1, (2, 2): 1}


def test_mc1_differential_series():
    # weight <= 3 part of the interval differential, as produced by the
    # transfer; the 1/12 echoes the classical expansion of the interval
    mc1 = build_mcn(1, 3)
    lam = mc1.generator((0, 1))
    assert named(mc1.lie, mc1.lie.d_vec(lam)) == {
        "g0": Fraction(1), "g1": Fraction(-1),
        "[g0,g01]": Fraction(-1, 2), "[g1,g01]": Fraction(-1, 2),
        "[[g0,g01],g01]": Fraction(1, 12), "[[g1,g01],g01]": Fraction(-1, 12),
    }
    for j in (0, 1):
        b = mc1.generator((j,))
        want = vec_scale(QQ, Fraction(-1, 2), mc1.lie.bracket_vec(b, b))
        assert vec_eq(QQ, mc1.lie.d_vec(b), want)


def test_mc1_gauge_law_every_stage():
    mc1 = build_mcn(1, 5)
    assert not mc1.d_squared_defects()
    lam = mc1.generator((0, 1))
    b0 = mc1.generator((0,))
    b1 = mc1.generator((1,))
    for w in range(1, 6):
        L = mc1.stage(w)
        flow = gauge_flow_of(L, restrict(mc1, L, lam), restrict(mc1, L, b0))
        assert vec_eq(QQ, flow, restrict(mc1, L, b1)), w


def test_mc2_d_squared():
    mc2 = build_mcn(2, 4)
    assert not mc2.d_squared_defects()
    degs = {mcn_gen_name(I): 2 - len(I) for I in mc2.ops.basis}
    assert degs["g012"] == -1 and degs["g01"] == 0 and degs["g0"] == 1


def test_dual_sign_battery_is_sensitive():
    # flipping one arity sign must break d^2 = 0: the battery that pinned
    # the signs is not vacuous
    signs = [-1, 1, -1, -1, -1, 1]
    mc1 = build_mcn(1, 3, _signs=signs)
    assert mc1.d_squared_defects()


def test_stage_projections_commute_with_d():
    mc1 = build_mcn(1, 4)
    for w in (1, 2, 3):
        hi = mc1.stage(w + 1)
        lo = mc1.stage(w)

        def proj(vec):
            return {lo.index[hi.basis[i]]: c for i, c in vec.items()
                    if hi.basis[i] in lo.index}

        for i in range(hi.n):
            lhs = proj(hi.d_basis(i))
            rhs = lo.d_vec(proj({i: QQ.one()}))
            assert vec_eq(QQ, lhs, rhs), (w, hi.names[i])


def test_build_mcn_cutoffs():
    with pytest.raises(ValueError):
        build_mcn(3, 3)
    with pytest.raises(ValueError):
        build_mcn(1, 7)
    mc = build_mcn(0, 2)
    with pytest.raises(ValueError):
        mc.stage(3)


# -- morphisms ---------------------------------------------------------------------


def test_morphism_degree_validation():
    mc0 = build_mcn(0, 3)
    mc1 = build_mcn(1, 3)
    with pytest.raises(ValueError):
        TruncationMorphism(mc0.lie, mc1.lie, {"g0": {"g01": 1}})


def test_morphism_chain_defects_detect_bad_maps():
    mc0 = build_mcn(0, 3)
    mc1 = build_mcn(1, 3)
    # beta_0 alone is Maurer-Cartan, so alpha -> beta_0 is a chain map ...
    good = TruncationMorphism(mc0.lie, mc1.lie, {"g0": {"g0": 1}})
    assert good.is_chain_map()
    # ... but alpha -> beta_0 + beta_1 is not: the cross bracket obstructs
    bad = TruncationMorphism(mc0.lie, mc1.lie, {"g0": {"g0": 1, "g1": 1}})
    defects = bad.chain_defects()
    assert set(defects) == {"g0"}


def test_free_mc_coproduct():
    pair = free_mc_coproduct(2, 4)
    for nm in ("a0", "a1"):
        assert not mc_residual_of(pair, pair.gen(nm))
    assert not any(pair.d_vec(pair.d_basis(i)) for i in range(pair.n))


# -- cylinder ---------------------------------------------------------------------


@pytest.fixture(scope="module")
def cyl():
    return cylinder_maps(4)


def test_cylinder_laws(cyl):
    ident = identity_morphism(cyl.mc0.lie)
    for j in (0, 1):
        assert compose(cyl.collapse, cyl.legs[j]).same_as(ident)
    assert compose(cyl.collapse, cyl.inclusion).same_as(cyl.fold)
    lam_img = cyl.collapse.apply(cyl.mc1.generator((0, 1)))
    assert lam_img == {}


def test_cylinder_stage_ranks(cyl):
    for w in range(1, 5):
        assert cyl.collapse.surjective_on_stage(w)
        assert cyl.inclusion.injective_on_stage(w)
        for leg in cyl.legs:
            assert leg.injective_on_stage(w)


def test_cylinder_maps_are_dg(cyl):
    for phi in cyl.legs + [cyl.inclusion, cyl.collapse, cyl.fold]:
        assert phi.is_chain_map(), phi.label


# -- cosimplicial structure ----------------------------------------------------------


@pytest.fixture(scope="module")
def models():
    return build_mcn(0, 3), build_mcn(1, 3), build_mcn(2, 3)


def test_cofaces_and_codegeneracies_are_dg(models):
    m0, m1, m2 = models
    maps = ([mcn_coface(m0, m1, i) for i in range(2)]
            + [mcn_coface(m1, m2, i) for i in range(3)]
            + [mcn_codegeneracy(m1, m0, 0)]
            + [mcn_codegeneracy(m2, m1, i) for i in range(2)])
    for phi in maps:
        assert phi.is_chain_map(), phi.label


def test_cosimplicial_identities(models):
    m0, m1, m2 = models
    d01 = [mcn_coface(m0, m1, i) for i in range(2)]
    d12 = [mcn_coface(m1, m2, i) for i in range(3)]
    s10 = mcn_codegeneracy(m1, m0, 0)
    s21 = [mcn_codegeneracy(m2, m1, i) for i in range(2)]
    for j in range(3):
        for i in range(j):
            assert compose(d12[j], d01[i]).same_as(compose(d12[i], d01[j - 1]))
    assert compose(s10, s21[0]).same_as(compose(s10, s21[1]))
    ident = identity_morphism(m1.lie)
    for j in range(2):
        for i in range(3):
            comp = compose(s21[j], d12[i])
            if i in (j, j + 1):
                assert comp.same_as(ident), (i, j)
            elif i < j:
                assert comp.same_as(compose(d01[i], s10)), (i, j)
            else:
                assert comp.same_as(compose(d01[i - 1], s10)), (i, j)


def test_structure_map_index_validation(models):
    m0, m1, m2 = models
    with pytest.raises(ValueError):
        mcn_coface(m0, m1, 2)
    with pytest.raises(ValueError):
        mcn_coface(m1, m0, 0)
    with pytest.raises(ValueError):
        mcn_codegeneracy(m2, m1, 2)


# -- frame maps -----------------------------------------------------------------------


def test_frame_maps_specialize_to_cylinder():
    mc1 = build_mcn(1, 4)
    mc0 = build_mcn(0, 4)
    fm = frame_maps(1, 4, mcn=mc1, mc0=mc0)
    cy = cylinder_maps(4, mc0=mc0, mc1=mc1)
    assert fm.w_dual.same_as(cy.collapse)
    for j in (0, 1):
        assert fm.p_legs[j].same_as(cy.legs[j])


def test_frame_maps_triangle():
    mc2 = build_mcn(2, 4)
    mc0 = build_mcn(0, 4)
    fm = frame_maps(2, 4, mcn=mc2, mc0=mc0)
    # lambda-type generators die under the w-side dual
    for I in ((0, 1), (0, 2), (1, 2), (0, 1, 2)):
        assert fm.w_dual.apply(mc2.generator(I)) == {}
    for w in range(1, 5):
        assert fm.w_dual.surjective_on_stage(w)
        assert fm.p_dual.injective_on_stage(w)
        for leg in fm.p_legs:
            assert leg.injective_on_stage(w)


def test_frame_cochain_maps_are_strict():
    mc1 = build_mcn(1, 3)
    mc0 = build_mcn(0, 3)
    fm = frame_maps(1, 3, mcn=mc1, mc0=mc0)
    assert not strict_compat_defects(fm.w_cochain(), mc0.ops, mc1.ops, 3)
    for leg in fm.p_cochains():
        assert not strict_compat_defects(leg, mc1.ops, mc0.ops, 3)
