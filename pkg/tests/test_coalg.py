"""Lie coalgebra layer: dualization, coradical filtrations, truncated cobar,
weak-equivalence verdicts and the fibration surrogate."""

import random
from fractions import Fraction
from math import comb

import pytest

from mcforge.coalg import (CoalgebraMorphism, LieCoalgebra,
                           NotConilpotentError, cobar_map, cobar_truncated,
                           coradical_filtration, dualize, dualize_alg,
                           dualize_morphism, dualize_weight_graded,
                           is_fibration_surrogate, is_weak_equivalence_upto,
                           orthogonal_filtration)
from mcforge.dgla import DgLieAlgebra
from mcforge.freelie import free_nilpotent_dgla
from mcforge.linalg import QQ, Echelon, Mat
from mcforge.transfer import (build_mcn, cylinder_maps, frame_maps,
                              free_mc_coproduct, stage_dgla_morphism)


def heisenberg():
    # x, y odd, z = [x, y]
    return DgLieAlgebra(QQ, ["x", "y", "z"], [1, 1, 2],
                        bracket={(0, 1): {2: Fraction(1)}})


def assert_same_algebra(g, h):
    assert g.names == h.names
    assert g.degrees == h.degrees
    assert g.d.eq(h.d)
    gb = {k: v for k, v in g.bracket.items() if v}
    hb = {k: v for k, v in h.bracket.items() if v}
    assert gb == hb


@pytest.fixture(scope="module")
def mc1():
    return build_mcn(1, 3)


@pytest.fixture(scope="module")
def heis_dual():
    return dualize_alg(heisenberg())


# -- dualization ---------------------------------------------------------------


def test_heisenberg_dual_round_trip(heis_dual):
    g = heisenberg()
    assert heis_dual.degrees == [-1, -1, -2]
    assert heis_dual.check_axioms() == []
    assert_same_algebra(dualize(heis_dual), g)


def test_round_trip_on_model_stages(mc1):
    for w in (2, 3):
        g = mc1.stage_dgla(w)
        C = dualize_alg(g)
        assert C.check_axioms() == []
        assert_same_algebra(dualize(C), g)


def test_differential_transpose_sign():
    # d(x) = y with x even: the dual differential keeps the minus
    g = DgLieAlgebra(QQ, ["x", "y"], [0, 1],
                     d=Mat(QQ, 2, 2, [{}, {0: Fraction(1)}]))
    C = dualize_alg(g)
    assert C.d_vec(C.el({"y": 1})) == {0: Fraction(-1)}
    # and with x odd the sign flips
    h = DgLieAlgebra(QQ, ["x", "y"], [1, 2],
                     d=Mat(QQ, 2, 2, [{}, {0: Fraction(1)}]))
    Ch = dualize_alg(h)
    assert Ch.d_vec(Ch.el({"y": 1})) == {0: Fraction(1)}


def test_coantisymmetry_autofill():
    C = LieCoalgebra(QQ, ["x", "y", "z"], [1, 1, 2],
                     cobracket={2: {(0, 1): Fraction(1)}})
    # odd generators: the mirror coefficient is +1
    assert C.cobracket[2][(1, 0)] == Fraction(1)
    D = LieCoalgebra(QQ, ["e", "f", "g"], [0, 2, 2],
                     cobracket={2: {(0, 1): Fraction(1)}})
    assert D.cobracket[2][(1, 0)] == Fraction(-1)


def test_random_duals_satisfy_coaxioms():
    # Jacobi/Leibniz on the algebra side must land exactly on the co-axioms
    rng = random.Random(20260816)
    for gens in ([("a", 1), ("b", 2)], [("a", 1), ("b", 1), ("c", 3)]):
        L = free_nilpotent_dgla(QQ, gens, 3)
        g = L.as_dgla()
        pick = rng.choice(g.names)
        C = dualize_alg(g)
        assert C.check_axioms(check_conilpotent=False) == [], pick
        assert_same_algebra(dualize(C), g)


# -- axiom violations are detected ------------------------------------------------


def test_broken_coantisymmetry_detected():
    C = LieCoalgebra(QQ, ["x", "y", "z"], [1, 1, 2],
                     cobracket={2: {(0, 1): Fraction(1), (1, 0): Fraction(2)}},
                     symmetrize=False)
    assert any("co-antisymmetry" in b for b in C.check_axioms(False))


def test_broken_cojacobi_detected(mc1):
    C = dualize_alg(mc1.stage_dgla(3))
    cob = {k: dict(t) for k, t in C.cobracket.items()}
    k, tbl = max(cob.items())
    (i, j) = next(iter(tbl))
    tbl[(i, j)] = tbl[(i, j)] * 3
    tbl[(j, i)] = tbl[(j, i)] * 3
    bad = LieCoalgebra(QQ, C.names, C.degrees, d=C.d, cobracket=cob,
                       symmetrize=False)
    assert any("co-Jacobi" in b or "co-Leibniz" in b
               for b in bad.check_axioms(False))


def test_broken_coleibniz_detected():
    # delta(d a) = delta(b) != 0 while delta(a) = 0: only co-Leibniz fails
    d = Mat(QQ, 3, 3)
    d.rows[1][2] = Fraction(1)  # d(a) = b
    bad = LieCoalgebra(QQ, ["e", "b", "a"], [0, -1, -2], d=d,
                       cobracket={1: {(0, 1): Fraction(1)}})
    defects = bad.check_axioms(check_conilpotent=False)
    assert defects == ["co-Leibniz fails at a"]


# -- coradical filtration ----------------------------------------------------------


def test_zero_cobracket_coradical_is_everything():
    C = LieCoalgebra(QQ, ["u", "v"], [1, 2])
    filt = coradical_filtration(C)
    assert filt.depth == 1
    assert filt.dims() == [2]


def test_heisenberg_coradical_two_stages(heis_dual):
    filt = coradical_filtration(heis_dual)
    assert filt.dims() == [2, 3]
    assert filt.stage(1).contains({0: Fraction(1)})
    assert filt.stage(1).contains({1: Fraction(1)})
    assert not filt.stage(1).contains({2: Fraction(1)})


def test_coradical_fast_path_matches_generic(mc1, heis_dual):
    for C in (heis_dual, dualize_alg(mc1.stage_dgla(3))):
        generic = LieCoalgebra(QQ, C.names, C.degrees, d=C.d,
                               cobracket=C.cobracket, symmetrize=False)
        fa = coradical_filtration(C)
        fb = coradical_filtration(generic)
        assert fa.dims() == fb.dims()
        for n in range(1, fa.depth + 1):
            assert all(fa.stage(n).contains(w) for w in fb.stage(n).rows)


def test_orthogonal_of_coradical_is_lower_central(heis_dual):
    g = heisenberg()
    orth = orthogonal_filtration(heis_dual, coradical_filtration(heis_dual))
    can = g.canonical_filtration()
    assert len(orth) == len(can.stages)
    for n, spans in enumerate(orth, start=1):
        e1 = Echelon(QQ, spans, g.n)
        e2 = can.stage_echelon(g, n)
        assert e1.rank == e2.rank
        assert all(e1.contains(w) for w in e2.rows)


def test_non_conilpotent_witness_raises():
    # dual of the affine algebra [a, b] = b: the coradical stalls on span{a}
    C = LieCoalgebra(QQ, ["a", "b"], [0, 0],
                     cobracket={1: {(0, 1): Fraction(1)}})
    assert C.check_axioms(check_conilpotent=False) == []
    with pytest.raises(NotConilpotentError):
        coradical_filtration(C)
    assert any("not conilpotent" in b for b in C.check_axioms())


def test_declared_filtration_axioms(mc1):
    g = mc1.stage_dgla(3)
    wt = dict(zip(mc1.lie.names, mc1.lie.weights))
    C = dualize_weight_graded(g, [wt[nm] for nm in g.names])
    assert C.filtration_defects() == []
    # dropping the top stage breaks exhaustiveness
    C.filtration = C.filtration[:-1]
    assert any("exhaustive" in b for b in C.filtration_defects())


def test_declared_filtration_must_respect_cobracket(heis_dual):
    C = LieCoalgebra(QQ, heis_dual.names, heis_dual.degrees,
                     cobracket=heis_dual.cobracket, symmetrize=False,
                     filtration=[[{"z": 1}], [{"x": 1}, {"y": 1}, {"z": 1}]])
    assert any("cobracket" in b for b in C.filtration_defects())


# -- truncated cobar ---------------------------------------------------------------


def test_cobar_worked_example():
    # point model: d(alpha) = -1/2 [alpha, alpha]; in the dual coalgebra
    # d(beta^) = -1/2 alpha^ and delta(beta^) = -alpha^ (x) alpha^
    mc0 = build_mcn(0, 2)
    C = dualize_alg(mc0.stage_dgla(2))
    assert C.degrees == [-1, -2]
    cb = cobar_truncated(C, 4)
    assert cb._d1_mono((0,)) == {}
    assert cb._d1_mono((1,)) == {(0,): Fraction(1, 2)}
    two = {m: c for m, c in cb.d_vec({(1,): Fraction(1)}).items() if len(m) == 2}
    assert two == {(0, 0): Fraction(-1, 2)}
    total = cb.total_complex()  # constructor asserts d^2 = 0
    assert sum(total.dims.values()) == 8


def test_cobar_weight_one_is_shifted_input(mc1):
    C = dualize_alg(mc1.stage_dgla(2))
    cb = cobar_truncated(C, 3)
    cx, bydeg, _pos = cb.weight_data(1)
    expected: dict = {}
    for dg in C.degrees:
        expected[dg + 1] = expected.get(dg + 1, 0) + 1
    assert cx.dims == expected
    seen = 0
    for k, m in cx.d.items():
        for r, c, v in m.entries():
            src = bydeg[k][c][0]
            tgt = bydeg[k + 1][r][0]
            assert v == -C.d.rows[tgt][src]
            seen += 1
    assert seen == len(list(C.d.entries()))


def test_cobar_zero_cobracket_gives_symmetric_powers():
    C = LieCoalgebra(QQ, ["p", "q"], [1, 3])  # shifted degrees both even
    cb = cobar_truncated(C, 3)
    for w in (1, 2, 3):
        cx = cb.weight_complex(w)
        assert sum(cx.dims.values()) == comb(2 + w - 1, w)
        assert not cx.d


def test_cobar_odd_generators_square_to_zero():
    C = LieCoalgebra(QQ, ["a"], [2])  # shifted degree 1
    cb = cobar_truncated(C, 4)
    assert [len(m) for m in cb.monomials] == [1]


def test_cobar_dsquared_forced(heis_dual):
    cb = cobar_truncated(heis_dual, 4)
    cb.total_complex()
    for w in (1, 2, 3, 4):
        cb.weight_complex(w)


def test_cobar_cutoffs(heis_dual):
    with pytest.raises(ValueError, match="weight cutoff"):
        cobar_truncated(heis_dual, 7)
    wide = LieCoalgebra(QQ, [f"g{i}" for i in range(40)], [1] * 40)
    with pytest.raises(ValueError, match="basis cutoff"):
        cobar_truncated(wide, 6)


def test_cobar_map_is_chain_map(mc1):
    # collapse t: interval model -> point model, dualized, then cobar
    mc0 = build_mcn(0, 3)
    cyl = cylinder_maps(3, mc0, mc1)
    g1 = mc1.stage_dgla(2)
    g0 = mc0.stage_dgla(2)
    phi = stage_dgla_morphism(cyl.collapse, 2, g1, g0, check=True)
    f = dualize_morphism(phi)
    cm = cobar_map(f, 3)
    for w in (1, 2, 3):
        cm.weight_map(w)  # ChainMap constructor verifies commuting squares
    cm.total_map()


# -- weak equivalence verdicts ------------------------------------------------------


def test_identity_verdict_yes(mc1):
    C = dualize_alg(mc1.stage_dgla(3))
    v = is_weak_equivalence_upto(CoalgebraMorphism(C, C, Mat.identity(QQ, C.n)),
                                 W=3)
    assert v.is_yes
    assert all(v.stage_results.values())
    assert v.weight_results  # small enough for the cobar corroboration


def test_missing_cohomology_verdict_no(heis_dual):
    zero = LieCoalgebra(QQ, [], [])
    f = CoalgebraMorphism(zero, heis_dual, Mat(QQ, heis_dual.n, 0))
    v = is_weak_equivalence_upto(f, W=2)
    assert v.verdict == "no"
    assert "not quasi-isomorphic" in v.reasons[0]


def test_acyclic_extension_verdict_yes(heis_dual):
    # target = heisenberg dual plus an acyclic two-step summand
    C = heis_dual
    names = C.names + ["u", "v"]
    degrees = C.degrees + [0, 1]
    d = Mat(QQ, C.n + 2, C.n + 2)
    for r, c, val in C.d.entries():
        d.rows[r][c] = val
    d.rows[C.n + 1][C.n] = Fraction(1)  # d(u) = v
    big = LieCoalgebra(QQ, names, degrees, d=d, cobracket=C.cobracket,
                       symmetrize=False)
    mat = Mat(QQ, C.n + 2, C.n)
    for i in range(C.n):
        mat.rows[i][i] = Fraction(1)
    f = CoalgebraMorphism(C, big, mat)
    v = is_weak_equivalence_upto(f, W=3)
    assert v.is_yes


def test_verdict_weight_cutoff(heis_dual):
    f = CoalgebraMorphism(heis_dual, heis_dual, Mat.identity(QQ, heis_dual.n))
    with pytest.raises(ValueError, match="weight cutoff"):
        is_weak_equivalence_upto(f, W=9)


def test_verdict_inconclusive_without_filtration():
    # quasi-isomorphic but not conilpotent: nothing can be certified
    C = LieCoalgebra(QQ, ["a", "b"], [0, 0],
                     cobracket={1: {(0, 1): Fraction(1)}})
    f = CoalgebraMorphism(C, C, Mat.identity(QQ, 2))
    v = is_weak_equivalence_upto(f, W=2)
    assert v.verdict == "inconclusive"
    assert any("no filtration" in r for r in v.reasons)


def test_frame_collapse_verdict_small():
    # the simplex-to-point frame map at n = 1, dualized: certified yes
    mcn = build_mcn(1, 3)
    mc0 = build_mcn(0, 3)
    fm = frame_maps(1, 3, mcn, mc0)
    g1 = mcn.stage_dgla(3)
    g0 = mc0.stage_dgla(3)
    phi = stage_dgla_morphism(fm.w_dual, 3, g1, g0, check=True)
    f = dualize_morphism(phi)
    v = is_weak_equivalence_upto(f, W=3)
    assert v.is_yes, v.reasons


# -- fibration surrogate ------------------------------------------------------------


def test_fibration_surrogate_identity(heis_dual):
    f = CoalgebraMorphism(heis_dual, heis_dual, Mat.identity(QQ, heis_dual.n))
    assert is_fibration_surrogate(f)


def test_fibration_surrogate_dual_of_injection():
    # legs of the cylinder are injections of algebras; their duals pass
    mc0 = build_mcn(0, 2)
    mc1 = build_mcn(1, 2)
    cyl = cylinder_maps(2, mc0, mc1)
    g0 = mc0.stage_dgla(2)
    g1 = mc1.stage_dgla(2)
    phi = stage_dgla_morphism(cyl.legs[0], 2, g0, g1, check=True)
    assert is_fibration_surrogate(dualize_morphism(phi))


def test_fibration_surrogate_strict_inclusion_fails(heis_dual):
    sub = LieCoalgebra(QQ, ["x"], [-1])
    mat = Mat(QQ, heis_dual.n, 1)
    mat.rows[0][0] = Fraction(1)
    f = CoalgebraMorphism(sub, heis_dual, mat)
    assert not is_fibration_surrogate(f)


def test_morphism_validation(heis_dual):
    bad = Mat(QQ, heis_dual.n, heis_dual.n)
    bad.rows[0][0] = Fraction(1)
    bad.rows[1][1] = Fraction(1)  # keeps x, y but kills z = their cobracket
    with pytest.raises(ValueError, match="morphism"):
        CoalgebraMorphism(heis_dual, heis_dual, bad)


def test_morphism_dual_is_algebra_morphism(mc1):
    mc0 = build_mcn(0, 3)
    cyl = cylinder_maps(3, mc0, mc1)
    g1 = mc1.stage_dgla(2)
    g0 = mc0.stage_dgla(2)
    phi = stage_dgla_morphism(cyl.collapse, 2, g1, g0, check=True)
    f = dualize_morphism(phi)
    assert f.defects() == []
    f.dual(check=True)  # transposing back must satisfy the algebra axioms
