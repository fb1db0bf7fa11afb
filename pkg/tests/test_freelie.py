"""Free graded Lie truncations: Lyndon basis, Witt dims, formal identities."""

import random
from fractions import Fraction

import pytest

from mcforge.dgla import bch_of, exp_ad, gauge_flow_of, mc_residual_of
from mcforge.freelie import (
    FreeLieTruncation, classical_witt, free_nilpotent_dgla, lyndon_words,
    standard_factorization, witt_dims,
)
from mcforge.linalg import QQ, field_of_char, vec_eq


def test_lyndon_generation():
    ws = lyndon_words(2, 4)
    assert ws == [(0,), (1,), (0, 1), (0, 0, 1), (0, 1, 1),
                  (0, 0, 0, 1), (0, 0, 1, 1), (0, 1, 1, 1)]
    for w in ws:
        # Lyndon: strictly smaller than all proper suffixes
        assert all(w < w[i:] for i in range(1, len(w)))


def test_lyndon_counts_match_moebius():
    for m in (2, 3):
        ws = lyndon_words(m, 5)
        counts = {}
        for w in ws:
            counts[len(w)] = counts.get(len(w), 0) + 1
        for k in range(1, 6):
            assert counts.get(k, 0) == classical_witt(m, k)


def test_standard_factorization():
    assert standard_factorization((0, 1)) == ((0,), (1,))
    assert standard_factorization((0, 0, 1)) == ((0,), (0, 1))
    assert standard_factorization((0, 1, 1)) == ((0, 1), (1,))
    assert standard_factorization((0, 0, 1, 0, 1)) == ((0, 0, 1), (0, 1))


@pytest.mark.parametrize("degrees,W", [
    ([1], 5),          # one odd generator: dims 1, 1, 0, ...
    ([1, 1], 4),       # two odd generators
    ([0, 1], 4),       # mixed parity
    ([0, 0], 5),       # two even: classical Witt numbers
    ([2, 1, 0], 3),    # three generators, mixed
])
def test_basis_dims_match_witt_oracle(degrees, W):
    gens = [(f"g{i}", d) for i, d in enumerate(degrees)]
    L = FreeLieTruncation(QQ, gens, W)
    assert L.dims_by_weight_degree() == witt_dims(degrees, W)


def test_one_odd_generator_basis():
    L = FreeLieTruncation(QQ, [("a", 1)], 5)
    assert L.names == ["a", "[a,a]"]
    assert L.degrees == [1, 2]
    # [a, [a,a]] = 0 by the graded Jacobi identity
    assert L.bracket_vec(L.gen("a"), L.el({"[a,a]": 1})) == {}


def test_classical_witt_even_case():
    # dims over two even generators equal classical Witt numbers
    dims = witt_dims([0, 0], 5)
    for w in range(1, 6):
        assert dims.get((w, 0), 0) == classical_witt(2, w)


def test_solve_back_rejects_non_lie():
    L = FreeLieTruncation(QQ, [("x", 0), ("y", 0)], 3)
    # xy alone is not a Lie element (Ree criterion fails)
    with pytest.raises(ValueError):
        L.solve_back({(0, 1): QQ.one()})
    # but xy - yx is
    out = L.solve_back({(0, 1): QQ.one(), (1, 0): QQ.coerce(-1)})
    assert out == L.el({"[x,y]": 1})


def test_materialized_truncation_satisfies_axioms():
    L = free_nilpotent_dgla(QQ, [("l", 0), ("x", 1)], 3)
    g = L.as_dgla()
    assert g.check_axioms() == []
    assert g.nilpotency_degree() <= 4


def test_derivation_squares_to_zero():
    L = free_nilpotent_dgla(QQ, [("l", 0), ("x", 1)], 4)
    for i in range(L.n):
        assert L.d_vec(L.d_basis(i)) == {}


def test_formal_gauge_preserves_mc():
    # res(flow_l(x)) = exp(ad_l) res(x) in the free truncation; in particular
    # the flow preserves the Maurer-Cartan set
    L = free_nilpotent_dgla(QQ, [("l", 0), ("x", 1)], 5)
    lam, x = L.gen("l"), L.gen("x")
    lhs = mc_residual_of(L, gauge_flow_of(L, lam, x))
    rhs = exp_ad(L, lam, mc_residual_of(L, x))
    assert vec_eq(QQ, lhs, rhs)


def test_formal_flow_composition_is_bch():
    M = free_nilpotent_dgla(QQ, [("u", 0), ("v", 0), ("x", 1)], 4)
    u, v, x = M.gen("u"), M.gen("v"), M.gen("x")
    lhs = gauge_flow_of(M, v, gauge_flow_of(M, u, x))
    rhs = gauge_flow_of(M, bch_of(M, v, u), x)
    assert vec_eq(QQ, lhs, rhs)


def test_formal_bch_inverse_law():
    M = free_nilpotent_dgla(QQ, [("u", 0)], 3)
    u = M.gen("u")
    minus_u = {k: QQ.neg(c) for k, c in u.items()}
    assert bch_of(M, u, minus_u) == {}


def test_bch_agrees_with_hand_series():
    L = FreeLieTruncation(QQ, [("u", 0), ("v", 0)], 3)
    z = bch_of(L, L.gen("u"), L.gen("v"))
    assert z == L.el({"u": 1, "v": 1, "[u,v]": Fraction(1, 2),
                      "[u,[u,v]]": Fraction(1, 12),
                      "[[u,v],v]": Fraction(1, 12)})


def test_truncation_brackets_vanish_above_weight():
    L = FreeLieTruncation(QQ, [("x", 0), ("y", 0)], 2)
    w = L.el({"[x,y]": 1})
    assert L.bracket_vec(L.gen("x"), w) == {}


def test_prime_field_truncation():
    F = field_of_char(7)
    L = FreeLieTruncation(F, [("x", 1), ("y", 1)], 4)
    assert L.dims_by_weight_degree() == witt_dims([1, 1], 4)
    g = L.as_dgla()
    assert g.check_axioms() == []


def test_random_jacobi_in_truncation():
    from mcforge.linalg import vec_add, vec_scale
    rng = random.Random(3)
    L = FreeLieTruncation(QQ, [("l", 0), ("x", 1), ("y", 2)], 4)
    one = QQ.one()
    for _ in range(10):
        i, j, k = (rng.randrange(L.n) for _ in range(3))
        ei, ej, ek = {i: one}, {j: one}, {k: one}
        lhs = L.bracket_vec(ei, L.bracket_vec(ej, ek))
        sgn = QQ.coerce((-1) ** (L.degrees[i] * L.degrees[j]))
        rhs = vec_add(QQ, L.bracket_vec(L.bracket_vec(ei, ej), ek),
                      vec_scale(QQ, sgn, L.bracket_vec(ej, L.bracket_vec(ei, ek))))
        assert vec_eq(QQ, lhs, rhs)
