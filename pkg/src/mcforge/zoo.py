"""Small hand-checked dg Lie algebras used across tests and self-checks.

Every fixture is nilpotent, satisfies all axioms (asserted in the test
suite), and has Maurer-Cartan moduli small enough to enumerate by hand.
"""

from __future__ import annotations

from fractions import Fraction

from .dgla import DgLieAlgebra
from .linalg import Mat, QQ, field_of_char


def abelian(field, spec: dict) -> DgLieAlgebra:
    """Abelian algebra with zero differential; spec maps name -> degree."""
    names = list(spec)
    degrees = [spec[nm] for nm in names]
    return DgLieAlgebra(field, names, degrees)


def cone(field) -> DgLieAlgebra:
    """Acyclic two-term abelian algebra: dx = y.

    Over GF(p) every degree 1 element is Maurer-Cartan and the gauge action
    of the degree 0 line is transitive: p points, one orbit.
    """
    names = ["x", "y"]
    degrees = [0, 1]
    d = Mat.from_entries(field, 2, 2, [(1, 0, 1)])
    return DgLieAlgebra(field, names, degrees, d)


def heisenberg(field) -> DgLieAlgebra:
    """Graded Heisenberg: x, y in degree 1, center c in degree 2, zero d.

    MC(alpha x + beta y) <=> alpha*beta = 0; no degree 0 part, so pi0 over
    GF(p) has exactly 2p - 1 points.
    """
    names = ["x", "y", "c"]
    degrees = [1, 1, 2]
    brk = {(0, 1): {2: field.one()}}
    return DgLieAlgebra(field, names, degrees, bracket=brk)


def gauged_heisenberg(field) -> DgLieAlgebra:
    """Five-dimensional algebra with one gauge direction, nilpotency degree 4.

    Basis: l (deg 0), a, b (deg 1), s, c (deg 2) with
      [a,a] = s, [a,b] = c, [l,a] = b, [l,s] = 2c,
      da = -s/2, db = -c.
    MC = {0} union {a + beta b}; the flow along mu*l sends a + beta b to
    a + (beta + mu) b, so pi0 = 2 over any valid prime field.
    """
    names = ["l", "a", "b", "s", "c"]
    degrees = [0, 1, 1, 2, 2]
    i = {nm: k for k, nm in enumerate(names)}
    half = field.div(field.one(), field.coerce(2))
    d = Mat.from_entries(field, 5, 5, [
        (i["s"], i["a"], field.neg(half)),
        (i["c"], i["b"], field.coerce(-1)),
    ])
    one = field.one()
    brk = {
        (i["a"], i["a"]): {i["s"]: one},
        (i["a"], i["b"]): {i["c"]: one},
        (i["l"], i["a"]): {i["b"]: one},
        (i["l"], i["s"]): {i["c"]: field.coerce(2)},
    }
    return DgLieAlgebra(field, names, degrees, d, brk)


def gauge_chain(field) -> DgLieAlgebra:
    """Seven-dimensional algebra of nilpotency degree 5.

    Basis: l (deg 0), a, b, e (deg 1), s, c, u (deg 2) with
      [a,a] = s, [a,b] = c, [b,b] = u,
      [l,a] = b, [l,b] = e, [l,s] = 2c, [l,c] = u,
      da = -s/2, db = -c, de = -u.
    MC = {0} union {a + beta b + (beta^2/2) e}; flow along mu*l shifts
    beta by mu, so pi0 = 2. The flow needs ad_l^3 and the 1/3! coefficient,
    exercising the full depth of the closed-form gauge series.
    """
    names = ["l", "a", "b", "e", "s", "c", "u"]
    degrees = [0, 1, 1, 1, 2, 2, 2]
    i = {nm: k for k, nm in enumerate(names)}
    half = field.div(field.one(), field.coerce(2))
    d = Mat.from_entries(field, 7, 7, [
        (i["s"], i["a"], field.neg(half)),
        (i["c"], i["b"], field.coerce(-1)),
        (i["u"], i["e"], field.coerce(-1)),
    ])
    one = field.one()
    brk = {
        (i["a"], i["a"]): {i["s"]: one},
        (i["a"], i["b"]): {i["c"]: one},
        (i["b"], i["b"]): {i["u"]: one},
        (i["l"], i["a"]): {i["b"]: one},
        (i["l"], i["b"]): {i["e"]: one},
        (i["l"], i["s"]): {i["c"]: field.coerce(2)},
        (i["l"], i["c"]): {i["u"]: one},
    }
    return DgLieAlgebra(field, names, degrees, d, brk)


def bch_pair(field) -> DgLieAlgebra:
    """Free nilpotent Lie algebra of class 3 on two degree 0 generators.

    Basis u, v, w = [u,v], p = [u,w], q = [v,w]; all higher brackets zero.
    The classical composition law gives
      bch(u, v) = u + v + w/2 + p/12 - q/12.
    """
    names = ["u", "v", "w", "p", "q"]
    degrees = [0] * 5
    one = field.one()
    brk = {(0, 1): {2: one}, (0, 2): {3: one}, (1, 2): {4: one}}
    return DgLieAlgebra(field, names, degrees, bracket=brk)


def bch_adjoint(field) -> DgLieAlgebra:
    """bch_pair acting on a degree-shifted copy of itself.

    Degree 1 basis ub..qb is an abelian copy with [x, yb] = [x,y]b. Since
    d = 0 the gauge flow on the copy is the exponentiated adjoint action,
    so flow composition tests the BCH group law exactly.
    """
    base = ["u", "v", "w", "p", "q"]
    names = base + [nm + "b" for nm in base]
    degrees = [0] * 5 + [1] * 5
    one = field.one()
    pair = {(0, 1): 2, (0, 2): 3, (1, 2): 4}
    brk = {}
    for (i, j), k in pair.items():
        brk[(i, j)] = {k: one}
        brk[(i, j + 5)] = {k + 5: one}
        # bar of [x_j, x_i] = -[x_i, x_j]
        brk[(j, i + 5)] = {k + 5: field.coerce(-1)}
    return DgLieAlgebra(field, names, degrees, bracket=brk)


def scaling_automorphism(g: DgLieAlgebra, weights: dict, t) -> Mat:
    """Diagonal matrix scaling basis element nm by t**weights[nm]."""
    F = g.field
    tt = F.coerce(t)
    m = Mat(F, g.n, g.n)
    for nm, w in weights.items():
        j = g.index[nm]
        v = F.one()
        for _ in range(w):
            v = F.mul(v, tt)
        m.rows[j][j] = v
    return m


def gauge_chain_scaling(g: DgLieAlgebra, t) -> Mat:
    """Automorphism of gauge_chain: l,b,c scale by t; e,u by t^2; a,s fixed."""
    return scaling_automorphism(
        g, {"l": 1, "a": 0, "b": 1, "e": 2, "s": 0, "c": 1, "u": 2}, t)


ZOO = {
    "cone": cone,
    "heisenberg": heisenberg,
    "gauged_heisenberg": gauged_heisenberg,
    "gauge_chain": gauge_chain,
    "bch_pair": bch_pair,
    "bch_adjoint": bch_adjoint,
}


def build(name: str, char: int = 0) -> DgLieAlgebra:
    return ZOO[name](field_of_char(char))
