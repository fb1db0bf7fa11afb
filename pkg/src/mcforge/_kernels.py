"""Dense mod-p enumeration kernels behind the pi0 routines.

The sparse field-ops implementation in `groupoid` is the reference; this
module packs a prime-field algebra into dense int64 tables and runs the
three hot enumerations (Maurer-Cartan points, gauge orbit edges, bounded
1-simplex edges) either vectorized in numpy or compiled by numba. Results
are bit-identical to the reference across backends.

Backend selection: an explicit name wins, otherwise the MCFORGE_KERNEL
environment variable, otherwise plain python. "auto" means numba when it
imports, else numpy.
"""

from __future__ import annotations

import os
from itertools import product

import numpy as np

BACKENDS = ("python", "numpy", "numba", "auto")

_numba_cache: dict = {}


def resolve_backend(name: str | None = None) -> str:
    name = name or os.environ.get("MCFORGE_KERNEL", "python")
    if name not in BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; pick one of "
                         + ", ".join(BACKENDS))
    if name == "auto":
        try:
            import numba  # noqa: F401
            return "numba"
        except ImportError:
            return "numpy"
    return name


class DenseTables:
    """Structure constants of a prime-field dg Lie algebra, packed dense.

    Only the degree windows the enumerations touch are kept: d and the
    bracket restricted to inputs of degree 0 and 1.
    """

    def __init__(self, g):
        p = g.field.char
        if not p:
            raise ValueError("dense kernels need a prime field")
        self.p = p
        self.idx0 = g.basis_indices(0)
        self.idx1 = g.basis_indices(1)
        self.idx2 = g.basis_indices(2)
        n0, n1, n2 = len(self.idx0), len(self.idx1), len(self.idx2)
        pos0 = {i: a for a, i in enumerate(self.idx0)}
        pos1 = {i: a for a, i in enumerate(self.idx1)}
        pos2 = {i: a for a, i in enumerate(self.idx2)}

        self.d10 = np.zeros((n2, n1), dtype=np.int64)
        self.d00 = np.zeros((n1, n0), dtype=np.int64)
        for r, c, v in g.d.entries():
            if c in pos1 and r in pos2:
                self.d10[pos2[r], pos1[c]] = v % p
            elif c in pos0 and r in pos1:
                self.d00[pos1[r], pos0[c]] = v % p

        self.b11 = np.zeros((n2, n1, n1), dtype=np.int64)
        self.b01 = np.zeros((n1, n0, n1), dtype=np.int64)
        self.b10 = np.zeros((n1, n1, n0), dtype=np.int64)
        for i in self.idx1:
            for j in self.idx1:
                for k, c in g.bracket_pair(i, j).items():
                    if k in pos2:
                        self.b11[pos2[k], pos1[i], pos1[j]] = c % p
        for i in self.idx0:
            for j in self.idx1:
                for k, c in g.bracket_pair(i, j).items():
                    if k in pos1:
                        self.b01[pos1[k], pos0[i], pos1[j]] = c % p
        for i in self.idx1:
            for j in self.idx0:
                for k, c in g.bracket_pair(i, j).items():
                    if k in pos1:
                        self.b10[pos1[k], pos1[i], pos0[j]] = c % p


def _grid(p: int, width: int) -> np.ndarray:
    """All length-`width` digit tuples mod p, in lexicographic order."""
    if width == 0:
        return np.zeros((1, 0), dtype=np.int64)
    cols = np.meshgrid(*([np.arange(p, dtype=np.int64)] * width),
                       indexing="ij")
    return np.stack(cols, axis=-1).reshape(-1, width)


def _inv(p: int, k: int) -> int:
    if k % p == 0:
        raise ZeroDivisionError(f"{k} is not invertible mod {p}")
    return pow(k, -1, p)


# ---------------------------------------------------------------------------
# Maurer-Cartan point filter.


def mc_points_python(tb: DenseTables) -> list:
    p = tb.p
    n1 = len(tb.idx1)
    n2 = len(tb.idx2)
    inv2 = _inv(p, 2)
    d10, b11 = tb.d10, tb.b11
    out = []
    for x in product(range(p), repeat=n1):
        ok = True
        for r in range(n2):
            acc = 0
            for i in range(n1):
                if x[i]:
                    acc += d10[r, i] * x[i]
                    for j in range(n1):
                        acc += inv2 * b11[r, i, j] * x[i] * x[j]
            if acc % p:
                ok = False
                break
        if ok:
            out.append(tuple(int(v) for v in x))
    return out


def mc_points_numpy(tb: DenseTables) -> list:
    p = tb.p
    C = _grid(p, len(tb.idx1))
    lin = C @ tb.d10.T
    quad = np.einsum("rij,ti,tj->tr", tb.b11, C, C)
    R = (lin + _inv(p, 2) * quad) % p
    keep = ~R.any(axis=1)
    return [tuple(int(v) for v in row) for row in C[keep]]


def _numba_mc_filter():
    if "mc" not in _numba_cache:
        from numba import njit

        @njit(cache=False)
        def mc_filter(C, d10, b11, inv2, p):
            T, n1 = C.shape
            n2 = d10.shape[0]
            keep = np.ones(T, dtype=np.bool_)
            for t in range(T):
                for r in range(n2):
                    acc = 0
                    for i in range(n1):
                        ci = C[t, i]
                        if ci:
                            acc = (acc + d10[r, i] * ci) % p
                            for j in range(n1):
                                acc = (acc + inv2 * b11[r, i, j] * ci
                                       * C[t, j]) % p
                    if acc:
                        keep[t] = False
                        break
            return keep

        _numba_cache["mc"] = mc_filter
    return _numba_cache["mc"]


def mc_points_numba(tb: DenseTables) -> list:
    C = _grid(tb.p, len(tb.idx1))
    keep = _numba_mc_filter()(C, tb.d10, tb.b11, _inv(tb.p, 2), tb.p)
    return [tuple(int(v) for v in row) for row in C[keep]]


# ---------------------------------------------------------------------------
# Gauge orbit edges: (start point, flow endpoint) pairs.


def _flow_inverse_factorials(tb: DenseTables, bound: int) -> list:
    # inv(k!) for k = 1..bound, computed lazily so a series that dies
    # early never trips over a factorial divisible by p
    out = []
    fact = 1
    for k in range(1, bound + 1):
        fact = fact * k
        out.append(None if fact % tb.p == 0 else pow(fact, -1, tb.p))
    return out


def gauge_edges_python(tb: DenseTables, points: list, bound: int) -> list:
    p = tb.p
    n0, n1 = len(tb.idx0), len(tb.idx1)
    inv_fact = _flow_inverse_factorials(tb, bound + 1)
    d00, b01 = tb.d00, tb.b01
    edges = []
    for lam in product(range(p), repeat=n0):
        if not any(lam):
            continue
        dlam = [sum(d00[r, i] * lam[i] for i in range(n0)) % p
                for r in range(n1)]
        for x in points:
            out = list(x)
            term = [(sum(b01[r, i, j] * lam[i] * x[j]
                         for i in range(n0) for j in range(n1))
                     - dlam[r]) % p for r in range(n1)]
            k = 1
            while any(term):
                if inv_fact[k - 1] is None:
                    raise ZeroDivisionError(
                        f"{k}! is not invertible mod {p} while the gauge "
                        f"series is still alive")
                for r in range(n1):
                    out[r] = (out[r] + inv_fact[k - 1] * term[r]) % p
                term = [sum(b01[r, i, j] * lam[i] * term[j]
                            for i in range(n0) for j in range(n1)) % p
                        for r in range(n1)]
                k += 1
                if k > bound + 1:
                    raise RuntimeError("gauge series did not terminate")
            edges.append((x, tuple(int(v) for v in out)))
    return edges


def gauge_edges_numpy(tb: DenseTables, points: list, bound: int) -> list:
    p = tb.p
    n0 = len(tb.idx0)
    inv_fact = _flow_inverse_factorials(tb, bound + 1)
    X = np.array(points, dtype=np.int64).reshape(len(points), len(tb.idx1))
    edges = []
    for lam in _grid(p, n0):
        if not lam.any():
            continue
        ad = np.einsum("rij,i->rj", tb.b01, lam) % p
        dlam = (tb.d00 @ lam) % p
        out = X.copy()
        term = (X @ ad.T - dlam) % p
        k = 1
        while term.any():
            if inv_fact[k - 1] is None:
                raise ZeroDivisionError(
                    f"{k}! is not invertible mod {p} while the gauge "
                    f"series is still alive")
            out = (out + inv_fact[k - 1] * term) % p
            term = (term @ ad.T) % p
            k += 1
            if k > bound + 1:
                raise RuntimeError("gauge series did not terminate")
        edges.extend((pt, tuple(int(v) for v in row))
                     for pt, row in zip(points, out))
    return edges


def _numba_gauge_flow():
    if "gauge" not in _numba_cache:
        from numba import njit

        @njit(cache=False)
        def gauge_flow(L, X, d00, b01, inv_fact, p, bound):
            nl, n0 = L.shape
            P, n1 = X.shape
            out = np.empty((nl * P, n1), dtype=np.int64)
            status = 0
            for a in range(nl):
                ad = np.zeros((n1, n1), dtype=np.int64)
                dlam = np.zeros(n1, dtype=np.int64)
                for r in range(n1):
                    for i in range(n0):
                        li = L[a, i]
                        if li:
                            dlam[r] = (dlam[r] + d00[r, i] * li) % p
                            for j in range(n1):
                                ad[r, j] = (ad[r, j] + b01[r, i, j] * li) % p
                for b in range(P):
                    row = a * P + b
                    term = np.empty(n1, dtype=np.int64)
                    for r in range(n1):
                        out[row, r] = X[b, r]
                        acc = -dlam[r]
                        for j in range(n1):
                            acc += ad[r, j] * X[b, j]
                        term[r] = acc % p
                    k = 1
                    while term.any():
                        if inv_fact[k - 1] < 0:
                            status = 1
                            return out, status
                        nxt = np.empty(n1, dtype=np.int64)
                        for r in range(n1):
                            out[row, r] = (out[row, r]
                                           + inv_fact[k - 1] * term[r]) % p
                            acc = 0
                            for j in range(n1):
                                acc += ad[r, j] * term[j]
                            nxt[r] = acc % p
                        term = nxt
                        k += 1
                        if k > bound + 1:
                            status = 2
                            return out, status
            return out, status

        _numba_cache["gauge"] = gauge_flow
    return _numba_cache["gauge"]


def gauge_edges_numba(tb: DenseTables, points: list, bound: int) -> list:
    p = tb.p
    L = _grid(p, len(tb.idx0))
    L = L[L.any(axis=1)]
    if not len(L) or not points:
        return []
    X = np.array(points, dtype=np.int64).reshape(len(points), len(tb.idx1))
    inv_fact = np.array(
        [-1 if v is None else v
         for v in _flow_inverse_factorials(tb, bound + 1)], dtype=np.int64)
    out, status = _numba_gauge_flow()(L, X, tb.d00, tb.b01, inv_fact, p, bound)
    if status == 1:
        raise ZeroDivisionError(
            f"a factorial is not invertible mod {p} while the gauge series "
            f"is still alive")
    if status == 2:
        raise RuntimeError("gauge series did not terminate")
    return [(points[row % len(points)], tuple(int(v) for v in out[row]))
            for row in range(out.shape[0])]


# ---------------------------------------------------------------------------
# Bounded-degree 1-simplex edges.


def simplex_edges_python(tb: DenseTables, points: list, cap: int) -> list:
    p = tb.p
    n0, n1, n2 = len(tb.idx0), len(tb.idx1), len(tb.idx2)
    inv = [_inv(p, k) for k in range(1, cap + 1)]
    inv2 = _inv(p, 2)
    d00, d10, b10, b11 = tb.d00, tb.d10, tb.b10, tb.b11
    edges = []
    for zflat in product(range(p), repeat=n0 * cap):
        zs = [zflat[k * n0:(k + 1) * n0] for k in range(cap)]
        for x0 in points:
            xs = [list(x0)]
            for k in range(cap):
                nxt = []
                for r in range(n1):
                    acc = sum(d00[r, i] * zs[k][i] for i in range(n0))
                    for b in range(k + 1):
                        acc += sum(b10[r, j, i] * xs[k - b][j] * zs[b][i]
                                   for j in range(n1) for i in range(n0))
                    nxt.append(inv[k] * acc % p)
                xs.append(nxt)
            if not _closes_python(p, n1, n2, d10, b10, b11, inv2,
                                  xs, zs, cap):
                continue
            end = tuple(sum(x[r] for x in xs) % p for r in range(n1))
            edges.append((x0, end))
    return edges


def _closes_python(p, n1, n2, d10, b10, b11, inv2, xs, zs, cap) -> bool:
    n0 = len(zs[0]) if zs else 0
    for k in range(cap, 2 * cap):
        for r in range(n1):
            acc = 0
            for b in range(len(zs)):
                a = k - b
                if 0 <= a < len(xs):
                    acc += sum(b10[r, j, i] * xs[a][j] * zs[b][i]
                               for j in range(n1) for i in range(n0))
            if acc % p:
                return False
    for k in range(2 * cap + 1):
        for r in range(n2):
            acc = 0
            if k < len(xs):
                acc += sum(d10[r, j] * xs[k][j] for j in range(n1))
            for a in range(max(0, k - cap), min(k, cap) + 1):
                acc += inv2 * sum(b11[r, i, j] * xs[a][i] * xs[k - a][j]
                                  for i in range(n1) for j in range(n1))
            if acc % p:
                return False
    return True


def simplex_edges_numpy(tb: DenseTables, points: list, cap: int) -> list:
    p = tb.p
    n0, n1 = len(tb.idx0), len(tb.idx1)
    P = len(points)
    Zd = _grid(p, n0 * cap)
    K = Zd.shape[0]
    Z = np.repeat(Zd.reshape(K, cap, n0), P, axis=0)
    X0 = np.tile(np.array(points, dtype=np.int64).reshape(P, n1), (K, 1))
    starts = list(points) * K
    T = K * P
    X = np.zeros((T, cap + 1, n1), dtype=np.int64)
    X[:, 0] = X0
    for k in range(cap):
        rhs = Z[:, k] @ tb.d00.T
        for b in range(k + 1):
            rhs = rhs + np.einsum("rji,tj,ti->tr", tb.b10, X[:, k - b],
                                  Z[:, b])
        X[:, k + 1] = _inv(p, k + 1) * rhs % p
    ok = np.ones(T, dtype=bool)
    for k in range(cap, 2 * cap):
        acc = np.zeros((T, n1), dtype=np.int64)
        for b in range(cap):
            a = k - b
            if 0 <= a <= cap:
                acc = acc + np.einsum("rji,tj,ti->tr", tb.b10, X[:, a],
                                      Z[:, b])
        ok &= ~(acc % p).any(axis=1)
    inv2 = _inv(p, 2)
    for k in range(2 * cap + 1):
        acc = X[:, k] @ tb.d10.T if k <= cap else \
            np.zeros((T, len(tb.idx2)), dtype=np.int64)
        for a in range(max(0, k - cap), min(k, cap) + 1):
            acc = acc + inv2 * np.einsum("rij,ti,tj->tr", tb.b11, X[:, a],
                                         X[:, k - a])
        ok &= ~(acc % p).any(axis=1)
    ends = X.sum(axis=1) % p
    return [(starts[t], tuple(int(v) for v in ends[t]))
            for t in np.flatnonzero(ok)]


def _numba_simplex_scan():
    if "simplex" not in _numba_cache:
        from numba import njit

        @njit(cache=False)
        def simplex_scan(Zd, X0, d00, d10, b10, b11, invs, inv2, p, cap):
            K = Zd.shape[0]
            P, n1 = X0.shape
            n0 = d00.shape[1]
            n2 = d10.shape[0]
            ok = np.zeros(K * P, dtype=np.bool_)
            ends = np.zeros((K * P, n1), dtype=np.int64)
            xs = np.zeros((cap + 1, n1), dtype=np.int64)
            for a in range(K):
                for b in range(P):
                    row = a * P + b
                    for r in range(n1):
                        xs[0, r] = X0[b, r]
                    for k in range(cap):
                        for r in range(n1):
                            acc = 0
                            for i in range(n0):
                                zi = Zd[a, k * n0 + i]
                                if zi:
                                    acc += d00[r, i] * zi
                            for bb in range(k + 1):
                                for j in range(n1):
                                    xj = xs[k - bb, j]
                                    if xj:
                                        for i in range(n0):
                                            acc += (b10[r, j, i] * xj
                                                    * Zd[a, bb * n0 + i])
                            xs[k + 1, r] = invs[k] * acc % p
                    good = True
                    for k in range(cap, 2 * cap):
                        if not good:
                            break
                        for r in range(n1):
                            acc = 0
                            for bb in range(cap):
                                aa = k - bb
                                if 0 <= aa <= cap:
                                    for j in range(n1):
                                        xj = xs[aa, j]
                                        if xj:
                                            for i in range(n0):
                                                acc += (b10[r, j, i] * xj
                                                        * Zd[a, bb * n0 + i])
                            if acc % p:
                                good = False
                                break
                    for k in range(2 * cap + 1):
                        if not good:
                            break
                        for r in range(n2):
                            acc = 0
                            if k <= cap:
                                for j in range(n1):
                                    acc += d10[r, j] * xs[k, j]
                            lo = k - cap
                            if lo < 0:
                                lo = 0
                            hi = k if k < cap else cap
                            for aa in range(lo, hi + 1):
                                for i in range(n1):
                                    xi = xs[aa, i]
                                    if xi:
                                        for j in range(n1):
                                            acc += (inv2 * b11[r, i, j] * xi
                                                    * xs[k - aa, j]) % p
                            if acc % p:
                                good = False
                                break
                    if good:
                        ok[row] = True
                        for r in range(n1):
                            s = 0
                            for k in range(cap + 1):
                                s += xs[k, r]
                            ends[row, r] = s % p
            return ok, ends

        _numba_cache["simplex"] = simplex_scan
    return _numba_cache["simplex"]


def simplex_edges_numba(tb: DenseTables, points: list, cap: int) -> list:
    p = tb.p
    n0, n1 = len(tb.idx0), len(tb.idx1)
    P = len(points)
    if not P:
        return []
    Zd = _grid(p, n0 * cap)
    X0 = np.array(points, dtype=np.int64).reshape(P, n1)
    invs = np.array([_inv(p, k) for k in range(1, cap + 1)], dtype=np.int64)
    ok, ends = _numba_simplex_scan()(Zd, X0, tb.d00, tb.d10, tb.b10, tb.b11,
                                     invs, _inv(p, 2), p, cap)
    return [(points[t % P], tuple(int(v) for v in ends[t]))
            for t in np.flatnonzero(ok)]


# ---------------------------------------------------------------------------
# Dispatch.

_MC = {"python": mc_points_python, "numpy": mc_points_numpy,
       "numba": mc_points_numba}
_GAUGE = {"python": gauge_edges_python, "numpy": gauge_edges_numpy,
          "numba": gauge_edges_numba}
_SIMPLEX = {"python": simplex_edges_python, "numpy": simplex_edges_numpy,
            "numba": simplex_edges_numba}


def mc_points_dense(g, backend: str | None = None) -> list:
    return _MC[resolve_backend(backend)](DenseTables(g))


def choose_backend(backend: str = "auto") -> str:
    """Accelerated-backend resolution used by pi0_bruteforce."""
    if backend not in BACKENDS:
        raise ValueError(f"unknown kernel backend {backend!r}; pick one of "
                         + ", ".join(BACKENDS))
    if backend == "auto":
        try:
            import numba  # noqa: F401
            return "numba"
        except ImportError:
            return "numpy"
    return backend


def pi0_orbits(g, backend: str, max_ops: int):
    """Orbit closure in the integer-code convention of pi0_bruteforce.

    Returns (ascending MC codes, {code: smallest code in its orbit}),
    matching the pure-python reference bit for bit.
    """
    from .dgla import BudgetExceeded
    tables = DenseTables(g)
    p = tables.p
    points = _MC[backend](tables)
    if p ** len(tables.idx0) * max(len(points), 1) > max_ops:
        raise BudgetExceeded("gauge closure exceeds budget")
    edges = _GAUGE[backend](tables, points, g.series_bound())

    def code_of(t):
        c = 0
        for a in range(len(t) - 1, -1, -1):
            c = c * p + t[a]
        return c

    codes = sorted(code_of(t) for t in points)
    parent = {c: c for c in codes}

    def find(c):
        while parent[c] != c:
            parent[c] = parent[parent[c]]
            c = parent[c]
        return c

    for start, end in edges:
        ce = code_of(end)
        if ce not in parent:
            raise AssertionError("gauge flow left the Maurer-Cartan set")
        a, b = find(code_of(start)), find(ce)
        if a != b:
            parent[max(a, b)] = min(a, b)
    return codes, {c: find(c) for c in codes}


def gauge_edges_dense(g, points: list, backend: str | None = None) -> list:
    return _GAUGE[resolve_backend(backend)](DenseTables(g), points,
                                            g.series_bound())


def simplex_edges_dense(g, points: list, cap: int,
                        backend: str | None = None) -> list:
    return _SIMPLEX[resolve_backend(backend)](DenseTables(g), points, cap)
