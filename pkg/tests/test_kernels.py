"""Dense enumeration kernels agree with the sparse reference, bit for bit."""

import numpy as np
import pytest

from mcforge import zoo
from mcforge._kernels import (DenseTables, gauge_edges_dense, mc_points_dense,
                              resolve_backend, simplex_edges_dense)
from mcforge.dgla import DgLieAlgebra
from mcforge.groupoid import mc_points, pi0_gauge, pi0_simplices
from mcforge.linalg import GF, QQ

BACKENDS = ["python", "numpy", "numba"]


def test_resolve_backend_env(monkeypatch):
    monkeypatch.delenv("MCFORGE_KERNEL", raising=False)
    assert resolve_backend(None) == "python"
    assert resolve_backend("numpy") == "numpy"
    monkeypatch.setenv("MCFORGE_KERNEL", "numpy")
    assert resolve_backend(None) == "numpy"
    # numba is installed here, so auto picks it
    assert resolve_backend("auto") == "numba"
    with pytest.raises(ValueError, match="unknown kernel backend"):
        resolve_backend("cuda")


def test_dense_tables_window():
    g = zoo.gauge_chain(GF(5))
    tb = DenseTables(g)
    assert tb.p == 5
    assert tb.d10.shape == (3, 3) and tb.d00.shape == (3, 1)
    # [x, lam] = -[lam, x] for x odd, lam even
    assert np.array_equal(tb.b10, (-tb.b01.transpose(0, 2, 1)) % 5)
    with pytest.raises(ValueError, match="prime field"):
        DenseTables(zoo.gauge_chain(QQ))


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("name", ["cone", "heisenberg", "gauged_heisenberg",
                                  "gauge_chain"])
def test_mc_points_match_reference(name, backend):
    g = zoo.build(name, 5)
    assert mc_points_dense(g, backend) == mc_points(g)


@pytest.mark.parametrize("backend", BACKENDS)
def test_gauge_edges_match_reference(backend):
    g = zoo.gauge_chain(GF(5))
    ref = pi0_gauge(g)
    edges = gauge_edges_dense(g, ref.points, backend)
    # every enumerated flow stays inside the MC set and hits both classes
    assert {e[0] for e in edges} == set(ref.points)
    assert all(e[1] in ref._index for e in edges)
    assert pi0_gauge(g, backend=backend).classes == ref.classes


@pytest.mark.parametrize("backend", BACKENDS)
def test_simplex_edges_match_reference(backend):
    g = zoo.gauge_chain(GF(5))
    ref = pi0_simplices(g)
    assert pi0_simplices(g, backend=backend).classes == ref.classes
    edges = simplex_edges_dense(g, ref.points, 4, backend)
    assert all(e[1] in ref._index for e in edges)


@pytest.mark.parametrize("name", ["heisenberg", "gauged_heisenberg"])
def test_pi0_cross_backend_and_env(name, monkeypatch):
    g = zoo.build(name, 5)
    ref = pi0_simplices(g)
    for backend in ("numpy", "numba"):
        assert pi0_simplices(g, backend=backend).classes == ref.classes
    monkeypatch.setenv("MCFORGE_KERNEL", "numpy")
    assert pi0_simplices(g).classes == ref.classes
    assert pi0_gauge(g).classes == pi0_gauge(g, backend="python").classes


@pytest.mark.parametrize("backend", ["numpy", "numba"])
def test_pi0_bruteforce_accelerated_matches_python(backend):
    from mcforge.dgla import pi0_bruteforce
    for name in ("gauged_heisenberg", "gauge_chain"):
        g = zoo.build(name, 5)
        ref = pi0_bruteforce(g, backend="python")
        acc = pi0_bruteforce(g, backend=backend)
        assert acc.mc_codes == ref.mc_codes
        assert acc.orbit_of == ref.orbit_of
        assert acc.reps == ref.reps
        assert acc.backend == backend


def _ad_chain(field, length: int) -> DgLieAlgebra:
    """l rotates a chain x1 -> x2 -> ... of degree 1 elements; zero d."""
    names = ["l"] + [f"x{i}" for i in range(1, length + 1)]
    degrees = [0] + [1] * length
    brk = {(0, i): {i + 1: field.one()} for i in range(1, length)}
    return DgLieAlgebra(field, names, degrees, bracket=brk)


@pytest.mark.parametrize("backend", BACKENDS)
def test_gauge_series_hitting_p_factorial_raises(backend):
    # ad_l^5 is nonzero, so the flow needs 1/5! and must refuse mod 5
    g = _ad_chain(GF(5), 6)
    start = tuple(1 if i == 0 else 0 for i in range(6))
    with pytest.raises(ZeroDivisionError):
        gauge_edges_dense(g, [start], backend)


@pytest.mark.parametrize("backend", BACKENDS)
def test_shallow_chain_flows_agree(backend):
    # ad_l^3 = 0 here, so 1/k! stays invertible mod 5 and all backends
    # give the same orbit partition
    g = _ad_chain(GF(5), 3)
    ref = pi0_gauge(g)
    assert pi0_gauge(g, backend=backend).classes == ref.classes
    # 20 orbits with a != 0, four lines with a = 0 != b, five fixed points
    assert len(ref) == 29
