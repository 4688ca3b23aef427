import numpy as np
import pytest

from mobsoc import kernels
from mobsoc.community import random_baseline

BACKENDS = kernels.backends()


def test_default_backend_is_compiled_when_built():
    assert kernels.BACKEND in BACKENDS
    if "cython" in BACKENDS:
        assert kernels.BACKEND == "cython" or kernels._impl is BACKENDS["python"]


@pytest.mark.skipif("cython" not in BACKENDS, reason="extension not built")
@pytest.mark.parametrize("seed", range(5))
def test_backends_agree(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 60))
    m = int(rng.integers(1, n * (n - 1) // 4 + 2))
    g = random_baseline(n, m, seed)
    indptr, nbrs, eids = g.csr()
    alive = (rng.random(m) > 0.2).astype(np.uint8)
    sources = np.sort(rng.choice(n, size=max(1, n // 2), replace=False)).astype(np.int64)
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    np.testing.assert_allclose(
        py.edge_betweenness(indptr, nbrs, eids, alive, m, sources),
        cy.edge_betweenness(indptr, nbrs, eids, alive, m, sources),
        rtol=1e-12,
        atol=1e-12,
    )
    np.testing.assert_array_equal(
        py.component_labels(indptr, nbrs, eids, alive), cy.component_labels(indptr, nbrs, eids, alive)
    )
    for v in (0, n - 1):
        np.testing.assert_array_equal(
            np.sort(py.component_of(indptr, nbrs, eids, alive, v)),
            np.sort(cy.component_of(indptr, nbrs, eids, alive, v)),
        )


def test_pure_python_switch(monkeypatch):
    import importlib

    monkeypatch.setenv("MOBSOC_PURE_PYTHON", "1")
    try:
        mod = importlib.reload(kernels)
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("MOBSOC_PURE_PYTHON")
        importlib.reload(kernels)
