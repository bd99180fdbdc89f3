"""numba and numpy kernels must agree."""
import numpy as np
import pytest

from fairlloyd import _kernels
from oracles import random_stats

pytestmark = pytest.mark.skipif("numba" not in _kernels.available_backends(),
                                reason="numba not installed")
nb, npk = _kernels.impl("numba"), _kernels.impl("numpy")


@pytest.mark.parametrize("n, d, k", [(1, 1, 1), (50, 2, 3), (5000, 7, 10)])
def test_nearest_center_parity(rng, n, d, k):
    X = rng.normal(size=(n, d))
    C = rng.normal(size=(k, d))
    la, da = nb.nearest_center(X, C)
    lb, db = npk.nearest_center(X, C)
    assert np.array_equal(la, lb)
    np.testing.assert_allclose(da, db, rtol=1e-12, atol=1e-14)


def test_nearest_center_ties_lowest_index():
    X = np.array([[0.0], [1.0], [3.0]])
    C = np.array([[-1.0], [1.0], [1.0], [5.0]])
    for kern in (nb, npk):
        labels, _ = kern.nearest_center(X, C)
        # 0 is equidistant from -1 and 1; 1 sits on the duplicated center; 3 ties 1 and 5
        assert labels.tolist() == [0, 1, 1]


@pytest.mark.parametrize("m", [1, 2, 4])
def test_cell_stats_parity(rng, m):
    n, d, k = 3000, 4, 6
    X = rng.normal(loc=1e3, size=(n, d))
    labels = rng.integers(k, size=n)
    labels[labels == 5] = 4  # leave cluster 5 empty
    groups = rng.integers(m, size=n)
    ca, ma, sa = nb.cell_stats(X, labels, groups, k, m)
    cb, mb, sb = npk.cell_stats(X, labels, groups, k, m)
    assert np.array_equal(ca, cb)
    np.testing.assert_allclose(ma, mb, rtol=1e-14)
    np.testing.assert_allclose(sa, sb, rtol=1e-11)
    assert np.all(ma[5] == 0)


def test_assigned_cost_parity(rng):
    X = rng.normal(size=(1000, 3))
    C = rng.normal(size=(4, 3))
    labels = rng.integers(4, size=1000)
    groups = rng.integers(2, size=1000)
    for s in (-1, 0, 1):
        assert nb.assigned_cost(X, C, labels, groups, s) == pytest.approx(
            npk.assigned_cost(X, C, labels, groups, s), rel=1e-13)


@pytest.mark.parametrize("m", [2, 3, 5])
def test_solver_kernels_parity(rng, m):
    st = random_stats(rng, 6, m, 3)
    args = (np.array(st.frac), np.array(st.group_mean), np.array(st.base_cost))
    C = rng.normal(size=(6, 3))
    np.testing.assert_allclose(nb.group_costs(C, *args), npk.group_costs(C, *args), rtol=1e-13)
    g = rng.dirichlet(np.ones(m))
    np.testing.assert_allclose(nb.centers_from_gamma(g, *args[:2])[0],
                               npk.centers_from_gamma(g, *args[:2])[0], rtol=1e-12, atol=1e-14)
    ra, rb = nb.mwu(*args, 300), npk.mwu(*args, 300)
    np.testing.assert_allclose(ra[0], rb[0], rtol=1e-8, atol=1e-12)
    assert ra[1] == pytest.approx(rb[1], rel=1e-10)
    da, db = nb.dual_ascent(*args, 300, 1e-12), npk.dual_ascent(*args, 300, 1e-12)
    assert da[1] == pytest.approx(db[1], rel=1e-6)
    assert da[3] == pytest.approx(db[3], rel=1e-6)


@pytest.mark.parametrize("target", [-1.0, np.inf])
def test_primal_subgradient_parity(rng, target):
    st = random_stats(rng, 5, 3, 2)
    args = (np.array(st.frac), np.array(st.group_mean), np.array(st.base_cost))
    present = np.ascontiguousarray(st.present)
    w0 = np.where(present, 1.0 / present.sum(axis=1, keepdims=True), 0.0)
    ra = nb.primal_subgradient(*args, present, w0, 200, 0.5, target)
    rb = npk.primal_subgradient(*args, present, w0, 200, 0.5, target)
    assert ra[1] == pytest.approx(rb[1], rel=1e-9)
    assert ra[2] == rb[2] == (1 if target == np.inf else 200)
    np.testing.assert_allclose(ra[0].sum(axis=1), 1.0)


@pytest.mark.parametrize("v, mask", [
    (np.array([0.2, 0.3, 0.5]), np.array([True, True, True])),
    (np.array([2.0, -1.0, 0.5]), np.array([True, True, True])),
    (np.array([2.0, 5.0, 0.5]), np.array([True, False, True])),
    (np.array([1.0, 2.0]), np.array([False, False])),
])
def test_project_simplex(v, mask):
    a, b = nb.project_simplex(v, mask), npk.project_simplex(v, mask)
    np.testing.assert_allclose(a, b, atol=1e-15)
    if mask.any():
        assert a.sum() == pytest.approx(1.0)
        assert np.all(a >= 0) and np.all(a[~mask] == 0)
    else:
        assert np.all(a == 0)


def test_use_backend_restores():
    before = _kernels.get_backend()
    with _kernels.use_backend("numpy"):
        assert _kernels.get_backend() == "numpy"
    assert _kernels.get_backend() == before
    with pytest.raises(ValueError):
        _kernels.set_backend("fortran")
