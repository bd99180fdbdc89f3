import numpy as np
import pytest

from fairlloyd import (Assignment, ClusteringConfig, Dataset, InvalidArgumentError,
                       assign_points, compute_group_stats, fair_cost, fair_lloyd, init_kmeanspp,
                       init_random, init_weighted_lloyd, lloyd, update_means, weighted_objective)
from fairlloyd.clustering import fill_empty
from fairlloyd.io import SyntheticParams, gen_synthetic
from test_fair_solver import in_hull


def blobs(seed=0, n=300, m=2):
    rng = np.random.default_rng(seed)
    centers = np.array([[0, 0], [6, 0], [0, 6]], float)
    X = centers[rng.integers(3, size=n)] + rng.normal(size=(n, 2))
    return Dataset(X, np.arange(n) % m)


# ---------------------------------------------------------------- assignment


def test_assign_ties_go_to_lowest_index():
    ds = Dataset(np.array([0.0, 2.0]), np.array([0, 0]))
    a = assign_points(ds, np.array([[-1.0], [1.0], [3.0]]))
    assert a.cluster_of.tolist() == [0, 1]


def test_points_on_centers():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [5.0, 5.0]])
    a = assign_points(Dataset(X, np.zeros(3, int)), X[::-1])
    assert a.cluster_of.tolist() == [2, 1, 0]


def test_assignment_is_nearest(rng, backend):
    ds = Dataset(rng.normal(size=(100, 3)), np.zeros(100, int))
    C = rng.normal(size=(5, 3))
    a = assign_points(ds, C)
    D = ((ds.points[:, None, :] - C[None]) ** 2).sum(-1)
    assert np.all(D[np.arange(100), a.cluster_of] <= D.min(axis=1))


# ---------------------------------------------------------------- updates


@pytest.mark.parametrize("X, labels, expect", [
    ([[3.0, 4.0]], [0], [[3.0, 4.0]]),
    ([[0.0], [2.0]], [0, 0], [[1.0]]),
])
def test_update_means_examples(X, labels, expect):
    ds = Dataset(np.array(X), np.zeros(len(X), int))
    np.testing.assert_allclose(update_means(ds, Assignment(np.array(labels), 1)), expect)


def test_update_means_reseeds_empty():
    X = np.array([[0.0], [1.0], [10.0]])
    ds = Dataset(X, np.zeros(3, int))
    a = Assignment(np.array([0, 0, 0]), 2)
    C = update_means(ds, a)
    # mean is 11/3, farthest point is 10
    D = (X[:, 0] - 11 / 3) ** 2
    assert C[1, 0] == X[np.argmax(D), 0] == 10.0


def test_fill_empty_moves_farthest():
    X = np.array([[0.0], [1.0], [9.0], [20.0]])
    ds = Dataset(X, np.zeros(4, int))
    a = Assignment(np.array([0, 0, 0, 1]), 3)
    C = np.array([[0.0], [20.0], [100.0]])
    a2, C2 = fill_empty(ds, a, C)
    assert a2.cluster_of.tolist() == [0, 0, 2, 1]
    assert C2[2, 0] == 9.0
    assert a2.sizes.min() >= 1


def test_fill_empty_skips_singletons():
    X = np.array([[0.0], [50.0], [1.0]])
    ds = Dataset(X, np.zeros(3, int))
    # cluster 1 is a far singleton and must not donate
    a2, _ = fill_empty(ds, Assignment(np.array([0, 1, 0]), 3), np.array([[0.0], [0.0], [7.0]]))
    assert a2.cluster_of.tolist() == [0, 1, 2]


# ---------------------------------------------------------------- inits


def test_init_random_properties():
    ds = blobs()
    a = init_random(ds, 5, seed=3)
    assert np.array_equal(a, init_random(ds, 5, seed=3))
    assert len({tuple(r) for r in a}) == 5
    full = init_random(Dataset(np.arange(6.0), np.zeros(6, int)), 6, seed=1)
    assert sorted(full[:, 0].tolist()) == list(range(6))
    picks = {tuple(init_random(ds, 3, seed=s)[:, 0]) for s in range(100)}
    assert len(picks) > 90


def test_kmeanspp_one_center_per_blob():
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(size=(50, 2)) * 0.1 + c for c in ([0, 0], [100, 0], [0, 100])])
    ds = Dataset(X, np.zeros(150, int))
    hits = 0
    for s in range(50):
        C = init_kmeanspp(ds, 3, seed=s)
        hits += len({int(np.argmin(np.linalg.norm(np.array([[0, 0], [100, 0], [0, 100]]) - c, axis=1)))
                     for c in C}) == 3
    assert hits >= 48


def test_kmeanspp_identical_points():
    ds = Dataset(np.ones((5, 2)), np.zeros(5, int))
    np.testing.assert_array_equal(init_kmeanspp(ds, 3, seed=0), np.ones((3, 2)))


def test_k_exceeds_n():
    ds = Dataset(np.arange(3.0), np.zeros(3, int))
    with pytest.raises(InvalidArgumentError):
        lloyd(ds, ClusteringConfig(k=4))
    with pytest.raises(InvalidArgumentError):
        fair_lloyd(ds, ClusteringConfig(k=4))


@pytest.mark.parametrize("kwargs", [{"k": 0}, {"k": 2, "restarts": 0}, {"k": 2, "init": "forgy"},
                                    {"k": 2, "max_outer_iterations": 0}, {"k": 2, "seed": -1}])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        ClusteringConfig(**kwargs)


# ---------------------------------------------------------------- loops


def test_lloyd_separated_pairs():
    X = np.array([0.0, 1.0, 10.0, 11.0])
    ds = Dataset(X, np.zeros(4, int))
    res = lloyd(ds, ClusteringConfig(k=2, restarts=5))
    np.testing.assert_allclose(np.sort(res.centers[:, 0]), [0.5, 10.5])
    assert res.objective == pytest.approx(0.25)


def test_lloyd_k_equals_n():
    ds = Dataset(np.arange(5.0), np.zeros(5, int))
    assert lloyd(ds, ClusteringConfig(k=5)).objective == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_traces_non_increasing(seed, backend):
    ds = blobs(seed)
    for run in (lloyd, fair_lloyd):
        res = run(ds, ClusteringConfig(k=4, seed=seed))
        t = np.array(res.objective_trace)
        assert np.all(t[1:] <= t[:-1] * (1 + 1e-12))
        assert res.objective <= t[-1] * (1 + 1e-12)


def test_fair_m1_equals_lloyd(backend):
    ds = blobs(1, m=1)
    cfg = ClusteringConfig(k=4, restarts=3, seed=7)
    a, b = lloyd(ds, cfg), fair_lloyd(ds, cfg)
    assert np.array_equal(a.centers, b.centers)
    assert np.array_equal(a.assignment.cluster_of, b.assignment.cluster_of)
    assert a.objective_trace == b.objective_trace


def test_result_assignment_consistent():
    ds = blobs(2)
    res = fair_lloyd(ds, ClusteringConfig(k=3, restarts=2))
    assert np.array_equal(res.assignment.cluster_of, assign_points(ds, res.centers).cluster_of)


def test_fair_lloyd_equalizes_synthetic():
    ds, _ = gen_synthetic(SyntheticParams(seed=1))
    res = fair_lloyd(ds, ClusteringConfig(k=2, restarts=3, init="kmeanspp"))
    f = res.group_costs
    assert 0 < res.fair_report.gamma[0] < 1
    assert f.max() / f.min() <= 1 + 1e-6
    base = lloyd(ds, ClusteringConfig(k=2, restarts=3, init="kmeanspp")).group_costs
    assert base.max() / base.min() > 1.05


def test_fair_iterates_in_hull():
    ds, _ = gen_synthetic(SyntheticParams(n_per_group=(150, 100, 80), blobs=3, seed=2))
    res = fair_lloyd(ds, ClusteringConfig(k=3, record_centers=True))
    assert res.center_trace
    # the last iterate's centers are the fair centers of the final partition
    st_ = compute_group_stats(ds, res.assignment)
    for i in range(3):
        assert in_hull(res.center_trace[-1][i], st_.group_mean[i][st_.present[i]])


def test_restarts_deterministic_across_threads():
    ds = blobs(3)
    a = fair_lloyd(ds, ClusteringConfig(k=4, restarts=6, seed=11))
    b = fair_lloyd(ds, ClusteringConfig(k=4, restarts=6, seed=11, threads=3))
    assert np.array_equal(a.centers, b.centers) and a.restart == b.restart


def test_four_point_tie_fixture():
    # unit-spaced points, centers optimal for the partition {-2}, {-1, 1}, {2}
    X = np.array([-2.0, -1.0, 1.0, 2.0])
    ds = Dataset(X, np.zeros(4, int))
    C = np.array([[-2.0], [0.0], [2.0]])
    illustrated = Assignment(np.array([0, 1, 1, 2]), 3)
    assert np.allclose(update_means(ds, illustrated), C)
    # that partition is not a local optimum: shifting c2 and c3 left by eps helps
    for eps in (1e-3, 0.1, 0.5):
        shifted = np.array([[-2.0], [-eps], [2 - eps]])
        sse = ((X - shifted[assign_points(ds, shifted).cluster_of, 0]) ** 2).sum()
        assert sse == pytest.approx(2 * (1 - eps) ** 2 + eps ** 2)
        assert sse < 2.0
    # our tie-break sends -1 to c1 and 1 to c2, and the loop converges
    assert assign_points(ds, C).cluster_of.tolist() == [0, 0, 1, 2]
    res = lloyd(ds, ClusteringConfig(k=3), initial_centers=C)
    assert res.converged and res.objective * 4 <= 2.0


def test_weighted_init_bounds():
    ds, _ = gen_synthetic(SyntheticParams(n_per_group=(300, 100), seed=4))
    for s in range(3):
        C = init_weighted_lloyd(ds, 3, seed=s)
        assert fair_cost(C, ds) <= weighted_objective(C, ds) + 1e-12


def test_weighted_equal_sizes_match_lloyd():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(200, 2))
    ds = Dataset(X, np.arange(200) % 2)
    C0 = init_kmeanspp(ds, 3, seed=0)
    w = init_weighted_lloyd(ds, 3, seed=0)
    plain = lloyd(ds, ClusteringConfig(k=3), initial_centers=C0)
    np.testing.assert_allclose(w, plain.centers, atol=1e-10)
