import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from fairlloyd import Dataset, EncodingError, InvalidArgumentError, UnsupportedModeError
from fairlloyd.preprocess import (PreprocessPlan, fit_onehot, fit_pca, fit_pipeline, fit_zscore,
                                  onehot, parse_pipeline)


def ds_of(X):
    X = np.asarray(X, float)
    return Dataset(X, np.zeros(len(X), int))


def test_zscore_small():
    out = fit_zscore(ds_of([[0.0], [2.0]])).apply(ds_of([[0.0], [2.0]]))
    # sample std of {0, 2} is sqrt(2)
    np.testing.assert_allclose(out.points[:, 0], [-1 / np.sqrt(2), 1 / np.sqrt(2)])


def test_zscore_constant_column():
    X = np.column_stack([np.full(5, 3.0), np.arange(5.0)])
    out = fit_zscore(ds_of(X)).apply(ds_of(X))
    assert np.all(out.points[:, 0] == 0.0)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (20, 4), elements=st.floats(-1e3, 1e3)))
def test_zscore_moments(X):
    ds = ds_of(X)
    Z = fit_zscore(ds).apply(ds).points
    np.testing.assert_allclose(Z.mean(axis=0), 0.0, atol=1e-10)
    var = Z.var(axis=0, ddof=1)
    const = X.std(axis=0, ddof=1) < 1e-12
    np.testing.assert_allclose(var[~const], 1.0, atol=1e-8)


def test_zscore_idempotent(rng):
    ds = ds_of(rng.normal(3, 5, size=(50, 3)))
    once = fit_zscore(ds).apply(ds)
    again = fit_zscore(once).steps[0]
    np.testing.assert_allclose(again.mean, 0.0, atol=1e-12)
    np.testing.assert_allclose(again.std, 1.0, atol=1e-12)


def test_zscore_needs_two_points():
    with pytest.raises(InvalidArgumentError):
        fit_zscore(ds_of([[1.0]]))


def test_pca_full_rank_preserves_distances(rng):
    ds = ds_of(rng.normal(size=(40, 5)))
    Y = fit_pca(ds, 5).apply(ds).points
    D = lambda A: np.linalg.norm(A[:, None] - A[None], axis=-1)
    np.testing.assert_allclose(D(Y), D(ds.points), atol=1e-8)


def test_pca_rank_one():
    t = np.linspace(-1, 1, 30)
    X = np.outer(t, [1.0, 2.0, -2.0]) + 5
    plan = fit_pca(ds_of(X), 1)
    step = plan.steps[0]
    np.testing.assert_allclose(step.reconstruct(plan.apply(ds_of(X)).points), X, atol=1e-10)


def test_pca_variance_and_reconstruction(rng):
    X = rng.normal(size=(100, 10)) @ rng.normal(size=(10, 10))
    ds = ds_of(X)
    step = fit_pca(ds, 3).steps[0]
    Y = step.transform(X)
    ev = np.sort(np.linalg.eigvalsh(np.cov(X.T)))[::-1]
    assert Y.var(axis=0, ddof=1).sum() == pytest.approx(ev[:3].sum(), rel=1e-10)
    resid = ((X - step.reconstruct(Y)) ** 2).sum() / (len(X) - 1)
    assert resid == pytest.approx(ev[3:].sum(), rel=1e-6)
    B = step.basis
    assert np.abs(B.T @ B - np.eye(3)).max() <= 1e-8
    # sign convention
    piv = np.argmax(np.abs(B), axis=0)
    assert np.all(B[piv, np.arange(3)] > 0)


@pytest.mark.parametrize("r", [0, 6, 2.5])
def test_pca_range(rng, r):
    with pytest.raises(InvalidArgumentError):
        fit_pca(ds_of(rng.normal(size=(10, 5))), r)


@pytest.mark.parametrize("text, expect", [
    ("zscore,pca:k", [("zscore", None), ("pca", "k")]),
    ("pca:3", [("pca", 3)]),
    ("", []),
    ("none", []),
])
def test_parse_pipeline(text, expect):
    assert parse_pipeline(text) == expect


def test_parse_rejects():
    with pytest.raises(UnsupportedModeError, match="fairpca"):
        parse_pipeline("zscore,fairpca")
    with pytest.raises(InvalidArgumentError):
        parse_pipeline("whiten")


def test_pipeline_tracks_k(rng):
    ds = ds_of(rng.normal(size=(30, 6)))
    plan = fit_pipeline("zscore,pca:k", ds, k=4)
    assert plan.apply(ds).d == 4
    assert fit_pipeline("zscore,pca:k", ds, k=10).apply(ds).d == 6


def test_plan_json_roundtrip(rng):
    ds = ds_of(rng.normal(size=(30, 4)))
    plan = fit_pipeline("zscore,pca:2", ds)
    again = PreprocessPlan.from_json(plan.to_json())
    np.testing.assert_array_equal(again.apply(ds).points, plan.apply(ds).points)
    assert '"version": 1' in plan.to_json()


def test_onehot_binary_and_decode():
    table = {"sex": ["m", "f", "f", "m"], "edu": ["hs", "ba", "phd", "ba"]}
    enc = fit_onehot(table, ["sex", "edu"])
    M = enc.transform(table)
    assert M.shape == (4, 5)
    np.testing.assert_array_equal(M[:, :2].sum(axis=1), 1)
    assert enc.feature_names()[:2] == ("sex=f", "sex=m")
    assert enc.inverse(M) == table


def test_onehot_unseen_label():
    enc = fit_onehot({"c": ["a", "b"]}, ["c"])
    with pytest.raises(EncodingError):
        enc.transform({"c": ["z"]})


def test_onehot_appends_columns():
    ds = ds_of([[1.0], [2.0], [3.0]])
    out, enc = onehot(ds, {"c": ["x", "y", "z"]}, ["c"])
    assert out.d == 4 and out.feature_names[1:] == ("c=x", "c=y", "c=z")
