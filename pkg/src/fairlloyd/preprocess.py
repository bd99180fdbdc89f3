"""Feature preprocessing: z-scoring, PCA projection and one-hot encoding.

Plans are fitted once and then applied to any dataset with the same
features. A pipeline string such as ``"zscore,pca:k"`` is fitted step by
step, each step on the output of the previous one; ``pca:k`` takes its
target dimension from the current number of clusters.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import Dataset
from .errors import EncodingError, InvalidArgumentError, UnsupportedModeError

PLAN_VERSION = 1
STD_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class ZScoreStep:
    mean: np.ndarray
    std: np.ndarray

    name = "zscore"

    def transform(self, X):
        return (X - self.mean) / self.std

    def to_dict(self):
        return {"step": "zscore", "mean": self.mean.tolist(), "std": self.std.tolist()}


@dataclass(frozen=True, eq=False)
class PCAStep:
    """Projection onto the top-r eigenvectors of the sample covariance.

    ``basis`` is d x r with orthonormal columns; ``eigenvalues`` holds the
    full descending spectrum, so the discarded variance is
    ``eigenvalues[r:].sum()``.
    """

    mean: np.ndarray
    basis: np.ndarray
    eigenvalues: np.ndarray

    name = "pca"

    @property
    def r(self):
        return self.basis.shape[1]

    def transform(self, X):
        return (X - self.mean) @ self.basis

    def reconstruct(self, Y):
        return Y @ self.basis.T + self.mean

    def to_dict(self):
        return {"step": "pca", "mean": self.mean.tolist(), "basis": self.basis.tolist(),
                "eigenvalues": self.eigenvalues.tolist()}


@dataclass(frozen=True)
class PreprocessPlan:
    steps: tuple = ()

    def apply(self, dataset):
        X = np.array(dataset.points)
        names = dataset.feature_names
        for step in self.steps:
            if X.shape[1] != step.mean.shape[0]:
                raise InvalidArgumentError(
                    f"{step.name} step was fitted on {step.mean.shape[0]} features, got {X.shape[1]}")
            X = step.transform(X)
            if step.name == "pca":
                names = tuple(f"pc{q}" for q in range(step.r))
        return dataset.with_points(X, names)

    def then(self, other):
        return PreprocessPlan(self.steps + other.steps)

    def to_json(self):
        doc = {"version": PLAN_VERSION, "steps": [s.to_dict() for s in self.steps]}
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        if doc.get("version") != PLAN_VERSION:
            raise InvalidArgumentError(f"unsupported plan version {doc.get('version')!r}")
        steps = []
        for s in doc["steps"]:
            if s["step"] == "zscore":
                steps.append(ZScoreStep(np.array(s["mean"]), np.array(s["std"])))
            elif s["step"] == "pca":
                steps.append(PCAStep(np.array(s["mean"]), np.array(s["basis"]).reshape(len(s["mean"]), -1),
                                     np.array(s["eigenvalues"])))
            else:
                raise InvalidArgumentError(f"unknown step {s['step']!r}")
        return cls(tuple(steps))


def apply(plan, dataset):
    return plan.apply(dataset)


def fit_zscore(dataset):
    """Per-feature mean 0 and unit sample variance (ddof=1).

    Features with standard deviation below the floor are only centered,
    which maps a constant feature to zeros.
    """
    X = dataset.points
    if X.shape[0] < 2:
        raise InvalidArgumentError("z-scoring needs at least two points")
    mean = X.mean(axis=0)
    std = X.std(axis=0, ddof=1)
    std = np.where(std < STD_FLOOR, 1.0, std)
    return PreprocessPlan((ZScoreStep(mean, std),))


def fit_pca(dataset, r):
    """Top-r principal directions from the eigendecomposition of the covariance.

    Each eigenvector is signed so that its largest-magnitude entry is
    positive (first such entry on ties).
    """
    X = dataset.points
    n, d = X.shape
    if int(r) != r or not 1 <= r <= min(n, d):
        raise InvalidArgumentError(f"PCA dimension must lie in [1, {min(n, d)}], got {r}")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = (Xc.T @ Xc) / max(n - 1, 1)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(-vals, kind="stable")
    vals, vecs = np.clip(vals[order], 0.0, None), vecs[:, order]
    pivot = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[pivot, np.arange(d)])
    vecs = vecs * np.where(signs == 0, 1.0, signs)
    return PreprocessPlan((PCAStep(mean, np.ascontiguousarray(vecs[:, :int(r)]), vals),))


def parse_pipeline(text):
    """``"zscore,pca:3"`` -> [("zscore", None), ("pca", 3)]; ``pca:k`` keeps "k"."""
    steps = []
    for raw in (text or "").split(","):
        tok = raw.strip().lower()
        if not tok or tok == "none":
            continue
        name, _, arg = tok.partition(":")
        if name == "fairpca":
            raise UnsupportedModeError("fairpca is a reserved step name and is not implemented")
        if name == "zscore" and not arg:
            steps.append(("zscore", None))
        elif name == "pca" and arg == "k":
            steps.append(("pca", "k"))
        elif name == "pca" and arg.isdigit() and int(arg) >= 1:
            steps.append(("pca", int(arg)))
        else:
            raise InvalidArgumentError(f"cannot parse preprocessing step {raw.strip()!r}")
    return steps


def fit_pipeline(text, dataset, k=None):
    """Fit the parsed steps in order. ``pca:k`` uses min(k, d) dimensions."""
    plan = PreprocessPlan()
    cur = dataset
    for name, arg in parse_pipeline(text):
        if name == "zscore":
            step = fit_zscore(cur)
        else:
            if arg == "k":
                if k is None:
                    raise InvalidArgumentError("pca:k needs the number of clusters")
                arg = min(int(k), cur.d)
            step = fit_pca(cur, arg)
        cur = step.apply(cur)
        plan = plan.then(step)
    return plan


@dataclass(frozen=True)
class OneHotEncoding:
    """Sorted label set per categorical column."""

    categories: tuple  # ((column, (label, ...)), ...)

    def columns(self):
        return tuple(c for c, _ in self.categories)

    def feature_names(self):
        return tuple(f"{c}={lab}" for c, labs in self.categories for lab in labs)

    def transform(self, table):
        """Indicator matrix for ``table`` (a mapping column -> labels)."""
        blocks = []
        for col, labs in self.categories:
            index = {lab: q for q, lab in enumerate(labs)}
            vals = [str(v) for v in table[col]]
            unseen = sorted({v for v in vals if v not in index})
            if unseen:
                raise EncodingError(f"column {col!r} has labels unseen at fit time: {unseen}")
            block = np.zeros((len(vals), len(labs)))
            block[np.arange(len(vals)), [index[v] for v in vals]] = 1.0
            blocks.append(block)
        n = len(next(iter(table.values()))) if table else 0
        return np.hstack(blocks) if blocks else np.zeros((n, 0))

    def inverse(self, matrix):
        """Labels back from an indicator matrix."""
        M = np.asarray(matrix)
        out, start = {}, 0
        for col, labs in self.categories:
            block = M[:, start:start + len(labs)]
            if not np.all(np.isclose(block.sum(axis=1), 1.0)):
                raise EncodingError(f"rows of column {col!r} are not one-hot")
            out[col] = [labs[q] for q in np.argmax(block, axis=1)]
            start += len(labs)
        return out


def fit_onehot(table, columns):
    cats = []
    for col in columns:
        if col not in table:
            raise EncodingError(f"categorical column {col!r} not found")
        cats.append((col, tuple(sorted({str(v) for v in table[col]}))))
    return OneHotEncoding(tuple(cats))


def onehot(dataset, table, columns):
    """Append indicator columns for the categorical ``columns`` of ``table``
    (one label per point) to the dataset's numeric features."""
    enc = fit_onehot(table, columns)
    block = enc.transform({c: table[c] for c in columns})
    if block.shape[0] != dataset.n:
        raise EncodingError("categorical columns must have one label per point")
    X = np.hstack([dataset.points, block])
    return Dataset(X, dataset.group_of, dataset.group_labels,
                   dataset.feature_names + enc.feature_names(), dict(dataset.meta)), enc
