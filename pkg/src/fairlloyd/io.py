"""CSV ingestion and the synthetic group-skewed mixture generator."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import Dataset
from .errors import IngestError, InvalidArgumentError
from .preprocess import fit_onehot


def _parse_float(text):
    try:
        v = float(text)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def ingest_csv(path, group_column, categorical=()):
    """Read a UTF-8 CSV with a header row into a :class:`Dataset`.

    Every column except ``group_column`` must be numeric unless listed in
    ``categorical``, in which case it is one-hot encoded with sorted labels.
    Rows with a wrong field count, an empty group label or an unparseable
    value are dropped; their 1-based line numbers are kept in
    ``meta["rejected_lines"]``. A column where most rows fail to parse is an
    error rather than a source of rejected rows.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r]
    if not rows:
        raise IngestError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise IngestError(f"{path} has a header but no data rows")
    if group_column not in header:
        raise IngestError(f"group column {group_column!r} not in header {header}")
    missing = [c for c in categorical if c not in header]
    if missing:
        raise IngestError(f"categorical columns {missing} not in header")
    if len(set(header)) != len(header):
        raise IngestError("duplicate column names in header")
    gcol = header.index(group_column)
    cat_cols = [header.index(c) for c in categorical]
    num_cols = [q for q in range(len(header)) if q != gcol and q not in cat_cols]

    # line numbers: header is line 1
    lines = list(range(2, len(body) + 2))
    bad = set()
    values = np.full((len(body), len(num_cols)), np.nan)
    fails = np.zeros(len(num_cols), np.int64)
    for r, row in enumerate(body):
        if len(row) != len(header) or not row[gcol].strip():
            bad.add(r)
            continue
        for q, col in enumerate(num_cols):
            v = _parse_float(row[col])
            if v is None:
                fails[q] += 1
                bad.add(r)
            else:
                values[r, q] = v
    for q, col in enumerate(num_cols):
        if fails[q] * 2 > len(body):
            raise IngestError(f"column {header[col]!r} is not numeric; declare it categorical")
    keep = np.array([r for r in range(len(body)) if r not in bad], dtype=np.int64)
    if keep.size == 0:
        raise IngestError(f"{path} has no valid data rows")
    X = values[keep]
    names = tuple(header[q] for q in num_cols)
    labels = [body[r][gcol].strip() for r in keep]
    meta = {"source": path.name, "rejected_lines": [lines[r] for r in sorted(bad)]}
    if cat_cols:
        table = {header[q]: [body[r][q].strip() for r in keep] for q in cat_cols}
        enc = fit_onehot(table, [header[q] for q in cat_cols])
        X = np.hstack([X, enc.transform(table)])
        names = names + enc.feature_names()
        meta["categories"] = {c: list(labs) for c, labs in enc.categories}
    if X.shape[1] == 0:
        raise IngestError("no feature columns besides the group column")
    return Dataset.from_labels(X, labels, names, meta)


@dataclass(frozen=True)
class SyntheticParams:
    """Group-skewed Gaussian mixture.

    ``blobs`` elongated clusters sit along the first axis, ``spacing`` apart,
    with standard deviation ``width`` across and ``length`` along the second
    axis. Group j is shifted by ``j * shift`` along the second axis and its
    spread is scaled by ``spread ** j``. ``symmetric=True`` drops the shift
    and spread scaling so all groups share one distribution.
    """

    n_per_group: tuple = (1400, 600)
    blobs: int = 2
    d: int = 2
    spacing: float = 8.0
    width: float = 0.7
    length: float = 3.0
    shift: float = 2.5
    spread: float = 1.1
    seed: int = 0
    symmetric: bool = False
    group_labels: tuple = field(default=())

    def __post_init__(self):
        if len(self.n_per_group) < 1 or min(self.n_per_group) < 1:
            raise InvalidArgumentError("every group needs at least one point")
        if self.blobs < 1 or self.d < 2:
            raise InvalidArgumentError("need blobs >= 1 and d >= 2")
        if self.group_labels and len(self.group_labels) != len(self.n_per_group):
            raise InvalidArgumentError("one label per group")

    @property
    def m(self):
        return len(self.n_per_group)


def gen_synthetic(params=None):
    """Draw a dataset; returns (Dataset, ground-truth dict)."""
    p = params or SyntheticParams()
    rng = np.random.default_rng(p.seed)
    labels = p.group_labels or tuple(chr(ord("A") + j) if p.m <= 26 else f"g{j}" for j in range(p.m))
    pts, grp, blob_of = [], [], []
    for j, nj in enumerate(p.n_per_group):
        shift = 0.0 if p.symmetric else j * p.shift
        scale = 1.0 if p.symmetric else p.spread ** j
        b = rng.integers(p.blobs, size=nj)
        X = rng.normal(size=(nj, p.d))
        X[:, 0] *= p.width * scale
        X[:, 1] *= p.length * scale
        X[:, 2:] *= p.width
        X[:, 0] += b * p.spacing
        X[:, 1] += shift
        pts.append(X)
        grp.append(np.full(nj, j))
        blob_of.append(b)
    X = np.vstack(pts)
    g = np.concatenate(grp)
    truth = {"params": {**asdict(p), "n_per_group": list(p.n_per_group),
                        "group_labels": list(labels)},
             "blob_of": np.concatenate(blob_of).tolist()}
    ds = Dataset(X, g, labels, tuple(f"x{q}" for q in range(p.d)), {"synthetic": True})
    return ds, truth


def write_csv(dataset, path, group_column="group"):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(dataset.feature_names) + [group_column])
        for x, j in zip(dataset.points.tolist(), dataset.group_of.tolist()):
            w.writerow([repr(v) for v in x] + [dataset.group_labels[j]])
    return path


def write_synthetic(params, path, group_column="group"):
    """Write the CSV and a ``<path>.meta.json`` ground-truth sidecar."""
    ds, truth = gen_synthetic(params)
    path = write_csv(ds, path, group_column)
    side = path.with_name(path.name + ".meta.json")
    side.write_text(json.dumps(truth, sort_keys=True) + "\n", encoding="utf-8")
    return path, side
