"""Dataset ingestion, synthetic instance generation, and model persistence.

All synthetic generators draw from a counter-based Philox bit generator
keyed by the user seed, so a given spec reproduces bit-identically across
platforms; independent streams are derived with ``jumped``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Dataset",
    "DataError",
    "load_csv",
    "load_svmlight",
    "generate_lad",
    "generate_svm",
    "generate_s3vm",
    "save_model",
    "load_model",
    "split_semisupervised",
    "add_intercept_column",
]


class DataError(ValueError):
    """Malformed input data; the message carries the offending line number."""


@dataclass
class Dataset:
    X: object  # dense ndarray or csr_matrix
    y: np.ndarray  # responses, labels, or NaN for unlabeled entries
    columns: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]


def _rng(seed: int, stream: int = 0) -> np.random.Generator:
    bg = np.random.Philox(key=seed)
    if stream:
        bg = bg.jumped(stream)
    return np.random.Generator(bg)


def add_intercept_column(dataset: Dataset) -> Dataset:
    """Append an all-ones column; the fit then carries a free intercept."""
    if sp.issparse(dataset.X):
        ones = sp.csr_matrix(np.ones((dataset.n, 1)))
        X = sp.hstack([dataset.X, ones], format="csr")
    else:
        X = np.column_stack([dataset.X, np.ones(dataset.n)])
    return Dataset(X=X, y=dataset.y, columns=dataset.columns + ["_intercept"])


# -- loaders -----------------------------------------------------------------


def _parse_label(tok: str, line_no: int, allow_blank: bool) -> float:
    s = tok.strip()
    if s == "":
        if allow_blank:
            return float("nan")
        raise DataError(f"line {line_no}: blank label not allowed here")
    if s in ("-1", "+1", "1"):
        return float(s)
    raise DataError(f"line {line_no}: label must be -1 or +1, got {tok!r}")


def load_csv(path, response: str, labels: str | None = None) -> Dataset:
    """Load a headered CSV with one column designated as the response.

    ``labels`` selects validation: None accepts any numeric response,
    "svm" requires -1/+1, "s3vm" additionally accepts a blank cell meaning
    the entry is unlabeled.  Malformed rows are rejected with the line
    number; nothing is coerced.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("line 1: empty file, header required") from None
        header = [h.strip() for h in header]
        if response not in header:
            raise DataError(f"line 1: response column {response!r} not in header")
        r_idx = header.index(response)
        feat_idx = [j for j in range(len(header)) if j != r_idx]

        rows, ys = [], []
        for line_no, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise DataError(
                    f"line {line_no}: expected {len(header)} fields, got {len(rec)}"
                )
            if labels in ("svm", "s3vm"):
                ys.append(_parse_label(rec[r_idx], line_no, allow_blank=labels == "s3vm"))
            else:
                try:
                    ys.append(float(rec[r_idx]))
                except ValueError:
                    raise DataError(
                        f"line {line_no}: non-numeric response {rec[r_idx]!r}"
                    ) from None
            vals = []
            for j in feat_idx:
                try:
                    vals.append(float(rec[j]))
                except ValueError:
                    raise DataError(
                        f"line {line_no}: non-numeric value {rec[j]!r} in column "
                        f"{header[j]!r}"
                    ) from None
            if not all(np.isfinite(vals)):
                raise DataError(f"line {line_no}: non-finite value")
            rows.append(vals)
    if not rows:
        raise DataError("line 2: no data rows")
    return Dataset(
        X=np.asarray(rows, dtype=float),
        y=np.asarray(ys, dtype=float),
        columns=[header[j] for j in feat_idx],
    )


def load_svmlight(path) -> Dataset:
    """Load sparse "label idx:val ..." rows (1-based, strictly increasing)."""
    labels, indptr, indices, values = [], [0], [], []
    max_col = 0
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            toks = line.split()
            try:
                labels.append(float(toks[0]))
            except ValueError:
                raise DataError(f"line {line_no}: bad label {toks[0]!r}") from None
            prev = 0
            for tok in toks[1:]:
                part = tok.split(":")
                if len(part) != 2:
                    raise DataError(f"line {line_no}: malformed pair {tok!r}")
                try:
                    idx = int(part[0])
                    val = float(part[1])
                except ValueError:
                    raise DataError(f"line {line_no}: malformed pair {tok!r}") from None
                if idx < 1:
                    raise DataError(f"line {line_no}: index {idx} below 1")
                if idx <= prev:
                    raise DataError(
                        f"line {line_no}: index {idx} not strictly increasing"
                    )
                prev = idx
                indices.append(idx - 1)
                values.append(val)
                max_col = max(max_col, idx)
            indptr.append(len(indices))
    if not labels:
        raise DataError("line 1: no rows")
    X = sp.csr_matrix(
        (np.asarray(values), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(len(labels), max_col),
    )
    return Dataset(X=X, y=np.asarray(labels, dtype=float))


def split_semisupervised(dataset: Dataset):
    """Split a dataset with NaN-masked labels into labeled/unlabeled parts."""
    mask = np.isnan(dataset.y)
    idx_l = np.flatnonzero(~mask)
    idx_u = np.flatnonzero(mask)
    return dataset.X[idx_l], dataset.y[idx_l], dataset.X[idx_u], idx_l, idx_u


# -- generators ----------------------------------------------------------------


def generate_lad(n: int, m: int, noise: float = 1.0, seed: int = 0) -> Dataset:
    """Standard-normal rows, a drawn coefficient vector, Laplace noise."""
    rng = _rng(seed)
    X = rng.standard_normal((n, m))
    beta = rng.standard_normal(m)
    y = X @ beta + (rng.laplace(0.0, noise, size=n) if noise > 0 else 0.0)
    return Dataset(X=X, y=y)


def generate_svm(n: int, m: int, separation: float = 4.0, seed: int = 0) -> Dataset:
    """Two unit-variance Gaussian blobs ``separation`` apart along the diagonal."""
    rng = _rng(seed)
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    direction = np.ones(m) / np.sqrt(m)
    X = rng.standard_normal((n, m)) + (separation / 2.0) * y[:, None] * direction
    return Dataset(X=X, y=y)


def generate_s3vm(
    n: int,
    m: int,
    separation: float = 4.0,
    labeled_fraction: float = 0.1,
    seed: int = 0,
) -> Dataset:
    """Blob data with a share of labels masked out (NaN = unlabeled)."""
    if not 0.0 < labeled_fraction <= 1.0:
        raise ValueError("labeled_fraction must lie in (0, 1]")
    ds = generate_svm(n, m, separation, seed)
    rng = _rng(seed, stream=1)
    n_lab = max(2, int(round(labeled_fraction * n)))
    # keep at least one labeled entry per class
    pos = np.flatnonzero(ds.y > 0)
    neg = np.flatnonzero(ds.y < 0)
    chosen = [rng.choice(pos), rng.choice(neg)]
    rest = np.setdiff1d(np.arange(n), chosen)
    extra = rng.choice(rest, size=max(0, n_lab - 2), replace=False)
    labeled = np.concatenate([chosen, extra]).astype(np.int64)
    y = np.full(n, np.nan)
    y[labeled] = ds.y[labeled]
    return Dataset(X=ds.X, y=y)


# -- model persistence ----------------------------------------------------------


def _fmt_array(a) -> str:
    return " ".join(repr(float(v)) for v in np.asarray(a).ravel())


def _parse_array(s: str) -> np.ndarray:
    return np.array([float(t) for t in s.split()]) if s.strip() else np.zeros(0)


def save_model(model, path, metadata: dict | None = None) -> None:
    """Write a model as line-oriented key/value text (exact float round-trip)."""
    kind = model.summary()["kind"] if hasattr(model, "summary") else model["kind"]
    lines = ["format: aggrefine-model-1", f"kind: {kind}"]
    if kind == "lad":
        lines.append(f"beta: {_fmt_array(model.beta)}")
    elif kind == "svm":
        if model.w is None:
            raise ValueError("only linear SVM models are persisted")
        lines.append(f"w: {_fmt_array(model.w)}")
        lines.append(f"b: {repr(float(model.b))}")
    elif kind == "s3vm":
        lines.append(f"w: {_fmt_array(model.w)}")
        lines.append(f"b: {repr(float(model.b))}")
        lines.append(f"d: {' '.join(str(int(v)) for v in model.d)}")
    else:
        raise ValueError(f"cannot persist model kind {kind!r}")
    for key, val in (metadata or {}).items():
        lines.append(f"meta.{key}: {val}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> dict:
    """Read a persisted model back into a plain dict."""
    fields: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if ": " not in line:
                raise DataError(f"line {line_no}: expected 'key: value'")
            key, val = line.split(": ", 1)
            fields[key] = val
    if fields.get("format") != "aggrefine-model-1":
        raise DataError("line 1: unknown model format")
    kind = fields["kind"]
    out: dict = {"kind": kind}
    if kind == "lad":
        out["beta"] = _parse_array(fields["beta"])
    elif kind == "svm":
        out["w"] = _parse_array(fields["w"])
        out["b"] = float(fields["b"])
    elif kind == "s3vm":
        out["w"] = _parse_array(fields["w"])
        out["b"] = float(fields["b"])
        out["d"] = np.array([int(t) for t in fields["d"].split()], dtype=np.int64)
    else:
        raise DataError(f"unknown model kind {kind!r}")
    out["meta"] = {k[5:]: v for k, v in fields.items() if k.startswith("meta.")}
    return out
