"""Datasets and file formats: LIBSVM text, synthetic Gaussian rows, CSV traces and fits."""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .estimation import FitResult
from .optimizer import RunTrace, Snapshot

__all__ = [
    "Dataset",
    "LibsvmParseError",
    "SchemaError",
    "parse_libsvm",
    "load_libsvm",
    "format_libsvm",
    "make_synthetic_gaussian",
    "TRACE_COLUMNS",
    "FIT_COLUMNS",
    "write_trace_csv",
    "read_trace_csv",
    "write_fit_csv",
    "read_fit_csv",
]


_TOKEN = re.compile(r"\S+")


class LibsvmParseError(ValueError):
    def __init__(self, message, line, column):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class SchemaError(ValueError):
    """A CSV file does not have the expected columns."""


@dataclass(frozen=True, eq=False)
class Dataset:
    rows: sparse.csr_matrix
    labels: np.ndarray
    source: str = ""

    @property
    def n(self):
        return self.rows.shape[0]

    @property
    def d(self):
        return self.rows.shape[1]

    def dense(self):
        return self.rows.toarray()

    def signed_rows(self):
        """Rows multiplied by their labels, the form the logistic loss expects."""
        return self.dense() * self.labels[:, None]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.rows.shape == other.rows.shape
                and (self.rows != other.rows).nnz == 0
                and np.array_equal(self.labels, other.labels))


def _parse_float(token, lineno, col, what):
    try:
        value = float(token)
    except ValueError:
        raise LibsvmParseError(f"{what} {token!r} is not numeric", lineno, col) from None
    if not math.isfinite(value):
        raise LibsvmParseError(f"{what} {token!r} is not finite", lineno, col)
    return value


def parse_libsvm(stream, n_features=None, source="") -> Dataset:
    """Parse ``label idx:val idx:val ...`` lines.

    Indices are 1-based and may appear in any order but not twice on one
    line. ``#`` starts a comment; blank lines are skipped. Columns in
    error messages are 1-based character offsets.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    labels, indptr, indices, data = [], [0], [], []
    max_index = 0
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        tokens = [(m.start() + 1, m.group()) for m in _TOKEN.finditer(line)]
        col, tok = tokens[0]
        labels.append(_parse_float(tok, lineno, col, "label"))
        seen = {}
        for col, tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise LibsvmParseError(f"expected idx:val, got {tok!r}", lineno, col)
            try:
                idx = int(idx_s)
            except ValueError:
                raise LibsvmParseError(f"feature index {idx_s!r} is not an integer", lineno, col) from None
            if idx < 1:
                raise LibsvmParseError(f"feature index {idx} is below 1", lineno, col)
            if idx in seen:
                raise LibsvmParseError(f"duplicate feature index {idx}", lineno, col)
            seen[idx] = _parse_float(val_s, lineno, col + len(idx_s) + 1, "value")
        for idx in sorted(seen):
            indices.append(idx - 1)
            data.append(seen[idx])
        indptr.append(len(indices))
        if seen:
            max_index = max(max_index, max(seen))
    if not labels:
        raise ValueError("empty dataset: no data lines found")
    d = max_index if n_features is None else int(n_features)
    if d < max_index:
        raise ValueError(f"n_features={d} but index {max_index} appears in the data")
    d = max(d, 1)
    rows = sparse.csr_matrix((np.array(data), np.array(indices, dtype=np.int64), np.array(indptr)),
                             shape=(len(labels), d))
    return Dataset(rows, np.array(labels), source)



def load_libsvm(path, n_features=None) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return parse_libsvm(fh, n_features=n_features, source=str(path))


def format_libsvm(ds: Dataset) -> str:
    out = []
    rows = ds.rows.tocsr()
    for i in range(ds.n):
        start, stop = rows.indptr[i], rows.indptr[i + 1]
        feats = " ".join(f"{j + 1}:{float(v)!r}" for j, v in zip(rows.indices[start:stop], rows.data[start:stop]))
        out.append(f"{float(ds.labels[i])!r} {feats}".rstrip())
    return "\n".join(out) + "\n"


def make_synthetic_gaussian(n, d, variance="linear", normalize=False, rng=None, noise_var=0.01) -> Dataset:
    """Gaussian rows with per-row variance ``i`` (``linear``) or a constant.

    ``variance`` is ``"linear"`` or a positive number. Labels are
    ``<a_i, x_true> + N(0, noise_var)`` with ``x_true ~ N(0, I)`` drawn
    first from ``rng``; rows are normalized before labels are computed.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    rng = np.random.default_rng(rng)
    x_true = rng.standard_normal(d)
    if variance == "linear":
        scale = np.sqrt(np.arange(1, n + 1, dtype=float))
        tag = "linear"
    else:
        v = float(variance)
        if not v > 0:
            raise ValueError("variance must be positive")
        scale = np.full(n, math.sqrt(v))
        tag = f"uniform({v:g})"
    a = rng.standard_normal((n, d)) * scale[:, None]
    if normalize:
        a /= np.linalg.norm(a, axis=1, keepdims=True)
    y = a @ x_true + math.sqrt(noise_var) * rng.standard_normal(n)
    src = f"synthetic gaussian n={n} d={d} variance={tag} normalize={bool(normalize)}"
    return Dataset(sparse.csr_matrix(a), y, src)


# ---------------------------------------------------------------------------
# CSV

TRACE_COLUMNS = ("k", "f", "grad_sq", "avg_stoch_grad_sq", "gamma")
FIT_COLUMNS = ("label", "model", "2A", "B", "C", "residual")


def _fmt(v):
    # repr round-trips doubles exactly (17 significant digits at most)
    return repr(float(v))


def write_trace_csv(trace: RunTrace, path_or_file, metadata=None):
    """Write ``k,f,grad_sq,avg_stoch_grad_sq,gamma`` rows.

    Seed, oracle-call count and any ``metadata`` entries go into leading
    ``# key=value`` comment lines.
    """
    def _write(fh):
        fh.write(f"# seed={trace.seed}\n# total_oracle_calls={trace.total_oracle_calls}\n")
        for key, value in (metadata or {}).items():
            fh.write(f"# {key}={value}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for s in trace.snapshots:
            w.writerow([str(int(s.k)), _fmt(s.f_value), _fmt(s.grad_norm_sq),
                        _fmt(s.avg_stoch_grad_sq), _fmt(s.gamma)])

    _with_file(path_or_file, "w", _write)


def _split_comments(fh):
    meta, body = {}, []
    for line in fh:
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if sep:
                meta[key.strip()] = value.strip()
        else:
            body.append(line)
    return meta, body


def _check_header(header, expected):
    if header is None:
        raise SchemaError("file has no header row")
    missing = [c for c in expected if c not in header]
    if missing:
        raise SchemaError(f"missing column(s): {', '.join(missing)}")


def read_trace_csv(path_or_file) -> RunTrace:
    def _read(fh):
        meta, body = _split_comments(fh)
        reader = csv.DictReader(body)
        _check_header(reader.fieldnames, TRACE_COLUMNS)
        snaps = [Snapshot(int(r["k"]), float(r["f"]), float(r["grad_sq"]),
                          float(r["avg_stoch_grad_sq"]), float(r["gamma"])) for r in reader]
        seed = meta.get("seed")
        seed = None if seed in (None, "None") else int(seed)
        return RunTrace(snaps, seed=seed, total_oracle_calls=int(meta.get("total_oracle_calls", 0)))

    return _with_file(path_or_file, "r", _read)


def write_fit_csv(fits, path_or_file):
    """Rows in ``(2A, B, C)`` column order; the RG row leaves ``2A`` empty."""
    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIT_COLUMNS)
        for fit in fits:
            cells = ["" if v is None else _fmt(v) for v in fit.table_row()]
            w.writerow([fit.label, fit.model, *cells, _fmt(fit.residual)])

    _with_file(path_or_file, "w", _write)


def read_fit_csv(path_or_file):
    def _read(fh):
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, FIT_COLUMNS)
        fits = []
        for r in reader:
            if r["model"] == "es":
                coef = (float(r["2A"]), float(r["B"]), float(r["C"]))
            else:
                coef = (float(r["B"]), float(r["C"]))
            fits.append(FitResult(r["model"], coef, float(r["residual"]), label=r["label"]))
        return fits

    return _with_file(path_or_file, "r", _read)


def _with_file(path_or_file, mode, fn):
    if hasattr(path_or_file, "read") or hasattr(path_or_file, "write"):
        return fn(path_or_file)
    with open(path_or_file, mode, encoding="utf-8", newline="") as fh:
        return fn(fh)
