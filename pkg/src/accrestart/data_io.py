"""Dataset ingestion, synthetic instances, and trace/reference files."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .problems import SparseDesign
from .solvers import RunTrace

__all__ = [
    "DatasetManifest",
    "DataFormatError",
    "load_design",
    "write_libsvm",
    "synth_lasso",
    "write_trace",
    "read_trace",
    "write_reference",
    "read_reference",
    "data_dir",
    "bundled_path",
    "DATA_ENV",
]

DATA_ENV = "ACCRESTART_DATA"
TRACE_COLUMNS = ("iter", "epoch", "F", "gap", "dist_v", "restart")


class DataFormatError(ValueError):
    """A dataset or result file does not follow its format."""


def data_dir() -> Path:
    """Dataset cache directory: ``$ACCRESTART_DATA`` or ``~/.cache/accrestart``."""
    env = os.environ.get(DATA_ENV)
    return Path(env) if env else Path.home() / ".cache" / "accrestart"


def bundled_path(name: str) -> Path:
    return Path(__file__).with_name("data") / name


def _resolve(path) -> Path:
    p = Path(path)
    if p.exists() or p.is_absolute():
        return p
    for cand in (data_dir() / p, bundled_path(p.name)):
        if cand.exists():
            return cand
    return p


@dataclass(frozen=True)
class DatasetManifest:
    """Where a dataset lives and how its labels become ``+1/-1``.

    ``label_rule`` is ``"identity"`` (labels must already be +-1, ``0`` and
    ``2`` style encodings are rejected), ``"onevsrest:<label>"`` (that label
    to +1, every other to -1), or a mapping from raw label text to +-1.
    Labels absent from a mapping are an error.
    """

    path: str | Path
    format: str = "libsvm"
    label_rule: str | dict = "identity"
    feature_count: int | None = None
    drop_empty_columns: bool = False
    label_column: str | int = -1

    def __post_init__(self):
        if self.format not in ("libsvm", "csv"):
            raise ValueError(f"format must be 'libsvm' or 'csv', got {self.format!r}")
        if self.feature_count is not None and self.feature_count < 1:
            raise ValueError("feature_count must be positive")
        rule = self.label_rule
        if isinstance(rule, str) and not (rule == "identity" or rule.startswith("onevsrest:")):
            raise ValueError(f"unknown label rule {rule!r}")
        if isinstance(rule, dict) and any(float(v) not in (-1.0, 1.0) for v in rule.values()):
            raise ValueError("label mapping values must be +1 or -1")


def _map_label(raw: str, rule, where: str) -> float:
    raw = raw.strip()
    if isinstance(rule, dict):
        if raw in rule:
            return float(rule[raw])
        try:
            num = float(raw)
        except ValueError:
            num = None
        for k, v in rule.items():
            try:
                if num is not None and float(k) == num:
                    return float(v)
            except ValueError:
                continue
        raise DataFormatError(f"{where}: label {raw!r} is not covered by the label mapping")
    if rule == "identity":
        try:
            val = float(raw)
        except ValueError:
            raise DataFormatError(f"{where}: label {raw!r} is not numeric") from None
        if val not in (-1.0, 1.0):
            raise DataFormatError(f"{where}: label {raw!r} is not +1/-1 (use a label rule)")
        return val
    target = rule.split(":", 1)[1]
    if raw == target:
        return 1.0
    try:
        return 1.0 if float(raw) == float(target) else -1.0
    except ValueError:
        return -1.0


def _parse_libsvm(lines, rule, feature_count):
    rows, cols, vals, labels = [], [], [], []
    max_idx = 0
    r = 0
    for lineno, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        where = f"line {lineno}"
        parts = body.split()
        labels.append(_map_label(parts[0], rule, where))
        seen = set()
        for tok in parts[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise DataFormatError(f"{where}: malformed entry {tok!r} (expected idx:val)")
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise DataFormatError(f"{where}: malformed entry {tok!r}") from None
            if idx < 1:
                raise DataFormatError(f"{where}: feature index {idx} is below 1")
            if feature_count is not None and idx > feature_count:
                raise DataFormatError(
                    f"{where}: feature index {idx} exceeds feature_count={feature_count}")
            if idx in seen:
                raise DataFormatError(f"{where}: duplicate feature index {idx}")
            if not math.isfinite(val):
                raise DataFormatError(f"{where}: non-finite value {val_s!r}")
            seen.add(idx)
            max_idx = max(max_idx, idx)
            if val != 0.0:
                rows.append(r)
                cols.append(idx - 1)
                vals.append(val)
        r += 1
    if r == 0:
        raise DataFormatError("empty file: no data rows")
    n = feature_count if feature_count is not None else max_idx
    if n == 0:
        raise DataFormatError("no features found")
    A = sp.csc_matrix((vals, (rows, cols)), shape=(r, n))
    return A, np.asarray(labels)


def _parse_csv(text, rule, feature_count, label_column):
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError("empty file: no header") from None
    header = [h.strip() for h in header]
    if isinstance(label_column, str):
        if label_column not in header:
            raise DataFormatError(f"label column {label_column!r} not in header")
        lab = header.index(label_column)
    else:
        lab = label_column % len(header)
    feat_idx = [j for j in range(len(header)) if j != lab]
    if feature_count is not None and feature_count != len(feat_idx):
        raise DataFormatError(
            f"header has {len(feat_idx)} features but feature_count={feature_count}")
    X, labels = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        where = f"line {lineno}"
        if len(row) != len(header):
            raise DataFormatError(f"{where}: expected {len(header)} fields, found {len(row)}")
        try:
            X.append([float(row[j]) for j in feat_idx])
        except ValueError:
            raise DataFormatError(f"{where}: non-numeric feature value") from None
        labels.append(_map_label(row[lab], rule, where))
    if not X:
        raise DataFormatError("empty file: no data rows")
    X = np.asarray(X)
    if not np.all(np.isfinite(X)):
        raise DataFormatError("non-finite feature value")
    return sp.csc_matrix(X), np.asarray(labels)


def load_design(manifest: DatasetManifest | str | Path) -> SparseDesign:
    """Read a LibSVM (``label idx:val ...``, 1-based) or CSV (header row) file."""
    if not isinstance(manifest, DatasetManifest):
        p = Path(manifest)
        manifest = DatasetManifest(p, "csv" if p.suffix.lower() == ".csv" else "libsvm")
    path = _resolve(manifest.path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read dataset {path}: {exc}") from exc
    if manifest.format == "libsvm":
        A, b = _parse_libsvm(text.splitlines(), manifest.label_rule, manifest.feature_count)
    else:
        A, b = _parse_csv(text, manifest.label_rule, manifest.feature_count, manifest.label_column)
    empty = np.flatnonzero(np.diff(A.indptr) == 0)
    if empty.size:
        if not manifest.drop_empty_columns:
            raise DataFormatError(
                f"columns {(empty + 1).tolist()} are all zero (1-based); drop them or fix the data")
        keep = np.setdiff1d(np.arange(A.shape[1]), empty)
        if keep.size == 0:
            raise DataFormatError("every column is zero")
        A = A[:, keep]
    return SparseDesign(A, b)


def write_libsvm(design: SparseDesign, path, labels_as_int: bool = True) -> None:
    """Write ``design`` in LibSVM form with shortest round-trip floats."""
    A = design.A.tocsr()
    A.sort_indices()
    lines = []
    for j in range(A.shape[0]):
        lo, hi = A.indptr[j], A.indptr[j + 1]
        lab = design.b[j]
        lab_s = str(int(lab)) if labels_as_int and float(lab).is_integer() else repr(float(lab))
        ents = " ".join(f"{i + 1}:{float(v)!r}" for i, v in zip(A.indices[lo:hi], A.data[lo:hi]))
        lines.append(f"{lab_s} {ents}".rstrip())
    Path(path).write_text("\n".join(lines) + "\n")


def synth_lasso(n: int, m: int, density: float = 1.0, cond_hint: float = 1.0, seed: int = 0,
                noise: float = 0.01) -> tuple[SparseDesign, np.ndarray]:
    """Seeded sparse regression instance ``b = A x_planted + noise``.

    ``cond_hint >= 1`` spreads the column scales geometrically over
    ``[1, cond_hint]``, which roughly sets the conditioning of ``A^T A``.
    Every column is guaranteed at least one nonzero.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    if not (0.0 < density <= 1.0):
        raise ValueError("density must lie in (0, 1]")
    if cond_hint < 1.0:
        raise ValueError("cond_hint must be at least 1")
    rng = np.random.default_rng(seed)
    if density == 1.0:
        A = rng.standard_normal((m, n))
    else:
        mask = rng.random((m, n)) < density
        mask[rng.integers(m, size=n), np.arange(n)] = True
        A = np.where(mask, rng.standard_normal((m, n)), 0.0)
    scales = np.geomspace(1.0, 1.0 / math.sqrt(cond_hint), n) if n > 1 else np.ones(1)
    A = A * scales / math.sqrt(m)
    x = np.zeros(n)
    support = rng.choice(n, size=max(1, n // 4), replace=False)
    x[support] = rng.standard_normal(support.size)
    b = A @ x + noise * rng.standard_normal(m)
    return SparseDesign(sp.csc_matrix(A), b), x


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def _header(meta: dict) -> list[str]:
    return [f"# {k} = {v}" for k, v in meta.items()]


def write_trace(trace: RunTrace, path) -> None:
    """CSV with columns ``iter,epoch,F,gap,dist_v,restart`` and ``# key = value`` headers.

    ``gap`` and ``dist_v`` are left empty when no reference was known.
    """
    out = _header(trace.meta)
    out.append(",".join(TRACE_COLUMNS))
    for k, e, F, g, d, r in zip(trace.iters, trace.epochs, trace.F, trace.gap,
                                trace.dist_v, trace.restarted):
        out.append(f"{k},{_fmt(e)},{_fmt(F)},{_fmt(g)},{_fmt(d)},{int(r)}")
    Path(path).write_text("\n".join(out) + "\n")


def _split_header(text: str):
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, sep, val = line[1:].partition("=")
            if sep:
                meta[key.strip()] = val.strip()
        elif line.strip():
            body.append(line)
    return meta, body


def read_trace(path) -> RunTrace:
    meta, body = _split_header(Path(path).read_text())
    if not body or tuple(body[0].split(",")) != TRACE_COLUMNS:
        raise DataFormatError(f"{path}: missing trace header {','.join(TRACE_COLUMNS)}")
    t = RunTrace(meta=meta)
    for lineno, line in enumerate(body[1:], start=2):
        f = line.split(",")
        if len(f) != len(TRACE_COLUMNS):
            raise DataFormatError(f"{path}: bad trace row {lineno}")
        num = [math.nan if s == "" else float(s) for s in f[1:5]]
        t.append(int(f[0]), num[0], num[1], num[2], num[3], f[5].strip() == "1")
    return t


def write_reference(path, x_star, F_star: float, meta: dict | None = None) -> None:
    """One value per line after a ``# F_star = ...`` header and the producing config."""
    meta = dict(meta or {})
    lines = _header(meta) + [f"# F_star = {float(F_star)!r}", f"# n = {len(x_star)}"]
    lines += [repr(float(v)) for v in np.asarray(x_star, dtype=float)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_reference(path, n: int | None = None) -> tuple[np.ndarray, float]:
    meta, body = _split_header(Path(path).read_text())
    if "F_star" not in meta:
        raise DataFormatError(f"{path}: no F_star header")
    x = np.array([float(s) for s in body])
    if "n" in meta and int(meta["n"]) != x.size:
        raise DataFormatError(f"{path}: header says n={meta['n']} but {x.size} values follow")
    if n is not None and x.size != n:
        raise DataFormatError(f"{path}: reference has dimension {x.size}, problem has {n}")
    return x, float(meta["F_star"])
