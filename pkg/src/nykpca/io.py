"""Dataset loaders (CSV, MNIST IDX) and model persistence."""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import DataFormatError, UsageError
from .kernels import KernelSpec
from .kpca import EmpiricalKPCA, NystromKPCA
from .sampling import LandmarkSet

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise UsageError(f"X must be 2-D, got shape {X.shape}")
        object.__setattr__(self, "X", X)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.shape != (X.shape[0],):
                raise UsageError(f"{labels.shape[0]} labels for {X.shape[0]} rows")
            object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.X.shape[0]


def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path) -> Dataset:
    """Read a comma-separated numeric table.

    A first row containing any non-numeric cell is taken as a header.
    """
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if lineno == 1 and not all(_is_number(c) for c in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataFormatError(f"{path}: line {lineno}: expected {width} columns, got {len(row)}")
            try:
                values = [float(c) for c in row]
            except ValueError:
                raise DataFormatError(f"{path}: line {lineno}: non-numeric cell") from None
            if not all(np.isfinite(values)):
                raise DataFormatError(f"{path}: line {lineno}: non-finite value")
            rows.append(values)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return Dataset(np.array(rows, dtype=np.float64))


def _read_header(buf, count, path):
    size = 4 * count
    if len(buf) < size:
        raise DataFormatError(f"{path}: truncated header at offset {len(buf)} (need {size} bytes)")
    return struct.unpack(f">{count}I", buf[:size])


def load_idx_images(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    magic, = _read_header(buf, 1, path)
    if magic != IDX_IMAGES_MAGIC:
        raise DataFormatError(f"{path}: bad magic 0x{magic:08x} at offset 0, expected 0x{IDX_IMAGES_MAGIC:08x}")
    _, n, rows, cols = _read_header(buf, 4, path)
    need = 16 + n * rows * cols
    if len(buf) < need:
        raise DataFormatError(f"{path}: truncated payload: {len(buf)} bytes, expected {need} (offset {len(buf)})")
    pixels = np.frombuffer(buf, dtype=np.uint8, count=n * rows * cols, offset=16)
    return pixels.reshape(n, rows * cols).astype(np.float64)


def load_idx_labels(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    magic, = _read_header(buf, 1, path)
    if magic != IDX_LABELS_MAGIC:
        raise DataFormatError(f"{path}: bad magic 0x{magic:08x} at offset 0, expected 0x{IDX_LABELS_MAGIC:08x}")
    _, n = _read_header(buf, 2, path)
    if len(buf) < 8 + n:
        raise DataFormatError(f"{path}: truncated payload: {len(buf)} bytes, expected {8 + n} (offset {len(buf)})")
    return np.frombuffer(buf, dtype=np.uint8, count=n, offset=8).astype(np.int64)


def load_idx(images_path, labels_path=None) -> Dataset:
    """MNIST-style IDX images (flattened row-major) with optional labels."""
    X = load_idx_images(images_path)
    labels = None
    if labels_path is not None:
        labels = load_idx_labels(labels_path)
        if labels.shape[0] != X.shape[0]:
            raise DataFormatError(
                f"count mismatch: {X.shape[0]} images (offset 4 of {images_path}) "
                f"vs {labels.shape[0]} labels (offset 4 of {labels_path})"
            )
    return Dataset(X, labels)


def filter_digit(data: Dataset, digit) -> Dataset:
    if data.labels is None:
        raise UsageError("dataset has no labels to filter on")
    keep = data.labels == int(digit)
    return Dataset(data.X[keep], data.labels[keep])


# --- model persistence -------------------------------------------------------

FORMAT_VERSION = 1


def save_model(model, path):
    """Write a fitted estimator to an ``.npz`` container.

    Arrays are stored in binary, so every float round-trips exactly; the
    estimator parameters and provenance go into a JSON ``meta`` entry.
    """
    if isinstance(model, EmpiricalKPCA):
        kind = "ekpca"
        arrays = {"expansion_points": model.X_fit_}
        extra = {}
    elif isinstance(model, NystromKPCA):
        kind = "nystrom"
        ls = model.landmark_set_
        arrays = {"expansion_points": model.landmarks_, "landmark_indices": ls.indices}
        extra = {
            "scheme": ls.scheme.value,
            "landmark_seed": ls.seed,
            "landmark_rank": model.landmark_rank_,
            "n_samples_fit": model.n_samples_fit_,
        }
    else:
        raise UsageError(f"cannot save {type(model).__name__}")
    meta = {
        "format": "nykpca-model",
        "version": FORMAT_VERSION,
        "kind": kind,
        "params": model.get_params(),
        "kernel": model.kernel_spec().to_dict(),
        "n_components": model.n_components_,
        "effective_rank": model.effective_rank_,
        "trace_over_n": model.trace_over_n_,
        "fit_time": model.fit_time_,
        "floor_relative": 1e-12,
        **extra,
    }
    arrays.update(
        eigenvalues=model.eigenvalues_,
        all_eigenvalues=model.all_eigenvalues_,
        dual_coef=model.dual_coef_,
        meta=np.array(json.dumps(meta, sort_keys=True)),
    )
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_model(path):
    with np.load(path, allow_pickle=False) as f:
        data = {k: f[k] for k in f.files}
    try:
        meta = json.loads(str(data.pop("meta")))
    except (KeyError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"{path}: missing or corrupt metadata") from exc
    if meta.get("format") != "nykpca-model":
        raise DataFormatError(f"{path}: not a model file")
    KernelSpec.from_dict(meta["kernel"])
    if meta["kind"] == "ekpca":
        model = EmpiricalKPCA(**meta["params"])
        model.X_fit_ = data["expansion_points"]
    else:
        model = NystromKPCA(**meta["params"])
        model.landmarks_ = data["expansion_points"]
        model.landmark_set_ = LandmarkSet(data["landmark_indices"], meta["scheme"], meta["landmark_seed"])
        model.m_distinct_ = model.landmarks_.shape[0]
        model.landmark_rank_ = meta["landmark_rank"]
        model.n_samples_fit_ = meta["n_samples_fit"]
    model.eigenvalues_ = data["eigenvalues"]
    model.all_eigenvalues_ = data["all_eigenvalues"]
    model.dual_coef_ = data["dual_coef"]
    model.n_components_ = meta["n_components"]
    model.effective_rank_ = meta["effective_rank"]
    model.trace_over_n_ = meta["trace_over_n"]
    model.fit_time_ = meta["fit_time"]
    model.n_features_in_ = data["expansion_points"].shape[1]
    return model
