"""Experiment orchestration: sweeps over landmark counts and component counts,
scaling benchmarks, and the results file format."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import SpectrumSpec, generate_spectrum_dataset
from .exceptions import NykpcaError, UsageError
from .io import Dataset, filter_digit, load_csv, load_idx
from .kernels import KernelSpec
from .kpca import EmpiricalKPCA, NystromKPCA, _kernel_params
from .sampling import Scheme, derive_seed

METHODS = ("EKPCA", "NYSTROM")


@dataclass
class ExperimentConfig:
    """Everything that determines a sweep.

    ``dataset`` is one of::

        {"type": "csv", "path": ...}
        {"type": "idx", "images": ..., "labels": ..., "digit": 5}
        {"type": "synthetic", "decay": "polynomial", "rate": 2.0, "scale": 1.0,
         "dim": 2000, "tail_tol": 1e-3, "n": 1000, "seed": 0}

    ``sampling`` is ``{"scheme": "uniform"}`` or
    ``{"scheme": "als", "s": 1e-3, "pilot_size": 200}``.
    """

    dataset: dict
    kernel: dict = field(default_factory=lambda: {"family": "gaussian", "sigma": 1.0})
    methods: list = field(default_factory=lambda: ["NYSTROM"])
    sampling: dict = field(default_factory=lambda: {"scheme": "uniform"})
    m_list: list = field(default_factory=lambda: [100])
    ell_list: list = field(default_factory=lambda: [1])
    repetitions: int = 1
    master_seed: int = 0
    output: str | None = None
    record_timing: bool = True

    def __post_init__(self):
        if isinstance(self.methods, str):
            self.methods = [self.methods]
        self.methods = [str(m).upper() for m in self.methods]
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise UsageError(f"methods must be drawn from {METHODS}, got {self.methods}")
        self.m_list = sorted(int(m) for m in self.m_list)
        self.ell_list = sorted(int(e) for e in self.ell_list)
        if self.repetitions < 1:
            raise UsageError(f"repetitions must be >= 1, got {self.repetitions}")
        if not self.ell_list or self.ell_list[0] < 0:
            raise UsageError("ell_list must be nonempty and nonnegative")
        if "NYSTROM" in self.methods:
            if not self.m_list or self.m_list[0] < 1:
                raise UsageError("m_list must be nonempty and positive")
            if self.ell_list[-1] > self.m_list[0]:
                raise UsageError(
                    f"every ell must be <= min(m_list) = {self.m_list[0]}, got {self.ell_list[-1]}"
                )
        scheme = Scheme(self.sampling.get("scheme", "uniform"))
        if scheme is Scheme.ALS and "s" not in self.sampling:
            raise UsageError("ALS sampling requires 's'")
        if self.master_seed < 0:
            raise UsageError("master_seed must be unsigned")
        self.kernel_spec = KernelSpec.from_dict(self.kernel)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        if "dataset" not in d:
            raise UsageError("config needs a 'dataset' entry")
        return cls(**d)

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def load_dataset(source: dict, default_seed=0) -> Dataset:
    kind = source.get("type")
    if kind == "csv":
        return load_csv(source["path"])
    if kind == "idx":
        data = load_idx(source["images"], source.get("labels"))
        if source.get("digit") is not None:
            data = filter_digit(data, source["digit"])
        if len(data) == 0:
            raise UsageError(f"no rows left after filtering for digit {source.get('digit')}")
        return data
    if kind == "synthetic":
        spec = spectrum_from_dict(source)
        if "n" not in source:
            raise UsageError("synthetic dataset needs 'n'")
        return Dataset(generate_spectrum_dataset(spec, source["n"], source.get("seed", default_seed)))
    raise UsageError(f"unknown dataset type {kind!r}; expected csv, idx or synthetic")


def spectrum_from_dict(d) -> SpectrumSpec:
    kw = {k: d[k] for k in ("scale", "dim", "tail_tol") if k in d}
    try:
        return SpectrumSpec(d["decay"], d["rate"], **kw)
    except KeyError as exc:
        raise UsageError(f"spectrum needs {exc.args[0]!r}") from None


@dataclass
class ResultRow:
    method: str
    scheme: str
    n: int
    m_requested: int
    m_distinct: int
    ell: int
    repetition: int
    seed: int
    reconstruction_error: float
    wall_time_fit_seconds: float
    wall_time_total_seconds: float
    error: str = ""


RESULT_COLUMNS = [f.name for f in fields(ResultRow)]
_INT_COLUMNS = {"n", "m_requested", "m_distinct", "ell", "repetition", "seed"}
_FLOAT_COLUMNS = {"reconstruction_error", "wall_time_fit_seconds", "wall_time_total_seconds"}


def _failed_rows(method, scheme, n, m, ell_list, rep, seed, exc, total):
    for ell in ell_list:
        yield ResultRow(method, scheme, n, m, 0, ell, rep, seed, math.nan, 0.0, total,
                        f"{type(exc).__name__}: {exc}")


def run_experiment(config: ExperimentConfig, data: Dataset | None = None):
    """Yield result rows in canonical order.

    EKPCA (if requested) is fitted once and evaluated at every ell. For
    Nystrom, each (m, repetition) pair draws landmarks with sub-seed
    ``derive_seed(master_seed, m, repetition)``, fits once, and evaluates
    every ell from the stored spectrum. Fit failures become rows with a NaN
    error and a message; the sweep carries on.
    """
    if data is None:
        data = load_dataset(config.dataset, config.master_seed)
    X = data.X
    n = X.shape[0]
    kparams = _kernel_params(config.kernel_spec)
    clock = time.perf_counter if config.record_timing else (lambda: 0.0)

    if "EKPCA" in config.methods:
        start = clock()
        try:
            model = EmpiricalKPCA(n_components=0, **kparams).fit(X)
            errors = [model.reconstruction_error(ell) for ell in config.ell_list]
        except NykpcaError as exc:
            yield from _failed_rows("EKPCA", "none", n, n, config.ell_list, 0,
                                    config.master_seed, exc, clock() - start)
        else:
            fit_t = model.fit_time_ if config.record_timing else 0.0
            total = clock() - start
            for ell, err in zip(config.ell_list, errors):
                yield ResultRow("EKPCA", "none", n, n, n, ell, 0, config.master_seed, err, fit_t, total)

    if "NYSTROM" not in config.methods:
        return
    scheme = Scheme(config.sampling.get("scheme", "uniform"))
    for m in config.m_list:
        for rep in range(config.repetitions):
            seed = derive_seed(config.master_seed, m, rep)
            est = NystromKPCA(
                n_components=0, n_landmarks=m, sampling=scheme.value,
                als_reg=config.sampling.get("s"), pilot_size=config.sampling.get("pilot_size"),
                random_state=seed, **kparams,
            )
            start = clock()
            try:
                est.fit(X)
                errors = [est.reconstruction_error(ell) for ell in config.ell_list]
            except NykpcaError as exc:
                yield from _failed_rows("NYSTROM", scheme.value, n, m, config.ell_list, rep,
                                        seed, exc, clock() - start)
                continue
            fit_t = est.fit_time_ if config.record_timing else 0.0
            total = clock() - start
            for ell, err in zip(config.ell_list, errors):
                yield ResultRow("NYSTROM", scheme.value, n, m, est.m_distinct_, ell, rep, seed,
                                err, fit_t, total)


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


class ResultWriter:
    """Serialized, incrementally flushed CSV writer for result rows."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = open(self.path, "w", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(RESULT_COLUMNS)

    def write(self, row: ResultRow):
        self._writer.writerow([_fmt(getattr(row, c)) for c in RESULT_COLUMNS])
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_results(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RESULT_COLUMNS:
            raise UsageError(f"{path}: unexpected header {reader.fieldnames}")
        rows = []
        for rec in reader:
            kw = {}
            for k, v in rec.items():
                if k in _INT_COLUMNS:
                    kw[k] = int(v)
                elif k in _FLOAT_COLUMNS:
                    kw[k] = float(v)
                else:
                    kw[k] = v
            rows.append(ResultRow(**kw))
    return rows


def summarize(rows):
    """Mean and sample standard deviation of the error per (method, m, ell)."""
    groups = {}
    for r in rows:
        if r.error:
            continue
        groups.setdefault((r.method, r.m_requested, r.ell), []).append(r)
    out = []
    for (method, m, ell), rs in sorted(groups.items()):
        errs = np.array([r.reconstruction_error for r in rs])
        out.append({
            "method": method,
            "m_requested": m,
            "ell": ell,
            "count": len(rs),
            "mean_error": float(errs.mean()),
            "std_error": float(errs.std(ddof=1)) if len(errs) > 1 else 0.0,
            "mean_fit_seconds": float(np.mean([r.wall_time_fit_seconds for r in rs])),
        })
    return out


def sidecar_paths(output):
    out = Path(output)
    return out.with_name(out.stem + ".meta.json"), out.with_name(out.stem + ".summary.csv")


def run_to_files(config: ExperimentConfig, data: Dataset | None = None):
    """Run a sweep, writing the rows CSV plus ``.meta.json`` and ``.summary.csv``."""
    if not config.output:
        raise UsageError("no output path configured")
    meta_path, summary_path = sidecar_paths(config.output)
    rows = []
    with ResultWriter(config.output) as writer:
        for row in run_experiment(config, data):
            writer.write(row)
            rows.append(row)
    summary = summarize(rows)
    with open(summary_path, "w", newline="") as fh:
        cols = ["method", "m_requested", "ell", "count", "mean_error", "std_error", "mean_fit_seconds"]
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for rec in summary:
            w.writerow([_fmt(rec[c]) for c in cols])
    with open(meta_path, "w") as fh:
        json.dump({"library": "nykpca", "version": __version__, "config": config.to_dict()},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    return rows, summary


# --- scaling benchmark --------------------------------------------------------

@dataclass
class BenchRow:
    n: int
    m: int
    nystrom_seconds: float
    ekpca_seconds: float | None
    nystrom_ratio: float | None = None
    ekpca_ratio: float | None = None


def bench_scaling(spec: KernelSpec, spectrum: SpectrumSpec, n_list, m, seed, *,
                  repeats=3, include_ekpca=True):
    """Fit time (Gram assembly + eigensolve, best of ``repeats``) against n.

    Datasets are nested prefixes of one synthetic draw of size ``max(n_list)``;
    landmarks are drawn with ``seed``. Ratios compare consecutive entries.
    One untimed fit at the smallest size runs first so allocator and cache
    warm-up do not land on the first measurement.
    """
    n_list = [int(v) for v in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise UsageError("n_list must be strictly increasing")
    X_all = generate_spectrum_dataset(spectrum, n_list[-1], seed)
    kparams = _kernel_params(spec)
    NystromKPCA(0, m, random_state=seed, **kparams).fit(X_all[:n_list[0]])
    rows = []
    for n in n_list:
        X = X_all[:n]
        nys = min(NystromKPCA(0, m, random_state=seed, **kparams).fit(X).fit_time_
                  for _ in range(repeats))
        ek = None
        if include_ekpca:
            ek = min(EmpiricalKPCA(0, **kparams).fit(X).fit_time_ for _ in range(repeats))
        row = BenchRow(n, m, nys, ek)
        if rows:
            prev = rows[-1]
            row.nystrom_ratio = nys / prev.nystrom_seconds
            if ek is not None:
                row.ekpca_ratio = ek / prev.ekpca_seconds
        rows.append(row)
    return rows


def write_bench(rows, path):
    cols = [f.name for f in fields(BenchRow)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow(["" if v is None else _fmt(v) for v in asdict(r).values()])
