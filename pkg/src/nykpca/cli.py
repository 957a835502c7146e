"""Command line entry point: ``nykpca {fit,sweep,bench,leverage,synth}``.

Every subcommand reads a JSON config (``--config``); ``--seed``, ``--out`` and
``--set key=json_value`` override entries of that file.

Exit codes: 0 success, 2 usage/config error, 3 data-format error,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .analysis import SpectrumSpec, generate_spectrum_dataset
from .exceptions import NykpcaError, UsageError
from .experiment import (
    ExperimentConfig,
    bench_scaling,
    load_dataset,
    run_to_files,
    spectrum_from_dict,
    write_bench,
)
from .io import save_model
from .kernels import KernelSpec, gram
from .kpca import EmpiricalKPCA, NystromKPCA, _kernel_params
from .sampling import approx_leverage_scores, approximation_factor, exact_leverage_scores

def _load_config(args, seed_key="seed", out_key="out"):
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        try:
            cfg[key] = json.loads(value)
        except json.JSONDecodeError:
            cfg[key] = value
    if args.seed is not None:
        cfg[seed_key] = args.seed
    if args.out is not None:
        cfg[out_key] = args.out
    return cfg


def _require(cfg, key):
    if key not in cfg:
        raise UsageError(f"config needs {key!r}")
    return cfg[key]


def cmd_fit(args):
    cfg = _load_config(args)
    seed = int(cfg.get("seed", 0))
    data = load_dataset(_require(cfg, "dataset"), seed)
    kparams = _kernel_params(KernelSpec.from_dict(cfg.get("kernel", {})))
    method = str(cfg.get("method", "NYSTROM")).upper()
    ell = int(cfg.get("n_components", 1))
    if method == "EKPCA":
        model = EmpiricalKPCA(ell, **kparams)
    elif method == "NYSTROM":
        sampling = cfg.get("sampling", {"scheme": "uniform"})
        model = NystromKPCA(ell, int(_require(cfg, "m")), sampling=sampling.get("scheme", "uniform"),
                            als_reg=sampling.get("s"), pilot_size=sampling.get("pilot_size"),
                            random_state=seed, **kparams)
    else:
        raise UsageError(f"method must be EKPCA or NYSTROM, got {method}")
    model.fit(data.X)
    if cfg.get("out"):
        save_model(model, cfg["out"])
    report = {
        "method": method,
        "n": len(data),
        "n_components": model.n_components_,
        "eigenvalues": model.eigenvalues_.tolist(),
        "reconstruction_error": model.reconstruction_error(),
        "fit_seconds": model.fit_time_,
    }
    print(json.dumps(report, indent=2))


def cmd_sweep(args):
    cfg = _load_config(args, seed_key="master_seed", out_key="output")
    config = ExperimentConfig.from_dict(cfg)
    _, summary = run_to_files(config)
    for rec in summary:
        print(f"{rec['method']:8s} m={rec['m_requested']:<6d} ell={rec['ell']:<5d} "
              f"error={rec['mean_error']:.6g} +/- {rec['std_error']:.2g}")


def cmd_bench(args):
    cfg = _load_config(args)
    spec = KernelSpec.from_dict(cfg.get("kernel", {"family": "gaussian", "sigma": 1.0}))
    spectrum = spectrum_from_dict(_require(cfg, "spectrum"))
    rows = bench_scaling(spec, spectrum, _require(cfg, "n_list"), int(_require(cfg, "m")),
                         int(cfg.get("seed", 0)), repeats=int(cfg.get("repeats", 3)),
                         include_ekpca=bool(cfg.get("include_ekpca", True)))
    if cfg.get("out"):
        write_bench(rows, cfg["out"])
    for r in rows:
        ek = "-" if r.ekpca_seconds is None else f"{r.ekpca_seconds:.4f}s"
        ratio = "" if r.nystrom_ratio is None else (
            f"  ratios nystrom={r.nystrom_ratio:.2f}"
            + ("" if r.ekpca_ratio is None else f" ekpca={r.ekpca_ratio:.2f}"))
        print(f"n={r.n:<7d} m={r.m:<5d} nystrom={r.nystrom_seconds:.4f}s ekpca={ek}{ratio}")


def cmd_leverage(args):
    cfg = _load_config(args)
    seed = int(cfg.get("seed", 0))
    data = load_dataset(_require(cfg, "dataset"), seed)
    spec = KernelSpec.from_dict(cfg.get("kernel", {}))
    s = float(_require(cfg, "s"))
    pilot = cfg.get("pilot_size")
    exact = None
    if pilot is None or cfg.get("compare_exact", False):
        exact = exact_leverage_scores(gram(spec, data.X), s)
    scores = exact if pilot is None else approx_leverage_scores(data.X, spec, s, int(pilot), seed)
    report = {"n": len(data), "s": s, "kind": "exact" if pilot is None else "approximate",
              "sum": float(scores.scores.sum()), "max": float(scores.scores.max())}
    if exact is not None and pilot is not None:
        report["approximation_factor"] = approximation_factor(exact, scores)
    if cfg.get("out"):
        with open(cfg["out"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "score"])
            for i, v in enumerate(scores.scores):
                w.writerow([i, repr(float(v))])
    print(json.dumps(report, indent=2))


def cmd_synth(args):
    cfg = _load_config(args)
    spectrum: SpectrumSpec = spectrum_from_dict(_require(cfg, "spectrum"))
    X = generate_spectrum_dataset(spectrum, int(_require(cfg, "n")), int(cfg.get("seed", 0)))
    out = _require(cfg, "out")
    np.savetxt(out, X, delimiter=",", fmt="%.17g")
    print(json.dumps({"n": X.shape[0], "dim": X.shape[1], "kappa": float(spectrum.eigenvalues().sum()),
                      "out": out}, indent=2))


COMMANDS = {
    "fit": (cmd_fit, "fit one EKPCA or Nystrom model and save it"),
    "sweep": (cmd_sweep, "run an m x ell x repetition sweep to CSV"),
    "bench": (cmd_bench, "time fits against sample size"),
    "leverage": (cmd_leverage, "exact or approximate leverage scores"),
    "synth": (cmd_synth, "write a synthetic dataset with a prescribed spectrum"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="nykpca", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="override the (master) seed")
        p.add_argument("--out", help="override the output path")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a top-level config entry (value parsed as JSON)")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    try:
        COMMANDS[args.command][0](args)
    except NykpcaError as exc:
        print(f"nykpca: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"nykpca: error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
