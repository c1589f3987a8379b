"""Command-line front end: simulate, detect, tune, evaluate.

Every run writes a ``manifest.json`` beside its outputs recording the
command, the fully resolved configuration, the seed, paths and wall-clock
time.  All floats in emitted JSON carry 17 significant digits.
"""

import argparse
import math
import os
import secrets
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__, _jsonio, _rng
from ._kernels import BACKEND
from .bench import (
    adjusted_rand_index,
    cp_series_rank,
    projection_alignment,
    segments_from_cps,
    simulate,
)
from .detect import detect_changepoints
from .errors import (
    ConfigError,
    DimensionError,
    InputError,
    IntervalError,
    NumericalError,
    ParseError,
    ShapeError,
    SpecsegError,
)
from .ingest import center_series, load_csv, normal_quantile_transform
from .tune import (
    DetectionConfig,
    build_tensor,
    default_config,
    load_config_file,
    resolve_config,
)

EXIT_OK = 0
EXIT_IO = 2
EXIT_PARSE = 3
EXIT_SHAPE = 4
EXIT_CONFIG = 5
EXIT_INTERVAL = 6
EXIT_NUMERICAL = 7
EXIT_INPUT = 8
EXIT_INTERNAL = 9

_ERROR_CODES = (
    (ParseError, EXIT_PARSE),
    (ShapeError, EXIT_SHAPE),
    (DimensionError, EXIT_SHAPE),
    (ConfigError, EXIT_CONFIG),
    (IntervalError, EXIT_INTERVAL),
    (NumericalError, EXIT_NUMERICAL),
    (InputError, EXIT_INPUT),
)


def _exit_code(exc):
    for cls, code in _ERROR_CODES:
        if isinstance(exc, cls):
            return code
    return EXIT_INTERNAL


def _int_or_auto(text):
    return "auto" if text.lower() == "auto" else int(text)


def _float_or_auto(text):
    return "auto" if text.lower() == "auto" else float(text)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="specseg",
        description="Spectral change point detection for multivariate time series.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic series with ground truth")
    sim.add_argument("--dgp", choices=["dgp1", "dgp2", "factor"], required=True)
    sim.add_argument("--n", type=int, required=True, help="series length N")
    sim.add_argument("--p", type=int, required=True, help="number of series")
    sim.add_argument("--k0", type=int, required=True, help="number of change series")
    sim.add_argument("--q", type=int, default=4, help="number of change points (dgp1/dgp2)")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out-dir", required=True)

    for name in ("detect", "tune"):
        cmd = sub.add_parser(name, help=f"{name} on a CSV of observations")
        cmd.add_argument("--input", required=True, help="CSV file of observations")
        cmd.add_argument("--orientation", choices=["rows", "columns"], default="columns",
                         help="whether series are file rows or file columns")
        cmd.add_argument("--config", default=None, help="key = value config file")
        cmd.add_argument("--block-length", type=int, default=None)
        cmd.add_argument("--sparsity", type=_int_or_auto, default=None,
                         help="projector sparsity budget, or 'auto'")
        cmd.add_argument("--intervals", type=int, default=None, help="random interval count J")
        cmd.add_argument("--threshold", type=_float_or_auto, default=None,
                         help="aggregation threshold, or 'auto'")
        cmd.add_argument("--quantile", type=float, default=None, help="bootstrap quantile")
        cmd.add_argument("--bootstrap-samples", type=int, default=None)
        cmd.add_argument("--no-split", action="store_true",
                         help="estimate projectors on the same frequency they score")
        cmd.add_argument("--normalize", action="store_true",
                         help="apply the per-series normal quantile transform")
        cmd.add_argument("--no-center", action="store_true",
                         help="skip per-series mean centering")
        cmd.add_argument("--nu2", type=int, default=None, help="split-point boundary trim")
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--threads", type=int, default=None)
        cmd.add_argument("--out-dir", required=True)

    ev = sub.add_parser("evaluate", help="score a detection report against ground truth")
    ev.add_argument("--report", required=True)
    ev.add_argument("--truth", required=True)
    ev.add_argument("--out-dir", required=True)
    return parser


def _require_file(path):
    if not os.path.isfile(path):
        raise OSError(f"input file not found: {path}")


def _flag_overrides(args):
    mapping = {
        "block_length": "L",
        "sparsity": "k",
        "intervals": "J",
        "threshold": "tau",
        "quantile": "bootstrap_quantile",
        "bootstrap_samples": "bootstrap_samples",
        "nu2": "nu2",
        "seed": "seed",
        "threads": "threads",
    }
    out = {}
    for attr, key in mapping.items():
        val = getattr(args, attr)
        if val is not None:
            out[key] = val
    if args.no_split:
        out["split"] = False
    if args.normalize:
        out["normalize"] = True
    if args.no_center:
        out["center"] = False
    return out


def _assemble_config(args, n_times, p):
    # Precedence: CLI flag > config file > defaults.
    cfg = default_config(n_times, p)
    overrides = {}
    if args.config:
        _require_file(args.config)
        overrides.update(load_config_file(args.config))
    overrides.update(_flag_overrides(args))
    if overrides:
        cfg = replace(cfg, **overrides)
    if cfg.seed is None:
        cfg = replace(cfg, seed=secrets.randbits(48))
    if cfg.threads is None:
        cfg = replace(cfg, threads=os.cpu_count())
    return cfg


def _prepare(args):
    _require_file(args.input)
    x = load_csv(args.input, orientation=args.orientation)
    cfg = _assemble_config(args, x.n_times, x.p)
    if x.n_times < 4 * cfg.L:
        raise ConfigError(
            f"need N >= 4*L for stable block spectra, got N={x.n_times}, L={cfg.L}"
        )
    if cfg.normalize:
        x = normal_quantile_transform(x)
    if cfg.center:
        x = center_series(x)
    dropped = x.n_times - (x.n_times // cfg.L) * cfg.L
    if dropped:
        print(f"note: dropping {dropped} trailing observations beyond the last full block",
              file=sys.stderr)
    tensor = build_tensor(x, cfg)
    resolved = resolve_config(x, tensor, cfg)
    return x, tensor, resolved


def _config_dict(cfg):
    return {
        "L": cfg.L, "k": cfg.k, "J": cfg.J, "tau": cfg.tau,
        "bootstrap_samples": cfg.bootstrap_samples,
        "bootstrap_quantile": cfg.bootstrap_quantile,
        "series_bootstrap_samples": cfg.series_bootstrap_samples,
        "nu1": cfg.nu1, "nu2": cfg.nu2, "split": cfg.split,
        "normalize": cfg.normalize, "center": cfg.center,
        "seed": cfg.seed, "threads": cfg.threads, "tol": cfg.tol,
        "max_outer": cfg.max_outer, "max_inner": cfg.max_inner,
    }


def _write_manifest(out_dir, command, argv, config, seed, inputs, outputs, t0):
    manifest = {
        "command": command,
        "argv": argv,
        "version": __version__,
        "backend": BACKEND,
        "seed": seed,
        "config": config,
        "inputs": inputs,
        "outputs": outputs,
        "started_unix": t0,
        "wall_seconds": time.time() - t0,
    }
    path = os.path.join(out_dir, "manifest.json")
    _jsonio.dump(manifest, path)
    return path


def _heatmap_rows(cp):
    rows = []
    for l in cp.active_freqs:
        weights = np.abs(cp.projections[l].values)
        rows.append([float(l)] + [float(w) for w in weights])
    return rows


def cmd_detect(args, argv):
    t0 = time.time()
    x, tensor, cfg = _prepare(args)
    report = detect_changepoints(tensor, cfg, n_times=x.n_times)
    os.makedirs(args.out_dir, exist_ok=True)
    report_path = os.path.join(args.out_dir, "report.json")
    _jsonio.dump(report.as_dict(), report_path)
    outputs = {"report": report_path, "heatmaps": []}
    for cp in report.change_points:
        path = os.path.join(args.out_dir, f"heatmap_cp_{cp.block_index:04d}.csv")
        header = "frequency_index," + ",".join(f"series_{i}" for i in range(report.p))
        np.savetxt(path, np.asarray(_heatmap_rows(cp)), delimiter=",",
                   header=header, comments="")
        outputs["heatmaps"].append(path)
    _write_manifest(args.out_dir, "detect", argv, _config_dict(cfg), cfg.seed,
                    {"input": args.input}, outputs, t0)
    print(f"detected {report.q_hat} change point(s) "
          f"[k={cfg.k}, tau={cfg.tau:.6g}, J={cfg.J}, B={report.n_blocks}]")
    for cp in report.change_points:
        print(f"  block {cp.block_index:4d}  time {cp.time_index:7d}  "
              f"statistic {cp.statistic:.6g}  active frequencies {len(cp.active_freqs)}")
    return EXIT_OK


def cmd_tune(args, argv):
    t0 = time.time()
    _, _, cfg = _prepare(args)
    os.makedirs(args.out_dir, exist_ok=True)
    _write_manifest(args.out_dir, "tune", argv, _config_dict(cfg), cfg.seed,
                    {"input": args.input}, {}, t0)
    print(f"k = {cfg.k}")
    print(f"tau = {cfg.tau:.17g}")
    return EXIT_OK


def cmd_simulate(args, argv):
    t0 = time.time()
    seed = args.seed if args.seed is not None else secrets.randbits(48)
    x, truth = simulate(args.dgp, args.n, args.p, args.k0, args.q, seed)
    os.makedirs(args.out_dir, exist_ok=True)
    series_path = os.path.join(args.out_dir, "series.csv")
    np.savetxt(series_path, x.values.T, delimiter=",")  # columns are series
    truth_path = os.path.join(args.out_dir, "truth.json")
    _jsonio.dump(truth.as_dict(), truth_path)
    _write_manifest(args.out_dir, "simulate", argv,
                    {"dgp": args.dgp, "N": args.n, "p": args.p,
                     "k0": args.k0, "Q": args.q},
                    seed, {}, {"series": series_path, "truth": truth_path}, t0)
    print(f"wrote {series_path} ({args.p} series, {args.n} times, seed {seed})")
    return EXIT_OK


def _evaluate_metrics(report, truth):
    n = report.get("n_times")
    if n != truth.get("N"):
        raise InputError(
            f"report n_times={n} does not match truth N={truth.get('N')}"
        )
    est_times = sorted(cp["time_index"] for cp in report["change_points"])
    true_times = sorted(truth["cp_times"])
    labels_est = segments_from_cps(est_times, n)
    labels_true = segments_from_cps(true_times, n)
    metrics = {
        "q_true": len(true_times),
        "q_hat": len(est_times),
        "q_match": len(true_times) == len(est_times),
        "ari": adjusted_rand_index(labels_est, labels_true),
    }
    b = report.get("n_blocks")
    true_blocks = [int(math.ceil(v * b)) for v in truth["cp_fractions"]]
    est_blocks = sorted(cp["block_index"] for cp in report["change_points"])
    metrics["true_blocks"] = true_blocks
    metrics["estimated_blocks"] = est_blocks
    if metrics["q_match"] and est_blocks:
        errors = [abs(a - t) for a, t in zip(est_blocks, true_blocks)]
        metrics["block_errors"] = errors
        metrics["max_block_error"] = max(errors)
    if "gamma" in truth:
        gamma_true = np.asarray(truth["gamma"], dtype=np.float64)
        true_series = [int(i) for i in truth["cp_series"]]
        aligns, ranks = [], []
        for cp in report["change_points"]:
            for freq in cp["active_frequencies"]:
                proj = np.zeros(report["p"])
                for i, w in freq["projection"]:
                    proj[int(i)] = w
                aligns.append(projection_alignment(gamma_true, proj))
                if true_series:
                    ranks.append(cp_series_rank(proj, true_series))
        if aligns:
            metrics["mean_alignment"] = float(np.mean(aligns))
        if ranks:
            metrics["mean_cp_series_rank"] = float(np.mean(ranks))
    return metrics


def cmd_evaluate(args, argv):
    t0 = time.time()
    _require_file(args.report)
    _require_file(args.truth)
    report = _jsonio.load(args.report)
    truth = _jsonio.load(args.truth)
    metrics = _evaluate_metrics(report, truth)
    os.makedirs(args.out_dir, exist_ok=True)
    metrics_path = os.path.join(args.out_dir, "metrics.json")
    _jsonio.dump(metrics, metrics_path)
    _write_manifest(args.out_dir, "evaluate", argv, {}, None,
                    {"report": args.report, "truth": args.truth},
                    {"metrics": metrics_path}, t0)
    print(f"q_hat = {metrics['q_hat']} (true {metrics['q_true']}), "
          f"ARI = {metrics['ari']:.4f}")
    return EXIT_OK


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": cmd_simulate,
        "detect": cmd_detect,
        "tune": cmd_tune,
        "evaluate": cmd_evaluate,
    }
    try:
        return handlers[args.command](args, argv)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SpecsegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
