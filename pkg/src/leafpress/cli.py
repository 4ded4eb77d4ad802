"""Command line front end.

Exit codes: 0 success or all checks pass, 1 estimator/model error,
2 a verification check failed, 3 config error.
"""
from __future__ import annotations

import argparse
import ast
import csv
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from .config import ExperimentConfig, expand_sweep, load_config
from .dynamics import build_linear_model, read_model_matrix
from .errors import ConfigError, LeafpressError
from .estimators import (
    PressureEstimate,
    bowen_metric_pressure,
    capacity_pressure,
    entropy_brinkatok,
    entropy_partition,
    spanning_pressure,
)
from .leafgeom import build_partition
from .potentials import lyapunov_exponent
from .verify import CHECKS, model_from_config, patch_from_config, potential_from_config, run_checks

EXIT_OK, EXIT_ESTIMATOR, EXIT_VERIFY, EXIT_CONFIG = 0, 1, 2, 3
CSV_COLUMNS = ["kind", "n", "eps", "gamma", "raw", "slope", "value", "seed"]
PRESSURE_KINDS = ("spanning", "bowen", "capacity")
ENTROPY_METHODS = ("partition", "brinkatok", "both")


def _fit_slope(est: PressureEstimate, row: dict):
    for f in est.diagnostics.get("fits", []):
        if f.get("eps") == row.get("eps") and f.get("gamma") == row.get("gamma"):
            return f["slope"]
    return None


def estimate_rows(est: PressureEstimate, seed: int) -> list[dict]:
    rows = []
    for r in est.grid:
        rows.append(
            {
                "kind": est.kind,
                "n": r.get("n"),
                "eps": r.get("eps"),
                "gamma": r.get("gamma"),
                "raw": r.get("raw"),
                "slope": _fit_slope(est, r),
                "value": est.value,
                "seed": seed,
            }
        )
    return rows


def _csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: "" if r.get(k) is None else (repr(r[k]) if isinstance(r[k], float) else r[k]) for k in CSV_COLUMNS})
    return buf.getvalue()


def write_outputs(cfg: ExperimentConfig, command: str, results: list[dict], rows: list[dict], report: str, meta: dict) -> Path:
    """Write <name>.json, <name>.csv, <name>.report.txt and a <name>.meta.json sidecar."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = out / cfg.name
    doc = {"command": command, "config": cfg.resolved(), "results": results}
    Path(f"{stem}.json").write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")
    Path(f"{stem}.csv").write_text(_csv_text(rows))
    Path(f"{stem}.report.txt").write_text(report.rstrip() + "\n")
    Path(f"{stem}.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return stem


def _json_default(o):
    import numpy as np

    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _config_header(cfg: ExperimentConfig) -> str:
    return "\n".join(f"# {k} = {v}" for k, v in cfg.resolved().items())


def _estimate_report(cfg, ests) -> str:
    lines = [_config_header(cfg), ""]
    for e in ests:
        lines.append(f"{e.kind:<20} {e.value: .9f}")
        for f in e.diagnostics.get("fits", []):
            lines.append(f"    eps={f.get('eps')} gamma={f.get('gamma')} slope={f['slope']:.6f} residual={f['residual']:.2e}")
    return "\n".join(lines)


# subcommand bodies; each returns (results, rows, report text, exit code)


def run_lyapunov(cfg: ExperimentConfig):
    model = model_from_config(cfg)
    pot = potential_from_config(cfg, model)
    est = lyapunov_exponent(pot, model, cfg.sampler, cfg.lyapunov_n, cfg.lyapunov_samples, cfg.seed)
    rows = [
        {"kind": "lyapunov", "n": n, "eps": None, "gamma": None, "raw": v, "slope": None, "value": est.value, "seed": cfg.seed}
        for n, v in est.sequence.items()
    ]
    report = _config_header(cfg) + f"\n\nlyapunov {est.value:.9f} (n={est.n_used}, spread={est.spread:.3e})"
    return [est.to_dict()], rows, report, EXIT_OK


def run_entropy(cfg: ExperimentConfig, method: str = "both"):
    model = model_from_config(cfg)
    patch = patch_from_config(cfg, model)
    ests = []
    if method in ("partition", "both"):
        ests.append(entropy_partition(model, patch, build_partition(cfg.partition_side, model.dim), cfg.n_window))
    if method in ("brinkatok", "both"):
        ests.append(entropy_brinkatok(model, patch, cfg.n_window, cfg.eps_ladder))
    rows = [r for e in ests for r in estimate_rows(e, cfg.seed)]
    return [e.to_dict() for e in ests], rows, _estimate_report(cfg, ests), EXIT_OK


def run_pressure(cfg: ExperimentConfig, kind: str | None = None):
    kind = kind or cfg.pressure_kind
    if kind not in PRESSURE_KINDS:
        raise ConfigError(f"unknown pressure kind {kind!r}; available: {', '.join(PRESSURE_KINDS)}")
    model = model_from_config(cfg)
    pot = potential_from_config(cfg, model)
    patch = patch_from_config(cfg, model)
    eps, gamma, ns = min(cfg.eps_ladder), min(cfg.gamma_ladder), sorted(cfg.n_window)
    if kind == "spanning":
        ests = [spanning_pressure(model, patch, pot, ns, cfg.eps_ladder, cfg.gamma_ladder, cfg.strategy)]
    elif kind == "bowen":
        ests = [bowen_metric_pressure(model, patch, pot, eps, gamma, ns[0], ns[-1], cfg.strategy, cfg.bowen_tol)]
    else:
        ests = list(capacity_pressure(model, patch, pot, eps, ns, gamma, cfg.strategy))
    rows = [r for e in ests for r in estimate_rows(e, cfg.seed)]
    return [e.to_dict() for e in ests], rows, _estimate_report(cfg, ests), EXIT_OK


def run_verify(cfg: ExperimentConfig, checks):
    reports = run_checks(checks, cfg)
    rows = []
    for rep in reports:
        for k, v in rep.quantities.items():
            rows.append({"kind": f"{rep.check}:{k}", "value": v, "seed": cfg.seed})
    text = _config_header(cfg) + "\n\n" + "\n\n".join(r.text() for r in reports)
    code = EXIT_OK if all(r.verdict in ("pass", "inapplicable") for r in reports) else EXIT_VERIFY
    return [r.to_dict() for r in reports], rows, text, code


def _dispatch(command: str, cfg: ExperimentConfig, opts: dict):
    if command == "lyapunov":
        return run_lyapunov(cfg)
    if command == "entropy":
        return run_entropy(cfg, opts.get("method", "both"))
    if command == "pressure":
        return run_pressure(cfg, opts.get("kind"))
    if command == "verify":
        return run_verify(cfg, opts.get("checks", CHECKS))
    raise ConfigError(f"unknown command {command!r}")


def execute(command: str, cfg: ExperimentConfig, opts: dict, argv=None) -> int:
    """Run one config and write its outputs; return the exit code."""
    t0 = time.perf_counter()
    results, rows, report, code = _dispatch(command, cfg, opts)
    meta = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "runtime_seconds": time.perf_counter() - t0,
        "argv": list(argv or []),
    }
    stem = write_outputs(cfg, command, results, rows, report, meta)
    print(report)
    print(f"wrote {stem}.json, {stem}.csv, {stem}.report.txt")
    return code


def _sweep_entry(args):
    command, cfg, opts = args
    try:
        return cfg.name, execute(command, cfg, opts)
    except ConfigError as e:
        print(f"{cfg.name}: config error: {e}", file=sys.stderr)
        return cfg.name, EXIT_CONFIG
    except (LeafpressError, ValueError) as e:
        print(f"{cfg.name}: {type(e).__name__}: {e}", file=sys.stderr)
        return cfg.name, EXIT_ESTIMATOR


def _model_info(args) -> int:
    if args.matrix:
        try:
            matrix = ast.literal_eval(args.matrix)
        except (ValueError, SyntaxError):
            raise ConfigError(f"cannot parse matrix {args.matrix!r}") from None
    elif args.model:
        try:
            matrix = read_model_matrix(Path(args.model).read_text())
        except (OSError, ValueError) as e:
            raise ConfigError(str(e)) from None
    elif args.config:
        matrix = load_config(args.config).matrix
    else:
        raise ConfigError("model-info needs --matrix, --model or --config")
    model = build_linear_model(matrix)
    print(json.dumps(model.describe(), indent=2))
    return EXIT_OK


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "out_dir", None):
        cfg = replace(cfg, output_dir=args.out_dir)
    if getattr(args, "name", None):
        cfg = replace(cfg, name=args.name)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="leafpress", description="Unstable pressure and entropy estimates for linear toral models.")
    sub = p.add_subparsers(dest="command", required=True)

    mi = sub.add_parser("model-info", help="print the splitting and eigenvalue moduli")
    mi.add_argument("--matrix", help='integer matrix literal, e.g. "[[2,1],[1,1]]"')
    mi.add_argument("--model", help="model description file")
    mi.add_argument("--config", help="experiment config")

    def common(sp):
        sp.add_argument("--config", required=True, help="experiment config file")
        sp.add_argument("--out-dir", help="override output_dir")
        sp.add_argument("--name", help="override the output name")

    common(sub.add_parser("lyapunov", help="Lyapunov exponent of the configured potential"))
    en = sub.add_parser("entropy", help="unstable entropy estimates")
    common(en)
    en.add_argument("--method", choices=ENTROPY_METHODS, default="both")
    pr = sub.add_parser("pressure", help="one pressure estimator")
    common(pr)
    pr.add_argument("--kind", choices=PRESSURE_KINDS, help="defaults to pressure_kind in the config")
    ve = sub.add_parser("verify", help="run identity checks")
    common(ve)
    ve.add_argument("--checks", default=",".join(CHECKS[:2]), help=f"comma list from: {', '.join(CHECKS)}")
    sw = sub.add_parser("sweep", help="run a command over the config's sweep_* grid")
    common(sw)
    sw.add_argument("--command", dest="sweep_command", choices=("lyapunov", "entropy", "pressure", "verify"), default="pressure")
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--checks", default=",".join(CHECKS[:2]))
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    try:
        if args.command == "model-info":
            return _model_info(args)
        cfg = _apply_overrides(load_config(args.config), args)
        opts = {}
        if getattr(args, "method", None):
            opts["method"] = args.method
        if getattr(args, "kind", None):
            opts["kind"] = args.kind
        if getattr(args, "checks", None):
            opts["checks"] = [c.strip() for c in args.checks.split(",") if c.strip()]
            bad = [c for c in opts["checks"] if c not in CHECKS]
            if bad:
                raise ConfigError(f"unknown checks {bad}; available: {', '.join(CHECKS)}")
        if args.command == "sweep":
            if args.jobs < 1:
                raise ConfigError("--jobs must be >= 1")
            entries = [(args.sweep_command, c, opts) for c in expand_sweep(cfg)]
            if args.jobs == 1:
                codes = [_sweep_entry(e) for e in entries]
            else:
                with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                    codes = list(pool.map(_sweep_entry, entries))
            return max(code for _, code in codes)
        return execute(args.command, cfg, opts, argv)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (LeafpressError, ValueError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ESTIMATOR


def run(argv) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
