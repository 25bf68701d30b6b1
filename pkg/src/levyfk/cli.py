"""Command-line entry point ``levyfk``.

Subcommands ``fk``, ``pide``, ``variational`` and ``asymptotics`` run one
configured experiment; ``verify`` executes the acceptance suite; ``report``
merges CSV artifacts. Exit codes: 0 success, 1 failed verification or other
error, 2 configuration error, 3 solver failure, 4 under-resolved grid.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .asymptotics import (
    drift_prediction_config,
    drift_prediction_momentum,
    hbar_sweep,
    prefactor_F,
    prefactor_mc,
)
from .config import RunConfig, load_config
from .errors import ConfigError, LevyFKError, ResolutionError, SolverError
from .fk_engine import MCParams, drift_estimate, fk_estimate_many
from .levy_core import TwoPoint, model_to_dict
from .pide import solve_pide, solve_pide_scaled
from .variational import Lagrangian, probe_local_minimality, solve_el_config, solve_el_jump, solve_el_momentum

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER, EXIT_RESOLUTION = 0, 1, 2, 3, 4

FK_HEADER = ["model_hash", "t", "p", "hbar", "mean", "stderr", "n_paths", "dt", "seed"]


@dataclass
class Artifact:
    """Tabular result of one run plus a summary record and an optional slab."""

    method: str
    header: list[str]
    rows: list[list]
    summary: dict = field(default_factory=dict)
    slab: np.ndarray | None = None
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# runners


def run_fk(cfg: RunConfig) -> Artifact:
    num = cfg.numerics
    spec = cfg.problem()
    mc = MCParams(num["n_paths"], num["dt"], cfg.seed, num["block_size"])
    hbars = num["hbars"] or [spec.model.hbar]
    t = spec.horizon if num["t"] is None else num["t"]
    rows = []
    for h in hbars:
        s = spec.with_model(spec.model.with_hbar(h))
        ests = fk_estimate_many([s], num["points"], mc, t)[0]
        for p, e in zip(num["points"], ests):
            rows.append([s.model.hash(), t, p, s.hbar, e.mean, e.stderr, e.n_paths, e.dt, e.seed])
    slab = np.array([[r[1], r[2], r[3], r[4], r[5]] for r in rows])
    return Artifact("fk", FK_HEADER, rows, slab=slab, meta={"slab_columns": ["t", "p", "hbar", "mean", "stderr"]})


def run_pide(cfg: RunConfig) -> Artifact:
    num = cfg.numerics
    spec = cfg.problem()
    hbar = num["hbar"] if num["hbar"] is not None else spec.model.hbar
    if hbar is None:
        sol = solve_pide(spec, num["L"], num["n"], num["dt"], num["theta"], num["store_every"])
    else:
        sol = solve_pide_scaled(spec, hbar, num["L"], num["n"], num["dt"], num["theta"], num["store_every"])
    rows = sol.to_long().tolist()
    summary = {"positive": sol.positive, "hbar": sol.hbar, "n_times": len(sol.tau), "n_points": len(sol.p)}
    meta = {"times": sol.times.tolist(), "grid": {"L": num["L"], "n": num["n"]}}
    return Artifact("pide", ["t", "p", "u"], rows, summary, slab=sol.u, meta=meta)


def run_variational(cfg: RunConfig) -> Artifact:
    num = cfg.numerics
    which = num["which"]
    spec = cfg.problem()
    if which == "config":
        res = solve_el_config(spec.rate, num["p"], num["t"], num["kappa"])
    elif which == "momentum":
        res = solve_el_momentum(Lagrangian(spec.model), num["p"], num["t"], num["kappa"], spec.rate)
    elif which == "jump":
        jumps = spec.model.jumps
        alpha = num["alpha"] or (jumps.alpha if isinstance(jumps, TwoPoint) else None)
        if alpha is None:
            raise ConfigError("numerics.alpha is required unless model.jumps.kind is two_point")
        res = solve_el_jump(alpha, num["p"], num["t"], num["t1"])
    else:
        raise ConfigError("numerics.which must be 'config', 'momentum' or 'jump'")
    summary = res.summary()
    if res.closed_form_error is not None:
        summary["closed_form_error"] = res.closed_form_error
    if num["probe"]:
        probe = probe_local_minimality(res, seed=cfg.seed)
        summary["probe_passed"] = probe.passed
        summary["probe_min_delta"] = probe.min_delta
    rows = np.column_stack([res.s, res.phi, res.dphi]).tolist()
    return Artifact("variational", ["s", "phi", "dphi"], rows, summary, slab=np.array(rows))


def run_prefactor(cfg: RunConfig) -> Artifact:
    num = cfg.numerics
    rows = []
    for i, t in enumerate(num["times"]):
        pv = prefactor_F(t, num["direction"])
        est = prefactor_mc(t, MCParams(num["n_paths"], num["dt"], cfg.seed + i), num["direction"])
        rows.append([t, pv.F, pv.K, pv.F_ode, pv.K_ode, est.mean, est.stderr, est.n_paths, est.dt, cfg.seed + i])
    header = ["t", "F", "K", "F_ode", "K_ode", "mc_mean", "mc_stderr", "n_paths", "dt", "seed"]
    return Artifact("asymptotics.prefactor", header, rows, slab=np.array(rows, dtype=float))


def run_drift(cfg: RunConfig) -> Artifact:
    num = cfg.numerics
    spec = cfg.problem().with_horizon(num["t"])
    p, t, kappa = num["p"], num["t"], num["kappa"]
    if num["setting"] == "config":
        pred = drift_prediction_config(spec.rate, p, t, kappa)
    elif num["setting"] == "momentum":
        pred = drift_prediction_momentum(spec.model, p, t, kappa, spec.rate)
    else:
        raise ConfigError("numerics.setting must be 'config' or 'momentum'")
    rows = []
    for i, h in enumerate(num["hbars"]):
        mc = MCParams(num["n_paths"], num["dt"], cfg.seed + i)
        est = drift_estimate(spec, h, None, p, num["dp_factor"] * h, mc)
        target = pred.leading + pred.correction_coeff * h
        rows.append([h, p, t, est.value, est.stderr, pred.leading, pred.correction_coeff, target,
                     abs(est.value - target), est.n_paths, num["dt"], cfg.seed + i])
    header = ["hbar", "p", "t", "estimate", "stderr", "leading", "correction_coeff", "prediction", "abs_error",
              "n_paths", "dt", "seed"]
    summary = {"leading": pred.leading, "correction_coeff": pred.correction_coeff, "G": pred.G}
    return Artifact("asymptotics.drift", header, rows, summary, slab=np.array(rows, dtype=float))


def run_sweep(cfg: RunConfig) -> Artifact:
    num = cfg.numerics
    spec = cfg.problem()
    mc = MCParams(num["n_paths"], num["dt"], cfg.seed)
    rep = hbar_sweep(spec, num["p"], num["t"], num["hbars"], num["source"], mc, num["points_per_width"], num["margin"])
    rows = [[r["hbar"], r["log_u"], r["fit_residual"], r["pred_residual"]] for r in rep.rows()]
    summary = rep.summary() | {"failures": {str(k): v for k, v in rep.failures.items()}}
    meta = {"provenance": {str(k): v for k, v in rep.provenance.items()}}
    return Artifact("asymptotics.sweep", ["hbar", "log_u", "fit_residual", "pred_residual"], rows, summary,
                    slab=np.array(rows, dtype=float), meta=meta)


RUNNERS = {"fk": run_fk, "pide": run_pide, "variational": run_variational}
ASYMPTOTICS = {"prefactor": run_prefactor, "drift": run_drift, "sweep": run_sweep}


def execute(cfg: RunConfig) -> Artifact:
    kind = cfg.method["kind"]
    if kind == "asymptotics":
        return ASYMPTOTICS[cfg.method["mode"]](cfg)
    return RUNNERS[kind](cfg)


def write_artifact(art: Artifact, cfg: RunConfig, stdout=None) -> Path | None:
    """Write the artifact in the configured format; CSV goes to stdout without a path."""
    fmt, path = cfg.output["format"], cfg.output["path"]
    meta = {
        "method": art.method,
        "config": cfg.resolved,
        "config_hash": cfg.hash,
        "model": model_to_dict(cfg.model()),
        "summary": art.summary,
    } | art.meta
    if path is None:
        if fmt != "csv":
            raise ConfigError("output.path is required for json and bin formats")
        (stdout or sys.stdout).write(io.csv_text(art.header, art.rows))
        return None
    if fmt == "csv":
        io.write_csv(path, art.header, art.rows)
        io.write_sidecar(path, meta | {"columns": art.header})
    elif fmt == "json":
        io.write_json(path, meta | {"columns": art.header, "rows": art.rows})
    else:
        if art.slab is None:
            raise ConfigError(f"method {art.method} has no binary slab output")
        io.write_slab(path, art.slab)
        io.write_sidecar(path, meta | {"shape": list(art.slab.shape)})
    return Path(path)


# ---------------------------------------------------------------------------
# report


def merge_reports(paths: list[str]) -> dict[str, dict]:
    """Group CSV artifacts by method; every group must share one header."""
    if not paths:
        raise ConfigError("report needs at least one artifact")
    sections: dict[str, dict] = {}
    for path in paths:
        header, rows = io.read_csv(path)
        meta = io.read_sidecar(path) or {}
        method = meta.get("method", "unknown")
        sec = sections.setdefault(method, {"header": header, "rows": []})
        if sec["header"] != header:
            raise ConfigError(f"mixed schema for method {method}: {path} has columns {header}")
        run = Path(path).stem
        sec["rows"].extend([run] + row for row in rows)
    return sections


def report_text(sections: dict[str, dict]) -> str:
    parts = []
    for method, sec in sections.items():
        text = io.csv_text(["run"] + sec["header"], sec["rows"])
        parts.append(text if len(sections) == 1 else f"# section: {method}\n{text}")
    return "\n".join(parts)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="levyfk", description="Feynman-Kac / semiclassical toolkit for Lévy PIDEs")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("fk", "pide", "variational", "asymptotics"):
        sp = sub.add_parser(name, help=f"run a {name} experiment from a config file")
        sp.add_argument("--config", required=True)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("csv", "json", "bin"))
    v = sub.add_parser("verify", help="run the acceptance suite")
    v.add_argument("suite", nargs="?", default="fast")
    r = sub.add_parser("report", help="merge CSV artifacts into one table")
    r.add_argument("artifacts", nargs="*")
    r.add_argument("--out")
    r.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def _run(args) -> int:
    if args.command == "verify":
        from .verification import SUITES, format_table, run_suite

        if args.suite not in SUITES:
            raise ConfigError(f"unknown suite {args.suite!r}; choose from {sorted(SUITES)}")
        results = run_suite(args.suite, echo=print)
        print(format_table(results))
        return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL
    if args.command == "report":
        sections = merge_reports(args.artifacts)
        if args.format == "json":
            text = io.json_text(sections)
        else:
            text = report_text(sections)
        if args.out:
            io.atomic_write(args.out, text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    cfg = load_config(args.config)
    if cfg.method["kind"] != args.command:
        raise ConfigError(f"method.kind is {cfg.method['kind']!r} but subcommand is {args.command!r}")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        raise ConfigError("--seed must be an unsigned 64-bit integer")
    cfg = cfg.with_overrides(seed=args.seed, out=args.out, fmt=args.format)
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        art = execute(cfg)
    write_artifact(art, cfg)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResolutionError as exc:
        print(f"resolution error: {exc}", file=sys.stderr)
        return EXIT_RESOLUTION
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except LevyFKError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
