"""Config-driven experiment harness.

Subcommands:
  run          refinement loop vs the uniform-weight baseline, CSV/JSON out
  sweep        one run per axis value (N, alpha, K, kappa_p) with slope fits
  bandit-error CDF estimation error vs pull budget
  front        dense reference front plus sample scatters

Every command writes a manifest before any result file, echoes the config,
and produces byte-identical outputs for identical config and seed (manifest
timestamps aside). Exit codes: 0 success, 1 runtime failure, 2 config error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import copy
import datetime
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import cdf as cdf_mod
from .bandit_estimation import cdf_error_experiment
from .errors import ConfigError, SurfError
from .metrics import PfSampleSet, cv, gap_ratio, hypervolume_2d, igd
from .problems import (
    BiObjectiveProblem,
    EntropicBandit,
    GearToy,
    TabularKlMdp,
    problem_from_config,
)
from .solvers import InnerSolverConfig, run_inner
from .surf import SurfConfig, surf_run

SAMPLES_HEADER = "source,n,w,f1,f2"
CONVERGENCE_HEADER = (
    "t,sup_dist_to_true_phi,sup_dist_phi_tilde_phi_t,cv,gap_ratio,max_inner_residual"
)
FRONT_HEADER = "source,w,f1,f2"
BANDIT_ERROR_HEADER = "T,mean_sup_error,std_sup_error,trials,seed"
SWEEP_HEADER = "value,kappa,first_sup_error,final_sup_error,cv,gap_ratio"

_SWEEP_AXES = ("N", "alpha", "K", "kappa_p")


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------

_DEFAULTS = {
    "surf": {
        "segments": 20,
        "alpha": 0.3,
        "outer_iterations": 30,
        "record_history": True,
        "grid_size": cdf_mod.DEFAULT_GRID_SIZE,
        "inner": {
            "kind": "closed_form",
            "max_steps": 1,
            "tolerance": 1e-12,
            "step_size": None,
        },
    },
    "metrics": {
        "hv_reference": None,
        "igd_reference_size": 1001,
        "reference_grid_size": 257,
    },
    "bandit_error": {
        "pull_grid": [100, 316, 1000, 3162, 10000],
        "trials": 100,
        "noise_sigma": 0.5,
        "grid_size": 513,
    },
    "output": {"dir": "out"},
    "seed": 0,
}


def load_config(path: str) -> dict:
    """Parse and validate the JSON config, filling documented defaults."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    if "problem" not in raw or "kind" not in raw.get("problem", {}):
        raise ConfigError("config field 'problem.kind' is required")
    cfg = copy.deepcopy(_DEFAULTS)
    cfg["problem"] = raw["problem"]
    for section in ("surf", "metrics", "bandit_error", "output"):
        user = raw.get(section, {})
        if not isinstance(user, dict):
            raise ConfigError(f"config field '{section}' must be an object")
        for key, value in user.items():
            if key == "inner":
                cfg["surf"]["inner"].update(value)
            else:
                cfg[section][key] = value
    cfg["seed"] = raw.get("seed", _DEFAULTS["seed"])
    if "sweep" in raw:
        sweep = raw["sweep"]
        if (
            not isinstance(sweep, dict)
            or sweep.get("axis") not in _SWEEP_AXES
            or not isinstance(sweep.get("values"), list)
            or not sweep["values"]
        ):
            raise ConfigError(
                f"config field 'sweep' needs axis in {_SWEEP_AXES} and a nonempty values list"
            )
        cfg["sweep"] = sweep
    return cfg


def _build_surf_config(cfg: dict) -> SurfConfig:
    s = cfg["surf"]
    inner = s["inner"]
    try:
        inner_cfg = InnerSolverConfig(
            kind=inner["kind"],
            max_steps=int(inner["max_steps"]),
            tolerance=float(inner["tolerance"]),
            step_size=inner["step_size"],
        )
        return SurfConfig(
            segments=int(s["segments"]),
            alpha=float(s["alpha"]),
            outer_iterations=int(s["outer_iterations"]),
            inner=inner_cfg,
            record_history=bool(s["record_history"]),
            grid_size=int(s["grid_size"]),
        )
    except (SurfError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid surf section: {exc}") from exc


def _reference_cdf(problem: BiObjectiveProblem, cfg: dict):
    grid_size = int(cfg["metrics"]["reference_grid_size"])
    if problem.has_closed_form_cdf:
        return problem.closed_form_cdf()
    if isinstance(problem, TabularKlMdp):
        return problem.quadrature_cdf(grid_size=grid_size)
    return None


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def _write_manifest(out: Path, cfg: dict, files: list[str]) -> None:
    manifest = {
        "artifact_version": __version__,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "seed": cfg["seed"],
        "config": cfg,
        "files": files,
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def _check_manifest(out: Path) -> None:
    manifest = json.loads((out / "manifest.json").read_text())
    missing = [f for f in manifest["files"] if not (out / f).exists()]
    if missing:
        raise SurfError(f"manifest lists missing outputs: {missing}")


def _samples_csv(rows) -> str:
    lines = [SAMPLES_HEADER]
    for source, n, w, f1, f2 in rows:
        lines.append(f"{source},{n},{_fmt(w)},{_fmt(f1)},{_fmt(f2)}")
    return "\n".join(lines) + "\n"


def _uniform_baseline(problem, surf_cfg: SurfConfig) -> PfSampleSet:
    """Uniform weights with the same total per-slot inner budget as the loop."""
    n = surf_cfg.segments
    weights = np.arange(n + 1) / n
    total_steps = surf_cfg.inner.max_steps * (surf_cfg.outer_iterations + 1)
    inner = InnerSolverConfig(
        kind=surf_cfg.inner.kind,
        max_steps=total_steps,
        tolerance=surf_cfg.inner.tolerance,
        step_size=surf_cfg.inner.step_size,
    )
    points = []
    for w in weights:
        result, _ = run_inner(problem, w, inner, warm=None)
        points.append(problem.evaluate_objectives(result.decision))
    return PfSampleSet(weights=weights, objectives=np.array(points))


def _metric_block(samples: PfSampleSet, hv_reference, reference_front):
    block = {
        "cv": cv(samples),
        "gap_ratio": gap_ratio(samples),
        "hv": None,
        "igd": None,
    }
    if hv_reference is not None:
        block["hv"] = hypervolume_2d(samples, hv_reference)
    if reference_front is not None:
        block["igd"] = igd(samples, reference_front)
    return block


def _dense_front(problem, reference_cdf, size: int) -> np.ndarray | None:
    if size < 2 or reference_cdf is None or not problem.has_exact_solver:
        return None
    ws = [cdf_mod.invert(reference_cdf, q) for q in np.linspace(0.0, 1.0, size)]
    return np.array([(w, *problem.pf_point(w)) for w in ws])


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _run_single(problem, surf_cfg, cfg, out: Path, write_front: bool = False):
    """Shared body of `run` and one sweep cell; returns the surf result."""
    reference = _reference_cdf(problem, cfg)
    files = ["samples.csv", "convergence.csv", "metrics.json"]
    if write_front:
        files.append("front.csv")
    _write_manifest(out, cfg, files)

    result = surf_run(problem, surf_cfg, reference_cdf=reference)
    baseline = _uniform_baseline(problem, surf_cfg)

    rows = []
    for n, (w, f) in enumerate(zip(result.samples.weights, result.samples.objectives)):
        rows.append(("surf", n, w, f[0], f[1]))
    for n, (w, f) in enumerate(zip(baseline.weights, baseline.objectives)):
        rows.append(("uniform", n, w, f[0], f[1]))
    (out / "samples.csv").write_text(_samples_csv(rows))

    lines = [CONVERGENCE_HEADER]
    for t, state in enumerate(result.history or []):
        d = state.diagnostics
        lines.append(
            ",".join(
                [
                    str(t),
                    _fmt(d.get("sup_to_reference")),
                    _fmt(d["sup_tilde_vs_phi"]),
                    _fmt(d["cv"]),
                    _fmt(d["gap_ratio"]),
                    _fmt(d["max_inner_residual"]),
                ]
            )
        )
    (out / "convergence.csv").write_text("\n".join(lines) + "\n")

    dense = _dense_front(problem, reference, int(cfg["metrics"]["igd_reference_size"]))
    reference_front = dense[:, 1:] if dense is not None else None
    hv_ref = cfg["metrics"]["hv_reference"]
    surf_metrics = _metric_block(result.samples, hv_ref, reference_front)
    uniform_metrics = _metric_block(baseline, hv_ref, reference_front)
    metrics = {
        "hv_surf": surf_metrics["hv"],
        "hv_uniform": uniform_metrics["hv"],
        "igd_surf": surf_metrics["igd"],
        "igd_uniform": uniform_metrics["igd"],
        "cv_surf": surf_metrics["cv"],
        "cv_uniform": uniform_metrics["cv"],
        "gap_ratio_surf": surf_metrics["gap_ratio"],
        "gap_ratio_uniform": uniform_metrics["gap_ratio"],
        "hv_reference_point": hv_ref,
    }
    (out / "metrics.json").write_text(json.dumps(metrics, indent=2, sort_keys=True))

    if write_front:
        lines = [FRONT_HEADER]
        if dense is not None:
            for w, f1, f2 in dense:
                lines.append(f"reference,{_fmt(w)},{_fmt(f1)},{_fmt(f2)}")
        for w, f in zip(result.samples.weights, result.samples.objectives):
            lines.append(f"surf,{_fmt(w)},{_fmt(f[0])},{_fmt(f[1])}")
        for w, f in zip(baseline.weights, baseline.objectives):
            lines.append(f"uniform,{_fmt(w)},{_fmt(f[0])},{_fmt(f[1])}")
        (out / "front.csv").write_text("\n".join(lines) + "\n")

    _check_manifest(out)
    return result


def cmd_run(cfg: dict, out: Path) -> int:
    problem = problem_from_config(cfg["problem"])
    _run_single(problem, _build_surf_config(cfg), cfg, out)
    return 0


def cmd_front(cfg: dict, out: Path) -> int:
    problem = problem_from_config(cfg["problem"])
    if not problem.has_exact_solver:
        raise ConfigError("front command needs a problem with an exact solver")
    _run_single(problem, _build_surf_config(cfg), cfg, out, write_front=True)
    return 0


def _loglog_slope(x, y) -> float:
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def _kappa_of_gear(p_value: float, grid: int = 4097) -> float:
    """Condition number (v_max/v_min) sqrt(max |Phi''|) from the true CDF."""
    gear = GearToy(p_value)
    ws = np.linspace(0.0, 1.0, grid)
    speeds = np.array([gear.closed_form_speed(w) for w in ws])
    phi = np.array([gear.phi_exact(w) for w in ws])
    h = ws[1] - ws[0]
    second = np.abs(np.diff(phi, 2)) / h**2
    return float(speeds.max() / speeds.min() * np.sqrt(second.max()))


def _sweep_cell(cfg: dict, axis: str, value, out_root: Path):
    sub_cfg = copy.deepcopy(cfg)
    sub_cfg.pop("sweep", None)
    if axis == "N":
        sub_cfg["surf"]["segments"] = int(value)
    elif axis == "alpha":
        sub_cfg["surf"]["alpha"] = float(value)
    elif axis == "K":
        sub_cfg["surf"]["inner"]["max_steps"] = int(value)
    elif axis == "kappa_p":
        if sub_cfg["problem"].get("kind") != "gear":
            raise ConfigError("kappa_p sweep requires a gear problem")
        sub_cfg["problem"]["p"] = float(value)
    out = out_root / f"{axis}_{value}"
    problem = problem_from_config(sub_cfg["problem"])
    result = _run_single(problem, _build_surf_config(sub_cfg), sub_cfg, out)
    history = result.history or []
    first = history[0].diagnostics.get("sup_empirical_to_reference")
    final = history[-1].diagnostics.get("sup_to_reference")
    kappa = _kappa_of_gear(float(value)) if axis == "kappa_p" else None
    return {
        "value": value,
        "kappa": kappa,
        "first_sup_error": first,
        "final_sup_error": final,
        "cv": history[-1].diagnostics["cv"],
        "gap_ratio": history[-1].diagnostics["gap_ratio"],
    }


def cmd_sweep(cfg: dict, out: Path, threads: int = 1) -> int:
    if "sweep" not in cfg:
        raise ConfigError("sweep command needs a 'sweep' section in the config")
    axis = cfg["sweep"]["axis"]
    values = cfg["sweep"]["values"]
    _write_manifest(out, cfg, ["sweep.csv", "slopes.json"])

    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            summaries = list(
                pool.map(lambda v: _sweep_cell(cfg, axis, v, out), values)
            )
    else:
        summaries = [_sweep_cell(cfg, axis, v, out) for v in values]

    lines = [SWEEP_HEADER]
    for s in summaries:
        lines.append(
            ",".join(
                [
                    str(s["value"]),
                    _fmt(s["kappa"]),
                    _fmt(s["first_sup_error"]),
                    _fmt(s["final_sup_error"]),
                    _fmt(s["cv"]),
                    _fmt(s["gap_ratio"]),
                ]
            )
        )
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")

    slopes: dict = {"axis": axis}
    finals = [s["final_sup_error"] for s in summaries]
    if axis == "N" and all(f is not None and f > 0 for f in finals):
        slopes["slope_final_vs_value"] = _loglog_slope(
            [s["value"] for s in summaries], finals
        )
    if axis == "kappa_p":
        kappas = [s["kappa"] for s in summaries]
        firsts = [s["first_sup_error"] for s in summaries]
        if all(f is not None and f > 0 for f in firsts):
            slopes["slope_first_vs_kappa"] = _loglog_slope(kappas, firsts)
        if all(f is not None and f > 0 for f in finals):
            slopes["slope_final_vs_kappa"] = _loglog_slope(kappas, finals)
    (out / "slopes.json").write_text(json.dumps(slopes, indent=2, sort_keys=True))
    _check_manifest(out)
    return 0


def cmd_bandit_error(cfg: dict, out: Path) -> int:
    problem = problem_from_config(cfg["problem"])
    if not isinstance(problem, EntropicBandit):
        raise ConfigError("bandit-error command needs a bandit problem")
    be = cfg["bandit_error"]
    if int(be["trials"]) < 2:
        raise ConfigError("bandit_error.trials must be >= 2 (std undefined otherwise)")
    _write_manifest(out, cfg, ["bandit_error.csv", "slopes.json"])
    rows = cdf_error_experiment(
        problem,
        pull_grid=be["pull_grid"],
        trials=int(be["trials"]),
        noise_sigma=float(be["noise_sigma"]),
        seed=int(cfg["seed"]),
        grid_size=int(be["grid_size"]),
    )
    lines = [BANDIT_ERROR_HEADER]
    for r in rows:
        lines.append(
            f"{r.pulls},{_fmt(r.mean_sup_error)},{_fmt(r.std_sup_error)},{r.trials},{r.seed}"
        )
    (out / "bandit_error.csv").write_text("\n".join(lines) + "\n")
    slope = _loglog_slope([r.pulls for r in rows], [r.mean_sup_error for r in rows])
    (out / "slopes.json").write_text(
        json.dumps({"slope_error_vs_pulls": slope}, indent=2, sort_keys=True)
    )
    _check_manifest(out)
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="surfpf", description="Uniform front sampling experiment harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep", "bandit-error", "front"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        out = Path(args.out if args.out is not None else cfg["output"]["dir"])
        if args.command == "run":
            return cmd_run(cfg, out)
        if args.command == "front":
            return cmd_front(cfg, out)
        if args.command == "sweep":
            return cmd_sweep(cfg, out, threads=args.threads)
        if args.command == "bandit-error":
            return cmd_bandit_error(cfg, out)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SurfError as exc:
        print(f"{type(exc).__module__}.{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
