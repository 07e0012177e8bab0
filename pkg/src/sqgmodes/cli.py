"""Command-line entry point: ``sqgmodes <subcommand> --config run.toml --out dir``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .bounds import CalibrationConstants, absorbing_radii, admissible_l, compute_determining_Q
from .config import ConfigError, RunConfig, parse_config
from .experiments import (
    SyncResult,
    TwinConfig,
    calibration_run,
    decay_diagnostics,
    force_perturbation_run,
    gronwall_check,
    implied_c_thm,
    threshold_sweep,
    twin_sync_run,
)
from .io import save_checkpoint, write_csv, write_json, write_manifest, write_rows
from .operators import forcing
from .spectral import from_modes, grid_norm, random_field
from .timestepper import budget_hooks, energy_budget, simulate
from .validation import run_suite

SUBCOMMANDS = ("simulate", "twin-sync", "perturb", "sweep", "validate", "bounds")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _constants(cfg: RunConfig) -> CalibrationConstants:
    """Configured constants, with c_infty recalibrated when requested."""
    consts = cfg.calibration_constants()
    ex = cfg.experiment
    if ex.calibrate:
        consts = calibration_run(
            cfg.make_domain(),
            cfg.sqg_params(),
            seed=ex.seed1,
            horizon=ex.calibration_horizon,
            cadence=ex.cadence,
            dt_max=ex.dt_max,
            init_band=ex.init_band,
            init_decay=ex.init_decay,
            init_amplitude=ex.init_amplitude,
            constants=consts,
        )
    return consts


def bounds_doc(cfg: RunConfig, constants: CalibrationConstants | None = None) -> dict:
    d, p = cfg.make_domain(), cfg.sqg_params()
    c = constants or cfg.calibration_constants()
    radii = absorbing_radii(p.forcing, d, p.nu, p.alpha, p.p, c)
    scale = compute_determining_Q(radii.Rinfty, p.nu, p.alpha, p.l, c, d.lambda0)
    return {
        "R2": radii.R2,
        "Rinfty_sharp": radii.Rinfty,
        "Rinfty_simplified": radii.Rinfty_simplified,
        "F": radii.F,
        "Lambda": scale.Lambda,
        "Q": scale.Q,
        "l_admissible": admissible_l(p.alpha, p.l),
        "constants": c.as_dict(),
    }


def twin_config(cfg: RunConfig, constants: CalibrationConstants) -> TwinConfig:
    ex = cfg.experiment
    d, p = cfg.make_domain(), cfg.sqg_params()
    Q = ex.Q
    if Q is None:
        Rinf = absorbing_radii(p.forcing, d, p.nu, p.alpha, p.p, constants).Rinfty
        Q = compute_determining_Q(Rinf, p.nu, p.alpha, p.l, constants, d.lambda0).Q
    return TwinConfig(
        domain=d,
        params=p,
        Q=Q,
        projection_kind=ex.projection_kind,
        seed1=ex.seed1,
        seed2=ex.seed2,
        horizon=ex.horizon,
        cadence=ex.cadence,
        spinup=ex.spinup,
        dt_max=ex.dt_max,
        init_band=ex.init_band,
        init_decay=ex.init_decay,
        init_amplitude=ex.init_amplitude,
        constants=constants,
        epsilon=ex.epsilon,
        gamma=ex.gamma,
        perturbation=forcing(ex.perturbation_modes),
    )


def _sync_outputs(out: Path, stem: str, res: SyncResult, tc: TwinConfig, cfg: RunConfig) -> list[Path]:
    diag = decay_diagnostics(res, tc.params, tc.domain, tc.constants)
    dt_s = float(res.times[1] - res.times[0]) if len(res.times) > 1 else math.nan
    ok, margin = gronwall_check(diag, dt_s) if len(res.times) > 1 else (False, math.nan)
    b = bounds_doc(cfg, replace(tc.constants, c_thm=1.0))
    summary = {
        "config": cfg.echo(),
        **res.summary(),
        "theoretical_Q": b["Q"],
        "implied_c_thm": implied_c_thm(
            res.Q, tc.domain.lambda0, tc.params.alpha, tc.params.nu, tc.params.l, res.radii.Rinfty
        ),
        "gronwall_ok": ok,
        "gronwall_margin": margin,
        "constants": tc.constants.as_dict(),
    }
    return [write_csv(out / f"{stem}.csv", res.columns()), write_json(out / f"{stem}.json", summary)]


def cmd_simulate(cfg: RunConfig, out: Path) -> list[Path]:
    ex = cfg.experiment
    d, p = cfg.make_domain(), cfg.sqg_params()
    if ex.initial_modes:
        theta0 = from_modes(d, [((k1, k2), complex(re, im)) for k1, k2, re, im in ex.initial_modes])
    else:
        theta0 = random_field(d, ex.seed1, ex.init_decay, ex.init_band, ex.init_amplitude)
    hooks = budget_hooks(p, d)
    hooks["linf"] = lambda s: grid_norm(d.coeffs_to_grid(s.theta.coeffs), math.inf, d.dx)
    traj = simulate(theta0, p, ex.horizon, hooks, dt=ex.dt, dt_max=ex.dt_max, cadence=ex.cadence)
    files = [
        write_csv(out / "trajectory.csv", traj.series),
        save_checkpoint(out / "final.sqgf", traj.final.theta, traj.final.t, p.alpha, p.nu),
    ]
    residual = energy_budget(
        traj.array("t"), traj.array("energy"), traj.array("dissipation"), traj.array("work"), p.nu
    )
    doc = {"config": cfg.echo(), "t_final": traj.final.t, "dt": traj.dt, "energy_budget_residual": residual}
    files.append(write_json(out / "simulate.json", doc))
    return files


def cmd_twin(cfg: RunConfig, out: Path) -> list[Path]:
    tc = twin_config(cfg, _constants(cfg))
    return _sync_outputs(out, "twin_sync", twin_sync_run(tc), tc, cfg)


def cmd_perturb(cfg: RunConfig, out: Path) -> list[Path]:
    tc = twin_config(cfg, _constants(cfg))
    if tc.perturbation.is_zero:
        raise ConfigError("experiment.perturbation_modes", "perturb needs a nonzero perturbation force")
    return _sync_outputs(out, "perturb", force_perturbation_run(tc), tc, cfg)


def cmd_sweep(cfg: RunConfig, out: Path) -> list[Path]:
    constants = _constants(cfg)
    tc = twin_config(cfg, constants)
    res = threshold_sweep(tc, cfg.experiment.Q_list)
    rows = [(q, v, rate, ratio) for q, v, rate, ratio in res.rows]
    files = [write_rows(out / "sweep.csv", ["Q", "verdict", "fitted_rate", "decay_ratio"], rows)]
    doc = {"config": cfg.echo(), "constants": constants.as_dict(), **res.summary()}
    files.append(write_json(out / "sweep.json", doc))
    return files


def cmd_validate(cfg: RunConfig | None, out: Path, quiet: bool) -> tuple[list[Path], bool]:
    checks = run_suite()
    for c in checks:
        if not quiet:
            print(c.line())
    doc = {
        "checks": [
            {"name": c.name, "passed": c.passed, "value": c.value, "threshold": c.threshold}
            for c in checks
        ]
    }
    return [write_json(out / "validate.json", doc)], all(c.passed for c in checks)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sqgmodes", description="SQG solver and determining-modes harness")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, metavar="{" + ",".join(SUBCOMMANDS) + "}")
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, required=name != "validate")
        sp.add_argument("--out", type=Path, default=None)
        sp.add_argument("--seed", type=int, default=None, help="sets seed1 (seed2 = seed + 1)")
        sp.add_argument("--quiet", action="store_true")
    return ap


def _load(args) -> RunConfig | None:
    if args.config is None:
        return None
    cfg = parse_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed", "seed must be a nonnegative integer")
        ex = cfg.experiment.model_copy(update={"seed1": args.seed, "seed2": args.seed + 1})
        cfg = cfg.model_copy(update={"experiment": ex})
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    started = _now()
    try:
        cfg = _load(args)
        out = args.out or Path((cfg.out_dir if cfg and cfg.out_dir else None) or "out")
        out.mkdir(parents=True, exist_ok=True)
        ok = True
        if args.command == "bounds":
            doc = bounds_doc(cfg)
            files = [write_json(out / "bounds.json", doc)]
            if not args.quiet:
                print(json.dumps(doc, indent=2, sort_keys=True))
        elif args.command == "validate":
            files, ok = cmd_validate(cfg, out, args.quiet)
        else:
            run = {"simulate": cmd_simulate, "twin-sync": cmd_twin, "perturb": cmd_perturb, "sweep": cmd_sweep}
            files = run[args.command](cfg, out)
        write_manifest(out, cfg.echo() if cfg else {}, files, started, _now(), __version__)
        if not args.quiet and args.command not in ("bounds", "validate"):
            for f in files:
                print(f)
        return 0 if ok else 1
    except Exception as exc:  # every failure leaves as machine-readable JSON
        err = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, ConfigError):
            err["key"] = exc.key
        print(json.dumps(err), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
