"""End-to-end acceptance criteria, one PASS/FAIL line per criterion.

Heavy runs are computed once per module and shared: the calibrated
acceptance configuration, its threshold sweeps over three seeds and the
synchronization run at the theoretical shell.
"""

import math
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from sqgmodes.bounds import (
    absorbing_radii,
    compute_determining_Q,
    determining_wavenumber,
    force_bound,
    l2_envelope,
    linfty_bound,
    negative_norm,
)
from sqgmodes.cli import twin_config
from sqgmodes.config import parse_config
from sqgmodes.experiments import (
    calibration_run,
    decay_diagnostics,
    force_perturbation_run,
    gronwall_check,
    threshold_sweep,
    twin_sync_run,
)
from sqgmodes.io import sha256_file, write_csv, write_rows
from sqgmodes.spectral import grid_norm, random_field
from sqgmodes.timestepper import simulate
from sqgmodes.validation import (
    bernstein,
    coercivity,
    forced_budget,
    lp_reconstruction,
    oracle_equivalence,
    partition_of_unity,
    single_mode_decay,
)

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "acceptance.toml"
SEEDS = (1, 2, 3)

pytestmark = pytest.mark.slow


@pytest.fixture
def report(record_property):
    def emit(tag: str, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'} criterion {tag}: {detail}"
        print(line)
        record_property("acceptance", line)
        return passed

    return emit


def timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def cfg():
    return parse_config(CONFIG)


def calibrated(cfg, seed: int):
    ex = cfg.experiment
    return calibration_run(
        cfg.make_domain(),
        cfg.sqg_params(),
        seed=seed,
        horizon=ex.calibration_horizon,
        cadence=ex.cadence,
        init_band=ex.init_band,
        init_decay=ex.init_decay,
        init_amplitude=ex.init_amplitude,
        constants=cfg.calibration_constants(),
    )


def sweep_for(cfg, seed: int):
    consts = calibrated(cfg, seed)
    base = replace(twin_config(cfg, consts), seed1=seed, seed2=seed + 1, Q=0)
    return threshold_sweep(base, workers=1)


@pytest.fixture(scope="module")
def sweeps(cfg):
    return {seed: timed(sweep_for, cfg, seed) for seed in SEEDS}


def sync_pipeline(cfg, implied):
    """Calibrate c_infty, fold in the measured c_thm, then run at the theoretical Q."""
    consts = replace(calibrated(cfg, cfg.experiment.seed1), c_thm=implied)
    tc = twin_config(cfg.model_copy(update={"experiment": cfg.experiment.model_copy(update={"Q": None})}), consts)
    return tc, twin_sync_run(tc)


@pytest.fixture(scope="module")
def sync(cfg, sweeps):
    implied = sweeps[1][0].implied_c_thm
    (tc, res), secs = timed(sync_pipeline, cfg, implied)
    return tc, res, secs


def sample_dt(res):
    return float(res.times[1] - res.times[0])


class TestAcceptance:
    def test_1_analytic_decay(self, report):
        (rel, info), secs = timed(single_mode_decay)
        ok = rel <= 1e-8 and secs < 5.0 and info["t"] == 1.0
        assert report("1", ok, f"relative error {rel:.3e} (tol 1e-8) at t={info['t']}, {secs:.2f} s (limit 5 s)")

    def test_2_nonlinearity_oracle(self, report):
        check, secs = timed(oracle_equivalence, N=64, seeds=20)
        ok = check.passed and secs < 10.0
        assert report("2", ok, f"worst relative mismatch {check.value:.3e} (tol 1e-11), {secs:.2f} s (limit 10 s)")

    def test_3_energy_equality(self, report):
        (forced, _), secs = timed(forced_budget, N=128, dt=1e-3, horizon=5.0)
        _, info = single_mode_decay()
        ok = forced <= 1e-5 and info["budget"] <= 1e-8
        detail = f"forced residual {forced:.3e} (tol 1e-5, {secs:.1f} s), unforced {info['budget']:.3e} (tol 1e-8)"
        assert report("3", ok, detail)

    def test_4_littlewood_paley(self, report):
        pou = partition_of_unity(N=64, samples=10_000)
        rec = lp_reconstruction(N=64, seeds=100)
        ok = pou.passed and rec.passed
        detail = f"partition deviation {pou.value:.3e}, reconstruction/telescoping {rec.value:.3e} (tol 1e-12)"
        assert report("4", ok, detail)

    def test_5_bernstein_coercivity(self, report):
        b = bernstein(N=64, seeds=200)
        c = coercivity(N=64, seeds=200)
        single = c.detail["single_mode_rel_error"]
        ok = b.passed and c.passed
        detail = (
            f"Bernstein max ratio {b.value:.3f} (<= 10), spread {b.detail['spread']:.3f} (< 2); "
            f"coercivity min ratio {c.value:.3f} (> 0), single-mode error {single:.2e} (tol 1e-10)"
        )
        assert report("5", ok, detail)

    def test_6_bound_monitors(self, cfg, report):
        d, p, ex = cfg.make_domain(), cfg.sqg_params(), cfg.experiment
        theta0 = random_field(d, ex.seed1, ex.init_decay, ex.init_band, ex.init_amplitude)
        hooks = {
            "l2": lambda s: d.L * math.sqrt(float(np.sum(np.abs(s.theta.coeffs) ** 2))),
            "linf": lambda s: grid_norm(d.coeffs_to_grid(s.theta.coeffs), math.inf, d.dx),
        }
        traj = simulate(theta0, p, 5.0, hooks, cadence=1)
        t, l2, linf = traj.array("t"), traj.array("l2"), traj.array("linf")
        fneg, F = negative_norm(p.forcing, d, p.alpha), force_bound(p.forcing, d, p.p)
        env = np.array([l2_envelope(s, l2[0], fneg, p.nu, p.alpha, d.lambda0) for s in t])
        excess = float(np.max(l2 / env - 1.0))
        consts = cfg.calibration_constants()
        ratio = np.array(
            [linf[i] / linfty_bound(t[i], l2[0], F, p.nu, p.alpha, p.p, consts) for i in range(1, len(t))]
        )
        tail = ratio[len(ratio) // 2 :]
        ok = excess <= 0.0 and np.all(np.isfinite(ratio)) and ratio.max() < 1.0 and tail.max() <= ratio.max()
        detail = (
            f"max ||theta||_2/envelope - 1 = {excess:.3e} (<= 0) over {len(t)} samples; "
            f"L^inf/bound ratio max {ratio.max():.4f}, late-time max {tail.max():.4f} (run constant, c_linfty = 1)"
        )
        assert report("6", ok, detail)

    def test_7_synchronization(self, sync, report):
        tc, res, secs = sync
        diag = decay_diagnostics(res, tc.params, tc.domain, tc.constants)
        ok_g, margin = gronwall_check(diag, sample_dt(res), slack=1e-3)
        ok = (
            res.verdict == "synchronized"
            and res.decades >= 6.0
            and res.fit_r2 >= 0.98
            and ok_g
            and res.entry_time < tc.spinup
            and secs < 300.0
        )
        detail = (
            f"Q={res.Q} ({tc.projection_kind}), {res.decades:.2f} decades (>= 6), r2 {res.fit_r2:.5f} (>= 0.98), "
            f"rate {res.fitted_rate:.3f}, Grönwall margin {margin:.3e} (slack 1e-3), entry {res.entry_time:.3g} "
            f"< spinup {tc.spinup}, {secs:.1f} s (limit 300 s)"
        )
        assert report("7", ok, detail)

    def test_7_perturbed_synchronization(self, sync, report):
        tc, _, _ = sync
        pc = replace(tc, horizon=15.0, cadence=5)
        res = force_perturbation_run(pc, 0.1, 1.0)
        diag = decay_diagnostics(res, pc.params, pc.domain, pc.constants)
        ok_g, margin = gronwall_check(diag, sample_dt(res), slack=1e-3)
        ok = res.verdict == "synchronized" and ok_g
        detail = (
            f"epsilon 0.1, gamma 1: {res.verdict}, {res.decades:.2f} decades, rate {res.fitted_rate:.3f}, "
            f"r2 {res.fit_r2:.4f}, Grönwall margin {margin:.3e}"
        )
        assert report("7-perturbed", ok, detail)

    def test_8_threshold_sweep(self, sweeps, report):
        results = {seed: r for seed, (r, _) in sweeps.items()}
        implied = [r.implied_c_thm for r in results.values()]
        below = all(r.Q_crit is not None and r.Q_crit <= r.Q_theory for r in results.values())
        spread = max(implied) / min(implied)
        ok = below and spread <= 2.0
        rows = "; ".join(
            f"seed {s}: Q_crit {r.Q_crit} <= Q_theory {r.Q_theory} (Lambda {r.Lambda_theory:.2f}), "
            f"implied c_thm {r.implied_c_thm:.4f}, monotone violations {r.monotone_violations}"
            for s, r in results.items()
        )
        assert report("8", ok, f"{rows}; c_thm spread {spread:.3f} (<= 2)")

    @pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
    def test_9_scaling(self, alpha, report):
        l = math.ceil(alpha / (alpha - 1.0)) + 1.0
        worst = 0.0
        for R in (1e-3, 0.25, 1.0, 7.5, 100.0):
            lam1 = compute_determining_Q(R, 0.5, alpha, l).Lambda
            lam2 = compute_determining_Q(2 * R, 0.5, alpha, l).Lambda
            worst = max(worst, abs(lam2 / lam1 / 2.0 ** (1.0 / (alpha - 1.0)) - 1.0))
        assert lam1 == determining_wavenumber(R, 0.5, alpha, l)
        ok = worst <= 1e-14
        assert report(f"9-alpha{alpha}", ok, f"max |ratio / 2^(1/(alpha-1)) - 1| = {worst:.2e} over five radii")

    def test_10_determinism(self, cfg, sync, sweeps, tmp_path, report):
        digests = {}

        def crit1(tag):
            _, info = single_mode_decay()
            return write_csv(tmp_path / f"c1_{tag}.csv", info["trajectory"].series)

        def crit7(tag):
            return write_csv(tmp_path / f"c7_{tag}.csv", twin_sync_run(sync[0]).columns())

        def crit8(tag):
            r = sweep_for(cfg, 1) if tag == "b" else sweeps[1][0]
            return write_rows(tmp_path / f"c8_{tag}.csv", ["Q", "verdict", "fitted_rate", "decay_ratio"], r.rows)

        first7 = write_csv(tmp_path / "c7_a.csv", sync[1].columns())
        for name, fn in (("1", crit1), ("7", crit7), ("8", crit8)):
            a = first7 if name == "7" else fn("a")
            digests[name] = (sha256_file(a), sha256_file(fn("b")))
        ok = all(x == y for x, y in digests.values())
        detail = ", ".join(f"criterion {k} {'identical' if a == b else 'DIFFERENT'} ({a[:12]})" for k, (a, b) in digests.items())
        assert report("10", ok, detail)
