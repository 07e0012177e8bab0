"""Twin-synchronization experiments for the determining-wavenumber theorem.

Two solvers run side by side.  The reference field theta1 evolves freely;
after a spin-up the second field theta2 is launched and, after every step,
its low modes are overwritten with those of theta1.  The difference
w = theta1 - theta2 then lives above the slaving scale and its B^0_{l,l}
norm is monitored.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np

from .bounds import (
    AbsorbingRadii,
    CalibrationConstants,
    absorbing_radii,
    admissible_l,
    calibrate,
    compute_determining_Q,
)
from .littlewood_paley import shell_system
from .operators import Force, ForcingSpec, lambda_multiplier
from .spectral import Domain, FieldError, SpectralField, grid_norm, random_field
from .timestepper import DEFAULT_DT_MAX, SimState, SqgParams, Stepper, _plan, cfl_dt, simulate

ProjectionKind = Literal["smooth_lp", "sharp_truncation"]
Verdict = Literal["synchronized", "not_synchronized", "inconclusive"]

SYNC_TOL = 1e-6
FAIL_TOL = 1e-1
FIT_FLOOR = 1e-14
MIN_FIT_SAMPLES = 10


@dataclass(frozen=True)
class TwinConfig:
    """Everything that determines one twin run; runs are deterministic in it."""

    domain: Domain
    params: SqgParams
    Q: int
    projection_kind: ProjectionKind = "smooth_lp"
    seed1: int = 1
    seed2: int = 2
    horizon: float = 3.0
    cadence: int = 10
    spinup: float = 2.0
    dt_max: float = DEFAULT_DT_MAX
    init_band: tuple[float, float] = (1.0, 8.0)
    init_decay: float = 1.0
    init_amplitude: float = 0.1
    constants: CalibrationConstants = CalibrationConstants()
    # perturbation of theta2's force: epsilon * exp(-gamma (t - spinup)) g_pert
    epsilon: float = 0.0
    gamma: float = 1.0
    perturbation: ForcingSpec = ForcingSpec()

    def __post_init__(self):
        if self.projection_kind not in ("smooth_lp", "sharp_truncation"):
            raise FieldError(f"unknown projection_kind {self.projection_kind!r}")
        if self.Q < -1:
            raise FieldError(f"Q must be >= -1, got {self.Q}")
        if not self.horizon > 0:
            raise FieldError("horizon must be positive")
        if self.spinup < 0:
            raise FieldError("spinup must be nonnegative")
        if self.cadence < 1:
            raise FieldError("cadence must be >= 1")

    def initial_fields(self) -> tuple[SpectralField, SpectralField]:
        mk = lambda seed: random_field(
            self.domain, seed, self.init_decay, self.init_band, self.init_amplitude
        )
        return mk(self.seed1), mk(self.seed2)


@dataclass
class SyncResult:
    times: np.ndarray
    besov_w: np.ndarray
    l2_w: np.ndarray
    linf_theta1: np.ndarray
    linf_theta2: np.ndarray
    force_gap: np.ndarray
    shell_w: np.ndarray  # (samples, shells), q = -1..q_max
    lowpass_w: np.ndarray  # ||P_{<=Q} w||_2
    fitted_rate: float
    fit_r2: float
    verdict: Verdict
    entry_time: float  # first time ||theta1||_inf <= Rinfty, nan if never
    entry_time_l2: float  # first time ||theta1||_2 <= R2, nan if never
    radii: AbsorbingRadii
    Q: int
    l: float
    dt: float
    spinup: float

    @property
    def decay_ratio(self) -> float:
        b0 = self.besov_w[0]
        return float(self.besov_w[-1] / b0) if b0 > 0 else 0.0

    @property
    def decades(self) -> float:
        r = self.decay_ratio
        return math.inf if r == 0 else -math.log10(r)

    @property
    def shells(self) -> list[int]:
        return list(range(-1, self.shell_w.shape[1] - 1))

    def columns(self) -> dict[str, np.ndarray]:
        """CSV columns in their fixed order."""
        cols = {
            "t": self.times,
            "besov_w": self.besov_w,
            "l2_w": self.l2_w,
            "linf_theta1": self.linf_theta1,
            "linf_theta2": self.linf_theta2,
            "force_gap": self.force_gap,
        }
        for i, q in enumerate(self.shells):
            cols[f"shell_q{q}_w"] = self.shell_w[:, i]
        return cols

    def summary(self) -> dict:
        return {
            "Q": self.Q,
            "l": self.l,
            "fitted_rate": self.fitted_rate,
            "fit_r2": self.fit_r2,
            "verdict": self.verdict,
            "decay_ratio": self.decay_ratio,
            "entry_time": self.entry_time,
            "entry_time_l2": self.entry_time_l2,
            "R2": self.radii.R2,
            "Rinfty": self.radii.Rinfty,
            "dt": self.dt,
            "spinup": self.spinup,
        }


@dataclass(frozen=True)
class DecayDiagnostics:
    xi: np.ndarray
    phi: float
    psi: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        if np.any(self.xi < 0):
            raise FieldError("xi must be nonnegative")


def slaving_mask(domain: Domain, Q: int, kind: ProjectionKind) -> np.ndarray:
    """Boolean set of wavevectors whose coefficients theta2 takes from theta1.

    smooth_lp takes every mode the low-pass filter touches, so P_{<=Q} w = 0
    holds exactly; sharp_truncation takes |k| <= 2^Q.
    """
    shells = shell_system(domain)
    if kind == "smooth_lp":
        return shells.lowpass_multiplier(Q) > 0
    if kind == "sharp_truncation":
        return shells.sharp_multiplier(Q) > 0
    raise FieldError(f"unknown projection_kind {kind!r}")


def verdict_for(ratio: float, sync_tol: float = SYNC_TOL, fail_tol: float = FAIL_TOL) -> Verdict:
    if ratio <= sync_tol:
        return "synchronized"
    if ratio >= fail_tol:
        return "not_synchronized"
    return "inconclusive"


def fit_decay_rate(times: Sequence[float], values: Sequence[float], floor: float = FIT_FLOOR) -> tuple[float, float]:
    """Least-squares decay rate of ln(values) against times, with r^2.

    The window stops at the first value below ``floor * values[0]``.  A
    constant series gives (0, 0).
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape:
        raise FieldError("times and values differ in length")
    if len(v) == 0 or not v[0] > 0:
        raise FieldError("decay fit needs a positive initial value")
    below = np.nonzero(v < floor * v[0])[0]
    n = int(below[0]) if len(below) else len(v)
    if n < MIN_FIT_SAMPLES:
        raise FieldError(f"decay fit needs >= {MIN_FIT_SAMPLES} samples above the floor, got {n}")
    t, v = t[:n], v[:n]
    if np.any(v <= 0):
        raise FieldError("nonpositive values inside the fit window")
    y = np.log(v)
    tc = t - t.mean()
    yc = y - y.mean()
    sst = float(np.dot(yc, yc))
    if sst == 0.0:
        return 0.0, 0.0
    slope = float(np.dot(tc, yc) / np.dot(tc, tc))
    resid = yc - slope * tc
    r2 = 1.0 - float(np.dot(resid, resid)) / sst
    return -slope, r2


def _safe_fit(times: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    try:
        return fit_decay_rate(times, values)
    except FieldError:
        return math.nan, math.nan


def _first_time(times: Sequence[float], values: Sequence[float], level: float) -> float:
    for t, v in zip(times, values):
        if v <= level:
            return float(t)
    return math.nan


class _Monitor:
    """Per-sample diagnostics of the pair (theta1, theta2)."""

    def __init__(self, cfg: TwinConfig, gap_force: Force | None):
        d, p = cfg.domain, cfg.params
        self.d = d
        self.l = p.l
        self.shells = shell_system(d)
        self.lp = self.shells.lowpass_multiplier(cfg.Q)
        self.gap_force = gap_force
        self.gap_mult = lambda_multiplier(d, -p.alpha * (1.0 - 1.0 / p.l))
        self.rows: dict[str, list] = {k: [] for k in ("t", "besov", "l2", "linf1", "linf2", "gap", "shells", "lowpass")}

    def besov0(self, coeffs: np.ndarray) -> tuple[float, np.ndarray]:
        norms = self.shells.shell_norms_from_coeffs(coeffs, self.l)
        return self.shells.besov_from_norms(norms, 0.0, self.l), norms

    def __call__(self, t: float, c1: np.ndarray, c2: np.ndarray):
        d, r = self.d, self.rows
        w = c1 - c2
        b, norms = self.besov0(w)
        r["t"].append(t)
        r["besov"].append(b)
        r["shells"].append(norms)
        r["l2"].append(d.L * math.sqrt(float(np.sum(np.abs(w) ** 2))))
        r["lowpass"].append(d.L * math.sqrt(float(np.sum(np.abs(self.lp * w) ** 2))))
        r["linf1"].append(grid_norm(d.coeffs_to_grid(c1), math.inf, d.dx))
        r["linf2"].append(grid_norm(d.coeffs_to_grid(c2), math.inf, d.dx))
        if self.gap_force is None:
            r["gap"].append(0.0)
        else:
            r["gap"].append(self.besov0(self.gap_mult * self.gap_force.coeffs(t))[0])


def _run(cfg: TwinConfig, perturbed: bool) -> SyncResult:
    d, p = cfg.domain, cfg.params
    if not admissible_l(p.alpha, p.l):
        raise FieldError(f"l = {p.l} is not admissible: need l > alpha/(alpha-1) = {p.alpha / (p.alpha - 1):.6g}")
    radii = absorbing_radii(p.forcing, d, p.nu, p.alpha, p.p, cfg.constants)
    theta1, theta2 = cfg.initial_fields()
    force1 = Force.of(d, p.forcing)
    force2, gap = force1, None
    if perturbed and cfg.epsilon != 0 and not cfg.perturbation.is_zero:
        pert = ForcingSpec(cfg.perturbation.modes, "exp_decay", cfg.gamma)
        force2 = force1.plus(pert, cfg.epsilon, cfg.spinup)
        # f1 - f2 is the perturbation term alone
        gap = Force(d, [(pert, -cfg.epsilon, cfg.spinup)])

    dt0 = min(
        cfl_dt(SimState(theta1), p, cfg.dt_max),
        cfl_dt(SimState(theta2), p, cfg.dt_max),
    )
    c1 = theta1.coeffs
    entry_t: list[float] = []
    entry_linf: list[float] = []
    entry_l2: list[float] = []

    def watch(t: float, c: np.ndarray):
        entry_t.append(t)
        entry_linf.append(grid_norm(d.coeffs_to_grid(c), math.inf, d.dx))
        entry_l2.append(d.L * math.sqrt(float(np.sum(np.abs(c) ** 2))))

    watch(0.0, c1)
    if cfg.spinup > 0:
        n_sp, h_sp = _plan(cfg.spinup, dt0)
        spin = Stepper(d, p, h_sp, force1)
        for k in range(n_sp):
            c1 = spin.advance(c1, k * h_sp)
            if (k + 1) % cfg.cadence == 0:
                watch((k + 1) * h_sp, c1)

    n, h = _plan(cfg.horizon, dt0)
    s1 = Stepper(d, p, h, force1)
    s2 = Stepper(d, p, h, force2)
    slave = slaving_mask(d, cfg.Q, cfg.projection_kind)
    mon = _Monitor(cfg, gap)
    c2 = theta2.coeffs
    t0 = cfg.spinup
    mon(t0, c1, c2)
    for k in range(n):
        t = t0 + k * h
        c1 = s1.advance(c1, t)
        c2 = np.where(slave, c1, s2.advance(c2, t))
        if (k + 1) % cfg.cadence == 0 or k + 1 == n:
            tk = t0 + (k + 1) * h if k + 1 < n else t0 + cfg.horizon
            mon(tk, c1, c2)
            watch(tk, c1)

    r = mon.rows
    times = np.asarray(r["t"])
    besov = np.asarray(r["besov"])
    ratio = besov[-1] / besov[0] if besov[0] > 0 else 0.0
    rate, r2 = _safe_fit(times[1:], besov[1:])
    return SyncResult(
        times=times,
        besov_w=besov,
        l2_w=np.asarray(r["l2"]),
        linf_theta1=np.asarray(r["linf1"]),
        linf_theta2=np.asarray(r["linf2"]),
        force_gap=np.asarray(r["gap"]),
        shell_w=np.asarray(r["shells"]),
        lowpass_w=np.asarray(r["lowpass"]),
        fitted_rate=rate,
        fit_r2=r2,
        verdict=verdict_for(ratio),
        entry_time=_first_time(entry_t, entry_linf, radii.Rinfty),
        entry_time_l2=_first_time(entry_t, entry_l2, radii.R2),
        radii=radii,
        Q=cfg.Q,
        l=p.l,
        dt=h,
        spinup=cfg.spinup,
    )


def twin_sync_run(cfg: TwinConfig) -> SyncResult:
    """Slave theta2's low modes to theta1 after every step and record w."""
    return _run(cfg, perturbed=False)


def force_perturbation_run(cfg: TwinConfig, epsilon: float | None = None, gamma: float | None = None) -> SyncResult:
    """Twin run where theta2 also feels epsilon e^{-gamma (t - spinup)} g_pert.

    ``epsilon`` and ``gamma`` override the values stored in ``cfg``.
    """
    if epsilon is not None or gamma is not None:
        cfg = replace(
            cfg,
            epsilon=cfg.epsilon if epsilon is None else float(epsilon),
            gamma=cfg.gamma if gamma is None else float(gamma),
        )
    return _run(cfg, perturbed=True)


@dataclass
class SweepResult:
    rows: list[tuple[int, Verdict, float, float]]  # (Q, verdict, fitted_rate, decay_ratio)
    Q_crit: int | None
    Q_theory: int
    Lambda_theory: float
    implied_c_thm: float
    monotone_violations: list[int] = field(default_factory=list)
    Rinfty: float = math.nan

    def summary(self) -> dict:
        return {
            "Q_crit": self.Q_crit,
            "Q_theory": self.Q_theory,
            "Lambda_theory": self.Lambda_theory,
            "implied_c_thm": self.implied_c_thm,
            "monotone_violations": self.monotone_violations,
            "Rinfty": self.Rinfty,
            "rows": [
                {"Q": q, "verdict": v, "fitted_rate": rate, "decay_ratio": ratio}
                for q, v, rate, ratio in self.rows
            ],
        }


def _sweep_point(cfg: TwinConfig) -> tuple[int, Verdict, float, float]:
    res = twin_sync_run(cfg)
    return cfg.Q, res.verdict, res.fitted_rate, res.decay_ratio


def max_workers() -> int:
    env = os.environ.get("SQG_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise FieldError(f"SQG_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def implied_c_thm(Q: int, lambda0: float, alpha: float, nu: float, l: float, Rinfty: float) -> float:
    """The c_thm for which the theoretical scale lands exactly on shell Q."""
    if not Rinfty > 0:
        return math.nan
    return (lambda0 * 2.0**Q) ** (alpha - 1.0) * nu / (l * l * Rinfty)


def threshold_sweep(base: TwinConfig, Q_list: Sequence[int] | None = None, workers: int | None = None) -> SweepResult:
    """Run the twin experiment at each Q and locate the smallest synchronizing Q.

    The theoretical Q is evaluated with c_thm = 1 and the remaining
    constants of ``base``.
    """
    d, p = base.domain, base.params
    qs = list(Q_list) if Q_list is not None else list(shell_system(d).shells)[1:]
    if not qs:
        raise FieldError("Q_list is empty")
    if any(b <= a for a, b in zip(qs, qs[1:])):
        raise FieldError("Q_list must be strictly ascending")
    cfgs = [replace(base, Q=q) for q in qs]
    nw = min(workers or max_workers(), len(cfgs))
    if nw > 1:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            rows = list(pool.map(_sweep_point, cfgs))
    else:
        rows = [_sweep_point(c) for c in cfgs]
    if all(v == "inconclusive" for _, v, _, _ in rows):
        raise FieldError("every sweep point was inconclusive; lengthen the horizon")

    sync = [q for q, v, _, _ in rows if v == "synchronized"]
    Q_crit = sync[0] if sync else None
    violations = []
    if Q_crit is not None:
        violations = [q for q, v, _, _ in rows if q > Q_crit and v != "synchronized"]

    radii = absorbing_radii(p.forcing, d, p.nu, p.alpha, p.p, base.constants)
    theory = compute_determining_Q(
        radii.Rinfty, p.nu, p.alpha, p.l, replace(base.constants, c_thm=1.0), d.lambda0
    )
    c_impl = (
        implied_c_thm(Q_crit, d.lambda0, p.alpha, p.nu, p.l, radii.Rinfty) if Q_crit is not None else math.nan
    )
    return SweepResult(rows, Q_crit, theory.Q, theory.Lambda, c_impl, violations, radii.Rinfty)


def decay_diagnostics(result: SyncResult, params: SqgParams, domain: Domain, constants: CalibrationConstants) -> DecayDiagnostics:
    """Grönwall data: xi = ||w||^l_{B^0_{l,l}}, the rate phi and the source psi.

    psi = (2/(C nu))^{l-1} l^{l-2} gap^l + C_2 Lambda^{(l-1)(alpha-1)} Rinfty l^2
    sum_{q<=Q} ||w_q||_l^l, with C = c_phi and C_2 = c_psi.
    """
    l, a, nu = params.l, params.alpha, params.nu
    C, C2 = constants.c_phi, constants.c_psi
    phi = 0.5 * (2.0 * math.pi * domain.lambda0) ** a * C * nu
    Lam = domain.lambda0 * 2.0**result.Q
    nq = max(0, min(result.Q, result.shell_w.shape[1] - 2) + 2)
    low = np.sum(result.shell_w[:, :nq] ** l, axis=1)
    force_term = (2.0 / (C * nu)) ** (l - 1.0) * l ** (l - 2.0) * result.force_gap**l
    low_term = C2 * Lam ** ((l - 1.0) * (a - 1.0)) * result.radii.Rinfty * l * l * low
    return DecayDiagnostics(result.besov_w**l, phi, force_term + low_term, result.times)


def gronwall_check(diag: DecayDiagnostics, dt: float, slack: float = 1e-3) -> tuple[bool, float]:
    """Discrete d xi/dt + phi xi <= psi + slack max(xi); returns (ok, worst margin).

    The margin is the largest excess of the left side over the right side;
    it is <= 0 exactly when the check holds.
    """
    xi, psi = np.asarray(diag.xi, float), np.asarray(diag.psi, float)
    if xi.shape != psi.shape:
        raise FieldError("xi and psi differ in length")
    if len(xi) < 2:
        raise FieldError("need at least two samples")
    if not dt > 0:
        raise FieldError("dt must be positive")
    lhs = (xi[1:] - xi[:-1]) / dt + diag.phi * xi[:-1]
    excess = lhs - psi[:-1] - slack * float(xi.max())
    worst = float(excess.max())
    return worst <= 0.0, worst


def calibration_run(
    domain: Domain,
    params: SqgParams,
    seed: int = 1,
    horizon: float = 6.0,
    cadence: int = 10,
    dt_max: float = DEFAULT_DT_MAX,
    init_band: tuple[float, float] = (1.0, 8.0),
    init_decay: float = 1.0,
    init_amplitude: float = 0.1,
    constants: CalibrationConstants = CalibrationConstants(),
) -> CalibrationConstants:
    """Run one forced trajectory and set c_infty from its settled L^inf level."""
    theta0 = random_field(domain, seed, init_decay, init_band, init_amplitude)

    def linf(s: SimState) -> float:
        return grid_norm(domain.coeffs_to_grid(s.theta.coeffs), math.inf, domain.dx)

    def l2(s: SimState) -> float:
        return domain.L * math.sqrt(float(np.sum(np.abs(s.theta.coeffs) ** 2)))

    traj = simulate(theta0, params, horizon, {"linf": linf, "l2": l2}, dt_max=dt_max, cadence=cadence)
    return calibrate(
        traj.array("linf"), traj.array("l2"), params.forcing, domain, params.nu, params.alpha, params.p, constants
    )
