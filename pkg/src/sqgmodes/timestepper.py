"""Integrating-factor RK4 for d theta/dt + u.grad theta + nu Lambda^alpha theta = f."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import make_interp_spline

from .operators import Force, ForcingSpec, kernel_for, lambda_multiplier, riesz_symbols
from .spectral import Domain, FieldError, SpectralField

DEFAULT_DT_MAX = 1e-2
CFL_SAFETY = 0.5
CFL_RECHECK_STEPS = 100


class SolverError(RuntimeError):
    """Non-finite state or other failure while stepping; carries the time."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t={t:.17g}")
        self.t = t


@dataclass(frozen=True)
class SqgParams:
    nu: float
    alpha: float
    p: float = 4.0
    l: float = 4.0
    forcing: ForcingSpec = ForcingSpec()

    def __post_init__(self):
        if not self.nu > 0:
            raise FieldError(f"nu must be positive, got {self.nu}")
        if not 1.0 < self.alpha < 2.0:
            raise FieldError(f"alpha must lie in (1, 2), got {self.alpha}")
        if not self.p > 2.0 / self.alpha:
            raise FieldError(f"p must exceed 2/alpha = {2.0 / self.alpha:.6g}, got {self.p}")
        if not self.l >= 1:
            raise FieldError(f"l must be >= 1, got {self.l}")


@dataclass(frozen=True, eq=False)
class SimState:
    theta: SpectralField
    t: float = 0.0
    step_count: int = 0


class Stepper:
    """Fixed-dt IF-RK4 on coefficient arrays.

    The linear term is propagated exactly by exp(-nu (2 pi |k|/L)^alpha dt);
    advection and forcing are the explicit part.
    """

    def __init__(self, domain: Domain, params: SqgParams, dt: float, force: Force | None = None):
        if not dt > 0:
            raise FieldError(f"dt must be positive, got {dt}")
        self.domain = domain
        self.params = params
        self.dt = dt
        self.force = force if force is not None else Force.of(domain, params.forcing)
        self._forced = not self.force.is_zero
        self._adv = kernel_for(domain)
        rate = params.nu * lambda_multiplier(domain, params.alpha)
        self._e = np.exp(-rate * dt)
        self._e2 = np.exp(-rate * dt / 2.0)

    def rhs(self, c: np.ndarray, t: float) -> np.ndarray:
        n = -self._adv(c)
        if self._forced:
            n = n + self.force.coeffs(t)
        return n

    def advance(self, c: np.ndarray, t: float) -> np.ndarray:
        dt, e, e2 = self.dt, self._e, self._e2
        # overflow is reported below as a SolverError, not as a warning
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = self.rhs(c, t)
            k2 = self.rhs(e2 * (c + 0.5 * dt * k1), t + 0.5 * dt)
            k3 = self.rhs(e2 * c + 0.5 * dt * k2, t + 0.5 * dt)
            k4 = self.rhs(e * c + dt * (e2 * k3), t + dt)
            out = e * c + (dt / 6.0) * (e * k1 + 2.0 * e2 * (k2 + k3) + k4)
        if not np.isfinite(out).all():
            raise SolverError("non-finite coefficients after step", t + dt)
        return out

    def step(self, state: SimState) -> SimState:
        c = self.advance(state.theta.coeffs, state.t)
        return SimState(SpectralField(self.domain, c), state.t + self.dt, state.step_count + 1)


def step(state: SimState, params: SqgParams, dt: float, force: Force | None = None) -> SimState:
    """One IF-RK4 step; builds a throwaway Stepper (use Stepper in loops)."""
    return Stepper(state.theta.domain, params, dt, force).step(state)


def max_speed(coeffs: np.ndarray, domain: Domain) -> float:
    s1, s2 = riesz_symbols(domain)
    z = np.fft.ifft2(s1 * coeffs + 1j * (s2 * coeffs)) * (domain.N * domain.N)
    return float(np.abs(z).max())


def cfl_dt(state: SimState, params: SqgParams | None = None, dt_max: float = DEFAULT_DT_MAX) -> float:
    """0.5 * (L/N) / max|u|, capped at dt_max.  ``params`` is accepted for symmetry."""
    d = state.theta.domain
    umax = max(1e-30, max_speed(state.theta.coeffs, d))
    return min(dt_max, CFL_SAFETY * d.dx / umax)


Hook = Callable[[SimState], float]


@dataclass
class Trajectory:
    final: SimState
    dt: float  # step size in force at the end of the run
    series: dict[str, list[float]]

    def array(self, name: str) -> np.ndarray:
        return np.asarray(self.series[name])


def _plan(horizon: float, dt: float) -> tuple[int, float]:
    n = max(1, math.ceil(horizon / dt - 1e-9))
    return n, horizon / n


def simulate(
    initial: SpectralField,
    params: SqgParams,
    horizon: float,
    hooks: Mapping[str, Hook] | None = None,
    *,
    dt: float | None = None,
    dt_max: float = DEFAULT_DT_MAX,
    cadence: int = 10,
    force: Force | None = None,
    recheck_cfl: bool = False,
    t0: float = 0.0,
) -> Trajectory:
    """Advance ``initial`` from t0 to t0 + horizon with a fixed step.

    The step is ``dt`` when given, otherwise the initial CFL step shrunk so
    that an integer number of steps lands exactly on the horizon.  Hooks run
    on the initial state and then every ``cadence`` steps (and at the end).
    """
    if horizon < 0:
        raise FieldError(f"horizon must be nonnegative, got {horizon}")
    state = SimState(initial, t0, 0)
    hooks = dict(hooks or {})
    series: dict[str, list[float]] = {"t": [], **{k: [] for k in hooks}}
    if horizon == 0:
        return Trajectory(state, 0.0, series)
    if cadence < 1:
        raise FieldError("cadence must be >= 1")

    def record(s: SimState):
        series["t"].append(s.t)
        for name, fn in hooks.items():
            series[name].append(float(fn(s)))

    base_dt = dt if dt is not None else cfl_dt(state, params, dt_max)
    n_steps, h = _plan(horizon, base_dt)
    stepper = Stepper(initial.domain, params, h, force)
    t_end = t0 + horizon
    record(state)
    c, t, k = initial.coeffs, t0, 0
    seg_t0, seg_k = t0, 0
    while k < n_steps:
        c = stepper.advance(c, t)
        k += 1
        t = t_end if k == n_steps else seg_t0 + (k - seg_k) * stepper.dt
        if k % cadence == 0 or k == n_steps:
            record(SimState(SpectralField(initial.domain, c), t, k))
        if recheck_cfl and dt is None and k % CFL_RECHECK_STEPS == 0 and k < n_steps:
            limit = cfl_dt(SimState(SpectralField(initial.domain, c), t), params, dt_max)
            if limit < stepper.dt:
                rem, h2 = _plan(t_end - t, limit)
                n_steps = k + rem
                seg_t0, seg_k = t, k
                stepper = Stepper(initial.domain, params, h2, force)
    return Trajectory(SimState(SpectralField(initial.domain, c), t, k), stepper.dt, series)


def budget_hooks(params: SqgParams, domain: Domain, force: Force | None = None) -> dict[str, Hook]:
    """Hooks recording ||theta||^2, ||Lambda^{alpha/2} theta||^2 and (f, theta)."""
    area = domain.L**2
    m = lambda_multiplier(domain, params.alpha)
    f = force if force is not None else Force.of(domain, params.forcing)

    def energy(s: SimState) -> float:
        return area * float(np.sum(np.abs(s.theta.coeffs) ** 2))

    def dissipation(s: SimState) -> float:
        return area * float(np.sum(m * np.abs(s.theta.coeffs) ** 2))

    def work(s: SimState) -> float:
        return area * float(np.real(np.vdot(s.theta.coeffs, f.coeffs(s.t))))

    return {"energy": energy, "dissipation": dissipation, "work": work}


def cumulative_integral(t: np.ndarray, y: np.ndarray, method: str = "spline") -> np.ndarray:
    """Running integral from t[0]; ``spline`` is a quintic interpolant, else trapezoid."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(t) < 2:
        return np.zeros_like(t)
    if method == "trapezoid":
        return cumulative_trapezoid(y, t, initial=0.0)
    if method != "spline":
        raise FieldError(f"unknown quadrature {method!r}")
    k = min(5, len(t) - 1)
    anti = make_interp_spline(t, y, k=k).antiderivative()
    return anti(t) - anti(t[0])


def energy_budget(
    times,
    energy,
    dissipation,
    work,
    nu: float,
    method: str = "spline",
) -> float:
    """Worst relative defect of d/dt ||theta||^2 = -2 nu ||Lambda^{a/2} theta||^2 + 2 (f, theta).

    Returns max_t |E(t) - E(0) + 2 nu int D - 2 int W| / E(0).
    """
    t = np.asarray(times, dtype=float)
    if len(t) == 0:
        raise FieldError("energy budget needs a nonempty series")
    E = np.asarray(energy, dtype=float)
    D = cumulative_integral(t, dissipation, method)
    W = cumulative_integral(t, work, method)
    defect = E - E[0] + 2.0 * nu * D - 2.0 * W
    scale = E[0] if E[0] > 0 else float(np.max(E))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(defect)) / scale)
