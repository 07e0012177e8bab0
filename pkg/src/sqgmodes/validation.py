"""Invariant and oracle checks shared by the test suite and ``sqgmodes validate``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .littlewood_paley import phi_q, shell_system
from .operators import advection, advection_oracle, forcing, lambda_multiplier
from .spectral import Domain, SpectralField, from_modes, grid_norm, make_domain, random_field, reflect
from .timestepper import SqgParams, budget_hooks, energy_budget, simulate


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: value={self.value:.6g} threshold={self.threshold:.6g}"


def partition_of_unity(N: int = 64, samples: int = 10_000) -> Check:
    """max |sum_q phi_q(xi) - 1| over radii in [0, N/2], shells up to past N/2."""
    xi = np.linspace(0.0, N / 2, samples)
    q_top = int(math.ceil(math.log2(N))) + 1
    total = sum(phi_q(xi, q) for q in range(-1, q_top + 1))
    dev = float(np.max(np.abs(total - 1.0)))
    return Check("partition_of_unity", dev <= 1e-12, dev, 1e-12)


def lp_reconstruction(N: int = 64, seeds: int = 100) -> Check:
    """Worst relative residual of shell reconstruction and low-pass telescoping."""
    d = make_domain(1.0, N)
    S = shell_system(d)
    worst = 0.0
    for seed in range(seeds):
        c = random_field(d, seed, 1.0, (1, d.dealias_radius)).coeffs
        scale = np.abs(c).max()
        blocks = [c * S.block(q) for q in S.shells]
        worst = max(worst, np.abs(sum(blocks) - c).max() / scale)
        for Q in range(-1, S.q_max + 1):
            tele = c * S.lowpass_multiplier(Q) - sum(blocks[: Q + 2])
            worst = max(worst, np.abs(tele).max() / scale)
    return Check("lp_reconstruction", worst <= 1e-12, float(worst), 1e-12)


def shell_field(domain: Domain, q: int, seed: int) -> np.ndarray:
    """Seeded coefficients supported on block q.

    Each draw mixes random magnitudes with a random phase coherence, so the
    family ranges from incoherent noise to the in-phase extremizers that
    saturate Bernstein-type inequalities.
    """
    rng = np.random.default_rng(seed)
    kappa = rng.uniform(0.0, 1.0)
    mag = rng.uniform(0.5, 1.0, domain.kmag.shape)
    phase = kappa * rng.uniform(-np.pi, np.pi, domain.kmag.shape)
    mag = 0.5 * (mag + reflect(mag))
    phase = 0.5 * (phase - reflect(phase))
    return mag * np.exp(1j * phase) * shell_system(domain).block(q) * domain.mask


BERNSTEIN_PAIRS = ((2.0, math.inf), (2.0, 4.0), (4.0, math.inf))


def bernstein_ratios(N: int = 64, seeds: int = 200) -> dict[tuple[float, float], list[float]]:
    """Max over seeds of ||u_q||_r / (lambda_q^{2(1/s-1/r)} ||u_q||_s), per q >= 0."""
    d = make_domain(1.0, N)
    S = shell_system(d)
    out: dict[tuple[float, float], list[float]] = {pair: [] for pair in BERNSTEIN_PAIRS}
    for q in range(0, S.q_max + 1):
        grids = [d.coeffs_to_grid(shell_field(d, q, seed)) for seed in range(seeds)]
        lam = S.lambda_q(q)
        for s, r in BERNSTEIN_PAIRS:
            w = lam ** (2.0 * (1.0 / s - 1.0 / r))
            out[(s, r)].append(max(grid_norm(g, r, d.dx) / (w * grid_norm(g, s, d.dx)) for g in grids))
    return out


def bernstein(N: int = 64, seeds: int = 200) -> Check:
    ratios = bernstein_ratios(N, seeds)
    worst = max(max(v) for v in ratios.values())
    spread = max(max(v) / min(v) for v in ratios.values())
    ok = worst <= 10.0 and spread < 2.0
    detail = {f"{s:g},{r:g}": v for (s, r), v in ratios.items()}
    detail["spread"] = spread
    return Check("bernstein", ok, worst, 10.0, detail)


def coercivity_ratio(domain: Domain, coeffs: np.ndarray, q: int, l: float, alpha: float) -> float:
    """l int u Lambda^alpha u |u|^{l-2} dx / (lambda_q^alpha ||u||_l^l) by node quadrature."""
    u = domain.coeffs_to_grid(coeffs)
    lu = domain.coeffs_to_grid(coeffs * lambda_multiplier(domain, alpha))
    num = l * float(np.sum(u * lu * np.abs(u) ** (l - 2.0))) * domain.dx**2
    lam = shell_system(domain).lambda_q(q)
    return num / (lam**alpha * grid_norm(u, l, domain.dx) ** l)


def coercivity(N: int = 64, seeds: int = 200, ls=(2.0, 4.0, 6.0), alphas=(1.2, 1.5, 1.8)) -> Check:
    """Positive lower bound over shell fields, plus the single-mode closed form."""
    d = make_domain(1.0, N)
    S = shell_system(d)
    lowest = math.inf
    for q in range(0, S.q_max + 1):
        fields = [shell_field(d, q, seed) for seed in range(seeds)]
        for l in ls:
            for a in alphas:
                lowest = min(lowest, min(coercivity_ratio(d, c, q, l, a) for c in fields))
    single = 0.0
    for k, q in (((1, 0), 0), ((3, 0), 1), ((2, 2), 1), ((5, 0), 2)):
        c = from_modes(d, [(k, 0.5)]).coeffs
        for l in ls:
            for a in alphas:
                exact = (2.0 * math.pi * math.hypot(*k) / (S.lambda_q(q) * d.L)) ** a * l
                single = max(single, abs(coercivity_ratio(d, c, q, l, a) / exact - 1.0))
    ok = lowest > 0 and single <= 1e-10
    return Check("coercivity", ok, lowest, 0.0, {"single_mode_rel_error": single})


def oracle_equivalence(N: int = 64, seeds: int = 20, modes: int = 12) -> Check:
    """advection vs exact convolution on seeded sparse fields."""
    d = make_domain(1.0, N)
    worst = 0.0
    for seed in range(seeds):
        rng = np.random.default_rng(seed)
        picks = []
        while len(picks) < modes:
            k = tuple(int(v) for v in rng.integers(-10, 11, size=2))
            if k != (0, 0) and math.hypot(*k) <= d.dealias_radius:
                picks.append((k, complex(rng.normal(), rng.normal())))
        theta = from_modes(d, picks)
        fast = advection(theta).coeffs
        slow = advection_oracle(theta).coeffs
        worst = max(worst, np.abs(fast - slow).max() / max(np.abs(slow).max(), 1e-300))
    for modes_, expect in _closed_forms(d):
        theta = from_modes(d, modes_)
        worst = max(worst, np.abs(advection(theta).coeffs - expect).max())
    return Check("oracle_equivalence", worst <= 1e-11, float(worst), 1e-11)


def _closed_forms(d: Domain):
    zero = np.zeros((d.N, d.N), dtype=complex)
    yield [((1, 0), -0.5j), ((0, 1), 0.5)], zero
    # 2 pi sin(2 pi x1) sin(4 pi x2) = -(pi/2) sum of cos(k.x) terms
    expect = from_modes(d, [((1, 2), -math.pi / 2), ((1, -2), math.pi / 2)]).coeffs
    yield [((1, 0), 0.5), ((0, 2), 0.5)], expect


def single_mode_decay(N: int = 64, dt: float = 1e-3, horizon: float = 1.0) -> tuple[float, dict]:
    """Relative error of the IF-RK4 solution against e^{-(2 pi)^1.5 t} cos(2 pi x1)."""
    d = make_domain(1.0, N)
    params = SqgParams(nu=1.0, alpha=1.5)
    theta0 = from_modes(d, [((1, 0), 0.5)])
    hooks = budget_hooks(params, d)
    traj = simulate(theta0, params, horizon, hooks, dt=dt, cadence=1)
    exact = 0.5 * math.exp(-((2.0 * math.pi) ** 1.5) * traj.final.t)
    got = traj.final.theta.coeffs
    want = from_modes(d, [((1, 0), exact)]).coeffs
    rel = float(np.abs(got - want).max() / exact)
    residual = energy_budget(
        traj.array("t"), traj.array("energy"), traj.array("dissipation"), traj.array("work"), params.nu
    )
    return rel, {"t": traj.final.t, "budget": residual, "trajectory": traj}


def analytic_decay() -> Check:
    rel, info = single_mode_decay()
    return Check("analytic_decay", rel <= 1e-8, rel, 1e-8, {"t": info["t"]})


ACCEPTANCE_AMPLITUDE = 0.487


def acceptance_forcing():
    """Low-mode constant forcing with F = ||g||_4 close to 1.5 at N = 128."""
    a = ACCEPTANCE_AMPLITUDE
    return forcing([[1, 0, a, 0], [1, 1, 0, -a], [0, 2, a, 0]])


def forced_budget(N: int = 128, dt: float = 1e-3, horizon: float = 5.0, seed: int = 1):
    d = make_domain(1.0, N)
    params = SqgParams(nu=0.5, alpha=1.5, p=4.0, l=4.0, forcing=acceptance_forcing())
    theta0 = random_field(d, seed, 1.0, (1, 8), 0.1)
    traj = simulate(theta0, params, horizon, budget_hooks(params, d), dt=dt, cadence=1)
    residual = energy_budget(
        traj.array("t"), traj.array("energy"), traj.array("dissipation"), traj.array("work"), params.nu
    )
    return residual, traj


def energy_equality(forced_horizon: float = 5.0) -> Check:
    _, info = single_mode_decay()
    forced, _ = forced_budget(horizon=forced_horizon)
    ok = info["budget"] <= 1e-8 and forced <= 1e-5
    return Check("energy_equality", ok, forced, 1e-5, {"unforced": info["budget"], "forced": forced})


SUITE: dict[str, Callable[[], Check]] = {
    "partition_of_unity": partition_of_unity,
    "lp_reconstruction": lp_reconstruction,
    "bernstein": bernstein,
    "coercivity": coercivity,
    "oracle_equivalence": oracle_equivalence,
    "energy_equality": energy_equality,
    "analytic_decay": analytic_decay,
}


def run_suite(names=None) -> list[Check]:
    return [SUITE[n]() for n in (names or SUITE)]
