"""Closed-form bounds: absorbing radii, the L^inf transient bound, the L^2
envelope and the determining wavenumber.

Every unnamed absolute constant is a field of ``CalibrationConstants`` and
defaults to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .operators import ForcingSpec, lambda_pow
from .spectral import Domain, FieldError, lebesgue_norm, parseval_norm


@dataclass(frozen=True)
class CalibrationConstants:
    c_infty: float = 1.0
    c_thm: float = 1.0
    c_linfty: float = 1.0
    # coercivity constant C in the decay rate phi = (2 pi lambda0)^alpha C nu / 2
    c_phi: float = 1.0
    # constant C_2 in front of the low-mode residual of the source term
    c_psi: float = 1.0

    def __post_init__(self):
        for name in ("c_infty", "c_thm", "c_linfty", "c_phi", "c_psi"):
            if not getattr(self, name) > 0:
                raise FieldError(f"constants.{name} must be positive, got {getattr(self, name)}")

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in ("c_infty", "c_thm", "c_linfty", "c_phi", "c_psi")}


@dataclass(frozen=True)
class AbsorbingRadii:
    R2: float
    Rinfty: float
    Rinfty_simplified: float
    F: float


@dataclass(frozen=True)
class DeterminingScale:
    Lambda: float
    Q: int
    l: float
    constants: CalibrationConstants


def admissible_l(alpha: float, l: float) -> bool:
    if not 1.0 < alpha < 2.0:
        raise FieldError(f"alpha must lie in (1, 2), got {alpha}")
    return l > alpha / (alpha - 1.0)


def force_bound(forcing: ForcingSpec, domain: Domain, p: float) -> float:
    """F = ||g||_p sup_t |h(t)|."""
    return lebesgue_norm(forcing.spatial(domain), p) * forcing.sup_h


def negative_norm(forcing: ForcingSpec, domain: Domain, alpha: float) -> float:
    """||Lambda^{-alpha/2} g||_2 sup|h| via Parseval."""
    return parseval_norm(lambda_pow(forcing.spatial(domain), -alpha / 2.0)) * forcing.sup_h


def compute_R2(forcing: ForcingSpec, domain: Domain, nu: float, alpha: float) -> float:
    lam0 = domain.lambda0
    return negative_norm(forcing, domain, alpha) / (nu * lam0 ** (alpha / 2.0))


def _exponents(alpha: float, p: float) -> tuple[float, float]:
    if math.isinf(p):
        return 1.0 / (1.0 + alpha), alpha / (1.0 + alpha)
    den = p + p * alpha - 2.0
    return p / den, (p * alpha - 2.0) / den


def compute_Rinfty(
    forcing: ForcingSpec,
    domain: Domain,
    nu: float,
    alpha: float,
    p: float,
    constants: CalibrationConstants = CalibrationConstants(),
) -> tuple[float, float]:
    """(sharp, simplified) L^inf absorbing radius."""
    if not p > 2.0 / alpha:
        raise FieldError(f"p must exceed 2/alpha = {2.0 / alpha:.6g}, got {p}")
    F = force_bound(forcing, domain, p)
    R2 = compute_R2(forcing, domain, nu, alpha)
    a, b = _exponents(alpha, p)
    sharp = constants.c_infty * (F / nu) ** a * R2**b
    lam0 = domain.lambda0
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    simplified = constants.c_infty * lam0 ** (2.0 * inv_p - alpha) * F / nu
    return sharp, simplified


def absorbing_radii(
    forcing: ForcingSpec,
    domain: Domain,
    nu: float,
    alpha: float,
    p: float,
    constants: CalibrationConstants = CalibrationConstants(),
) -> AbsorbingRadii:
    sharp, simple = compute_Rinfty(forcing, domain, nu, alpha, p, constants)
    return AbsorbingRadii(
        R2=compute_R2(forcing, domain, nu, alpha),
        Rinfty=sharp,
        Rinfty_simplified=simple,
        F=force_bound(forcing, domain, p),
    )


def shell_for_wavenumber(Lambda: float, lambda0: float, rtol: float = 1e-12) -> int:
    """Smallest Q >= 0 with lambda0 2^Q >= Lambda (up to a relative rtol)."""
    target = Lambda * (1.0 - rtol)
    if target <= lambda0:
        return 0
    Q = max(0, math.ceil(math.log2(target / lambda0)))
    while Q > 0 and lambda0 * 2.0 ** (Q - 1) >= target:
        Q -= 1
    while lambda0 * 2.0**Q < target:
        Q += 1
    return Q


def determining_wavenumber(Rinfty: float, nu: float, alpha: float, l: float, c_thm: float = 1.0) -> float:
    return (c_thm * l * l * Rinfty / nu) ** (1.0 / (alpha - 1.0))


def compute_determining_Q(
    Rinfty: float,
    nu: float,
    alpha: float,
    l: float,
    constants: CalibrationConstants = CalibrationConstants(),
    lambda0: float = 1.0,
) -> DeterminingScale:
    """Lambda = (c_thm l^2 Rinfty / nu)^{1/(alpha-1)} and the shell reaching it.

    alpha = 2 is accepted as the closed end of the formula.
    """
    if not 1.0 < alpha <= 2.0:
        raise FieldError(f"alpha must lie in (1, 2], got {alpha}")
    if not l > alpha / (alpha - 1.0):
        raise FieldError(f"l = {l} is not admissible: need l > alpha/(alpha-1) = {alpha / (alpha - 1.0):.6g}")
    if Rinfty < 0:
        raise FieldError("Rinfty must be nonnegative")
    Lam = determining_wavenumber(Rinfty, nu, alpha, l, constants.c_thm)
    return DeterminingScale(Lam, shell_for_wavenumber(Lam, lambda0), l, constants)


def linfty_bound(
    t: float,
    theta0_l2: float,
    F: float,
    nu: float,
    alpha: float,
    p: float,
    constants: CalibrationConstants = CalibrationConstants(),
) -> float:
    """c_linfty (||theta0||_2 / (nu t)^{1/alpha} + (F/nu)^a ||theta0||_2^b)."""
    if not t > 0:
        raise FieldError(f"the L^inf bound needs t > 0, got {t}")
    a, b = _exponents(alpha, p)
    transient = theta0_l2 / (nu * t) ** (1.0 / alpha)
    return constants.c_linfty * (transient + (F / nu) ** a * theta0_l2**b)


def l2_envelope(t: float, theta0_l2: float, f_negnorm: float, nu: float, alpha: float, lambda0: float) -> float:
    """Square root of the L^2 decay envelope; ``f_negnorm`` is ||Lambda^{-alpha/2} f||_2."""
    if t < 0:
        raise FieldError("t must be nonnegative")
    rate = nu * (2.0 * math.pi * lambda0) ** alpha
    decay = math.exp(-rate * t)
    forced = f_negnorm**2 / (nu * nu * (2.0 * math.pi * lambda0) ** alpha)
    return math.sqrt(theta0_l2**2 * decay + forced * (1.0 - decay))


def settled_index(values: Sequence[float], rel_band: float = 0.01, tail: float = 0.1) -> int:
    """First index after which ``values`` stays within rel_band of its tail mean."""
    v = np.asarray(values, dtype=float)
    n = len(v)
    if n < 2:
        raise FieldError("need at least two samples to detect settling")
    ntail = max(1, int(round(tail * n)))
    target = float(np.mean(v[-ntail:]))
    if not target > 0:
        raise FieldError("trajectory decays to zero: no absorbing band of positive radius")
    outside = np.nonzero(np.abs(v - target) > rel_band * target)[0]
    return 0 if len(outside) == 0 else int(outside[-1]) + 1


def calibrate(
    linf: Sequence[float],
    l2: Sequence[float],
    forcing: ForcingSpec,
    domain: Domain,
    nu: float,
    alpha: float,
    p: float,
    constants: CalibrationConstants = CalibrationConstants(),
    rel_band: float = 0.01,
    min_window: int = 5,
) -> CalibrationConstants:
    """Set c_infty so the sharp radius equals the post-transient sup of ||theta||_inf.

    ``linf`` and ``l2`` are samples of one monitored run.  Raises when the
    L^2 norm never settles into a band of relative width ``rel_band``.
    """
    base, _ = compute_Rinfty(forcing, domain, nu, alpha, p, CalibrationConstants())
    if base == 0:
        raise FieldError("zero forcing: nothing to calibrate against")
    i0 = settled_index(l2, rel_band)
    if len(l2) - i0 < min_window:
        raise FieldError(
            f"transient never settles: only {len(l2) - i0} samples inside the {rel_band:.0%} band"
        )
    observed = float(np.max(np.asarray(linf, dtype=float)[i0:]))
    return replace(constants, c_infty=observed / base)
