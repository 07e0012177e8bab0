"""Dyadic Littlewood-Paley blocks, low-pass filters and Besov norms.

Shell q >= 0 has multiplier phi(2^-q |k|) with phi(r) = chi(r/2) - chi(r);
shell -1 is chi(|k|) itself.  |k| is measured in integer lattice units, so
shell q sits around the wavenumber lambda_q = 2^q / L.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .spectral import Domain, FieldError, SpectralField, grid_norm

CHI_INNER = 0.75


def _smoothstep(t):
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


def chi(xi_norm):
    """Radial cutoff: 1 on [0, 3/4], 0 on [1, inf), quintic smoothstep between."""
    x = np.asarray(xi_norm, dtype=float)
    if np.any(x < 0):
        raise FieldError("chi is defined for nonnegative radii only")
    t = np.clip((x - CHI_INNER) * 4.0, 0.0, 1.0)
    out = 1.0 - _smoothstep(t)
    return float(out) if out.ndim == 0 else out


def phi_q(xi_norm, q: int):
    """Multiplier of block q evaluated at lattice radius ``xi_norm``."""
    if q < -1:
        raise FieldError(f"shell index must be >= -1, got {q}")
    if q == -1:
        return chi(xi_norm)
    x = np.asarray(xi_norm, dtype=float)
    return chi(x / 2.0 ** (q + 1)) - chi(x / 2.0**q)


def q_max_for(domain: Domain) -> int:
    """Largest shell whose support reaches lattice points inside the dealias disk."""
    q = -1
    while CHI_INNER * 2.0 ** (q + 1) < domain.dealias_radius:
        q += 1
    return q


@dataclass(frozen=True)
class ShellSystem:
    domain: Domain

    @cached_property
    def q_max(self) -> int:
        return q_max_for(self.domain)

    @property
    def shells(self) -> range:
        return range(-1, self.q_max + 1)

    def lambda_q(self, q: int) -> float:
        return 2.0**q / self.domain.L

    @cached_property
    def _blocks(self) -> dict[int, np.ndarray]:
        return {q: phi_q(self.domain.kmag, q) for q in self.shells}

    def block(self, q: int) -> np.ndarray:
        if q < -1 or q > self.q_max:
            raise FieldError(f"shell {q} outside [-1, {self.q_max}]")
        return self._blocks[q]

    def lowpass_multiplier(self, Q: int) -> np.ndarray:
        if Q < -1:
            raise FieldError(f"low-pass index must be >= -1, got {Q}")
        return chi(self.domain.kmag / 2.0 ** (Q + 1))

    def sharp_multiplier(self, Q: int) -> np.ndarray:
        """Indicator of |k| <= 2^Q, i.e. wavenumbers up to lambda0 2^Q."""
        return (self.domain.kmag <= 2.0**Q).astype(float)

    def shell_project(self, theta: SpectralField, q: int) -> SpectralField:
        _check_domain(self, theta)
        return SpectralField(theta.domain, theta.coeffs * self.block(q))

    def lowpass(self, theta: SpectralField, Q: int) -> SpectralField:
        _check_domain(self, theta)
        return SpectralField(theta.domain, theta.coeffs * self.lowpass_multiplier(Q))

    def band_project(self, theta: SpectralField, q1: int, q2: int) -> SpectralField:
        if q1 > q2:
            raise FieldError(f"empty band: q1={q1} > q2={q2}")
        if q1 < -1:
            raise FieldError(f"shell index must be >= -1, got {q1}")
        _check_domain(self, theta)
        m = np.zeros_like(self.domain.kmag)
        for q in range(q1, min(q2, self.q_max) + 1):
            m = m + self.block(q)
        return SpectralField(theta.domain, theta.coeffs * m)

    def shell_norms_from_coeffs(self, coeffs: np.ndarray, l: float) -> np.ndarray:
        """||Delta_q u||_l for q = -1..q_max, from a coefficient array."""
        d = self.domain
        out = np.empty(self.q_max + 2)
        for i, q in enumerate(self.shells):
            out[i] = grid_norm(d.coeffs_to_grid(coeffs * self._blocks[q]), l, d.dx)
        return out

    def shell_spectrum(self, theta: SpectralField, l: float) -> list[tuple[int, float]]:
        _check_domain(self, theta)
        return list(zip(self.shells, self.shell_norms_from_coeffs(theta.coeffs, l).tolist()))

    def besov_from_norms(self, norms: np.ndarray, s: float, l: float) -> float:
        if l < 1:
            raise FieldError(f"Besov exponent l must be >= 1, got {l}")
        lam = np.array([self.lambda_q(q) for q in self.shells])
        m = norms.max() if len(norms) else 0.0
        if m == 0:
            return 0.0
        return float(m * np.sum(lam ** (s * l) * (norms / m) ** l) ** (1.0 / l))

    def besov_norm(self, theta: SpectralField, s: float, l: float) -> float:
        """(sum_q lambda_q^{s l} ||Delta_q theta||_l^l)^{1/l}, q = -1..q_max."""
        if l < 1:
            raise FieldError(f"Besov exponent l must be >= 1, got {l}")
        _check_domain(self, theta)
        return self.besov_from_norms(self.shell_norms_from_coeffs(theta.coeffs, l), s, l)


def _check_domain(shells: ShellSystem, theta: SpectralField) -> None:
    if theta.domain != shells.domain:
        raise FieldError("field and shell system live on different domains")


_SYSTEMS: dict[Domain, ShellSystem] = {}


def shell_system(domain: Domain) -> ShellSystem:
    s = _SYSTEMS.get(domain)
    if s is None:
        s = _SYSTEMS[domain] = ShellSystem(domain)
    return s


def shell_project(theta: SpectralField, q: int) -> SpectralField:
    return shell_system(theta.domain).shell_project(theta, q)


def lowpass(theta: SpectralField, Q: int) -> SpectralField:
    return shell_system(theta.domain).lowpass(theta, Q)


def band_project(theta: SpectralField, q1: int, q2: int) -> SpectralField:
    return shell_system(theta.domain).band_project(theta, q1, q2)


def besov_norm(theta: SpectralField, s: float, l: float) -> float:
    return shell_system(theta.domain).besov_norm(theta, s, l)


def shell_spectrum(theta: SpectralField, l: float) -> list[tuple[int, float]]:
    return shell_system(theta.domain).shell_spectrum(theta, l)
