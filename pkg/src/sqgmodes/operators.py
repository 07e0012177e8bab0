"""SQG operators: fractional Laplacian, rotated Riesz velocity, advection, forcing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Sequence

import numpy as np
import scipy.fft as sfft

from .spectral import Domain, FieldError, SpectralField, from_modes, reflect


def lambda_multiplier(domain: Domain, s: float) -> np.ndarray:
    """(2 pi |k| / L)^s with the k = 0 entry set to 0."""
    m = np.zeros_like(domain.kmag)
    nz = domain.kmag > 0
    m[nz] = (2.0 * np.pi * domain.kmag[nz] / domain.L) ** s
    return m


def lambda_pow(theta: SpectralField, s: float) -> SpectralField:
    if s == 0:
        return theta
    return SpectralField(theta.domain, theta.coeffs * lambda_multiplier(theta.domain, s))


def riesz_symbols(domain: Domain) -> tuple[np.ndarray, np.ndarray]:
    """Symbols (-i k2/|k|, i k1/|k|) of R_perp, zero at k = 0."""
    k1, k2 = domain.wavenumbers
    kmag = domain.kmag
    inv = np.zeros_like(kmag)
    inv[kmag > 0] = 1.0 / kmag[kmag > 0]
    return -1j * k2 * inv, 1j * k1 * inv


@dataclass(frozen=True, eq=False)
class VelocityField:
    u1: SpectralField
    u2: SpectralField

    def divergence(self) -> np.ndarray:
        d = self.u1.domain
        k1, k2 = d.wavenumbers
        return 2j * np.pi * (k1 * self.u1.coeffs + k2 * self.u2.coeffs) / d.L


def riesz_perp(theta: SpectralField) -> VelocityField:
    s1, s2 = riesz_symbols(theta.domain)
    return VelocityField(
        SpectralField(theta.domain, s1 * theta.coeffs),
        SpectralField(theta.domain, s2 * theta.coeffs),
    )


class AdvectionKernel:
    """Pseudospectral u.grad(theta) on coefficient arrays.

    Holds per-domain symbol tables; not meant to be shared between workers.
    """

    def __init__(self, domain: Domain):
        self.domain = domain
        k1, k2 = domain.wavenumbers
        s1, s2 = riesz_symbols(domain)
        n2 = domain.N * domain.N
        # a real pair (a, b) rides one complex inverse FFT as a + ib, so the
        # symbol pair is folded into a single complex multiplier (with the N^2)
        self._vel = (s1 + 1j * s2) * n2
        self._grad = (2j * np.pi / domain.L) * (k1 + 1j * k2) * n2
        self._keep = domain.mask.astype(float) * (0.5 / n2)

    def __call__(self, c: np.ndarray) -> np.ndarray:
        u = sfft.ifft2(self._vel * c, overwrite_x=True)
        g = sfft.ifft2(self._grad * c, overwrite_x=True)
        prod = u.real * g.real
        prod += u.imag * g.imag
        out = sfft.fft2(prod, overwrite_x=True)
        out += np.conj(reflect(out))
        out *= self._keep
        return out


def advection(theta: SpectralField) -> SpectralField:
    """Dealiased u.grad(theta) with u = R_perp theta."""
    return SpectralField(theta.domain, kernel_for(theta.domain)(theta.coeffs))


_KERNELS: dict[Domain, AdvectionKernel] = {}


def kernel_for(domain: Domain) -> AdvectionKernel:
    k = _KERNELS.get(domain)
    if k is None:
        k = _KERNELS[domain] = AdvectionKernel(domain)
    return k


def advection_oracle(theta: SpectralField, max_modes: int = 64) -> SpectralField:
    """Exact convolution sum over pairs of modes, then the same dealiasing.

    (u.grad theta)^(k) = sum_{p+q=k} u^(p) . (2 pi i q / L) theta^(q).
    """
    d = theta.domain
    if max_modes > 64:
        raise FieldError("advection_oracle supports at most 64 modes")
    idx = np.argwhere(theta.coeffs != 0)
    if len(idx) > max_modes:
        raise FieldError(f"field has {len(idx)} nonzero modes, limit is {max_modes}")
    k1, k2 = d.wavenumbers
    s1, s2 = riesz_symbols(d)
    modes = [
        (
            int(k1[i, j]),
            int(k2[i, j]),
            complex(theta.coeffs[i, j]),
            complex(s1[i, j] * theta.coeffs[i, j]),
            complex(s2[i, j] * theta.coeffs[i, j]),
        )
        for i, j in idx
    ]
    out: dict[tuple[int, int], complex] = {}
    tau = 2.0 * math.pi / d.L
    for p1, p2, _, u1, u2 in modes:
        for q1, q2, th, _, _ in modes:
            key = (p1 + q1, p2 + q2)
            out[key] = out.get(key, 0j) + (u1 * 1j * tau * q1 + u2 * 1j * tau * q2) * th
    c = np.zeros((d.N, d.N), dtype=complex)
    R = d.dealias_radius
    for (m1, m2), v in out.items():
        if (m1, m2) != (0, 0) and math.hypot(m1, m2) <= R:
            c[d.index_of((m1, m2))] = v
    return SpectralField(d, c)


Modulation = Literal["constant", "exp_decay", "sinusoid"]


@dataclass(frozen=True)
class ForcingSpec:
    """Separable force f(x, t) = h(t) g(x) with h(0) = 1.

    ``modes`` holds ``(k1, k2, re, im)`` rows; ``param`` is the decay rate
    for ``exp_decay`` and the angular frequency for ``sinusoid``.
    """

    modes: tuple[tuple[int, int, float, float], ...] = ()
    modulation: Modulation = "constant"
    param: float = 0.0

    def __post_init__(self):
        if self.modulation not in ("constant", "exp_decay", "sinusoid"):
            raise FieldError(f"unknown modulation {self.modulation!r}")

    def h(self, t: float) -> float:
        if self.modulation == "constant":
            return 1.0
        if self.modulation == "exp_decay":
            return math.exp(-self.param * t)
        return math.cos(self.param * t)

    @property
    def sup_h(self) -> float:
        return 1.0

    @property
    def is_zero(self) -> bool:
        return all(re == 0 and im == 0 for _, _, re, im in self.modes)

    def spatial(self, domain: Domain) -> SpectralField:
        return from_modes(domain, [((k1, k2), complex(re, im)) for k1, k2, re, im in self.modes])

    def to_rows(self) -> list[list[float]]:
        return [[int(k1), int(k2), float(re), float(im)] for k1, k2, re, im in self.modes]


def forcing(modes: Sequence[Sequence[float]], modulation: Modulation = "constant", param: float = 0.0) -> ForcingSpec:
    rows = tuple((int(m[0]), int(m[1]), float(m[2]), float(m[3])) for m in modes)
    return ForcingSpec(rows, modulation, float(param))


@dataclass
class Force:
    """Evaluable sum of separable forcing terms on one domain.

    ``terms`` are ``(spec, scale, t0)``: contributes ``scale * h(t - t0) g``.
    """

    domain: Domain
    terms: list[tuple[ForcingSpec, float, float]] = field(default_factory=list)

    @classmethod
    def of(cls, domain: Domain, spec: ForcingSpec) -> "Force":
        return cls(domain, [(spec, 1.0, 0.0)])

    def plus(self, spec: ForcingSpec, scale: float = 1.0, t0: float = 0.0) -> "Force":
        return Force(self.domain, self.terms + [(spec, scale, t0)])

    @cached_property
    def _g(self) -> list[np.ndarray]:
        return [spec.spatial(self.domain).coeffs for spec, _, _ in self.terms]

    @cached_property
    def _constant(self) -> np.ndarray | None:
        if all(spec.modulation == "constant" for spec, _, _ in self.terms):
            c = np.zeros((self.domain.N, self.domain.N), dtype=complex)
            for g, (_, scale, _) in zip(self._g, self.terms):
                c = c + scale * g
            return c
        return None

    @property
    def is_zero(self) -> bool:
        return all(spec.is_zero or scale == 0 for spec, scale, _ in self.terms)

    def coeffs(self, t: float) -> np.ndarray:
        if self._constant is not None:
            return self._constant
        c = np.zeros((self.domain.N, self.domain.N), dtype=complex)
        for g, (spec, scale, t0) in zip(self._g, self.terms):
            c = c + (scale * spec.h(t - t0)) * g
        return c

    def __call__(self, t: float) -> SpectralField:
        return SpectralField(self.domain, self.coeffs(t))


def force_eval(spec: ForcingSpec, domain: Domain, t: float) -> SpectralField:
    if t < 0:
        raise FieldError(f"force evaluated at negative time {t}")
    return _cached_force(spec, domain)(t)


_FORCES: dict[tuple[ForcingSpec, Domain], Force] = {}


def _cached_force(spec: ForcingSpec, domain: Domain) -> Force:
    key = (spec, domain)
    f = _FORCES.get(key)
    if f is None:
        f = _FORCES[key] = Force.of(domain, spec)
    return f
