"""Real, zero-mean scalar fields on the periodic square [0, L]^2.

A field is stored as the full N x N array of complex Fourier coefficients
``coeffs[i1, i2]`` in numpy FFT order, with integer wavevector
``k = (k1, k2)``, ``k_j = i_j`` for ``i_j < N/2`` and ``i_j - N`` otherwise.
The normalization is

    u(x) = sum_k coeffs[k] * exp(2 pi i k.x / L),

so a coefficient of 1/2 at k = +-(1, 0) is cos(2 pi x1 / L).  Grid samples
live at x = (i L/N, j L/N), axis 0 being x1.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np

DEBUG = os.environ.get("SQG_DEBUG", "") not in ("", "0")


class FieldError(ValueError):
    """Raised for invalid domains, modes, or mismatched fields."""


def reflect(a: np.ndarray) -> np.ndarray:
    """Return ``b`` with ``b[k] = a[-k]`` for an array in FFT index order."""
    return np.roll(a[::-1, ::-1], 1, axis=(0, 1))


@dataclass(frozen=True)
class Domain:
    L: float
    N: int

    @property
    def lambda0(self) -> float:
        return 1.0 / self.L

    @property
    def dealias_radius(self) -> int:
        return self.N // 3

    @property
    def dx(self) -> float:
        return self.L / self.N

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        k = np.fft.fftfreq(self.N, 1.0 / self.N)
        k1, k2 = np.meshgrid(k, k, indexing="ij")
        return k1, k2

    @cached_property
    def kmag(self) -> np.ndarray:
        """Integer-lattice magnitude |k| on the coefficient grid."""
        k1, k2 = self.wavenumbers
        return np.hypot(k1, k2)

    @cached_property
    def mask(self) -> np.ndarray:
        """Retained modes: 0 < |k| <= dealias_radius."""
        m = self.kmag <= self.dealias_radius
        m[0, 0] = False
        return m

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.N) * self.dx
        return np.meshgrid(x, x, indexing="ij")

    def index_of(self, k: Sequence[int]) -> tuple[int, int]:
        return int(k[0]) % self.N, int(k[1]) % self.N

    # Array-level transforms used by the solver hot loops.

    def coeffs_to_grid(self, coeffs: np.ndarray) -> np.ndarray:
        n = self.N
        return np.fft.irfft2(coeffs[:, : n // 2 + 1], s=(n, n)) * (n * n)

    def grid_to_coeffs(self, samples: np.ndarray) -> np.ndarray:
        """Forward transform, symmetrized, dealiased, mean removed."""
        c = np.fft.fft2(samples) / (self.N * self.N)
        c = 0.5 * (c + np.conj(reflect(c)))
        c[~self.mask] = 0.0
        return c


def make_domain(L: float, N: int) -> Domain:
    if not (isinstance(N, (int, np.integer)) and N >= 8 and N % 2 == 0):
        raise FieldError(f"N must be an even integer >= 8, got {N!r}")
    if not L > 0:
        raise FieldError(f"L must be positive, got {L!r}")
    return Domain(float(L), int(N))


@dataclass(frozen=True, eq=False)
class SpectralField:
    domain: Domain
    coeffs: np.ndarray

    def __post_init__(self):
        n = self.domain.N
        if self.coeffs.shape != (n, n):
            raise FieldError(f"coefficient array must be {n}x{n}, got {self.coeffs.shape}")
        if DEBUG:
            self.check()

    def check(self, rtol: float = 1e-13) -> None:
        """Assert Hermitian symmetry, zero mean, and the dealias mask."""
        c = self.coeffs
        scale = max(float(np.abs(c).max()), 1e-300)
        if c[0, 0] != 0:
            raise FieldError("mean mode is not zero")
        if np.any(c[~self.domain.mask] != 0):
            raise FieldError("coefficients outside the dealias radius")
        if np.abs(c - np.conj(reflect(c))).max() > rtol * scale:
            raise FieldError("coefficients are not Hermitian")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _same_domain(self, other)
        return SpectralField(self.domain, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _same_domain(self, other)
        return SpectralField(self.domain, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.domain, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.domain, -self.coeffs)

    def coeff(self, k: Sequence[int]) -> complex:
        return complex(self.coeffs[self.domain.index_of(k)])


@dataclass(frozen=True, eq=False)
class PhysicalField:
    domain: Domain
    samples: np.ndarray

    def __post_init__(self):
        n = self.domain.N
        if self.samples.shape != (n, n):
            raise FieldError(f"sample array must be {n}x{n}, got {self.samples.shape}")


AnyField = Union[SpectralField, PhysicalField]


def _same_domain(a: AnyField, b: AnyField) -> None:
    if a.domain != b.domain:
        raise FieldError(f"domain mismatch: {a.domain} vs {b.domain}")


def zero_field(domain: Domain) -> SpectralField:
    return SpectralField(domain, np.zeros((domain.N, domain.N), dtype=complex))


def from_modes(domain: Domain, modes: Iterable[tuple[Sequence[int], complex]]) -> SpectralField:
    """Build a field from ``(k, a)`` pairs; the conjugate partner is implied.

    Later entries overwrite earlier ones at the same (or opposite) wavevector.
    """
    c = np.zeros((domain.N, domain.N), dtype=complex)
    R = domain.dealias_radius
    for k, a in modes:
        k1, k2 = int(k[0]), int(k[1])
        if k1 == 0 and k2 == 0:
            raise FieldError("mode k=(0,0) is not allowed (fields are zero-mean)")
        if np.hypot(k1, k2) > R:
            raise FieldError(f"mode {(k1, k2)} lies beyond the dealias radius {R}")
        a = complex(a)
        c[domain.index_of((k1, k2))] = a
        c[domain.index_of((-k1, -k2))] = a.conjugate()
    return SpectralField(domain, c)


def to_physical(field: SpectralField) -> PhysicalField:
    return PhysicalField(field.domain, field.domain.coeffs_to_grid(field.coeffs))


def to_spectral(field: PhysicalField) -> SpectralField:
    if field.samples.shape != (field.domain.N, field.domain.N):
        raise FieldError("sample array does not match the domain")
    return SpectralField(field.domain, field.domain.grid_to_coeffs(field.samples))


def _samples(field: AnyField) -> np.ndarray:
    if isinstance(field, PhysicalField):
        return field.samples
    return field.domain.coeffs_to_grid(field.coeffs)


def grid_norm(samples: np.ndarray, r: float, dx: float) -> float:
    """Node-sum L^r norm of a sampled field with cell area dx^2."""
    if r < 1:
        raise FieldError(f"Lebesgue exponent must be >= 1, got {r}")
    a = np.abs(samples)
    if np.isinf(r):
        return float(a.max())
    m = a.max()
    if m == 0:
        return 0.0
    # scale by the max to keep |u|^r finite for large r
    return float(m * (np.sum((a / m) ** r) * dx * dx) ** (1.0 / r))


def lebesgue_norm(field: AnyField, r: float) -> float:
    """L^r norm by grid-node quadrature; r = inf is the grid maximum."""
    return grid_norm(_samples(field), r, field.domain.dx)


def parseval_norm(field: SpectralField) -> float:
    """L^2 norm from the coefficients, (L^2 sum |c_k|^2)^(1/2)."""
    return float(field.domain.L * np.sqrt(np.sum(np.abs(field.coeffs) ** 2)))


def inner_product(a: SpectralField, b: SpectralField) -> float:
    _same_domain(a, b)
    L = a.domain.L
    return float(L * L * np.real(np.vdot(b.coeffs, a.coeffs)))


def random_field(
    domain: Domain,
    seed: int,
    decay: float = 0.0,
    band: tuple[float, float] = (1.0, 4.0),
    amplitude: float | None = None,
) -> SpectralField:
    """Seeded random-phase field with |c_k| proportional to |k|^-decay on the band.

    ``band`` bounds |k| inclusively.  When ``amplitude`` is given the field
    is rescaled to that L^2 norm.
    """
    kmin, kmax = float(band[0]), float(band[1])
    if kmax > domain.dealias_radius:
        raise FieldError(f"band {band} extends beyond the dealias radius {domain.dealias_radius}")
    kmag = domain.kmag
    sel = (kmag >= kmin) & (kmag <= kmax) & domain.mask
    if not sel.any():
        raise FieldError(f"band {band} contains no lattice wavevectors")
    rng = np.random.default_rng(seed)
    phase = rng.uniform(-np.pi, np.pi, size=kmag.shape)
    phase = 0.5 * (phase - reflect(phase))
    mag = np.zeros_like(kmag)
    mag[sel] = kmag[sel] ** (-decay)
    c = mag * np.exp(1j * phase)
    c = 0.5 * (c + np.conj(reflect(c)))
    field = SpectralField(domain, c)
    if amplitude is not None:
        field = field * (amplitude / parseval_norm(field))
    return field
