"""Finite-lattice probe transmission and reflection via 2x2 transfer matrices.

A lattice plane with sheet response xi acts on forward/backward field
amplitudes through the unimodular boundary matrix; one period is boundary x
free propagation, one cell is the product of the two periods (d1 = rho,
d2 = a - rho).  The n-cell response is evaluated with the Chebyshev identity
for powers of unimodular matrices,

    (M^n)_22 = [sin(n Theta) (M_22 - cos Theta) + cos(n Theta) sin Theta] / sin Theta,
    (M^n)_12 = M_12 sin(n Theta) / sin Theta,      cos Theta = Tr(M)/2,

written in a form that stays finite for n up to 1e6 (only e^{i n Theta} with
Im Theta >= 0 appears, never its inverse).  cos Theta is always taken from
the exact dimer trace; small-xi expansions of the cell dephasing that replace
the intracell cross term cos k_p(d1 - d2) by cos k_p rho are not used, they
are only accurate to O(xi1 xi2 (k_p a - 2 pi)).

Absorption enters through Im(xi) and does not break unimodularity, so
energy conservation |r|^2 + |t|^2 = 1 holds exactly only for real xi.
"""

from __future__ import annotations

import cmath
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .constants import C
from .core import LatticeConfig, xi_parameter

# Below this |sin Theta| the Chebyshev ratios are evaluated by their
# parabolic (cos Theta = +-1) limit; relative error O((n sin Theta)^2 / 6).
_DEGENERATE_SIN = 3e-8


@dataclass(frozen=True)
class ScatterMatrix:
    """2x2 complex transfer matrix relating right-side to left-side amplitudes."""

    m11: complex
    m12: complex
    m21: complex
    m22: complex

    def __matmul__(self, other: "ScatterMatrix") -> "ScatterMatrix":
        return ScatterMatrix(
            self.m11 * other.m11 + self.m12 * other.m21,
            self.m11 * other.m12 + self.m12 * other.m22,
            self.m21 * other.m11 + self.m22 * other.m21,
            self.m21 * other.m12 + self.m22 * other.m22,
        )

    @property
    def determinant(self) -> complex:
        return self.m11 * self.m22 - self.m12 * self.m21

    @property
    def trace(self) -> complex:
        return self.m11 + self.m22

    @property
    def reflection(self) -> complex:
        """r = M12 / M22 of the stack this matrix represents."""
        return self.m12 / self.m22

    @property
    def transmission(self) -> complex:
        """t = 1 / M22 of the stack this matrix represents."""
        return 1.0 / self.m22

    def as_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]], dtype=complex)

    @classmethod
    def identity(cls) -> "ScatterMatrix":
        return cls(1.0 + 0j, 0j, 0j, 1.0 + 0j)


@dataclass(frozen=True)
class SpectrumPoint:
    """Transmission/reflection/absorption of the full stack at one probe frequency."""

    omega_p: float        # [rad/s]
    detuning: float       # (omega_p - omega_even) / gamma_even
    transmitted: float    # T = |t|^2
    reflected: float      # R = |r|^2
    absorbed: float       # A = 1 - T - R

    def __post_init__(self):
        if self.transmitted < 0 or self.reflected < 0:
            raise ValueError("negative power coefficient")
        if not -1e-9 <= self.absorbed <= 1.0:
            raise ValueError(f"absorption {self.absorbed} outside [0, 1]")


def plane_coefficients(xi: complex) -> tuple[complex, complex]:
    """Reflection and transmission (r, t) of a single atomic plane.

    r = i xi / (1 - i xi), t = 1 / (1 - i xi); the thin-sheet relation
    t - r = 1 holds identically.  xi = -i (gain-like pole) is rejected.
    """
    denom = 1.0 - 1j * xi
    if abs(denom) < 1e-12:
        raise ValueError("xi ~ -i: singular (gain-like) sheet response")
    return 1j * xi / denom, 1.0 / denom


def period_matrix(xi: complex, d: float, k_p: float) -> ScatterMatrix:
    """Transfer matrix of one period: plane boundary then propagation over d."""
    if d < 0:
        raise ValueError("propagation distance must be non-negative")
    r, t = plane_coefficients(xi)
    phase = cmath.exp(1j * k_p * d)
    # (1/t) [[t^2 - r^2, r], [-r, 1]] . diag(e^{i k d}, e^{-i k d})
    return ScatterMatrix(
        (t * t - r * r) / t * phase,
        r / t / phase,
        -r / t * phase,
        1.0 / t / phase,
    )


def _cell_xis(cfg: LatticeConfig, omega_p: float) -> tuple[complex, complex]:
    ns = cfg.areal_density
    return (
        xi_parameter(omega_p, cfg.species_even, ns),
        xi_parameter(omega_p, cfg.species_odd, ns),
    )


def dimer_matrix(cfg: LatticeConfig, omega_p: float) -> ScatterMatrix:
    """Transfer matrix of one elementary cell, M_{d1 d2} = M_{d1} M_{d2}.

    d1 = rho carries the even-site species, d2 = a - rho the odd-site one.
    """
    k_p = omega_p / C
    xi1, xi2 = _cell_xis(cfg, omega_p)
    d1 = cfg.intracell_distance
    d2 = cfg.cell_size - d1
    return period_matrix(xi1, d1, k_p) @ period_matrix(xi2, d2, k_p)


def _bloch_phase(m: ScatterMatrix) -> tuple[complex, complex, complex]:
    """(Theta, sin Theta, M22 - cos Theta) with the attenuating branch Im Theta >= 0."""
    cos_theta = 0.5 * m.trace
    theta = cmath.acos(cos_theta)
    if theta.imag < 0:
        theta = -theta
    return theta, cmath.sin(theta), m.m22 - cos_theta


def cell_dephasing(cfg: LatticeConfig, omega_p: float) -> tuple[complex, complex, complex]:
    """Cell dephasing Theta and the single-slice dephasings (Theta, Theta1, Theta2).

    Theta = acos(Tr(M_cell)/2) on the branch with Im Theta >= 0; the slice
    values obey cos Theta_j = cos(k_p d_j) - xi_j sin(k_p d_j) exactly.
    When sin(k_p rho) = 0 the cell factorizes and Theta = Theta1 + Theta2.
    """
    theta, _, _ = _bloch_phase(dimer_matrix(cfg, omega_p))
    k_p = omega_p / C
    xi1, xi2 = _cell_xis(cfg, omega_p)
    d1 = cfg.intracell_distance
    d2 = cfg.cell_size - d1
    slices = []
    for xi, d in ((xi1, d1), (xi2, d2)):
        th = cmath.acos(cmath.cos(k_p * d) - xi * cmath.sin(k_p * d))
        if th.imag < 0:
            th = -th
        slices.append(th)
    return theta, slices[0], slices[1]


def stack_coefficients(cell: ScatterMatrix, n: int) -> tuple[complex, complex]:
    """(r_n, t_n) of n repetitions of the unimodular cell matrix.

    r_n = (M^n)_12/(M^n)_22 and t_n = 1/(M^n)_22 through the Chebyshev
    closed form; near the parabolic points cos Theta = +-1 the degenerate
    limit M^n = s^{n-1}(n M - (n-1) s I) is used instead of dividing by
    sin Theta.
    """
    if n < 1:
        raise ValueError("need at least one cell")
    theta, sin_theta, b = _bloch_phase(cell)
    if abs(sin_theta) < _DEGENERATE_SIN:
        s = 1.0 if (0.5 * cell.trace).real >= 0 else -1.0
        den = n * cell.m22 - (n - 1) * s
        return n * cell.m12 / den, s ** ((n - 1) % 2) / den
    w = cmath.exp(1j * n * theta)            # |w| <= 1 on this branch
    den = w * w * (sin_theta - 1j * b) + (sin_theta + 1j * b)
    return -1j * cell.m12 * (w * w - 1.0) / den, 2.0 * w * sin_theta / den


def transmission_closed_form(cfg: LatticeConfig, omega_p: float, n: int) -> complex:
    """Transmission amplitude t_n = 1/((M_cell)^n)_22 of n cells, closed form.

    Stable up to n ~ 1e6; the degenerate band-center case sin Theta = 0 is
    evaluated through the parabolic limit rather than by division.
    """
    if n < 1:
        raise ValueError("need at least one cell")
    _, t = stack_coefficients(dimer_matrix(cfg, omega_p), n)
    return t


class AsymptoticTransmission(NamedTuple):
    value: complex
    valid: bool   # True when Im Theta > Re Theta (deep-gap regime)


def transmission_asymptotic(cfg: LatticeConfig, omega_p: float, n: int) -> AsymptoticTransmission:
    """Large-n transmission 2 e^{i n Theta} sin Theta / (sin Theta + i (M22 - cos Theta)).

    Magnitude decays as e^{-n Im Theta}.  The stated validity domain is
    Im Theta > Re Theta (around the atomic resonances); outside it the value
    is still returned but flagged invalid.
    """
    if n < 1:
        raise ValueError("need at least one cell")
    theta, sin_theta, b = _bloch_phase(dimer_matrix(cfg, omega_p))
    w = cmath.exp(1j * n * theta)
    value = 2.0 * w * sin_theta / (sin_theta + 1j * b)
    return AsymptoticTransmission(value, theta.imag > theta.real)


def _scan_point(cfg: LatticeConfig, omega_p: float) -> SpectrumPoint:
    r, t = stack_coefficients(dimer_matrix(cfg, omega_p), cfg.cell_count)
    transmitted = abs(t) ** 2
    reflected = abs(r) ** 2
    sp = cfg.species_even
    detuning = (omega_p - sp.transition_frequency) / sp.linewidth
    return SpectrumPoint(
        omega_p, detuning, transmitted, reflected, 1.0 - transmitted - reflected
    )


def spectrum_scan(
    cfg: LatticeConfig, probe_grid: Sequence[float], workers: int = 1
) -> list[SpectrumPoint]:
    """T, R, A of the full cfg.cell_count-cell stack over a probe grid.

    Frequency points are independent; with workers > 1 they are evaluated by
    a thread pool with results in input order (numpy/cmath release the GIL
    rarely here, but points are cheap; parallelism mainly serves large grids).
    """
    if len(probe_grid) == 0:
        raise ValueError("empty probe grid")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda w: _scan_point(cfg, w), probe_grid))
    return [_scan_point(cfg, w) for w in probe_grid]
