"""Transfer-matrix engine: plane/period/dimer algebra, closed form, spectra."""

from __future__ import annotations

import cmath
import math

import numpy as np
import pytest

from bilattice.constants import C, TWO_PI
from bilattice.core import xi_parameter
from bilattice.transfer_matrix import (
    ScatterMatrix,
    cell_dephasing,
    dimer_matrix,
    period_matrix,
    plane_coefficients,
    spectrum_scan,
    stack_coefficients,
    transmission_asymptotic,
    transmission_closed_form,
)

from conftest import GAMMA, make_lattice


def random_xi(rng, lossless=False):
    """Physically-signed sheet response: Im(xi) >= 0."""
    mag = 10 ** rng.uniform(-4, -0.7)
    phase = rng.uniform(0, math.pi) if not lossless else 0.0
    return mag * cmath.exp(1j * phase) if not lossless else mag * rng.choice([-1, 1])


def random_cell(rng, lossless=False):
    """A random two-plane unit cell built only from period matrices."""
    k_p = rng.uniform(0.5, 2.0) * TWO_PI / 780e-9
    a = rng.uniform(0.2, 2.0) * 780e-9
    rho = rng.uniform(0, 1) * a
    m1 = period_matrix(random_xi(rng, lossless), rho, k_p)
    m2 = period_matrix(random_xi(rng, lossless), a - rho, k_p)
    return m1 @ m2


# ---------------------------------------------------------------------------
# plane and period


def test_empty_plane():
    r, t = plane_coefficients(0.0)
    assert r == 0 and t == 1


def test_real_xi_conserves_energy():
    rng = np.random.default_rng(3)
    for _ in range(100):
        xi = rng.uniform(-5, 5)
        r, t = plane_coefficients(xi)
        assert abs(r) ** 2 + abs(t) ** 2 == pytest.approx(1.0, rel=1e-12)


def test_resonant_absorbing_plane():
    r, t = plane_coefficients(1j)
    assert r == pytest.approx(-0.5)
    assert t == pytest.approx(0.5)
    assert abs(r) ** 2 + abs(t) ** 2 == pytest.approx(0.5)


def test_thin_sheet_relation_t_minus_r():
    rng = np.random.default_rng(5)
    for _ in range(200):
        xi = complex(rng.normal(), abs(rng.normal()))
        r, t = plane_coefficients(xi)
        assert t - r == pytest.approx(1.0, rel=1e-12)


def test_gain_like_pole_rejected():
    with pytest.raises(ValueError, match="gain"):
        plane_coefficients(-1j)


def test_period_matrix_free_propagation():
    k_p, d = TWO_PI / 780e-9, 123e-9
    m = period_matrix(0.0, d, k_p)
    assert m.m11 == pytest.approx(cmath.exp(1j * k_p * d))
    assert m.m22 == pytest.approx(cmath.exp(-1j * k_p * d))
    assert m.m12 == 0 and m.m21 == 0


def test_period_matrix_unimodular():
    rng = np.random.default_rng(17)
    for _ in range(500):
        m = period_matrix(random_xi(rng), rng.uniform(0, 1e-6), rng.uniform(1e6, 1e7))
        assert m.determinant == pytest.approx(1.0, abs=1e-12)


def test_period_matrix_recovers_plane_coefficients():
    # r = M12/M22 is the bare plane reflection; t = 1/M22 adds the phase of d
    rng = np.random.default_rng(23)
    for _ in range(50):
        xi = random_xi(rng)
        d, k_p = rng.uniform(0, 1e-6), rng.uniform(1e6, 1e7)
        m = period_matrix(xi, d, k_p)
        r, t = plane_coefficients(xi)
        assert m.reflection == pytest.approx(r, rel=1e-12)
        assert m.transmission == pytest.approx(t * cmath.exp(1j * k_p * d), rel=1e-12)


# ---------------------------------------------------------------------------
# dimer


def test_dimer_half_cell_is_squared_period(omega0):
    cfg = make_lattice(omega0, rho_frac=0.5)
    omega_p = omega0 + 37 * GAMMA
    k_p = omega_p / C
    xi = xi_parameter(omega_p, cfg.species_even, cfg.areal_density)
    half = period_matrix(xi, cfg.cell_size / 2, k_p)
    expected = (half @ half).as_array()
    got = dimer_matrix(cfg, omega_p).as_array()
    assert np.allclose(got, expected, rtol=1e-12, atol=0)


def test_dimer_against_bruteforce_product(omega0):
    cfg = make_lattice(omega0, rho_frac=0.2, detuning_odd=530.0)
    omega_p = omega0 - 210 * GAMMA
    k_p = omega_p / C
    xi1 = xi_parameter(omega_p, cfg.species_even, cfg.areal_density)
    xi2 = xi_parameter(omega_p, cfg.species_odd, cfg.areal_density)

    def plane(xi):
        return np.array([[1 + 1j * xi, 1j * xi], [-1j * xi, 1 - 1j * xi]])

    def prop(d):
        return np.diag([np.exp(1j * k_p * d), np.exp(-1j * k_p * d)])

    d1 = cfg.intracell_distance
    expected = plane(xi1) @ prop(d1) @ plane(xi2) @ prop(cfg.cell_size - d1)
    assert np.allclose(dimer_matrix(cfg, omega_p).as_array(), expected, rtol=1e-12)


def test_dimer_quarter_cell_periods_nearly_invert(omega0):
    # with equal real responses the two half-matrices undo each other
    cfg = make_lattice(omega0, rho_frac=0.25)
    omega_p = cfg.species_even.transition_frequency + 200 * GAMMA
    k_p = omega_p / C
    xi = xi_parameter(omega_p, cfg.species_even, cfg.areal_density).real
    m1 = period_matrix(xi, 0.25 * cfg.cell_size, k_p)
    m2 = period_matrix(xi, 0.75 * cfg.cell_size, k_p)
    assert np.max(np.abs((m2 @ m1).as_array() - np.eye(2))) < 1e-4


def test_dimer_unimodular_production_draws(omega0):
    rng = np.random.default_rng(29)
    for _ in range(100):
        cfg = make_lattice(omega0, rho_frac=rng.uniform(0, 1))
        m = dimer_matrix(cfg, omega0 + rng.uniform(-500, 500) * GAMMA)
        assert m.determinant == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# cell dephasing


def test_dephasing_empty_lattice(omega0):
    cfg = make_lattice(omega0, rho_frac=0.3)
    empty = cfg.replace(areal_density=1e-30)   # xi -> 0
    omega_p = omega0 + 55 * GAMMA
    theta, _, _ = cell_dephasing(empty, omega_p)
    assert theta.imag == pytest.approx(0.0, abs=1e-10)
    assert cmath.cos(theta) == pytest.approx(cmath.cos(omega_p / C * cfg.cell_size), rel=1e-9)


def test_dephasing_adds_when_intracell_phase_vanishes(omega0):
    # rho = a/2 at the Bragg frequency: sin(k_p rho) = 0 and the cell is the
    # square of one slice, so Theta = Theta1 + Theta2 exactly
    cfg = make_lattice(omega0, rho_frac=0.5)
    theta, th1, th2 = cell_dephasing(cfg, omega0)
    assert cmath.cos(th1 + th2) == pytest.approx(cmath.cos(theta), abs=1e-12)


def test_dephasing_trace_oracle(omega0):
    rng = np.random.default_rng(31)
    for _ in range(50):
        cfg = make_lattice(
            omega0, rho_frac=rng.uniform(0, 1), detuning_odd=rng.uniform(-600, 600)
        )
        omega_p = omega0 + rng.uniform(-600, 600) * GAMMA
        theta, _, _ = cell_dephasing(cfg, omega_p)
        trace = dimer_matrix(cfg, omega_p).trace
        assert cmath.cos(theta) == pytest.approx(trace / 2, rel=1e-12)
        assert theta.imag >= 0


def test_slice_dephasings_match_their_own_traces(omega0):
    cfg = make_lattice(omega0, rho_frac=0.37)
    omega_p = omega0 - 140 * GAMMA
    k_p = omega_p / C
    _, th1, th2 = cell_dephasing(cfg, omega_p)
    for th, xi, d in (
        (th1, xi_parameter(omega_p, cfg.species_even, cfg.areal_density), cfg.intracell_distance),
        (th2, xi_parameter(omega_p, cfg.species_odd, cfg.areal_density), cfg.cell_size - cfg.intracell_distance),
    ):
        single = period_matrix(xi, d, k_p)
        assert cmath.cos(th) == pytest.approx(single.trace / 2, rel=1e-12)


# ---------------------------------------------------------------------------
# closed-form stack response


def test_empty_lattice_transmits_everything(omega0):
    # |t| picks up ~n * eps / sin(Theta) of float noise, ~3e-7 at n = 1e6
    cfg = make_lattice(omega0, rho_frac=0.3, areal_density=1e-30)
    for n in (1, 7, 1000, 1_000_000):
        t = transmission_closed_form(cfg, omega0 + 3 * GAMMA, n)
        assert abs(t) == pytest.approx(1.0, rel=1e-5)


def test_single_cell_equals_dimer_entry(omega0):
    cfg = make_lattice(omega0, rho_frac=0.2)
    omega_p = omega0 - 77 * GAMMA
    expected = 1.0 / dimer_matrix(cfg, omega_p).m22
    assert transmission_closed_form(cfg, omega_p, 1) == pytest.approx(expected, rel=1e-12)


def test_closed_form_against_matrix_power(omega0):
    rng = np.random.default_rng(41)
    worst = 0.0
    for _ in range(40):
        cfg = make_lattice(omega0, rho_frac=rng.uniform(0, 1))
        omega_p = omega0 + rng.uniform(-550, 550) * GAMMA
        n = int(rng.integers(1, 2001))
        m = dimer_matrix(cfg, omega_p)
        power = np.linalg.matrix_power(m.as_array(), n)
        r_ref, t_ref = power[0, 1] / power[1, 1], 1.0 / power[1, 1]
        if abs(t_ref) < 1e-120:   # keep the oracle itself in range
            continue
        r, t = stack_coefficients(m, n)
        worst = max(worst, abs(t - t_ref) / abs(t_ref))
        if abs(r_ref) > 1e-12:
            worst = max(worst, abs(r - r_ref) / abs(r_ref))
    assert worst < 1e-8


def test_deep_gap_attenuation_at_million_planes(probe_lattice):
    w1 = probe_lattice.species_even.transition_frequency
    t = transmission_closed_form(probe_lattice, w1 + 100 * GAMMA, probe_lattice.cell_count)
    assert abs(t) ** 2 < 1e-6


def test_degenerate_bragg_point_is_finite(probe_lattice, omega0):
    # omega_p = omega_0 hits cos Theta = 1 to machine precision (rho = 0)
    n = 1000
    t = transmission_closed_form(probe_lattice, omega0, n)
    assert cmath.isfinite(t)
    power = np.linalg.matrix_power(dimer_matrix(probe_lattice, omega0).as_array(), n)
    assert t == pytest.approx(1.0 / power[1, 1], rel=1e-9)


def test_lossless_stack_conserves_energy():
    rng = np.random.default_rng(43)
    for _ in range(60):
        cell = random_cell(rng, lossless=True)
        n = int(rng.integers(1, 1001))
        r, t = stack_coefficients(cell, n)
        assert abs(r) ** 2 + abs(t) ** 2 == pytest.approx(1.0, abs=1e-10)


def test_stack_coefficient_determinant_form():
    rng = np.random.default_rng(47)
    for _ in range(200):
        cell = random_cell(rng)
        assert cell.determinant == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# asymptotic form


def test_asymptotic_matches_exact_deep_stack(probe_lattice):
    w1 = probe_lattice.species_even.transition_frequency
    omega_p = w1 + 200 * GAMMA
    n = 300_000
    exact = transmission_closed_form(probe_lattice, omega_p, n)
    approx = transmission_asymptotic(probe_lattice, omega_p, n)
    assert approx.valid
    assert abs(approx.value - exact) / abs(exact) < 1e-6


def test_asymptotic_improves_with_depth(probe_lattice):
    w1 = probe_lattice.species_even.transition_frequency
    omega_p = w1 + 200 * GAMMA
    devs = []
    for n in (10_000, 100_000, 300_000):
        exact = transmission_closed_form(probe_lattice, omega_p, n)
        devs.append(abs(transmission_asymptotic(probe_lattice, omega_p, n).value - exact) / abs(exact))
    assert devs[0] > devs[1] > devs[2]


def test_asymptotic_log_slope_is_im_theta(probe_lattice):
    w1 = probe_lattice.species_even.transition_frequency
    omega_p = w1 + 200 * GAMMA
    theta, _, _ = cell_dephasing(probe_lattice, omega_p)
    a1 = transmission_asymptotic(probe_lattice, omega_p, 200_000).value
    a2 = transmission_asymptotic(probe_lattice, omega_p, 400_000).value
    slope = (math.log(abs(a2)) - math.log(abs(a1))) / 200_000
    assert slope == pytest.approx(-theta.imag, rel=1e-9)


def test_asymptotic_flag_false_outside_gap(probe_lattice):
    w1 = probe_lattice.species_even.transition_frequency
    result = transmission_asymptotic(probe_lattice, w1 + 5000 * GAMMA, 1000)
    assert not result.valid


# ---------------------------------------------------------------------------
# spectra


def test_spectrum_point_invariants(probe_lattice):
    w1 = probe_lattice.species_even.transition_frequency
    grid = w1 + np.linspace(-550, 550, 241) * GAMMA
    for pt in spectrum_scan(probe_lattice, grid):
        assert 0.0 <= pt.transmitted <= 1.0 + 1e-12
        assert 0.0 <= pt.reflected <= 1.0 + 1e-12
        assert -1e-9 <= pt.absorbed <= 1.0


def test_monoperiodic_scattering_loss_peak(probe_lattice):
    # rho = 0: a weak transmission peak and a reflection dip sit in the
    # conducting strip between the atomic and the lattice-light frequency,
    # on top of an otherwise opaque gap
    w1 = probe_lattice.species_even.transition_frequency
    strip = w1 + np.linspace(0.5, 9.9, 48) * GAMMA
    strip_pts = spectrum_scan(probe_lattice, strip)
    t_peak = max(pt.transmitted for pt in strip_pts)
    r_dip = min(pt.reflected for pt in strip_pts)
    gap_pts = spectrum_scan(probe_lattice, [w1 - 50 * GAMMA, w1 + 50 * GAMMA])
    assert 1e-4 < t_peak < 1e-2            # small, loss-limited
    assert all(t_peak > 1e6 * pt.transmitted for pt in gap_pts)
    assert r_dip < 0.97
    assert all(pt.reflected > 0.99 for pt in gap_pts)


def test_spectra_symmetric_under_cell_reversal(omega0):
    # rho <-> a - rho is the mirrored stack: identical Theta, spectra equal
    # up to a boundary-plane term well below 1e-4
    base = make_lattice(omega0, cells=1000)
    w1 = base.species_even.transition_frequency
    grid = w1 + np.array([-300.0, -37.0, 37.0, 150.0, 300.0]) * GAMMA
    for rho_frac in (0.2, 0.35):
        cfg_a = base.replace(intracell_distance=rho_frac * base.cell_size)
        cfg_b = base.replace(intracell_distance=(1 - rho_frac) * base.cell_size)
        for omega_p in grid:
            th_a, _, _ = cell_dephasing(cfg_a, omega_p)
            th_b, _, _ = cell_dephasing(cfg_b, omega_p)
            assert cmath.cos(th_a) == pytest.approx(cmath.cos(th_b), rel=1e-12)
        pts_a = spectrum_scan(cfg_a, grid)
        pts_b = spectrum_scan(cfg_b, grid)
        for pa, pb in zip(pts_a, pts_b):
            assert pa.transmitted == pytest.approx(pb.transmitted, abs=1e-4)
            assert pa.reflected == pytest.approx(pb.reflected, abs=1e-4)


def test_spectrum_scan_parallel_matches_serial(probe_lattice):
    w1 = probe_lattice.species_even.transition_frequency
    grid = w1 + np.linspace(-500, 500, 101) * GAMMA
    serial = spectrum_scan(probe_lattice, grid, workers=1)
    threaded = spectrum_scan(probe_lattice, grid, workers=4)
    assert [(p.transmitted, p.reflected) for p in serial] == [
        (p.transmitted, p.reflected) for p in threaded
    ]


def test_spectrum_scan_rejects_empty_grid(probe_lattice):
    with pytest.raises(ValueError, match="empty"):
        spectrum_scan(probe_lattice, [])
