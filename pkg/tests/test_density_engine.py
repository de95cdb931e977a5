import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from unicirc.density_engine import (
    EnsembleSpec,
    closed_form_density,
    density,
    density_grid,
    fourier_coefficient,
    fourier_coefficients,
    fourier_density,
    phase_grid,
    trace_power_expectation,
    wrap_phase,
)
from unicirc.errors import DegenerateEnsemble, TruncationFailure
from unicirc.verification import oracle_density_quadrature


@pytest.mark.parametrize(
    "beta, N, theta, expected",
    [
        (2, 2, 0.0, 0.0),
        (1, 2, math.pi / 2, 0.5),
        (2, 3, 0.0, 3 / (2 * math.pi) * (1 + 2 / 3)),
        (4, 2, 0.0, 0.0),
        (2, 3, math.pi / 3, 3 / (2 * math.pi) / 3),
    ],
)
def test_closed_form_examples(beta, N, theta, expected):
    assert closed_form_density(beta, N, theta) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("beta", [1, 2, 4])
def test_closed_form_degenerate(beta):
    with pytest.raises(DegenerateEnsemble, match="theta=0"):
        closed_form_density(beta, 1, 0.3)


def test_closed_form_rejects_generic_beta():
    with pytest.raises(ValueError):
        closed_form_density(3, 3, 0.0)


def test_closed_form_vectorized_matches_scalar():
    th = np.linspace(-4, 4, 17)
    vec = closed_form_density(4, 3, th)
    assert vec.shape == th.shape
    assert vec == pytest.approx([closed_form_density(4, 3, float(t)) for t in th], abs=0)


def test_wrap_phase():
    assert wrap_phase(math.pi) == math.pi
    assert wrap_phase(-math.pi) == math.pi
    assert wrap_phase(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    assert wrap_phase(0.25) == 0.25


def test_coefficients_beta2_N5():
    fd = fourier_coefficients(2, 5)
    assert fd.truncation == "exact"
    assert len(fd.coefficients) == 2
    assert fd.coefficients[0] == 1.0
    assert fd.coefficient(1) == pytest.approx(0.2, rel=1e-13)
    assert fd.coefficient(-1) == fd.coefficient(1)
    assert fd.coefficient(2) == 0.0


def test_coefficients_beta4_N2():
    fd = fourier_coefficients(4, 2)
    assert fd.truncation == "exact"
    assert fd.coefficients == pytest.approx([1.0, -4 / 6, 1 / 6], rel=1e-13)
    assert fd.as_mapping()[-2] == fd.coefficients[2]


def test_coefficients_beta1_N2_series():
    # standard Fourier series of |sin theta|/2 (quadrature oracle)
    fd = fourier_coefficients(1, 2, tol=1e-12, n_max=200, strict=False)
    assert fd.truncation == "tail_bounded"
    for n in (1, 2, 3, 10, 100):
        oracle = integrate.quad(lambda t: abs(math.sin(t)) / 2 * math.cos(2 * n * t), -math.pi, math.pi,
                                points=[0.0], limit=400)[0] / 2
        assert fd.coefficient(n) == pytest.approx(oracle, abs=1e-12)
        assert fd.coefficient(n) == pytest.approx(-1 / (4 * n * n - 1), rel=1e-12)


def test_beta1_N2_strict_truncation_fails():
    with pytest.raises(TruncationFailure):
        fourier_coefficients(1, 2, tol=1e-12, n_max=100)


def test_beta3_N3_truncates_and_matches_quadrature():
    fd = fourier_coefficients(3, 3)
    assert fd.truncation == "exact"
    # first pole: j=1 factor lam + b + 1 = 4 - n
    assert len(fd.coefficients) == 4
    for th in (0.0, 0.7, 2.0, math.pi):
        assert fourier_density(fd, th) == pytest.approx(oracle_density_quadrature(3, 3, th, 1024), abs=1e-4)


def test_beta3_N2_series_decays_with_tail_bound():
    fd = fourier_coefficients(3, 2)
    assert fd.truncation == "tail_bounded"
    assert 0 < fd.tail_bound < 1e-11


def test_fourier_density_examples():
    fd = fourier_coefficients(2, 3)
    assert fourier_density(fd, math.pi / 3) == pytest.approx(3 / (2 * math.pi) / 3, abs=1e-14)
    fd12 = fourier_coefficients(1, 2, tol=1e-12, n_max=5000, strict=False)
    assert fourier_density(fd12, math.pi / 2) == pytest.approx(0.5, abs=1e-4)


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=-10, max_value=10, allow_nan=False))
def test_fourier_density_periodic(theta):
    fd = fourier_coefficients(4, 3)
    assert fourier_density(fd, theta) == pytest.approx(fourier_density(fd, theta + 2 * math.pi), abs=1e-12)


@pytest.mark.parametrize("beta", [2, 4])
@pytest.mark.parametrize("N", range(2, 11))
def test_closed_form_equals_fourier(beta, N):
    th = np.linspace(-np.pi, np.pi, 1024)
    diff = closed_form_density(beta, N, th) - fourier_density(fourier_coefficients(beta, N), th)
    assert np.max(np.abs(diff)) <= 1e-12


@pytest.mark.parametrize("N", range(3, 11))
def test_closed_form_equals_fourier_beta1(N):
    th = np.linspace(-np.pi, np.pi, 1024)
    diff = closed_form_density(1, N, th) - fourier_density(fourier_coefficients(1, N), th)
    assert np.max(np.abs(diff)) <= 1e-12


@pytest.mark.parametrize(
    "beta, N, k, expected",
    [(2, 3, 3, 1.0), (2, 3, 2, 0.0), (4, 2, 4, 1 / 3), (2, 4, 4, -1.0), (2, 3, 0, 3.0), (1, 1, 5, 1.0)],
)
def test_trace_power_expectation(beta, N, k, expected):
    assert trace_power_expectation(beta, N, k) == pytest.approx(expected, abs=1e-13)


@pytest.mark.parametrize("N", range(2, 9))
def test_moment_identity_beta2(N):
    # E[sum cos N theta] = int rho cos(N theta) = -(-1)^N (2/N)(N/2)
    assert trace_power_expectation(2, N, N) == pytest.approx(-((-1) ** N), abs=1e-13)
    rho = lambda t: closed_form_density(2, N, t) * math.cos(N * t)
    assert integrate.quad(rho, -math.pi, math.pi, limit=200)[0] == pytest.approx(-((-1) ** N), abs=1e-10)


def test_density_grid_example():
    grid = density_grid(EnsembleSpec(2, 2), 4)
    expected = [(-math.pi / 2, 2 / math.pi), (0, 0), (math.pi / 2, 2 / math.pi), (math.pi, 0)]
    assert grid == pytest.approx(np.array(expected), abs=1e-15)


def test_density_grid_per_eigenvalue():
    total = density_grid(EnsembleSpec(4, 3), 64)
    per = density_grid(EnsembleSpec(4, 3), 64, "per_eigenvalue")
    assert per[:, 1] == pytest.approx(total[:, 1] / 3)
    assert np.sum(per[:, 1]) * 2 * np.pi / 64 == pytest.approx(1.0, abs=1e-12)


def test_density_grid_normalization_beta2_N3():
    grid = density_grid(EnsembleSpec(2, 3), 4096)
    assert np.sum(grid[:, 1]) * 2 * np.pi / 4096 == pytest.approx(3.0, abs=1e-10)


def test_density_grid_beta1_N3_positive():
    assert np.min(density_grid(EnsembleSpec(1, 3), 4096)[:, 1]) > 0


def test_density_grid_degenerate():
    with pytest.raises(DegenerateEnsemble):
        density_grid(EnsembleSpec(2, 1), 16)


def test_non_unimodular_density_is_flat():
    grid = density_grid(EnsembleSpec(1, 4, unimodular=False), 8)
    assert grid[:, 1] == pytest.approx(np.full(8, 4 / (2 * np.pi)))


def test_phase_grid_contract():
    g = phase_grid(4)
    assert g[-1] == math.pi
    assert g[0] > -math.pi
    with pytest.raises(ValueError):
        phase_grid(1)


def test_ensemble_spec_validation():
    with pytest.raises(ValueError):
        EnsembleSpec(0, 3)
    with pytest.raises(ValueError):
        EnsembleSpec(2, 0)
    assert not EnsembleSpec(3, 3).has_matrix_model


def test_fourier_coefficient_single():
    assert fourier_coefficient(4, 2, 2) == pytest.approx(1 / 6, rel=1e-13)
    assert fourier_coefficient(4, 2, 3) == 0.0


SMOOTH_SPECS = [(b, n) for b in (1, 2, 4) for n in range(2, 11) if (b, n) != (1, 2)] + [
    (b, n) for b in (3, 5, 6) for n in (2, 3, 4)
]


@pytest.mark.parametrize("beta, N", SMOOTH_SPECS)
def test_invariants_every_spec(beta, N):
    spec = EnsembleSpec(beta, N)
    th = phase_grid(4096)
    rho = density(spec, th)
    assert np.sum(rho) * 2 * np.pi / 4096 == pytest.approx(N, abs=1e-10)
    assert np.min(rho) >= -1e-12
    assert density(spec, -th) == pytest.approx(rho, abs=1e-13)


def test_invariants_exceptional_case():
    # |sin|/2 has cusps on the grid, so the trapezoid rule is only O(h^2) here
    spec = EnsembleSpec(1, 2)
    th = phase_grid(4096)
    rho = density(spec, th)
    h = 2 * np.pi / 4096
    assert np.sum(rho) * h == pytest.approx(2 * (h / 2) / math.tan(h / 2), abs=1e-12)
    mass = integrate.quad(lambda t: density(spec, t), -math.pi, math.pi, points=[0.0])[0]
    assert mass == pytest.approx(2.0, abs=1e-12)
    assert np.min(rho) >= 0
    assert density(spec, -th) == pytest.approx(rho, abs=1e-15)
