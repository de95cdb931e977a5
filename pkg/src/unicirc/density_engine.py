"""One-point eigenphase densities of unimodular circular ensembles.

Two independent routes are provided:

* ``closed_form_density`` -- the closed forms for beta = 1, 2, 4;
* ``fourier_coefficients`` / ``fourier_density`` -- the harmonic expansion
  ``rho(theta) = N/(2 pi) * sum_n c_n exp(i n N theta)`` whose coefficients
  are Morris integrals divided by the CbetaE normalization.  This one works
  for any positive integer beta.

Densities use the total-mass convention (``int rho = N``) unless
``normalization="per_eigenvalue"`` is requested.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from unicirc.errors import DegenerateEnsemble, TruncationFailure
from unicirc.gamma_toolkit import (
    MorrisParams,
    double_factorial,
    log_cbeta_norm,
    morris_log,
    signed_log_gamma,
)

__all__ = [
    "EnsembleSpec",
    "FourierDensity",
    "wrap_phase",
    "closed_form_density",
    "closed_form_cos_coefficients",
    "fourier_coefficient",
    "fourier_coefficients",
    "fourier_density",
    "trace_power_expectation",
    "density",
    "density_grid",
    "phase_grid",
]

CLOSED_FORM_BETAS = (1, 2, 4)
Normalization = Literal["total", "per_eigenvalue"]


@dataclass(frozen=True)
class EnsembleSpec:
    """Which circular ensemble is meant.

    For beta = 4, ``N`` counts the distinct (Kramers-degenerate) eigenphases of
    a 2N x 2N selfdual matrix.
    """

    beta: int
    N: int
    unimodular: bool = True

    def __post_init__(self):
        if int(self.beta) != self.beta or self.beta < 1:
            raise ValueError(f"beta must be a positive integer, got {self.beta!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")

    @property
    def has_matrix_model(self) -> bool:
        return self.beta in CLOSED_FORM_BETAS


def wrap_phase(theta):
    """Map angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(theta, dtype=float), 2 * np.pi)


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


def _check_not_degenerate(N: int) -> None:
    if N == 1:
        raise DegenerateEnsemble(
            "SU(1) has the single eigenphase theta=0: the distribution is an atom at "
            "theta=0 and has no density"
        )


@functools.lru_cache(maxsize=None)
def closed_form_cos_coefficients(beta: int, N: int) -> tuple[float, ...]:
    """Coefficients ``(1, k_1, k_2)`` with ``rho = N/2pi (1 + k_1 cos N th + k_2 cos 2N th)``.

    Valid for beta in {1, 2, 4} and N >= 2, except (beta=1, N=2).
    """
    sign = -1.0 if N % 2 == 0 else 1.0  # -(-1)^N
    if beta == 2:
        return (1.0, sign * 2.0 / N, 0.0)
    if beta == 1:
        log_k = (
            0.5 * math.log(math.pi)
            + signed_log_gamma(N).log_abs
            - (N - 1) * math.log(2.0)
            - signed_log_gamma(N / 2 + 1.5).log_abs
            - signed_log_gamma(N / 2 + 1).log_abs
        )
        return (1.0, sign * math.exp(log_k), 0.0)
    if beta == 4:
        k1 = double_factorial(2 * N) / (double_factorial(2 * N - 1) * N)
        return (1.0, sign * k1, 2.0 / ((2 * N - 1) * N))
    raise ValueError(f"no closed form for beta={beta}")


def closed_form_density(beta: int, N: int, theta):
    """Exact eigenphase density of Haar-random SU(N), symmetric SU(N) or selfdual SU(2N).

    Parameters
    ----------
    beta : {1, 2, 4}
    N : int
        Number of (distinct) eigenphases.
    theta : float or array_like
        Angle(s) in radians; any real value is accepted.

    Returns
    -------
    float or ndarray
        Density in the total-mass convention (integrates to ``N``).
    """
    if beta not in CLOSED_FORM_BETAS:
        raise ValueError(f"closed form only exists for beta in {CLOSED_FORM_BETAS}, got {beta}")
    _check_not_degenerate(N)
    th = wrap_phase(theta)
    if beta == 1 and N == 2:
        return _scalar_or_array(np.abs(np.sin(th)) / 2, theta)
    _, k1, k2 = closed_form_cos_coefficients(beta, N)
    rho = N / (2 * np.pi) * (1.0 + k1 * np.cos(N * th) + k2 * np.cos(2 * N * th))
    return _scalar_or_array(rho, theta)


@dataclass(frozen=True)
class FourierDensity:
    """Harmonic expansion of an eigenphase density.

    ``coefficients[n]`` holds ``c_n`` for ``n = 0, 1, ...``; negative indices
    mirror (``c_{-n} = c_n``).  ``truncation`` is ``"exact"`` when every omitted
    coefficient is provably zero, otherwise ``"tail_bounded"`` with
    ``tail_bound`` estimating ``sum_{|n| > n_last} |c_n|``.
    """

    spec: EnsembleSpec
    coefficients: tuple[float, ...]
    truncation: Literal["exact", "tail_bounded"]
    tail_bound: float = 0.0

    @property
    def harmonic_stride(self) -> int:
        return self.spec.N

    def coefficient(self, n: int) -> float:
        n = abs(n)
        return self.coefficients[n] if n < len(self.coefficients) else 0.0

    def as_mapping(self) -> dict[int, float]:
        out = {0: self.coefficients[0]}
        for n, c in enumerate(self.coefficients[1:], start=1):
            out[n] = out[-n] = c
        return out


def _log_coefficient(beta: int, N: int, n: int):
    res = morris_log(MorrisParams.from_beta(beta, N, n))
    return res, log_cbeta_norm(beta, N)


def fourier_coefficient(beta: int, N: int, n: int) -> float:
    """Single coefficient ``c_n`` of the harmonic expansion (``c_0 = 1``)."""
    res, log_c = _log_coefficient(beta, N, abs(n))
    if res.value.is_zero:
        return 0.0
    return res.value.sign * math.exp(res.value.log_abs - log_c)


def _power_law_tail(c_prev: float, c_last: float, n: int) -> float:
    """Estimate ``2 * sum_{m > n} |c_m|`` assuming ``|c_m| ~ m^-p`` locally."""
    a, b = abs(c_prev), abs(c_last)
    if b == 0.0:
        return 0.0
    if n < 2 or a <= b:
        return math.inf
    p = math.log(a / b) / math.log(n / (n - 1))
    if p <= 1.0:
        return math.inf
    return 2.0 * b * n / (p - 1.0)


@functools.lru_cache(maxsize=256)
def fourier_coefficients(
    beta: int,
    N: int,
    tol: float = 1e-16,
    n_max: int = 10_000,
    strict: bool = True,
) -> FourierDensity:
    """Fourier coefficients of the unimodular CbetaE(N) eigenphase density.

    Enumeration over ``n = 0, 1, 2, ...`` stops at the first exact zero (a
    denominator gamma pole, which persists for every larger ``n`` because the
    offending argument only decreases by integers), after three consecutive
    ``|c_n| < tol``, or at ``n_max``.

    Raises
    ------
    TruncationFailure
        If ``n_max`` is reached with an estimated tail above ``100 * tol`` and
        ``strict`` is true.
    """
    if N < 2:
        _check_not_degenerate(N)
    if tol <= 0:
        raise ValueError("tol must be positive")
    spec = EnsembleSpec(beta, N, True)
    log_c = log_cbeta_norm(beta, N)
    coeffs = [1.0]
    small_run = 0
    for n in range(1, n_max + 1):
        res = morris_log(MorrisParams.from_beta(beta, N, n))
        if res.value.is_zero:
            return FourierDensity(spec, tuple(coeffs), "exact", 0.0)
        c = res.value.sign * math.exp(res.value.log_abs - log_c)
        coeffs.append(c)
        small_run = small_run + 1 if abs(c) < tol else 0
        if small_run == 3:
            tail = _power_law_tail(coeffs[-2], coeffs[-1], n)
            return FourierDensity(spec, tuple(coeffs), "tail_bounded", tail)
    tail = _power_law_tail(coeffs[-2], coeffs[-1], n_max)
    if strict and tail > 100 * tol:
        raise TruncationFailure(
            f"beta={beta}, N={N}: tail bound {tail:.3g} after n_max={n_max} terms "
            f"exceeds 100*tol={100 * tol:.3g}"
        )
    return FourierDensity(spec, tuple(coeffs), "tail_bounded", tail)


def fourier_density(fd: FourierDensity, theta):
    """Evaluate ``N/(2 pi) * sum_n c_n cos(n N theta)``.

    Terms are added in ascending ``|n|`` (the ``+n`` and ``-n`` terms together)
    with Neumaier compensation, vectorized over ``theta``.
    """
    N = fd.harmonic_stride
    th = wrap_phase(theta)
    x = N * np.atleast_1d(th)
    total = np.full_like(x, fd.coefficients[0])
    comp = np.zeros_like(x)
    for n, c in enumerate(fd.coefficients[1:], start=1):
        term = 2.0 * c * np.cos(n * x)
        t = total + term
        big = np.abs(total) >= np.abs(term)
        comp += np.where(big, (total - t) + term, (term - t) + total)
        total = t
    rho = N / (2 * np.pi) * (total + comp)
    if np.ndim(theta) == 0:
        return float(rho[0])
    return rho.reshape(np.shape(theta))


def trace_power_expectation(beta: int, N: int, k: int) -> float:
    """``E[sum_j exp(i k theta_j)]`` over the unimodular ensemble.

    Nonzero only when ``N`` divides ``k``, in which case it is ``N * c_{k/N}``.
    """
    if k == 0:
        return float(N)
    if k % N:
        return 0.0
    return N * fourier_coefficient(beta, N, k // N)


def phase_grid(grid_points: int) -> np.ndarray:
    """Uniform grid on (-pi, pi] ending at pi."""
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    return -np.pi + 2 * np.pi * np.arange(1, grid_points + 1) / grid_points


def density(spec: EnsembleSpec, theta, normalization: Normalization = "total"):
    """Eigenphase density of ``spec``.

    Non-unimodular CbetaE densities are uniform.  Unimodular ones use the
    closed form for beta in {1, 2, 4} and the Fourier series otherwise.
    """
    if normalization not in ("total", "per_eigenvalue"):
        raise ValueError(f"unknown normalization {normalization!r}")
    if not spec.unimodular:
        rho = np.full(np.shape(theta), spec.N / (2 * np.pi))
        rho = _scalar_or_array(rho, theta)
    elif spec.beta in CLOSED_FORM_BETAS:
        rho = closed_form_density(spec.beta, spec.N, theta)
    else:
        _check_not_degenerate(spec.N)
        rho = fourier_density(fourier_coefficients(spec.beta, spec.N), theta)
    if normalization == "per_eigenvalue":
        rho = rho / spec.N
    return rho


def density_grid(
    spec: EnsembleSpec, grid_points: int, normalization: Normalization = "total"
) -> np.ndarray:
    """``(grid_points, 2)`` array of ``(theta, rho)`` on a uniform grid of (-pi, pi]."""
    theta = phase_grid(grid_points)
    rho = density(spec, theta, normalization)
    return np.column_stack([theta, rho])
