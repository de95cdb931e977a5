"""Independent checks of the eigenphase densities.

``oracle_density_quadrature`` integrates the constrained joint density
directly and never touches the gamma products; the goodness-of-fit helpers
compare sampler output with any density callable.

Eigenphases of one matrix are correlated, so p-values computed on pooled
phases are approximate.  ``moment_check`` works per matrix draw and has an
exact standard error.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import special, stats

from unicirc.density_engine import EnsembleSpec, density, trace_power_expectation
from unicirc.errors import InsufficientSamples, UnsupportedN
from unicirc.ensemble_sampler import RngStream, sample_eigenphases

__all__ = [
    "GofReport",
    "HistogramSpec",
    "MomentCheck",
    "vandermonde_abs_pow",
    "oracle_density_quadrature",
    "histogram",
    "chi_square_gof",
    "density_cdf",
    "ks_test",
    "moment_check",
    "run_verification",
    "P_THRESHOLD",
    "Z_THRESHOLD",
]

P_THRESHOLD = 1e-3
Z_THRESHOLD = 4.0
MIN_GOF_SAMPLES = 1000
SUBPOINTS_PER_BIN = 32

Density = Callable[[np.ndarray], np.ndarray]


def vandermonde_abs_pow(phases, beta: float) -> np.ndarray | float:
    """``|prod_{j<k} (e^{i theta_j} - e^{i theta_k})|^beta`` over the last axis.

    Computed as ``exp(beta * sum log|2 sin((theta_j - theta_k)/2)|)``; exact
    coincidences give 0.
    """
    ph = np.asarray(phases, dtype=float)
    n = ph.shape[-1]
    iu, ju = np.triu_indices(n, k=1)
    diff = ph[..., iu] - ph[..., ju]
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(2.0 * np.sin(diff / 2.0)))
    out = np.exp(beta * np.sum(logs, axis=-1))
    return float(out) if out.ndim == 0 else out


@functools.lru_cache(maxsize=32)
def _three_phase_mass(beta: int, resolution: int) -> float:
    # periodic trapezoid over (theta1, theta2) with theta3 = -theta1 - theta2
    h = 2 * np.pi / resolution
    grid = -np.pi + h * np.arange(resolution)
    total = 0.0
    for start in range(0, resolution, 256):
        t1 = grid[start:start + 256, None]
        t2 = grid[None, :]
        pts = np.stack(np.broadcast_arrays(t1, t2, -t1 - t2), axis=-1)
        total += math.fsum(vandermonde_abs_pow(pts, beta).ravel())
    return total * h * h


def oracle_density_quadrature(beta: int, N: int, theta: float, resolution: int = 2048) -> float:
    """Constrained one-point density by direct quadrature (total mass N).

    N = 2: the slice ``theta_2 = -theta_1`` gives ``rho(theta) = 2 w(theta)/Z``.
    N = 3: ``rho(theta) = 3 int w(theta, t, -theta - t) dt / Z`` with the
    normalization ``Z`` taken from a 2-d periodic trapezoid rule.
    """
    if N == 2:
        h = 2 * np.pi / resolution
        grid = -np.pi + h * np.arange(resolution)
        z = h * math.fsum(vandermonde_abs_pow(np.column_stack([grid, -grid]), beta))
        return 2.0 * vandermonde_abs_pow([theta, -theta], beta) / z
    if N == 3:
        h = 2 * np.pi / resolution
        t2 = -np.pi + h * np.arange(resolution)
        pts = np.column_stack([np.full_like(t2, theta), t2, -theta - t2])
        marginal = h * math.fsum(vandermonde_abs_pow(pts, beta))
        return 3.0 * marginal / _three_phase_mass(beta, resolution)
    raise UnsupportedN(f"quadrature oracle only handles N in (2, 3), got N={N}")


@dataclass(frozen=True)
class HistogramSpec:
    """Uniform bins over (-pi, pi]; bins are closed on the right."""

    bins: int = 64

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(-np.pi, np.pi, self.bins + 1)


def histogram(batch, hs: HistogramSpec = HistogramSpec()) -> np.ndarray:
    """Pool every phase of every sample into ``hs.bins`` right-closed bins."""
    ph = np.asarray(batch, dtype=float).ravel()
    if ph.size == 0:
        raise InsufficientSamples("empty batch")
    width = 2 * np.pi / hs.bins
    idx = np.ceil((ph + np.pi) / width).astype(np.int64) - 1
    # -pi belongs to the seam, i.e. to the last bin
    idx = np.where(idx < 0, hs.bins - 1, np.minimum(idx, hs.bins - 1))
    return np.bincount(idx, minlength=hs.bins)


@dataclass(frozen=True)
class GofReport:
    chi_square: float
    dof: int
    p_value: float
    sample_count: int
    bins_used: int
    ks_statistic: float | None = None
    ks_p_value: float | None = None
    notes: tuple[str, ...] = field(default=())


def _bin_masses(rho: Density, bins: int) -> np.ndarray:
    edges = np.linspace(-np.pi, np.pi, bins + 1)
    sub = np.linspace(0.0, 1.0, SUBPOINTS_PER_BIN + 1)
    pts = edges[:-1, None] + (edges[1:] - edges[:-1])[:, None] * sub[None, :]
    vals = np.asarray(rho(pts), dtype=float)
    h = (2 * np.pi / bins) / SUBPOINTS_PER_BIN
    return h * (vals[:, 1:-1].sum(axis=1) + 0.5 * (vals[:, 0] + vals[:, -1]))


def _merge_bins(observed: np.ndarray, expected: np.ndarray, minimum: float = 5.0):
    obs, exp_ = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= minimum:
            obs.append(acc_o)
            exp_.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if exp_:
            obs[-1] += acc_o
            exp_[-1] += acc_e
        else:
            obs.append(acc_o)
            exp_.append(acc_e)
    return np.array(obs), np.array(exp_)


def chi_square_gof(counts, expected_density: Density) -> GofReport:
    """Pearson chi-square of binned phases against a density.

    Expected bin masses come from a 32-subinterval trapezoid rule per bin and
    are rescaled to the observed total.  Adjacent bins are merged until every
    expected count is at least 5.
    """
    counts = np.asarray(counts)
    total = int(counts.sum())
    if total < MIN_GOF_SAMPLES:
        raise InsufficientSamples(f"need at least {MIN_GOF_SAMPLES} phases, got {total}")
    masses = _bin_masses(expected_density, counts.size)
    expected = total * masses / masses.sum()
    obs, exp_ = _merge_bins(counts.astype(float), expected)
    if obs.size < 2:
        raise InsufficientSamples("fewer than two bins left after merging")
    chi2 = float(np.sum((obs - exp_) ** 2 / exp_))
    dof = obs.size - 1
    return GofReport(chi2, dof, float(stats.chi2.sf(chi2, dof)), total, obs.size)


def density_cdf(rho: Density, grid_points: int = 8192) -> Callable[[np.ndarray], np.ndarray]:
    """CDF on (-pi, pi] by cumulative trapezoid of ``rho``, normalized to 1."""
    x = np.linspace(-np.pi, np.pi, grid_points + 1)
    y = np.asarray(rho(x), dtype=float)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))])
    cum /= cum[-1]
    return lambda t: np.interp(t, x, cum)


def ks_test(phases, cdf: Callable[[np.ndarray], np.ndarray]) -> tuple[float, float]:
    """One-sample KS statistic and asymptotic Kolmogorov p-value.

    Pooled phases of one matrix are dependent, so treat the p-value as a
    diagnostic.
    """
    x = np.sort(np.asarray(phases, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise InsufficientSamples("empty sample")
    f = cdf(x)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))
    return d, float(special.kolmogorov(math.sqrt(n) * d))


class MomentCheck(NamedTuple):
    mean: float
    standard_error: float
    z_score: float


def moment_check(batch, k: int, analytic: float) -> MomentCheck:
    """Compare the per-draw mean of ``sum_j cos(k theta_j)`` with ``analytic``."""
    ph = np.atleast_2d(np.asarray(batch, dtype=float))
    x = np.cos(k * ph).sum(axis=1)
    if x.size < 2:
        raise InsufficientSamples("need at least two samples for a standard error")
    mean = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(x.size))
    if se == 0.0:
        z = 0.0 if mean == analytic else math.copysign(math.inf, mean - analytic)
    else:
        z = (mean - analytic) / se
    return MomentCheck(mean, se, z)


def run_verification(
    spec: EnsembleSpec,
    count: int,
    rng: RngStream,
    bins: int = 64,
    expect_uniform: bool = False,
    path: str = "matrix",
    workers: int = 1,
) -> dict:
    """Sample, then test the pooled phases against the exact density.

    Runs a chi-square test, a KS test and moment checks at ``k = N`` and
    ``k = 2N``.  With ``expect_uniform`` the samples are compared with the
    flat density instead; that comparison should fail.

    Returns a JSON-ready dict with one entry per test and an overall
    ``passed`` flag.
    """
    batch = sample_eigenphases(spec, count, rng, path=path, workers=workers)
    if expect_uniform:
        reference = EnsembleSpec(spec.beta, spec.N, unimodular=False)
    else:
        reference = spec

    def rho(t):
        return density(reference, t)

    counts = histogram(batch, HistogramSpec(bins))
    gof = chi_square_gof(counts, rho)
    ks_stat, ks_p = ks_test(batch, density_cdf(rho))
    tests = [
        {
            "name": "chi_square",
            "statistic": gof.chi_square,
            "dof": gof.dof,
            "bins_used": gof.bins_used,
            "p_value": gof.p_value,
            "threshold": P_THRESHOLD,
            "passed": gof.p_value > P_THRESHOLD,
        },
        {
            "name": "ks",
            "statistic": ks_stat,
            "p_value": ks_p,
            "threshold": P_THRESHOLD,
            "passed": ks_p > P_THRESHOLD,
        },
    ]
    for k in (spec.N, 2 * spec.N):
        analytic = 0.0 if not reference.unimodular else trace_power_expectation(spec.beta, spec.N, k)
        mc = moment_check(batch, k, analytic)
        tests.append(
            {
                "name": f"moment_k{k}",
                "k": k,
                "analytic": analytic,
                "mean": mc.mean,
                "standard_error": mc.standard_error,
                "z_score": mc.z_score,
                "threshold": Z_THRESHOLD,
                "passed": abs(mc.z_score) < Z_THRESHOLD,
            }
        )
    return {
        "sample_count": count,
        "phase_count": int(counts.sum()),
        "tests": tests,
        "passed": all(t["passed"] for t in tests),
    }
