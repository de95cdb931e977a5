"""Eigenphase densities and exact samplers for unimodular circular ensembles."""

__version__ = "0.1.0"

from unicirc.density_engine import (  # noqa: E402
    EnsembleSpec,
    FourierDensity,
    closed_form_density,
    density,
    density_grid,
    fourier_coefficients,
    fourier_density,
    trace_power_expectation,
)
from unicirc.ensemble_sampler import RngStream, sample_eigenphases  # noqa: E402
from unicirc.gamma_toolkit import MorrisParams, cbeta_norm, morris_integral  # noqa: E402

__all__ = [
    "EnsembleSpec",
    "FourierDensity",
    "MorrisParams",
    "RngStream",
    "cbeta_norm",
    "closed_form_density",
    "density",
    "density_grid",
    "fourier_coefficients",
    "fourier_density",
    "morris_integral",
    "sample_eigenphases",
    "trace_power_expectation",
    "__version__",
]
