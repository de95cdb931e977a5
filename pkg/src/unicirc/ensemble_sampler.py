"""Exact samplers for CUE/COE/CSE eigenphases and their unimodular versions.

All matrix constructors accept a ``size`` argument and return stacks of
shape ``(size, d, d)``; phase routines act on the last axis, so a batch of
phase vectors is simply a 2-d float array with one sorted row per draw.

Random numbers come from numpy's Philox counter-based generator keyed by
``(seed, stream_id)``.  Batches are cut into fixed-size shards and shard ``s``
starts at counter block ``s << 192``, so results never depend on how many
worker threads processed the shards.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from unicirc.density_engine import EnsembleSpec, wrap_phase
from unicirc.errors import NotUnitary, PairingFailure, UnsupportedBeta

__all__ = [
    "RngStream",
    "ginibre",
    "haar_unitary",
    "haar_special_unitary",
    "symmetric_unitary",
    "selfdual_unitary",
    "symplectic_form",
    "eigenphases",
    "kramers_reduce",
    "unimodular_rotate",
    "sample_eigenphases",
    "SHARD_SIZE",
    "default_workers",
]

_MASK64 = (1 << 64) - 1
SHARD_SIZE = 8192
KRAMERS_TOL = 1e-7
UNIT_TOL = 1e-9


@dataclass(frozen=True)
class RngStream:
    """Seed plus stream id for a reproducible, splittable random stream."""

    seed: int
    stream_id: int = 0

    def generator(self, substream: int = 0) -> np.random.Generator:
        """Independent ``Generator`` for ``substream`` (e.g. a shard index)."""
        bitgen = np.random.Philox(
            key=[self.seed & _MASK64, self.stream_id & _MASK64],
            counter=[0, 0, 0, substream & _MASK64],
        )
        return np.random.Generator(bitgen)


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def _shape(dim, size):
    return (dim, dim) if size is None else (size, dim, dim)


def ginibre(dim: int, rng, size: int | None = None) -> np.ndarray:
    """Matrix of iid standard complex Gaussians, ``E|z|^2 = 1``.

    Real parts are drawn first, then imaginary parts, both as one block.
    """
    gen = _as_generator(rng)
    shape = _shape(dim, size)
    re = gen.standard_normal(shape)
    im = gen.standard_normal(shape)
    return (re + 1j * im) * np.sqrt(0.5)


def haar_unitary(dim: int, rng, size: int | None = None) -> np.ndarray:
    """Haar-random U(dim) via QR of a Ginibre matrix with the phase fix ``Q diag(r_jj/|r_jj|)``."""
    gen = _as_generator(rng)
    for _ in range(2):
        q, r = np.linalg.qr(ginibre(dim, gen, size))
        d = np.diagonal(r, axis1=-2, axis2=-1)
        mod = np.abs(d)
        if np.all(mod > 0):
            return q * (d / mod)[..., None, :]
    raise np.linalg.LinAlgError("QR produced a zero diagonal entry twice")


def haar_special_unitary(dim: int, rng, size: int | None = None) -> np.ndarray:
    """Haar-random SU(dim).

    ``U = V exp(i(-arg det V + 2 pi k)/dim)`` with ``V`` Haar on U(dim) and
    ``k`` uniform on ``{0, ..., dim-1}``; a fixed branch would rotate the
    spectrum rigidly and bias the eigenphase density.
    """
    gen = _as_generator(rng)
    v = haar_unitary(dim, gen, size)
    k = gen.integers(0, dim, size=size)
    alpha = (-np.angle(np.linalg.det(v)) + 2 * np.pi * k) / dim
    return v * np.exp(1j * alpha)[..., None, None]


def symmetric_unitary(N: int, rng, size: int | None = None) -> np.ndarray:
    """COE matrix ``V V^T`` with ``V`` Haar on U(N)."""
    v = haar_unitary(N, rng, size)
    return v @ np.swapaxes(v, -1, -2)


def symplectic_form(N: int) -> np.ndarray:
    """``J = i sigma_2 (x) I_N = [[0, I], [-I, 0]]``."""
    eye = np.eye(N)
    zero = np.zeros((N, N))
    return np.block([[zero, eye], [-eye, zero]])


def selfdual_unitary(N: int, rng, size: int | None = None) -> np.ndarray:
    """CSE matrix ``(J V^T J^-1) V`` of dimension 2N with ``V`` Haar on U(2N)."""
    v = haar_unitary(2 * N, rng, size)
    j = symplectic_form(N)
    return j @ np.swapaxes(v, -1, -2) @ j.T @ v


def eigenphases(w: np.ndarray, tol: float = UNIT_TOL) -> np.ndarray:
    """Sorted eigenphases in (-pi, pi] of a unitary matrix or a stack of them.

    Raises
    ------
    NotUnitary
        If some eigenvalue modulus differs from 1 by more than ``tol``.
    """
    lam = np.linalg.eigvals(w)
    dev = np.max(np.abs(np.abs(lam) - 1.0), initial=0.0)
    if dev > tol:
        raise NotUnitary(f"eigenvalue modulus deviates from 1 by {dev:.3g} > {tol:.3g}")
    return np.sort(wrap_phase(np.angle(lam)), axis=-1)


def _circ_gap(x, y):
    return np.abs(wrap_phase(y - x))


def kramers_reduce(phases, tol: float = KRAMERS_TOL) -> np.ndarray:
    """Collapse Kramers-degenerate pairs to their circular means.

    The input (last axis of length 2N) is sorted, then paired either as
    ``(0,1), (2,3), ...`` or, when a pair straddles the seam at +-pi, as
    ``(1,2), ..., (2N-1, 0)``.
    """
    ph = np.sort(wrap_phase(phases), axis=-1)
    n2 = ph.shape[-1]
    if n2 % 2:
        raise PairingFailure(f"odd number of phases ({n2})")
    shifted = np.roll(ph, -1, axis=-1)
    gap0 = _circ_gap(ph[..., 0::2], ph[..., 1::2])
    gap1 = _circ_gap(shifted[..., 0::2], shifted[..., 1::2])
    ok0 = np.max(gap0, axis=-1) <= tol
    ok1 = np.max(gap1, axis=-1) <= tol
    if not np.all(ok0 | ok1):
        worst = float(np.max(np.minimum(np.max(gap0, axis=-1), np.max(gap1, axis=-1))))
        raise PairingFailure(f"eigenphases do not pair up: gap {worst:.3g} > tol {tol:.3g}")
    src = np.where(ok0[..., None], ph, shifted)
    first, second = src[..., 0::2], src[..., 1::2]
    mean = wrap_phase(first + wrap_phase(second - first) / 2)
    return np.sort(mean, axis=-1)


def unimodular_rotate(phases, rng=None, k=None) -> np.ndarray:
    """Project CbetaE phases onto the constraint ``sum theta = 0 (mod 2 pi)``.

    Every phase is shifted by ``-S/N + 2 pi k/N`` where ``S`` is the wrapped
    phase sum and ``k`` is uniform on ``{0, ..., N-1}`` unless given.  The
    CbetaE weight is invariant under common rotations, so this lands exactly on
    the conditional (unimodular) measure.
    """
    ph = np.asarray(phases, dtype=float)
    n = ph.shape[-1]
    s = wrap_phase(np.sum(ph, axis=-1))
    if k is None:
        if rng is None:
            raise ValueError("need rng or an explicit k")
        k = _as_generator(rng).integers(0, n, size=ph.shape[:-1])
    shift = -s / n + 2 * np.pi * np.asarray(k) / n
    return np.sort(wrap_phase(ph + np.asarray(shift)[..., None]), axis=-1)


def _sample_shard(spec: EnsembleSpec, count: int, gen: np.random.Generator, path: str) -> np.ndarray:
    beta, n = spec.beta, spec.N
    if beta == 2:
        if spec.unimodular and path == "matrix":
            return eigenphases(haar_special_unitary(n, gen, count))
        ph = eigenphases(haar_unitary(n, gen, count))
    elif beta == 1:
        ph = eigenphases(symmetric_unitary(n, gen, count))
    else:
        ph = kramers_reduce(eigenphases(selfdual_unitary(n, gen, count)))
    if spec.unimodular:
        ph = unimodular_rotate(ph, gen)
    return ph


def default_workers() -> int:
    """Worker cap from ``UNICIRC_THREADS``, else the CPU count."""
    env = os.environ.get("UNICIRC_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def sample_eigenphases(
    spec: EnsembleSpec,
    count: int,
    rng: RngStream,
    path: str = "matrix",
    workers: int = 1,
    shard_size: int = SHARD_SIZE,
) -> np.ndarray:
    """Draw ``count`` sorted eigenphase vectors, shape ``(count, spec.N)``.

    Parameters
    ----------
    path : {"matrix", "rotation"}
        Only matters for unimodular beta = 2: ``"matrix"`` samples SU(N)
        directly, ``"rotation"`` samples U(N) and projects the phases.
        beta = 1 and 4 always use the phase rotation.
    workers : int
        Threads used to process shards; the output does not depend on it.
    """
    if not spec.has_matrix_model:
        raise UnsupportedBeta(f"no matrix model for beta={spec.beta}; only 1, 2, 4 can be sampled")
    if path not in ("matrix", "rotation"):
        raise ValueError(f"unknown sampling path {path!r}")
    if count < 1:
        raise ValueError("count must be positive")
    sizes = [min(shard_size, count - start) for start in range(0, count, shard_size)]

    def run(index: int) -> np.ndarray:
        return _sample_shard(spec, sizes[index], rng.generator(index), path)

    if workers <= 1 or len(sizes) == 1:
        parts = [run(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=min(workers, len(sizes))) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    return np.concatenate(parts, axis=0)
