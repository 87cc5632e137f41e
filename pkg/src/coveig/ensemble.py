"""Observation synthesis and sample spectra.

Observations are Y = R^(1/2) X with X an N x M matrix of i.i.d. standard
circularly-symmetric complex Gaussians and R the realized diagonal population
covariance. The sample covariance (1/M) Y Y^H and its M x M companion
(1/M) Y^H Y share every nonzero eigenvalue; the larger one carries |N - M|
structural zeros.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import DimensionError, InputError
from .model import PopulationModel, multiplicities

__all__ = [
    "SampleSpectrum",
    "complex_gaussian",
    "generate_observations",
    "hermitian_eigenvalues",
    "sample_spectrum",
    "simulate_spectrum",
    "trial_seed",
    "write_observations",
    "read_observations",
]

_MAGIC = b"COVEIG01"


@dataclass(frozen=True)
class SampleSpectrum:
    """Eigenvalues of the sample covariance and of its companion.

    lambda_hat has length N, lambda_hat_companion length M, both ascending;
    the nonzero parts coincide and whichever is longer is padded with
    structural zeros.
    """

    N: int
    M: int
    lambda_hat: NDArray[np.float64]
    lambda_hat_companion: NDArray[np.float64]
    seed: int

    @property
    def rank(self) -> int:
        return min(self.N, self.M)

    def positive_eigenvalues(self) -> NDArray[np.float64]:
        """The min(N, M) almost-surely positive sample eigenvalues."""
        lam = self.lambda_hat[-self.rank:]
        if lam[0] <= 0:
            raise InputError("sample spectrum is rank deficient")
        return lam


def complex_gaussian(
    rng: np.random.Generator, shape: tuple[int, ...]
) -> NDArray[np.complex128]:
    """Standard circularly-symmetric complex Gaussian draws, E|Z|^2 = 1.

    Polar form: |Z|^2 is Exp(1) and the phase is uniform, so the real and
    imaginary parts come out N(0, 1/2) each.
    """
    u = rng.random(shape)
    v = rng.random(shape)
    radius = np.sqrt(-np.log1p(-u))
    return radius * np.exp(2j * np.pi * v)


def _rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def trial_seed(master_seed: int, index: int) -> int:
    """Stable per-trial integer seed derived from (master_seed, index)."""
    ss = np.random.SeedSequence((int(master_seed), int(index)))
    return int(ss.generate_state(1, np.uint64)[0])


def generate_observations(
    model: PopulationModel, N: int, M: int, seed: int
) -> NDArray[np.complex128]:
    """N x M observation matrix Y = R^(1/2) X for the realized model.

    The realized covariance R is diagonal with eigenvalue rho_k repeated
    according to ``multiplicities(model, N)``.
    """
    if N < 1 or M < 1:
        raise DimensionError(f"need N >= 1 and M >= 1, got N={N}, M={M}")
    counts = multiplicities(model, N)
    scale = np.sqrt(np.repeat(model.rho_array(), counts))
    x = complex_gaussian(_rng_for(seed), (N, M))
    return scale[:, None] * x


def hermitian_eigenvalues(A: np.ndarray) -> NDArray[np.float64]:
    """Ascending real eigenvalues of a Hermitian matrix.

    Rejects inputs whose Hermitian defect exceeds 1e-12 relative to the
    largest entry instead of silently symmetrizing them.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError("matrix has non-finite entries")
    scale = np.abs(A).max() if A.size else 0.0
    defect = np.abs(A - A.conj().T).max()
    if defect > 1e-12 * (1.0 + scale):
        raise InputError(f"matrix is not Hermitian (defect {defect:.3e})")
    return np.linalg.eigvalsh(A)


def sample_spectrum(
    observations: np.ndarray,
    seed: int = 0,
    derive_companion: bool = False,
) -> SampleSpectrum:
    """Eigenvalues of (1/M) Y Y^H and of the companion (1/M) Y^H Y.

    With ``derive_companion`` only the smaller Gram matrix is diagonalized
    and the other spectrum is obtained by padding with structural zeros,
    which is exact up to eigensolver roundoff and much cheaper when N and M
    differ a lot.
    """
    Y = np.asarray(observations)
    if Y.ndim != 2:
        raise DimensionError(f"observations must be 2-D, got shape {Y.shape}")
    N, M = Y.shape
    if N < 1 or M < 1:
        raise DimensionError("observations must be non-empty")
    if not np.all(np.isfinite(Y)):
        raise InputError("observations contain non-finite entries")
    Y = Y.astype(np.complex128, copy=False)

    if derive_companion:
        if N <= M:
            lam = _gram_eigenvalues(Y, M)
            lam_comp = np.concatenate([np.zeros(M - N), lam])
        else:
            lam_comp = _gram_eigenvalues(Y.conj().T, M)
            lam = np.concatenate([np.zeros(N - M), lam_comp])
    else:
        lam = _gram_eigenvalues(Y, M)
        lam_comp = _gram_eigenvalues(Y.conj().T, M)
    return SampleSpectrum(
        N=N, M=M, lambda_hat=lam, lambda_hat_companion=lam_comp,
        seed=int(seed),
    )


def _gram_eigenvalues(Y: np.ndarray, M: int) -> NDArray[np.float64]:
    lam = np.linalg.eigvalsh(Y @ Y.conj().T / M)
    # eigvalsh on a PSD Gram matrix can return tiny negatives
    np.clip(lam, 0.0, None, out=lam)
    return lam


def simulate_spectrum(
    model: PopulationModel, N: int, M: int, seed: int
) -> SampleSpectrum:
    """Draw observations for the model and return their sample spectrum."""
    Y = generate_observations(model, N, M, seed)
    return sample_spectrum(Y, seed=seed, derive_companion=True)


def write_observations(path, observations: np.ndarray, seed: int = 0) -> None:
    """Store complex observations in the package's binary format.

    Layout: 8-byte magic, little-endian int64 N, M, seed, then the matrix
    row-major as float64 (real, imag) pairs.
    """
    Y = np.asarray(observations, dtype=np.complex128)
    if Y.ndim != 2:
        raise DimensionError(f"observations must be 2-D, got shape {Y.shape}")
    N, M = Y.shape
    payload = np.empty((N, M, 2), dtype="<f8")
    payload[:, :, 0] = Y.real
    payload[:, :, 1] = Y.imag
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<qqq", N, M, int(seed)))
        fh.write(payload.tobytes())


def read_observations(path) -> tuple[NDArray[np.complex128], int]:
    """Read a matrix written by :func:`write_observations`; returns (Y, seed)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise InputError(f"{path}: not a coveig observation file")
        N, M, seed = struct.unpack("<qqq", fh.read(24))
        if N < 1 or M < 1:
            raise InputError(f"{path}: invalid dimensions {N} x {M}")
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != N * M * 2:
        raise InputError(f"{path}: truncated payload")
    data = data.reshape(N, M, 2)
    return data[:, :, 0] + 1j * data[:, :, 1], int(seed)
