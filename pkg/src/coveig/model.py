"""Population covariance models with finitely many distinct eigenvalues.

A model is a discrete spectral measure: L distinct eigenvalues rho_1 < ... <
rho_L with weights c_k summing to one, plus the limiting aspect ratio
c = N/M of observation dimension to sample count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import InfeasibleMultiplicityError, ModelError

__all__ = ["PopulationModel", "multiplicities", "true_moments"]

_WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class PopulationModel:
    """Discrete limiting spectrum of the population covariance.

    Parameters
    ----------
    rho : strictly increasing positive eigenvalues, length L.
    weights : limiting proportions of each eigenvalue, in (0, 1), summing
        to one within 1e-12.
    aspect : limiting ratio c = N/M, positive.
    """

    rho: tuple[float, ...]
    weights: tuple[float, ...]
    aspect: float

    def __post_init__(self):
        rho = tuple(float(r) for r in self.rho)
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "aspect", float(self.aspect))
        if len(rho) == 0:
            raise ModelError("model needs at least one eigenvalue")
        if len(rho) != len(weights):
            raise ModelError(
                f"{len(rho)} eigenvalues but {len(weights)} weights"
            )
        if not all(np.isfinite(rho)) or not all(np.isfinite(weights)):
            raise ModelError("model parameters must be finite")
        if any(r <= 0 for r in rho):
            raise ModelError("eigenvalues must be positive")
        if any(b <= a for a, b in zip(rho, rho[1:])):
            raise ModelError("eigenvalues must be strictly increasing")
        if any(not 0 < w < 1 for w in weights) and len(weights) > 1:
            raise ModelError("weights must lie in (0, 1)")
        if len(weights) == 1 and abs(weights[0] - 1.0) > _WEIGHT_SUM_TOL:
            raise ModelError("single weight must equal one")
        if abs(sum(weights) - 1.0) > _WEIGHT_SUM_TOL:
            raise ModelError(f"weights sum to {sum(weights)!r}, not 1")
        if not np.isfinite(self.aspect) or self.aspect <= 0:
            raise ModelError("aspect ratio must be positive and finite")

    @property
    def L(self) -> int:
        return len(self.rho)

    def rho_array(self) -> NDArray[np.float64]:
        return np.asarray(self.rho, dtype=np.float64)

    def weights_array(self) -> NDArray[np.float64]:
        return np.asarray(self.weights, dtype=np.float64)


def multiplicities(model: PopulationModel, N: int) -> NDArray[np.int64]:
    """Integer multiplicities N_1..N_L that sum to N and track the weights.

    Uses largest-remainder rounding: floor(w_k * N) plus one extra count for
    the largest fractional parts until the total reaches N. Ties go to the
    lower index, which keeps the result deterministic.
    """
    if N < model.L:
        raise InfeasibleMultiplicityError(
            f"N={N} cannot host {model.L} distinct eigenvalues"
        )
    w = model.weights_array()
    raw = w * N
    base = np.floor(raw).astype(np.int64)
    short = N - int(base.sum())
    if short:
        frac = raw - base
        # stable sort on -frac: ties resolved toward the lower index
        order = np.argsort(-frac, kind="stable")
        base[order[:short]] += 1
    if np.any(base == 0):
        raise InfeasibleMultiplicityError(
            f"N={N} leaves some eigenvalue with zero copies "
            f"(weights {model.weights})"
        )
    return base


def true_moments(model: PopulationModel, up_to: int) -> NDArray[np.float64]:
    """Moments gamma_ell = sum_k c_k rho_k^ell for ell = 0..up_to inclusive.

    Accumulated in extended precision so the result is correctly rounded;
    inverse problems built on these moments amplify every spare ulp.
    """
    if up_to < 0:
        raise ModelError("up_to must be non-negative")
    rho = model.rho_array().astype(np.longdouble)
    w = model.weights_array().astype(np.longdouble)
    powers = rho[None, :] ** np.arange(up_to + 1)[:, None]
    return (powers @ w).astype(np.float64)
