"""Spectral-moment estimators gamma_hat_0 .. gamma_hat_{2L-1}.

Both estimators evaluate the same contour integrals of the empirical
companion transform m(z): the first moment comes from the log-derivative
integrand z m'(z)/m(z), higher ones from 1/m(z)^(ell-1). The quadrature
route discretizes an enclosing contour; the residue route sums the exact
residues at the secular roots and serves as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .contours import Contour, _check_clearance, spectrum_contour
from .empirical import SecularRoots, companion_transform_nodes, secular_zeros
from .ensemble import SampleSpectrum
from .errors import (
    ContourError,
    ConvergenceError,
    IllConditionedResidueError,
    InputError,
)
from .model import true_moments  # noqa: F401  (re-exported for convenience)

__all__ = [
    "MomentEstimates",
    "moments_by_quadrature",
    "moments_by_residues",
    "true_moments",
]

_SELF_CHECK_RTOL = 3e-11
_LEAKAGE_RTOL = 1e-8


@dataclass(frozen=True)
class MomentEstimates:
    """Estimated moments gamma_hat[ell] for ell = 0 .. 2L-1."""

    gamma_hat: NDArray[np.float64]
    method: str
    imag_leakage: float
    node_count: int


def _raw_quadrature(spectrum: SampleSpectrum, L: int, pts, weights):
    """Complex moment integrals on given nodes; gamma_hat_0 is exact."""
    N, M = spectrum.N, spectrum.M
    m, m_prime = companion_transform_nodes(spectrum, pts)
    if np.abs(m).min() < 1e-10:
        raise ContourError(
            "companion transform nearly vanishes on the contour; a secular "
            "root must be grazing the curve"
        )
    raw = np.empty(2 * L, dtype=complex)
    raw[0] = 1.0
    two_pi_i = 2j * np.pi
    raw[1] = -(M / N) * np.sum(weights * pts * m_prime / m) / two_pi_i
    inv = 1.0 / m
    power = inv.copy()  # 1/m^(ell-1), starting at ell = 2
    for ell in range(2, 2 * L):
        raw[ell] = (
            (M / N) * (-1.0) ** ell / (ell - 1)
            * np.sum(weights * power) / two_pi_i
        )
        power *= inv
    return raw


def _halved(contour: Contour, pts, weights):
    """Node set of the embedded half-resolution rule."""
    if contour.shape == "ellipse":
        # every other node of the offset trapezoid rule is again a valid
        # uniform rule at half resolution
        return pts[::2], 2.0 * weights[::2]
    half = contour.with_nodes(max(16, contour.nodes // 2))
    return half.points(), half.dz()


def moments_by_quadrature(
    spectrum: SampleSpectrum,
    L: int,
    contour: Contour | None = None,
    secular: SecularRoots | None = None,
    max_refinements: int = 3,
) -> MomentEstimates:
    """Moments by contour quadrature with an internal convergence check.

    Each estimate is compared against the half-resolution rule embedded in
    the same node set; with an auto-built contour the node count doubles
    until the two agree, otherwise disagreement raises with a suggestion
    to double the nodes.
    """
    if L < 1:
        raise InputError("L must be at least 1")
    if secular is None:
        secular = secular_zeros(spectrum)
    auto = contour is None
    if auto:
        contour = spectrum_contour(spectrum, secular)
    else:
        enclosed = np.concatenate(
            [spectrum.positive_eigenvalues(), secular.positive()]
        )
        if contour.contains_real(0.0):
            raise ContourError("contour must exclude the origin")
        _check_clearance(contour, enclosed, spectrum.positive_eigenvalues()[-1])

    for attempt in range(max_refinements + 1):
        pts, weights = contour.points(), contour.dz()
        raw = _raw_quadrature(spectrum, L, pts, weights)
        raw_half = _raw_quadrature(spectrum, L, *_halved(contour, pts, weights))
        delta = np.abs(raw - raw_half) / (1.0 + np.abs(raw))
        if delta.max() <= _SELF_CHECK_RTOL:
            break
        if auto and attempt < max_refinements:
            contour = contour.with_nodes(contour.nodes * 2)
        else:
            raise ConvergenceError(
                "contour quadrature has not converged (self-check "
                f"discrepancy {delta.max():.3e}); double the node count",
                residual=float(delta.max()),
            )

    gamma = raw.real
    leakage = float(np.abs(raw.imag).max())
    if leakage > _LEAKAGE_RTOL * (1.0 + np.abs(gamma).max()):
        raise ConvergenceError(
            f"imaginary leakage {leakage:.3e} exceeds tolerance; "
            "the contour is inadmissible or under-resolved",
            residual=leakage,
        )
    return MomentEstimates(
        gamma_hat=gamma,
        method="quadrature",
        imag_leakage=leakage,
        node_count=contour.nodes,
    )


def _series_coefficients(spectrum: SampleSpectrum, roots, count: int):
    """Taylor coefficients a_j, j = 1..count, of m around each secular root.

    a_j[r] = (1/M) sum_i (lambda_i - mu_r)^-(j+1), with structural zeros of
    the companion entering as lambda = 0 terms.
    """
    pos = spectrum.positive_eigenvalues()
    M = spectrum.M
    zero_count = M - pos.size
    diff = pos[None, :] - roots[:, None]
    inv = 1.0 / diff
    inv_zero = -1.0 / roots
    a = np.empty((count, roots.size))
    base = inv**2
    base_zero = inv_zero**2
    for j in range(1, count + 1):
        a[j - 1] = (base.sum(axis=1) + zero_count * base_zero) / M
        base *= inv
        base_zero *= inv_zero
    return a


def moments_by_residues(
    spectrum: SampleSpectrum,
    L: int,
    secular: SecularRoots | None = None,
) -> MomentEstimates:
    """Moments by exact residue summation at the secular roots.

    gamma_hat_1 reduces to the weighted eigenvalue-root difference; for
    ell >= 2 the integrand 1/m^(ell-1) has a pole of order ell-1 at each
    positive root and the residue follows from the local Taylor expansion
    of m. No quadrature error enters, so this is the reference the contour
    route is checked against.
    """
    if L < 1:
        raise InputError("L must be at least 1")
    if secular is None:
        secular = secular_zeros(spectrum)
    N, M = spectrum.N, spectrum.M
    gamma = np.empty(2 * L)
    gamma[0] = 1.0
    gamma[1] = (M / N) * (spectrum.lambda_hat.sum() - secular.mu_hat.sum())

    if L > 1:
        # roots planted by repeated eigenvalues are eigenvalues of the
        # corrected matrix but not zeros of m (m has a pole there), so the
        # integrand 1/m^(ell-1) is regular at them: no residue. They are
        # marked by their degenerate brackets.
        genuine = (secular.mu_hat > 0) & (
            secular.brackets[:, 0] < secular.brackets[:, 1]
        )
        roots = secular.mu_hat[genuine]
        gaps = np.diff(roots) / np.maximum(roots[1:], roots[:-1])
        if roots.size > 1 and gaps.min() <= 1e-10:
            raise IllConditionedResidueError(
                f"secular roots nearly coincide (relative gap {gaps.min():.3e})"
            )
        pos = spectrum.positive_eigenvalues()
        prox = np.abs(roots[:, None] - pos[None, :]).min(axis=1)
        if np.any(prox <= 1e-10 * roots):
            raise IllConditionedResidueError(
                "a zero of the companion transform is squeezed against an "
                "eigenvalue; the local expansion is numerically useless"
            )
        count = max(1, 2 * L - 2)
        a = _series_coefficients(spectrum, roots, count)
        u = a[1:] / a[0]  # u_k = a_{k+1}/a_1
        for ell in range(2, 2 * L):
            p = ell - 1
            # h = (1 + u)^(-p) truncated at degree p-1, by the standard
            # power-of-a-series recurrence
            h = np.zeros((p, roots.size))
            h[0] = 1.0
            for n in range(1, p):
                acc = np.zeros(roots.size)
                for k in range(1, n + 1):
                    acc += (-p * k - (n - k)) * u[k - 1] * h[n - k]
                h[n] = acc / n
            residues = a[0] ** (-p) * h[p - 1]
            gamma[ell] = (M / N) * (-1.0) ** ell / (ell - 1) * residues.sum()

    return MomentEstimates(
        gamma_hat=gamma, method="residues", imag_leakage=0.0, node_count=0
    )
