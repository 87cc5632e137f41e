"""Limiting spectral distribution of large sample covariance matrices.

For a population model with spectrum sum_k c_k at rho_k and aspect ratio
c = N/M, the companion Stieltjes transform m_u(z) solves the fixed-point
equation

    m_u = -1 / (z - c * sum_k c_k rho_k / (1 + rho_k m_u)),

and the transform of the sample-covariance limit follows from

    m(z) = (1/c) m_u(z) - (1 - 1/c) / z.

The density on the real line is recovered from Im m(x + i eps) / pi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import ConvergenceError, InputError
from .model import PopulationModel

__all__ = [
    "StieltjesValue",
    "DensityCurve",
    "solve_m_underline",
    "solve_m_underline_grid",
    "m_underline_derivative",
    "m_from_companion",
    "density_curve",
    "is_separable",
]


@dataclass(frozen=True)
class StieltjesValue:
    """One evaluation of the limiting transforms at a point z."""

    z: complex
    m_underline: complex
    m_value: complex
    iterations: int
    residual: float


@dataclass(frozen=True)
class DensityCurve:
    """Limiting density sampled on a real grid, plus detected support.

    clusters are the maximal intervals where the density exceeds the
    detection threshold, with edges refined beyond the grid resolution.
    mass_at_zero is the point mass max(0, 1 - 1/c) of the sample-covariance
    limit when c > 1.
    """

    grid: NDArray[np.float64]
    density: NDArray[np.float64]
    epsilon: float
    threshold: float
    clusters: tuple[tuple[float, float], ...]
    mass_at_zero: float

    def total_mass(self) -> float:
        return float(np.trapezoid(self.density, self.grid)) + self.mass_at_zero

    def support_hull(self) -> tuple[float, float]:
        if not self.clusters:
            raise InputError("no support clusters detected")
        return self.clusters[0][0], self.clusters[-1][1]


def _fixed_point_map(m, z, ratio, rho, w):
    s = (w * rho / (1.0 + np.multiply.outer(m, rho))).sum(axis=-1)
    return -1.0 / (z - ratio * s)


def _residual(m, z, ratio, rho, w):
    return np.abs(_fixed_point_map(m, z, ratio, rho, w) - m) / (1.0 + np.abs(m))


def _inverse_map(m, ratio, rho, w):
    """z as a function of m_u on the graph of the transform."""
    s = (w * rho / (1.0 + np.multiply.outer(m, rho))).sum(axis=-1)
    return ratio * s - 1.0 / m


def _inverse_map_derivative(m, ratio, rho, w):
    s2 = (w * rho**2 / (1.0 + np.multiply.outer(m, rho)) ** 2).sum(axis=-1)
    return 1.0 / m**2 - ratio * s2


def _poly_fallback(z: complex, ratio, rho, w):
    """Solve the fixed-point equation as a degree L+1 polynomial in m.

    Clearing denominators in z = c*sum w_k rho_k/(1+rho_k m) - 1/m gives
    z*m*P(m) + P(m) - c*sum_k w_k rho_k m P_k(m) = 0 with
    P = prod(1 + rho_j m) and P_k the product without factor k. The
    physical branch is the unique root in the upper half plane.
    """
    L = len(rho)
    full = np.poly(-1.0 / rho) * np.prod(rho)  # descending coeffs of P
    acc = np.zeros(L + 2, dtype=complex)
    acc[1:] += full
    acc[:-1] += z * full
    for k in range(L):
        others = np.delete(rho, k)
        pk = np.poly(-1.0 / others) * np.prod(others) if L > 1 else np.array([1.0])
        term = w[k] * rho[k] * np.concatenate([pk, [0.0]])  # times m
        acc[-term.size:] -= ratio * term
    roots = np.roots(acc)
    upper = roots[roots.imag > 0]
    cands = upper if upper.size else roots
    res = _residual(cands, z, ratio, rho, w)
    return complex(cands[np.argmin(res)])


def solve_m_underline_grid(
    model: PopulationModel,
    n_over_m: float,
    z: np.ndarray,
    tol: float = 1e-12,
    init: np.ndarray | None = None,
    max_iter: int = 60000,
):
    """Vectorized fixed-point solve; returns (m_underline, iterations, residual).

    Damped Picard iteration (the map preserves the upper half plane, so it
    is globally safe) until within Newton range, then Newton steps on the
    inverse relation. Stubborn nodes near support edges fall back to an
    exact polynomial solve.
    """
    rho = model.rho_array()
    w = model.weights_array()
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z == 0):
        raise InputError("transform is not defined at z = 0")
    m = -1.0 / z if init is None else np.array(init, dtype=complex)
    iters = np.zeros(z.shape, dtype=np.int64)
    res = _residual(m, z, ratio := float(n_over_m), rho, w)

    # Picard only needs to reach the Newton basin; finishing to tol is
    # Newton's job and takes it a handful of quadratic steps
    newton_gate = 1e-5
    active = np.flatnonzero(res > max(tol, newton_gate))
    alpha = np.full(z.shape, 0.5)
    block = 40
    done_picard = 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        while active.size and done_picard < max_iter:
            za, ma, aa = z[active], m[active], alpha[active]
            before = res[active]
            for _ in range(block):
                ma = (1.0 - aa) * ma + aa * _fixed_point_map(ma, za, ratio, rho, w)
            m[active] = ma
            iters[active] += block
            done_picard += block
            res[active] = after = _residual(ma, za, ratio, rho, w)
            # nodes that stalled get heavier damping, down to 1/16
            stalled = after > 0.7 * before
            alpha[active[stalled]] = np.maximum(aa[stalled] * 0.5, 1.0 / 16.0)
            active = active[after > max(tol, newton_gate)]

        active = np.flatnonzero(res > tol)
        for _ in range(60):
            if not active.size:
                break
            ma, za = m[active], z[active]
            g = _inverse_map(ma, ratio, rho, w) - za
            gp = _inverse_map_derivative(ma, ratio, rho, w)
            step = np.where(gp != 0, g / gp, 0.0)
            cand = ma - step
            ok = np.isfinite(cand)
            ok &= ~((za.imag > 0) & (cand.imag < 0))
            new_res = np.where(
                ok, _residual(np.where(ok, cand, ma), za, ratio, rho, w), np.inf
            )
            improved = new_res < res[active]
            take = active[improved]
            m[take] = cand[improved]
            res[take] = new_res[improved]
            iters[take] += 1
            active = active[res[active] > tol]

    for idx in np.flatnonzero(res > tol):
        if z[idx].imag <= 0:
            continue
        m[idx] = _poly_fallback(complex(z[idx]), ratio, rho, w)
        res[idx] = _residual(m[idx : idx + 1], z[idx : idx + 1], ratio, rho, w)[0]
    bad = res > max(tol, 1e-10)
    if np.any(bad):
        worst = float(res.max())
        raise ConvergenceError(
            f"fixed point did not converge at {int(bad.sum())} of {z.size} "
            f"points (worst residual {worst:.3e})",
            residual=worst,
        )
    return m, iters, res


def solve_m_underline(
    model: PopulationModel, n_over_m: float, z: complex, tol: float = 1e-12
) -> StieltjesValue:
    """Companion transform m_u(z) and sample transform m(z) at one point.

    z must have positive imaginary part, or be real and outside the support
    (where the iteration still converges to the real boundary value).
    """
    m, iters, res = solve_m_underline_grid(model, n_over_m, [complex(z)], tol=tol)
    mu = complex(m[0])
    return StieltjesValue(
        z=complex(z),
        m_underline=mu,
        m_value=m_from_companion(mu, complex(z), n_over_m),
        iterations=int(iters[0]),
        residual=float(res[0]),
    )


def m_from_companion(m_underline, z, n_over_m: float):
    """Transform of the sample-covariance limit from the companion one."""
    r = float(n_over_m)
    return m_underline / r - (1.0 - 1.0 / r) / z


def m_underline_derivative(model: PopulationModel, n_over_m: float, m_underline):
    """d m_u / dz expressed through m_u itself.

    Differentiating the fixed-point relation implicitly gives
    m_u' = m_u^2 / (1 - c m_u^2 sum_k c_k rho_k^2 / (1 + rho_k m_u)^2),
    which avoids any finite differencing on contours.
    """
    rho = model.rho_array()
    w = model.weights_array()
    m = np.asarray(m_underline, dtype=complex)
    s2 = (w * rho**2 / (1.0 + np.multiply.outer(m, rho)) ** 2).sum(axis=-1)
    out = m**2 / (1.0 - float(n_over_m) * m**2 * s2)
    return out if np.ndim(m_underline) else complex(out)


def _default_grid(model: PopulationModel, ratio: float) -> NDArray[np.float64]:
    hi = 1.1 * (1.0 + np.sqrt(ratio)) ** 2 * model.rho[-1]
    return np.linspace(0.0, hi, 2501)


def _grid_from_spec(model, ratio, grid_spec) -> NDArray[np.float64]:
    if grid_spec is None:
        return _default_grid(model, ratio)
    if isinstance(grid_spec, (int, np.integer)):
        hi = 1.1 * (1.0 + np.sqrt(ratio)) ** 2 * model.rho[-1]
        return np.linspace(0.0, hi, int(grid_spec))
    if isinstance(grid_spec, (float, np.floating)):
        hi = 1.1 * (1.0 + np.sqrt(ratio)) ** 2 * model.rho[-1]
        n = int(np.ceil(hi / float(grid_spec))) + 1
        return np.arange(n) * float(grid_spec)
    if isinstance(grid_spec, tuple) and len(grid_spec) == 3:
        lo, hi, step = map(float, grid_spec)
        n = int(np.floor((hi - lo) / step + 1e-9)) + 1
        return lo + np.arange(n) * step
    grid = np.asarray(grid_spec, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise InputError("grid must be a 1-D strictly increasing array")
    return grid


def _solve_near_axis(model, ratio, x, epsilon, init=None):
    """Solve at x + i*epsilon by stepping epsilon down a decade at a time.

    Picard contraction degrades like the distance to the support, so a cold
    start just above the real axis crawls; warm-starting each decade from
    the previous one keeps every point inside the Newton basin instead.
    """
    eps = epsilon if init is not None else max(epsilon, 1e-2)
    x = np.asarray(x, dtype=float)
    while True:
        m, it, res = solve_m_underline_grid(model, ratio, x + 1j * eps, init=init)
        if eps <= epsilon:
            return m, it, res
        eps = max(epsilon, 0.1 * eps)
        init = m


def _continuous_density(m, z, ratio):
    """Continuous part of the limiting sample density from m_u on z.

    The sample transform's pole term at the origin carries the point mass,
    not the continuous part: for N < M it cancels the companion's atom, for
    N > M it is itself the sample atom. Reading the density from the
    atom-free transform of each regime keeps the origin grid point clean.
    """
    if ratio > 1:
        dens = m.imag / (ratio * np.pi)
    else:
        dens = m_from_companion(m, z, ratio).imag / np.pi
    return np.maximum(dens, 0.0)


def _density_at(model, ratio, x, epsilon, init=None):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m, _, _ = _solve_near_axis(model, ratio, x, epsilon, init=init)
    return _continuous_density(m, x + 1j * epsilon, ratio), m


def density_curve(
    model: PopulationModel,
    n_over_m: float,
    grid_spec=None,
    epsilon: float = 1e-6,
    threshold: float = 1e-4,
) -> DensityCurve:
    """Limiting density on a real grid with support-cluster detection.

    Clusters are maximal runs where the density exceeds ``threshold``;
    their edges are then sharpened by bisection between the bracketing grid
    points, so edge accuracy is set by epsilon rather than the grid step.
    """
    ratio = float(n_over_m)
    if epsilon <= 0:
        raise InputError("epsilon must be positive")
    grid = _grid_from_spec(model, ratio, grid_spec)
    z = grid + 1j * epsilon
    m, _, _ = _solve_near_axis(model, ratio, grid, epsilon)
    dens = _continuous_density(m, z, ratio)

    mask = dens > threshold
    clusters = []
    edges_lo, edges_hi = [], []  # brackets needing refinement: (outside, inside)
    i = 0
    n = grid.size
    while i < n:
        if not mask[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and mask[j + 1]:
            j += 1
        left = grid[i] if i == 0 else None
        right = grid[j] if j == n - 1 else None
        clusters.append([left, right, i, j])
        if left is None:
            edges_lo.append((grid[i - 1], grid[i]))
        if right is None:
            edges_hi.append((grid[j + 1], grid[j]))
        i = j + 1

    lo_ref = _refine_edges(model, ratio, edges_lo, epsilon, threshold)
    hi_ref = _refine_edges(model, ratio, edges_hi, epsilon, threshold)
    out = []
    ilo = ihi = 0
    for left, right, _, _ in clusters:
        if left is None:
            left = lo_ref[ilo]
            ilo += 1
        if right is None:
            right = hi_ref[ihi]
            ihi += 1
        out.append((float(left), float(right)))

    return DensityCurve(
        grid=grid,
        density=dens,
        epsilon=float(epsilon),
        threshold=float(threshold),
        clusters=tuple(out),
        mass_at_zero=max(0.0, 1.0 - 1.0 / ratio),
    )


def _refine_edges(model, ratio, brackets, epsilon, threshold, sweeps: int = 52):
    """Bisect density(x) = threshold between (outside, inside) abscissas."""
    if not brackets:
        return []
    lo = np.array([b[0] for b in brackets])  # density below threshold
    hi = np.array([b[1] for b in brackets])  # density above
    init = None
    for _ in range(sweeps):
        mid = 0.5 * (lo + hi)
        # midpoints move less each sweep, so the previous solution is an
        # ever better warm start
        dens, init = _density_at(model, ratio, mid, epsilon, init=init)
        above = dens > threshold
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        if np.max(np.abs(hi - lo)) < 1e-13 * (1.0 + np.max(np.abs(hi))):
            break
    return list(0.5 * (lo + hi))


def is_separable(curve: DensityCurve, L: int) -> bool:
    """True when the support splits into exactly one cluster per eigenvalue."""
    return len(curve.clusters) == L
