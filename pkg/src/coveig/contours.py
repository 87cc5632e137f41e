"""Closed integration contours in the complex plane.

Everything here is a counterclockwise ellipse or axis-aligned rectangle
centered on the real axis, discretized for quadrature. Ellipses use the
periodic trapezoid rule with nodes offset off the real axis, which
converges geometrically for integrands analytic in a neighborhood of the
curve; rectangles use per-edge midpoint rules and are kept mainly for
cross-checking since their corners limit the order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import ContourError

__all__ = [
    "Contour",
    "spectrum_contour",
    "support_contours",
    "cluster_contours",
    "cluster_contour_pair",
]


@dataclass(frozen=True)
class Contour:
    """Closed curve around part of the positive real axis.

    half_width and half_height are the semi-axes (ellipse) or half side
    lengths (rectangle) around the real center. Only counterclockwise
    orientation is supported.
    """

    shape: str
    center: float
    half_width: float
    half_height: float
    nodes: int
    orientation: str = "ccw"

    def __post_init__(self):
        if self.shape not in ("ellipse", "rectangle"):
            raise ContourError(f"unknown contour shape {self.shape!r}")
        if self.orientation != "ccw":
            raise ContourError("only counterclockwise contours are supported")
        if self.half_width <= 0 or self.half_height <= 0:
            raise ContourError("contour extents must be positive")
        if self.nodes < 16:
            raise ContourError("need at least 16 quadrature nodes")

    def points(self) -> NDArray[np.complex128]:
        if self.shape == "ellipse":
            theta = self._theta()
            return (
                self.center
                + self.half_width * np.cos(theta)
                + 1j * self.half_height * np.sin(theta)
            )
        return self._rectangle_points_dz()[0]

    def dz(self) -> NDArray[np.complex128]:
        """Complex quadrature weights: sum(f(points) * dz) approximates the
        counterclockwise contour integral of f."""
        if self.shape == "ellipse":
            theta = self._theta()
            return (
                (-self.half_width * np.sin(theta) + 1j * self.half_height * np.cos(theta))
                * (2.0 * np.pi / self.nodes)
            )
        return self._rectangle_points_dz()[1]

    def _theta(self) -> NDArray[np.float64]:
        # half-step offset keeps every node strictly off the real axis and
        # the node set symmetric under conjugation
        k = np.arange(self.nodes)
        return 2.0 * np.pi * (k + 0.5) / self.nodes

    def _rectangle_points_dz(self):
        c, a, b = self.center, self.half_width, self.half_height
        corners = [c - a - 1j * b, c + a - 1j * b, c + a + 1j * b, c - a + 1j * b]
        lengths = np.array([2 * a, 2 * b, 2 * a, 2 * b])
        frac = lengths / lengths.sum()
        counts = np.maximum(1, np.round(frac * self.nodes).astype(int))
        pts, wts = [], []
        for i in range(4):
            start, stop = corners[i], corners[(i + 1) % 4]
            n = counts[i]
            seg = (stop - start) / n
            # midpoint rule per edge: no node sits on a corner
            pts.append(start + seg * (np.arange(n) + 0.5))
            wts.append(np.full(n, seg))
        return np.concatenate(pts), np.concatenate(wts)

    def contains_real(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.shape == "ellipse":
            return np.abs(x - self.center) < self.half_width
        return np.abs(x - self.center) < self.half_width

    def min_distance_to_real(self, x) -> float:
        """Distance from real point(s) to the discretized curve."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        pts = self.points()
        return float(np.abs(x[:, None] - pts[None, :]).min())

    def with_nodes(self, nodes: int) -> "Contour":
        return Contour(
            self.shape, self.center, self.half_width, self.half_height,
            int(nodes), self.orientation,
        )

    def scaled(self, factor_w: float, factor_h: float) -> "Contour":
        return Contour(
            self.shape, self.center, self.half_width * factor_w,
            self.half_height * factor_h, self.nodes, self.orientation,
        )


def _ellipse(x0: float, x1: float, clearance: float, nodes: int) -> Contour:
    center = 0.5 * (x0 + x1)
    a = 0.5 * (x1 - x0)
    # geometric mean of clearance and semi-axis balances the analyticity
    # margin above and below the real axis against the curve length
    b = np.sqrt(max(clearance, 1e-12 * a) * a)
    b = min(max(b, 0.02 * a), 0.75 * a)
    return Contour("ellipse", center, a, b, nodes)


def spectrum_contour(
    spectrum,
    secular=None,
    nodes: int = 1024,
    shape: str = "ellipse",
) -> Contour:
    """Contour enclosing every positive sample eigenvalue and every positive
    secular root, excluding the origin.

    The left crossing sits halfway between zero and the smallest enclosed
    point; the right crossing sits at 1.5x the largest eigenvalue.
    """
    from .empirical import secular_zeros

    lam = spectrum.positive_eigenvalues()
    if secular is None:
        secular = secular_zeros(spectrum)
    mu = secular.positive()
    lo = min(lam[0], mu[0] if mu.size else lam[0])
    hi = lam[-1]
    x0 = 0.5 * lo
    x1 = 1.5 * hi
    if x0 < 1e-3 * hi:
        raise ContourError(
            f"smallest enclosed point {lo:.3e} is too close to the origin "
            f"relative to lambda_max {hi:.3e}; no admissible contour"
        )
    if shape == "ellipse":
        cont = _ellipse(x0, x1, 0.5 * lo, nodes)
    else:
        cont = Contour("rectangle", 0.5 * (x0 + x1), 0.5 * (x1 - x0),
                       0.5 * hi, nodes)
    _check_clearance(cont, np.concatenate([lam, mu]), hi)
    return cont


def _check_clearance(cont: Contour, enclosed: np.ndarray, lam_max: float):
    if np.any(~cont.contains_real(enclosed)):
        raise ContourError("contour fails to enclose a required point")
    if cont.min_distance_to_real(enclosed) < 1e-3 * lam_max:
        raise ContourError(
            "an eigenvalue or secular root lies within 1e-3 * lambda_max "
            "of the contour"
        )


def support_contours(
    hull: tuple[float, float],
    nodes: int = 256,
    margins: tuple[float, float] = (0.05, 0.12),
) -> tuple[Contour, Contour]:
    """Two strictly nested ellipses around the full limiting support.

    Both enclose the hull; sharing a center with strictly larger semi-axes
    makes the outer one enclose the inner by construction.
    """
    a, b = hull
    if not 0 < a < b:
        raise ContourError(f"invalid support hull ({a}, {b})")
    span = b - a
    m1, m2 = margins
    if not 0 < m1 < m2:
        raise ContourError("margins must be increasing and positive")
    x0 = max(a - m1 * span, 0.5 * a)
    x1 = b + m1 * span
    inner = _ellipse(x0, x1, a - x0 if a - x0 > 0 else 0.5 * a, nodes)
    grow = (m2 - m1) * span
    outer = Contour(
        "ellipse", inner.center, inner.half_width + grow,
        inner.half_height + grow * inner.half_height / inner.half_width,
        nodes,
    )
    return inner, outer


def _cluster_window(clusters, k: int) -> tuple[float, float, float, float]:
    lo, hi = clusters[k]
    left_gap = lo - clusters[k - 1][1] if k > 0 else lo
    right_gap = clusters[k + 1][0] - hi if k + 1 < len(clusters) else 0.6 * hi
    return lo, hi, left_gap, right_gap


def cluster_contours(clusters, k: int, nodes: int = 256) -> Contour:
    """Ellipse around cluster k only, clear of its neighbors and the origin."""
    lo, hi, left_gap, right_gap = _cluster_window(clusters, k)
    if left_gap <= 0 or right_gap <= 0:
        raise ContourError("clusters overlap; cannot isolate one")
    x0 = lo - 0.35 * left_gap
    x1 = hi + 0.35 * right_gap
    return _ellipse(x0, x1, 0.35 * min(left_gap, right_gap), nodes)


def cluster_contour_pair(clusters, k: int, nodes: int = 256):
    """Strictly nested ellipse pair around cluster k for double integrals."""
    inner = cluster_contours(clusters, k, nodes)
    _, _, left_gap, right_gap = _cluster_window(clusters, k)
    grow = 0.25 * min(left_gap, right_gap)
    outer = Contour(
        "ellipse", inner.center, inner.half_width + grow,
        inner.half_height + grow * inner.half_height / inner.half_width,
        nodes,
    )
    for cont in (inner, outer):
        left_edge = cont.center - cont.half_width
        right_edge = cont.center + cont.half_width
        if left_edge <= 0:
            raise ContourError("cluster contour crosses the origin")
        if k > 0 and left_edge <= clusters[k - 1][1]:
            raise ContourError("cluster contour reaches the previous cluster")
        if k + 1 < len(clusters) and right_edge >= clusters[k + 1][0]:
            raise ContourError("cluster contour reaches the next cluster")
    return inner, outer
