from __future__ import annotations

import numpy as np
import pytest

from coveig import (
    Contour,
    ContourError,
    PopulationModel,
    cluster_contour_pair,
    cluster_contours,
    simulate_spectrum,
    spectrum_contour,
    support_contours,
)
from coveig.ensemble import SampleSpectrum


def _integrate(cont, f):
    return np.sum(f(cont.points()) * cont.dz())


@pytest.mark.parametrize("shape,nodes", [("ellipse", 64), ("rectangle", 4096)])
def test_closed_curve_integrates_dz_to_zero(shape, nodes):
    cont = Contour(shape, center=2.0, half_width=1.5, half_height=0.6, nodes=nodes)
    assert abs(_integrate(cont, lambda z: np.ones_like(z))) < 1e-12


@pytest.mark.parametrize("shape,nodes,tol", [("ellipse", 256, 1e-12),
                                             ("rectangle", 8192, 1e-4)])
def test_residue_of_simple_pole(shape, nodes, tol):
    cont = Contour(shape, center=2.0, half_width=1.5, half_height=0.6, nodes=nodes)
    for pole in [2.0, 1.2, 2.9, 2.0 + 0.2j]:
        val = _integrate(cont, lambda z: 1.0 / (z - pole))
        assert abs(val - 2j * np.pi) < tol * 2 * np.pi
    # pole outside: integral vanishes
    for pole in [0.2, 4.5, 2.0 + 5j]:
        val = _integrate(cont, lambda z: 1.0 / (z - pole))
        assert abs(val) < tol * 2 * np.pi


def test_polynomials_integrate_to_zero():
    cont = Contour("ellipse", center=1.0, half_width=0.8, half_height=0.3, nodes=128)
    for k in range(5):
        assert abs(_integrate(cont, lambda z: z**k)) < 1e-12


def test_cauchy_formula_recovers_pole_location():
    cont = Contour("ellipse", center=3.0, half_width=2.0, half_height=0.9, nodes=256)
    pole = 3.7
    val = _integrate(cont, lambda z: z / (z - pole)) / (2j * np.pi)
    assert abs(val - pole) < 1e-12


def test_ellipse_nodes_avoid_real_axis_and_pair_up():
    cont = Contour("ellipse", center=2.0, half_width=1.0, half_height=0.4, nodes=64)
    pts = cont.points()
    assert np.abs(pts.imag).min() > 1e-3
    # node set is closed under conjugation, so real integrands of conjugate
    # symmetric functions come out real
    gap = np.abs(pts[:, None] - np.conj(pts)[None, :]).min(axis=1)
    assert gap.max() < 1e-12


def test_halved_node_subset_is_consistent_rule():
    # taking every other node with doubled weights is the same family of
    # rule at half resolution; both must agree on an analytic integrand
    cont = Contour("ellipse", center=2.0, half_width=1.2, half_height=0.5, nodes=512)
    pts, w = cont.points(), cont.dz()
    f = lambda z: 1.0 / (z - 1.7)
    full = np.sum(f(pts) * w)
    half = np.sum(f(pts[::2]) * 2.0 * w[::2])
    assert abs(full - half) < 1e-12
    assert abs(full - 2j * np.pi) < 1e-12


def test_contains_and_distance():
    cont = Contour("ellipse", center=2.0, half_width=1.0, half_height=0.4, nodes=128)
    assert cont.contains_real(2.0)
    assert cont.contains_real(np.array([1.5, 2.5])).all()
    assert not cont.contains_real(3.5)
    assert cont.min_distance_to_real(2.0) > 0.35
    assert cont.min_distance_to_real(1.0) < 0.1


def test_with_nodes_and_scaled():
    cont = Contour("ellipse", 2.0, 1.0, 0.4, 64)
    assert cont.with_nodes(128).nodes == 128
    grown = cont.scaled(2.0, 0.5)
    assert grown.half_width == 2.0
    assert grown.half_height == 0.2
    assert grown.center == cont.center


@pytest.mark.parametrize("kwargs", [
    dict(shape="triangle", center=1.0, half_width=1.0, half_height=0.5, nodes=64),
    dict(shape="ellipse", center=1.0, half_width=-1.0, half_height=0.5, nodes=64),
    dict(shape="ellipse", center=1.0, half_width=1.0, half_height=0.0, nodes=64),
    dict(shape="ellipse", center=1.0, half_width=1.0, half_height=0.5, nodes=8),
    dict(shape="ellipse", center=1.0, half_width=1.0, half_height=0.5, nodes=64,
         orientation="cw"),
])
def test_invalid_contours_raise(kwargs):
    with pytest.raises(ContourError):
        Contour(**kwargs)


def test_spectrum_contour_encloses_everything_but_origin():
    model = PopulationModel(rho=(1.0, 3.0, 10.0),
                            weights=(1 / 3, 1 / 3, 1 / 3), aspect=0.1)
    spectrum = simulate_spectrum(model, 60, 600, seed=5)
    cont = spectrum_contour(spectrum)
    lam = spectrum.positive_eigenvalues()
    assert cont.contains_real(lam).all()
    assert not cont.contains_real(0.0)
    from coveig import secular_zeros

    mu = secular_zeros(spectrum).positive()
    assert cont.contains_real(mu).all()
    assert cont.min_distance_to_real(np.concatenate([lam, mu])) > 1e-3 * lam[-1]


def test_spectrum_contour_rejects_near_origin_support():
    lam = np.array([1e-6, 1.0])
    spectrum = SampleSpectrum(N=2, M=2, lambda_hat=lam,
                              lambda_hat_companion=lam, seed=0)
    with pytest.raises(ContourError):
        spectrum_contour(spectrum)


def _strictly_inside(inner, outer, tol=1e-9):
    pts = inner.points()
    u = (pts.real - outer.center) / outer.half_width
    v = pts.imag / outer.half_height
    return np.all(u**2 + v**2 < 1.0 - tol)


def test_support_contours_are_nested_and_enclosing():
    inner, outer = support_contours((0.5, 4.0))
    for cont in (inner, outer):
        assert cont.contains_real(np.array([0.5, 4.0])).all()
        assert not cont.contains_real(0.0)
    assert _strictly_inside(inner, outer)


def test_support_contours_validation():
    with pytest.raises(ContourError):
        support_contours((3.0, 1.0))
    with pytest.raises(ContourError):
        support_contours((1.0, 2.0), margins=(0.2, 0.1))


CLUSTERS = [(0.7, 1.4), (2.2, 3.4), (8.0, 12.0)]


@pytest.mark.parametrize("k", [0, 1, 2])
def test_cluster_contour_isolates_one_cluster(k):
    cont = cluster_contours(CLUSTERS, k)
    lo, hi = CLUSTERS[k]
    assert cont.contains_real(np.array([lo, hi])).all()
    assert not cont.contains_real(0.0)
    for j, (a, b) in enumerate(CLUSTERS):
        if j != k:
            assert not cont.contains_real(np.array([a, b])).any()


def test_cluster_contours_reject_overlap():
    with pytest.raises(ContourError):
        cluster_contours([(1.0, 2.0), (1.9, 3.0)], 1)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_cluster_contour_pair_nested_and_isolated(k):
    inner, outer = cluster_contour_pair(CLUSTERS, k)
    assert _strictly_inside(inner, outer)
    for cont in (inner, outer):
        lo, hi = CLUSTERS[k]
        assert cont.contains_real(np.array([lo, hi])).all()
        for j, (a, b) in enumerate(CLUSTERS):
            if j != k:
                assert not cont.contains_real(np.array([a, b])).any()
