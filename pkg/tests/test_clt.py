from __future__ import annotations

import numpy as np
import pytest

from coveig import (
    InputError,
    PopulationModel,
    SeparabilityError,
    density_curve,
    kernel_kappa,
    simulate_spectrum,
    support_contours,
    theta_mestre,
    theta_moment_estimator,
    v_matrix,
)

TWO_ATOM = PopulationModel(rho=(1.0, 3.0), weights=(0.5, 0.5), aspect=0.5)
THREE_ATOM = PopulationModel(rho=(1.0, 3.0, 10.0),
                             weights=(1 / 3, 1 / 3, 1 / 3), aspect=0.1)


@pytest.mark.parametrize("rho,aspect", [(1.0, 0.5), (2.0, 0.5), (3.0, 0.25)])
def test_v11_closed_form_single_atom(rho, aspect):
    # gamma_hat_1 is the mean sample eigenvalue, an average of N*M scaled
    # |CN(0,1)|^2 variables, so M * (gamma_hat_1 - gamma_1) has variance
    # rho^2 * M / N = gamma_2 / c exactly; the quadrature must reproduce it
    model = PopulationModel(rho=(rho,), weights=(1.0,), aspect=aspect)
    V, meta = v_matrix(model)
    assert abs(V[0, 0] - rho**2 / aspect) < 1e-8 * (1 + rho**2 / aspect)
    assert meta["imag_leakage"] < 1e-8 * (1 + abs(V).max())
    assert meta["asymmetry"] < 1e-8 * (1 + abs(V).max())


def test_v11_closed_form_two_atoms():
    # the same first-moment argument is model-free: V_11 = gamma_2 / c
    V, _ = v_matrix(TWO_ATOM)
    gamma2 = 0.5 * 1 + 0.5 * 9
    assert abs(V[0, 0] - gamma2 / 0.5) < 1e-7
    assert V.shape == (3, 3)


def test_v_contour_independence():
    # the integrand is analytic between admissible contour pairs, so two
    # very different pairs must integrate to the same matrix
    V_a, _ = v_matrix(TWO_ATOM)
    hull = density_curve(TWO_ATOM, 0.5).support_hull()
    custom = support_contours(hull, 512, margins=(0.08, 0.2))
    V_b, _ = v_matrix(TWO_ATOM, contours=custom, nodes=512)
    np.testing.assert_allclose(V_a, V_b, rtol=1e-9, atol=1e-9)


def test_v_matches_monte_carlo_first_moment():
    V, _ = v_matrix(TWO_ATOM)
    vals = []
    for t in range(300):
        spectrum = simulate_spectrum(TWO_ATOM, 60, 120, seed=10_000 + t)
        vals.append(120 * spectrum.lambda_hat.mean())
    ratio = np.var(vals, ddof=1) / V[0, 0]
    assert 0.8 < ratio < 1.2


def test_kernel_symmetries():
    z1, z2 = 1 + 1j, 2 + 0.5j
    k12 = kernel_kappa(TWO_ATOM, z1, z2)
    assert k12 == kernel_kappa(TWO_ATOM, z2, z1)
    conj = kernel_kappa(TWO_ATOM, np.conj(z1), np.conj(z2))
    assert abs(np.conj(k12) - conj) < 1e-12 * (1 + abs(k12))
    with pytest.raises(InputError):
        kernel_kappa(TWO_ATOM, z1, z1)


def test_theta_structure_single_atom():
    # with one atom the weight is deterministic, so its row and column of
    # Theta vanish and the eigenvalue variance is plain V_11
    model = PopulationModel(rho=(3.0,), weights=(1.0,), aspect=0.25)
    cov = theta_moment_estimator(model)
    np.testing.assert_allclose(cov.Theta[0], 0.0, atol=1e-8)
    assert abs(cov.Theta[1, 1] - 36.0) < 1e-6
    np.testing.assert_allclose(cov.M_matrix, [[1.0, 0.0], [3.0, 1.0]])


def test_theta_blocks_and_border():
    cov = theta_moment_estimator(TWO_ATOM)
    L = 2
    assert cov.Theta.shape == (2 * L, 2 * L)
    # W embeds V behind a zero row and column for the deterministic
    # zeroth moment
    assert np.all(cov.W[0] == 0.0) and np.all(cov.W[:, 0] == 0.0)
    np.testing.assert_array_equal(cov.W[1:, 1:], cov.V)
    np.testing.assert_array_equal(cov.Theta, cov.Theta.T)
    assert np.linalg.eigvalsh(cov.Theta).min() > -1e-8 * np.abs(cov.Theta).max()
    assert np.isfinite(cov.contour_meta["jacobian_cond"])


def test_theta_annihilates_weight_sum():
    # estimated weights always sum to gamma_hat_0 = 1, so the weight-sum
    # direction carries no fluctuation at all
    cov = theta_moment_estimator(TWO_ATOM)
    u = np.array([1.0, 1.0, 0.0, 0.0])
    scale = np.abs(cov.Theta).max()
    np.testing.assert_allclose(cov.Theta @ u, 0.0, atol=1e-8 * scale)


def test_theta_mestre_single_atom_matches_v11():
    # the baseline with one block is exactly the first-moment estimator, so
    # its variance must agree with the closed form through a completely
    # different contour layout
    model = PopulationModel(rho=(1.0,), weights=(1.0,), aspect=0.5)
    theta = theta_mestre(model)
    assert theta.shape == (1, 1)
    assert abs(theta[0, 0] - 2.0) < 1e-6


def test_theta_mestre_separated_model():
    theta = theta_mestre(THREE_ATOM)
    np.testing.assert_array_equal(theta, theta.T)
    assert np.all(np.diag(theta) > 0)
    assert np.linalg.eigvalsh(theta).min() > -1e-6 * np.abs(theta).max()
    # larger eigenvalues fluctuate more
    assert np.diag(theta)[0] < np.diag(theta)[1] < np.diag(theta)[2]


def test_theta_mestre_requires_separability():
    merged = PopulationModel(rho=(1.0, 3.0, 5.0),
                             weights=(1 / 3, 1 / 3, 1 / 3), aspect=3 / 8)
    with pytest.raises(SeparabilityError):
        theta_mestre(merged)


def test_invalid_order():
    with pytest.raises(InputError):
        v_matrix(TWO_ATOM, L=0)
