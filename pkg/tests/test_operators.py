import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from admmreg.errors import DimensionError, ParameterError, UnsupportedCombinationError
from admmreg.operators import (Circulant1D, Circulant2D, DenseOperator, Gradient2D,
                               IdentityOperator, SpectralDiagonal, TightFrame,
                               build_spectral_diagonal, make_gaussian_kernel_1d,
                               make_tight_frame, psf_to_kernel)

from conftest import circulant_matrix_1d, circulant_matrix_2d, gradient_matrix, operator_zoo


ZOO = operator_zoo()


def test_identity_apply():
    op = IdentityOperator(3)
    np.testing.assert_array_equal(op.apply(np.array([1.0, 2.0, 3.0])), [1, 2, 3])
    np.testing.assert_array_equal(IdentityOperator(2).adjoint(np.array([4.0, 5.0])), [4, 5])


def test_delta_kernel_is_identity(rng):
    k = np.zeros(10)
    k[0] = 1.0
    u = rng.standard_normal(10)
    np.testing.assert_allclose(Circulant1D(k).apply(u), u, atol=1e-15)


def test_gradient_of_constant_vanishes():
    out = Gradient2D((4, 4)).apply(np.full((4, 4), 3.7))
    assert out.shape == (4, 4, 2)
    np.testing.assert_array_equal(out, 0.0)


def test_dense_adjoint_extracts_row():
    op = DenseOperator([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(op.adjoint(np.array([1.0, 0.0])), [1.0, 2.0])


@pytest.mark.parametrize("name", sorted(ZOO))
def test_shape_mismatch_raises(name):
    op = ZOO[name]
    with pytest.raises(DimensionError):
        op.apply(np.zeros(op.domain_size + 1))
    with pytest.raises(DimensionError):
        op.adjoint(np.zeros(op.range_size + 1))


@pytest.mark.parametrize("name", sorted(ZOO))
def test_adjoint_identity(name, rng):
    op = ZOO[name]
    worst = 0.0
    for _ in range(100):
        u = rng.standard_normal(op.domain_shape)
        v = rng.standard_normal(op.range_shape)
        lhs = np.vdot(op.apply(u), v)
        rhs = np.vdot(u, op.adjoint(v))
        worst = max(worst, abs(lhs - rhs) / (np.linalg.norm(u) * np.linalg.norm(v)))
    assert worst <= 1e-10


@pytest.mark.parametrize("name", sorted(ZOO))
def test_linearity(name, rng):
    op = ZOO[name]
    u = rng.standard_normal(op.domain_shape)
    v = rng.standard_normal(op.domain_shape)
    a, b = 1.7, -0.3
    lhs = op.apply(a * u + b * v)
    rhs = a * op.apply(u) + b * op.apply(v)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(rhs)


def test_circulant1d_matches_cyclic_convolution(rng):
    k = rng.standard_normal(9)
    u = rng.standard_normal(9)
    C = circulant_matrix_1d(k)
    op = Circulant1D(k)
    np.testing.assert_allclose(op.apply(u), C @ u, atol=1e-12)
    np.testing.assert_allclose(op.adjoint(u), C.T @ u, atol=1e-12)


def test_circulant2d_matches_cyclic_convolution(rng):
    k = rng.standard_normal((5, 6))
    u = rng.standard_normal((5, 6))
    C = circulant_matrix_2d(k)
    op = Circulant2D(k)
    np.testing.assert_allclose(op.apply(u).ravel(), C @ u.ravel(), atol=1e-12)
    np.testing.assert_allclose(op.adjoint(u).ravel(), C.T @ u.ravel(), atol=1e-12)


def test_gradient_matches_explicit_differences(rng):
    u = rng.standard_normal((4, 5))
    G = gradient_matrix(4, 5)
    np.testing.assert_allclose(Gradient2D((4, 5)).apply(u).ravel(), G @ u.ravel(), atol=1e-14)


@pytest.mark.parametrize("shape", [(3, 3), (4, 6), (5, 2)])
def test_gradient_null_space_is_constants(shape, rng):
    G = Gradient2D(shape)
    assert np.all(G.apply(np.full(shape, -2.5)) == 0)
    u = np.full(shape, 1.0)
    u[rng.integers(shape[0]), rng.integers(shape[1])] += 1e-3
    assert np.linalg.norm(G.apply(u)) > 0
    # the explicit matrix has a one-dimensional kernel spanned by constants
    sv = np.linalg.svd(gradient_matrix(*shape), compute_uv=False)
    assert np.sum(sv < 1e-10) == 1


def test_psf_to_kernel_centers_at_origin():
    psf = np.zeros((3, 3))
    psf[1, 1] = 1.0
    k = psf_to_kernel(psf, (6, 6))
    assert k[0, 0] == 1.0 and k.sum() == 1.0


# gaussian kernel ----------------------------------------------------------------


def test_gaussian_kernel_diagonal_value():
    A = make_gaussian_kernel_1d(0.01, 400, weight=1.0)
    assert A.matrix[17, 17] == pytest.approx(0.01 / np.sqrt(np.pi), rel=1e-14)
    assert A.matrix[17, 17] == pytest.approx(5.6419e-3, abs=1e-7)


def test_gaussian_kernel_default_weight_is_cell_width():
    A = make_gaussian_kernel_1d(0.01, 400)
    B = make_gaussian_kernel_1d(0.01, 400, weight=1.0)
    np.testing.assert_allclose(A.matrix, B.matrix / 400, rtol=1e-15)


def test_gaussian_kernel_symmetric():
    M = make_gaussian_kernel_1d(0.01, 400).matrix
    assert np.array_equal(M, M.T)


def test_gaussian_kernel_row_sum_matches_quadrature():
    n, gamma, c = 400, 0.01, 200
    A = make_gaussian_kernel_1d(gamma, n)
    s = (c + 0.5) / n
    exact, _ = quad(lambda t: gamma / np.sqrt(np.pi) * np.exp(-(s - t) ** 2 / (2 * gamma ** 2)),
                    0.0, 1.0, points=[s], epsabs=0.0, epsrel=1e-13, limit=200)
    assert abs(A.matrix[c].sum() - exact) <= 1e-12 * exact
    # unweighted sum is n times the integral
    unweighted = make_gaussian_kernel_1d(gamma, n, weight=1.0).matrix[c].sum()
    assert unweighted == pytest.approx(n * exact, rel=1e-12)


@pytest.mark.parametrize("gamma,n", [(0.0, 10), (-1.0, 10), (0.1, 1), (0.1, 2.5)])
def test_gaussian_kernel_rejects_bad_parameters(gamma, n):
    with pytest.raises(ParameterError):
        make_gaussian_kernel_1d(gamma, n)


# tight frames -------------------------------------------------------------------


def test_haar_highpass_annihilates_constants():
    W = make_tight_frame("haar", 1, (8, 8))
    coeffs = W.apply(np.full((8, 8), 0.4))
    assert coeffs.shape == (8, 8, 4)
    np.testing.assert_allclose(coeffs[..., :-1], 0.0, atol=1e-15)
    np.testing.assert_allclose(coeffs[..., -1], 0.4, atol=1e-15)


@pytest.mark.parametrize("family,levels,shape", [
    ("haar", 1, (16, 16)), ("haar", 3, (64, 64)), ("haar", 4, (10, 14)),
    ("linear_bspline", 1, (64, 64)), ("linear_bspline", 2, (12, 20)),
])
def test_tight_frame_perfect_reconstruction(family, levels, shape, rng):
    W = make_tight_frame(family, levels, shape)
    u = rng.standard_normal(shape)
    coeffs = W.apply(u)
    assert np.linalg.norm(W.adjoint(coeffs) - u) <= 1e-10 * np.linalg.norm(u)
    assert abs(np.linalg.norm(coeffs) - np.linalg.norm(u)) <= 1e-10 * np.linalg.norm(u)


def test_tight_frame_channel_counts():
    assert make_tight_frame("haar", 3, (16, 16)).n_channels == 3 * 3 + 1
    assert make_tight_frame("linear_bspline", 1, (16, 16)).n_channels == 9


def test_haar_level_one_matches_spatial_filters(rng):
    u = rng.standard_normal((6, 6))
    W = TightFrame("haar", 1, (6, 6))
    c = W.apply(u)
    # band (0, 1): lowpass along rows, highpass along columns
    expect = 0.25 * ((u + np.roll(u, 1, 0)) - (np.roll(u, 1, 1) + np.roll(np.roll(u, 1, 0), 1, 1)))
    np.testing.assert_allclose(c[..., 0], expect, atol=1e-14)
    assert W.bands[0] == (1, 0, 1)


def test_unknown_frame_family():
    with pytest.raises(ParameterError):
        make_tight_frame("daubechies", 1, (8, 8))


# spectral diagonal --------------------------------------------------------------


def test_spectral_identity_pair():
    k = np.zeros((4, 4))
    k[0, 0] = 1.0
    D = build_spectral_diagonal(Circulant2D(k), IdentityOperator((4, 4)), 1.0, 1.0)
    np.testing.assert_allclose(D.multipliers, 2.0, atol=1e-15)


def test_spectral_dc_mode_for_normalized_blur_and_gradient(rng):
    psf = rng.random((3, 3))
    psf /= psf.sum()
    A = Circulant2D.from_psf(psf, (8, 8))
    D = build_spectral_diagonal(A, Gradient2D((8, 8)), 7.0, 3.0)
    assert D.multipliers[0, 0] == pytest.approx(7.0, rel=1e-14)


def test_spectral_solve_matches_dense_direct_solve(rng):
    k = rng.standard_normal((8, 8))
    A = Circulant2D(k)
    W = Gradient2D((8, 8))
    rho1, rho2 = 3.0, 0.7
    Am = circulant_matrix_2d(k)
    Wm = gradient_matrix(8, 8)
    M = rho1 * Am.T @ Am + rho2 * Wm.T @ Wm
    rhs = rng.standard_normal((8, 8))
    x_dense = np.linalg.solve(M, rhs.ravel())
    x_fft = build_spectral_diagonal(A, W, rho1, rho2).solve(rhs)
    assert np.linalg.norm(x_fft.ravel() - x_dense) <= 1e-8 * np.linalg.norm(x_dense)


def test_spectral_tight_frame_contribution_is_constant():
    k = np.zeros((8, 8))
    k[0, 0] = 1.0
    D = build_spectral_diagonal(Circulant2D(k), TightFrame("haar", 2, (8, 8)), 1.0, 5.0)
    np.testing.assert_allclose(D.multipliers, 6.0, atol=1e-12)


def test_spectral_multipliers_nonnegative_and_tv_coercive(rng):
    psf = rng.random((5, 5))
    psf /= psf.sum()
    D = build_spectral_diagonal(Circulant2D.from_psf(psf, (16, 16)), Gradient2D((16, 16)), 1.0, 1.0)
    assert D.multipliers.min() > 0


def test_spectral_rejects_dense_pair():
    A = DenseOperator(np.eye(4))
    with pytest.raises(UnsupportedCombinationError):
        build_spectral_diagonal(A, IdentityOperator(4), 1.0, 1.0)


def test_spectral_floor_guards_zero_modes():
    D = SpectralDiagonal(np.zeros((2, 2)))
    assert np.all(np.isfinite(D.solve(np.ones((2, 2)))))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2 ** 32 - 1))
def test_circulant1d_gram_is_adjoint_composition(n, seed):
    rng = np.random.default_rng(seed)
    op = Circulant1D(rng.standard_normal(n))
    u = rng.standard_normal(n)
    via_fft = np.fft.ifft(op.gram_multipliers() * np.fft.fft(u)).real
    direct = op.adjoint(op.apply(u))
    assert np.allclose(via_fft, direct, atol=1e-10 * max(1.0, np.abs(direct).max()))
