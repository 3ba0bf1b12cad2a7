import math

import numpy as np
import pytest

from coslat.cosine_space import gauss_legendre_unit
from coslat.errors import EvaluationError
from coslat.integrator import approximate_at_points, kernel_weights_at
from coslat.lattice import Box
from coslat.measures import AsymmetricLaplace, MultivariateNormal, UniformOnBox, cos_transform
from coslat.wavelet import (
    WaveletConfig,
    _direct_kernel,
    wavelet_expectation_1d,
    wavelet_expectation_2d,
    wavelet_kernel,
    wavelet_n_prime,
)

BOX = Box([-1.5], [2.5])


def test_kernel_examples():
    for n in (1, 2, 5, 8):
        cfg = WaveletConfig(n, BOX)
        for r in range(1, n + 1):
            assert wavelet_kernel(cfg, cfg.nodes()[r - 1], r) == pytest.approx(n / 2, abs=1e-12)
    one = WaveletConfig(1, BOX)
    assert np.allclose(wavelet_kernel(one, np.linspace(-3, 4, 17), 1), 0.5, atol=1e-15)
    two = WaveletConfig(2, BOX)
    assert wavelet_kernel(two, BOX.a[0], 1) == pytest.approx(0.5 + math.sqrt(2) / 2, abs=1e-15)
    with pytest.raises(ValueError):
        wavelet_kernel(two, 0.0, 3)
    with pytest.raises(ValueError):
        WaveletConfig(0, BOX)


@pytest.mark.parametrize("n", [2, 3, 7, 16])
def test_closed_form_matches_direct_sum(n):
    cfg = WaveletConfig(n, BOX)
    x = np.linspace(-6.0, 7.0, 2001)
    z = (x - cfg.a) / (cfg.b - cfg.a)
    for r in (1, n // 2 + 1, n):
        theta = (2 * r - 1) / (2 * n)
        np.testing.assert_allclose(wavelet_kernel(cfg, x, r), _direct_kernel(z, theta, n), atol=1e-10)
        # near-singular arguments fall back to the direct sum
        near = cfg.a + (theta + np.array([1e-12, -3e-10, 2.0 + 5e-11])) * (cfg.b - cfg.a)
        zn = (near - cfg.a) / (cfg.b - cfg.a)
        np.testing.assert_allclose(wavelet_kernel(cfg, near, r), _direct_kernel(zn, theta, n), atol=1e-9)


def _inner(cfg, f, h, n_quad=96):
    z, w = gauss_legendre_unit(n_quad)
    x = cfg.a + z * (cfg.b - cfg.a)
    return 2.0 * float(np.dot(w, f(x) * h(x)))


@pytest.mark.parametrize("n", [1, 2, 4, 8])
def test_orthogonality(n):
    cfg = WaveletConfig(n, BOX)
    nodes = cfg.nodes()
    for r in range(1, n + 1):
        for q in range(1, n + 1):
            ip = _inner(cfg, lambda x: wavelet_kernel(cfg, x, r), lambda x: wavelet_kernel(cfg, x, q))
            assert ip == pytest.approx(wavelet_kernel(cfg, nodes[r - 1], q), abs=1e-10)
            if r != q:
                assert abs(wavelet_kernel(cfg, nodes[r - 1], q)) < 1e-10


@pytest.mark.parametrize("n", [1, 3, 8])
def test_kernel_polynomial_property(n):
    cfg = WaveletConfig(n, BOX)
    nodes = cfg.nodes()
    for k in range(n):
        v = lambda x: np.cos(k * np.pi * (x - cfg.a) / (cfg.b - cfg.a))
        for r in range(1, n + 1):
            ip = _inner(cfg, v, lambda x: wavelet_kernel(cfg, x, r))
            assert ip == pytest.approx(v(nodes[r - 1]), abs=1e-10)


@pytest.mark.parametrize("n", [1, 4, 9])
def test_partition_identity(n):
    cfg = WaveletConfig(n, BOX)
    x = np.linspace(-4, 5, 1001)
    total = sum(wavelet_kernel(cfg, x, r) for r in range(1, n + 1))
    np.testing.assert_allclose(2.0 / n * total, 1.0, atol=1e-12)


def test_expectation_examples():
    m = MultivariateNormal.isotropic(1, 0.7)
    c = lambda y: np.full(len(y), 2.5)
    assert wavelet_expectation_1d(c, m, WaveletConfig(1, BOX)) == pytest.approx(2.5, abs=1e-15)
    u = UniformOnBox(BOX)
    mode = lambda y: np.cos(np.pi * (y[:, 0] - BOX.a[0]) / BOX.width[0])
    for n in (2, 5, 12):
        assert abs(wavelet_expectation_1d(mode, u, WaveletConfig(n, BOX))) < 1e-12
    box2 = Box([-1.0, 0.0], [1.0, 3.0])
    const2 = lambda y: np.full(len(y), -4.0)
    assert wavelet_expectation_2d(const2, UniformOnBox(box2), box2, 6) == pytest.approx(-4.0, abs=1e-12)


@pytest.mark.parametrize("n", [2, 5, 8])
def test_reproduces_space_elements(n):
    m = MultivariateNormal(np.array([0.3]), np.array([[0.4]]))
    cfg = WaveletConfig(n, BOX)
    rng = np.random.default_rng(n)
    c = rng.standard_normal(n)
    v = lambda y: np.cos(np.pi * np.outer((np.asarray(y)[:, 0] - cfg.a) / (cfg.b - cfg.a), np.arange(n))) @ c
    exact = sum(ck * cos_transform(m, [k], BOX) for k, ck in enumerate(c))
    assert wavelet_expectation_1d(v, m, cfg) == pytest.approx(exact, abs=1e-10)


@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_matches_lattice_path_on_wavelet_grid(n):
    m = AsymmetricLaplace(np.array([0.2]), np.array([[0.5]]))
    cfg = WaveletConfig(n, BOX)
    f = lambda y: np.exp(-y[:, 0] ** 2) + y[:, 0]
    theta = cfg.theta()[:, None]
    weights = kernel_weights_at(theta, m, BOX, n - 1)
    lattice_form = approximate_at_points(f, theta, weights, BOX)
    assert wavelet_expectation_1d(f, m, cfg) == pytest.approx(lattice_form, abs=1e-12)


def test_two_dimensional_validation():
    m = MultivariateNormal.isotropic(3, 0.5)
    with pytest.raises(ValueError):
        wavelet_expectation_2d(lambda y: y[:, 0], m, Box.cube(3, -1, 1), 4)
    with pytest.raises(ValueError):
        wavelet_expectation_1d(lambda y: y[:, 0], m, WaveletConfig(3, BOX))
    with pytest.raises(EvaluationError):
        wavelet_expectation_1d(lambda y: np.full(len(y), np.inf), MultivariateNormal.isotropic(1, 0.5), WaveletConfig(3, BOX))


def test_n_prime_pairing():
    assert [wavelet_n_prime(N) for N in (1, 2, 16, 17, 2**14)] == [1, 2, 4, 5, 128]
