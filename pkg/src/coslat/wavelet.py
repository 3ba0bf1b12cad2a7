"""COS-wavelet comparison scheme built on the scaling function

    K(x, r) = 1/2 + sum_{k=1}^{N'-1} cos(k pi z) cos(k pi theta_r),
    z = (x - a)/(b - a),  theta_r = (2r - 1)/(2N').

Expectations use the nodes ``a + theta_r (b - a)`` and the measure's
characteristic function at frequencies ``|k| <= N' - 1`` in each dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import check_finite
from .lattice import Box
from .measures import Measure, phase_corrected_cf

_NEAR_SINGULAR = 1e-9


@dataclass(frozen=True)
class WaveletConfig:
    n_prime: int
    box: Box

    def __post_init__(self):
        if int(self.n_prime) != self.n_prime or self.n_prime < 1:
            raise ValueError("n_prime must be a positive integer")
        if self.box.dim != 1:
            raise ValueError("wavelet configuration is one-dimensional")

    @property
    def a(self) -> float:
        return float(self.box.a[0])

    @property
    def b(self) -> float:
        return float(self.box.b[0])

    def theta(self) -> np.ndarray:
        """Normalised node positions ``(2r - 1)/(2N')``, ``r = 1..N'``."""
        return (2.0 * np.arange(1, self.n_prime + 1) - 1.0) / (2.0 * self.n_prime)

    def nodes(self) -> np.ndarray:
        return self.a + self.theta() * (self.b - self.a)


def _direct_kernel(z, theta, n_prime):
    k = np.arange(1, n_prime)
    return 0.5 + np.cos(np.pi * np.multiply.outer(z, k)) @ np.cos(np.pi * k * theta)


def _dist_to_even(d):
    return np.abs(d - 2.0 * np.round(d / 2.0))


def wavelet_kernel(cfg: WaveletConfig, x, r: int):
    """Scaling function via its Dirichlet-kernel closed form, vectorised over ``x``."""
    if not 1 <= r <= cfg.n_prime:
        raise ValueError(f"r must lie in [1, {cfg.n_prime}]")
    n = cfg.n_prime
    x = np.asarray(x, dtype=float)
    z = (x - cfg.a) / (cfg.b - cfg.a)
    theta = (2.0 * r - 1.0) / (2.0 * n)
    dm, dp = z - theta, z + theta
    dist = np.minimum(_dist_to_even(dm), _dist_to_even(dp))
    with np.errstate(invalid="ignore", divide="ignore"):
        closed = np.sin((n - 0.5) * np.pi * dm) / (4.0 * np.sin(0.5 * np.pi * dm)) + np.sin(
            (n - 0.5) * np.pi * dp
        ) / (4.0 * np.sin(0.5 * np.pi * dp))
    out = np.where(dist == 0.0, 0.5 * n, closed)
    near = (dist > 0.0) & (dist < _NEAR_SINGULAR)
    if np.any(near):
        out = np.where(near, _direct_kernel(z, theta, n), out)
    return out if out.ndim else float(out)


def _frequency_weights(m: Measure, box: Box, n_prime: int) -> np.ndarray:
    """``W[r_1, ..., r_s] = sum_k prod_j cos(k_j pi theta_{r_j}) Re E[exp(i pi k.z)]``, ``|k_j| < N'``."""
    s = box.dim
    k1 = np.arange(1 - n_prime, n_prime)
    grid = np.stack(np.meshgrid(*([k1] * s), indexing="ij"), axis=-1).reshape(-1, s)
    coef = phase_corrected_cf(m, grid, box).real.reshape((k1.size,) * s)
    theta = (2.0 * np.arange(1, n_prime + 1) - 1.0) / (2.0 * n_prime)
    basis = np.cos(np.pi * np.outer(k1, theta))
    out = coef
    for _ in range(s):
        out = np.tensordot(out, basis, axes=([0], [0]))
    return out


def _grid_expectation(f, m: Measure, box: Box, n_prime: int) -> float:
    s = box.dim
    theta = (2.0 * np.arange(1, n_prime + 1) - 1.0) / (2.0 * n_prime)
    axes = [box.a[j] + theta * box.width[j] for j in range(s)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, s)
    vals = np.asarray(f(pts), dtype=float)
    if vals.shape != (pts.shape[0],):
        raise ValueError("integrand must return one value per point")
    vals = check_finite(vals, pts)
    weights = _frequency_weights(m, box, n_prime).ravel()
    return math.fsum((vals * weights).tolist()) / n_prime**s


def wavelet_expectation_1d(f, m: Measure, cfg: WaveletConfig) -> float:
    """``(1/N') sum_r f(node_r) sum_{|k| < N'} cos(k pi theta_r) Re E[exp(i k pi z)]``."""
    if m.dim != 1:
        raise ValueError("one-dimensional scheme needs a one-dimensional measure")
    return _grid_expectation(f, m, cfg.box, cfg.n_prime)


def wavelet_expectation_2d(f, m: Measure, box: Box, n_prime: int) -> float:
    """Tensor extension with the same ``N'`` in both dimensions."""
    if box.dim != 2 or m.dim != 2:
        raise ValueError("two-dimensional scheme needs s = 2")
    if int(n_prime) != n_prime or n_prime < 1:
        raise ValueError("n_prime must be a positive integer")
    return _grid_expectation(f, m, box, int(n_prime))


def wavelet_n_prime(N: int) -> int:
    """Order paired with ``N`` lattice points: ``ceil(sqrt(N))``."""
    return math.isqrt(N - 1) + 1 if N > 0 else 0
