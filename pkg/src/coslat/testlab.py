"""Test integrands, closed-form references and brute-force oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cosine_space import (
    CosineCoefficients,
    compute_cosine_coefficients,
    enumerate_nonneg_ball,
    nonzero_count,
    tensor_grid,
)
from .errors import UnsupportedError
from .lattice import Box
from .measures import AsymmetricLaplace, Measure, MultivariateNormal, UniformOnBox, cos_transform_table

# -10 + 42 y^2 - 42 y^5 + 21 y^6, highest power first
_F1_POLY = np.array([21.0, -42.0, 0.0, 0.0, 42.0, 0.0, -10.0])

VARIANTS = ("F1", "Bilinear", "ConstantOne", "CosineMode")


@dataclass(frozen=True, eq=False)
class TestFunction:
    """A named integrand; call it on an ``(n, s)`` array (or one point)."""

    __test__ = False  # keep pytest from collecting this class

    variant: str
    s: int
    w: float = 0.0
    mode: tuple = ()
    box: Box | None = field(default=None)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.s < 1:
            raise ValueError("s must be >= 1")
        if self.variant == "F1" and not 0 < self.w <= 1:
            raise ValueError("F1 needs 0 < w <= 1")
        if self.variant == "Bilinear" and self.s != 2:
            raise ValueError("Bilinear is two-dimensional")
        if self.variant == "CosineMode":
            if len(self.mode) != self.s or self.box is None or self.box.dim != self.s:
                raise ValueError("CosineMode needs a mode and a box of dimension s")
            if any(int(k) < 0 for k in self.mode):
                raise ValueError("cosine modes are nonnegative")

    @classmethod
    def f1(cls, s: int, w: float) -> "TestFunction":
        return cls("F1", s, w=w)

    @classmethod
    def bilinear(cls) -> "TestFunction":
        return cls("Bilinear", 2)

    @classmethod
    def constant_one(cls, s: int) -> "TestFunction":
        return cls("ConstantOne", s)

    @classmethod
    def cosine_mode(cls, mode, box: Box) -> "TestFunction":
        mode = tuple(int(k) for k in mode)
        return cls("CosineMode", len(mode), mode=mode, box=box)

    def __call__(self, y):
        return eval_test_function(self, y)


def f1_factor(y, wj: float):
    """One factor ``1 + (w^j/21)(-10 + 42y^2 - 42y^5 + 21y^6)``, Horner form."""
    return 1.0 + wj / 21.0 * np.polyval(_F1_POLY, y)


def eval_test_function(tf: TestFunction, y):
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    y = np.atleast_2d(y)
    if y.shape[-1] != tf.s:
        raise ValueError(f"point dimension {y.shape[-1]} does not match s={tf.s}")
    if tf.variant == "F1":
        out = np.ones(y.shape[0])
        for j in range(tf.s):
            out = out * f1_factor(y[:, j], tf.w ** (j + 1))
    elif tf.variant == "Bilinear":
        out = y[:, 0] * y[:, 1]
    elif tf.variant == "ConstantOne":
        out = np.ones(y.shape[0])
    else:
        z = (y - tf.box.a) / tf.box.width
        out = np.prod(np.cos(np.pi * np.asarray(tf.mode) * z), axis=1)
    return float(out[0]) if single else out


def alternating_box(s: int) -> Box:
    """``[0,1] x [-1,1] x [0,1] x ...``: the uniform-test domain."""
    a = [0.0 if j % 2 == 0 else -1.0 for j in range(s)]
    return Box(a, [1.0] * s)


def uniform_reference(s: int, w: float) -> float:
    """Lebesgue integral of F1 over :func:`alternating_box`.

    Odd (1-based) dimensions integrate the bracket over ``[0,1]`` to zero,
    even ones over ``[-1,1]`` to ``2 + (2/3) w^j``.
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    return math.prod(2.0 + (2.0 / 3.0) * w**j for j in range(2, s + 1, 2))


def normal_reference(s: int, w: float, sd: float = 0.5) -> float:
    """Exact ``E[F1(Y)]`` for ``Y ~ N(0, sd^2 I)`` from Gaussian moments.

    ``E[Y^2] = sd^2``, ``E[Y^5] = 0``, ``E[Y^6] = 15 sd^6``.
    """
    bracket = -10.0 + 42.0 * sd**2 + 21.0 * 15.0 * sd**6
    return math.prod(1.0 + w**j * bracket / 21.0 for j in range(1, s + 1))


PUBLISHED_NORMAL_REFERENCES = (1.2324, 1.4901, 1.7705)


def laplace_bilinear_reference(m: AsymmetricLaplace) -> float:
    """``E[Y_1 Y_2] = mu_1 mu_2 + (sigma + mu mu')_{12}``."""
    mu = m.mu_bar
    return float(mu[0] * mu[1] + m.covariance[0, 1])


def normal_box_tail_mass(m: MultivariateNormal, box: Box) -> float:
    """Union bound on the probability mass of ``m`` outside ``box``."""
    sd = np.sqrt(np.diag(m.cov))
    lo = (box.a - m.mean) / sd
    hi = (box.b - m.mean) / sd
    out = [0.5 * math.erfc(-x / math.sqrt(2)) for x in lo] + [0.5 * math.erfc(x / math.sqrt(2)) for x in hi]
    return min(1.0, math.fsum(out))


def lebesgue_integral(f, box: Box, nodes_per_dim: int) -> float:
    """Tensor Gauss-Legendre integral of ``f`` over ``box`` (no density)."""
    z, wq = tensor_grid(nodes_per_dim, box.dim)
    pts = box.a + z * box.width
    return float(np.dot(wq, np.asarray(f(pts), dtype=float)) * box.volume)


def brute_force_expectation(tf: TestFunction, m: Measure, box: Box, nodes_per_dim: int) -> float:
    """Tensor Gauss-Legendre quadrature of ``f`` times the density over ``box``.

    Mass outside ``box`` is neglected; see :func:`normal_box_tail_mass`.
    For the Laplace law only ``E[Y_1 Y_2]`` is available, from its moments.
    """
    if isinstance(m, AsymmetricLaplace):
        if tf.variant == "Bilinear":
            return laplace_bilinear_reference(m)
        raise UnsupportedError("the Laplace law has no density here; only Bilinear is supported")
    if not isinstance(m, (UniformOnBox, MultivariateNormal)):
        raise UnsupportedError(f"no density oracle for {type(m).__name__}")
    if box.dim > 3 or m.dim != box.dim or tf.s != box.dim:
        raise UnsupportedError("brute force oracle needs matching dimensions s <= 3")
    z, wq = tensor_grid(nodes_per_dim, box.dim)
    pts = box.a + z * box.width
    dens = m.density(pts)
    return float(np.dot(wq, eval_test_function(tf, pts) * dens) * box.volume)


def truncated_expansion_expectation(f, m: Measure, box: Box, K: int, nodes_per_dim: int = 128) -> float:
    """Expectation of the ``l1``-truncated cosine expansion of ``f`` (the scheme's large-N limit).

    ``sum_{k in N^s, |k|_1 <= K} f_cos(k) 2^{|k|_0/2} E[prod_j cos(pi k_j z_j)]`` with the
    coefficients from quadrature; an oracle independent of any lattice.
    """
    coeffs = compute_cosine_coefficients(f, box, K, nodes_per_dim)
    ks = enumerate_nonneg_ball(box.dim, K)
    if not np.array_equal(ks, coeffs.indices):
        raise AssertionError("coefficient table order differs from the frequency ball")
    transform = cos_transform_table(m, ks, box)
    terms = coeffs.values * np.sqrt(2.0) ** nonzero_count(ks) * transform
    return math.fsum(terms.tolist())


def random_cosine_polynomial(rng: np.random.Generator, box: Box, modes, scale: float = 1.0):
    """``f = sum_k c_k prod_j cos(pi k_j z_j)`` with random ``c_k``; returns ``(f, dict k -> c_k)``."""
    modes = [tuple(int(x) for x in k) for k in modes]
    coef = {k: float(c) for k, c in zip(modes, scale * rng.standard_normal(len(modes)))}
    ks = np.array(list(coef), dtype=np.int64).reshape(-1, box.dim)
    cs = np.array(list(coef.values()))

    def f(y):
        z = (np.atleast_2d(y) - box.a) / box.width
        out = np.ones((z.shape[0], ks.shape[0]))
        for j in range(box.dim):
            out *= np.cos(np.pi * np.outer(z[:, j], ks[:, j]))
        return out @ cs

    return f, coef


def cosine_polynomial_coefficients(box: Box, coef: dict) -> CosineCoefficients:
    """Exact table for ``sum_k c_k prod_j cos(pi k_j z_j)``: ``f_cos(k) = c_k 2^{-|k|_0/2}``."""
    ks = np.array(sorted(coef), dtype=np.int64).reshape(-1, box.dim)
    vals = np.array([coef[tuple(int(x) for x in k)] for k in ks]) * 2.0 ** (-nonzero_count(ks) / 2.0)
    return CosineCoefficients(box, int(ks.sum(axis=1).max(initial=0)), ks, vals)
