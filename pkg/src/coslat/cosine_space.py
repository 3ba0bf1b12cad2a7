"""Half-period cosine space: r-weights, frequency sets, truncated kernel, coefficients.

All functions work in the box-normalised variable ``z = (y - a) / (b - a)``.
Coefficients follow the normalisation

    f_cos(k) = int_{[0,1]^s} f(a + z (b - a)) 2^{|k|_0 / 2} prod_j cos(pi k_j z_j) dz,

for ``k`` in ``N^s``; the extension to ``Z^s`` is even in every component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import check_finite
from .lattice import Box

NORMS = ("l1", "linf")


@dataclass(frozen=True)
class SmoothnessParams:
    """Smoothness of the integrand (alpha, gamma) and decay of the measure (beta, rho)."""

    alpha: float
    gamma: tuple
    beta: float | None = None
    rho: tuple | None = None

    def __post_init__(self):
        if not self.alpha > 0.5:
            raise ValueError("alpha must exceed 1/2")
        gamma = tuple(float(x) for x in np.atleast_1d(self.gamma))
        if any(x <= 0 for x in gamma):
            raise ValueError("weights gamma_j must be positive")
        object.__setattr__(self, "gamma", gamma)
        if self.rho is not None:
            rho = tuple(float(x) for x in np.atleast_1d(self.rho))
            if len(rho) != len(gamma):
                raise ValueError("rho and gamma must have the same length")
            if any(x <= 0 for x in rho):
                raise ValueError("rho_j must be positive")
            object.__setattr__(self, "rho", rho)

    @property
    def dim(self) -> int:
        return len(self.gamma)

    def check_decay_regime(self) -> None:
        """Hypotheses on (beta, rho) needed by the lattice error bound."""
        if self.beta is None or self.rho is None:
            raise ValueError("beta and rho are required here")
        if not self.beta > self.dim:
            raise ValueError(f"beta={self.beta} must exceed the dimension {self.dim}")
        if not self.beta - self.alpha > 0.5:
            raise ValueError("beta - alpha must exceed 1/2")


def r_weight_1d(alpha: float, gamma: float, k):
    """``1`` at ``k = 0``, else ``gamma |k|^(-2 alpha)``; vectorised over ``k``."""
    if not alpha > 0.5:
        raise ValueError("alpha must exceed 1/2")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    k = np.abs(np.asarray(k, dtype=float))
    with np.errstate(divide="ignore"):
        out = np.where(k == 0, 1.0, gamma * k ** (-2.0 * alpha))
    return out if out.ndim else float(out)


def r_weight(alpha: float, gamma, k):
    """Product weight ``prod_j r_{alpha, gamma_j}(k_j)`` for ``k`` of shape ``(..., s)``."""
    k = np.asarray(k)
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    if k.shape[-1] != gamma.size:
        raise ValueError(f"multi-index length {k.shape[-1]} != {gamma.size} weights")
    out = np.ones(k.shape[:-1])
    for j in range(gamma.size):
        out = out * r_weight_1d(alpha, gamma[j], k[..., j])
    return out if out.ndim else float(out)


def r_weight_multi(params: SmoothnessParams, k):
    return r_weight(params.alpha, params.gamma, k)


def nonzero_count(k) -> np.ndarray:
    """``|k|_0`` along the last axis."""
    return np.count_nonzero(np.asarray(k), axis=-1)


def _lex_sort(ks: np.ndarray) -> np.ndarray:
    if ks.shape[0] == 0:
        return ks
    order = np.lexsort(ks.T[::-1])
    return ks[order]


@lru_cache(maxsize=32)
def _nonneg_ball(s: int, K: int, norm: str) -> np.ndarray:
    if norm == "linf":
        axes = [np.arange(K + 1)] * s
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        out = grid.reshape(-1, s).astype(np.int64)
    else:
        # build level by level: append one coordinate while the budget allows
        out = np.arange(K + 1, dtype=np.int64)[:, None]
        for _ in range(s - 1):
            used = out.sum(axis=1)
            reps = K - used + 1
            prefix = np.repeat(out, reps, axis=0)
            starts = np.repeat(np.cumsum(reps) - reps, reps)
            last = np.arange(prefix.shape[0]) - starts
            out = np.column_stack([prefix, last])
    out = _lex_sort(out)
    out.setflags(write=False)
    return out


def enumerate_nonneg_ball(s: int, K: int, norm: str = "l1") -> np.ndarray:
    """All ``k`` in ``N^s`` with ``||k|| <= K`` (lexicographic), shape ``(M, s)``."""
    if s < 1:
        raise ValueError("dimension must be >= 1")
    if K < 0:
        raise ValueError("truncation K must be >= 0")
    if norm not in NORMS:
        raise ValueError(f"norm must be one of {NORMS}")
    return _nonneg_ball(int(s), int(K), norm)


def sign_patterns(s: int) -> np.ndarray:
    return np.array(list(product((1, -1), repeat=s)), dtype=np.int64)


def enumerate_l1_ball(s: int, K: int, norm: str = "l1") -> np.ndarray:
    """Every ``k`` in ``Z^s`` with ``sum |k_j| <= K`` exactly once, in lexicographic order.

    ``norm="linf"`` switches to the cube ``max |k_j| <= K`` (diagnostics only).
    """
    base = enumerate_nonneg_ball(s, K, norm)
    parts = []
    for sigma in sign_patterns(s):
        # a sign flip on a zero coordinate would duplicate the index
        keep = np.all((sigma == 1) | (base != 0), axis=1)
        parts.append(base[keep] * sigma)
    return _lex_sort(np.concatenate(parts, axis=0))


def count_fixed_sum(s: int, K: int) -> int:
    """Number of ``k`` in ``N^s`` with ``sum k_j = K``: ``C(K + s - 1, s - 1)``."""
    return math.comb(K + s - 1, s - 1)


def eval_truncated_kernel(x, y, box: Box, K: int, norm: str = "l1") -> float:
    """Real part of the truncated cosine kernel at a single pair ``(x, y)``.

    Sums ``prod_j cos(pi k_j x_j) cos(pi k . y)`` (normalised coordinates) over
    the ball, pairing ``k`` with ``-k`` and accumulating with ``math.fsum``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (box.dim,) or y.shape != (box.dim,):
        raise ValueError("x and y must match the box dimension")
    zx = (x - box.a) / box.width
    zy = (y - box.a) / box.width
    ks = enumerate_l1_ball(box.dim, K, norm)
    # lexicographically positive half: first nonzero entry > 0
    first = np.take_along_axis(ks, np.argmax(ks != 0, axis=1)[:, None], axis=1)[:, 0]
    half = ks[first > 0]
    terms = 2.0 * np.prod(np.cos(np.pi * half * zx), axis=1) * np.cos(np.pi * half @ zy)
    return math.fsum([1.0, *terms.tolist()])


@lru_cache(maxsize=64)
def gauss_legendre_unit(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[0, 1]``."""
    if n < 1:
        raise ValueError("need at least one node")
    x, w = leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def tensor_grid(n: int, s: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Legendre nodes ``(n**s, s)`` and weights on the unit cube."""
    x, w = gauss_legendre_unit(n)
    nodes = np.stack(np.meshgrid(*([x] * s), indexing="ij"), axis=-1).reshape(-1, s)
    weights = np.ones(1)
    for _ in range(s):
        weights = np.multiply.outer(weights, w).ravel()
    return nodes, weights


def cosine_coefficient(f, box: Box, k, quad_points_per_dim: int = 64) -> float:
    """One coefficient ``f_cos(k)`` by tensor Gauss-Legendre quadrature (oracle use, small s).

    ``f`` receives an ``(n, s)`` array of points and returns ``n`` values.
    """
    k = np.asarray(k, dtype=np.int64)
    if k.shape != (box.dim,):
        raise ValueError("multi-index must match the box dimension")
    if np.any(k < 0):
        raise ValueError("coefficients are indexed by nonnegative multi-indices")
    if quad_points_per_dim < 2:
        raise ValueError("need at least 2 quadrature nodes per dimension")
    z, w = tensor_grid(quad_points_per_dim, box.dim)
    pts = box.a + z * box.width
    vals = check_finite(f(pts), pts)
    modes = np.prod(np.cos(np.pi * z * k), axis=1)
    scale = 2.0 ** (np.count_nonzero(k) / 2.0)
    return float(scale * np.dot(w, vals * modes))


@dataclass(frozen=True, eq=False)
class CosineCoefficients:
    """Coefficient table over ``{k in N^s : ||k||_1 <= max_l1}``."""

    box: Box
    max_l1: int
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        vals = np.asarray(self.values, dtype=float)
        if idx.ndim != 2 or idx.shape[1] != self.box.dim or idx.shape[0] != vals.size:
            raise ValueError("indices must be (M, s) with one value per row")
        if np.any(idx < 0):
            raise ValueError("coefficient keys must be nonnegative")
        if np.any(idx.sum(axis=1) > self.max_l1):
            raise ValueError("coefficient key beyond max_l1")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.box.dim

    def as_dict(self) -> dict:
        return {tuple(int(x) for x in k): float(v) for k, v in zip(self.indices, self.values)}

    def get(self, k) -> float:
        """Coefficient at ``k`` in ``Z^s`` via the componentwise even extension."""
        key = tuple(abs(int(x)) for x in k)
        return self.as_dict().get(key, 0.0)

    def to_text(self) -> str:
        head = [str(self.dim), str(self.max_l1)]
        head += [repr(float(x)) for x in self.box.a] + [repr(float(x)) for x in self.box.b]
        lines = [" ".join(head)]
        for k, v in zip(self.indices, self.values):
            lines.append(" ".join(str(int(x)) for x in k) + f" {v:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CosineCoefficients":
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        head = rows[0]
        s, max_l1 = int(head[0]), int(head[1])
        if len(head) != 2 + 2 * s:
            raise ValueError("header must be: s max_l1 a_1..a_s b_1..b_s")
        box = Box([float(x) for x in head[2 : 2 + s]], [float(x) for x in head[2 + s :]])
        body = rows[1:]
        if any(len(r) != s + 1 for r in body):
            raise ValueError("each row must hold s indices and a value")
        idx = np.array([[int(x) for x in r[:s]] for r in body], dtype=np.int64).reshape(-1, s)
        vals = np.array([float(r[s]) for r in body])
        return cls(box, max_l1, idx, vals)


def compute_cosine_coefficients(
    f, box: Box, max_l1: int, quad_points_per_dim: int = 64
) -> CosineCoefficients:
    """All coefficients with ``||k||_1 <= max_l1`` from one tensor quadrature grid.

    The grid values are contracted one axis at a time against
    ``w_i cos(pi k z_i)``, which is the same quadrature as
    :func:`cosine_coefficient` evaluated for every ``k`` at once.
    """
    s = box.dim
    z, w = gauss_legendre_unit(quad_points_per_dim)
    nodes, _ = tensor_grid(quad_points_per_dim, s)
    pts = box.a + nodes * box.width
    vals = check_finite(f(pts), pts).reshape((quad_points_per_dim,) * s)
    basis = w[:, None] * np.cos(np.pi * np.outer(z, np.arange(max_l1 + 1)))
    coef = vals
    for _ in range(s):
        # contract the leading grid axis; frequency axes accumulate at the back
        coef = np.tensordot(coef, basis, axes=([0], [0]))
    idx = enumerate_nonneg_ball(s, max_l1)
    values = coef[tuple(idx.T)] * 2.0 ** (nonzero_count(idx) / 2.0)
    return CosineCoefficients(box, max_l1, idx.copy(), values)


def eval_half_period_expansion(coeffs: CosineCoefficients, y) -> np.ndarray | float:
    """Truncated half-period cosine expansion at ``y`` (any point of ``R^s``)."""
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    y = np.atleast_2d(y)
    if y.shape[-1] != coeffs.dim:
        raise ValueError("point dimension does not match the coefficient table")
    z = (y - coeffs.box.a) / coeffs.box.width
    idx = coeffs.indices
    amp = coeffs.values * np.sqrt(2.0) ** nonzero_count(idx)
    modes = np.ones((y.shape[0], idx.shape[0]))
    for j in range(coeffs.dim):
        modes *= np.cos(np.pi * np.outer(z[:, j], idx[:, j]))
    out = modes @ amp
    return float(out[0]) if single else out


def cos_space_norm_sq(coeffs: CosineCoefficients, params: SmoothnessParams) -> float:
    """Truncated squared norm ``sum_k f_cos(k)^2 / r(k)``: a lower bound for ``||f||^2``."""
    if params.dim != coeffs.dim:
        raise ValueError("parameter dimension does not match the coefficient table")
    r = np.atleast_1d(r_weight_multi(params, coeffs.indices))
    return math.fsum((coeffs.values**2 / r).tolist())
