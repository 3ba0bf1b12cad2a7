"""Probability measures given through their characteristic functions.

Every measure exposes ``characteristic_function(t)`` vectorised over the
leading axes of ``t`` (last axis is the dimension).  The cosine transform over a
box is assembled from the characteristic function alone.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .cosine_space import SmoothnessParams, enumerate_nonneg_ball, r_weight, sign_patterns
from .lattice import Box

_SINC_SERIES_CUTOFF = 1e-8


def _freeze(x, ndim):
    arr = np.array(x, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("measure parameters must be finite")
    arr.setflags(write=False)
    return arr


def _check_psd(mat, name):
    if mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be square")
    if not np.allclose(mat, mat.T, rtol=0, atol=1e-14 * max(1.0, np.abs(mat).max())):
        raise ValueError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(mat).min() < -1e-12 * max(1.0, np.abs(mat).max()):
        raise ValueError(f"{name} must be positive semidefinite")


class Measure:
    """Common interface; subclasses define ``dim`` and ``characteristic_function``."""

    tag = "measure"

    def _params(self) -> tuple:
        raise NotImplementedError

    def characteristic_function(self, t) -> np.ndarray:
        raise NotImplementedError

    def fingerprint(self) -> str:
        parts = [self.tag]
        for arr in self._params():
            parts.append(",".join(float(x).hex() for x in np.ravel(arr)))
        return hashlib.sha256("|".join(parts).encode()).hexdigest()

    def _check_t(self, t):
        t = np.asarray(t, dtype=float)
        if t.shape[-1:] != (self.dim,):
            raise ValueError(f"frequency vector must have length {self.dim}")
        return t


@dataclass(frozen=True, eq=False)
class UniformOnBox(Measure):
    """Uniform law on a box."""

    box: Box
    tag = "uniform"

    @property
    def dim(self) -> int:
        return self.box.dim

    def _params(self):
        return (self.box.a, self.box.b)

    def characteristic_function(self, t):
        t = self._check_t(t)
        mid = 0.5 * (self.box.a + self.box.b)
        half = 0.5 * self.box.width
        x = t * half
        small = np.abs(x) < _SINC_SERIES_CUTOFF
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(small, 1.0 - x * x / 6.0, np.sin(x) / np.where(small, 1.0, x))
        return np.exp(1j * np.sum(t * mid, axis=-1)) * np.prod(ratio, axis=-1)

    def density(self, y):
        y = np.asarray(y, dtype=float)
        inside = np.all((y >= self.box.a) & (y <= self.box.b), axis=-1)
        return np.where(inside, 1.0 / self.box.volume, 0.0)


@dataclass(frozen=True, eq=False)
class MultivariateNormal(Measure):
    """Gaussian law with ``F(t) = exp(i t.mean - t' cov t / 2)``."""

    mean: np.ndarray
    cov: np.ndarray
    tag = "normal"

    def __post_init__(self):
        mean = _freeze(np.atleast_1d(self.mean), 1)
        cov = _freeze(np.atleast_2d(self.cov), 2)
        if cov.shape != (mean.size, mean.size):
            raise ValueError("covariance shape does not match the mean")
        _check_psd(cov, "covariance")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def isotropic(cls, s: int, sd: float, mean: float = 0.0) -> "MultivariateNormal":
        return cls(np.full(s, float(mean)), sd**2 * np.eye(s))

    @property
    def dim(self) -> int:
        return self.mean.size

    def _params(self):
        return (self.mean, self.cov)

    def characteristic_function(self, t):
        t = self._check_t(t)
        quad = np.einsum("...i,ij,...j->...", t, self.cov, t)
        return np.exp(1j * (t @ self.mean) - 0.5 * quad)

    def density(self, y):
        y = np.asarray(y, dtype=float)
        chol = np.linalg.cholesky(self.cov)
        diff = (y - self.mean).reshape(-1, self.dim)
        sol = np.linalg.solve(chol, diff.T)
        log_det = 2.0 * np.sum(np.log(np.diag(chol)))
        expo = -0.5 * np.sum(sol**2, axis=0) - 0.5 * (self.dim * math.log(2 * math.pi) + log_det)
        return np.exp(expo).reshape(y.shape[:-1])


@dataclass(frozen=True, eq=False)
class AsymmetricLaplace(Measure):
    """Asymmetric multivariate Laplace law, ``F(t) = 1 / (1 + t' sigma t / 2 - i mu_bar.t)``.

    Mean ``mu_bar``; covariance ``sigma + mu_bar mu_bar'``.  No density is provided.
    """

    mu_bar: np.ndarray
    sigma: np.ndarray
    tag = "laplace"

    def __post_init__(self):
        mu = _freeze(np.atleast_1d(self.mu_bar), 1)
        sigma = _freeze(np.atleast_2d(self.sigma), 2)
        if sigma.shape != (mu.size, mu.size):
            raise ValueError("sigma shape does not match mu_bar")
        _check_psd(sigma, "sigma")
        object.__setattr__(self, "mu_bar", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def dim(self) -> int:
        return self.mu_bar.size

    def _params(self):
        return (self.mu_bar, self.sigma)

    def characteristic_function(self, t):
        t = self._check_t(t)
        quad = np.einsum("...i,ij,...j->...", t, self.sigma, t)
        return 1.0 / (1.0 + 0.5 * quad - 1j * (t @ self.mu_bar))

    @property
    def covariance(self) -> np.ndarray:
        return self.sigma + np.outer(self.mu_bar, self.mu_bar)


def characteristic_function(m: Measure, t) -> complex | np.ndarray:
    out = m.characteristic_function(t)
    return complex(out) if np.ndim(out) == 0 else out


def phase_corrected_cf(m: Measure, ks, box: Box) -> np.ndarray:
    """``exp(-i pi k.a/(b-a)) F(pi k/(b-a)) = E[exp(i pi k.(Y-a)/(b-a))]`` for rows of ``ks``."""
    ks = np.asarray(ks, dtype=float)
    if ks.shape[-1] != box.dim or m.dim != box.dim:
        raise ValueError("measure, box and multi-index dimensions must agree")
    t = np.pi * ks / box.width
    phase = np.exp(-1j * np.pi * np.sum(ks * box.a / box.width, axis=-1))
    return phase * m.characteristic_function(t)


def cos_transform_sums(m: Measure, ks, box: Box) -> np.ndarray:
    """``sum_sigma Re E[exp(i pi (sigma*k).z)]`` over distinct sign patterns of each row.

    Equals ``2^{|k|_0}`` times the cosine transform.  Sign flips on zero
    coordinates are skipped, so a row costs ``2^{|k|_0}`` characteristic-function
    calls instead of ``2^s``.
    """
    ks = np.atleast_2d(np.asarray(ks, dtype=np.int64))
    ks = np.abs(ks)
    total = np.zeros(ks.shape[0], dtype=complex)
    for sigma in sign_patterns(ks.shape[1]):
        keep = np.all((sigma == 1) | (ks != 0), axis=1)
        if np.any(keep):
            total[keep] += phase_corrected_cf(m, ks[keep] * sigma, box)
    if __debug__:
        resid = np.abs(total.imag).max(initial=0.0)
        scale = max(1.0, np.abs(total.real).max(initial=0.0))
        assert resid <= 1e-12 * scale, f"cosine transform imaginary residue {resid:.3e}"
    return total.real


def cos_transform_table(m: Measure, ks, box: Box) -> np.ndarray:
    """Cosine transform ``E[prod_j cos(pi k_j (Y_j - a_j)/(b_j - a_j))]`` for each row."""
    ks = np.atleast_2d(np.asarray(ks, dtype=np.int64))
    return cos_transform_sums(m, ks, box) / 2.0 ** np.count_nonzero(ks, axis=1)


def cos_transform(m: Measure, k, box: Box) -> float:
    k = np.asarray(k, dtype=np.int64)
    if k.shape != (box.dim,):
        raise ValueError("multi-index must match the box dimension")
    return float(cos_transform_table(m, k[None, :], box)[0])


@dataclass
class DecayReport:
    """Outcome of scanning squared cosine transforms against ``r_{beta, rho}``."""

    indices: np.ndarray
    squared: np.ndarray
    bound: np.ndarray
    satisfied: bool
    worst_index: tuple
    worst_ratio: float
    tightest_rho: float
    fitted_beta: float
    fitted_rho: float

    def squared_at(self, k) -> float:
        k = tuple(abs(int(x)) for x in k)
        for idx, val in zip(self.indices, self.squared):
            if tuple(int(x) for x in idx) == k:
                return float(val)
        raise KeyError(k)

    def summary(self) -> dict:
        return {
            "scanned": int(self.indices.shape[0]),
            "satisfied": bool(self.satisfied),
            "worst_index": list(self.worst_index),
            "worst_ratio": self.worst_ratio,
            "tightest_common_rho": self.tightest_rho,
            "fitted_beta": self.fitted_beta,
            "fitted_rho": self.fitted_rho,
        }


def _fit_decay(m: Measure, box: Box, K_scan: int) -> tuple[float, float]:
    """Fit ``|F|^2 ~ rho k^(-2 beta)`` along each axis by least squares in log-log space.

    The modulus of the characteristic function envelopes the oscillating
    cosine transform.  The fit uses the asymptotic range ``[K_scan, 16 K_scan]``
    (log-spaced) and the smallest exponent over the axes is reported.
    """
    s = box.dim
    k = np.unique(np.round(np.geomspace(max(2, K_scan), 16 * max(2, K_scan), 64)))
    best = (float("inf"), float("nan"))
    for j in range(s):
        ks = np.zeros((k.size, s))
        ks[:, j] = k
        env = np.abs(m.characteristic_function(np.pi * ks / box.width)) ** 2
        ok = env > 1e-280
        if ok.sum() < 2:
            continue
        slope, icpt = np.polyfit(np.log(k[ok]), np.log(env[ok]), 1)
        beta = -0.5 * slope
        if beta < best[0]:
            best = (float(beta), math.exp(icpt) if icpt < 700 else float("inf"))
    return best


def decay_bound_check(m: Measure, box: Box, params: SmoothnessParams, K_scan: int) -> DecayReport:
    """Compare squared cosine transforms with ``r_{beta, rho, s}(k)`` for ``||k||_1 <= K_scan``.

    Diagnostic only: a finite scan cannot certify the hypothesis.
    """
    if K_scan < 1:
        raise ValueError("K_scan must be >= 1")
    if params.beta is None or params.rho is None:
        raise ValueError("beta and rho must be provided")
    ks = enumerate_nonneg_ball(box.dim, K_scan)
    sq = cos_transform_table(m, ks, box) ** 2
    bound = np.atleast_1d(r_weight(params.beta, params.rho, ks))
    ratio = sq / bound
    worst = int(np.argmax(ratio))
    nz = np.count_nonzero(ks, axis=1)
    # smallest common rho with sq <= rho^{|k|_0} prod |k_j|^{-2 beta}
    scaled = sq * np.prod(np.where(ks == 0, 1.0, ks.astype(float)) ** (2 * params.beta), axis=1)
    mask = nz > 0
    with np.errstate(divide="ignore"):
        needed = np.where(scaled[mask] > 0, scaled[mask] ** (1.0 / nz[mask]), 0.0)
    tightest = float(needed.max(initial=0.0))
    fitted_beta, fitted_rho = _fit_decay(m, box, K_scan)
    return DecayReport(
        indices=ks,
        squared=sq,
        bound=bound,
        satisfied=bool(np.all(sq <= bound * (1 + 1e-12))),
        worst_index=tuple(int(x) for x in ks[worst]),
        worst_ratio=float(ratio[worst]),
        tightest_rho=tightest,
        fitted_beta=fitted_beta,
        fitted_rho=fitted_rho,
    )
