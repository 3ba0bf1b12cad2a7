"""Error-bound diagnostics for the lattice scheme."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .cosine_space import SmoothnessParams, r_weight
from .errors import TruncationError
from .lattice import GeneratingVector

# B_2, B_4, ..., B_16
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510)
_EM_START = 16


def zeta_tail(x: float, M: int) -> float:
    """``sum_{n >= M} n^{-x}`` by Euler-Maclaurin (integral plus boundary corrections)."""
    if not x > 1:
        raise ValueError("zeta tail needs x > 1")
    if M < 1:
        raise ValueError("M must be >= 1")
    if M < _EM_START:
        head = math.fsum(n ** (-x) for n in range(M, _EM_START))
        return head + zeta_tail(x, _EM_START)
    total = [M ** (1.0 - x) / (x - 1.0), 0.5 * M ** (-x)]
    rising = x  # x (x+1) ... (x + 2j - 2)
    fact = 2.0  # (2j)!
    for j, b2j in enumerate(_BERNOULLI, start=1):
        total.append(b2j / fact * rising * M ** (-x - 2 * j + 1))
        rising *= (x + 2 * j - 1) * (x + 2 * j)
        fact *= (2 * j + 1) * (2 * j + 2)
    return math.fsum(total)


def riemann_zeta(x: float) -> float:
    """Riemann zeta for real ``x > 1``."""
    if not x > 1:
        raise ValueError("Riemann zeta is only provided for x > 1")
    head = math.fsum(n ** (-x) for n in range(1, _EM_START))
    return head + zeta_tail(x, _EM_START)


def constant_Cj(alpha: float, beta: float, gamma_j: float, rho_j: float) -> float:
    """Per-dimension constant of the lattice error bound (independent of ``h_j``)."""
    if not alpha > 0.5:
        raise ValueError("alpha must exceed 1/2")
    if not beta - alpha > 0.5:
        raise ValueError("beta - alpha must exceed 1/2")
    if not (gamma_j > 0 and rho_j > 0):
        raise ValueError("gamma_j and rho_j must be positive")
    first = 1.0 + 2.0 * gamma_j * rho_j * riemann_zeta(2 * alpha + 2 * beta)
    second = 1.0 + rho_j * (
        riemann_zeta(2 * alpha)
        + riemann_zeta(2 * beta)
        + 1.0 / gamma_j
        + 2.0 ** (2 * alpha) * riemann_zeta(2 * (beta - alpha))
    )
    return max(first, second)


@dataclass(frozen=True, eq=False)
class DualLatticeSlice:
    """Nonzero ``h`` with ``h.g = 0 (mod N)`` and ``max |h_j| <= H``."""

    g: tuple
    N: int
    H: int
    points: np.ndarray

    def __len__(self):
        return self.points.shape[0]

    def as_set(self) -> set:
        return {tuple(int(x) for x in h) for h in self.points}


def enumerate_dual_lattice(g: GeneratingVector | np.ndarray, N: int, s: int, H: int) -> DualLatticeSlice:
    """Dual lattice points in the cube ``[-H, H]^s`` (exact integer arithmetic).

    When the last component is invertible mod ``N`` the last coordinate is
    solved for, so the cost is ``(2H+1)^{s-1}`` residues instead of ``(2H+1)^s``.
    """
    if H < 1:
        raise ValueError("H must be >= 1")
    comps = g.take(s) if isinstance(g, GeneratingVector) else np.asarray(g, dtype=np.int64)[:s]
    comps = np.asarray(comps, dtype=np.int64)
    if comps.size != s:
        raise ValueError("generating vector shorter than s")
    rng = np.arange(-H, H + 1, dtype=np.int64)
    gs = int(comps[-1]) % N
    if s > 1 and math.gcd(gs, N) == 1:
        inv = pow(gs, -1, N)
        heads = np.stack(np.meshgrid(*([rng] * (s - 1)), indexing="ij"), axis=-1).reshape(-1, s - 1)
        resid = (-(heads @ comps[:-1]) * inv) % N
        rows = []
        # all h_s in [-H, H] with h_s = resid (mod N)
        first = resid - N * ((resid + H) // N)
        count = (H - first) // N + 1
        total = int(count.sum())
        if total:
            head_rep = np.repeat(heads, count, axis=0)
            start = np.repeat(np.cumsum(count) - count, count)
            step = np.arange(total) - start
            last = np.repeat(first, count) + N * step
            rows = np.column_stack([head_rep, last])
        pts = np.asarray(rows, dtype=np.int64).reshape(-1, s)
    else:
        grid = np.stack(np.meshgrid(*([rng] * s), indexing="ij"), axis=-1).reshape(-1, s)
        pts = grid[(grid @ comps) % N == 0]
    pts = pts[np.any(pts != 0, axis=1)]
    pts = pts[np.lexsort(pts.T[::-1])] if pts.size else pts
    return DualLatticeSlice(tuple(int(c) for c in comps), int(N), int(H), pts)


def brute_force_dual_lattice(comps, N: int, H: int) -> set:
    """Plain scan of the whole cube; reference for :func:`enumerate_dual_lattice`."""
    out = set()
    for h in product(range(-H, H + 1), repeat=len(comps)):
        if any(h) and sum(a * b for a, b in zip(h, comps)) % N == 0:
            out.add(h)
    return out


def dual_sum_tail_estimate(N: int, alpha: float, gamma, H: int) -> float:
    """Estimated ``sum r(h)`` over dual points outside ``[-H, H]^s``.

    The full-lattice tail ``prod(1 + 2 gamma_j zeta(2 alpha)) - prod(1 + 2 gamma_j S_H)``
    is scaled by the dual lattice's density ``1/N`` in ``Z^s``.
    """
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    tail = zeta_tail(2 * alpha, H + 1)
    head = riemann_zeta(2 * alpha) - tail
    inside = np.prod(1.0 + 2.0 * gamma * head)
    outside = np.prod(1.0 + 2.0 * gamma * (head + tail))
    return float(outside - inside) / N


@dataclass
class BoundReport:
    value: float
    dual_sum: float
    tail_estimate: float
    c_product: float
    norm_f: float
    H: int
    n_dual_points: int

    def summary(self) -> dict:
        return dict(self.__dict__)


def theorem1_bound(
    g: GeneratingVector,
    N: int,
    params: SmoothnessParams,
    H: int,
    norm_f: float,
    max_tail_fraction: float | None = 0.01,
) -> BoundReport:
    """``sqrt(sum_{dual} r_{alpha,gamma}(h)) sqrt(prod_j C_j) ||f||`` over the ``H``-truncated dual.

    ``norm_f`` is supplied by the caller (typically a truncated norm), so the
    value is a bound *given* that norm.  Raises :class:`TruncationError` when
    the estimated tail of the dual sum exceeds ``max_tail_fraction`` of the
    truncated sum; pass ``None`` to skip the check.
    """
    params.check_decay_regime()
    s = params.dim
    dual = enumerate_dual_lattice(g, N, s, H)
    r = np.atleast_1d(r_weight(params.alpha, params.gamma, dual.points)) if len(dual) else np.zeros(0)
    dual_sum = math.fsum(r.tolist())
    tail = dual_sum_tail_estimate(N, params.alpha, params.gamma, H)
    if max_tail_fraction is not None and tail > max_tail_fraction * dual_sum:
        raise TruncationError(
            f"H={H} too small: tail estimate {tail:.3e} vs truncated dual sum {dual_sum:.3e}"
        )
    c_prod = math.prod(
        constant_Cj(params.alpha, params.beta, gj, rj) for gj, rj in zip(params.gamma, params.rho)
    )
    value = math.sqrt(dual_sum) * math.sqrt(c_prod) * norm_f
    return BoundReport(value, dual_sum, tail, c_prod, float(norm_f), int(H), len(dual))


def truncation_tail_bound(s: int, K: int, beta: float, rho, avg_abs_f: float) -> float:
    """Kernel-truncation term of the total error bound.

    ``avg |f| * 2^s/(s-1)! * (1 + (2s-1)/K)^(s-1) * prod max(1, sqrt(rho_j)) * |K - s|^(-(beta - s))``.
    """
    if K <= s:
        raise ValueError("the truncation bound needs K > s")
    if not beta > s:
        raise ValueError("the truncation bound needs beta > s")
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    if rho.size != s:
        raise ValueError("rho must have s entries")
    lead = 2.0**s / math.factorial(s - 1) * (1.0 + (2 * s - 1) / K) ** (s - 1)
    return float(avg_abs_f * lead * np.prod(np.maximum(1.0, np.sqrt(rho))) * abs(K - s) ** (-(beta - s)))
