"""Cosine-expansion lattice scheme.

Offline, each tent-transformed lattice point ``u_n`` receives the expected
truncated kernel value

    w_n = sum_{||k||_1 <= K} prod_j cos(pi k_j u_nj) Re E[exp(i pi k.(Y - a)/(b - a))],

and online the expectation is ``(1/N) sum_n f(a + u_n (b - a)) w_n``.  Because
the cosine product is even in each ``k_j``, the sum over ``Z^s`` collapses to
``N^s`` with coefficient ``2^{|k|_0}`` times the cosine transform of the measure.
"""

from __future__ import annotations

import hashlib
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cosine_space import enumerate_l1_ball, enumerate_nonneg_ball
from .errors import check_finite
from .lattice import (
    Box,
    GeneratingVector,
    map_to_box,
    rank1_numerators,
    tent_lattice_box_points,
    tent_transform,
)
from .measures import Measure, cos_transform_sums, phase_corrected_cf

log = logging.getLogger(__name__)

MAGIC = "COSLAT-WT-1"
_DENSE_LIMIT = 2**24
_BLOCK_ENTRIES = 2**23


def kernel_coefficients(m: Measure, box: Box, K: int, norm: str = "l1"):
    """Nonnegative frequencies of the truncated kernel and their folded coefficients.

    Returns ``(ks, coef)`` with ``coef_k = 2^{|k|_0} E[prod_j cos(pi k_j z_j)]``.
    """
    if K < 0:
        raise ValueError("truncation K must be >= 0")
    ks = enumerate_nonneg_ball(box.dim, K, norm)
    return ks, cos_transform_sums(m, ks, box)


def _chunk_rows(s: int, K: int, dense: bool, n_terms: int) -> int:
    per_row = (K + 1) ** (s - 1) if dense else n_terms
    return int(max(1, min(4096, _BLOCK_ENTRIES // max(1, per_row))))


def _dense_block(tensor: np.ndarray, u: np.ndarray, K: int) -> np.ndarray:
    s = u.shape[1]
    freqs = np.arange(K + 1)
    cos = [np.cos(np.pi * np.outer(u[:, j], freqs)) for j in range(s)]
    acc = tensor.reshape(-1, K + 1) @ cos[s - 1].T
    for j in range(s - 2, -1, -1):
        acc = np.einsum("akn,nk->an", acc.reshape(-1, K + 1, u.shape[0]), cos[j])
    return acc.reshape(u.shape[0])


def _gather_block(ks: np.ndarray, coef: np.ndarray, u: np.ndarray, K: int) -> np.ndarray:
    freqs = np.arange(K + 1)
    prod = np.ones((u.shape[0], ks.shape[0]))
    for j in range(u.shape[1]):
        prod *= np.cos(np.pi * np.outer(u[:, j], freqs))[:, ks[:, j]]
    return prod @ coef


def kernel_weights_at(
    unit_points,
    m: Measure,
    box: Box,
    K: int,
    norm: str = "l1",
    workers: int = 1,
    method: str = "auto",
) -> np.ndarray:
    """Expected truncated kernel at arbitrary unit-cube points (already tent-mapped).

    ``method`` is ``"dense"`` (tensor contraction over ``(K+1)^s``), ``"gather"``
    (explicit sum over the frequency list) or ``"auto"``.  Rows are processed
    in blocks whose size depends only on ``(s, K)``, so the output does not
    depend on ``workers``.
    """
    u = np.atleast_2d(np.asarray(unit_points, dtype=float))
    if u.shape[1] != box.dim:
        raise ValueError("point dimension does not match the box")
    s = box.dim
    ks, coef = kernel_coefficients(m, box, K, norm)
    if method == "auto":
        method = "dense" if (K + 1) ** s <= _DENSE_LIMIT else "gather"
    if method == "dense":
        tensor = np.zeros((K + 1,) * s)
        tensor[tuple(ks.T)] = coef
        block = lambda rows: _dense_block(tensor, rows, K)
    elif method == "gather":
        block = lambda rows: _gather_block(ks, coef, rows, K)
    else:
        raise ValueError(f"unknown method {method!r}")
    step = _chunk_rows(s, K, method == "dense", ks.shape[0])
    out = np.empty(u.shape[0])
    starts = range(0, u.shape[0], step)

    def work(start):
        out[start : start + step] = block(u[start : start + step])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, starts))
    else:
        for start in starts:
            work(start)
    return out


def kernel_expected_weight(
    n: int, g: GeneratingVector, N: int, m: Measure, box: Box, K: int, norm: str = "l1"
) -> float:
    """Reference (slow) weight of lattice point ``n``: direct sum over ``Z^s`` with ``math.fsum``."""
    if not 0 <= n < N:
        raise ValueError(f"point index {n} outside [0, {N})")
    num = rank1_numerators(g, N, box.dim)[n]
    u = tent_transform(num / N)
    ks = enumerate_l1_ball(box.dim, K, norm)
    cosprod = np.prod(np.cos(np.pi * ks * u), axis=1)
    terms = cosprod * phase_corrected_cf(m, ks, box).real
    return math.fsum(terms.tolist())


def config_fingerprint(g: GeneratingVector, m: Measure, box: Box, K: int, norm: str) -> str:
    text = "|".join([g.fingerprint(box.dim), m.fingerprint(), box.fingerprint(), str(K), norm])
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass(frozen=True, eq=False)
class WeightTable:
    """Offline weights for one (vector, N, measure, box, K) configuration."""

    box: Box
    K: int
    norm: str
    measure_fingerprint: str
    g_fingerprint: str
    N: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.N,):
            raise ValueError(f"expected {self.N} weights, got shape {w.shape}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.box.dim

    def matches(self, g: GeneratingVector, m: Measure | None = None) -> bool:
        if self.g_fingerprint != g.fingerprint(self.dim):
            return False
        return m is None or self.measure_fingerprint == m.fingerprint()

    def to_text(self) -> str:
        lines = [
            MAGIC,
            f"s {self.dim} N {self.N} K {self.K} norm {self.norm}",
            "a " + " ".join(float(x).hex() for x in self.box.a),
            "b " + " ".join(float(x).hex() for x in self.box.b),
            f"measure {self.measure_fingerprint}",
            f"g {self.g_fingerprint}",
        ]
        lines += [float(x).hex() for x in self.weights]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "WeightTable":
        lines = text.splitlines()
        if not lines or lines[0].strip() != MAGIC:
            raise ValueError("not a weight table (bad magic)")
        head = lines[1].split()
        fields = dict(zip(head[0::2], head[1::2]))
        s, N, K = int(fields["s"]), int(fields["N"]), int(fields["K"])
        a = [float.fromhex(x) for x in lines[2].split()[1:]]
        b = [float.fromhex(x) for x in lines[3].split()[1:]]
        if len(a) != s or len(b) != s:
            raise ValueError("box bounds do not match the dimension")
        measure = lines[4].split()[1]
        gfp = lines[5].split()[1]
        weights = np.array([float.fromhex(x) for x in lines[6 : 6 + N]])
        return cls(Box(a, b), K, fields["norm"], measure, gfp, N, weights)

    def save(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(self.to_text(), encoding="ascii")
        tmp.replace(path)

    @classmethod
    def load(cls, path: str | Path) -> "WeightTable":
        return cls.from_text(Path(path).read_text(encoding="ascii"))


def build_weight_table(
    g: GeneratingVector,
    N: int,
    m: Measure,
    box: Box,
    K: int,
    norm: str = "l1",
    workers: int = 1,
    base: WeightTable | None = None,
) -> WeightTable:
    """Weights for every point of ``P_phi(g, N)``.

    If ``base`` holds the table for ``N / 2^j`` points of the same
    configuration, its weights are reused for the shared points
    (``n = n' 2^j``) and only the new points are computed.
    """
    if m.dim != box.dim:
        raise ValueError("measure and box dimensions differ")
    nums = rank1_numerators(g, N, box.dim)
    u = tent_transform(nums / N)
    weights = np.empty(N)
    todo = np.ones(N, dtype=bool)
    if base is not None:
        if base.N >= N or N % base.N or not base.matches(g, m):
            raise ValueError("base table is not a sub-table of this configuration")
        if base.K != K or base.norm != norm or base.box != box:
            raise ValueError("base table was built for a different kernel or box")
        stride = N // base.N
        weights[::stride] = base.weights
        todo[::stride] = False
    weights[todo] = kernel_weights_at(u[todo], m, box, K, norm, workers=workers)
    return WeightTable(box, K, norm, m.fingerprint(), g.fingerprint(box.dim), N, weights)


class WeightCache:
    """Directory of weight tables keyed by configuration fingerprint and ``N``."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def path(self, g, m, box, K, norm, N) -> Path:
        return self.directory / f"{config_fingerprint(g, m, box, K, norm)[:32]}_N{N}.wt"

    def get(self, g, N, m, box, K, norm="l1", workers=1) -> WeightTable:
        target = self.path(g, m, box, K, norm, N)
        if target.exists():
            return WeightTable.load(target)
        base = None
        smaller = N // 2
        while smaller >= 2 and N % smaller == 0:
            cand = self.path(g, m, box, K, norm, smaller)
            if cand.exists():
                base = WeightTable.load(cand)
                break
            smaller //= 2
        log.info("building weight table N=%d K=%d (reusing %s)", N, K, base and base.N)
        table = build_weight_table(g, N, m, box, K, norm, workers=workers, base=base)
        table.save(target)
        return table


def weight_table_chain(g, schedule, m, box, K, norm="l1", workers=1, cache=None):
    """Tables for an ascending power-of-two schedule, each extending the previous one."""
    tables = []
    prev = None
    for N in schedule:
        if cache is not None:
            table = cache.get(g, N, m, box, K, norm, workers)
        else:
            usable = prev is not None and N % prev.N == 0 and N > prev.N
            table = build_weight_table(
                g, N, m, box, K, norm, workers=workers, base=prev if usable else None
            )
        tables.append(table)
        prev = table
    return tables


def _evaluate(f, pts):
    vals = np.asarray(f(pts), dtype=float)
    if vals.shape != (pts.shape[0],):
        raise ValueError(f"integrand must return one value per point, got shape {vals.shape}")
    return check_finite(vals, pts)


def approximate_expectation(f, table: WeightTable, g: GeneratingVector, box: Box | None = None) -> float:
    """Online stage: ``(1/N) sum_n f(p_n) w_n`` with a correctly rounded sum.

    ``f`` receives the ``(N, s)`` array of box points.  The measure is not
    consulted here; everything it contributes lives in ``table``.
    """
    box = table.box if box is None else box
    if box != table.box:
        raise ValueError("box differs from the one the table was built for")
    if table.g_fingerprint != g.fingerprint(box.dim):
        raise ValueError("generating vector differs from the one the table was built for")
    pts = tent_lattice_box_points(g, table.N, box)
    vals = _evaluate(f, pts)
    return math.fsum((vals * table.weights).tolist()) / table.N


def qmc_uniform(f, g: GeneratingVector, N: int, box: Box, lebesgue: bool = False) -> float:
    """Plain tent-lattice average of ``f`` over ``box`` (all weights equal to one).

    With ``lebesgue=True`` the average is multiplied by the box volume, giving
    the Lebesgue integral over the box rather than the uniform expectation.
    """
    pts = tent_lattice_box_points(g, N, box)
    mean = math.fsum(_evaluate(f, pts).tolist()) / N
    return mean * box.volume if lebesgue else mean


def approximate_at_points(f, unit_points, weights, box: Box) -> float:
    """Weighted average for an arbitrary node set (used for cross-checks)."""
    pts = map_to_box(np.asarray(unit_points, dtype=float), box)
    vals = _evaluate(f, pts)
    return math.fsum((vals * np.asarray(weights)).tolist()) / len(weights)
