"""Command-line driver: convergence tables as CSV, plus a JSON diagnostics report.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bounds import enumerate_dual_lattice, theorem1_bound, truncation_tail_bound
from .cosine_space import SmoothnessParams, cos_space_norm_sq
from .errors import EvaluationError, TruncationError, UnsupportedError
from .integrator import WeightCache, approximate_expectation, build_weight_table, qmc_uniform, weight_table_chain
from .lattice import Box, GeneratingVector, default_generating_vector, load_generating_vector
from .measures import AsymmetricLaplace, MultivariateNormal, UniformOnBox, decay_bound_check
from .testlab import (
    TestFunction,
    alternating_box,
    cosine_polynomial_coefficients,
    laplace_bilinear_reference,
    normal_reference,
    random_cosine_polynomial,
    uniform_reference,
)
from .wavelet import wavelet_expectation_2d, wavelet_n_prime

log = logging.getLogger("coslat")

EXPERIMENTS = ("uniform", "normal", "domain-sweep", "kernel-sweep", "laplace-compare", "diagnostics")
CSV_HEADER = "experiment,s,N,K,L,approx,reference,abs_error,seconds"

LAPLACE_MU = (0.3, -0.1)
LAPLACE_SIGMA = ((0.25, -0.15), (-0.15, 0.75))
NORMAL_SD = 0.5

_DEFAULTS = {
    "uniform": dict(s=2, w=0.5, n_min_log2=1, n_max_log2=18),
    "normal": dict(s=2, w=0.9, K=[128], L=[9.0], n_min_log2=4, n_max_log2=14),
    "domain-sweep": dict(s=2, w=0.9, K=[128], L=[1.0, 3.0, 5.0, 7.0, 9.0, 11.0, 13.0], n_min_log2=4, n_max_log2=14),
    "kernel-sweep": dict(s=2, w=0.9, K=[8, 16, 32, 64, 128, 256, 512], L=[9.0], n_min_log2=4, n_max_log2=14),
    "laplace-compare": dict(s=2, K=[64], n_min_log2=4, n_max_log2=14),
    "diagnostics": dict(s=2, K=[64], n_max_log2=6),
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    s: int = 2
    w: float = 0.5
    K: list = field(default_factory=lambda: [128])
    L: list = field(default_factory=lambda: [9.0])
    n_min_log2: int = 1
    n_max_log2: int = 14
    vector_file: str | None = None
    cache_dir: str | None = None
    out: str | None = None
    plot_data: str | None = None
    workers: int = 1
    seed: int = 0

    def schedule(self) -> list:
        return [2**k for k in range(self.n_min_log2, self.n_max_log2 + 1)]

    def validate(self, g: GeneratingVector) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.s < 1 or self.s > g.s_max:
            raise ConfigError(f"s={self.s} outside [1, {g.s_max}] for this vector")
        if any(int(k) != k or k < 0 for k in self.K):
            raise ConfigError("K values must be nonnegative integers")
        if any(not x > 0 for x in self.L):
            raise ConfigError("L values must be positive")
        if not 1 <= self.n_min_log2 <= self.n_max_log2:
            raise ConfigError("need 1 <= n_min_log2 <= n_max_log2")
        if 2**self.n_max_log2 > g.n_max:
            raise ConfigError(f"2^{self.n_max_log2} exceeds the vector's n_max={g.n_max}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.experiment in ("uniform", "normal", "domain-sweep", "kernel-sweep") and not 0 < self.w <= 1:
            raise ConfigError("w must lie in (0, 1]")
        if self.experiment in ("domain-sweep", "kernel-sweep", "laplace-compare") and self.s != 2:
            raise ConfigError(f"{self.experiment} is a two-dimensional experiment")


@dataclass
class ResultRow:
    experiment: str
    s: int
    N: int
    K: int | None
    L: float | None
    approx: float
    reference: float
    seconds: float

    @property
    def abs_error(self) -> float:
        return abs(self.approx - self.reference)

    def to_csv(self) -> str:
        k = "" if self.K is None else str(self.K)
        l_ = "" if self.L is None else repr(float(self.L))
        return (
            f"{self.experiment},{self.s},{self.N},{k},{l_},"
            f"{self.approx:.16e},{self.reference:.16e},{self.abs_error:.5e},{self.seconds:.3f}"
        )


def _cache(cfg):
    return WeightCache(cfg.cache_dir) if cfg.cache_dir else None


def run_uniform(cfg: ExperimentConfig, g: GeneratingVector) -> list:
    box = alternating_box(cfg.s)
    f = TestFunction.f1(cfg.s, cfg.w)
    ref = uniform_reference(cfg.s, cfg.w)
    rows = []
    for N in cfg.schedule():
        t0 = time.perf_counter()
        val = qmc_uniform(f, g, N, box, lebesgue=True)
        rows.append(ResultRow("uniform", cfg.s, N, None, None, val, ref, time.perf_counter() - t0))
    return rows


def _normal_rows(cfg, g, tag, K, L):
    s = cfg.s
    box = Box.centered(s, L)
    m = MultivariateNormal.isotropic(s, NORMAL_SD)
    f = TestFunction.f1(s, cfg.w)
    ref = normal_reference(s, cfg.w, NORMAL_SD)
    if K < 64:
        log.warning("K=%d: kernel truncation bias is likely to dominate the error", K)
    rows = []
    t0 = time.perf_counter()
    for table in weight_table_chain(g, cfg.schedule(), m, box, K, workers=cfg.workers, cache=_cache(cfg)):
        val = approximate_expectation(f, table, g)
        now = time.perf_counter()
        rows.append(ResultRow(tag, s, table.N, K, L, val, ref, now - t0))
        t0 = now
    return rows


def run_normal(cfg, g):
    return [r for K in cfg.K for L in cfg.L for r in _normal_rows(cfg, g, "normal", int(K), float(L))]


def run_domain_sweep(cfg, g):
    return [r for L in cfg.L for r in _normal_rows(cfg, g, "domain-sweep", int(cfg.K[0]), float(L))]


def run_kernel_sweep(cfg, g):
    return [r for K in cfg.K for r in _normal_rows(cfg, g, "kernel-sweep", int(K), float(cfg.L[0]))]


def laplace_setup():
    m = AsymmetricLaplace(np.array(LAPLACE_MU), np.array(LAPLACE_SIGMA))
    mu, sig = m.mu_bar, m.sigma
    box = Box([mu[0] - 20 * sig[0, 0], mu[1] - 20 * sig[1, 1]], [mu[0] + 20 * sig[0, 0], mu[1] + 20 * sig[1, 1]])
    return m, box


def run_laplace_compare(cfg, g):
    """Paired rows per N; on wavelet rows the K column holds the order ``N'``."""
    m, box = laplace_setup()
    f = TestFunction.bilinear()
    ref = laplace_bilinear_reference(m)
    K = int(cfg.K[0])
    rows = []
    t0 = time.perf_counter()
    for table in weight_table_chain(g, cfg.schedule(), m, box, K, workers=cfg.workers, cache=_cache(cfg)):
        val = approximate_expectation(f, table, g)
        now = time.perf_counter()
        rows.append(ResultRow("laplace-lattice", 2, table.N, K, None, val, ref, now - t0))
        n_prime = wavelet_n_prime(table.N)
        wval = wavelet_expectation_2d(f, m, box, n_prime)
        t0 = time.perf_counter()
        rows.append(ResultRow("laplace-wavelet", 2, table.N, n_prime, None, wval, ref, t0 - now))
    return rows


def _bound_section(cfg, g):
    """Lattice error bound against a measured error for a random cosine polynomial."""
    s = min(cfg.s, 3)
    N = 2**cfg.n_max_log2
    rng = np.random.default_rng(cfg.seed)
    box = Box(-rng.uniform(0.5, 2.0, s), rng.uniform(0.5, 2.0, s))
    modes = {tuple([0] * s)}
    # two short dual-lattice vectors, so the rule has something to miss
    dual = enumerate_dual_lattice(g, N, s, N).points
    order = np.argsort(np.abs(dual).max(axis=1), kind="stable")
    for h in dual[order]:
        if len(modes) >= 3:
            break
        modes.add(tuple(int(abs(x)) for x in h))
    while len(modes) < 6:
        modes.add(tuple(int(x) for x in rng.integers(0, N + 1, s)))
    f, coef = random_cosine_polynomial(rng, box, sorted(modes))
    exact = coef[tuple([0] * s)]
    m = UniformOnBox(box)
    table = build_weight_table(g, N, m, box, int(cfg.K[0]))
    measured = abs(approximate_expectation(f, table, g) - exact)
    params = SmoothnessParams(2.0, [1.0] * s, beta=s + 1.0, rho=[1.0] * s)
    max_mode = max(max(k) for k in modes)
    norm = math.sqrt(cos_space_norm_sq(cosine_polynomial_coefficients(box, coef), params))
    H = max(1, max_mode)
    while True:
        try:
            rep = theorem1_bound(g, N, params, H, norm)
            break
        except TruncationError:
            if H > 4096:
                raise
            H *= 2
    out = rep.summary()
    out.update(measured_error=measured, dominated=bool(measured <= rep.value), s=s, N=N)
    return out


def run_diagnostics(cfg, g) -> dict:
    report = {"theorem1": _bound_section(cfg, g)}
    m, box = laplace_setup()
    params = SmoothnessParams(1.0, [1.0, 1.0], beta=2.0, rho=[1.0, 1.0])
    dec = decay_bound_check(m, box, params, int(cfg.K[0]))
    lap = dec.summary()
    beta = dec.fitted_beta
    if beta > 2:
        lap["truncation_bound"] = truncation_tail_bound(2, int(cfg.K[0]), beta, [dec.fitted_rho] * 2, 1.0)
    else:
        lap["truncation_bound"] = None
        lap["note"] = "fitted decay beta <= s: the truncation bound does not apply"
    report["laplace_decay"] = lap
    s = cfg.s
    nbox = Box.centered(s, 9.0)
    nm = MultivariateNormal.isotropic(s, NORMAL_SD)
    ndec = decay_bound_check(nm, nbox, SmoothnessParams(1.0, [1.0] * s, beta=s + 1.0, rho=[1.0] * s), 32)
    nrep = ndec.summary()
    f = TestFunction.f1(s, cfg.w if 0 < cfg.w <= 1 else 0.9)
    avg = qmc_uniform(lambda y: np.abs(f(y)), g, 2**12, nbox)
    nrep["truncation_bound"] = truncation_tail_bound(s, 128, s + 1.0, [max(ndec.tightest_rho, 1e-300)] * s, avg)
    nrep["truncation_bound_params"] = {"K": 128, "beta": s + 1.0, "rho": ndec.tightest_rho, "avg_abs_f": avg}
    report["normal_decay"] = nrep
    return report


RUNNERS = {
    "uniform": run_uniform,
    "normal": run_normal,
    "domain-sweep": run_domain_sweep,
    "kernel-sweep": run_kernel_sweep,
    "laplace-compare": run_laplace_compare,
}


def format_csv(rows) -> str:
    return "\n".join([CSV_HEADER] + [r.to_csv() for r in rows]) + "\n"


def format_plot_data(rows) -> str:
    lines = ["experiment,log10_N,log10_abs_error"]
    for r in rows:
        if r.abs_error > 0:
            lines.append(f"{r.experiment},{math.log10(r.N):.6f},{math.log10(r.abs_error):.6f}")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coslat", description=__doc__.splitlines()[0])
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="JSON file with the same keys (flags win)")
    p.add_argument("--s", type=int)
    p.add_argument("--w", type=float)
    p.add_argument("--K", type=int, nargs="+")
    p.add_argument("--L", type=float, nargs="+")
    p.add_argument("--n-min-log2", type=int)
    p.add_argument("--n-max-log2", type=int)
    p.add_argument("--vector-file")
    p.add_argument("--cache-dir")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--plot-data", help="write (log10 N, log10 |error|) pairs here")
    p.add_argument("--workers", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


_KEYS = ("experiment", "s", "w", "K", "L", "n_min_log2", "n_max_log2", "vector_file", "cache_dir", "out", "plot_data", "workers", "seed")


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    merged = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(k.replace("-", "_") for k in data) - set(_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        merged.update({k.replace("-", "_"): v for k, v in data.items()})
    for key in _KEYS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    exp = merged.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError("an --experiment is required" if exp is None else f"unknown experiment {exp!r}")
    full = dict(_DEFAULTS[exp])
    full.update(merged)
    for key in ("K", "L"):
        if key in full and not isinstance(full[key], list):
            full[key] = [full[key]]
    try:
        cfg = ExperimentConfig(**full)
        cfg = replace(
            cfg,
            s=int(cfg.s),
            w=float(cfg.w),
            K=[int(k) for k in cfg.K],
            L=[float(x) for x in cfg.L],
            n_min_log2=int(cfg.n_min_log2),
            n_max_log2=int(cfg.n_max_log2),
            workers=int(cfg.workers),
            seed=int(cfg.seed),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    return cfg


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        g = load_generating_vector(cfg.vector_file) if cfg.vector_file else default_generating_vector()
        cfg.validate(g)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"coslat: configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        if cfg.experiment == "diagnostics":
            _emit(json.dumps(run_diagnostics(cfg, g), indent=2, default=float) + "\n", cfg.out)
            return 0
        rows = RUNNERS[cfg.experiment](cfg, g)
    except (EvaluationError, TruncationError, UnsupportedError, FloatingPointError, ArithmeticError) as exc:
        print(f"coslat: numerical failure: {exc}", file=sys.stderr)
        return 3
    _emit(format_csv(rows), cfg.out)
    if cfg.plot_data:
        Path(cfg.plot_data).write_text(format_plot_data(rows))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
