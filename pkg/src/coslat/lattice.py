"""Rank-1 lattice point sets, the tent transformation and box mapping.

Lattice coordinates are carried as integer numerators over a common
denominator ``N`` until the final division, so ``frac(n * g_j / N)`` is exact
for every supported ``N`` (products stay below 2**63).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

DEFAULT_VECTOR_RESOURCE = "kuo_lattice_33002_m20.txt"


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box ``[a_1, b_1] x ... x [a_s, b_s]``."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float)).copy()
        b = np.atleast_1d(np.asarray(self.b, dtype=float)).copy()
        if a.ndim != 1 or a.shape != b.shape or a.size == 0:
            raise ValueError("box bounds must be non-empty vectors of equal length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("box bounds must be finite")
        if np.any(a >= b):
            raise ValueError("box requires a_j < b_j in every dimension")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def cube(cls, s: int, lo: float, hi: float) -> "Box":
        return cls(np.full(s, float(lo)), np.full(s, float(hi)))

    @classmethod
    def centered(cls, s: int, length: float) -> "Box":
        """The box ``[-length/2, length/2]^s``."""
        return cls.cube(s, -0.5 * length, 0.5 * length)

    @property
    def dim(self) -> int:
        return self.a.size

    @property
    def width(self) -> np.ndarray:
        return self.b - self.a

    @property
    def volume(self) -> float:
        return float(np.prod(self.width))

    def __eq__(self, other):
        if not isinstance(other, Box):
            return NotImplemented
        return np.array_equal(self.a, other.a) and np.array_equal(self.b, other.b)

    def __hash__(self):
        return hash((self.a.tobytes(), self.b.tobytes()))

    def __repr__(self):
        return f"Box(a={self.a.tolist()}, b={self.b.tolist()})"

    def fingerprint(self) -> str:
        text = " ".join(x.hex() for x in np.concatenate([self.a, self.b]).tolist())
        return hashlib.sha256(text.encode()).hexdigest()


@dataclass(frozen=True, eq=False)
class GeneratingVector:
    """Integer generating vector of a rank-1 lattice.

    Parameters
    ----------
    components : array_like of int
        ``g_1, ..., g_{s_max}``; each must lie in ``[1, n_max - 1]``.
    n_max : int
        Largest point count the vector is meant for.
    source : str
        Free-form provenance note.
    """

    components: np.ndarray
    n_max: int
    source: str = field(default="custom", compare=False)

    def __post_init__(self):
        comps = np.atleast_1d(np.asarray(self.components))
        if comps.ndim != 1 or comps.size == 0:
            raise ValueError("generating vector needs at least one component")
        if not np.issubdtype(comps.dtype, np.integer):
            if not np.all(np.equal(np.mod(comps, 1), 0)):
                raise ValueError("generating vector components must be integers")
        comps = comps.astype(np.int64)
        n_max = int(self.n_max)
        if n_max < 2:
            raise ValueError("n_max must be at least 2")
        if n_max > 2**31:
            raise ValueError("n_max above 2**31 would overflow exact lattice arithmetic")
        bad = (comps < 1) | (comps > n_max - 1)
        if np.any(bad):
            raise ValueError(
                f"components outside [1, {n_max - 1}]: {comps[bad].tolist()}"
            )
        comps.setflags(write=False)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "n_max", n_max)

    @property
    def s_max(self) -> int:
        return self.components.size

    def take(self, s: int) -> np.ndarray:
        if s < 1 or s > self.s_max:
            raise ValueError(f"dimension {s} not available (vector has {self.s_max})")
        return self.components[:s]

    def fingerprint(self, s: int | None = None) -> str:
        comps = self.components if s is None else self.take(s)
        text = f"{self.n_max}:" + ",".join(str(int(c)) for c in comps)
        return hashlib.sha256(text.encode()).hexdigest()

    def __eq__(self, other):
        if not isinstance(other, GeneratingVector):
            return NotImplemented
        return self.n_max == other.n_max and np.array_equal(
            self.components, other.components
        )

    def __hash__(self):
        return hash((self.n_max, self.components.tobytes()))


def parse_generating_vector(text: str, source: str = "custom") -> GeneratingVector:
    """Parse the ``s_max n_max`` header plus one-component-per-line format."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty generating vector file")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError("first line must hold two integers: s_max n_max")
    try:
        s_max, n_max = int(header[0]), int(header[1])
        comps = [int(ln) for ln in lines[1:]]
    except ValueError as exc:
        raise ValueError(f"malformed generating vector file: {exc}") from None
    if len(comps) != s_max:
        raise ValueError(f"header announces {s_max} components, found {len(comps)}")
    return GeneratingVector(np.array(comps, dtype=np.int64), n_max, source=source)


def load_generating_vector(path: str | Path) -> GeneratingVector:
    path = Path(path)
    return parse_generating_vector(path.read_text(encoding="utf-8"), source=str(path))


def format_generating_vector(g: GeneratingVector) -> str:
    body = "\n".join(str(int(c)) for c in g.components)
    return f"{g.s_max} {g.n_max}\n{body}\n"


def default_generating_vector() -> GeneratingVector:
    """Kuo's embedded base-2 lattice vector (first 64 components, up to 2**20 points)."""
    text = resources.files("coslat.data").joinpath(DEFAULT_VECTOR_RESOURCE).read_text(
        encoding="utf-8"
    )
    return parse_generating_vector(text, source="kuo lattice-33002-1024-1048576")


def _check_n(g: GeneratingVector, N: int) -> int:
    N = int(N)
    if N < 2:
        raise ValueError("a lattice rule needs N >= 2 points")
    if N > g.n_max:
        raise ValueError(f"N={N} exceeds the vector's n_max={g.n_max}")
    return N


def rank1_numerators(g: GeneratingVector, N: int, s: int) -> np.ndarray:
    """Integer numerators ``(n * g_j) mod N`` of shape ``(N, s)``."""
    N = _check_n(g, N)
    comps = g.take(s)
    n = np.arange(N, dtype=np.int64)
    return (n[:, None] * comps[None, :]) % N


def generate_rank1_points(g: GeneratingVector, N: int, s: int) -> np.ndarray:
    """Points ``{n g / N}``, ``0 <= n < N``, as an ``(N, s)`` array in ``[0, 1)``."""
    return rank1_numerators(g, N, s) / N


def tent_transform(p):
    """Componentwise tent map ``1 - |2 p - 1|``."""
    p = np.asarray(p, dtype=float)
    return 1.0 - np.abs(2.0 * p - 1.0)


def map_to_box(p, box: Box) -> np.ndarray:
    """Affine map from the unit cube onto ``box``; works on a point or an array of points."""
    p = np.asarray(p, dtype=float)
    if p.shape[-1:] != (box.dim,):
        raise ValueError(f"point dimension {p.shape[-1:]} does not match box dimension {box.dim}")
    return p * box.width + box.a


def tent_lattice_points(g: GeneratingVector, N: int, s: int) -> np.ndarray:
    """Tent-transformed lattice points in the unit cube."""
    return tent_transform(generate_rank1_points(g, N, s))


def tent_lattice_box_points(g: GeneratingVector, N: int, box: Box) -> np.ndarray:
    """The quadrature nodes ``phi({n g / N}) * (b - a) + a``."""
    return map_to_box(tent_lattice_points(g, N, box.dim), box)


def bit_reverse(n, m: int):
    """Reverse the lowest ``m`` bits of each entry of ``n``."""
    n = np.asarray(n, dtype=np.int64)
    out = np.zeros_like(n)
    work = n.copy()
    for _ in range(m):
        out = (out << 1) | (work & 1)
        work >>= 1
    return out


def extensible_numerators(g: GeneratingVector, n, m: int, s: int) -> np.ndarray:
    """Numerators over ``2**m`` of the radical-inverse ordered lattice sequence."""
    n = np.atleast_1d(np.asarray(n, dtype=np.int64))
    if m < 0 or 2**m > g.n_max:
        raise ValueError(f"2**m must not exceed n_max={g.n_max}")
    if np.any(n < 0) or np.any(n >= 2**m):
        raise ValueError(f"point index out of range [0, 2**{m})")
    comps = g.take(s)
    rev = bit_reverse(n, m)
    return (rev[:, None] * comps[None, :]) % (2**m)


def extensible_point(g: GeneratingVector, n: int, m: int, s: int | None = None) -> np.ndarray:
    """Point ``n`` of the base-2 extensible sequence: ``frac(phi_2(n) * g)``.

    The first ``2**k`` points (``k <= m``) form ``P(g, 2**k)`` as a set.
    """
    s = g.s_max if s is None else s
    return extensible_numerators(g, [n], m, s)[0] / 2**m


def extensible_points(g: GeneratingVector, count: int, m: int, s: int) -> np.ndarray:
    return extensible_numerators(g, np.arange(count), m, s) / 2**m
