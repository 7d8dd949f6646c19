"""Ring networks used for the oscillator ensembles.

Two families share the same ring geometry (1-based node ids, periodic
boundary):

* :class:`WattsStrogatzGraph` - sparse, unweighted, undirected edge set
  obtained by rewiring a k-nearest-neighbour ring with probability ``p``.
* :class:`DistanceDependentProfile` - implicit all-to-all circulant coupling
  whose weight decays as ``d**-alpha`` with the ring distance ``d``.

Both expose ``n``, ``weight(i, j)``, ``neighbors(i)`` and ``adjacency()`` so
downstream code can treat them uniformly, and both are immutable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Union

import numpy as np

__all__ = [
    "edge_distance",
    "eta",
    "dd_weight",
    "DistanceDependentProfile",
    "WattsStrogatzGraph",
    "generate_ws",
    "KappaReport",
    "kappa_ws",
    "kappa_graph",
    "kappa_dd",
    "TopologySpec",
    "save_edge_list",
    "load_edge_list",
    "save_profile",
    "load_profile",
]


def half_ring(n: int) -> int:
    """Largest ring distance, ``(n - 1) // 2``."""
    return (n - 1) // 2


def edge_distance(i: int, j: int, n: int) -> int:
    """Ring distance ``min(|i-j|, n-|i-j|)`` between 1-based nodes ``i`` and ``j``."""
    if not (1 <= i <= n and 1 <= j <= n):
        raise ValueError(f"node ids must lie in [1, {n}], got ({i}, {j})")
    if i == j:
        raise ValueError("edge distance is undefined for a node and itself")
    a = abs(i - j)
    return min(a, n - a)


def _check_odd(n: int) -> None:
    if n < 3 or n % 2 == 0:
        raise ValueError(
            f"distance-dependent networks need an odd N >= 3 so that (N-1)/2 is integral, got N={n}"
        )


def _power_terms(alpha: float, n_half: int) -> np.ndarray:
    j = np.arange(1, n_half + 1, dtype=float)
    return j ** (-float(alpha))


def eta(alpha: float, n: int) -> float:
    """Normalisation ``sum_{j=1}^{N'} 2 / j**alpha`` of the distance-dependent weights."""
    _check_odd(n)
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    return 2.0 * math.fsum(_power_terms(alpha, half_ring(n)))


@dataclass(frozen=True)
class DistanceDependentProfile:
    """Circulant all-to-all coupling with weights ``1 / (eta(alpha) d**alpha)``."""

    n: int
    alpha: float

    def __post_init__(self):
        _check_odd(self.n)
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")

    family = "dd"

    @property
    def n_half(self) -> int:
        return half_ring(self.n)

    @cached_property
    def eta(self) -> float:
        return eta(self.alpha, self.n)

    @cached_property
    def weights(self) -> np.ndarray:
        """Length-N' vector, entry ``d-1`` is the weight at ring distance ``d``."""
        w = _power_terms(self.alpha, self.n_half) / self.eta
        w.flags.writeable = False
        return w

    @cached_property
    def kernel(self) -> np.ndarray:
        """Length-N circulant row: ``kernel[m]`` couples node i to node i+m (mod N)."""
        row = np.zeros(self.n)
        row[1 : self.n_half + 1] = self.weights
        row[self.n_half + 1 :] = self.weights[::-1]
        row.flags.writeable = False
        return row

    def weight(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        return dd_weight(edge_distance(i, j, self.n), self)

    def neighbors(self, i: int) -> np.ndarray:
        """Nearest ring neighbours (distance 1); every node is coupled, these are the strongest links."""
        if not 1 <= i <= self.n:
            raise ValueError(f"node id {i} outside [1, {self.n}]")
        return np.array([(i - 2) % self.n + 1, i % self.n + 1])

    def adjacency(self) -> np.ndarray:
        idx = np.arange(self.n)
        return self.kernel[(idx[None, :] - idx[:, None]) % self.n]

    def describe(self) -> dict:
        return {"family": "dd", "N": self.n, "alpha": self.alpha}


def dd_weight(d: int, profile: DistanceDependentProfile) -> float:
    """Weight of a link at ring distance ``d`` under ``profile``."""
    if not 1 <= d <= profile.n_half:
        raise ValueError(f"distance {d} outside [1, {profile.n_half}]")
    return float(profile.weights[d - 1])


@dataclass(frozen=True, eq=False)
class WattsStrogatzGraph:
    """Undirected Watts-Strogatz ring.

    ``edges`` is a ``(k*N, 2)`` array of 1-based node ids with ``i < j`` in each
    row, sorted lexicographically. ``n_rewired`` counts rewiring events.
    """

    n: int
    k: int
    p: float
    seed: int | None
    edges: np.ndarray = field(repr=False)
    n_rewired: int = 0

    family = "ws"

    def __post_init__(self):
        self.edges.flags.writeable = False

    def __eq__(self, other):
        if not isinstance(other, WattsStrogatzGraph):
            return NotImplemented
        return (self.n, self.k, self.p, self.seed) == (other.n, other.k, other.p, other.seed) and \
            np.array_equal(self.edges, other.edges)

    __hash__ = None

    @cached_property
    def edge_index(self) -> tuple[np.ndarray, np.ndarray]:
        """0-based contiguous ``(src, dst)`` arrays for the dynamics kernels."""
        e = np.ascontiguousarray(self.edges.T - 1, dtype=np.int64)
        return e[0].copy(), e[1].copy()

    @cached_property
    def _edge_set(self) -> frozenset:
        return frozenset(map(tuple, self.edges.tolist()))

    @cached_property
    def _adjacency_lists(self) -> tuple[np.ndarray, ...]:
        nbrs = [[] for _ in range(self.n)]
        for a, b in self.edges.tolist():
            nbrs[a - 1].append(b)
            nbrs[b - 1].append(a)
        return tuple(np.array(sorted(x), dtype=np.int64) for x in nbrs)

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self._edge_set

    def weight(self, i: int, j: int) -> float:
        return 1.0 if i != j and self.has_edge(i, j) else 0.0

    def neighbors(self, i: int) -> np.ndarray:
        if not 1 <= i <= self.n:
            raise ValueError(f"node id {i} outside [1, {self.n}]")
        return self._adjacency_lists[i - 1]

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel() - 1, minlength=self.n)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        src, dst = self.edge_index
        a[src, dst] = 1.0
        a[dst, src] = 1.0
        return a

    def describe(self) -> dict:
        return {"family": "ws", "N": self.n, "k": self.k, "p": self.p, "seed": self.seed}


Topology = Union[WattsStrogatzGraph, DistanceDependentProfile]


def generate_ws(n: int, k: int, p: float, seed: int | None) -> WattsStrogatzGraph:
    """Rewire a k-nearest-neighbour ring.

    Edges ``(u, u+j)`` are visited for ``j = 1..k`` and, within each ``j``, for
    ``u = 1..N``. With probability ``p`` the clockwise endpoint is replaced by
    a uniformly drawn node, redrawing until the new edge is neither a
    self-loop nor a duplicate. Nodes already linked to every other node keep
    their edge.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if n < 2 * k + 1:
        raise ValueError(f"need N >= 2k+1 for a simple k-nearest-neighbour ring, got N={n}, k={k}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"rewiring probability must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    nbrs = [set() for _ in range(n)]
    for j in range(1, k + 1):
        for u in range(n):
            v = (u + j) % n
            nbrs[u].add(v)
            nbrs[v].add(u)
    rewired = 0
    for j in range(1, k + 1):
        for u in range(n):
            if rng.random() >= p:
                continue
            v = (u + j) % n
            if v not in nbrs[u] or len(nbrs[u]) >= n - 1:
                continue
            w = int(rng.integers(n))
            while w == u or w in nbrs[u]:
                w = int(rng.integers(n))
            nbrs[u].discard(v)
            nbrs[v].discard(u)
            nbrs[u].add(w)
            nbrs[w].add(u)
            rewired += 1
    pairs = sorted((u + 1, v + 1) for u in range(n) for v in nbrs[u] if u < v)
    edges = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    return WattsStrogatzGraph(n=n, k=k, p=float(p), seed=seed, edges=edges, n_rewired=rewired)


@dataclass(frozen=True)
class KappaReport:
    """Short-range (``k_s``) versus long-range (``k_l``) influence and their ratio."""

    k_s: float
    k_l: float
    kappa: float
    d: int = 2


def kappa_ws(p: float) -> float:
    """Analytic approximation ``1 - 2p`` for Watts-Strogatz rings."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"rewiring probability must lie in [0, 1], got {p}")
    return 1.0 - 2.0 * p


def kappa_graph(graph: WattsStrogatzGraph, d: int = 2) -> KappaReport:
    """Empirical ratio from counting edges shorter/longer than ``d`` (mean degrees)."""
    a, b = graph.edges[:, 0], graph.edges[:, 1]
    dist = np.minimum(np.abs(a - b), graph.n - np.abs(a - b))
    n_short = int(np.count_nonzero(dist <= d))
    n_long = len(dist) - n_short
    k_s = 2.0 * n_short / graph.n
    k_l = 2.0 * n_long / graph.n
    return KappaReport(k_s=k_s, k_l=k_l, kappa=(k_s - k_l) / (k_s + k_l), d=d)


def kappa_dd(alpha: float, n: int, d: int = 2) -> KappaReport:
    _check_odd(n)
    n_half = half_ring(n)
    if not 1 <= d < n_half:
        raise ValueError(f"short-range cutoff d must satisfy 1 <= d < {n_half}, got {d}")
    terms = _power_terms(alpha, n_half)
    short = math.fsum(terms[:d])
    long_ = math.fsum(terms[d:])
    total = short + long_
    # 2/eta = 1/total
    return KappaReport(k_s=short / total, k_l=long_ / total, kappa=(short - long_) / total, d=d)


@dataclass(frozen=True)
class TopologySpec:
    """Picklable recipe for a topology; ``build()`` is cached per process."""

    family: str
    n: int
    k: int = 2
    p: float = 0.0
    alpha: float = 0.0
    seed: int | None = 0

    def __post_init__(self):
        if self.family not in ("ws", "dd"):
            raise ValueError(f"unknown topology family {self.family!r} (expected 'ws' or 'dd')")
        if self.family == "dd":
            _check_odd(self.n)

    def build(self) -> Topology:
        return _build(self)

    def describe(self) -> dict:
        if self.family == "ws":
            return {"family": "ws", "N": self.n, "k": self.k, "p": self.p, "seed": self.seed}
        return {"family": "dd", "N": self.n, "alpha": self.alpha}

    def to_dict(self) -> dict:
        return {"family": self.family, "n": self.n, "k": self.k, "p": self.p,
                "alpha": self.alpha, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> TopologySpec:
        return cls(**d)


_BUILD_CACHE: dict[TopologySpec, Topology] = {}


def _build(spec: TopologySpec) -> Topology:
    topo = _BUILD_CACHE.get(spec)
    if topo is None:
        if spec.family == "ws":
            topo = generate_ws(spec.n, spec.k, spec.p, spec.seed)
        else:
            topo = DistanceDependentProfile(spec.n, spec.alpha)
        if len(_BUILD_CACHE) > 64:
            _BUILD_CACHE.clear()
        _BUILD_CACHE[spec] = topo
    return topo


def save_edge_list(graph: WattsStrogatzGraph, path) -> None:
    lines = [f"# N={graph.n} k={graph.k} p={graph.p!r} seed={graph.seed}"]
    lines += [f"{a} {b}" for a, b in graph.edges.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def load_edge_list(path) -> WattsStrogatzGraph:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("#"):
        raise ValueError(f"{path}: missing '# N=.. k=.. p=.. seed=..' header")
    meta = dict(tok.split("=", 1) for tok in text[0][1:].split())
    seed = None if meta["seed"] == "None" else int(meta["seed"])
    rows = [tuple(map(int, ln.split())) for ln in text[1:] if ln.strip()]
    edges = np.array(rows, dtype=np.int64).reshape(-1, 2)
    return WattsStrogatzGraph(n=int(meta["N"]), k=int(meta["k"]), p=float(meta["p"]), seed=seed, edges=edges)


def save_profile(profile: DistanceDependentProfile, path) -> None:
    lines = [f"# N={profile.n} alpha={profile.alpha!r}", "distance,weight"]
    lines += [f"{d},{w!r}" for d, w in enumerate(profile.weights.tolist(), start=1)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_profile(path) -> DistanceDependentProfile:
    text = Path(path).read_text().splitlines()
    meta = dict(tok.split("=", 1) for tok in text[0][1:].split())
    profile = DistanceDependentProfile(int(meta["N"]), float(meta["alpha"]))
    stored = np.array([float(ln.split(",")[1]) for ln in text[2:] if ln.strip()])
    if not np.array_equal(stored, profile.weights):
        raise ValueError(f"{path}: stored weights do not match N={profile.n}, alpha={profile.alpha}")
    return profile
