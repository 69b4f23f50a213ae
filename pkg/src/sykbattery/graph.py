"""Majorana interaction graphs and block connectivity.

Vertices are Majorana indices 0..N-1 (vertex ``v`` hosts Majorana ``v + 1``
in the 1-based Jordan-Wigner labelling of :mod:`sykbattery.spinrep`).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Optional

import numpy as np

Edge = tuple[int, int]

#: Number of replacement endpoints drawn for one rewiring before the edge is kept.
MAX_REWIRE_RETRIES = 64


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class MajoranaGraph:
    n_vertices: int
    edges: tuple[Edge, ...]
    construction_tag: str = "custom"
    params: Optional[dict] = field(default=None, compare=False)
    seed: Optional[int] = None

    def __post_init__(self):
        n = self.n_vertices
        if n < 2 or n % 2:
            raise GraphError(f"number of Majoranas must be even and >= 2, got {n}")
        canon = []
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise GraphError(f"self-loop at vertex {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise GraphError(f"edge ({i}, {j}) out of range for N={n}")
            canon.append((min(i, j), max(i, j)))
        canon.sort()
        if len(set(canon)) != len(canon):
            raise GraphError("duplicate edge")
        object.__setattr__(self, "edges", tuple(canon))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def average_degree(self) -> Fraction:
        return Fraction(2 * self.n_edges, self.n_vertices)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_vertices, dtype=np.int64)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n_vertices, self.n_vertices), dtype=np.int64)
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1
        return a

    def neighbors(self) -> list[set[int]]:
        nb: list[set[int]] = [set() for _ in range(self.n_vertices)]
        for i, j in self.edges:
            nb[i].add(j)
            nb[j].add(i)
        return nb

    def is_connected(self) -> bool:
        return _connected(self.neighbors())

    def to_text(self) -> str:
        lines = [f"{self.n_vertices} {self.n_edges}"]
        lines += [f"{i} {j}" for i, j in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MajoranaGraph":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not rows or len(rows[0]) != 2:
            raise GraphError("missing 'N n_E' header line")
        n, n_e = (int(x) for x in rows[0])
        edges = []
        for row in rows[1:]:
            if len(row) != 2:
                raise GraphError(f"malformed edge line: {' '.join(row)!r}")
            edges.append((int(row[0]), int(row[1])))
        if len(edges) != n_e:
            raise GraphError(f"header declares {n_e} edges, found {len(edges)}")
        return cls(n, tuple(edges), construction_tag="file")

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "MajoranaGraph":
        return cls.from_text(Path(path).read_text())


def _connected(nb: list[set[int]]) -> bool:
    n = len(nb)
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        u = queue.popleft()
        for w in nb[u]:
            if not seen[w]:
                seen[w] = True
                count += 1
                queue.append(w)
    return count == n


def _check_even(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < 2 or n % 2:
        raise GraphError(f"number of Majoranas must be an even integer >= 2, got {n!r}")


def _check_ring(n: int, kappa: int) -> None:
    _check_even(n)
    if kappa < 2 or kappa % 2 or kappa >= n:
        raise GraphError(f"kappa must be even with 2 <= kappa < N, got kappa={kappa}, N={n}")


def complete_graph(n: int) -> MajoranaGraph:
    _check_even(n)
    edges = tuple((i, j) for i in range(n) for j in range(i + 1, n))
    return MajoranaGraph(n, edges, "complete")


def _ring_edges(n: int, kappa: int) -> list[Edge]:
    # vertex-major order: (u, u+1), ..., (u, u+kappa/2)
    return [(u, (u + off) % n) for u in range(n) for off in range(1, kappa // 2 + 1)]


def ring_graph(n: int, kappa: int) -> MajoranaGraph:
    _check_ring(n, kappa)
    return MajoranaGraph(n, tuple(_ring_edges(n, kappa)), "ring", {"kappa": kappa, "p": 0.0})


def watts_strogatz(n: int, kappa: int, p: float, seed: int) -> MajoranaGraph:
    """Connected Watts-Strogatz rewiring of ``ring_graph(n, kappa)``.

    Ring edges ``(u, u + off)`` are visited vertex-major; each is rewired with
    probability ``p`` by moving its far endpoint to a uniform random vertex.
    A candidate creating a self-loop or duplicate, or disconnecting the graph,
    is redrawn up to ``MAX_REWIRE_RETRIES`` times, after which the edge stays.
    The RNG is numpy's PCG64 seeded with ``seed``.
    """
    _check_ring(n, kappa)
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"rewiring probability must lie in [0, 1], got {p}")
    params = {"kappa": kappa, "p": float(p)}
    if p == 0.0:
        return MajoranaGraph(n, tuple(_ring_edges(n, kappa)), "watts_strogatz", params, seed)

    rng = np.random.default_rng(seed)
    nb: list[set[int]] = [set() for _ in range(n)]
    for u, v in _ring_edges(n, kappa):
        nb[u].add(v)
        nb[v].add(u)

    for u, v in _ring_edges(n, kappa):
        if rng.random() >= p:
            continue
        for _ in range(MAX_REWIRE_RETRIES):
            w = int(rng.integers(n))
            if w == u or w in nb[u]:
                continue
            nb[u].discard(v)
            nb[v].discard(u)
            nb[u].add(w)
            nb[w].add(u)
            if _connected(nb):
                break
            nb[u].discard(w)
            nb[w].discard(u)
            nb[u].add(v)
            nb[v].add(u)

    edges = tuple((i, j) for i in range(n) for j in nb[i] if i < j)
    return MajoranaGraph(n, edges, "watts_strogatz", params, seed)


def star_graph(n: int) -> MajoranaGraph:
    _check_even(n)
    return MajoranaGraph(n, tuple((0, j) for j in range(1, n)), "star")


def boundary_count(g: MajoranaGraph, k: int) -> int:
    """Number of edges with exactly one endpoint in the block {0, ..., k-1}."""
    if not 1 <= k <= g.n_vertices:
        raise GraphError(f"block size must satisfy 1 <= k <= {g.n_vertices}, got {k}")
    return sum((i < k) != (j < k) for i, j in g.edges)


def block_connectivity(g: MajoranaGraph, k: int) -> Fraction:
    """Connectivity g_k of the canonical block {0, ..., k-1}: boundary edges / d."""
    count = boundary_count(g, k)
    if g.n_edges == 0:
        return Fraction(0)
    return count / g.average_degree


@dataclass(frozen=True)
class ConnectivityProfile:
    d: Fraction
    g: dict[int, Fraction]

    @property
    def n(self) -> int:
        return max(self.g)

    def as_array(self) -> np.ndarray:
        """Float array ``a`` with ``a[k - 1] == g_k`` for k = 1..N."""
        return np.array([float(self.g[k]) for k in range(1, self.n + 1)])


def connectivity_profile(g: MajoranaGraph) -> ConnectivityProfile:
    n = g.n_vertices
    # running boundary count: adding vertex k-1 to the block flips its edges
    nb = g.neighbors()
    inside = [False] * n
    count = 0
    d = g.average_degree
    gk = {}
    for k in range(1, n + 1):
        v = k - 1
        inside[v] = True
        for w in nb[v]:
            count += -1 if inside[w] else 1
        gk[k] = count / d if d else Fraction(0)
    return ConnectivityProfile(d, gk)


def ensemble_connectivity(
    generator: Callable[[int], MajoranaGraph],
    k: int,
    n_samples: int,
    seed: int,
) -> tuple[float, float]:
    """Mean and standard error of g_k over ``n_samples`` independent graphs.

    ``generator`` maps a 64-bit seed to a graph; sample ``r`` uses
    ``derive_seed(seed, r)``.
    """
    from .disorder import derive_seed

    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    vals = np.array(
        [float(block_connectivity(generator(derive_seed(seed, r)), k)) for r in range(n_samples)]
    )
    if n_samples == 1:
        return float(vals[0]), 0.0
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_samples))


def make_graph(charger: str, n: int, *, kappa: int = 4, p: float = 0.0, seed: int = 0) -> MajoranaGraph:
    """Dispatch on a charger tag: complete, ring, ws (alias watts_strogatz) or star."""
    if charger == "complete":
        return complete_graph(n)
    if charger == "ring":
        return ring_graph(n, kappa)
    if charger in ("ws", "watts_strogatz"):
        return watts_strogatz(n, kappa, p, seed)
    if charger == "star":
        return star_graph(n)
    raise GraphError(f"unknown graph charger {charger!r}")


def graph_from_edges(n: int, edges: Iterable[Edge]) -> MajoranaGraph:
    return MajoranaGraph(n, tuple(edges), "custom")
