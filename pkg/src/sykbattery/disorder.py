"""Gaussian SYK couplings with reproducible seeding.

All sampling uses numpy's PCG64 bit generator (``np.random.default_rng``)
and standard normals drawn in a fixed canonical order: sorted edges for
graph couplings, lexicographic increasing tuples for dense couplings.
Independent realizations use ``derive_seed(root_seed, r)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Optional

import numpy as np

from .graph import MajoranaGraph

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One SplitMix64 output for state ``x`` (Steele, Lea & Flood finalizer)."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(root_seed: int, index: int) -> int:
    """64-bit child seed for stream ``index`` of ``root_seed``.

    ``splitmix64(splitmix64(root) ^ splitmix64(index + golden))``; a bijection
    in ``index`` for fixed root, so distinct indices never collide.
    """
    a = splitmix64(int(root_seed) & _MASK64)
    b = splitmix64((int(index) + 0x9E3779B97F4A7C15) & _MASK64)
    return splitmix64(a ^ b)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass(frozen=True)
class EdgeCouplings:
    graph: MajoranaGraph
    values: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.graph.n_edges,):
            raise ValueError(
                f"expected {self.graph.n_edges} couplings for the graph, got shape {vals.shape}"
            )
        object.__setattr__(self, "values", vals)

    def as_dict(self) -> dict[tuple[int, int], float]:
        return dict(zip(self.graph.edges, self.values.tolist()))

    def __getitem__(self, edge: tuple[int, int]) -> float:
        i, j = edge
        sign = 1.0
        if i > j:
            i, j, sign = j, i, -1.0
        return sign * self.as_dict()[(i, j)]

    def to_text(self) -> str:
        return "".join(f"{i} {j} {_fmt(v)}\n" for (i, j), v in zip(self.graph.edges, self.values))

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())


@dataclass(frozen=True)
class DenseCouplingTensor:
    n: int
    q: int
    indices: tuple[tuple[int, ...], ...]
    values: np.ndarray
    seed: Optional[int] = None
    J_scale: float = 1.0

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return dict(zip(self.indices, self.values.tolist()))

    def antisymmetric(self, index: tuple[int, ...]) -> float:
        """J for an arbitrary index tuple, by the sign of the sorting permutation."""
        if len(set(index)) < len(index):
            return 0.0
        order = sorted(range(len(index)), key=index.__getitem__)
        sign = _perm_sign(order)
        return sign * self.as_dict()[tuple(sorted(index))]

    def to_text(self) -> str:
        return "".join(
            " ".join(map(str, idx)) + f" {_fmt(v)}\n" for idx, v in zip(self.indices, self.values)
        )

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())


def _perm_sign(perm: list[int]) -> int:
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def graph_coupling_variance(g: MajoranaGraph) -> float:
    return g.n_vertices / (2 * g.n_edges)


def dense_coupling_variance(n: int, q: int, J: float = 1.0) -> float:
    return J**2 * math.factorial(q - 1) / n ** (q - 1)


def sample_graph_couplings(g: MajoranaGraph, seed: int) -> EdgeCouplings:
    """One zero-mean Gaussian per edge with variance N / (2 n_E)."""
    if g.n_edges == 0:
        raise ValueError("graph has no edges")
    rng = np.random.default_rng(seed)
    sigma = math.sqrt(graph_coupling_variance(g))
    return EdgeCouplings(g, sigma * rng.standard_normal(g.n_edges), seed)


def sample_dense_couplings(n: int, q: int, seed: int) -> DenseCouplingTensor:
    """Independent Gaussians on increasing q-tuples, variance (q-1)!/N^(q-1) (J = 1)."""
    if q < 2 or q % 2:
        raise ValueError(f"q must be even and >= 2, got {q}")
    if q > n:
        raise ValueError(f"q={q} exceeds N={n}")
    indices = tuple(combinations(range(n), q))
    rng = np.random.default_rng(seed)
    sigma = math.sqrt(dense_coupling_variance(n, q))
    return DenseCouplingTensor(n, q, indices, sigma * rng.standard_normal(len(indices)), seed)
