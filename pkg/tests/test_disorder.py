import math

import numpy as np
import pytest

from sykbattery.disorder import (
    dense_coupling_variance,
    derive_seed,
    graph_coupling_variance,
    sample_dense_couplings,
    sample_graph_couplings,
    splitmix64,
)
from sykbattery.graph import complete_graph, ring_graph, MajoranaGraph


def z_mean(x):
    return x.mean() / (x.std(ddof=1) / math.sqrt(x.size))


def z_variance(x, var):
    # chi-squared with n-1 dof, normal approximation
    n = x.size
    chi2 = (n - 1) * x.var(ddof=1) / var
    return (chi2 - (n - 1)) / math.sqrt(2 * (n - 1))


def test_splitmix64_reference_value():
    # first output of the reference generator seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_derive_seed_distinct_streams():
    seeds = {derive_seed(42, r) for r in range(10_000)}
    assert len(seeds) == 10_000
    assert derive_seed(42, 3) == derive_seed(42, 3)
    assert derive_seed(42, 3) != derive_seed(43, 3)
    assert all(0 <= s < 2**64 for s in seeds)


def test_complete_graph_variance_matches_dense_asymptotically():
    for n in (4, 10, 30, 1000):
        g = complete_graph(n)
        assert graph_coupling_variance(g) == pytest.approx(1 / (n - 1))
        assert graph_coupling_variance(g) / dense_coupling_variance(n, 2) == pytest.approx(n / (n - 1))


def test_dense_variance_formula():
    assert dense_coupling_variance(10, 2) == pytest.approx(1 / 10)
    assert dense_coupling_variance(8, 4) == pytest.approx(6 / 8**3)


def test_graph_couplings_statistics():
    g = complete_graph(448)  # 100128 edges
    c = sample_graph_couplings(g, seed=77)
    var = 448 / (2 * g.n_edges)
    assert abs(c.values.var(ddof=1) / var - 1) < 0.02
    assert abs(z_mean(c.values)) < 4
    assert abs(z_variance(c.values, var)) < 4


def test_graph_couplings_single_edge_stream():
    g = MajoranaGraph(2, ((0, 1),))
    vals = np.array([sample_graph_couplings(g, derive_seed(5, r)).values[0] for r in range(20_000)])
    assert abs(z_mean(vals)) < 4
    assert abs(z_variance(vals, 1.0)) < 4


def test_graph_couplings_deterministic():
    g = ring_graph(12, 4)
    a = sample_graph_couplings(g, 9)
    b = sample_graph_couplings(g, 9)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, sample_graph_couplings(g, 10).values)
    d = a.as_dict()
    assert set(d) == set(g.edges)
    i, j = g.edges[0]
    assert a[(j, i)] == -a[(i, j)]


def test_graph_couplings_reject_empty():
    with pytest.raises(ValueError):
        sample_graph_couplings(MajoranaGraph(4, ()), 1)


def test_dense_couplings_shape_and_checks():
    c = sample_dense_couplings(8, 4, seed=3)
    assert len(c.indices) == math.comb(8, 4) == 70
    assert all(list(t) == sorted(set(t)) for t in c.indices)
    with pytest.raises(ValueError):
        sample_dense_couplings(8, 3, 0)
    with pytest.raises(ValueError):
        sample_dense_couplings(4, 6, 0)


def test_dense_couplings_statistics():
    c = sample_dense_couplings(448, 2, seed=5)
    assert c.values.size == math.comb(448, 2)
    assert abs(z_mean(c.values)) < 3
    assert abs(z_variance(c.values, 1 / 448)) < 4


def test_dense_antisymmetric_extension():
    c = sample_dense_couplings(6, 4, seed=1)
    base = c.as_dict()[(0, 1, 2, 3)]
    assert c.antisymmetric((1, 0, 2, 3)) == -base
    assert c.antisymmetric((1, 2, 3, 0)) == -base  # 4-cycle is odd
    assert c.antisymmetric((1, 0, 3, 2)) == base
    assert c.antisymmetric((0, 0, 2, 3)) == 0


def test_dump_roundtrip():
    g = ring_graph(8, 2)
    c = sample_graph_couplings(g, 4)
    rows = [ln.split() for ln in c.to_text().splitlines()]
    assert [(int(a), int(b)) for a, b, _ in rows] == list(g.edges)
    assert np.array_equal([float(v) for *_, v in rows], c.values)
    d = sample_dense_couplings(6, 4, 2)
    rows = [ln.split() for ln in d.to_text().splitlines()]
    assert all(len(r) == 5 for r in rows)
    assert np.array_equal([float(r[-1]) for r in rows], d.values)
