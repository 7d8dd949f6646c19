import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom

from malleability.topology import (
    DistanceDependentProfile,
    TopologySpec,
    dd_weight,
    edge_distance,
    eta,
    generate_ws,
    kappa_dd,
    kappa_graph,
    kappa_ws,
    load_edge_list,
    load_profile,
    save_edge_list,
    save_profile,
)
from oracles import eta_mp, kappa_dd_mp

odd_n = st.integers(min_value=3, max_value=401).map(lambda x: x | 1)


class TestEdgeDistance:
    def test_examples(self):
        assert edge_distance(1, 2, 501) == 1
        assert edge_distance(1, 501, 501) == 1
        assert edge_distance(1, 251, 501) == 250
        assert edge_distance(1, 252, 501) == 250

    def test_invalid(self):
        with pytest.raises(ValueError):
            edge_distance(3, 3, 10)
        with pytest.raises(ValueError):
            edge_distance(0, 3, 10)
        with pytest.raises(ValueError):
            edge_distance(1, 11, 10)

    @given(st.integers(2, 300).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n), st.integers(1, n))))
    def test_symmetric_and_bounded(self, args):
        n, i, j = args
        if i == j:
            return
        d = edge_distance(i, j, n)
        assert d == edge_distance(j, i, n)
        assert 1 <= d <= n // 2


class TestDistanceDependent:
    def test_alpha_zero_is_mean_field(self):
        prof = DistanceDependentProfile(501, 0.0)
        assert prof.eta == 500
        assert np.all(prof.weights == 1 / 500)

    def test_even_n_rejected(self):
        with pytest.raises(ValueError, match="odd"):
            DistanceDependentProfile(500, 1.0)
        with pytest.raises(ValueError):
            DistanceDependentProfile(11, -0.5)

    @given(odd_n, st.floats(0.0, 6.0))
    @settings(max_examples=60, deadline=None)
    def test_weights_sum_to_one_per_node(self, n, alpha):
        prof = DistanceDependentProfile(n, alpha)
        assert math.isclose(prof.adjacency().sum(axis=1)[0], 1.0, rel_tol=1e-12)
        assert math.isclose(eta(alpha, n), eta_mp(alpha, n), rel_tol=1e-13)

    @given(odd_n, st.floats(0.0, 6.0))
    @settings(max_examples=40, deadline=None)
    def test_weights_nonincreasing_in_distance(self, n, alpha):
        w = DistanceDependentProfile(n, alpha).weights
        assert np.all(np.diff(w) <= 0)

    def test_adjacency_symmetric_circulant(self):
        prof = DistanceDependentProfile(21, 1.5)
        a = prof.adjacency()
        np.testing.assert_array_equal(a, a.T)
        assert np.all(np.diag(a) == 0)
        for i in range(21):
            np.testing.assert_array_equal(a[i], np.roll(a[0], i))
        assert prof.weight(1, 3) == dd_weight(2, prof)
        with pytest.raises(ValueError):
            dd_weight(11, prof)

    def test_neighbors_wrap(self):
        prof = DistanceDependentProfile(11, 1.0)
        assert sorted(prof.neighbors(1).tolist()) == [2, 11]
        assert sorted(prof.neighbors(11).tolist()) == [1, 10]


class TestWattsStrogatz:
    def test_p0_is_ring_lattice(self):
        g = generate_ws(21, 2, 0.0, seed=3)
        assert g.n_rewired == 0
        assert np.all(g.degrees() == 4)
        for i in range(1, 22):
            assert sorted(g.neighbors(i).tolist()) == sorted(
                [(i - 1 + s) % 21 + 1 for s in (-2, -1, 1, 2)])

    @given(st.integers(5, 120), st.integers(1, 3), st.floats(0.0, 1.0), st.integers(0, 2**32))
    @settings(max_examples=80, deadline=None)
    def test_simple_graph_invariants(self, n, k, p, seed):
        if n < 2 * k + 1:
            return
        g = generate_ws(n, k, p, seed)
        e = g.edges
        assert e.shape == (n * k, 2)                      # edge count is preserved
        assert np.all(e[:, 0] < e[:, 1])                  # no self-loops, canonical order
        assert len({tuple(x) for x in e.tolist()}) == len(e)  # no multi-edges
        assert e.min() >= 1 and e.max() <= n
        assert g.degrees().sum() == 2 * n * k
        np.testing.assert_array_equal(g.adjacency(), g.adjacency().T)

    def test_same_seed_same_graph(self):
        assert generate_ws(101, 2, 0.3, 5) == generate_ws(101, 2, 0.3, 5)
        assert generate_ws(101, 2, 0.3, 5) != generate_ws(101, 2, 0.3, 6)

    def test_complete_graph_keeps_edges(self):
        # N = 2k+1 is already complete: nothing can be rewired
        g = generate_ws(5, 2, 1.0, 0)
        assert g.n_rewired == 0
        assert len(g.edges) == 10

    def test_rewired_fraction_is_binomial(self):
        n, k, p = 501, 2, 0.2
        counts = [generate_ws(n, k, p, s).n_rewired for s in range(20)]
        lo, hi = binom.interval(0.999, n * k * 20, p)
        assert lo <= sum(counts) <= hi

    def test_invalid(self):
        with pytest.raises(ValueError):
            generate_ws(4, 2, 0.1, 0)
        with pytest.raises(ValueError):
            generate_ws(11, 2, 1.5, 0)


class TestKappa:
    def test_ws_closed_form(self):
        assert kappa_ws(0.5) == 0.0
        assert kappa_ws(0.0) == 1.0
        assert kappa_ws(1.0) == -1.0

    def test_dd_mean_field_value(self):
        # alpha=0, N=501, d=2: (2 - 248) / 250
        assert kappa_dd(0.0, 501, 2).kappa == pytest.approx(-0.984, abs=1e-15)

    @given(st.floats(0.0, 6.0), st.integers(7, 1001).map(lambda x: x | 1), st.integers(1, 200))
    @settings(max_examples=50, deadline=None)
    def test_dd_matches_mpmath(self, alpha, n, d):
        if d >= (n - 1) // 2:
            return
        r = kappa_dd(alpha, n, d)
        assert abs(r.kappa - kappa_dd_mp(alpha, n, d)) < 1e-12
        assert r.k_s + r.k_l == pytest.approx(1.0, abs=1e-14)
        assert -1 <= r.kappa <= 1

    def test_dd_increases_with_alpha(self):
        ks = [kappa_dd(a, 501).kappa for a in np.linspace(0, 5, 11)]
        assert np.all(np.diff(ks) > 0)

    def test_dd_invalid_cutoff(self):
        with pytest.raises(ValueError):
            kappa_dd(1.0, 11, 5)

    def test_empirical_ws_close_to_formula(self):
        emp = np.mean([kappa_graph(generate_ws(501, 2, 0.3, s)).kappa for s in range(30)])
        assert abs(emp - kappa_ws(0.3)) < 0.05


class TestSpecAndIO:
    def test_spec_roundtrip_and_cache(self):
        spec = TopologySpec("ws", 51, k=2, p=0.1, seed=4)
        assert TopologySpec.from_dict(spec.to_dict()) == spec
        assert spec.build() is spec.build()
        with pytest.raises(ValueError):
            TopologySpec("ba", 11)
        with pytest.raises(ValueError):
            TopologySpec("dd", 10)

    def test_edge_list_roundtrip(self, tmp_path):
        g = generate_ws(31, 2, 0.4, 9)
        save_edge_list(g, tmp_path / "g.txt")
        h = load_edge_list(tmp_path / "g.txt")
        assert h == g

    def test_profile_roundtrip(self, tmp_path):
        prof = DistanceDependentProfile(31, 1.76923)
        save_profile(prof, tmp_path / "w.csv")
        assert load_profile(tmp_path / "w.csv") == prof
        text = (tmp_path / "w.csv").read_text().replace("distance,weight\n1,", "distance,weight\n1,9")
        (tmp_path / "w.csv").write_text(text)
        with pytest.raises(ValueError):
            load_profile(tmp_path / "w.csv")
