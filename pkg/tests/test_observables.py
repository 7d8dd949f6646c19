import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from malleability.dynamics import SimulationConfig, integrate, sample_frequencies, sample_initial_conditions
from malleability.observables import (
    AttractorFingerprint,
    count_attractors,
    dump_records,
    fingerprint,
    frequency_synchronized,
    mean_R,
    order_parameter,
    ring_blocks,
    summarize,
)
from malleability.topology import DistanceDependentProfile, generate_ws


class TestOrderParameter:
    def test_limits(self):
        assert order_parameter(np.full(7, 1.3)) == pytest.approx(1.0)
        splay = 2 * np.pi * np.arange(12) / 12
        assert order_parameter(splay) < 1e-15
        assert order_parameter([0.0, np.pi]) < 1e-15
        with pytest.raises(ValueError):
            order_parameter([])

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=50), st.floats(-10, 10))
    def test_bounded_and_rotation_invariant(self, phases, shift):
        th = np.array(phases)
        r = order_parameter(th)
        assert 0.0 <= r <= 1.0
        assert order_parameter(th + shift) == pytest.approx(r, abs=1e-12)

    def test_random_phases_scale(self):
        # |mean of N unit phasors| ~ sqrt(pi/(4N)) for independent uniform phases
        rng = np.random.default_rng(0)
        rs = [order_parameter(rng.uniform(0, 2 * np.pi, 400)) for _ in range(400)]
        assert np.mean(rs) == pytest.approx(np.sqrt(np.pi / 1600), rel=0.1)


def test_frequency_synchronized():
    assert frequency_synchronized([1.0, 1.005, 0.996])
    assert not frequency_synchronized([1.0, 1.02])
    with pytest.raises(ValueError):
        frequency_synchronized([1.0], tol=0)


def test_ring_blocks():
    assert [(b.start, b.stop) for b in ring_blocks(501)] == [(0, 100), (100, 200), (200, 300), (300, 400), (400, 501)]
    assert [(b.start, b.stop) for b in ring_blocks(101)] == [(0, 101)]
    assert [(b.start, b.stop) for b in ring_blocks(50)] == [(0, 50)]


@pytest.fixture(scope="module")
def trajectories():
    g = generate_ws(41, 2, 0.1, 0)
    sim = SimulationConfig(eps=3.0, t_transient=30, t_observe=20)
    om = sample_frequencies(41, 0)
    return [integrate(sample_initial_conditions(41, s), om, g, sim) for s in (1, 2)]


class TestSummary:
    def test_summarize(self, trajectories):
        tr = trajectories[0]
        s = summarize(tr)
        assert s.R == mean_R(tr) == pytest.approx(tr.r.mean())
        assert 0 <= s.R <= 1
        rec = s.to_record()
        assert len(rec["Omega"]) == 41


class TestFingerprint:
    def test_layout(self, trajectories):
        fp = fingerprint(trajectories[0])
        assert fp.features.shape == (2 + 41 + fp.n_sections + 41 + 3,)
        assert fp.features[0] == pytest.approx(trajectories[0].r.mean())
        assert np.all(fp.features[2:43] <= 1 + 1e-12)

    def test_distance_metric(self, trajectories):
        a, b = (fingerprint(t) for t in trajectories)
        assert a.distance(a) == 0
        assert a.distance(b) == b.distance(a)

    def test_needs_phases(self, trajectories):
        tr = trajectories[0]
        from dataclasses import replace
        with pytest.raises(ValueError):
            fingerprint(replace(tr, phases=None))

    def test_dd_neighbors(self):
        prof = DistanceDependentProfile(21, 2.0)
        tr = integrate(sample_initial_conditions(21, 1), sample_frequencies(21, 0), prof,
                       SimulationConfig(eps=8.0, t_transient=30, t_observe=10))
        fp = fingerprint(tr)
        assert fp.features.shape == (2 + 21 + 1 + 21 + 3,)


class TestCountAttractors:
    def test_clusters(self):
        pts = [np.array([0.0, 0.0]), np.array([0.0005, 0.0]), np.array([0.5, 0.5]), np.array([0.5004, 0.5])]
        assert count_attractors(pts, tau=1e-3) == 2
        assert count_attractors(pts, tau=1e-5) == 4
        assert count_attractors(pts, tau=1.0) == 1
        assert count_attractors([]) == 0
        assert count_attractors(pts[:1]) == 1
        with pytest.raises(ValueError):
            count_attractors(pts, tau=0)

    def test_single_linkage_chains(self):
        chain = [np.array([i * 0.0009]) for i in range(10)]
        assert count_attractors(chain, tau=1e-3) == 1

    @given(st.lists(st.lists(st.floats(0, 1), min_size=3, max_size=3), min_size=1, max_size=30),
           st.floats(1e-4, 1.0))
    @settings(max_examples=50, deadline=None)
    def test_bounds_and_monotone(self, rows, tau):
        pts = [np.array(r) for r in rows]
        c = count_attractors(pts, tau)
        assert 1 <= c <= len(pts)
        assert count_attractors(pts, 2 * tau) <= c

    def test_wrapped_fingerprints(self):
        fps = [AttractorFingerprint(np.array([0.1, 0.2]), 2, 1), AttractorFingerprint(np.array([0.1, 0.2]), 2, 1)]
        assert count_attractors(fps) == 1


def test_dump_records(tmp_path, trajectories):
    dump_records({0: summarize(trajectories[0]), 1: {"x": 1}}, tmp_path / "r.json")
    import json
    doc = json.loads((tmp_path / "r.json").read_text())
    assert set(doc) == {"0", "1"}
