import json
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jamset import degree_model as dm
from jamset.config_model import sample_matching
from jamset.greedy_sim import (
    BLOCKED,
    EMPTY,
    SELECTED,
    FrozenState,
    TrajectoryConfig,
    exact_s_distribution,
    mc_one_firing,
    replica_generator,
    run_dynamic,
    run_replicas,
    run_static,
)
from jamset.theory import drift

from conftest import chi_square_p, empirical_s_counts, sequence_from_degrees

FLORY = 0.5 * (1.0 - math.exp(-2.0))


def test_static_isolated_vertex():
    g = sample_matching(dm.counts_sequence({0: 1}), replica_generator(0))
    res = run_static(g, replica_generator(0))
    assert res.S_final == 1


def test_static_single_edge_every_order():
    g = sample_matching(dm.counts_sequence({1: 2}), replica_generator(0))
    for s in range(20):
        assert run_static(g, replica_generator(s)).S_final == 1


def test_static_loop_policies():
    g = sample_matching(dm.counts_sequence({2: 1}), replica_generator(0))
    assert g.loop_count == 1
    assert run_static(g, replica_generator(1), "include").S_final == 1
    assert run_static(g, replica_generator(1), "exclude").S_final == 0


def test_dynamic_single_edge():
    seq = dm.counts_sequence({1: 2})
    for s in range(20):
        res, _ = run_dynamic(seq, replica_generator(s))
        assert res.S_final == 1
        assert sorted(res.partition.tolist()) == [BLOCKED, SELECTED]


def test_dynamic_forced_loop():
    seq = dm.counts_sequence({2: 1})
    res, traj = run_dynamic(
        seq, replica_generator(4), track=TrajectoryConfig(points=8), keep_graph=True
    )
    assert res.S_final == 1
    assert res.final_graph.loop_count == 1
    # U drops 2 -> 0 in the single firing
    assert traj.u[0] == 2.0
    assert traj.u[-1] == 0.0


def test_dynamic_exclude_forced_loop():
    seq = dm.counts_sequence({2: 1})
    res, _ = run_dynamic(seq, replica_generator(4), loops_policy="exclude")
    assert res.S_final == 0
    assert res.partition.tolist() == [BLOCKED]


def test_dynamic_flory_single_run():
    seq = dm.regular_sequence(2, 100_000)
    res, _ = run_dynamic(seq, replica_generator(8))
    assert abs(res.S_final / seq.n - FLORY) < 0.01


def test_dynamic_debug_invariants():
    rng = replica_generator(5)
    for counts in ({2: 10, 3: 6}, {1: 8, 4: 3, 0: 2}, {5: 4}):
        seq = dm.counts_sequence(counts)
        res, _ = run_dynamic(seq, rng, debug=True)
        assert res.S_final == sum(res.S_final_by_degree.values())
        # termination: nobody is left empty
        assert not (res.partition == EMPTY).any()


@given(st.integers(min_value=0, max_value=2**32))
@settings(max_examples=30, deadline=None)
def test_dynamic_selected_set_independent_and_maximal(seed):
    rng = replica_generator(seed)
    seq = dm.sampled_sequence({1: 0.3, 2: 0.4, 3: 0.3}, 60, rng)
    res, _ = run_dynamic(seq, rng, keep_graph=True, debug=True)
    part = res.partition
    g = res.final_graph
    non_loop_neighbors = [set() for _ in range(seq.n)]
    for u, v in g.edges.tolist():
        if u != v:
            non_loop_neighbors[u].add(v)
            non_loop_neighbors[v].add(u)
    selected = {v for v in range(seq.n) if part[v] == SELECTED}
    for v in selected:
        assert not (non_loop_neighbors[v] & selected), "independence violated"
    for v in range(seq.n):
        if v not in selected:
            assert non_loop_neighbors[v] & selected, "maximality violated"


def test_one_firing_mean_removal_matches_formula():
    # expected half-edges removed by one firing of a degree-j vertex among u
    j, extra = 4, 16
    state = FrozenState(empty_degrees=(j,), blocked_halves=(extra,))
    u = state.U
    est = mc_one_firing(state, 150_000, replica_generator(17))
    expected = -j * (2 - (j - 1) / (u - 1))
    assert abs(est.dU_mean - expected) < 3 * est.dU_se


def test_one_firing_matches_drift_formulas():
    state = FrozenState(empty_degrees=(1, 1, 2, 3), blocked_halves=(2, 1, 2, 1))
    d = drift(state.sim_state())
    est = mc_one_firing(state, 200_000, replica_generator(23))
    assert est.dS == d.dS
    assert abs(est.dU_mean - d.dU) < 3 * est.dU_se
    for k, val in d.dE.items():
        assert abs(est.dE_mean[k] - val) < 3 * est.dE_se[k]


@pytest.mark.parametrize("degrees", [(1, 1, 2), (2, 2, 1, 1)])
@pytest.mark.parametrize("policy", ["include", "exclude"])
def test_mode_equivalence_sampled(degrees, policy):
    # the full instance sweep runs in the acceptance suite at 1e5 runs
    seq = sequence_from_degrees(degrees)
    exact = exact_s_distribution(degrees, loops_policy=policy)
    runs = 20_000
    for mode in ("dynamic", "static"):
        rng = replica_generator(31, hash((degrees, policy, mode)) % 2**32)
        counts = empirical_s_counts(seq, mode, runs, rng, loops_policy=policy)
        assert chi_square_p(counts, exact, runs) > 0.001


def test_trajectory_rows():
    seq = dm.regular_sequence(2, 2000)
    _, traj = run_dynamic(seq, replica_generator(9), track=TrajectoryConfig(points=64))
    assert (np.diff(traj.t) > 0).all()
    assert traj.t[0] == 0.0 and traj.s[0] == 0.0
    assert traj.e[0, 2] == 1.0  # E_0(2)/n = n_2/n
    assert (np.diff(traj.u) <= 0).all()
    assert traj.u[0] == 2.0
    # scaled U stays even in absolute counts
    assert np.allclose((traj.u * seq.n) % 2, 0.0)


def test_trajectory_csv_format():
    seq = dm.counts_sequence({2: 4})
    _, traj = run_dynamic(
        seq, replica_generator(2), track=TrajectoryConfig(points=4, k_track=3)
    )
    text = traj.to_csv_text()
    header = text.splitlines()[0].split(",")
    assert header == ["t", "u", "s", "e_0", "e_1", "e_2", "e_3", "s_0", "s_1", "s_2", "s_3"]
    assert len(text.splitlines()) == len(traj.t) + 1


def test_run_replicas_deterministic_and_parallel_consistent():
    spec = {"kind": "regular", "d": 3}
    a = run_replicas(spec, 6, 99, n=500)
    b = run_replicas(spec, 6, 99, n=500)
    c = run_replicas(spec, 6, 99, n=500, workers=2)
    assert a.per_replica == b.per_replica == c.per_replica
    assert a.mean == pytest.approx(np.mean(a.per_replica))
    assert a.stddev == pytest.approx(np.std(a.per_replica, ddof=1))


def test_run_replicas_star_simple():
    agg = run_replicas({"kind": "star"}, 5, 12, n=1000, graph_mode="simple")
    assert agg.attempts == (1, 1, 1, 1, 1)
    assert all(frac == (1000 - 1) / 1000 for frac in agg.per_replica)


def test_run_replicas_per_degree_means():
    agg = run_replicas({"kind": "star"}, 10, 3, n=2000)
    # leaves carry essentially all the selected mass
    assert agg.per_degree_mean[1] > 0.6
    assert agg.per_degree_mean.get(1999, 0.0) < 0.01


def test_sim_result_json_schema():
    seq = dm.counts_sequence({1: 2})
    res, _ = run_dynamic(seq, replica_generator(0), seed_label=42)
    d = res.to_json_dict()
    assert set(d) == {"n", "S", "S_by_degree", "seed"}
    assert d["seed"] == 42
    json.dumps(d)


def test_exact_distribution_star4():
    # 6 of 15 matchings give the simple star (S = 1 iff the centre goes first);
    # the other 9 give centre loop + pendant edge + leaf edge, where S = 2
    dist = exact_s_distribution((3, 1, 1, 1))
    assert dist[1] == pytest.approx(6 / 15 / 4)
    assert dist[2] == pytest.approx(9 / 15)
    assert dist[3] == pytest.approx(6 / 15 * 3 / 4)
