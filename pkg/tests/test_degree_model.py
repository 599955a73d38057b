import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jamset import degree_model as dm
from jamset.greedy_sim import replica_generator


def test_regular_counts_forced():
    seq = dm.regular_sequence(2, 4)
    assert seq.counts == {2: 4}
    assert seq.n == 4
    assert seq.half_edges == 8


def test_star_degrees():
    seq = dm.star_sequence(4)
    assert seq.counts == {3: 1, 1: 3}
    assert sorted(seq.degrees().tolist()) == [1, 1, 1, 3]


def test_odd_half_edge_total_rejected():
    with pytest.raises(dm.ParityError):
        dm.counts_sequence({1: 3})
    with pytest.raises(dm.ParityError):
        dm.regular_sequence(3, 3)


def test_empty_spec_rejected():
    with pytest.raises(dm.SequenceSpecError):
        dm.build_sequence({})
    with pytest.raises(dm.SequenceSpecError):
        dm.counts_sequence({})
    with pytest.raises(dm.SequenceSpecError):
        dm.build_sequence({"kind": "mystery"})


def test_empirical_values():
    phat, lam = dm.empirical(dm.regular_sequence(2, 4))
    assert phat == {2: 1.0}
    assert lam == 2.0
    phat, lam = dm.empirical(dm.star_sequence(4))
    assert phat == {1: 0.75, 3: 0.25}
    assert lam == 1.5
    phat, lam = dm.empirical(dm.counts_sequence({0: 1, 1: 2}))
    assert phat == {0: pytest.approx(1 / 3), 1: pytest.approx(2 / 3)}
    assert lam == pytest.approx(2 / 3)
    assert abs(sum(phat.values()) - 1.0) < 1e-12


def test_limit_model_defaults_and_excess():
    m = dm.limit_model({2: 1.0})
    assert m.lam == 2.0
    star = dm.limit_model({1: 1.0}, lam=2.0)
    assert star.lam == 2.0 and star.mean_degree == 1.0


def test_limit_model_rejections():
    with pytest.raises(dm.ModelError):
        dm.limit_model({2: 1.0}, lam=1.0)  # below the mass mean
    with pytest.raises(dm.ModelError):
        dm.limit_model({2: 0.7})  # mass must sum to 1
    with pytest.raises(dm.ModelError):
        dm.limit_model({0: 1.0})  # lam = 0
    with pytest.raises(dm.UnsupportedRegimeError):
        dm.limit_model({1: 1.0}, lam=math.inf)


def test_limit_model_explicit_lambda_identical():
    p = {1: 0.25, 2: 0.5, 5: 0.25}
    mu = math.fsum(k * v for k, v in p.items())
    assert dm.limit_model(p, lam=mu) == dm.limit_model(p)


def test_poisson_materialization():
    m = dm.limit_model_from_spec({"kind": "poisson", "c": 1.0})
    assert abs(math.fsum(m.p.values()) - 1.0) < 1e-12
    assert abs(m.mean_degree - 1.0) < 1e-9
    assert m.p[0] == pytest.approx(math.exp(-1), rel=1e-10)
    assert sorted(m.p) == list(range(len(m.p)))


def test_regular_model_spec():
    m = dm.limit_model_from_spec({"kind": "regular", "d": 3})
    assert m.p == {3: 1.0} and m.lam == 3.0


def test_counts_limit_spec_with_lambda():
    m = dm.limit_model_from_spec({"kind": "counts-limit", "p": {"1": 1.0}, "lambda": 2.0})
    assert m.lam == 2.0


def test_twoblock_explicit():
    seq = dm.twoblock_sequence([3, 5], [4, 2])
    assert seq.counts == {4: 3, 2: 5}
    assert seq.n == 8


def test_twoblock_from_exponents_even():
    for n in (100, 1000, 10_000, 100_000):
        seq = dm.twoblock_from_exponents(n, 0.6, 0.05)
        assert seq.n == n
        assert seq.half_edges % 2 == 0


@given(
    st.dictionaries(
        st.integers(min_value=0, max_value=12),
        st.integers(min_value=0, max_value=30),
        min_size=1,
    )
)
@settings(max_examples=80, deadline=None)
def test_parity_always_enforced(counts):
    total = sum(k * c for k, c in counts.items())
    if sum(counts.values()) == 0:
        return
    if total % 2 == 1:
        with pytest.raises(dm.ParityError):
            dm.counts_sequence(counts)
    else:
        seq = dm.counts_sequence(counts)
        assert seq.half_edges % 2 == 0


@given(st.integers(min_value=0, max_value=2**32), st.integers(min_value=1, max_value=400))
@settings(max_examples=40, deadline=None)
def test_sampled_parity_repair(seed, n):
    rng = replica_generator(seed)
    seq = dm.sampled_sequence({1: 0.5, 2: 0.3, 3: 0.2}, n, rng)
    assert seq.n == n
    assert seq.half_edges % 2 == 0


def test_sampled_empirical_converges():
    p = {1: 0.5, 3: 0.5}
    seeds = range(5)

    def mean_gap(n):
        gaps = []
        for s in seeds:
            phat, _ = dm.empirical(dm.sampled_sequence(p, n, replica_generator(s, n)))
            gaps.append(max(abs(phat.get(k, 0.0) - pk) for k, pk in p.items()))
        return float(np.mean(gaps))

    g3, g4, g5 = mean_gap(10**3), mean_gap(10**4), mean_gap(10**5)
    # stochastic monotone trend, with a 3-sigma binomial allowance
    assert g4 <= g3 + 3 * math.sqrt(0.25 / 10**4)
    assert g5 <= g4 + 3 * math.sqrt(0.25 / 10**5)
    assert g5 < g3


def test_build_sequence_dispatch():
    rng = replica_generator(0)
    assert dm.build_sequence({"kind": "regular", "d": 3, "n": 4}).counts == {3: 4}
    assert dm.build_sequence({"kind": "star", "n": 5}).counts == {4: 1, 1: 4}
    assert dm.build_sequence({"kind": "counts", "counts": {"2": 2}}).counts == {2: 2}
    seq = dm.build_sequence({"kind": "poisson", "c": 2.0, "n": 1000}, rng)
    assert seq.n == 1000 and seq.half_edges % 2 == 0
    seq = dm.build_sequence({"kind": "sampled", "p": {"1": 0.5, "2": 0.5}, "n": 99}, rng)
    assert seq.n == 99
    with pytest.raises(dm.SequenceSpecError):
        dm.build_sequence({"kind": "poisson", "c": 1.0, "n": 10})  # rng required
