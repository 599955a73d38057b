"""Shared test helpers: instance enumeration and chi-square comparison."""

from __future__ import annotations

from collections import Counter

import numpy as np
from scipy.stats import chisquare

from jamset import degree_model as dm
from jamset.config_model import sample_matching
from jamset.greedy_sim import replica_generator, run_dynamic, run_static


def degree_instances(max_n: int = 5, max_sum: int = 8) -> list:
    """All degree multisets (non-increasing tuples) with n <= max_n vertices
    and an even degree total <= max_sum."""
    out = set()

    def rec(prefix, maxd, n_left, s_left):
        if prefix and sum(prefix) % 2 == 0:
            out.add(tuple(prefix))
        if n_left == 0:
            return
        for d in range(min(maxd, s_left), -1, -1):
            rec(prefix + [d], d, n_left - 1, s_left - d)

    rec([], max_sum, max_n, max_sum)
    return sorted(out)


def sequence_from_degrees(degrees) -> dm.DegreeSequence:
    counts: dict = {}
    for d in degrees:
        counts[int(d)] = counts.get(int(d), 0) + 1
    return dm.counts_sequence(counts)


def empirical_s_counts(seq, mode: str, runs: int, rng, loops_policy="include") -> Counter:
    """S_final counts over repeated runs of the real simulator code paths."""
    c: Counter = Counter()
    if mode == "dynamic":
        for _ in range(runs):
            res, _ = run_dynamic(seq, rng, loops_policy=loops_policy)
            c[res.S_final] += 1
    else:
        for _ in range(runs):
            g = sample_matching(seq, rng)
            c[run_static(g, rng, loops_policy=loops_policy).S_final] += 1
    return c


def chi_square_p(observed: Counter, exact: dict, runs: int) -> float:
    """p-value of observed counts against exact probabilities.

    Degenerate one-outcome laws are checked exactly and reported as p = 1.
    """
    support = sorted(exact)
    assert set(observed) <= set(support), (
        f"observed outcome outside exact support: {sorted(observed)} vs {support}"
    )
    if len(support) == 1:
        return 1.0
    f_obs = np.array([observed.get(s, 0) for s in support], dtype=float)
    f_exp = np.array([float(exact[s]) * runs for s in support])
    return float(chisquare(f_obs, f_exp).pvalue)
