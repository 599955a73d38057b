"""Greedy independent-set process on configuration-model graphs.

Two equivalent-in-law simulators:

* static: sample the whole multigraph first, then scan vertices in a
  uniformly random order, selecting each vertex with no selected neighbour;
* dynamic: every vertex carries a rate-1 exponential clock; when an empty
  vertex fires it is selected and its half-edges are paired lazily, blocking
  any empty vertex they hit.  The Markov state (U_t, E_t(k), S_t) is tracked
  and can be sampled on a time grid for comparison with the fluid limit.

Looped vertices are admitted to the set by default (``loops_policy=
"include"``); ``"exclude"`` bars them in both simulators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import permutations
from typing import Optional

import numpy as np

from .config_model import (
    Multigraph,
    _collapse_pairs,
    enumerate_matchings,
    matching_from_sequence,
    sample_matching,
    sample_simple,
)
from .degree_model import DegreeSequence, build_sequence

EMPTY, BLOCKED, SELECTED = 0, 1, 2

__all__ = [
    "SimState",
    "SimResult",
    "Trajectory",
    "TrajectoryConfig",
    "ReplicaAggregate",
    "FrozenState",
    "OneFiringEstimate",
    "replica_generator",
    "run_static",
    "run_dynamic",
    "run_replicas",
    "exact_s_distribution",
    "mc_one_firing",
    "check_state",
]


def replica_generator(seed: int, index: int = 0) -> np.random.Generator:
    """Philox 4x64-10 stream keyed by (seed, index); replicas never collide."""
    key = np.array([seed % 2**64, index % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass
class SimState:
    """Markov state of the dynamic process at one instant."""

    t: float
    U: int
    E: dict
    S: int
    S_by_degree: dict
    partition: Optional[np.ndarray] = None


def check_state(state: SimState, loops_policy: str = "include") -> None:
    assert state.U >= 0 and state.U % 2 == 0, "U must be even and non-negative"
    assert all(c >= 0 for c in state.E.values())
    assert state.S == sum(state.S_by_degree.values())
    if loops_policy == "include":
        # with loop exclusion, eligible vertices may already have paired
        # half-edges, so this bound only applies to the include policy
        assert sum(k * c for k, c in state.E.items()) <= state.U


@dataclass(frozen=True)
class TrajectoryConfig:
    """Sampling grid for scaled trajectories.

    t_max = 12 puts the unsampled tail below e^-12 ~ 6e-6 of the vertices;
    degrees above k_track go to an overflow bucket.
    """

    t_max: float = 12.0
    points: int = 512
    k_track: int = 50

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.points)


@dataclass
class Trajectory:
    """Scaled samples (U_t/n, E_t(k)/n, S_t/n, S_t(k)/n) on a time grid."""

    t: np.ndarray
    u: np.ndarray
    s: np.ndarray
    e: np.ndarray
    s_by_degree: np.ndarray
    e_overflow: np.ndarray
    s_overflow: np.ndarray
    k_track: int

    def to_csv_text(self) -> str:
        from .tables import format_trajectory_csv

        return format_trajectory_csv(self.t, self.u, self.s, self.e, self.s_by_degree)


@dataclass
class SimResult:
    """Outcome of one greedy run."""

    S_final: int
    S_final_by_degree: dict
    n: int
    loops_policy: str
    final_graph: Optional[Multigraph] = None
    clock_order_seed: Optional[int] = None
    degrees: Optional[np.ndarray] = None
    partition: Optional[np.ndarray] = None
    t_terminated: Optional[float] = None
    attempts: Optional[int] = None

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "S": self.S_final,
            "S_by_degree": {str(k): v for k, v in sorted(self.S_final_by_degree.items())},
            "seed": self.clock_order_seed,
        }


def run_static(
    g: Multigraph, rng, loops_policy: str = "include", seed_label: Optional[int] = None
) -> SimResult:
    """Greedy pass over the vertices of a finished (multi)graph in random order."""
    n = g.n
    adj = [[] for _ in range(n)]
    has_loop = bytearray(n)
    for u, v in g.edges.tolist():
        if u == v:
            has_loop[u] = 1
        else:
            adj[u].append(v)
            adj[v].append(u)
    degl = np.asarray(g.degrees).tolist()
    order = rng.permutation(n).tolist()
    status = bytearray(n)
    exclude = loops_policy == "exclude"
    S = 0
    S_by_degree: dict = {}
    for v in order:
        if status[v] != EMPTY:
            continue
        if exclude and has_loop[v]:
            status[v] = BLOCKED
            continue
        status[v] = SELECTED
        S += 1
        k = degl[v]
        S_by_degree[k] = S_by_degree.get(k, 0) + 1
        for w in adj[v]:
            if status[w] == EMPTY:
                status[w] = BLOCKED
    return SimResult(
        S_final=S,
        S_final_by_degree=S_by_degree,
        n=n,
        loops_policy=loops_policy,
        final_graph=g,
        clock_order_seed=seed_label,
        degrees=np.asarray(g.degrees),
        partition=np.frombuffer(bytes(status), dtype=np.int8),
    )


def run_dynamic(
    seq: DegreeSequence,
    rng,
    track: Optional[TrajectoryConfig] = None,
    loops_policy: str = "include",
    keep_graph: bool = False,
    debug: bool = False,
    seed_label: Optional[int] = None,
) -> tuple[SimResult, Optional[Trajectory]]:
    """Exponential-clock process with lazy half-edge pairing.

    Vertices fire in increasing clock order (ties broken by index); a firing
    empty vertex is selected and pairs each of its half-edges in turn with a
    uniformly random unpaired half-edge.  Firings of blocked vertices are
    ignored.  When no empty vertex remains the leftover half-edges are paired
    uniformly to complete the multigraph.
    """
    degrees_arr = seq.degrees()
    n = seq.n
    degl = seq.degrees_list()
    total = seq.half_edges
    owner, hstart = seq.half_edge_layout()

    if n <= 64:
        # one generator call covers clocks and partner draws
        buf = rng.random(n + total // 2 + 2).tolist()
        times_l = [-math.log1p(-u) for u in buf[:n]]
        order = sorted(range(n), key=times_l.__getitem__)  # stable: ties by index
        udraws = buf[n:]
    else:
        times = rng.exponential(size=n)
        order = np.argsort(times, kind="stable").tolist()
        times_l = times.tolist()
        udraws = rng.random(total // 2 + 2)

    pool = list(range(total))
    pos = list(range(total))
    status = bytearray(n)
    exclude = loops_policy == "exclude"
    U = total
    E = {k: c for k, c in seq.counts.items()}
    n_empty = n
    S = 0
    S_by_degree: dict = {}
    edges: Optional[list] = [] if keep_graph else None

    rows: Optional[list] = None
    grid_l: list = []
    gi = 0
    snapshot = None
    if track is not None:
        rows = []
        grid_l = track.grid().tolist()
        den = n if n else 1

        def snapshot(t_now: float) -> list:
            e_cols = [0.0] * (track.k_track + 1)
            s_cols = [0.0] * (track.k_track + 1)
            e_over = 0.0
            s_over = 0.0
            for k, c in E.items():
                if c == 0:
                    continue
                if k <= track.k_track:
                    e_cols[k] = c / den
                else:
                    e_over += c / den
            for k, c in S_by_degree.items():
                if k <= track.k_track:
                    s_cols[k] = c / den
                else:
                    s_over += c / den
            return [t_now, U / den, S / den, e_cols, s_cols, e_over, s_over]

    ui = 0
    t_term = 0.0
    for v in order:
        t_ev = times_l[v]
        if rows is not None:
            while gi < len(grid_l) and grid_l[gi] < t_ev:
                rows.append(snapshot(grid_l[gi]))
                gi += 1
        if status[v] != EMPTY:
            continue
        kv = degl[v]
        hits: list = []
        loops_here = 0
        for h in range(hstart[v], hstart[v] + kv):
            if pos[h] < 0:
                continue
            i = pos[h]
            last = pool.pop()
            if last != h:
                pool[i] = last
                pos[last] = i
            pos[h] = -1
            m = len(pool)
            if m == 0:
                break
            r = int(udraws[ui] * m)
            ui += 1
            if r >= m:
                r = m - 1
            h2 = pool[r]
            last = pool.pop()
            if last != h2:
                pool[r] = last
                pos[last] = r
            pos[h2] = -1
            U -= 2
            w = owner[h2]
            if keep_graph:
                edges.append((v, w) if v <= w else (w, v))
            if w == v:
                loops_here += 1
            elif status[w] == EMPTY:
                hits.append(w)
        E[kv] -= 1
        n_empty -= 1
        if exclude and loops_here > 0:
            # a looped firing vertex is barred; the vertices it paired to are
            # adjacent only to a non-selected vertex and stay eligible
            status[v] = BLOCKED
        else:
            status[v] = SELECTED
            S += 1
            S_by_degree[kv] = S_by_degree.get(kv, 0) + 1
            for w in hits:
                if status[w] == EMPTY:
                    status[w] = BLOCKED
                    E[degl[w]] -= 1
                    n_empty -= 1
        t_term = t_ev
        if debug:
            check_state(
                SimState(t=t_ev, U=U, E=E, S=S, S_by_degree=S_by_degree), loops_policy
            )
        if n_empty == 0:
            break

    # the tracked state freezes at termination: the trajectory keeps the
    # leftover unpaired half-edges that the atemporal completion pairs off
    if rows is not None:
        rows.append(snapshot(t_term))
        while gi < len(grid_l):
            if grid_l[gi] > t_term:
                rows.append(snapshot(grid_l[gi]))
            gi += 1

    # uniform completion pairing of the leftover half-edges
    while len(pool) >= 2:
        h = pool.pop()
        pos[h] = -1
        m = len(pool)
        r = int(udraws[ui] * m)
        ui += 1
        if r >= m:
            r = m - 1
        h2 = pool[r]
        last = pool.pop()
        if last != h2:
            pool[r] = last
            pos[last] = r
        pos[h2] = -1
        U -= 2
        if keep_graph:
            a, b = owner[h], owner[h2]
            edges.append((a, b) if a <= b else (b, a))

    trajectory = None
    if rows is not None:
        trajectory = Trajectory(
            t=np.array([r[0] for r in rows]),
            u=np.array([r[1] for r in rows]),
            s=np.array([r[2] for r in rows]),
            e=np.array([r[3] for r in rows]),
            s_by_degree=np.array([r[4] for r in rows]),
            e_overflow=np.array([r[5] for r in rows]),
            s_overflow=np.array([r[6] for r in rows]),
            k_track=track.k_track,
        )

    graph = None
    if keep_graph:
        graph = _collapse_pairs(n, degrees_arr, np.array(edges, dtype=np.int64).reshape(-1, 2))
    result = SimResult(
        S_final=S,
        S_final_by_degree=S_by_degree,
        n=n,
        loops_policy=loops_policy,
        final_graph=graph,
        clock_order_seed=seed_label,
        degrees=degrees_arr,
        partition=np.frombuffer(bytes(status), dtype=np.int8),
        t_terminated=t_term,
    )
    return result, trajectory


@dataclass
class ReplicaAggregate:
    """Monte-Carlo aggregate over independent replicas of one scenario."""

    n: int
    replicas: int
    seed: int
    graph_mode: str
    sim_mode: str
    loops_policy: str
    mean: float
    stddev: float
    per_replica: tuple
    per_degree_mean: dict
    attempts: Optional[tuple] = None
    results: Optional[list] = None
    trajectories: Optional[list] = None

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "replicas": self.replicas,
            "seed": self.seed,
            "graph_mode": self.graph_mode,
            "sim_mode": self.sim_mode,
            "loops_policy": self.loops_policy,
            "mean": self.mean,
            "stddev": self.stddev,
            "per_replica": list(self.per_replica),
            "per_degree_mean": {str(k): v for k, v in sorted(self.per_degree_mean.items())},
            "attempts": None if self.attempts is None else list(self.attempts),
        }


def _one_replica(
    seq_spec: dict,
    seed: int,
    index: int,
    graph_mode: str,
    sim_mode: str,
    loops_policy: str,
    track: Optional[TrajectoryConfig],
    max_attempts: int,
    keep_results: bool,
):
    rng = replica_generator(seed, index)
    seq = build_sequence(seq_spec, rng)
    trajectory = None
    if graph_mode == "simple":
        # conditioning happens at the graph level; on a fixed graph the clock
        # order and a uniform scan order have the same law
        g, attempts = sample_simple(seq, rng, max_attempts=max_attempts)
        res = run_static(g, rng, loops_policy, seed_label=seed)
        res = replace(res, attempts=attempts)
    elif sim_mode == "static":
        g = sample_matching(seq, rng)
        res = run_static(g, rng, loops_policy, seed_label=seed)
    else:
        res, trajectory = run_dynamic(
            seq, rng, track=track, loops_policy=loops_policy, seed_label=seed
        )
    summary = {
        "n": res.n,
        "frac": res.S_final / res.n if res.n else 0.0,
        "by_degree": {k: v / res.n for k, v in res.S_final_by_degree.items()},
        "attempts": res.attempts,
    }
    if keep_results:
        summary["result"] = res
        summary["trajectory"] = trajectory
    return summary


def run_replicas(
    seq_spec: dict,
    replicas: int,
    seed: int,
    *,
    n: Optional[int] = None,
    graph_mode: str = "multigraph",
    sim_mode: str = "dynamic",
    loops_policy: str = "include",
    track: Optional[TrajectoryConfig] = None,
    max_attempts: int = 1000,
    workers: int = 1,
    keep_results: bool = False,
) -> ReplicaAggregate:
    """Independent replicas with per-replica Philox substreams keyed (seed, r).

    Deterministic for a given seed regardless of worker count; aggregation is
    an ordered merge over replica indices.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    spec = dict(seq_spec)
    if n is not None:
        spec["n"] = int(n)
    args = [
        (spec, seed, r, graph_mode, sim_mode, loops_policy, track, max_attempts, keep_results)
        for r in range(replicas)
    ]
    if workers > 1 and replicas > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_replica_star, args))
    else:
        summaries = [_one_replica(*a) for a in args]

    fracs = [s["frac"] for s in summaries]
    mean = float(np.mean(fracs))
    stddev = float(np.std(fracs, ddof=1)) if replicas > 1 else 0.0
    all_degrees = sorted({k for s in summaries for k in s["by_degree"]})
    per_degree = {
        k: float(np.mean([s["by_degree"].get(k, 0.0) for s in summaries]))
        for k in all_degrees
    }
    attempts = tuple(s["attempts"] for s in summaries)
    if all(a is None for a in attempts):
        attempts = None
    return ReplicaAggregate(
        n=summaries[0]["n"],
        replicas=replicas,
        seed=seed,
        graph_mode=graph_mode,
        sim_mode=sim_mode,
        loops_policy=loops_policy,
        mean=mean,
        stddev=stddev,
        per_replica=tuple(fracs),
        per_degree_mean=per_degree,
        attempts=attempts,
        results=[s.get("result") for s in summaries] if keep_results else None,
        trajectories=[s.get("trajectory") for s in summaries] if keep_results else None,
    )


def _replica_star(a):
    return _one_replica(*a)


def exact_s_distribution(degrees, loops_policy: str = "include") -> dict:
    """Exact law of the final set size: all matchings x all vertex orders.

    Brute-force oracle for tiny instances (sum of degrees <= 12); returns
    {S: probability} with exact rational probabilities.
    """
    seq = matching_from_sequence(degrees)
    oracle = enumerate_matchings(seq)
    owner = oracle.owners().tolist()
    n = seq.n
    exclude = loops_policy == "exclude"
    counts: dict = {}
    for matching in oracle.all_matchings:
        adj = [[] for _ in range(n)]
        has_loop = [False] * n
        for a, b in matching:
            u, v = owner[a], owner[b]
            if u == v:
                has_loop[u] = True
            else:
                adj[u].append(v)
                adj[v].append(u)
        for order in permutations(range(n)):
            status = [EMPTY] * n
            S = 0
            for v in order:
                if status[v] != EMPTY:
                    continue
                if exclude and has_loop[v]:
                    status[v] = BLOCKED
                    continue
                status[v] = SELECTED
                S += 1
                for w in adj[v]:
                    if status[w] == EMPTY:
                        status[w] = BLOCKED
            counts[S] = counts.get(S, 0) + 1
    total = oracle.count * math.factorial(n)
    return {s: Fraction(c, total) for s, c in sorted(counts.items())}


@dataclass(frozen=True)
class FrozenState:
    """A mid-process state for drift checking.

    Empty vertices have all their half-edges unpaired; blocked vertices
    contribute a given number of leftover unpaired half-edges.  Vertex count
    is capped at 63 so hit sets fit in one 64-bit mask.
    """

    empty_degrees: tuple
    blocked_halves: tuple = ()

    def __post_init__(self):
        if len(self.empty_degrees) + len(self.blocked_halves) > 63:
            raise ValueError("frozen state limited to 63 vertices")
        if self.U % 2 != 0:
            raise ValueError("U must be even")

    @property
    def U(self) -> int:
        return int(sum(self.empty_degrees) + sum(self.blocked_halves))

    def E(self) -> dict:
        out: dict = {}
        for d in self.empty_degrees:
            out[d] = out.get(d, 0) + 1
        return out

    def sim_state(self) -> SimState:
        return SimState(t=0.0, U=self.U, E=self.E(), S=0, S_by_degree={})


@dataclass
class OneFiringEstimate:
    """Monte-Carlo drift estimate from repeated single firings of a state.

    Means and standard errors are already scaled by the number of empty
    vertices, i.e. directly comparable to the drift formulas.
    """

    dS: float
    dU_mean: float
    dU_se: float
    dE_mean: dict
    dE_se: dict
    trials: int


def mc_one_firing(
    state: FrozenState, trials: int, rng, chunk: int = 1 << 15
) -> OneFiringEstimate:
    """Simulate one clock firing from a frozen state, many times.

    Each trial picks a uniform empty vertex v and realizes a uniform matching
    of all unpaired half-edges (the law of v's lazy pairings), then measures
    the change in U and in each E(k).
    """
    empty_degrees = list(state.empty_degrees)
    ne = len(empty_degrees)
    if ne == 0:
        raise ValueError("state has no empty vertices")
    U = state.U
    owners_list: list = []
    starts = []
    for v, d in enumerate(empty_degrees):
        starts.append(len(owners_list))
        owners_list.extend([v] * d)
    for b, h in enumerate(state.blocked_halves):
        owners_list.extend([ne + b] * h)
    owners = np.array(owners_list, dtype=np.int64)

    degree_set = sorted(set(empty_degrees))
    vbit = [np.uint64(1 << v) for v in range(ne)]
    mask_by_degree = {
        k: np.uint64(sum(1 << v for v, d in enumerate(empty_degrees) if d == k))
        for k in degree_set
    }

    sum_du = 0.0
    sumsq_du = 0.0
    sum_de = {k: 0.0 for k in degree_set}
    sumsq_de = {k: 0.0 for k in degree_set}

    counts = rng.multinomial(trials, np.full(ne, 1.0 / ne))
    base = np.tile(np.arange(U, dtype=np.int64), (min(chunk, trials), 1))
    for v, nv in enumerate(counts):
        nv = int(nv)
        if nv == 0:
            continue
        j = empty_degrees[v]
        if j == 0 or U == 0:
            # no pairings: only v itself leaves E
            sum_de[j] += -1.0 * nv
            sumsq_de[j] += 1.0 * nv
            continue
        done = 0
        while done < nv:
            c = min(chunk, nv - done)
            done += c
            perm = rng.permuted(base[:c], axis=1)
            po = owners[perm].reshape(c, U // 2, 2)
            o0 = po[:, :, 0]
            o1 = po[:, :, 1]
            v0 = o0 == v
            v1 = o1 == v
            loops = (v0 & v1).sum(axis=1)
            du = -(2 * j - 2 * loops).astype(np.float64)
            sum_du += float(du.sum())
            sumsq_du += float((du * du).sum())
            hit_owner = np.where(v0 & ~v1, o1, np.where(v1 & ~v0, o0, -1))
            safe = np.maximum(hit_owner, 0)
            bits = np.where(
                hit_owner >= 0,
                np.uint64(1) << safe.astype(np.uint64),
                np.uint64(0),
            )
            hitmask = np.bitwise_or.reduce(bits, axis=1)
            for k in degree_set:
                mk = mask_by_degree[k] & ~vbit[v]
                cnt = np.bitwise_count(hitmask & mk).astype(np.float64)
                de = -cnt - (1.0 if k == j else 0.0)
                sum_de[k] += float(de.sum())
                sumsq_de[k] += float((de * de).sum())

    scale = float(ne)
    mean_du = sum_du / trials
    var_du = max(sumsq_du / trials - mean_du**2, 0.0)
    dE_mean = {}
    dE_se = {}
    for k in degree_set:
        m = sum_de[k] / trials
        var = max(sumsq_de[k] / trials - m**2, 0.0)
        dE_mean[k] = scale * m
        dE_se[k] = scale * math.sqrt(var / trials)
    return OneFiringEstimate(
        dS=scale,
        dU_mean=scale * mean_du,
        dU_se=scale * math.sqrt(var_du / trials),
        dE_mean=dE_mean,
        dE_se=dE_se,
        trials=trials,
    )
