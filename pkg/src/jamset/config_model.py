"""Configuration-model sampling: uniform half-edge matchings and simple graphs.

Vertex i gets d_i labelled half-edges; a uniformly random perfect matching
of all half-edges collapses to a multigraph (loops and multi-edges allowed).
Conditioning on the outcome being simple yields the uniform simple graph
with the given degrees, implemented here by rejection.  Small instances can
be enumerated exhaustively, which serves as the uniformity oracle in tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .degree_model import DegreeSequence, counts_sequence

ENUMERATION_LIMIT = 12  # half-edges; 11!! = 10395 matchings

__all__ = [
    "Multigraph",
    "MatchingOracle",
    "RejectionExhaustionError",
    "EnumerationSizeError",
    "sample_matching",
    "sample_simple",
    "is_simple",
    "enumerate_matchings",
    "star_graph",
    "multigraph_key",
    "edge_list_text",
    "double_factorial",
]


class RejectionExhaustionError(RuntimeError):
    """Rejection sampling found no simple graph within the attempt budget."""


class EnumerationSizeError(ValueError):
    """Instance too large for exhaustive matching enumeration."""


@dataclass(frozen=True)
class Multigraph:
    """Pairing outcome: n vertices, per-vertex degrees, and an edge multiset.

    Edges are stored with each row sorted (u <= v) and rows in lexicographic
    order; a loop at v appears as (v, v) and contributes 2 to v's degree.
    """

    n: int
    degrees: np.ndarray
    edges: np.ndarray
    loop_count: int
    multi_edge_count: int

    def validate(self) -> None:
        deg = np.zeros(self.n, dtype=np.int64)
        loops = 0
        seen: dict = {}
        for u, v in map(tuple, self.edges):
            deg[u] += 1
            deg[v] += 1
            if u == v:
                loops += 1
            else:
                seen[(u, v)] = seen.get((u, v), 0) + 1
        multi = sum(c - 1 for c in seen.values())
        assert np.array_equal(deg, np.asarray(self.degrees)), "handshake violated"
        assert loops == self.loop_count
        assert multi == self.multi_edge_count


def _collapse_small(n: int, degrees, pair_list: list) -> Multigraph:
    # numpy's fixed per-call costs dominate tiny instances; plain lists win
    canon = [(a, b) if a <= b else (b, a) for a, b in pair_list]
    canon.sort()
    loops = 0
    multi = 0
    prev = None
    for e in canon:
        if e[0] == e[1]:
            loops += 1
        else:
            if e == prev:
                multi += 1
            prev = e
    edges = np.array(canon, dtype=np.int64).reshape(-1, 2)
    return Multigraph(
        n=n,
        degrees=np.asarray(degrees, dtype=np.int64),
        edges=edges,
        loop_count=loops,
        multi_edge_count=multi,
    )


def _collapse_pairs(n: int, degrees: np.ndarray, pairs: np.ndarray) -> Multigraph:
    """Canonicalize raw half-edge owner pairs into a Multigraph."""
    if len(pairs) == 0:
        return Multigraph(
            n=n,
            degrees=np.asarray(degrees, dtype=np.int64),
            edges=np.empty((0, 2), dtype=np.int64),
            loop_count=0,
            multi_edge_count=0,
        )
    if len(pairs) <= 32:
        return _collapse_small(n, degrees, [tuple(p) for p in np.asarray(pairs).tolist()])
    pairs = np.sort(np.asarray(pairs, dtype=np.int64), axis=1)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    pairs = pairs[order]
    is_loop = pairs[:, 0] == pairs[:, 1]
    loops = int(is_loop.sum())
    nonloop = pairs[~is_loop]
    if len(nonloop) > 0:
        distinct = int(np.unique(nonloop, axis=0).shape[0])
        multi = len(nonloop) - distinct
    else:
        multi = 0
    return Multigraph(
        n=n,
        degrees=np.asarray(degrees, dtype=np.int64),
        edges=pairs,
        loop_count=loops,
        multi_edge_count=multi,
    )


def sample_matching(seq: DegreeSequence, rng) -> Multigraph:
    """Uniformly random perfect matching of the half-edges, as a multigraph.

    A random permutation paired off consecutively hits every complete pairing
    of the 2m labelled half-edges with probability 1/(2m-1)!!.
    """
    degrees = seq.degrees()
    total = seq.half_edges
    if total <= 32:
        owner, _ = seq.half_edge_layout()
        perm = rng.permutation(total).tolist()
        it = iter(perm)
        pair_list = [(owner[a], owner[b]) for a, b in zip(it, it)]
        return _collapse_small(seq.n, degrees, pair_list)
    owner = np.repeat(np.arange(seq.n, dtype=np.int64), degrees)
    perm = rng.permutation(total)
    pairs = owner[perm].reshape(-1, 2)
    return _collapse_pairs(seq.n, degrees, pairs)


def is_simple(g: Multigraph) -> bool:
    return g.loop_count == 0 and g.multi_edge_count == 0


def star_graph(n: int) -> Multigraph:
    """The star on n vertices: centre (index n-1) joined to every leaf."""
    degrees = np.ones(n, dtype=np.int64)
    degrees[n - 1] = n - 1
    edges = np.column_stack(
        [np.arange(n - 1, dtype=np.int64), np.full(n - 1, n - 1, dtype=np.int64)]
    )
    return Multigraph(n=n, degrees=degrees, edges=edges, loop_count=0, multi_edge_count=0)


def _forced_simple(seq: DegreeSequence):
    # Star degree sequences have exactly one simple realization, but the
    # matching is simple with probability ~ (n-1)!/(2n-3)!!, so rejection
    # would never terminate at scale.  Build the star directly.
    n = seq.n
    if n >= 3 and seq.counts == {n - 1: 1, 1: n - 1}:
        return star_graph(n)
    return None


def sample_simple(
    seq: DegreeSequence, rng, max_attempts: int = 1000
) -> tuple[Multigraph, int]:
    """Uniform simple graph with the given degrees, by rejection.

    Returns (graph, attempts).  Raises RejectionExhaustionError when
    max_attempts matchings were all non-simple, which signals a degree
    sequence whose simplicity probability vanishes (sum k^2 n_k >> n).
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    forced = _forced_simple(seq)
    if forced is not None:
        return forced, 1
    for attempt in range(1, max_attempts + 1):
        g = sample_matching(seq, rng)
        if is_simple(g):
            return g, attempt
    raise RejectionExhaustionError(
        f"no simple graph in {max_attempts} attempts: simplicity probability "
        f"is bounded away from 0 only when sum k^2 n_k = O(n) "
        f"(here sum d_i(d_i-1) = {seq.m2} with n = {seq.n})"
    )


def double_factorial(m: int) -> int:
    out = 1
    for v in range(m, 0, -2):
        out *= v
    return out


@dataclass(frozen=True)
class MatchingOracle:
    """Every complete pairing of the half-edges of a small instance.

    Half-edges are numbered 0..2m-1 in vertex order; each matching is a
    tuple of (a, b) pairs with a < b, pairs sorted by a.
    """

    degrees: tuple
    all_matchings: tuple
    count: int

    def owners(self) -> np.ndarray:
        return np.repeat(
            np.arange(len(self.degrees), dtype=np.int64),
            np.asarray(self.degrees, dtype=np.int64),
        )

    def multigraph_distribution(self) -> dict:
        """Probability of each collapsed multigraph under the uniform matching."""
        owner = self.owners()
        out: dict = {}
        for matching in self.all_matchings:
            key = tuple(
                sorted(tuple(sorted((int(owner[a]), int(owner[b])))) for a, b in matching)
            )
            out[key] = out.get(key, 0) + 1
        return {k: Fraction(v, self.count) for k, v in out.items()}

    def connect_fraction(self, v: int, w: int) -> Fraction:
        """Fraction of matchings in which vertices v and w share an edge."""
        owner = self.owners()
        hits = 0
        for matching in self.all_matchings:
            for a, b in matching:
                ends = {int(owner[a]), int(owner[b])}
                if ends == {v, w}:
                    hits += 1
                    break
        return Fraction(hits, self.count)


def enumerate_matchings(seq: DegreeSequence) -> MatchingOracle:
    """All complete pairings of the half-edges, each exactly once."""
    degrees = tuple(int(d) for d in seq.degrees())
    total = sum(degrees)
    if total > ENUMERATION_LIMIT:
        raise EnumerationSizeError(
            f"{total} half-edges exceeds the enumeration bound {ENUMERATION_LIMIT}"
        )
    matchings: list = []

    def recurse(remaining: tuple, acc: tuple) -> None:
        if not remaining:
            matchings.append(acc)
            return
        a = remaining[0]
        rest = remaining[1:]
        for i, b in enumerate(rest):
            recurse(rest[:i] + rest[i + 1 :], acc + ((a, b),))

    recurse(tuple(range(total)), ())
    expected = double_factorial(total - 1) if total > 0 else 1
    assert len(matchings) == expected
    return MatchingOracle(degrees=degrees, all_matchings=tuple(matchings), count=expected)


def multigraph_key(g: Multigraph) -> tuple:
    """Canonical edge-multiset key, comparable with the oracle distribution."""
    return tuple(map(tuple, g.edges.tolist()))


def edge_list_text(g: Multigraph) -> str:
    """Deterministic 1-based edge list, one 'u v' line per edge (loops as 'v v')."""
    return "".join(f"{u + 1} {v + 1}\n" for u, v in g.edges.tolist())


def matching_from_sequence(degrees) -> DegreeSequence:
    """Helper: a DegreeSequence from an explicit per-vertex degree list."""
    counts: dict = {}
    for d in degrees:
        counts[int(d)] = counts.get(int(d), 0) + 1
    return counts_sequence(counts)
