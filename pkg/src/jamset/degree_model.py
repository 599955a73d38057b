"""Degree sequences and limiting degree distributions.

A ``DegreeSequence`` holds exact finite-n degree data as counts n_k
(number of vertices of degree k).  A ``LimitModel`` holds a limiting
probability mass (p_k) together with a mean-degree parameter ``lam``
which may strictly exceed sum(k * p_k): heavy-tailed sequences can lose
mean mass in the limit while the average degree still converges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

MASS_TOL = 1e-12

__all__ = [
    "DegreeSequence",
    "LimitModel",
    "SequenceSpecError",
    "ParityError",
    "ModelError",
    "UnsupportedRegimeError",
    "build_sequence",
    "counts_sequence",
    "regular_sequence",
    "star_sequence",
    "twoblock_sequence",
    "sampled_sequence",
    "poisson_sequence",
    "empirical",
    "limit_model",
    "limit_model_from_spec",
]


class SequenceSpecError(ValueError):
    """Invalid degree-sequence specification."""


class ParityError(SequenceSpecError):
    """The total number of half-edges is odd, so no pairing exists."""


class ModelError(ValueError):
    """Invalid limiting-distribution specification."""


class UnsupportedRegimeError(ModelError):
    """Infinite mean-degree parameter: the limit formulas are not meaningful."""


@dataclass(frozen=True)
class DegreeSequence:
    """Counts n_k of vertices per degree k, for n vertices in total.

    ``m2`` caches sum of d_i(d_i - 1); it controls the probability that the
    configuration model produces a simple graph.
    """

    counts: dict
    n: int
    m2: int

    def __post_init__(self):
        total = 0
        half_edges = 0
        for k, c in self.counts.items():
            if k < 0 or c < 0:
                raise SequenceSpecError(f"negative degree or count: {k}:{c}")
            total += c
            half_edges += k * c
        if total != self.n:
            raise SequenceSpecError(f"counts sum to {total}, expected n={self.n}")
        if half_edges % 2 != 0:
            raise ParityError(f"odd number of half-edges: {half_edges}")

    @property
    def half_edges(self) -> int:
        cached = self.__dict__.get("_half_edges")
        if cached is None:
            cached = sum(k * c for k, c in self.counts.items())
            object.__setattr__(self, "_half_edges", cached)
        return cached

    def degrees(self) -> np.ndarray:
        """Per-vertex degree array, ascending; cached, treat as read-only."""
        cached = self.__dict__.get("_degrees")
        if cached is None:
            cached = np.empty(self.n, dtype=np.int64)
            pos = 0
            for k in sorted(self.counts):
                c = self.counts[k]
                cached[pos : pos + c] = k
                pos += c
            object.__setattr__(self, "_degrees", cached)
        return cached

    def degrees_list(self) -> list:
        """degrees() as a plain list; cached, treat as read-only."""
        cached = self.__dict__.get("_degrees_list")
        if cached is None:
            cached = self.degrees().tolist()
            object.__setattr__(self, "_degrees_list", cached)
        return cached

    def half_edge_layout(self) -> tuple[list, list]:
        """(owner, hstart): owner[h] is the vertex of half-edge h, and vertex v
        owns the contiguous block hstart[v] .. hstart[v] + degree - 1.

        Cached plumbing for the samplers; treat both lists as read-only.
        """
        cached = self.__dict__.get("_layout")
        if cached is None:
            degl = self.degrees_list()
            owner = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees()).tolist()
            hstart = [0] * self.n
            acc = 0
            for v, d in enumerate(degl):
                hstart[v] = acc
                acc += d
            cached = (owner, hstart)
            object.__setattr__(self, "_layout", cached)
        return cached


def _make_sequence(counts: Mapping[int, int]) -> DegreeSequence:
    counts = {int(k): int(c) for k, c in counts.items() if c != 0}
    n = sum(counts.values())
    m2 = sum(k * (k - 1) * c for k, c in counts.items())
    return DegreeSequence(counts=counts, n=n, m2=m2)


def counts_sequence(counts: Mapping[int, int]) -> DegreeSequence:
    if not counts:
        raise SequenceSpecError("empty counts")
    return _make_sequence(counts)


def regular_sequence(d: int, n: int) -> DegreeSequence:
    if n < 1:
        raise SequenceSpecError("regular sequence needs n >= 1")
    if (d * n) % 2 != 0:
        raise ParityError(f"d*n = {d * n} is odd")
    return _make_sequence({d: n})


def star_sequence(n: int) -> DegreeSequence:
    """One vertex of degree n-1, all others of degree 1."""
    if n < 2:
        raise SequenceSpecError("star needs n >= 2")
    if n == 2:
        return _make_sequence({1: 2})
    return _make_sequence({n - 1: 1, 1: n - 1})


def twoblock_sequence(sizes, degrees) -> DegreeSequence:
    """Two vertex blocks with homogeneous degrees, e.g. a few hubs plus leaves."""
    if len(sizes) != 2 or len(degrees) != 2:
        raise SequenceSpecError("twoblock needs two sizes and two degrees")
    (na, nb), (da, db) = sizes, degrees
    counts: dict = {}
    for sz, d in ((na, da), (nb, db)):
        counts[d] = counts.get(d, 0) + sz
    return _make_sequence(counts)


def sampled_sequence(p: Mapping[int, float], n: int, rng) -> DegreeSequence:
    """n i.i.d. draws from the mass p, with parity repair.

    If the sampled half-edge total is odd, one uniformly chosen vertex gets
    its degree incremented by 1 (an O(1/n) perturbation of the mean).
    """
    if n < 1:
        raise SequenceSpecError("sampling needs n >= 1")
    ks = np.array(sorted(p), dtype=np.int64)
    ps = np.array([p[int(k)] for k in ks], dtype=float)
    ps = ps / ps.sum()
    draws = rng.multinomial(n, ps)
    counts = {int(k): int(c) for k, c in zip(ks, draws) if c > 0}
    return _repair_parity(counts, n, rng)


def poisson_sequence(c: float, n: int, rng) -> DegreeSequence:
    """n i.i.d. Poisson(c) degrees, with parity repair."""
    if n < 1:
        raise SequenceSpecError("sampling needs n >= 1")
    degs = rng.poisson(c, size=n)
    ks, cs = np.unique(degs, return_counts=True)
    counts = {int(k): int(c_) for k, c_ in zip(ks, cs)}
    return _repair_parity(counts, n, rng)


def _repair_parity(counts: dict, n: int, rng) -> DegreeSequence:
    total = sum(k * c for k, c in counts.items())
    if total % 2 != 0:
        ks = sorted(counts)
        weights = np.array([counts[k] for k in ks], dtype=float)
        k = int(ks[rng.choice(len(ks), p=weights / weights.sum())])
        counts[k] -= 1
        if counts[k] == 0:
            del counts[k]
        counts[k + 1] = counts.get(k + 1, 0) + 1
    return _make_sequence(counts)


def build_sequence(spec: Mapping, rng=None) -> DegreeSequence:
    """Construct a degree sequence from a JSON-style spec.

    Accepted kinds: ``regular`` (d, n), ``star`` (n), ``counts`` (counts map),
    ``poisson`` (c, n; sampled, needs rng), ``sampled`` (p, n; needs rng),
    ``twoblock`` (sizes+degrees, or alpha+gamma+n).
    """
    if not spec or "kind" not in spec:
        raise SequenceSpecError(f"sequence spec needs a 'kind': {spec!r}")
    kind = spec["kind"]
    try:
        if kind == "regular":
            return regular_sequence(int(spec["d"]), int(spec["n"]))
        if kind == "star":
            return star_sequence(int(spec["n"]))
        if kind == "counts":
            return counts_sequence({int(k): int(c) for k, c in spec["counts"].items()})
        if kind == "poisson":
            if rng is None:
                raise SequenceSpecError("poisson sequence spec needs an rng")
            return poisson_sequence(float(spec["c"]), int(spec["n"]), rng)
        if kind == "sampled":
            if rng is None:
                raise SequenceSpecError("sampled sequence spec needs an rng")
            p = {int(k): float(v) for k, v in spec["p"].items()}
            return sampled_sequence(p, int(spec["n"]), rng)
        if kind == "twoblock":
            if "sizes" in spec:
                return twoblock_sequence(
                    [int(s) for s in spec["sizes"]], [int(d) for d in spec["degrees"]]
                )
            return twoblock_from_exponents(
                int(spec["n"]), float(spec["alpha"]), float(spec["gamma"])
            )
    except KeyError as exc:
        raise SequenceSpecError(f"sequence spec {spec!r} missing field {exc}") from exc
    raise SequenceSpecError(f"unknown sequence kind {kind!r}")


def twoblock_from_exponents(n: int, alpha: float, gamma: float) -> DegreeSequence:
    """Block A: ~n^alpha vertices of degree ~n^alpha; block B: the rest of degree ~n^gamma.

    If the half-edge total comes out odd, one block-B vertex gets degree+1.
    """
    na = int(round(n**alpha))
    da = na
    nb = n - na
    if nb < 1:
        raise SequenceSpecError(f"twoblock exponents leave no block-B vertices at n={n}")
    db = max(1, int(n**gamma))
    counts = {da: na}
    counts[db] = counts.get(db, 0) + nb
    if (na * da + nb * db) % 2 != 0:
        counts[db] -= 1
        if counts[db] == 0:
            del counts[db]
        counts[db + 1] = counts.get(db + 1, 0) + 1
    return _make_sequence(counts)


def empirical(seq: DegreeSequence) -> tuple[dict, float]:
    """Empirical degree mass phat_k = n_k/n and average degree lambda_n."""
    if seq.n < 1:
        raise SequenceSpecError("empirical needs n >= 1")
    phat = {k: c / seq.n for k, c in sorted(seq.counts.items())}
    lambda_n = sum(k * c for k, c in seq.counts.items()) / seq.n
    return phat, lambda_n


@dataclass(frozen=True)
class LimitModel:
    """Limiting degree distribution (p_k) with mean-degree parameter lam.

    lam >= sum(k * p_k) is required (Fatou); strict excess is allowed and all
    theory formulas use lam, never the mass mean.
    """

    p: dict
    lam: float
    tail_tol: float = MASS_TOL

    def __post_init__(self):
        mass = math.fsum(self.p.values())
        if abs(mass - 1.0) > MASS_TOL:
            raise ModelError(f"mass sums to {mass!r}, not 1")
        if any(v < 0 for v in self.p.values()):
            raise ModelError("negative mass")
        if math.isinf(self.lam):
            raise UnsupportedRegimeError(
                "lam = inf: average degree diverges and the limit formulas do not apply"
            )
        mu = self.mean_degree
        if self.lam < mu - MASS_TOL:
            raise ModelError(f"lam={self.lam} below mass mean {mu}")
        if not self.lam > 0:
            raise ModelError(f"lam must be positive, got {self.lam}")

    @property
    def mean_degree(self) -> float:
        """Mean of the mass map itself (mu); may be strictly below lam."""
        return math.fsum(k * v for k, v in self.p.items())

    def mass_below_two(self) -> float:
        return self.p.get(0, 0.0) + self.p.get(1, 0.0)


def limit_model(
    p: Mapping[int, float], lam: Optional[float] = None, tail_tol: float = MASS_TOL
) -> LimitModel:
    """Validated LimitModel; lam defaults to the mass mean sum(k * p_k)."""
    pm = {int(k): float(v) for k, v in p.items() if v != 0.0}
    if lam is None:
        lam = math.fsum(k * v for k, v in pm.items())
    return LimitModel(p=pm, lam=float(lam), tail_tol=tail_tol)


def _poisson_mass(c: float, tail_tol: float) -> dict:
    # truncate where the remaining tail is below tail_tol, then renormalize
    p = {}
    term = math.exp(-c)
    cum = term
    k = 0
    p[0] = term
    while 1.0 - cum >= tail_tol or k < c:
        k += 1
        term *= c / k
        p[k] = term
        cum += term
        if k > 10_000:
            raise ModelError(f"poisson materialization did not converge for c={c}")
    scale = 1.0 / cum
    return {k: v * scale for k, v in p.items()}


def limit_model_from_spec(spec: Mapping, tail_tol: float = MASS_TOL) -> LimitModel:
    """Build a LimitModel from a JSON-style spec.

    Kinds: ``regular`` (point mass at d), ``poisson`` (c; truncated at
    tail_tol and renormalized), ``counts-limit`` (explicit p map, optional
    lambda for mean-excess models).
    """
    if not spec or "kind" not in spec:
        raise ModelError(f"model spec needs a 'kind': {spec!r}")
    kind = spec["kind"]
    tail_tol = float(spec.get("tail_tol", tail_tol))
    try:
        if kind == "regular":
            d = int(spec["d"])
            return limit_model({d: 1.0}, tail_tol=tail_tol)
        if kind == "poisson":
            c = float(spec["c"])
            if c <= 0:
                raise ModelError("poisson needs c > 0")
            return limit_model(_poisson_mass(c, tail_tol), tail_tol=tail_tol)
        if kind == "counts-limit":
            p = {int(k): float(v) for k, v in spec["p"].items()}
            lam = spec.get("lambda")
            return limit_model(p, lam=None if lam is None else float(lam), tail_tol=tail_tol)
    except KeyError as exc:
        raise ModelError(f"model spec {spec!r} missing field {exc}") from exc
    raise ModelError(f"unknown model kind {kind!r}")
