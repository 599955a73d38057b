"""Scripted studies confronting simulation with the limit theory.

Each study is driven by a ``Scenario``: a degree-sequence family, an optional
limit model, simulation modes, a list of sizes, and a seed.  Reports are
plain dataclasses with deterministic JSON/CSV renderings, so identical
scenario+seed reruns produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .degree_model import (
    DegreeSequence,
    SequenceSpecError,
    build_sequence,
    empirical,
    limit_model_from_spec,
    twoblock_from_exponents,
)
from .greedy_sim import (
    ReplicaAggregate,
    SimResult,
    TrajectoryConfig,
    replica_generator,
    run_dynamic,
    run_replicas,
)
from .tables import format_csv
from . import theory

PRESET_NAMES = (
    "regular-d2",
    "regular-d3",
    "poisson-c1",
    "poisson-c2",
    "star",
    "twoblock-alpha-gamma",
    "extreme-bimodal",
)

__all__ = [
    "Scenario",
    "ConvergenceReport",
    "ConvergenceRow",
    "TrajectoryGap",
    "CoverageResult",
    "preset",
    "resolve_seq_spec",
    "convergence_study",
    "trajectory_compare",
    "low_degree_coverage",
    "coverage_study",
    "report_json_text",
    "report_csv_text",
]


@dataclass(frozen=True)
class Scenario:
    """A named, fully reproducible study configuration."""

    name: str
    seq_spec: dict
    limit_model_spec: Optional[dict]
    graph_mode: str = "multigraph"
    sim_mode: str = "dynamic"
    loops_policy: str = "include"
    n_list: tuple = (1000, 10_000, 100_000)
    replicas: int = 20
    seed: int = 42
    note: str = ""

    def __post_init__(self):
        if list(self.n_list) != sorted(set(self.n_list)):
            raise ValueError("n_list must be strictly increasing")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "seq_spec": self.seq_spec,
            "limit_model_spec": self.limit_model_spec,
            "graph_mode": self.graph_mode,
            "sim_mode": self.sim_mode,
            "loops_policy": self.loops_policy,
            "n_list": list(self.n_list),
            "replicas": self.replicas,
            "seed": self.seed,
            "note": self.note,
        }


def preset(name: str) -> Scenario:
    """Catalogue of ready-made scenarios, mostly heavy-tail showcases."""
    if name == "regular-d2":
        return Scenario(
            name=name,
            seq_spec={"kind": "regular", "d": 2},
            limit_model_spec={"kind": "regular", "d": 2},
        )
    if name == "regular-d3":
        return Scenario(
            name=name,
            seq_spec={"kind": "regular", "d": 3},
            limit_model_spec={"kind": "regular", "d": 3},
        )
    if name == "poisson-c1":
        return Scenario(
            name=name,
            seq_spec={"kind": "poisson", "c": 1.0},
            limit_model_spec={"kind": "poisson", "c": 1.0},
        )
    if name == "poisson-c2":
        return Scenario(
            name=name,
            seq_spec={"kind": "poisson", "c": 2.0},
            limit_model_spec={"kind": "poisson", "c": 2.0},
        )
    if name == "star":
        # limiting mass sits on degree 1 while the average degree tends to 2:
        # the mean-excess case where only the multigraph theory applies
        return Scenario(
            name=name,
            seq_spec={"kind": "star"},
            limit_model_spec={"kind": "counts-limit", "p": {"1": 1.0}, "lambda": 2.0},
        )
    if name == "twoblock-alpha-gamma":
        return Scenario(
            name=name,
            seq_spec={"kind": "twoblock", "alpha": 0.6, "gamma": 0.05},
            limit_model_spec=None,
            note="diverging average degree; no fixed limit model",
        )
    if name == "extreme-bimodal":
        # desk-scale stand-in for the regime with half the vertices of a
        # degree far above n: first firing in the huge block blocks everything
        # (S = 1), first firing in the small block fills it (S = n/2).
        # Qualitative only; the published exponents need degrees ~ n^3.5.
        return Scenario(
            name=name,
            seq_spec={"kind": "extreme-bimodal"},
            limit_model_spec=None,
            n_list=(20,),
            replicas=10,
            note="qualitative-only: demonstrates non-concentration of S/n",
        )
    raise SequenceSpecError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")


def resolve_seq_spec(template: dict, n: int) -> dict:
    """Materialize an n-parametric spec template at a concrete size."""
    kind = template.get("kind")
    if kind == "twoblock" and "sizes" not in template:
        seq = twoblock_from_exponents(n, float(template["alpha"]), float(template["gamma"]))
        return {"kind": "counts", "counts": {str(k): c for k, c in seq.counts.items()}}
    if kind == "extreme-bimodal":
        half = max(2, n // 2)
        d_small = 5 * n
        d_big = 10 * n * d_small**2 // 2
        if (half * (d_small + d_big)) % 2 != 0:
            d_big += 1
        return {
            "kind": "counts",
            "counts": {str(d_small): half, str(d_big): half},
        }
    out = dict(template)
    out["n"] = int(n)
    return out


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    mean: float
    stddev: float
    gap: Optional[float]
    per_degree_gap: dict

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "stddev": self.stddev,
            "gap": self.gap,
            "per_degree_gap": {str(k): v for k, v in sorted(self.per_degree_gap.items())},
        }


@dataclass(frozen=True)
class ConvergenceReport:
    scenario: Scenario
    theory_result: Optional[theory.TheoryResult]
    rows: tuple
    gaps_weakly_decreasing: Optional[bool]

    def to_json_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_json_dict(),
            "theory": None if self.theory_result is None else self.theory_result.to_json_dict(),
            "rows": [r.to_json_dict() for r in self.rows],
            "gaps_weakly_decreasing": self.gaps_weakly_decreasing,
        }


def convergence_study(
    scenario: Scenario, tol: float = 1e-10, workers: int = 1, k_gap_max: int = 10
) -> ConvergenceReport:
    """Replica means per n against the theoretical jamming constant."""
    theory_result = None
    model = None
    if scenario.limit_model_spec is not None:
        model = limit_model_from_spec(scenario.limit_model_spec)
        theory_result = theory.jamming_constant(model, tol)
    rows = []
    for n in scenario.n_list:
        spec = resolve_seq_spec(scenario.seq_spec, n)
        agg = run_replicas(
            spec,
            scenario.replicas,
            scenario.seed,
            graph_mode=scenario.graph_mode,
            sim_mode=scenario.sim_mode,
            loops_policy=scenario.loops_policy,
            workers=workers,
        )
        gap = None
        per_degree_gap: dict = {}
        if theory_result is not None:
            gap = abs(agg.mean - theory_result.s_inf)
            for k, target in sorted(theory_result.s_inf_by_degree.items()):
                if k > k_gap_max:
                    continue
                per_degree_gap[k] = abs(agg.per_degree_mean.get(k, 0.0) - target)
        rows.append(
            ConvergenceRow(
                n=n,
                mean=agg.mean,
                stddev=agg.stddev,
                gap=gap,
                per_degree_gap=per_degree_gap,
            )
        )
    weakly = None
    if theory_result is not None and len(rows) > 1:
        gaps = [r.gap for r in rows]
        weakly = all(b <= a for a, b in zip(gaps, gaps[1:]))
    return ConvergenceReport(
        scenario=scenario,
        theory_result=theory_result,
        rows=tuple(rows),
        gaps_weakly_decreasing=weakly,
    )


@dataclass(frozen=True)
class TrajectoryGap:
    """Mean-over-replicas sup distance between scaled process and fluid limit."""

    n: int
    replicas: int
    sup_u: float
    sup_s: float
    sup_e: dict

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "replicas": self.replicas,
            "sup_u": self.sup_u,
            "sup_s": self.sup_s,
            "sup_e": {str(k): v for k, v in sorted(self.sup_e.items())},
        }


def trajectory_compare(
    scenario: Scenario,
    n: int,
    track: Optional[TrajectoryConfig] = None,
    tol: float = 1e-10,
) -> TrajectoryGap:
    """Sup over the grid of |scaled process - fluid limit|, averaged over replicas."""
    if scenario.sim_mode != "dynamic":
        raise ValueError("trajectory comparison needs the dynamic simulator")
    if scenario.limit_model_spec is None:
        raise ValueError("scenario has no limit model to compare against")
    track = track or TrajectoryConfig()
    grid = track.grid()
    model = limit_model_from_spec(scenario.limit_model_spec)
    fluid = theory.limit_trajectory(model, grid, tol)
    support = [k for k in sorted(fluid.e) if k <= track.k_track]

    sup_u = []
    sup_s = []
    sup_e = {k: [] for k in support}
    for r in range(scenario.replicas):
        rng = replica_generator(scenario.seed, r)
        seq = build_sequence(resolve_seq_spec(scenario.seq_spec, n), rng)
        _, traj = run_dynamic(
            seq, rng, track=track, loops_policy=scenario.loops_policy, seed_label=scenario.seed
        )
        # grid rows carry the grid times verbatim; the terminal row does not
        on_grid = np.isin(traj.t, grid)
        idx = np.searchsorted(grid, traj.t[on_grid])
        usim = traj.u[on_grid]
        ssim = traj.s[on_grid]
        esim = traj.e[on_grid]
        sup_u.append(float(np.max(np.abs(usim - fluid.u[idx]))))
        sup_s.append(float(np.max(np.abs(ssim - fluid.s[idx]))))
        for k in support:
            sup_e[k].append(float(np.max(np.abs(esim[:, k] - fluid.e[k][idx]))))
    return TrajectoryGap(
        n=n,
        replicas=scenario.replicas,
        sup_u=float(np.mean(sup_u)),
        sup_s=float(np.mean(sup_s)),
        sup_e={k: float(np.mean(v)) for k, v in sup_e.items()},
    )


@dataclass(frozen=True)
class CoverageResult:
    """Selected fraction among the low-degree vertices of one finished run."""

    r_n: int
    covered_fraction: Optional[float]
    threshold: float
    lambda_n: float
    note: str = ""

    def to_json_dict(self) -> dict:
        return {
            "r_n": self.r_n,
            "covered_fraction": self.covered_fraction,
            "threshold": self.threshold,
            "lambda_n": self.lambda_n,
            "note": self.note,
        }


def low_degree_coverage(seq: DegreeSequence, result: SimResult) -> CoverageResult:
    """Fraction of vertices of degree <= min(lambda_n^(1/8), n^(1/6)) selected.

    Meaningful in the diverging-average-degree regime; for bounded-degree
    sequences the threshold usually excludes every vertex and the check is
    reported as not applicable.
    """
    if result.partition is None or result.degrees is None:
        raise ValueError("result must carry the final partition and degrees")
    _, lambda_n = empirical(seq)
    threshold = min(lambda_n ** 0.125, seq.n ** (1.0 / 6.0))
    degrees = np.asarray(result.degrees)
    low = degrees <= threshold
    r_n = int(low.sum())
    if r_n == 0:
        return CoverageResult(
            r_n=0,
            covered_fraction=None,
            threshold=threshold,
            lambda_n=lambda_n,
            note="not-applicable: no vertex of degree below the threshold",
        )
    from .greedy_sim import SELECTED

    covered = int(((np.asarray(result.partition) == SELECTED) & low).sum())
    note = ""
    if r_n == seq.n:
        note = "premise-not-met: threshold covers every vertex (bounded degrees)"
    return CoverageResult(
        r_n=r_n,
        covered_fraction=covered / r_n,
        threshold=threshold,
        lambda_n=lambda_n,
        note=note,
    )


def coverage_study(scenario: Scenario, n: int, seeds: int = 10) -> list:
    """Low-degree coverage across independent seeds (dynamic multigraph runs)."""
    out = []
    for r in range(seeds):
        rng = replica_generator(scenario.seed, r)
        seq = build_sequence(resolve_seq_spec(scenario.seq_spec, n), rng)
        result, _ = run_dynamic(
            seq, rng, loops_policy=scenario.loops_policy, seed_label=scenario.seed
        )
        out.append(low_degree_coverage(seq, result))
    return out


def report_json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def report_csv_text(report: ConvergenceReport) -> str:
    degrees = sorted({k for r in report.rows for k in r.per_degree_gap})
    header = ["n", "mean", "stddev", "gap"] + [f"gap_k{k}" for k in degrees]
    rows = []
    for r in report.rows:
        rows.append(
            [r.n, r.mean, r.stddev, "" if r.gap is None else r.gap]
            + [r.per_degree_gap.get(k, "") for k in degrees]
        )
    return format_csv(header, rows)
