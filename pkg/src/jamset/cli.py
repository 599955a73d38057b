"""Command-line entry point: theory evaluation, simulation, and studies.

Exit codes: 0 ok, 2 invalid configuration, 3 numerical failure, 4 simple-graph
rejection exhaustion.  Replica r of seed s draws from a Philox 4x64-10
counter-based stream keyed (s, r), so runs are reproducible bit-for-bit;
data files embed the resolved configuration and seed, while timestamps and
wall-clock durations go to a ``.meta.json`` sidecar to keep the data files
byte-identical across reruns.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

from . import __version__, experiments, theory
from .degree_model import (
    ModelError,
    SequenceSpecError,
    build_sequence,
    limit_model_from_spec,
)
from .config_model import RejectionExhaustionError
from .greedy_sim import TrajectoryConfig, run_replicas
from .tables import format_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_REJECTION = 4

_EPILOG = """\
exit codes: 0 ok | 2 invalid config | 4 simple-graph rejection exhaustion
            3 numerical failure (quadrature/root refinement diagnostics on stderr)
specs:      inline JSON or @file.json indirection
rng:        Philox 4x64-10 (counter-based); replica r of --seed s uses key (s, r)
threads:    --threads N or the JAMSET_THREADS environment variable
"""


def _load_spec(text: str) -> dict:
    if text.startswith("@"):
        with open(text[1:]) as fh:
            return json.load(fh)
    return json.loads(text)


def _slug(spec: dict) -> str:
    parts = [str(spec.get("kind", "spec"))]
    for key in ("d", "c", "n", "alpha", "gamma"):
        if key in spec:
            parts.append(f"{key}{spec[key]}")
    return "-".join(parts).replace(".", "p")


def _write_output(path: Path, payload: dict, started: float) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(experiments.report_json_text(payload))
    meta = {
        "created_unix": time.time(),
        "duration_s": time.perf_counter() - started,
    }
    path.with_suffix(path.suffix + ".meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n"
    )


def _envelope(config: dict, seed: int, body: dict) -> dict:
    return {"version": __version__, "config": config, "seed": seed, **body}


def cmd_theory(args) -> int:
    started = time.perf_counter()
    seed = args.seed if args.seed is not None else 0
    spec = _load_spec(args.model)
    model = limit_model_from_spec(spec)
    result = theory.jamming_constant(model, tol=args.tol)
    config = {
        "command": "theory",
        "model": spec,
        "tol": args.tol,
        "format": args.format,
    }
    payload = _envelope(config, seed, {"result": result.to_json_dict()})
    out = Path(args.out) / f"theory_{_slug(spec)}.json"
    _write_output(out, payload, started)
    tau = result.tau_inf
    print(f"tau_inf = {'inf' if math.isinf(tau) else f'{tau:.10f}'}")
    print(f"s_inf   = {result.s_inf:.10f}")
    top = sorted(result.s_inf_by_degree.items(), key=lambda kv: -kv[1])[:10]
    for k, v in sorted(top):
        print(f"s_inf({k}) = {v:.10f}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    seed = args.seed if args.seed is not None else 0
    spec = _load_spec(args.seq)
    if args.n is not None:
        spec = experiments.resolve_seq_spec(spec, args.n)
    track = TrajectoryConfig(points=args.track) if args.track else None
    agg = run_replicas(
        spec,
        args.replicas,
        seed,
        graph_mode=args.graph,
        sim_mode=args.mode,
        loops_policy=args.loops,
        track=track,
        max_attempts=args.max_attempts,
        workers=args.threads,
        keep_results=bool(args.track),
    )
    config = {
        "command": "simulate",
        "seq": spec,
        "replicas": args.replicas,
        "graph": args.graph,
        "mode": args.mode,
        "loops": args.loops,
        "track": args.track,
        "format": args.format,
    }
    payload = _envelope(config, seed, {"aggregate": agg.to_json_dict()})
    stem = f"simulate_{_slug(spec)}_seed{seed}"
    outdir = Path(args.out)
    wrote = []
    if args.format in ("json", "both"):
        out = outdir / f"{stem}.json"
        _write_output(out, payload, started)
        wrote.append(out)
    if args.format in ("csv", "both"):
        rows = [[r, frac] for r, frac in enumerate(agg.per_replica)]
        out = outdir / f"{stem}.csv"
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(format_csv(["replica", "s_frac"], rows))
        wrote.append(out)
    if agg.trajectories is not None:
        for r, traj in enumerate(agg.trajectories):
            if traj is None:
                continue
            out = outdir / f"{stem}_rep{r}_trajectory.csv"
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(traj.to_csv_text())
            wrote.append(out)
    print(f"mean S/n = {agg.mean:.6f}  (stddev {agg.stddev:.6f}, {agg.replicas} replicas)")
    for out in wrote:
        print(f"wrote {out}")
    return EXIT_OK


def cmd_study(args) -> int:
    started = time.perf_counter()
    if args.preset:
        scenario = experiments.preset(args.preset)
    else:
        scenario = experiments.Scenario(**_load_spec(args.scenario))
    if args.seed is not None:
        scenario = experiments.Scenario(**{**scenario.to_json_dict(), "seed": args.seed})
    if args.replicas:
        scenario = experiments.Scenario(**{**scenario.to_json_dict(), "replicas": args.replicas})
    outdir = Path(args.out)
    config = {
        "command": "study",
        "kind": args.kind,
        "scenario": scenario.to_json_dict(),
        "tol": args.tol,
        "format": args.format,
    }
    stem = f"study_{scenario.name}_{args.kind}_seed{scenario.seed}"
    if args.kind == "converge":
        report = experiments.convergence_study(scenario, tol=args.tol, workers=args.threads)
        payload = _envelope(config, scenario.seed, {"report": report.to_json_dict()})
        wrote = []
        if args.format in ("json", "both"):
            out = outdir / f"{stem}.json"
            _write_output(out, payload, started)
            wrote.append(out)
        if args.format in ("csv", "both"):
            out = outdir / f"{stem}.csv"
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(experiments.report_csv_text(report))
            wrote.append(out)
        for row in report.rows:
            gap = "-" if row.gap is None else f"{row.gap:.5f}"
            print(f"n={row.n:>9}  mean={row.mean:.6f}  stddev={row.stddev:.6f}  gap={gap}")
        for out in wrote:
            print(f"wrote {out}")
        return EXIT_OK
    if args.kind == "trajectory":
        n = args.n or scenario.n_list[-1]
        track = TrajectoryConfig(points=args.track) if args.track else TrajectoryConfig()
        gap = experiments.trajectory_compare(scenario, n, track=track, tol=args.tol)
        payload = _envelope(config, scenario.seed, {"report": gap.to_json_dict()})
        out = outdir / f"{stem}.json"
        _write_output(out, payload, started)
        print(f"sup_u={gap.sup_u:.5f}  sup_s={gap.sup_s:.5f}  n={gap.n}")
        print(f"wrote {out}")
        return EXIT_OK
    if args.kind == "coverage":
        n = args.n or scenario.n_list[-1]
        rows = experiments.coverage_study(scenario, n, seeds=args.replicas or 10)
        payload = _envelope(
            config, scenario.seed, {"report": [r.to_json_dict() for r in rows]}
        )
        out = outdir / f"{stem}.json"
        _write_output(out, payload, started)
        for i, r in enumerate(rows):
            cf = "-" if r.covered_fraction is None else f"{r.covered_fraction:.4f}"
            print(f"seed-index {i}: r_n={r.r_n} covered={cf} {r.note}")
        print(f"wrote {out}")
        return EXIT_OK
    raise SequenceSpecError(f"unknown study kind {args.kind!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jamset",
        description="Greedy independent sets on configuration-model graphs: "
        "simulation and limit theory.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"jamset {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None, help="64-bit stream seed")
        p.add_argument("--tol", type=float, default=1e-10, help="quadrature tolerance")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--format", choices=("json", "csv", "both"), default="both")
        p.add_argument(
            "--threads",
            type=int,
            default=int(os.environ.get("JAMSET_THREADS", "1")),
            help="replica worker processes (env JAMSET_THREADS)",
        )

    p = sub.add_parser("theory", help="evaluate tau_inf, s_inf, s_inf(k) for a limit model")
    p.add_argument("--model", required=True, help="limit-model spec (JSON or @file)")
    common(p)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("simulate", help="run greedy independent-set replicas")
    p.add_argument("--seq", required=True, help="degree-sequence spec (JSON or @file)")
    p.add_argument("--n", type=int, default=None, help="override/parameterize sequence size")
    p.add_argument("--replicas", type=int, default=20)
    p.add_argument("--graph", choices=("multigraph", "simple"), default="multigraph")
    p.add_argument("--mode", choices=("static", "dynamic"), default="dynamic")
    p.add_argument("--loops", choices=("include", "exclude"), default="include")
    p.add_argument("--track", type=int, default=0, help="trajectory grid points (0 = off)")
    p.add_argument("--max-attempts", type=int, default=1000)
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("study", help="convergence / trajectory / coverage studies")
    p.add_argument("--preset", choices=experiments.PRESET_NAMES, default=None)
    p.add_argument("--scenario", default=None, help="scenario spec (JSON or @file)")
    p.add_argument("--kind", choices=("converge", "trajectory", "coverage"), default="converge")
    p.add_argument("--n", type=int, default=None, help="size for trajectory/coverage kinds")
    p.add_argument("--replicas", type=int, default=0, help="override scenario replicas")
    p.add_argument("--track", type=int, default=0, help="trajectory grid points")
    common(p)
    p.set_defaults(func=cmd_study)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "study" and not args.preset and not args.scenario:
        parser.error("study needs --preset or --scenario")
    try:
        return args.func(args)
    except (SequenceSpecError, ModelError, json.JSONDecodeError, OSError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except theory.NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RejectionExhaustionError as exc:
        print(f"rejection exhausted: {exc}", file=sys.stderr)
        return EXIT_REJECTION


if __name__ == "__main__":
    sys.exit(main())
