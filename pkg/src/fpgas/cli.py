"""``fpgas`` command line: encode, simulate, optimize, search, benchmark, resources.

Exit codes: 0 success, 1 input error, 2 internal invariant violation.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from fpgas import __version__
from fpgas.qubo import (
    QuboProblem,
    erdos_renyi_edges,
    graph_cut_problem,
    load_graph,
    load_qubo,
)

DIGITS = 12


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2, which is reserved
        raise InputError(f"{self.prog}: {message}")


@dataclass(frozen=True)
class RunManifest:
    subcommand: str
    flags: dict
    seed: int | None
    version: str = __version__
    timestamp: str = field(default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))

    def to_json(self) -> dict:
        return {"subcommand": self.subcommand, "flags": self.flags, "seed": self.seed,
                "version": self.version, "timestamp": self.timestamp}


def _num(x: Any) -> Any:
    """Floats rounded to 12 significant digits, recursively; NaN becomes null."""
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return None
        return float(f"{x:.{DIGITS}g}")
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, dict):
        return {k: _num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_num(v) for v in x]
    if isinstance(x, np.ndarray):
        return _num(x.tolist())
    return x


def _dump(obj: Any) -> str:
    return json.dumps(_num(obj), indent=2, sort_keys=False)


def _emit_json(payload: dict, manifest: RunManifest, out: str | None, exact: tuple[str, ...] = ()) -> None:
    """Write ``payload`` plus the manifest; keys in ``exact`` keep full float precision."""
    rounded = _num({k: v for k, v in payload.items() if k not in exact})
    body = {**rounded, **{k: payload[k] for k in exact}, "manifest": _num(manifest.to_json())}
    text = json.dumps(body, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _write_manifest_sidecar(path: str, manifest: RunManifest) -> None:
    Path(path + ".manifest.json").write_text(_dump(manifest.to_json()) + "\n")


def _range(spec: str) -> np.ndarray:
    from fpgas.schedule import grid

    try:
        lo, hi, step = (float(v) for v in spec.split(":"))
    except ValueError as exc:
        raise InputError(f"range must be LO:HI:STEP, got {spec!r}") from exc
    if step <= 0 or hi < lo:
        raise InputError(f"bad range {spec!r}")
    return grid(lo, hi, step)


def _lambda_arg(text: str) -> int | str:
    if text == "m":
        return "m"
    try:
        return int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected an integer or 'm'") from exc


def _load_problem(args) -> QuboProblem:
    if getattr(args, "qubo", None):
        problem = load_qubo(args.qubo)
    elif getattr(args, "graph", None):
        edges, n = load_graph(args.graph)
        problem = graph_cut_problem(edges, n)
    elif getattr(args, "random_graph", None):
        n, p = args.random_graph
        problem = graph_cut_problem(erdos_renyi_edges(int(n), float(p), args.seed), int(n))
    else:
        raise InputError("give --qubo, --graph or --random-graph")
    if getattr(args, "d", None) is not None:
        problem = problem.with_width(args.d)
    return problem


# -- subcommands ------------------------------------------------------------

def _encoder_circuit(args, problem: QuboProblem):
    from fpgas.encoder import EncoderConfig, build_encoder, build_marker

    config = EncoderConfig(args.lambda_ancilla, args.garbage_free, args.hadamard_shortcut)
    if getattr(args, "fpgs_queries", None) is not None:
        from fpgas.fpgs import FpgsParams, build_fpgs_circuit

        if args.threshold is None:
            raise InputError("--fpgs-queries needs --threshold")
        return build_fpgs_circuit(problem, args.threshold, FpgsParams(args.delta, args.fpgs_queries), config)
    if args.threshold is not None:
        return build_marker(problem, args.threshold, args.beta, config)
    return build_encoder(problem, config)


def cmd_encode(args, manifest: RunManifest) -> int:
    from fpgas.circuit import lower_for_export, lower_mcphase, resources, to_qasm

    problem = _load_problem(args)
    circ = _encoder_circuit(args, problem)
    if args.report:
        _emit_json({"resources": resources(circ).to_json()}, manifest, None)
    if args.emit == "qasm":
        text = to_qasm(lower_mcphase(lower_for_export(circ)))
        if args.out:
            Path(args.out).write_text(text)
            _write_manifest_sidecar(args.out, manifest)
        elif not args.report:
            sys.stdout.write(text)
    elif args.out or not args.report:
        _emit_json({"circuit": circ.to_json()}, manifest, args.out, exact=("circuit",))
    return 0


def cmd_resources(args, manifest: RunManifest) -> int:
    from fpgas.circuit import CostModel, lower_fanout, lower_qft, resources

    problem = _load_problem(args)
    circ = _encoder_circuit(args, problem)
    if args.lower:
        circ = lower_qft(lower_fanout(circ))
    model = CostModel.approximate_qft() if args.cost_model == "approx-qft" else CostModel()
    blocks = {name: resources(circ.block(name), model).to_json() for name in circ.blocks} if not args.lower else {}
    _emit_json({"resources": resources(circ, model).to_json(), "blocks": blocks}, manifest, args.out)
    return 0


def _read_marked(path: str) -> list[str]:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    return [ln for ln in lines if ln and not ln.startswith("#")]


def cmd_simulate(args, manifest: RunManifest) -> int:
    from fpgas.circuit import Circuit
    from fpgas.statevector import success_probability

    data = json.loads(Path(args.circuit).read_text())
    circ = Circuit.from_json(data.get("circuit", data))
    report = success_probability(circ, _read_marked(args.marked))
    if report.leakage > 1e-9:
        raise AssertionError(f"ancilla leakage {report.leakage:.3g} exceeds 1e-9")
    payload = report.to_json()
    if args.report_json:
        _emit_json(payload, manifest, args.out)
    else:
        sys.stdout.write(f"{report.probability:.{DIGITS}g}\n")
    return 0


def cmd_optimize(args, manifest: RunManifest) -> int:
    from fpgas import schedule as S

    if args.mode == "known-lambda":
        lam = args.lam if args.lam is not None else 2.0**-20
        opt = S.optimize_known_lambda(lam)
        _emit_json({"mode": args.mode, "lambda": lam, "delta": opt.delta, "tau": opt.tau, "l": opt.l,
                    "pSuccess": opt.p_success}, manifest, args.out)
    elif args.mode == "schedule":
        lam = args.lam if args.lam is not None else 2.0**-40
        delta = args.delta if args.delta is not None else S.DEFAULT_DELTA
        alpha = args.alpha if args.alpha is not None else S.DEFAULT_ALPHA
        b = S.tau_schedule_bound(S.ScheduleParams(delta, alpha), lam)
        _emit_json({"mode": args.mode, "lambda": lam, "delta": delta, "alpha": alpha, "tau": b.tau,
                    "head": b.head, "tail": b.tail, "s0": b.s0, "lCrit": b.l_crit}, manifest, args.out)
    else:
        lam = args.lam if args.lam is not None else 2.0**-40
        deltas = _range(args.delta_range or "0.3:0.5:0.002")
        alphas = _range(args.alpha_range or "1.5:2.5:0.005")
        portrait = S.phase_portrait(deltas, alphas, lam)
        dl, al, tau = portrait.argmin()
        if args.out:
            with open(args.out, "w") as fh:
                portrait.write_csv(fh, DIGITS)
            _write_manifest_sidecar(args.out, manifest)
        _emit_json({"mode": args.mode, "lambda": lam, "argmin": {"delta": dl, "alpha": al, "tau": tau},
                    "cells": int(portrait.tau.size), "validCells": int(portrait.valid.sum())}, manifest, None)
    return 0


def cmd_search(args, manifest: RunManifest) -> int:
    from fpgas.adaptive import StoppingCondition, run_fpgas
    from fpgas.schedule import ScheduleParams

    problem = _load_problem(args)
    if args.max_queries is None and args.max_rounds is None and args.target is None:
        raise InputError("give at least one of --max-queries, --max-rounds, --target")
    stop = StoppingCondition(args.max_queries, args.max_rounds, args.target)
    params = ScheduleParams(args.delta, args.alpha)
    seeds = np.random.SeedSequence(args.seed).generate_state(args.trials) if args.trials > 1 else [args.seed]
    runs = [
        run_fpgas(problem, stop, params, args.backend, int(s), reset_on_success=args.reset_on_success,
                  warm_start=args.warm_start).to_json()
        for s in seeds
    ]
    best = [r["bestValue"] for r in runs]
    summary = {"trials": len(runs), "meanBestValue": float(np.mean(best)), "maxValue": float(problem.values.max()),
               "hitMaxFraction": float(np.mean(np.array(best) == problem.values.max())),
               "meanQueries": float(np.mean([r["tElapsed"] for r in runs]))}
    _emit_json({"summary": summary, "runs": runs if args.trials <= 1000 else runs[:1000]}, manifest, args.out)
    return 0


def cmd_benchmark(args, manifest: RunManifest) -> int:
    from fpgas.markov import benchmark
    from fpgas.schedule import ScheduleParams

    problem = _load_problem(args)
    rep = benchmark(problem, args.rounds, ScheduleParams(args.delta, args.alpha), args.gas_growth)
    if args.out:
        with open(args.out, "w") as fh:
            rep.write_csv(fh, DIGITS)
        _write_manifest_sidecar(args.out, manifest)
    else:
        rep.write_csv(sys.stdout, DIGITS)
    if args.histogram:
        with open(args.histogram, "w") as fh:
            rep.write_histogram_csv(fh, DIGITS)
        _write_manifest_sidecar(args.histogram, manifest)
    return 0


# -- parser -----------------------------------------------------------------

def _problem_flags(p: argparse.ArgumentParser, graph: bool = True) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--qubo", help="QUBO JSON file")
    if graph:
        src.add_argument("--graph", help="edge-list file (max-cut)")
        src.add_argument("--random-graph", nargs=2, metavar=("N", "P"), type=float,
                         help="seeded connected Erdos-Renyi max-cut instance")


def _encoder_flags(p: argparse.ArgumentParser) -> None:
    _problem_flags(p)
    p.add_argument("--d", type=int, help="value register width")
    p.add_argument("--lambda", dest="lambda_ancilla", type=_lambda_arg, default=1, help="parallelism, 1..m or 'm'")
    p.add_argument("--garbage-free", action="store_true", help="cancel the encoder's garbage phase")
    p.add_argument("--hadamard-shortcut", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--threshold", type=int, help="build the marker for f(x) > THRESHOLD instead")
    p.add_argument("--beta", type=float, default=math.pi, help="marker phase")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    from fpgas.schedule import DEFAULT_ALPHA, DEFAULT_DELTA

    parser = _Parser(prog="fpgas", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("encode", help="build an encoder or marker circuit")
    _encoder_flags(p)
    p.add_argument("--fpgs-queries", type=int, help="emit the full FPGS circuit with this many queries")
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA, help="FPGS failure-amplitude bound")
    p.add_argument("--emit", choices=("json", "qasm"), default="json")
    p.add_argument("--report", action="store_true", help="print the resource report")
    p.add_argument("--out")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("resources", help="resource report of an encoder or marker")
    _encoder_flags(p)
    p.add_argument("--cost-model", choices=("textbook", "approx-qft"), default="textbook")
    p.add_argument("--lower", action="store_true", help="lower FANOUT and QFT before counting")
    p.add_argument("--out")
    p.set_defaults(func=cmd_resources)

    p = sub.add_parser("simulate", help="success probability of a circuit")
    p.add_argument("--circuit", required=True)
    p.add_argument("--marked", required=True, help="file with one bitstring per line")
    p.add_argument("--report-json", action="store_true")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="schedule optimisation")
    p.add_argument("--mode", choices=("known-lambda", "schedule", "portrait"), required=True)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--delta-range", help="LO:HI:STEP")
    p.add_argument("--alpha-range", help="LO:HI:STEP")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("search", help="adaptive search runs")
    _problem_flags(p)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--max-queries", type=int)
    p.add_argument("--max-rounds", type=int)
    p.add_argument("--target", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--backend", choices=("model", "sim"), default="model")
    p.add_argument("--reset-on-success", action="store_true")
    p.add_argument("--warm-start", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("benchmark", help="exact chain comparison against GAS")
    _problem_flags(p)
    p.add_argument("--rounds", type=int, default=4)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--gas-growth", type=float, default=6.0 / 5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="per-round statistics CSV")
    p.add_argument("--histogram", help="per-round value distribution CSV")
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        flags = {k: v for k, v in vars(args).items() if k not in ("func",)}
        manifest = RunManifest(args.command, _num(flags), getattr(args, "seed", None))
        return args.func(args, manifest)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (InputError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # invariant violations and bugs
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
