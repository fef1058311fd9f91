"""Command-line interface: generate, run, solve, verify, sweep.

Exit codes: 0 success (for verify: all pass flags true), 1 computational
refusal (enumeration caps, infeasible budgets, failed verification),
2 usage or I/O/parse errors. Every failure prints one line to stderr,
prefixed "refused:" or "error:".

The default seed is 1729 and can be overridden with the ANTICOORD_SEED
environment variable; seed-identical invocations produce byte-identical
output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

from . import analysis, experiments, solver
from .dynamics import ConvergenceError, run
from .instance import (
    CMode,
    Instance,
    InstanceError,
    WellBehavedInfeasibleError,
    complete_bipartite,
    edges_incident,
    fig1,
    generate_random,
    parse_instance,
    serialize_instance,
)

__all__ = ["main", "parse_args", "dispatch"]


def _default_seed() -> int:
    return int(os.environ.get("ANTICOORD_SEED", experiments.DEFAULT_SEED))


def _parse_ids(text: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated agent ids, got {text!r}")


def _parse_partition(text: str) -> list[list[int]]:
    return [_parse_ids(cell) for cell in text.split("|") if cell.strip()]


def _parse_sizes(text: str) -> list[int]:
    try:
        if ":" in text:
            start, stop, step = (int(x) for x in text.split(":"))
            return list(range(start, stop + 1, step))
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected start:stop:step or a comma list, got {text!r}"
        )


def _parse_probs(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated probabilities, got {text!r}")


def _load_graph(spec: str) -> Instance:
    """Instance from a spec: 'fig1', 'complete:AxB', or a JSON file path."""
    if spec == "fig1":
        return fig1()
    if spec.startswith("complete:"):
        shape = spec[len("complete:"):]
        try:
            a, b = (int(x) for x in shape.lower().split("x"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected complete:AxB, got {spec!r}")
        return complete_bipartite(a, b)
    with open(spec, "r", encoding="utf-8") as fh:
        return parse_instance(fh.read())


def _emit(text: str, out: str | None) -> None:
    if out is None:
        print(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="anticoord",
        description="Anti-coordination control on bipartite network games.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a random instance as JSON")
    gen.add_argument("--n0", type=int, required=True)
    gen.add_argument("--n1", type=int, required=True)
    gen.add_argument("--p", type=float, required=True)
    gen.add_argument("--c-mode", choices=[m.value for m in CMode], default=CMode.UNIFORM01.value)
    gen.add_argument("--seed", type=int, default=_default_seed())
    gen.add_argument("--out", default=None)

    runp = sub.add_parser("run", help="run the learning dynamics under a control set")
    runp.add_argument("--instance", required=True, help="path, 'fig1', or 'complete:AxB'")
    runp.add_argument("--control", type=_parse_ids, default=[])
    runp.add_argument("--trace", action="store_true", help="emit one line per step")
    runp.add_argument("--out", default=None)

    solvep = sub.add_parser("solve", help="select a control set by greedy or brute force")
    solvep.add_argument("--instance", required=True)
    solvep.add_argument("--budget", type=int, required=True)
    solvep.add_argument("--method", choices=["greedy", "brute"], default="greedy")
    solvep.add_argument("--side", choices=["s0", "any"], default="s0")
    solvep.add_argument("--out", default=None)

    verify = sub.add_parser("verify", help="Monte-Carlo verification suites")
    verify.add_argument(
        "check",
        choices=["submodularity", "expectation", "selection-rule", "greedy-bound"],
    )
    verify.add_argument("--graph", default="fig1", help="path, 'fig1', or 'complete:AxB'")
    verify.add_argument("--seed", type=int, default=_default_seed())
    verify.add_argument("--trials", type=int, default=10_000, help="submodularity trials")
    verify.add_argument("--draws", type=int, default=2_000, help="Monte-Carlo draws")
    verify.add_argument("--set-a", type=_parse_ids, default=[1, 2], help="expectation: set A")
    verify.add_argument("--set-b", type=_parse_ids, default=[2, 3], help="expectation: set B")
    verify.add_argument("--partition", type=_parse_partition, default=[[3]], help="selection-rule stages, cells separated by '|'")
    verify.add_argument("--tail", type=_parse_ids, default=[4], help="selection-rule tail set")
    verify.add_argument("--tv-threshold", type=float, default=0.05)
    verify.add_argument("--budget", type=int, default=2, help="greedy-bound budget")
    verify.add_argument("--side", choices=["s0", "any"], default="s0")
    verify.add_argument("--jobs", type=int, default=1)
    verify.add_argument("--out", default=None)

    sweepp = sub.add_parser("sweep", help="size/probability sweep writing CSV + manifest")
    sweepp.add_argument("--sizes", type=_parse_sizes, default=list(range(4, 44, 4)))
    sweepp.add_argument("--probs", type=_parse_probs, default=[0.3, 0.8])
    sweepp.add_argument("--samples", type=int, default=40)
    sweepp.add_argument("--methods", default="greedy,brute")
    sweepp.add_argument("--side", choices=["s0", "any"], default="any")
    sweepp.add_argument("--c-mode", choices=[m.value for m in CMode], default=CMode.UNIFORM01.value)
    sweepp.add_argument("--seed", type=int, default=_default_seed())
    sweepp.add_argument("--jobs", type=int, default=1)
    sweepp.add_argument("--out", required=True)
    sweepp.add_argument("--means-out", default=None)

    return parser.parse_args(argv)


def _cmd_generate(ns: argparse.Namespace) -> int:
    inst = generate_random(ns.n0, ns.n1, ns.p, CMode(ns.c_mode), ns.seed)
    _emit(serialize_instance(inst), ns.out)
    return 0


def _cmd_run(ns: argparse.Namespace) -> int:
    inst = _load_graph(ns.instance)
    trace = run(inst, ns.control)
    lines = trace.format_lines() if ns.trace else []
    final = trace.final
    f_value = edges_incident(inst, final.zeros)
    ratio = f_value / len(inst.edges) if inst.edges else 0.0

    def fmt(s: frozenset[int]) -> str:
        return "[" + ",".join(str(i) for i in sorted(s)) + "]"

    lines.append(
        f"converged_at={trace.converged_at} zeros={fmt(final.zeros)} "
        f"ones={fmt(final.ones)} undecided={fmt(final.undecided)} "
        f"f={f_value} ratio={ratio!r}"
    )
    _emit("\n".join(lines), ns.out)
    return 0


def _cmd_solve(ns: argparse.Namespace) -> int:
    inst = _load_graph(ns.instance)
    side = solver.SideRestriction(ns.side)
    edges = len(inst.edges)
    if ns.method == "greedy":
        result = solver.greedy(inst, ns.budget, side)
        _emit(result.to_json(edges), ns.out)
    else:
        opt = solver.brute_force(inst, ns.budget, side)
        _emit(opt.to_json(edges), ns.out)
    return 0


def _cmd_verify(ns: argparse.Namespace) -> int:
    graph = _load_graph(ns.graph)
    if ns.check == "submodularity":
        rep = analysis.check_influence_submodularity(graph, ns.trials, ns.seed)
        payload = rep.as_dict()
        payload["pass"] = rep.rate <= rep.analytic_bound
    elif ns.check == "expectation":
        rep = analysis.check_expected_submodularity(graph, ns.set_a, ns.set_b, ns.draws, ns.seed)
        payload = rep.as_dict()
    elif ns.check == "selection-rule":
        rep = analysis.check_selection_rule_distribution(
            graph, ns.partition, ns.tail, ns.draws, ns.seed, jobs=ns.jobs
        )
        payload = rep.as_dict()
        payload["tv_threshold"] = ns.tv_threshold
        payload["pass"] = rep.tv_distance <= ns.tv_threshold
    else:
        side = solver.SideRestriction(ns.side)
        rep = analysis.check_greedy_bound(graph, ns.budget, ns.draws, ns.seed, side, jobs=ns.jobs)
        payload = rep.as_dict()
    _emit(json.dumps(payload), ns.out)
    return 0 if payload["pass"] else 1


def _cmd_sweep(ns: argparse.Namespace) -> int:
    methods = tuple(m.strip() for m in ns.methods.split(",") if m.strip())
    cfg = experiments.SweepConfig(
        sizes=tuple(ns.sizes),
        probs=tuple(ns.probs),
        samples_per_cell=ns.samples,
        c_mode=CMode(ns.c_mode),
        side=solver.SideRestriction(ns.side),
        master_seed=ns.seed,
        methods=methods,
        jobs=ns.jobs,
    )
    records = experiments.sweep(cfg)
    experiments.write_csv(records, ns.out)
    manifest = experiments.write_manifest(cfg, ns.out, len(records))
    if ns.means_out:
        experiments.write_means_csv(records, ns.means_out)
    print(f"wrote {len(records)} records to {ns.out} (manifest: {manifest})")
    return 0


_HANDLERS = {
    "generate": _cmd_generate,
    "run": _cmd_run,
    "solve": _cmd_solve,
    "verify": _cmd_verify,
    "sweep": _cmd_sweep,
}


def dispatch(ns: argparse.Namespace) -> int:
    return _HANDLERS[ns.command](ns)


def main(argv: Sequence[str] | None = None) -> int:
    ns = parse_args(sys.argv[1:] if argv is None else list(argv))
    try:
        return dispatch(ns)
    except (solver.EnumerationCapError, ConvergenceError, WellBehavedInfeasibleError) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 1
    except (InstanceError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
