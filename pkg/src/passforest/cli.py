"""Command-line interface.

Exit codes: 0 success, 1 invalid input (bad pipeline, bad file
contents), 2 environment problems (missing opt, missing files, empty
dataset), 3 evaluation failure. Every command takes --json for
machine-readable output; commands with randomness take --seed and are
bit-reproducible on the mock evaluator.
"""

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import (
    BackendUnavailable,
    InvalidPipeline,
    MalformedIR,
    PassForestError,
)
from .evaluation import OptBackend, evaluate as evaluate_request, EvaluationRequest
from .forest import validate as validate_forest
from .grammar import parse_pipeline, print_pipeline
from .metrics import ProgramResult, aggregate
from .mock import MockBackend
from .refine import RefineConfig, refine
from .registry import default_registry, load_registry
from .search import SearchConfig, run_search
from .skeletons import SKELETON_VARIANT_NAMES, build_skeleton_variant
from .synergy import load_graph, mine_synergies, save_graph, SynergyGraph

EXIT_OK = 0
EXIT_INVALID_INPUT = 1
EXIT_ENVIRONMENT = 2
EXIT_EVALUATION = 3


def _load_registry_arg(args):
    if args.registry:
        return load_registry(Path(args.registry).read_text(encoding="utf-8"))
    return default_registry()


def _backend_from_args(args):
    if args.evaluator == "mock":
        return MockBackend()
    return OptBackend(opt_path=args.opt_path, timeout=args.timeout)


def _emit(args, payload: dict, text_lines) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _add_registry_flag(parser):
    parser.add_argument(
        "--registry",
        metavar="FILE",
        help="pass registry file (name=level per line); default: built-in",
    )


def _add_evaluator_flags(parser):
    parser.add_argument(
        "--evaluator",
        choices=("mock", "opt"),
        default="mock",
        help="evaluation backend (default: mock)",
    )
    parser.add_argument(
        "--opt-path",
        help="opt executable for --evaluator=opt "
        "(default: $PASSFOREST_OPT, then PATH)",
    )
    parser.add_argument(
        "--timeout",
        type=float,
        default=60.0,
        help="per-invocation opt timeout in seconds (default: 60)",
    )
    parser.add_argument(
        "--parallel",
        type=int,
        default=1,
        metavar="N",
        help="max concurrent backend invocations (default: 1)",
    )


def _add_json_flag(parser):
    parser.add_argument(
        "--json", action="store_true", help="machine-readable JSON output"
    )


def cmd_validate(args) -> int:
    registry = _load_registry_arg(args)
    try:
        forest = parse_pipeline(args.pipeline, registry)
    except PassForestError as exc:
        _emit(args, {"valid": False, "diagnostics": [str(exc)]}, [f"invalid: {exc}"])
        return EXIT_INVALID_INPUT
    violations = validate_forest(forest, registry)
    if violations:
        _emit(
            args,
            {"valid": False, "diagnostics": [str(v) for v in violations]},
            [f"invalid: {v}" for v in violations],
        )
        return EXIT_INVALID_INPUT
    _emit(args, {"valid": True, "canonical": print_pipeline(forest)}, ["valid"])
    return EXIT_OK


def cmd_fmt(args) -> int:
    registry = _load_registry_arg(args)
    forest = parse_pipeline(args.pipeline, registry)
    canonical = print_pipeline(forest)
    _emit(args, {"canonical": canonical}, [canonical])
    return EXIT_OK


def _dataset_programs(args) -> list:
    dataset = Path(args.dataset)
    if not dataset.is_dir():
        raise BackendUnavailable(f"dataset directory not found: {dataset}")
    suffixes = (".json",) if args.evaluator == "mock" else (".ll", ".bc")
    programs = sorted(
        str(p) for p in dataset.iterdir() if p.suffix in suffixes
    )
    if not programs:
        raise BackendUnavailable(
            f"no {'/'.join(suffixes)} programs under {dataset}"
        )
    return programs


def cmd_mine(args) -> int:
    registry = _load_registry_arg(args)
    backend = _backend_from_args(args)
    programs = _dataset_programs(args)
    checkpoint = args.checkpoint or (args.out + ".ckpt")
    graph = mine_synergies(
        programs,
        registry,
        backend,
        checkpoint_path=checkpoint,
        parallel=args.parallel,
    )
    save_graph(graph, args.out)
    payload = {
        "out": args.out,
        "programs": len(programs),
        "nodes": len(graph.nodes),
        "edges": len(graph.edges),
    }
    _emit(
        args,
        payload,
        [
            f"mined {len(programs)} program(s): "
            f"{len(graph.nodes)} node(s), {len(graph.edges)} edge(s)",
            f"graph written to {args.out}",
        ],
    )
    return EXIT_OK


def _search_config(args) -> SearchConfig:
    return SearchConfig(
        population_size=args.population,
        generations=args.generations,
        max_sequence_length=args.max_len,
        crossover_rate=args.crossover_rate,
        mutation_rate=args.mutation_rate,
        seed=args.seed,
    )


def cmd_search(args) -> int:
    registry = _load_registry_arg(args)
    backend = _backend_from_args(args)
    graph = load_graph(args.graph) if args.graph else SynergyGraph.empty()
    config = _search_config(args)
    best, log = run_search(
        args.program, graph, registry, backend, config, parallel=args.parallel
    )
    if args.log:
        with open(args.log, "w", encoding="utf-8") as fh:
            for record in log:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
    payload = {
        "best_pipeline": print_pipeline(best.forest),
        "best_fitness": best.fitness,
        "generations": log,
    }
    _emit(
        args,
        payload,
        [
            f"best pipeline: {print_pipeline(best.forest)}",
            f"fitness (instruction-count reduction): {best.fitness}",
        ],
    )
    return EXIT_OK


def cmd_refine(args) -> int:
    registry = _load_registry_arg(args)
    backend = _backend_from_args(args)
    seed_forest = parse_pipeline(args.pipeline, registry)
    config = RefineConfig(
        exhaustive_budget=args.exhaustive_budget, seed=args.seed
    )
    result = refine(
        seed_forest, args.program, backend, config, parallel=args.parallel
    )
    payload = result.to_dict()
    _emit(
        args,
        payload,
        [
            f"seed:    {result.seed_pipeline} (ic {result.seed_ic})",
            f"refined: {result.refined_pipeline} (ic {result.refined_ic})",
            f"decision points: {result.decision_point_count}, "
            f"evaluations: {result.evaluations_used}",
        ],
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    registry = _load_registry_arg(args)
    backend = _backend_from_args(args)
    forest = parse_pipeline(args.pipeline, registry)
    result = evaluate_request(
        EvaluationRequest(args.program, forest), backend, registry
    )
    if not result.ok:
        _emit(
            args,
            {"status": result.status, "detail": result.detail},
            [f"evaluation failed: {result.detail}"],
        )
        return EXIT_EVALUATION
    _emit(
        args,
        {"status": "ok", "instruction_count": result.instruction_count},
        [str(result.instruction_count)],
    )
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        rows = json.loads(Path(args.results).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise BackendUnavailable(f"results file not found: {args.results}")
    labels = {}
    if args.manifest:
        labels = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    results = [
        ProgramResult(
            program_id=str(row["program"]),
            ic_oz=int(row["ic_oz"]),
            ic_tuned=int(row["ic_tuned"]),
            dataset=str(
                row.get("dataset") or labels.get(str(row["program"]), "default")
            ),
        )
        for row in rows
    ]
    report = aggregate(results)
    lines = [f"{'dataset':<16} {'mean OverOz %':>14} {'programs':>9}"]
    for label, stats in report["groups"].items():
        lines.append(
            f"{label:<16} {stats['mean_overoz_pct']:>14.2f} {stats['count']:>9}"
        )
    lines.append(
        f"{'mean of dataset means':<31} {report['mean_of_group_means']:.2f}"
    )
    lines.append(
        f"{'per-program grand mean':<31} {report['per_program_mean']:.2f}"
    )
    _emit(args, report, lines)
    return EXIT_OK


def cmd_skeleton_experiment(args) -> int:
    registry = _load_registry_arg(args)
    backend = _backend_from_args(args)
    names = [p.strip() for p in args.passes.split(",")]
    if len(names) != 4:
        raise InvalidPipeline(
            [f"--passes needs exactly 4 comma-separated names, got {len(names)}"]
        )
    original = backend.original_count(args.program)
    rows = []
    for variant in range(1, 6):
        forest = build_skeleton_variant(variant, *names, registry)
        result = backend.evaluate(args.program, forest)
        rows.append(
            {
                "variant": variant,
                "name": SKELETON_VARIANT_NAMES[variant],
                "pipeline": print_pipeline(forest),
                "instruction_count": result.instruction_count if result.ok else None,
                "detail": result.detail,
            }
        )
    payload = {"original_ic": original, "variants": rows}
    lines = [f"original instruction count: {original}"]
    lines.append(f"{'variant':>7}  {'name':<20} {'ic':>8}")
    for row in rows:
        count = row["instruction_count"]
        shown = str(count) if count is not None else f"failed ({row['detail']})"
        lines.append(f"{row['variant']:>7}  {row['name']:<20} {shown:>8}")
    _emit(args, payload, lines)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="passforest",
        description="Grammar-validated, synergy-guided tuning of nested "
        "pass pipelines.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a pipeline string")
    p.add_argument("pipeline")
    _add_registry_flag(p)
    _add_json_flag(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("fmt", help="print the canonical form of a pipeline")
    p.add_argument("pipeline")
    _add_registry_flag(p)
    _add_json_flag(p)
    p.set_defaults(func=cmd_fmt)

    p = sub.add_parser("mine", help="mine a synergy graph from a dataset")
    p.add_argument("--dataset", required=True, help="directory of programs")
    p.add_argument("--out", required=True, help="output graph JSON path")
    p.add_argument(
        "--checkpoint",
        help="checkpoint path for resumable mining (default: <out>.ckpt)",
    )
    _add_registry_flag(p)
    _add_evaluator_flags(p)
    _add_json_flag(p)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("search", help="run the evolutionary search")
    p.add_argument("--program", required=True)
    p.add_argument("--graph", help="synergy graph JSON (omit for unguided)")
    p.add_argument("--population", type=int, default=50)
    p.add_argument("--generations", type=int, default=20)
    p.add_argument("--max-len", type=int, default=24)
    p.add_argument("--crossover-rate", type=float, default=0.9)
    p.add_argument("--mutation-rate", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log", help="write per-generation JSONL log here")
    _add_registry_flag(p)
    _add_evaluator_flags(p)
    _add_json_flag(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("refine", help="refine a pipeline's structure")
    p.add_argument("--program", required=True)
    p.add_argument("--pipeline", required=True)
    p.add_argument("--exhaustive-budget", type=int, default=4096)
    p.add_argument("--seed", type=int, default=0)
    _add_registry_flag(p)
    _add_evaluator_flags(p)
    _add_json_flag(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("evaluate", help="apply a pipeline, print the count")
    p.add_argument("--program", required=True)
    p.add_argument("--pipeline", required=True)
    _add_registry_flag(p)
    _add_evaluator_flags(p)
    _add_json_flag(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="aggregate OverOz results")
    p.add_argument("--results", required=True, help="JSON result rows")
    p.add_argument("--manifest", help="JSON {program: dataset} labels")
    _add_json_flag(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser(
        "skeleton-experiment",
        help="evaluate the five nesting skeletons of a pass quartet",
    )
    p.add_argument("--program", required=True)
    p.add_argument(
        "--passes",
        default="globalopt,inline,gvn,loop-deletion",
        help="comma-separated module,cgscc,function,loop passes",
    )
    _add_registry_flag(p)
    _add_evaluator_flags(p)
    _add_json_flag(p)
    p.set_defaults(func=cmd_skeleton_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BackendUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENVIRONMENT
    except MalformedIR as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EVALUATION
    except (PassForestError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENVIRONMENT


if __name__ == "__main__":
    sys.exit(main())
