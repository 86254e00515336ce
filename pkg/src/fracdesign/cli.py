"""Command line interface: construct, evaluate, search, benchmark, report."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .design import (
    WLP_MAX_FACTORS,
    DesignError,
    format_design,
    generalized_wlp,
    moment_pattern,
    read_design,
    resolution,
)
from .harness.providers import ConfigurationError, TransportError
from .reference import ReferenceError, ReferenceStore, is_optimal, publish
from .regular import SpecificationError, build_design, defining_relation, parse_generators

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_TRANSPORT = 0, 1, 2, 3

log = logging.getLogger("fracdesign")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _runs_to_b(n: int) -> int:
    if n < 2 or n & (n - 1):
        raise UsageError(f"--runs must be a power of two, got {n}")
    return n.bit_length() - 1


def _resolution_text(res, m) -> str:
    return f">= {m + 1}" if res is None else str(res)


def _write(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _store(args) -> ReferenceStore:
    return ReferenceStore.load(args.store) if args.store else ReferenceStore.load()


def cmd_construct(args) -> int:
    b = _runs_to_b(args.runs)
    gens = parse_generators(args.generators or "", b)
    design = build_design(b, gens)
    _write(format_design(design, "plain" if args.plain else "prompt"), args.output)
    relation = defining_relation(gens, design.m)
    print(f"defining relation: {relation}", file=sys.stderr)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    design = read_design(Path(args.file).read_text(encoding="utf-8"))
    store = _store(args)
    n, m = design.n, design.m
    pattern = moment_pattern(design)
    lines = [
        f"runs: {n}",
        f"factors: {m}",
        f"resolution: {_resolution_text(resolution(design), m)}",
        f"moment_pattern: {pattern.display(args.places)}",
        "moment_pattern_exact: " + ", ".join(str(k) for k in pattern),
    ]
    if m <= WLP_MAX_FACTORS:
        lines.append(f"wlp: {generalized_wlp(design)}")
    lines.append(f"optimality: {is_optimal(design, store).value}")
    print("\n".join(lines))
    return EXIT_OK


def cmd_search(args) -> int:
    from .search import SearchConfig, search_min_aberration

    config = SearchConfig(exhaustive_budget=args.exhaustive_budget, restarts=args.restarts,
                          seed=args.seed, objective_depth=args.depth)
    result = search_min_aberration(args.runs, args.factors, config)
    lines = [
        f"runs: {args.runs}",
        f"factors: {args.factors}",
        f"mode: {result.mode.value}",
        f"evaluations: {result.evaluations}",
        "generators: " + (",".join(str(g) for g in result.generators) or "-"),
        f"resolution: {_resolution_text(result.resolution, args.factors)}",
        f"moment_pattern: {result.pattern.display(1)}",
        "moment_pattern_exact: " + ", ".join(str(k) for k in result.pattern),
    ]
    if result.wlp is not None:
        lines.append(f"wlp: {result.wlp}")
    print("\n".join(lines))
    if args.output:
        Path(args.output).write_text(format_design(result.design), encoding="utf-8")
    if args.publish:
        target = Path(args.store) if args.store else _packaged_store_path()
        store = ReferenceStore.load(target) if target.exists() else ReferenceStore()
        changed = publish(store, result)
        if changed:
            store.save(target)
        print(f"published: {'yes' if changed else 'no (existing record kept)'} -> {target}")
    return EXIT_OK


def _packaged_store_path() -> Path:
    return Path(__file__).parent / "data" / "reference_patterns.txt"


def cmd_benchmark(args) -> int:
    from .harness.benchmark import LogicalClock, make_tasks, parse_task_filter, run_benchmark
    from .harness.providers import ProviderProfile, load_profiles, make_client

    profiles = load_profiles(args.config)
    if args.offline:
        if not args.fixtures:
            raise UsageError("--offline needs --fixtures DIR")
        base = profiles.get(args.provider) if args.provider else profiles["mock"]
        if base is None:
            raise ConfigurationError(f"unknown provider {args.provider!r}")
        profile = ProviderProfile(id=base.id, dialect="mock", model=base.model, price_in=base.price_in,
                                  price_out=base.price_out, reasoning=base.reasoning,
                                  min_interval=0.0, fixtures=args.fixtures)
        clock = LogicalClock()
    else:
        if args.provider not in profiles:
            raise ConfigurationError(f"unknown provider {args.provider!r}; known: {', '.join(sorted(profiles))}")
        profile = profiles[args.provider]
        clock = None
    cells = parse_task_filter(args.tasks) if args.tasks else None
    tasks = make_tasks(profile, args.replicates, args.seed, cells)
    client = make_client(profile)
    count = 0
    compliant = 0
    for record in run_benchmark(tasks, profile, args.seed, args.log, client=client, clock=clock,
                                store=_store(args)):
        count += 1
        compliant += record.compliant
        log.info("task %d (n=%d, m=%d) replicate %d: %s", record.task_id, record.n, record.m,
                 record.replicate, record.compliance["class"])
    print(f"{count} new record(s), {compliant} compliant -> {args.log}")
    return EXIT_OK


def cmd_report(args) -> int:
    from .harness.benchmark import read_records
    from .report import aggregate, emit_report

    records = read_records(args.log)
    rows = aggregate(records, _store(args))
    title = f"Provider {records[0].provider_id}" if records and args.format == "markdown" else None
    _write(emit_report(rows, args.format, title), args.output)
    return EXIT_OK


def cmd_fixtures(args) -> int:
    from .harness.benchmark import benchmark_grid, parse_task_filter
    from .harness.fixtures import write_mock_fixtures

    cells = sorted(parse_task_filter(args.tasks)) if args.tasks else benchmark_grid()
    paths = write_mock_fixtures(args.directory, cells, args.restarts, args.seed)
    print(f"wrote {len(paths)} fixture file(s) to {args.directory}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fracdesign", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("construct", help="build a regular design from generators")
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--generators", default="", help='e.g. "E=ABC,F=ABD,G=ACD"')
    p.add_argument("--plain", action="store_true", help="plain CSV without row terminators")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("evaluate", help="resolution, moments and WLP of a design file")
    p.add_argument("file")
    p.add_argument("--places", type=int, default=2)
    p.add_argument("--store")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("search", help="minimum aberration search")
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--factors", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=200)
    p.add_argument("--exhaustive-budget", type=int, default=10**6)
    p.add_argument("--depth", type=int, default=None, help="number of moments compared")
    p.add_argument("--publish", action="store_true", help="record the result in the reference store")
    p.add_argument("--store")
    p.add_argument("--output", "-o", help="write the design as CSV")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("benchmark", help="run the replicated LLM benchmark")
    p.add_argument("--provider", default="gpt")
    p.add_argument("--config", help="JSON provider config")
    p.add_argument("--offline", action="store_true", help="replay mock fixtures instead of calling APIs")
    p.add_argument("--fixtures")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--tasks", help='grid filter, e.g. "16:5-15"')
    p.add_argument("--log", required=True, help="JSONL record log (appended, resumable)")
    p.add_argument("--store")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("report", help="aggregate a record log into tables")
    p.add_argument("log")
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    p.add_argument("--store")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("fixtures", help="write mock responses for offline benchmarking")
    p.add_argument("directory")
    p.add_argument("--tasks")
    p.add_argument("--restarts", type=int, default=3, help="search restarts per cell")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fixtures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, SpecificationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigurationError, TransportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (OSError, DesignError, ReferenceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
