"""Command-line entry points: serve, bench, ask, oracle."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .catalog import build_value_index, load_catalog
from .database import Database, EngineError
from .guidance import LexicalConfig, Literal, lexical_model, uniform_model
from .harness import OracleBound, oracle_enumerate, run_benchmark
from .search import EnumConfig, enumerate_queries
from .tsq import EMPTY_TSQ, parse_tsq
from .ast import render_sql


def load_config_file(path: str | None) -> dict:
    """key=value lines; '#' starts a comment."""
    if not path:
        return {}
    values: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SystemExit(f"bad config line: {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def build_enum_config(args, overrides: dict) -> EnumConfig:
    def pick(name, cast, default):
        if getattr(args, name, None) is not None:
            return cast(getattr(args, name))
        if name in overrides:
            return cast(overrides[name])
        return default

    return EnumConfig(
        mode=pick("mode", str, "gpqe"),
        timeout=pick("timeout", float, 60.0),
        max_candidates=pick("max_candidates", int, 200),
        max_set_size=pick("max_set_size", int, 3),
        join_expand_depth=pick("join_expand_depth", int, 1),
        seed=pick("seed", int, 42),
        strict_clauses=bool(pick("strict_clauses", int, 0)),
        max_expansions=pick("max_expansions", int, 0),
    )


def build_model(catalog, db, overrides: dict):
    index = build_value_index(catalog, db)
    return lexical_model(LexicalConfig(
        w_lit=float(overrides.get("w_lit", 2.0)),
        w_agg=float(overrides.get("w_agg", 1.5)),
        w_bare=float(overrides.get("w_bare", 1.0)),
        epsilon=float(overrides.get("epsilon", 0.01)),
        sharpness=float(overrides.get("sharpness", 6.0)),
        value_index=index,
    ))


def parse_literal(raw: str) -> Literal:
    if ":" not in raw:
        raise SystemExit(f"literal must look like type:value, got {raw!r}")
    kind, value = raw.split(":", 1)
    if kind not in ("text", "number"):
        raise SystemExit(f"literal type must be text or number, got {kind!r}")
    if kind == "number":
        number = float(value)
        return Literal("number", int(number) if number.is_integer() else number)
    return Literal("text", value)


def cmd_serve(args) -> int:
    import uvicorn

    from .service import SynthesisService, create_app

    overrides = load_config_file(args.config)
    config = build_enum_config(args, overrides)
    service = SynthesisService(args.db, config=config)
    app = create_app(service)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_bench(args) -> int:
    overrides = load_config_file(args.config)
    config = build_enum_config(args, overrides)
    report = run_benchmark(args.tasks, config, detail=args.detail,
                           db_root=args.db, jobs=args.jobs)
    payload = report.to_json()
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=1) + "\n")
    print(report.to_table())
    return 0


def cmd_ask(args) -> int:
    overrides = load_config_file(args.config)
    config = build_enum_config(args, overrides)
    db = Database.open(args.db)
    catalog = load_catalog(db)
    literals = [parse_literal(raw) for raw in args.literal or []]
    tsq = parse_tsq(Path(args.tsq).read_text()) if args.tsq else EMPTY_TSQ
    model = build_model(catalog, db, overrides)
    shown = 0

    def emit(candidate):
        nonlocal shown
        if shown < args.top_k:
            print(f"{candidate.rank:4d}  {candidate.confidence:.3e}  {candidate.sql}")
            shown += 1

    report = enumerate_queries(args.nlq, literals, model, tsq, db, catalog,
                               config, emit,
                               stop=lambda: shown >= args.top_k)
    if shown == 0:
        print("no candidate satisfied the specification", file=sys.stderr)
    print(f"# {report.reason}: {report.candidates} candidates, "
          f"{report.probes_executed} probes, {report.elapsed:.2f}s",
          file=sys.stderr)
    return 0


def cmd_oracle(args) -> int:
    db = Database.open(args.db)
    catalog = load_catalog(db)
    literals = [parse_literal(raw) for raw in args.literal or []]
    tsq = parse_tsq(Path(args.tsq).read_text()) if args.tsq else EMPTY_TSQ
    bound = OracleBound()
    if args.bound:
        parts = dict(p.split("=", 1) for p in args.bound.split(","))
        bound = OracleBound(
            set_size=int(parts.get("set_size", 2)),
            join_depth=int(parts.get("join_depth", 1)))
    queries = oracle_enumerate(bound, catalog, db, tsq, literals)
    for pq in sorted(queries.values(), key=lambda q: render_sql(q, "executable")):
        print(render_sql(pq, "executable"))
    print(f"# {len(queries)} satisfying queries", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sqlsynth",
        description="Dual-specification SQL synthesis: natural language plus "
                    "example-tuple sketches.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--timeout", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--max-candidates", dest="max_candidates", type=int)
        p.add_argument("--max-set-size", dest="max_set_size", type=int)
        p.add_argument("--join-expand-depth", dest="join_expand_depth", type=int)
        p.add_argument("--max-expansions", dest="max_expansions", type=int)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--db", required=True)
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    common(serve)
    serve.set_defaults(func=cmd_serve, mode=None)

    bench = sub.add_parser("bench", help="run a benchmark task file")
    bench.add_argument("--db", help="directory for relative task db paths")
    bench.add_argument("--tasks", required=True)
    bench.add_argument("--mode", choices=("gpqe", "noguide", "nopq"),
                       default="gpqe")
    bench.add_argument("--detail",
                       choices=("full", "partial", "minimal", "none"),
                       default="full")
    bench.add_argument("--out", help="write report JSON here")
    bench.add_argument("--jobs", type=int, default=1)
    common(bench)
    bench.set_defaults(func=cmd_bench)

    ask = sub.add_parser("ask", help="one-shot synthesis")
    ask.add_argument("--db", required=True)
    ask.add_argument("--nlq", required=True)
    ask.add_argument("--literal", action="append",
                     help="type:value, repeatable")
    ask.add_argument("--tsq", help="sketch JSON file")
    ask.add_argument("--top-k", dest="top_k", type=int, default=10)
    common(ask)
    ask.set_defaults(func=cmd_ask, mode=None)

    oracle = sub.add_parser("oracle", help="brute-force satisfying queries")
    oracle.add_argument("--db", required=True)
    oracle.add_argument("--tsq", help="sketch JSON file")
    oracle.add_argument("--literal", action="append")
    oracle.add_argument("--bound", help="e.g. set_size=2,join_depth=1")
    oracle.set_defaults(func=cmd_oracle)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EngineError as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
