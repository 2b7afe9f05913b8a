"""Command-line interface: ``bagdet <subcommand> ...``.

Exit status: 0 on success (or a positive determinacy answer), 1 for a
negative answer or a failed verification, 2 on any error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, exacta
from .config import load_config
from .detbool import decide
from .h10 import encode, parse_instance, witness_from_solution
from .pathdet import (
    bag_to_json,
    build_path_witness,
    decide_path,
    eval_path_query,
    find_path,
    prefix_graph,
    reachable,
    verify_path_witness,
    walk_from_path,
)
from .qcore import (
    QueryParseError,
    ResourceLimitExceeded,
    Schema,
    UnionQuery,
    eval_ucq,
    format_schema,
    format_structure,
    parse_path_query,
    parse_query_file,
    parse_schema,
    parse_statements,
    parse_structure,
)
from .witness import verify_witness

log = logging.getLogger("bagdet")


class CliError(Exception):
    pass


# ---------------------------------------------------------------------------
# loading


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _schema(args) -> Schema | None:
    return parse_schema(_read(args.schema)) if args.schema else None


def _query_groups(texts: list[str], schema: Schema | None):
    """Parse several query files against one schema (inferred jointly when not given)."""
    if schema is None:
        schema = Schema.of({})
        for text in texts:
            schema = schema.merge(parse_statements(text)[0])
    return schema, [parse_query_file(text, schema) for text in texts]


def _single_cq(groups: dict, what: str):
    if len(groups) != 1 or len(next(iter(groups.values()))) != 1:
        raise CliError(f"{what} file must contain exactly one conjunctive query")
    return next(iter(groups.values()))[0]


def _views_as_cqs(groups: dict):
    views = []
    for name, disjuncts in groups.items():
        if len(disjuncts) != 1:
            raise CliError(f"view {name} has {len(disjuncts)} disjuncts; decide handles conjunctive views only")
        views.append(disjuncts[0])
    return views


def _load_structure(path: str, schema: Schema):
    s = parse_structure(_read(path))
    return s.with_schema(schema.merge(s.schema))


def _path_schema(args, words: list[str]) -> Schema:
    schema = _schema(args)
    if schema is not None:
        return schema
    letters = set()
    for w in words:
        letters.update(w.split(".") if "." in w else w)
    return Schema.of({a: 2 for a in letters})


def _word_arg(value: str) -> str:
    p = Path(value)
    return p.read_text(encoding="utf-8").strip() if p.is_file() else value


def _view_words(value: str) -> list[str]:
    p = Path(value)
    text = p.read_text(encoding="utf-8") if p.is_file() else value.replace(",", "\n")
    return [w.strip() for w in text.splitlines() if w.strip() and not w.strip().startswith("#")]


# ---------------------------------------------------------------------------
# output


def _emit(data: dict, cfg) -> None:
    if cfg.output_format == "json":
        print(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False))
    else:
        for key in sorted(data):
            value = data[key]
            print(f"{key}: {value if isinstance(value, (str, int, bool)) else json.dumps(value, sort_keys=True, ensure_ascii=False)}")


def _out_dir(args) -> Path:
    out = Path(args.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> str:
    path.write_text(text, encoding="utf-8")
    return str(path)


def _write_json(path: Path, data) -> str:
    return _write(path, json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# commands


def _write_cq_witness(verdict, out: Path, figures: bool) -> tuple[list[str], dict]:
    wp = verdict.witness
    files = []
    if wp.materialized:
        files.append(_write(out / "D.facts", format_structure(wp.d)))
        files.append(_write(out / "D_prime.facts", format_structure(wp.d_prime)))
    trace = {
        "status": wp.status,
        "construction": wp.trace,
        "verification": wp.report,
        "diagnostics": wp.diagnostics,
        "symbolic": {
            "d": wp.d_sym.describe() if wp.d_sym is not None else None,
            "d_prime": wp.d_prime_sym.describe() if wp.d_prime_sym is not None else None,
        },
    }
    files.append(_write_json(out / "trace.json", trace))
    if figures:
        from . import plotting

        files.append(str(plotting.plot_witness_counts(wp.report, out / "witness_counts.png")))
        gb = wp.trace.get("good_basis", {})
        if verdict.basis_size == 2 and "eval_matrix" in gb:
            files.append(str(plotting.plot_cone(gb["eval_matrix"], wp.trace["p"], wp.trace["p_prime"], out / "cone.png")))
    return files, trace


def cmd_decide(args, cfg) -> int:
    schema, (qg, vg) = _query_groups([_read(args.query), _read(args.views)], _schema(args))
    q = _single_cq(qg, "query")
    views = _views_as_cqs(vg)
    synth = args.command == "witness" or args.witness
    verdict = decide(
        views, q, synthesize=synth, limits=cfg.limits,
        witness_options={"max_materialized": cfg.max_materialized_size},
    )
    files = []
    if verdict.witness is not None:
        files, _ = _write_cq_witness(verdict, _out_dir(args), args.figures)
    data = verdict.to_json(files)
    data["vectors"] = {v.name: list(vec) for v, vec in verdict.vectors.items()}
    if verdict.witness is not None:
        data["witness_status"] = verdict.witness.status
    _emit(data, cfg)
    if args.command == "witness":
        if verdict.determined:
            return 1
        return 0 if verdict.witness is not None and verdict.witness.status == "verified" else 2
    return 0 if verdict.determined else 1


def _path_inputs(args):
    qword = _word_arg(args.query)
    vwords = _view_words(args.views) if args.views else []
    schema = _path_schema(args, [qword, *vwords])
    q = parse_path_query(qword, schema)
    views = [parse_path_query(w, schema) for w in vwords]
    return q, views


def cmd_path_decide(args, cfg) -> int:
    q, views = _path_inputs(args)
    graph = prefix_graph(q, views)
    determined = decide_path(q, views)
    data = {
        "determined": determined,
        "query": str(q),
        "views": [str(v) for v in views],
        "nodes": len(graph.nodes),
        "edges": [["".join(q.word[:a]) or "ε", "".join(q.word[:b]), str(views[vi])] for a, b, vi in graph.edges],
    }
    moves = find_path(graph)
    if moves is not None:
        walk = walk_from_path(q, views, moves)
        data["path"] = [[str(views[vi]), sign] for vi, sign in moves]
        data["walk"] = str(walk)
    files = []
    if args.figures:
        from . import plotting

        files.append(str(plotting.plot_prefix_graph(graph, reachable(graph), moves, _out_dir(args) / "prefix_graph.png")))
    if args.command == "path-witness":
        if determined:
            data["witness_files"] = files
            _emit(data, cfg)
            return 1
        wp = build_path_witness(q, views)
        out = _out_dir(args)
        files += [
            _write(out / "D.facts", format_structure(wp.d)),
            _write(out / "D_prime.facts", format_structure(wp.d_prime)),
        ]
        report = dict(wp.report)
        report["q_bag_d"] = bag_to_json(eval_path_query(q, wp.d))
        report["q_bag_d_prime"] = bag_to_json(eval_path_query(q, wp.d_prime))
        files.append(_write_json(out / "report.json", report))
        data["witness_verified"] = wp.verified
        data["reachable"] = sorted("".join(q.word[:i]) or "ε" for i in wp.reachable)
        data["witness_files"] = files
        _emit(data, cfg)
        return 0 if wp.verified else 2
    data["figures"] = files
    _emit(data, cfg)
    return 0 if determined else 1


def cmd_eval(args, cfg) -> int:
    if args.path:
        word = _word_arg(args.path)
        schema = _path_schema(args, [word])
        s = _load_structure(args.structure, schema)
        q = parse_path_query(word, s.schema)
        bag = eval_path_query(q, s)
        _emit({"query": str(q), "bag": bag_to_json(bag), "total": sum(bag.values())}, cfg)
        return 0
    if not args.query:
        raise CliError("eval needs --query or --path")
    schema, (groups,) = _query_groups([_read(args.query)], _schema(args))
    s = _load_structure(args.structure, schema)
    counts = {name: eval_ucq(UnionQuery(tuple(ds)), s, cfg.limits)
              for name, ds in groups.items()}
    _emit({"counts": counts}, cfg)
    return 0


def cmd_verify(args, cfg) -> int:
    if not args.structure or len(args.structure) != 2:
        raise CliError("verify needs --structure twice (D then D')")
    if args.path:
        q, views = _path_inputs(args)
        d = _load_structure(args.structure[0], q.schema)
        dp = _load_structure(args.structure[1], q.schema)
        dom = d.domain | dp.domain
        d = type(d)(d.schema, d.facts, dom, True)
        dp = type(dp)(d.schema, dp.facts, dom, True)
        report = verify_path_witness(q, views, d, dp)
        report["passed"] = report["views_equal"] and report["query_differs"]
        _emit(report, cfg)
        return 0 if report["passed"] else 1
    schema, (qg, vg) = _query_groups([_read(args.query), _read(args.views)], _schema(args))
    d = _load_structure(args.structure[0], schema)
    dp = _load_structure(args.structure[1], schema)
    merged = d.schema.merge(dp.schema)
    d, dp = d.with_schema(merged), dp.with_schema(merged)

    def as_query(ds):
        return ds[0] if len(ds) == 1 else UnionQuery(tuple(ds))

    if len(qg) != 1:
        raise CliError("query file must define exactly one query name")
    q = as_query(next(iter(qg.values())))
    views = [as_query(ds) for ds in vg.values()]
    from .witness import WitnessPair

    report = verify_witness(views, q, WitnessPair(d, dp), cfg.limits)
    _emit(report, cfg)
    return 0 if report["passed"] else 1


def _parse_solution(text: str) -> dict[str, int]:
    out = {}
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        if "=" not in part:
            raise CliError(f"bad solution entry {part!r}; expected x1=3")
        name, value = part.split("=", 1)
        try:
            out[name] = int(value)
        except ValueError:
            raise CliError(f"bad value in {part!r}") from None
    return out


def cmd_h10_encode(args, cfg) -> int:
    instance = parse_instance(_read(args.instance))
    enc = encode(instance)
    out = _out_dir(args)
    files = [
        _write(out / "schema.txt", format_schema(enc.schema)),
        _write(out / "query.cq", str(enc.query) + "\n"),
        _write(out / "views.cq", "".join(str(v) + "\n" for v in enc.views)),
    ]
    _emit({
        "unknowns": list(instance.unknowns),
        "monomials": [str(m) for m in instance.monomials],
        "views": [v.name for v in enc.views],
        "files": files,
    }, cfg)
    return 0


def cmd_h10_witness(args, cfg) -> int:
    instance = parse_instance(_read(args.instance))
    wp = witness_from_solution(instance, _parse_solution(args.solution))
    out = _out_dir(args)
    files = [
        _write(out / "D.facts", format_structure(wp.d)),
        _write(out / "D_prime.facts", format_structure(wp.d_prime)),
        _write_json(out / "report.json", wp.report),
    ]
    _emit({"status": wp.status, "verification": wp.report, "files": files}, cfg)
    return 0 if wp.status == "verified" else 1


def cmd_selftest(args, cfg) -> int:
    from . import selftest

    result = selftest.run(trials=args.trials, seed=cfg.seed)
    _emit(result, cfg)
    return 0 if result["passed"] else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bagdet", description="Bag-semantics query determinacy toolkit")
    parser.add_argument("--version", action="version", version=f"bagdet {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--schema", help="schema file with REL/arity entries")
    common.add_argument("--out-dir", help="directory for witness files and figures")
    common.add_argument("--max-nodes", type=int, dest="max_search_nodes", help="homomorphism search budget")
    common.add_argument("--max-domain", type=int, dest="max_domain_size", help="largest structure built")
    common.add_argument("--max-materialized", type=int, dest="max_materialized_size",
                        help="largest witness written out explicitly")
    common.add_argument("--format", choices=("json", "text"), dest="output_format")
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (("decide", "decide boolean CQ determinacy"), ("witness", "build a counterexample pair")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--query", required=True)
        p.add_argument("--views", required=True)
        if name == "decide":
            p.add_argument("--witness", action="store_true", help="also synthesize a counterexample")
        p.add_argument("--figures", action="store_true", help="render PNG figures into --out-dir")
        p.set_defaults(func=cmd_decide, witness=False)

    for name in ("path-decide", "path-witness"):
        p = sub.add_parser(name, parents=[common], help=f"{name.split('-')[1]} for path queries")
        p.add_argument("--query", required=True, help="word such as ABCD, or a file holding one")
        p.add_argument("--views", default="", help="comma-separated words, or a file with one per line")
        p.add_argument("--figures", action="store_true")
        p.set_defaults(func=cmd_path_decide)

    p = sub.add_parser("eval", parents=[common], help="evaluate a query on a structure")
    p.add_argument("--query")
    p.add_argument("--path", help="path query word instead of --query")
    p.add_argument("--structure", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", parents=[common], help="recheck a witness pair from files")
    p.add_argument("--query", required=True)
    p.add_argument("--views", required=True)
    p.add_argument("--structure", action="append", help="give twice: D then D'")
    p.add_argument("--path", action="store_true", help="treat --query/--views as path words")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("h10-encode", parents=[common], help="encode a polynomial as a UCQ instance")
    p.add_argument("--instance", required=True)
    p.set_defaults(func=cmd_h10_encode)

    p = sub.add_parser("h10-witness", parents=[common], help="witness pair from a natural solution")
    p.add_argument("--instance", required=True)
    p.add_argument("--solution", required=True, help="e.g. x1=2,x2=0")
    p.set_defaults(func=cmd_h10_witness)

    p = sub.add_parser("selftest", parents=[common], help="run built-in property checks and fixtures")
    p.add_argument("--trials", type=int, default=200)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config({
            "max_search_nodes": args.max_search_nodes,
            "max_domain_size": args.max_domain_size,
            "max_materialized_size": args.max_materialized_size,
            "output_format": args.output_format,
            "seed": args.seed,
        })
        return args.func(args, cfg)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except QueryParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
    except ResourceLimitExceeded as exc:
        print(f"resource limit exceeded: {exc}", file=sys.stderr)
    except exacta.PreconditionError as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
    except (ValueError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
