"""Command-line pipeline: ingest, build, assess, prioritize, and what-if.

Stage timings are printed with the database-era stage names so runs from
different environments can be eyeballed side by side; absolute values are
never asserted anywhere.

Exit codes: 0 success, 1 usage, 2 bad data or validation, 3 storage/IO.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Any, Optional, Sequence

from . import fixtures as fixture_data
from .assess import (
    DEFAULT_CONFIG,
    DEFAULT_PATH_CAP,
    assess,
    build_harm_from_store,
    gates_from_string,
    render_text_report,
)
from .errors import CloudHarmError, DataError, NotFoundError, StorageError, UsageError
from .model import canonical_json, graph_to_doc, harm_from_doc
from .psv import OBJECTIVES, patch_trajectory, rank_psv_es, trajectory_csv, trajectory_rows
from .sg_ingest import build_reachability_graph, parse_sg_export
from .store import RG_KEY, Store
from .vuln_ingest import ingest_scan, load_nvd_snapshot, parse_scan_report
from .whatif import WhatIfSession, parse_modifications, render_comparison_text

T_SG_PARSE = "Parsing and build Reachability Graph"
T_SG_STORE = "Insert and Update Database"
T_SCAN_PARSE = "Scan report parsing"
T_SCAN_HOST = "Insert and Update Host(AMI) Database"
T_SCAN_VULN = "Insert Vulnerability Database(Including NVD parsing)"


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage problems as exceptions."""

    def error(self, message: str):
        raise UsageError(message)


class _Timer:
    def __init__(self) -> None:
        self.stages: dict[str, float] = {}

    def stage(self, label: str):
        return _Stage(self, label)


class _Stage:
    def __init__(self, timer: _Timer, label: str):
        self._timer = timer
        self._label = label

    def __enter__(self):
        self._start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self._timer.stages[self._label] = time.perf_counter() - self._start
        return False


def _emit(args: argparse.Namespace, doc: dict[str, Any], text: Optional[str] = None) -> None:
    if args.json:
        sys.stdout.write(canonical_json(doc) + "\n")
    elif text is not None:
        sys.stdout.write(text)


def _print_timings(args: argparse.Namespace, timer: _Timer) -> None:
    if args.json:
        return
    for label, seconds in timer.stages.items():
        sys.stdout.write(f"{label}: {seconds:.3f}s\n")


def _open_store(args: argparse.Namespace) -> Store:
    path = args.store or os.environ.get("CLOUDHARM_STORE")
    if not path:
        raise UsageError("no store given; pass --store or set CLOUDHARM_STORE")
    return Store(path)


def _load_model(store: Store, model_id: str):
    doc = store.get("harm_objects", model_id)
    if doc is None:
        raise NotFoundError(f"no model {model_id!r} in store")
    return harm_from_doc(doc)


def _gates(args: argparse.Namespace):
    return gates_from_string(args.gates) if args.gates else DEFAULT_CONFIG


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def cmd_ingest_sg(args: argparse.Namespace) -> int:
    store = _open_store(args)
    timer = _Timer()
    with timer.stage(T_SG_PARSE):
        raw = Path(args.export_file).read_text(encoding="utf-8")
        doc = parse_sg_export(raw)
        graph = build_reachability_graph(
            doc,
            admin_allowlist=args.admin_cidr or (),
            include_admin_rules=args.include_admin_rules,
        )
    with timer.stage(T_SG_STORE):
        store.put("ndb", RG_KEY, graph_to_doc(graph))
    result = {
        "nodes": len(graph.nodes),
        "edges": len(graph.edges),
        "hosts": sorted(graph.hosts),
        "timings": timer.stages,
    }
    _print_timings(args, timer)
    _emit(args, result, f"reachability graph: {result['nodes']} nodes, {result['edges']} edges\n")
    return 0


def cmd_ingest_scan(args: argparse.Namespace) -> int:
    store = _open_store(args)
    timer = _Timer()
    with timer.stage(T_SCAN_PARSE):
        report = parse_scan_report(Path(args.report_file).read_text(encoding="utf-8"))
    with timer.stage(T_SCAN_VULN):
        nvd = load_nvd_snapshot(Path(args.nvd).read_text(encoding="utf-8"))
    with timer.stage(T_SCAN_HOST):
        summary = ingest_scan(report, nvd, store)
    result = {
        "host_id": report.host_id,
        "hosts_updated": summary.hosts_updated,
        "vulns_added": summary.vulns_added,
        "vulns_reused": summary.vulns_reused,
        "timings": timer.stages,
    }
    _print_timings(args, timer)
    _emit(
        args,
        result,
        f"scanned {report.host_id}: {summary.vulns_added} new, {summary.vulns_reused} reused\n",
    )
    return 0


def cmd_build_harm(args: argparse.Namespace) -> int:
    store = _open_store(args)
    targets = [t.strip() for t in args.targets.split(",") if t.strip()]
    model = build_harm_from_store(
        store, targets=targets, label=args.label, model_id=args.model_id
    )
    result = {
        "model_id": model.model_id,
        "hosts": sorted(model.upper.hosts),
        "targets": sorted(model.targets),
        "vuln_instances": len(model.vuln_instances()),
    }
    _emit(args, result, f"built model {model.model_id}\n")
    return 0


def cmd_assess(args: argparse.Namespace) -> int:
    store = _open_store(args)
    model = _load_model(store, args.model_id)
    report = assess(model, _gates(args), cap=args.cap)
    _emit(args, report, render_text_report(report))
    return 0


def cmd_psv(args: argparse.Namespace) -> int:
    store = _open_store(args)
    model = _load_model(store, args.model_id)
    ranking = rank_psv_es(model, args.k, _gates(args), objective=args.objective)
    lines = [f"{'rank':>4}  {'vuln':<14}{'host':<10}{'d_sum_risk':>12}  {'d_or_prob':>10}"]
    for r in ranking.ranked:
        lines.append(
            f"{r.rank:>4}  {r.vuln_id:<14}{r.host_id:<10}"
            f"{r.marginal_sum_risk_reduction:>12.4f}  {r.marginal_or_prob_reduction:>10.6f}"
        )
    _emit(args, ranking.to_doc(), "\n".join(lines) + "\n")
    return 0


def cmd_trajectory(args: argparse.Namespace) -> int:
    store = _open_store(args)
    model = _load_model(store, args.model_id)
    config = _gates(args)
    ranking = rank_psv_es(model, args.k, config, objective=args.objective)
    suites = patch_trajectory(model, ranking, config, store=store)
    doc = {
        "model_id": model.model_id,
        "objective": args.objective,
        "config": config.to_doc(),
        "ranking": ranking.to_doc()["ranked"],
        "rows": trajectory_rows(suites),
    }
    _emit(args, doc, trajectory_csv(suites))
    return 0


def cmd_whatif(args: argparse.Namespace) -> int:
    store = _open_store(args)
    mods = parse_modifications(Path(args.mods).read_text(encoding="utf-8"))
    session = WhatIfSession(store, args.base_id, _gates(args))
    if args.commit:
        variant_id, report = session.commit(mods, label=args.label)
        doc = {"variant_id": variant_id, "report": report}
        _emit(args, doc, f"committed {variant_id}\n" + render_comparison_text(report))
    else:
        report = session.propose(mods)
        _emit(args, report, render_comparison_text(report))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    store = _open_store(args)
    host, _, port = args.listen.rpartition(":")
    app = create_app(store, ui_dir=args.ui_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="info")
    return 0


def cmd_fixtures(args: argparse.Namespace) -> int:
    if args.fixtures_cmd != "install":
        raise UsageError("fixtures supports: install")
    store = _open_store(args)
    result = fixture_data.install_testbed(
        args.testbed, store, include_admin_rules=args.include_admin_rules
    )
    _emit(
        args,
        result,
        f"installed {args.testbed}: model {result['model_id']}, "
        f"{result['vulns_preloaded']} curated vulnerabilities\n",
    )
    return 0


# ---------------------------------------------------------------------------
# Parser wiring
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--store", help="store directory (default: $CLOUDHARM_STORE)")
    common.add_argument("--json", action="store_true", help="machine-readable output")

    parser = _Parser(prog="cloudharm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest-sg", parents=[common], help="parse a security-group export into the NDB")
    p.add_argument("export_file")
    p.add_argument("--include-admin-rules", action="store_true")
    p.add_argument("--admin-cidr", action="append", help="extra admin /32 to exclude (repeatable)")
    p.set_defaults(fn=cmd_ingest_sg)

    p = sub.add_parser("ingest-scan", parents=[common], help="ingest a host scan report")
    p.add_argument("report_file")
    p.add_argument("--nvd", required=True, help="offline NVD snapshot file")
    p.set_defaults(fn=cmd_ingest_scan)

    p = sub.add_parser("build-harm", parents=[common], help="assemble and persist the model")
    p.add_argument("--targets", required=True, help="comma-separated target host ids")
    p.add_argument("--label", default="")
    p.add_argument("--model-id", default=None)
    p.set_defaults(fn=cmd_build_harm)

    p = sub.add_parser("assess", parents=[common], help="metric suite for a stored model")
    p.add_argument("model_id")
    p.add_argument("--gates", help="host gates as '<prob>,<risk>', e.g. max,sum")
    p.add_argument("--cap", type=int, default=DEFAULT_PATH_CAP)
    p.set_defaults(fn=cmd_assess)

    p = sub.add_parser("psv", parents=[common], help="rank vulnerabilities by patching benefit")
    p.add_argument("model_id")
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--gates")
    p.add_argument("--objective", choices=sorted(OBJECTIVES), default="sum_risk")
    p.set_defaults(fn=cmd_psv)

    p = sub.add_parser("trajectory", parents=[common], help="metrics along the top-k patch sequence")
    p.add_argument("model_id")
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--gates")
    p.add_argument("--objective", choices=sorted(OBJECTIVES), default="sum_risk")
    p.set_defaults(fn=cmd_trajectory)

    p = sub.add_parser("whatif", parents=[common], help="preview or commit a modification script")
    p.add_argument("base_id")
    p.add_argument("--mods", required=True, help="modification script file (JSON array)")
    p.add_argument("--commit", action="store_true")
    p.add_argument("--label", default="")
    p.add_argument("--gates")
    p.set_defaults(fn=cmd_whatif)

    p = sub.add_parser("serve", parents=[common], help="run the HTTP service")
    p.add_argument("--listen", default="127.0.0.1:8787")
    p.add_argument("--ui-dir", default=None, help="static UI bundle to mount at /ui")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("fixtures", parents=[common], help="packaged testbed datasets")
    fsub = p.add_subparsers(dest="fixtures_cmd", required=True, parser_class=_Parser)
    fp = fsub.add_parser("install", parents=[common])
    fp.add_argument("testbed", choices=sorted(fixture_data.TESTBEDS))
    fp.add_argument("--include-admin-rules", action="store_true")
    fp.set_defaults(fn=cmd_fixtures)

    return parser


def _emit_error(exc: Exception, json_mode: bool) -> None:
    if json_mode:
        doc = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        sys.stderr.write(canonical_json(doc) + "\n")
    else:
        sys.stderr.write(f"error: {exc}\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    json_mode = "--json" in argv
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        return args.fn(args)
    except UsageError as exc:
        _emit_error(exc, json_mode)
        return 1
    except DataError as exc:
        _emit_error(exc, json_mode)
        return 2
    except (StorageError, OSError) as exc:
        _emit_error(exc, json_mode)
        return 3
    except CloudHarmError as exc:
        _emit_error(exc, json_mode)
        return 2


if __name__ == "__main__":
    sys.exit(main())
