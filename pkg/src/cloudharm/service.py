"""HTTP/JSON API over the store: models, metrics, PSV, ingestion, what-if.

Handlers are stateless; clients drive what-if sessions by holding the base
model id themselves. All JSON responses are emitted in canonical key-sorted
form, so a metrics response is byte-identical to `assess --json` for the
same model and gates. Commit detects lineage races: committing onto a base
that already has children is refused with 409 unless forced.
"""

from __future__ import annotations

import json
from typing import Any, Optional, Union

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware

from .assess import DEFAULT_CONFIG, assess, enumerate_attack_paths, gates_from_string
from .errors import (
    CloudHarmError,
    DataError,
    NotFoundError,
    ResourceError,
    StorageError,
    UsageError,
)
from .fixtures import load_nvd_snapshot_default
from .model import Harm, canonical_json, graph_to_doc, harm_from_doc
from .psv import OBJECTIVES, patch_trajectory, rank_psv_es, trajectory_csv, trajectory_rows
from .sg_ingest import build_reachability_graph, parse_sg_export
from .store import RG_KEY, Store
from .vuln_ingest import NvdSnapshot, ScanReport, ingest_scan, load_nvd_snapshot, parse_scan_report
from .whatif import WhatIfSession, parse_modifications

JSON_MEDIA = "application/json"


class ConflictError(CloudHarmError):
    """Lineage write race: the base model already has descendants."""


def _json_response(doc: Any, status_code: int = 200) -> Response:
    return Response(content=canonical_json(doc) + "\n", media_type=JSON_MEDIA, status_code=status_code)


def _error_response(exc: Exception, status_code: int) -> Response:
    doc = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    return _json_response(doc, status_code=status_code)


def _status_for(exc: CloudHarmError) -> int:
    if isinstance(exc, NotFoundError):
        return 404
    if isinstance(exc, ConflictError):
        return 409
    if isinstance(exc, StorageError):
        return 500
    if isinstance(exc, (DataError, UsageError, ResourceError)):
        return 400
    return 500


def create_app(store: Union[Store, str], ui_dir: Optional[str] = None) -> FastAPI:
    if not isinstance(store, Store):
        store = Store(store)

    app = FastAPI(title="cloudharm", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(CloudHarmError)
    async def _harm_error(request: Request, exc: CloudHarmError) -> Response:
        return _error_response(exc, _status_for(exc))

    def _load_model(model_id: str) -> Harm:
        doc = store.get("harm_objects", model_id)
        if doc is None:
            raise NotFoundError(f"no model {model_id!r}")
        return harm_from_doc(doc)

    def _gates(gates: Optional[str]):
        return gates_from_string(gates) if gates else DEFAULT_CONFIG

    def _children_of(model_id: str) -> list[str]:
        out = []
        for key in store.list("harm_objects"):
            doc = store.get("harm_objects", key)
            if doc is not None and doc.get("parent_id") == model_id:
                out.append(key)
        return out

    async def _body_json(request: Request) -> Any:
        raw = await request.body()
        try:
            return json.loads(raw) if raw else None
        except json.JSONDecodeError as exc:
            raise DataError(f"request body is not valid JSON: {exc.msg}") from exc

    @app.get("/healthz")
    async def healthz() -> Response:
        return _json_response({"status": "ok"})

    @app.get("/models")
    async def list_models() -> Response:
        models = []
        for key in store.list("harm_objects"):
            doc = store.get("harm_objects", key)
            if doc is None:
                continue
            models.append(
                {
                    "model_id": doc["model_id"],
                    "label": doc.get("label", ""),
                    "parent_id": doc.get("parent_id"),
                    "created_at": doc.get("created_at", ""),
                }
            )
        models.sort(key=lambda m: (m["created_at"], m["model_id"]))
        return _json_response(models)

    @app.get("/models/{model_id}")
    async def get_model(model_id: str) -> Response:
        doc = store.get("harm_objects", model_id)
        if doc is None:
            raise NotFoundError(f"no model {model_id!r}")
        return _json_response(doc)

    @app.get("/models/{model_id}/metrics")
    async def get_metrics(model_id: str, gates: Optional[str] = None) -> Response:
        model = _load_model(model_id)
        return _json_response(assess(model, _gates(gates)))

    @app.get("/models/{model_id}/paths")
    async def get_paths(model_id: str, limit: int = 1000) -> Response:
        model = _load_model(model_id)
        paths = enumerate_attack_paths(model)
        return _json_response(
            {
                "model_id": model_id,
                "total": len(paths),
                "paths": [list(p.hosts) for p in paths[: max(0, limit)]],
            }
        )

    @app.get("/models/{model_id}/psv")
    async def get_psv(model_id: str, k: int, gates: Optional[str] = None, objective: str = "sum_risk") -> Response:
        model = _load_model(model_id)
        ranking = rank_psv_es(model, k, _gates(gates), objective=objective)
        return _json_response(ranking.to_doc())

    @app.get("/models/{model_id}/trajectory")
    async def get_trajectory(
        model_id: str, k: int, gates: Optional[str] = None, objective: str = "sum_risk"
    ) -> Response:
        model = _load_model(model_id)
        config = _gates(gates)
        ranking = rank_psv_es(model, k, config, objective=objective)
        suites = patch_trajectory(model, ranking, config)  # preview only: nothing stored
        return _json_response(
            {
                "model_id": model_id,
                "objective": objective,
                "config": config.to_doc(),
                "ranking": ranking.to_doc()["ranked"],
                "rows": trajectory_rows(suites),
                "csv": trajectory_csv(suites),
            }
        )

    @app.post("/models/{model_id}/whatif/preview")
    async def whatif_preview(model_id: str, request: Request, gates: Optional[str] = None) -> Response:
        body = await _body_json(request)
        if body is None:
            raise DataError("missing modification set body")
        mods = parse_modifications(body)
        session = WhatIfSession(store, model_id, _gates(gates))
        return _json_response(session.propose(mods))

    @app.post("/models/{model_id}/whatif/commit")
    async def whatif_commit(model_id: str, request: Request, gates: Optional[str] = None) -> Response:
        body = await _body_json(request)
        if not isinstance(body, dict) or "mods" not in body:
            raise DataError("commit body must be an object with 'mods'")
        mods = parse_modifications(body["mods"])
        force = bool(body.get("force", False))
        children = _children_of(model_id)
        if children and not force:
            raise ConflictError(
                f"model {model_id!r} already has descendants {sorted(children)}; "
                "re-base or pass force=true"
            )
        session = WhatIfSession(store, model_id, _gates(gates))
        variant_id, report = session.commit(mods, label=str(body.get("label", "")))
        return _json_response({"variant_id": variant_id, "report": report})

    @app.post("/ingest/sg")
    async def ingest_sg(request: Request, include_admin_rules: bool = False) -> Response:
        raw = await request.body()
        doc = parse_sg_export(raw.decode("utf-8"))
        graph = build_reachability_graph(doc, include_admin_rules=include_admin_rules)
        store.put("ndb", RG_KEY, graph_to_doc(graph))
        return _json_response(
            {"nodes": len(graph.nodes), "edges": len(graph.edges), "hosts": sorted(graph.hosts)}
        )

    @app.post("/ingest/scan")
    async def ingest_scan_endpoint(request: Request) -> Response:
        body = await _body_json(request)
        if not isinstance(body, dict) or "report" not in body:
            raise DataError("scan body must be an object with 'report'")
        report: ScanReport = parse_scan_report(json.dumps(body["report"]))
        if "nvd_snapshot" in body:
            nvd: NvdSnapshot = load_nvd_snapshot(json.dumps(body["nvd_snapshot"]))
        else:
            nvd = load_nvd_snapshot_default()
        summary = ingest_scan(report, nvd, store)
        return _json_response(
            {
                "host_id": report.host_id,
                "hosts_updated": summary.hosts_updated,
                "vulns_added": summary.vulns_added,
                "vulns_reused": summary.vulns_reused,
            }
        )

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
