"""Packaged testbed datasets and their one-call installer.

Two reference deployments ship with the package: a three-tier web stack
(testbed1: web, app, db) and a media pipeline (testbed2: ftp, streamer,
bucket). Each consists of a security-group export, per-host scan
descriptors, and a curated vulnerability database whose probability/risk
values are authoritative; the bundled NVD snapshot only scores CVEs the
curated set does not cover.
"""

from __future__ import annotations

import json
from importlib import resources
from typing import Any

from ..assess import build_harm_from_store
from ..errors import UsageError
from ..model import Harm, graph_to_doc, harm_from_doc
from ..sg_ingest import build_reachability_graph, parse_sg_export
from ..store import RG_KEY, Store
from ..vuln_ingest import (
    IngestSummary,
    NvdSnapshot,
    fixture_scan,
    ingest_scan,
    load_nvd_snapshot,
)

TESTBEDS: dict[str, dict[str, Any]] = {
    "testbed1": {"targets": ("db",), "label": "three-tier web stack"},
    "testbed2": {"targets": ("bucket",), "label": "media pipeline"},
}


def load_data(name: str) -> Any:
    """Load a packaged fixture data file by bare name, e.g. "testbed1_sg"."""
    path = resources.files(__package__) / "data" / f"{name}.json"
    return json.loads(path.read_text(encoding="utf-8"))


def load_data_text(name: str) -> str:
    path = resources.files(__package__) / "data" / f"{name}.json"
    return path.read_text(encoding="utf-8")


def load_nvd_snapshot_default() -> NvdSnapshot:
    """The packaged NVD snapshot covering every CVE in the testbeds."""
    return load_nvd_snapshot(load_data_text("nvd_snapshot"))


def install_testbed(name: str, store: Store, include_admin_rules: bool = False) -> dict[str, Any]:
    """Run the full ingest pipeline for one testbed against a store.

    Preloads the curated VDB, ingests the security-group export and every
    host scan, then assembles and persists the baseline model under the
    stable id "<name>-base". Returns a summary of what was written.
    """
    if name not in TESTBEDS:
        raise UsageError(f"unknown testbed {name!r}; choose from {sorted(TESTBEDS)}")

    curated = load_data(f"{name}_vdb")
    for row in curated:
        store.put("vdb", row["vuln_id"], row)

    sg_doc = parse_sg_export(load_data_text(f"{name}_sg"))
    graph = build_reachability_graph(sg_doc, include_admin_rules=include_admin_rules)
    store.put("ndb", RG_KEY, graph_to_doc(graph))

    nvd = load_nvd_snapshot(load_data_text("nvd_snapshot"))
    totals = IngestSummary(hosts_updated=0, vulns_added=0, vulns_reused=0)
    for descriptor in load_data(f"{name}_hosts"):
        summary = ingest_scan(fixture_scan(descriptor), nvd, store)
        totals = IngestSummary(
            hosts_updated=totals.hosts_updated + summary.hosts_updated,
            vulns_added=totals.vulns_added + summary.vulns_added,
            vulns_reused=totals.vulns_reused + summary.vulns_reused,
        )

    model = build_harm_from_store(
        store,
        targets=TESTBEDS[name]["targets"],
        label=TESTBEDS[name]["label"],
        model_id=f"{name}-base",
    )
    return {
        "testbed": name,
        "model_id": model.model_id,
        "targets": sorted(model.targets),
        "hosts_updated": totals.hosts_updated,
        "vulns_preloaded": len(curated),
        "vulns_added": totals.vulns_added,
        "vulns_reused": totals.vulns_reused,
    }


def testbed_model(name: str, store: Store, include_admin_rules: bool = False) -> Harm:
    """Install a testbed and return its freshly built baseline model."""
    install_testbed(name, store, include_admin_rules=include_admin_rules)
    doc = store.get("harm_objects", f"{name}-base")
    assert doc is not None
    return harm_from_doc(doc)
