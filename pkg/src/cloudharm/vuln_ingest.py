"""Vulnerability scan-report parsing, CVE scoring, and host/vuln store population.

Scoring data comes from an offline NVD snapshot file, never the network.
Records already present in the vulnerability database are reused verbatim,
which is how curated datasets keep their hand-assigned probability/risk
values: the CVSS-derived scoring map below is only a fallback for CVEs the
database has never seen.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Optional

from .errors import ParseError
from .model import HostRecord, VulnerabilityRecord, now_rfc3339
from .store import Store

logger = logging.getLogger(__name__)

CVE_RE = re.compile(r"^CVE-\d{4}-\d{4,}$")


@dataclass(frozen=True)
class Finding:
    """One scanner finding: a CVE observed behind a port/service.

    local_id is an optional scanner-assigned label for the instance (the
    curated datasets use per-host labels like "v7web"); when present it is
    used as the vulnerability-database key instead of the CVE id.
    """

    port: int
    protocol: str
    service: str
    cve_id: str
    local_id: Optional[str] = None


@dataclass(frozen=True)
class ScanReport:
    host_id: str
    scan_time: str
    os: str
    findings: tuple[Finding, ...]
    ip: str = ""


@dataclass(frozen=True)
class NvdEntry:
    cvss_base: float
    exploitability: float
    impact: float


@dataclass(frozen=True)
class NvdSnapshot:
    """Offline slice of the national vulnerability feed, keyed by CVE id."""

    entries: Mapping[str, NvdEntry]

    def get(self, cve_id: str) -> Optional[NvdEntry]:
        return self.entries.get(cve_id)


@dataclass(frozen=True)
class IngestSummary:
    hosts_updated: int
    vulns_added: int
    vulns_reused: int


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def parse_scan_report(raw: bytes | str) -> ScanReport:
    """Parse a scan report document, preserving finding order."""
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError("scan report is not a JSON object")
    for key in ("host_id", "scan_time", "os", "findings"):
        if key not in doc:
            raise ParseError(f"scan report missing field {key!r}")

    findings = []
    for i, f in enumerate(doc["findings"]):
        cve_id = f.get("cve_id", "")
        if not CVE_RE.match(cve_id):
            raise ParseError(f"finding {i} has malformed cve_id {cve_id!r}")
        port = int(f.get("port", 0))
        if not 0 <= port <= 65535:
            raise ParseError(f"finding {i} has invalid port {port}")
        findings.append(
            Finding(
                port=port,
                protocol=f.get("protocol", "tcp"),
                service=f.get("service", ""),
                cve_id=cve_id,
                local_id=f.get("vuln_id"),
            )
        )
    return ScanReport(
        host_id=doc["host_id"],
        scan_time=doc["scan_time"],
        os=doc["os"],
        findings=tuple(findings),
        ip=doc.get("ip", ""),
    )


def load_nvd_snapshot(raw: bytes | str) -> NvdSnapshot:
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid NVD snapshot JSON: {exc.msg}") from exc
    entries = {}
    for cve_id, entry in doc.items():
        if not CVE_RE.match(cve_id):
            raise ParseError(f"NVD snapshot key {cve_id!r} is not a CVE id")
        for score_key in ("cvss_base", "exploitability", "impact"):
            value = entry.get(score_key)
            if value is None or not 0.0 <= float(value) <= 10.0:
                raise ParseError(f"NVD entry {cve_id} field {score_key!r} out of range: {value!r}")
        entries[cve_id] = NvdEntry(
            cvss_base=float(entry["cvss_base"]),
            exploitability=float(entry["exploitability"]),
            impact=float(entry["impact"]),
        )
    return NvdSnapshot(entries=entries)


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------


def _default_probability(entry: NvdEntry) -> float:
    return entry.exploitability / 10.0


def _default_impact(entry: NvdEntry) -> float:
    return entry.impact


@dataclass(frozen=True)
class ScoringConfig:
    """Pluggable mapping from NVD subscores to model scores."""

    probability_fn: Callable[[NvdEntry], float] = _default_probability
    impact_fn: Callable[[NvdEntry], float] = _default_impact


DEFAULT_SCORING = ScoringConfig()


def score_vulnerability(entry: NvdEntry, config: ScoringConfig = DEFAULT_SCORING) -> dict[str, float]:
    """Map an NVD entry to probability/risk/impact/cvss. Pure and deterministic."""
    probability = config.probability_fn(entry)
    impact = config.impact_fn(entry)
    return {
        "probability": probability,
        "impact": impact,
        "risk": probability * impact,
        "cvss": entry.cvss_base,
    }


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------


def _find_by_cve(store: Store, cve_id: str) -> Optional[str]:
    """Key of the first vulnerability record carrying this CVE, if any."""
    for key in store.list("vdb"):
        doc = store.get("vdb", key)
        if doc is not None and doc.get("cve_id") == cve_id:
            return key
    return None


def _make_record(
    vuln_id: str, cve_id: str, nvd: NvdSnapshot, config: ScoringConfig
) -> VulnerabilityRecord:
    entry = nvd.get(cve_id)
    if entry is None:
        logger.warning("no scoring data for %s; recording it with unknown probability/risk", cve_id)
        return VulnerabilityRecord(vuln_id=vuln_id, cve_id=cve_id, probability=None, risk=None)
    scores = score_vulnerability(entry, config)
    return VulnerabilityRecord(
        vuln_id=vuln_id,
        cve_id=cve_id,
        probability=scores["probability"],
        risk=scores["risk"],
        impact=scores["impact"],
        cvss=scores["cvss"],
    )


def ingest_scan(
    report: ScanReport,
    nvd: NvdSnapshot,
    store: Store,
    scoring: ScoringConfig = DEFAULT_SCORING,
) -> IngestSummary:
    """Write the host record and resolve every finding against the VDB.

    A finding with a scanner-assigned local id keys the VDB by that id;
    otherwise the CVE is looked up across existing records so the same CVE
    seen on many hosts yields exactly one stored record. Only misses create
    new records (scored from the NVD snapshot); hits are reused untouched.
    """
    vulns_added = 0
    vulns_reused = 0
    vuln_ids = []
    for finding in report.findings:
        if finding.local_id:
            key = finding.local_id
            existing = store.get("vdb", key)
        else:
            found = _find_by_cve(store, finding.cve_id)
            key = found if found is not None else finding.cve_id
            existing = store.get("vdb", key) if found is not None else None
        if existing is not None:
            vulns_reused += 1
        else:
            record = _make_record(key, finding.cve_id, nvd, scoring)
            store.put("vdb", key, record.to_doc())
            vulns_added += 1
        vuln_ids.append(key)

    host = HostRecord(
        host_id=report.host_id,
        ip=report.ip,
        os=report.os,
        open_ports=frozenset((f.port, f.protocol, f.service) for f in report.findings),
        vuln_ids=tuple(vuln_ids),
        scan_time=report.scan_time or now_rfc3339(),
    )
    store.put("hdb", report.host_id, host.to_doc())
    return IngestSummary(hosts_updated=1, vulns_added=vulns_added, vulns_reused=vulns_reused)


# ---------------------------------------------------------------------------
# Fixture scanner
# ---------------------------------------------------------------------------


def fixture_scan(descriptor: Mapping[str, Any]) -> ScanReport:
    """Produce a deterministic scan report from a host descriptor.

    Stands in for a real scanner: the descriptor lists the host's services
    and known vulnerability instances, and the same descriptor always yields
    byte-identical reports.
    """
    findings = tuple(
        Finding(
            port=int(v["port"]),
            protocol=v.get("protocol", "tcp"),
            service=v.get("service", ""),
            cve_id=v["cve_id"],
            local_id=v.get("vuln_id"),
        )
        for v in descriptor.get("vulns", [])
    )
    return ScanReport(
        host_id=descriptor["host_id"],
        scan_time=descriptor.get("scan_time", "1970-01-01T00:00:00Z"),
        os=descriptor.get("os", ""),
        findings=findings,
        ip=descriptor.get("ip", ""),
    )


def scan_report_to_doc(report: ScanReport) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "host_id": report.host_id,
        "scan_time": report.scan_time,
        "os": report.os,
        "ip": report.ip,
        "findings": [],
    }
    for f in report.findings:
        entry: dict[str, Any] = {
            "port": f.port,
            "protocol": f.protocol,
            "service": f.service,
            "cve_id": f.cve_id,
        }
        if f.local_id is not None:
            entry["vuln_id"] = f.local_id
        doc["findings"].append(entry)
    return doc
