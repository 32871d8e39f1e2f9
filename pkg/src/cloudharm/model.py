"""Core domain types: the two-layer security model and its canonical JSON form.

The upper layer is a directed host reachability graph with one distinguished
ATTACKER node; the lower layer maps each host to the vulnerabilities found on
it. Everything here is an immutable value object, safe to share across
threads. Serialization sorts every collection so that equal models always
produce identical bytes.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Iterable, Mapping, Optional

from .errors import ParseError

# Distinguished entry-point node of the reachability graph. Not a real host:
# it is excluded from host counts, density, and the lower layer.
ATTACKER = "ATTACKER"

PROTOCOLS = ("tcp", "udp", "any")

PortRange = tuple[int, int]


def new_model_id() -> str:
    return uuid.uuid4().hex


def now_rfc3339() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


def parse_rfc3339(value: str) -> datetime:
    """Parse an RFC 3339 timestamp (accepts the trailing-Z form on 3.10)."""
    return datetime.fromisoformat(value.replace("Z", "+00:00"))


def canonical_json(obj: Any) -> str:
    """Key-sorted, 2-space-indented JSON; the one rendering used everywhere."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False)


# ---------------------------------------------------------------------------
# Upper layer
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Edge:
    """Directed reachability edge with the port ranges that allow it."""

    src: str
    dst: str
    ports: tuple[PortRange, ...] = ()
    protocol: str = "any"


@dataclass(frozen=True)
class ReachabilityGraph:
    """Directed host graph derived from inbound allow rules."""

    nodes: frozenset[str]
    edges: frozenset[Edge]

    @property
    def hosts(self) -> frozenset[str]:
        """All nodes except the attacker entry point."""
        return self.nodes - {ATTACKER}

    def successors(self, node: str) -> list[str]:
        return sorted(e.dst for e in self.edges if e.src == node)

    def internal_edge_count(self) -> int:
        """Edges between real hosts (attacker-incident edges excluded)."""
        return sum(1 for e in self.edges if e.src != ATTACKER and e.dst != ATTACKER)


def empty_graph() -> ReachabilityGraph:
    return ReachabilityGraph(nodes=frozenset({ATTACKER}), edges=frozenset())


# ---------------------------------------------------------------------------
# Security-group export
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InboundRule:
    """One inbound allow rule: either a CIDR source or a reference to a group."""

    port_range: PortRange
    protocol: str
    cidr: Optional[str] = None
    group_ref: Optional[str] = None


@dataclass(frozen=True)
class SecurityGroup:
    group_id: str
    inbound_rules: tuple[InboundRule, ...]


@dataclass(frozen=True)
class SecurityGroupDoc:
    """Parsed security-group export plus host-to-group assignments."""

    groups: tuple[SecurityGroup, ...]
    assignments: Mapping[str, tuple[str, ...]]
    admin_cidrs: frozenset[str] = frozenset()


# ---------------------------------------------------------------------------
# Lower layer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VulnerabilityRecord:
    """Scoring data for one vulnerability instance.

    probability/risk may be None when no source could score the CVE; such
    records still count as exploitable but contribute 0 to the metrics and
    are flagged in reports.
    """

    vuln_id: str
    cve_id: str
    probability: Optional[float]
    risk: Optional[float]
    impact: Optional[float] = None
    cvss: Optional[float] = None
    attack_cost: Optional[float] = None

    def to_doc(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "vuln_id": self.vuln_id,
            "cve_id": self.cve_id,
            "probability": self.probability,
            "risk": self.risk,
            "impact": self.impact,
            "cvss": self.cvss,
        }
        if self.attack_cost is not None:
            doc["attack_cost"] = self.attack_cost
        return doc

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "VulnerabilityRecord":
        try:
            return cls(
                vuln_id=doc["vuln_id"],
                cve_id=doc["cve_id"],
                probability=doc.get("probability"),
                risk=doc.get("risk"),
                impact=doc.get("impact"),
                cvss=doc.get("cvss"),
                attack_cost=doc.get("attack_cost"),
            )
        except KeyError as exc:
            raise ParseError(f"vulnerability record missing field {exc.args[0]!r}") from exc


@dataclass(frozen=True)
class HostRecord:
    """Per-host scan result: identity, surface, and vulnerability references."""

    host_id: str
    ip: str
    os: str
    open_ports: frozenset[tuple[int, str, str]]  # (port, protocol, service)
    vuln_ids: tuple[str, ...]
    scan_time: str

    def to_doc(self) -> dict[str, Any]:
        return {
            "host_id": self.host_id,
            "ip": self.ip,
            "os": self.os,
            "open_ports": [list(p) for p in sorted(self.open_ports)],
            "vuln_ids": list(self.vuln_ids),
            "scan_time": self.scan_time,
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "HostRecord":
        try:
            return cls(
                host_id=doc["host_id"],
                ip=doc.get("ip", ""),
                os=doc.get("os", ""),
                open_ports=frozenset((int(p[0]), str(p[1]), str(p[2])) for p in doc.get("open_ports", [])),
                vuln_ids=tuple(doc.get("vuln_ids", [])),
                scan_time=doc.get("scan_time", ""),
            )
        except KeyError as exc:
            raise ParseError(f"host record missing field {exc.args[0]!r}") from exc


# ---------------------------------------------------------------------------
# The model itself
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Harm:
    """Two-layer model: reachability graph over hosts plus per-host vulnerabilities.

    Instances are never mutated; what-if analysis clones into a new model
    whose parent_id records lineage.
    """

    model_id: str
    upper: ReachabilityGraph
    lower: Mapping[str, tuple[VulnerabilityRecord, ...]]
    targets: frozenset[str]
    label: str = ""
    parent_id: Optional[str] = None
    created_at: str = field(default_factory=now_rfc3339)

    def host_vulns(self, host_id: str) -> tuple[VulnerabilityRecord, ...]:
        return self.lower.get(host_id, ())

    def vuln_instances(self) -> list[tuple[str, str]]:
        """All (host_id, vuln_id) pairs, sorted."""
        return sorted((h, v.vuln_id) for h, vulns in self.lower.items() for v in vulns)


@dataclass(frozen=True)
class AttackPath:
    """Simple path from the first post-attacker hop to a target host."""

    hosts: tuple[str, ...]

    @property
    def length(self) -> int:
        return len(self.hosts)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _valid_port_range(pr: PortRange) -> bool:
    low, high = pr
    return 0 <= low <= high <= 65535


def validate_graph(graph: ReachabilityGraph) -> list[str]:
    """Violations of the reachability-graph invariants (empty list means valid)."""
    violations: list[str] = []
    for node in graph.nodes:
        if not node:
            violations.append("graph contains an empty node id")
    if ATTACKER not in graph.nodes:
        violations.append(f"graph is missing the {ATTACKER} node")
    for edge in sorted(graph.edges):
        if edge.src not in graph.nodes:
            violations.append(f"edge source {edge.src!r} is not a graph node")
        if edge.dst not in graph.nodes:
            violations.append(f"edge destination {edge.dst!r} is not a graph node")
        if edge.src == edge.dst:
            violations.append(f"self-loop edge on {edge.src!r}")
        if edge.dst == ATTACKER:
            violations.append(f"inbound edge to {ATTACKER} from {edge.src!r}")
        if edge.protocol not in PROTOCOLS:
            violations.append(f"edge {edge.src!r}->{edge.dst!r} has unknown protocol {edge.protocol!r}")
        for pr in edge.ports:
            if not _valid_port_range(pr):
                violations.append(f"edge {edge.src!r}->{edge.dst!r} has invalid port range {list(pr)!r}")
    return violations


def _validate_vuln(host_id: str, v: VulnerabilityRecord) -> list[str]:
    violations = []
    if not v.vuln_id:
        violations.append(f"host {host_id!r} has a vulnerability with an empty vuln_id")
    if v.probability is not None and not 0.0 <= v.probability <= 1.0:
        violations.append(f"vulnerability {v.vuln_id!r} probability {v.probability} outside [0,1]")
    if v.risk is not None and v.risk < 0:
        violations.append(f"vulnerability {v.vuln_id!r} has negative risk {v.risk}")
    if v.impact is not None and v.impact < 0:
        violations.append(f"vulnerability {v.vuln_id!r} has negative impact {v.impact}")
    if v.cvss is not None and not 0.0 <= v.cvss <= 10.0:
        violations.append(f"vulnerability {v.vuln_id!r} cvss {v.cvss} outside [0,10]")
    if v.attack_cost is not None and v.attack_cost <= 0:
        violations.append(f"vulnerability {v.vuln_id!r} attack_cost {v.attack_cost} not positive")
    return violations


def validate_harm(model: Harm) -> list[str]:
    """Return human-readable descriptions of every invariant violation.

    Total: never raises on a structurally complete model, no matter how
    inconsistent its contents are.
    """
    violations = []
    if not model.model_id:
        violations.append("model_id is empty")
    violations.extend(validate_graph(model.upper))
    for host_id, vulns in sorted(model.lower.items()):
        if host_id == ATTACKER:
            violations.append(f"lower layer contains the {ATTACKER} node")
        elif host_id not in model.upper.nodes:
            violations.append(f"lower layer names host {host_id!r} absent from the graph")
        seen: set[str] = set()
        for v in vulns:
            if v.vuln_id in seen:
                violations.append(f"host {host_id!r} lists vuln_id {v.vuln_id!r} twice")
            seen.add(v.vuln_id)
            violations.extend(_validate_vuln(host_id, v))
    if not model.targets:
        violations.append("targets is empty")
    for t in sorted(model.targets):
        if t == ATTACKER:
            violations.append(f"{ATTACKER} cannot be a target")
        elif t not in model.upper.nodes:
            violations.append(f"target {t!r} is not a graph node")
    return violations


# ---------------------------------------------------------------------------
# Canonical serialization
# ---------------------------------------------------------------------------


def graph_to_doc(graph: ReachabilityGraph) -> dict[str, Any]:
    return {
        "nodes": sorted(graph.nodes),
        "edges": [
            {
                "src": e.src,
                "dst": e.dst,
                "ports": [list(p) for p in sorted(e.ports)],
                "protocol": e.protocol,
            }
            for e in sorted(graph.edges)
        ],
    }


def graph_from_doc(doc: Mapping[str, Any]) -> ReachabilityGraph:
    for key in ("nodes", "edges"):
        if key not in doc:
            raise ParseError(f"graph document missing field {key!r}")
    edges = []
    for i, e in enumerate(doc["edges"]):
        for key in ("src", "dst"):
            if key not in e:
                raise ParseError(f"graph edge {i} missing field {key!r}")
        edges.append(
            Edge(
                src=e["src"],
                dst=e["dst"],
                ports=tuple((int(p[0]), int(p[1])) for p in e.get("ports", [])),
                protocol=e.get("protocol", "any"),
            )
        )
    return ReachabilityGraph(nodes=frozenset(doc["nodes"]), edges=frozenset(edges))


def serialize_graph(graph: ReachabilityGraph) -> str:
    return canonical_json(graph_to_doc(graph)) + "\n"


def harm_to_doc(model: Harm) -> dict[str, Any]:
    return {
        "model_id": model.model_id,
        "parent_id": model.parent_id,
        "created_at": model.created_at,
        "label": model.label,
        "upper": graph_to_doc(model.upper),
        "lower": {
            host: [v.to_doc() for v in sorted(vulns, key=lambda v: v.vuln_id)]
            for host, vulns in sorted(model.lower.items())
        },
        "targets": sorted(model.targets),
    }


def harm_from_doc(doc: Mapping[str, Any]) -> Harm:
    for key in ("model_id", "created_at", "label", "upper", "lower", "targets"):
        if key not in doc:
            raise ParseError(f"model document missing field {key!r}")
    lower = {}
    for host, vulns in doc["lower"].items():
        lower[host] = tuple(VulnerabilityRecord.from_doc(v) for v in vulns)
    return Harm(
        model_id=doc["model_id"],
        parent_id=doc.get("parent_id"),
        created_at=doc["created_at"],
        label=doc["label"],
        upper=graph_from_doc(doc["upper"]),
        lower=lower,
        targets=frozenset(doc["targets"]),
    )


def serialize_harm(model: Harm) -> str:
    """Canonical UTF-8 JSON text; equal models serialize to identical bytes."""
    return canonical_json(harm_to_doc(model)) + "\n"


def deserialize_harm(raw: str | bytes) -> Harm:
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"model document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("model document is not a JSON object")
    return harm_from_doc(doc)
