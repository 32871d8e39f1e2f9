"""Security-group export parsing and reachability-graph construction.

Only inbound allow rules are read. A rule whose source CIDR contains at
least one public address makes the rule's hosts reachable from the ATTACKER
node; a rule whose source is another group connects every member of that
group to every member of the rule's group. Admin-access rules (single /32
sources listed in the export's admin allowlist) are dropped by default so
operator SSH access does not show up as attack surface.
"""

from __future__ import annotations

import ipaddress
import json
import logging
from collections import defaultdict
from typing import Iterable

from .errors import ParseError, ResolutionError
from .model import (
    ATTACKER,
    Edge,
    InboundRule,
    PortRange,
    ReachabilityGraph,
    SecurityGroup,
    SecurityGroupDoc,
)

logger = logging.getLogger(__name__)

# Spec'd "internal" address space: RFC 1918 + loopback + link-local.
_INTERNAL_V4 = [
    ipaddress.ip_network("10.0.0.0/8"),
    ipaddress.ip_network("172.16.0.0/12"),
    ipaddress.ip_network("192.168.0.0/16"),
    ipaddress.ip_network("127.0.0.0/8"),
    ipaddress.ip_network("169.254.0.0/16"),
]
_INTERNAL_V6 = [
    ipaddress.ip_network("::1/128"),
    ipaddress.ip_network("fc00::/7"),
    ipaddress.ip_network("fe80::/10"),
]


def cidr_is_public(cidr: str) -> bool:
    """True when the CIDR contains at least one non-internal address."""
    net = ipaddress.ip_network(cidr, strict=False)
    blocks = _INTERNAL_V4 if net.version == 4 else _INTERNAL_V6
    return not any(net.subnet_of(block) for block in blocks)


def _parse_port_range(perm: dict, group_id: str) -> PortRange:
    from_port = perm.get("FromPort")
    to_port = perm.get("ToPort")
    if from_port is None and to_port is None:
        return (0, 65535)  # "all traffic" rules carry no port bounds
    low = int(from_port if from_port is not None else to_port)
    high = int(to_port if to_port is not None else from_port)
    if not (0 <= low <= high <= 65535):
        raise ParseError(f"group {group_id!r} has invalid port range {low}-{high}")
    return (low, high)


def _parse_protocol(perm: dict) -> str:
    proto = str(perm.get("IpProtocol", "any")).lower()
    if proto in ("-1", "all", "any"):
        return "any"
    if proto in ("tcp", "udp"):
        return proto
    raise ParseError(f"unsupported IpProtocol {proto!r}")


def parse_sg_export(raw: bytes | str) -> SecurityGroupDoc:
    """Parse a security-group export document.

    Unknown fields are ignored. Raises ParseError with line/column on bad
    JSON, and ResolutionError when a rule references an undeclared group.
    """
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError("export document is not a JSON object")

    groups = []
    declared: set[str] = set()
    for sg in doc.get("SecurityGroups", []):
        group_id = sg.get("GroupId")
        if not group_id:
            raise ParseError("security group without a GroupId")
        declared.add(group_id)
        rules = []
        for perm in sg.get("IpPermissions", []):
            port_range = _parse_port_range(perm, group_id)
            protocol = _parse_protocol(perm)
            for ip_range in perm.get("IpRanges", []):
                cidr = ip_range.get("CidrIp")
                if not cidr:
                    raise ParseError(f"group {group_id!r} has an IpRange without CidrIp")
                try:
                    ipaddress.ip_network(cidr, strict=False)
                except ValueError as exc:
                    raise ParseError(f"group {group_id!r} has invalid CIDR {cidr!r}") from exc
                rules.append(InboundRule(port_range=port_range, protocol=protocol, cidr=cidr))
            for pair in perm.get("UserIdGroupPairs", []):
                ref = pair.get("GroupId")
                if not ref:
                    raise ParseError(f"group {group_id!r} has a UserIdGroupPair without GroupId")
                rules.append(InboundRule(port_range=port_range, protocol=protocol, group_ref=ref))
        groups.append(SecurityGroup(group_id=group_id, inbound_rules=tuple(rules)))

    for group in groups:
        for rule in group.inbound_rules:
            if rule.group_ref is not None and rule.group_ref not in declared:
                raise ResolutionError(
                    f"group {group.group_id!r} references undeclared group {rule.group_ref!r}"
                )

    assignments = {}
    raw_assignments = doc.get("assignments", {})
    if not isinstance(raw_assignments, dict):
        raise ParseError("'assignments' must be an object mapping host ids to group lists")
    for host_id, group_ids in raw_assignments.items():
        if not host_id:
            raise ParseError("assignment with an empty host id")
        for gid in group_ids:
            if gid not in declared:
                raise ResolutionError(f"host {host_id!r} assigned to undeclared group {gid!r}")
        assignments[host_id] = tuple(group_ids)

    return SecurityGroupDoc(
        groups=tuple(groups),
        assignments=assignments,
        admin_cidrs=frozenset(doc.get("admin_cidrs", [])),
    )


def _merge_protocol(a: str, b: str) -> str:
    return a if a == b else "any"


def build_reachability_graph(
    doc: SecurityGroupDoc,
    admin_allowlist: Iterable[str] = (),
    include_admin_rules: bool = False,
) -> ReachabilityGraph:
    """Expand inbound rules into the directed reachability graph.

    Duplicate edges between the same pair of hosts are merged by unioning
    their port ranges (protocols differing across merged rules widen to
    "any"). Self-loops never appear, even when a group references itself.
    """
    members: dict[str, list[str]] = defaultdict(list)
    for host_id, group_ids in doc.assignments.items():
        if not group_ids:
            logger.warning("host %r is assigned to no security group; adding as isolated node", host_id)
        for gid in group_ids:
            members[gid].append(host_id)

    admin_cidrs = set(doc.admin_cidrs) | set(admin_allowlist)

    nodes = {ATTACKER, *doc.assignments.keys()}
    # (src, dst) -> (port ranges, protocol)
    merged: dict[tuple[str, str], tuple[set[PortRange], str]] = {}

    def add_edge(src: str, dst: str, port_range: PortRange, protocol: str) -> None:
        if src == dst:
            return
        if (src, dst) in merged:
            ports, proto = merged[(src, dst)]
            ports.add(port_range)
            merged[(src, dst)] = (ports, _merge_protocol(proto, protocol))
        else:
            merged[(src, dst)] = ({port_range}, protocol)

    for group in doc.groups:
        dst_hosts = members.get(group.group_id, [])
        for rule in group.inbound_rules:
            if rule.cidr is not None:
                if not include_admin_rules and rule.cidr in admin_cidrs and rule.cidr.endswith("/32"):
                    continue
                if cidr_is_public(rule.cidr):
                    for dst in dst_hosts:
                        add_edge(ATTACKER, dst, rule.port_range, rule.protocol)
            else:
                for src in members.get(rule.group_ref, []):
                    for dst in dst_hosts:
                        add_edge(src, dst, rule.port_range, rule.protocol)

    edges = frozenset(
        Edge(src=src, dst=dst, ports=tuple(sorted(ports)), protocol=proto)
        for (src, dst), (ports, proto) in merged.items()
    )
    return ReachabilityGraph(nodes=frozenset(nodes), edges=edges)
