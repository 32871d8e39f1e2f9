from pathlib import Path

import pytest

from cloudharm.errors import ParseError, ResolutionError
from cloudharm.fixtures import load_data_text
from cloudharm.model import ATTACKER, serialize_graph
from cloudharm.sg_ingest import build_reachability_graph, cidr_is_public, parse_sg_export

GOLDEN = Path(__file__).parent / "golden"


def _export(groups, assignments, admin_cidrs=None):
    doc = {"SecurityGroups": groups, "assignments": assignments}
    if admin_cidrs is not None:
        doc["admin_cidrs"] = admin_cidrs
    import json

    return json.dumps(doc)


def _group(group_id, perms):
    return {"GroupId": group_id, "IpPermissions": perms}


def _cidr_perm(cidr, port=80, proto="tcp"):
    return {
        "IpProtocol": proto,
        "FromPort": port,
        "ToPort": port,
        "IpRanges": [{"CidrIp": cidr}],
        "UserIdGroupPairs": [],
    }


def _ref_perm(ref, port=80, proto="tcp"):
    return {
        "IpProtocol": proto,
        "FromPort": port,
        "ToPort": port,
        "IpRanges": [],
        "UserIdGroupPairs": [{"GroupId": ref}],
    }


# ---------------------------------------------------------------------------
# CIDR classification
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "cidr",
    ["0.0.0.0/0", "203.0.113.0/24", "8.8.8.0/24", "2001:db8::/32", "198.51.100.7/32"],
)
def test_public_cidrs(cidr):
    assert cidr_is_public(cidr)


@pytest.mark.parametrize(
    "cidr",
    ["10.0.0.0/8", "10.1.2.0/24", "172.16.0.0/12", "172.20.1.0/24",
     "192.168.0.0/16", "192.168.44.0/30", "127.0.0.0/8", "169.254.0.0/16",
     "fc00::/7", "fe80::/10", "::1/128"],
)
def test_internal_cidrs(cidr):
    assert not cidr_is_public(cidr)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def test_parse_error_includes_location():
    with pytest.raises(ParseError, match=r"line \d+"):
        parse_sg_export('{"SecurityGroups": [,]}')


def test_missing_group_id():
    with pytest.raises(ParseError, match="GroupId"):
        parse_sg_export(_export([{"IpPermissions": []}], {}))


def test_invalid_port_order():
    perm = {"IpProtocol": "tcp", "FromPort": 90, "ToPort": 80,
            "IpRanges": [{"CidrIp": "0.0.0.0/0"}], "UserIdGroupPairs": []}
    with pytest.raises(ParseError, match="port"):
        parse_sg_export(_export([_group("sg-a", [perm])], {"a": ["sg-a"]}))


def test_protocol_minus_one_means_any_all_ports():
    perm = {"IpProtocol": "-1", "IpRanges": [{"CidrIp": "0.0.0.0/0"}], "UserIdGroupPairs": []}
    doc = parse_sg_export(_export([_group("sg-a", [perm])], {"a": ["sg-a"]}))
    rule = doc.groups[0].inbound_rules[0]
    assert rule.protocol == "any"
    assert rule.port_range == (0, 65535)


def test_invalid_cidr_rejected():
    with pytest.raises(ParseError, match="CIDR"):
        parse_sg_export(_export([_group("sg-a", [_cidr_perm("300.1.2.3/8")])], {"a": ["sg-a"]}))


def test_unknown_group_ref_is_resolution_error():
    with pytest.raises(ResolutionError, match="sg-ghost"):
        parse_sg_export(_export([_group("sg-a", [_ref_perm("sg-ghost")])], {"a": ["sg-a"]}))


def test_assignment_to_undeclared_group():
    with pytest.raises(ResolutionError, match="sg-nope"):
        parse_sg_export(_export([_group("sg-a", [])], {"a": ["sg-nope"]}))


# ---------------------------------------------------------------------------
# Graph construction
# ---------------------------------------------------------------------------


def test_public_cidr_creates_attacker_edges():
    doc = parse_sg_export(_export([_group("sg-a", [_cidr_perm("0.0.0.0/0")])], {"a": ["sg-a"]}))
    g = build_reachability_graph(doc)
    assert {(e.src, e.dst) for e in g.edges} == {(ATTACKER, "a")}


def test_private_cidr_creates_no_edge():
    doc = parse_sg_export(_export([_group("sg-a", [_cidr_perm("10.0.0.0/8")])], {"a": ["sg-a"]}))
    g = build_reachability_graph(doc)
    assert g.edges == frozenset()


def test_group_ref_creates_member_cross_product_without_self_loops():
    groups = [_group("sg-front", []), _group("sg-back", [_ref_perm("sg-front", port=9000)])]
    doc = parse_sg_export(_export(groups, {"f1": ["sg-front"], "f2": ["sg-front"], "b": ["sg-back"]}))
    g = build_reachability_graph(doc)
    assert {(e.src, e.dst) for e in g.edges} == {("f1", "b"), ("f2", "b")}


def test_self_referencing_group_yields_pairwise_edges_without_self_loops():
    groups = [_group("sg-peer", [_ref_perm("sg-peer", port=7000)])]
    doc = parse_sg_export(_export(groups, {"p1": ["sg-peer"], "p2": ["sg-peer"]}))
    g = build_reachability_graph(doc)
    assert {(e.src, e.dst) for e in g.edges} == {("p1", "p2"), ("p2", "p1")}


def test_duplicate_edges_merge_port_ranges():
    groups = [_group("sg-a", [_cidr_perm("0.0.0.0/0", port=80), _cidr_perm("0.0.0.0/0", port=443)])]
    doc = parse_sg_export(_export(groups, {"a": ["sg-a"]}))
    g = build_reachability_graph(doc)
    (edge,) = g.edges
    assert edge.ports == ((80, 80), (443, 443))
    assert edge.protocol == "tcp"


def test_conflicting_protocols_widen_to_any():
    groups = [_group("sg-a", [_cidr_perm("0.0.0.0/0", port=53, proto="tcp"),
                              _cidr_perm("0.0.0.0/0", port=53, proto="udp")])]
    doc = parse_sg_export(_export(groups, {"a": ["sg-a"]}))
    (edge,) = build_reachability_graph(doc).edges
    assert edge.protocol == "any"


def test_admin_rules_excluded_by_default_and_includable():
    groups = [_group("sg-a", [_cidr_perm("0.0.0.0/0", port=80),
                              _cidr_perm("198.51.100.9/32", port=22)])]
    raw = _export(groups, {"a": ["sg-a"]}, admin_cidrs=["198.51.100.9/32"])
    doc = parse_sg_export(raw)

    g = build_reachability_graph(doc)
    (edge,) = g.edges
    assert edge.ports == ((80, 80),)

    g_admin = build_reachability_graph(doc, include_admin_rules=True)
    (edge,) = g_admin.edges
    assert edge.ports == ((22, 22), (80, 80))


def test_admin_allowlist_argument_merges_with_document():
    groups = [_group("sg-a", [_cidr_perm("198.51.100.9/32", port=22)])]
    doc = parse_sg_export(_export(groups, {"a": ["sg-a"]}))
    assert build_reachability_graph(doc, admin_allowlist=["198.51.100.9/32"]).edges == frozenset()


def test_isolated_host_still_becomes_node(caplog):
    doc = parse_sg_export(_export([_group("sg-a", [])], {"a": ["sg-a"]}))
    g = build_reachability_graph(doc)
    assert g.nodes == frozenset({ATTACKER, "a"})
    assert g.edges == frozenset()


# ---------------------------------------------------------------------------
# Golden fixtures
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("name", ["testbed1", "testbed2"])
def test_fixture_exports_produce_golden_graphs(name):
    doc = parse_sg_export(load_data_text(f"{name}_sg"))
    graph = build_reachability_graph(doc)
    expected = (GOLDEN / f"{name}_rg.json").read_text(encoding="utf-8")
    assert serialize_graph(graph) == expected


def test_golden_graph_stable_across_repeated_builds():
    doc = parse_sg_export(load_data_text("testbed1_sg"))
    first = serialize_graph(build_reachability_graph(doc))
    second = serialize_graph(build_reachability_graph(doc))
    assert first == second
