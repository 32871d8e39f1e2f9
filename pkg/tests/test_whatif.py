import json

import pytest

from cloudharm.assess import compute_metrics
from cloudharm.errors import (
    ModificationError,
    NotFoundError,
    ParseError,
    ValidationError,
)
from cloudharm.fixtures import load_data_text
from cloudharm.model import serialize_harm
from cloudharm.whatif import (
    ModificationSet,
    WhatIfSession,
    apply_modifications,
    compare,
    parse_modifications,
    render_comparison_text,
)

from conftest import make_chain_model


def mods(*steps):
    return ModificationSet(steps=tuple(steps))


NEW_VULN = {
    "vuln_id": "vx",
    "cve_id": "CVE-2021-9999",
    "probability": 0.5,
    "risk": 2.5,
}


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def test_parse_accepts_json_text():
    parsed = parse_modifications('[{"op": "remove_host", "host_id": "web"}]')
    assert len(parsed) == 1
    assert parsed.steps[0]["op"] == "remove_host"


def test_parse_errors_name_the_step():
    with pytest.raises(ParseError, match="step 1"):
        parse_modifications([{"op": "remove_host", "host_id": "a"}, {"nop": True}])
    with pytest.raises(ParseError, match="unknown op 'explode'"):
        parse_modifications([{"op": "explode"}])
    with pytest.raises(ParseError, match="missing field 'vuln_id'"):
        parse_modifications([{"op": "remove_vulnerability", "host_id": "a"}])
    with pytest.raises(ParseError, match="JSON array"):
        parse_modifications('{"op": "remove_host"}')
    with pytest.raises(ParseError, match="not valid JSON"):
        parse_modifications("[")


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def test_remove_vulnerability():
    base = make_chain_model([(0.5, 2.0), (0.4, 1.0)], [(0.3, 1.0)])
    variant = apply_modifications(
        base, mods({"op": "remove_vulnerability", "host_id": "h1", "vuln_id": "v1h1"})
    )
    assert [v.vuln_id for v in variant.host_vulns("h1")] == ["v2h1"]
    assert variant.parent_id == base.model_id
    assert variant.model_id != base.model_id


def test_remove_vulnerability_unknown_id():
    base = make_chain_model([(0.5, 2.0)])
    with pytest.raises(ModificationError, match="step 0.*'ghost'"):
        apply_modifications(
            base, mods({"op": "remove_vulnerability", "host_id": "h1", "vuln_id": "ghost"})
        )


def test_add_vulnerability():
    base = make_chain_model([(0.5, 2.0)])
    variant = apply_modifications(
        base, mods({"op": "add_vulnerability", "host_id": "h1", "vulnerability": NEW_VULN})
    )
    assert [v.vuln_id for v in variant.host_vulns("h1")] == ["v1h1", "vx"]


def test_add_vulnerability_duplicate_id():
    base = make_chain_model([(0.5, 2.0)])
    dup = dict(NEW_VULN, vuln_id="v1h1")
    with pytest.raises(ModificationError, match="already has"):
        apply_modifications(
            base, mods({"op": "add_vulnerability", "host_id": "h1", "vulnerability": dup})
        )


def test_remove_edge_blocks_path():
    base = make_chain_model([(0.5, 2.0)], [(0.4, 1.0)])
    variant = apply_modifications(base, mods({"op": "remove_edge", "src": "h1", "dst": "h2"}))
    assert compute_metrics(variant).zero_paths


def test_remove_missing_edge():
    base = make_chain_model([(0.5, 2.0)], [(0.4, 1.0)])
    with pytest.raises(ModificationError, match="no edge 'h2' -> 'h1'"):
        apply_modifications(base, mods({"op": "remove_edge", "src": "h2", "dst": "h1"}))


def test_add_edge_creates_shortcut():
    base = make_chain_model([(0.5, 2.0)], [(0.4, 1.0)], [(0.3, 1.0)])
    variant = apply_modifications(
        base, mods({"op": "add_edge", "src": "h1", "dst": "h3", "ports": [[443, 443]],
                    "protocol": "tcp"})
    )
    from cloudharm.assess import enumerate_attack_paths

    assert [p.hosts for p in enumerate_attack_paths(variant)] == [
        ("h1", "h2", "h3"),
        ("h1", "h3"),
    ]


def test_add_edge_rejects_illegal():
    base = make_chain_model([(0.5, 2.0)], [(0.4, 1.0)])
    for step in (
        {"op": "add_edge", "src": "h1", "dst": "h1"},
        {"op": "add_edge", "src": "h1", "dst": "ATTACKER"},
        {"op": "add_edge", "src": "h1", "dst": "h2"},  # already present
        {"op": "add_edge", "src": "h1", "dst": "ghost"},
    ):
        with pytest.raises(ModificationError):
            apply_modifications(base, mods(step))


def test_remove_host_cascades():
    base = make_chain_model([(0.5, 2.0)], [(0.4, 1.0)], targets=["h1", "h2"])
    variant = apply_modifications(base, mods({"op": "remove_host", "host_id": "h2"}))
    assert "h2" not in variant.upper.nodes
    assert all("h2" not in (e.src, e.dst) for e in variant.upper.edges)
    assert "h2" not in variant.lower
    assert variant.targets == frozenset({"h1"})


def test_remove_last_target_invalid():
    base = make_chain_model([(0.5, 2.0)], [(0.4, 1.0)])
    with pytest.raises(ValidationError, match="invalid"):
        apply_modifications(base, mods({"op": "remove_host", "host_id": "h2"}))


def test_add_host_with_vulns_and_edges():
    base = make_chain_model([(0.5, 2.0)], [(0.4, 1.0)])
    variant = apply_modifications(
        base,
        mods(
            {
                "op": "add_host",
                "host_id": "hx",
                "vulns": [NEW_VULN],
                "edges": [
                    {"src": "ATTACKER", "dst": "hx", "ports": [[80, 80]], "protocol": "tcp"},
                    {"src": "hx", "dst": "h2"},
                ],
            }
        ),
    )
    assert "hx" in variant.upper.nodes
    assert [v.vuln_id for v in variant.host_vulns("hx")] == ["vx"]
    from cloudharm.assess import enumerate_attack_paths

    assert ("hx", "h2") in [p.hosts for p in enumerate_attack_paths(variant)]


def test_add_existing_host_fails():
    base = make_chain_model([(0.5, 2.0)])
    with pytest.raises(ModificationError, match="already exists"):
        apply_modifications(base, mods({"op": "add_host", "host_id": "h1"}))


def test_set_targets():
    base = make_chain_model([(0.5, 2.0)], [(0.4, 1.0)])
    variant = apply_modifications(base, mods({"op": "set_targets", "targets": ["h1"]}))
    assert variant.targets == frozenset({"h1"})
    with pytest.raises(ModificationError, match="not a host"):
        apply_modifications(base, mods({"op": "set_targets", "targets": ["ghost"]}))


def test_steps_apply_in_order():
    # the edge references a host added by the previous step
    base = make_chain_model([(0.5, 2.0)])
    variant = apply_modifications(
        base,
        mods(
            {"op": "add_host", "host_id": "hx", "vulns": [NEW_VULN]},
            {"op": "add_edge", "src": "h1", "dst": "hx"},
            {"op": "set_targets", "targets": ["hx"]},
        ),
    )
    assert variant.targets == frozenset({"hx"})


def test_base_model_never_mutates():
    base = make_chain_model([(0.5, 2.0), (0.4, 1.0)], [(0.3, 1.0)])
    before = serialize_harm(base)
    apply_modifications(
        base,
        mods(
            {"op": "remove_vulnerability", "host_id": "h1", "vuln_id": "v1h1"},
            {"op": "remove_host", "host_id": "h1"},
            {"op": "set_targets", "targets": ["h2"]},
        ),
    )
    assert serialize_harm(base) == before


def test_empty_script_is_identity_with_new_id():
    base = make_chain_model([(0.5, 2.0)])
    variant = apply_modifications(base, mods())
    assert variant.upper == base.upper
    assert variant.lower == base.lower
    assert variant.targets == base.targets
    assert variant.model_id != base.model_id


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------


def test_compare_reports_deltas():
    base = make_chain_model([(0.5, 2.0)], [(0.4, 1.0)])
    script = mods({"op": "remove_vulnerability", "host_id": "h2", "vuln_id": "v1h2"})
    variant = apply_modifications(base, script)
    report = compare(base, variant, modifications=script)
    cell = report["metrics"]["sum_risk"]
    assert cell["baseline"] == pytest.approx(3.0)
    assert cell["variant"] == 0.0
    assert cell["delta"] == pytest.approx(-3.0)
    assert cell["pct_change"] == pytest.approx(-100.0)
    assert report["variant_zero_paths"] is True
    assert report["modifications"] == script.to_doc()


def test_compare_pct_change_null_on_zero_baseline():
    base = make_chain_model([(0.5, 2.0)], [], [(0.3, 1.0)])  # no feasible path
    variant = apply_modifications(
        base, mods({"op": "add_vulnerability", "host_id": "h2", "vulnerability": NEW_VULN})
    )
    report = compare(base, variant)
    cell = report["metrics"]["sum_risk"]
    assert cell["baseline"] == 0.0
    assert cell["variant"] > 0
    assert cell["pct_change"] is None


def test_fixture_modifications_match_expected_posture(tb1):
    script = parse_modifications(load_data_text("testbed1_mods"))
    variant = apply_modifications(tb1, script, label="hardened web tier")
    report = compare(tb1, variant, modifications=script)
    assert report["metrics"]["sum_risk"]["baseline"] == pytest.approx(68.594)
    assert report["metrics"]["sum_risk"]["variant"] == pytest.approx(108.638)
    assert report["metrics"]["or_probability"]["variant"] == pytest.approx(0.358198, abs=1e-6)
    assert report["metrics"]["number_of_hosts"]["variant"] == 5
    assert report["metrics"]["density"]["variant"] == pytest.approx(0.2)
    text = render_comparison_text(report)
    assert "Initial" in text and "Modified" in text
    assert "Mode of attack path lenghts" in text


# ---------------------------------------------------------------------------
# Sessions
# ---------------------------------------------------------------------------


def test_session_propose_never_writes(tb1, store):
    keys_before = store.list("harm_objects")
    session = WhatIfSession(store, "testbed1-base")
    script = mods({"op": "remove_vulnerability", "host_id": "web", "vuln_id": "v7web"})
    report = session.propose(script)
    assert report["baseline_id"] == "testbed1-base"
    assert store.list("harm_objects") == keys_before
    assert session.base_id == "testbed1-base"


def test_session_commit_rebases_and_persists(tb1, store):
    session = WhatIfSession(store, "testbed1-base")
    script = mods({"op": "remove_vulnerability", "host_id": "web", "vuln_id": "v7web"})
    variant_id, report = session.commit(script, label="no exec bug")
    assert report["variant_id"] == variant_id
    stored = store.get("harm_objects", variant_id)
    assert stored["parent_id"] == "testbed1-base"
    assert stored["label"] == "no exec bug"
    assert session.base_id == variant_id

    second_id, _ = session.commit(
        mods({"op": "remove_vulnerability", "host_id": "web", "vuln_id": "v6web"})
    )
    assert session.history() == ["testbed1-base", variant_id, second_id]


def test_session_unknown_base(store):
    with pytest.raises(NotFoundError, match="nope"):
        WhatIfSession(store, "nope")


def test_session_commit_fails_fast_when_base_deleted(tb1, store):
    session = WhatIfSession(store, "testbed1-base")
    store.delete("harm_objects", "testbed1-base")
    with pytest.raises(NotFoundError):
        session.commit(mods({"op": "set_targets", "targets": ["db"]}))


def test_history_detects_broken_chain(tb1, store):
    session = WhatIfSession(store, "testbed1-base")
    variant_id, _ = session.commit(mods({"op": "set_targets", "targets": ["db"]}))
    store.delete("harm_objects", "testbed1-base")
    with pytest.raises(NotFoundError, match="testbed1-base"):
        session.history()


def test_modification_set_round_trips_through_json():
    script = parse_modifications(load_data_text("testbed1_mods"))
    again = parse_modifications(json.dumps(script.to_doc()))
    assert again.to_doc() == script.to_doc()
