"""Hypothetical modification of stored models and baseline/variant comparison.

Modifications form an ordered script so later steps can reference hosts added
earlier. Application is pure: the base model is never touched, and previews
never write to the store; only an explicit commit persists the variant.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Sequence

from .assess import AggregationConfig, DEFAULT_CONFIG, compute_metrics
from .errors import ModificationError, NotFoundError, ParseError, ValidationError
from .model import (
    ATTACKER,
    Edge,
    Harm,
    ReachabilityGraph,
    VulnerabilityRecord,
    harm_from_doc,
    harm_to_doc,
    new_model_id,
    validate_harm,
)
from .store import Store

OPS = (
    "remove_vulnerability",
    "add_vulnerability",
    "remove_edge",
    "add_edge",
    "remove_host",
    "add_host",
    "set_targets",
)

_REQUIRED_FIELDS = {
    "remove_vulnerability": ("host_id", "vuln_id"),
    "add_vulnerability": ("host_id", "vulnerability"),
    "remove_edge": ("src", "dst"),
    "add_edge": ("src", "dst"),
    "remove_host": ("host_id",),
    "add_host": ("host_id",),
    "set_targets": ("targets",),
}


@dataclass(frozen=True)
class ModificationSet:
    """Ordered, validated script of model edits. Steps keep their wire form."""

    steps: tuple[Mapping[str, Any], ...]

    def __len__(self) -> int:
        return len(self.steps)

    def to_doc(self) -> list[dict[str, Any]]:
        return [dict(step) for step in self.steps]


def parse_modifications(raw: str | bytes | Sequence[Mapping[str, Any]]) -> ModificationSet:
    """Validate the tagged-array wire format; errors name the failing step."""
    if isinstance(raw, (str, bytes)):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"modification set is not valid JSON: {exc.msg}") from exc
    else:
        data = raw
    if not isinstance(data, list):
        raise ParseError("modification set must be a JSON array")
    steps = []
    for i, step in enumerate(data):
        if not isinstance(step, dict) or "op" not in step:
            raise ParseError(f"step {i}: not a tagged operation object")
        op = step["op"]
        if op not in OPS:
            raise ParseError(f"step {i}: unknown op {op!r}; choose from {OPS}")
        for field_name in _REQUIRED_FIELDS[op]:
            if field_name not in step:
                raise ParseError(f"step {i}: op {op!r} missing field {field_name!r}")
        steps.append(step)
    return ModificationSet(steps=tuple(steps))


# ---------------------------------------------------------------------------
# Application
# ---------------------------------------------------------------------------


def _parse_edge(spec: Mapping[str, Any]) -> Edge:
    return Edge(
        src=spec["src"],
        dst=spec["dst"],
        ports=tuple((int(p[0]), int(p[1])) for p in spec.get("ports", [])),
        protocol=spec.get("protocol", "any"),
    )


class _Draft:
    """Mutable working copy of a model while a script runs."""

    def __init__(self, base: Harm):
        self.nodes = set(base.upper.nodes)
        self.edges = set(base.upper.edges)
        self.lower = {h: list(vs) for h, vs in base.lower.items()}
        self.targets = set(base.targets)

    def require_host(self, host_id: str, i: int) -> None:
        if host_id == ATTACKER or host_id not in self.nodes:
            raise ModificationError(f"step {i}: no such host {host_id!r}")


def apply_modifications(base: Harm, mods: ModificationSet, label: str = "") -> Harm:
    """Run the script against a copy of base; base itself is never altered.

    The result gets a fresh model_id with parent_id pointing at base. Steps
    failing to resolve raise with their index; a final structural validation
    catches script-level damage such as emptied targets.
    """
    draft = _Draft(base)
    for i, step in enumerate(mods.steps):
        op = step["op"]
        if op == "remove_vulnerability":
            draft.require_host(step["host_id"], i)
            vulns = draft.lower.get(step["host_id"], [])
            remaining = [v for v in vulns if v.vuln_id != step["vuln_id"]]
            if len(remaining) == len(vulns):
                raise ModificationError(
                    f"step {i}: host {step['host_id']!r} has no vulnerability {step['vuln_id']!r}"
                )
            draft.lower[step["host_id"]] = remaining
        elif op == "add_vulnerability":
            draft.require_host(step["host_id"], i)
            record = VulnerabilityRecord.from_doc(step["vulnerability"])
            existing = draft.lower.setdefault(step["host_id"], [])
            if any(v.vuln_id == record.vuln_id for v in existing):
                raise ModificationError(
                    f"step {i}: host {step['host_id']!r} already has {record.vuln_id!r}"
                )
            existing.append(record)
        elif op == "remove_edge":
            matching = {e for e in draft.edges if e.src == step["src"] and e.dst == step["dst"]}
            if not matching:
                raise ModificationError(f"step {i}: no edge {step['src']!r} -> {step['dst']!r}")
            draft.edges -= matching
        elif op == "add_edge":
            edge = _parse_edge(step)
            for endpoint in (edge.src, edge.dst):
                if endpoint not in draft.nodes:
                    raise ModificationError(f"step {i}: no such node {endpoint!r}")
            if edge.src == edge.dst or edge.dst == ATTACKER:
                raise ModificationError(f"step {i}: illegal edge {edge.src!r} -> {edge.dst!r}")
            if any(e.src == edge.src and e.dst == edge.dst for e in draft.edges):
                raise ModificationError(f"step {i}: edge {edge.src!r} -> {edge.dst!r} already present")
            draft.edges.add(edge)
        elif op == "remove_host":
            draft.require_host(step["host_id"], i)
            host_id = step["host_id"]
            draft.nodes.discard(host_id)
            draft.edges = {e for e in draft.edges if host_id not in (e.src, e.dst)}
            draft.lower.pop(host_id, None)
            draft.targets.discard(host_id)
        elif op == "add_host":
            host_id = step["host_id"]
            if host_id in draft.nodes or host_id == ATTACKER:
                raise ModificationError(f"step {i}: host {host_id!r} already exists")
            draft.nodes.add(host_id)
            draft.lower[host_id] = [
                VulnerabilityRecord.from_doc(v) for v in step.get("vulns", [])
            ]
            for edge_spec in step.get("edges", []):
                edge = _parse_edge(edge_spec)
                for endpoint in (edge.src, edge.dst):
                    if endpoint not in draft.nodes:
                        raise ModificationError(f"step {i}: no such node {endpoint!r}")
                draft.edges.add(edge)
        elif op == "set_targets":
            targets = set(step["targets"])
            for t in targets:
                if t == ATTACKER or t not in draft.nodes:
                    raise ModificationError(f"step {i}: target {t!r} is not a host")
            draft.targets = targets

    variant = Harm(
        model_id=new_model_id(),
        upper=ReachabilityGraph(nodes=frozenset(draft.nodes), edges=frozenset(draft.edges)),
        lower={h: tuple(vs) for h, vs in draft.lower.items()},
        targets=frozenset(draft.targets),
        label=label,
        parent_id=base.model_id,
    )
    violations = validate_harm(variant)
    if violations:
        raise ValidationError("modified model is invalid: " + "; ".join(violations))
    return variant


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------


def compare(
    baseline: Harm,
    variant: Harm,
    config: AggregationConfig = DEFAULT_CONFIG,
    modifications: Optional[ModificationSet] = None,
) -> dict[str, Any]:
    """ComparisonReport: per-metric baseline/variant/delta under one config.

    pct_change is null when the baseline value is 0 (no meaningful ratio).
    """
    base_suite = compute_metrics(baseline, config)
    variant_suite = compute_metrics(variant, config)
    base_doc = base_suite.to_doc()
    variant_doc = variant_suite.to_doc()
    metrics: dict[str, Any] = {}
    for key, base_value in base_doc.items():
        variant_value = variant_doc[key]
        delta = variant_value - base_value
        pct = None if base_value == 0 else 100.0 * delta / base_value
        metrics[key] = {
            "baseline": base_value,
            "variant": variant_value,
            "delta": delta,
            "pct_change": pct,
        }
    return {
        "baseline_id": baseline.model_id,
        "variant_id": variant.model_id,
        "baseline_label": baseline.label,
        "variant_label": variant.label,
        "baseline_zero_paths": base_suite.zero_paths,
        "variant_zero_paths": variant_suite.zero_paths,
        "config": config.to_doc(),
        "metrics": metrics,
        "modifications": modifications.to_doc() if modifications is not None else [],
    }


def render_comparison_text(report: Mapping[str, Any]) -> str:
    from .assess import TEXT_ROWS, format_metric

    label_width = max(len(label) for label, _ in TEXT_ROWS)
    lines = [
        f"Baseline: {report['baseline_id']}",
        f"Variant:  {report['variant_id']}"
        + (f" ({report['variant_label']})" if report.get("variant_label") else ""),
        "",
        f"{'Metrics':<{label_width}}  {'Initial':>12}  {'Modified':>12}",
    ]
    for label, key in TEXT_ROWS:
        cell = report["metrics"][key]
        lines.append(
            f"{label:<{label_width}}  {format_metric(cell['baseline']):>12}  {format_metric(cell['variant']):>12}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Sessions
# ---------------------------------------------------------------------------


class WhatIfSession:
    """Client-driven what-if loop over one stored base model.

    propose never writes; commit persists the variant and re-bases the
    session on it, so repeated commits walk the posture forward.
    """

    def __init__(self, store: Store, base_id: str, config: AggregationConfig = DEFAULT_CONFIG):
        self._store = store
        self._config = config
        self._base = self._load(base_id)

    def _load(self, model_id: str) -> Harm:
        doc = self._store.get("harm_objects", model_id)
        if doc is None:
            raise NotFoundError(f"no stored model {model_id!r}")
        return harm_from_doc(doc)

    @property
    def base_id(self) -> str:
        return self._base.model_id

    def propose(self, mods: ModificationSet) -> dict[str, Any]:
        variant = apply_modifications(self._base, mods)
        return compare(self._base, variant, self._config, modifications=mods)

    def commit(self, mods: ModificationSet, label: str = "") -> tuple[str, dict[str, Any]]:
        self._base = self._load(self._base.model_id)  # fail fast if deleted externally
        variant = apply_modifications(self._base, mods, label=label)
        self._store.put("harm_objects", variant.model_id, harm_to_doc(variant))
        report = compare(self._base, variant, self._config, modifications=mods)
        self._base = variant
        return variant.model_id, report

    def history(self) -> list[str]:
        """Lineage chain root..current; not-found if a link was deleted."""
        chain = []
        cursor: Optional[str] = self._base.model_id
        while cursor is not None:
            doc = self._store.get("harm_objects", cursor)
            if doc is None:
                raise NotFoundError(f"model {cursor!r} missing from store")
            chain.append(cursor)
            cursor = doc.get("parent_id")
        return list(reversed(chain))
