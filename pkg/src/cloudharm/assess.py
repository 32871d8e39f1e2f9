"""HARM assembly from the stores, attack-path enumeration, and the metric suite.

An attack path is a simple directed path from the ATTACKER node to a target,
and every host on it must carry at least one vulnerability: a host with
nothing to exploit cannot be a stepping stone. Host scores aggregate through
configurable gates because reasonable readings differ; the defaults (MAX
probability, SUM risk) model an attacker using the single best exploit per
host while risk accumulates.
"""

from __future__ import annotations

import logging
import statistics
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Sequence

from .errors import BuildError, ResourceError, UsageError, ValidationError
from .model import (
    ATTACKER,
    AttackPath,
    Harm,
    VulnerabilityRecord,
    graph_from_doc,
    harm_to_doc,
    new_model_id,
    validate_harm,
)
from .store import RG_KEY, Store

logger = logging.getLogger(__name__)

PROB_GATES = ("max", "or")
RISK_GATES = ("sum", "max")

DEFAULT_PATH_CAP = 1_000_000


@dataclass(frozen=True)
class AggregationConfig:
    """Gate selection for folding a host's vulnerabilities into one score.

    Path probability is always the product over path hosts; system-level
    OR/MAX are both reported, so they need no knobs here.
    """

    host_prob_gate: str = "max"
    host_risk_gate: str = "sum"

    def __post_init__(self) -> None:
        if self.host_prob_gate not in PROB_GATES:
            raise UsageError(f"unknown probability gate {self.host_prob_gate!r}; choose from {PROB_GATES}")
        if self.host_risk_gate not in RISK_GATES:
            raise UsageError(f"unknown risk gate {self.host_risk_gate!r}; choose from {RISK_GATES}")

    def to_doc(self) -> dict[str, str]:
        return {
            "host_prob_gate": self.host_prob_gate,
            "host_risk_gate": self.host_risk_gate,
            "path_prob": "product",
        }


DEFAULT_CONFIG = AggregationConfig()


def gates_from_string(text: str) -> AggregationConfig:
    """Parse the CLI/HTTP gate syntax "<prob_gate>,<risk_gate>", e.g. "max,sum"."""
    parts = [p.strip().lower() for p in text.split(",")]
    if len(parts) != 2:
        raise UsageError(f"gates must look like 'max,sum', got {text!r}")
    return AggregationConfig(host_prob_gate=parts[0], host_risk_gate=parts[1])


@dataclass(frozen=True)
class MetricSuite:
    number_of_hosts: int
    sum_risk: float
    max_risk: float
    or_probability: float
    max_probability: float
    mean_path_length: float
    mode_path_length: int
    stddev_path_length: float
    shortest_path_length: int
    density: float
    zero_paths: bool = False

    def to_doc(self) -> dict[str, Any]:
        return {
            "number_of_hosts": self.number_of_hosts,
            "sum_risk": self.sum_risk,
            "max_risk": self.max_risk,
            "or_probability": self.or_probability,
            "max_probability": self.max_probability,
            "mean_path_length": self.mean_path_length,
            "mode_path_length": self.mode_path_length,
            "stddev_path_length": self.stddev_path_length,
            "shortest_path_length": self.shortest_path_length,
            "density": self.density,
        }


# ---------------------------------------------------------------------------
# Model assembly (stores -> Harm)
# ---------------------------------------------------------------------------


def build_harm_from_store(
    store: Store,
    targets: Sequence[str],
    label: str = "",
    model_id: Optional[str] = None,
    parent_id: Optional[str] = None,
) -> Harm:
    """Join the network, host, and vulnerability stores into one model.

    Hosts appearing in the reachability graph but never scanned get empty
    vulnerability lists (with a warning); a host record naming a vulnerability
    id absent from the VDB is a hard error. The assembled model is persisted
    to harm_objects before being returned.
    """
    rg_doc = store.get("ndb", RG_KEY)
    if rg_doc is None:
        raise BuildError("no reachability graph in store; run ingest-sg first")
    graph = graph_from_doc(rg_doc)

    lower: dict[str, tuple[VulnerabilityRecord, ...]] = {}
    dangling: list[str] = []
    for host in sorted(graph.hosts):
        host_doc = store.get("hdb", host)
        if host_doc is None:
            logger.warning("host %s has no scan record; assuming no known vulnerabilities", host)
            lower[host] = ()
            continue
        records = []
        for vuln_id in host_doc.get("vuln_ids", []):
            vdoc = store.get("vdb", vuln_id)
            if vdoc is None:
                dangling.append(f"{host}->{vuln_id}")
                continue
            records.append(VulnerabilityRecord.from_doc(vdoc))
        lower[host] = tuple(records)
    if dangling:
        raise BuildError("host records reference missing vulnerability ids: " + ", ".join(sorted(dangling)))

    model = Harm(
        model_id=model_id or new_model_id(),
        upper=graph,
        lower=lower,
        targets=frozenset(targets),
        label=label,
        parent_id=parent_id,
    )
    violations = validate_harm(model)
    if violations:
        raise ValidationError("; ".join(violations))
    store.put("harm_objects", model.model_id, harm_to_doc(model))
    return model


# ---------------------------------------------------------------------------
# Path enumeration
# ---------------------------------------------------------------------------


def enumerate_attack_paths(model: Harm, cap: int = DEFAULT_PATH_CAP) -> list[AttackPath]:
    """All simple paths from ATTACKER to any target over exploitable hosts.

    A host with zero vulnerabilities is not traversable. Output is sorted by
    host sequence so results are independent of traversal order. Exceeds cap
    -> resource error; reduce the graph or raise the cap deliberately.
    """
    adjacency: dict[str, list[str]] = {}
    for edge in model.upper.edges:
        adjacency.setdefault(edge.src, [])
        if edge.dst not in adjacency[edge.src]:
            adjacency[edge.src].append(edge.dst)
    for successors in adjacency.values():
        successors.sort()

    feasible = {host for host, vulns in model.lower.items() if vulns}
    paths: list[AttackPath] = []
    stack: list[tuple[str, tuple[str, ...]]] = [(ATTACKER, ())]
    while stack:
        node, path = stack.pop()
        for nxt in adjacency.get(node, ()):
            if nxt == ATTACKER or nxt in path or nxt not in feasible:
                continue
            extended = path + (nxt,)
            if nxt in model.targets:
                paths.append(AttackPath(hosts=extended))
                if len(paths) > cap:
                    raise ResourceError(
                        f"more than {cap} attack paths; reduce the graph or raise the cap"
                    )
            stack.append((nxt, extended))
    paths.sort(key=lambda p: p.hosts)
    return paths


# ---------------------------------------------------------------------------
# Aggregation gates
# ---------------------------------------------------------------------------


def host_probability(vulns: Sequence[VulnerabilityRecord], config: AggregationConfig = DEFAULT_CONFIG) -> float:
    """Fold a host's vulnerability probabilities through the configured gate.

    Vulnerabilities without scoring data are excluded; no scored
    vulnerabilities means probability 0.
    """
    probs = [v.probability for v in vulns if v.probability is not None]
    if not probs:
        return 0.0
    if config.host_prob_gate == "max":
        return max(probs)
    acc = 1.0
    for p in probs:
        acc *= 1.0 - p
    return 1.0 - acc


def host_risk(vulns: Sequence[VulnerabilityRecord], config: AggregationConfig = DEFAULT_CONFIG) -> float:
    risks = [v.risk for v in vulns if v.risk is not None]
    if not risks:
        return 0.0
    if config.host_risk_gate == "max":
        return max(risks)
    return sum(risks)


def path_probability(model: Harm, path: AttackPath, config: AggregationConfig = DEFAULT_CONFIG) -> float:
    prob = 1.0
    for host in path.hosts:
        prob *= host_probability(model.host_vulns(host), config)
    return prob


def path_risk(model: Harm, path: AttackPath, config: AggregationConfig = DEFAULT_CONFIG) -> float:
    return sum(host_risk(model.host_vulns(host), config) for host in path.hosts)


# ---------------------------------------------------------------------------
# Metric suite
# ---------------------------------------------------------------------------


def compute_metrics(
    model: Harm,
    config: AggregationConfig = DEFAULT_CONFIG,
    paths: Optional[Sequence[AttackPath]] = None,
    cap: int = DEFAULT_PATH_CAP,
) -> MetricSuite:
    """Evaluate the full metric suite. Pure; callers may pass pre-enumerated paths."""
    if paths is None:
        paths = enumerate_attack_paths(model, cap=cap)

    n = len(model.upper.nodes) - 1
    density = model.upper.internal_edge_count() / (n * (n - 1)) if n > 1 else 0.0

    if not paths:
        return MetricSuite(
            number_of_hosts=n,
            sum_risk=0.0,
            max_risk=0.0,
            or_probability=0.0,
            max_probability=0.0,
            mean_path_length=0.0,
            mode_path_length=0,
            stddev_path_length=0.0,
            shortest_path_length=0,
            density=density,
            zero_paths=True,
        )

    probs = [path_probability(model, p, config) for p in paths]
    risks = [path_risk(model, p, config) for p in paths]
    lengths = [p.length for p in paths]

    miss = 1.0
    for p in probs:
        miss *= 1.0 - p
    return MetricSuite(
        number_of_hosts=n,
        sum_risk=sum(risks),
        max_risk=max(risks),
        or_probability=1.0 - miss,
        max_probability=max(probs),
        mean_path_length=statistics.fmean(lengths),
        mode_path_length=min(statistics.multimode(lengths)),
        stddev_path_length=statistics.pstdev(lengths),
        shortest_path_length=min(lengths),
        density=density,
    )


def count_unknown_score_vulns(model: Harm) -> int:
    return sum(
        1
        for vulns in model.lower.values()
        for v in vulns
        if v.probability is None or v.risk is None
    )


def assess(
    model: Harm,
    config: AggregationConfig = DEFAULT_CONFIG,
    cap: int = DEFAULT_PATH_CAP,
) -> dict[str, Any]:
    """Full assessment report: the metric suite plus identity and provenance."""
    paths = enumerate_attack_paths(model, cap=cap)
    suite = compute_metrics(model, config, paths=paths)
    report = suite.to_doc()
    report.update(
        {
            "model_id": model.model_id,
            "config": config.to_doc(),
            "paths_count": len(paths),
            "zero_paths_flag": suite.zero_paths,
            "unknown_score_vulns": count_unknown_score_vulns(model),
        }
    )
    return report


# ---------------------------------------------------------------------------
# Text rendering
# ---------------------------------------------------------------------------

# Row label -> report key, in presentation order.
TEXT_ROWS = (
    ("Number of hosts", "number_of_hosts"),
    ("Sum Risk", "sum_risk"),
    ("Max Risk", "max_risk"),
    ("Or Probability of attack success", "or_probability"),
    ("Max Probability of attack success", "max_probability"),
    ("Mean of attack path lengths", "mean_path_length"),
    ("Mode of attack path lenghts", "mode_path_length"),
    ("Standard Deviation of attack path lengths", "stddev_path_length"),
    ("Shortest attack path length", "shortest_path_length"),
    ("Density", "density"),
)


def format_metric(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def render_text_report(report: Mapping[str, Any]) -> str:
    width = max(len(label) for label, _ in TEXT_ROWS)
    lines = [f"Model: {report['model_id']}"]
    cfg = report["config"]
    lines.append(f"Gates: prob={cfg['host_prob_gate']} risk={cfg['host_risk_gate']}")
    lines.append(f"Attack paths: {report['paths_count']}")
    if report.get("zero_paths_flag"):
        lines.append("Note: no attack paths; path metrics reported as 0")
    lines.append("")
    for label, key in TEXT_ROWS:
        lines.append(f"{label:<{width}}  {format_metric(report[key])}")
    return "\n".join(lines) + "\n"
