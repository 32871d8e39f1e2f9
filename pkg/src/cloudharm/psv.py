"""Prioritized Set of Vulnerabilities: greedy exhaustive ranking and trajectories.

Each ranking step evaluates every remaining (host, vulnerability) removal
against the objective and keeps the best one, so the rank order is a patching
sequence, not an unordered subset. A true subset search is available as a
cross-check for small models.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, replace
from typing import Any, Callable, Optional, Sequence

from .assess import AggregationConfig, DEFAULT_CONFIG, MetricSuite, compute_metrics
from .errors import UsageError
from .model import Harm, harm_to_doc, new_model_id
from .store import Store

Objective = Callable[[MetricSuite], float]


def objective_sum_risk(suite: MetricSuite) -> float:
    return suite.sum_risk


def objective_or_probability(suite: MetricSuite) -> float:
    return suite.or_probability


OBJECTIVES: dict[str, Objective] = {
    "sum_risk": objective_sum_risk,
    "or_probability": objective_or_probability,
}


@dataclass(frozen=True)
class RankedVulnerability:
    rank: int
    vuln_id: str
    host_id: str
    marginal_sum_risk_reduction: float
    marginal_or_prob_reduction: float

    def to_doc(self) -> dict[str, Any]:
        return {
            "rank": self.rank,
            "vuln_id": self.vuln_id,
            "host_id": self.host_id,
            "marginal_sum_risk_reduction": self.marginal_sum_risk_reduction,
            "marginal_or_prob_reduction": self.marginal_or_prob_reduction,
        }


@dataclass(frozen=True)
class PsvRanking:
    model_id: str
    objective: str
    ranked: tuple[RankedVulnerability, ...]

    def to_doc(self) -> dict[str, Any]:
        return {
            "model_id": self.model_id,
            "objective": self.objective,
            "ranked": [r.to_doc() for r in self.ranked],
        }


def remove_instance(model: Harm, host_id: str, vuln_id: str) -> Harm:
    """New model without one vulnerability instance; identity fields untouched."""
    vulns = tuple(v for v in model.host_vulns(host_id) if v.vuln_id != vuln_id)
    lower = dict(model.lower)
    lower[host_id] = vulns
    return replace(model, lower=lower)


def _attack_cost(model: Harm, host_id: str, vuln_id: str) -> Optional[float]:
    for v in model.host_vulns(host_id):
        if v.vuln_id == vuln_id:
            return v.attack_cost
    return None


def rank_psv_es(
    model: Harm,
    k: int,
    config: AggregationConfig = DEFAULT_CONFIG,
    objective: str = "sum_risk",
) -> PsvRanking:
    """Greedy exhaustive ranking of the top-k vulnerability instances.

    When any instance carries an attack cost, candidates are compared by
    reduction per unit cost (absent costs default to 1); with no costs anywhere
    the division is skipped entirely. Ties break on larger raw reduction, then
    on (host_id, vuln_id).
    """
    if objective not in OBJECTIVES:
        raise UsageError(f"unknown objective {objective!r}; choose from {sorted(OBJECTIVES)}")
    total = len(model.vuln_instances())
    if k <= 0:
        raise UsageError(f"k must be positive, got {k}")
    if k > total:
        raise UsageError(f"k={k} exceeds the {total} vulnerability instances in the model")

    objective_fn = OBJECTIVES[objective]
    use_costs = any(
        v.attack_cost is not None for vulns in model.lower.values() for v in vulns
    )

    current = model
    ranked: list[RankedVulnerability] = []
    for step in range(1, k + 1):
        base = compute_metrics(current, config)
        best = None
        for host_id, vuln_id in current.vuln_instances():
            candidate = remove_instance(current, host_id, vuln_id)
            suite = compute_metrics(candidate, config)
            reduction = objective_fn(base) - objective_fn(suite)
            if use_costs:
                cost = _attack_cost(current, host_id, vuln_id)
                score = reduction / (cost if cost is not None else 1.0)
            else:
                score = reduction
            # sort key: max score, then max raw reduction, then lexicographic
            key = (-score, -reduction, host_id, vuln_id)
            if best is None or key < best[0]:
                best = (key, host_id, vuln_id, suite)
        assert best is not None
        _, host_id, vuln_id, suite = best
        ranked.append(
            RankedVulnerability(
                rank=step,
                vuln_id=vuln_id,
                host_id=host_id,
                marginal_sum_risk_reduction=base.sum_risk - suite.sum_risk,
                marginal_or_prob_reduction=base.or_probability - suite.or_probability,
            )
        )
        current = remove_instance(current, host_id, vuln_id)
    return PsvRanking(model_id=model.model_id, objective=objective, ranked=tuple(ranked))


def best_subset_es(
    model: Harm,
    k: int,
    config: AggregationConfig = DEFAULT_CONFIG,
    objective: str = "sum_risk",
    max_instances: int = 15,
) -> tuple[tuple[str, str], ...]:
    """Optimal size-k removal subset by full enumeration. Cross-check only.

    Exponential; refused beyond max_instances total vulnerabilities.
    """
    if objective not in OBJECTIVES:
        raise UsageError(f"unknown objective {objective!r}")
    instances = model.vuln_instances()
    if len(instances) > max_instances:
        raise UsageError(
            f"subset search needs <= {max_instances} instances, model has {len(instances)}"
        )
    if not 0 < k <= len(instances):
        raise UsageError(f"k must be in 1..{len(instances)}, got {k}")
    objective_fn = OBJECTIVES[objective]
    best_subset = None
    best_value = None
    for subset in itertools.combinations(instances, k):
        candidate = model
        for host_id, vuln_id in subset:
            candidate = remove_instance(candidate, host_id, vuln_id)
        value = objective_fn(compute_metrics(candidate, config))
        if best_value is None or value < best_value or (value == best_value and subset < best_subset):
            best_value = value
            best_subset = subset
    return best_subset


def patch_trajectory(
    model: Harm,
    ranking: PsvRanking,
    config: AggregationConfig = DEFAULT_CONFIG,
    store: Optional[Store] = None,
) -> list[MetricSuite]:
    """Metric suites along the ranking: baseline first, then after each patch.

    With a store, each intermediate model is persisted with parent lineage so
    the patching history is auditable.
    """
    suites = [compute_metrics(model, config)]
    current = model
    parent = model.model_id
    for entry in ranking.ranked:
        current = replace(
            remove_instance(current, entry.host_id, entry.vuln_id),
            model_id=new_model_id(),
            parent_id=parent,
            label=f"{model.label or model.model_id} patched top-{entry.rank}",
        )
        parent = current.model_id
        suites.append(compute_metrics(current, config))
        if store is not None:
            store.put("harm_objects", current.model_id, harm_to_doc(current))
    return suites


def trajectory_rows(suites: Sequence[MetricSuite]) -> list[dict[str, Any]]:
    return [
        {
            "step": i,
            "sum_risk": s.sum_risk,
            "max_risk": s.max_risk,
            "or_prob": s.or_probability,
            "max_prob": s.max_probability,
        }
        for i, s in enumerate(suites)
    ]


def trajectory_csv(suites: Sequence[MetricSuite]) -> str:
    """CSV of (step, sum_risk, max_risk, or_prob, max_prob), one row per patch level."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["step", "sum_risk", "max_risk", "or_prob", "max_prob"])
    writer.writeheader()
    for row in trajectory_rows(suites):
        writer.writerow(row)
    return buf.getvalue()
