"""Two-phase cloud security assessment over a file-backed model store.

Phase 1 ingests security-group exports and host scan reports into network,
host, and vulnerability databases, assembles a hierarchical attack model,
and evaluates attack paths and risk metrics. Phase 2 explores hypothetical
changes: patch rankings, modification scripts, and baseline comparisons.
"""

from .assess import (
    AggregationConfig,
    MetricSuite,
    assess,
    build_harm_from_store,
    compute_metrics,
    enumerate_attack_paths,
)
from .errors import CloudHarmError
from .model import ATTACKER, AttackPath, Edge, Harm, ReachabilityGraph, VulnerabilityRecord
from .psv import PsvRanking, patch_trajectory, rank_psv_es
from .sg_ingest import build_reachability_graph, parse_sg_export
from .store import Store
from .vuln_ingest import ingest_scan, load_nvd_snapshot, parse_scan_report
from .whatif import ModificationSet, WhatIfSession, apply_modifications, compare, parse_modifications

__version__ = "0.1.0"

__all__ = [
    "ATTACKER",
    "AggregationConfig",
    "AttackPath",
    "CloudHarmError",
    "Edge",
    "Harm",
    "MetricSuite",
    "ModificationSet",
    "PsvRanking",
    "ReachabilityGraph",
    "Store",
    "VulnerabilityRecord",
    "WhatIfSession",
    "apply_modifications",
    "assess",
    "build_harm_from_store",
    "build_reachability_graph",
    "compare",
    "compute_metrics",
    "enumerate_attack_paths",
    "ingest_scan",
    "load_nvd_snapshot",
    "parse_modifications",
    "parse_scan_report",
    "parse_sg_export",
    "patch_trajectory",
    "rank_psv_es",
]
