import json
import random

import pytest

from cloudharm.model import ATTACKER, Edge, Harm, ReachabilityGraph, VulnerabilityRecord
from cloudharm.store import Store


@pytest.fixture
def store(tmp_path):
    return Store(tmp_path / "store")


@pytest.fixture
def tb1(store):
    from cloudharm.fixtures import testbed_model

    return testbed_model("testbed1", store)


@pytest.fixture
def tb2(store):
    from cloudharm.fixtures import testbed_model

    return testbed_model("testbed2", store)


def make_chain_model(*host_vulns, targets=None, model_id="chain"):
    """Linear ATTACKER -> h1 -> h2 -> ... model from (prob, risk) spec tuples.

    Each positional argument is a list of (probability, risk) pairs for one
    host; hosts are named h1..hN and the last one is the default target.
    """
    hosts = [f"h{i + 1}" for i in range(len(host_vulns))]
    edges = {Edge(src=ATTACKER, dst=hosts[0], ports=((80, 80),), protocol="tcp")}
    for a, b in zip(hosts, hosts[1:]):
        edges.add(Edge(src=a, dst=b, ports=((80, 80),), protocol="tcp"))
    lower = {}
    for host, vulns in zip(hosts, host_vulns):
        lower[host] = tuple(
            VulnerabilityRecord(
                vuln_id=f"v{j + 1}{host}",
                cve_id=f"CVE-2020-{1000 + j}",
                probability=p,
                risk=r,
            )
            for j, (p, r) in enumerate(vulns)
        )
    return Harm(
        model_id=model_id,
        upper=ReachabilityGraph(nodes=frozenset([ATTACKER, *hosts]), edges=frozenset(edges)),
        lower=lower,
        targets=frozenset(targets if targets is not None else [hosts[-1]]),
        created_at="2020-01-01T00:00:00Z",
    )


def make_random_model(rng: random.Random, max_hosts: int = 6, max_vulns: int = 3) -> Harm:
    """Random DAG-shaped model for property tests; small enough to brute-force."""
    n = rng.randint(1, max_hosts)
    hosts = [f"h{i}" for i in range(n)]
    edges = set()
    for i, src in enumerate(hosts):
        if rng.random() < 0.7:
            edges.add(Edge(src=ATTACKER, dst=src))
        for dst in hosts[i + 1 :]:
            if rng.random() < 0.5:
                edges.add(Edge(src=src, dst=dst))
    lower = {}
    for host in hosts:
        vulns = []
        for j in range(rng.randint(0, max_vulns)):
            prob = round(rng.uniform(0.05, 0.95), 3)
            vulns.append(
                VulnerabilityRecord(
                    vuln_id=f"v{j}{host}",
                    cve_id=f"CVE-2021-{2000 + j}",
                    probability=prob,
                    risk=round(prob * rng.uniform(1.0, 10.0), 3),
                )
            )
        lower[host] = tuple(vulns)
    targets = frozenset(rng.sample(hosts, rng.randint(1, n)))
    return Harm(
        model_id=f"rand-{rng.getrandbits(32):08x}",
        upper=ReachabilityGraph(nodes=frozenset([ATTACKER, *hosts]), edges=frozenset(edges)),
        lower=lower,
        targets=targets,
        created_at="2021-01-01T00:00:00Z",
    )


def load_schema(name: str) -> dict:
    from importlib import resources

    path = resources.files("cloudharm") / "schemas" / f"{name}.schema.json"
    return json.loads(path.read_text(encoding="utf-8"))


def validate_schema(doc, schema_name: str) -> None:
    import jsonschema

    jsonschema.validate(instance=doc, schema=load_schema(schema_name))
