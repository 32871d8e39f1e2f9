import { describe, expect, it } from "vitest";

import type {
  AssessmentReport,
  ComparisonReport,
  HarmDocument,
  ModelSummary,
} from "../src/api.js";
import {
  isEdgePending,
  isVulnerabilityPending,
  newState,
  selectBase,
  toggleEdge,
  toggleVulnerability,
} from "../src/state.js";
import { METRIC_ROWS, renderComparisonTable, renderMetricsTable } from "../src/tables.js";
import { parseCsv, polylinePoints, renderTrajectoryChart } from "../src/chart.js";
import { buildForest, renderTree, treeDepth } from "../src/tree.js";
import { layerHosts, renderTopology, renderVulnDrawer } from "../src/topology.js";
import { renderWhatIfPanel } from "../src/whatif.js";

function sampleReport(): AssessmentReport {
  return {
    model_id: "m1",
    config: { host_prob_gate: "max", host_risk_gate: "sum", path_prob: "product" },
    paths_count: 1,
    zero_paths_flag: false,
    unknown_score_vulns: 0,
    number_of_hosts: 3,
    sum_risk: 68.594,
    max_risk: 68.594,
    or_probability: 0.26161199999999996,
    max_probability: 0.261612,
    mean_path_length: 3.0,
    mode_path_length: 3,
    stddev_path_length: 0.0,
    shortest_path_length: 3,
    density: 0.3333333333333333,
  };
}

function sampleDoc(): HarmDocument {
  return {
    model_id: "m1",
    label: "demo",
    parent_id: null,
    created_at: "2024-01-01T00:00:00Z",
    targets: ["db"],
    upper: {
      nodes: ["ATTACKER", "web", "app", "db", "island"],
      edges: [
        { src: "ATTACKER", dst: "web", ports: [[80, 80]], protocol: "tcp" },
        { src: "web", dst: "app", ports: [[8080, 8080]], protocol: "tcp" },
        { src: "app", dst: "db", ports: [[3306, 3306]], protocol: "tcp" },
      ],
    },
    lower: {
      web: [
        { vuln_id: "v1web", cve_id: "CVE-2016-8740", probability: 0.5, risk: 1.45 },
        { vuln_id: "v2web", cve_id: "CVE-2016-1546", probability: null, risk: null },
      ],
      app: [{ vuln_id: "v1app", cve_id: "CVE-2017-1000", probability: 0.3, risk: 2.1 }],
      db: [{ vuln_id: "v1db", cve_id: "CVE-2016-6662", probability: 0.54, risk: 48.6 }],
      island: [],
    },
  };
}

// ---------------------------------------------------------------------------
// state
// ---------------------------------------------------------------------------

describe("state", () => {
  it("toggles vulnerability steps on and off", () => {
    const s = newState();
    toggleVulnerability(s, "web", "v1web");
    expect(s.pending).toEqual([{ op: "remove_vulnerability", host_id: "web", vuln_id: "v1web" }]);
    expect(isVulnerabilityPending(s, "web", "v1web")).toBe(true);
    toggleVulnerability(s, "web", "v1web");
    expect(s.pending).toEqual([]);
    expect(isVulnerabilityPending(s, "web", "v1web")).toBe(false);
  });

  it("toggles edge steps independently of vulnerabilities", () => {
    const s = newState();
    toggleEdge(s, "web", "app");
    toggleVulnerability(s, "web", "v1web");
    expect(s.pending).toHaveLength(2);
    expect(isEdgePending(s, "web", "app")).toBe(true);
    expect(isEdgePending(s, "app", "db")).toBe(false);
    toggleEdge(s, "web", "app");
    expect(s.pending).toEqual([{ op: "remove_vulnerability", host_id: "web", vuln_id: "v1web" }]);
  });

  it("selecting a different base clears pending modifications", () => {
    const s = newState();
    selectBase(s, "m1");
    toggleVulnerability(s, "web", "v1web");
    selectBase(s, "m1");
    expect(s.pending).toHaveLength(1);
    selectBase(s, "m2");
    expect(s.pending).toEqual([]);
    expect(s.baseId).toBe("m2");
  });
});

// ---------------------------------------------------------------------------
// tables
// ---------------------------------------------------------------------------

describe("tables", () => {
  it("renders every metric cell as String(value) with no reformatting", () => {
    const html = renderMetricsTable(sampleReport());
    expect(html).toContain(">0.26161199999999996<");
    expect(html).toContain(">0.3333333333333333<");
    expect(html).toContain(">68.594<");
    expect(html).toContain(">3<");
  });

  it("keeps the row labels verbatim", () => {
    const labels = METRIC_ROWS.map(([label]) => label);
    expect(labels).toContain("Mode of attack path lenghts");
    expect(labels).toContain("Or Probability of attack success");
    const html = renderMetricsTable(sampleReport());
    for (const label of labels) {
      expect(html).toContain(label);
    }
  });

  it("renders the comparison as Initial/Modified columns straight from the report", () => {
    const report: ComparisonReport = {
      baseline_id: "m1",
      variant_id: "m2",
      baseline_label: "base",
      variant_label: "patched",
      baseline_zero_paths: false,
      variant_zero_paths: true,
      config: { host_prob_gate: "max", host_risk_gate: "sum", path_prob: "product" },
      metrics: {
        sum_risk: { baseline: 68.594, variant: 0.0, delta: -68.594, pct_change: -100.0 },
        or_probability: {
          baseline: 0.26161199999999996,
          variant: 0.1234567890123,
          delta: -0.13815421098769995,
          pct_change: null,
        },
      },
      modifications: [],
    };
    const html = renderComparisonTable(report);
    expect(html).toContain("<th>Initial</th><th>Modified</th>");
    expect(html).toContain(">68.594<");
    expect(html).toContain(">-68.594<");
    expect(html).toContain(">0.26161199999999996<");
    expect(html).toContain(">0.1234567890123<");
    expect(html).toContain(">-0.13815421098769995<");
  });

  it("escapes markup in labels and ids", () => {
    const doc = sampleDoc();
    doc.lower["web"]![0]!.cve_id = "<script>alert(1)</script>";
    const html = renderVulnDrawer(doc, "web");
    expect(html).not.toContain("<script>alert(1)</script>");
    expect(html).toContain("&lt;script&gt;");
  });
});

// ---------------------------------------------------------------------------
// chart
// ---------------------------------------------------------------------------

describe("chart", () => {
  it("parses CRLF trajectory CSV into numeric rows", () => {
    const csv =
      "step,sum_risk,max_risk,or_prob,max_prob\r\n" +
      "0,68.594,68.594,0.26161199999999996,0.261612\r\n" +
      "1,0.0,0.0,0.0,0.0\r\n";
    const table = parseCsv(csv);
    expect(table.columns).toEqual(["step", "sum_risk", "max_risk", "or_prob", "max_prob"]);
    expect(table.rows).toHaveLength(2);
    expect(table.rows[0]!["sum_risk"]).toBe(68.594);
    expect(table.rows[0]!["or_prob"]).toBe(0.26161199999999996);
    expect(table.rows[1]!["max_prob"]).toBe(0);
  });

  it("handles LF-only CSV and empty text", () => {
    expect(parseCsv("").rows).toEqual([]);
    const table = parseCsv("step,sum_risk\n0,1.5\n1,0.5\n");
    expect(table.rows.map((r) => r["sum_risk"])).toEqual([1.5, 0.5]);
  });

  it("emits one polyline point per row and survives all-zero series", () => {
    expect(polylinePoints([1, 2, 3], 3).split(" ")).toHaveLength(3);
    expect(polylinePoints([0, 0], 0).split(" ")).toHaveLength(2);
    const table = parseCsv("step,sum_risk\n0,0.0\n1,0.0\n");
    const svg = renderTrajectoryChart(table, ["sum_risk"], "Risk");
    expect(svg).toContain("series-sum_risk");
    expect(svg).not.toContain("NaN");
  });

  it("draws one series per requested column", () => {
    const table = parseCsv("step,sum_risk,or_prob\n0,10,0.5\n1,5,0.25\n2,0,0\n");
    const svg = renderTrajectoryChart(table, ["sum_risk", "or_prob"], "Both");
    expect(svg.match(/<polyline/g)).toHaveLength(2);
    expect(svg).toContain("series-or_prob");
  });
});

// ---------------------------------------------------------------------------
// tree
// ---------------------------------------------------------------------------

describe("tree", () => {
  const models: ModelSummary[] = [
    { model_id: "root", label: "base", parent_id: null, created_at: "2024-01-01T00:00:00Z" },
    { model_id: "kid1", label: "first", parent_id: "root", created_at: "2024-01-02T00:00:00Z" },
    { model_id: "kid2", label: "second", parent_id: "root", created_at: "2024-01-03T00:00:00Z" },
    { model_id: "grand", label: "third", parent_id: "kid1", created_at: "2024-01-04T00:00:00Z" },
  ];

  it("builds a forest following parent_id chains", () => {
    const forest = buildForest(models);
    expect(forest).toHaveLength(1);
    expect(forest[0]!.model.model_id).toBe("root");
    expect(forest[0]!.children.map((c) => c.model.model_id)).toEqual(["kid1", "kid2"]);
    expect(forest[0]!.children[0]!.children[0]!.model.model_id).toBe("grand");
    expect(treeDepth(forest)).toBe(3);
  });

  it("treats models with missing parents as roots", () => {
    const forest = buildForest([
      { model_id: "orphan", label: "", parent_id: "gone", created_at: "2024-01-01T00:00:00Z" },
    ]);
    expect(forest).toHaveLength(1);
    expect(treeDepth(forest)).toBe(1);
  });

  it("marks the selected model in the rendered list", () => {
    const html = renderTree(buildForest(models), "kid2");
    expect(html).toContain(`data-select="kid2"`);
    expect(html).toContain(`class="selected" data-select="kid2"`);
    expect(html).not.toContain(`class="selected" data-select="root"`);
  });
});

// ---------------------------------------------------------------------------
// topology
// ---------------------------------------------------------------------------

describe("topology", () => {
  it("layers hosts by BFS distance from the attacker", () => {
    const layers = layerHosts(sampleDoc());
    expect(layers).toEqual([["ATTACKER"], ["web"], ["app"], ["db"], ["island"]]);
  });

  it("renders nodes, edges and target highlighting", () => {
    const svg = renderTopology(sampleDoc(), "web");
    expect(svg).toContain(`data-host="web"`);
    expect(svg).toContain(`data-src="ATTACKER" data-dst="web"`);
    expect(svg.match(/<line class="edge"/g)).toHaveLength(3);
    expect(svg).toContain("target");
  });

  it("renders the vulnerability drawer with the appendix column layout", () => {
    const html = renderVulnDrawer(sampleDoc(), "web");
    expect(html).toContain(
      "<th>Vulnerability</th><th>CVE-ID</th><th>Probability</th><th>Risk</th>",
    );
    expect(html).toContain(">0.5<");
    expect(html).toContain(">1.45<");
    expect(html).toContain(">-<");
  });

  it("notes an empty drawer instead of rendering an empty table body", () => {
    const html = renderVulnDrawer(sampleDoc(), "island");
    expect(html).toContain("no vulnerabilities recorded");
  });
});

// ---------------------------------------------------------------------------
// what-if panel
// ---------------------------------------------------------------------------

describe("what-if panel", () => {
  it("renders a checkbox per vulnerability and per edge", () => {
    const s = newState();
    const html = renderWhatIfPanel(sampleDoc(), s);
    expect(html.match(/data-kind="vuln"/g)).toHaveLength(4);
    expect(html.match(/data-kind="edge"/g)).toHaveLength(3);
    expect(html).toContain("0 pending modification(s)");
  });

  it("checks boxes that have pending modifications", () => {
    const s = newState();
    toggleVulnerability(s, "db", "v1db");
    toggleEdge(s, "app", "db");
    const html = renderWhatIfPanel(sampleDoc(), s);
    expect(html).toContain(`data-vuln="v1db" checked`);
    expect(html).toContain(`data-dst="db" checked`);
    expect(html).toContain("2 pending modification(s)");
  });
});
