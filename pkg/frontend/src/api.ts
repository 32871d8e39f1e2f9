// ---------------------------------------------------------------------------
// Types - mirror the service's wire documents
// ---------------------------------------------------------------------------

export interface ModelSummary {
  model_id: string;
  label: string;
  parent_id: string | null;
  created_at: string;
}

export interface EdgeDoc {
  src: string;
  dst: string;
  ports: [number, number][];
  protocol: string;
}

export interface VulnerabilityDoc {
  vuln_id: string;
  cve_id: string;
  probability: number | null;
  risk: number | null;
  impact?: number | null;
  cvss?: number | null;
  attack_cost?: number | null;
}

export interface HarmDocument {
  model_id: string;
  label: string;
  parent_id: string | null;
  created_at: string;
  targets: string[];
  upper: { nodes: string[]; edges: EdgeDoc[] };
  lower: Record<string, VulnerabilityDoc[]>;
}

export interface AssessmentReport {
  model_id: string;
  config: { host_prob_gate: string; host_risk_gate: string; path_prob: string };
  paths_count: number;
  zero_paths_flag: boolean;
  unknown_score_vulns: number;
  number_of_hosts: number;
  sum_risk: number;
  max_risk: number;
  or_probability: number;
  max_probability: number;
  mean_path_length: number;
  mode_path_length: number;
  stddev_path_length: number;
  shortest_path_length: number;
  density: number;
}

export interface MetricDelta {
  baseline: number;
  variant: number;
  delta: number;
  pct_change: number | null;
}

export interface ComparisonReport {
  baseline_id: string;
  variant_id: string;
  baseline_label: string;
  variant_label: string;
  baseline_zero_paths: boolean;
  variant_zero_paths: boolean;
  config: { host_prob_gate: string; host_risk_gate: string; path_prob: string };
  metrics: Record<string, MetricDelta>;
  modifications: Modification[];
}

export interface RankedVulnerability {
  rank: number;
  vuln_id: string;
  host_id: string;
  marginal_sum_risk_reduction: number;
  marginal_or_prob_reduction: number;
}

export interface PsvRanking {
  model_id: string;
  objective: string;
  ranked: RankedVulnerability[];
}

export interface TrajectoryRow {
  step: number;
  sum_risk: number;
  max_risk: number;
  or_prob: number;
  max_prob: number;
}

export interface TrajectoryResult {
  model_id: string;
  objective: string;
  config: { host_prob_gate: string; host_risk_gate: string; path_prob: string };
  ranking: RankedVulnerability[];
  rows: TrajectoryRow[];
  csv: string;
}

export interface PathsResult {
  model_id: string;
  total: number;
  paths: string[][];
}

export type Modification =
  | { op: "remove_vulnerability"; host_id: string; vuln_id: string }
  | { op: "add_vulnerability"; host_id: string; vulnerability: VulnerabilityDoc }
  | { op: "remove_edge"; src: string; dst: string }
  | { op: "add_edge"; src: string; dst: string; ports?: [number, number][]; protocol?: string }
  | { op: "remove_host"; host_id: string }
  | { op: "add_host"; host_id: string; vulns?: VulnerabilityDoc[]; edges?: EdgeDoc[] }
  | { op: "set_targets"; targets: string[] };

export interface CommitResult {
  variant_id: string;
  report: ComparisonReport;
}

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

export class ApiError extends Error {
  readonly status: number;
  readonly kind: string;

  constructor(status: number, kind: string, message: string) {
    super(message);
    this.status = status;
    this.kind = kind;
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, init);
  const text = await resp.text();
  if (!resp.ok) {
    let kind = "HttpError";
    let message = text || resp.statusText;
    try {
      const doc = JSON.parse(text);
      if (doc?.error) {
        kind = doc.error.type ?? kind;
        message = doc.error.message ?? message;
      }
    } catch {
      // non-JSON error body: keep raw text
    }
    throw new ApiError(resp.status, kind, message);
  }
  return JSON.parse(text) as T;
}

export class Api {
  readonly base: string;

  constructor(base = "") {
    this.base = base.replace(/\/+$/, "");
  }

  listModels(): Promise<ModelSummary[]> {
    return request(`${this.base}/models`);
  }

  getModel(id: string): Promise<HarmDocument> {
    return request(`${this.base}/models/${encodeURIComponent(id)}`);
  }

  getMetrics(id: string, gates?: string): Promise<AssessmentReport> {
    const q = gates ? `?gates=${encodeURIComponent(gates)}` : "";
    return request(`${this.base}/models/${encodeURIComponent(id)}/metrics${q}`);
  }

  getPaths(id: string, limit = 1000): Promise<PathsResult> {
    return request(`${this.base}/models/${encodeURIComponent(id)}/paths?limit=${limit}`);
  }

  getPsv(id: string, k: number, objective = "sum_risk"): Promise<PsvRanking> {
    return request(
      `${this.base}/models/${encodeURIComponent(id)}/psv?k=${k}&objective=${objective}`,
    );
  }

  getTrajectory(id: string, k: number): Promise<TrajectoryResult> {
    return request(`${this.base}/models/${encodeURIComponent(id)}/trajectory?k=${k}`);
  }

  previewWhatIf(id: string, mods: Modification[]): Promise<ComparisonReport> {
    return request(`${this.base}/models/${encodeURIComponent(id)}/whatif/preview`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(mods),
    });
  }

  commitWhatIf(
    id: string,
    mods: Modification[],
    label = "",
    force = false,
  ): Promise<CommitResult> {
    return request(`${this.base}/models/${encodeURIComponent(id)}/whatif/commit`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ mods, label, force }),
    });
  }
}
