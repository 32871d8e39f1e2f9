import type { AssessmentReport, ComparisonReport } from "./api.js";

// ---------------------------------------------------------------------------
// HTML table renderers
//
// Every numeric cell is String(value) of the number the API returned; the
// client never rounds, reformats, or recomputes metrics.
// ---------------------------------------------------------------------------

// Row label -> report key, in presentation order.
export const METRIC_ROWS: readonly [string, string][] = [
  ["Number of hosts", "number_of_hosts"],
  ["Sum Risk", "sum_risk"],
  ["Max Risk", "max_risk"],
  ["Or Probability of attack success", "or_probability"],
  ["Max Probability of attack success", "max_probability"],
  ["Mean of attack path lengths", "mean_path_length"],
  ["Mode of attack path lenghts", "mode_path_length"],
  ["Standard Deviation of attack path lengths", "stddev_path_length"],
  ["Shortest attack path length", "shortest_path_length"],
  ["Density", "density"],
];

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function cellValue(value: unknown): string {
  if (value === null || value === undefined) {
    return "-";
  }
  return String(value);
}

export function renderMetricsTable(report: AssessmentReport): string {
  const rows = METRIC_ROWS.map(([label, key]) => {
    const value = (report as unknown as Record<string, unknown>)[key];
    return `<tr><td>${escapeHtml(label)}</td><td class="num">${escapeHtml(cellValue(value))}</td></tr>`;
  });
  const note = report.zero_paths_flag
    ? `<p class="note">No attack paths; path metrics reported as 0.</p>`
    : "";
  return (
    `<table class="metrics"><thead><tr><th></th><th>Value</th></tr></thead>` +
    `<tbody>${rows.join("")}</tbody></table>${note}`
  );
}

export function renderComparisonTable(report: ComparisonReport): string {
  const rows = METRIC_ROWS.filter(([, key]) => key in report.metrics).map(([label, key]) => {
    const m = report.metrics[key]!;
    return (
      `<tr><td>${escapeHtml(label)}</td>` +
      `<td class="num">${escapeHtml(cellValue(m.baseline))}</td>` +
      `<td class="num">${escapeHtml(cellValue(m.variant))}</td>` +
      `<td class="num">${escapeHtml(cellValue(m.delta))}</td></tr>`
    );
  });
  return (
    `<table class="comparison">` +
    `<thead><tr><th></th><th>Initial</th><th>Modified</th><th>Delta</th></tr></thead>` +
    `<tbody>${rows.join("")}</tbody></table>`
  );
}
