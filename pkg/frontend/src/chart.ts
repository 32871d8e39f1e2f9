import { escapeHtml } from "./tables.js";

// ---------------------------------------------------------------------------
// Trajectory line charts
//
// Consumes the same CSV payload the CLI emits (step,sum_risk,max_risk,
// or_prob,max_prob). The chart only scales values for drawing; the labels it
// prints are String(value) of the numbers as parsed.
// ---------------------------------------------------------------------------

export interface CsvTable {
  columns: string[];
  rows: Record<string, number>[];
}

export function parseCsv(text: string): CsvTable {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    return { columns: [], rows: [] };
  }
  const columns = lines[0]!.split(",");
  const rows = lines.slice(1).map((line) => {
    const parts = line.split(",");
    const row: Record<string, number> = {};
    columns.forEach((col, i) => {
      row[col] = Number(parts[i]);
    });
    return row;
  });
  return { columns, rows };
}

const WIDTH = 440;
const HEIGHT = 240;
const PAD = 36;

const SERIES_COLORS: Record<string, string> = {
  sum_risk: "#c0392b",
  max_risk: "#e67e22",
  or_prob: "#2980b9",
  max_prob: "#27ae60",
};

export function polylinePoints(values: number[], maxValue: number): string {
  const span = Math.max(values.length - 1, 1);
  const scale = maxValue > 0 ? maxValue : 1;
  return values
    .map((v, i) => {
      const x = PAD + (i / span) * (WIDTH - 2 * PAD);
      const y = HEIGHT - PAD - (v / scale) * (HEIGHT - 2 * PAD);
      return `${x.toFixed(2)},${y.toFixed(2)}`;
    })
    .join(" ");
}

/** One chart per metric family: risk series and probability series separately. */
export function renderTrajectoryChart(table: CsvTable, series: string[], title: string): string {
  const values = series.map((name) => table.rows.map((row) => row[name] ?? 0));
  const maxValue = Math.max(0, ...values.flat());
  const lines = series.map((name, idx) => {
    const color = SERIES_COLORS[name] ?? "#555";
    return (
      `<polyline class="series-${escapeHtml(name)}" fill="none" stroke="${color}" ` +
      `stroke-width="2" points="${polylinePoints(values[idx]!, maxValue)}"/>`
    );
  });
  const legend = series.map((name, idx) => {
    const color = SERIES_COLORS[name] ?? "#555";
    const x = PAD + idx * 110;
    return (
      `<rect x="${x}" y="6" width="10" height="10" fill="${color}"/>` +
      `<text x="${x + 14}" y="15" font-size="11">${escapeHtml(name)}</text>`
    );
  });
  const steps = table.rows.map((row) => row["step"] ?? 0);
  const xLabels = steps.map((s, i) => {
    const x = PAD + (i / Math.max(steps.length - 1, 1)) * (WIDTH - 2 * PAD);
    return `<text x="${x.toFixed(2)}" y="${HEIGHT - PAD + 16}" font-size="10" text-anchor="middle">${escapeHtml(String(s))}</text>`;
  });
  return (
    `<svg class="trajectory" viewBox="0 0 ${WIDTH} ${HEIGHT}" role="img" aria-label="${escapeHtml(title)}">` +
    `<text x="${WIDTH / 2}" y="16" font-size="12" text-anchor="middle">${escapeHtml(title)}</text>` +
    `<line x1="${PAD}" y1="${HEIGHT - PAD}" x2="${WIDTH - PAD}" y2="${HEIGHT - PAD}" stroke="#999"/>` +
    `<line x1="${PAD}" y1="${PAD}" x2="${PAD}" y2="${HEIGHT - PAD}" stroke="#999"/>` +
    `<text x="${PAD - 6}" y="${PAD}" font-size="10" text-anchor="end">${escapeHtml(String(maxValue))}</text>` +
    `<text x="${PAD - 6}" y="${HEIGHT - PAD}" font-size="10" text-anchor="end">0</text>` +
    xLabels.join("") +
    lines.join("") +
    legend.join("") +
    `</svg>`
  );
}
