import type { HarmDocument } from "./api.js";
import { cellValue, escapeHtml } from "./tables.js";

// ---------------------------------------------------------------------------
// Topology view: layered reachability graph plus per-host vulnerability drawer
// ---------------------------------------------------------------------------

export const ATTACKER = "ATTACKER";

/** Group nodes into BFS layers from the attacker; unreachable hosts last. */
export function layerHosts(doc: HarmDocument): string[][] {
  const adjacency = new Map<string, string[]>();
  for (const node of doc.upper.nodes) {
    adjacency.set(node, []);
  }
  for (const edge of doc.upper.edges) {
    adjacency.get(edge.src)?.push(edge.dst);
  }
  const layers: string[][] = [];
  const seen = new Set<string>();
  let frontier = adjacency.has(ATTACKER) ? [ATTACKER] : [];
  frontier.forEach((n) => seen.add(n));
  while (frontier.length > 0) {
    layers.push([...frontier].sort());
    const next = new Set<string>();
    for (const node of frontier) {
      for (const dst of adjacency.get(node) ?? []) {
        if (!seen.has(dst)) {
          seen.add(dst);
          next.add(dst);
        }
      }
    }
    frontier = [...next];
  }
  const unreached = doc.upper.nodes.filter((n) => !seen.has(n)).sort();
  if (unreached.length > 0) {
    layers.push(unreached);
  }
  return layers;
}

const COL_W = 150;
const ROW_H = 72;
const NODE_R = 26;
const MARGIN = 60;

function positions(layers: string[][]): Map<string, { x: number; y: number }> {
  const pos = new Map<string, { x: number; y: number }>();
  const tallest = Math.max(1, ...layers.map((l) => l.length));
  layers.forEach((layer, col) => {
    const offset = ((tallest - layer.length) * ROW_H) / 2;
    layer.forEach((node, row) => {
      pos.set(node, { x: MARGIN + col * COL_W, y: MARGIN + offset + row * ROW_H });
    });
  });
  return pos;
}

export function renderTopology(doc: HarmDocument, selectedHost: string | null = null): string {
  const layers = layerHosts(doc);
  const pos = positions(layers);
  const tallest = Math.max(1, ...layers.map((l) => l.length));
  const width = 2 * MARGIN + Math.max(0, layers.length - 1) * COL_W;
  const height = 2 * MARGIN + Math.max(0, tallest - 1) * ROW_H;

  const edges = doc.upper.edges.map((edge) => {
    const a = pos.get(edge.src);
    const b = pos.get(edge.dst);
    if (!a || !b) {
      return "";
    }
    return (
      `<line class="edge" data-src="${escapeHtml(edge.src)}" data-dst="${escapeHtml(edge.dst)}" ` +
      `x1="${a.x}" y1="${a.y}" x2="${b.x}" y2="${b.y}" stroke="#888" marker-end="url(#arrow)"/>`
    );
  });

  const nodes = doc.upper.nodes.map((node) => {
    const p = pos.get(node);
    if (!p) {
      return "";
    }
    const classes = ["node"];
    if (node === ATTACKER) {
      classes.push("attacker");
    }
    if (doc.targets.includes(node)) {
      classes.push("target");
    }
    if (node === selectedHost) {
      classes.push("selected");
    }
    const vulnCount = (doc.lower[node] ?? []).length;
    const fill = node === ATTACKER ? "#2c3e50" : doc.targets.includes(node) ? "#c0392b" : "#2980b9";
    return (
      `<g class="${classes.join(" ")}" data-host="${escapeHtml(node)}">` +
      `<circle cx="${p.x}" cy="${p.y}" r="${NODE_R}" fill="${fill}" ` +
      `stroke="${node === selectedHost ? "#f1c40f" : "#333"}" stroke-width="${node === selectedHost ? 4 : 1}"/>` +
      `<text x="${p.x}" y="${p.y + 4}" font-size="11" text-anchor="middle" fill="#fff">${escapeHtml(node)}</text>` +
      (node !== ATTACKER
        ? `<text x="${p.x}" y="${p.y + NODE_R + 14}" font-size="10" text-anchor="middle">${vulnCount} vulns</text>`
        : "") +
      `</g>`
    );
  });

  return (
    `<svg class="topology" viewBox="0 0 ${width} ${height}" width="${width}" height="${height}">` +
    `<defs><marker id="arrow" markerWidth="8" markerHeight="8" refX="${NODE_R + 7}" refY="3" orient="auto">` +
    `<path d="M0,0 L6,3 L0,6 z" fill="#888"/></marker></defs>` +
    edges.join("") +
    nodes.join("") +
    `</svg>`
  );
}

/** Per-host vulnerability table in the appendix layout. */
export function renderVulnDrawer(doc: HarmDocument, hostId: string): string {
  const vulns = doc.lower[hostId] ?? [];
  const rows = vulns.map(
    (v) =>
      `<tr data-vuln-id="${escapeHtml(v.vuln_id)}">` +
      `<td>${escapeHtml(v.vuln_id)}</td>` +
      `<td>${escapeHtml(v.cve_id)}</td>` +
      `<td class="num">${escapeHtml(cellValue(v.probability))}</td>` +
      `<td class="num">${escapeHtml(cellValue(v.risk))}</td></tr>`,
  );
  const body = rows.length
    ? rows.join("")
    : `<tr><td colspan="4" class="empty">no vulnerabilities recorded</td></tr>`;
  return (
    `<h3>Vulnerabilities in ${escapeHtml(hostId)}</h3>` +
    `<table class="vulns">` +
    `<thead><tr><th>Vulnerability</th><th>CVE-ID</th><th>Probability</th><th>Risk</th></tr></thead>` +
    `<tbody>${body}</tbody></table>`
  );
}
