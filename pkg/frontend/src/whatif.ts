import type { HarmDocument } from "./api.js";
import { escapeHtml } from "./tables.js";
import type { AppState } from "./state.js";
import { isEdgePending, isVulnerabilityPending } from "./state.js";

// ---------------------------------------------------------------------------
// What-if panel: checkboxes per vulnerability and per edge
// ---------------------------------------------------------------------------

export function renderWhatIfPanel(doc: HarmDocument, state: AppState): string {
  const hosts = Object.keys(doc.lower).sort();
  const vulnGroups = hosts.map((host) => {
    const boxes = (doc.lower[host] ?? []).map((v) => {
      const checked = isVulnerabilityPending(state, host, v.vuln_id) ? " checked" : "";
      return (
        `<label><input type="checkbox" data-kind="vuln" data-host="${escapeHtml(host)}" ` +
        `data-vuln="${escapeHtml(v.vuln_id)}"${checked}> remove ${escapeHtml(v.vuln_id)} ` +
        `(${escapeHtml(v.cve_id)})</label>`
      );
    });
    if (boxes.length === 0) {
      return "";
    }
    return `<fieldset><legend>${escapeHtml(host)}</legend>${boxes.join("")}</fieldset>`;
  });

  const edgeBoxes = doc.upper.edges.map((edge) => {
    const checked = isEdgePending(state, edge.src, edge.dst) ? " checked" : "";
    return (
      `<label><input type="checkbox" data-kind="edge" data-src="${escapeHtml(edge.src)}" ` +
      `data-dst="${escapeHtml(edge.dst)}"${checked}> remove ${escapeHtml(edge.src)} &rarr; ` +
      `${escapeHtml(edge.dst)}</label>`
    );
  });

  return (
    `<h3>What-if</h3>` +
    `<div class="whatif-vulns"><h4>Patch vulnerabilities</h4>${vulnGroups.join("")}</div>` +
    `<div class="whatif-edges"><h4>Drop connections</h4>${edgeBoxes.join("")}</div>` +
    `<p class="pending-count">${state.pending.length} pending modification(s)</p>` +
    `<div class="whatif-actions">` +
    `<button type="button" id="preview-btn">Preview</button> ` +
    `<input type="text" id="commit-label" placeholder="label"> ` +
    `<button type="button" id="commit-btn">Commit</button>` +
    `</div>` +
    `<div id="whatif-result"></div>`
  );
}
