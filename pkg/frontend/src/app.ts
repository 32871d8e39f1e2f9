import { Api, ApiError } from "./api.js";
import type { HarmDocument } from "./api.js";
import { newState, selectBase, clearPending, toggleEdge, toggleVulnerability } from "./state.js";
import { renderComparisonTable, renderMetricsTable } from "./tables.js";
import { parseCsv, renderTrajectoryChart } from "./chart.js";
import { buildForest, renderTree } from "./tree.js";
import { renderTopology, renderVulnDrawer } from "./topology.js";
import { renderWhatIfPanel } from "./whatif.js";

// ---------------------------------------------------------------------------
// Browser wiring
// ---------------------------------------------------------------------------

const api = new Api("");
const state = newState();
let currentDoc: HarmDocument | null = null;
let selectedHost: string | null = null;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node;
}

function showError(err: unknown): void {
  const box = el("error");
  if (err instanceof ApiError) {
    box.textContent = `${err.kind}: ${err.message}`;
  } else {
    box.textContent = String(err);
  }
  box.hidden = false;
}

function clearError(): void {
  const box = el("error");
  box.textContent = "";
  box.hidden = true;
}

async function refreshModels(): Promise<void> {
  const models = await api.listModels();
  el("models").innerHTML = renderTree(buildForest(models), state.baseId);
}

async function selectModel(modelId: string): Promise<void> {
  clearError();
  selectBase(state, modelId);
  selectedHost = null;
  currentDoc = await api.getModel(modelId);
  const report = await api.getMetrics(modelId);
  el("metrics").innerHTML = renderMetricsTable(report);
  el("topology").innerHTML = renderTopology(currentDoc, selectedHost);
  el("drawer").innerHTML = "";
  el("whatif").innerHTML = renderWhatIfPanel(currentDoc, state);
  el("psv-result").innerHTML = "";
  await refreshModels();
}

function repaintWhatIf(): void {
  if (currentDoc) {
    el("whatif").innerHTML = renderWhatIfPanel(currentDoc, state);
  }
}

async function preview(): Promise<void> {
  if (!state.baseId) {
    return;
  }
  clearError();
  try {
    const report = await api.previewWhatIf(state.baseId, state.pending);
    const result = el("whatif-result");
    result.innerHTML =
      `<h4>Preview: ${report.baseline_label || report.baseline_id} vs pending</h4>` +
      renderComparisonTable(report);
  } catch (err) {
    showError(err);
  }
}

async function commit(): Promise<void> {
  if (!state.baseId) {
    return;
  }
  clearError();
  const label = (el("commit-label") as HTMLInputElement).value;
  try {
    const result = await api.commitWhatIf(state.baseId, state.pending, label);
    clearPending(state);
    await selectModel(result.variant_id);
    el("whatif-result").innerHTML =
      `<h4>Committed as ${result.variant_id}</h4>` + renderComparisonTable(result.report);
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      if (window.confirm("Model changed on the server. Reload the model list?")) {
        clearPending(state);
        await refreshModels();
      }
      return;
    }
    showError(err);
  }
}

async function runPsv(): Promise<void> {
  if (!state.baseId) {
    return;
  }
  clearError();
  const k = Number((el("psv-k") as HTMLInputElement).value) || 3;
  try {
    const [ranking, trajectory] = await Promise.all([
      api.getPsv(state.baseId, k),
      api.getTrajectory(state.baseId, k),
    ]);
    const rows = ranking.ranked
      .map(
        (r) =>
          `<tr><td>${r.rank}</td><td>${r.vuln_id}</td><td>${r.host_id}</td>` +
          `<td class="num">${String(r.marginal_sum_risk_reduction)}</td>` +
          `<td class="num">${String(r.marginal_or_prob_reduction)}</td></tr>`,
      )
      .join("");
    const table = parseCsv(trajectory.csv);
    el("psv-result").innerHTML =
      `<table class="psv"><thead><tr><th>Rank</th><th>Vulnerability</th><th>Host</th>` +
      `<th>Risk reduction</th><th>Prob reduction</th></tr></thead><tbody>${rows}</tbody></table>` +
      renderTrajectoryChart(table, ["sum_risk", "max_risk"], "Risk vs patches applied") +
      renderTrajectoryChart(table, ["or_prob", "max_prob"], "Probability vs patches applied");
  } catch (err) {
    showError(err);
  }
}

function bind(): void {
  el("models").addEventListener("click", (ev) => {
    const target = (ev.target as HTMLElement).closest("[data-select]");
    if (target) {
      void selectModel(target.getAttribute("data-select")!).catch(showError);
    }
  });
  el("topology").addEventListener("click", (ev) => {
    const host = (ev.target as HTMLElement).closest("[data-host]");
    if (host && currentDoc) {
      selectedHost = host.getAttribute("data-host");
      el("topology").innerHTML = renderTopology(currentDoc, selectedHost);
      el("drawer").innerHTML = selectedHost ? renderVulnDrawer(currentDoc, selectedHost) : "";
    }
  });
  el("whatif").addEventListener("change", (ev) => {
    const input = ev.target as HTMLInputElement;
    if (input.dataset.kind === "vuln") {
      toggleVulnerability(state, input.dataset.host!, input.dataset.vuln!);
    } else if (input.dataset.kind === "edge") {
      toggleEdge(state, input.dataset.src!, input.dataset.dst!);
    } else {
      return;
    }
    const count = document.querySelector(".pending-count");
    if (count) {
      count.textContent = `${state.pending.length} pending modification(s)`;
    }
  });
  el("whatif").addEventListener("click", (ev) => {
    const id = (ev.target as HTMLElement).id;
    if (id === "preview-btn") {
      void preview();
    } else if (id === "commit-btn") {
      void commit();
    }
  });
  el("psv-run").addEventListener("click", () => void runPsv());
}

async function main(): Promise<void> {
  bind();
  try {
    await refreshModels();
  } catch (err) {
    showError(err);
  }
}

void main();

export { repaintWhatIf };
