import type { Modification } from "./api.js";

// ---------------------------------------------------------------------------
// Client state - only the selected base model and the pending modifications
// ---------------------------------------------------------------------------

export interface AppState {
  baseId: string | null;
  pending: Modification[];
}

export function newState(): AppState {
  return { baseId: null, pending: [] };
}

export function selectBase(state: AppState, modelId: string): void {
  if (state.baseId !== modelId) {
    state.baseId = modelId;
    state.pending = [];
  }
}

export function clearPending(state: AppState): void {
  state.pending = [];
}

/** Toggle a remove_vulnerability step for the given instance. */
export function toggleVulnerability(state: AppState, hostId: string, vulnId: string): void {
  const idx = state.pending.findIndex(
    (m) => m.op === "remove_vulnerability" && m.host_id === hostId && m.vuln_id === vulnId,
  );
  if (idx >= 0) {
    state.pending.splice(idx, 1);
  } else {
    state.pending.push({ op: "remove_vulnerability", host_id: hostId, vuln_id: vulnId });
  }
}

/** Toggle a remove_edge step for the given edge. */
export function toggleEdge(state: AppState, src: string, dst: string): void {
  const idx = state.pending.findIndex(
    (m) => m.op === "remove_edge" && m.src === src && m.dst === dst,
  );
  if (idx >= 0) {
    state.pending.splice(idx, 1);
  } else {
    state.pending.push({ op: "remove_edge", src, dst });
  }
}

export function isVulnerabilityPending(state: AppState, hostId: string, vulnId: string): boolean {
  return state.pending.some(
    (m) => m.op === "remove_vulnerability" && m.host_id === hostId && m.vuln_id === vulnId,
  );
}

export function isEdgePending(state: AppState, src: string, dst: string): boolean {
  return state.pending.some((m) => m.op === "remove_edge" && m.src === src && m.dst === dst);
}
