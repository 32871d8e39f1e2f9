import type { ModelSummary } from "./api.js";
import { escapeHtml } from "./tables.js";

// ---------------------------------------------------------------------------
// Model lineage tree
// ---------------------------------------------------------------------------

export interface TreeNode {
  model: ModelSummary;
  children: TreeNode[];
}

/** Arrange models into a forest following parent_id chains.
 *
 * A model whose parent is absent from the listing is treated as a root so a
 * partially garbage-collected store still renders.
 */
export function buildForest(models: ModelSummary[]): TreeNode[] {
  const nodes = new Map<string, TreeNode>();
  for (const model of models) {
    nodes.set(model.model_id, { model, children: [] });
  }
  const roots: TreeNode[] = [];
  for (const node of nodes.values()) {
    const parent = node.model.parent_id ? nodes.get(node.model.parent_id) : undefined;
    if (parent) {
      parent.children.push(node);
    } else {
      roots.push(node);
    }
  }
  const byAge = (a: TreeNode, b: TreeNode) =>
    a.model.created_at.localeCompare(b.model.created_at) ||
    a.model.model_id.localeCompare(b.model.model_id);
  const sortRec = (list: TreeNode[]) => {
    list.sort(byAge);
    list.forEach((n) => sortRec(n.children));
  };
  sortRec(roots);
  return roots;
}

export function treeDepth(roots: TreeNode[]): number {
  let depth = 0;
  const walk = (node: TreeNode, level: number) => {
    depth = Math.max(depth, level);
    node.children.forEach((c) => walk(c, level + 1));
  };
  roots.forEach((r) => walk(r, 1));
  return depth;
}

export function renderTree(roots: TreeNode[], selectedId: string | null): string {
  const renderNode = (node: TreeNode): string => {
    const { model_id, label } = node.model;
    const cls = model_id === selectedId ? ` class="selected"` : "";
    const text = label ? `${label} (${model_id})` : model_id;
    const children = node.children.length
      ? `<ul>${node.children.map(renderNode).join("")}</ul>`
      : "";
    return (
      `<li data-model-id="${escapeHtml(model_id)}">` +
      `<button type="button"${cls} data-select="${escapeHtml(model_id)}">${escapeHtml(text)}</button>` +
      children +
      `</li>`
    );
  };
  return `<ul class="lineage">${roots.map(renderNode).join("")}</ul>`;
}
