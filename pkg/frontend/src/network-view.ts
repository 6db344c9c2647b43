/**
 * Network graph rendering: types group their property nodes,
 * executables sit beside their owner with conditioning edges (reads,
 * calls, parameters). Output is a render model plus an SVG string, so
 * the layout and flags are testable without a DOM.
 */

import type { EdgeInfo, NetworkPayload, NodeSummary } from "./api.js";

export interface LaidOutNode {
  id: string;
  kind: string;
  label: string;
  group: string; // owning type id
  x: number;
  y: number;
  fitted: boolean;
  lowConfidence: boolean;
  highlighted: boolean;
  badge: string | null;
}

export interface LaidOutEdge {
  src: string;
  dst: string;
  kind: string;
  latent: boolean;
  highlighted: boolean;
}

export interface NetworkRenderModel {
  groups: { id: string; members: string[] }[];
  nodes: LaidOutNode[];
  edges: LaidOutEdge[];
  empty: boolean;
}

const GROUP_WIDTH = 240;
const ROW_HEIGHT = 46;

function ownerOf(node: NodeSummary): string {
  if (node.kind === "type") return node.id;
  const dot = node.id.lastIndexOf(".");
  return dot === -1 ? node.id : node.id.slice(0, dot);
}

export function layoutNetwork(
  payload: NetworkPayload,
  options: { highlight?: Map<string, number>; selected?: string | null } = {},
): NetworkRenderModel {
  const highlight = options.highlight ?? new Map<string, number>();
  const byOwner = new Map<string, NodeSummary[]>();
  for (const node of payload.nodes) {
    const owner = ownerOf(node);
    const bucket = byOwner.get(owner) ?? [];
    bucket.push(node);
    byOwner.set(owner, bucket);
  }
  const groups = [...byOwner.keys()].sort();
  const nodes: LaidOutNode[] = [];
  groups.forEach((group, column) => {
    const members = (byOwner.get(group) ?? []).slice().sort((a, b) => {
      const rank = (n: NodeSummary) =>
        n.kind === "type" ? 0 : n.kind === "property" ? 1 : 2;
      return rank(a) - rank(b) || a.id.localeCompare(b.id);
    });
    members.forEach((node, row) => {
      let badge: string | null = null;
      if (!node.fitted) badge = "unfitted";
      else if (node.low_confidence) badge = "low-confidence";
      nodes.push({
        id: node.id,
        kind: node.kind,
        label: node.kind === "type" ? node.id : node.id.slice(group.length + 1),
        group,
        x: 40 + column * GROUP_WIDTH,
        y: 48 + row * ROW_HEIGHT,
        fitted: node.fitted,
        lowConfidence: node.low_confidence,
        highlighted: highlight.has(node.id) || options.selected === node.id,
        badge,
      });
    });
  });
  const edges: LaidOutEdge[] = payload.edges.map((e: EdgeInfo) => ({
    src: e.src,
    dst: e.dst,
    kind: e.kind,
    latent: e.latent,
    highlighted: highlight.has(e.src) && highlight.has(e.dst),
  }));
  return {
    groups: groups.map((id) => ({
      id,
      members: (byOwner.get(id) ?? []).map((n) => n.id),
    })),
    nodes,
    edges,
    empty: payload.nodes.length === 0,
  };
}

const KIND_COLOR: Record<string, string> = {
  type: "#4e79a7",
  property: "#59a14f",
  executable: "#e15759",
};

export function renderNetworkSvg(model: NetworkRenderModel): string {
  if (model.empty) {
    return (
      '<svg xmlns="http://www.w3.org/2000/svg" width="480" height="120">' +
      '<text x="240" y="60" text-anchor="middle" class="empty-state">' +
      "No nodes in the modeling universe</text></svg>"
    );
  }
  const width = 80 + model.groups.length * GROUP_WIDTH;
  const height =
    100 +
    ROW_HEIGHT *
      Math.max(...model.groups.map((g) => g.members.length), 1);
  const pos = new Map(model.nodes.map((n) => [n.id, n]));
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
  ];
  for (const edge of model.edges) {
    const a = pos.get(edge.src);
    const b = pos.get(edge.dst);
    if (!a || !b) continue;
    const cls = `edge edge-${edge.kind}${edge.latent ? " edge-latent" : ""}${edge.highlighted ? " edge-highlight" : ""}`;
    const dash = edge.latent ? ' stroke-dasharray="4 3"' : "";
    const stroke = edge.highlighted ? "#d4a017" : "#b0b0b0";
    const sw = edge.highlighted ? 2.5 : 1;
    parts.push(
      `<line class="${cls}" x1="${a.x + 70}" y1="${a.y}" x2="${b.x + 70}" y2="${b.y}" stroke="${stroke}" stroke-width="${sw}"${dash}/>`,
    );
  }
  for (const node of model.nodes) {
    const color = KIND_COLOR[node.kind] ?? "#777";
    const ring = node.highlighted ? ' stroke="#d4a017" stroke-width="3"' : "";
    const opacity = node.fitted ? 1 : 0.45;
    parts.push(
      `<g class="node node-${node.kind}" data-node="${node.id}">` +
        `<circle cx="${node.x + 70}" cy="${node.y}" r="13" fill="${color}" fill-opacity="${opacity}"${ring}/>` +
        `<text x="${node.x + 90}" y="${node.y + 4}" font-size="12">${node.label}</text>` +
        (node.badge
          ? `<text x="${node.x + 90}" y="${node.y + 18}" font-size="9" fill="#c0392b" class="badge">${node.badge}</text>`
          : "") +
        "</g>",
    );
  }
  parts.push("</svg>");
  return parts.join("");
}
