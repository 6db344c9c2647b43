/**
 * Page wiring: network view on the left, distribution panel and ripple
 * panel on the right. One in-flight query per panel; stale responses
 * are discarded by a request counter. Every interaction folds into the
 * ViewState and back out to the URL.
 */

import { ApiError, Client, type Constraint, type NodePayload } from "./api.js";
import {
  conditioningError,
  renderConditioned,
  renderNodeCurve,
  sliderSpecs,
  type DistributionRenderModel,
} from "./distribution-panel.js";
import { layoutNetwork, renderNetworkSvg } from "./network-view.js";
import { renderRipple } from "./ripple-view.js";
import {
  DEFAULT_STATE,
  pruneConstraints,
  stateFromQuery,
  stateToQuery,
  type ViewState,
} from "./state.js";

const client = new Client("");

let state: ViewState = { ...DEFAULT_STATE };
let currentNode: NodePayload | null = null;
let currentPanel: DistributionRenderModel | null = null;
let rippleHighlight = new Map<string, number>();
let panelRequest = 0;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function pushState(): void {
  const query = stateToQuery(state);
  history.replaceState(null, "", query ? `?${query}` : location.pathname);
}

async function refreshNetwork(): Promise<void> {
  try {
    const payload = await client.network();
    const model = layoutNetwork(payload, {
      highlight: rippleHighlight,
      selected: state.node,
    });
    el("network").innerHTML = renderNetworkSvg(model);
    el("network-status").textContent = model.empty
      ? "bundle has an empty modeling universe"
      : `bundle ${payload.meta.bundle.slice(0, 12)}`;
    for (const g of el("network").querySelectorAll("[data-node]")) {
      g.addEventListener("click", () => {
        void selectNode((g as SVGElement).dataset.node ?? null);
      });
    }
  } catch (err) {
    el("network-status").textContent = "connection failed; retrying in 3s";
    setTimeout(() => void refreshNetwork(), 3000);
  }
}

async function selectNode(nodeId: string | null): Promise<void> {
  state = { ...state, node: nodeId, constraints: {} };
  pushState();
  if (nodeId === null) return;
  currentNode = await client.node(nodeId);
  state = pruneConstraints(state, currentNode.variables.map((v) => v.name));
  renderVariableList();
  const first = currentNode.variables[0];
  if (first) {
    showVariable(first.name);
  } else {
    el("panel").innerHTML = "<p>This node has no random variables.</p>";
  }
}

function renderVariableList(): void {
  if (!currentNode) return;
  const list = currentNode.variables
    .map(
      (v) =>
        `<button class="var-btn" data-var="${v.name}">${v.name}: ${v.kind}</button>`,
    )
    .join(" ");
  const flag = currentNode.low_confidence
    ? ' <span class="badge">low-confidence</span>'
    : "";
  el("node-title").innerHTML = `${currentNode.id}${flag}`;
  el("variables").innerHTML = list;
  for (const btn of el("variables").querySelectorAll("[data-var]")) {
    btn.addEventListener("click", () =>
      showVariable((btn as HTMLElement).dataset.var ?? ""),
    );
  }
}

function showVariable(variable: string): void {
  if (!currentNode) return;
  currentPanel = renderNodeCurve(currentNode, variable);
  drawPanel();
  if (Object.keys(state.constraints).length > 0) {
    void runConditioned(variable);
  }
}

function drawPanel(): void {
  if (!currentPanel) return;
  const p = currentPanel;
  const stats = [
    p.stats.mean !== null ? `mean ${p.stats.mean}` : "",
    p.stats.std !== null ? `std ${p.stats.std}` : "",
    p.stats.n !== null ? `n ${p.stats.n}` : "",
  ]
    .filter(Boolean)
    .join(" · ");
  const table = p.categorical
    ? "<table>" +
      Object.entries(p.categorical)
        .map(([k, v]) => `<tr><td>${k}</td><td>${v}</td></tr>`)
        .join("") +
      "</table>"
    : p.svg;
  el("panel").innerHTML =
    `<div class="expression">${p.expression}</div>` +
    `<div class="stats">${stats}</div>` +
    (p.error ? `<div class="error">${p.error}</div>` : "") +
    table;
  renderSliders(p);
}

function renderSliders(panel: DistributionRenderModel): void {
  const rows = panel.sliders
    .filter((s) => s.variable !== panel.variable)
    .map((s) => {
      const lo = s.lo ?? s.min;
      const hi = s.hi ?? s.max;
      return (
        `<div class="slider-row" data-slider="${s.variable}">` +
        `<label>${s.variable}</label>` +
        `<input type="number" class="lo" value="${lo}" step="any">` +
        `<input type="number" class="hi" value="${hi}" step="any">` +
        `<button class="apply">condition</button>` +
        `<button class="clear">clear</button></div>`
      );
    })
    .join("");
  el("sliders").innerHTML = rows;
  for (const row of el("sliders").querySelectorAll("[data-slider]")) {
    const variable = (row as HTMLElement).dataset.slider ?? "";
    row.querySelector(".apply")?.addEventListener("click", () => {
      const lo = Number((row.querySelector(".lo") as HTMLInputElement).value);
      const hi = Number((row.querySelector(".hi") as HTMLInputElement).value);
      state.constraints[variable] = { lo, hi };
      pushState();
      if (currentPanel) void runConditioned(currentPanel.variable);
    });
    row.querySelector(".clear")?.addEventListener("click", () => {
      delete state.constraints[variable];
      pushState();
      if (currentPanel) void runConditioned(currentPanel.variable);
    });
  }
}

async function runConditioned(variable: string): Promise<void> {
  if (!currentNode) return;
  if (Object.keys(state.constraints).length === 0) {
    showVariable(variable);
    return;
  }
  const ticket = ++panelRequest;
  const constraints: Record<string, Constraint> = {};
  for (const [name, c] of Object.entries(state.constraints)) {
    constraints[`${currentNode.id}.${name}`] = c;
  }
  try {
    const result = await client.query({
      kind: "distribution",
      targets: [`${currentNode.id}.${variable}`],
      constraints,
      seed: state.seed,
    });
    if (ticket !== panelRequest) return; // stale response
    const summary = result.distributions?.[variable];
    if (!summary) return;
    currentPanel = renderConditioned(
      currentNode.id,
      variable,
      state.constraints,
      summary,
      sliderSpecs(currentNode, state.constraints),
    );
    drawPanel();
  } catch (err) {
    if (ticket !== panelRequest) return;
    if (err instanceof ApiError && err.status === 422 && currentPanel) {
      currentPanel = conditioningError(
        currentPanel,
        "constraint has ~zero probability; previous chart retained",
      );
      drawPanel();
      return;
    }
    throw err;
  }
}

async function runAnomaly(): Promise<void> {
  if (!currentNode) return;
  const variable = (el("anomaly-var") as HTMLInputElement).value;
  const value = Number((el("anomaly-value") as HTMLInputElement).value);
  const report = await client.anomaly({
    node: currentNode.id,
    values: { [variable]: value },
  });
  const model = renderRipple(report);
  rippleHighlight = model.highlight;
  el("ripple").innerHTML =
    `<div class="headline">${model.headline}</div>` +
    `<div>origin ${model.origin}: score ${model.originScore}</div>` +
    `<div>distance: ${model.distanceLabel}</div>` +
    "<ol>" +
    model.steps
      .map(
        (s) =>
          `<li class="${s.detected ? "detected" : ""}">${s.node} ` +
          `(depth ${s.depth}, score ${s.score})</li>`,
      )
      .join("") +
    "</ol>";
  void refreshNetwork();
}

export async function start(): Promise<void> {
  state = stateFromQuery(location.search);
  el("anomaly-run").addEventListener("click", () => void runAnomaly());
  await refreshNetwork();
  if (state.node) {
    const saved = { ...state.constraints };
    await selectNode(state.node);
    state = pruneConstraints(
      { ...state, constraints: saved },
      currentNode?.variables.map((v) => v.name) ?? [],
    );
    pushState();
    const first = currentNode?.variables[0];
    if (first && Object.keys(state.constraints).length > 0) {
      void runConditioned(first.name);
    }
  }
}

if (typeof document !== "undefined" && document.getElementById("network")) {
  void start();
}
