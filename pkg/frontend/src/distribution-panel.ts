/**
 * Distribution panel: observation histogram with the fitted-curve
 * overlay, the live conditioning result, and slider ranges for sibling
 * variables. All numbers come from the server; rendering only maps
 * them to pixels, and the displayed statistics are the exact payload
 * values.
 */

import type {
  Constraint,
  Curve,
  DistributionSummary,
  NodePayload,
} from "./api.js";
import { compact, exact, queryExpression } from "./format.js";

export interface SliderSpec {
  variable: string;
  min: number;
  max: number;
  lo: number | null; // current interval, if constrained
  hi: number | null;
}

export interface PanelStats {
  mean: string | null;
  std: string | null;
  n: string | null;
}

export interface DistributionRenderModel {
  node: string;
  variable: string;
  expression: string;
  stats: PanelStats;
  svg: string;
  categorical: Record<string, string> | null;
  sliders: SliderSpec[];
  error: string | null;
}

const W = 520;
const H = 260;
const PAD = 36;

function scale(v: number, lo: number, hi: number, outLo: number, outHi: number): number {
  if (hi <= lo) return (outLo + outHi) / 2;
  return outLo + ((v - lo) / (hi - lo)) * (outHi - outLo);
}

function polyline(xs: number[], ys: number[], color: string, cls: string): string {
  const points = xs.map((x, i) => `${x.toFixed(2)},${ys[i].toFixed(2)}`).join(" ");
  return `<polyline class="${cls}" points="${points}" fill="none" stroke="${color}" stroke-width="2"/>`;
}

export function histogramSvg(
  edges: number[],
  density: number[],
  overlay: number[] | null,
): string {
  const lo = edges[0];
  const hi = edges[edges.length - 1];
  let top = Math.max(...density, ...(overlay ?? [0]));
  top = top > 0 ? top * 1.08 : 1;
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}">`,
  ];
  for (let i = 0; i < density.length; i++) {
    const x0 = scale(edges[i], lo, hi, PAD, W - PAD);
    const x1 = scale(edges[i + 1], lo, hi, PAD, W - PAD);
    const y = scale(density[i], 0, top, H - PAD, PAD);
    parts.push(
      `<rect class="hist-bar" x="${x0.toFixed(2)}" y="${y.toFixed(2)}" ` +
        `width="${Math.max(x1 - x0, 0.5).toFixed(2)}" height="${(H - PAD - y).toFixed(2)}" ` +
        `fill="#4e79a7" fill-opacity="0.6"/>`,
    );
  }
  if (overlay) {
    const xs = overlay.map((_, i) =>
      scale((edges[i] + edges[i + 1]) / 2, lo, hi, PAD, W - PAD),
    );
    const ys = overlay.map((v) => scale(v, 0, top, H - PAD, PAD));
    parts.push(polyline(xs, ys, "#e8b01d", "fitted-curve"));
  }
  parts.push(
    `<line x1="${PAD}" y1="${H - PAD}" x2="${W - PAD}" y2="${H - PAD}" stroke="#333"/>`,
  );
  for (const frac of [0, 0.5, 1]) {
    const v = lo + frac * (hi - lo);
    const x = scale(v, lo, hi, PAD, W - PAD);
    parts.push(
      `<text x="${x.toFixed(1)}" y="${H - PAD + 14}" text-anchor="middle" font-size="10">${compact(v)}</text>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}

/** The unconditioned node view (observation histogram + fitted overlay). */
export function renderNodeCurve(
  payload: NodePayload,
  variable: string,
): DistributionRenderModel {
  const curve: Curve | undefined = payload.curves[variable];
  const sliders = sliderSpecs(payload, {});
  if (curve === undefined) {
    return {
      node: payload.id,
      variable,
      expression: queryExpression(variable, {}),
      stats: { mean: null, std: null, n: null },
      svg: "",
      categorical: null,
      sliders,
      error: `no variable ${variable}`,
    };
  }
  if (curve.kind === "categorical") {
    const table: Record<string, string> = {};
    for (const [k, v] of Object.entries(curve.observed)) {
      table[k] = exact(v);
    }
    return {
      node: payload.id,
      variable,
      expression: queryExpression(variable, {}),
      stats: { mean: null, std: null, n: exact(payload.sample_count) },
      svg: "",
      categorical: table,
      sliders,
      error: null,
    };
  }
  return {
    node: payload.id,
    variable,
    expression: queryExpression(variable, {}),
    stats: {
      mean: curve.summary.mean === null ? null : exact(curve.summary.mean),
      std: curve.summary.std === null ? null : exact(curve.summary.std),
      n: exact(curve.summary.count),
    },
    svg: histogramSvg(curve.edges, curve.observed_density, curve.fitted_density),
    categorical: null,
    sliders,
    error: null,
  };
}

/** A conditioned distribution result from POST /api/query. */
export function renderConditioned(
  node: string,
  variable: string,
  constraints: Record<string, Constraint>,
  summary: DistributionSummary,
  sliders: SliderSpec[],
): DistributionRenderModel {
  if (summary.values !== undefined) {
    const table: Record<string, string> = {};
    for (const [k, v] of Object.entries(summary.values)) {
      table[k] = exact(v);
    }
    return {
      node,
      variable,
      expression: queryExpression(variable, constraints),
      stats: { mean: null, std: null, n: null },
      svg: "",
      categorical: table,
      sliders,
      error: null,
    };
  }
  const hist = summary.histogram!;
  return {
    node,
    variable,
    expression: queryExpression(variable, constraints),
    stats: {
      mean: summary.mean === undefined ? null : exact(summary.mean),
      std: summary.std === undefined ? null : exact(summary.std),
      n: summary.n === undefined ? null : exact(summary.n),
    },
    svg: histogramSvg(hist.edges, hist.density, null),
    categorical: null,
    sliders,
    error: null,
  };
}

/** Slider ranges come from the server-side observation summaries. */
export function sliderSpecs(
  payload: NodePayload,
  constraints: Record<string, Constraint>,
): SliderSpec[] {
  const out: SliderSpec[] = [];
  for (const variable of payload.variables) {
    const curve = payload.curves[variable.name];
    if (!curve || curve.kind !== "continuous") continue;
    if (curve.summary.min === null || curve.summary.max === null) continue;
    const c = constraints[variable.name];
    let lo: number | null = null;
    let hi: number | null = null;
    if (typeof c === "object" && c !== null) {
      lo = c.lo ?? null;
      hi = c.hi ?? null;
    }
    out.push({
      variable: variable.name,
      min: curve.summary.min,
      max: curve.summary.max,
      lo,
      hi,
    });
  }
  return out;
}

/** Zero-probability conditions keep the previous chart, show a message. */
export function conditioningError(
  previous: DistributionRenderModel,
  message: string,
): DistributionRenderModel {
  return { ...previous, error: message };
}
