/**
 * View state and its URL serialization.
 *
 * Every state reached by interaction round-trips through the query
 * string, so any view is shareable as a link.
 */

import type { Constraint, IntervalConstraint } from "./api.js";

export interface ViewState {
  node: string | null;
  constraints: Record<string, Constraint>;
  overlay: boolean; // comparison overlay toggle
  seed: number;
}

export const DEFAULT_STATE: ViewState = {
  node: null,
  constraints: {},
  overlay: false,
  seed: 0,
};

function isInterval(c: Constraint): c is IntervalConstraint {
  return typeof c === "object" && c !== null;
}

function encodeConstraint(c: Constraint): string {
  if (isInterval(c)) {
    const lo = c.lo !== undefined ? String(c.lo) : "";
    const hi = c.hi !== undefined ? String(c.hi) : "";
    return `${lo}..${hi}`;
  }
  if (typeof c === "string") {
    return `s:${c}`;
  }
  if (typeof c === "boolean") {
    return c ? "b:1" : "b:0";
  }
  return `n:${c}`;
}

function decodeConstraint(text: string): Constraint | null {
  if (text.includes("..")) {
    const [lo, hi] = text.split("..", 2);
    const interval: IntervalConstraint = {};
    if (lo !== "") {
      const v = Number(lo);
      if (!Number.isFinite(v)) return null;
      interval.lo = v;
    }
    if (hi !== "") {
      const v = Number(hi);
      if (!Number.isFinite(v)) return null;
      interval.hi = v;
    }
    return interval;
  }
  if (text.startsWith("s:")) return text.slice(2);
  if (text.startsWith("b:")) return text.slice(2) === "1";
  if (text.startsWith("n:")) {
    const v = Number(text.slice(2));
    return Number.isFinite(v) ? v : null;
  }
  return null;
}

export function stateToQuery(state: ViewState): string {
  const params = new URLSearchParams();
  if (state.node !== null) {
    params.set("node", state.node);
  }
  for (const name of Object.keys(state.constraints).sort()) {
    params.set(`c.${name}`, encodeConstraint(state.constraints[name]));
  }
  if (state.overlay) {
    params.set("overlay", "1");
  }
  if (state.seed !== 0) {
    params.set("seed", String(state.seed));
  }
  return params.toString();
}

export function stateFromQuery(query: string): ViewState {
  const params = new URLSearchParams(query);
  const state: ViewState = {
    node: params.get("node"),
    constraints: {},
    overlay: params.get("overlay") === "1",
    seed: Number(params.get("seed") ?? "0") || 0,
  };
  for (const [key, value] of params.entries()) {
    if (key.startsWith("c.")) {
      const constraint = decodeConstraint(value);
      if (constraint !== null) {
        state.constraints[key.slice(2)] = constraint;
      }
    }
  }
  return state;
}

/** Constraints may only reference variables of the selected node. */
export function pruneConstraints(
  state: ViewState,
  variables: string[],
): ViewState {
  const allowed = new Set(variables);
  const constraints: Record<string, Constraint> = {};
  for (const [name, c] of Object.entries(state.constraints)) {
    if (allowed.has(name)) {
      constraints[name] = c;
    }
  }
  return { ...state, constraints };
}
