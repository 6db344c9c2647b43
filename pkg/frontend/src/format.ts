/**
 * Display formatting. Numbers render exactly as the server sent them
 * (full precision via String), with a compact variant for axis labels;
 * constraint expressions follow the probability notation used across
 * the workbench.
 */

import type { Constraint, IntervalConstraint } from "./api.js";

/** Exact, lossless rendering of a server-computed number. */
export function exact(value: number): string {
  return String(value);
}

/** Compact rendering for axes and badges. */
export function compact(value: number): string {
  if (value === 0) return "0";
  const magnitude = Math.abs(value);
  if (magnitude >= 1e5 || magnitude < 1e-3) {
    return value.toExponential(2);
  }
  return String(Number(value.toPrecision(5)));
}

function isInterval(c: Constraint): c is IntervalConstraint {
  return typeof c === "object" && c !== null;
}

export function constraintText(name: string, c: Constraint): string {
  if (isInterval(c)) {
    const hasLo = c.lo !== undefined;
    const hasHi = c.hi !== undefined;
    if (hasLo && hasHi) return `${c.lo} < ${name} < ${c.hi}`;
    if (hasLo) return `${name} > ${c.lo}`;
    if (hasHi) return `${name} < ${c.hi}`;
    return name;
  }
  if (typeof c === "string") return `${name} = "${c}"`;
  return `${name} = ${c}`;
}

/** The conditional-probability caption, e.g. `P(weight | 169 < height < 170)`. */
export function queryExpression(
  target: string,
  constraints: Record<string, Constraint>,
): string {
  const parts = Object.keys(constraints)
    .sort()
    .map((name) => constraintText(name, constraints[name]));
  if (parts.length === 0) return `P(${target})`;
  return `P(${target} | ${parts.join(", ")})`;
}
