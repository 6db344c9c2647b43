/**
 * Ripple view: the anomaly report rendered over the network graph.
 * The path highlights every downstream node that observed the
 * anomalous object, with its score and the frame-count distance to the
 * first detection; never-perceived anomalies get an explicit label.
 */

import type { AnomalyPayload } from "./api.js";
import { exact } from "./format.js";

export interface RippleRenderModel {
  origin: string;
  originScore: string;
  detected: boolean;
  highlight: Map<string, number>; // node id -> score
  steps: { node: string; depth: number; score: string; detected: boolean }[];
  distanceLabel: string;
  headline: string;
}

export function renderRipple(report: AnomalyPayload): RippleRenderModel {
  const highlight = new Map<string, number>();
  const steps = report.ripple.map((p) => {
    highlight.set(p.node, p.score);
    return {
      node: p.node,
      depth: p.depth,
      score: exact(p.score),
      detected: p.detected,
    };
  });
  let distanceLabel: string;
  let headline: string;
  if (!report.detected && report.ripple.length === 0) {
    distanceLabel = "-";
    headline = "no anomaly";
  } else if (report.ripple_distance === null) {
    distanceLabel = "never detected";
    headline = report.traced
      ? "anomaly not perceived downstream"
      : "anomaly detected at origin";
  } else {
    distanceLabel = `${report.ripple_distance} call frame${report.ripple_distance === 1 ? "" : "s"}`;
    headline = `perceived after ${distanceLabel}`;
  }
  return {
    origin: report.node,
    originScore: exact(report.score),
    detected: report.detected,
    highlight,
    steps,
    distanceLabel,
    headline,
  };
}
