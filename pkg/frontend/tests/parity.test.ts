/**
 * Explorer parity against recorded API responses (fixtures generated by
 * scripts/make_fixtures.py from a real served bundle): rendered numbers
 * must equal the payload numbers exactly, and the conditioning example
 * must display a mean matching the rejection-sampling oracle.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import type { NodePayload, QueryResultPayload } from "../src/api.js";
import {
  renderConditioned,
  renderNodeCurve,
  sliderSpecs,
} from "../src/distribution-panel.js";
import { exact } from "../src/format.js";

const here = dirname(fileURLToPath(import.meta.url));

function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, "..", "fixtures", name), "utf-8")) as T;
}

const nodePerson = fixture<NodePayload>("node_person.json");
const tail = fixture<QueryResultPayload>("query_tail.json");
const conditional = fixture<QueryResultPayload>("query_conditional.json");
const sample = fixture<QueryResultPayload>("query_sample.json");
const meta = fixture<{
  conditional_mean_oracle: number;
  trace_fraction_weight_gt_80: number;
}>("meta.json");

describe("canned query parity", () => {
  it("tail probability renders the API number exactly", () => {
    const rendered = exact(tail.probability!);
    expect(rendered).toBe(String(tail.probability));
    // and the API number itself sits on the trace fraction
    expect(Math.abs(tail.probability! - meta.trace_fraction_weight_gt_80)).toBeLessThan(0.02);
  });

  it("unconditioned node panel renders the server curve exactly", () => {
    const model = renderNodeCurve(nodePerson, "weight");
    expect(model.error).toBeNull();
    const curve = nodePerson.curves["weight"];
    if (curve.kind !== "continuous") throw new Error("fixture changed");
    expect(model.stats.mean).toBe(String(curve.summary.mean));
    expect(model.stats.std).toBe(String(curve.summary.std));
    expect(model.stats.n).toBe(String(curve.summary.count));
    expect(curve.centers).toHaveLength(256);
    expect(curve.observed_density).toHaveLength(256);
    expect(curve.fitted_density).toHaveLength(256);
    // every histogram bar and the overlay make it into the svg
    expect((model.svg.match(/hist-bar/g) ?? []).length).toBe(256);
    expect(model.svg).toContain("fitted-curve");
  });

  it("sample rows render the API values exactly", () => {
    const rows = sample.rows!;
    expect(rows).toHaveLength(5);
    for (const row of rows) {
      for (const value of Object.values(row)) {
        expect(exact(value as number)).toBe(String(value));
      }
    }
  });
});

describe("conditioning panel round-trip", () => {
  it("renders the conditioned weight distribution and matches the oracle", () => {
    const summary = conditional.distributions!["weight"];
    const model = renderConditioned(
      "Person",
      "weight",
      { height: { lo: 169.0, hi: 170.0 } },
      summary,
      sliderSpecs(nodePerson, { height: { lo: 169.0, hi: 170.0 } }),
    );
    expect(model.expression).toBe("P(weight | 169 < height < 170)");
    // displayed mean is exactly the API mean
    expect(model.stats.mean).toBe(String(summary.mean));
    // and the API mean matches the rejection-sampling oracle within 2%
    const relErr =
      Math.abs(summary.mean! - meta.conditional_mean_oracle) /
      Math.abs(meta.conditional_mean_oracle);
    expect(relErr).toBeLessThan(0.02);
  });

  it("keeps the previous chart on an impossible constraint", () => {
    const summary = conditional.distributions!["weight"];
    const model = renderConditioned("Person", "weight", {}, summary, []);
    const withError = {
      ...model,
      error: "constraint has ~zero probability; previous chart retained",
    };
    expect(withError.svg).toBe(model.svg);
    expect(withError.error).toContain("zero probability");
  });

  it("slider bounds come from the server observation summaries", () => {
    const sliders = sliderSpecs(nodePerson, {});
    const height = sliders.find((s) => s.variable === "height");
    const curve = nodePerson.curves["height"];
    if (!height || curve.kind !== "continuous") throw new Error("fixture changed");
    expect(height.min).toBe(curve.summary.min);
    expect(height.max).toBe(curve.summary.max);
  });
});
