import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import type { AnomalyPayload } from "../src/api.js";
import { renderRipple } from "../src/ripple-view.js";

const here = dirname(fileURLToPath(import.meta.url));

function fixture(name: string): AnomalyPayload {
  return JSON.parse(readFileSync(join(here, "..", "fixtures", name), "utf-8"));
}

describe("ripple view", () => {
  it("highlights the advice -> bmi path with the frame distance", () => {
    const report = fixture("anomaly_ripple.json");
    const model = renderRipple(report);
    expect(model.detected).toBe(true);
    expect(model.steps.map((s) => s.node)).toEqual([
      "NutritionAdvisor.advice",
      "BmiService.bmi",
    ]);
    expect(model.highlight.has("NutritionAdvisor.advice")).toBe(true);
    expect(model.highlight.has("BmiService.bmi")).toBe(true);
    expect(model.distanceLabel).toBe("1 call frame");
    // scores render exactly as the API reported them
    expect(model.steps[0].score).toBe(String(report.ripple[0].score));
    expect(model.originScore).toBe(String(report.score));
  });

  it("renders the no-anomaly state for a mode-valued input", () => {
    const report = fixture("anomaly_mode.json");
    const model = renderRipple(report);
    expect(model.detected).toBe(false);
    expect(model.headline).toBe("no anomaly");
    expect(model.highlight.size).toBe(0);
  });

  it("labels a never-perceived anomaly explicitly", () => {
    const report = fixture("anomaly_ripple.json");
    const never: AnomalyPayload = {
      ...report,
      ripple: report.ripple.map((p) => ({ ...p, detected: false })),
      ripple_distance: null,
    };
    const model = renderRipple(never);
    expect(model.distanceLabel).toBe("never detected");
    expect(model.headline).toContain("not perceived");
  });

  it("pluralizes multi-frame distances", () => {
    const report = fixture("anomaly_ripple.json");
    const deeper: AnomalyPayload = { ...report, ripple_distance: 2 };
    expect(renderRipple(deeper).distanceLabel).toBe("2 call frames");
  });
});
