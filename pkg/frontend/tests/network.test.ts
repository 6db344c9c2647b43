import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import type { NetworkPayload } from "../src/api.js";
import { layoutNetwork, renderNetworkSvg } from "../src/network-view.js";

const here = dirname(fileURLToPath(import.meta.url));
const network = JSON.parse(
  readFileSync(join(here, "..", "fixtures", "network.json"), "utf-8"),
) as NetworkPayload;

describe("network view", () => {
  it("groups properties under their type", () => {
    const model = layoutNetwork(network);
    const person = model.groups.find((g) => g.id === "Person");
    expect(person).toBeDefined();
    expect(person!.members).toContain("Person.height");
    expect(person!.members).toContain("Person.weight");
    const group = new Map(model.nodes.map((n) => [n.id, n.group]));
    expect(group.get("Person.weight")).toBe("Person");
    expect(group.get("NutritionAdvisor.advice")).toBe("NutritionAdvisor");
  });

  it("keeps the advice -> bmi conditioning edge", () => {
    const model = layoutNetwork(network);
    const call = model.edges.find(
      (e) =>
        e.kind === "call" &&
        e.src === "NutritionAdvisor.advice" &&
        e.dst === "BmiService.bmi",
    );
    expect(call).toBeDefined();
    const svg = renderNetworkSvg(model);
    expect(svg).toContain('data-node="NutritionAdvisor.advice"');
    expect(svg).toContain("edge-call");
  });

  it("flags unfitted and low-confidence nodes", () => {
    const payload: NetworkPayload = JSON.parse(JSON.stringify(network));
    for (const node of payload.nodes) {
      if (node.id === "Person") node.low_confidence = true;
      if (node.id === "BmiService.bmi") node.fitted = false;
    }
    const model = layoutNetwork(payload);
    const person = model.nodes.find((n) => n.id === "Person")!;
    const bmi = model.nodes.find((n) => n.id === "BmiService.bmi")!;
    expect(person.badge).toBe("low-confidence");
    expect(bmi.badge).toBe("unfitted");
    const svg = renderNetworkSvg(model);
    expect(svg).toContain("low-confidence");
    expect(svg).toContain("unfitted");
  });

  it("renders an explicit empty state", () => {
    const model = layoutNetwork({ nodes: [], edges: [], meta: network.meta });
    expect(model.empty).toBe(true);
    expect(renderNetworkSvg(model)).toContain("No nodes");
  });

  it("highlights a ripple path on the graph", () => {
    const highlight = new Map<string, number>([
      ["NutritionAdvisor.advice", 0.0],
      ["BmiService.bmi", 0.0],
    ]);
    const model = layoutNetwork(network, { highlight });
    const advice = model.nodes.find((n) => n.id === "NutritionAdvisor.advice")!;
    expect(advice.highlighted).toBe(true);
    const edge = model.edges.find(
      (e) => e.src === "NutritionAdvisor.advice" && e.dst === "BmiService.bmi",
    )!;
    expect(edge.highlighted).toBe(true);
  });
});
