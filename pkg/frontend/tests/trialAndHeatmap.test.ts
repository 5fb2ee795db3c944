import { beforeEach, describe, expect, it } from "vitest";

import { heatColor, renderHeatmap } from "../src/heatmap.js";
import { renderTrialTimeline } from "../src/trialTimeline.js";
import type { TrialDoc } from "../src/types.js";
import { mount } from "./helpers.js";

function trialDoc(overrides: Partial<TrialDoc["state"]> = {}): TrialDoc {
  return {
    id: "t1",
    version: 1,
    state: {
      phase: "fitted",
      round: 0,
      closed_reason: null,
      prescription_versions: [null],
      evaluations: [],
      visits: [
        { label: "T1", date: "2024-03-01", satisfaction: 4,
          adherence: { worn_hours: 12, ambulatory_hours: 14,
                       ratio: 12 / 14, goal_met: true } },
      ],
      ...overrides,
    },
  };
}

describe("trial timeline", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("renders visit cards and the round counter", () => {
    const root = mount();
    renderTrialTimeline(root, trialDoc());
    expect(root.querySelector('.visit-card[data-label="T1"]')).not.toBeNull();
    expect(root.querySelector(".round-counter")!.textContent)
      .toContain("0/3");
  });

  it("shows the adherence gauge against the >80% goal", () => {
    const root = mount();
    renderTrialTimeline(root, trialDoc());
    const bar = root.querySelector<HTMLElement>(".adherence-bar")!;
    expect(bar.classList.contains("goal-met")).toBe(true);
    expect(Number(bar.dataset.ratio)).toBeCloseTo(12 / 14, 6);
    expect(root.querySelector(".adherence-gauge")!.textContent)
      .toContain("85.7%");
  });

  it("adherence below the goal renders not-met", () => {
    const root = mount();
    const doc = trialDoc();
    doc.state.visits[0].adherence = {
      worn_hours: 8, ambulatory_hours: 10, ratio: 0.8, goal_met: false };
    renderTrialTimeline(root, doc);
    expect(root.querySelector(".adherence-bar")!.classList
      .contains("goal-not-met")).toBe(true);
  });

  it("disables modification after three rounds", () => {
    const root = mount();
    renderTrialTimeline(root, trialDoc({ phase: "mod_round", round: 3 }));
    expect(root.querySelector<HTMLButtonElement>(".modify-button")!.disabled)
      .toBe(true);
  });

  it("closed trials render read-only", () => {
    const root = mount();
    renderTrialTimeline(root, trialDoc({ phase: "closed", round: 1,
                                         closed_reason: "goal_met" }));
    expect(root.querySelector(".trial-timeline")!.classList
      .contains("readonly")).toBe(true);
    expect(root.querySelector(".trial-status")!.textContent)
      .toContain("Closed (goal_met)");
    expect(root.querySelector<HTMLButtonElement>(".modify-button")!.disabled)
      .toBe(true);
  });
});

describe("heatmap", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("renders one cell per grid value with the kPa recorded", () => {
    const root = mount();
    renderHeatmap(root, [[0, 150], [300, 75]], { maxKpa: 300 });
    const cells = root.querySelectorAll<HTMLElement>(".heatmap-cell");
    expect(cells.length).toBe(4);
    const values = Array.from(cells, (c) => Number(c.dataset.kpa)).sort((a, b) => a - b);
    expect(values).toEqual([0, 75, 150, 300]);
  });

  it("colour scale is monotone from cold to hot", () => {
    expect(heatColor(0)).toBe("rgb(0, 0, 40)");
    expect(heatColor(1)).toBe("rgb(255, 255, 255)");
    // mid-scale is strictly between in the red channel progression
    const mid = heatColor(0.5);
    expect(mid).toMatch(/^rgb\(255, \d+, 0\)$/);
  });

  it("values above the scale max clamp instead of overflowing", () => {
    const root = mount();
    renderHeatmap(root, [[900]], { maxKpa: 300 });
    const cell = root.querySelector<HTMLElement>(".heatmap-cell")!;
    expect(cell.style.backgroundColor).toBe("rgb(255, 255, 255)");
  });
});
