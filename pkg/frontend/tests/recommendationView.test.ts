import { beforeEach, describe, expect, it } from "vitest";

import { renderRecommendation } from "../src/recommendationView.js";
import { loadCatalog, mount, sampleRecommendation } from "./helpers.js";

const catalog = loadCatalog();

describe("recommendation view", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("renders all 30 output rows grouped footwear/insole/evaluation", () => {
    const root = mount();
    renderRecommendation(root, catalog, sampleRecommendation());
    expect(root.querySelectorAll("tr.feature").length).toBe(30);
    const headers = Array.from(
      root.querySelectorAll("tr.group-header th"), (th) => th.textContent);
    expect(headers).toEqual([
      "Footwear design and modification",
      "Insole design and modification",
      "Pressure offloading evaluation",
    ]);
  });

  it("shows origin badges including rule names and model confidence", () => {
    const root = mount();
    renderRecommendation(root, catalog, sampleRecommendation());
    const fwt = root.querySelector('tr[data-feature="FWT"] .badge')!;
    expect(fwt.textContent).toBe("RULE Rule 1");
    expect(fwt.classList.contains("origin-rule")).toBe(true);
    const fws = root.querySelector('tr[data-feature="FWS"] .badge')!;
    expect(fws.textContent).toBe("MODEL 1.00");
    const insmod = root.querySelector('tr[data-feature="INSMOD"] .badge')!;
    expect(insmod.textContent).toBe("DEFAULT");
  });

  it("renders code descriptions from the catalog", () => {
    const root = mount();
    renderRecommendation(root, catalog, sampleRecommendation());
    const fwt = root.querySelector('tr[data-feature="FWT"] .codes')!;
    expect(fwt.textContent).toContain("FWT3");
    expect(fwt.textContent).toContain("with further modification");
  });

  it("abstained rows render an unresolved state", () => {
    const root = mount();
    renderRecommendation(root, catalog, sampleRecommendation());
    const fwup = root.querySelector('tr[data-feature="FWUP"]')!;
    expect(fwup.querySelector(".codes")!.textContent).toBe("—");
    expect(fwup.querySelector(".badge")!.textContent).toBe("unresolved");
    expect(fwup.querySelector(".badge")!.classList.contains("origin-abstained"))
      .toBe(true);
  });

  it("expandable explanation lists the rule trace", () => {
    const root = mount();
    renderRecommendation(root, catalog, sampleRecommendation());
    const trace = root.querySelector('tr[data-feature="FWT"] pre.trace')!;
    expect(trace.textContent).toContain("rule Rule 1: winning");
  });

  it("diff entries highlight changed rows with before/after", () => {
    const root = mount();
    const rec = sampleRecommendation();
    renderRecommendation(root, catalog, rec, {
      FWT: {
        changed: true,
        before: { codes: ["FWT3"], origin: "RULE" },
        after: { codes: [], origin: "abstained" },
      },
    });
    const row = root.querySelector('tr[data-feature="FWT"]')!;
    expect(row.classList.contains("changed")).toBe(true);
    expect(row.querySelector(".diff-note")!.textContent)
      .toContain("was FWT3 [RULE]");
  });
});
