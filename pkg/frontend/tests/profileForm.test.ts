import { beforeEach, describe, expect, it } from "vitest";

import { markFindings, readDraft, renderProfileForm, setDraft }
  from "../src/profileForm.js";
import { loadCatalog, loadParticipant1, mount } from "./helpers.js";

const catalog = loadCatalog();

describe("profile form", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("renders one section per input group, driven by the catalog", () => {
    const root = mount();
    renderProfileForm(root, catalog);
    const groups = Array.from(
      root.querySelectorAll<HTMLElement>("fieldset"),
      (section) => section.dataset.group);
    expect(groups).toEqual(["person", "diagnosis", "fund"]);
    // all 9 input features get a row, none hard-coded
    expect(root.querySelectorAll(".feature-row").length).toBe(9);
  });

  it("renders multi-select only for multivalued features", () => {
    const root = mount();
    renderProfileForm(root, catalog);
    const multivalued = catalog.features
      .filter((f) => f.kind === "input" && f.multivalued).map((f) => f.id);
    expect(multivalued.sort()).toEqual(["CM", "MFP", "PMS"]);
    for (const feature of catalog.features.filter((f) => f.kind === "input")) {
      const row = root.querySelector(`.feature-row[data-feature="${feature.id}"]`)!;
      if (feature.multivalued) {
        expect(row.querySelectorAll('input[type="checkbox"]').length)
          .toBe(feature.codes.length);
      } else {
        expect(row.querySelector("select")).not.toBeNull();
      }
    }
  });

  it("a new catalog code appears without console changes", () => {
    const extended = structuredClone(catalog);
    const fo = extended.features.find((f) => f.id === "FO")!;
    fo.codes.push({ code: "FO6", description: "Charitable trust grant" });
    const root = mount();
    renderProfileForm(root, extended);
    const option = root.querySelector<HTMLOptionElement>('option[value="FO6"]');
    expect(option?.textContent).toContain("Charitable trust grant");
  });

  it("selecting participant 1's nine codes reproduces the profile", () => {
    const root = mount();
    renderProfileForm(root, catalog);
    const participant1 = loadParticipant1();
    setDraft(root, catalog, participant1);
    const draft = readDraft(root, catalog);
    expect(draft.values).toEqual(participant1.values);
    expect(draft.patient_id).toBe("participant-1");
  });

  it("single-valued features cannot hold two codes through the form", () => {
    const root = mount();
    renderProfileForm(root, catalog);
    const select = root.querySelector<HTMLSelectElement>('select[name="FSS"]')!;
    select.value = "FSS2";
    select.value = "FSS3"; // a select replaces, never accumulates
    expect(readDraft(root, catalog).values.FSS).toEqual(["FSS3"]);
  });

  it("server findings surface inline under their feature row", () => {
    const root = mount();
    renderProfileForm(root, catalog);
    markFindings(root, [
      { severity: "error", code: "single-valued",
        message: "FSS is single-valued", feature: "FSS" },
      { severity: "error", code: "missing-feature",
        message: "missing feature FO", feature: "FO" },
    ]);
    const fss = root.querySelector(
      '.feature-row[data-feature="FSS"] .finding-message')!;
    expect(fss.textContent).toBe("FSS is single-valued");
    expect(fss.classList.contains("error")).toBe(true);
    const fo = root.querySelector(
      '.feature-row[data-feature="FO"] .finding-message')!;
    expect(fo.textContent).toBe("missing feature FO");
    // clearing works
    markFindings(root, []);
    expect(fss.textContent).toBe("");
  });
});
