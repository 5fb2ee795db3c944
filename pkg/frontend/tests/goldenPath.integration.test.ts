/** Golden-path script against a live engine: enter participant 1's nine
 * codes, submit, expect FWT3 with the Rule-1 badge; what-if FCPA4->FCPA2
 * marks the FWT row changed.  Spawns `pedocds serve` and drives the real
 * console components in a DOM.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { readDraft, renderProfileForm, setDraft } from "../src/profileForm.js";
import { renderRecommendation } from "../src/recommendationView.js";
import { renderWhatIfResult, runWhatIf } from "../src/whatifPanel.js";
import { loadParticipant1, mount } from "./helpers.js";

const PORT = 8469;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess | undefined;

async function waitForServer(timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/catalog`);
      if (response.ok) return;
    } catch (error) {
      lastError = error;
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error(`engine did not come up on ${BASE}: ${lastError}`);
}

beforeAll(async () => {
  const dataDir = mkdtempSync(join(tmpdir(), "pedocds-console-"));
  server = spawn("pedocds",
    ["serve", "--port", String(PORT), "--data", dataDir],
    { stdio: "ignore" });
  await waitForServer(30_000);
}, 45_000);

afterAll(() => {
  server?.kill();
});

describe("console golden path against a live engine", () => {
  it("participant 1 entry renders FWT3 with the Rule 1 badge, and the "
     + "FCPA what-if marks FWT changed", async () => {
    const api = new ApiClient(BASE);
    const catalog = await api.getCatalog();
    expect(catalog.features.length).toBe(39);

    // 1. enter the nine coded inputs through the real form
    const formRoot = mount();
    renderProfileForm(formRoot, catalog);
    setDraft(formRoot, catalog, loadParticipant1());
    const draft = readDraft(formRoot, catalog);
    expect(Object.keys(draft.values).length).toBe(9);

    // live partial validation comes from the engine, not the console
    const partial = await api.validateProfile(
      { patient_id: draft.patient_id, values: { FSS: draft.values.FSS } },
      "partial");
    expect(partial.ok).toBe(true);
    const strict = await api.validateProfile(draft, "strict");
    expect(strict.ok).toBe(true);

    // 2. recommendation view shows FWT3 sourced from Rule 1
    const recommendation = await api.recommend({ profile: draft });
    const recRoot = mount();
    renderRecommendation(recRoot, catalog, recommendation);
    const fwtRow = recRoot.querySelector('tr[data-feature="FWT"]')!;
    expect(fwtRow.querySelector(".codes")!.textContent).toContain("FWT3");
    const badge = fwtRow.querySelector(".badge")!;
    expect(badge.textContent).toBe("RULE Rule 1");
    expect(badge.classList.contains("origin-rule")).toBe(true);
    const trace = fwtRow.querySelector("pre.trace")!;
    expect(trace.textContent).toContain("rule Rule 1: winning");

    // 3. what-if FCPA4 -> FCPA2 flips the footwear-type row
    const whatIf = await runWhatIf(api, draft, "FCPA", "FCPA2");
    const whatIfRoot = mount();
    renderWhatIfResult(whatIfRoot, catalog, whatIf);
    const changedRow = whatIfRoot.querySelector('tr[data-feature="FWT"]')!;
    expect(changedRow.classList.contains("changed")).toBe(true);
    expect(whatIf.diff.FWT.before.origin).toBe("RULE");
    expect(["abstained", "MODEL"]).toContain(whatIf.diff.FWT.after.origin);
    // untouched outputs stay unchanged
    expect(whatIf.diff.POEM.changed).toBe(false);
  });

  it("incomplete submissions are blocked by strict validation", async () => {
    const api = new ApiClient(BASE);
    const participant1 = loadParticipant1();
    const values = { ...participant1.values };
    delete (values as Record<string, string[]>).FO;
    const report = await api.validateProfile(
      { patient_id: "draft", values }, "strict");
    expect(report.ok).toBe(false);
    expect(report.findings.some((f) => f.message === "missing feature FO"))
      .toBe(true);
  });
});
