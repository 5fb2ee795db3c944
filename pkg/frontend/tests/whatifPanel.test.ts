import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { renderOverridePicker, renderWhatIfResult, runWhatIf }
  from "../src/whatifPanel.js";
import type { WhatIfResponse } from "../src/types.js";
import { loadCatalog, loadParticipant1, mount, sampleRecommendation }
  from "./helpers.js";

const catalog = loadCatalog();

function whatIfResponse(): WhatIfResponse {
  const rec = sampleRecommendation();
  delete rec.prescription.values.FWT;
  delete rec.prescription.sources.FWT;
  rec.abstained.push("FWT");
  return {
    recommendation: rec,
    diff: {
      FWT: {
        changed: true,
        before: { codes: ["FWT3"], origin: "RULE" },
        after: { codes: [], origin: "abstained" },
      },
      POEM: {
        changed: false,
        before: { codes: ["POEM1"], origin: "MODEL" },
        after: { codes: ["POEM1"], origin: "MODEL" },
      },
    },
  };
}

describe("what-if panel", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  afterEach(() => {
    vi.unstubAllGlobals();
  });

  it("picker lists input features and their codes from the catalog", () => {
    const root = mount();
    renderOverridePicker(root, catalog, () => {});
    const featureSelect = root.querySelector<HTMLSelectElement>(".override-feature")!;
    expect(featureSelect.options.length).toBe(9);
    const codeSelect = root.querySelector<HTMLSelectElement>(".override-code")!;
    featureSelect.value = "FCPA";
    featureSelect.dispatchEvent(new Event("change"));
    expect(codeSelect.options.length).toBe(4);
  });

  it("sends the override to POST /whatif", async () => {
    const fetchMock = vi.fn(async () => new Response(
      JSON.stringify(whatIfResponse()), { status: 200 }));
    vi.stubGlobal("fetch", fetchMock);
    const api = new ApiClient("http://api.test");
    const response = await runWhatIf(api, loadParticipant1(), "FCPA", "FCPA2");
    expect(fetchMock).toHaveBeenCalledOnce();
    const [url, init] = fetchMock.mock.calls[0] as unknown as [string, RequestInit];
    expect(url).toBe("http://api.test/whatif");
    const body = JSON.parse(String(init.body));
    expect(body.overrides).toEqual({ FCPA: "FCPA2" });
    expect(response.diff.FWT.changed).toBe(true);
  });

  it("highlights changed rows and summarises them", () => {
    const root = mount();
    renderWhatIfResult(root, catalog, whatIfResponse());
    expect(root.querySelector(".whatif-summary")!.textContent)
      .toContain("1 output feature(s) changed: FWT");
    const row = root.querySelector('tr[data-feature="FWT"]')!;
    expect(row.classList.contains("changed")).toBe(true);
    const poem = root.querySelector('tr[data-feature="POEM"]')!;
    expect(poem.classList.contains("changed")).toBe(false);
  });

  it("surfaces API errors with the server detail", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => new Response(
      JSON.stringify({ detail: "invalid overrides: unknown code" }),
      { status: 400 })));
    const api = new ApiClient("http://api.test");
    await expect(runWhatIf(api, loadParticipant1(), "FCPA", "FCPA2"))
      .rejects.toThrow("invalid overrides");
  });
});
