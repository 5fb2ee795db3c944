/** What-if exploration: toggle one input code, show before/after outputs.
 *
 * Diffs are computed server-side by POST /whatif; the panel only renders
 * the response and highlights the changed rows.
 */

import { ApiClient } from "./api.js";
import { renderRecommendation } from "./recommendationView.js";
import type { Catalog, ProfileDoc, WhatIfResponse } from "./types.js";

export function renderOverridePicker(root: HTMLElement, catalog: Catalog,
                                     onPick: (feature: string, code: string) => void): void {
  root.innerHTML = "";
  const featureSelect = document.createElement("select");
  featureSelect.className = "override-feature";
  const codeSelect = document.createElement("select");
  codeSelect.className = "override-code";

  for (const feature of catalog.features) {
    if (feature.kind !== "input") continue;
    const option = document.createElement("option");
    option.value = feature.id;
    option.textContent = `${feature.id} — ${feature.name}`;
    featureSelect.appendChild(option);
  }

  const fillCodes = () => {
    codeSelect.innerHTML = "";
    const feature = catalog.features.find((f) => f.id === featureSelect.value);
    for (const code of feature?.codes ?? []) {
      const option = document.createElement("option");
      option.value = code.code;
      option.textContent = `${code.code} — ${code.description}`;
      codeSelect.appendChild(option);
    }
  };
  featureSelect.addEventListener("change", fillCodes);
  fillCodes();

  const apply = document.createElement("button");
  apply.className = "apply-override";
  apply.textContent = "what if?";
  apply.addEventListener("click", () =>
    onPick(featureSelect.value, codeSelect.value));

  root.appendChild(featureSelect);
  root.appendChild(codeSelect);
  root.appendChild(apply);
}

export async function runWhatIf(api: ApiClient, base: ProfileDoc,
                                feature: string, code: string): Promise<WhatIfResponse> {
  return api.whatIf({ profile: base, overrides: { [feature]: code } });
}

export function renderWhatIfResult(root: HTMLElement, catalog: Catalog,
                                   response: WhatIfResponse): void {
  root.innerHTML = "";
  const changed = Object.entries(response.diff).filter(([, entry]) => entry.changed);
  const summary = document.createElement("div");
  summary.className = "whatif-summary";
  summary.textContent = changed.length
    ? `${changed.length} output feature(s) changed: ${changed.map(([f]) => f).join(", ")}`
    : "no output features changed";
  root.appendChild(summary);

  const tableHost = document.createElement("div");
  root.appendChild(tableHost);
  renderRecommendation(tableHost, catalog, response.recommendation, response.diff);
}
