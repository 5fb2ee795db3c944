/** Console entry point: live prescription session over the HTTP API. */

import { ApiClient, ApiError } from "./api.js";
import { markFindings, readDraft, renderProfileForm } from "./profileForm.js";
import { renderRecommendation } from "./recommendationView.js";
import { renderHeatmap } from "./heatmap.js";
import { renderTrialTimeline } from "./trialTimeline.js";
import { renderOverridePicker, renderWhatIfResult, runWhatIf } from "./whatifPanel.js";
import type { Catalog, ProfileDoc, RecommendationDoc } from "./types.js";

interface Session {
  catalog: Catalog;
  profile?: ProfileDoc;
  recommendation?: RecommendationDoc;
}

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function showError(message: string): void {
  const banner = el("error-banner");
  banner.textContent = message;
  banner.style.display = message ? "block" : "none";
}

export async function boot(baseUrl: string = ""): Promise<void> {
  const api = new ApiClient(baseUrl);
  const session: Session = { catalog: await api.getCatalog() };

  renderProfileForm(el("profile-form"), session.catalog, async () => {
    // live partial validation while the clinician types
    const draft = readDraft(el("profile-form"), session.catalog);
    try {
      const report = await api.validateProfile(draft, "partial");
      markFindings(el("profile-form"), report.findings);
    } catch (error) {
      if (!(error instanceof ApiError)) throw error;
    }
  });

  el("recommend-button").addEventListener("click", async () => {
    showError("");
    const draft = readDraft(el("profile-form"), session.catalog);
    try {
      const report = await api.validateProfile(draft, "strict");
      markFindings(el("profile-form"), report.findings);
      if (!report.ok) {
        showError("profile incomplete: fix the highlighted features");
        return;
      }
      session.profile = draft;
      session.recommendation = await api.recommend({ profile: draft });
      renderRecommendation(el("recommendation"), session.catalog,
                           session.recommendation);
      renderOverridePicker(el("whatif-picker"), session.catalog,
        async (feature, code) => {
          if (!session.profile) return;
          try {
            const response = await runWhatIf(api, session.profile, feature, code);
            renderWhatIfResult(el("whatif-result"), session.catalog, response);
          } catch (error) {
            showError(error instanceof ApiError ? error.message : String(error));
          }
        });
    } catch (error) {
      showError(error instanceof ApiError ? error.message : String(error));
    }
  });

  el("load-trial-button").addEventListener("click", async () => {
    showError("");
    const input = el("trial-id") as HTMLInputElement;
    try {
      const trial = await api.getTrial(input.value);
      renderTrialTimeline(el("trial-timeline"), trial);
    } catch (error) {
      showError(error instanceof ApiError ? error.message : String(error));
    }
  });

  el("load-grid-button").addEventListener("click", async () => {
    showError("");
    const input = el("recording-id") as HTMLInputElement;
    try {
      const grid = await api.getRecordingGrid(input.value);
      renderHeatmap(el("pressure-heatmap"), grid.peak_grid,
                    { title: `${grid.label || input.value} (${grid.side})` });
    } catch (error) {
      showError(error instanceof ApiError ? error.message : String(error));
    }
  });
}

declare global {
  interface Window {
    pedocdsBoot: typeof boot;
  }
}

if (typeof window !== "undefined") {
  window.pedocdsBoot = boot;
  if (document.getElementById("profile-form")) {
    boot().catch((error) => showError(String(error)));
  }
}
