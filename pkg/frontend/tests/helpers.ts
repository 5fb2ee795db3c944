import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";

import type { Catalog, ProfileDoc, RecommendationDoc } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

/** The real catalog shipped with the engine (console must stay data-driven). */
export function loadCatalog(): Catalog {
  const path = join(here, "..", "..", "src", "pedocds", "data", "catalog.json");
  return JSON.parse(readFileSync(path, "utf-8")) as Catalog;
}

export function loadParticipant1(): ProfileDoc {
  const path = join(here, "..", "..", "src", "pedocds", "data", "profiles",
                    "participant1.json");
  return JSON.parse(readFileSync(path, "utf-8")) as ProfileDoc;
}

/** A recommendation response shaped like the engine's, for view tests. */
export function sampleRecommendation(): RecommendationDoc {
  return {
    prescription: {
      version: 1,
      values: { FWT: ["FWT3"], INST: ["INST2"], FWS: ["FWS1"],
                INSMOD: ["INSMOD1", "INSMOD3"] },
      sources: {
        FWT: { origin: "RULE", rule: "Rule 1" },
        INST: { origin: "RULE", rule: "Rule 2" },
        FWS: { origin: "MODEL", model: "tree:FWS", confidence: 1.0 },
        INSMOD: { origin: "DEFAULT" },
      },
    },
    abstained: ["FWUP", "FWL"],
    trace: {
      entries: {
        FWT: [{ rule: "Rule 1", fired: true, winning: true }],
        INST: [{ rule: "Rule 2", fired: true, winning: true }],
      },
      unresolved: ["FWUP", "FWL", "FWS", "INSMOD"],
    },
  };
}

export function mount(): HTMLElement {
  const root = document.createElement("div");
  document.body.appendChild(root);
  return root;
}
