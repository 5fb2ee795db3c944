/** Source-annotated prescription table with expandable rule traces. */

import type { Catalog, DecisionSourceDoc, DiffEntry, RecommendationDoc } from "./types.js";

const OUTPUT_GROUP_LABELS: Record<string, string> = {
  footwear: "Footwear design and modification",
  insole: "Insole design and modification",
  evaluation: "Pressure offloading evaluation",
};

function describeSource(source: DecisionSourceDoc | undefined): string {
  if (!source) return "unresolved";
  switch (source.origin) {
    case "RULE":
      return `RULE ${source.rule ?? ""}`.trim();
    case "MODEL":
      return `MODEL ${(source.confidence ?? 0).toFixed(2)}`;
    default:
      return source.origin;
  }
}

function traceText(rec: RecommendationDoc, featureId: string): string {
  const entries = rec.trace.entries[featureId] ?? [];
  const lines = entries.map((entry) => {
    const status = entry.winning ? "winning" : entry.fired ? "fired" : "did not fire";
    return `rule ${entry.rule}: ${status}`;
  });
  if (rec.trace.unresolved.includes(featureId)) {
    lines.push(entries.length
      ? "unresolved: no rule fired"
      : "unresolved: no rule concludes this feature");
  }
  return lines.join("\n");
}

export function renderRecommendation(root: HTMLElement, catalog: Catalog,
                                     rec: RecommendationDoc,
                                     diff?: Record<string, DiffEntry>): void {
  root.innerHTML = "";
  const table = document.createElement("table");
  table.className = "recommendation";

  let currentGroup = "";
  for (const feature of catalog.features) {
    if (feature.kind !== "output") continue;
    if (feature.group !== currentGroup) {
      currentGroup = feature.group;
      const headerRow = document.createElement("tr");
      headerRow.className = "group-header";
      const cell = document.createElement("th");
      cell.colSpan = 4;
      cell.textContent = OUTPUT_GROUP_LABELS[currentGroup] ?? currentGroup;
      headerRow.appendChild(cell);
      table.appendChild(headerRow);
    }

    const row = document.createElement("tr");
    row.className = "feature";
    row.dataset.feature = feature.id;

    const name = document.createElement("td");
    name.textContent = `${feature.name} (${feature.id})`;
    row.appendChild(name);

    const codes = rec.prescription.values[feature.id] ?? [];
    const value = document.createElement("td");
    value.className = "codes";
    if (codes.length) {
      const descriptions = codes.map((code) => {
        const def = feature.codes.find((c) => c.code === code);
        return def ? `${code} — ${def.description}` : code;
      });
      value.textContent = descriptions.join("; ");
    } else {
      value.textContent = "—";
    }
    row.appendChild(value);

    const badgeCell = document.createElement("td");
    const badge = document.createElement("span");
    const source = rec.prescription.sources[feature.id];
    const origin = source?.origin ?? "abstained";
    badge.className = `badge origin-${origin.toLowerCase()}`;
    badge.textContent = describeSource(source);
    badgeCell.appendChild(badge);
    row.appendChild(badgeCell);

    const explainCell = document.createElement("td");
    const details = document.createElement("details");
    const summary = document.createElement("summary");
    summary.textContent = "explain";
    details.appendChild(summary);
    const pre = document.createElement("pre");
    pre.className = "trace";
    pre.textContent = traceText(rec, feature.id) || "no rules reference this feature";
    details.appendChild(pre);
    explainCell.appendChild(details);
    row.appendChild(explainCell);

    const entry = diff?.[feature.id];
    if (entry?.changed) {
      row.classList.add("changed");
      const note = document.createElement("div");
      note.className = "diff-note";
      note.textContent =
        `was ${entry.before.codes.join("+") || "—"} [${entry.before.origin}] → ` +
        `now ${entry.after.codes.join("+") || "—"} [${entry.after.origin}]`;
      value.appendChild(note);
    }

    table.appendChild(row);
  }
  root.appendChild(table);
}
