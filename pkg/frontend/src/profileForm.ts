/** Catalog-driven profile entry form.
 *
 * One section per input group; single-valued features render as selects
 * (a second code is structurally impossible), multivalued features as
 * checkbox lists.  Nothing here is hard-coded to specific features: adding
 * a code to the catalog file shows up without console changes.
 */

import type { Catalog, FeatureDef, Finding, ProfileDoc } from "./types.js";

const GROUP_LABELS: Record<string, string> = {
  person: "Person-centric data",
  diagnosis: "Diagnosis related data",
  fund: "Fund data",
};

export function inputGroups(catalog: Catalog): Map<string, FeatureDef[]> {
  const groups = new Map<string, FeatureDef[]>();
  for (const feature of catalog.features) {
    if (feature.kind !== "input") continue;
    const bucket = groups.get(feature.group) ?? [];
    bucket.push(feature);
    groups.set(feature.group, bucket);
  }
  return groups;
}

export function renderProfileForm(root: HTMLElement, catalog: Catalog,
                                  onChange?: () => void): void {
  root.innerHTML = "";
  const form = document.createElement("form");
  form.className = "profile-form";
  form.addEventListener("submit", (e) => e.preventDefault());

  const idRow = document.createElement("label");
  idRow.className = "patient-id-row";
  idRow.textContent = "Patient id ";
  const idInput = document.createElement("input");
  idInput.name = "patient_id";
  idInput.type = "text";
  idRow.appendChild(idInput);
  form.appendChild(idRow);

  for (const [group, features] of inputGroups(catalog)) {
    const section = document.createElement("fieldset");
    section.dataset.group = group;
    const legend = document.createElement("legend");
    legend.textContent = GROUP_LABELS[group] ?? group;
    section.appendChild(legend);

    for (const feature of features) {
      const row = document.createElement("div");
      row.className = "feature-row";
      row.dataset.feature = feature.id;

      const label = document.createElement("label");
      label.textContent = `${feature.name} (${feature.id})`;
      row.appendChild(label);

      if (feature.multivalued) {
        const list = document.createElement("div");
        list.className = "code-checkboxes";
        for (const code of feature.codes) {
          const item = document.createElement("label");
          item.className = "code-option";
          const box = document.createElement("input");
          box.type = "checkbox";
          box.name = feature.id;
          box.value = code.code;
          box.addEventListener("change", () => onChange?.());
          item.appendChild(box);
          item.appendChild(document.createTextNode(` ${code.code} — ${code.description}`));
          list.appendChild(item);
        }
        row.appendChild(list);
      } else {
        const select = document.createElement("select");
        select.name = feature.id;
        const blank = document.createElement("option");
        blank.value = "";
        blank.textContent = "— not set —";
        select.appendChild(blank);
        for (const code of feature.codes) {
          const option = document.createElement("option");
          option.value = code.code;
          option.textContent = `${code.code} — ${code.description}`;
          select.appendChild(option);
        }
        select.addEventListener("change", () => onChange?.());
        row.appendChild(select);
      }

      const message = document.createElement("div");
      message.className = "finding-message";
      row.appendChild(message);
      section.appendChild(row);
    }
    form.appendChild(section);
  }
  root.appendChild(form);
}

export function readDraft(root: HTMLElement, catalog: Catalog): ProfileDoc {
  const values: Record<string, string[]> = {};
  for (const feature of catalog.features) {
    if (feature.kind !== "input") continue;
    if (feature.multivalued) {
      const checked = root.querySelectorAll<HTMLInputElement>(
        `input[name="${feature.id}"]:checked`);
      const codes = Array.from(checked, (box) => box.value);
      if (codes.length) values[feature.id] = codes.sort();
    } else {
      const select = root.querySelector<HTMLSelectElement>(
        `select[name="${feature.id}"]`);
      if (select && select.value) values[feature.id] = [select.value];
    }
  }
  const idInput = root.querySelector<HTMLInputElement>('input[name="patient_id"]');
  return { patient_id: idInput?.value ?? "", values };
}

export function setDraft(root: HTMLElement, catalog: Catalog, profile: ProfileDoc): void {
  const idInput = root.querySelector<HTMLInputElement>('input[name="patient_id"]');
  if (idInput) idInput.value = profile.patient_id ?? "";
  for (const feature of catalog.features) {
    if (feature.kind !== "input") continue;
    const codes = profile.values[feature.id] ?? [];
    if (feature.multivalued) {
      for (const box of root.querySelectorAll<HTMLInputElement>(
          `input[name="${feature.id}"]`)) {
        box.checked = codes.includes(box.value);
      }
    } else {
      const select = root.querySelector<HTMLSelectElement>(
        `select[name="${feature.id}"]`);
      if (select) select.value = codes[0] ?? "";
    }
  }
}

/** Show server-side validation findings inline under their feature rows. */
export function markFindings(root: HTMLElement, findings: Finding[]): void {
  for (const message of root.querySelectorAll<HTMLElement>(".finding-message")) {
    message.textContent = "";
    message.classList.remove("error", "warning", "advisory");
  }
  for (const finding of findings) {
    if (!finding.feature) continue;
    const row = root.querySelector<HTMLElement>(
      `.feature-row[data-feature="${finding.feature}"] .finding-message`);
    if (row) {
      row.textContent = finding.message;
      row.classList.add(finding.severity);
    }
  }
}
