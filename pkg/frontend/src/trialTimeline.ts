/** N-of-1 trial timeline: visit cards, round counter, adherence gauge. */

import type { TrialDoc, VisitDoc } from "./types.js";

export const MAX_ROUNDS = 3;
export const ADHERENCE_GOAL = 0.8;

function describePhase(trial: TrialDoc): string {
  const state = trial.state;
  if (state.phase === "mod_round") return `Modification round ${state.round}`;
  if (state.phase === "closed") return `Closed (${state.closed_reason})`;
  return state.phase === "baseline" ? "Baseline (T0)" : "Fitted (T1)";
}

function visitCard(visit: VisitDoc): HTMLElement {
  const card = document.createElement("div");
  card.className = "visit-card";
  card.dataset.label = visit.label;
  const heading = document.createElement("h4");
  heading.textContent = `${visit.label} — ${visit.date}`;
  card.appendChild(heading);
  const satisfaction = document.createElement("div");
  satisfaction.textContent = `satisfaction ${visit.satisfaction}/5`;
  card.appendChild(satisfaction);
  if (visit.adherence) {
    const gauge = document.createElement("div");
    gauge.className = "adherence-gauge";
    const pct = Math.round(visit.adherence.ratio * 1000) / 10;
    const bar = document.createElement("div");
    bar.className = "adherence-bar " +
      (visit.adherence.goal_met ? "goal-met" : "goal-not-met");
    bar.style.width = `${Math.min(100, pct)}%`;
    bar.dataset.ratio = String(visit.adherence.ratio);
    gauge.appendChild(bar);
    const label = document.createElement("span");
    label.textContent = `worn ${pct}% of ambulatory time ` +
      `(goal >${ADHERENCE_GOAL * 100}%: ${visit.adherence.goal_met ? "met" : "not met"})`;
    gauge.appendChild(label);
    card.appendChild(gauge);
  }
  return card;
}

export interface TimelineOptions {
  onModify?: () => void;
}

export function renderTrialTimeline(root: HTMLElement, trial: TrialDoc,
                                    options: TimelineOptions = {}): void {
  root.innerHTML = "";
  const container = document.createElement("div");
  container.className = "trial-timeline";
  if (trial.state.phase === "closed") container.classList.add("readonly");

  const status = document.createElement("div");
  status.className = "trial-status";
  status.textContent = `Trial ${trial.id}: ${describePhase(trial)}`;
  container.appendChild(status);

  const rounds = document.createElement("div");
  rounds.className = "round-counter";
  rounds.textContent = `modification rounds used: ${trial.state.round}/${MAX_ROUNDS}`;
  container.appendChild(rounds);

  const visits = document.createElement("div");
  visits.className = "visits";
  for (const visit of trial.state.visits) {
    visits.appendChild(visitCard(visit));
  }
  container.appendChild(visits);

  const modify = document.createElement("button");
  modify.className = "modify-button";
  modify.textContent = "record modification";
  const exhausted = trial.state.round >= MAX_ROUNDS;
  modify.disabled = trial.state.phase === "closed" || exhausted
    || trial.state.phase === "baseline";
  if (options.onModify && !modify.disabled) {
    modify.addEventListener("click", options.onModify);
  }
  container.appendChild(modify);

  const heatmaps = document.createElement("div");
  heatmaps.className = "pressure-slots";
  heatmaps.dataset.rounds = String(trial.state.round);
  container.appendChild(heatmaps);

  root.appendChild(container);
}
