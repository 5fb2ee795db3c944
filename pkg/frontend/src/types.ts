/** JSON shapes served by the prescription engine's HTTP API. */

export interface CodeDef {
  code: string;
  description: string;
}

export interface FeatureDef {
  id: string;
  name: string;
  kind: "input" | "output";
  group: "person" | "diagnosis" | "fund" | "footwear" | "insole" | "evaluation";
  multivalued: boolean;
  codes: CodeDef[];
}

export interface Catalog {
  version: string;
  features: FeatureDef[];
}

export interface ProfileDoc {
  patient_id: string;
  values: Record<string, string[]>;
  laterality?: Record<string, string>;
  free_notes?: string;
}

export interface Finding {
  severity: "error" | "warning" | "advisory";
  code: string;
  message: string;
  feature?: string;
}

export interface ValidationReportDoc {
  ok: boolean;
  findings: Finding[];
}

export interface DecisionSourceDoc {
  origin: "RULE" | "MODEL" | "DEFAULT" | "CLINICIAN";
  rule?: string;
  model?: string;
  confidence?: number;
  timestamp?: string;
}

export interface PrescriptionDoc {
  version: number;
  values: Record<string, string[]>;
  sources: Record<string, DecisionSourceDoc>;
}

export interface TraceEntryDoc {
  rule: string;
  fired: boolean;
  winning: boolean;
}

export interface TraceDoc {
  entries: Record<string, TraceEntryDoc[]>;
  unresolved: string[];
}

export interface RecommendationDoc {
  prescription: PrescriptionDoc;
  abstained: string[];
  trace: TraceDoc;
}

export interface DiffSide {
  codes: string[];
  origin: string;
}

export interface DiffEntry {
  changed: boolean;
  before: DiffSide;
  after: DiffSide;
}

export interface WhatIfResponse {
  recommendation: RecommendationDoc;
  diff: Record<string, DiffEntry>;
}

export interface ZoneComparisonDoc {
  zone: string;
  ppp_baseline_kpa: number;
  ppp_intervention_kpa: number;
  ppp_reduction_pct: number | "n/a";
  pti_baseline_kpas: number;
  pti_intervention_kpas: number;
  pti_reduction_pct: number | "n/a";
  contact_area_baseline_cm2: number;
  contact_area_intervention_cm2: number;
  met: boolean;
}

export interface OffloadReportDoc {
  target: { ppp_max_kpa: number | null; reduction_min_pct: number | null };
  all_met: boolean;
  zones: ZoneComparisonDoc[];
}

export interface VisitDoc {
  label: string;
  date: string;
  satisfaction: number;
  adherence?: {
    worn_hours: number;
    ambulatory_hours: number;
    ratio: number;
    goal_met: boolean;
  };
  notes?: string;
}

export interface TrialStateDoc {
  phase: "baseline" | "fitted" | "mod_round" | "closed";
  round: number;
  closed_reason: string | null;
  prescription_versions: unknown[];
  evaluations: unknown[];
  visits: VisitDoc[];
}

export interface TrialDoc {
  id: string;
  version: number;
  state: TrialStateDoc;
  events?: { event: string; payload: unknown; timestamp: string }[];
}

export interface PeakGridDoc {
  rows: number;
  cols: number;
  cell_area_cm2: number;
  peak_grid: number[][];
  side: string;
  label: string;
}
