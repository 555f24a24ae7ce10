// Wire types for the /api/v1 endpoints.

export interface FeatureInfo {
  id: string;
  name: string;
  parent: string | null;
  mandatory: boolean;
  children: string[];
}

export interface GroupInfo {
  parent: string;
  kind: "alternative" | "or";
  members: string[];
}

export interface AttributeInfo {
  owner: string;
  name: string;
  kind: "text" | "number" | "enum";
  required: boolean;
  choices: string[];
}

export interface ConstraintInfo {
  kind: "requires" | "excludes";
  a: string;
  b: string;
  message: string;
}

export interface WorkflowModel {
  root: string;
  features: FeatureInfo[];
  groups: GroupInfo[];
  attributes: AttributeInfo[];
  constraints: ConstraintInfo[];
}

export interface QuestionInfo {
  id: string;
  text: string;
  options: string[];
  required?: boolean;
  required_when?: Record<string, string[]>;
  default?: string;
}

export interface QuestionnaireSchema {
  version: number;
  questions: QuestionInfo[];
  rules: { when: Record<string, string[]>; recommend: string[] }[];
}

export interface FeatureModelResponse {
  document: string;
  model: WorkflowModel;
  questionnaire: QuestionnaireSchema;
}

export type FeatureStatus = "selected" | "implied" | "disabled" | "free";

export interface ValidateResponse {
  features: Record<string, { status: FeatureStatus; reason?: string }>;
  configuration: { valid: boolean; violations: string[] };
}

export interface JobStatus {
  state: "queued" | "running" | "done" | "failed";
  percentage: number;
  message?: string;
}

export interface MetricCell {
  mean: number | null;
  std: number | null;
  goodness: number | null;
}

export interface ResultRow {
  scaler: string;
  model: string;
  method: string;
  failed: boolean;
  failure: string | null;
  score: number | null;
  cells: Record<string, MetricCell>;
}

export interface CombinationRef {
  scaler: string;
  model: string;
  method: string;
}

export interface ResultDocument {
  metrics: string[];
  rows: ResultRow[];
  best: CombinationRef;
  front: CombinationRef[];
  flags: string[];
}
