/** Payload shapes of the conceptscope HTTP API (schema_version 1). */

export interface DatasetDoc {
  schema_version: number;
  feature_names: string[];
  features: number[][];
  labels: number[];
  ground_truth?: CatalogDoc | null;
}

export interface CatalogDoc {
  concepts: { name: string; values: number[] }[];
  valid_combinations: number[][];
  min_concepts: number;
}

export interface DatasetSummary {
  id: string;
  n_points: number;
  n_features: number;
  feature_names: string[];
  has_ground_truth: boolean;
}

export interface Job {
  id: string;
  kind: string;
  state: "queued" | "running" | "done" | "failed";
  progress: number;
  result_ref: string | null;
  error: string | null;
}

export interface RunDoc {
  dataset_id: string;
  pool_id: string;
  proposals_id?: string;
  report_id?: string;
}

export interface ConceptF1 {
  concept: number;
  f1: number;
  negated: boolean;
  matched: boolean;
}

export interface GalleryMember {
  rank: number;
  member_index: number;
  origin: [number, number];
  accuracy: number;
  boundaries: number[][] | null;
  weight_profiles: number[][];
  bias_profile: number[];
  concept_f1: (ConceptF1 | null)[];
  firing_rates: number[];
  activations: number[][];
}

export interface Gallery {
  schema_version: number;
  dataset_id: string;
  pool_id: string;
  selection: { method: string; metric: string; M: number; seed: number };
  singles: boolean;
  pinned_column: number | null;
  members: GalleryMember[];
}

export interface Report {
  mode: string;
  explanations_found: number[];
  concepts_found: number[];
  min_M: number | null;
  found: string;
  n_proposals: number;
}

export interface Pin {
  column_index: number;
  label: string;
}

export interface Session {
  id: string;
  dataset_id: string;
  pins: Pin[];
  jobs: string[];
}
