// Payload shapes of the /api/v1 JSON API.

export interface LoginResult {
  token: string;
  worker: string;
  role: "admin" | "worker";
}

export interface CampaignConfig {
  source_language: string;
  target_language: string;
  semantic_field: string;
  questions_per_task?: number;
  acqs_per_task?: number;
  time_budget_minutes?: number;
  alpha_threshold?: number;
  acq_pass_rate?: number;
  sanity_rate?: number;
  outlier_low_ratio?: number;
  outlier_high_ratio?: number;
  shuffle_seed?: number | null;
}

export interface ExperimentSummary {
  experiment: string;
  description: string;
  state: string;
  source_rows: number;
  target_rows: number;
  tasks: number;
}

export interface TaskStatus {
  task: string;
  items: number;
  questions: number;
  assigned_group: string[];
  answers: number;
  alpha: number | null;
  validated: boolean;
  expert_queue: number;
  gaps: number;
  words: number;
  new_words: number;
}

export interface ExperimentStatus {
  experiment: string;
  description: string;
  config: CampaignConfig;
  state: string;
  source_rows: number;
  target_rows: number;
  tasks: TaskStatus[];
}

export interface TaskListing {
  task: string;
  items: number;
  assigned_group: string[];
}

export interface Guideline {
  tip: string;
  answer: string;
}

export interface Candidate {
  id: string;
  word: string;
  gloss: string;
}

export interface Prompt {
  step: "step1" | "step2" | "step3" | "done";
  item?: string;
  position?: number;
  of?: number;
  word?: string;
  gloss?: string;
  question?: string;
  choices?: string[];
  candidates?: Candidate[];
  actions?: string[];
  form?: string[];
  answered?: number;
  task?: string;
}

export interface SubmitResult {
  stored: boolean;
  step?: string;
  item?: string;
  next_step?: string;
  duplicate?: boolean;
}

export interface ValidationOutcome {
  status: "validated" | "awaiting";
  task: string;
  participants?: string[];
  high_quality?: string[];
  low_quality?: string[];
  passing_alpha?: number | null;
  expert_queue?: string[];
  queued_in_full?: boolean;
}

export interface Datasets {
  source: [string, string][];
  target: [string, string][];
}
