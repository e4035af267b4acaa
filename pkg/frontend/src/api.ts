// Typed client for the /api/v1 JSON API. The UI owns no state the server
// does not confirm: every mutation returns the server's view, and reads
// always hit the network.

import type {
  CampaignConfig,
  Datasets,
  ExperimentStatus,
  ExperimentSummary,
  Guideline,
  LoginResult,
  Prompt,
  SubmitResult,
  TaskListing,
  ValidationOutcome,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public errorName: string,
    detail: string,
  ) {
    super(`${errorName}: ${detail}`);
  }
}

export class ApiClient {
  token: string | null = null;

  constructor(public baseUrl: string = "") {}

  private headers(extra: Record<string, string> = {}): Record<string, string> {
    const headers: Record<string, string> = { ...extra };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    return headers;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    contentType = "application/json",
  ): Promise<T> {
    const init: RequestInit = { method, headers: this.headers() };
    if (body !== undefined) {
      (init.headers as Record<string, string>)["Content-Type"] = contentType;
      init.body = contentType === "application/json" ? JSON.stringify(body) : String(body);
    }
    const response = await fetch(`${this.baseUrl}/api/v1${path}`, init);
    const text = await response.text();
    if (!response.ok) {
      let name = `HTTP ${response.status}`;
      let detail = text;
      try {
        const parsed = JSON.parse(text);
        name = parsed.error ?? name;
        detail = parsed.detail ?? detail;
      } catch {
        // non-JSON error body; keep raw text
      }
      throw new ApiError(response.status, name, detail);
    }
    const kind = response.headers.get("content-type") ?? "";
    return (kind.includes("application/json") ? JSON.parse(text) : text) as T;
  }

  async login(name: string, adminKey?: string): Promise<LoginResult> {
    const body: Record<string, string> = { name };
    if (adminKey) body["admin_key"] = adminKey;
    const result = await this.request<LoginResult>("POST", "/login", body);
    this.token = result.token;
    return result;
  }

  // ----------------------------------------------------------------- admin

  createExperiment(description: string, config: CampaignConfig) {
    return this.request<{ experiment: string }>("POST", "/experiments", {
      description,
      config,
    });
  }

  listExperiments() {
    return this.request<ExperimentSummary[]>("GET", "/experiments");
  }

  experimentStatus(experiment: string) {
    return this.request<ExperimentStatus>("GET", `/experiments/${experiment}`);
  }

  datasets(experiment: string) {
    return this.request<Datasets>("GET", `/experiments/${experiment}/datasets`);
  }

  uploadCsv(experiment: string, which: "source-dataset" | "target-dataset" | "guidelines" | "acq-bank", csv: string) {
    return this.request<{ rows: number }>(
      "POST",
      `/experiments/${experiment}/${which}`,
      csv,
      "text/csv",
    );
  }

  generateTasks(experiment: string) {
    return this.request<{ tasks: string[] }>("POST", `/experiments/${experiment}/tasks`);
  }

  assignGroup(experiment: string, task: string, workers: string[]) {
    return this.request("POST", `/experiments/${experiment}/tasks/${task}/group`, {
      workers,
    });
  }

  validateTask(experiment: string, task: string, g2: string[], expert = "expert") {
    return this.request<ValidationOutcome>(
      "POST",
      `/experiments/${experiment}/tasks/${task}/validate`,
      { g2, expert },
    );
  }

  downloadExpertSheet(experiment: string, task: string, seed = 0) {
    return this.request<string>(
      "GET",
      `/experiments/${experiment}/tasks/${task}/expert-sheet?seed=${seed}`,
    );
  }

  uploadExpertSheet(experiment: string, task: string, csv: string) {
    return this.request(
      "POST",
      `/experiments/${experiment}/tasks/${task}/expert-sheet`,
      csv,
      "text/csv",
    );
  }

  closeExperiment(experiment: string) {
    return this.request<{ experiment: string; state: string }>(
      "POST",
      `/experiments/${experiment}/close`,
    );
  }

  report(experiment: string) {
    return this.request<string>("GET", `/experiments/${experiment}/report`);
  }

  // ---------------------------------------------------------------- worker

  guidelines(experiment: string) {
    return this.request<Guideline[]>("GET", `/experiments/${experiment}/guidelines`);
  }

  tasksFor(experiment: string) {
    return this.request<TaskListing[]>("GET", `/experiments/${experiment}/tasks`);
  }

  openSession(experiment: string, task: string) {
    return this.request<{ session: string }>(
      "POST",
      `/experiments/${experiment}/tasks/${task}/session`,
    );
  }

  consent(experiment: string, session: string, given: boolean) {
    return this.request("POST", `/experiments/${experiment}/sessions/${session}/consent`, {
      given,
    });
  }

  nextPrompt(experiment: string, session: string) {
    return this.request<Prompt>(
      "GET",
      `/experiments/${experiment}/sessions/${session}/next`,
    );
  }

  submitAnswer(experiment: string, session: string, payload: Record<string, unknown>) {
    return this.request<SubmitResult>(
      "POST",
      `/experiments/${experiment}/sessions/${session}/answer`,
      payload,
    );
  }
}
