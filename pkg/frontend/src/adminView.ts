// Requester console: create an experiment, upload the word lists and
// guidelines, generate and steer tasks, watch per-task agreement and
// counts, and close the campaign. Every number shown is read back from the
// API after the action that changed it.

import { ApiClient, ApiError } from "./api.js";
import { clear, el } from "./dom.js";
import type { ExperimentStatus } from "./types.js";

export class AdminView {
  experiment: string | null = null;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
  ) {}

  private showError(error: unknown): void {
    const box = this.root.querySelector<HTMLElement>("[data-testid=admin-error]");
    if (box) box.textContent = error instanceof ApiError ? error.message : String(error);
  }

  render(): void {
    clear(this.root);
    this.root.append(
      el("div", { "data-testid": "admin-error", class: "error", role: "alert" }),
      this.renderCreateForm(),
      el("section", { "data-testid": "experiment-panel" }),
    );
  }

  private field(testId: string, label: string, value = ""): HTMLElement {
    const input = el("input", { type: "text", "data-testid": testId }) as HTMLInputElement;
    input.value = value;
    return el("label", { class: "field" }, `${label} `, input);
  }

  private value(testId: string): string {
    return (this.root.querySelector(`[data-testid=${testId}]`) as HTMLInputElement).value;
  }

  private renderCreateForm(): HTMLElement {
    return el(
      "form",
      {
        "data-testid": "experiment-form",
        onsubmit: (event: Event) => {
          event.preventDefault();
          void this.create();
        },
      },
      el("h2", {}, "New experiment"),
      this.field("form-description", "Description"),
      this.field("form-date", "Date"),
      this.field("form-source-language", "Source language", "eng"),
      this.field("form-target-language", "Target language", "arb"),
      this.field("form-field", "Semantic field", "food"),
      this.field("form-questions", "Questions per task", "35"),
      this.field("form-acqs", "Attention checks per task", "3"),
      this.field("form-threshold", "Agreement threshold", "0.70"),
      el("button", { type: "submit", "data-testid": "create-experiment" }, "Create"),
    );
  }

  async create(): Promise<void> {
    try {
      const date = this.value("form-date");
      const description = date
        ? `${this.value("form-description")} (${date})`
        : this.value("form-description");
      const created = await this.api.createExperiment(description, {
        source_language: this.value("form-source-language"),
        target_language: this.value("form-target-language"),
        semantic_field: this.value("form-field"),
        questions_per_task: Number(this.value("form-questions")),
        acqs_per_task: Number(this.value("form-acqs")),
        alpha_threshold: Number(this.value("form-threshold")),
      });
      this.experiment = created.experiment;
      await this.refresh();
    } catch (error) {
      this.showError(error);
    }
  }

  async refresh(): Promise<void> {
    if (!this.experiment) return;
    const status = await this.api.experimentStatus(this.experiment);
    await this.renderExperiment(status);
  }

  private uploadBox(
    testId: string,
    label: string,
    which: "source-dataset" | "target-dataset" | "guidelines" | "acq-bank",
  ): HTMLElement {
    const area = el("textarea", { "data-testid": `${testId}-text`, rows: "4" }) as HTMLTextAreaElement;
    return el(
      "div",
      { class: "upload" },
      el("h3", {}, label),
      area,
      el(
        "button",
        {
          "data-testid": `${testId}-upload`,
          onclick: () => void this.upload(which, area.value),
        },
        `Upload ${label.toLowerCase()}`,
      ),
    );
  }

  async upload(
    which: "source-dataset" | "target-dataset" | "guidelines" | "acq-bank",
    csv: string,
  ): Promise<void> {
    try {
      await this.api.uploadCsv(this.experiment!, which, csv);
      await this.refresh();
    } catch (error) {
      this.showError(error);
    }
  }

  private async renderExperiment(status: ExperimentStatus): Promise<void> {
    const panel = this.root.querySelector<HTMLElement>("[data-testid=experiment-panel]")!;
    clear(panel);
    panel.append(
      el(
        "h2",
        { "data-testid": "experiment-title" },
        `${status.experiment}: ${status.description} [${status.state}]`,
      ),
      el(
        "p",
        { "data-testid": "dataset-counts" },
        `Source words: ${status.source_rows} / Target words: ${status.target_rows}`,
      ),
    );
    if (status.state === "draft") {
      panel.append(
        this.uploadBox("source", "Source words", "source-dataset"),
        this.uploadBox("target", "Target words", "target-dataset"),
        this.uploadBox("guidelines", "Guidelines", "guidelines"),
        this.uploadBox("acq", "Attention checks", "acq-bank"),
      );
      const ready = status.source_rows > 0 && status.target_rows > 0;
      const generate = el(
        "button",
        { "data-testid": "generate-tasks", onclick: () => void this.generate() },
        "Generate tasks",
      ) as HTMLButtonElement;
      generate.disabled = !ready; // invariant: no tasks before datasets
      panel.append(generate);
    }
    if (status.source_rows > 0) {
      await this.renderWordTable(panel);
    }
    if (status.tasks.length > 0) {
      panel.append(this.renderTaskTable(status));
    }
    if (status.state !== "closed" && status.tasks.length > 0) {
      panel.append(
        el(
          "button",
          { "data-testid": "close-experiment", onclick: () => void this.close() },
          "Close experiment",
        ),
      );
    }
    if (status.state === "closed") {
      panel.append(
        el("section", { "data-testid": "report-panel" }),
      );
      await this.renderReport();
    }
  }

  private async renderWordTable(panel: HTMLElement): Promise<void> {
    try {
      const datasets = await this.api.datasets(this.experiment!);
      const table = el("table", { "data-testid": "source-words" });
      table.append(
        el("tr", {}, el("th", {}, "#"), el("th", {}, "Word"), el("th", {}, "Gloss")),
      );
      datasets.source.forEach(([word, gloss], index) => {
        table.append(
          el(
            "tr",
            {},
            el("td", { class: "word-number" }, String(index + 1)),
            el("td", {}, word),
            el("td", {}, gloss),
          ),
        );
      });
      panel.append(el("h3", {}, "Source words"), table);
    } catch (error) {
      this.showError(error);
    }
  }

  private renderTaskTable(status: ExperimentStatus): HTMLElement {
    const table = el("table", { "data-testid": "task-table" });
    table.append(
      el(
        "tr",
        {},
        ...["Task", "Questions", "Group", "Answers", "Alpha", "Validated", "Expert queue",
            "Gaps", "Words", "New words"].map((h) => el("th", {}, h)),
      ),
    );
    for (const task of status.tasks) {
      const groupInput = el("input", {
        type: "text",
        "data-testid": `group-${task.task}`,
        placeholder: "w1,w2,w3",
      }) as HTMLInputElement;
      groupInput.value = task.assigned_group.join(",");
      const replacementsInput = el("input", {
        type: "text",
        "data-testid": `g2-${task.task}`,
        placeholder: "replacement workers",
      }) as HTMLInputElement;
      table.append(
        el(
          "tr",
          { "data-testid": `task-row-${task.task}` },
          el("td", {}, task.task),
          el("td", { "data-testid": `questions-${task.task}` }, String(task.questions)),
          el(
            "td",
            {},
            groupInput,
            el(
              "button",
              {
                "data-testid": `assign-${task.task}`,
                onclick: () =>
                  void this.assign(task.task, groupInput.value.split(",").map((w) => w.trim()).filter(Boolean)),
              },
              "Assign",
            ),
          ),
          el("td", { "data-testid": `answers-${task.task}` }, String(task.answers)),
          el(
            "td",
            { "data-testid": `alpha-${task.task}` },
            task.alpha === null ? "—" : task.alpha.toFixed(2),
          ),
          el(
            "td",
            { "data-testid": `validated-${task.task}` },
            replacementsInput,
            el(
              "button",
              {
                "data-testid": `validate-${task.task}`,
                onclick: () =>
                  void this.validate(
                    task.task,
                    replacementsInput.value.split(",").map((w) => w.trim()).filter(Boolean),
                  ),
              },
              task.validated ? "Re-validate" : "Validate",
            ),
            task.validated ? " done" : " pending",
          ),
          el("td", { "data-testid": `queue-${task.task}` }, String(task.expert_queue)),
          el("td", { "data-testid": `gaps-${task.task}` }, String(task.gaps)),
          el("td", { "data-testid": `words-${task.task}` }, String(task.words)),
          el("td", { "data-testid": `new-${task.task}` }, String(task.new_words)),
        ),
      );
    }
    return table;
  }

  async generate(): Promise<void> {
    try {
      await this.api.generateTasks(this.experiment!);
      await this.refresh();
    } catch (error) {
      this.showError(error);
    }
  }

  async assign(task: string, workers: string[]): Promise<void> {
    try {
      await this.api.assignGroup(this.experiment!, task, workers);
      await this.refresh();
    } catch (error) {
      this.showError(error);
    }
  }

  async validate(task: string, replacements: string[]): Promise<void> {
    try {
      const outcome = await this.api.validateTask(this.experiment!, task, replacements);
      if (outcome.status === "awaiting") {
        this.showError(
          new ApiError(202, "AwaitingResponses",
            `re-run needed from ${outcome.participants?.join(", ")}`),
        );
      }
      await this.refresh();
    } catch (error) {
      this.showError(error);
    }
  }

  async close(): Promise<void> {
    try {
      await this.api.closeExperiment(this.experiment!);
      await this.refresh();
    } catch (error) {
      this.showError(error);
    }
  }

  private async renderReport(): Promise<void> {
    try {
      const csv = await this.api.report(this.experiment!);
      const panel = this.root.querySelector<HTMLElement>("[data-testid=report-panel]")!;
      clear(panel);
      const table = el("table", { "data-testid": "report-table" });
      for (const line of csv.trim().split("\n")) {
        table.append(
          el("tr", {}, ...line.split(",").map((cell) => el("td", {}, cell))),
        );
      }
      panel.append(el("h3", {}, "Report"), table);
    } catch (error) {
      this.showError(error);
    }
  }
}
