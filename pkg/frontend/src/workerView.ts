// Worker flow: guidelines, consent, then the sequential three-step cards.
// The view never advances on its own; every transition round-trips through
// the API and re-renders from the server's prompt, so a refresh resumes
// exactly where the server says the session is.

import { ApiClient, ApiError } from "./api.js";
import { clear, directionFor, el } from "./dom.js";
import type { Guideline, Prompt } from "./types.js";

export class WorkerView {
  session: string | null = null;
  task: string | null = null;
  sourceDir: "rtl" | "ltr" = "ltr";
  targetDir: "rtl" | "ltr" = "ltr";

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private experiment: string,
  ) {}

  private errorBox(): HTMLElement {
    let box = this.root.querySelector<HTMLElement>("[data-testid=error]");
    if (!box) {
      box = el("div", { "data-testid": "error", class: "error", role: "alert" });
      this.root.prepend(box);
    }
    return box;
  }

  private showError(error: unknown): void {
    this.errorBox().textContent =
      error instanceof ApiError ? error.message : String(error);
  }

  private clearError(): void {
    const box = this.root.querySelector("[data-testid=error]");
    if (box) box.textContent = "";
  }

  async start(): Promise<void> {
    const status = await this.api.experimentStatus(this.experiment);
    this.sourceDir = directionFor(status.config.source_language);
    this.targetDir = directionFor(status.config.target_language);
    const tasks = await this.api.tasksFor(this.experiment);
    const guidelines = await this.api.guidelines(this.experiment);
    this.renderTaskChoice(tasks.map((t) => t.task), guidelines);
  }

  private renderTaskChoice(tasks: string[], guidelines: Guideline[]): void {
    clear(this.root);
    const pane = el(
      "section",
      { "data-testid": "guidelines", class: "guidelines" },
      el("h2", {}, "Guidelines"),
      ...guidelines.map((g) =>
        el("details", {}, el("summary", {}, g.tip), el("p", {}, g.answer)),
      ),
    );
    const list = el("ul", { "data-testid": "task-list" });
    for (const task of tasks) {
      list.append(
        el(
          "li",
          {},
          el(
            "button",
            {
              "data-testid": `open-${task}`,
              onclick: () => void this.openTask(task),
            },
            `Start ${task}`,
          ),
        ),
      );
    }
    this.root.append(pane, el("h2", {}, "Your tasks"), list);
    if (tasks.length === 0) {
      this.root.append(el("p", { "data-testid": "no-tasks" }, "No tasks assigned."));
    }
  }

  async openTask(task: string): Promise<void> {
    try {
      const opened = await this.api.openSession(this.experiment, task);
      this.session = opened.session;
      this.task = task;
      this.renderConsent();
    } catch (error) {
      this.showError(error);
    }
  }

  private renderConsent(): void {
    clear(this.root);
    this.root.append(
      el(
        "section",
        { "data-testid": "consent", class: "consent" },
        el("p", {}, "Participation is voluntary and anonymous. You can stop at any time by closing the browser."),
        el(
          "button",
          { "data-testid": "consent-yes", onclick: () => void this.consent(true) },
          "I consent — begin",
        ),
        el(
          "button",
          { "data-testid": "consent-no", onclick: () => void this.consent(false) },
          "I do not consent — withdraw",
        ),
      ),
    );
  }

  async consent(given: boolean): Promise<void> {
    try {
      await this.api.consent(this.experiment, this.session!, given);
      if (!given) {
        clear(this.root);
        this.root.append(
          el("p", { "data-testid": "withdrawn" }, "You have withdrawn. Thank you."),
        );
        return;
      }
      await this.refresh();
    } catch (error) {
      this.showError(error);
    }
  }

  async refresh(): Promise<void> {
    const prompt = await this.api.nextPrompt(this.experiment, this.session!);
    this.renderPrompt(prompt);
  }

  private async submit(payload: Record<string, unknown>): Promise<void> {
    this.clearError();
    try {
      await this.api.submitAnswer(this.experiment, this.session!, payload);
      await this.refresh();
    } catch (error) {
      this.showError(error);
    }
  }

  private progress(prompt: Prompt): HTMLElement {
    return el(
      "p",
      { "data-testid": "progress", class: "progress" },
      `Word ${prompt.position} of ${prompt.of}`,
    );
  }

  renderPrompt(prompt: Prompt): void {
    clear(this.root);
    if (prompt.step === "done") {
      this.root.append(
        el(
          "section",
          { "data-testid": "done" },
          el("h2", {}, "Task complete"),
          el("p", {}, `You answered ${prompt.answered} items. Thank you!`),
        ),
      );
      return;
    }
    if (prompt.step === "step1") this.renderStep1(prompt);
    else if (prompt.step === "step2") this.renderStep2(prompt);
    else this.renderStep3(prompt);
  }

  private renderStep1(prompt: Prompt): void {
    const card = el(
      "section",
      { "data-testid": "step1", class: "card" },
      this.progress(prompt),
      el("h2", { dir: this.sourceDir, "data-testid": "word" }, prompt.word ?? ""),
      el("p", { dir: this.sourceDir, "data-testid": "gloss" }, prompt.gloss ?? ""),
      el("p", {}, prompt.question ?? ""),
      el(
        "div",
        { class: "choices" },
        el(
          "button",
          { "data-testid": "choice-yes", onclick: () => void this.submit({ choice: "yes", item: prompt.item }) },
          "Yes",
        ),
        el(
          "button",
          { "data-testid": "choice-no", onclick: () => void this.submit({ choice: "no", item: prompt.item }) },
          "No",
        ),
        el(
          "button",
          {
            "data-testid": "choice-dont-know",
            onclick: () => void this.submit({ choice: "dont-know", item: prompt.item }),
          },
          "I don't know",
        ),
      ),
    );
    this.root.append(card);
  }

  private renderStep2(prompt: Prompt): void {
    const checkboxes: HTMLInputElement[] = [];
    const list = el("ul", { "data-testid": "candidates", class: "candidates" });
    for (const candidate of prompt.candidates ?? []) {
      const input = el("input", {
        type: "checkbox",
        id: `cand-${candidate.id}`,
        "data-candidate": candidate.id,
      }) as HTMLInputElement;
      input.addEventListener("change", () => {
        submitButton.disabled = !checkboxes.some((c) => c.checked);
      });
      checkboxes.push(input);
      list.append(
        el(
          "li",
          {},
          input,
          el(
            "label",
            { for: `cand-${candidate.id}`, dir: this.targetDir },
            `${candidate.word} — ${candidate.gloss}`,
          ),
        ),
      );
    }
    const submitButton = el(
      "button",
      {
        "data-testid": "step2-submit",
        onclick: () =>
          void this.submit({
            selected: checkboxes.filter((c) => c.checked).map((c) => c.dataset.candidate),
            item: prompt.item,
          }),
      },
      "Submit",
    ) as HTMLButtonElement;
    submitButton.disabled = true; // at least one selection required
    const card = el(
      "section",
      { "data-testid": "step2", class: "card" },
      this.progress(prompt),
      el("p", {}, "Select every word with the same meaning:"),
      list,
      el(
        "div",
        { class: "actions" },
        submitButton,
        el(
          "button",
          { "data-testid": "step2-add-more", onclick: () => void this.submit({ choice: "not-in-list" }) },
          "Add more words",
        ),
        el(
          "button",
          { "data-testid": "step2-back", onclick: () => void this.submit({ choice: "back" }) },
          "Back",
        ),
      ),
    );
    this.root.append(card);
  }

  private renderStep3(prompt: Prompt): void {
    const lemma = el("input", {
      type: "text",
      "data-testid": "new-lemma",
      dir: this.targetDir,
      placeholder: "word",
    }) as HTMLInputElement;
    const gloss = el("input", {
      type: "text",
      "data-testid": "new-gloss",
      dir: this.targetDir,
      placeholder: "definition",
    }) as HTMLInputElement;
    const card = el(
      "section",
      { "data-testid": "step3", class: "card" },
      this.progress(prompt),
      el("p", {}, "Add the missing word and its definition:"),
      lemma,
      gloss,
      el(
        "div",
        { class: "actions" },
        el(
          "button",
          {
            "data-testid": "step3-submit",
            onclick: () =>
              void this.submit({ lemma: lemma.value, gloss: gloss.value, item: prompt.item }),
          },
          "Submit",
        ),
        el(
          "button",
          { "data-testid": "step3-back", onclick: () => void this.submit({ choice: "back" }) },
          "Back",
        ),
      ),
    );
    this.root.append(card);
  }
}
