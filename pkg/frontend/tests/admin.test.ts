// Scripted admin flow against the real API: create an experiment from the
// form, upload datasets and guidelines, generate tasks (button gated on
// uploads), monitor counts and agreement, close, and read the report —
// asserting at each step that the UI shows exactly what the API reports.

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { AdminView } from "../src/adminView.js";
import { startApi, waitFor, click, byTestId, type ApiServer } from "./server.js";

let server: ApiServer;

beforeAll(async () => {
  server = await startApi();
});

afterAll(() => server.stop());

function setValue(root: HTMLElement, testId: string, value: string): void {
  const input = root.querySelector<HTMLInputElement | HTMLTextAreaElement>(
    `[data-testid=${JSON.stringify(testId)}]`,
  );
  if (!input) throw new Error(`no input ${testId}`);
  input.value = value;
}

const SOURCE = "word,gloss\n" + [...Array(6)].map((_, i) => `sw${i + 1},meaning ${i + 1}`).join("\n");
const TARGET = "word,gloss\ntw1,target one\ntw2,target two";

describe("requester console", () => {
  it("creates, monitors, and closes a campaign with UI == API", async () => {
    document.body.innerHTML = '<div id="app"></div>';
    const root = document.getElementById("app")!;
    const api = new ApiClient(server.baseUrl);
    await api.login("boss", "sesame");
    const view = new AdminView(root, api);
    view.render();

    // experiment form (description, languages, date)
    setValue(root, "form-description", "food pilot");
    setValue(root, "form-date", "2026-08-09");
    setValue(root, "form-source-language", "eng");
    setValue(root, "form-target-language", "arb");
    setValue(root, "form-field", "food");
    setValue(root, "form-questions", "6");
    setValue(root, "form-acqs", "0");
    click(root, "create-experiment");
    await waitFor(() => byTestId(root, "experiment-title"), "experiment panel");
    expect(byTestId(root, "experiment-title")!.textContent).toContain("food pilot (2026-08-09)");
    expect(byTestId(root, "experiment-title")!.textContent).toContain("[draft]");

    // task generation is disabled until both datasets are uploaded
    expect((byTestId(root, "generate-tasks") as HTMLButtonElement).disabled).toBe(true);

    setValue(root, "source-text", SOURCE);
    click(root, "source-upload");
    await waitFor(
      () => byTestId(root, "dataset-counts")?.textContent?.includes("Source words: 6"),
      "source count",
    );
    expect((byTestId(root, "generate-tasks") as HTMLButtonElement).disabled).toBe(true);
    setValue(root, "target-text", TARGET);
    click(root, "target-upload");
    await waitFor(
      () => byTestId(root, "dataset-counts")?.textContent?.includes("Target words: 2"),
      "target count",
    );
    setValue(root, "guidelines-text", "tip,answer\nWhat?,Compare words.\n");
    click(root, "guidelines-upload");
    // wait for the upload to land server-side before generating
    for (let attempt = 0; attempt < 100; attempt++) {
      const rows = await api.guidelines(view.experiment!).catch(() => []);
      if (rows.length > 0) break;
      await new Promise((resolve) => setTimeout(resolve, 50));
    }
    await waitFor(() => !(byTestId(root, "generate-tasks") as HTMLButtonElement).disabled,
      "generate enabled");

    // numbered source word table (word-number column)
    const numbers = await waitFor(() => {
      const cells = [...root.querySelectorAll("[data-testid=source-words] .word-number")];
      return cells.length === 6 ? cells.map((cell) => cell.textContent) : null;
    }, "numbered word table");
    expect(numbers).toEqual(["1", "2", "3", "4", "5", "6"]);

    click(root, "generate-tasks");
    await waitFor(() => byTestId(root, "task-table"), "task table");
    const status = await api.experimentStatus(view.experiment!);
    expect(status.tasks.length).toBe(1);
    expect(byTestId(root, "questions-task1")!.textContent).toBe(String(status.tasks[0].questions));

    // assign a group from the table
    setValue(root, "group-task1", "w1,w2");
    click(root, "assign-task1");
    let assigned = await api.experimentStatus(view.experiment!);
    for (let attempt = 0; attempt < 100 && assigned.tasks[0].assigned_group.length === 0; attempt++) {
      await new Promise((resolve) => setTimeout(resolve, 50));
      assigned = await api.experimentStatus(view.experiment!);
    }
    expect(assigned.tasks[0].assigned_group).toEqual(["w1", "w2"]);
    await waitFor(
      () => (root.querySelector("[data-testid=group-task1]") as HTMLInputElement)?.value === "w1,w2",
      "group shown in table",
    );

    // two workers answer over the API (category-diverse, one dispute)
    for (const worker of ["w1", "w2"]) {
      const workerApi = new ApiClient(server.baseUrl);
      await workerApi.login(worker);
      const session = (await workerApi.openSession(view.experiment!, "task1")).session;
      await workerApi.consent(view.experiment!, session, true);
      const answers: Record<string, Record<string, unknown>[]> = {
        s1: [{ choice: "yes" }, { selected: ["t1"], item: "s1" }],
        s2: [{ choice: "no", item: "s2" }],
        s3: [{ choice: "yes" }, { selected: ["t2"], item: "s3" }],
        s4: worker === "w2"
          ? [{ choice: "yes" }, { selected: ["t1", "t2"], item: "s4" }]
          : [{ choice: "no", item: "s4" }],
        s5: [
          { choice: "yes" }, { choice: "not-in-list" },
          { lemma: "qurs", gloss: "round bread", item: "s5" },
        ],
        s6: [{ choice: "no", item: "s6" }],
      };
      for (const item of ["s1", "s2", "s3", "s4", "s5", "s6"]) {
        for (const payload of answers[item]) {
          await workerApi.submitAnswer(view.experiment!, session, payload);
        }
      }
    }
    await view.refresh();
    await waitFor(
      () => (byTestId(root, "answers-task1")?.textContent ?? "") === "12",
      "answer count visible",
    );
    const counted = await api.experimentStatus(view.experiment!);
    expect(counted.tasks[0].answers).toBe(12); // 2 workers x 6 items

    // validate and check the monitored alpha against the API value
    setValue(root, "g2-task1", "x1");
    click(root, "validate-task1");
    await waitFor(
      () => byTestId(root, "validated-task1")?.textContent?.includes("done"),
      "validated flag",
    );
    const validated = await api.experimentStatus(view.experiment!);
    const alphaShown = byTestId(root, "alpha-task1")!.textContent;
    expect(alphaShown).toBe(validated.tasks[0].alpha!.toFixed(2));
    expect(byTestId(root, "queue-task1")!.textContent).toBe(
      String(validated.tasks[0].expert_queue),
    );
    expect(byTestId(root, "gaps-task1")!.textContent).toBe(String(validated.tasks[0].gaps));

    // close and read the report; the table mirrors the CSV byte for byte
    click(root, "close-experiment");
    await waitFor(
      () => byTestId(root, "experiment-title")?.textContent?.includes("[closed]"),
      "closed state",
    );
    const table = await waitFor(() => byTestId(root, "report-table"), "report table");
    const csv = await api.report(view.experiment!);
    const firstDataRow = csv.trim().split("\n")[1].split(",");
    const uiRow = [...table.querySelectorAll("tr")][1];
    expect([...uiRow.querySelectorAll("td")].map((c) => c.textContent)).toEqual(firstDataRow);
  });

  it("surfaces API failures in the error box", async () => {
    document.body.innerHTML = '<div id="app"></div>';
    const root = document.getElementById("app")!;
    const api = new ApiClient(server.baseUrl);
    await api.login("boss", "sesame");
    const view = new AdminView(root, api);
    view.render();
    setValue(root, "form-description", "broken");
    setValue(root, "form-questions", "35");
    setValue(root, "form-acqs", "0"); // violates the attention-check rule
    click(root, "create-experiment");
    await waitFor(
      () => (byTestId(root, "admin-error")?.textContent ?? "").includes("BadConfig"),
      "config error shown",
    );
  });
});
