#!/usr/bin/env python3
"""End-to-end drive of a running lexgap service over real HTTP.

Exercises the whole requester + worker surface: experiment setup, three
workers answering every microtask step, validation, the expert-sheet round
trip, close, report, and lexicon export. Prints the report and exits
non-zero on any unexpected response.

Usage: e2e_drive.py [base_url] [admin_key]
"""

import sys

import httpx

BASE = sys.argv[1] if len(sys.argv) > 1 else "http://127.0.0.1:8400"
ADMIN_KEY = sys.argv[2] if len(sys.argv) > 2 else "dev-admin-key"

SOURCE = "word,gloss\n" + "\n".join(f"sw{i},meaning {i}" for i in range(1, 13))
TARGET = "word,gloss\ntw1,target one\ntw2,target two\ntw3,target three"
GUIDELINES = "tip,answer\nWhat is the task?,Compare words across the languages.\n"
ACQ = "word,gloss,expected_answer\nattn1,an obviously untranslatable word,GAP\n"

PLAN = {
    "s1": [{"choice": "no"}],
    "s2": [{"choice": "yes"}, {"selected": ["t1"]}],
    "s3": [{"choice": "yes"}, {"choice": "not-in-list"},
           {"lemma": "qahwa", "gloss": "a hot drink"}],
    "s4": [{"choice": "dont-know"}],
    "s5": [{"choice": "no"}],
    "s6": [{"choice": "no"}],
}


def main() -> int:
    client = httpx.Client(base_url=BASE + "/api/v1", timeout=30)

    def check(response, expect=200):
        assert response.status_code == expect, f"{response.url}: {response.status_code} {response.text}"
        return response

    admin_token = check(
        client.post("/login", json={"name": "boss", "admin_key": ADMIN_KEY})
    ).json()["token"]
    admin = {"Authorization": f"Bearer {admin_token}"}

    experiment = check(
        client.post(
            "/experiments",
            json={
                "description": "e2e drive",
                "config": {
                    "source_language": "eng",
                    "target_language": "arb",
                    "semantic_field": "food",
                    "questions_per_task": 6,
                    "acqs_per_task": 0,
                    "alpha_threshold": 0.70,
                },
            },
            headers=admin,
        ),
        201,
    ).json()["experiment"]

    for piece, payload in [
        ("source-dataset", SOURCE),
        ("target-dataset", TARGET),
        ("guidelines", GUIDELINES),
        ("acq-bank", ACQ),
    ]:
        check(client.post(f"/experiments/{experiment}/{piece}", content=payload, headers=admin))
    tasks = check(client.post(f"/experiments/{experiment}/tasks", headers=admin)).json()["tasks"]
    assert tasks == ["task1", "task2"], tasks
    for task in tasks:
        check(
            client.post(
                f"/experiments/{experiment}/tasks/{task}/group",
                json={"workers": ["w1", "w2", "w3"]},
                headers=admin,
            )
        )

    for worker in ("w1", "w2", "w3"):
        token = check(client.post("/login", json={"name": worker})).json()["token"]
        headers = {"Authorization": f"Bearer {token}"}
        for t_index, task in enumerate(tasks):
            session = check(
                client.post(f"/experiments/{experiment}/tasks/{task}/session", headers=headers)
            ).json()["session"]
            check(
                client.post(
                    f"/experiments/{experiment}/sessions/{session}/consent",
                    json={"given": True},
                    headers=headers,
                )
            )
            for offset in range(1, 7):
                item = f"s{6 * t_index + offset}"
                for step in PLAN[f"s{offset}"]:
                    payload = dict(step)
                    payload["item"] = item
                    check(
                        client.post(
                            f"/experiments/{experiment}/sessions/{session}/answer",
                            json=payload,
                            headers=headers,
                        )
                    )
            done = check(
                client.get(f"/experiments/{experiment}/sessions/{session}/next", headers=headers)
            ).json()
            assert done["step"] == "done", done

    for task in tasks:
        outcome = check(
            client.post(
                f"/experiments/{experiment}/tasks/{task}/validate",
                json={"g2": ["x1"], "expert": "exp"},
                headers=admin,
            )
        ).json()
        assert outcome["status"] == "validated", outcome
        sheet = check(
            client.get(f"/experiments/{experiment}/tasks/{task}/expert-sheet?seed=3", headers=admin)
        ).text
        filled_lines = []
        for line in sheet.splitlines():
            if line.startswith("worker_id") or line.endswith(",sanity,"):
                filled_lines.append(line)
            elif ",DK," in line:
                filled_lines.append(line + "RESOLVE_GAP")
            elif ",GAP," in line:
                filled_lines.append(line + "CONFIRM_GAP")
            else:
                filled_lines.append(line + "CONFIRM_WORD")
        check(
            client.post(
                f"/experiments/{experiment}/tasks/{task}/expert-sheet",
                content="\n".join(filled_lines) + "\n",
                headers=admin,
            )
        )

    check(client.post(f"/experiments/{experiment}/close", headers=admin))
    report = check(client.get(f"/experiments/{experiment}/report", headers=admin)).text
    lexicon = check(
        client.get(f"/experiments/{experiment}/lexicon?language=arb", headers=admin)
    ).json()
    print(report)
    print(f"arb entries: {len(lexicon['entries'])}, gaps: {len(lexicon['gaps'])}")
    assert len(lexicon["gaps"]) > 0
    print(f"OK experiment={experiment}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
