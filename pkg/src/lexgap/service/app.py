"""HTTP facade: JSON API under /api/v1 for the requester and worker roles.

Every state-changing route funnels one command through the event-sourced
engine; GET routes only read. Authentication is a named login returning a
bearer token; admin rights require the configured admin key at login.
"""

from __future__ import annotations

import os
from typing import Optional

from fastapi import Depends, FastAPI, Header, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse

from .. import errors as err
from ..lexicon import LexiconStore
from .engine import Engine
from .eventlog import EventLog

_STATUS = [
    (err.AuthFailure, 401),
    (err.UnknownCampaign, 404),
    (err.UnknownEntry, 404),
    (err.UnknownLanguage, 404),
    (err.SessionDone, 410),
    (err.InvalidTransition, 409),
    (err.IllegalLifecycle, 409),
    (err.NotConsented, 409),
    (err.NotFinal, 409),
    (err.Direction1NotFinal, 409),
    (err.DuplicateEntry, 409),
    (err.DuplicateResponse, 409),
    (err.LexgapError, 400),
]


def _status_for(exc: err.LexgapError) -> int:
    for kind, code in _STATUS:
        if isinstance(exc, kind):
            return code
    return 400


def create_app(
    data_dir: Optional[str] = None,
    admin_key: Optional[str] = None,
    clock=None,
) -> FastAPI:
    data_dir = data_dir or os.environ.get("LEXGAP_DATA_DIR", "./lexgap-data")
    admin_key = admin_key or os.environ.get("LEXGAP_ADMIN_KEY", "dev-admin-key")
    engine = Engine(
        EventLog(os.path.join(data_dir, "events.log")), admin_key=admin_key, clock=clock
    )
    app = FastAPI(title="lexgap", version="0.1.0")
    app.state.engine = engine

    @app.exception_handler(err.LexgapError)
    async def domain_error(_request: Request, exc: err.LexgapError):
        return JSONResponse(
            status_code=_status_for(exc),
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    def now() -> float:
        return engine.clock()

    def worker_from(authorization: Optional[str] = Header(None)) -> str:
        token = None
        if authorization and authorization.lower().startswith("bearer "):
            token = authorization[7:].strip()
        return engine.authenticate(token, now())

    def admin_from(authorization: Optional[str] = Header(None)) -> str:
        token = None
        if authorization and authorization.lower().startswith("bearer "):
            token = authorization[7:].strip()
        return engine.authenticate(token, now(), admin=True)

    api = "/api/v1"

    # ------------------------------------------------------------- sessions

    @app.post(api + "/login")
    async def login(body: dict):
        command = {
            "op": "login",
            "name": body.get("name", ""),
            "at": now(),
        }
        if body.get("admin_key"):
            command["admin_key"] = body["admin_key"]
        return engine.execute(command)

    # --------------------------------------------------------------- admin

    @app.post(api + "/experiments", status_code=201)
    async def create_experiment(body: dict, _admin: str = Depends(admin_from)):
        return engine.execute(
            {
                "op": "create_experiment",
                "config": body.get("config", {}),
                "description": body.get("description", ""),
                "at": now(),
            }
        )

    @app.get(api + "/experiments")
    async def list_experiments(_admin: str = Depends(admin_from)):
        out = []
        for exp_id, exp in sorted(engine.state.experiments.items()):
            campaign = exp["campaign"]
            out.append(
                {
                    "experiment": exp_id,
                    "description": exp["description"],
                    "state": campaign.state if campaign else "draft",
                    "source_rows": len(exp["source"] or []),
                    "target_rows": len(exp["target"] or []),
                    "tasks": len(campaign.tasks) if campaign else 0,
                }
            )
        return out

    @app.get(api + "/experiments/{experiment_id}")
    async def experiment_status(experiment_id: str, _worker: str = Depends(worker_from)):
        exp = engine.experiment(experiment_id)
        campaign = exp["campaign"]
        summary = {
            "experiment": experiment_id,
            "description": exp["description"],
            "config": exp["config"],
            "state": campaign.state if campaign else "draft",
            "source_rows": len(exp["source"] or []),
            "target_rows": len(exp["target"] or []),
            "tasks": [],
        }
        if campaign:
            verdicts = campaign.final_verdicts()
            for task in campaign.tasks:
                aggregate = campaign.aggregates.get(task.task_id)
                validation = campaign.validations.get(task.task_id)
                gaps = words = new_words = 0
                for item in task.question_items():
                    record = verdicts.get(item)
                    if record is None:
                        continue
                    if record["kind"] == "gap":
                        gaps += 1
                    elif record["entries"]:
                        words += 1
                    else:
                        new_words += 1
                answered = len(
                    {
                        (w, i)
                        for (t, w, i) in campaign.responses
                        if t == task.task_id
                    }
                )
                summary["tasks"].append(
                    {
                        "task": task.task_id,
                        "items": len(task.items),
                        "questions": len(task.question_items()),
                        "assigned_group": list(task.assigned_group),
                        "answers": answered,
                        "alpha": None
                        if aggregate is None or aggregate.alpha is None
                        else float(aggregate.alpha),
                        "validated": validation is not None,
                        "expert_queue": len(validation.expert_queue) if validation else 0,
                        "gaps": gaps,
                        "words": words,
                        "new_words": new_words,
                    }
                )
        return summary

    @app.get(api + "/experiments/{experiment_id}/datasets")
    async def datasets(experiment_id: str, _admin: str = Depends(admin_from)):
        exp = engine.experiment(experiment_id)
        campaign = exp["campaign"]
        if campaign is not None:
            return {
                "source": [[e.word, e.gloss] for e in campaign.source_items],
                "target": [[e.word, e.gloss] for e in campaign.target_items],
            }
        return {"source": exp["source"] or [], "target": exp["target"] or []}

    async def _upload(request: Request) -> str:
        body = await request.body()
        return body.decode("utf-8")

    @app.post(api + "/experiments/{experiment_id}/source-dataset")
    async def upload_source(
        experiment_id: str, request: Request, _admin: str = Depends(admin_from)
    ):
        return engine.execute(
            {
                "op": "upload_dataset",
                "experiment": experiment_id,
                "which": "source",
                "csv": await _upload(request),
                "at": now(),
            }
        )

    @app.post(api + "/experiments/{experiment_id}/target-dataset")
    async def upload_target(
        experiment_id: str, request: Request, _admin: str = Depends(admin_from)
    ):
        return engine.execute(
            {
                "op": "upload_dataset",
                "experiment": experiment_id,
                "which": "target",
                "csv": await _upload(request),
                "at": now(),
            }
        )

    @app.post(api + "/experiments/{experiment_id}/guidelines")
    async def upload_guidelines(
        experiment_id: str, request: Request, _admin: str = Depends(admin_from)
    ):
        return engine.execute(
            {
                "op": "upload_guidelines",
                "experiment": experiment_id,
                "csv": await _upload(request),
                "at": now(),
            }
        )

    @app.post(api + "/experiments/{experiment_id}/acq-bank")
    async def upload_acq_bank(
        experiment_id: str, request: Request, _admin: str = Depends(admin_from)
    ):
        return engine.execute(
            {
                "op": "upload_acq_bank",
                "experiment": experiment_id,
                "csv": await _upload(request),
                "at": now(),
            }
        )

    @app.post(api + "/experiments/{experiment_id}/tasks")
    async def generate_tasks(experiment_id: str, _admin: str = Depends(admin_from)):
        return engine.execute(
            {"op": "generate_tasks", "experiment": experiment_id, "at": now()}
        )

    @app.get(api + "/experiments/{experiment_id}/tasks")
    async def list_tasks(experiment_id: str, worker: str = Depends(worker_from)):
        campaign = engine.campaign(experiment_id)
        role = engine.state.workers[worker]["role"]
        tasks = []
        for task in (*campaign.tasks, *campaign.rerun_tasks.values()):
            if role != "admin" and worker not in task.assigned_group:
                continue
            tasks.append(
                {
                    "task": task.task_id,
                    "items": len(task.items),
                    "assigned_group": list(task.assigned_group),
                }
            )
        return tasks

    @app.post(api + "/experiments/{experiment_id}/tasks/{task_id}/group")
    async def assign_group(
        experiment_id: str, task_id: str, body: dict, _admin: str = Depends(admin_from)
    ):
        return engine.execute(
            {
                "op": "assign_group",
                "experiment": experiment_id,
                "task": task_id,
                "workers": body.get("workers", []),
                "at": now(),
            }
        )

    @app.post(api + "/experiments/{experiment_id}/tasks/{task_id}/filter-crowd")
    async def filter_crowd(
        experiment_id: str, task_id: str, body: dict, _admin: str = Depends(admin_from)
    ):
        return engine.execute(
            {
                "op": "filter_crowd",
                "experiment": experiment_id,
                "task": task_id,
                "group": body.get("group", []),
                "expert": body.get("expert", "expert"),
                "at": now(),
            }
        )

    @app.post(api + "/experiments/{experiment_id}/tasks/{task_id}/validate")
    async def validate_task(
        experiment_id: str, task_id: str, body: dict, _admin: str = Depends(admin_from)
    ):
        return engine.execute(
            {
                "op": "validate_task",
                "experiment": experiment_id,
                "task": task_id,
                "g2": body.get("g2", []),
                "expert": body.get("expert", "expert"),
                "at": now(),
            }
        )

    @app.get(api + "/experiments/{experiment_id}/tasks/{task_id}/expert-sheet")
    async def download_expert_sheet(
        experiment_id: str,
        task_id: str,
        seed: int = 0,
        _admin: str = Depends(admin_from),
    ):
        from ..workflow import sheet_to_csv

        campaign = engine.campaign(experiment_id)
        rows = campaign.expert_sheet(task_id, seed)
        return PlainTextResponse(sheet_to_csv(rows), media_type="text/csv")

    @app.post(api + "/experiments/{experiment_id}/tasks/{task_id}/expert-sheet")
    async def upload_expert_sheet(
        experiment_id: str,
        task_id: str,
        request: Request,
        _admin: str = Depends(admin_from),
    ):
        return engine.execute(
            {
                "op": "upload_expert_sheet",
                "experiment": experiment_id,
                "task": task_id,
                "csv": await _upload(request),
                "at": now(),
            }
        )

    @app.post(api + "/experiments/{experiment_id}/close")
    async def close_experiment(experiment_id: str, _admin: str = Depends(admin_from)):
        return engine.execute(
            {"op": "close_experiment", "experiment": experiment_id, "at": now()}
        )

    @app.get(api + "/experiments/{experiment_id}/report")
    async def report(experiment_id: str, _admin: str = Depends(admin_from)):
        campaign = engine.campaign(experiment_id)
        return PlainTextResponse(campaign.report().to_csv(), media_type="text/csv")

    @app.get(api + "/experiments/{experiment_id}/lexicon")
    async def lexicon(
        experiment_id: str,
        language: Optional[str] = None,
        _admin: str = Depends(admin_from),
    ):
        campaign = engine.campaign(experiment_id)
        store = LexiconStore()
        campaign.apply_to_lexicon(store)
        document = store.export_lexicon(language) if language else store.export_document()
        return JSONResponse(document)

    # -------------------------------------------------------------- worker

    @app.get(api + "/experiments/{experiment_id}/guidelines")
    async def guidelines(experiment_id: str, _worker: str = Depends(worker_from)):
        exp = engine.experiment(experiment_id)
        campaign = exp["campaign"]
        rows = campaign.guidelines if campaign else (exp["guidelines"] or [])
        return [{"tip": tip, "answer": answer} for tip, answer in rows]

    @app.post(api + "/experiments/{experiment_id}/tasks/{task_id}/session")
    async def open_session(
        experiment_id: str, task_id: str, worker: str = Depends(worker_from)
    ):
        return engine.execute(
            {
                "op": "open_session",
                "experiment": experiment_id,
                "task": task_id,
                "worker": worker,
                "at": now(),
            }
        )

    def _owned_session(experiment_id: str, session_id: str, worker: str):
        campaign = engine.campaign(experiment_id)
        session = campaign.sessions.get(session_id)
        if session is None:
            raise err.UnknownCampaign(f"no session {session_id}")
        if session.worker != worker:
            raise err.AuthFailure("not your session")
        return campaign, session

    @app.post(api + "/experiments/{experiment_id}/sessions/{session_id}/consent")
    async def consent(
        experiment_id: str, session_id: str, body: dict, worker: str = Depends(worker_from)
    ):
        _owned_session(experiment_id, session_id, worker)
        return engine.execute(
            {
                "op": "consent",
                "experiment": experiment_id,
                "session": session_id,
                "given": bool(body.get("given")),
                "at": now(),
            }
        )

    @app.get(api + "/experiments/{experiment_id}/sessions/{session_id}/next")
    async def next_prompt(
        experiment_id: str, session_id: str, worker: str = Depends(worker_from)
    ):
        campaign, session = _owned_session(experiment_id, session_id, worker)
        return campaign.next_prompt(session)

    @app.post(api + "/experiments/{experiment_id}/sessions/{session_id}/answer")
    async def submit_answer(
        experiment_id: str, session_id: str, body: dict, worker: str = Depends(worker_from)
    ):
        _owned_session(experiment_id, session_id, worker)
        return engine.execute(
            {
                "op": "submit_answer",
                "experiment": experiment_id,
                "session": session_id,
                "payload": body,
                "at": now(),
            }
        )

    return app


def main() -> None:
    """Entry point for `lexgap serve` and `python -m lexgap.service.app`."""
    import uvicorn

    port = int(os.environ.get("LEXGAP_PORT", "8400"))
    uvicorn.run(create_app(), host="0.0.0.0", port=port)


if __name__ == "__main__":
    main()
