"""Event-sourced platform engine.

Every mutation is a command dict; executing a command appends exactly one
event and then applies it. Command application is deterministic (all clocks
and generated values ride inside the command), so replaying the log from
scratch, or a snapshot plus the tail, reproduces the state byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict
from pathlib import Path
from typing import Callable, Optional

from ..campaign import (
    Campaign,
    CampaignConfig,
    parse_acq_bank,
    parse_guidelines,
)
from ..errors import (
    AuthFailure,
    AwaitingResponses,
    BadConfig,
    IllegalLifecycle,
    UnknownCampaign,
)
from ..ingestion import parse_dataset
from ..workflow import TaskRun, RunResponse, Worker, sheet_from_csv
from .eventlog import EventLog

TOKEN_TTL_SECONDS = 24 * 3600


class PlatformState:
    def __init__(self) -> None:
        self.experiments: dict[str, dict] = {}
        self.workers: dict[str, dict] = {}
        self.tokens: dict[str, dict] = {}
        self.next_experiment = 1
        self.next_token = 1

    # ------------------------------------------------------- serialization

    def to_dict(self) -> dict:
        return {
            "experiments": {
                exp_id: {
                    "description": exp["description"],
                    "config": exp["config"],
                    "source": exp["source"],
                    "target": exp["target"],
                    "guidelines": exp["guidelines"],
                    "acq_bank": exp["acq_bank"],
                    "campaign": exp["campaign"].to_dict() if exp["campaign"] else None,
                    "pending_runs": exp["pending_runs"],
                    "crowd_filter": exp.get("crowd_filter"),
                }
                for exp_id, exp in sorted(self.experiments.items())
            },
            "workers": dict(sorted(self.workers.items())),
            "tokens": dict(sorted(self.tokens.items())),
            "next_experiment": self.next_experiment,
            "next_token": self.next_token,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PlatformState":
        state = cls()
        for exp_id, exp in data["experiments"].items():
            state.experiments[exp_id] = {
                "description": exp["description"],
                "config": exp["config"],
                "source": exp["source"],
                "target": exp["target"],
                "guidelines": exp["guidelines"],
                "acq_bank": exp["acq_bank"],
                "campaign": Campaign.from_dict(exp["campaign"]) if exp["campaign"] else None,
                "pending_runs": exp["pending_runs"],
                "crowd_filter": exp.get("crowd_filter"),
            }
        state.workers = dict(data["workers"])
        state.tokens = dict(data["tokens"])
        state.next_experiment = data["next_experiment"]
        state.next_token = data["next_token"]
        return state

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)


class Engine:
    """Applies commands to the platform state behind an event log."""

    def __init__(
        self,
        log: EventLog,
        admin_key: str = "dev-admin-key",
        clock: Optional[Callable[[], float]] = None,
    ):
        import time

        self.log = log
        self.admin_key = admin_key
        self.clock = clock or time.time
        self.state = PlatformState()
        for envelope in self.log.recover():
            self._apply(envelope["payload"])

    # -------------------------------------------------------------- plumbing

    def execute(self, command: dict) -> dict:
        """Validate and apply one command, persisting it on success.

        Rejected commands mutate nothing and are never logged, so replaying
        the log can only see commands that applied cleanly.
        """
        self._check(command)
        result = self._apply(command)
        self.log.append(command, timestamp=command.get("at", self.clock()))
        return result

    def _check(self, command: dict) -> None:
        # cheap structural validation so a logged command cannot fail replay
        op = command.get("op")
        if op not in _HANDLERS:
            raise BadConfig(f"unknown command {op!r}")
        if op != "login" and "experiment" in command:
            self.experiment(command["experiment"])

    def _apply(self, command: dict) -> dict:
        return _HANDLERS[command["op"]](self, command)

    def experiment(self, experiment_id: str) -> dict:
        exp = self.state.experiments.get(experiment_id)
        if exp is None:
            raise UnknownCampaign(f"no experiment {experiment_id}")
        return exp

    def campaign(self, experiment_id: str) -> Campaign:
        campaign = self.experiment(experiment_id)["campaign"]
        if campaign is None:
            raise IllegalLifecycle(f"experiment {experiment_id} has no generated tasks yet")
        return campaign

    # ------------------------------------------------------------------ auth

    def authenticate(self, token: Optional[str], at: float, admin: bool = False) -> str:
        record = self.tokens_lookup(token)
        if record is None or record["expiry"] < at:
            raise AuthFailure("missing, unknown, or expired token")
        if admin and self.state.workers[record["worker"]]["role"] != "admin":
            raise AuthFailure("admin access required")
        return record["worker"]

    def tokens_lookup(self, token: Optional[str]) -> Optional[dict]:
        if not token:
            return None
        return self.state.tokens.get(token)

    # -------------------------------------------------------------- snapshot

    def snapshot(self, path: str | Path) -> None:
        payload = {
            "sequence": self.log.last_sequence,
            "state": self.state.to_dict(),
        }
        Path(path).write_text(
            json.dumps(payload, sort_keys=True, ensure_ascii=False), "utf-8"
        )

    @classmethod
    def from_snapshot(
        cls,
        snapshot_path: str | Path,
        log: EventLog,
        admin_key: str = "dev-admin-key",
        clock: Optional[Callable[[], float]] = None,
    ) -> "Engine":
        payload = json.loads(Path(snapshot_path).read_text("utf-8"))
        engine = cls.__new__(cls)
        import time

        engine.log = log
        engine.admin_key = admin_key
        engine.clock = clock or time.time
        engine.state = PlatformState.from_dict(payload["state"])
        for envelope in log.recover():
            if envelope["sequence"] > payload["sequence"]:
                engine._apply(envelope["payload"])
        return engine


# ---------------------------------------------------------------- handlers


def _handle_login(engine: Engine, command: dict) -> dict:
    name = (command.get("name") or "").strip()
    if not name:
        raise BadConfig("login needs a name")
    wants_admin = bool(command.get("admin_key"))
    if wants_admin and command["admin_key"] != engine.admin_key:
        raise AuthFailure("bad admin key")
    role = "admin" if wants_admin else "worker"
    at = command["at"]
    engine.state.workers.setdefault(name, {"role": role, "status": "active"})
    if wants_admin:
        engine.state.workers[name]["role"] = "admin"
    token = hashlib.sha256(
        f"{name}:{engine.state.next_token}".encode("utf-8")
    ).hexdigest()[:24]
    engine.state.next_token += 1
    engine.state.tokens[token] = {"worker": name, "expiry": at + TOKEN_TTL_SECONDS}
    return {"token": token, "worker": name, "role": engine.state.workers[name]["role"]}


def _handle_create_experiment(engine: Engine, command: dict) -> dict:
    config = CampaignConfig(**command["config"])  # validates
    experiment_id = f"exp{engine.state.next_experiment}"
    engine.state.next_experiment += 1
    engine.state.experiments[experiment_id] = {
        "description": command.get("description", ""),
        "config": asdict(config),
        "source": None,
        "target": None,
        "guidelines": None,
        "acq_bank": None,
        "campaign": None,
        "pending_runs": [],
        "crowd_filter": None,
    }
    return {"experiment": experiment_id}


def _handle_upload_dataset(engine: Engine, command: dict) -> dict:
    exp = engine.experiment(command["experiment"])
    if exp["campaign"] is not None:
        raise IllegalLifecycle("datasets are frozen once tasks exist")
    which = command["which"]
    if which not in ("source", "target"):
        raise BadConfig(f"dataset must be source or target, got {which!r}")
    entries = parse_dataset(command["csv"])
    exp[which] = [[e.word, e.gloss or ""] for e in entries]
    return {"rows": len(entries)}


def _handle_upload_guidelines(engine: Engine, command: dict) -> dict:
    exp = engine.experiment(command["experiment"])
    rows = parse_guidelines(command["csv"])
    exp["guidelines"] = [list(r) for r in rows]
    return {"rows": len(rows)}


def _handle_upload_acq_bank(engine: Engine, command: dict) -> dict:
    from ..agreement import serialize_answer

    exp = engine.experiment(command["experiment"])
    bank = parse_acq_bank(command["csv"])
    exp["acq_bank"] = [[w, g, serialize_answer(a)] for w, g, a in bank]
    return {"rows": len(bank)}


def _handle_generate_tasks(engine: Engine, command: dict) -> dict:
    from ..agreement import parse_answer

    exp = engine.experiment(command["experiment"])
    if exp["campaign"] is not None:
        raise IllegalLifecycle("tasks already generated")
    for piece in ("source", "target", "guidelines"):
        if not exp[piece]:
            raise IllegalLifecycle(f"{piece} not uploaded yet")
    config = CampaignConfig(**exp["config"])
    campaign = Campaign(
        command["experiment"],
        config,
        [tuple(r) for r in exp["source"]],
        [tuple(r) for r in exp["target"]],
        [tuple(r) for r in exp["guidelines"]],
    )
    bank = [(w, g, parse_answer(a)) for w, g, a in (exp["acq_bank"] or [])]
    tasks = campaign.generate_tasks(bank)
    exp["campaign"] = campaign
    return {"tasks": [t.task_id for t in tasks]}


def _handle_assign_group(engine: Engine, command: dict) -> dict:
    campaign = engine.campaign(command["experiment"])
    campaign.assign_group(command["task"], command["workers"])
    return {"task": command["task"], "workers": list(command["workers"])}


def _handle_open_session(engine: Engine, command: dict) -> dict:
    campaign = engine.campaign(command["experiment"])
    session = campaign.open_session(command["worker"], command["task"], command["at"])
    return {"session": session.session_id}


def _handle_consent(engine: Engine, command: dict) -> dict:
    campaign = engine.campaign(command["experiment"])
    session = campaign.sessions.get(command["session"])
    if session is None:
        raise UnknownCampaign(f"no session {command['session']}")
    campaign.record_consent(session, bool(command["given"]), command["at"])
    return {"session": session.session_id, "consent": session.consent}


def _handle_submit_answer(engine: Engine, command: dict) -> dict:
    campaign = engine.campaign(command["experiment"])
    session = campaign.sessions.get(command["session"])
    if session is None:
        raise UnknownCampaign(f"no session {command['session']}")
    return campaign.submit_answer(session, command["payload"], command["at"])


def _stored_response_runner(engine: Engine, experiment_id: str, base_task: str):
    """Runner that serves validation from already-collected responses.

    A requested participant set maps to a re-run task; when its responses
    are complete they form the run, otherwise the procedure is interrupted
    with the participant set that still has to annotate.
    """
    exp = engine.experiment(experiment_id)
    campaign = engine.campaign(experiment_id)

    def runner(participants: tuple[str, ...]) -> TaskRun:
        wanted = sorted(participants)
        rerun_id = None
        for entry in exp["pending_runs"]:
            if entry["base_task"] == base_task and sorted(entry["participants"]) == wanted:
                rerun_id = entry["task_id"]
                break
        if rerun_id is None:
            task = campaign.add_rerun_task(base_task, participants)
            exp["pending_runs"].append(
                {
                    "base_task": base_task,
                    "task_id": task.task_id,
                    "participants": list(participants),
                }
            )
            raise AwaitingResponses(tuple(participants))
        task = campaign.task(rerun_id)
        responses = []
        for item in task.items:
            for worker in participants:
                stored = campaign.responses.get((rerun_id, worker, item))
                if stored is None:
                    raise AwaitingResponses(tuple(participants))
                responses.append(
                    RunResponse(stored.item, stored.worker, stored.answer, stored.duration_seconds)
                )
        return TaskRun(rerun_id, tuple(participants), tuple(responses))

    return runner


def _handle_validate_task(engine: Engine, command: dict) -> dict:
    campaign = engine.campaign(command["experiment"])
    task_id = command["task"]
    runner = _stored_response_runner(engine, command["experiment"], task_id)
    expert = Worker(command.get("expert", "expert"), role="expert")
    try:
        result = campaign.validate_task(task_id, command.get("g2", []), expert, runner)
    except AwaitingResponses as waiting:
        # deterministic partial progress: the pending rerun task is recorded
        return {
            "status": "awaiting",
            "participants": list(waiting.participants),
            "task": task_id,
        }
    return {
        "status": "validated",
        "task": task_id,
        "high_quality": sorted(result.outcome.high_quality),
        "low_quality": sorted(result.outcome.low_quality),
        "passing_alpha": None
        if result.outcome.passing_alpha is None
        else float(result.outcome.passing_alpha),
        "expert_queue": list(result.expert_queue),
        "queued_in_full": result.queued_in_full,
    }


def _handle_filter_crowd(engine: Engine, command: dict) -> dict:
    """Crowd filtering over a qualification task via stored responses.

    The first requested run is the full group on the base task itself; any
    expert-plus-subset run maps to a re-run task awaiting those workers.
    """
    from ..workflow import filter_crowd

    campaign = engine.campaign(command["experiment"])
    exp = engine.experiment(command["experiment"])
    task_id = command["task"]
    group = tuple(command["group"])
    expert = Worker(command.get("expert", "expert"), role="expert")

    base_runner = _stored_response_runner(engine, command["experiment"], task_id)

    def runner(participants: tuple[str, ...]) -> TaskRun:
        if set(participants) == set(group):
            # the qualification task itself holds the full-group run
            task = campaign.task(task_id)
            responses = []
            for item in task.items:
                for worker in participants:
                    stored = campaign.responses.get((task_id, worker, item))
                    if stored is None:
                        raise AwaitingResponses(tuple(participants))
                    responses.append(
                        RunResponse(
                            stored.item, stored.worker, stored.answer,
                            stored.duration_seconds,
                        )
                    )
            return TaskRun(f"{task_id}-full", tuple(participants), tuple(responses))
        return base_runner(participants)

    try:
        outcome = filter_crowd(group, expert, campaign.config.alpha_threshold, runner)
    except AwaitingResponses as waiting:
        return {
            "status": "awaiting",
            "participants": list(waiting.participants),
            "task": task_id,
        }
    for worker in outcome.low_quality:
        record = engine.state.workers.setdefault(worker, {"role": "worker", "status": "active"})
        record["status"] = "low-quality"
    for worker in outcome.high_quality:
        record = engine.state.workers.setdefault(worker, {"role": "worker", "status": "active"})
        record["status"] = "active"
        record["quality"] = "high"
    exp["crowd_filter"] = {
        "task": task_id,
        "high_quality": sorted(outcome.high_quality),
        "low_quality": sorted(outcome.low_quality),
        "runs": list(outcome.runs_executed),
        "passing_alpha": None
        if outcome.passing_alpha is None
        else str(outcome.passing_alpha),
    }
    return {"status": "classified", **exp["crowd_filter"],
            "passing_alpha": None if outcome.passing_alpha is None
            else float(outcome.passing_alpha)}


def _handle_upload_expert_sheet(engine: Engine, command: dict) -> dict:
    campaign = engine.campaign(command["experiment"])
    rows = sheet_from_csv(command["csv"])
    campaign.apply_expert_sheet(command["task"], rows)
    return {"task": command["task"], "decided": len(rows)}


def _handle_close_experiment(engine: Engine, command: dict) -> dict:
    exp = engine.experiment(command["experiment"])
    campaign = exp["campaign"]
    if campaign is None:
        raise IllegalLifecycle("nothing to close: no tasks were generated")
    campaign.close()
    return {"experiment": command["experiment"], "state": campaign.state}


_HANDLERS = {
    "login": _handle_login,
    "create_experiment": _handle_create_experiment,
    "upload_dataset": _handle_upload_dataset,
    "upload_guidelines": _handle_upload_guidelines,
    "upload_acq_bank": _handle_upload_acq_bank,
    "generate_tasks": _handle_generate_tasks,
    "assign_group": _handle_assign_group,
    "open_session": _handle_open_session,
    "consent": _handle_consent,
    "submit_answer": _handle_submit_answer,
    "filter_crowd": _handle_filter_crowd,
    "validate_task": _handle_validate_task,
    "upload_expert_sheet": _handle_upload_expert_sheet,
    "close_experiment": _handle_close_experiment,
}
