"""Interactive grasp episodes: describe, review, ground, plan, execute.

A session walks one scene through the pipeline while a human (or script)
reviews the generated description and may overwrite it.  Every transition
is appended to an event log the moment it happens, so a crashed process
loses nothing and `replay` can rebuild the exact final state from the log
alone.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Union

from .dataset import description_from_dict, description_to_dict, scene_from_dict, scene_to_dict
from .evaluation import is_correct
from .grounding import GroundedObject, GroundingError, noisy_ground
from .lang import Description, Source, describe_scene, parse
from .noise import NoiseConfig, corrupt_description
from .planner import (
    EmptyProposalsError,
    ScoredGrasp,
    gen_proposals,
    kgpn_sample,
    score_and_select,
)
from .scene import Scene
from .seeds import derive_seed

# phases
DESCRIBED = "DESCRIBED"
AWAITING_REVIEW = "AWAITING_REVIEW"
GROUNDED = "GROUNDED"
PLANNED = "PLANNED"
EXECUTED = "EXECUTED"
FAILED = "FAILED"

PHASES = (DESCRIBED, AWAITING_REVIEW, GROUNDED, PLANNED, EXECUTED, FAILED)

# event kinds
STARTED = "STARTED"
DESCRIBED_EV = "DESCRIBED"
INTERVENED = "INTERVENED"
ACCEPTED = "ACCEPTED"
GROUNDED_EV = "GROUNDED"
PLANNED_EV = "PLANNED"
EXECUTED_EV = "EXECUTED"
FAILED_EV = "FAILED"

TOP_GRASPS_LOGGED = 10


class SessionError(Exception):
    """Transition not allowed from the current phase."""

    code = "wrong-phase"

    def __init__(self, message: str, phase: str):
        super().__init__(message)
        self.phase = phase


class ReplayError(Exception):
    """Event log disagrees with deterministic re-execution."""


@dataclass(frozen=True)
class SessionEvent:
    session_id: str
    seq: int
    timestamp: float
    phase: str
    kind: str
    payload: dict

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "seq": self.seq,
            "timestamp": self.timestamp,
            "phase": self.phase,
            "kind": self.kind,
            "payload": self.payload,
        }


def _grasp_to_dict(g: ScoredGrasp) -> dict:
    return {
        "rect": [g.rect.cx, g.rect.cy, g.rect.theta, g.rect.w, g.rect.h],
        "box_conf": g.box_conf,
        "surface_conf": g.surface_conf,
        "angle_class": g.angle_class,
        "final_conf": g.final_conf,
    }


@dataclass
class Session:
    session_id: str
    scene: Scene
    config: NoiseConfig
    phase: str = AWAITING_REVIEW
    description: Optional[Description] = None
    grounded: Optional[GroundedObject] = None
    ranked: tuple[ScoredGrasp, ...] = ()
    success: Optional[bool] = None
    failure: Optional[dict] = None
    events: list[SessionEvent] = field(default_factory=list)
    log_path: Optional[Path] = None
    clock: Callable[[], float] = time.time

    # -- event plumbing ------------------------------------------------

    def _emit(self, kind: str, phase: str, payload: dict) -> SessionEvent:
        event = SessionEvent(
            session_id=self.session_id,
            seq=len(self.events),
            timestamp=float(self.clock()),
            phase=phase,
            kind=kind,
            payload=payload,
        )
        self.events.append(event)
        self.phase = phase
        if self.log_path is not None:
            # append+flush per event so a crash never loses an applied transition
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event.to_dict(), sort_keys=True) + "\n")
                fh.flush()
        return event

    def _stage_seed(self, stage: str) -> int:
        return derive_seed(self.config.seed, self.scene.id, stage)

    # -- transitions ---------------------------------------------------

    def intervene(self, text: str) -> "Session":
        """Replace the pending description with operator-typed text.

        Parse errors raise without touching state, so the operator can
        retype.  Allowed while awaiting review and after a failure (the
        failure case gives the operator a second chance to reword).
        """
        if self.phase not in (AWAITING_REVIEW, FAILED):
            raise SessionError(f"cannot intervene in phase {self.phase}", self.phase)
        triple = parse(text)  # raises LanguageError on bad input, state untouched
        desc = Description(triple=triple, text=text, source=Source.HUMAN, corrupted=False)
        self.description = desc
        self.grounded = None
        self.failure = None
        self._emit(INTERVENED, DESCRIBED, description_to_dict(desc))
        return self

    def step(self) -> "Session":
        """Advance one pipeline stage from the current phase."""
        if self.phase == AWAITING_REVIEW:
            self._emit(ACCEPTED, DESCRIBED, {})
            return self
        if self.phase == DESCRIBED:
            return self._ground()
        if self.phase == GROUNDED:
            return self._plan()
        if self.phase == PLANNED:
            return self._execute()
        raise SessionError(f"cannot step from phase {self.phase}", self.phase)

    def _ground(self) -> "Session":
        assert self.description is not None
        try:
            grounded = noisy_ground(
                self.scene,
                self.description,
                self.config.ground_error_rate,
                self._stage_seed("ground"),
            )
        except GroundingError as exc:
            self.failure = {"code": exc.code, "reason": str(exc)}
            self._emit(FAILED_EV, FAILED, dict(self.failure))
            return self
        self.grounded = grounded
        self._emit(
            GROUNDED_EV,
            GROUNDED,
            {
                "scene_id": self.scene.id,
                "object_id": grounded.object_id,
                "region": [grounded.region.x, grounded.region.y, grounded.region.w, grounded.region.h],
                "confidence": grounded.confidence,
                "ambiguous": grounded.ambiguous,
                "description_text": self.description.text,
                "description_source": self.description.source.value,
            },
        )
        return self

    def _plan(self) -> "Session":
        assert self.grounded is not None
        try:
            proposals = gen_proposals(self.scene, self._stage_seed("proposals"))
        except EmptyProposalsError as exc:
            self.failure = {"code": exc.code, "reason": str(exc)}
            self._emit(FAILED_EV, FAILED, dict(self.failure))
            return self
        positives, _ = kgpn_sample(proposals, [g.rect for g in self.scene.grasps], self.grounded.region)
        ranked = score_and_select(self.scene, positives, self.config, self._stage_seed("score"))
        if not ranked:
            self.failure = {"code": "empty-ranking", "reason": "no positive grasp candidates for the grounded region"}
            self._emit(FAILED_EV, FAILED, dict(self.failure))
            return self
        self.ranked = tuple(ranked)
        self._emit(
            PLANNED_EV,
            PLANNED,
            {
                "count": len(ranked),
                "top": [_grasp_to_dict(g) for g in ranked[:TOP_GRASPS_LOGGED]],
            },
        )
        return self

    def _execute(self) -> "Session":
        top = self.ranked[0]
        ok = is_correct(top, self.scene)
        self.success = ok
        self._emit(EXECUTED_EV, EXECUTED, {"success": ok, "grasp": _grasp_to_dict(top)})
        return self

    def run_to_completion(self, max_steps: int = 8) -> "Session":
        for _ in range(max_steps):
            if self.phase in (EXECUTED, FAILED):
                break
            self.step()
        return self

    # -- serialized state ----------------------------------------------

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "scene_id": self.scene.id,
            "phase": self.phase,
            "description": description_to_dict(self.description) if self.description else None,
            "grounded": None
            if self.grounded is None
            else {
                "object_id": self.grounded.object_id,
                "region": [self.grounded.region.x, self.grounded.region.y, self.grounded.region.w, self.grounded.region.h],
                "confidence": self.grounded.confidence,
                "ambiguous": self.grounded.ambiguous,
            },
            "ranked": [_grasp_to_dict(g) for g in self.ranked],
            "success": self.success,
            "failure": self.failure,
            "events": [e.to_dict() for e in self.events],
        }

    def state_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def start(
    scene: Scene,
    config: Optional[NoiseConfig] = None,
    session_id: Optional[str] = None,
    log_path: Optional[Union[str, Path]] = None,
    clock: Callable[[], float] = time.time,
) -> Session:
    """Open a session: describe the scene, apply configured corruption,
    then wait for operator review."""
    config = config or NoiseConfig()
    sid = session_id or f"sess-{scene.id}-{config.seed}"
    session = Session(
        session_id=sid,
        scene=scene,
        config=config,
        phase=AWAITING_REVIEW,
        log_path=Path(log_path) if log_path is not None else None,
        clock=clock,
    )
    session._emit(
        STARTED,
        DESCRIBED,
        {"scene": scene_to_dict(scene), "config": asdict(config)},
    )
    oracle = describe_scene(scene, derive_seed(config.seed, scene.id, "describe"))
    shown = corrupt_description(
        oracle, scene, config.describe_error_rate, derive_seed(config.seed, scene.id, "corrupt")
    )
    session.description = shown
    payload = description_to_dict(shown)
    payload["corrupted"] = shown.corrupted
    session._emit(DESCRIBED_EV, AWAITING_REVIEW, payload)
    return session


def intervene(session: Session, text: str) -> Session:
    return session.intervene(text)


def step(session: Session) -> Session:
    return session.step()


def _normalized(payload: dict) -> dict:
    return json.loads(json.dumps(payload, sort_keys=True))


def load_events(path: Union[str, Path]) -> list[dict]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [json.loads(line) for line in lines if line.strip()]


def replay(events: Union[str, Path, Iterable[dict]]) -> Session:
    """Rebuild a session from its event log.

    Deterministic stages are re-executed and checked against the logged
    events; logged timestamps are adopted so the rebuilt state matches
    the original byte for byte.
    """
    rows = load_events(events) if isinstance(events, (str, Path)) else list(events)
    if not rows or rows[0].get("kind") != STARTED:
        raise ReplayError("event log must begin with a STARTED event")
    started = rows[0]
    scene = scene_from_dict(started["payload"]["scene"])
    config = NoiseConfig(**started["payload"]["config"])
    stamps = iter([row["timestamp"] for row in rows])

    def clock() -> float:
        try:
            return next(stamps)
        except StopIteration:  # pragma: no cover - only on malformed logs
            raise ReplayError("ran out of logged timestamps") from None

    session = start(scene, config, session_id=started["session_id"], log_path=None, clock=clock)
    replayed = 2  # start() emits STARTED and DESCRIBED
    for row in rows[replayed:]:
        kind = row["kind"]
        before = len(session.events)
        if kind == INTERVENED:
            session.intervene(row["payload"]["text"])
        elif kind in (ACCEPTED, GROUNDED_EV, PLANNED_EV, EXECUTED_EV, FAILED_EV):
            session.step()
        else:
            raise ReplayError(f"unexpected event kind {kind!r} at seq {row['seq']}")
        if len(session.events) != before + 1:
            raise ReplayError(f"replaying seq {row['seq']} produced no event")
    if len(session.events) != len(rows):
        raise ReplayError(f"log has {len(rows)} events, replay produced {len(session.events)}")
    for logged, regen in zip(rows, session.events):
        if _normalized(regen.to_dict()) != _normalized(logged):
            raise ReplayError(f"replay diverged at seq {logged['seq']} ({logged['kind']})")
    return session
