"""HTTP front end for live grasp sessions.

Thin JSON layer over the session state machine: every mutating endpoint
takes the per-session lock, applies one transition, and returns the full
serialized state.  Errors carry machine-readable ``code`` fields so
clients can branch without string matching.
"""

from __future__ import annotations

import re
import threading
import uuid
from dataclasses import asdict
from pathlib import Path
from typing import Optional

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from . import session as sessions
from .dataset import scene_from_dict
from .lang import LanguageError
from .noise import NoiseConfig
from .scene import Scene, validate

SESSION_ID_RE = re.compile(r"^[A-Za-z0-9._-]{1,80}$")


class StartRequest(BaseModel):
    scene_id: Optional[str] = None
    scene: Optional[dict] = None
    config: Optional[dict] = None
    session_id: Optional[str] = None


class InterventionRequest(BaseModel):
    text: str


def _error(status: int, code: str, message: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message, **extra})


def _view_model(sess: sessions.Session) -> dict:
    """Operator-facing projection of the state.

    Deliberately excludes the corruption flag: the operator must judge the
    description on its own merits.  The raw log keeps the flag for offline
    analysis.
    """
    scene = sess.scene
    graph = scene.graph
    desc = sess.description
    grounded = sess.grounded
    return {
        "session_id": sess.session_id,
        "phase": sess.phase,
        "scene_id": scene.id,
        "image": {"width": scene.image_size[0], "height": scene.image_size[1]},
        "objects": [
            {"id": o.id, "class": o.class_name, "bbox": [o.bbox.x, o.bbox.y, o.bbox.w, o.bbox.h]}
            for o in scene.objects
        ],
        "stacking_edges": [[c, p] for c, p in sorted(scene.tree.edges)],
        "relations": sorted([s, p.value, o] for (s, p, o) in graph.relations),
        "description": None if desc is None else {"text": desc.text, "source": desc.source.value},
        "grounded": None
        if grounded is None
        else {
            "object_id": grounded.object_id,
            "region": [grounded.region.x, grounded.region.y, grounded.region.w, grounded.region.h],
            "confidence": grounded.confidence,
            "ambiguous": grounded.ambiguous,
        },
        "grasps": [
            {
                "rank": i,
                "rect": [g.rect.cx, g.rect.cy, g.rect.theta, g.rect.w, g.rect.h],
                "corners": [[x, y] for x, y in g.rect.corners()],
                "box_conf": g.box_conf,
                "surface_conf": g.surface_conf,
                "angle_class": g.angle_class,
                "final_conf": g.final_conf,
            }
            for i, g in enumerate(sess.ranked[:10])
        ],
        "success": sess.success,
        "failure": sess.failure,
        "events": [
            {"seq": e.seq, "kind": e.kind, "phase": e.phase, "timestamp": e.timestamp}
            for e in sess.events
        ],
    }


class _Registry:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._sessions: dict[str, tuple[sessions.Session, threading.Lock]] = {}

    def add(self, sess: sessions.Session) -> None:
        with self._lock:
            if sess.session_id in self._sessions:
                raise KeyError(sess.session_id)
            self._sessions[sess.session_id] = (sess, threading.Lock())

    def get(self, sid: str) -> Optional[tuple[sessions.Session, threading.Lock]]:
        with self._lock:
            return self._sessions.get(sid)


def create_app(
    scenes: Optional[dict[str, Scene]] = None,
    log_dir: Optional[Path] = None,
    default_config: Optional[NoiseConfig] = None,
) -> FastAPI:
    scenes = dict(scenes or {})
    log_dir = Path(log_dir) if log_dir is not None else None
    if log_dir is not None:
        log_dir.mkdir(parents=True, exist_ok=True)
    base_config = default_config or NoiseConfig()
    registry = _Registry()
    app = FastAPI(title="graspwise", version="1.0")
    # the operator console is served as a static page from another origin
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"])

    @app.post("/sessions", status_code=201)
    def create_session(req: StartRequest):
        if (req.scene_id is None) == (req.scene is None):
            return _error(422, "bad-request", "provide exactly one of scene_id or scene")
        if req.scene_id is not None:
            scene = scenes.get(req.scene_id)
            if scene is None:
                return _error(404, "unknown-scene", f"no scene named {req.scene_id!r}")
        else:
            try:
                scene = scene_from_dict(req.scene)
            except Exception as exc:
                return _error(422, "bad-scene", f"scene does not parse: {exc}")
            issues = validate(scene)
            if issues:
                return _error(
                    422,
                    "invalid-scene",
                    "scene failed validation",
                    issues=[{"code": i.code, "message": i.message} for i in issues],
                )
        try:
            config = NoiseConfig(**{**asdict(base_config), **(req.config or {})})
        except (TypeError, ValueError) as exc:
            return _error(422, "bad-config", str(exc))
        sid = req.session_id or f"sess-{uuid.uuid4().hex[:12]}"
        if not SESSION_ID_RE.match(sid):
            return _error(422, "bad-session-id", "session ids are limited to [A-Za-z0-9._-]")
        log_path = None if log_dir is None else log_dir / f"{sid}.jsonl"
        try:
            sess = sessions.start(scene, config, session_id=sid, log_path=log_path)
            registry.add(sess)
        except KeyError:
            return _error(409, "duplicate-session", f"session {sid!r} already exists")
        except LanguageError as exc:
            return _error(422, exc.code, str(exc))
        return sess.to_dict()

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        entry = registry.get(sid)
        if entry is None:
            return _error(404, "unknown-session", f"no session {sid!r}")
        sess, lock = entry
        with lock:
            return sess.to_dict()

    @app.post("/sessions/{sid}/intervention")
    def post_intervention(sid: str, req: InterventionRequest):
        entry = registry.get(sid)
        if entry is None:
            return _error(404, "unknown-session", f"no session {sid!r}")
        sess, lock = entry
        with lock:
            try:
                sess.intervene(req.text)
            except sessions.SessionError as exc:
                return _error(409, exc.code, str(exc), phase=exc.phase)
            except LanguageError as exc:
                return _error(422, exc.code, str(exc), tokens=list(exc.tokens))
            return sess.to_dict()

    @app.post("/sessions/{sid}/step")
    def post_step(sid: str):
        entry = registry.get(sid)
        if entry is None:
            return _error(404, "unknown-session", f"no session {sid!r}")
        sess, lock = entry
        with lock:
            try:
                sess.step()
            except sessions.SessionError as exc:
                return _error(409, exc.code, str(exc), phase=exc.phase)
            return sess.to_dict()

    @app.get("/sessions/{sid}/view")
    def get_view(sid: str):
        entry = registry.get(sid)
        if entry is None:
            return _error(404, "unknown-session", f"no session {sid!r}")
        sess, lock = entry
        with lock:
            return _view_model(sess)

    @app.get("/logs/{sid}")
    def get_log(sid: str):
        entry = registry.get(sid)
        if entry is None:
            return _error(404, "unknown-session", f"no session {sid!r}")
        sess, lock = entry
        with lock:
            if sess.log_path is None or not sess.log_path.exists():
                return _error(404, "no-log", f"session {sid!r} has no event log file")
            text = sess.log_path.read_text(encoding="utf-8")
        return PlainTextResponse(text, media_type="application/x-ndjson")

    return app
