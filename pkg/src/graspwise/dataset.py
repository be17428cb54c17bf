"""Corpus schema, serialization, validation, and the synthetic scene generator.

A sample is the 6-tuple: image metadata, language descriptions, stacking
tree, object boxes, grasp rectangles, and per-grasp surface flags. Corpora
are single JSON documents (schema "lvmrd-sim/1") with a fixed field order,
so identical corpora hash identically and save/load round trips are
loss-free.

The generator lays each scene out as disjoint columns of stacked chains:
classes are drawn without replacement, every object gets at least one grasp
whose envelope lies inside its own box, and stack columns never overlap
horizontally. Those invariants make oracle grounding and planning exact on
generated corpora.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .geometry import AxisRect, GraspRect, axis_envelope
from .lang import Description, RelationTriple, Source, generate, sample_pairs
from .scene import (
    GraspAnnotation,
    ObjectInstance,
    Predicate,
    Scene,
    SceneIssue,
    validate,
)
from .seeds import derive_seed
from .vocab import CLASS_SIZE_PRIORS, DEFAULT_CLASSES

log = logging.getLogger(__name__)

SCHEMA_VERSION = "lvmrd-sim/1"
SPLIT_PROPORTIONS = (3740, 468, 468)  # train / val / test

IMAGE_HEIGHT = 480
COLUMN_GAP = 15.0
MARGIN = 20.0


class CorpusFormatError(ValueError):
    """Unreadable or wrongly-shaped corpus file; nothing is loaded partially."""


class CorpusValidationError(ValueError):
    """Parsed fine but violates scene or description invariants."""

    def __init__(self, issues: list[tuple[str, str]]):
        self.issues = issues
        lines = "; ".join(f"{sid}: {msg}" for sid, msg in issues[:10])
        more = f" (+{len(issues) - 10} more)" if len(issues) > 10 else ""
        super().__init__(f"{len(issues)} corpus violations: {lines}{more}")


class GenerationError(RuntimeError):
    """Could not lay out a valid scene within the retry budget."""


@dataclass(frozen=True)
class SampleRecord:
    scene: Scene
    descriptions: tuple[Description, ...]
    image_path: Optional[str] = None


@dataclass(frozen=True)
class FineTuneRecord:
    """One grounding example harvested from a live session."""

    scene_id: str
    text: str
    source: str  # SELF_EXPLANATION or HUMAN
    grounded_box: tuple[float, float, float, float]


def scene_to_dict(scene: Scene) -> dict:
    return {
        "id": scene.id,
        "image": {"width": scene.image_size[0], "height": scene.image_size[1]},
        "objects": [
            {"id": o.id, "class": o.class_name, "bbox": [o.bbox.x, o.bbox.y, o.bbox.w, o.bbox.h]}
            for o in scene.objects
        ],
        "tree": [[c, p] for c, p in sorted(scene.tree.edges)],
        "grasps": [
            {
                "object_id": g.object_id,
                "rect": [g.rect.cx, g.rect.cy, g.rect.theta, g.rect.w, g.rect.h],
                "surface": g.surface,
            }
            for g in scene.grasps
        ],
    }


def scene_from_dict(data: dict) -> Scene:
    objects = [
        ObjectInstance(id=int(o["id"]), class_name=str(o["class"]), bbox=AxisRect(*o["bbox"]))
        for o in data["objects"]
    ]
    grasps = [
        GraspAnnotation(
            object_id=int(g["object_id"]),
            rect=GraspRect(*g["rect"]),
            surface=bool(g["surface"]),
        )
        for g in data.get("grasps", [])
    ]
    return Scene.build(
        scene_id=str(data["id"]),
        image_size=(int(data["image"]["width"]), int(data["image"]["height"])),
        objects=objects,
        tree_edges=[(int(c), int(p)) for c, p in data.get("tree", [])],
        grasps=grasps,
    )


def description_to_dict(desc: Description) -> dict:
    t = desc.triple
    return {
        "subject": t.subject_class,
        "predicate": t.predicate.value,
        "object": t.object_class,
        "subject_id": t.subject_id,
        "object_id": t.object_id,
        "text": desc.text,
        "source": desc.source.value,
    }


def description_from_dict(data: dict) -> Description:
    triple = RelationTriple(
        subject_class=str(data["subject"]),
        predicate=Predicate[data["predicate"]],
        object_class=str(data["object"]),
        subject_id=None if data.get("subject_id") is None else int(data["subject_id"]),
        object_id=None if data.get("object_id") is None else int(data["object_id"]),
    )
    return Description(triple=triple, text=str(data["text"]), source=Source(data["source"]))


def record_to_dict(record: SampleRecord) -> dict:
    body = scene_to_dict(record.scene)
    if record.image_path is not None:
        body["image"]["path"] = record.image_path
    body["descriptions"] = [description_to_dict(d) for d in record.descriptions]
    return body


def record_from_dict(data: dict) -> SampleRecord:
    return SampleRecord(
        scene=scene_from_dict(data),
        descriptions=tuple(description_from_dict(d) for d in data.get("descriptions", [])),
        image_path=data.get("image", {}).get("path"),
    )


def save(corpus: Sequence[SampleRecord], path: Union[str, Path]) -> None:
    doc = {"schema": SCHEMA_VERSION, "scenes": [record_to_dict(r) for r in corpus]}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _validate_record(record: SampleRecord) -> list[tuple[str, str]]:
    issues: list[tuple[str, str]] = [
        (record.scene.id, f"{i.code}: {i.message}") for i in validate(record.scene)
    ]
    if issues:
        return issues
    scene = record.scene
    by_class: dict[str, list[int]] = {}
    for o in scene.objects:
        by_class.setdefault(o.class_name, []).append(o.id)
    for d in record.descriptions:
        t = d.triple
        if t.subject_id is not None and t.object_id is not None:
            ok = scene.graph.holds(t.subject_id, t.predicate, t.object_id)
        else:
            ok = any(
                s != o and scene.graph.holds(s, t.predicate, o)
                for s in by_class.get(t.subject_class, [])
                for o in by_class.get(t.object_class, [])
            )
        if not ok:
            issues.append((scene.id, f"description {d.text!r} does not hold in the scene graph"))
    return issues


def load(path: Union[str, Path]) -> list[SampleRecord]:
    """Read and fully validate a corpus; raises before returning anything partial."""
    raw = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA_VERSION:
        raise CorpusFormatError(
            f"{path}: expected schema {SCHEMA_VERSION!r}, got {doc.get('schema')!r}"
            if isinstance(doc, dict)
            else f"{path}: corpus document must be a JSON object"
        )
    records = []
    issues: list[tuple[str, str]] = []
    for i, entry in enumerate(doc.get("scenes", [])):
        try:
            records.append(record_from_dict(entry))
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusFormatError(f"{path}: scene entry {i} is malformed: {exc}") from None
    for record in records:
        issues.extend(_validate_record(record))
    if issues:
        raise CorpusValidationError(issues)
    return records


def _stack_partition(rng: random.Random, count: int, require_stack: bool) -> list[list[int]]:
    stacks: list[list[int]] = []
    for oid in range(count):
        if stacks and rng.random() < 0.55:
            stacks[-1].append(oid)
        else:
            stacks.append([oid])
    if require_stack and count >= 2 and len(stacks[0]) == 1:
        stacks[0].append(stacks[1].pop(0))
        if not stacks[1]:
            stacks.pop(1)
    return stacks


def _gen_grasps(rng: random.Random, oid: int, bbox: AxisRect, surface: bool) -> list[GraspAnnotation]:
    out = []
    for _ in range(rng.randint(1, 2)):
        theta = rng.uniform(-90.0, 90.0 - 1e-9)
        c, s = abs(math.cos(math.radians(theta))), abs(math.sin(math.radians(theta)))
        gamma = rng.uniform(0.3, 0.6)  # gripper aspect h/w
        limit = min((bbox.w - 4.0) / (c + gamma * s), (bbox.h - 4.0) / (s + gamma * c))
        w = limit * rng.uniform(0.5, 0.95)
        h = gamma * w
        ew = w * c + h * s
        eh = w * s + h * c
        cx = rng.uniform(bbox.x + ew / 2.0 + 1.0, bbox.x2 - ew / 2.0 - 1.0)
        cy = rng.uniform(bbox.y + eh / 2.0 + 1.0, bbox.y2 - eh / 2.0 - 1.0)
        rect = GraspRect(cx=cx, cy=cy, theta=theta, w=w, h=h)
        env = axis_envelope(rect)
        if not (bbox.x <= env.x and env.x2 <= bbox.x2 and bbox.y <= env.y and env.y2 <= bbox.y2):
            raise GenerationError(f"grasp envelope escaped bbox of object {oid}")
        out.append(GraspAnnotation(object_id=oid, rect=rect, surface=surface))
    return out


def _gen_scene(
    scene_id: str,
    rng: random.Random,
    min_obj: int,
    max_obj: int,
    require_stack: bool,
    classes: Sequence[str],
) -> SampleRecord:
    count = rng.randint(min_obj, max_obj)
    names = rng.sample(list(classes), count)
    stacks = _stack_partition(rng, count, require_stack)

    sizes: dict[int, tuple[float, float]] = {}
    for oid, name in enumerate(names):
        pw, ph = CLASS_SIZE_PRIORS.get(name, (80.0, 60.0))
        sizes[oid] = (pw * rng.uniform(0.8, 1.2), ph * rng.uniform(0.8, 1.2))

    objects: list[ObjectInstance] = [None] * count  # type: ignore[list-item]
    edges: list[tuple[int, int]] = []
    cursor = MARGIN
    for chain in stacks:
        col_w = max(sizes[oid][0] for oid in chain) + 10.0
        col_center = cursor + col_w / 2.0
        base_w, base_h = sizes[chain[0]]
        base_cy = rng.uniform(IMAGE_HEIGHT * 0.45, IMAGE_HEIGHT - base_h / 2.0 - MARGIN)
        prev_center = (col_center, base_cy)
        prev_h = base_h
        for depth, oid in enumerate(chain):
            w, h = sizes[oid]
            if depth == 0:
                cx, cy = prev_center
            else:
                # anchor jitter at the column center so deep chains cannot
                # random-walk outside their own column
                slack = (col_w - 10.0 - w) / 2.0
                cx = col_center + rng.uniform(-slack, slack) if slack > 0 else col_center
                cy = prev_center[1] - rng.uniform(0.1, 0.25) * prev_h
                cy = max(h / 2.0 + 4.0, min(cy, IMAGE_HEIGHT - h / 2.0 - 4.0))
                edges.append((oid, chain[depth - 1]))
            objects[oid] = ObjectInstance(
                id=oid, class_name=names[oid], bbox=AxisRect(cx - w / 2.0, cy - h / 2.0, w, h)
            )
            prev_center = (cx, cy)
            prev_h = h
        cursor += col_w + COLUMN_GAP

    width = int(math.ceil(cursor - COLUMN_GAP + MARGIN))
    buried = {parent for _, parent in edges}
    grasps: list[GraspAnnotation] = []
    for oid in range(count):
        grasps.extend(_gen_grasps(rng, oid, objects[oid].bbox, surface=oid not in buried))

    scene = Scene.build(
        scene_id=scene_id,
        image_size=(width, IMAGE_HEIGHT),
        objects=objects,
        tree_edges=edges,
        grasps=grasps,
    )
    triples = sample_pairs(scene, rng.randrange(1 << 30), count=3)
    descriptions = tuple(
        generate(t, template_seed=rng.randrange(1 << 16), vocabulary=names) for t in triples
    )
    return SampleRecord(scene=scene, descriptions=descriptions)


def gen_synthetic(
    n: int,
    seed: int,
    min_obj: int = 2,
    max_obj: int = 6,
    require_stack: bool = False,
    classes: Sequence[str] = DEFAULT_CLASSES,
) -> list[SampleRecord]:
    """Seeded synthetic corpus; every scene passes validation by construction."""
    if not 1 <= min_obj <= max_obj:
        raise ValueError(f"need 1 <= min_obj <= max_obj, got {min_obj}..{max_obj}")
    if max_obj > len(classes):
        raise ValueError(f"max_obj {max_obj} exceeds the {len(classes)}-class vocabulary")
    out = []
    for i in range(n):
        scene_id = f"scene-{i:06d}"
        rng = random.Random(derive_seed(seed, scene_id, "gen"))
        out.append(_gen_scene(scene_id, rng, min_obj, max_obj, require_stack, classes))
    return out


def split_corpus(
    corpus: Sequence[SampleRecord],
    seed: int,
    proportions: tuple[int, int, int] = SPLIT_PROPORTIONS,
) -> tuple[list[SampleRecord], list[SampleRecord], list[SampleRecord]]:
    """Shuffled train/val/test split honoring the proportions up to rounding."""
    order = list(corpus)
    random.Random(seed).shuffle(order)
    total = sum(proportions)
    n = len(order)
    counts = [n * p // total for p in proportions]
    remainders = sorted(
        range(3), key=lambda i: (-(n * proportions[i] % total), i)
    )
    for i in range(n - sum(counts)):
        counts[remainders[i % 3]] += 1
    a, b = counts[0], counts[0] + counts[1]
    return order[:a], order[a:b], order[b:]


def export_session_samples(
    event_log: Union[str, Path, Iterable[dict]],
) -> list[FineTuneRecord]:
    """Harvest grounding examples from a session event log.

    Each successful grounding event yields one record carrying the
    description that produced it and its source tag. Sessions that never
    grounded are skipped with a warning.
    """
    if isinstance(event_log, (str, Path)):
        events = []
        with open(event_log, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    events.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise CorpusFormatError(f"{event_log}:{lineno}: bad event line: {exc.msg}") from None
    else:
        events = list(event_log)

    by_session: dict[str, list[dict]] = {}
    for ev in events:
        by_session.setdefault(str(ev.get("session_id", "")), []).append(ev)

    records: list[FineTuneRecord] = []
    for sid in sorted(by_session):
        session_events = sorted(by_session[sid], key=lambda e: e.get("seq", 0))
        grounded = [e for e in session_events if e.get("kind") == "GROUNDED"]
        if not grounded:
            log.warning("session %s has no completed grounding; skipped", sid)
            continue
        for ev in grounded:
            payload = ev.get("payload", {})
            try:
                records.append(
                    FineTuneRecord(
                        scene_id=str(payload["scene_id"]),
                        text=str(payload["description_text"]),
                        source=str(payload["description_source"]),
                        grounded_box=tuple(float(v) for v in payload["region"]),
                    )
                )
            except (KeyError, TypeError, ValueError):
                log.warning("session %s event %s incomplete; skipped", sid, ev.get("seq"))
    return records
