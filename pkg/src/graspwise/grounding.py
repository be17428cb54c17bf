"""Resolve a parsed description to a scene object and its region.

The subject candidates are the instances of the subject class that satisfy
the described relation against some instance of the object class. Inverse
predicates (UNDER, RIGHT) are resolved here against the canonical scene
graph, so the stored sentence stays exactly what was typed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .geometry import AxisRect
from .lang import Description
from .scene import Scene


class GroundingError(ValueError):
    """No scene object satisfies the described relation."""

    code = "grounding-failure"


@dataclass(frozen=True)
class GroundedObject:
    object_id: int
    region: AxisRect
    confidence: float
    ambiguous: bool = False


def ground(scene: Scene, desc: Description) -> GroundedObject:
    """Oracle grounding: unique match gets confidence 1, ties break to lowest id."""
    triple = desc.triple
    subjects = scene.instances_of(triple.subject_class)
    objects = scene.instances_of(triple.object_class)
    candidates = sorted(
        s.id
        for s in subjects
        if any(o.id != s.id and scene.graph.holds(s.id, triple.predicate, o.id) for o in objects)
    )
    if not candidates:
        raise GroundingError(
            f"no {triple.subject_class!r} is {triple.predicate.value} "
            f"a {triple.object_class!r} in scene {scene.id!r}"
        )
    chosen = candidates[0]
    return GroundedObject(
        object_id=chosen,
        region=scene.object(chosen).bbox,
        confidence=1.0 / len(candidates),
        ambiguous=len(candidates) > 1,
    )


def noisy_ground(scene: Scene, desc: Description, delta: float, seed: int) -> GroundedObject:
    """Grounding with simulated model error: wrong object with probability delta.

    The reported confidence is the model's own (it does not know it is
    wrong). A single-object scene has no wrong answer to give.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must be in [0, 1], got {delta}")
    oracle = ground(scene, desc)
    rng = random.Random(seed)
    if rng.random() < delta:
        wrong = [o.id for o in scene.objects if o.id != oracle.object_id]
        if wrong:
            pick = wrong[rng.randrange(len(wrong))]
            return GroundedObject(
                object_id=pick,
                region=scene.object(pick).bbox,
                confidence=oracle.confidence,
                ambiguous=False,
            )
    return oracle
