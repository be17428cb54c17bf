"""Error injection for the self-explanation and grounding stages.

corrupt_description damages a true sentence with probability epsilon, using
one of three failure modes seen in practice: swapped roles, wrong relation,
wrong subject. intervene models a decisive human reviewer who corrects only
erroneous descriptions, each with probability rho. Both are pure given
their seed, so sweeps over rho share the same corruption draws.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .lang import TEMPLATES, Description, RelationTriple, Source, generate
from .scene import Predicate, Scene


@dataclass(frozen=True)
class NoiseConfig:
    describe_error_rate: float = 0.0
    ground_error_rate: float = 0.0
    surface_flip_rate: float = 0.0
    angle_noise_rate: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("describe_error_rate", "ground_error_rate", "surface_flip_rate", "angle_noise_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {rate}")


def _template_index(desc: Description) -> int:
    options = TEMPLATES[desc.triple.predicate]
    for i, tpl in enumerate(options):
        if tpl.format(subject=desc.triple.subject_class, object=desc.triple.object_class) == desc.text:
            return i
    return 0


def _render(triple: RelationTriple, template_index: int, scene: Scene) -> str:
    vocab = {o.class_name for o in scene.objects} | {triple.subject_class, triple.object_class}
    return generate(triple, template_seed=template_index, vocabulary=vocab).text


def corrupt_description(desc: Description, scene: Scene, epsilon: float, seed: int) -> Description:
    """With probability epsilon, damage the description; otherwise pass it through.

    Failure modes, uniform: swap subject and object, replace the predicate,
    or replace the subject class with another class present in the scene.
    The corrupted flag is bookkeeping for evaluation; the pipeline stages
    never read it.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    rng = random.Random(seed)
    if rng.random() >= epsilon:
        return desc

    t = desc.triple
    mode = rng.randrange(3)
    if mode == 2:
        others = sorted({o.class_name for o in scene.objects} - {t.subject_class})
        if not others:
            mode = 0
    if mode == 0:
        bad = RelationTriple(
            subject_class=t.object_class,
            predicate=t.predicate,
            object_class=t.subject_class,
            subject_id=t.object_id,
            object_id=t.subject_id,
        )
    elif mode == 1:
        alternatives = [p for p in Predicate if p is not t.predicate]
        bad = replace(t, predicate=alternatives[rng.randrange(len(alternatives))])
    else:
        bad = replace(t, subject_class=others[rng.randrange(len(others))], subject_id=None)

    idx = _template_index(desc) % len(TEMPLATES[bad.predicate])
    return Description(
        triple=bad, text=_render(bad, idx, scene), source=Source.SELF_EXPLANATION, corrupted=True
    )


def intervene(desc: Description, oracle: Description, rho: float, seed: int) -> Description:
    """Human review: a corrupted description is replaced by the oracle one
    with probability rho; correct descriptions are never touched."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must be in [0, 1], got {rho}")
    if not desc.corrupted:
        return desc
    if random.Random(seed).random() < rho:
        return replace(oracle, source=Source.HUMAN, corrupted=False)
    return desc
