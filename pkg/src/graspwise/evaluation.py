"""Metrics and experiment runners.

A predicted grasp is correct when it overlaps some ground-truth grasp of a
collision-free object with Jaccard > 0.25 and its angle is within 30
degrees (mod 180) of that same grasp. R@k asks whether any of the top k is
correct per scene; P@k pools correct counts over min(k, ranked) slots. F1
is the harmonic mean of P@1 and R@1.

Every random stage draws from its own seed derived by hashing
(master seed, scene id, stage name), so sweeps over the intervention rate
share corruption draws scene for scene: raising rho only ever corrects
more scenes, and a fully corrected run is bit-identical to a clean one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .geometry import axis_envelope, normalize_angle, rect_iou
from .grounding import GroundingError, ground, noisy_ground
from .lang import Description, LanguageError, Source, describe_scene, parse
from .noise import NoiseConfig, corrupt_description, intervene
from .planner import (
    ScoredGrasp,
    baseline_end2end,
    baseline_scenegraph,
    gen_proposals,
    kgpn_sample,
    score_and_select,
)
from .scene import Scene, collision_free_set
from .seeds import derive_seed

JACCARD_THRESHOLD = 0.25
ANGLE_TOLERANCE_DEG = 30.0
DEFAULT_KS = (1, 3, 5, 10)

PerScene = Sequence[tuple[Scene, Sequence[ScoredGrasp]]]


class UndefinedMetricError(ValueError):
    """Metric requested over an empty corpus."""


class ShapeMismatchError(ValueError):
    """Aligned lists differ in length."""


def stage_seed(master_seed: int, scene_id: str, stage: str) -> int:
    """Stable per-scene per-stage seed; independent of process hash salting."""
    return derive_seed(master_seed, scene_id, stage)


def is_correct(pred: ScoredGrasp, scene: Scene, axis_aligned: bool = False) -> bool:
    """Strict thresholds: Jaccard > 0.25 and angle error < 30 degrees, both
    against one ground-truth grasp of a collision-free object."""
    free = collision_free_set(scene)
    for ann in scene.grasps:
        if ann.object_id not in free:
            continue
        if axis_aligned:
            jaccard = rect_iou(axis_envelope(pred.rect), axis_envelope(ann.rect))
        else:
            jaccard = rect_iou(pred.rect, ann.rect)
        if jaccard <= JACCARD_THRESHOLD:
            continue
        angle_err = abs(normalize_angle(pred.rect.theta - ann.rect.theta))
        if angle_err < ANGLE_TOLERANCE_DEG:
            return True
    return False


def recall_at_k(per_scene: PerScene, k: int) -> float:
    """Fraction of scenes with at least one correct grasp in the top k."""
    if not per_scene:
        raise UndefinedMetricError("recall over an empty corpus")
    hits = sum(
        1 for scene, ranked in per_scene if any(is_correct(g, scene) for g in ranked[:k])
    )
    return hits / len(per_scene)


def precision_at_k(per_scene: PerScene, k: int) -> float:
    """Pooled correct count over the slots actually filled, capped at k."""
    if not per_scene:
        raise UndefinedMetricError("precision over an empty corpus")
    correct = 0
    slots = 0
    for scene, ranked in per_scene:
        top = ranked[:k]
        slots += min(k, len(ranked))
        correct += sum(1 for g in top if is_correct(g, scene))
    return correct / slots if slots else 0.0


def f1(p: float, r: float) -> float:
    if not (0.0 <= p <= 1.0 and 0.0 <= r <= 1.0):
        raise ValueError(f"precision and recall must be in [0, 1], got p={p}, r={r}")
    if p == 0.0 and r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


def subject_correct_rate(generated: Sequence[Description], gt_subjects: Sequence[str]) -> float:
    """Fraction of descriptions whose parsed subject matches the truth."""
    if len(generated) != len(gt_subjects):
        raise ShapeMismatchError(
            f"{len(generated)} descriptions vs {len(gt_subjects)} ground-truth subjects"
        )
    if not generated:
        raise UndefinedMetricError("subject correctness over an empty list")
    correct = 0
    for desc, subject in zip(generated, gt_subjects):
        text = desc.text if isinstance(desc, Description) else str(desc)
        try:
            triple = parse(text)
        except LanguageError:
            continue
        if triple.subject_class == subject:
            correct += 1
    return correct / len(generated)


@dataclass(frozen=True)
class SceneOutcome:
    scene_id: str
    ranked: tuple[ScoredGrasp, ...]
    grounded_ok: bool
    grounding_iou_ok: bool
    intervened: bool
    corrupted_shown: bool  # description was damaged and never corrected


def run_scene(scene: Scene, noise: NoiseConfig, rho: float) -> SceneOutcome:
    """One full pipeline pass: describe, corrupt, intervene, ground, plan, score."""
    seed = noise.seed
    oracle_desc = describe_scene(scene, stage_seed(seed, scene.id, "describe"))
    desc = corrupt_description(
        oracle_desc, scene, noise.describe_error_rate, stage_seed(seed, scene.id, "corrupt")
    )
    desc = intervene(desc, oracle_desc, rho, stage_seed(seed, scene.id, "intervene"))

    intervened = desc.source is Source.HUMAN
    corrupted_shown = desc.corrupted
    proposals = gen_proposals(scene, stage_seed(seed, scene.id, "proposals"))
    try:
        grounded = noisy_ground(
            scene, desc, noise.ground_error_rate, stage_seed(seed, scene.id, "ground")
        )
    except GroundingError:
        return SceneOutcome(
            scene_id=scene.id,
            ranked=(),
            grounded_ok=False,
            grounding_iou_ok=False,
            intervened=intervened,
            corrupted_shown=corrupted_shown,
        )
    true_target = min(collision_free_set(scene))
    iou_ok = rect_iou(grounded.region, scene.object(true_target).bbox) > 0.5
    positives, _ = kgpn_sample(proposals, [g.rect for g in scene.grasps], grounded.region)
    ranked = score_and_select(scene, positives, noise, stage_seed(seed, scene.id, "score"))
    return SceneOutcome(
        scene_id=scene.id,
        ranked=tuple(ranked),
        grounded_ok=True,
        grounding_iou_ok=iou_ok,
        intervened=intervened,
        corrupted_shown=corrupted_shown,
    )


@dataclass(frozen=True)
class EvalReport:
    recall: dict[int, float]
    precision: dict[int, float]
    f1: float
    accuracy: float  # grounding accuracy: grounded region IoU > 0.5 vs the true target
    n_scenes: int
    intervention_rate: float  # realized fraction of damaged descriptions corrected
    residual_error_rate: float  # damaged and uncorrected, over all scenes
    config: dict = field(default_factory=dict)


def _aggregate(
    scenes: Sequence[Scene],
    outcomes: Sequence[SceneOutcome],
    ks: Sequence[int],
    config: dict,
) -> EvalReport:
    per_scene = [(s, o.ranked) for s, o in zip(scenes, outcomes)]
    recall = {k: recall_at_k(per_scene, k) for k in ks}
    precision = {k: precision_at_k(per_scene, k) for k in ks}
    r1 = recall.get(1, recall_at_k(per_scene, 1))
    p1 = precision.get(1, precision_at_k(per_scene, 1))
    corrupted = sum(1 for o in outcomes if o.corrupted_shown or o.intervened)
    intervened = sum(1 for o in outcomes if o.intervened)
    return EvalReport(
        recall=recall,
        precision=precision,
        f1=f1(p1, r1),
        accuracy=sum(1 for o in outcomes if o.grounding_iou_ok) / len(outcomes),
        n_scenes=len(outcomes),
        intervention_rate=intervened / corrupted if corrupted else 0.0,
        residual_error_rate=sum(1 for o in outcomes if o.corrupted_shown) / len(outcomes),
        config=config,
    )


def evaluate_corpus(
    corpus: Sequence[Scene],
    noise: Optional[NoiseConfig] = None,
    rho: float = 0.0,
    ks: Sequence[int] = DEFAULT_KS,
) -> EvalReport:
    """Full-system evaluation; scenes are processed in id order."""
    if not corpus:
        raise UndefinedMetricError("evaluation over an empty corpus")
    noise = noise or NoiseConfig()
    scenes = sorted(corpus, key=lambda s: s.id)
    outcomes = [run_scene(s, noise, rho) for s in scenes]
    config = {
        "system": "scenetext",
        "describe_error_rate": noise.describe_error_rate,
        "ground_error_rate": noise.ground_error_rate,
        "surface_flip_rate": noise.surface_flip_rate,
        "angle_noise_rate": noise.angle_noise_rate,
        "rho": rho,
        "seed": noise.seed,
        "ks": list(ks),
    }
    return _aggregate(scenes, outcomes, ks, config)


def sweep_intervention(
    corpus: Sequence[Scene],
    eps: float,
    rho_list: Sequence[float],
    seed: int,
    ks: Sequence[int] = DEFAULT_KS,
) -> list[EvalReport]:
    """One report per intervention rate, sharing all non-rho randomness."""
    noise = NoiseConfig(describe_error_rate=eps, seed=seed)
    return [evaluate_corpus(corpus, noise, rho, ks) for rho in rho_list]


def _evaluate_ranked_baseline(
    corpus: Sequence[Scene],
    seed: int,
    system: str,
    flip_rate: float,
    ks: Sequence[int],
) -> EvalReport:
    scenes = sorted(corpus, key=lambda s: s.id)
    outcomes = []
    for scene in scenes:
        proposals = gen_proposals(scene, stage_seed(seed, scene.id, "proposals"))
        if system == "end2end":
            ranked = baseline_end2end(scene, proposals, stage_seed(seed, scene.id, "score"))
        else:
            ranked = baseline_scenegraph(
                scene, proposals, flip_rate, stage_seed(seed, scene.id, "graph")
            )
        outcomes.append(
            SceneOutcome(
                scene_id=scene.id,
                ranked=tuple(ranked),
                grounded_ok=True,
                grounding_iou_ok=False,
                intervened=False,
                corrupted_shown=False,
            )
        )
    config = {"system": system, "flip_rate": flip_rate, "seed": seed, "ks": list(ks)}
    return _aggregate(scenes, outcomes, ks, config)


def evaluate_baseline(
    corpus: Sequence[Scene],
    system: str,
    seed: int,
    flip_rate: float = 0.0,
    ks: Sequence[int] = DEFAULT_KS,
) -> EvalReport:
    """Evaluate one of the non-language baselines on its own."""
    if system not in ("end2end", "scenegraph"):
        raise ValueError(f"unknown baseline {system!r}")
    if not corpus:
        raise UndefinedMetricError("evaluation over an empty corpus")
    return _evaluate_ranked_baseline(corpus, seed, system, flip_rate, ks)


@dataclass(frozen=True)
class BaselineRow:
    system: str
    params: dict
    report: EvalReport


def compare_baselines(
    corpus: Sequence[Scene],
    seed: int,
    flip_rates: Sequence[float] = (0.0, 0.1, 0.5),
    eps: float = 0.4,
    rhos: Sequence[float] = (0.0, 1.0),
    ks: Sequence[int] = DEFAULT_KS,
) -> list[BaselineRow]:
    """End-to-end detector, graph-only planner at several corruption rates,
    and the full language system clean and noisy. All rows share the same
    per-scene proposal draws."""
    if not corpus:
        raise UndefinedMetricError("baseline comparison over an empty corpus")
    rows = [
        BaselineRow(
            system="end2end",
            params={},
            report=_evaluate_ranked_baseline(corpus, seed, "end2end", 0.0, ks),
        )
    ]
    for flip in flip_rates:
        rows.append(
            BaselineRow(
                system="scenegraph",
                params={"flip_rate": flip},
                report=_evaluate_ranked_baseline(corpus, seed, "scenegraph", flip, ks),
            )
        )
    rows.append(
        BaselineRow(
            system="scenetext",
            params={"eps": 0.0, "rho": 0.0},
            report=evaluate_corpus(corpus, NoiseConfig(seed=seed), 0.0, ks),
        )
    )
    for rho in rhos:
        rows.append(
            BaselineRow(
                system="scenetext",
                params={"eps": eps, "rho": rho},
                report=evaluate_corpus(
                    corpus, NoiseConfig(describe_error_rate=eps, seed=seed), rho, ks
                ),
            )
        )
    return rows
