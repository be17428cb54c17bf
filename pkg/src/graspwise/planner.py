"""Knowledge-guided grasp planning.

Proposals are axis-aligned envelopes: seeded Gaussian jitter around the
annotated grasps plus uniform random boxes, with the exact annotation
envelopes always present in the pool. A proposal is POSITIVE only when it
overlaps a ground-truth grasp (iou > 0.5) AND lies mostly on the grounded
object region (tiou > 0.5); both thresholds are strict. Scoring averages
box confidence (best iou) with surface confidence, and the final rectangle
takes its center from the proposal and its size and binned angle from the
matched annotation.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional, Sequence

from .geometry import AxisRect, GraspRect, axis_envelope, normalize_angle, rect_iou, tiou
from .noise import NoiseConfig
from .scene import CyclicTreeError, GraspAnnotation, RelationshipTree, Scene, closure

ANGLE_CLASSES = 18  # grasp orientation bins; class 0 is reserved for non-grasp
ANGLE_BIN_DEG = 10.0
IOU_THRESHOLD = 0.5
TIOU_THRESHOLD = 0.5
JITTER_CENTER_SIGMA = 5.0
JITTER_SIZE_FRAC = 0.1


class Label(str, Enum):
    POSITIVE = "POSITIVE"
    NEGATIVE = "NEGATIVE"


class EmptyProposalsError(ValueError):
    """Scene has no grasp annotations to propose around."""

    code = "empty-proposals"


@dataclass(frozen=True)
class Proposal:
    envelope: AxisRect
    matched_gt: Optional[int] = None  # index into the ground-truth grasp list
    iou_best: float = 0.0
    tiou_k: float = 0.0
    label: Optional[Label] = None


@dataclass(frozen=True)
class ScoredGrasp:
    rect: GraspRect
    box_conf: float
    surface_conf: float
    angle_class: int
    final_conf: float


def angle_to_class(theta: float) -> int:
    """Orientation class 1..18 for 10-degree bins over [-90, 90)."""
    t = normalize_angle(theta)
    return min(ANGLE_CLASSES, 1 + int(math.floor((t + 90.0) / ANGLE_BIN_DEG)))


def class_to_angle(c: int) -> float:
    """Center angle of an orientation class; class 0 (non-grasp) has none."""
    if not 1 <= c <= ANGLE_CLASSES:
        raise ValueError(f"orientation class must be in 1..{ANGLE_CLASSES}, got {c}")
    return -90.0 + (c - 1) * ANGLE_BIN_DEG + ANGLE_BIN_DEG / 2.0


def _match(envelope: AxisRect, gt_envelopes: Sequence[AxisRect]) -> tuple[Optional[int], float]:
    if not gt_envelopes:
        return None, 0.0
    ious = [rect_iou(envelope, e) for e in gt_envelopes]
    best = max(range(len(ious)), key=lambda j: ious[j])
    return best, ious[best]


def gen_proposals(
    scene: Scene,
    seed: int,
    n_pos_target: int = 128,
    n_neg_target: int = 128,
    jitter_center_sigma: float = JITTER_CENTER_SIGMA,
    jitter_size_frac: float = JITTER_SIZE_FRAC,
) -> list[Proposal]:
    """Unlabeled proposal pool: exact annotation envelopes, jittered copies,
    then uniform random boxes. iou_best is against the annotation envelopes."""
    if not scene.grasps:
        raise EmptyProposalsError(f"scene {scene.id!r} has no grasp annotations")
    rng = random.Random(seed)
    gt_envelopes = [axis_envelope(g.rect) for g in scene.grasps]

    envelopes: list[AxisRect] = list(gt_envelopes)
    for i in range(n_pos_target):
        base = gt_envelopes[i % len(gt_envelopes)]
        cx, cy = base.center
        w = max(2.0, rng.gauss(base.w, jitter_size_frac * base.w))
        h = max(2.0, rng.gauss(base.h, jitter_size_frac * base.h))
        jx = rng.gauss(cx, jitter_center_sigma)
        jy = rng.gauss(cy, jitter_center_sigma)
        envelopes.append(AxisRect(jx - w / 2.0, jy - h / 2.0, w, h))

    width, height = scene.image_size
    for _ in range(n_neg_target):
        w = rng.uniform(8.0, max(9.0, width / 3.0))
        h = rng.uniform(8.0, max(9.0, height / 3.0))
        x = rng.uniform(0.0, max(0.0, width - w))
        y = rng.uniform(0.0, max(0.0, height - h))
        envelopes.append(AxisRect(x, y, w, h))

    out = []
    for env in envelopes:
        matched, iou_best = _match(env, gt_envelopes)
        out.append(Proposal(envelope=env, matched_gt=matched, iou_best=iou_best))
    return out


def kgpn_sample(
    proposals: Sequence[Proposal],
    grasp_gt: Sequence[GraspRect],
    k: AxisRect,
    counts: tuple[int, int] = (128, 128),
    thresholds: tuple[float, float] = (IOU_THRESHOLD, TIOU_THRESHOLD),
) -> tuple[list[Proposal], list[Proposal]]:
    """Partition proposals by the double threshold against the grounded region k."""
    iou_thr, tiou_thr = thresholds
    gt_envelopes = [axis_envelope(g) for g in grasp_gt]
    positives: list[Proposal] = []
    negatives: list[Proposal] = []
    for pr in proposals:
        matched, iou_best = _match(pr.envelope, gt_envelopes)
        tk = tiou(pr.envelope, k)
        label = Label.POSITIVE if (iou_best > iou_thr and tk > tiou_thr) else Label.NEGATIVE
        labeled = replace(pr, matched_gt=matched, iou_best=iou_best, tiou_k=tk, label=label)
        (positives if label is Label.POSITIVE else negatives).append(labeled)
    n_pos, n_neg = counts
    return positives[:n_pos], negatives[:n_neg]


def _rank(
    scene: Scene,
    positives: Sequence[Proposal],
    surface_conf_of: Callable[[GraspAnnotation], float],
    rng: random.Random,
    angle_noise_rate: float = 0.0,
    surface_flip_rate: float = 0.0,
) -> list[ScoredGrasp]:
    rows: list[tuple[Proposal, ScoredGrasp]] = []
    for pr in positives:
        if pr.matched_gt is None:
            raise ValueError("proposal has no matched annotation to score against")
        ann = scene.grasps[pr.matched_gt]
        angle_class = angle_to_class(ann.rect.theta)
        if angle_noise_rate and rng.random() < angle_noise_rate:
            angle_class = 1 + rng.randrange(ANGLE_CLASSES)
        surface_conf = surface_conf_of(ann)
        if surface_flip_rate and rng.random() < surface_flip_rate:
            surface_conf = 1.0 - surface_conf
        box_conf = min(1.0, max(0.0, pr.iou_best))
        cx, cy = pr.envelope.center
        rect = GraspRect(cx=cx, cy=cy, theta=class_to_angle(angle_class), w=ann.rect.w, h=ann.rect.h)
        grasp = ScoredGrasp(
            rect=rect,
            box_conf=box_conf,
            surface_conf=surface_conf,
            angle_class=angle_class,
            final_conf=(box_conf + surface_conf) / 2.0,
        )
        rows.append((pr, grasp))
    rows.sort(key=lambda t: (-t[1].final_conf, -t[0].iou_best, t[0].envelope.x, t[0].envelope.y))
    return [g for _, g in rows]


def score_and_select(
    scene: Scene,
    positives: Sequence[Proposal],
    noise_cfg: Optional[NoiseConfig],
    seed: int,
) -> list[ScoredGrasp]:
    """Rank positives by final confidence, highest first.

    Surface confidence comes from the matched annotation's surface flag (the
    per-grasp attribute the surface head predicts), so a grasp of a buried
    object never ties with one of a clear object.
    """
    cfg = noise_cfg or NoiseConfig()
    rng = random.Random(seed)
    return _rank(
        scene,
        positives,
        surface_conf_of=lambda ann: 1.0 if ann.surface else 0.0,
        rng=rng,
        angle_noise_rate=cfg.angle_noise_rate,
        surface_flip_rate=cfg.surface_flip_rate,
    )


def _rank_all_by_box_conf(scene: Scene, proposals: Sequence[Proposal], seed: int) -> list[ScoredGrasp]:
    gt_envelopes = [axis_envelope(g.rect) for g in scene.grasps]
    matched = []
    for pr in proposals:
        m, iou_best = _match(pr.envelope, gt_envelopes)
        if m is None:
            continue
        matched.append(replace(pr, matched_gt=m, iou_best=iou_best))
    return _rank(scene, matched, surface_conf_of=lambda ann: 0.5, rng=random.Random(seed))


def baseline_end2end(scene: Scene, proposals: Sequence[Proposal], seed: int) -> list[ScoredGrasp]:
    """Object-agnostic baseline: no grounded-region filter, no surface knowledge.

    Positives are selected on grasp overlap alone and every surface
    confidence is a noncommittal 0.5, so the ranking cannot tell a buried
    object's grasp from a clear one's.
    """
    gt_envelopes = [axis_envelope(g.rect) for g in scene.grasps]
    positives = []
    for pr in proposals:
        m, iou_best = _match(pr.envelope, gt_envelopes)
        if m is not None and iou_best > IOU_THRESHOLD:
            positives.append(replace(pr, matched_gt=m, iou_best=iou_best))
    return _rank(scene, positives, surface_conf_of=lambda ann: 0.5, rng=random.Random(seed))


def baseline_scenegraph(
    scene: Scene,
    proposals: Sequence[Proposal],
    edge_flip_rate: float,
    seed: int,
) -> list[ScoredGrasp]:
    """Graph-only baseline: picks a grasp target from a stacking graph whose
    direct edges each flip direction with the given rate, then plans against
    that target. Surface beliefs come from the same corrupted graph. Falls
    back to a plain box-confidence ranking if corruption yields a cycle or
    an empty graspable set."""
    rng = random.Random(seed)
    flipped = []
    for child, parent in sorted(scene.tree.edges):
        if rng.random() < edge_flip_rate:
            flipped.append((parent, child))
        else:
            flipped.append((child, parent))
    try:
        graph = closure(RelationshipTree.of(flipped), scene.objects)
    except CyclicTreeError:
        return _rank_all_by_box_conf(scene, proposals, seed)
    free = {o.id for o in scene.objects if not graph.objects_above(o.id)}
    if not free:
        return _rank_all_by_box_conf(scene, proposals, seed)
    target = min(free)
    k = scene.object(target).bbox
    positives, _ = kgpn_sample(proposals, [g.rect for g in scene.grasps], k)
    return _rank(
        scene,
        positives,
        surface_conf_of=lambda ann: 1.0 if not graph.objects_above(ann.object_id) else 0.0,
        rng=rng,
    )
