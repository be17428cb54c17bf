"""World model: objects, stacking tree, scene-graph closure, surface labels.

The relationship tree stores only directly-adjacent stacking edges
(child ON parent). The scene graph is its transitive closure plus LEFT/RIGHT
relations for every pair not connected through the stacking order, with
stacking taking precedence. Relations are stored canonically: ON for
stacking (UNDER is the queried inverse) and LEFT ordered by center x
(RIGHT is the inverse).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Optional

from .geometry import AxisRect, GraspRect
from .vocab import DEFAULT_CLASSES

# pairs closer than this in center x are ambiguous and get no horizontal relation
HORIZONTAL_TIE_PX = 1.0


class Predicate(str, Enum):
    ON = "ON"
    UNDER = "UNDER"
    LEFT = "LEFT"
    RIGHT = "RIGHT"

    def inverse(self) -> "Predicate":
        return _INVERSE[self]


_INVERSE = {
    Predicate.ON: Predicate.UNDER,
    Predicate.UNDER: Predicate.ON,
    Predicate.LEFT: Predicate.RIGHT,
    Predicate.RIGHT: Predicate.LEFT,
}


class SceneError(ValueError):
    """Scene construction or lookup failure."""


class CyclicTreeError(SceneError):
    """The stacking relation contains a cycle."""


class UnknownObjectError(SceneError, KeyError):
    """Object id not present in the scene."""


@dataclass(frozen=True)
class ObjectInstance:
    id: int
    class_name: str
    bbox: AxisRect


@dataclass(frozen=True)
class RelationshipTree:
    """Directly-adjacent stacking edges: (child_id, parent_id) meaning child ON parent."""

    edges: frozenset[tuple[int, int]]

    @staticmethod
    def of(edges: Iterable[tuple[int, int]]) -> "RelationshipTree":
        return RelationshipTree(edges=frozenset((int(c), int(p)) for c, p in edges))

    def parents_of(self, child: int) -> set[int]:
        return {p for c, p in self.edges if c == child}


@dataclass(frozen=True)
class SceneGraph:
    """Canonical pairwise relations: (subject_id, predicate, object_id)."""

    relations: frozenset[tuple[int, Predicate, int]]
    ambiguous_pairs: frozenset[frozenset[int]] = frozenset()

    def holds(self, subject_id: int, predicate: Predicate, object_id: int) -> bool:
        """True if the relation holds, resolving UNDER/RIGHT through inverses."""
        if (subject_id, predicate, object_id) in self.relations:
            return True
        return (object_id, predicate.inverse(), subject_id) in self.relations

    def on_pairs(self) -> set[tuple[int, int]]:
        return {(s, o) for s, p, o in self.relations if p is Predicate.ON}

    def objects_above(self, object_id: int) -> set[int]:
        """Ids stacked anywhere on top of `object_id`."""
        return {s for s, p, o in self.relations if p is Predicate.ON and o == object_id}

    def relations_of(self, subject_id: int) -> list[tuple[int, Predicate, int]]:
        """All relations with `subject_id` as subject, inverses included."""
        out = []
        for s, p, o in self.relations:
            if s == subject_id:
                out.append((s, p, o))
            if o == subject_id:
                out.append((o, p.inverse(), s))
        return out


@dataclass(frozen=True)
class GraspAnnotation:
    object_id: int
    rect: GraspRect
    surface: bool


@dataclass(frozen=True)
class Scene:
    """Immutable scene: objects, stacking tree and grasp annotations."""

    id: str
    image_size: tuple[int, int]
    objects: tuple[ObjectInstance, ...]
    tree: RelationshipTree
    grasps: tuple[GraspAnnotation, ...]

    @staticmethod
    def build(
        scene_id: str,
        image_size: tuple[int, int],
        objects: Iterable[ObjectInstance],
        tree_edges: Iterable[tuple[int, int]],
        grasps: Iterable[GraspAnnotation] = (),
    ) -> "Scene":
        return Scene(
            id=scene_id,
            image_size=(int(image_size[0]), int(image_size[1])),
            objects=tuple(objects),
            tree=RelationshipTree.of(tree_edges),
            grasps=tuple(grasps),
        )

    @cached_property
    def by_id(self) -> dict[int, ObjectInstance]:
        return {o.id: o for o in self.objects}

    @cached_property
    def graph(self) -> SceneGraph:
        return closure(self.tree, self.objects)

    def object(self, object_id: int) -> ObjectInstance:
        try:
            return self.by_id[object_id]
        except KeyError:
            raise UnknownObjectError(f"scene {self.id!r} has no object {object_id}") from None

    def instances_of(self, class_name: str) -> list[ObjectInstance]:
        return [o for o in self.objects if o.class_name == class_name]

    def grasps_of(self, object_id: int) -> list[GraspAnnotation]:
        return [g for g in self.grasps if g.object_id == object_id]


def _toposort(ids: list[int], edges: Iterable[tuple[int, int]]) -> list[int]:
    """Kahn's algorithm; raises CyclicTreeError if the edges contain a cycle."""
    out: dict[int, set[int]] = {i: set() for i in ids}
    indeg: dict[int, int] = {i: 0 for i in ids}
    for child, parent in edges:
        if parent not in out[child]:
            out[child].add(parent)
            indeg[parent] += 1
    ready = sorted(i for i in ids if indeg[i] == 0)
    order: list[int] = []
    while ready:
        n = ready.pop()
        order.append(n)
        for m in sorted(out[n]):
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
    if len(order) != len(ids):
        raise CyclicTreeError("stacking relation contains a cycle")
    return order


def closure(tree: RelationshipTree, objects: Iterable[ObjectInstance]) -> SceneGraph:
    """Full scene graph: transitive stacking closure plus horizontal relations.

    Every pair not connected by the stacking order gets LEFT by center-x
    comparison; near-ties (|dx| < 1 px) are recorded as ambiguous instead.
    """
    objs = list(objects)
    ids = [o.id for o in objs]
    id_set = set(ids)
    if len(id_set) != len(ids):
        raise SceneError("duplicate object ids")
    for c, p in tree.edges:
        if c not in id_set or p not in id_set:
            raise SceneError(f"tree edge ({c}, {p}) references a missing object")
        if c == p:
            raise CyclicTreeError(f"object {c} stacked on itself")

    order = _toposort(ids, tree.edges)
    # reachable-parent sets; parents must be complete before their children,
    # so walk the child-first topological order backwards
    above: dict[int, set[int]] = {i: set() for i in ids}  # id -> all ids it sits on
    for n in reversed(order):
        for parent in tree.parents_of(n):
            above[n].add(parent)
            above[n] |= above[parent]

    relations: set[tuple[int, Predicate, int]] = set()
    ambiguous: set[frozenset[int]] = set()
    for child, ancestors in above.items():
        for anc in ancestors:
            relations.add((child, Predicate.ON, anc))

    center_x = {o.id: o.bbox.center[0] for o in objs}
    stacked_pairs = {frozenset((s, o)) for s, _, o in relations}
    sorted_ids = sorted(ids)
    for i, a in enumerate(sorted_ids):
        for b in sorted_ids[i + 1 :]:
            if frozenset((a, b)) in stacked_pairs:
                continue
            dx = center_x[a] - center_x[b]
            if abs(dx) < HORIZONTAL_TIE_PX:
                ambiguous.add(frozenset((a, b)))
            elif dx < 0:
                relations.add((a, Predicate.LEFT, b))
            else:
                relations.add((b, Predicate.LEFT, a))

    return SceneGraph(relations=frozenset(relations), ambiguous_pairs=frozenset(ambiguous))


def surface_label(scene: Scene, object_id: int) -> bool:
    """True iff nothing sits on top of the object (directly or transitively)."""
    scene.object(object_id)
    return not scene.graph.objects_above(object_id)


def collision_free_set(scene: Scene) -> set[int]:
    """Ids of the objects that can be grasped without disturbing the stack."""
    return {o.id for o in scene.objects if not scene.graph.objects_above(o.id)}


@dataclass(frozen=True)
class SceneIssue:
    code: str
    message: str


def validate(scene: Scene, vocabulary: Optional[Iterable[str]] = None) -> list[SceneIssue]:
    """Structural checks; returns all problems found instead of raising."""
    issues: list[SceneIssue] = []
    vocab = set(DEFAULT_CLASSES if vocabulary is None else vocabulary)

    seen: set[int] = set()
    for o in scene.objects:
        if o.id in seen:
            issues.append(SceneIssue("duplicate-id", f"object id {o.id} appears more than once"))
        seen.add(o.id)
        if o.class_name not in vocab:
            issues.append(
                SceneIssue("unknown-class", f"object {o.id} has class {o.class_name!r} outside the vocabulary")
            )
        w, h = scene.image_size
        b = o.bbox
        if b.x < 0 or b.y < 0 or b.x2 > w or b.y2 > h:
            issues.append(SceneIssue("out-of-image", f"object {o.id} bbox exceeds the {w}x{h} image"))

    ids = {o.id for o in scene.objects}
    for c, p in sorted(scene.tree.edges):
        if c not in ids or p not in ids:
            issues.append(SceneIssue("dangling-tree-ref", f"tree edge ({c}, {p}) references a missing object"))

    cyclic = False
    clean_edges = [(c, p) for c, p in scene.tree.edges if c in ids and p in ids and c != p]
    try:
        _toposort(sorted(ids), clean_edges)
    except CyclicTreeError:
        cyclic = True
        issues.append(SceneIssue("cycle", "stacking relation contains a cycle"))
    for c, p in scene.tree.edges:
        if c == p:
            cyclic = True
            issues.append(SceneIssue("cycle", f"object {c} stacked on itself"))

    for idx, g in enumerate(scene.grasps):
        if g.object_id not in ids:
            issues.append(
                SceneIssue("dangling-grasp-ref", f"grasp {idx} references missing object {g.object_id}")
            )
    has_duplicates = len(ids) != len(scene.objects)
    if not cyclic and not has_duplicates:
        graph = closure(RelationshipTree.of(clean_edges), scene.objects)
        for idx, g in enumerate(scene.grasps):
            if g.object_id not in ids:
                continue
            expected = not graph.objects_above(g.object_id)
            if g.surface != expected:
                issues.append(
                    SceneIssue(
                        "surface-mismatch",
                        f"grasp {idx} on object {g.object_id} has surface={g.surface}, tree implies {expected}",
                    )
                )
    return issues
