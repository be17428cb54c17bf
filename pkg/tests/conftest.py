"""Shared fixtures: hand-built scenes small enough to reason about exactly."""

import pytest

from graspwise.geometry import AxisRect, GraspRect
from graspwise.scene import GraspAnnotation, ObjectInstance, Scene


def build_stack_scene(scene_id: str = "stack-3") -> Scene:
    """apple on box on notebook, plus nothing else.

    Object 0 (notebook) carries the whole pile, object 2 (apple) is free.
    Every grasp envelope sits strictly inside its own object's bbox.
    """
    objects = [
        ObjectInstance(id=0, class_name="notebook", bbox=AxisRect(40, 220, 160, 120)),
        ObjectInstance(id=1, class_name="box", bbox=AxisRect(70, 160, 100, 90)),
        ObjectInstance(id=2, class_name="apple", bbox=AxisRect(95, 120, 50, 50)),
    ]
    grasps = [
        GraspAnnotation(object_id=0, rect=GraspRect(120, 300, 0.0, 60, 24), surface=False),
        GraspAnnotation(object_id=1, rect=GraspRect(120, 205, 30.0, 36, 18), surface=False),
        GraspAnnotation(object_id=2, rect=GraspRect(120, 145, -45.0, 20, 10), surface=True),
    ]
    return Scene.build(
        scene_id=scene_id,
        image_size=(320, 400),
        objects=objects,
        tree_edges=[(1, 0), (2, 1)],
        grasps=grasps,
    )


def build_flat_scene(scene_id: str = "flat-3") -> Scene:
    """Three unstacked objects left to right: shaver, apple, stapler."""
    objects = [
        ObjectInstance(id=0, class_name="shaver", bbox=AxisRect(20, 200, 60, 40)),
        ObjectInstance(id=1, class_name="apple", bbox=AxisRect(120, 190, 50, 50)),
        ObjectInstance(id=2, class_name="stapler", bbox=AxisRect(210, 205, 70, 30)),
    ]
    grasps = [
        GraspAnnotation(object_id=0, rect=GraspRect(50, 220, 10.0, 30, 14), surface=True),
        GraspAnnotation(object_id=1, rect=GraspRect(145, 215, 0.0, 24, 12), surface=True),
        GraspAnnotation(object_id=2, rect=GraspRect(245, 220, -10.0, 34, 12), surface=True),
    ]
    return Scene.build(
        scene_id=scene_id,
        image_size=(320, 400),
        objects=objects,
        tree_edges=[],
        grasps=grasps,
    )


@pytest.fixture
def stack_scene() -> Scene:
    return build_stack_scene()


@pytest.fixture
def flat_scene() -> Scene:
    return build_flat_scene()
