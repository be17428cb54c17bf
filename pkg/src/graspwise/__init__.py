"""Knowledge-guided grasp planning from natural-language scene descriptions,
with a human-in-the-loop correction service and a deterministic evaluation
harness."""

from .geometry import AxisRect, GraspRect, axis_envelope, normalize_angle, rect_iou, tiou
from .scene import (
    CyclicTreeError,
    GraspAnnotation,
    ObjectInstance,
    Predicate,
    RelationshipTree,
    Scene,
    SceneError,
    SceneGraph,
    closure,
    collision_free_set,
    validate,
)
from .lang import (
    Description,
    LanguageError,
    RelationTriple,
    Source,
    describe_scene,
    generate,
    parse,
)
from .grounding import GroundedObject, GroundingError, ground, noisy_ground
from .planner import (
    EmptyProposalsError,
    Proposal,
    ScoredGrasp,
    angle_to_class,
    class_to_angle,
    gen_proposals,
    kgpn_sample,
    score_and_select,
)
from .noise import NoiseConfig, corrupt_description, intervene
from .evaluation import EvalReport, evaluate_corpus, is_correct, sweep_intervention
from .dataset import SampleRecord, gen_synthetic, load, save

__version__ = "1.0.0"

__all__ = [
    "AxisRect",
    "GraspRect",
    "axis_envelope",
    "normalize_angle",
    "rect_iou",
    "tiou",
    "CyclicTreeError",
    "GraspAnnotation",
    "ObjectInstance",
    "Predicate",
    "RelationshipTree",
    "Scene",
    "SceneError",
    "SceneGraph",
    "closure",
    "collision_free_set",
    "validate",
    "Description",
    "LanguageError",
    "RelationTriple",
    "Source",
    "describe_scene",
    "generate",
    "parse",
    "GroundedObject",
    "GroundingError",
    "ground",
    "noisy_ground",
    "EmptyProposalsError",
    "Proposal",
    "ScoredGrasp",
    "angle_to_class",
    "class_to_angle",
    "gen_proposals",
    "kgpn_sample",
    "score_and_select",
    "NoiseConfig",
    "corrupt_description",
    "intervene",
    "EvalReport",
    "evaluate_corpus",
    "is_correct",
    "sweep_intervention",
    "SampleRecord",
    "gen_synthetic",
    "load",
    "save",
    "__version__",
]
