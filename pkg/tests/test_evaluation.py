"""Metrics and experiment runners: correctness thresholds, R@k/P@k, sweeps."""

import pytest

from graspwise.dataset import gen_synthetic
from graspwise.evaluation import (
    DEFAULT_KS,
    ShapeMismatchError,
    UndefinedMetricError,
    compare_baselines,
    evaluate_baseline,
    evaluate_corpus,
    f1,
    is_correct,
    precision_at_k,
    recall_at_k,
    run_scene,
    stage_seed,
    subject_correct_rate,
    sweep_intervention,
)
from graspwise.geometry import AxisRect, GraspRect
from graspwise.lang import Description, RelationTriple
from graspwise.noise import NoiseConfig
from graspwise.planner import ScoredGrasp, angle_to_class
from graspwise.scene import GraspAnnotation, ObjectInstance, Predicate, Scene


def sg(rect: GraspRect) -> ScoredGrasp:
    return ScoredGrasp(
        rect=rect, box_conf=1.0, surface_conf=1.0, angle_class=angle_to_class(rect.theta), final_conf=1.0
    )


def one_grasp_scene(gt: GraspRect) -> Scene:
    return Scene.build(
        scene_id="single",
        image_size=(200, 200),
        objects=[ObjectInstance(id=0, class_name="towel", bbox=AxisRect(0, 0, 200, 200))],
        tree_edges=[],
        grasps=[GraspAnnotation(object_id=0, rect=gt, surface=True)],
    )


class TestIsCorrect:
    def test_exact_match(self):
        gt = GraspRect(50, 50, 0.0, 10, 10)
        assert is_correct(sg(gt), one_grasp_scene(gt))

    def test_jaccard_exactly_quarter_fails(self):
        # overlap 40, union 160: the threshold is strict
        gt = GraspRect(50, 50, 0.0, 10, 10)
        scene = one_grasp_scene(gt)
        assert not is_correct(sg(GraspRect(56, 50, 0.0, 10, 10)), scene)
        assert is_correct(sg(GraspRect(55.9, 50, 0.0, 10, 10)), scene)

    def test_angle_exactly_thirty_fails(self):
        gt = GraspRect(50, 50, 0.0, 10, 10)
        scene = one_grasp_scene(gt)
        assert not is_correct(sg(GraspRect(50, 50, 30.0, 10, 10)), scene)
        assert is_correct(sg(GraspRect(50, 50, 29.9, 10, 10)), scene)

    def test_angle_wraps_mod_180(self):
        gt = GraspRect(50, 50, 0.0, 10, 10)
        scene = one_grasp_scene(gt)
        # 175 degrees is 5 degrees away once orientation is folded
        assert is_correct(sg(GraspRect(50, 50, 175.0, 10, 10)), scene)
        gt90 = GraspRect(50, 50, 89.0, 10, 4)
        assert is_correct(sg(GraspRect(50, 50, -89.0, 10, 4)), one_grasp_scene(gt90))

    def test_buried_object_grasp_never_correct(self, stack_scene):
        notebook_gt = stack_scene.grasps[0].rect
        apple_gt = stack_scene.grasps[2].rect
        assert not is_correct(sg(notebook_gt), stack_scene)
        assert is_correct(sg(apple_gt), stack_scene)

    def test_axis_aligned_flag_loosens_overlap(self):
        # same diagonal orientation, crossed bodies: exact overlap is 1/9,
        # but their axis envelopes coincide
        gt = GraspRect(50, 50, 45.0, 10, 2)
        scene = one_grasp_scene(gt)
        crossed = sg(GraspRect(50, 50, 45.0, 2, 10))
        assert not is_correct(crossed, scene)
        assert is_correct(crossed, scene, axis_aligned=True)


class TestRankMetrics:
    @pytest.fixture
    def per_scene(self, stack_scene):
        good = sg(stack_scene.grasps[2].rect)
        bad = sg(stack_scene.grasps[0].rect)
        return [
            (stack_scene, (bad, good, bad)),
            (stack_scene, (good,)),
            (stack_scene, (bad,)),
            (stack_scene, ()),
        ]

    def test_recall_hand_counts(self, per_scene):
        assert recall_at_k(per_scene, 1) == pytest.approx(0.25)
        assert recall_at_k(per_scene, 2) == pytest.approx(0.5)
        assert recall_at_k(per_scene, 10) == pytest.approx(0.5)

    def test_precision_hand_counts(self, per_scene):
        assert precision_at_k(per_scene, 1) == pytest.approx(1 / 3)
        assert precision_at_k(per_scene, 2) == pytest.approx(0.5)
        assert precision_at_k(per_scene, 5) == pytest.approx(0.4)

    def test_short_rankings_cap_the_denominator(self, stack_scene):
        good = sg(stack_scene.grasps[2].rect)
        # 1 slot at k=3, and it holds a correct grasp
        assert precision_at_k([(stack_scene, (good,))], 3) == 1.0

    def test_all_empty_rankings(self, stack_scene):
        assert precision_at_k([(stack_scene, ())], 1) == 0.0
        assert recall_at_k([(stack_scene, ())], 1) == 0.0

    def test_empty_corpus_undefined(self):
        with pytest.raises(UndefinedMetricError):
            recall_at_k([], 1)
        with pytest.raises(UndefinedMetricError):
            precision_at_k([], 1)

    def test_f1_values(self):
        assert f1(0.0, 0.0) == 0.0
        assert f1(1.0, 1.0) == 1.0
        assert f1(0.5, 1.0) == pytest.approx(2 / 3)
        with pytest.raises(ValueError):
            f1(1.5, 0.5)


class TestSubjectCorrectRate:
    def triple(self, s, o):
        return RelationTriple(s, Predicate.ON, o)

    def test_counts_matches_and_failures(self):
        descs = [
            Description(triple=self.triple("apple", "box"), text="apple on box"),
            Description(triple=self.triple("box", "apple"), text="box on apple"),
            Description(triple=self.triple("apple", "box"), text="gibberish words"),
        ]
        got = subject_correct_rate(descs, ["apple", "apple", "apple"])
        assert got == pytest.approx(1 / 3)

    def test_accepts_raw_strings(self):
        assert subject_correct_rate(["apple on box"], ["apple"]) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            subject_correct_rate(["apple on box"], ["apple", "box"])

    def test_empty_undefined(self):
        with pytest.raises(UndefinedMetricError):
            subject_correct_rate([], [])


class TestStageSeeds:
    def test_stable_and_distinct(self):
        a = stage_seed(0, "scene-1", "describe")
        assert a == stage_seed(0, "scene-1", "describe")
        assert a != stage_seed(0, "scene-1", "corrupt")
        assert a != stage_seed(1, "scene-1", "describe")
        assert a != stage_seed(0, "scene-2", "describe")


@pytest.fixture(scope="module")
def small_corpus():
    return [record.scene for record in gen_synthetic(20, seed=11)]


class TestPipelineRuns:
    def test_oracle_run_is_perfect(self, small_corpus):
        report = evaluate_corpus(small_corpus, NoiseConfig(seed=4), rho=0.0)
        assert report.recall[1] == 1.0
        assert report.precision[1] == 1.0
        assert report.f1 == 1.0
        assert report.accuracy == 1.0
        assert report.residual_error_rate == 0.0
        assert report.intervention_rate == 0.0
        assert report.n_scenes == 20

    def test_full_review_equals_clean_run(self, small_corpus):
        clean = evaluate_corpus(small_corpus, NoiseConfig(seed=4), rho=0.0)
        fixed = evaluate_corpus(
            small_corpus, NoiseConfig(describe_error_rate=1.0, seed=4), rho=1.0
        )
        assert fixed.recall == clean.recall
        assert fixed.precision == clean.precision
        assert fixed.f1 == clean.f1
        assert fixed.accuracy == clean.accuracy
        assert fixed.residual_error_rate == 0.0
        assert fixed.intervention_rate == 1.0

    def test_unreviewed_errors_persist(self, small_corpus):
        report = evaluate_corpus(
            small_corpus, NoiseConfig(describe_error_rate=1.0, seed=4), rho=0.0
        )
        assert report.residual_error_rate == 1.0
        assert report.intervention_rate == 0.0
        assert report.recall[1] < 1.0

    def test_run_scene_outcome_fields(self, small_corpus):
        scene = small_corpus[0]
        out = run_scene(scene, NoiseConfig(seed=4), rho=0.0)
        assert out.scene_id == scene.id
        assert out.grounded_ok and out.grounding_iou_ok
        assert out.ranked and is_correct(out.ranked[0], scene)
        assert not out.intervened and not out.corrupted_shown

    def test_deterministic(self, small_corpus):
        a = evaluate_corpus(small_corpus, NoiseConfig(describe_error_rate=0.5, seed=7), rho=0.5)
        b = evaluate_corpus(small_corpus, NoiseConfig(describe_error_rate=0.5, seed=7), rho=0.5)
        assert a == b

    def test_sweep_shares_corruption_draws(self, small_corpus):
        grid = (0.0, 0.5, 1.0)
        reports = sweep_intervention(small_corpus, eps=0.4, rho_list=grid, seed=6)
        assert [r.config["rho"] for r in reports] == list(grid)
        f1s = [r.f1 for r in reports]
        assert f1s == sorted(f1s)
        residuals = [r.residual_error_rate for r in reports]
        assert residuals == sorted(residuals, reverse=True)
        assert residuals[-1] == 0.0

    def test_empty_corpus_rejected(self):
        with pytest.raises(UndefinedMetricError):
            evaluate_corpus([])
        with pytest.raises(UndefinedMetricError):
            evaluate_baseline([], "end2end", seed=0)
        with pytest.raises(UndefinedMetricError):
            compare_baselines([], seed=0)


class TestBaselines:
    def test_unknown_baseline_rejected(self, small_corpus):
        with pytest.raises(ValueError):
            evaluate_baseline(small_corpus, "oracle", seed=0)

    def test_baseline_reports_label_their_system(self, small_corpus):
        e2e = evaluate_baseline(small_corpus, "end2end", seed=0)
        assert e2e.config["system"] == "end2end"
        graph = evaluate_baseline(small_corpus, "scenegraph", seed=0, flip_rate=0.2)
        assert graph.config["system"] == "scenegraph"
        assert graph.config["flip_rate"] == 0.2

    def test_clean_scenegraph_matches_oracle_recall(self, small_corpus):
        graph = evaluate_baseline(small_corpus, "scenegraph", seed=4, flip_rate=0.0)
        assert graph.recall[1] == 1.0

    def test_comparison_rows(self, small_corpus):
        rows = compare_baselines(small_corpus, seed=4, flip_rates=(0.1,), rhos=(0.0,))
        systems = [row.system for row in rows]
        assert systems == ["end2end", "scenegraph", "scenetext", "scenetext"]
        for row in rows:
            assert row.report.config["system"] == row.system
            assert set(row.report.recall) == set(DEFAULT_KS)
