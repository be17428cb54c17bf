"""Live episodes: transitions, event logs, replay, and sample export."""

import json

import pytest

from graspwise.dataset import export_session_samples, scene_from_dict
from graspwise.evaluation import is_correct, run_scene
from graspwise.geometry import AxisRect, GraspRect
from graspwise.lang import LanguageError, RelationTriple, generate
from graspwise.noise import NoiseConfig
from graspwise.scene import GraspAnnotation, ObjectInstance, Predicate, Scene, validate
from graspwise.session import (
    ACCEPTED,
    AWAITING_REVIEW,
    DESCRIBED,
    DESCRIBED_EV,
    EXECUTED,
    EXECUTED_EV,
    FAILED,
    FAILED_EV,
    GROUNDED,
    GROUNDED_EV,
    INTERVENED,
    PLANNED_EV,
    STARTED,
    ReplayError,
    SessionError,
    load_events,
    replay,
    start,
)
from graspwise.session import intervene as intervene_fn
from graspwise.session import step as step_fn


def kinds(session):
    return [e.kind for e in session.events]


class TestCleanEpisode:
    def test_runs_to_executed(self, stack_scene):
        sess = start(stack_scene, NoiseConfig(seed=1)).run_to_completion()
        assert sess.phase == EXECUTED
        assert sess.success is True
        assert kinds(sess) == [STARTED, DESCRIBED_EV, ACCEPTED, GROUNDED_EV, PLANNED_EV, EXECUTED_EV]
        assert len(sess.events) >= 5

    def test_seq_is_dense_and_ordered(self, stack_scene):
        sess = start(stack_scene, NoiseConfig(seed=1)).run_to_completion()
        assert [e.seq for e in sess.events] == list(range(len(sess.events)))
        assert all(e.session_id == sess.session_id for e in sess.events)

    def test_success_matches_top1_check(self, stack_scene):
        sess = start(stack_scene, NoiseConfig(seed=1)).run_to_completion()
        assert sess.ranked
        assert sess.success == is_correct(sess.ranked[0], stack_scene)
        assert sess.events[-1].payload["success"] is True

    def test_started_payload_is_self_contained(self, stack_scene):
        sess = start(stack_scene, NoiseConfig(seed=2))
        payload = sess.events[0].payload
        assert scene_from_dict(payload["scene"]) == stack_scene
        assert payload["config"]["seed"] == 2

    def test_described_payload_flags_clean(self, stack_scene):
        sess = start(stack_scene, NoiseConfig(seed=1))
        assert sess.phase == AWAITING_REVIEW
        assert sess.events[1].payload["corrupted"] is False

    def test_default_session_id(self, stack_scene):
        sess = start(stack_scene, NoiseConfig(seed=3))
        assert sess.session_id == "sess-stack-3-3"

    def test_matches_batch_pipeline(self, stack_scene):
        noise = NoiseConfig(seed=5)
        sess = start(stack_scene, noise).run_to_completion()
        out = run_scene(stack_scene, noise, rho=0.0)
        assert sess.ranked == out.ranked

    def test_module_level_wrappers(self, stack_scene):
        sess = start(stack_scene, NoiseConfig(seed=1))
        intervene_fn(sess, "apple on box")
        assert sess.phase == DESCRIBED
        step_fn(sess)
        assert sess.phase == GROUNDED


class TestCorruptionAndReview:
    @pytest.fixture
    def corrupt_session(self, stack_scene):
        # every corruption of the true description is false in this scene,
        # so an unreviewed error is guaranteed to strand grounding
        sess = start(stack_scene, NoiseConfig(describe_error_rate=1.0, seed=1))
        assert sess.events[1].payload["corrupted"] is True
        return sess

    def test_unreviewed_error_fails(self, corrupt_session):
        sess = corrupt_session.run_to_completion()
        assert sess.phase == FAILED
        assert sess.failure["code"] == "grounding-failure"
        assert kinds(sess) == [STARTED, DESCRIBED_EV, ACCEPTED, FAILED_EV]

    def test_failed_then_intervene_recovers(self, corrupt_session):
        sess = corrupt_session.run_to_completion()
        sess.intervene("apple on box").run_to_completion()
        assert sess.phase == EXECUTED
        assert sess.success is True
        assert sess.failure is None
        assert kinds(sess) == [
            STARTED,
            DESCRIBED_EV,
            ACCEPTED,
            FAILED_EV,
            INTERVENED,
            GROUNDED_EV,
            PLANNED_EV,
            EXECUTED_EV,
        ]
        grounded = sess.events[5].payload
        assert grounded["description_source"] == "HUMAN"
        assert grounded["description_text"] == "apple on box"
        assert grounded["object_id"] == 2

    def test_intervene_before_accept(self, corrupt_session):
        corrupt_session.intervene("apple on box").run_to_completion()
        assert corrupt_session.phase == EXECUTED
        assert kinds(corrupt_session) == [
            STARTED,
            DESCRIBED_EV,
            INTERVENED,
            GROUNDED_EV,
            PLANNED_EV,
            EXECUTED_EV,
        ]

    def test_parse_error_leaves_state_untouched(self, corrupt_session):
        before = corrupt_session.description
        with pytest.raises(LanguageError):
            corrupt_session.intervene("complete gibberish here")
        assert corrupt_session.phase == AWAITING_REVIEW
        assert corrupt_session.description is before
        assert len(corrupt_session.events) == 2

    def test_wrong_phase_transitions_rejected(self, stack_scene):
        sess = start(stack_scene, NoiseConfig(seed=1)).run_to_completion()
        with pytest.raises(SessionError) as err:
            sess.step()
        assert err.value.code == "wrong-phase"
        assert err.value.phase == EXECUTED
        with pytest.raises(SessionError):
            sess.intervene("apple on box")
        # terminal states are stable
        assert sess.run_to_completion().phase == EXECUTED


class TestEmptyRanking:
    def test_target_without_grasps_fails_cleanly(self):
        # the box has no annotated grasp, so planning against it finds no
        # proposal clearing both thresholds
        scene = Scene.build(
            scene_id="sparse",
            image_size=(320, 300),
            objects=[
                ObjectInstance(id=0, class_name="apple", bbox=AxisRect(20, 20, 50, 50)),
                ObjectInstance(id=1, class_name="box", bbox=AxisRect(200, 200, 60, 60)),
            ],
            tree_edges=[],
            grasps=[
                GraspAnnotation(object_id=0, rect=GraspRect(45, 45, 0.0, 20, 10), surface=True)
            ],
        )
        assert validate(scene) == []
        text = generate(RelationTriple("box", Predicate.RIGHT, "apple")).text
        sess = start(scene, NoiseConfig(seed=1))
        sess.intervene(text).run_to_completion()
        assert sess.phase == FAILED
        assert sess.failure["code"] == "empty-ranking"
        assert sess.ranked == ()


class TestDeterminism:
    def test_fixed_seed_fixed_clock_reproduces_state(self, stack_scene):
        def run():
            return start(
                stack_scene, NoiseConfig(seed=9), session_id="fixed", clock=lambda: 0.0
            ).run_to_completion()

        assert run().state_json() == run().state_json()

    def test_different_seed_changes_draws(self, stack_scene):
        a = start(stack_scene, NoiseConfig(seed=1), session_id="x", clock=lambda: 0.0)
        b = start(stack_scene, NoiseConfig(seed=2), session_id="x", clock=lambda: 0.0)
        run_a = a.run_to_completion().state_json()
        run_b = b.run_to_completion().state_json()
        assert json.loads(run_a)["phase"] == json.loads(run_b)["phase"] == EXECUTED
        assert run_a != run_b


class TestEventLog:
    def test_log_grows_with_every_event(self, stack_scene, tmp_path):
        log = tmp_path / "sess.jsonl"
        sess = start(stack_scene, NoiseConfig(seed=1), log_path=log)
        assert len(load_events(log)) == 2
        sess.step()
        assert len(load_events(log)) == 3
        sess.run_to_completion()
        rows = load_events(log)
        assert len(rows) == len(sess.events)
        assert [r["kind"] for r in rows] == kinds(sess)
        assert rows == [e.to_dict() for e in sess.events]

    def test_replay_clean_episode(self, stack_scene, tmp_path):
        log = tmp_path / "sess.jsonl"
        sess = start(stack_scene, NoiseConfig(seed=1), log_path=log).run_to_completion()
        twin = replay(log)
        assert twin.state_json() == sess.state_json()

    def test_replay_reviewed_episode(self, stack_scene, tmp_path):
        log = tmp_path / "sess.jsonl"
        sess = start(stack_scene, NoiseConfig(describe_error_rate=1.0, seed=1), log_path=log)
        sess.run_to_completion()
        sess.intervene("apple on box").run_to_completion()
        twin = replay(log)
        assert twin.state_json() == sess.state_json()
        assert twin.phase == EXECUTED

    def test_replay_accepts_parsed_rows(self, stack_scene, tmp_path):
        log = tmp_path / "sess.jsonl"
        sess = start(stack_scene, NoiseConfig(seed=4), log_path=log).run_to_completion()
        twin = replay(load_events(log))
        assert twin.state_json() == sess.state_json()

    def test_replay_rejects_headless_log(self, stack_scene, tmp_path):
        log = tmp_path / "sess.jsonl"
        start(stack_scene, NoiseConfig(seed=1), log_path=log).run_to_completion()
        rows = load_events(log)
        with pytest.raises(ReplayError):
            replay(rows[1:])

    def test_replay_detects_tampered_payload(self, stack_scene, tmp_path):
        log = tmp_path / "sess.jsonl"
        start(stack_scene, NoiseConfig(seed=1), log_path=log).run_to_completion()
        rows = load_events(log)
        grounded = next(r for r in rows if r["kind"] == "GROUNDED")
        grounded["payload"]["confidence"] = 0.123
        with pytest.raises(ReplayError) as err:
            replay(rows)
        assert "diverged" in str(err.value)

    def test_replay_rejects_unknown_kind(self, stack_scene, tmp_path):
        log = tmp_path / "sess.jsonl"
        start(stack_scene, NoiseConfig(seed=1), log_path=log).run_to_completion()
        rows = load_events(log)
        rows.insert(2, {"kind": "BANANA", "seq": 2, "timestamp": 0.0, "payload": {}})
        with pytest.raises(ReplayError):
            replay(rows)


class TestExport:
    def test_reviewed_episode_exports_one_human_record(self, stack_scene, tmp_path):
        log = tmp_path / "sess.jsonl"
        sess = start(stack_scene, NoiseConfig(describe_error_rate=1.0, seed=1), log_path=log)
        sess.run_to_completion()
        sess.intervene("apple on box").run_to_completion()
        assert sess.phase == EXECUTED
        records = export_session_samples(log)
        assert len(records) == 1
        record = records[0]
        assert record.source == "HUMAN"
        assert record.text == "apple on box"
        assert record.scene_id == "stack-3"
        region = stack_scene.object(2).bbox
        assert record.grounded_box == (region.x, region.y, region.w, region.h)

    def test_clean_episode_exports_self_explained_record(self, stack_scene, tmp_path):
        log = tmp_path / "sess.jsonl"
        start(stack_scene, NoiseConfig(seed=1), log_path=log).run_to_completion()
        records = export_session_samples(log)
        assert len(records) == 1
        assert records[0].source == "SELF_EXPLANATION"
