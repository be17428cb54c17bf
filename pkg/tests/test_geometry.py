"""Geometry tests: clipping IoU against a rasterization oracle, the
axis-aligned closed form, tiou asymmetry, and angle normalization."""

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graspwise.geometry import (
    AxisRect,
    GeometryError,
    GraspRect,
    axis_envelope,
    clip_iou,
    intersection_area,
    normalize_angle,
    rect_iou,
    spatial_grid,
    tiou,
)


def raster_iou(a: GraspRect, b: GraspRect, n: int = 1000) -> float:
    """Independent oracle: point-in-rect tests on an n-by-n sample grid
    spanning the joint bounding box."""
    corners = a.corners() + b.corners()
    xs = [p[0] for p in corners]
    ys = [p[1] for p in corners]
    gx = np.linspace(min(xs), max(xs), n)
    gy = np.linspace(min(ys), max(ys), n)
    X, Y = np.meshgrid(gx, gy)

    def inside(r: GraspRect) -> np.ndarray:
        th = math.radians(r.theta)
        dx, dy = X - r.cx, Y - r.cy
        u = dx * math.cos(th) + dy * math.sin(th)
        v = -dx * math.sin(th) + dy * math.cos(th)
        return (np.abs(u) <= r.w / 2.0) & (np.abs(v) <= r.h / 2.0)

    ia, ib = inside(a), inside(b)
    union = np.count_nonzero(ia | ib)
    return np.count_nonzero(ia & ib) / union if union else 0.0


def closed_form_axis_iou(a: AxisRect, b: AxisRect) -> float:
    iw = max(0.0, min(a.x2, b.x2) - max(a.x, b.x))
    ih = max(0.0, min(a.y2, b.y2) - max(a.y, b.y))
    inter = iw * ih
    return inter / (a.area + b.area - inter) if inter else 0.0


def random_grasp(rng: random.Random) -> GraspRect:
    return GraspRect(
        cx=rng.uniform(20, 80),
        cy=rng.uniform(20, 80),
        theta=rng.uniform(-90.0, 89.99),
        w=rng.uniform(8, 50),
        h=rng.uniform(8, 50),
    )


class TestRectIou:
    def test_matches_rasterization_oracle(self):
        rng = random.Random(20240816)
        worst = 0.0
        for _ in range(500):
            a, b = random_grasp(rng), random_grasp(rng)
            worst = max(worst, abs(rect_iou(a, b) - raster_iou(a, b)))
        assert worst < 0.01, f"worst rasterization deviation {worst}"

    def test_axis_aligned_equals_closed_form_exactly(self):
        rng = random.Random(7)
        for _ in range(2000):
            a = AxisRect(rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(1, 40), rng.uniform(1, 40))
            b = AxisRect(rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(1, 40), rng.uniform(1, 40))
            assert rect_iou(a, b) == closed_form_axis_iou(a, b)

    def test_identity_is_exactly_one(self):
        g = GraspRect(10, 20, 37.3, 6, 3)
        assert rect_iou(g, g) == 1.0
        r = AxisRect(1, 2, 3, 4)
        assert rect_iou(r, r) == 1.0

    def test_disjoint_is_zero(self):
        assert rect_iou(AxisRect(0, 0, 10, 10), AxisRect(100, 100, 5, 5)) == 0.0

    def test_symmetric(self):
        rng = random.Random(3)
        for _ in range(200):
            a, b = random_grasp(rng), random_grasp(rng)
            assert rect_iou(a, b) == pytest.approx(rect_iou(b, a), abs=1e-12)

    def test_range(self):
        rng = random.Random(5)
        for _ in range(300):
            v = rect_iou(random_grasp(rng), random_grasp(rng))
            assert 0.0 <= v <= 1.0

    def test_half_overlap_known_value(self):
        # two unit-height strips sharing half their width
        a = AxisRect(0, 0, 2, 1)
        b = AxisRect(1, 0, 2, 1)
        assert rect_iou(a, b) == pytest.approx(1.0 / 3.0)

    def test_rotated_cross_known_value(self):
        # same center, same size, one rotated 90 degrees: overlap is the
        # central square, union is the cross
        a = GraspRect(0, 0, 0.0, 4, 2)
        b = GraspRect(0, 0, -90.0, 4, 2)
        assert rect_iou(a, b) == pytest.approx(4.0 / 12.0, abs=1e-9)

    def test_clip_iou_agrees_on_rotated_pairs(self):
        rng = random.Random(11)
        for _ in range(100):
            a, b = random_grasp(rng), random_grasp(rng)
            assert rect_iou(a, b) == pytest.approx(clip_iou(a, b), abs=1e-12)


class TestTiou:
    def test_fully_inside_is_one(self):
        g = AxisRect(10, 10, 5, 5)
        assert tiou(g, AxisRect(0, 0, 100, 100)) == 1.0

    def test_disjoint_is_zero(self):
        assert tiou(AxisRect(0, 0, 5, 5), AxisRect(50, 50, 10, 10)) == 0.0

    def test_asymmetric_normalizes_by_first_argument(self):
        g = AxisRect(0, 0, 10, 10)
        k = AxisRect(5, 0, 10, 10)
        assert tiou(g, k) == pytest.approx(0.5)
        big = AxisRect(0, 0, 20, 10)
        assert tiou(big, g) == pytest.approx(0.5)
        assert tiou(g, big) == 1.0

    def test_intersection_area_known(self):
        assert intersection_area(AxisRect(0, 0, 10, 10), AxisRect(5, 5, 10, 10)) == pytest.approx(25.0)


class TestNormalizeAngle:
    def test_canonical_values(self):
        assert normalize_angle(-90.0) == -90.0
        assert normalize_angle(90.0) == -90.0
        assert normalize_angle(180.0) == 0.0
        assert normalize_angle(135.0) == -45.0
        assert normalize_angle(-135.0) == 45.0

    @given(st.floats(min_value=-90.0, max_value=90.0, exclude_max=True, allow_nan=False))
    def test_identity_on_canonical_range(self, theta):
        assert normalize_angle(theta) == theta

    @given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
    @settings(max_examples=300)
    def test_result_always_canonical_and_idempotent(self, theta):
        t = normalize_angle(theta)
        assert -90.0 <= t < 90.0
        assert normalize_angle(t) == t

    @given(st.floats(min_value=-800.0, max_value=800.0, allow_nan=False))
    def test_period_180(self, theta):
        assert normalize_angle(theta + 180.0) == pytest.approx(normalize_angle(theta), abs=1e-9)


class TestRects:
    def test_axis_rect_rejects_nonpositive_size(self):
        with pytest.raises(GeometryError):
            AxisRect(0, 0, 0, 5)
        with pytest.raises(GeometryError):
            AxisRect(0, 0, 5, -1)

    def test_grasp_rect_normalizes_theta(self):
        assert GraspRect(0, 0, 135.0, 4, 2).theta == -45.0

    def test_contains_boundary_closed(self):
        r = AxisRect(0, 0, 10, 10)
        assert r.contains(0, 0) and r.contains(10, 10)
        assert not r.contains(10.0001, 5)

    def test_axis_envelope_bounds_all_corners(self):
        rng = random.Random(13)
        for _ in range(200):
            g = random_grasp(rng)
            env = axis_envelope(g)
            for x, y in g.corners():
                assert env.x - 1e-9 <= x <= env.x2 + 1e-9
                assert env.y - 1e-9 <= y <= env.y2 + 1e-9

    def test_axis_envelope_tight_for_axis_aligned(self):
        g = GraspRect(50, 40, 0.0, 20, 10)
        env = axis_envelope(g)
        assert (env.x, env.y, env.w, env.h) == pytest.approx((40.0, 35.0, 20.0, 10.0))


class TestSpatialGrid:
    def test_cell_vectors_are_normalized_coordinates(self):
        grid = spatial_grid(4, 2)
        assert grid.width == 4 and grid.height == 2
        # cell (0, 0): top-left corner of the map
        assert grid.cell(0, 0) == (0.0, 0.0, 0.125, 0.25, 0.25, 0.5, 0.25, 0.5)
        # last cell's bottom-right corner reaches exactly (1, 1)
        assert grid.cell(3, 1)[4:6] == (1.0, 1.0)

    def test_rejects_degenerate_grid(self):
        with pytest.raises(GeometryError):
            spatial_grid(0, 4)
