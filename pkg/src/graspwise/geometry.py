"""Rectangle algebra: axis-aligned boxes, rotated grasp rectangles, IoU, tiou.

Rotated-rectangle intersection uses Sutherland-Hodgman clipping in the frame
of the second rectangle. When both inputs are axis-aligned the public IoU
takes a closed-form fast path; the clipping path is written so that it
reproduces the closed form bit-for-bit on axis-aligned inputs (clip bounds
are snapped onto intersection points, areas use a first-vertex-translated
shoelace), which the test suite checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "AxisRect",
    "GraspRect",
    "SpatialFeatureGrid",
    "rect_iou",
    "tiou",
    "axis_envelope",
    "spatial_grid",
    "normalize_angle",
]


class GeometryError(ValueError):
    """Invalid rectangle or grid parameters."""


def normalize_angle(theta: float) -> float:
    """Map an angle in degrees onto [-90, 90), the 180-degree symmetry range."""
    if not math.isfinite(theta):
        raise GeometryError(f"angle must be finite, got {theta}")
    if -90.0 <= theta < 90.0:
        # already canonical; identity keeps serialized angles bit-stable
        return float(theta)
    t = (theta + 90.0) % 180.0 - 90.0
    # % can land on 180.0 - 90.0 for inputs like -90 - 1e-14
    return -90.0 if t == 90.0 else t


@dataclass(frozen=True)
class AxisRect:
    """Axis-aligned rectangle: (x, y) is the top-left corner, w/h the extent."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise GeometryError(f"AxisRect.{name} must be finite, got {v}")
        if self.w <= 0 or self.h <= 0:
            raise GeometryError(f"AxisRect needs positive extent, got w={self.w}, h={self.h}")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    @property
    def area(self) -> float:
        # (x2 - x) rather than plain w: keeps the closed-form IoU and the
        # polygon path operating on identical operands.
        return (self.x2 - self.x) * (self.y2 - self.y)

    def corners(self) -> list[tuple[float, float]]:
        return [(self.x, self.y), (self.x2, self.y), (self.x2, self.y2), (self.x, self.y2)]

    def contains(self, px: float, py: float) -> bool:
        return self.x <= px <= self.x2 and self.y <= py <= self.y2


@dataclass(frozen=True)
class GraspRect:
    """Planar grasp rectangle (cx, cy, theta, w, h); theta in degrees vs x-axis.

    theta is normalized into [-90, 90) on construction.
    """

    cx: float
    cy: float
    theta: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for name in ("cx", "cy", "theta", "w", "h"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise GeometryError(f"GraspRect.{name} must be finite, got {v}")
        if self.w <= 0 or self.h <= 0:
            raise GeometryError(f"GraspRect needs positive extent, got w={self.w}, h={self.h}")
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    def corners(self) -> list[tuple[float, float]]:
        """Corner coordinates, counterclockwise in a y-up frame."""
        rad = math.radians(self.theta)
        c, s = math.cos(rad), math.sin(rad)
        hw, hh = self.w / 2.0, self.h / 2.0
        out = []
        for dx, dy in ((-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)):
            out.append((self.cx + dx * c - dy * s, self.cy + dx * s + dy * c))
        return out


Rect = AxisRect | GraspRect


def _is_axis_aligned(r: Rect) -> bool:
    return isinstance(r, AxisRect) or r.theta == 0.0


def _as_axis(r: Rect) -> AxisRect:
    if isinstance(r, AxisRect):
        return r
    return AxisRect(r.cx - r.w / 2.0, r.cy - r.h / 2.0, r.w, r.h)


def _axis_iou(a: AxisRect, b: AxisRect) -> float:
    ix = min(a.x2, b.x2) - max(a.x, b.x)
    iy = min(a.y2, b.y2) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union


def _shoelace_area(poly: list[tuple[float, float]]) -> float:
    """Polygon area, translated so the first vertex is the origin.

    The translation makes the area of an axis-aligned rectangle come out as
    exactly fl(dx * dy), matching the closed-form (x2-x1)*(y2-y1) product.
    """
    if len(poly) < 3:
        return 0.0
    ox, oy = poly[0]
    acc = 0.0
    px, py = 0.0, 0.0
    for qx0, qy0 in poly[1:]:
        qx, qy = qx0 - ox, qy0 - oy
        acc += px * qy - qx * py
        px, py = qx, qy
    return abs(acc) / 2.0


def _clip_halfplane(
    poly: list[tuple[float, float]],
    axis: int,
    bound: float,
    keep_below: bool,
) -> list[tuple[float, float]]:
    """Clip a polygon against coord <= bound (keep_below) or coord >= bound.

    Intersection points get the clipped coordinate set to `bound` exactly.
    """
    if not poly:
        return poly
    out: list[tuple[float, float]] = []
    sx, sy = poly[-1]
    s_val = sx if axis == 0 else sy
    s_in = s_val <= bound if keep_below else s_val >= bound
    for ex, ey in poly:
        e_val = ex if axis == 0 else ey
        e_in = e_val <= bound if keep_below else e_val >= bound
        if e_in != s_in:
            t = (bound - s_val) / (e_val - s_val)
            if axis == 0:
                out.append((bound, sy + (ey - sy) * t))
            else:
                out.append((sx + (ex - sx) * t, bound))
        if e_in:
            out.append((ex, ey))
        sx, sy, s_val, s_in = ex, ey, e_val, e_in
    return out


def _clip_to_box(
    poly: list[tuple[float, float]],
    x1: float,
    y1: float,
    x2: float,
    y2: float,
) -> list[tuple[float, float]]:
    poly = _clip_halfplane(poly, 0, x1, keep_below=False)
    poly = _clip_halfplane(poly, 0, x2, keep_below=True)
    poly = _clip_halfplane(poly, 1, y1, keep_below=False)
    poly = _clip_halfplane(poly, 1, y2, keep_below=True)
    return poly


def intersection_area(a: Rect, b: Rect) -> float:
    """Exact convex intersection area via clipping in b's frame."""
    if isinstance(b, GraspRect) and b.theta != 0.0:
        rad = math.radians(b.theta)
        c, s = math.cos(rad), math.sin(rad)
        # rotate everything by -theta_b about the origin
        poly = [(px * c + py * s, -px * s + py * c) for px, py in _poly_of(a)]
        bcx = b.cx * c + b.cy * s
        bcy = -b.cx * s + b.cy * c
        x1, x2 = bcx - b.w / 2.0, bcx + b.w / 2.0
        y1, y2 = bcy - b.h / 2.0, bcy + b.h / 2.0
    else:
        poly = _poly_of(a)
        bb = _as_axis(b)
        x1, y1, x2, y2 = bb.x, bb.y, bb.x2, bb.y2
    return _shoelace_area(_clip_to_box(poly, x1, y1, x2, y2))


def _poly_of(r: Rect) -> list[tuple[float, float]]:
    # axis-aligned GraspRects go through _as_axis so both IoU paths see
    # identical corner values
    if isinstance(r, GraspRect) and r.theta != 0.0:
        return r.corners()
    return _as_axis(r).corners()


def _poly_area(r: Rect) -> float:
    if isinstance(r, GraspRect) and r.theta != 0.0:
        return r.w * r.h
    return _as_axis(r).area


def rect_iou(a: Rect, b: Rect) -> float:
    """Intersection-over-union of two rectangles, either of which may be rotated.

    Symmetric, in [0, 1]. Axis-aligned pairs take the closed-form path, which
    the clipping path reproduces exactly.
    """
    if type(a) is type(b) and a == b:
        # theta is stored normalized, so 180-degree-symmetric rects compare equal
        return 1.0
    if _is_axis_aligned(a) and _is_axis_aligned(b):
        return _axis_iou(_as_axis(a), _as_axis(b))
    inter = intersection_area(a, b)
    if inter <= 0.0:
        return 0.0
    union = _poly_area(a) + _poly_area(b) - inter
    return min(1.0, inter / union)


def clip_iou(a: Rect, b: Rect) -> float:
    """IoU forced through the polygon-clipping path (no axis fast path)."""
    inter = intersection_area(a, b)
    if inter <= 0.0:
        return 0.0
    union = _poly_area(a) + _poly_area(b) - inter
    return inter / union


def tiou(g: AxisRect, k: AxisRect) -> float:
    """Containment ratio |g n k| / |g| of a proposal g inside a grounded box k."""
    ix = min(g.x2, k.x2) - max(g.x, k.x)
    iy = min(g.y2, k.y2) - max(g.y, k.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    return (ix * iy) / g.area


def axis_envelope(g: GraspRect) -> AxisRect:
    """Minimal axis-aligned bounding box of a rotated rectangle."""
    rad = math.radians(g.theta)
    c, s = abs(math.cos(rad)), abs(math.sin(rad))
    ex = (g.w * c + g.h * s) / 2.0
    ey = (g.w * s + g.h * c) / 2.0
    return AxisRect(g.cx - ex, g.cy - ey, 2.0 * ex, 2.0 * ey)


@dataclass(frozen=True)
class SpatialFeatureGrid:
    """Per-cell 8-vector of normalized plane coordinates for a W x H feature map."""

    width: int
    height: int
    cells: tuple[tuple[tuple[float, ...], ...], ...] = field(repr=False)

    def cell(self, i: int, j: int) -> tuple[float, ...]:
        """8-vector for column i, row j."""
        return self.cells[j][i]


def spatial_grid(width: int, height: int) -> SpatialFeatureGrid:
    """Build the grounding spatial-feature grid.

    Cell (i, j) carries (i/W, j/H, (i+.5)/W, (j+.5)/H, (i+1)/W, (j+1)/H, 1/W, 1/H):
    top-left, center and bottom-right coordinates plus cell size, all
    normalized by the map extent.
    """
    if width < 1 or height < 1:
        raise GeometryError(f"grid needs width, height >= 1, got {width}x{height}")
    w, h = float(width), float(height)
    rows = []
    for j in range(height):
        row = []
        for i in range(width):
            row.append(
                (i / w, j / h, (i + 0.5) / w, (j + 0.5) / h, (i + 1) / w, (j + 1) / h, 1 / w, 1 / h)
            )
        rows.append(tuple(row))
    return SpatialFeatureGrid(width=width, height=height, cells=tuple(rows))
