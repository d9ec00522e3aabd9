"""Pairwise geometric context: centroid distance, direction angle, and their buckets.

Every ordered object pair gets two parameters, a centroid distance L and a
direction angle theta, which are then bucketed into a proximity predicate
(near/far) and a direction predicate (right/top/left/down).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import OutOfRange
from .model import BoundingBox, Point


class Direction(Enum):
    RIGHT = "right"
    TOP = "top"
    LEFT = "left"
    DOWN = "down"
    NONE = "none"


class Proximity(Enum):
    NEAR = "near"
    FAR = "far"


class BucketMode(Enum):
    """Direction-label table for the two vertical/horizontal quadrants.

    CORRECTED is the geometrically consistent default in image coordinates
    (y grows downward): angles in (45, 135] point down, angles beyond +-135
    point left. LITERAL restores the originally published table, which swaps
    those two labels.
    """

    CORRECTED = "corrected"
    LITERAL = "literal"


class RefBoxMode(Enum):
    """Which box supplies the diagonal for the near/far threshold."""

    SUBJECT = "subject"
    MEAN = "mean"


_OPPOSITE = {
    Direction.RIGHT: Direction.LEFT,
    Direction.LEFT: Direction.RIGHT,
    Direction.TOP: Direction.DOWN,
    Direction.DOWN: Direction.TOP,
    Direction.NONE: Direction.NONE,
}


@dataclass(frozen=True)
class GeoParams:
    """Geometric parameters for one ordered object pair.

    ``angle`` is None exactly when the two centroids coincide, in which case
    ``direction`` is NONE and only the proximity bucket is meaningful.
    """

    distance: float
    angle: float | None
    direction: Direction
    proximity: Proximity

    def __post_init__(self) -> None:
        if self.distance < 0:
            raise ValueError(f"negative distance {self.distance}")
        if (self.angle is None) != (self.direction is Direction.NONE):
            raise ValueError("angle is undefined exactly when direction is NONE")


def centroid(box: BoundingBox) -> Point:
    """Midpoint of a bounding box."""
    return Point((box.x_min + box.x_max) / 2.0, (box.y_min + box.y_max) / 2.0)


def l2_distance(a: Point, b: Point) -> float:
    """Euclidean distance between two points; symmetric in its arguments."""
    return math.hypot(a.x - b.x, a.y - b.y)


def direction_angle(c_i: Point, c_j: Point) -> float | None:
    """Angle of the ray from c_i to c_j, in degrees.

    Uses the two-argument arctangent of (dy, dx) in image coordinates
    (y down), normalized to (-180, 180]. Returns None when the points
    coincide, where the direction is undefined.
    """
    dx = c_j.x - c_i.x
    dy = c_j.y - c_i.y
    if dx == 0.0 and dy == 0.0:
        return None
    theta = math.degrees(math.atan2(dy, dx))
    if theta <= -180.0:
        theta = 180.0
    return theta


def classify_direction(
    theta: float | None, mode: BucketMode = BucketMode.CORRECTED
) -> Direction:
    """Bucket an angle into one of the four direction predicates.

    The four half-open intervals partition (-180, 180] exactly, with no
    epsilon: (-45, 45] right, (-135, -45] top, (45, 135] down (left under
    the LITERAL table), and the rest left (down under LITERAL).
    """
    if theta is None:
        return Direction.NONE
    if not -180.0 < theta <= 180.0:
        raise OutOfRange(f"angle {theta} outside (-180, 180]")
    if -45.0 < theta <= 45.0:
        return Direction.RIGHT
    if -135.0 < theta <= -45.0:
        return Direction.TOP
    if 45.0 < theta <= 135.0:
        return Direction.DOWN if mode is BucketMode.CORRECTED else Direction.LEFT
    return Direction.LEFT if mode is BucketMode.CORRECTED else Direction.DOWN


def proximity_threshold(box: BoundingBox) -> float:
    """Half the diagonal of a box: the near/far cut-off it induces."""
    return math.hypot(box.width, box.height) / 2.0


def classify_proximity(distance: float, ref_box: BoundingBox) -> Proximity:
    """Near when the distance falls inside half the reference box diagonal."""
    return Proximity.NEAR if distance < proximity_threshold(ref_box) else Proximity.FAR


def opposite_direction(direction: Direction) -> Direction:
    return _OPPOSITE[direction]


def geometric_relations(
    box_i: BoundingBox,
    box_j: BoundingBox,
    bucket_mode: BucketMode = BucketMode.CORRECTED,
    ref_box_mode: RefBoxMode = RefBoxMode.SUBJECT,
) -> GeoParams:
    """Compute distance, angle, and both buckets for the ordered pair (i, j).

    The proximity threshold comes from the subject box by default; MEAN mode
    averages the half-diagonals of both boxes.
    """
    c_i = centroid(box_i)
    c_j = centroid(box_j)
    distance = l2_distance(c_i, c_j)
    theta = direction_angle(c_i, c_j)
    direction = classify_direction(theta, bucket_mode)
    if ref_box_mode is RefBoxMode.SUBJECT:
        threshold = proximity_threshold(box_i)
    else:
        threshold = (proximity_threshold(box_i) + proximity_threshold(box_j)) / 2.0
    proximity = Proximity.NEAR if distance < threshold else Proximity.FAR
    return GeoParams(distance=distance, angle=theta, direction=direction, proximity=proximity)
