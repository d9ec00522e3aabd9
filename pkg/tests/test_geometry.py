from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from geoscene.errors import OutOfRange
from geoscene.geometry import (
    BucketMode,
    Direction,
    Proximity,
    RefBoxMode,
    centroid,
    classify_direction,
    classify_proximity,
    direction_angle,
    geometric_relations,
    l2_distance,
    opposite_direction,
    proximity_threshold,
)
from geoscene.model import BoundingBox, Point

# dyadic coordinates (quarter-pixel grid) keep all arithmetic exact
dyadic = st.integers(min_value=0, max_value=20000).map(lambda v: v / 4.0)


@st.composite
def boxes(draw):
    x = draw(dyadic)
    y = draw(dyadic)
    w = draw(st.integers(min_value=1, max_value=4000).map(lambda v: v / 4.0))
    h = draw(st.integers(min_value=1, max_value=4000).map(lambda v: v / 4.0))
    return BoundingBox(x, y, x + w, y + h)


class TestCentroid:
    def test_square(self):
        assert centroid(BoundingBox(0, 0, 10, 10)) == Point(5, 5)

    def test_rectangle(self):
        assert centroid(BoundingBox(2, 4, 6, 10)) == Point(4, 7)

    def test_thin(self):
        assert centroid(BoundingBox(0, 0, 1, 3)) == Point(0.5, 1.5)


class TestL2Distance:
    def test_axis_aligned(self):
        assert l2_distance(Point(5, 5), Point(25, 5)) == 20.0

    def test_3_4_5(self):
        assert l2_distance(Point(0, 0), Point(3, 4)) == 5.0

    def test_identity(self):
        assert l2_distance(Point(7, 7), Point(7, 7)) == 0.0

    @given(boxes(), boxes())
    def test_symmetry_exact(self, a, b):
        ca, cb = centroid(a), centroid(b)
        assert l2_distance(ca, cb) == l2_distance(cb, ca)


class TestDirectionAngle:
    def test_pure_plus_x(self):
        assert direction_angle(Point(5, 5), Point(25, 5)) == 0.0

    def test_pure_plus_y(self):
        assert direction_angle(Point(5, 5), Point(5, 25)) == 90.0

    def test_negative_x_normalizes_to_plus_180(self):
        # hand oracle: atan2(0, -10) is pi radians, so +180 deg, never -180
        expected = math.degrees(math.atan2(0.0, -10.0))
        assert expected == 180.0
        assert direction_angle(Point(0, 0), Point(-10, 0)) == 180.0

    def test_coincident_is_undefined(self):
        assert direction_angle(Point(3, 3), Point(3, 3)) is None

    @given(boxes(), boxes())
    def test_range(self, a, b):
        theta = direction_angle(centroid(a), centroid(b))
        if theta is not None:
            assert -180.0 < theta <= 180.0


class TestClassifyDirection:
    @pytest.mark.parametrize(
        "theta,expected",
        [
            (0.0, Direction.RIGHT),
            (45.0, Direction.RIGHT),
            (-45.0, Direction.TOP),
            (90.0, Direction.DOWN),
            (135.0, Direction.DOWN),
            (-90.0, Direction.TOP),
            (-135.0, Direction.LEFT),
            (180.0, Direction.LEFT),
            (-179.9, Direction.LEFT),
        ],
    )
    def test_corrected_buckets(self, theta, expected):
        assert classify_direction(theta) is expected

    @pytest.mark.parametrize(
        "theta,expected",
        [
            (0.0, Direction.RIGHT),
            (-90.0, Direction.TOP),
            (90.0, Direction.LEFT),
            (180.0, Direction.DOWN),
        ],
    )
    def test_literal_buckets_swap_left_down(self, theta, expected):
        assert classify_direction(theta, BucketMode.LITERAL) is expected

    def test_undefined_maps_to_none(self):
        assert classify_direction(None) is Direction.NONE

    @pytest.mark.parametrize("theta", [-180.0, 180.0001, 200.0, -999.0])
    def test_out_of_range(self, theta):
        with pytest.raises(OutOfRange):
            classify_direction(theta)

    @given(st.floats(min_value=-180.0, max_value=180.0, exclude_min=True, allow_nan=False))
    def test_totality(self, theta):
        for mode in BucketMode:
            assert classify_direction(theta, mode) is not Direction.NONE


class TestClassifyProximity:
    def test_far_beyond_half_diagonal(self):
        ref = BoundingBox(0, 0, 10, 10)
        # hand oracle: half-diagonal of a 10x10 box
        assert proximity_threshold(ref) == math.sqrt(200) / 2
        assert classify_proximity(20.0, ref) is Proximity.FAR

    def test_near_within_half_diagonal(self):
        assert classify_proximity(5.0, BoundingBox(0, 0, 10, 10)) is Proximity.NEAR

    def test_zero_distance_always_near(self):
        assert classify_proximity(0.0, BoundingBox(3, 3, 4, 9)) is Proximity.NEAR

    @given(boxes(), st.floats(min_value=0, max_value=1e5), st.floats(min_value=0, max_value=1e5))
    def test_monotone(self, ref, l1, l2):
        lo, hi = sorted((l1, l2))
        if classify_proximity(hi, ref) is Proximity.NEAR:
            assert classify_proximity(lo, ref) is Proximity.NEAR


class TestGeometricRelations:
    def test_right_far_composition(self):
        params = geometric_relations(BoundingBox(0, 0, 10, 10), BoundingBox(20, 0, 30, 10))
        assert params.distance == 20.0
        assert params.angle == 0.0
        assert params.direction is Direction.RIGHT
        assert params.proximity is Proximity.FAR

    def test_box_against_itself(self):
        box = BoundingBox(5, 5, 25, 15)
        params = geometric_relations(box, box)
        assert params.distance == 0.0
        assert params.angle is None
        assert params.direction is Direction.NONE
        assert params.proximity is Proximity.NEAR

    def test_down_far(self):
        params = geometric_relations(BoundingBox(0, 0, 10, 10), BoundingBox(0, 12, 10, 22))
        assert params.distance == 12.0
        assert params.angle == 90.0
        assert params.direction is Direction.DOWN
        assert params.proximity is Proximity.FAR  # 12 >= sqrt(200)/2

    def test_mean_ref_mode_averages_half_diagonals(self):
        # L ~ 8.49 sits above the small subject's half-diagonal (~7.07) but
        # far below the mean of the two half-diagonals (~110.3)
        subject = BoundingBox(140, 140, 150, 150)
        obj = BoundingBox(0, 0, 302, 302)
        assert geometric_relations(subject, obj).proximity is Proximity.FAR
        assert (
            geometric_relations(subject, obj, ref_box_mode=RefBoxMode.MEAN).proximity
            is Proximity.NEAR
        )

    @given(boxes(), boxes())
    def test_antisymmetry(self, a, b):
        forward = geometric_relations(a, b)
        backward = geometric_relations(b, a)
        assert forward.direction is opposite_direction(backward.direction)

    @given(boxes(), boxes(), st.integers(min_value=-1000, max_value=1000),
           st.integers(min_value=-1000, max_value=1000))
    def test_translation_invariance_bitwise(self, a, b, dx, dy):
        dx = max(dx, -int(min(a.x_min, b.x_min)))
        dy = max(dy, -int(min(a.y_min, b.y_min)))
        pa = geometric_relations(a, b)
        pb = geometric_relations(a.translate(dx, dy), b.translate(dx, dy))
        assert pa == pb

    @given(boxes(), boxes(), st.sampled_from([0.5, 2.0, 3.0, 7.5, 0.25]))
    def test_uniform_scaling_preserves_buckets(self, a, b, s):
        pa = geometric_relations(a, b)
        pb = geometric_relations(a.scale(s), b.scale(s))
        assert pa.direction is pb.direction
        assert pa.proximity is pb.proximity
