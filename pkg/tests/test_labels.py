import numpy as np
import pytest

from depthmask import DepthBins, InputError, ParseError
from depthmask.labels import (
    CoarseMask,
    KittiObject,
    filter_categories,
    parse_kitti_calib,
    parse_kitti_labels,
    serialize_kitti_labels,
    synthesize_pixel_labels,
)

CAR_LINE = "Car 0.0 0 -1.58 587.01 173.33 614.12 200.12 1.65 1.67 3.64 -0.65 1.71 46.70 -1.59"
BINS = DepthBins(64, 2.0, 80.0)


def test_empty_file():
    assert parse_kitti_labels("") == []
    assert parse_kitti_labels("\n  \n") == []


def test_car_line_fields():
    (obj,) = parse_kitti_labels(CAR_LINE)
    assert obj.type == "Car"
    assert obj.location == (-0.65, 1.71, 46.70)
    assert (obj.h, obj.w, obj.l) == (1.65, 1.67, 3.64)
    assert obj.bbox == (587.01, 173.33, 614.12, 200.12)
    assert obj.alpha == -1.58 and obj.rotation_y == -1.59
    assert obj.score is None


def test_result_file_score_field():
    (obj,) = parse_kitti_labels(CAR_LINE + " 0.93")
    assert obj.score == 0.93


def test_arity_error_names_line():
    text = CAR_LINE + "\n" + " ".join(CAR_LINE.split()[:14]) + "\n"
    with pytest.raises(ParseError, match="labels.txt:2:") as err:
        parse_kitti_labels(text, "labels.txt")
    assert err.value.line == 2


def test_non_numeric_field():
    with pytest.raises(ParseError) as err:
        parse_kitti_labels(CAR_LINE.replace("46.70", "far"))
    assert err.value.line == 1


def test_dontcare_kept_and_flagged():
    line = "DontCare -1 -1 -10 503.89 169.71 590.61 190.13 -1 -1 -1 -1000 -1000 -1000 -10"
    objs = parse_kitti_labels(CAR_LINE + "\n" + line)
    assert [o.is_dontcare for o in objs] == [False, True]
    with pytest.raises(ParseError):
        parse_kitti_labels(line.replace("DontCare", "Van"))


def test_serialize_round_trip():
    text = CAR_LINE + "\nPedestrian 0.00 0 -0.20 712.40 143.00 810.73 307.92 1.89 0.48 1.20 1.84 1.47 8.41 0.01 0.5\n"
    objs = parse_kitti_labels(text)
    again = parse_kitti_labels(serialize_kitti_labels(objs))
    for a, b in zip(objs, again):
        assert a == b
    for orig, out in zip(text.splitlines(), serialize_kitti_labels(objs).splitlines()):
        assert [float(x) for x in orig.split()[1:]] == [float(x) for x in out.split()[1:]]


def test_calib_identity_like():
    text = "P2: 1 0 0 0 0 1 0 0 0 0 1 0\n"
    cam = parse_kitti_calib(text)
    assert (cam.f_x, cam.f_y, cam.c_x, cam.c_y) == (1.0, 1.0, 0.0, 0.0)


def test_calib_errors():
    with pytest.raises(ParseError, match="P2"):
        parse_kitti_calib("P0: 1 0 0 0 0 1 0 0 0 0 1 0\n")
    with pytest.raises(ParseError) as err:
        parse_kitti_calib("P0: 1\nP2: 1 0 0 0 0 1 0 0 0 0 1\n", "calib.txt")
    assert err.value.line == 2
    with pytest.raises(ParseError):
        parse_kitti_calib("P2: 1 0 0 0 0 x 0 0 0 0 1 0\n")
    with pytest.raises(ParseError):
        parse_kitti_calib("P2: 0 0 0 0 0 1 0 0 0 0 1 0\n")


def _obj(kind):
    return KittiObject(kind, 0.0, 0, 0.0, (0, 0, 1, 1), (1.5, 1.6, 3.9), (0, 1, 10), 0.0)


def test_filter_categories():
    cars = [_obj("Car"), _obj("Car")]
    assert filter_categories(cars) == cars
    assert filter_categories([_obj("Truck"), _obj("Van")]) == []
    mixed = [_obj("Car"), _obj("Truck"), _obj("Cyclist"), _obj("DontCare"), _obj("Pedestrian")]
    assert [o.type for o in filter_categories(mixed)] == ["Car", "Cyclist", "Pedestrian"]


def test_synthesize_empty_and_full():
    zero = CoarseMask(1, np.zeros((3, 4), dtype=int))
    assert not synthesize_pixel_labels([(zero, 10.0)], BINS, 4, 3).values.any()
    d5 = BINS.depth_of_class(5)
    full = CoarseMask(1, np.ones((3, 4), dtype=int))
    assert (synthesize_pixel_labels([(full, d5)], BINS, 4, 3).values == 5).all()


def test_synthesize_overlap_nearer_wins():
    a = np.zeros((5, 5), dtype=int)
    a[0:3, 0:3] = 1
    b = np.zeros((5, 5), dtype=int)
    b[2:5, 2:5] = 1
    ca, cb = BINS.class_of_depth(20.0), BINS.class_of_depth(8.0)
    for order in ([(CoarseMask(1, a), 20.0), (CoarseMask(2, b), 8.0)],
                  [(CoarseMask(2, b), 8.0), (CoarseMask(1, a), 20.0)]):
        got = synthesize_pixel_labels(order, BINS, 5, 5).values
        for r in range(5):
            for c in range(5):
                if b[r, c]:
                    expected = cb
                elif a[r, c]:
                    expected = ca
                else:
                    expected = 0
                assert got[r, c] == expected


def test_synthesize_disjoint_is_class_times_mask():
    rng = np.random.default_rng(1)
    labels = rng.integers(0, 4, size=(6, 7))
    depths = {1: 5.0, 2: 17.0, 3: 61.0}
    masks = [(CoarseMask(i, (labels == i).astype(int)), d) for i, d in depths.items()]
    got = synthesize_pixel_labels(masks, BINS, 7, 6)
    expected = sum(BINS.class_of_depth(d) * (labels == i) for i, d in depths.items())
    assert np.array_equal(got.values, expected)
    assert np.array_equal(synthesize_pixel_labels(masks, BINS, 7, 6).values, got.values)


def test_synthesize_errors():
    with pytest.raises(InputError):
        synthesize_pixel_labels([(CoarseMask(1, np.ones((2, 2), dtype=int)), 5.0)], BINS, 3, 3)
    with pytest.raises(InputError):
        CoarseMask(1, np.array([[0, 2]]))
