import numpy as np
import pytest

from gsdkit import InstanceMap, InstanceNotFound, extract_contours, instance_pixels
from gsdkit.naive import naive_contour

from conftest import random_instances


def as_set(points):
    return {(int(x), int(y)) for x, y in points}


def test_solid_square_contour():
    ids = np.zeros((5, 5), dtype=np.int32)
    ids[1:4, 1:4] = 1
    cs = extract_contours(InstanceMap(ids=ids), 1)
    assert len(cs) == 8  # all square pixels except the center
    assert as_set(cs.points) == as_set(naive_contour(ids == 1))
    assert (2, 2) not in as_set(cs.points)


def test_single_pixel_instance():
    ids = np.zeros((4, 4), dtype=np.int32)
    ids[2, 1] = 5
    cs = extract_contours(InstanceMap(ids=ids), 5)
    assert cs.as_lists() == [[1, 2]]


def test_full_raster_instance_is_border_ring():
    ids = np.ones((6, 7), dtype=np.int32)
    cs = extract_contours(InstanceMap(ids=ids), 1)
    expected = {(x, y) for y in range(6) for x in range(7)
                if y in (0, 5) or x in (0, 6)}
    assert as_set(cs.points) == expected


def test_instance_pixels_square():
    ids = np.zeros((5, 5), dtype=np.int32)
    ids[1:4, 1:4] = 1
    pix = instance_pixels(InstanceMap(ids=ids), 1)
    assert len(pix) == 9
    # row-major ordering
    assert pix[0].tolist() == [1, 1] and pix[-1].tolist() == [3, 3]


def test_disjoint_components_share_id():
    ids = np.zeros((6, 6), dtype=np.int32)
    ids[0:2, 0:2] = 3
    ids[4:6, 4:6] = 3
    pix = instance_pixels(InstanceMap(ids=ids), 3)
    assert len(pix) == 8
    cs = extract_contours(InstanceMap(ids=ids), 3)
    assert as_set(cs.points) == as_set(pix)  # both blobs are all-boundary


def test_contour_subset_and_translation(rng):
    for _ in range(10):
        ids = random_instances(rng, 16, 16)
        inst = InstanceMap(ids=ids)
        for iid in inst.instance_ids():
            contour = as_set(extract_contours(inst, iid).points)
            pixels = as_set(instance_pixels(inst, iid))
            assert contour <= pixels
            assert contour == set(naive_contour(ids == iid))
    # translation moves every contour point by the same offset
    blob = random_instances(rng, 10, 10, n_instances=1)
    base = np.zeros((20, 20), dtype=np.int32)
    base[:10, :10] = blob
    moved = np.zeros_like(base)
    moved[6:16, 7:17] = blob
    c0 = as_set(extract_contours(InstanceMap(ids=base), 1).points)
    c1 = as_set(extract_contours(InstanceMap(ids=moved), 1).points)
    assert {(x + 7, y + 6) for x, y in c0} == c1


def test_exhaustive_convex_rectangles():
    for y0 in range(6):
        for y1 in range(y0, 6):
            for x0 in range(6):
                for x1 in range(x0, 6):
                    ids = np.zeros((6, 6), dtype=np.int32)
                    ids[y0:y1 + 1, x0:x1 + 1] = 1
                    cs = extract_contours(InstanceMap(ids=ids), 1)
                    assert as_set(cs.points) == set(naive_contour(ids == 1))


def test_errors():
    ids = np.zeros((3, 3), dtype=np.int32)
    ids[1, 1] = 2
    inst = InstanceMap(ids=ids)
    with pytest.raises(InstanceNotFound):
        extract_contours(inst, 0)
    with pytest.raises(InstanceNotFound):
        extract_contours(inst, 9)
    with pytest.raises(InstanceNotFound):
        instance_pixels(inst, 9)


def test_row_major_order():
    ids = np.zeros((4, 4), dtype=np.int32)
    ids[1:3, 1:4] = 1
    pts = extract_contours(InstanceMap(ids=ids), 1).points
    ordered = sorted(map(tuple, pts.tolist()), key=lambda p: (p[1], p[0]))
    assert list(map(tuple, pts.tolist())) == ordered
