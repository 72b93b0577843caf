import itertools

import pytest

from elastic_tilings.lattice import (
    Dissection,
    Lattice,
    LatticeError,
    canonical_key,
    min_image_distance,
    torus_displacement,
)


def test_row_major_ids_round_trip():
    lat = Lattice(3, 4)
    assert lat.N == 64
    for v in range(lat.N):
        assert lat.vertex(lat.coords(v)) == v
    assert lat.coords(1) == (0, 0, 1)
    assert lat.coords(4) == (0, 1, 0)


def test_bad_vertex_and_shape():
    lat = Lattice(2, 3)
    with pytest.raises(LatticeError):
        lat.coords(9)
    with pytest.raises(LatticeError):
        lat.vertex((1,))
    with pytest.raises(LatticeError):
        Lattice(0, 3)


def test_minimal_image_half_open():
    lat = Lattice(1, 4)
    assert lat.wrap(2) == 2
    assert lat.wrap(-2) == 2
    assert lat.wrap(3) == -1
    assert torus_displacement(0, 3, lat) == (-1,)


def test_distances_symmetric_and_norms():
    lat = Lattice(2, 5)
    for a, b in itertools.combinations(range(lat.N), 2):
        assert min_image_distance(a, b, lat) == min_image_distance(b, a, lat)
    a, b = lat.vertex((0, 0)), lat.vertex((2, 1))
    assert min_image_distance(a, b, lat) == pytest.approx(5**0.5)
    assert min_image_distance(a, b, lat, "linf") == 2
    with pytest.raises(LatticeError):
        min_image_distance(a, b, lat, "l1")


def test_canonical_key_is_translation_invariant():
    lat = Lattice(2, 4)
    verts = (lat.vertex((0, 1)), lat.vertex((3, 3)), lat.vertex((1, 0)))
    key = canonical_key(lat, verts)
    for shift in itertools.product(range(4), repeat=2):
        moved = [lat.translate(v, shift) for v in verts]
        assert canonical_key(lat, moved) == key
        assert canonical_key(lat, moved[::-1]) == key


def test_canonical_key_separates_classes():
    lat = Lattice(1, 6)
    assert canonical_key(lat, (0, 1)) != canonical_key(lat, (0, 2))
    # wrap-around: {0, 5} is a nearest-neighbour pair like {0, 1}
    assert canonical_key(lat, (0, 5)) == canonical_key(lat, (0, 1))


def test_dissection_geometry():
    lat = Lattice(2, 6)
    dis = Dissection(lat, 3)
    assert dis.n_box == 9 and dis.num_boxes == 4 and dis.boxes_per_side == 2
    assert sorted(v for m in dis.members for v in m) == list(range(36))
    assert all(len(m) == 9 for m in dis.members)
    assert dis.box_of(lat.vertex((4, 1))) == dis.coarse.vertex((1, 0))
    assert dis.box_center_distance(0, 1) == 3.0
    with pytest.raises(LatticeError):
        Dissection(lat, 4)
