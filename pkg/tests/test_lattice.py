import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from perclab.lattice import (ALL, Box, Custom, Edge, Halfspace, Intersection,
                             ModelSpec, Slab, canonical_point, coord_limit,
                             incident_edges, jbracket, neighbor_offsets,
                             norms, pack_array, pack_point, project_to_torus,
                             unpack_array, unpack_key)


def test_model_validation():
    with pytest.raises(ValueError):
        ModelSpec(0, "lattice")
    with pytest.raises(ValueError):
        ModelSpec(2, "lattice", period=5)
    with pytest.raises(ValueError):
        ModelSpec(2, "torus", period=2)  # needs r > 2L
    with pytest.raises(ValueError):
        ModelSpec(2, "torus", period=4, edge_range=2)
    with pytest.raises(ValueError):
        ModelSpec(2, "ring")
    with pytest.raises(ValueError):
        ModelSpec(2, "lattice", p=1.5)
    m = ModelSpec(3, "torus", period=6)
    assert m.n_vertices == 216
    assert m.with_p(0.3).p == 0.3
    with pytest.raises(ValueError):
        ModelSpec(3, "lattice").n_vertices


def test_norms_and_bracket():
    assert norms((3, -4, 0)) == (7, 4, 4)
    assert norms((0, 0)) == (0, 0, 1)
    assert jbracket((0,) * 5) == 1
    assert jbracket((-2, 1)) == 2


def test_neighbor_offsets_counts():
    # l1 ball sizes minus the origin
    assert len(neighbor_offsets(1, 1)) == 2
    assert len(neighbor_offsets(2, 1)) == 4
    assert len(neighbor_offsets(7, 1)) == 14
    assert len(neighbor_offsets(2, 2)) == 12
    offs = neighbor_offsets(3, 2)
    a = np.abs(offs)
    assert a.sum(axis=1).max() == 2
    assert (a.sum(axis=1) >= 1).all()
    # lexicographic and immutable
    assert [tuple(r) for r in offs] == sorted(tuple(r) for r in offs)
    with pytest.raises(ValueError):
        offs[0, 0] = 9


def test_torus_window():
    m = ModelSpec(1, "torus", period=6)
    assert [project_to_torus(m, (x,))[0] for x in range(-9, 9)] == [
        -3, -2, -1, 0, 1, 2, -3, -2, -1, 0, 1, 2, -3, -2, -1, 0, 1, 2]
    m5 = ModelSpec(1, "torus", period=5)
    assert sorted(project_to_torus(m5, (x,))[0] for x in range(5)) == [
        -2, -1, 0, 1, 2]
    # idempotent
    x = (4, -3)
    m2 = ModelSpec(2, "torus", period=5)
    assert project_to_torus(m2, project_to_torus(m2, x)) == \
        project_to_torus(m2, x)


def test_canonical_point_dim_check():
    with pytest.raises(ValueError):
        canonical_point(ModelSpec(2, "lattice"), (1, 2, 3))
    assert canonical_point(ModelSpec(2, "lattice"), (np.int64(1), 2)) == (1, 2)


def test_edge_is_unordered_and_immutable():
    e = Edge((1, 0), (0, 0))
    assert e.a == (0, 0) and e.b == (1, 0)
    assert e == Edge((0, 0), (1, 0))
    assert hash(e) == hash(Edge((0, 0), (1, 0)))
    assert list(e) == [(0, 0), (1, 0)]
    with pytest.raises(ValueError):
        Edge((1, 1), (1, 1))
    with pytest.raises(AttributeError):
        e.a = (5, 5)


def test_incident_edges_torus_canonicalized():
    m = ModelSpec(2, "torus", period=4)
    edges = incident_edges(m, (2, 0))  # 2 == -2 in the window
    assert len(edges) == 4
    for e in edges:
        for v in e:
            assert all(-2 <= c < 2 for c in v)
    # wrap neighbor of the window edge
    assert Edge((-2, 0), (1, 0)) in edges


def test_regions():
    assert Box(2).contains((2, -2)) and not Box(2).contains((3, 0))
    b = Box(1, center=(5, 5))
    assert b.contains((6, 4)) and not b.contains((3, 5))
    h = Halfspace(0, 2, "ge")
    assert h.contains((2, -9)) and not h.contains((1, 0))
    le = Halfspace(1, -1, "le")
    assert le.contains((0, -1)) and not le.contains((0, 0))
    s = Slab(0, -1, 3)
    assert s.contains((3, 99)) and not s.contains((4, 0))
    inter = Intersection(Box(5), Halfspace(0, 0, "ge"))
    assert inter.contains((0, -5)) and not inter.contains((-1, 0))
    lo, hi = inter.bounds(2)
    assert lo.tolist() == [0, -5] and hi.tolist() == [5, 5]
    c = Custom(lambda x: sum(x) % 2 == 0)
    assert c.contains((1, 1)) and not c.contains((1, 0))
    assert c.bounds(2) is None
    assert Intersection(Box(3), c).bounds(2) is None
    assert ALL.contains((10 ** 9,) * 3)
    with pytest.raises(ValueError):
        Slab(0, 2, 1)
    with pytest.raises(ValueError):
        Box(-1)
    with pytest.raises(ValueError):
        Halfspace(0, 0, "gt")


@given(st.integers(1, 8), st.data())
def test_pack_roundtrip(d, data):
    lim = coord_limit(d)
    x = tuple(data.draw(st.integers(-lim, lim)) for _ in range(d))
    key = pack_point(x)
    assert 0 <= key < 2 ** 64
    assert unpack_key(key, d) == x
    arr = pack_array(np.array([x], dtype=np.int64))
    assert int(arr[0]) == key
    assert tuple(unpack_array(arr, d)[0]) == x


@given(st.integers(2, 8), st.data())
def test_pack_order_is_lexicographic(d, data):
    lim = coord_limit(d)
    pt = st.tuples(*[st.integers(-lim, lim)] * d)
    x, y = data.draw(pt), data.draw(pt)
    assert (pack_point(x) < pack_point(y)) == (x < y)


def test_coord_limit_values():
    assert coord_limit(1) == 2 ** 63 - 1
    assert coord_limit(2) == 2 ** 31 - 1
    assert coord_limit(7) == 2 ** 8 - 1  # 9 bits per axis in d=7
    assert math.floor(64 / 7) == 9
