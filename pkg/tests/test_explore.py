from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perclab import _kernels as K
from perclab.explore import Caps, explore_cluster, reaches
from perclab.lattice import (ALL, Box, Custom, ModelSpec, canonical_point,
                             incident_edges, neighbor_offsets)
from perclab.randomness import EdgeField


def bfs_reference(model, field, source, p, region=ALL, max_dist=None):
    """Dictionary BFS straight from the definitions; the ground truth."""
    source = canonical_point(model, source)
    if not region.contains(source):
        return {}
    dist = {source: 0}
    q = deque([source])
    while q:
        x = q.popleft()
        if max_dist is not None and dist[x] >= max_dist:
            continue
        for e in incident_edges(model, x):
            y = e.b if e.a == x else e.a
            if y in dist or not region.contains(y):
                continue
            if field.is_open(model, e, p=p):
                dist[y] = dist[x] + 1
                q.append(y)
    return dist


def cluster_as_dict(cl):
    return {tuple(int(c) for c in xy): int(dv)
            for xy, dv in zip(cl.coords, cl.dists)}


@pytest.mark.parametrize("seed", [0, 1, 7, 101])
@pytest.mark.parametrize("p", [0.2, 0.45, 0.6])
def test_cluster_matches_bfs_reference_d2(seed, p):
    model = ModelSpec(2, "lattice")
    field = EdgeField(seed, 3)
    region = Box(6)
    cl = explore_cluster(model, field, p=p, region=region)
    assert cl.reason == 0
    assert cluster_as_dict(cl) == bfs_reference(model, field, (0, 0), p,
                                                region)


def test_cluster_matches_bfs_reference_spread_out():
    model = ModelSpec(2, "lattice", edge_range=2)
    field = EdgeField(11, 0)
    region = Box(5)
    cl = explore_cluster(model, field, p=0.18, region=region)
    assert cluster_as_dict(cl) == bfs_reference(model, field, (0, 0), 0.18,
                                                region)


def test_cluster_matches_bfs_reference_torus():
    model = ModelSpec(2, "torus", period=5)
    field = EdgeField(3, 1)
    for p in (0.3, 0.55):
        cl = explore_cluster(model, field, p=p)
        assert cluster_as_dict(cl) == bfs_reference(model, field, (0, 0), p)


def test_full_torus_at_p_one():
    model = ModelSpec(3, "torus", period=4)
    cl = explore_cluster(model, EdgeField(0), p=1.0)
    assert len(cl.coords) == 64
    assert cl.dists.max() == 6  # three axes, two steps each in the window


def test_custom_region_equals_box_region():
    model = ModelSpec(2, "lattice")
    field = EdgeField(21, 2)
    box = Box(4)
    custom = Custom(lambda x: all(abs(c) <= 4 for c in x))
    a = explore_cluster(model, field, p=0.5, region=box)
    b = explore_cluster(model, field, p=0.5, region=custom)
    assert cluster_as_dict(a) == cluster_as_dict(b)


def test_caps_reasons():
    model = ModelSpec(2, "lattice")
    field = EdgeField(5, 0)
    # a seed/p where the origin cluster is comfortably large
    big = explore_cluster(model, field, p=0.8, region=Box(8))
    assert len(big.coords) > 30
    capped = explore_cluster(model, field, p=0.8, region=Box(8),
                             caps=Caps(max_volume=10))
    assert capped.reason == 1 and len(capped.coords) <= 10
    clipped = explore_cluster(model, field, p=0.8, region=Box(8),
                              caps=Caps(max_radius=2))
    assert np.abs(clipped.coords).max() <= 2
    shallow = explore_cluster(model, field, p=0.8, region=Box(8),
                              caps=Caps(max_intrinsic=2))
    assert shallow.dists.max() <= 2
    assert shallow.reason == 3  # growth was still possible


def test_intrinsic_cap_prefix_of_full_bfs():
    model = ModelSpec(2, "lattice")
    field = EdgeField(17, 4)
    full = bfs_reference(model, field, (0, 0), 0.55, Box(9))
    part = explore_cluster(model, field, p=0.55, region=Box(9),
                           caps=Caps(max_intrinsic=3))
    got = cluster_as_dict(part)
    want = {x: dv for x, dv in full.items() if dv <= 3}
    assert got == want


def test_reaches_matches_membership():
    model = ModelSpec(2, "lattice")
    field = EdgeField(33, 6)
    ref = bfs_reference(model, field, (0, 0), 0.55, Box(7))
    for y in [(1, 0), (3, 2), (-4, 1), (0, 6)]:
        assert reaches(model, field, (0, 0), y, p=0.55, region=Box(7)) == \
            (y in ref)
        assert reaches(model, field, y, (0, 0), p=0.55, region=Box(7)) == \
            (y in ref)


def test_record_edges_are_open_cluster_edges():
    model = ModelSpec(2, "lattice")
    field = EdgeField(8, 1)
    cl = explore_cluster(model, field, p=0.5, region=Box(5),
                         caps=Caps(max_volume=4096), record_edges=True)
    from perclab.lattice import unpack_key
    verts = {tuple(v) for v in cl.coords}
    assert cl.edges.shape[0] > 0
    for ka, kb in cl.edges:
        x = unpack_key(int(ka), 2)
        y = unpack_key(int(kb), 2)
        assert x in verts and y in verts
        assert field.is_open(model, (x, y), p=0.5)
        assert int(ka) <= int(kb)


def test_target_box_and_stop():
    model = ModelSpec(2, "lattice")
    field = EdgeField(5, 0)
    lo = np.array([3, -8], dtype=np.int64)
    hi = np.array([8, 8], dtype=np.int64)
    cl = explore_cluster(model, field, p=0.8, region=Box(8),
                         target_box=(lo, hi))
    ref = bfs_reference(model, field, (0, 0), 0.8, Box(8))
    assert cl.hit == any(x[0] >= 3 for x in ref)
    part = explore_cluster(model, field, p=0.8, region=Box(8),
                           target_box=(lo, hi), stop_at_target=True)
    if part.hit:
        assert len(part.coords) <= len(ref)


def test_lanes_agree_bit_for_bit():
    from perclab._kernels import reference_lane
    model = ModelSpec(3, "lattice")
    caps = Caps(max_volume=4096)
    lp = K.lower_problem(model, Box(6), (0, 0, 0), caps, p=0.3)
    tgt = np.zeros(3, dtype=np.int64)
    for stream in range(40):
        args = (np.uint64(99), np.uint64(0x70657263_00000001),
                np.uint64(stream))
        a = K.explore_single(*args, *lp, tgt, tgt, False, False, False, -1,
                             True)
        b = reference_lane.explore_single(*args, *lp, tgt, tgt, False, False,
                                          False, -1, True)
        for xa, xb in zip(a, b):
            assert np.array_equal(np.asarray(xa), np.asarray(xb))


@given(st.integers(0, 2 ** 32), st.floats(0.05, 0.95))
@settings(max_examples=25)
def test_cluster_invariants(seed, p):
    model = ModelSpec(2, "lattice")
    field = EdgeField(seed, 0)
    cl = explore_cluster(model, field, p=p, region=Box(5))
    pts = [tuple(int(c) for c in v) for v in cl.coords]
    assert len(set(pts)) == len(pts)
    assert (0, 0) in set(pts)
    d = cluster_as_dict(cl)
    assert d[(0, 0)] == 0
    offs = [tuple(o) for o in neighbor_offsets(2, 1)]
    for x, dv in d.items():
        if dv == 0:
            continue
        # BFS distance: some lattice neighbor sits one level down
        assert any(tuple(np.add(x, o)) in d
                   and d[tuple(np.add(x, o))] == dv - 1 for o in offs)
