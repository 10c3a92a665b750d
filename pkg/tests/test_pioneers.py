import itertools

import numpy as np
import pytest

from perclab.explore import Caps
from perclab.lattice import Box, Edge, ModelSpec, neighbor_offsets
from perclab.pioneers import crossing_counts, crossing_profile
from perclab.randomness import EdgeField

from conftest import within_se


def brute_crossing_counts(model, field, p, source, n_max, region):
    """Crossing bonds straight from the definition, one realization.

    A bond {y, z} with y[0] < z[0] counts iff it is open, z[0] > x[0],
    and y joins the source by an open path whose vertices stay strictly
    left of the plane of z.  It covers offsets y[0]-x[0] < n <= z[0]-x[0].
    """
    d, L = model.dimension, model.edge_range
    x0 = source[0]
    sweep_hi = x0 + (n_max + L - 2) + L
    lo, hi = region.bounds(d)
    hi = hi.copy()
    hi[0] = min(int(hi[0]), sweep_hi)  # the sweep bound clips axis 0 only
    verts = [v for v in itertools.product(
        *[range(int(lo[i]), int(hi[i]) + 1) for i in range(d)])
        if region.contains(v) and v[0] <= sweep_hi]
    vset = set(verts)
    offs = [tuple(int(c) for c in o) for o in neighbor_offsets(d, L)]
    edges = set()
    for v in verts:
        for o in offs:
            w = tuple(v[i] + o[i] for i in range(d))
            if w in vset:
                edges.add((v, w) if v < w else (w, v))
    open_edges = sorted(e for e in edges if field.is_open(model, e, p=p))
    adj = {}
    for a, b in open_edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)

    def cluster_left_of(plane):
        if source not in vset or source[0] >= plane:
            return set()
        seen = {source}
        stack = [source]
        while stack:
            u = stack.pop()
            for w in adj.get(u, ()):
                if w not in seen and w[0] < plane:
                    seen.add(w)
                    stack.append(w)
        return seen

    counts = np.zeros(n_max + 1, dtype=np.int64)
    total = 0
    horizon = n_max + L - 2
    for a, b in open_edges:
        if a[0] == b[0]:
            continue
        y, z = (a, b) if a[0] < b[0] else (b, a)
        if z[0] <= x0:
            continue
        if y in cluster_left_of(z[0]):
            # windowed counts are exact for every offset <= n_max
            nlo = max(y[0] - x0 + 1, 1)
            nhi = min(z[0] - x0, n_max)
            if nlo <= nhi:
                counts[nlo:nhi + 1] += 1
        # the total only sees bonds whose near endpoint joins the source
        # within the sweep horizon
        if y in cluster_left_of(min(z[0], x0 + horizon + 1)):
            total += 1
    return counts[1:], total


@pytest.mark.parametrize("dim,edge_range,p,n_streams", [
    (2, 1, 0.35, 60), (2, 1, 0.55, 60), (3, 1, 0.2, 40), (2, 2, 0.2, 40),
    (1, 2, 0.5, 60),
])
def test_sweep_equals_definition(dim, edge_range, p, n_streams):
    model = ModelSpec(dim, "lattice", edge_range=edge_range).with_p(p)
    region = Box(9)
    n_max = 5
    source = (0,) * dim
    for stream in range(n_streams):
        field = EdgeField(42, stream)
        rec = crossing_counts(model, field, n_max=n_max, region=region)
        assert rec.reason == 0
        want_counts, want_total = brute_crossing_counts(
            model, field, p, source, n_max, region)
        assert rec.counts[1:].tolist() == want_counts.tolist()
        assert rec.total == want_total


def test_sweep_equals_definition_off_origin_source():
    model = ModelSpec(2, "lattice").with_p(0.45)
    region = Box(9)
    source = (-2, 1)
    for stream in range(30):
        field = EdgeField(7, stream)
        rec = crossing_counts(model, field, n_max=4, source=source,
                              region=region)
        want_counts, want_total = brute_crossing_counts(
            model, field, 0.45, source, 4, region)
        assert rec.counts[1:].tolist() == want_counts.tolist()
        assert rec.total == want_total


def test_chain_law_d1():
    # on Z^1 the count at offset n is 1 iff the first n bonds are open
    model = ModelSpec(1, "lattice").with_p(0.7)
    prof = crossing_profile(model, EdgeField(5), n_max=6, replicas=20000)
    assert prof.censored == 0
    for i, n in enumerate(prof.offsets):
        assert within_se(prof.mean[i], 0.7 ** int(n), prof.sem[i], 4.0)


def test_counts_bounded_by_window_length():
    # each crossing bond covers at most edge_range plane offsets
    model = ModelSpec(2, "lattice", edge_range=2).with_p(0.25)
    for stream in range(25):
        rec = crossing_counts(model, EdgeField(9, stream), n_max=6,
                              region=Box(8))
        assert rec.window_sum <= 2 * rec.total


def test_truncation_flags():
    model = ModelSpec(2, "lattice").with_p(0.8)
    rec = crossing_counts(model, EdgeField(1, 4), n_max=4,
                          caps=Caps(max_volume=4))
    assert rec.truncated and rec.reason == 1


def test_profile_excludes_censored_from_mean():
    model = ModelSpec(2, "lattice").with_p(0.8)
    prof = crossing_profile(model, EdgeField(3), n_max=3, replicas=400,
                            caps=Caps(max_volume=16))
    assert 0 < prof.censored < 400
    assert prof.totals.shape == (400,)
    assert prof.unreliable


def test_torus_and_intrinsic_rejected():
    with pytest.raises(ValueError):
        crossing_counts(ModelSpec(2, "torus", period=6).with_p(0.3),
                        EdgeField(0), n_max=3)
    with pytest.raises(ValueError):
        crossing_counts(ModelSpec(2, "lattice").with_p(0.3), EdgeField(0),
                        n_max=3, caps=Caps(max_intrinsic=5))
    with pytest.raises(ValueError):
        crossing_counts(ModelSpec(2, "lattice").with_p(0.3), EdgeField(0),
                        n_max=0)


def test_profile_streams_are_reproducible():
    model = ModelSpec(2, "lattice").with_p(0.4)
    a = crossing_profile(model, EdgeField(12), n_max=4, replicas=500)
    b = crossing_profile(model, EdgeField(12), n_max=4, replicas=500,
                         workers=4)
    assert np.array_equal(a.mean, b.mean)
    assert np.array_equal(a.totals, b.totals)
    # single-record sweep agrees with the batched kernel, stream by stream
    for stream in (0, 17, 333):
        rec = crossing_counts(model, EdgeField(12, stream), n_max=4)
        assert rec.total == a.totals[stream]
