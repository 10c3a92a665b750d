"""Cluster exploration: the public face of the kernel lanes.

explore_cluster grows the open cluster of a source vertex by BFS under a
deterministic keyed edge field, honoring region constraints and resource
caps.  Box-bounded regions run on the compiled lane; predicate (Custom)
regions fall back to an interpreted python BFS with identical semantics,
which doubles as a reference implementation in the tests.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .lattice import (ALL, canonical_point, coord_limit, neighbor_offsets,
                      pack_point, project_to_torus, unpack_array, unpack_key,
                      Edge)
from .randomness import TAG_PERC

REASON_NONE = 0
REASON_VOLUME = 1
REASON_RADIUS = 2
REASON_INTRINSIC = 3

_REASON_NAMES = {REASON_NONE: None, REASON_VOLUME: "volume",
                 REASON_RADIUS: "radius", REASON_INTRINSIC: "intrinsic"}


@dataclass(frozen=True)
class Caps:
    """Resource limits for one exploration.

    max_volume    hard cap on visited vertices (abort; reason "volume")
    max_radius    box clip around the source, per axis (reason "radius")
    max_intrinsic graph-distance cap: vertices at this distance are grown
                  but never scanned (reason "intrinsic" if any remained)
    """
    max_volume: int | None = None
    max_radius: int | None = None
    max_intrinsic: int | None = None

    def __post_init__(self):
        if self.max_volume is not None and self.max_volume < 1:
            raise ValueError("max_volume must be >= 1")
        if self.max_radius is not None and self.max_radius < 0:
            raise ValueError("max_radius must be >= 0")
        if self.max_intrinsic is not None and self.max_intrinsic < 0:
            raise ValueError("max_intrinsic must be >= 0")


class Cluster:
    """Result of one exploration: vertices, BFS distances, optional edges.

    Vertices are sorted by (distance, packed key); `edges` is an (m, 2)
    uint64 array of canonical packed endpoint pairs (smaller key first),
    present only when the exploration recorded edges.
    """

    def __init__(self, model, source, p, keys, coords, dists, edges,
                 hit, hit_dist, reason):
        self.model = model
        self.source = source
        self.p = p
        self.keys = keys
        self.coords = coords
        self.dists = dists
        self.edges = edges
        self.hit = hit
        self.hit_dist = hit_dist
        self.reason = reason
        self._index = None

    @property
    def size(self):
        return int(self.keys.shape[0])

    def __len__(self):
        return self.size

    @property
    def truncated(self):
        return self.reason != REASON_NONE

    @property
    def truncated_by(self):
        return _REASON_NAMES[self.reason]

    def _key_index(self):
        if self._index is None:
            self._index = {int(k): i for i, k in enumerate(self.keys)}
        return self._index

    def __contains__(self, x):
        x = canonical_point(self.model, x)
        return pack_point(x) in self._key_index()

    def distance(self, x):
        """BFS distance from the source, or None if x was not visited."""
        x = canonical_point(self.model, x)
        i = self._key_index().get(pack_point(x))
        return None if i is None else int(self.dists[i])

    def vertex_set(self):
        return frozenset(map(tuple, self.coords.tolist()))

    def edge_objects(self):
        if self.edges is None:
            raise ValueError("exploration did not record edges")
        d = self.model.dimension
        return frozenset(
            Edge(unpack_key(int(a), d), unpack_key(int(b), d))
            for a, b in self.edges)

    def max_extent(self):
        """Largest sup-norm displacement from the source among vertices."""
        if self.size == 0:
            return 0
        disp = self.coords - np.array(self.source, dtype=np.int64)
        if self.model.is_torus:
            r = self.model.period
            f = r // 2
            disp = ((disp + f) % r) - f
        return int(np.abs(disp).max())


def _target_spec(model, target_box, target_outside, target_dist):
    d = model.dimension
    if target_dist is not None:
        if target_box is not None:
            raise ValueError("give either target_box or target_dist")
        if target_dist < 0:
            raise ValueError("target_dist must be >= 0")
        z = np.zeros(d, dtype=np.int64)
        return z, z, False, False, int(target_dist)
    if target_box is None:
        z = np.zeros(d, dtype=np.int64)
        return z, z, False, False, -1
    lo, hi = target_box
    if np.isscalar(lo):
        lo = (lo,) * d
    if np.isscalar(hi):
        hi = (hi,) * d
    tgt_lo = np.array([int(c) for c in lo], dtype=np.int64)
    tgt_hi = np.array([int(c) for c in hi], dtype=np.int64)
    if tgt_lo.shape != (d,) or np.any(tgt_lo > tgt_hi):
        raise ValueError("malformed target box")
    return tgt_lo, tgt_hi, True, bool(target_outside), -1


def _canonical_cluster(model, source, p, keys, dists, edges_flat, hit,
                       hit_dist, reason, record_edges):
    d = model.dimension
    order = np.lexsort((keys, dists))
    keys = keys[order]
    dists = dists[order]
    coords = unpack_array(keys, d)
    edges = None
    if record_edges:
        if edges_flat.size:
            pairs = edges_flat.reshape(-1, 2)
            edges = np.unique(pairs, axis=0)
        else:
            edges = np.empty((0, 2), dtype=np.uint64)
    return Cluster(model, source, p, keys, coords, dists, edges,
                   bool(hit), int(hit_dist), int(reason))


def explore_cluster(model, field, source=None, *, p=None, region=ALL,
                    caps=None, record_edges=False, target_box=None,
                    target_outside=False, target_dist=None,
                    stop_at_target=False):
    """Grow the open cluster of `source` and return a Cluster.

    target_box=(lo, hi) marks the exploration as `hit` on reaching the box
    (or its complement with target_outside=True); target_dist=k marks it on
    reaching graph distance k.  stop_at_target aborts at the first hit, in
    which case the returned cluster is partial.
    """
    if source is None:
        source = (0,) * model.dimension
    source = canonical_point(model, source)
    if target_dist == 0:
        # trivially hit at the source; keep kernels out of this corner
        target_dist = None
        target_box = (source, source)
    tgt_lo, tgt_hi, tgt_on, tgt_neg, tdist = _target_spec(
        model, target_box, target_outside, target_dist)
    try:
        lp = K.lower_problem(model, region, source, caps, p=p)
    except K.KernelUnsupported:
        return _explore_interpreted(model, field, source, p, region, caps,
                                    record_edges, tgt_lo, tgt_hi, tgt_on,
                                    tgt_neg, tdist, stop_at_target)
    if record_edges:
        n_off = lp.offsets.shape[0]
        if lp.max_volume * n_off > (1 << 22):
            raise ValueError(
                "edge recording needs max_volume * degree <= 2^22; "
                f"got {lp.max_volume} * {n_off}")
    keys, dists, edges_flat, hit, hit_dist, reason = K.explore_single(
        np.uint64(field.master_seed), np.uint64(TAG_PERC),
        np.uint64(field.stream_id), *lp,
        tgt_lo, tgt_hi, tgt_on, tgt_neg, bool(stop_at_target), tdist,
        bool(record_edges))
    return _canonical_cluster(model, source, lp.p, keys, dists, edges_flat,
                              hit, hit_dist, reason, record_edges)


def _explore_interpreted(model, field, source, p, region, caps,
                         record_edges, tgt_lo, tgt_hi, tgt_on, tgt_neg,
                         tdist, stop_at_target):
    """Reference BFS in plain python; identical semantics to the kernels."""
    if p is None:
        p = model.p
    if p is None:
        raise ValueError("no edge probability: set model.p or pass p=")
    d = model.dimension
    offsets = neighbor_offsets(model.dimension, model.edge_range)
    max_volume = K.MAX_VOLUME_LIMIT
    max_radius = None
    max_intrinsic = K.NO_INTRINSIC_CAP
    if caps is not None:
        if caps.max_volume is not None:
            max_volume = caps.max_volume
        max_radius = caps.max_radius
        if caps.max_intrinsic is not None:
            max_intrinsic = caps.max_intrinsic
    clim = coord_limit(d)

    def in_guard(x):
        if any(abs(c) > clim for c in x):
            return False
        if max_radius is not None:
            if any(abs(x[i] - source[i]) > max_radius for i in range(d)):
                return False
        return True

    def in_tgt(x):
        if not tgt_on:
            return False
        inb = all(tgt_lo[i] <= x[i] <= tgt_hi[i] for i in range(d))
        return inb != tgt_neg

    if not region.contains(source) or not in_guard(source):
        raise ValueError(f"source {source} outside the explorable region")

    visited = {source: 0}
    order = [source]
    edges = set()
    hit = False
    hit_dist = -1
    reason = REASON_NONE
    radius_flag = False
    intrinsic_flag = False
    if in_tgt(source):
        hit = True
        hit_dist = 0
    if not (hit and stop_at_target):
        frontier = [source]
        cur_d = 0
        while frontier:
            if cur_d >= max_intrinsic:
                intrinsic_flag = True
                break
            frontier.sort(key=pack_point)
            nxt = []
            aborted = False
            for u in frontier:
                for off in offsets:
                    v = tuple(int(u[i] + off[i]) for i in range(d))
                    if model.is_torus:
                        v = project_to_torus(model, v)
                    in_user = region.contains(v)
                    if not (in_user and in_guard(v)):
                        if in_user:
                            radius_flag = True
                        continue
                    if field.uniform(model, (u, v)) >= p:
                        continue
                    if v in visited:
                        if record_edges:
                            edges.add(Edge(u, v))
                        continue
                    if len(visited) >= max_volume:
                        reason = REASON_VOLUME
                        aborted = True
                        break
                    nd = cur_d + 1
                    visited[v] = nd
                    order.append(v)
                    nxt.append(v)
                    if record_edges:
                        edges.add(Edge(u, v))
                    took = in_tgt(v) or (tdist > 0 and nd == tdist)
                    if took and not hit:
                        hit = True
                        hit_dist = nd
                        if stop_at_target:
                            aborted = True
                            break
                if aborted:
                    break
            if aborted:
                break
            frontier = nxt
            cur_d += 1
        if reason == REASON_NONE and not (hit and stop_at_target):
            if radius_flag:
                reason = REASON_RADIUS
            elif intrinsic_flag:
                reason = REASON_INTRINSIC

    keys = np.array([pack_point(v) for v in order], dtype=np.uint64)
    dists = np.array([visited[v] for v in order], dtype=np.int64)
    if record_edges and edges:
        flat = np.array(
            [k for e in edges
             for k in (pack_point(e.a), pack_point(e.b))],
            dtype=np.uint64)
    else:
        flat = np.empty(0, dtype=np.uint64)
    return _canonical_cluster(model, source, p, keys, dists, flat,
                              hit, hit_dist, reason, record_edges)


def reaches(model, field, x, y, *, p=None, region=ALL, caps=None):
    """True iff x and y lie in one open cluster (within region and caps)."""
    x = canonical_point(model, x)
    y = canonical_point(model, y)
    cl = explore_cluster(model, field, x, p=p, region=region, caps=caps,
                         target_box=(y, y), stop_at_target=True)
    return cl.hit
