"""Exact reference answers on small graphs by complete enumeration.

Ground truth for the Monte Carlo machinery: every one of the 2^|E| edge
configurations of a finite graph is visited in vectorized chunks, weighted
by p^(open) (1-p)^(closed), and reduced.  Per-open-count integer tallies
turn any event probability (or integer-valued observable mean) into an
exact polynomial in the edge density, evaluated at arbitrary p without
re-enumeration and printable with integer coefficients.

Graphs are capped at 25 edges and 64 vertices so that enumeration stays
tractable and cluster membership fits one machine word per configuration.
"""

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .lattice import (ALL, Edge, ModelSpec, canonical_point, incident_edges,
                      neighbor_offsets)

MAX_EDGES = 25
MAX_VERTICES = 64
_CHUNK = 1 << 20
_UNBOUNDED_CUTOFF = 1 << 40


class FiniteGraph:
    """An explicit vertex/edge list with lattice-point vertices.

    Vertices are coordinate tuples (abstract graphs embed on a line).
    The edge order is part of the object's identity: configuration i has
    edge e open iff bit e of i is set.
    """

    def __init__(self, vertices, edges, model=None):
        vs = [tuple(int(c) for c in v) for v in vertices]
        if len(set(vs)) != len(vs):
            raise ValueError("duplicate vertices")
        if not vs:
            raise ValueError("graph needs at least one vertex")
        d = len(vs[0])
        if any(len(v) != d for v in vs):
            raise ValueError("mixed vertex dimensions")
        if len(vs) > MAX_VERTICES:
            raise ValueError("at most %d vertices (got %d)"
                             % (MAX_VERTICES, len(vs)))
        es = list(edges)
        if any(not isinstance(e, Edge) for e in es):
            es = [e if isinstance(e, Edge) else Edge(*e) for e in es]
        if len(set(es)) != len(es):
            raise ValueError("duplicate edges")
        if len(es) > MAX_EDGES:
            raise ValueError("at most %d edges (got %d)" % (MAX_EDGES, len(es)))
        vset = set(vs)
        for e in es:
            if e.a not in vset or e.b not in vset:
                raise ValueError("edge %r leaves the vertex set" % (e,))
        self.vertices = tuple(sorted(vs))
        self.edges = tuple(sorted(es, key=lambda e: (e.a, e.b)))
        self.model = model
        self._vindex = {v: i for i, v in enumerate(self.vertices)}
        self._eindex = {e: i for i, e in enumerate(self.edges)}
        self._pairs = np.array(
            [(self._vindex[e.a], self._vindex[e.b]) for e in self.edges],
            dtype=np.int64).reshape(len(self.edges), 2)

    @property
    def dimension(self):
        return len(self.vertices[0])

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_configs(self):
        return 1 << len(self.edges)

    def vertex_index(self, v):
        v = tuple(int(c) for c in v)
        if v not in self._vindex:
            raise ValueError("vertex %r not in graph" % (v,))
        return self._vindex[v]

    def edge_index(self, e):
        if not isinstance(e, Edge):
            e = Edge(*e)
        if e not in self._eindex:
            raise ValueError("edge %r not in graph" % (e,))
        return self._eindex[e]

    def __repr__(self):
        return "FiniteGraph(%d vertices, %d edges)" % (self.n_vertices,
                                                       self.n_edges)


def from_region(model, region=ALL):
    """The subgraph a capped exploration would see: vertices inside the
    region, bonds with both endpoints inside.

    Lattice models need a bounded region; torus models enumerate canonical
    window representatives (the whole torus under ALL).
    """
    d = model.dimension
    if model.is_torus:
        f = model.period // 2
        axis = range(-f, model.period - f)
        verts = [v for v in itertools.product(axis, repeat=d)
                 if region.contains(v)]
    else:
        b = region.bounds(d)
        if b is None:
            raise ValueError("custom regions cannot be enumerated; pass a "
                             "box-shaped region")
        lo, hi = b
        if (np.abs(lo) >= _UNBOUNDED_CUTOFF).any() or \
           (np.abs(hi) >= _UNBOUNDED_CUTOFF).any():
            raise ValueError("region is unbounded; a finite graph needs "
                             "finite bounds on every axis")
        verts = [v for v in itertools.product(
            *(range(int(lo[i]), int(hi[i]) + 1) for i in range(d)))
            if region.contains(v)]
    vset = set(verts)
    edges = set()
    if model.is_torus:
        for v in verts:
            for e in incident_edges(model, v):
                if e.a in vset and e.b in vset:
                    edges.add(e)
    else:
        offs = neighbor_offsets(d, model.edge_range)
        for v in verts:
            for row in offs:
                w = tuple(int(c) + int(dc) for c, dc in zip(v, row))
                if w in vset:
                    edges.add(Edge(v, w))
    return FiniteGraph(verts, sorted(edges, key=lambda e: (e.a, e.b)), model)


def single_edge_graph():
    return FiniteGraph([(0,), (1,)], [Edge((0,), (1,))],
                       ModelSpec(1, "lattice"))


def path_graph(n_edges, dimension=1):
    """n_edges unit bonds along axis 0, starting at the origin."""
    if n_edges < 1:
        raise ValueError("need at least one edge")
    pad = (0,) * (dimension - 1)
    verts = [(i,) + pad for i in range(n_edges + 1)]
    edges = [Edge(verts[i], verts[i + 1]) for i in range(n_edges)]
    return FiniteGraph(verts, edges, ModelSpec(dimension, "lattice"))


def box_graph(dimension, radius, edge_range=1):
    from .lattice import Box
    model = ModelSpec(dimension, "lattice", edge_range=edge_range)
    return from_region(model, Box(radius))


def torus_graph(dimension, period, edge_range=1):
    model = ModelSpec(dimension, "torus", period=period,
                      edge_range=edge_range)
    return from_region(model)


# ---------------------------------------------------------------------------
# enumeration engine


def _iter_ids(n_cfg):
    for lo in range(0, n_cfg, _CHUNK):
        yield np.arange(lo, min(lo + _CHUNK, n_cfg), dtype=np.uint64)


def open_column(ids, e):
    """Boolean openness of edge e across a configuration chunk."""
    return ((ids >> np.uint64(e)) & np.uint64(1)) != 0


def config_weights(ids, n_edges, p):
    """Product-measure weight of each configuration."""
    k = np.bitwise_count(ids).astype(np.float64)
    return np.power(p, k) * np.power(1.0 - p, n_edges - k)


def reach_bitsets(graph, ids, source, allowed=None):
    """Per-configuration bitset of vertices joined to source by open paths.

    `allowed`, an int bitmask over vertex indices, restricts the walk to a
    vertex subset (edges with either endpoint outside it are ignored); a
    source outside the subset reaches nothing.
    """
    src = graph.vertex_index(source)
    if allowed is not None and not (allowed >> src) & 1:
        return np.zeros(ids.shape, dtype=np.uint64)
    reach = np.full(ids.shape, np.uint64(1) << np.uint64(src),
                    dtype=np.uint64)
    one = np.uint64(1)
    active = []
    for e in range(graph.n_edges):
        u, v = int(graph._pairs[e, 0]), int(graph._pairs[e, 1])
        if allowed is None or ((allowed >> u) & 1 and (allowed >> v) & 1):
            active.append((open_column(ids, e), np.uint64(u), np.uint64(v)))
    changed = True
    while changed:
        changed = False
        for op, u, v in active:
            has_u = ((reach >> u) & one) != 0
            has_v = ((reach >> v) & one) != 0
            grow = op & (has_u ^ has_v)
            if grow.any():
                reach[grow & ~has_v] |= one << v
                reach[grow & ~has_u] |= one << u
                changed = True
    return reach


@dataclass(frozen=True)
class EventSpec:
    """A named configuration predicate with a declared monotonicity.

    evaluate(graph, ids) returns one boolean per configuration;
    `monotone` is the caller's declaration that adding open edges never
    destroys the event (checked by tests, trusted here).
    """

    name: str
    evaluate: object
    monotone: bool = False


def connection_event(x, y):
    x = tuple(int(c) for c in x)
    y = tuple(int(c) for c in y)

    def evaluate(graph, ids):
        reach = reach_bitsets(graph, ids, x)
        return ((reach >> np.uint64(graph.vertex_index(y))) & np.uint64(1)) != 0

    return EventSpec("connect%r-%r" % (x, y), evaluate, monotone=True)


def cluster_at_least_event(source, k):
    source = tuple(int(c) for c in source)
    k = int(k)

    def evaluate(graph, ids):
        reach = reach_bitsets(graph, ids, source)
        return np.bitwise_count(reach) >= k

    return EventSpec("cluster%r>=%d" % (source, k), evaluate, monotone=True)


def edge_open_event(edge):
    if not isinstance(edge, Edge):
        edge = Edge(*edge)

    def evaluate(graph, ids):
        return open_column(ids, graph.edge_index(edge))

    return EventSpec("open%r" % (edge,), evaluate, monotone=True)


def cluster_size_value(source):
    """Integer observable |cluster(source)| for polynomial tallies."""
    source = tuple(int(c) for c in source)

    def evaluate(graph, ids):
        return np.bitwise_count(reach_bitsets(graph, ids, source))

    return evaluate


def count_polynomial(graph, event):
    """Per-open-count tallies of an event or integer observable.

    Returns ints c[k] = sum over configurations with k open edges of the
    event indicator (or observable value), so that the p-expectation is
    sum_k c[k] p^k (1-p)^(E-k), exactly.
    """
    evaluate = event.evaluate if isinstance(event, EventSpec) else event
    E = graph.n_edges
    counts = [0] * (E + 1)
    for ids in _iter_ids(graph.n_configs):
        vals = np.asarray(evaluate(graph, ids))
        k = np.bitwise_count(ids).astype(np.int64)
        if vals.dtype == bool:
            b = np.bincount(k[vals], minlength=E + 1)
        else:
            b = np.bincount(k, weights=vals.astype(np.float64),
                            minlength=E + 1)
        for i in range(E + 1):
            counts[i] += int(round(float(b[i])))
    return counts


def evaluate_counts(counts, n_edges, p):
    p = float(p)
    q = 1.0 - p
    return float(sum(c * p ** k * q ** (n_edges - k)
                     for k, c in enumerate(counts)))


def standard_coefficients(counts):
    """Integer coefficients of the same polynomial in powers of p."""
    E = len(counts) - 1
    out = [0] * (E + 1)
    for k, c in enumerate(counts):
        if c == 0:
            continue
        for j in range(E - k + 1):
            out[k + j] += c * math.comb(E - k, j) * (-1) ** j
    return out


def polynomial_string(coeffs, var="p"):
    terms = []
    for j, c in enumerate(coeffs):
        if c == 0:
            continue
        if j == 0:
            body = str(abs(c))
        else:
            mag = "" if abs(c) == 1 else "%d*" % abs(c)
            body = "%s%s" % (mag, var if j == 1 else "%s^%d" % (var, j))
        sign = "-" if c < 0 else "+"
        terms.append((sign, body))
    if not terms:
        return "0"
    first_sign, first_body = terms[0]
    s = ("-" if first_sign == "-" else "") + first_body
    for sign, body in terms[1:]:
        s += " %s %s" % (sign, body)
    return s


def exact_probability(graph, p, event):
    return evaluate_counts(count_polynomial(graph, event), graph.n_edges, p)


def exact_two_point(graph, p, x, y):
    return exact_probability(graph, p, connection_event(x, y))


def exact_cluster_size_mean(graph, p, source):
    return evaluate_counts(count_polynomial(graph, cluster_size_value(source)),
                           graph.n_edges, p)


# ---------------------------------------------------------------------------
# derivative identity


@dataclass(frozen=True)
class RussoCheck:
    finite_difference: float
    covariance_form: float
    per_edge: tuple

    @property
    def gap(self):
        return abs(self.finite_difference - self.covariance_form)


def russo_check(graph, p, event, h_step=1e-5):
    """Two independent routes to d/dp P_p(event).

    The left route is a centered finite difference of the exact polynomial;
    the right is the per-edge covariance sum divided by p(1-p).  Both are
    exact up to the O(h^2) difference truncation, so their gap measures
    nothing but the engine's internal consistency.
    """
    p = float(p)
    h = float(h_step)
    if not 0.0 < p < 1.0:
        raise ValueError("the derivative identity needs 0 < p < 1")
    if h <= 0.0 or p - h <= 0.0 or p + h >= 1.0:
        raise ValueError("h_step must satisfy 0 < p-h and p+h < 1")
    if not isinstance(event, EventSpec):
        raise TypeError("russo_check takes an EventSpec")
    counts = count_polynomial(graph, event)
    E = graph.n_edges
    fd = (evaluate_counts(counts, E, p + h)
          - evaluate_counts(counts, E, p - h)) / (2.0 * h)
    prob = evaluate_counts(counts, E, p)
    joint = np.zeros(E)
    for ids in _iter_ids(graph.n_configs):
        w = config_weights(ids, E, p)
        ind = np.asarray(event.evaluate(graph, ids))
        wi = w * ind
        for e in range(E):
            joint[e] += float(wi[open_column(ids, e)].sum())
    per_edge = tuple((joint[e] - p * prob) / (p * (1.0 - p))
                     for e in range(E))
    return RussoCheck(fd, float(sum(per_edge)), per_edge)


# ---------------------------------------------------------------------------
# exact crossing-bond counts


def _crossing_edges(graph, x0):
    """Edges (a, b) with a0 < b0 and b0 > x0, grouped by the far plane b0."""
    groups = defaultdict(list)
    for e, edge in enumerate(graph.edges):
        a0, b0 = edge.a[0], edge.b[0]
        if a0 < b0 and b0 > x0:
            groups[b0].append((e, graph.vertex_index(edge.a), a0))
    return dict(sorted(groups.items()))


def _halfspace_mask(graph, c):
    m = 0
    for i, v in enumerate(graph.vertices):
        if v[0] < c:
            m |= 1 << i
    return m


@dataclass(frozen=True)
class CrossingSummary:
    """Exact leftward-restricted crossing-edge statistics.

    plane_mean[n] is the expected number of open edges that cross the plane
    (axis 0) at offset n from the source while their near endpoint is joined
    to the source strictly left of their far endpoint; total_law is the
    distribution of the total number of such edges over all planes.
    """

    plane_mean: np.ndarray
    total_law: dict
    mean_total: float

    def total_tail(self, k):
        return float(sum(v for kk, v in self.total_law.items() if kk >= k))


def exact_crossing_summary(graph, p, source, n_max=None):
    if graph.model is not None and graph.model.is_torus:
        raise ValueError("crossing statistics need a lattice embedding")
    source = tuple(int(c) for c in source)
    graph.vertex_index(source)
    x0 = source[0]
    groups = _crossing_edges(graph, x0)
    horizon = max((c - x0 for c in groups), default=0)
    n_planes = horizon if n_max is None else min(int(n_max), horizon)
    plane_mean = np.zeros(max(n_planes, 0) + 1)
    law = defaultdict(float)
    mean_total = 0.0
    E = graph.n_edges
    for ids in _iter_ids(graph.n_configs):
        w = config_weights(ids, E, p)
        totals = np.zeros(ids.shape, dtype=np.int64)
        for c, members in groups.items():
            reach = reach_bitsets(graph, ids, source,
                                  allowed=_halfspace_mask(graph, c))
            for e, a_idx, a0 in members:
                pio = open_column(ids, e) & (
                    ((reach >> np.uint64(a_idx)) & np.uint64(1)) != 0)
                totals += pio
                ws = float(w[pio].sum())
                if ws:
                    for n in range(max(a0 - x0 + 1, 1),
                                   min(c - x0, n_planes) + 1):
                        plane_mean[n] += ws
        mean_total += float((w * totals).sum())
        tl = np.bincount(totals, weights=w)
        for k, v in enumerate(tl):
            if v:
                law[k] += float(v)
    return CrossingSummary(plane_mean, dict(sorted(law.items())), mean_total)


def crossing_edge_masks(graph, source):
    """Per-configuration bitmask of which edges are crossing bonds.

    Dense over all configurations, so the graph is capped at 16 edges;
    meant for building exact two-layer examples.
    """
    if graph.n_edges > 16:
        raise ValueError("dense crossing-bond masks are limited to 16 edges")
    source = tuple(int(c) for c in source)
    x0 = source[0]
    ids = np.arange(graph.n_configs, dtype=np.uint64)
    masks = np.zeros(graph.n_configs, dtype=np.int64)
    for c, members in _crossing_edges(graph, x0).items():
        reach = reach_bitsets(graph, ids, source,
                              allowed=_halfspace_mask(graph, c))
        for e, a_idx, _a0 in members:
            pio = open_column(ids, e) & (
                ((reach >> np.uint64(a_idx)) & np.uint64(1)) != 0)
            masks[pio] |= 1 << e
    return masks
