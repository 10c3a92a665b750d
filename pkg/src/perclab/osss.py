"""Exact revealment inequalities for adaptive queries of product measures.

For a product measure mu on {0,1}^n, an increasing function f, and a forest
of adaptive query procedures that determines g, the revealment bound

    sum_i delta_i(forest, mu) * Cov_mu[f, bit_i]  >=  (1/2) |CoVr_mu[f, g]|

relates how cheaply g can be computed to how strongly f correlates with
single bits.  Here delta_i is the probability that at least one procedure
ever queries bit i, and CoVr is the coupled variation

    CoVr_mu[f, g] = E|f(w1) - g(w2)| - E|f(w) - g(w)|

over independent samples w1, w2 (equal to 2 Cov[f, g] when f and g are
indicators).  Everything in this module is evaluated exactly by enumerating
all 2^n configurations; a sampled estimator is included for illustration
only.  The constructive "forest determines g" check raises with a witness
pair of configurations when it fails.
"""

import math
from dataclasses import dataclass, field

import numpy as np

MAX_BITS = 20


@dataclass(frozen=True)
class ProductMeasure:
    """Independent bits; bit i is 1 with probability params[i].

    Two-layer measures interleave a percolation layer (bits 0..n-1) and a
    field layer (bits n..2n-1), tracked by layer_split = n.
    """

    params: tuple
    layer_split: object = None

    def __post_init__(self):
        params = tuple(float(q) for q in self.params)
        if not params:
            raise ValueError("measure needs at least one bit")
        if len(params) > MAX_BITS:
            raise ValueError("at most %d bits (got %d)" % (MAX_BITS,
                                                           len(params)))
        if any(not 0.0 <= q <= 1.0 for q in params):
            raise ValueError("bit probabilities must lie in [0, 1]")
        object.__setattr__(self, "params", params)
        if self.layer_split is not None:
            split = int(self.layer_split)
            if 2 * split != len(params):
                raise ValueError("layer_split must halve the bit count")
            object.__setattr__(self, "layer_split", split)

    @classmethod
    def two_layer(cls, n_edges, p, intensity):
        """Percolation bits at density p plus an independent field layer
        whose bits are 1 with probability 1 - exp(-intensity)."""
        green = -math.expm1(-float(intensity))
        return cls((float(p),) * n_edges + (green,) * n_edges,
                   layer_split=n_edges)

    @property
    def n_bits(self):
        return len(self.params)

    @property
    def n_configs(self):
        return 1 << len(self.params)

    def perc_index(self, e):
        if self.layer_split is None:
            raise ValueError("not a two-layer measure")
        if not 0 <= e < self.layer_split:
            raise ValueError("edge index out of range")
        return e

    def field_index(self, e):
        if self.layer_split is None:
            raise ValueError("not a two-layer measure")
        if not 0 <= e < self.layer_split:
            raise ValueError("edge index out of range")
        return self.layer_split + e

    def weights(self):
        ids = np.arange(self.n_configs, dtype=np.uint64)
        w = np.ones(self.n_configs)
        for i, q in enumerate(self.params):
            bit = ((ids >> np.uint64(i)) & np.uint64(1)) != 0
            w *= np.where(bit, q, 1.0 - q)
        return w

    def sample(self, rng, n_samples):
        q = np.asarray(self.params)
        bits = rng.random((n_samples, self.n_bits)) < q
        ids = np.zeros(n_samples, dtype=np.int64)
        for i in range(self.n_bits):
            ids |= bits[:, i].astype(np.int64) << i
        return ids


@dataclass(frozen=True)
class DecisionTree:
    """Adaptive query procedure: a fixed first bit, then a successor rule
    over the (index, answer) history, halting when `halt` says so.

    Re-querying a bit is a contract violation and raises at run time.
    """

    name: str
    first: int
    successor: object
    halt: object


@dataclass(frozen=True)
class DecisionForest:
    trees: tuple

    def __post_init__(self):
        trees = tuple(self.trees)
        if not trees:
            raise ValueError("a forest needs at least one tree")
        if any(not isinstance(t, DecisionTree) for t in trees):
            raise TypeError("forest members must be DecisionTrees")
        object.__setattr__(self, "trees", trees)


def run_tree(tree, n_bits, config):
    """Execute one procedure on a configuration.

    Returns (queried bitmask, history tuple).
    """
    mask = 0
    history = []
    idx = int(tree.first)
    for _ in range(n_bits):
        if not 0 <= idx < n_bits:
            raise ValueError("tree %r queried bit %d outside 0..%d"
                             % (tree.name, idx, n_bits - 1))
        if (mask >> idx) & 1:
            raise RuntimeError("tree %r re-queried bit %d" % (tree.name, idx))
        bit = (config >> idx) & 1
        mask |= 1 << idx
        history.append((idx, bit))
        h = tuple(history)
        if tree.halt(h):
            return mask, h
        idx = int(tree.successor(h))
    raise RuntimeError("tree %r queried every bit without halting"
                       % (tree.name,))


def run_forest(forest, n_bits, config):
    """Union bitmask of everything any tree in the forest queries."""
    mask = 0
    for t in forest.trees:
        mask |= run_tree(t, n_bits, config)[0]
    return mask


def fixed_order_tree(indices, name=None, halt_when=None):
    """Query a fixed sequence of distinct bits, with an optional early halt."""
    order = tuple(int(i) for i in indices)
    if len(set(order)) != len(order) or not order:
        raise ValueError("indices must be nonempty and distinct")

    def halt(history):
        if halt_when is not None and halt_when(history):
            return True
        return len(history) >= len(order)

    def successor(history):
        return order[len(history)]

    return DecisionTree(name or "fixed%r" % (order,), order[0],
                        successor, halt)


def evaluation_tree(table, n_bits, order=None, name=None):
    """The canonical procedure computing a function: query bits in a fixed
    priority order, halting as soon as the revealed bits pin the value on
    every completion.  Computes the function by construction."""
    table = np.asarray(table)
    if table.shape != (1 << n_bits,):
        raise ValueError("table must have 2^n_bits entries")
    if n_bits > 12:
        raise ValueError("evaluation trees enumerate completions; "
                         "limited to 12 bits")
    order = tuple(range(n_bits)) if order is None else \
        tuple(int(i) for i in order)
    if sorted(order) != list(range(n_bits)):
        raise ValueError("order must be a permutation of the bits")
    cache = {}

    def _settled(history):
        mask = 0
        val = 0
        for i, b in history:
            mask |= 1 << i
            val |= b << i
        key = (mask, val)
        hit = cache.get(key)
        if hit is not None:
            return hit
        free = [i for i in range(n_bits) if not (mask >> i) & 1]
        ref = table[val]
        ok = True
        for sub in range(1, 1 << len(free)):
            cfg = val
            for j, i in enumerate(free):
                if (sub >> j) & 1:
                    cfg |= 1 << i
            if table[cfg] != ref:
                ok = False
                break
        cache[key] = ok
        return ok

    def successor(history):
        queried = {i for i, _ in history}
        for i in order:
            if i not in queried:
                return i
        raise RuntimeError("no bits left to query")

    return DecisionTree(name or "eval", order[0], successor, _settled)


# ---------------------------------------------------------------------------
# exact functionals


def table_from_callable(fn, n_bits):
    return np.array([float(fn(cfg)) for cfg in range(1 << n_bits)])


def _as_table(f, n_bits):
    if callable(f):
        return table_from_callable(f, n_bits)
    t = np.asarray(f, dtype=np.float64)
    if t.shape != (1 << n_bits,):
        raise ValueError("table must have 2^n_bits entries")
    return t


def forest_masks(forest, n_bits):
    """Queried-union bitmask for every configuration."""
    return np.array([run_forest(forest, n_bits, cfg)
                     for cfg in range(1 << n_bits)], dtype=np.int64)


def revealment(forest, measure):
    """Exact probability, per bit, that the forest ever queries it."""
    masks = forest_masks(forest, measure.n_bits)
    return _revealment_from_masks(masks, measure.weights(), measure.n_bits)


def _revealment_from_masks(masks, w, n_bits):
    return np.array([float(w[(masks >> i) & 1 == 1].sum())
                     for i in range(n_bits)])


def revealment_sampled(forest, measure, n_samples, seed=0):
    """Monte Carlo revealment estimate -- demonstration only, every
    verification in this module uses the exact form."""
    rng = np.random.default_rng(seed)
    ids = measure.sample(rng, n_samples)
    delta = np.zeros(measure.n_bits)
    for cfg in ids:
        m = run_forest(forest, measure.n_bits, int(cfg))
        for i in range(measure.n_bits):
            if (m >> i) & 1:
                delta[i] += 1.0
    return delta / n_samples


def expectation(measure, f):
    w = measure.weights()
    return float((w * _as_table(f, measure.n_bits)).sum())


def covariance(measure, f, g):
    w = measure.weights()
    ft = _as_table(f, measure.n_bits)
    gt = _as_table(g, measure.n_bits)
    return float((w * ft * gt).sum() - (w * ft).sum() * (w * gt).sum())


def bit_table(i, n_bits):
    ids = np.arange(1 << n_bits, dtype=np.uint64)
    return (((ids >> np.uint64(i)) & np.uint64(1)) != 0).astype(np.float64)


def coupled_variation(measure, f, g):
    """CoVr[f, g]: literal two-sample form, exact.

    Collapses each function to its value distribution first, so the double
    sum runs over distinct values rather than configurations.
    """
    w = measure.weights()
    ft = _as_table(f, measure.n_bits)
    gt = _as_table(g, measure.n_bits)
    fv, fw = _value_dist(ft, w)
    gv, gw = _value_dist(gt, w)
    cross = float((fw[:, None] * gw[None, :]
                   * np.abs(fv[:, None] - gv[None, :])).sum())
    same = float((w * np.abs(ft - gt)).sum())
    return cross - same


def _value_dist(vals, w):
    uv, inv = np.unique(vals, return_inverse=True)
    return uv, np.bincount(inv, weights=w, minlength=uv.size)


# ---------------------------------------------------------------------------
# the inequality


@dataclass(frozen=True)
class OSSSReport:
    lhs: float
    rhs: float
    holds: bool
    revealments: tuple
    bit_covariances: tuple
    coupled_variation: float
    tolerance: float

    @property
    def slack(self):
        return self.lhs - self.rhs


def verify_osss(measure, f, g, forest, *, tol=1e-12, check_computes=True):
    """Exact evaluation of the revealment inequality on one instance.

    f must be increasing for the bound to be meaningful (the caller's
    responsibility); the forest must determine g, which is checked
    constructively: two positive-weight configurations that agree on every
    queried bit must give g the same value, else a ValueError names them.
    """
    n = measure.n_bits
    ft = _as_table(f, n)
    gt = _as_table(g, n)
    w = measure.weights()
    masks = forest_masks(forest, n)
    if check_computes:
        atoms = {}
        for cfg in range(1 << n):
            if w[cfg] == 0.0:
                continue
            key = (int(masks[cfg]), cfg & int(masks[cfg]))
            rep = atoms.get(key)
            if rep is None:
                atoms[key] = cfg
            elif gt[rep] != gt[cfg]:
                raise ValueError(
                    "forest does not determine g: configurations %d and %d "
                    "agree on every queried bit (mask %d) but g is %g vs %g"
                    % (rep, cfg, masks[cfg], gt[rep], gt[cfg]))
    delta = _revealment_from_masks(masks, w, n)
    covs = tuple(covariance(measure, ft, bit_table(i, n)) for i in range(n))
    lhs = float(np.dot(delta, covs))
    cvr = coupled_variation(measure, ft, gt)
    rhs = 0.5 * abs(cvr)
    return OSSSReport(lhs, rhs, lhs >= rhs - tol, tuple(delta), covs,
                      cvr, tol)


# ---------------------------------------------------------------------------
# two-layer instances: percolation plus an independent edge field


def ghost_crossing_instance(graph, source, p, intensity, k=1):
    """The canonical two-layer instance on an embedded finite graph.

    f is 1(at least k leftward crossing edges), a function of the
    percolation layer alone; g is 1(some crossing edge carries the field);
    the forest probes each edge: its field bit first (halt if absent), the
    edge's own status next (halt if closed), then the cluster of its left
    endpoint strictly left of its right endpoint.  Returns
    (measure, f_table, g_table, forest).
    """
    from . import oracle as orc

    E = graph.n_edges
    if E > 10:
        raise ValueError("two-layer instances are limited to 10 edges")
    source = tuple(int(c) for c in source)
    measure = ProductMeasure.two_layer(E, p, intensity)
    pmask = orc.crossing_edge_masks(graph, source)
    n_bits = 2 * E
    ids = np.arange(1 << n_bits, dtype=np.int64)
    perc = ids & ((1 << E) - 1)
    ghost = ids >> E
    pm = pmask[perc]
    f_table = (np.bitwise_count(pm.astype(np.uint64)) >= k).astype(float)
    g_table = ((pm & ghost) != 0).astype(float)
    forest = DecisionForest(tuple(_probe_tree(graph, e, measure)
                                  for e in range(E)))
    return measure, f_table, g_table, forest


def _probe_tree(graph, e, measure):
    edge = graph.edges[e]
    a, b = edge.a, edge.b
    horizontal = a[0] < b[0]
    half_set = {v for v in graph.vertices if v[0] < b[0]}
    inner = [i for i, ed in enumerate(graph.edges)
             if ed.a in half_set and ed.b in half_set]
    field_idx = measure.field_index(e)

    def _next(history):
        bits = dict(history)
        if bits[field_idx] == 0 or not horizontal:
            return None
        own = bits.get(e)
        if own is None:
            return e
        if own == 0:
            return None
        cluster = {a}
        grew = True
        while grew:
            grew = False
            for i in inner:
                if bits.get(i) == 1:
                    ea, eb = graph.edges[i].a, graph.edges[i].b
                    if (ea in cluster) != (eb in cluster):
                        cluster.add(eb if ea in cluster else ea)
                        grew = True
        for i in inner:
            if i not in bits:
                ea, eb = graph.edges[i].a, graph.edges[i].b
                if ea in cluster or eb in cluster:
                    return i
        return None

    return DecisionTree("probe-%d" % e, field_idx,
                        lambda h: _next(h), lambda h: _next(h) is None)


# ---------------------------------------------------------------------------
# randomized instances for batteries


@dataclass(frozen=True)
class OSSSInstance:
    kind: str
    measure: ProductMeasure
    f_table: np.ndarray = field(repr=False)
    g_table: np.ndarray = field(repr=False)
    forest: DecisionForest = field(repr=False)
    description: str = ""


def random_monotone_table(rng, n_bits, max_clauses=3):
    """Indicator of a random monotone disjunction of bit conjunctions."""
    n_clauses = int(rng.integers(1, max_clauses + 1))
    clauses = [int(rng.integers(1, 1 << n_bits)) for _ in range(n_clauses)]
    ids = np.arange(1 << n_bits, dtype=np.int64)
    t = np.zeros(1 << n_bits, dtype=bool)
    for c in clauses:
        t |= (ids & c) == c
    return t.astype(float)


def random_instance(rng):
    """One randomized exact instance: either a plain product measure with a
    monotone g computed by its evaluation tree, or a two-layer crossing-edge
    instance on a small embedded graph."""
    from . import oracle as orc

    if rng.random() < 0.35:
        pick = rng.random()
        if pick < 0.4:
            graph = orc.path_graph(int(rng.integers(1, 4)))
        elif pick < 0.7:
            from .lattice import Intersection, ModelSpec, Slab
            graph = orc.from_region(ModelSpec(2, "lattice"),
                                    Intersection(Slab(0, 0, 1), Slab(1, 0, 1)))
        else:
            from .lattice import ModelSpec, Slab
            graph = orc.from_region(ModelSpec(1, "lattice", edge_range=2),
                                    Slab(0, 0, 2))
        p = float(rng.uniform(0.1, 0.9))
        h = float(rng.uniform(0.05, 2.0))
        k = int(rng.integers(1, 3))
        measure, ft, gt, forest = ghost_crossing_instance(
            graph, (0,) * graph.dimension, p, h, k=k)
        return OSSSInstance(
            "two-layer", measure, ft, gt, forest,
            "crossing edges on %r, p=%.3f, intensity=%.3f, k=%d"
            % (graph, p, h, k))
    n = int(rng.integers(2, 9))
    params = tuple(float(q) for q in rng.uniform(0.05, 0.95, n))
    measure = ProductMeasure(params)
    if rng.random() < 0.1:
        gt = np.full(1 << n, float(rng.integers(0, 2)))
    else:
        gt = random_monotone_table(rng, n)
    order = tuple(int(i) for i in rng.permutation(n))
    trees = [evaluation_tree(gt, n, order, name="eval-g")]
    if rng.random() < 0.3:
        extra = tuple(int(i) for i in rng.permutation(n))
        trees.append(evaluation_tree(gt, n, extra, name="eval-g-2"))
    forest = DecisionForest(tuple(trees))
    roll = rng.random()
    if roll < 0.15:
        ft = np.full(1 << n, float(rng.integers(0, 2)))
    elif roll < 0.35:
        ft = gt.copy()
    else:
        ft = random_monotone_table(rng, n)
    return OSSSInstance("plain", measure, ft, gt, forest,
                        "monotone g on %d bits" % n)
