"""Lattice geometry: models, edges, regions, norms, coordinate packing.

Points are plain tuples of ints.  A model is either the infinite lattice Z^d
or a d-dimensional torus of period r; bonds join vertices at l1-distance at
most `edge_range` (L).  Torus coordinates are always reduced to the canonical
window [-floor(r/2), r - floor(r/2)).

Coordinates are packed into a single uint64 with 64//d bits per axis and an
excess-2^(B-1) bias, axis 0 in the high bits, so that unsigned key order
equals lexicographic coordinate order.  Both kernel lanes and the pure-python
reference here must agree bit for bit (tested).
"""

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

Point = tuple  # tuple of ints, length d

_UNBOUNDED = 1 << 62  # sentinel for region bounds


def norms(x):
    """Return (l1, linf, bracket) for a point, where bracket = max(linf, 1)."""
    l1 = 0
    linf = 0
    for c in x:
        a = abs(int(c))
        l1 += a
        if a > linf:
            linf = a
    return l1, linf, max(linf, 1)


def jbracket(x):
    """max(sup-norm, 1); the distance weight used by decay estimates."""
    return norms(x)[2]


@dataclass(frozen=True)
class ModelSpec:
    """Percolation model: dimension, geometry, bond range, edge density.

    geometry is "lattice" (infinite Z^d) or "torus" (period `period`, which
    must exceed 2*edge_range so that vertex pairs determine bonds uniquely).
    `p` may be left None and supplied per call by estimators.
    """

    dimension: int
    geometry: str = "lattice"
    period: int = 0
    edge_range: int = 1
    p: float = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.edge_range < 1:
            raise ValueError("edge_range must be >= 1")
        if self.geometry == "lattice":
            if self.period:
                raise ValueError("period only applies to torus geometry")
        elif self.geometry == "torus":
            if self.period <= 2 * self.edge_range:
                raise ValueError(
                    "torus period must exceed 2*edge_range, got r=%d L=%d"
                    % (self.period, self.edge_range)
                )
        else:
            raise ValueError("geometry must be 'lattice' or 'torus'")
        if self.p is not None and not (0.0 <= self.p <= 1.0):
            raise ValueError("p must lie in [0, 1]")

    @property
    def is_torus(self):
        return self.geometry == "torus"

    @property
    def n_vertices(self):
        if not self.is_torus:
            raise ValueError("n_vertices is only defined for tori")
        return self.period ** self.dimension

    def with_p(self, p):
        return replace(self, p=p)

    def require_p(self, p=None):
        q = self.p if p is None else p
        if q is None:
            raise ValueError("no percolation parameter p given")
        if not (0.0 <= q <= 1.0):
            raise ValueError("p must lie in [0, 1]")
        return float(q)


def project_to_torus(model, x):
    """Reduce a point to the canonical torus window [-floor(r/2), r-floor(r/2)).

    Idempotent; errors on non-torus models.
    """
    if not model.is_torus:
        raise ValueError("project_to_torus requires a torus model")
    r = model.period
    f = r // 2
    return tuple((int(c) + f) % r - f for c in x)


def canonical_point(model, x):
    x = tuple(int(c) for c in x)
    if len(x) != model.dimension:
        raise ValueError("point has dimension %d, model has %d" % (len(x), model.dimension))
    return project_to_torus(model, x) if model.is_torus else x


class Edge:
    """Unordered bond; endpoints stored with the lexicographically smaller first.

    Edge(x, y) == Edge(y, x) and their hashes agree.
    """

    __slots__ = ("a", "b")

    def __init__(self, x, y):
        x = tuple(int(c) for c in x)
        y = tuple(int(c) for c in y)
        if len(x) != len(y):
            raise ValueError("endpoint dimensions differ")
        if x == y:
            raise ValueError("degenerate edge")
        if y < x:
            x, y = y, x
        object.__setattr__(self, "a", x)
        object.__setattr__(self, "b", y)

    def __setattr__(self, *args):
        raise AttributeError("Edge is immutable")

    def __eq__(self, other):
        return isinstance(other, Edge) and self.a == other.a and self.b == other.b

    def __hash__(self):
        return hash((self.a, self.b))

    def __repr__(self):
        return "Edge(%r, %r)" % (self.a, self.b)

    def __iter__(self):
        yield self.a
        yield self.b


@lru_cache(maxsize=None)
def neighbor_offsets(d, L):
    """All nonzero displacements with l1 norm <= L, lexicographically sorted.

    Returned as an (n, d) int64 array; the fixed ordering is part of the
    deterministic exploration contract.
    """
    out = []

    def rec(prefix, budget):
        if len(prefix) == d:
            if any(prefix):
                out.append(tuple(prefix))
            return
        for c in range(-budget, budget + 1):
            rec(prefix + [c], budget - abs(c))

    rec([], L)
    out.sort()
    arr = np.array(out, dtype=np.int64)
    arr.setflags(write=False)
    return arr


def incident_edges(model, x):
    """All bonds incident to x (torus endpoints canonicalized)."""
    x = canonical_point(model, x)
    offs = neighbor_offsets(model.dimension, model.edge_range)
    edges = []
    for row in offs:
        y = tuple(int(c) + int(dc) for c, dc in zip(x, row))
        if model.is_torus:
            y = project_to_torus(model, y)
        edges.append(Edge(x, y))
    return edges


# ---------------------------------------------------------------------------
# regions


class Region:
    """Vertex-set restriction for explorations.

    Box-shaped regions (All, Box, Halfspace, Slab) lower to per-axis integer
    bounds and run on the kernel lanes; Custom regions carry an arbitrary
    predicate and run on the interpreted path.
    """

    def contains(self, x):
        raise NotImplementedError

    def bounds(self, d):
        """(lo, hi) inclusive int64 arrays, or None if not box-shaped."""
        raise NotImplementedError


class All(Region):
    def contains(self, x):
        return True

    def bounds(self, d):
        lo = np.full(d, -_UNBOUNDED, dtype=np.int64)
        hi = np.full(d, _UNBOUNDED, dtype=np.int64)
        return lo, hi

    def __repr__(self):
        return "All()"


ALL = All()


class Box(Region):
    """Sup-norm ball [-radius, radius]^d, optionally translated."""

    def __init__(self, radius, center=None):
        if radius < 0:
            raise ValueError("radius must be >= 0")
        self.radius = int(radius)
        self.center = None if center is None else tuple(int(c) for c in center)

    def contains(self, x):
        if self.center is None:
            return all(abs(int(c)) <= self.radius for c in x)
        return all(abs(int(c) - cc) <= self.radius for c, cc in zip(x, self.center))

    def bounds(self, d):
        c = np.zeros(d, dtype=np.int64) if self.center is None else np.array(self.center, dtype=np.int64)
        return c - self.radius, c + self.radius

    def __repr__(self):
        return "Box(%d%s)" % (self.radius, "" if self.center is None else ", center=%r" % (self.center,))


class Halfspace(Region):
    """{x : x_axis >= threshold} ("ge") or {x : x_axis <= threshold} ("le")."""

    def __init__(self, axis, threshold, orientation="ge"):
        if orientation not in ("ge", "le"):
            raise ValueError("orientation must be 'ge' or 'le'")
        self.axis = int(axis)
        self.threshold = int(threshold)
        self.orientation = orientation

    def contains(self, x):
        c = int(x[self.axis])
        return c >= self.threshold if self.orientation == "ge" else c <= self.threshold

    def bounds(self, d):
        lo = np.full(d, -_UNBOUNDED, dtype=np.int64)
        hi = np.full(d, _UNBOUNDED, dtype=np.int64)
        if self.orientation == "ge":
            lo[self.axis] = self.threshold
        else:
            hi[self.axis] = self.threshold
        return lo, hi

    def __repr__(self):
        return "Halfspace(axis=%d, threshold=%d, %r)" % (self.axis, self.threshold, self.orientation)


class Slab(Region):
    """{x : lo <= x_axis <= hi}."""

    def __init__(self, axis, lo, hi):
        if lo > hi:
            raise ValueError("slab bounds out of order")
        self.axis = int(axis)
        self.lo = int(lo)
        self.hi = int(hi)

    def contains(self, x):
        return self.lo <= int(x[self.axis]) <= self.hi

    def bounds(self, d):
        lo = np.full(d, -_UNBOUNDED, dtype=np.int64)
        hi = np.full(d, _UNBOUNDED, dtype=np.int64)
        lo[self.axis] = self.lo
        hi[self.axis] = self.hi
        return lo, hi

    def __repr__(self):
        return "Slab(axis=%d, lo=%d, hi=%d)" % (self.axis, self.lo, self.hi)


class Intersection(Region):
    """Intersection of regions; box-shaped iff all parts are."""

    def __init__(self, *parts):
        self.parts = parts

    def contains(self, x):
        return all(p.contains(x) for p in self.parts)

    def bounds(self, d):
        lo = np.full(d, -_UNBOUNDED, dtype=np.int64)
        hi = np.full(d, _UNBOUNDED, dtype=np.int64)
        for p in self.parts:
            b = p.bounds(d)
            if b is None:
                return None
            lo = np.maximum(lo, b[0])
            hi = np.minimum(hi, b[1])
        return lo, hi

    def __repr__(self):
        return "Intersection%r" % (self.parts,)


class Custom(Region):
    """Arbitrary membership predicate; forces the interpreted exploration path."""

    def __init__(self, predicate):
        self.predicate = predicate

    def contains(self, x):
        return bool(self.predicate(tuple(int(c) for c in x)))

    def bounds(self, d):
        return None

    def __repr__(self):
        return "Custom(%r)" % (self.predicate,)


# ---------------------------------------------------------------------------
# coordinate packing (pure-python / numpy reference; kernels mirror this)


def packing_bits(d):
    return 64 // d


def coord_limit(d):
    """Largest |coordinate| representable: 2^(B-1) - 1 for B bits per axis."""
    return (1 << (packing_bits(d) - 1)) - 1


def pack_point(x):
    """Pack one point into its uint64 key (python int)."""
    d = len(x)
    B = packing_bits(d)
    bias = 1 << (B - 1)
    mask = (1 << B) - 1
    acc = 0
    for c in x:
        acc = ((acc << B) | ((int(c) + bias) & mask)) & 0xFFFFFFFFFFFFFFFF
    return acc


def unpack_key(key, d):
    """Inverse of pack_point."""
    B = packing_bits(d)
    bias = 1 << (B - 1)
    mask = (1 << B) - 1 if B < 64 else 0xFFFFFFFFFFFFFFFF
    out = []
    for i in range(d):
        part = (int(key) >> (B * (d - 1 - i))) & mask
        out.append(part - bias)
    return tuple(out)


def pack_array(coords):
    """Vectorized pack: (n, d) int64 -> (n,) uint64."""
    coords = np.asarray(coords, dtype=np.int64)
    n, d = coords.shape
    B = packing_bits(d)
    bias = np.uint64(1) << np.uint64(B - 1)
    mask = np.uint64(0xFFFFFFFFFFFFFFFF) if B == 64 else (np.uint64(1) << np.uint64(B)) - np.uint64(1)
    acc = np.zeros(n, dtype=np.uint64)
    for i in range(d):
        part = (coords[:, i].astype(np.uint64) + bias) & mask
        if i > 0:
            acc = acc << np.uint64(B)
        acc = acc | part
    return acc


def unpack_array(keys, d):
    """Vectorized unpack: (n,) uint64 -> (n, d) int64."""
    keys = np.asarray(keys, dtype=np.uint64)
    B = packing_bits(d)
    out = np.empty((keys.shape[0], d), dtype=np.int64)
    if B == 64:
        out[:, 0] = (keys ^ (np.uint64(1) << np.uint64(63))).view(np.int64)
        return out
    bias = np.int64(1 << (B - 1))
    mask = (np.uint64(1) << np.uint64(B)) - np.uint64(1)
    for i in range(d):
        part = (keys >> np.uint64(B * (d - 1 - i))) & mask
        out[:, i] = part.astype(np.int64) - bias
    return out
