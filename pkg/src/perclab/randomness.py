"""Counter-based edge randomness.

Every bond (and ghost mark) gets an i.i.d. uniform computed as a pure keyed
hash of (master_seed, domain tag, stream_id, canonical endpoint keys): no
state, no order dependence, identical values for Edge(x,y) and Edge(y,x).
The hash is a chained splitmix64-style mixer; uniforms use the top 53 bits,
so they lie in [0, 1) on the standard double grid.

This module is the scalar reference; both kernel lanes reimplement the same
chain and are tested to agree bit for bit.
"""

import math
from dataclasses import dataclass

from .lattice import canonical_point, pack_point

_M64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

TAG_PERC = 0x70657263_00000001   # bond occupation layer
TAG_GHOST = 0x67686F73_00000002  # ghost (green-mark) layer
_INV53 = 2.0 ** -53


def mix64(z):
    """splitmix64 finalizer on a 64-bit word (python ints)."""
    z = (z + _GOLDEN) & _M64
    z = ((z ^ (z >> 30)) * _MIX1) & _M64
    z = ((z ^ (z >> 27)) * _MIX2) & _M64
    return z ^ (z >> 31)


def _chain(seed, tag, stream, ka, kb):
    if kb < ka:
        ka, kb = kb, ka
    h = mix64(seed & _M64)
    h = mix64(h ^ (tag & _M64))
    h = mix64(h ^ (stream & _M64))
    h = mix64(h ^ ka)
    h = mix64(h ^ kb)
    return h


def _unit(h):
    return (h >> 11) * _INV53


def _edge_keys(model, edge):
    if hasattr(edge, "a"):
        x, y = edge.a, edge.b
    else:
        x, y = edge
    x = canonical_point(model, x)
    y = canonical_point(model, y)
    if x == y:
        raise ValueError("degenerate edge")
    return pack_point(x), pack_point(y)


@dataclass(frozen=True)
class EdgeField:
    """Keyed source of per-bond uniforms; stream_id separates replicas."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= self.master_seed <= _M64):
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if not (0 <= self.stream_id <= _M64):
            raise ValueError("stream_id must be a 64-bit unsigned integer")

    def with_stream(self, stream_id):
        return EdgeField(self.master_seed, stream_id)

    def uniform(self, model, edge):
        ka, kb = _edge_keys(model, edge)
        return _unit(_chain(self.master_seed, TAG_PERC, self.stream_id, ka, kb))

    def is_open(self, model, edge, p=None):
        p = model.require_p(p)
        return self.uniform(model, edge) < p


@dataclass(frozen=True)
class GhostField:
    """Independent green marks on bonds: green with probability 1 - exp(-h)."""

    master_seed: int
    intensity: float
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= self.master_seed <= _M64):
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.intensity < 0:
            raise ValueError("intensity must be >= 0")

    @property
    def green_probability(self):
        return -math.expm1(-self.intensity)

    def uniform(self, model, edge):
        ka, kb = _edge_keys(model, edge)
        return _unit(_chain(self.master_seed, TAG_GHOST, self.stream_id, ka, kb))

    def is_green(self, model, edge):
        return self.uniform(model, edge) < self.green_probability


def edge_uniform(field, model, edge):
    """Module-level alias for field.uniform."""
    return field.uniform(model, edge)


def is_open(field, model, edge, p=None):
    """Module-level alias for field.is_open."""
    return field.is_open(model, edge, p)
