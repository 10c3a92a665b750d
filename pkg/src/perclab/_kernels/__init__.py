"""Kernel lane selection and problem lowering.

Exploration requests arrive as (model, region, source, caps) and are
lowered here to the flat arrays the kernels consume.  Two lanes implement
the same driver API: a numba-jit lane and a pure-numpy mirror; the active
one is picked at import time by perclab._accel (PERCLAB_NO_NUMBA=1 forces
numpy).  Both produce bit-identical output for equal inputs.

Driver reason codes: 0 complete, 1 volume cap hit, 2 clipped against the
requested region's effective box (guard or max_radius), 3 intrinsic cap.
"""

from collections import namedtuple

import numpy as np

from .._accel import USE_NUMBA, LANE
from ..lattice import (ALL, canonical_point, coord_limit, neighbor_offsets,
                       pack_point, _UNBOUNDED)

if USE_NUMBA:
    from . import _numba_lane as lane
else:
    from . import _numpy_lane as lane

from . import _numpy_lane as reference_lane

pair_uniforms = lane.pair_uniforms
explore_single = lane.explore_single
batch_reach = lane.batch_reach
batch_sizes = lane.batch_sizes
batch_plane_count = lane.batch_plane_count
batch_multi_target = lane.batch_multi_target
batch_shells = lane.batch_shells
batch_torus_grid = lane.batch_torus_grid
batch_coupling = lane.batch_coupling
pioneer_single = lane.pioneer_single
batch_pioneer = lane.batch_pioneer

MAX_VOLUME_LIMIT = 1 << 22

NO_INTRINSIC_CAP = 1 << 62


class KernelUnsupported(ValueError):
    """The request cannot be lowered (e.g. a predicate-only region)."""


Lowered = namedtuple("Lowered", [
    "d", "L", "r", "offsets", "p", "src",
    "eff_lo", "eff_hi", "user_lo", "user_hi",
    "max_volume", "max_intrinsic",
])


def lower_problem(model, region=ALL, src=None, caps=None, p=None):
    """Flatten a (model, region, src, caps) request for the kernel drivers.

    The effective box is the intersection of the region bounds, the packing
    guard window, and (when capped) the max_radius ball around src;
    candidates inside the region but outside the effective box raise the
    radius-truncation flag (reason 2).  Sources outside the effective box
    are rejected.
    """
    d = model.dimension
    L = model.edge_range
    r = model.period if model.is_torus else 0
    if p is None:
        p = model.p
    if p is None:
        raise ValueError("no edge probability: set model.p or pass p=")
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    if src is None:
        src = (0,) * d
    src = canonical_point(model, src)
    bounds = region.bounds(d)
    if bounds is None:
        raise KernelUnsupported(
            "region has no box bounds; use the interpreted explorer")
    user_lo = np.asarray(bounds[0], dtype=np.int64).copy()
    user_hi = np.asarray(bounds[1], dtype=np.int64).copy()
    clim = coord_limit(d)
    if model.is_torus:
        f = r // 2
        if max(f, r - f - 1) > clim:
            raise ValueError(
                f"period {r} too large to pack at d={d} (limit {clim})")
        win_lo, win_hi = -f, r - f - 1
    else:
        win_lo, win_hi = -clim, clim
    eff_lo = np.maximum(user_lo, win_lo)
    eff_hi = np.minimum(user_hi, win_hi)
    max_volume = getattr(caps, "max_volume", None) if caps is not None else None
    if max_volume is None:
        max_volume = MAX_VOLUME_LIMIT
    max_volume = int(max_volume)
    if not 1 <= max_volume <= MAX_VOLUME_LIMIT:
        raise ValueError(
            f"max_volume must be in [1, {MAX_VOLUME_LIMIT}], got {max_volume}")
    max_radius = getattr(caps, "max_radius", None) if caps is not None else None
    if max_radius is not None:
        max_radius = int(max_radius)
        if max_radius < 0:
            raise ValueError("max_radius must be >= 0")
        for i in range(d):
            eff_lo[i] = max(eff_lo[i], src[i] - max_radius)
            eff_hi[i] = min(eff_hi[i], src[i] + max_radius)
    max_intrinsic = (getattr(caps, "max_intrinsic", None)
                     if caps is not None else None)
    if max_intrinsic is None:
        max_intrinsic = NO_INTRINSIC_CAP
    max_intrinsic = int(max_intrinsic)
    if max_intrinsic < 0:
        raise ValueError("max_intrinsic must be >= 0")
    src_arr = np.array(src, dtype=np.int64)
    if not (np.all(src_arr >= eff_lo) and np.all(src_arr <= eff_hi)):
        raise ValueError(f"source {src} outside the explorable region")
    offsets = neighbor_offsets(d, L)
    return Lowered(d, L, r, offsets, p, src_arr,
                   eff_lo, eff_hi, user_lo, user_hi,
                   max_volume, max_intrinsic)


def box_target(lp, lo, hi, negate=False):
    """Validate and coerce a target box for the reach drivers."""
    tgt_lo = np.asarray(lo, dtype=np.int64)
    tgt_hi = np.asarray(hi, dtype=np.int64)
    if tgt_lo.shape != (lp.d,) or tgt_hi.shape != (lp.d,):
        raise ValueError("target box must match the model dimension")
    return tgt_lo, tgt_hi, bool(negate)


def point_key(model, x):
    """Packed key of a (canonicalized) point, the hash-table identity."""
    return np.uint64(pack_point(canonical_point(model, x)))


def dummy_box(d):
    z = np.zeros(d, dtype=np.int64)
    return z, z


def warmup(d=3, L=1):
    """Compile (or no-op) the active lane on a token problem."""
    from ..lattice import ModelSpec
    m = ModelSpec(dimension=d, geometry="lattice", edge_range=L, p=0.1)

    class _C:
        max_volume = 64
        max_radius = 4
        max_intrinsic = None

    lp = lower_problem(m, ALL, None, _C())
    tlo, thi, neg = box_target(lp, [2] * d, [2] * d)
    batch_reach(np.uint64(1), np.uint64(2), np.uint64(0), 2, *lp,
                tlo, thi, neg, -1)
    return LANE
