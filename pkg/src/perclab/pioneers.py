"""First-crossing (pioneer) bond statistics on the half-space.

A bond {y, z} with y[0] < z[0] is a first-crossing bond of the source x
if it is open, z[0] > x[0], and y connects to x by an open path staying
strictly left of the plane {w : w[0] = z[0]}.  Such a bond crosses every
plane offset n with y[0] - x[0] < n <= z[0] - x[0]; crossing_profile
estimates the expected number of crossing bonds at each offset 1..n_max.

The enumerator is an exact left-to-right plane sweep: bonds probed from a
scanned vertex into a not-yet-admitted plane are precisely the
first-crossing bonds, so no connectivity recheck is ever needed.  For the
windowed counts up to n_max the sweep only needs planes up to
horizon = n_max + edge_range - 2: any bond contributing to the window has
z[0] <= y[0] + edge_range, which caps the near endpoint's half-space depth
at the horizon.  Per-realization totals additionally include bonds beyond
the window whose near endpoint connects within the horizon, and undercount
deeper ones (for edge_range 1 there are none: totals are exact for
z[0] - x[0] <= n_max, the whole swept strip).
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from ._batching import BLOCK, run_blocks
from .explore import Caps
from .lattice import ALL, Halfspace, Intersection, canonical_point
from .randomness import TAG_PERC

DEFAULT_MAX_VOLUME = 1 << 18


@dataclass
class CrossingRecord:
    """Crossing bonds of one realization.

    counts[n] is the number of crossing bonds at plane offset n for
    1 <= n <= n_max (entry 0 is unused); total counts the distinct
    crossing bonds admitted within the sweep horizon.  truncated means a
    cap cut the sweep short, so every number is a lower bound.
    """

    source: tuple
    counts: np.ndarray
    total: int
    truncated: bool
    reason: int

    @property
    def window_sum(self):
        return int(self.counts[1:].sum())


@dataclass
class CrossingProfile:
    """Monte Carlo profile of expected crossing-bond counts.

    mean[i], sem[i] estimate the expected count at plane offset
    offsets[i]; totals holds the per-replica number of crossing bonds
    seen within the sweep horizon (a lower bound on the full count).
    censored replicas (volume or radius truncation) are excluded from
    mean/sem but kept in totals/reasons.
    """

    offsets: np.ndarray
    mean: np.ndarray
    sem: np.ndarray
    replicas: int
    censored: int
    totals: np.ndarray
    reasons: np.ndarray
    horizon: int
    p: float

    @property
    def censored_fraction(self):
        return self.censored / self.replicas

    @property
    def unreliable(self):
        return self.censored_fraction > 0.01

    def tail_probability(self, k):
        """P(total crossing bonds >= k) with binomial standard error."""
        k = np.asarray(k)
        n = self.totals.shape[0]
        hits = (self.totals[None, :] >= np.atleast_1d(k)[:, None]).sum(axis=1)
        phat = hits / n
        sem = np.sqrt(phat * (1.0 - phat) / n)
        if np.isscalar(k) or k.ndim == 0:
            return float(phat[0]), float(sem[0])
        return phat, sem


def _sweep_setup(model, source, n_max, caps, region):
    if model.is_torus:
        raise ValueError("crossing bonds are a lattice (non-torus) statistic")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    source = canonical_point(model, source)
    L = model.edge_range
    horizon = n_max + L - 2
    swept = Halfspace(0, source[0] + horizon + L, "le")
    reg = swept if region is ALL else Intersection(region, swept)
    if caps is None:
        caps = Caps(max_volume=DEFAULT_MAX_VOLUME)
    elif caps.max_volume is None:
        caps = Caps(DEFAULT_MAX_VOLUME, caps.max_radius, caps.max_intrinsic)
    if caps.max_intrinsic is not None:
        raise ValueError("intrinsic caps do not apply to the plane sweep")
    lp = K.lower_problem(model, reg, source, caps)
    n_up = int((lp.offsets[:, 0] > 0).sum())
    return lp, horizon, n_up


def crossing_counts(model, field, *, n_max, source=None, caps=None,
                    region=ALL):
    """Sweep one realization (the field's own stream) into a record."""
    if source is None:
        source = (0,) * model.dimension
    source = canonical_point(model, source)
    lp, horizon, n_up = _sweep_setup(model, source, n_max, caps, region)
    counts, total, reason = K.pioneer_single(
        np.uint64(field.master_seed), np.uint64(TAG_PERC),
        np.uint64(field.stream_id), *lp[:-1], n_max, horizon, n_up)
    return CrossingRecord(source, counts, int(total), int(reason) != 0,
                          int(reason))


def crossing_profile(model, field, *, n_max, replicas, source=None,
                     caps=None, region=ALL, base_stream=None, workers=None):
    """Estimate expected crossing-bond counts at offsets 1..n_max.

    Replica j runs on stream base_stream + j (default: field.stream_id),
    so profiles are reproducible and extendable by advancing base_stream.
    """
    if source is None:
        source = (0,) * model.dimension
    lp, horizon, n_up = _sweep_setup(model, source, n_max, caps, region)
    if base_stream is None:
        base_stream = field.stream_id
    seed = np.uint64(field.master_seed)
    tag = np.uint64(TAG_PERC)

    def worker(stream_lo, n):
        return K.batch_pioneer(seed, tag, np.uint64(stream_lo), n,
                               *lp[:-1], n_max, horizon, n_up)

    parts = run_blocks(worker, base_stream, replicas, workers, BLOCK)
    # block-level int64 sums are exact; accumulate across blocks in python
    # ints so nothing ever wraps
    counts_sum = [0] * (n_max + 1)
    counts_sq = [0] * (n_max + 1)
    totals = []
    reasons = []
    for cs, cq, tot, rs in parts:
        for n in range(n_max + 1):
            counts_sum[n] += int(cs[n])
            counts_sq[n] += int(cq[n])
        totals.append(tot)
        reasons.append(rs)
    totals = np.concatenate(totals)
    reasons = np.concatenate(reasons)
    censored = int((reasons != 0).sum())
    n_ok = int(replicas) - censored
    if n_ok == 0:
        raise RuntimeError("all replicas censored; raise caps.max_volume")
    mean = np.array([s / n_ok for s in counts_sum])
    var = np.array([max(q / n_ok - m * m, 0.0)
                    for q, m in zip(counts_sq, mean)])
    sem = np.sqrt(var / n_ok)
    return CrossingProfile(np.arange(1, n_max + 1), mean[1:], sem[1:],
                           int(replicas), censored, totals, reasons,
                           horizon, lp.p)
