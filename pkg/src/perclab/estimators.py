"""Monte Carlo estimators for connectivity and cluster-size observables.

Every estimator runs independent replicas on consecutive PRF streams
(replica j on base_stream + j, default base_stream = field.stream_id), so
estimates are reproducible, extendable, and independent of the worker
count.  Replicas truncated by a resource cap are counted as censored and
excluded from the estimate; callers should keep censored_fraction small
(raise caps.max_volume) or treat the result as unreliable.

Indicator estimates carry exact binomial standard errors; mean estimates
accumulate exact integer sums and quote a batch-means standard error
(20 batches by replica index), which stays honest when per-replica
cluster sizes are heavy tailed.
"""

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import _kernels as K
from ._batching import BLOCK, run_blocks
from .explore import Caps
from .lattice import ALL, Box, Halfspace, Slab, canonical_point, pack_array
from .randomness import TAG_PERC

DEFAULT_MAX_VOLUME = 1 << 18
N_BATCHES = 20
UNRELIABLE_CENSORING = 0.01


@dataclass
class IndicatorEstimate:
    """Estimated probability of a cluster event, with binomial SEM."""

    probability: float
    sem: float
    replicas: int
    hits: int
    censored: int

    @property
    def effective_replicas(self):
        return self.replicas - self.censored

    @property
    def censored_fraction(self):
        return self.censored / self.replicas

    @property
    def unreliable(self):
        return self.censored_fraction > UNRELIABLE_CENSORING


@dataclass
class MeanEstimate:
    """Estimated expectation of a per-cluster count, with batch-means SEM."""

    value: float
    sem: float
    replicas: int
    censored: int

    @property
    def effective_replicas(self):
        return self.replicas - self.censored

    @property
    def censored_fraction(self):
        return self.censored / self.replicas

    @property
    def unreliable(self):
        return self.censored_fraction > UNRELIABLE_CENSORING


def _resolve_caps(caps):
    if caps is None:
        return Caps(max_volume=DEFAULT_MAX_VOLUME)
    if caps.max_volume is None:
        return Caps(DEFAULT_MAX_VOLUME, caps.max_radius, caps.max_intrinsic)
    return caps


def _field_ints(field, base_stream):
    if base_stream is None:
        base_stream = field.stream_id
    return np.uint64(field.master_seed), np.uint64(TAG_PERC), int(base_stream)


def _indicator(parts, replicas):
    hits = 0
    censored = 0
    for h, rs in parts:
        hits += int(h.sum())
        censored += int((rs != 0).sum())
    n_ok = replicas - censored
    if n_ok == 0:
        raise RuntimeError("all replicas censored; raise caps.max_volume")
    phat = hits / n_ok
    sem = float(np.sqrt(phat * (1.0 - phat) / n_ok))
    return IndicatorEstimate(phat, sem, replicas, hits, censored)


def _mean_from_values(vals, reasons, replicas, n_batches=N_BATCHES):
    """Exact-integer mean over uncensored replicas, batch-means SEM.

    Replicas fall into contiguous index batches, so the error bar never
    depends on worker count or block size.  vals/reasons are in replica
    order (run_blocks preserves it).
    """
    vals = np.asarray(vals, dtype=np.int64)
    ok = np.asarray(reasons) == 0
    censored = int(vals.shape[0] - ok.sum())
    n_ok = replicas - censored
    if n_ok == 0:
        raise RuntimeError("all replicas censored; raise caps.max_volume")
    mean = int(vals[ok].sum()) / n_ok
    idx = (np.arange(replicas, dtype=np.int64) * n_batches) // replicas
    bsum = np.bincount(idx[ok], weights=vals[ok].astype(np.float64),
                       minlength=n_batches)
    bcnt = np.bincount(idx[ok], minlength=n_batches)
    nz = bcnt > 0
    if int(nz.sum()) > 1:
        bm = bsum[nz] / bcnt[nz]
        sem = float(bm.std(ddof=1) / math.sqrt(int(nz.sum())))
    else:
        sem = float("inf")
    return MeanEstimate(mean, sem, replicas, censored)


def _mean_est(values_reasons, replicas):
    vals = np.concatenate([v for v, _ in values_reasons])
    reasons = np.concatenate([r for _, r in values_reasons])
    return _mean_from_values(vals, reasons, replicas)


def two_point(model, field, x, y=None, *, p=None, replicas, caps=None,
              region=ALL, base_stream=None, workers=None):
    """P(x and y lie in one open cluster); y defaults to the origin."""
    d = model.dimension
    if y is None:
        y = (0,) * d
    x = canonical_point(model, x)
    y = canonical_point(model, y)
    lp = K.lower_problem(model, region, y, _resolve_caps(caps), p=p)
    tgt = np.array(x, dtype=np.int64)
    seed, tag, b0 = _field_ints(field, base_stream)

    def worker(lo, n):
        return K.batch_reach(seed, tag, np.uint64(lo), n, *lp,
                             tgt, tgt, False, -1)

    parts = run_blocks(worker, b0, replicas, workers, BLOCK)
    return _indicator(parts, replicas)


def one_arm_extent(model, field, rho, *, p=None, replicas, source=None,
                   caps=None, base_stream=None, workers=None):
    """P(the source cluster reaches sup-norm distance >= rho)."""
    if model.is_torus:
        raise ValueError("extent one-arm applies to lattice models")
    if rho < 1:
        raise ValueError("rho must be >= 1")
    d = model.dimension
    if source is None:
        source = (0,) * d
    source = canonical_point(model, source)
    # a bond from inside the rho-1 box lands within rho-1+L of the source,
    # so this region never hides the exit event
    region = Box(rho - 1 + model.edge_range, center=source)
    lp = K.lower_problem(model, region, source, _resolve_caps(caps), p=p)
    src = np.array(source, dtype=np.int64)
    tgt_lo = src - (rho - 1)
    tgt_hi = src + (rho - 1)
    seed, tag, b0 = _field_ints(field, base_stream)

    def worker(lo, n):
        return K.batch_reach(seed, tag, np.uint64(lo), n, *lp,
                             tgt_lo, tgt_hi, True, -1)

    parts = run_blocks(worker, b0, replicas, workers, BLOCK)
    return _indicator(parts, replicas)


def one_arm_distance(model, field, ell, *, p=None, replicas, source=None,
                     caps=None, region=ALL, base_stream=None, workers=None):
    """P(the source cluster reaches graph distance >= ell)."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    caps = _resolve_caps(caps)
    # scanning past level ell never changes the event; cap the walk there
    if caps.max_intrinsic is None or caps.max_intrinsic > ell:
        caps = Caps(caps.max_volume, caps.max_radius, ell)
    lp = K.lower_problem(model, region, source, caps, p=p)
    z = np.zeros(model.dimension, dtype=np.int64)
    seed, tag, b0 = _field_ints(field, base_stream)

    def worker(lo, n):
        return K.batch_reach(seed, tag, np.uint64(lo), n, *lp,
                             z, z, False, int(ell))

    parts = run_blocks(worker, b0, replicas, workers, BLOCK)
    return _indicator(parts, replicas)


def one_arm(model, field, radius, *, metric="extent", **kw):
    """One-arm probability with a selectable reach metric.

    metric "extent" (sup-norm distance, boundary of the radius box) or
    "distance" (graph distance along open paths).
    """
    if metric in ("extent", "extrinsic"):
        return one_arm_extent(model, field, radius, **kw)
    if metric in ("distance", "intrinsic"):
        return one_arm_distance(model, field, radius, **kw)
    raise ValueError("metric must be 'extent' or 'distance'")


def susceptibility(model, field, *, p=None, replicas, source=None,
                   caps=None, region=ALL, base_stream=None, workers=None,
                   return_sizes=False):
    """Mean cluster size of the source vertex (chi)."""
    lp = K.lower_problem(model, region, source, _resolve_caps(caps), p=p)
    seed, tag, b0 = _field_ints(field, base_stream)

    def worker(lo, n):
        return K.batch_sizes(seed, tag, np.uint64(lo), n, *lp)

    parts = run_blocks(worker, b0, replicas, workers, BLOCK)
    est = _mean_est(parts, replicas)
    if return_sizes:
        sizes = np.concatenate([v for v, _ in parts])
        reasons = np.concatenate([r for _, r in parts])
        return est, sizes, reasons
    return est


def plane_count(model, field, plane, *, p=None, replicas, source=None,
                region, caps=None, base_stream=None, workers=None):
    """Mean number of source-cluster vertices on {w[0] == plane} in region."""
    lp = K.lower_problem(model, region, source, _resolve_caps(caps), p=p)
    seed, tag, b0 = _field_ints(field, base_stream)

    def worker(lo, n):
        return K.batch_plane_count(seed, tag, np.uint64(lo), n, *lp,
                                   int(plane))

    parts = run_blocks(worker, b0, replicas, workers, BLOCK)
    return _mean_est(parts, replicas)


def halfspace_plane_count(model, field, r, **kw):
    """Mean count on the far plane of the cluster grown in {w[0] <= r}."""
    if model.is_torus:
        raise ValueError("half-space counts apply to lattice models")
    return plane_count(model, field, r, region=Halfspace(0, int(r), "le"),
                       **kw)


def slab_plane_count(model, field, r, lo=0, **kw):
    """Mean count on the far plane of the cluster grown in the slab
    {lo <= w[0] <= r}."""
    if model.is_torus:
        raise ValueError("slab counts apply to lattice models")
    return plane_count(model, field, r, region=Slab(0, int(lo), int(r)),
                       **kw)


def slab_counts(model, field, r, *, p=None, replicas, caps=None,
                base_stream=None, workers=None):
    """Far-plane counts under half-space and symmetric-slab restriction.

    Returns (half, slab): the mean number of vertices on {w[0] == r}
    connected to the origin inside {w[0] <= r}, and inside
    {-r <= w[0] <= r}.  Both runs share streams, so slab <= half holds
    per sample, not just in expectation.  Nearest-neighbour models only:
    longer bonds can jump the bounding plane, which changes what the
    restriction means.
    """
    if model.edge_range != 1:
        raise ValueError("slab counts are a nearest-neighbour statistic")
    if r < 0:
        raise ValueError("r must be >= 0")
    kw = dict(p=p, replicas=replicas, caps=caps, base_stream=base_stream,
              workers=workers)
    half = halfspace_plane_count(model, field, r, **kw)
    slab = slab_plane_count(model, field, r, lo=-r, **kw)
    return half, slab


def sum_two_point(model, field, targets, *, p=None, replicas, source=None,
                  caps=None, region=ALL, base_stream=None, workers=None,
                  per_target=False):
    """Estimate sum over targets of P(source connects to target).

    One exploration serves every target (the count of targets inside the
    cluster has expectation equal to the sum), so this is far cheaper than
    separate two-point runs when targets share a source.
    """
    d = model.dimension
    pts = np.array([canonical_point(model, t) for t in targets],
                   dtype=np.int64)
    if pts.ndim != 2 or pts.shape[1] != d or pts.shape[0] == 0:
        raise ValueError("targets must be a nonempty list of points")
    keys = np.unique(pack_array(pts))
    if keys.shape[0] != pts.shape[0]:
        raise ValueError("duplicate targets after canonicalization")
    lp = K.lower_problem(model, region, source, _resolve_caps(caps), p=p)
    seed, tag, b0 = _field_ints(field, base_stream)

    def worker(lo, n):
        return K.batch_multi_target(seed, tag, np.uint64(lo), n, *lp, keys)

    parts = run_blocks(worker, b0, replicas, workers, BLOCK)
    per_key = np.zeros(keys.shape[0], dtype=object)
    for th, _, _ in parts:
        per_key += th.astype(object)
    est = _mean_est([(tot, rs) for _, tot, rs in parts], replicas)
    censored = est.censored
    n_ok = est.effective_replicas
    if not per_target:
        return est
    if censored:
        # per-target hit counts are summed in-kernel over all replicas and
        # cannot drop censored ones; forbid the combination
        raise RuntimeError(
            "per_target probabilities need zero censoring; raise caps")
    probs = np.array([int(c) / n_ok for c in per_key])
    sems = np.sqrt(probs * (1.0 - probs) / n_ok)
    return est, keys, probs, sems


def torus_preimages(x, period, within, *, include_center=True):
    """Lattice preimages x + period * u of a torus point, |u|_inf <= within.

    With include_center the u = 0 copy is kept, so a sum_two_point over the
    result estimates the lattice two-point mass that the torus point
    inherits from all wrapped copies up to the cutoff.
    """
    x = tuple(int(c) for c in x)
    d = len(x)
    if within < 0:
        raise ValueError("within must be >= 0")
    rng = range(-within, within + 1)
    out = []
    for u in product(rng, repeat=d):
        if not include_center and all(c == 0 for c in u):
            continue
        out.append(tuple(x[i] + period * u[i] for i in range(d)))
    return out


@dataclass
class ShellProfile:
    """Shell-resolved connectivity around a source.

    For shell index k (sup-norm distance k): rep_prob[k] estimates the
    two-point probability to the diagonal representative rep_points[k],
    and shell_mean[k] the expected number of cluster vertices on the
    whole shell.  Index 0 is the source itself.
    """

    shells: np.ndarray
    rep_points: np.ndarray
    rep_prob: np.ndarray
    rep_sem: np.ndarray
    shell_mean: np.ndarray
    shell_sem: np.ndarray
    replicas: int
    censored: int

    @property
    def censored_fraction(self):
        return self.censored / self.replicas


def shell_profile(model, field, *, n_shell, replicas, p=None, source=None,
                  caps=None, region=ALL, base_stream=None, workers=None):
    """Two-point decay profile: representatives and full-shell counts."""
    d = model.dimension
    if source is None:
        source = (0,) * d
    source = canonical_point(model, source)
    if n_shell < 0:
        raise ValueError("n_shell must be >= 0")
    if model.is_torus and n_shell > model.period // 2:
        raise ValueError("n_shell exceeds half the torus period")
    reps = np.array([canonical_point(model,
                                     tuple(s - k for s in source))
                     for k in range(n_shell + 1)], dtype=np.int64)
    rep_keys = pack_array(reps)
    lp = K.lower_problem(model, region, source, _resolve_caps(caps), p=p)
    seed, tag, b0 = _field_ints(field, base_stream)

    def worker(lo, n):
        return K.batch_shells(seed, tag, np.uint64(lo), n, *lp,
                              int(n_shell), rep_keys)

    parts = run_blocks(worker, b0, replicas, workers, BLOCK)
    nsh = n_shell + 1
    rep_hits = [0] * nsh
    cnt_sum = [0] * nsh
    cnt_sq = [0] * nsh
    censored = 0
    for sc, rh, sz, rs in parts:
        ok = rs == 0
        censored += int(sz.shape[0] - int(ok.sum()))
        sc_ok = sc[ok]
        rh_ok = rh[ok]
        for k in range(nsh):
            cnt_sum[k] += int(sc_ok[:, k].sum())
            cnt_sq[k] += int((sc_ok[:, k].astype(np.int64) ** 2).sum())
            rep_hits[k] += int(rh_ok[:, k].sum())
    n_ok = replicas - censored
    if n_ok == 0:
        raise RuntimeError("all replicas censored; raise caps.max_volume")
    rep_prob = np.array([h / n_ok for h in rep_hits])
    rep_sem = np.sqrt(rep_prob * (1.0 - rep_prob) / n_ok)
    shell_mean = np.array([s / n_ok for s in cnt_sum])
    shell_var = np.array([max(q / n_ok - m * m, 0.0)
                          for q, m in zip(cnt_sq, shell_mean)])
    shell_sem = np.sqrt(shell_var / n_ok)
    return ShellProfile(np.arange(nsh), reps, rep_prob, rep_sem,
                        shell_mean, shell_sem, replicas, censored)


@dataclass
class TorusTwoPoint:
    """Vertexwise torus connectivity estimates on the full period grid.

    tau has shape (period,) * dimension indexed by nonnegative
    coordinates mod the period; sem is estimated over independent
    stream splits.
    """

    tau: np.ndarray
    sem: np.ndarray
    replicas: int
    censored: int
    splits: int

    def value_at(self, x):
        idx = tuple(int(c) % self.tau.shape[0] for c in x)
        return float(self.tau[idx]), float(self.sem[idx])


def torus_two_point(model, field, *, replicas, p=None, source=None,
                    caps=None, n_splits=8, base_stream=None, workers=None):
    """Estimate P(source connects to x) for every torus vertex x at once."""
    if not model.is_torus:
        raise ValueError("torus_two_point needs a torus model")
    d = model.dimension
    r = model.period
    V = r ** d
    if V * n_splits > (1 << 26):
        raise ValueError("period too large for the per-split grid buffers")
    if replicas < 2 * n_splits:
        raise ValueError("need at least two replicas per split")
    caps = _resolve_caps(caps)
    if caps.max_volume > V:
        caps = Caps(V, caps.max_radius, caps.max_intrinsic)
    lp = K.lower_problem(model, ALL, source, caps, p=p)
    seed, tag, b0 = _field_ints(field, base_stream)

    def worker(lo, n):
        return K.batch_torus_grid(seed, tag, np.uint64(lo), n, *lp,
                                  int(n_splits))

    parts = run_blocks(worker, b0, replicas, workers, BLOCK)
    counts = np.zeros((n_splits, V), dtype=np.int64)
    censored = 0
    split_n = np.zeros(n_splits, dtype=np.int64)
    for c, sz, rs in parts:
        counts += c
        censored += int((rs != 0).sum())
    if censored:
        # grid sums cannot drop censored replicas after the fact
        raise RuntimeError(
            "torus grid runs must be uncensored; raise caps.max_volume "
            f"(got {censored} censored replicas)")
    # split j receives the replicas whose global stream index is j mod n_splits
    for j in range(n_splits):
        lo = (j - b0) % n_splits
        split_n[j] = (replicas - lo + n_splits - 1) // n_splits
    tau_splits = counts / np.maximum(split_n, 1)[:, None]
    tau = counts.sum(axis=0) / replicas
    sem = tau_splits.std(axis=0, ddof=1) / np.sqrt(n_splits)
    shape = (r,) * d
    return TorusTwoPoint(tau.reshape(shape), sem.reshape(shape),
                         replicas, censored, n_splits)


@dataclass
class CouplingReport:
    """Monotone-coupling diagnostics between two densities on one field."""

    p_lo: float
    p_hi: float
    missing: int
    dist_increase: int
    truncated_lo: int
    truncated_hi: int
    replicas: int

    @property
    def consistent(self):
        return (self.missing == 0 and self.dist_increase == 0
                and self.truncated_lo == 0 and self.truncated_hi == 0)


def coupling_violations(model, field, p_lo, p_hi, *, replicas, source=None,
                        caps=None, region=ALL, base_stream=None,
                        workers=None):
    """Count pointwise violations of cluster monotonicity in p.

    On a shared field the p_lo-cluster must be contained in the p_hi-cluster
    with no graph distance growing; any nonzero count is a correctness bug.
    """
    if not 0.0 <= p_lo <= p_hi <= 1.0:
        raise ValueError("need 0 <= p_lo <= p_hi <= 1")
    lp = K.lower_problem(model, region, source, _resolve_caps(caps), p=p_hi)
    seed, tag, b0 = _field_ints(field, base_stream)

    def worker(lo, n):
        return K.batch_coupling(seed, tag, np.uint64(lo), n,
                                lp.d, lp.L, lp.r, lp.offsets,
                                float(p_lo), float(p_hi), lp.src,
                                lp.eff_lo, lp.eff_hi, lp.user_lo, lp.user_hi,
                                lp.max_volume, lp.max_intrinsic)

    parts = run_blocks(worker, b0, replicas, workers, BLOCK)
    missing = sum(int(a) for a, _, _, _ in parts)
    dist_up = sum(int(b) for _, b, _, _ in parts)
    t_lo = sum(int(c) for _, _, c, _ in parts)
    t_hi = sum(int(e) for _, _, _, e in parts)
    return CouplingReport(float(p_lo), float(p_hi), missing, dist_up,
                          t_lo, t_hi, replicas)


@dataclass
class ThresholdResult:
    """Output of the torus finite-size threshold search."""

    p: float
    chi: float
    chi_sem: float
    target: float
    lam: float
    iterations: int
    replicas: int
    bracket: tuple

    @property
    def relative_gap(self):
        return abs(self.chi - self.target) / self.target


def solve_torus_threshold(model, field, lam=1.0, *, replicas, p_lo=0.0,
                          p_hi=1.0, tol_p=1e-4, max_iter=60, caps=None,
                          base_stream=None, workers=None):
    """Find p with torus susceptibility lam * V^(1/3), by bisection.

    Every evaluation reuses the same streams (common random numbers), and
    cluster size is pointwise monotone in p on a shared field, so the
    estimated susceptibility is a monotone function of p and bisection is
    exact up to tol_p.
    """
    if not model.is_torus:
        raise ValueError("threshold search needs a torus model")
    V = model.n_vertices
    target = lam * V ** (1.0 / 3.0)
    if not 1.0 <= target <= V:
        raise ValueError("lam out of the meaningful range for this volume")
    caps = _resolve_caps(caps)
    if caps.max_volume > V:
        caps = Caps(V, caps.max_radius, caps.max_intrinsic)

    def chi_at(p):
        est = susceptibility(model, field, p=p, replicas=replicas,
                             caps=caps, base_stream=base_stream,
                             workers=workers)
        if est.censored:
            raise RuntimeError("threshold search requires uncensored runs")
        return est

    lo, hi = float(p_lo), float(p_hi)
    it = 0
    est = None
    while hi - lo > tol_p and it < max_iter:
        mid = 0.5 * (lo + hi)
        est = chi_at(mid)
        if est.value < target:
            lo = mid
        else:
            hi = mid
        it += 1
    p_star = 0.5 * (lo + hi)
    est = chi_at(p_star)
    return ThresholdResult(p_star, est.value, est.sem, target, float(lam),
                           it, replicas, (lo, hi))


@dataclass
class MassFit:
    """Exponential decay rate fitted from a two-point series.

    log value(n) = intercept - rate * n - correction * log n on the fit
    window; rate is clamped at zero (decay rates are nonnegative),
    residual is the rms misfit of the unclamped line.
    """

    rate: float
    intercept: float
    fit_window: tuple
    residual: float
    correction: float
    n_points: int

    def extrapolate(self, n):
        n = np.asarray(n, dtype=np.float64)
        return np.exp(self.intercept - self.rate * n
                      - self.correction * np.log(n))


def _value_sem(e):
    if hasattr(e, "value"):
        return float(e.value), float(e.sem)
    if hasattr(e, "probability"):
        return float(e.probability), float(e.sem)
    return float(e[0]), float(e[1])


def fit_mass(series, *, correction=0.0, max_rel_sem=0.2, min_points=4):
    """Least-squares decay-rate fit on the usable part of a series.

    series maps n -> estimate (anything with value/probability and sem,
    or a (value, sem) pair).  Only points with value > 0 and relative
    standard error below max_rel_sem enter; the fit window is the longest
    contiguous run of usable entries (earliest on ties).  correction
    subtracts correction * log n before fitting, for series with a known
    power-law prefactor.
    """
    ns = sorted(int(n) for n in series)
    if not ns:
        raise ValueError("empty series")
    vals = []
    usable = []
    for n in ns:
        if n < 1:
            raise ValueError("series indices must be >= 1")
        v, s = _value_sem(series[n])
        vals.append(v)
        usable.append(v > 0.0 and np.isfinite(s) and s < max_rel_sem * v)
    # longest contiguous usable run
    best_lo, best_len = 0, 0
    run_lo = None
    for i, u in enumerate(usable + [False]):
        if u and run_lo is None:
            run_lo = i
        elif not u and run_lo is not None:
            if i - run_lo > best_len:
                best_lo, best_len = run_lo, i - run_lo
            run_lo = None
    if best_len < min_points:
        raise ValueError(
            "need %d usable points (value > 0, rel. SE < %g), found %d"
            % (min_points, max_rel_sem, best_len))
    win = slice(best_lo, best_lo + best_len)
    n_arr = np.array(ns[win], dtype=np.float64)
    y = np.log(np.array(vals[win])) + correction * np.log(n_arr)
    slope, intercept = np.polyfit(n_arr, y, 1)
    resid = y - (intercept + slope * n_arr)
    return MassFit(max(-float(slope), 0.0), float(intercept),
                   (ns[best_lo], ns[best_lo + best_len - 1]),
                   float(np.sqrt(np.mean(resid ** 2))),
                   float(correction), best_len)


@dataclass
class ImageSumEstimate:
    """Sum of two-point weights over periodic images of a target point."""

    value: float
    sem: float
    replicas: int
    censored: int
    period: int
    cutoff: int
    tail_bound: float = None

    @property
    def effective_replicas(self):
        return self.replicas - self.censored

    @property
    def censored_fraction(self):
        return self.censored / self.replicas if self.replicas else 0.0

    @property
    def unreliable(self):
        return self.censored_fraction > UNRELIABLE_CENSORING

    @property
    def upper(self):
        """value plus the truncation tail bound (None when unreported)."""
        if self.tail_bound is None:
            return None
        return self.value + self.tail_bound


def _image_tail_bound(mass, d, period, x_norm, cutoff):
    """Bound the image sum beyond the cutoff from a fitted decay rate.

    Images at shell k sit at sup-norm distance >= period*k - |x|, so each
    contributes at most the fitted envelope there; shells are summed until
    the terms vanish.  Requires a strictly positive rate.
    """
    if mass.rate <= 0.0:
        return None
    total = 0.0
    k = cutoff + 1
    while True:
        dist = period * k - x_norm
        if dist >= 1:
            shell = float((2 * k + 1) ** d - (2 * k - 1) ** d)
            term = shell * float(mass.extrapolate(dist))
            total += term
            if term <= 1e-18 * max(total, 1e-300):
                break
        k += 1
        if k > cutoff + 100000:
            return None
    return total


def image_sum(model, field, x, period, *, cutoff, replicas, p=None,
              caps=None, base_stream=None, workers=None, mass=None,
              include_center=False):
    """Estimate the connectivity mass on the periodic images of x.

    Sums P(0 connects to x + period*u) over 0 < |u|_inf <= cutoff in one
    multi-target run (include_center adds the u = 0 copy).  When a MassFit
    is supplied the truncated shells beyond the cutoff get a reported
    upper bound; otherwise tail_bound is None and the sum is a plain
    lower estimate.
    """
    if model.is_torus:
        raise ValueError("image sums run on the infinite lattice")
    if period < 1:
        raise ValueError("period must be >= 1")
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    targets = torus_preimages(x, period, cutoff,
                              include_center=include_center)
    x_norm = max(abs(int(c)) for c in x)
    tail = None
    if mass is not None:
        tail = _image_tail_bound(mass, model.dimension, period, x_norm,
                                 cutoff)
    if not targets:
        return ImageSumEstimate(0.0, 0.0, replicas, 0, period, cutoff, tail)
    est = sum_two_point(model, field, targets, p=p, replicas=replicas,
                        caps=caps, base_stream=base_stream, workers=workers)
    return ImageSumEstimate(est.value, est.sem, replicas, est.censored,
                            period, cutoff, tail)
