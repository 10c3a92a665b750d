"""Deterministic convolutions of connectivity grids.

Grids hold nonnegative values on either a truncated box [-radius, radius]^d
(axis index i is coordinate i - radius) or a periodic d-torus (axis index is
the coordinate mod the period).  Convolution is a direct double sum by
default -- small desk-scale grids, bit-for-bit reproducible -- with an FFT
path behind the same contract for larger grids.  On periodic grids the
cyclic convolution is exact; on truncated grids the box cutoff is quantified
by an explicit tail bound computed from a caller-declared decay exponent,
never dropped silently.

Dense arrays only make sense at desk scale (a period-12 torus in dimension 7
is already 3.6e7 cells).  Power-law convolution bounds in high dimension are
therefore evaluated without any dense grid, through exact counts of
sup-norm-shell intersections.
"""

import csv
import json

import numpy as np

from .lattice import jbracket

# direct convolution costs side^(2d) multiplies; above this, auto mode
# switches to the FFT path
_DIRECT_CELL_LIMIT = 1 << 22


class Grid:
    """Dense nonnegative values on a box or a torus.

    tail_bound carries the cutoff error bound attached by truncated
    convolutions (0.0 means exact within floating point).
    """

    __slots__ = ("values", "wrap", "tail_bound")

    def __init__(self, values, wrap, tail_bound=0.0):
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.ndim < 1:
            raise ValueError("grid values must have at least one axis")
        side = values.shape[0]
        if any(s != side for s in values.shape):
            raise ValueError("grid must be hypercubic, got %r" % (values.shape,))
        if not wrap and side % 2 == 0:
            raise ValueError("truncated grids need an odd side (a center)")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid values must be finite")
        if np.any(values < 0.0):
            raise ValueError("grid values must be >= 0")
        self.values = values
        self.wrap = bool(wrap)
        self.tail_bound = float(tail_bound)

    @property
    def dimension(self):
        return self.values.ndim

    @property
    def side(self):
        return self.values.shape[0]

    @property
    def radius(self):
        if self.wrap:
            raise ValueError("radius applies to truncated grids")
        return (self.side - 1) // 2

    @property
    def period(self):
        if not self.wrap:
            raise ValueError("period applies to periodic grids")
        return self.side

    def _index(self, x):
        x = tuple(int(c) for c in x)
        if len(x) != self.dimension:
            raise ValueError("point dimension mismatch")
        if self.wrap:
            return tuple(c % self.side for c in x)
        rho = self.radius
        if any(abs(c) > rho for c in x):
            return None
        return tuple(c + rho for c in x)

    def value_at(self, x):
        """Value at a lattice point; 0.0 outside a truncated box."""
        idx = self._index(x)
        return 0.0 if idx is None else float(self.values[idx])

    def total(self):
        return float(self.values.sum())

    def max_location(self):
        """(coordinates, value) of the largest entry (first on ties)."""
        idx = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        if self.wrap:
            coords = tuple(int(i) for i in idx)
        else:
            coords = tuple(int(i) - self.radius for i in idx)
        return coords, float(self.values[idx])

    def symmetry_defect(self):
        """Largest deviation under axis swaps and sign flips.

        The grid group is generated by adjacent-axis transpositions and
        per-axis reflections, so checking generators checks the whole
        hyperoctahedral symmetry.
        """
        v = self.values
        d = self.dimension
        defect = 0.0
        for i in range(d - 1):
            perm = list(range(d))
            perm[i], perm[i + 1] = perm[i + 1], perm[i]
            defect = max(defect, float(np.abs(v - np.transpose(v, perm)).max()))
        for i in range(d):
            fl = np.flip(v, axis=i)
            if self.wrap:
                # index j -> -j mod period is a flip followed by a one-step roll
                fl = np.roll(fl, 1, axis=i)
            defect = max(defect, float(np.abs(v - fl).max()))
        return defect

    def __repr__(self):
        kind = "period=%d" % self.side if self.wrap else "radius=%d" % self.radius
        return "Grid(d=%d, %s, tail_bound=%g)" % (self.dimension, kind,
                                                  self.tail_bound)


def point_mass(d, size, *, wrap, value=1.0):
    """Unit mass at the origin: size is the period (wrap) or radius."""
    if wrap:
        values = np.zeros((size,) * d)
        values[(0,) * d] = value
    else:
        values = np.zeros((2 * size + 1,) * d)
        values[(size,) * d] = value
    return Grid(values, wrap)


def from_function(fn, d, radius):
    """Truncated grid sampled from fn(point) over the radius box."""
    side = 2 * radius + 1
    values = np.empty((side,) * d)
    for idx in np.ndindex(*values.shape):
        values[idx] = fn(tuple(i - radius for i in idx))
    return Grid(values, wrap=False)


def power_grid(d, radius, exponent):
    """Truncated grid of max(|x|_inf, 1)^exponent."""
    return from_function(lambda x: float(jbracket(x)) ** exponent, d, radius)


def _check_pair(a, b):
    if a.wrap != b.wrap:
        raise ValueError("cannot convolve periodic with truncated grids")
    if a.values.shape != b.values.shape:
        raise ValueError("grid shapes differ: %r vs %r"
                         % (a.values.shape, b.values.shape))


def _shell_size(d, k):
    if k == 0:
        return 1
    return (2 * k + 1) ** d - (2 * k - 1) ** d


def _power_tail(d, s, rho, terms=4096):
    """Upper bound on sum over |u|_inf > rho of max(|u|,1)^(-s)."""
    if s <= d:
        return float("inf")
    total = 0.0
    k = rho + 1
    stop = rho + terms
    while k <= stop:
        total += _shell_size(d, k) * float(k) ** (-s)
        k += 1
    # integral bound on the rest: shell(k) <= 2d(3k)^(d-1)
    total += 2 * d * 3.0 ** (d - 1) * float(stop) ** (d - s) / (s - d)
    return total


def _truncation_bound(a, b, decay):
    """Cutoff error of a box convolution, assuming both true functions obey
    value <= C * max(|x|,1)^(-decay) with C read off the grids."""
    d = a.dimension
    rho = a.radius
    s = float(decay)
    coords = np.arange(-rho, rho + 1)
    br = np.maximum(np.abs(coords), 1).astype(np.float64)
    w = br
    for _ in range(d - 1):
        w = np.maximum.outer(w, br)
    envelope = w ** s
    ca = float((a.values * envelope).max())
    cb = float((b.values * envelope).max())
    # a missing term has |u| > rho on at least one of the two factors
    return 2.0 * ca * cb * _power_tail(d, s, rho)


def _cyclic_direct(a, b):
    d = a.ndim
    out = np.zeros_like(a)
    axes = tuple(range(d))
    for idx in np.ndindex(*a.shape):
        w = a[idx]
        if w != 0.0:
            out += w * np.roll(b, idx, axis=axes)
    return out


def _cyclic_fft(a, b):
    axes = tuple(range(a.ndim))
    fa = np.fft.rfftn(a)
    fb = np.fft.rfftn(b)
    return np.fft.irfftn(fa * fb, s=a.shape, axes=axes)


def _box_direct(a, b):
    d = a.ndim
    S = a.shape[0]
    rho = (S - 1) // 2
    out = np.zeros_like(a)
    for idx in np.ndindex(*a.shape):
        w = a[idx]
        if w == 0.0:
            continue
        sl_out = []
        sl_in = []
        for i in idx:
            s = i - rho
            sl_out.append(slice(max(s, 0), S + min(s, 0)))
            sl_in.append(slice(max(-s, 0), S + min(-s, 0)))
        out[tuple(sl_out)] += w * b[tuple(sl_in)]
    return out


def _box_fft(a, b):
    S = a.shape[0]
    rho = (S - 1) // 2
    axes = tuple(range(a.ndim))
    full = tuple(2 * S - 1 for _ in a.shape)
    fa = np.fft.rfftn(a, s=full, axes=axes)
    fb = np.fft.rfftn(b, s=full, axes=axes)
    conv = np.fft.irfftn(fa * fb, s=full, axes=axes)
    crop = tuple(slice(rho, rho + S) for _ in a.shape)
    return conv[crop]


def convolve(a, b, *, method="auto", decay=None):
    """Convolution of two grids of matching geometry.

    Periodic grids convolve cyclically and exactly.  Truncated grids sum
    over the box only, so a decay exponent for the true underlying
    functions must be declared; the induced cutoff error lands in the
    result's tail_bound (infinite when the declared decay cannot control
    the tail, i.e. decay <= dimension).
    """
    _check_pair(a, b)
    if method not in ("auto", "direct", "fft"):
        raise ValueError("method must be auto, direct, or fft")
    n = a.values.size
    if method == "auto":
        method = "direct" if n * n <= _DIRECT_CELL_LIMIT else "fft"
    if a.wrap:
        values = (_cyclic_direct if method == "direct" else _cyclic_fft)(
            a.values, b.values)
        tail = 0.0
    else:
        if decay is None:
            raise ValueError(
                "truncated convolution needs a declared decay exponent")
        values = (_box_direct if method == "direct" else _box_fft)(
            a.values, b.values)
        tail = _truncation_bound(a, b, decay)
    # the FFT path can leave ~1e-16-scale negative dust on exact zeros
    values = np.maximum(values, 0.0)
    return Grid(values, a.wrap, tail)


def triangle_diagrams(tau, tau_torus, *, decay=None, method="auto"):
    """Double and triple self-convolutions of two-point grids.

    Returns (bubble, triangle, torus_triangle): tau*tau and tau*tau*tau on
    the truncated lattice grid, and the cyclic triple convolution of the
    torus grid.  The second truncated stage reuses the convolution
    estimate for power tails: a pair of decay-s factors convolves to decay
    2s - d, which is what the bubble is declared to obey.
    """
    if tau.wrap:
        raise ValueError("tau must be a truncated lattice grid")
    if not tau_torus.wrap:
        raise ValueError("tau_torus must be a periodic grid")
    bubble = convolve(tau, tau, method=method, decay=decay)
    decay2 = None if decay is None else 2.0 * decay - tau.dimension
    triangle = convolve(bubble, tau, method=method, decay=decay2)
    bubble_t = convolve(tau_torus, tau_torus, method=method)
    torus_triangle = convolve(bubble_t, tau_torus, method=method)
    return bubble, triangle, torus_triangle


def fold_periodic(grid, period):
    """Wrap a truncated grid onto a torus by summing periodic images.

    Entry x of the result is the sum of grid values over all box points
    congruent to x mod period -- the torus mass a lattice function
    accumulates from its wrapped copies (cut off at the box edge).
    """
    if grid.wrap:
        raise ValueError("fold_periodic starts from a truncated grid")
    period = int(period)
    if period < 1:
        raise ValueError("period must be >= 1")
    d = grid.dimension
    rho = grid.radius
    coords = (np.indices(grid.values.shape).reshape(d, -1) - rho) % period
    out = np.zeros((period,) * d)
    np.add.at(out, tuple(coords), grid.values.reshape(-1))
    return Grid(out, wrap=True, tail_bound=grid.tail_bound)


# ---------------------------------------------------------------------------
# shell-exact radial convolution (no dense arrays; any dimension)


def _box_pair_count(x, m1, m2):
    """|{u : |u|_inf <= m1 and |x-u|_inf <= m2}| by per-axis overlap."""
    if m1 < 0 or m2 < 0:
        return 0
    n = 1
    for c in x:
        lo = max(-m1, c - m2)
        hi = min(m1, c + m2)
        if hi < lo:
            return 0
        n *= hi - lo + 1
    return n


def shell_pair_count(x, m1, m2):
    """|{u : |u|_inf = m1 and |x-u|_inf = m2}| (inclusion-exclusion)."""
    return (_box_pair_count(x, m1, m2) - _box_pair_count(x, m1 - 1, m2)
            - _box_pair_count(x, m1, m2 - 1)
            + _box_pair_count(x, m1 - 1, m2 - 1))


def radial_convolution(f, g, x, *, cutoff, tail_decay=None, tail_terms=4096):
    """(f o g)(x) for radially-decaying profiles, without dense grids.

    f and g map a sup-norm bracket m >= 1 to a nonnegative, nonincreasing
    weight; the convolution sums f(|u|)g(|x-u|) over all u in Z^d.  The sum
    over |u|_inf <= cutoff is exact via shell-pair counts.  The remainder is
    bounded using monotonicity of g: tail_terms shells are summed explicitly,
    and anything beyond them is closed out by an integral bound that needs a
    declared overall decay f(k)g(k-|x|) <= C k^-tail_decay, with C fitted at
    the last summed shell (exact for power-law profiles, where the fitted
    ratio only improves with k).  Without tail_decay > d the remainder is
    infinite unless the explicit shells already underflow.  Returns
    (value, tail_bound).
    """
    x = tuple(int(c) for c in x)
    d = len(x)
    xn = max((abs(c) for c in x), default=0)
    total = 0.0
    for m1 in range(cutoff + 1):
        lo = max(0, m1 - xn)
        for m2 in range(lo, m1 + xn + 1):
            n = shell_pair_count(x, m1, m2)
            if n:
                total += n * f(max(m1, 1)) * g(max(m2, 1))
    # |x-u| >= |u| - |x|, g nonincreasing, and a shell has shell_size points
    tail = 0.0
    k = cutoff + 1
    stop = cutoff + tail_terms
    pair = 0.0
    remainder = float("inf")
    while k <= stop:
        pair = f(k) * g(max(k - xn, 1))
        term = _shell_size(d, k) * pair
        tail += term
        if term <= 1e-18 * max(tail, 1e-300):
            remainder = 0.0
            break
        k += 1
    else:
        if tail_decay is not None and tail_decay > d:
            s = float(tail_decay)
            c = pair * float(stop) ** s
            # shell(k) <= 2d(3k)^(d-1), then integrate k^(d-1-s) past stop
            remainder = (c * 2 * d * 3.0 ** (d - 1)
                         * float(stop) ** (d - s) / (s - d))
    return total, tail + remainder


def power_profile(exponent):
    """Radial profile m -> m**exponent for the shell-exact convolution."""
    e = float(exponent)
    return lambda m: float(m) ** e


def power_convolution_ratio(d, a, b, *, max_norm=16, cutoff=64):
    """Largest (f*g)(x) / <x>^(a+b-d) over axis points with 1 <= <x> <= max_norm,
    where f = <.>^(a-d) and g = <.>^(b-d); the tail bound is included, so the
    reported ratio is an upper bound on the truth.

    Finiteness of this ratio is the elementary estimate that powers every
    diagram bound; the value itself is reported, not assumed.
    """
    f = power_profile(a - d)
    g = power_profile(b - d)
    worst = 0.0
    for k in range(1, max_norm + 1):
        x = (k,) + (0,) * (d - 1)
        val, tail = radial_convolution(f, g, x, cutoff=cutoff,
                                       tail_decay=2 * d - a - b)
        worst = max(worst, (val + tail) / float(k) ** (a + b - d))
    return worst


# ---------------------------------------------------------------------------
# serialization: CSV of (coords..., value) plus a JSON metadata sidecar


def _meta_path(csv_path):
    return str(csv_path) + ".json"


def save_grid(grid, csv_path, *, seed=None, extra=None):
    """Write (coords..., value) rows plus a JSON sidecar <csv_path>.json.

    Truncated grids list signed box coordinates; periodic grids list
    representatives 0..period-1.  Values carry 17 significant digits, so
    the round trip is exact.
    """
    d = grid.dimension
    header = ["x%d" % i for i in range(d)] + ["value"]
    offset = 0 if grid.wrap else grid.radius
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for idx in np.ndindex(*grid.values.shape):
            row = [str(i - offset) for i in idx]
            row.append("%.17g" % grid.values[idx])
            w.writerow(row)
    meta = {
        "dimension": d,
        "wrap": grid.wrap,
        ("period" if grid.wrap else "radius"): grid.side if grid.wrap
        else grid.radius,
        "tail_bound": grid.tail_bound,
        "seed": seed,
    }
    if extra:
        meta.update(extra)
    with open(_meta_path(csv_path), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return _meta_path(csv_path)


def load_grid(csv_path):
    """Inverse of save_grid: returns (Grid, metadata dict)."""
    with open(_meta_path(csv_path)) as fh:
        meta = json.load(fh)
    d = int(meta["dimension"])
    wrap = bool(meta["wrap"])
    side = int(meta["period"]) if wrap else 2 * int(meta["radius"]) + 1
    offset = 0 if wrap else int(meta["radius"])
    values = np.zeros((side,) * d)
    with open(csv_path, newline="") as fh:
        rd = csv.reader(fh)
        next(rd)
        for row in rd:
            idx = tuple(int(c) + offset for c in row[:d])
            values[idx] = float(row[d])
    return Grid(values, wrap, float(meta.get("tail_bound", 0.0))), meta
