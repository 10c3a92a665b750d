import itertools

import numpy as np
import pytest

from perclab.diagrams import (Grid, convolve, fold_periodic, from_function,
                              load_grid, point_mass, power_convolution_ratio,
                              power_grid, power_profile, radial_convolution,
                              save_grid, shell_pair_count, triangle_diagrams)


def random_grid(rng, d, side, wrap, sparsity=0.0):
    vals = rng.uniform(0.0, 1.0, (side,) * d)
    if sparsity:
        vals[rng.random(vals.shape) < sparsity] = 0.0
    return Grid(vals, wrap)


# -- Grid ----------------------------------------------------------------------


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(np.zeros((3, 4)), wrap=False)          # not hypercubic
    with pytest.raises(ValueError):
        Grid(np.zeros((4, 4)), wrap=False)          # even side has no center
    with pytest.raises(ValueError):
        Grid(-np.ones((3, 3)), wrap=False)
    with pytest.raises(ValueError):
        Grid(np.full((3, 3), np.nan), wrap=False)
    Grid(np.zeros((4, 4)), wrap=True)                # even periods are fine
    with pytest.raises(ValueError):
        Grid(np.zeros((3,) * 2), wrap=True).radius
    with pytest.raises(ValueError):
        Grid(np.zeros((3,) * 2), wrap=False).period


def test_grid_lookup_truncated():
    g = power_grid(2, 3, -1.0)
    assert g.radius == 3 and g.side == 7 and g.dimension == 2
    assert g.value_at((0, 0)) == 1.0
    assert g.value_at((2, 0)) == 0.5
    assert g.value_at((4, 0)) == 0.0                 # outside the box
    # the bracket plateaus at 1 on the center block; ties go to the first
    # index in scan order
    assert g.max_location() == ((-1, -1), 1.0)
    peaked = from_function(lambda x: 1.0 / (1 + sum(c * c for c in x)), 2, 3)
    assert peaked.max_location() == ((0, 0), 1.0)


def test_grid_lookup_periodic():
    g = point_mass(2, 5, wrap=True, value=2.0)
    assert g.period == 5 and g.total() == 2.0
    assert g.value_at((0, 0)) == 2.0
    assert g.value_at((5, 5)) == 2.0                 # coordinates wrap
    assert g.value_at((-5, 10)) == 2.0
    assert g.max_location() == ((0, 0), 2.0)


def test_symmetry_defect():
    g = power_grid(2, 3, -1.5)
    assert g.symmetry_defect() == 0.0
    g.values[1, 3] += 0.125
    assert g.symmetry_defect() >= 0.125
    # torus grid built from a negation-invariant per-axis profile
    hd = np.array([1.0, 0.5, 0.3, 0.5])
    t = Grid(np.multiply.outer(hd, hd), wrap=True)
    assert t.symmetry_defect() == 0.0
    t.values[1, 2] += 0.25
    assert t.symmetry_defect() >= 0.25


# -- convolution ---------------------------------------------------------------


def test_convolve_validation(rng):
    a = random_grid(rng, 2, 5, wrap=False)
    b = random_grid(rng, 2, 5, wrap=True)
    with pytest.raises(ValueError):
        convolve(a, b)
    with pytest.raises(ValueError):
        convolve(a, random_grid(rng, 2, 7, wrap=False), decay=6.0)
    with pytest.raises(ValueError):
        convolve(a, a, method="magic", decay=6.0)
    with pytest.raises(ValueError):
        convolve(a, a)                               # missing decay


def test_point_mass_is_identity(rng):
    b = random_grid(rng, 2, 5, wrap=True)
    out = convolve(point_mass(2, 5, wrap=True), b)
    assert np.array_equal(out.values, b.values) and out.tail_bound == 0.0
    bt = random_grid(rng, 2, 7, wrap=False)
    out = convolve(point_mass(2, 3, wrap=False), bt, decay=8.0)
    assert np.array_equal(out.values, bt.values)
    assert 0.0 < out.tail_bound < np.inf


def test_direct_vs_fft_periodic(rng):
    for d, side in ((1, 9), (2, 8), (3, 5)):
        a = random_grid(rng, d, side, wrap=True, sparsity=0.3)
        b = random_grid(rng, d, side, wrap=True)
        va = convolve(a, b, method="direct").values
        vb = convolve(a, b, method="fft").values
        assert np.abs(va - vb).max() < 1e-12
        # total mass is multiplicative under cyclic convolution
        assert abs(va.sum() - a.total() * b.total()) < 1e-10


def test_direct_vs_fft_truncated(rng):
    for d, side in ((1, 11), (2, 9)):
        a = random_grid(rng, d, side, wrap=False, sparsity=0.3)
        b = random_grid(rng, d, side, wrap=False)
        ca = convolve(a, b, method="direct", decay=6.0)
        cb = convolve(a, b, method="fft", decay=6.0)
        assert np.abs(ca.values - cb.values).max() < 1e-12
        assert ca.tail_bound == cb.tail_bound
        # the box cutoff only discards mass
        assert ca.total() <= a.total() * b.total() + 1e-10


def test_truncation_bound_blows_up_without_decay(rng):
    a = random_grid(rng, 2, 5, wrap=False)
    assert np.isinf(convolve(a, a, decay=2.0).tail_bound)
    assert np.isfinite(convolve(a, a, decay=6.0).tail_bound)


def test_fold_periodic_matches_cyclic_convolution(rng):
    # with both supports small enough for the box to hold the full
    # convolution, folding afterwards equals convolving the folds
    d, rho, period = 2, 6, 5
    side = 2 * rho + 1
    a = np.zeros((side,) * d)
    b = np.zeros((side,) * d)
    a[rho - 2:rho + 3, rho - 2:rho + 3] = rng.uniform(0.0, 1.0, (5, 5))
    b[rho - 3:rho + 4, rho - 3:rho + 4] = rng.uniform(0.0, 1.0, (7, 7))
    ga, gb = Grid(a, wrap=False), Grid(b, wrap=False)
    folded_after = fold_periodic(convolve(ga, gb, decay=50.0), period)
    folded_first = convolve(fold_periodic(ga, period),
                            fold_periodic(gb, period))
    assert np.abs(folded_after.values - folded_first.values).max() < 1e-12
    assert abs(folded_after.total() - ga.total() * gb.total()) < 1e-10


def test_fold_periodic_validation(rng):
    g = random_grid(rng, 2, 5, wrap=True)
    with pytest.raises(ValueError):
        fold_periodic(g, 3)
    t = random_grid(rng, 2, 5, wrap=False)
    with pytest.raises(ValueError):
        fold_periodic(t, 0)
    assert abs(fold_periodic(t, 3).total() - t.total()) < 1e-12


def test_triangle_diagrams_wiring(rng):
    tau = random_grid(rng, 2, 5, wrap=False)
    tau_t = random_grid(rng, 2, 5, wrap=True)
    bubble, triangle, torus_tri = triangle_diagrams(tau, tau_t, decay=6.0)
    want_b = convolve(tau, tau, decay=6.0)
    assert np.array_equal(bubble.values, want_b.values)
    want_t = convolve(want_b, tau, decay=2 * 6.0 - 2)
    assert np.array_equal(triangle.values, want_t.values)
    want_tt = convolve(convolve(tau_t, tau_t), tau_t)
    assert np.abs(torus_tri.values - want_tt.values).max() < 1e-12
    with pytest.raises(ValueError):
        triangle_diagrams(tau_t, tau_t)
    with pytest.raises(ValueError):
        triangle_diagrams(tau, tau)


# -- shell-exact radial convolution ---------------------------------------------


def brute_windowed(f, g, x, cutoff):
    d = len(x)
    total = 0.0
    for u in itertools.product(range(-cutoff, cutoff + 1), repeat=d):
        m2 = max(abs(xc - uc) for xc, uc in zip(x, u))
        m1 = max(abs(c) for c in u)
        total += f(max(m1, 1)) * g(max(m2, 1))
    return total


def test_shell_pair_count_brute():
    for x in ((0, 0), (1, 0), (2, 3), (-4, 1)):
        for m1 in range(5):
            for m2 in range(6):
                n = sum(1 for u in itertools.product(range(-8, 9), repeat=2)
                        if max(abs(c) for c in u) == m1
                        and max(abs(a - b) for a, b in zip(x, u)) == m2)
                assert shell_pair_count(x, m1, m2) == n


def test_radial_convolution_matches_brute():
    f = power_profile(-2.0)
    g = power_profile(-3.0)
    for d, x, cutoff in ((1, (3,), 9), (2, (2, -1), 6), (2, (0, 0), 5)):
        val, tail = radial_convolution(f, g, x, cutoff=cutoff, tail_decay=5.0)
        brute = brute_windowed(f, g, x, cutoff)
        assert abs(val - brute) < 1e-12 * max(brute, 1.0)
        assert tail >= 0.0 and np.isfinite(tail)


def test_radial_convolution_tail_is_a_bound():
    f = g = power_profile(-3.0)
    v1, t1 = radial_convolution(f, g, (2,), cutoff=8, tail_decay=6.0)
    v2, t2 = radial_convolution(f, g, (2,), cutoff=64, tail_decay=6.0)
    assert v1 <= v2 <= v1 + t1                       # monotone, bracketed
    assert t2 < t1
    _, t_bare = radial_convolution(f, g, (2,), cutoff=8, tail_terms=32)
    assert np.isinf(t_bare)                          # no declared decay


def test_power_convolution_ratio_high_dimension():
    # two inverse-quintic profiles in dimension 7 convolve to an inverse
    # cube, with a finite constant -- the estimate behind every diagram
    ratio = power_convolution_ratio(7, 2, 2, max_norm=6, cutoff=16)
    assert 2.0 <= ratio < 1e4


# -- serialization ---------------------------------------------------------------


def test_save_load_roundtrip(rng, tmp_path):
    for wrap in (False, True):
        g = random_grid(rng, 2, 5, wrap=wrap)
        g = Grid(g.values, wrap, tail_bound=0.25)
        path = tmp_path / ("wrap.csv" if wrap else "box.csv")
        meta_path = save_grid(g, path, seed=99, extra={"note": "case"})
        back, meta = load_grid(path)
        assert np.array_equal(back.values, g.values)
        assert back.wrap == wrap and back.tail_bound == 0.25
        assert meta["seed"] == 99 and meta["note"] == "case"
        assert meta_path.endswith(".json")
