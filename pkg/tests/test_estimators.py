import numpy as np
import pytest

from perclab.estimators import (coupling_violations, fit_mass,
                                halfspace_plane_count, image_sum, one_arm,
                                one_arm_distance, one_arm_extent,
                                shell_profile, slab_counts,
                                solve_torus_threshold, sum_two_point,
                                susceptibility, torus_preimages,
                                torus_two_point, two_point)
from perclab.explore import Caps
from perclab.lattice import Intersection, ModelSpec, Slab, pack_array
from perclab.randomness import EdgeField

from conftest import within_se

SEED = 20260816
FIELD = EdgeField(SEED)

CHAIN = ModelSpec(1, "lattice")
SQUARE = ModelSpec(2, "lattice")


# -- exact laws on the line ----------------------------------------------------


def test_two_point_chain_law():
    p = 0.6
    for n in (1, 3, 6):
        est = two_point(CHAIN, FIELD, (n,), p=p, replicas=20000)
        assert est.censored == 0 and not est.unreliable
        assert within_se(est.probability, p ** n, est.sem)


def test_two_point_unit_square_vs_closed_form():
    # single plaquette: both length-2 routes, minus the double count
    region = Intersection(Slab(0, 0, 1), Slab(1, 0, 1))
    p = 0.4
    exact = 2 * p ** 2 - p ** 4
    est = two_point(SQUARE, FIELD, (1, 1), p=p, replicas=30000, region=region)
    assert within_se(est.probability, exact, est.sem)


def test_susceptibility_chain_law():
    p = 0.5
    est = susceptibility(CHAIN, FIELD, p=p, replicas=20000)
    assert est.censored == 0
    assert within_se(est.value, (1 + p) / (1 - p), est.sem)


def test_one_arm_chain_laws():
    p, rho = 0.7, 4
    exact = 2 * p ** rho - p ** (2 * rho)     # a full ray to either side
    ext = one_arm_extent(CHAIN, FIELD, rho, p=p, replicas=20000)
    assert within_se(ext.probability, exact, ext.sem)
    # on the line graph distance equals displacement
    dist = one_arm_distance(CHAIN, FIELD, rho, p=p, replicas=20000)
    assert within_se(dist.probability, exact, dist.sem)


def test_one_arm_dispatch_and_validation():
    kw = dict(p=0.4, replicas=500)
    a = one_arm(CHAIN, FIELD, 3, metric="extent", **kw)
    b = one_arm_extent(CHAIN, FIELD, 3, **kw)
    assert a.probability == b.probability and a.hits == b.hits
    c = one_arm(CHAIN, FIELD, 3, metric="intrinsic", **kw)
    d = one_arm_distance(CHAIN, FIELD, 3, **kw)
    assert c.probability == d.probability
    with pytest.raises(ValueError):
        one_arm(CHAIN, FIELD, 3, metric="sideways", **kw)
    with pytest.raises(ValueError):
        one_arm_extent(ModelSpec(1, "torus", period=9), FIELD, 2, **kw)
    with pytest.raises(ValueError):
        one_arm_extent(CHAIN, FIELD, 0, **kw)
    with pytest.raises(ValueError):
        one_arm_distance(CHAIN, FIELD, 0, **kw)


# -- censoring accounting --------------------------------------------------------


def test_censoring_flags_and_exclusion():
    est = two_point(SQUARE, FIELD, (1, 0), p=0.55, replicas=400,
                    caps=Caps(max_volume=32))
    assert est.censored > 4                   # supercritical, tiny cap
    assert est.unreliable
    assert est.effective_replicas == 400 - est.censored


def test_all_censored_raises():
    with pytest.raises(RuntimeError, match="censored"):
        susceptibility(SQUARE, FIELD, p=1.0, replicas=50,
                       caps=Caps(max_volume=16))


# -- worker- and stream-invariance -----------------------------------------------


def test_worker_count_invariance():
    kw = dict(p=0.45, replicas=3000)
    one = two_point(SQUARE, FIELD, (2, 1), workers=1, **kw)
    four = two_point(SQUARE, FIELD, (2, 1), workers=4, **kw)
    assert (one.probability, one.sem, one.hits, one.censored) == \
        (four.probability, four.sem, four.hits, four.censored)
    s1 = susceptibility(SQUARE, FIELD, workers=1, **kw)
    s4 = susceptibility(SQUARE, FIELD, workers=4, **kw)
    assert (s1.value, s1.sem) == (s4.value, s4.sem)


def test_base_stream_defaults_to_field_stream():
    est0 = two_point(CHAIN, FIELD, (2,), p=0.5, replicas=1000)
    shifted = two_point(CHAIN, FIELD.with_stream(17), (2,), p=0.5,
                        replicas=1000)
    pinned = two_point(CHAIN, FIELD, (2,), p=0.5, replicas=1000,
                       base_stream=17)
    assert shifted.hits == pinned.hits
    assert est0.hits != shifted.hits          # different replica windows


# -- multi-target sums ------------------------------------------------------------


def test_sum_two_point_matches_singles():
    p = 0.5
    targets = [(1,), (-2,), (4,)]
    est, keys, probs, sems = sum_two_point(CHAIN, FIELD, targets, p=p,
                                           replicas=20000, per_target=True)
    assert abs(est.value - probs.sum()) < 1e-12
    exact = sum(p ** abs(t[0]) for t in targets)
    assert abs(est.value - exact) < 4 * est.sem + 3 * max(sems)
    # each per-target column reproduces a standalone run bit for bit
    for t in targets:
        single = two_point(CHAIN, FIELD, t, p=p, replicas=20000)
        idx = int(np.searchsorted(keys, pack_array(
            np.array([t], dtype=np.int64))[0]))
        assert probs[idx] == single.probability
        assert sems[idx] == single.sem


def test_sum_two_point_validation():
    with pytest.raises(ValueError):
        sum_two_point(CHAIN, FIELD, [], p=0.5, replicas=10)
    with pytest.raises(ValueError):
        sum_two_point(CHAIN, FIELD, [(1,), (1,)], p=0.5, replicas=10)
    with pytest.raises(RuntimeError, match="censor"):
        sum_two_point(SQUARE, FIELD, [(1, 0)], p=0.6, replicas=400,
                      caps=Caps(max_volume=32), per_target=True)


# -- plane counts ------------------------------------------------------------------


def test_halfspace_plane_count_chain():
    p, r = 0.6, 3
    est = halfspace_plane_count(CHAIN, FIELD, r, p=p, replicas=20000)
    assert within_se(est.value, p ** r, est.sem)


def test_slab_counts_order():
    half, slab = slab_counts(SQUARE, FIELD, 3, p=0.45, replicas=4000)
    assert slab.value <= half.value + 1e-12   # shared streams, nested regions
    with pytest.raises(ValueError):
        slab_counts(ModelSpec(2, "lattice", edge_range=2), FIELD, 3,
                    p=0.3, replicas=10)
    with pytest.raises(ValueError):
        slab_counts(SQUARE, FIELD, -1, p=0.3, replicas=10)


# -- shell profiles ----------------------------------------------------------------


def test_shell_profile_chain():
    p = 0.6
    prof = shell_profile(CHAIN, FIELD, n_shell=4, p=p, replicas=20000)
    assert prof.censored == 0
    assert list(prof.shells) == [0, 1, 2, 3, 4]
    assert prof.rep_prob[0] == 1.0 and prof.shell_mean[0] == 1.0
    for k in range(1, 5):
        assert tuple(prof.rep_points[k]) == (-k,)
        assert within_se(prof.rep_prob[k], p ** k, prof.rep_sem[k])
        assert within_se(prof.shell_mean[k], 2 * p ** k, prof.shell_sem[k])


def test_shell_profile_validation():
    with pytest.raises(ValueError):
        shell_profile(CHAIN, FIELD, n_shell=-1, p=0.5, replicas=10)
    with pytest.raises(ValueError):
        shell_profile(ModelSpec(1, "torus", period=8), FIELD, n_shell=5,
                      p=0.5, replicas=10)


# -- torus estimators ---------------------------------------------------------------


def test_torus_two_point_cycle_law():
    r, p = 5, 0.55
    model = ModelSpec(1, "torus", period=r)
    tt = torus_two_point(model, FIELD, p=p, replicas=40000, n_splits=4)
    assert tt.censored == 0
    v0, s0 = tt.value_at((0,))
    assert v0 == 1.0 and s0 == 0.0
    for k in (1, 2):
        exact = p ** k + p ** (r - k) - p ** r    # two arcs, minus overlap
        v, s = tt.value_at((k,))
        assert within_se(v, exact, max(s, 1e-4))
        vneg, _ = tt.value_at((-k,))
        assert vneg == tt.value_at((r - k,))[0]


def test_torus_two_point_validation():
    with pytest.raises(ValueError):
        torus_two_point(CHAIN, FIELD, p=0.5, replicas=100)
    model = ModelSpec(1, "torus", period=5)
    with pytest.raises(ValueError):
        torus_two_point(model, FIELD, p=0.5, replicas=4, n_splits=8)


def test_solve_torus_threshold():
    model = ModelSpec(2, "torus", period=4)
    res = solve_torus_threshold(model, FIELD, lam=1.0, replicas=4000,
                                tol_p=1e-3)
    assert res.target == pytest.approx(16 ** (1.0 / 3.0))
    assert abs(res.chi - res.target) < max(4 * res.chi_sem, 0.25)
    assert res.bracket[0] <= res.p <= res.bracket[1]
    assert 0.0 < res.p < 1.0
    with pytest.raises(ValueError):
        solve_torus_threshold(SQUARE, FIELD, replicas=10)
    with pytest.raises(ValueError):
        solve_torus_threshold(model, FIELD, lam=100.0, replicas=10)


# -- couplings ----------------------------------------------------------------------


def test_coupling_violations_none():
    # both densities safely subcritical so no exploration hits the cap
    rep = coupling_violations(SQUARE, FIELD, 0.25, 0.4, replicas=2000,
                              caps=Caps(max_volume=8192))
    assert rep.consistent
    assert rep.replicas == 2000
    with pytest.raises(ValueError):
        coupling_violations(SQUARE, FIELD, 0.5, 0.3, replicas=10)


# -- decay-rate fits ----------------------------------------------------------------


def test_fit_mass_exact_recovery():
    series = {n: (np.exp(3.0 - 0.7 * n), 1e-9) for n in range(1, 11)}
    fit = fit_mass(series)
    assert fit.rate == pytest.approx(0.7, abs=1e-9)
    assert fit.intercept == pytest.approx(3.0, abs=1e-8)
    assert fit.residual < 1e-9
    assert fit.fit_window == (1, 10) and fit.n_points == 10
    assert fit.extrapolate(12) == pytest.approx(np.exp(3.0 - 0.7 * 12))


def test_fit_mass_with_power_correction():
    series = {n: (n ** -1.5 * np.exp(-0.4 * n), 1e-12) for n in range(1, 12)}
    fit = fit_mass(series, correction=1.5)
    assert fit.rate == pytest.approx(0.4, abs=1e-9)
    assert fit.correction == 1.5


def test_fit_mass_window_and_validation():
    # the zero at n=4 splits the series; the longer right run wins
    series = {n: (np.exp(-n), 1e-9) for n in range(1, 10)}
    series[4] = (0.0, 1e-9)
    fit = fit_mass(series)
    assert fit.fit_window == (5, 9)
    with pytest.raises(ValueError):
        fit_mass({})
    with pytest.raises(ValueError):
        fit_mass({0: (1.0, 1e-9), 1: (0.5, 1e-9)})
    with pytest.raises(ValueError, match="usable"):
        fit_mass({n: (np.exp(-n), 1.0) for n in range(1, 9)})  # noisy
    grow = fit_mass({n: (np.exp(0.3 * n), 1e-9) for n in range(1, 6)},
                    min_points=5)
    assert grow.rate == 0.0                   # clamped: rates are decay rates


# -- image sums ---------------------------------------------------------------------


def test_torus_preimages():
    pts = torus_preimages((1, 0), 4, 1)
    assert len(pts) == 9 and (1, 0) in pts and (-3, 4) in pts
    pts = torus_preimages((1,), 4, 1, include_center=False)
    assert set(pts) == {(-3,), (5,)}
    assert torus_preimages((1,), 4, 0, include_center=False) == []
    with pytest.raises(ValueError):
        torus_preimages((1,), 4, -1)


def test_image_sum_chain():
    p = 0.5
    est = image_sum(CHAIN, FIELD, (1,), 4, cutoff=1, p=p, replicas=30000,
                    include_center=True)
    exact = p + p ** 3 + p ** 5               # images at 1, -3, 5
    assert within_se(est.value, exact, est.sem)
    assert est.tail_bound is None and est.upper is None
    side = image_sum(CHAIN, FIELD, (1,), 4, cutoff=1, p=p, replicas=30000)
    assert within_se(side.value, p ** 3 + p ** 5, side.sem)


def test_image_sum_tail_bound():
    p = 0.5
    series = {n: (p ** n, 1e-9) for n in range(1, 9)}
    mass = fit_mass(series)                   # rate = ln 2 exactly
    est = image_sum(CHAIN, FIELD, (1,), 4, cutoff=1, p=p, replicas=5000,
                    mass=mass)
    assert est.tail_bound is not None
    # true discarded mass: images at 1 + 4u for |u| > 1
    truth = sum(p ** abs(1 + 4 * u) for u in range(-60, 61) if abs(u) > 1)
    assert est.tail_bound >= truth - 1e-12
    assert est.upper == est.value + est.tail_bound
    empty = image_sum(CHAIN, FIELD, (1,), 4, cutoff=0, p=p, replicas=10,
                      include_center=False)
    assert empty.value == 0.0 and empty.sem == 0.0


def test_image_sum_validation():
    torus = ModelSpec(1, "torus", period=8)
    with pytest.raises(ValueError):
        image_sum(torus, FIELD, (1,), 4, cutoff=1, p=0.5, replicas=10)
    with pytest.raises(ValueError):
        image_sum(CHAIN, FIELD, (1,), 0, cutoff=1, p=0.5, replicas=10)
    with pytest.raises(ValueError):
        image_sum(CHAIN, FIELD, (1,), 4, cutoff=-1, p=0.5, replicas=10)
