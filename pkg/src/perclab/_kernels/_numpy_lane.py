"""numpy lane: pure-numpy fallback for the jit kernels.

Mirrors _numba_lane bit for bit: same uniforms, same candidate scan order
(sorted level, then offset order), same truncation points, same reason
codes.  Per level the heavy math (neighbor generation, box tests, hashing)
is vectorized; the order-sensitive tail (dedupe, caps, target checks) runs
in a short python loop over the open bonds only.

Set PERCLAB_NO_NUMBA=1 to select this lane; it is also the reference lane
the cross-lane equality tests compare against.
"""

import numpy as np

from ..lattice import pack_array, unpack_array, pack_point
from ..randomness import mix64

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = 2.0 ** -53


def _mix_vec(z):
    z = z + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _chain_vec(seed, tag, stream, ka, kb):
    """Vector edge hash; seed/tag/stream are python ints, ka/kb uint64 arrays."""
    h0 = mix64(mix64(mix64(seed) ^ tag) ^ stream)
    lo = np.minimum(ka, kb)
    hi = np.maximum(ka, kb)
    h = _mix_vec(np.uint64(h0) ^ lo)
    return _mix_vec(h ^ hi)


def pair_uniforms(seed, tag, stream, ka, kb):
    h = _chain_vec(int(seed), int(tag), int(stream), ka, kb)
    return (h >> np.uint64(11)) * _INV53


def _canon_vec(cand, r, f):
    if r > 0:
        return ((cand + f) % r) - f
    return cand


class _Run:
    """Mutable state of one mirrored exploration."""

    __slots__ = ("visited", "order", "n_vis", "hit", "hit_dist", "reason",
                 "plane_cnt", "edges", "max_dist", "radius_flag")

    def __init__(self):
        self.visited = {}
        self.order = []
        self.n_vis = 0
        self.hit = False
        self.hit_dist = -1
        self.reason = 0
        self.plane_cnt = 0
        self.edges = []
        self.max_dist = 0
        self.radius_flag = False


def _bfs_mirror(seed, tag, stream,
                d, L, r, offsets, p, src,
                eff_lo, eff_hi, user_lo, user_hi,
                max_volume, max_intrinsic,
                tgt_lo, tgt_hi, tgt_on, tgt_negate, stop_on_target, tgt_dist,
                cp_on, cp_val, record_edges):
    st = _Run()
    seed = int(seed)
    tag = int(tag)
    stream = int(stream)
    f = r // 2
    n_off = offsets.shape[0]

    sk = np.uint64(pack_point(tuple(int(c) for c in src)))
    st.visited[int(sk)] = 0
    st.order.append(int(sk))
    st.n_vis = 1
    if tgt_on:
        inb = bool(np.all((src >= tgt_lo) & (src <= tgt_hi)))
        if inb != tgt_negate:
            st.hit = True
            st.hit_dist = 0
    if cp_on and src[0] == cp_val:
        st.plane_cnt = 1
    if st.hit and stop_on_target:
        return st

    frontier = np.array([sk], dtype=np.uint64)
    cur_d = 0
    intrinsic_flag = False
    while frontier.size:
        if cur_d >= max_intrinsic:
            intrinsic_flag = True
            break
        parents = np.sort(frontier)
        pcoords = unpack_array(parents, d)
        cand = (pcoords[:, None, :] + offsets[None, :, :]).reshape(-1, d)
        cand = _canon_vec(cand, r, f)
        in_eff = np.all((cand >= eff_lo) & (cand <= eff_hi), axis=1)
        in_user = np.all((cand >= user_lo) & (cand <= user_hi), axis=1)
        radius_events = in_user & ~in_eff
        full_idx = np.nonzero(in_eff)[0]
        kc = cand[in_eff]
        vk = pack_array(kc)
        uk = np.repeat(parents, n_off)[in_eff]
        u = (_chain_vec(seed, tag, stream, uk, vk) >> np.uint64(11)) * _INV53
        om = u < p
        ovk = vk[om]
        ouk = uk[om]
        oc = kc[om]
        oidx = full_idx[om]

        cut = cand.shape[0]  # examined-candidate bound (exclusive of none)
        aborted = False
        new_keys = []
        for t in range(ovk.shape[0]):
            key = int(ovk[t])
            pku = int(ouk[t])
            if key in st.visited:
                if record_edges:
                    st.edges.append((min(pku, key), max(pku, key)))
                continue
            if st.n_vis >= max_volume:
                st.reason = 1
                cut = oidx[t]
                aborted = True
                break
            nd = cur_d + 1
            st.visited[key] = nd
            st.order.append(key)
            st.n_vis += 1
            new_keys.append(key)
            if record_edges:
                st.edges.append((min(pku, key), max(pku, key)))
            if nd > st.max_dist:
                st.max_dist = nd
            if cp_on and oc[t, 0] == cp_val:
                st.plane_cnt += 1
            took = False
            if tgt_on:
                inb = bool(np.all((oc[t] >= tgt_lo) & (oc[t] <= tgt_hi)))
                if inb != tgt_negate:
                    took = True
            if tgt_dist > 0 and nd == tgt_dist:
                took = True
            if took and not st.hit:
                st.hit = True
                st.hit_dist = nd
                if stop_on_target:
                    cut = oidx[t]
                    aborted = True
                    break
        if aborted:
            if radius_events[:cut].any():
                st.radius_flag = True
            if st.reason == 0 and st.radius_flag:
                pass  # stop-on-target exits report reason 0, as in the jit lane
            if st.reason == 1:
                return st
            return st
        if radius_events.any():
            st.radius_flag = True
        frontier = np.array(new_keys, dtype=np.uint64)
        cur_d += 1

    if st.reason == 0:
        if st.radius_flag:
            st.reason = 2
        elif intrinsic_flag:
            st.reason = 3
    return st


def explore_single(seed, tag, stream,
                   d, L, r, offsets, p, src,
                   eff_lo, eff_hi, user_lo, user_hi,
                   max_volume, max_intrinsic,
                   tgt_lo, tgt_hi, tgt_on, tgt_negate, stop_on_target, tgt_dist,
                   record_edges):
    st = _bfs_mirror(seed, tag, stream, d, L, r, offsets, p, src,
                     eff_lo, eff_hi, user_lo, user_hi,
                     max_volume, max_intrinsic,
                     tgt_lo, tgt_hi, tgt_on, tgt_negate, stop_on_target,
                     tgt_dist, False, 0, record_edges)
    keys = np.array(st.order, dtype=np.uint64)
    dists = np.array([st.visited[k] for k in st.order], dtype=np.int64)
    idx = np.lexsort((keys, dists))
    keys = keys[idx]
    dists = dists[idx]
    if st.edges:
        flat = np.array([v for e in st.edges for v in e], dtype=np.uint64)
    else:
        flat = np.empty(0, dtype=np.uint64)
    return (keys, dists, flat, np.uint8(1 if st.hit else 0),
            np.int64(st.hit_dist), np.uint8(st.reason))


def _zero_tgt(d):
    z = np.zeros(d, dtype=np.int64)
    return z


def batch_reach(seed, tag, stream_lo, n_rep,
                d, L, r, offsets, p, src,
                eff_lo, eff_hi, user_lo, user_hi,
                max_volume, max_intrinsic,
                tgt_lo, tgt_hi, tgt_negate, tgt_dist):
    hit = np.zeros(n_rep, dtype=np.uint8)
    reason = np.zeros(n_rep, dtype=np.uint8)
    tgt_on = tgt_dist <= 0
    for j in range(n_rep):
        st = _bfs_mirror(seed, tag, int(stream_lo) + j, d, L, r, offsets, p,
                         src, eff_lo, eff_hi, user_lo, user_hi,
                         max_volume, max_intrinsic,
                         tgt_lo, tgt_hi, tgt_on, tgt_negate, True, tgt_dist,
                         False, 0, False)
        hit[j] = 1 if st.hit else 0
        reason[j] = st.reason
    return hit, reason


def batch_sizes(seed, tag, stream_lo, n_rep,
                d, L, r, offsets, p, src,
                eff_lo, eff_hi, user_lo, user_hi,
                max_volume, max_intrinsic):
    sizes = np.zeros(n_rep, dtype=np.int64)
    reason = np.zeros(n_rep, dtype=np.uint8)
    z = _zero_tgt(d)
    for j in range(n_rep):
        st = _bfs_mirror(seed, tag, int(stream_lo) + j, d, L, r, offsets, p,
                         src, eff_lo, eff_hi, user_lo, user_hi,
                         max_volume, max_intrinsic,
                         z, z, False, False, False, -1, False, 0, False)
        sizes[j] = st.n_vis
        reason[j] = st.reason
    return sizes, reason


def batch_plane_count(seed, tag, stream_lo, n_rep,
                      d, L, r, offsets, p, src,
                      eff_lo, eff_hi, user_lo, user_hi,
                      max_volume, max_intrinsic, cp_val):
    cnt = np.zeros(n_rep, dtype=np.int64)
    reason = np.zeros(n_rep, dtype=np.uint8)
    z = _zero_tgt(d)
    for j in range(n_rep):
        st = _bfs_mirror(seed, tag, int(stream_lo) + j, d, L, r, offsets, p,
                         src, eff_lo, eff_hi, user_lo, user_hi,
                         max_volume, max_intrinsic,
                         z, z, False, False, False, -1, True, int(cp_val),
                         False)
        cnt[j] = st.plane_cnt
        reason[j] = st.reason
    return cnt, reason


def batch_multi_target(seed, tag, stream_lo, n_rep,
                       d, L, r, offsets, p, src,
                       eff_lo, eff_hi, user_lo, user_hi,
                       max_volume, max_intrinsic, tgt_keys):
    nt = tgt_keys.shape[0]
    tgt_hits = np.zeros(nt, dtype=np.int64)
    totals = np.zeros(n_rep, dtype=np.int64)
    reason = np.zeros(n_rep, dtype=np.uint8)
    z = _zero_tgt(d)
    tk = [int(k) for k in tgt_keys]
    for j in range(n_rep):
        st = _bfs_mirror(seed, tag, int(stream_lo) + j, d, L, r, offsets, p,
                         src, eff_lo, eff_hi, user_lo, user_hi,
                         max_volume, max_intrinsic,
                         z, z, False, False, False, -1, False, 0, False)
        tot = 0
        for t in range(nt):
            if tk[t] in st.visited:
                tgt_hits[t] += 1
                tot += 1
        totals[j] = tot
        reason[j] = st.reason
    return tgt_hits, totals, reason


def batch_shells(seed, tag, stream_lo, n_rep,
                 d, L, r, offsets, p, src,
                 eff_lo, eff_hi, user_lo, user_hi,
                 max_volume, max_intrinsic, n_shell, rep_keys):
    shell_counts = np.zeros((n_rep, n_shell + 1), dtype=np.int64)
    rep_hits = np.zeros((n_rep, n_shell + 1), dtype=np.uint8)
    sizes = np.zeros(n_rep, dtype=np.int64)
    reason = np.zeros(n_rep, dtype=np.uint8)
    z = _zero_tgt(d)
    f = r // 2
    rk = [int(k) for k in rep_keys]
    for j in range(n_rep):
        st = _bfs_mirror(seed, tag, int(stream_lo) + j, d, L, r, offsets, p,
                         src, eff_lo, eff_hi, user_lo, user_hi,
                         max_volume, max_intrinsic,
                         z, z, False, False, False, -1, False, 0, False)
        keys = np.array(st.order, dtype=np.uint64)
        disp = unpack_array(keys, d) - src
        if r > 0:
            disp = ((disp + f) % r) - f
        sh = np.abs(disp).max(axis=1)
        for m in sh[sh <= n_shell]:
            shell_counts[j, m] += 1
        for t in range(n_shell + 1):
            if rk[t] in st.visited:
                rep_hits[j, t] = 1
        sizes[j] = st.n_vis
        reason[j] = st.reason
    return shell_counts, rep_hits, sizes, reason


def batch_torus_grid(seed, tag, stream_lo, n_rep,
                     d, L, r, offsets, p, src,
                     eff_lo, eff_hi, user_lo, user_hi,
                     max_volume, max_intrinsic, n_splits):
    V = int(r) ** d
    counts = np.zeros((n_splits, V), dtype=np.int64)
    sizes = np.zeros(n_rep, dtype=np.int64)
    reason = np.zeros(n_rep, dtype=np.uint8)
    z = _zero_tgt(d)
    powers = np.array([int(r) ** (d - 1 - i) for i in range(d)],
                      dtype=np.int64)
    for j in range(n_rep):
        st = _bfs_mirror(seed, tag, int(stream_lo) + j, d, L, r, offsets, p,
                         src, eff_lo, eff_hi, user_lo, user_hi,
                         max_volume, max_intrinsic,
                         z, z, False, False, False, -1, False, 0, False)
        keys = np.array(st.order, dtype=np.uint64)
        cc = (unpack_array(keys, d) + r) % r
        lin = cc @ powers
        split = (int(stream_lo) + j) % n_splits
        np.add.at(counts[split], lin, 1)
        sizes[j] = st.n_vis
        reason[j] = st.reason
    return counts, sizes, reason


def batch_coupling(seed, tag, stream_lo, n_rep,
                   d, L, r, offsets, p_lo, p_hi, src,
                   eff_lo, eff_hi, user_lo, user_hi,
                   max_volume, max_intrinsic):
    missing = 0
    dist_up = 0
    trunc_lo = 0
    trunc_hi = 0
    z = _zero_tgt(d)
    for j in range(n_rep):
        stream = int(stream_lo) + j
        a = _bfs_mirror(seed, tag, stream, d, L, r, offsets, p_lo, src,
                        eff_lo, eff_hi, user_lo, user_hi,
                        max_volume, max_intrinsic,
                        z, z, False, False, False, -1, False, 0, False)
        b = _bfs_mirror(seed, tag, stream, d, L, r, offsets, p_hi, src,
                        eff_lo, eff_hi, user_lo, user_hi,
                        max_volume, max_intrinsic,
                        z, z, False, False, False, -1, False, 0, False)
        if a.reason != 0:
            trunc_lo += 1
        if b.reason != 0:
            trunc_hi += 1
        for k, da in a.visited.items():
            db = b.visited.get(k)
            if db is None:
                missing += 1
            elif db > da:
                dist_up += 1
    return (np.int64(missing), np.int64(dist_up),
            np.int64(trunc_lo), np.int64(trunc_hi))


def _pioneer_mirror(seed, tag, stream,
                    d, L, r, offsets, p, src,
                    eff_lo, eff_hi, user_lo, user_hi,
                    max_volume, n_max, horizon):
    seed = int(seed)
    tag = int(tag)
    stream = int(stream)
    n_off = offsets.shape[0]
    x0 = int(src[0])
    counts = np.zeros(n_max + 1, dtype=np.int64)
    pend = [[] for _ in range(horizon + 1)]
    sk = int(pack_point(tuple(int(c) for c in src)))
    visited = {sk}
    total = 0
    radius_flag = False
    frontier = np.array([sk], dtype=np.uint64)
    n_vis = 1
    plane = 0
    while True:
        while frontier.size:
            parents = np.sort(frontier)
            pcoords = unpack_array(parents, d)
            cand = (pcoords[:, None, :] + offsets[None, :, :]).reshape(-1, d)
            in_eff = np.all((cand >= eff_lo) & (cand <= eff_hi), axis=1)
            in_user = np.all((cand >= user_lo) & (cand <= user_hi), axis=1)
            if (in_user & ~in_eff).any():
                radius_flag = True
            kc = cand[in_eff]
            vk = pack_array(kc)
            uk = np.repeat(parents, n_off)[in_eff]
            u = (_chain_vec(seed, tag, stream, uk, vk)
                 >> np.uint64(11)) * _INV53
            om = u < p
            ovk = vk[om]
            oc = kc[om]
            pu0 = np.repeat(pcoords[:, 0], n_off)[in_eff][om]
            new_keys = []
            for t in range(ovk.shape[0]):
                v0 = int(oc[t, 0])
                if v0 > x0 + plane:
                    total += 1
                    nlo = max(int(pu0[t]) - x0 + 1, 1)
                    nhi = min(v0 - x0, n_max)
                    if nlo <= nhi:
                        counts[nlo:nhi + 1] += 1
                    if v0 - x0 <= horizon:
                        pend[v0 - x0].append(int(ovk[t]))
                    continue
                key = int(ovk[t])
                if key in visited:
                    continue
                if n_vis >= max_volume:
                    return counts, np.int64(total), np.uint8(1)
                visited.add(key)
                n_vis += 1
                new_keys.append(key)
            frontier = np.array(new_keys, dtype=np.uint64)
        plane += 1
        if plane > horizon:
            break
        admit = []
        for key in reversed(pend[plane]):
            if key not in visited:
                if n_vis >= max_volume:
                    return counts, np.int64(total), np.uint8(1)
                visited.add(key)
                n_vis += 1
                admit.append(key)
        frontier = np.array(admit, dtype=np.uint64)
    reason = np.uint8(2) if radius_flag else np.uint8(0)
    return counts, np.int64(total), reason


def pioneer_single(seed, tag, stream,
                   d, L, r, offsets, p, src,
                   eff_lo, eff_hi, user_lo, user_hi,
                   max_volume, n_max, horizon, n_up):
    return _pioneer_mirror(seed, tag, int(stream), d, L, r, offsets, p, src,
                           eff_lo, eff_hi, user_lo, user_hi,
                           max_volume, n_max, horizon)


def batch_pioneer(seed, tag, stream_lo, n_rep,
                  d, L, r, offsets, p, src,
                  eff_lo, eff_hi, user_lo, user_hi,
                  max_volume, n_max, horizon, n_up):
    counts_sum = np.zeros(n_max + 1, dtype=np.int64)
    counts_sq = np.zeros(n_max + 1, dtype=np.int64)
    totals = np.zeros(n_rep, dtype=np.int64)
    reason = np.zeros(n_rep, dtype=np.uint8)
    for j in range(n_rep):
        counts, total, rs = _pioneer_mirror(
            seed, tag, int(stream_lo) + j, d, L, r, offsets, p, src,
            eff_lo, eff_hi, user_lo, user_hi, max_volume, n_max, horizon)
        if rs == 0:
            counts_sum += counts
            counts_sq += counts * counts
        totals[j] = total
        reason[j] = rs
    return counts_sum, counts_sq, totals, reason
