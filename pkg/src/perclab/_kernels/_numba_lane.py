"""numba lane: jit-compiled exploration, pioneer-sweep, and hashing kernels.

Private module; import through perclab._kernels which selects the lane.
All functions mirror _numpy_lane exactly (same signatures, bit-identical
results); the cross-lane equality tests pin that.

Layout conventions shared by both lanes:
  * coordinates are int64, packed per-axis into one uint64 key with
    B = 64//d bits and an excess-2^(B-1) code, axis 0 highest, so unsigned
    key order is lexicographic coordinate order;
  * the candidate scan order is: vertices of a BFS level in ascending key
    order, then displacement offsets in their fixed array order -- all
    tie-breaking (volume truncation, early exits) inherits from it;
  * an exploration aborts the moment a cap binds: reason codes are
    0 = complete, 1 = volume, 2 = radius/guard clip, 3 = intrinsic.
"""

import numpy as np
from numba import njit

U64 = np.uint64
I64 = np.int64

GOLDEN = U64(0x9E3779B97F4A7C15)
MIX1 = U64(0xBF58476D1CE4E5B9)
MIX2 = U64(0x94D049BB133111EB)
S30 = U64(30)
S27 = U64(27)
S31 = U64(31)
S11 = U64(11)
ONE = U64(1)
INV53 = 2.0 ** -53


@njit(inline="always", cache=True)
def _mix(z):
    z = z + GOLDEN
    z = (z ^ (z >> S30)) * MIX1
    z = (z ^ (z >> S27)) * MIX2
    return z ^ (z >> S31)


@njit(inline="always", cache=True)
def _chain(seed, tag, stream, ka, kb):
    if kb < ka:
        ka, kb = kb, ka
    h = _mix(seed)
    h = _mix(h ^ tag)
    h = _mix(h ^ stream)
    h = _mix(h ^ ka)
    h = _mix(h ^ kb)
    return h


@njit(inline="always", cache=True)
def _unit(h):
    return (h >> S11) * INV53


@njit(cache=True, nogil=True)
def pair_uniforms(seed, tag, stream, ka, kb):
    n = ka.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = _unit(_chain(seed, tag, stream, ka[i], kb[i]))
    return out


@njit(inline="always", cache=True)
def _pack(c, d, BU, bias, mask):
    acc = U64(0)
    for i in range(d):
        part = (U64(c[i]) + bias) & mask
        if i > 0:
            acc = acc << BU
        acc = acc | part
    return acc


@njit(inline="always", cache=True)
def _unpack(key, d, BU, bias, mask, out):
    if BU == U64(64):
        out[0] = np.int64(key ^ bias)
        return
    for i in range(d):
        part = (key >> (BU * U64(d - 1 - i))) & mask
        out[i] = np.int64(part) - np.int64(bias)


@njit(inline="always", cache=True)
def _pack_params(d):
    B = 64 // d
    BU = U64(B)
    bias = ONE << U64(B - 1)
    if B == 64:
        mask = U64(0xFFFFFFFFFFFFFFFF)
    else:
        mask = (ONE << BU) - ONE
    return BU, bias, mask


@njit(inline="always", cache=True)
def _ht_find(ht_keys, ht_stamp, epoch, mask_ht, key):
    """Slot of key if present (>=0), else -(empty slot)-1."""
    j = _mix(key) & mask_ht
    while True:
        jj = np.int64(j)
        if ht_stamp[jj] != epoch:
            return -jj - 1
        if ht_keys[jj] == key:
            return jj
        j = (j + ONE) & mask_ht


@njit(inline="always", cache=True)
def _table_cap(max_volume):
    cap = 64
    while cap < 2 * (max_volume + 2):
        cap <<= 1
    return cap


@njit(cache=True)
def _bfs(seed, tag, stream,
         d, L, r, offsets, p,
         src,
         eff_lo, eff_hi, user_lo, user_hi,
         max_volume, max_intrinsic,
         tgt_lo, tgt_hi, tgt_on, tgt_negate, stop_on_target, tgt_dist,
         cp_on, cp_val,
         record_edges, edges_buf,
         ht_keys, ht_dist, ht_stamp, epoch, mask_ht,
         vis_keys, ucoords, vcoords):
    """One seeded exploration; returns
    (n_vis, max_dist, hit, hit_dist, reason, n_edges, plane_cnt)."""
    BU, bias, mask = _pack_params(d)
    n_off = offsets.shape[0]
    wrap = r > 0
    f = r // 2

    sk = _pack(src, d, BU, bias, mask)
    sl = _ht_find(ht_keys, ht_stamp, epoch, mask_ht, sk)
    slot = -sl - 1
    ht_keys[slot] = sk
    ht_stamp[slot] = epoch
    ht_dist[slot] = 0
    vis_keys[0] = sk
    n_vis = 1

    hit = False
    hit_dist = I64(-1)
    if tgt_on:
        inb = True
        for i in range(d):
            if src[i] < tgt_lo[i] or src[i] > tgt_hi[i]:
                inb = False
        if inb != tgt_negate:
            hit = True
            hit_dist = I64(0)
    plane_cnt = I64(0)
    if cp_on and src[0] == cp_val:
        plane_cnt = I64(1)
    if hit and stop_on_target:
        return n_vis, I64(0), hit, hit_dist, np.uint8(0), I64(0), plane_cnt

    radius_flag = False
    intrinsic_flag = False
    n_edges = I64(0)
    max_dist = I64(0)
    lvl_lo = 0
    cur_d = I64(0)

    while lvl_lo < n_vis:
        if cur_d >= max_intrinsic:
            intrinsic_flag = True
            break
        lvl_hi = n_vis
        vis_keys[lvl_lo:lvl_hi].sort()
        for ii in range(lvl_lo, lvl_hi):
            uk = vis_keys[ii]
            _unpack(uk, d, BU, bias, mask, ucoords)
            for oi in range(n_off):
                in_eff = True
                in_user = True
                for i in range(d):
                    c = ucoords[i] + offsets[oi, i]
                    if wrap:
                        c = ((c + f) % r) - f
                    vcoords[i] = c
                    if c < eff_lo[i] or c > eff_hi[i]:
                        in_eff = False
                    if c < user_lo[i] or c > user_hi[i]:
                        in_user = False
                if not in_eff:
                    if in_user:
                        radius_flag = True
                    continue
                vk = _pack(vcoords, d, BU, bias, mask)
                if _unit(_chain(seed, tag, stream, uk, vk)) >= p:
                    continue
                sl = _ht_find(ht_keys, ht_stamp, epoch, mask_ht, vk)
                if sl >= 0:
                    if record_edges:
                        if uk < vk:
                            edges_buf[2 * n_edges] = uk
                            edges_buf[2 * n_edges + 1] = vk
                        else:
                            edges_buf[2 * n_edges] = vk
                            edges_buf[2 * n_edges + 1] = uk
                        n_edges += 1
                    continue
                if n_vis >= max_volume:
                    return (n_vis, max_dist, hit, hit_dist, np.uint8(1),
                            n_edges, plane_cnt)
                slot = -sl - 1
                ht_keys[slot] = vk
                ht_stamp[slot] = epoch
                nd = cur_d + 1
                ht_dist[slot] = nd
                vis_keys[n_vis] = vk
                n_vis += 1
                if record_edges:
                    if uk < vk:
                        edges_buf[2 * n_edges] = uk
                        edges_buf[2 * n_edges + 1] = vk
                    else:
                        edges_buf[2 * n_edges] = vk
                        edges_buf[2 * n_edges + 1] = uk
                    n_edges += 1
                if nd > max_dist:
                    max_dist = nd
                if cp_on and vcoords[0] == cp_val:
                    plane_cnt += 1
                took = False
                if tgt_on:
                    inb = True
                    for i in range(d):
                        if vcoords[i] < tgt_lo[i] or vcoords[i] > tgt_hi[i]:
                            inb = False
                    if inb != tgt_negate:
                        took = True
                if tgt_dist > 0 and nd == tgt_dist:
                    took = True
                if took and not hit:
                    hit = True
                    hit_dist = nd
                    if stop_on_target:
                        return (n_vis, max_dist, hit, hit_dist, np.uint8(0),
                                n_edges, plane_cnt)
        lvl_lo = lvl_hi
        cur_d += 1

    reason = np.uint8(0)
    if radius_flag:
        reason = np.uint8(2)
    elif intrinsic_flag:
        reason = np.uint8(3)
    return n_vis, max_dist, hit, hit_dist, reason, n_edges, plane_cnt


@njit(cache=True, nogil=True)
def explore_single(seed, tag, stream,
                   d, L, r, offsets, p, src,
                   eff_lo, eff_hi, user_lo, user_hi,
                   max_volume, max_intrinsic,
                   tgt_lo, tgt_hi, tgt_on, tgt_negate, stop_on_target, tgt_dist,
                   record_edges):
    cap = _table_cap(max_volume)
    ht_keys = np.zeros(cap, dtype=np.uint64)
    ht_dist = np.zeros(cap, dtype=np.int64)
    ht_stamp = np.zeros(cap, dtype=np.uint32)
    mask_ht = U64(cap - 1)
    vis_keys = np.empty(max_volume, dtype=np.uint64)
    n_off = offsets.shape[0]
    e_cap = max_volume * n_off if record_edges else 1
    edges_buf = np.empty(2 * e_cap, dtype=np.uint64)
    ucoords = np.empty(d, dtype=np.int64)
    vcoords = np.empty(d, dtype=np.int64)
    epoch = np.uint32(1)
    n_vis, max_dist, hit, hit_dist, reason, n_edges, _ = _bfs(
        seed, tag, stream, d, L, r, offsets, p, src,
        eff_lo, eff_hi, user_lo, user_hi, max_volume, max_intrinsic,
        tgt_lo, tgt_hi, tgt_on, tgt_negate, stop_on_target, tgt_dist,
        False, I64(0), record_edges, edges_buf,
        ht_keys, ht_dist, ht_stamp, epoch, mask_ht, vis_keys, ucoords, vcoords)
    keys = vis_keys[:n_vis].copy()
    dists = np.empty(n_vis, dtype=np.int64)
    for i in range(n_vis):
        sl = _ht_find(ht_keys, ht_stamp, epoch, mask_ht, keys[i])
        dists[i] = ht_dist[sl]
    # canonical (distance, key) order: levels are already contiguous and
    # nondecreasing in dist, so sorting each equal-dist block suffices
    i = 0
    while i < n_vis:
        j = i + 1
        while j < n_vis and dists[j] == dists[i]:
            j += 1
        keys[i:j].sort()
        i = j
    return keys, dists, edges_buf[:2 * n_edges].copy(), np.uint8(hit), hit_dist, reason


@njit(cache=True, nogil=True)
def batch_reach(seed, tag, stream_lo, n_rep,
                d, L, r, offsets, p, src,
                eff_lo, eff_hi, user_lo, user_hi,
                max_volume, max_intrinsic,
                tgt_lo, tgt_hi, tgt_negate, tgt_dist):
    cap = _table_cap(max_volume)
    ht_keys = np.zeros(cap, dtype=np.uint64)
    ht_dist = np.zeros(cap, dtype=np.int64)
    ht_stamp = np.zeros(cap, dtype=np.uint32)
    mask_ht = U64(cap - 1)
    vis_keys = np.empty(max_volume, dtype=np.uint64)
    edges_buf = np.empty(2, dtype=np.uint64)
    ucoords = np.empty(d, dtype=np.int64)
    vcoords = np.empty(d, dtype=np.int64)
    hit = np.zeros(n_rep, dtype=np.uint8)
    reason = np.zeros(n_rep, dtype=np.uint8)
    tgt_on = tgt_dist <= 0
    for j in range(n_rep):
        _, _, h, _, rs, _, _ = _bfs(
            seed, tag, stream_lo + U64(j), d, L, r, offsets, p, src,
            eff_lo, eff_hi, user_lo, user_hi, max_volume, max_intrinsic,
            tgt_lo, tgt_hi, tgt_on, tgt_negate, True, tgt_dist,
            False, I64(0), False, edges_buf,
            ht_keys, ht_dist, ht_stamp, np.uint32(j + 1), mask_ht,
            vis_keys, ucoords, vcoords)
        hit[j] = np.uint8(1) if h else np.uint8(0)
        reason[j] = rs
    return hit, reason


@njit(cache=True, nogil=True)
def batch_sizes(seed, tag, stream_lo, n_rep,
                d, L, r, offsets, p, src,
                eff_lo, eff_hi, user_lo, user_hi,
                max_volume, max_intrinsic):
    cap = _table_cap(max_volume)
    ht_keys = np.zeros(cap, dtype=np.uint64)
    ht_dist = np.zeros(cap, dtype=np.int64)
    ht_stamp = np.zeros(cap, dtype=np.uint32)
    mask_ht = U64(cap - 1)
    vis_keys = np.empty(max_volume, dtype=np.uint64)
    edges_buf = np.empty(2, dtype=np.uint64)
    ucoords = np.empty(d, dtype=np.int64)
    vcoords = np.empty(d, dtype=np.int64)
    tgt = np.zeros(d, dtype=np.int64)
    sizes = np.zeros(n_rep, dtype=np.int64)
    reason = np.zeros(n_rep, dtype=np.uint8)
    for j in range(n_rep):
        nv, _, _, _, rs, _, _ = _bfs(
            seed, tag, stream_lo + U64(j), d, L, r, offsets, p, src,
            eff_lo, eff_hi, user_lo, user_hi, max_volume, max_intrinsic,
            tgt, tgt, False, False, False, I64(-1),
            False, I64(0), False, edges_buf,
            ht_keys, ht_dist, ht_stamp, np.uint32(j + 1), mask_ht,
            vis_keys, ucoords, vcoords)
        sizes[j] = nv
        reason[j] = rs
    return sizes, reason


@njit(cache=True, nogil=True)
def batch_plane_count(seed, tag, stream_lo, n_rep,
                      d, L, r, offsets, p, src,
                      eff_lo, eff_hi, user_lo, user_hi,
                      max_volume, max_intrinsic, cp_val):
    cap = _table_cap(max_volume)
    ht_keys = np.zeros(cap, dtype=np.uint64)
    ht_dist = np.zeros(cap, dtype=np.int64)
    ht_stamp = np.zeros(cap, dtype=np.uint32)
    mask_ht = U64(cap - 1)
    vis_keys = np.empty(max_volume, dtype=np.uint64)
    edges_buf = np.empty(2, dtype=np.uint64)
    ucoords = np.empty(d, dtype=np.int64)
    vcoords = np.empty(d, dtype=np.int64)
    tgt = np.zeros(d, dtype=np.int64)
    cnt = np.zeros(n_rep, dtype=np.int64)
    reason = np.zeros(n_rep, dtype=np.uint8)
    for j in range(n_rep):
        _, _, _, _, rs, _, pc = _bfs(
            seed, tag, stream_lo + U64(j), d, L, r, offsets, p, src,
            eff_lo, eff_hi, user_lo, user_hi, max_volume, max_intrinsic,
            tgt, tgt, False, False, False, I64(-1),
            True, cp_val, False, edges_buf,
            ht_keys, ht_dist, ht_stamp, np.uint32(j + 1), mask_ht,
            vis_keys, ucoords, vcoords)
        cnt[j] = pc
        reason[j] = rs
    return cnt, reason


@njit(cache=True, nogil=True)
def batch_multi_target(seed, tag, stream_lo, n_rep,
                       d, L, r, offsets, p, src,
                       eff_lo, eff_hi, user_lo, user_hi,
                       max_volume, max_intrinsic, tgt_keys):
    cap = _table_cap(max_volume)
    ht_keys = np.zeros(cap, dtype=np.uint64)
    ht_dist = np.zeros(cap, dtype=np.int64)
    ht_stamp = np.zeros(cap, dtype=np.uint32)
    mask_ht = U64(cap - 1)
    vis_keys = np.empty(max_volume, dtype=np.uint64)
    edges_buf = np.empty(2, dtype=np.uint64)
    ucoords = np.empty(d, dtype=np.int64)
    vcoords = np.empty(d, dtype=np.int64)
    tgt = np.zeros(d, dtype=np.int64)
    nt = tgt_keys.shape[0]
    tgt_hits = np.zeros(nt, dtype=np.int64)
    totals = np.zeros(n_rep, dtype=np.int64)
    reason = np.zeros(n_rep, dtype=np.uint8)
    for j in range(n_rep):
        epoch = np.uint32(j + 1)
        _, _, _, _, rs, _, _ = _bfs(
            seed, tag, stream_lo + U64(j), d, L, r, offsets, p, src,
            eff_lo, eff_hi, user_lo, user_hi, max_volume, max_intrinsic,
            tgt, tgt, False, False, False, I64(-1),
            False, I64(0), False, edges_buf,
            ht_keys, ht_dist, ht_stamp, epoch, mask_ht,
            vis_keys, ucoords, vcoords)
        tot = I64(0)
        for t in range(nt):
            if _ht_find(ht_keys, ht_stamp, epoch, mask_ht, tgt_keys[t]) >= 0:
                tgt_hits[t] += 1
                tot += 1
        totals[j] = tot
        reason[j] = rs
    return tgt_hits, totals, reason


@njit(cache=True, nogil=True)
def batch_shells(seed, tag, stream_lo, n_rep,
                 d, L, r, offsets, p, src,
                 eff_lo, eff_hi, user_lo, user_hi,
                 max_volume, max_intrinsic, n_shell, rep_keys):
    cap = _table_cap(max_volume)
    ht_keys = np.zeros(cap, dtype=np.uint64)
    ht_dist = np.zeros(cap, dtype=np.int64)
    ht_stamp = np.zeros(cap, dtype=np.uint32)
    mask_ht = U64(cap - 1)
    vis_keys = np.empty(max_volume, dtype=np.uint64)
    edges_buf = np.empty(2, dtype=np.uint64)
    ucoords = np.empty(d, dtype=np.int64)
    vcoords = np.empty(d, dtype=np.int64)
    tgt = np.zeros(d, dtype=np.int64)
    BU, bias, mask = _pack_params(d)
    wrap = r > 0
    f = r // 2
    shell_counts = np.zeros((n_rep, n_shell + 1), dtype=np.int64)
    rep_hits = np.zeros((n_rep, n_shell + 1), dtype=np.uint8)
    sizes = np.zeros(n_rep, dtype=np.int64)
    reason = np.zeros(n_rep, dtype=np.uint8)
    for j in range(n_rep):
        epoch = np.uint32(j + 1)
        nv, _, _, _, rs, _, _ = _bfs(
            seed, tag, stream_lo + U64(j), d, L, r, offsets, p, src,
            eff_lo, eff_hi, user_lo, user_hi, max_volume, max_intrinsic,
            tgt, tgt, False, False, False, I64(-1),
            False, I64(0), False, edges_buf,
            ht_keys, ht_dist, ht_stamp, epoch, mask_ht,
            vis_keys, ucoords, vcoords)
        for ii in range(nv):
            _unpack(vis_keys[ii], d, BU, bias, mask, vcoords)
            m = I64(0)
            for i in range(d):
                c = vcoords[i] - src[i]
                if wrap:
                    c = ((c + f) % r) - f
                a = c if c >= 0 else -c
                if a > m:
                    m = a
            if m <= n_shell:
                shell_counts[j, m] += 1
        for t in range(n_shell + 1):
            if _ht_find(ht_keys, ht_stamp, epoch, mask_ht, rep_keys[t]) >= 0:
                rep_hits[j, t] = 1
        sizes[j] = nv
        reason[j] = rs
    return shell_counts, rep_hits, sizes, reason


@njit(cache=True, nogil=True)
def batch_torus_grid(seed, tag, stream_lo, n_rep,
                     d, L, r, offsets, p, src,
                     eff_lo, eff_hi, user_lo, user_hi,
                     max_volume, max_intrinsic, n_splits):
    cap = _table_cap(max_volume)
    ht_keys = np.zeros(cap, dtype=np.uint64)
    ht_dist = np.zeros(cap, dtype=np.int64)
    ht_stamp = np.zeros(cap, dtype=np.uint32)
    mask_ht = U64(cap - 1)
    vis_keys = np.empty(max_volume, dtype=np.uint64)
    edges_buf = np.empty(2, dtype=np.uint64)
    ucoords = np.empty(d, dtype=np.int64)
    vcoords = np.empty(d, dtype=np.int64)
    tgt = np.zeros(d, dtype=np.int64)
    BU, bias, mask = _pack_params(d)
    V = I64(1)
    for _ in range(d):
        V *= r
    counts = np.zeros((n_splits, V), dtype=np.int64)
    sizes = np.zeros(n_rep, dtype=np.int64)
    reason = np.zeros(n_rep, dtype=np.uint8)
    for j in range(n_rep):
        epoch = np.uint32(j + 1)
        nv, _, _, _, rs, _, _ = _bfs(
            seed, tag, stream_lo + U64(j), d, L, r, offsets, p, src,
            eff_lo, eff_hi, user_lo, user_hi, max_volume, max_intrinsic,
            tgt, tgt, False, False, False, I64(-1),
            False, I64(0), False, edges_buf,
            ht_keys, ht_dist, ht_stamp, epoch, mask_ht,
            vis_keys, ucoords, vcoords)
        split = np.int64((stream_lo + U64(j)) % U64(n_splits))
        for ii in range(nv):
            _unpack(vis_keys[ii], d, BU, bias, mask, vcoords)
            idx = I64(0)
            for i in range(d):
                idx = idx * r + ((vcoords[i] + r) % r)
            counts[split, idx] += 1
        sizes[j] = nv
        reason[j] = rs
    return counts, sizes, reason


@njit(cache=True, nogil=True)
def batch_coupling(seed, tag, stream_lo, n_rep,
                   d, L, r, offsets, p_lo, p_hi, src,
                   eff_lo, eff_hi, user_lo, user_hi,
                   max_volume, max_intrinsic):
    """Per replica: explore at p_lo and p_hi on the same field; count
    containment violations (p_lo-vertex missing at p_hi) and intrinsic
    distance increases (dist at p_hi above dist at p_lo)."""
    cap = _table_cap(max_volume)
    ht_keys_a = np.zeros(cap, dtype=np.uint64)
    ht_dist_a = np.zeros(cap, dtype=np.int64)
    ht_stamp_a = np.zeros(cap, dtype=np.uint32)
    ht_keys_b = np.zeros(cap, dtype=np.uint64)
    ht_dist_b = np.zeros(cap, dtype=np.int64)
    ht_stamp_b = np.zeros(cap, dtype=np.uint32)
    mask_ht = U64(cap - 1)
    vis_a = np.empty(max_volume, dtype=np.uint64)
    vis_b = np.empty(max_volume, dtype=np.uint64)
    edges_buf = np.empty(2, dtype=np.uint64)
    ucoords = np.empty(d, dtype=np.int64)
    vcoords = np.empty(d, dtype=np.int64)
    tgt = np.zeros(d, dtype=np.int64)
    missing = I64(0)
    dist_up = I64(0)
    trunc_lo = I64(0)
    trunc_hi = I64(0)
    for j in range(n_rep):
        epoch = np.uint32(j + 1)
        stream = stream_lo + U64(j)
        nva, _, _, _, rs_a, _, _ = _bfs(
            seed, tag, stream, d, L, r, offsets, p_lo, src,
            eff_lo, eff_hi, user_lo, user_hi, max_volume, max_intrinsic,
            tgt, tgt, False, False, False, I64(-1),
            False, I64(0), False, edges_buf,
            ht_keys_a, ht_dist_a, ht_stamp_a, epoch, mask_ht,
            vis_a, ucoords, vcoords)
        _, _, _, _, rs_b, _, _ = _bfs(
            seed, tag, stream, d, L, r, offsets, p_hi, src,
            eff_lo, eff_hi, user_lo, user_hi, max_volume, max_intrinsic,
            tgt, tgt, False, False, False, I64(-1),
            False, I64(0), False, edges_buf,
            ht_keys_b, ht_dist_b, ht_stamp_b, epoch, mask_ht,
            vis_b, ucoords, vcoords)
        if rs_a != np.uint8(0):
            trunc_lo += 1
        if rs_b != np.uint8(0):
            trunc_hi += 1
        for ii in range(nva):
            sl = _ht_find(ht_keys_b, ht_stamp_b, epoch, mask_ht, vis_a[ii])
            if sl < 0:
                missing += 1
            else:
                sa = _ht_find(ht_keys_a, ht_stamp_a, epoch, mask_ht, vis_a[ii])
                if ht_dist_b[sl] > ht_dist_a[sa]:
                    dist_up += 1
    return missing, dist_up, trunc_lo, trunc_hi


@njit(cache=True)
def _pioneer_sweep(seed, tag, stream,
                   d, L, r, offsets, p,
                   src,
                   eff_lo, eff_hi, user_lo, user_hi,
                   max_volume, n_max, horizon,
                   counts,
                   ht_keys, ht_stamp, epoch, mask_ht,
                   vis_keys, pend_key, pend_next, pend_head,
                   ucoords, vcoords):
    """Left-to-right plane sweep for first-crossing (pioneer) bonds.

    Visits the cluster of src inside {w0 <= plane} plane by plane; a bond
    probed from a scanned vertex into a not-yet-admitted plane is open iff
    it is a pioneer.  counts[n] collects bonds whose crossing window covers
    x0+n for n in 1..n_max; `horizon` is the last admitted plane offset.
    Returns (total, reason)."""
    BU, bias, mask = _pack_params(d)
    n_off = offsets.shape[0]
    x0 = src[0]

    for i in range(n_max + 1):
        counts[i] = 0
    for i in range(horizon + 1):
        pend_head[i] = -1

    sk = _pack(src, d, BU, bias, mask)
    sl = _ht_find(ht_keys, ht_stamp, epoch, mask_ht, sk)
    slot = -sl - 1
    ht_keys[slot] = sk
    ht_stamp[slot] = epoch
    vis_keys[0] = sk
    n_vis = 1
    n_pend = I64(0)
    total = I64(0)
    radius_flag = False

    lvl_lo = 0
    plane = I64(0)  # admitted plane offset from x0
    cap_pend = pend_key.shape[0]
    while True:
        # close the cluster within {w0 <= x0 + plane}
        while lvl_lo < n_vis:
            lvl_hi = n_vis
            vis_keys[lvl_lo:lvl_hi].sort()
            for ii in range(lvl_lo, lvl_hi):
                uk = vis_keys[ii]
                _unpack(uk, d, BU, bias, mask, ucoords)
                for oi in range(n_off):
                    in_eff = True
                    in_user = True
                    for i in range(d):
                        c = ucoords[i] + offsets[oi, i]
                        vcoords[i] = c
                        if c < eff_lo[i] or c > eff_hi[i]:
                            in_eff = False
                        if c < user_lo[i] or c > user_hi[i]:
                            in_user = False
                    if not in_eff:
                        if in_user:
                            radius_flag = True
                        continue
                    v0 = vcoords[0]
                    if v0 > x0 + plane:
                        # deferred bond: open iff pioneer
                        vk = _pack(vcoords, d, BU, bias, mask)
                        if _unit(_chain(seed, tag, stream, uk, vk)) >= p:
                            continue
                        total += 1
                        nlo = ucoords[0] - x0 + 1
                        if nlo < 1:
                            nlo = 1
                        nhi = v0 - x0
                        if nhi > n_max:
                            nhi = n_max
                        for n in range(nlo, nhi + 1):
                            counts[n] += 1
                        if v0 - x0 <= horizon:
                            if n_pend >= cap_pend:
                                return total, np.uint8(1)
                            pend_key[n_pend] = vk
                            pend_next[n_pend] = pend_head[v0 - x0]
                            pend_head[v0 - x0] = n_pend
                            n_pend += 1
                        continue
                    vk = _pack(vcoords, d, BU, bias, mask)
                    if _unit(_chain(seed, tag, stream, uk, vk)) >= p:
                        continue
                    sl = _ht_find(ht_keys, ht_stamp, epoch, mask_ht, vk)
                    if sl >= 0:
                        continue
                    if n_vis >= max_volume:
                        return total, np.uint8(1)
                    slot = -sl - 1
                    ht_keys[slot] = vk
                    ht_stamp[slot] = epoch
                    vis_keys[n_vis] = vk
                    n_vis += 1
            lvl_lo = lvl_hi
        # admit the next plane
        plane += 1
        if plane > horizon:
            break
        # gather pending endpoints for this plane, sorted for determinism
        node = pend_head[plane]
        n_new = I64(0)
        while node >= 0:
            vk = pend_key[node]
            sl = _ht_find(ht_keys, ht_stamp, epoch, mask_ht, vk)
            if sl < 0:
                if n_vis + n_new >= max_volume:
                    return total, np.uint8(1)
                slot = -sl - 1
                ht_keys[slot] = vk
                ht_stamp[slot] = epoch
                vis_keys[n_vis + n_new] = vk
                n_new += 1
            node = pend_next[node]
        n_vis += n_new
        # lvl_lo already points at the first new vertex; closure loop sorts it
    reason = np.uint8(2) if radius_flag else np.uint8(0)
    return total, reason


@njit(cache=True, nogil=True)
def pioneer_single(seed, tag, stream,
                   d, L, r, offsets, p, src,
                   eff_lo, eff_hi, user_lo, user_hi,
                   max_volume, n_max, horizon, n_up):
    cap = _table_cap(max_volume)
    ht_keys = np.zeros(cap, dtype=np.uint64)
    ht_stamp = np.zeros(cap, dtype=np.uint32)
    mask_ht = U64(cap - 1)
    vis_keys = np.empty(max_volume, dtype=np.uint64)
    cap_pend = max_volume * n_up + 16
    pend_key = np.empty(cap_pend, dtype=np.uint64)
    pend_next = np.empty(cap_pend, dtype=np.int64)
    pend_head = np.empty(horizon + 2, dtype=np.int64)
    ucoords = np.empty(d, dtype=np.int64)
    vcoords = np.empty(d, dtype=np.int64)
    counts = np.zeros(n_max + 1, dtype=np.int64)
    total, reason = _pioneer_sweep(
        seed, tag, stream, d, L, r, offsets, p, src,
        eff_lo, eff_hi, user_lo, user_hi, max_volume, n_max, horizon,
        counts, ht_keys, ht_stamp, np.uint32(1), mask_ht,
        vis_keys, pend_key, pend_next, pend_head, ucoords, vcoords)
    return counts, total, reason


@njit(cache=True, nogil=True)
def batch_pioneer(seed, tag, stream_lo, n_rep,
                  d, L, r, offsets, p, src,
                  eff_lo, eff_hi, user_lo, user_hi,
                  max_volume, n_max, horizon, n_up):
    cap = _table_cap(max_volume)
    ht_keys = np.zeros(cap, dtype=np.uint64)
    ht_stamp = np.zeros(cap, dtype=np.uint32)
    mask_ht = U64(cap - 1)
    vis_keys = np.empty(max_volume, dtype=np.uint64)
    cap_pend = max_volume * n_up + 16
    pend_key = np.empty(cap_pend, dtype=np.uint64)
    pend_next = np.empty(cap_pend, dtype=np.int64)
    pend_head = np.empty(horizon + 2, dtype=np.int64)
    ucoords = np.empty(d, dtype=np.int64)
    vcoords = np.empty(d, dtype=np.int64)
    counts = np.zeros(n_max + 1, dtype=np.int64)
    counts_sum = np.zeros(n_max + 1, dtype=np.int64)
    counts_sq = np.zeros(n_max + 1, dtype=np.int64)
    totals = np.zeros(n_rep, dtype=np.int64)
    reason = np.zeros(n_rep, dtype=np.uint8)
    for j in range(n_rep):
        total, rs = _pioneer_sweep(
            seed, tag, stream_lo + U64(j), d, L, r, offsets, p, src,
            eff_lo, eff_hi, user_lo, user_hi, max_volume, n_max, horizon,
            counts, ht_keys, ht_stamp, np.uint32(j + 1), mask_ht,
            vis_keys, pend_key, pend_next, pend_head, ucoords, vcoords)
        # censored replicas carry incomplete counts; keep them out of the
        # moment sums (they remain visible through totals/reason)
        if rs == np.uint8(0):
            for n in range(n_max + 1):
                counts_sum[n] += counts[n]
                counts_sq[n] += counts[n] * counts[n]
        totals[j] = total
        reason[j] = rs
    return counts_sum, counts_sq, totals, reason
