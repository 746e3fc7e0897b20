"""Pure-Python (numpy) implementation of the solver kernels.

Mirrors ``_kernels.pyx`` function for function; used when the compiled
extension is unavailable or when ``BRAKEPLAN_BACKEND=python`` is set.

Row layout shared by all kernels: rows ``1..n_rows`` of the field are
integrated, row ``r`` starts at ``offsets[r]`` in the flat prefix arrays
and covers columns ``c_lo[r]..c_hi[r]`` inclusive.
"""
import math

import numpy as np

NAME = "python"


# -- scalar helpers ---------------------------------------------------------

def b_position(t, tau, v0, a_prev, kappa):
    """Regime-aware B arc length used by the fast solver (cubic term dropped while moving)."""
    af = a_prev + kappa * tau
    if t >= tau - v0 / af:
        return v0 * tau - v0 * v0 / (2.0 * af)
    alpha = 0.5 * a_prev - kappa * t
    beta = 0.5 * kappa * t * t - a_prev * t
    gamma = v0 * t + 0.5 * a_prev * t * t
    return (alpha * tau + beta) * tau + gamma


def _quad_roots(a, b, c):
    """Real roots of a x^2 + b x + c (empty tuple if none)."""
    if a == 0.0:
        if b == 0.0:
            return ()
        return (-c / b,)
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        if disc > -1e-12 * b * b:
            disc = 0.0
        else:
            return ()
    r = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(r, b))
    if q == 0.0:
        return (0.0,)
    return (q / a, c / q)


def b_image(t, v0, a_prev, kappa, tau_max):
    """(s_min, tau_at_min, s_max, tau_at_max) of the B family at time ``t``."""
    pts = [0.0, tau_max]
    # stop seam: (t - tau)(-a_prev - kappa tau) = v0
    for x in _quad_roots(kappa, a_prev - kappa * t, -a_prev * t - v0):
        if 0.0 < x < tau_max:
            pts.append(x)
    den = 2.0 * a_prev - 4.0 * kappa * t
    if den != 0.0:
        x = t + 3.0 * kappa * t * t / den
        if 0.0 < x < tau_max:
            pts.append(x)
    if kappa < 0.0 and v0 > 0.0:
        x = (-math.sqrt(-0.5 * kappa * v0) - a_prev) / kappa
        if 0.0 < x < tau_max:
            pts.append(x)
    s_mn = s_mx = None
    t_mn = t_mx = 0.0
    for x in pts:
        s = b_position(t, x, v0, a_prev, kappa)
        if s_mn is None or s < s_mn:
            s_mn, t_mn = s, x
        if s_mx is None or s > s_mx:
            s_mx, t_mx = s, x
    return s_mn, t_mn, s_mx, t_mx


def b_tau_nodes(t, s, v0, a_prev, kappa, tau_max):
    """Failure time of the B trajectory through each node ``s`` (vectorized).

    Nodes outside the B image take the failure time of the nearer image
    end; where two branches reach a node the later failure time is kept.
    """
    s = np.asarray(s, dtype=float)
    s_mn, t_mn, s_mx, t_mx = b_image(t, v0, a_prev, kappa, tau_max)
    out = np.where(s <= s_mn, t_mn, t_mx)
    inside = (s > s_mn) & (s < s_mx)
    if not np.any(inside):
        return out
    si = s[inside]
    tol = 1e-12 + 1e-9 * tau_max
    cands = []
    # moving: alpha tau^2 + beta tau + (gamma - s) = 0
    alpha = 0.5 * a_prev - kappa * t
    beta = 0.5 * kappa * t * t - a_prev * t
    gamma = v0 * t + 0.5 * a_prev * t * t
    cands.extend(_vec_roots(np.full_like(si, alpha), np.full_like(si, beta), gamma - si,
                            t, v0, a_prev, kappa, tau_max, tol, moving=True))
    if v0 > 0.0:
        cands.extend(_vec_roots(np.full_like(si, 2.0 * v0 * kappa),
                                2.0 * v0 * a_prev - 2.0 * kappa * si,
                                -v0 * v0 - 2.0 * a_prev * si,
                                t, v0, a_prev, kappa, tau_max, tol, moving=False))
    best = np.full(si.shape, -np.inf)
    fallback = np.full(si.shape, np.nan)
    for tau, valid, in_range in cands:
        best = np.where(valid & (tau > best), tau, best)
        fallback = np.where(np.isnan(fallback) & in_range, tau, fallback)
    res = np.where(np.isfinite(best), best, fallback)
    res = np.where(np.isnan(res), np.where(si - s_mn < s_mx - si, t_mn, t_mx), res)
    out[inside] = np.clip(res, 0.0, tau_max)
    return out


def _vec_roots(a, b, c, t, v0, a_prev, kappa, tau_max, tol, moving):
    disc = b * b - 4.0 * a * c
    disc = np.where((disc < 0) & (disc > -1e-12 * b * b), 0.0, disc)
    ok = disc >= 0
    r = np.sqrt(np.where(ok, disc, 0.0))
    q = -0.5 * (b + np.copysign(r, b))
    with np.errstate(divide="ignore", invalid="ignore"):
        if a[0] == 0.0:
            roots = [np.where(b != 0, -c / b, np.nan)]
        else:
            roots = [q / a, np.where(q != 0, c / q, 0.0)]
    res = []
    for tau in roots:
        tau = np.where(ok, tau, np.nan)
        in_range = (tau >= -tol) & (tau <= tau_max + tol)
        tc = np.clip(tau, 0.0, tau_max)
        af = a_prev + kappa * tc
        is_moving = t < tc - v0 / af
        valid = in_range & (is_moving if moving else ~is_moving)
        res.append((tc, valid, in_range))
    return res


def _gmov_partial(w0, m, s0, se, two_v0t):
    """Integral of (w0 + m (s - s0)) / sqrt(two_v0t - 2 s) over [s0, se]."""
    r0 = np.sqrt(np.maximum(two_v0t - 2.0 * s0, 0.0))
    re = np.sqrt(np.maximum(two_v0t - 2.0 * se, 0.0))
    d = se - s0
    return w0 * (r0 - re) + m * (-d * re + (r0 ** 3 - re ** 3) / 3.0)


# -- fast solver ------------------------------------------------------------

def _interp_row(W, ds, r, x):
    n_s = W.shape[1]
    j = np.clip(np.floor(np.asarray(x) / ds).astype(np.int64), 0, n_s - 2)
    return W[r, j] + (W[r, j + 1] - W[r, j]) * (x / ds - j)


def precompute_rows(W, ds, dt, row_lo, row_hi, c_lo, c_hi, offsets, v0, a_prev,
                    kappa_mag, tau_max_neg, tau_max_pos,
                    ic_rest, ic_mov, tau_neg, ib_neg, tau_pos, ib_pos, ref_neg, ref_pos,
                    img_neg, img_pos):
    """Fill the prefix arrays for rows ``row_lo..row_hi-1`` in place.

    ``img_neg`` / ``img_pos`` (shape ``(n_rows + 1, 2)``) receive the arc
    length range covered by the B family of each valve direction.
    """
    for r in range(row_lo, row_hi):
        t = r * dt
        lo, hi, off = c_lo[r], c_hi[r], offsets[r]
        n = hi - lo + 1
        w = np.asarray(W[r, lo:hi + 1], dtype=float)
        s = np.arange(lo, hi + 1) * ds
        sl = slice(off, off + n)
        ic_rest[sl] = 0.0
        ic_mov[sl] = 0.0
        if n > 1:
            wa, wb = w[:-1], w[1:]
            ic_rest[off + 1:off + n] = np.cumsum(0.5 * (wa + wb) * ds)
            two_v0t = 2.0 * v0 * t
            sa = s[:-1]
            se = np.minimum(s[1:], v0 * t)
            m = (wb - wa) / ds
            cell = np.where(sa < v0 * t, _gmov_partial(wa, m, sa, se, two_v0t), 0.0)
            ic_mov[off + 1:off + n] = np.cumsum(cell)
        for kappa, tau_max, tau_arr, ib_arr, ref, img in (
                (-kappa_mag, tau_max_neg, tau_neg, ib_neg, ref_neg, img_neg),
                (kappa_mag, tau_max_pos, tau_pos, ib_pos, ref_pos, img_pos)):
            if tau_max <= 0.0 or v0 <= 0.0:
                tau_arr[sl] = 0.0
                ib_arr[sl] = 0.0
                ref[r] = 0.0
                img[r] = 0.0
                continue
            s_mn, _, s_mx, _ = b_image(t, v0, a_prev, kappa, tau_max)
            img[r] = (s_mn, s_mx)
            tau = b_tau_nodes(t, s, v0, a_prev, kappa, tau_max)
            tau_arr[sl] = tau
            ib_arr[off] = 0.0
            if n > 1:
                # W at node positions pulled into the image: the end cells only
                # see the part of the cell the trajectories actually reach
                wc = _interp_row(W, ds, r, np.clip(s, s_mn, s_mx))
                ib_arr[off + 1:off + n] = np.cumsum(0.5 * (wc[:-1] + wc[1:]) * np.diff(tau))
            s0 = b_position(t, 0.0, v0, a_prev, kappa)
            ref[r] = lookup_b(W, ds, r, lo, hi, off, tau_arr, ib_arr, s0, 0.0, s_mn, s_mx)


def lookup_rest(W, ds, r, lo, hi, off, arr, s):
    j = int(math.floor(s / ds))
    if j < lo:
        return arr[off]
    if j >= hi:
        return arr[off + hi - lo]
    w0 = W[r, j]
    m = (W[r, j + 1] - w0) / ds
    d = s - j * ds
    return arr[off + j - lo] + w0 * d + 0.5 * m * d * d


def lookup_mov(W, ds, r, lo, hi, off, arr, s, v0t):
    j = int(math.floor(s / ds))
    if j < lo:
        return arr[off]
    if j >= hi:
        return arr[off + hi - lo]
    s0 = j * ds
    if s0 >= v0t:
        return arr[off + j - lo]
    w0 = W[r, j]
    m = (W[r, j + 1] - w0) / ds
    return arr[off + j - lo] + float(_gmov_partial(w0, m, s0, min(s, v0t), 2.0 * v0t))


def lookup_b(W, ds, r, lo, hi, off, tau_arr, ib_arr, s, tau, s_mn, s_mx):
    j = int(math.floor(s / ds))
    if j < lo:
        j = lo
    if j >= hi:
        return ib_arr[off + hi - lo]
    w0 = float(_interp_row(W, ds, r, min(max(j * ds, s_mn), s_mx)))
    wq = float(_interp_row(W, ds, r, min(max(s, s_mn), s_mx)))
    k = off + j - lo
    return ib_arr[k] + 0.5 * (w0 + wq) * (tau - tau_arr[k])


def evaluate_candidates(W, ds, dt, n_rows, c_lo, c_hi, offsets, v0, a_prev, kappa_mag,
                        dt_plan, ic_rest, ic_mov, tau_neg, ib_neg, tau_pos, ib_pos,
                        ref_neg, ref_pos, img_neg, img_pos, candidates, out_pb, out_pc):
    """Per-candidate B and C sums (row weight dt, not yet normalized)."""
    for ci, a in enumerate(candidates):
        pb = 0.0
        pc = 0.0
        t_valve = abs(a - a_prev) / kappa_mag
        a_abs = -a
        if a > a_prev:
            kappa, tau_arr, ib_arr, ref, img = kappa_mag, tau_pos, ib_pos, ref_pos, img_pos
        else:
            kappa, tau_arr, ib_arr, ref, img = -kappa_mag, tau_neg, ib_neg, ref_neg, img_neg
        for r in range(1, n_rows + 1):
            t = r * dt
            lo, hi, off = c_lo[r], c_hi[r], offsets[r]
            if a != a_prev:
                s_q = b_position(t, t_valve, v0, a_prev, kappa)
                pb += abs(lookup_b(W, ds, r, lo, hi, off, tau_arr, ib_arr, s_q, t_valve,
                                   img[r, 0], img[r, 1]) - ref[r])
            tau_hi = min(t, dt_plan)
            tau_stop = t - v0 / a_abs
            row_c = 0.0
            t2 = min(tau_hi, tau_stop)
            if t2 > t_valve:
                base = v0 * v0 / (2.0 * a_abs)
                row_c += (lookup_rest(W, ds, r, lo, hi, off, ic_rest, v0 * t2 + base)
                          - lookup_rest(W, ds, r, lo, hi, off, ic_rest, v0 * t_valve + base)) / v0
            t1 = max(t_valve, tau_stop)
            if tau_hi > t1:
                v0t = v0 * t
                sa = v0t - 0.5 * a_abs * (t - t1) ** 2
                sb = v0t - 0.5 * a_abs * (t - tau_hi) ** 2
                row_c += (lookup_mov(W, ds, r, lo, hi, off, ic_mov, sb, v0t)
                          - lookup_mov(W, ds, r, lo, hi, off, ic_mov, sa, v0t)) / math.sqrt(a_abs)
            pc += row_c
        out_pb[ci] = pb * dt
        out_pc[ci] = pc * dt


# -- direct solver ----------------------------------------------------------

def sample_rows(W, ds, rows, s):
    """Linear interpolation of ``W[rows]`` at ``s`` (zero outside the grid)."""
    n_s = W.shape[1]
    x = s / ds
    j = np.floor(x).astype(np.int64)
    inside = (s >= 0.0) & (x <= n_s - 1)
    j = np.clip(j, 0, n_s - 2)
    lam = x - j
    val = (1.0 - lam) * W[rows, j] + lam * W[rows, np.minimum(j + 1, n_s - 1)]
    return np.where(inside, val, 0.0)


def direct_candidate(W, ds, dt, n_rows, v0, dt_plan, tau, alpha, wl, wr, left_b, right_b):
    """Post-failure (B part, C part) sums over rows for one candidate."""
    tau = np.asarray(tau, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    K = tau.size
    rows = np.arange(1, n_rows + 1)
    t = rows * dt
    U = np.minimum(t, dt_plan)
    # position of every (row, sample) pair
    tt = t[:, None]
    tf = tau[None, :]
    af = alpha[None, :]
    t_stop = tf - v0 / af
    pos = v0 * tt + 0.5 * af * (tt - tf) ** 2
    pos = np.where(tt >= t_stop, v0 * tf - v0 * v0 / (2.0 * af), pos)
    pos = np.where(tt <= tf, v0 * tt, pos)
    val = sample_rows(W, ds, rows[:, None], pos)
    nxt = np.append(tau[1:], np.inf)
    use_l = tau[None, :] <= U[:, None]
    use_r = nxt[None, :] <= U[:, None]
    wlb = np.where(left_b, wl, 0.0)
    wrb = np.where(right_b, wr, 0.0)
    wB = use_l * wlb[None, :] + use_r * wrb[None, :]
    wAll = use_l * wl[None, :] + use_r * wr[None, :]
    pb = float(np.sum(wB * val)) * dt
    pc = float(np.sum((wAll - wB) * val)) * dt
    return pb, pc
