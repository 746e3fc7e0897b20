# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled solver kernels.

Same functions and calling conventions as ``_kernels_py``; the loops run
without the GIL so row chunks can be processed on several threads.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, floor, fabs, copysign, INFINITY, isnan, NAN

cnp.import_array()

NAME = "compiled"

ctypedef cnp.int64_t i64


cdef inline double _b_position(double t, double tau, double v0, double a_prev,
                               double kappa) noexcept nogil:
    cdef double af = a_prev + kappa * tau
    if t >= tau - v0 / af:
        return v0 * tau - v0 * v0 / (2.0 * af)
    cdef double al = 0.5 * a_prev - kappa * t
    cdef double be = 0.5 * kappa * t * t - a_prev * t
    cdef double ga = v0 * t + 0.5 * a_prev * t * t
    return (al * tau + be) * tau + ga


cdef inline int _quad_roots(double a, double b, double c, double* out) noexcept nogil:
    cdef double disc, r, q
    if a == 0.0:
        if b == 0.0:
            return 0
        out[0] = -c / b
        return 1
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        if disc > -1e-12 * b * b:
            disc = 0.0
        else:
            return 0
    r = sqrt(disc)
    q = -0.5 * (b + copysign(r, b))
    if q == 0.0:
        out[0] = 0.0
        return 1
    out[0] = q / a
    out[1] = c / q
    return 2


cdef void _b_image(double t, double v0, double a_prev, double kappa, double tau_max,
                   double* res) noexcept nogil:
    cdef double pts[6]
    cdef double roots[2]
    cdef int n = 2, k, nr
    cdef double x, den, s
    pts[0] = 0.0
    pts[1] = tau_max
    nr = _quad_roots(kappa, a_prev - kappa * t, -a_prev * t - v0, roots)
    for k in range(nr):
        if 0.0 < roots[k] < tau_max:
            pts[n] = roots[k]
            n += 1
    den = 2.0 * a_prev - 4.0 * kappa * t
    if den != 0.0:
        x = t + 3.0 * kappa * t * t / den
        if 0.0 < x < tau_max:
            pts[n] = x
            n += 1
    if kappa < 0.0 and v0 > 0.0:
        x = (-sqrt(-0.5 * kappa * v0) - a_prev) / kappa
        if 0.0 < x < tau_max:
            pts[n] = x
            n += 1
    for k in range(n):
        s = _b_position(t, pts[k], v0, a_prev, kappa)
        if k == 0 or s < res[0]:
            res[0] = s
            res[1] = pts[k]
        if k == 0 or s > res[2]:
            res[2] = s
            res[3] = pts[k]


cdef inline void _consider(double tau, bint ok, double t, double v0, double a_prev,
                           double kappa, double tau_max, double tol, bint moving,
                           double* best, double* fallback) noexcept nogil:
    cdef double tc, af
    cdef bint is_moving
    if not ok or isnan(tau):
        return
    if tau < -tol or tau > tau_max + tol:
        return
    tc = tau
    if tc < 0.0:
        tc = 0.0
    elif tc > tau_max:
        tc = tau_max
    if isnan(fallback[0]):
        fallback[0] = tc
    af = a_prev + kappa * tc
    is_moving = t < tc - v0 / af
    if is_moving == moving and tc > best[0]:
        best[0] = tc


cdef void _roots_into(double a, double b, double c, double t, double v0, double a_prev,
                      double kappa, double tau_max, double tol, bint moving,
                      double* best, double* fallback) noexcept nogil:
    cdef double disc = b * b - 4.0 * a * c
    cdef double r, q
    cdef bint ok
    if disc < 0.0 and disc > -1e-12 * b * b:
        disc = 0.0
    ok = disc >= 0.0
    r = sqrt(disc) if ok else 0.0
    q = -0.5 * (b + copysign(r, b))
    if a == 0.0:
        _consider(-c / b if b != 0.0 else NAN, ok, t, v0, a_prev, kappa, tau_max, tol,
                  moving, best, fallback)
    else:
        _consider(q / a, ok, t, v0, a_prev, kappa, tau_max, tol, moving, best, fallback)
        _consider(c / q if q != 0.0 else 0.0, ok, t, v0, a_prev, kappa, tau_max, tol,
                  moving, best, fallback)


cdef double _b_tau_node(double t, double s, double v0, double a_prev, double kappa,
                        double tau_max, double* img) noexcept nogil:
    cdef double s_mn = img[0], t_mn = img[1], s_mx = img[2], t_mx = img[3]
    cdef double best = -INFINITY, fallback = NAN, res
    cdef double tol = 1e-12 + 1e-9 * tau_max
    if s <= s_mn:
        return t_mn
    if s >= s_mx:
        return t_mx
    _roots_into(0.5 * a_prev - kappa * t, 0.5 * kappa * t * t - a_prev * t,
                v0 * t + 0.5 * a_prev * t * t - s,
                t, v0, a_prev, kappa, tau_max, tol, True, &best, &fallback)
    if v0 > 0.0:
        _roots_into(2.0 * v0 * kappa, 2.0 * v0 * a_prev - 2.0 * kappa * s,
                    -v0 * v0 - 2.0 * a_prev * s,
                    t, v0, a_prev, kappa, tau_max, tol, False, &best, &fallback)
    if best > -INFINITY:
        res = best
    elif not isnan(fallback):
        res = fallback
    elif s - s_mn < s_mx - s:
        res = t_mn
    else:
        res = t_mx
    if res < 0.0:
        return 0.0
    if res > tau_max:
        return tau_max
    return res


cdef inline double _gmov_partial(double w0, double m, double s0, double se,
                                 double two_v0t) noexcept nogil:
    cdef double r0 = two_v0t - 2.0 * s0
    cdef double re = two_v0t - 2.0 * se
    r0 = sqrt(r0) if r0 > 0.0 else 0.0
    re = sqrt(re) if re > 0.0 else 0.0
    return w0 * (r0 - re) + m * (-(se - s0) * re + (r0 * r0 * r0 - re * re * re) / 3.0)


cdef inline double _interp_row(const double[:, ::1] W, double ds, Py_ssize_t r,
                               double x) noexcept nogil:
    cdef Py_ssize_t n_s = W.shape[1]
    cdef Py_ssize_t j = <Py_ssize_t>floor(x / ds)
    if j < 0:
        j = 0
    elif j > n_s - 2:
        j = n_s - 2
    return W[r, j] + (W[r, j + 1] - W[r, j]) * (x / ds - j)


cdef inline double _clip(double x, double lo, double hi) noexcept nogil:
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


# -- python-visible helpers (parity tests) -----------------------------------

def b_position(double t, double tau, double v0, double a_prev, double kappa):
    return _b_position(t, tau, v0, a_prev, kappa)


def b_image(double t, double v0, double a_prev, double kappa, double tau_max):
    cdef double res[4]
    _b_image(t, v0, a_prev, kappa, tau_max, res)
    return res[0], res[1], res[2], res[3]


def b_tau_nodes(double t, s, double v0, double a_prev, double kappa, double tau_max):
    cdef double[::1] sv = np.ascontiguousarray(s, dtype=np.float64).ravel()
    out = np.empty(sv.shape[0])
    cdef double[::1] o = out
    cdef double img[4]
    cdef Py_ssize_t j
    _b_image(t, v0, a_prev, kappa, tau_max, img)
    for j in range(sv.shape[0]):
        o[j] = _b_tau_node(t, sv[j], v0, a_prev, kappa, tau_max, img)
    return out


# -- fast solver ---------------------------------------------------------------

cdef inline double _lookup_rest(const double[:, ::1] W, double ds, Py_ssize_t r, i64 lo,
                                i64 hi, i64 off, const double[::1] arr,
                                double s) noexcept nogil:
    cdef i64 j = <i64>floor(s / ds)
    cdef double w0, m, d
    if j < lo:
        return arr[off]
    if j >= hi:
        return arr[off + hi - lo]
    w0 = W[r, j]
    m = (W[r, j + 1] - w0) / ds
    d = s - j * ds
    return arr[off + j - lo] + w0 * d + 0.5 * m * d * d


cdef inline double _lookup_mov(const double[:, ::1] W, double ds, Py_ssize_t r, i64 lo,
                               i64 hi, i64 off, const double[::1] arr, double s,
                               double v0t) noexcept nogil:
    cdef i64 j = <i64>floor(s / ds)
    cdef double w0, m, s0
    if j < lo:
        return arr[off]
    if j >= hi:
        return arr[off + hi - lo]
    s0 = j * ds
    if s0 >= v0t:
        return arr[off + j - lo]
    w0 = W[r, j]
    m = (W[r, j + 1] - w0) / ds
    return arr[off + j - lo] + _gmov_partial(w0, m, s0, s if s < v0t else v0t, 2.0 * v0t)


cdef inline double _lookup_b(const double[:, ::1] W, double ds, Py_ssize_t r, i64 lo,
                             i64 hi, i64 off, const double[::1] tau_arr,
                             const double[::1] ib_arr, double s, double tau, double s_mn,
                             double s_mx) noexcept nogil:
    cdef i64 j = <i64>floor(s / ds)
    cdef double w0, wq
    cdef i64 k
    if j < lo:
        j = lo
    if j >= hi:
        return ib_arr[off + hi - lo]
    w0 = _interp_row(W, ds, r, _clip(j * ds, s_mn, s_mx))
    wq = _interp_row(W, ds, r, _clip(s, s_mn, s_mx))
    k = off + j - lo
    return ib_arr[k] + 0.5 * (w0 + wq) * (tau - tau_arr[k])


def lookup_rest(W, double ds, Py_ssize_t r, i64 lo, i64 hi, i64 off, arr, double s):
    return _lookup_rest(W, ds, r, lo, hi, off, arr, s)


def lookup_mov(W, double ds, Py_ssize_t r, i64 lo, i64 hi, i64 off, arr, double s,
               double v0t):
    return _lookup_mov(W, ds, r, lo, hi, off, arr, s, v0t)


def lookup_b(W, double ds, Py_ssize_t r, i64 lo, i64 hi, i64 off, tau_arr, ib_arr,
             double s, double tau, double s_mn, double s_mx):
    return _lookup_b(W, ds, r, lo, hi, off, tau_arr, ib_arr, s, tau, s_mn, s_mx)


cdef void _b_row(const double[:, ::1] W, double ds, Py_ssize_t r, double t, i64 lo, i64 hi,
                 i64 off, double v0, double a_prev, double kappa, double tau_max,
                 double[::1] tau_arr, double[::1] ib_arr, double[::1] ref,
                 double[:, ::1] img_out) noexcept nogil:
    cdef i64 n = hi - lo + 1, j
    cdef double img[4]
    cdef double s0, w_prev, w_cur
    if tau_max <= 0.0 or v0 <= 0.0:
        for j in range(n):
            tau_arr[off + j] = 0.0
            ib_arr[off + j] = 0.0
        ref[r] = 0.0
        img_out[r, 0] = 0.0
        img_out[r, 1] = 0.0
        return
    _b_image(t, v0, a_prev, kappa, tau_max, img)
    img_out[r, 0] = img[0]
    img_out[r, 1] = img[2]
    for j in range(n):
        tau_arr[off + j] = _b_tau_node(t, (lo + j) * ds, v0, a_prev, kappa, tau_max, img)
    ib_arr[off] = 0.0
    # W at node positions pulled into the image
    w_prev = _interp_row(W, ds, r, _clip(lo * ds, img[0], img[2]))
    for j in range(1, n):
        w_cur = _interp_row(W, ds, r, _clip((lo + j) * ds, img[0], img[2]))
        ib_arr[off + j] = ib_arr[off + j - 1] + 0.5 * (w_prev + w_cur) * (
            tau_arr[off + j] - tau_arr[off + j - 1])
        w_prev = w_cur
    s0 = _b_position(t, 0.0, v0, a_prev, kappa)
    ref[r] = _lookup_b(W, ds, r, lo, hi, off, tau_arr, ib_arr, s0, 0.0, img[0], img[2])


def precompute_rows(const double[:, ::1] W, double ds, double dt, Py_ssize_t row_lo,
                    Py_ssize_t row_hi, const i64[::1] c_lo, const i64[::1] c_hi,
                    const i64[::1] offsets, double v0, double a_prev, double kappa_mag,
                    double tau_max_neg, double tau_max_pos,
                    double[::1] ic_rest, double[::1] ic_mov, double[::1] tau_neg,
                    double[::1] ib_neg, double[::1] tau_pos, double[::1] ib_pos,
                    double[::1] ref_neg, double[::1] ref_pos, double[:, ::1] img_neg,
                    double[:, ::1] img_pos):
    """Fill the prefix arrays for rows ``row_lo..row_hi-1`` in place."""
    cdef Py_ssize_t r
    cdef i64 lo, hi, off, n, j
    cdef double t, v0t, sa, se, wa, wb, cell
    with nogil:
        for r in range(row_lo, row_hi):
            t = r * dt
            lo = c_lo[r]
            hi = c_hi[r]
            off = offsets[r]
            n = hi - lo + 1
            v0t = v0 * t
            ic_rest[off] = 0.0
            ic_mov[off] = 0.0
            for j in range(1, n):
                wa = W[r, lo + j - 1]
                wb = W[r, lo + j]
                ic_rest[off + j] = ic_rest[off + j - 1] + 0.5 * (wa + wb) * ds
                sa = (lo + j - 1) * ds
                cell = 0.0
                if sa < v0t:
                    se = (lo + j) * ds
                    if se > v0t:
                        se = v0t
                    cell = _gmov_partial(wa, (wb - wa) / ds, sa, se, 2.0 * v0t)
                ic_mov[off + j] = ic_mov[off + j - 1] + cell
            _b_row(W, ds, r, t, lo, hi, off, v0, a_prev, -kappa_mag, tau_max_neg,
                   tau_neg, ib_neg, ref_neg, img_neg)
            _b_row(W, ds, r, t, lo, hi, off, v0, a_prev, kappa_mag, tau_max_pos,
                   tau_pos, ib_pos, ref_pos, img_pos)


def evaluate_candidates(const double[:, ::1] W, double ds, double dt, Py_ssize_t n_rows,
                        const i64[::1] c_lo, const i64[::1] c_hi, const i64[::1] offsets,
                        double v0, double a_prev, double kappa_mag, double dt_plan,
                        const double[::1] ic_rest, const double[::1] ic_mov,
                        const double[::1] tau_neg, const double[::1] ib_neg,
                        const double[::1] tau_pos, const double[::1] ib_pos,
                        const double[::1] ref_neg, const double[::1] ref_pos,
                        const double[:, ::1] img_neg, const double[:, ::1] img_pos,
                        const double[::1] candidates, double[::1] out_pb,
                        double[::1] out_pc):
    """Per-candidate B and C sums (row weight dt, not yet normalized)."""
    cdef Py_ssize_t ci, r
    cdef double a, pb, pc, t_valve, a_abs, kappa, t, s_q, tau_hi, tau_stop, row_c
    cdef double t1, t2, base, v0t, sa, sb
    cdef i64 lo, hi, off
    cdef const double[::1] tau_arr
    cdef const double[::1] ib_arr
    cdef const double[::1] ref
    cdef const double[:, ::1] img
    for ci in range(candidates.shape[0]):
        a = candidates[ci]
        if a > a_prev:
            kappa = kappa_mag
            tau_arr = tau_pos
            ib_arr = ib_pos
            ref = ref_pos
            img = img_pos
        else:
            kappa = -kappa_mag
            tau_arr = tau_neg
            ib_arr = ib_neg
            ref = ref_neg
            img = img_neg
        with nogil:
            pb = 0.0
            pc = 0.0
            t_valve = fabs(a - a_prev) / kappa_mag
            a_abs = -a
            for r in range(1, n_rows + 1):
                t = r * dt
                lo = c_lo[r]
                hi = c_hi[r]
                off = offsets[r]
                if a != a_prev:
                    s_q = _b_position(t, t_valve, v0, a_prev, kappa)
                    pb += fabs(_lookup_b(W, ds, r, lo, hi, off, tau_arr, ib_arr, s_q, t_valve,
                                         img[r, 0], img[r, 1]) - ref[r])
                tau_hi = t if t < dt_plan else dt_plan
                tau_stop = t - v0 / a_abs
                row_c = 0.0
                t2 = tau_hi if tau_hi < tau_stop else tau_stop
                if t2 > t_valve:
                    base = v0 * v0 / (2.0 * a_abs)
                    row_c += (_lookup_rest(W, ds, r, lo, hi, off, ic_rest, v0 * t2 + base)
                              - _lookup_rest(W, ds, r, lo, hi, off, ic_rest,
                                             v0 * t_valve + base)) / v0
                t1 = t_valve if t_valve > tau_stop else tau_stop
                if tau_hi > t1:
                    v0t = v0 * t
                    sa = v0t - 0.5 * a_abs * (t - t1) * (t - t1)
                    sb = v0t - 0.5 * a_abs * (t - tau_hi) * (t - tau_hi)
                    row_c += (_lookup_mov(W, ds, r, lo, hi, off, ic_mov, sb, v0t)
                              - _lookup_mov(W, ds, r, lo, hi, off, ic_mov, sa, v0t)) / sqrt(a_abs)
                pc += row_c
            out_pb[ci] = pb * dt
            out_pc[ci] = pc * dt


# -- direct solver -------------------------------------------------------------

cdef inline double _sample(const double[:, ::1] W, double ds, Py_ssize_t r,
                           double s) noexcept nogil:
    cdef Py_ssize_t n_s = W.shape[1]
    cdef double x = s / ds, lam
    cdef Py_ssize_t j
    if s < 0.0 or x > n_s - 1:
        return 0.0
    j = <Py_ssize_t>floor(x)
    if j > n_s - 2:
        j = n_s - 2
    lam = x - j
    return (1.0 - lam) * W[r, j] + lam * W[r, j + 1]


def sample_rows(W, double ds, rows, s):
    """Linear interpolation of ``W[rows]`` at ``s`` (zero outside the grid)."""
    cdef const double[:, ::1] Wv = np.ascontiguousarray(W, dtype=np.float64)
    rr, ss = np.broadcast_arrays(np.asarray(rows, dtype=np.int64), np.asarray(s, dtype=float))
    out = np.empty(ss.shape)
    flat_r = rr.ravel()
    flat_s = ss.ravel()
    cdef double[::1] o = out.reshape(-1)
    cdef Py_ssize_t k
    for k in range(flat_s.shape[0]):
        o[k] = _sample(Wv, ds, flat_r[k], flat_s[k])
    return out


def direct_candidate(const double[:, ::1] W, double ds, double dt, Py_ssize_t n_rows,
                     double v0, double dt_plan, tau, alpha, wl, wr, left_b, right_b):
    """Post-failure (B part, C part) sums over rows for one candidate."""
    cdef const double[::1] tv = np.ascontiguousarray(tau, dtype=np.float64)
    cdef const double[::1] av = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef const double[::1] wlv = np.ascontiguousarray(wl, dtype=np.float64)
    cdef const double[::1] wrv = np.ascontiguousarray(wr, dtype=np.float64)
    cdef const cnp.uint8_t[::1] lb = np.ascontiguousarray(left_b, dtype=np.uint8)
    cdef const cnp.uint8_t[::1] rb = np.ascontiguousarray(right_b, dtype=np.uint8)
    cdef Py_ssize_t K = tv.shape[0], r, k
    cdef double pb = 0.0, pc = 0.0, t, U, tf, af, pos, val, nxt, wb, wa
    with nogil:
        for r in range(1, n_rows + 1):
            t = r * dt
            U = t if t < dt_plan else dt_plan
            for k in range(K):
                tf = tv[k]
                if tf > U:
                    break
                af = av[k]
                if t <= tf:
                    pos = v0 * t
                elif t >= tf - v0 / af:
                    pos = v0 * tf - v0 * v0 / (2.0 * af)
                else:
                    pos = v0 * t + 0.5 * af * (t - tf) * (t - tf)
                val = _sample(W, ds, r, pos)
                wa = wlv[k]
                wb = wlv[k] if lb[k] else 0.0
                nxt = tv[k + 1] if k + 1 < K else INFINITY
                if nxt <= U:
                    wa = wa + wrv[k]
                    if rb[k]:
                        wb = wb + wrv[k]
                pb += wb * val
                pc += (wa - wb) * val
    return pb * dt, pc * dt
