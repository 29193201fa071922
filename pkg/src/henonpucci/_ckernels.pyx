# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled integration kernel.

Line-by-line port of ``_pykernels.integrate``; the floating point
operation order is kept identical so both backends agree bit for bit on
platforms without fused multiply-add contraction.
"""
from libc.math cimport exp, sqrt, pow, fabs, isfinite
from libc.stdlib cimport malloc, realloc, free

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef enum:
    NSWITCH = 5

cdef int RADIAL = 0
cdef int PHASE = 1

cdef int DONE = 0
cdef int TERMINAL = 1
cdef int STEP_LIMIT = 2
cdef int STEP_UNDERFLOW = 3
cdef int NONFINITE = 4

cdef double C2 = 1.0 / 5.0
cdef double C3 = 3.0 / 10.0
cdef double C4 = 4.0 / 5.0
cdef double C5 = 8.0 / 9.0
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0
cdef double A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0
cdef double A42 = -56.0 / 15.0
cdef double A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0
cdef double A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0
cdef double A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0
cdef double A62 = -355.0 / 33.0
cdef double A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0
cdef double A65 = -5103.0 / 18656.0
cdef double A71 = 35.0 / 384.0
cdef double A73 = 500.0 / 1113.0
cdef double A74 = 125.0 / 192.0
cdef double A75 = -2187.0 / 6784.0
cdef double A76 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0
cdef double E3 = -71.0 / 16695.0
cdef double E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0
cdef double E6 = 22.0 / 525.0
cdef double E7 = -1.0 / 40.0

cdef double SAFE = 0.9
cdef double FACC1 = 5.0
cdef double FACC2 = 0.1
cdef double BETA = 0.04
cdef double EXPO1 = 0.2 - 0.04 * 0.75
cdef double EPS16 = 16.0 * 2.220446049250313e-16


cdef struct Sys:
    int system
    double par[9]


cdef inline double _spow(double u, double p) nogil:
    if u == 0.0:
        return 0.0
    if u > 0.0:
        return pow(u, p)
    return -pow(-u, p)


cdef inline void _rhs(Sys* s, int mode0, int mode1, double t, double y0, double y1,
                      double* f0, double* f1) nogil:
    cdef double lam = s.par[0]
    cdef double Lam = s.par[1]
    cdef double N = s.par[2]
    cdef double p = s.par[3]
    cdef double a = s.par[4]
    cdef bint plus = s.par[5] > 0.0
    cdef double cm, sM, arg, z
    if plus:
        cm = Lam if mode0 > 0 else lam
        sM = Lam if mode1 > 0 else lam
    else:
        cm = lam if mode0 > 0 else Lam
        sM = lam if mode1 > 0 else Lam
    if s.system == RADIAL:
        arg = -(N - 1.0) * cm * y1 / t - pow(t, a) * _spow(y0, p)
        f0[0] = y1
        f1[0] = arg / sM
        return
    z = exp(y1)
    arg = (N - 1.0) * cm * y0 - z
    f0[0] = y0 * (y0 + 1.0) - arg / sM
    f1[0] = 2.0 + a - (p - 1.0) * y0


cdef inline double _switch(int k, Sys* s, int mode0, double t, double y0, double y1) nogil:
    cdef double cm
    if s.system == RADIAL:
        if k == 0:
            return y1
        if k == 1:
            if s.par[5] > 0.0:
                cm = s.par[1] if mode0 > 0 else s.par[0]
            else:
                cm = s.par[0] if mode0 > 0 else s.par[1]
            return -(s.par[2] - 1.0) * cm * y1 / t - pow(t, s.par[4]) * _spow(y0, s.par[3])
        if k == 2:
            return y0
        return 1.0
    if k == 0:
        return -y0
    if k == 1:
        if s.par[5] > 0.0:
            cm = s.par[1] if mode0 > 0 else s.par[0]
        else:
            cm = s.par[0] if mode0 > 0 else s.par[1]
        return (s.par[2] - 1.0) * cm * y0 - exp(y1)
    if k == 2:
        return y0 - s.par[6]
    if k == 3:
        return y0 - s.par[7]
    return y0 - s.par[8]


cdef inline int _sgn(double v) nogil:
    if v > 0.0:
        return 1
    if v < 0.0:
        return -1
    return 0


cdef inline void _hermite(double th, double h, double a0, double a1, double b0, double b1,
                          double fa0, double fa1, double fb0, double fb1,
                          double* r0, double* r1) nogil:
    cdef double d0 = b0 - a0
    cdef double d1 = b1 - a1
    cdef double q = th * (th - 1.0)
    r0[0] = a0 + th * d0 + q * ((1.0 - 2.0 * th) * d0 + (th - 1.0) * h * fa0 + th * h * fb0)
    r1[0] = a1 + th * d1 + q * ((1.0 - 2.0 * th) * d1 + (th - 1.0) * h * fa1 + th * h * fb1)


cdef inline double _err_norm(double e0, double e1, double y0, double y1, double n0, double n1,
                             double rtol, double atol) nogil:
    cdef double s0 = atol + rtol * max(fabs(y0), fabs(n0))
    cdef double s1 = atol + rtol * max(fabs(y1), fabs(n1))
    cdef double q0 = e0 / s0
    cdef double q1 = e1 / s1
    return sqrt(0.5 * (q0 * q0 + q1 * q1))


cdef inline void _dp_step(Sys* s, int m0, int m1, double t, double y0, double y1,
                          double k10, double k11, double h,
                          double* n0, double* n1, double* k70, double* k71,
                          double* e0, double* e1) nogil:
    cdef double k20, k21, k30, k31, k40, k41, k50, k51, k60, k61
    _rhs(s, m0, m1, t + C2 * h, y0 + h * (A21 * k10), y1 + h * (A21 * k11), &k20, &k21)
    _rhs(s, m0, m1, t + C3 * h,
         y0 + h * (A31 * k10 + A32 * k20), y1 + h * (A31 * k11 + A32 * k21), &k30, &k31)
    _rhs(s, m0, m1, t + C4 * h,
         y0 + h * (A41 * k10 + A42 * k20 + A43 * k30),
         y1 + h * (A41 * k11 + A42 * k21 + A43 * k31), &k40, &k41)
    _rhs(s, m0, m1, t + C5 * h,
         y0 + h * (A51 * k10 + A52 * k20 + A53 * k30 + A54 * k40),
         y1 + h * (A51 * k11 + A52 * k21 + A53 * k31 + A54 * k41), &k50, &k51)
    _rhs(s, m0, m1, t + h,
         y0 + h * (A61 * k10 + A62 * k20 + A63 * k30 + A64 * k40 + A65 * k50),
         y1 + h * (A61 * k11 + A62 * k21 + A63 * k31 + A64 * k41 + A65 * k51), &k60, &k61)
    n0[0] = y0 + h * (A71 * k10 + A73 * k30 + A74 * k40 + A75 * k50 + A76 * k60)
    n1[0] = y1 + h * (A71 * k11 + A73 * k31 + A74 * k41 + A75 * k51 + A76 * k61)
    _rhs(s, m0, m1, t + h, n0[0], n1[0], k70, k71)
    e0[0] = h * (E1 * k10 + E3 * k30 + E4 * k40 + E5 * k50 + E6 * k60 + E7 * k70[0])
    e1[0] = h * (E1 * k11 + E3 * k31 + E4 * k41 + E5 * k51 + E6 * k61 + E7 * k71[0])


cdef double _polish(int k, Sys* s, int mode0, int mode1, int s_old, double t, double y0,
                    double y1, double k10, double k11, double tn, double lo, double hi,
                    double event_tol, double* n0, double* n1, double* k70, double* k71,
                    long* nfev) nogil:
    cdef double ta = t
    cdef double ga = _switch(k, s, mode0, t, y0, y1)
    cdef double tb = -1.0
    cdef double gb = 0.0
    cdef bint have_b = False
    cdef double c0, c1, d0, d1, e0, e1, gc, tc
    cdef double cands[3]
    cdef int i, sc, side, it
    cands[0] = lo
    cands[1] = hi
    cands[2] = tn
    for i in range(3):
        tc = cands[i]
        if tc == t:
            continue
        _dp_step(s, mode0, mode1, t, y0, y1, k10, k11, tc - t, &c0, &c1, &d0, &d1, &e0, &e1)
        nfev[0] += 6
        gc = _switch(k, s, mode0, tc, c0, c1)
        sc = _sgn(gc)
        if sc != 0 and sc != s_old:
            tb = tc
            gb = gc
            have_b = True
            break
        ta = tc
        ga = gc
    if not have_b:
        tb = tn
    side = 0
    it = 0
    while have_b and fabs(tb - ta) > event_tol and it < 60:
        it += 1
        if gb != ga:
            tc = tb - gb * (tb - ta) / (gb - ga)
        else:
            tc = 0.5 * (ta + tb)
        if not ((ta < tc and tc < tb) or (tb < tc and tc < ta)):
            tc = 0.5 * (ta + tb)
            if tc == ta or tc == tb:
                break
        _dp_step(s, mode0, mode1, t, y0, y1, k10, k11, tc - t, &c0, &c1, &d0, &d1, &e0, &e1)
        nfev[0] += 6
        gc = _switch(k, s, mode0, tc, c0, c1)
        sc = _sgn(gc)
        if sc == 0:
            tb = tc
            break
        if sc != s_old:
            tb = tc
            gb = gc
            if side == 1:
                ga = 0.5 * ga
            side = 1
        else:
            ta = tc
            ga = gc
            if side == -1:
                gb = 0.5 * gb
            side = -1
    _dp_step(s, mode0, mode1, t, y0, y1, k10, k11, tb - t, n0, n1, k70, k71, &e0, &e1)
    nfev[0] += 6
    return tb


cdef struct Buf:
    double* a
    double* b
    double* c
    long* id
    Py_ssize_t n
    Py_ssize_t cap


cdef int _buf_init(Buf* B, Py_ssize_t cap, bint with_id):
    B.n = 0
    B.cap = cap
    B.a = <double*> malloc(cap * sizeof(double))
    B.b = <double*> malloc(cap * sizeof(double))
    B.c = <double*> malloc(cap * sizeof(double))
    B.id = <long*> malloc(cap * sizeof(long)) if with_id else NULL
    if B.a == NULL or B.b == NULL or B.c == NULL or (with_id and B.id == NULL):
        return -1
    return 0


cdef int _buf_push(Buf* B, double a, double b, double c, long i) nogil:
    cdef Py_ssize_t cap
    cdef double* pa
    cdef double* pb
    cdef double* pc
    cdef long* pi
    if B.n == B.cap:
        cap = 2 * B.cap
        pa = <double*> realloc(B.a, cap * sizeof(double))
        if pa == NULL:
            return -1
        B.a = pa
        pb = <double*> realloc(B.b, cap * sizeof(double))
        if pb == NULL:
            return -1
        B.b = pb
        pc = <double*> realloc(B.c, cap * sizeof(double))
        if pc == NULL:
            return -1
        B.c = pc
        if B.id != NULL:
            pi = <long*> realloc(B.id, cap * sizeof(long))
            if pi == NULL:
                return -1
            B.id = pi
        B.cap = cap
    B.a[B.n] = a
    B.b[B.n] = b
    B.c[B.n] = c
    if B.id != NULL:
        B.id[B.n] = i
    B.n += 1
    return 0


cdef void _buf_free(Buf* B):
    free(B.a)
    free(B.b)
    free(B.c)
    if B.id != NULL:
        free(B.id)


def integrate(int system, par, double t0, double y0, double y1, double t_end,
              double rtol, double atol, double h0, double hmax, long max_steps,
              double event_tol, int terminal_mask, int record_mask):
    """Integrate from ``t0`` toward ``t_end``; see ``_pykernels.integrate``."""
    cdef Sys S
    cdef int i
    cdef double[:] pv = np.ascontiguousarray(par, dtype=np.float64)
    S.system = system
    for i in range(9):
        S.par[i] = pv[i]

    cdef Buf samples
    cdef Buf events
    if _buf_init(&samples, 1024, False) != 0 or _buf_init(&events, 64, True) != 0:
        raise MemoryError()

    cdef double t = t0
    cdef double direction = 1.0 if t_end >= t else -1.0
    cdef int active = 3 | terminal_mask | record_mask
    cdef long nfev = 0, nacc = 0, nrej = 0, nsteps = 0
    cdef int status = DONE
    cdef int term_id = -1
    cdef int mode0, mode1, k, s, sgk, sm, found
    cdef int sg[NSWITCH]
    cdef double f0, f1, g, hp, k10, k11, span, h, sc0, sc1, d0, d1, d2, dm, hh, h1
    cdef double g0, g1, n0, n1, k70, k71, e0, e1, err, fac11, fac, hnew, facold, tn
    cdef double t_ev, ev_lo, lo, hi, mid, th, m0v, m1v, gm
    cdef bint last_rejected, clipped
    cdef int push_fail = 0

    try:
        push_fail |= _buf_push(&samples, t, y0, y1, 0)

        mode0 = _sgn(_switch(0, &S, -1, t, y0, y1))
        if mode0 == 0:
            mode0 = -1
        mode1 = _sgn(_switch(1, &S, mode0, t, y0, y1))
        if mode1 == 0:
            mode1 = -1
        _rhs(&S, mode0, mode1, t, y0, y1, &f0, &f1)
        nfev += 1
        hp = 1e-7 * max(1.0, fabs(t)) * direction
        for k in range(NSWITCH):
            sg[k] = 0
            if not (active >> k) & 1:
                continue
            g = _switch(k, &S, mode0, t, y0, y1)
            s = _sgn(g)
            if s == 0:
                s = _sgn(_switch(k, &S, mode0, t + hp, y0 + hp * f0, y1 + hp * f1))
                if s == 0:
                    s = -1
            sg[k] = s
        if sg[0] != mode0 or sg[1] != mode1:
            mode0 = sg[0]
            mode1 = sg[1]
            _rhs(&S, mode0, mode1, t, y0, y1, &f0, &f1)
            nfev += 1
        k10 = f0
        k11 = f1

        span = fabs(t_end - t)
        if span == 0.0:
            return _pack(&samples, &events, DONE, -1, nfev, 0, 0)
        if hmax <= 0.0:
            hmax = span
        if h0 > 0.0:
            h = min(h0, hmax, span)
        else:
            sc0 = atol + rtol * fabs(y0)
            sc1 = atol + rtol * fabs(y1)
            d0 = sqrt(0.5 * ((y0 / sc0) * (y0 / sc0) + (y1 / sc1) * (y1 / sc1)))
            d1 = sqrt(0.5 * ((k10 / sc0) * (k10 / sc0) + (k11 / sc1) * (k11 / sc1)))
            if d0 < 1e-5 or d1 < 1e-5:
                hh = 1e-6
            else:
                hh = 0.01 * d0 / d1
            hh = min(hh, span)
            _rhs(&S, mode0, mode1, t + direction * hh,
                 y0 + direction * hh * k10, y1 + direction * hh * k11, &g0, &g1)
            nfev += 1
            d2 = sqrt(0.5 * (((g0 - k10) / sc0) * ((g0 - k10) / sc0)
                             + ((g1 - k11) / sc1) * ((g1 - k11) / sc1))) / hh
            dm = max(d1, d2)
            if dm <= 1e-15:
                h1 = max(1e-6, hh * 1e-3)
            else:
                h1 = pow(0.01 / dm, 0.2)
            h = min(100.0 * hh, h1, hmax, span)
        h = direction * h

        facold = 1e-4
        last_rejected = False
        while True:
            if nsteps >= max_steps:
                status = STEP_LIMIT
                break
            clipped = False
            if direction * (t + h - t_end) >= 0.0:
                h = t_end - t
                clipped = True
            _dp_step(&S, mode0, mode1, t, y0, y1, k10, k11, h, &n0, &n1, &k70, &k71, &e0, &e1)
            nfev += 6
            nsteps += 1
            err = _err_norm(e0, e1, y0, y1, n0, n1, rtol, atol)
            if not isfinite(err):
                if fabs(h) <= EPS16 * max(1.0, fabs(t)):
                    status = NONFINITE
                    break
                h = h * 0.1
                last_rejected = True
                nrej += 1
                continue
            if err <= 1.0:
                fac11 = pow(err, EXPO1)
                fac = fac11 / pow(facold, BETA)
                fac = max(FACC2, min(FACC1, fac / SAFE))
                hnew = h / fac
                facold = max(err, 1e-4)
                if last_rejected and fabs(hnew) > fabs(h):
                    hnew = h
                last_rejected = False
                tn = t_end if clipped else t + h

                found = -1
                t_ev = tn
                ev_lo = t
                for k in range(NSWITCH):
                    if not (active >> k) & 1:
                        continue
                    g = _switch(k, &S, mode0, tn, n0, n1)
                    sgk = _sgn(g)
                    if sgk == 0 or sgk == sg[k]:
                        continue
                    lo = t
                    hi = tn
                    while fabs(hi - lo) > event_tol:
                        mid = 0.5 * (lo + hi)
                        if mid == lo or mid == hi:
                            break
                        th = (mid - t) / h
                        _hermite(th, h, y0, y1, n0, n1, k10, k11, k70, k71, &m0v, &m1v)
                        gm = _switch(k, &S, mode0, mid, m0v, m1v)
                        sm = _sgn(gm)
                        if sm != 0 and sm != sg[k]:
                            hi = mid
                        else:
                            lo = mid
                    if found < 0 or direction * (hi - t_ev) < 0.0:
                        found = k
                        t_ev = hi
                        ev_lo = lo
                if found >= 0:
                    tn = _polish(found, &S, mode0, mode1, sg[found], t, y0, y1, k10, k11,
                                 tn, ev_lo, t_ev, event_tol, &n0, &n1, &k70, &k71, &nfev)
                nacc += 1
                t = tn
                y0 = n0
                y1 = n1
                if not (isfinite(y0) and isfinite(y1)):
                    status = NONFINITE
                    break
                push_fail |= _buf_push(&samples, t, y0, y1, 0)
                k10 = k70
                k11 = k71
                if found >= 0:
                    sg[found] = -sg[found]
                    if found == 0:
                        mode0 = -mode0
                    elif found == 1:
                        mode1 = -mode1
                    if ((record_mask >> found) & 1) or ((terminal_mask >> found) & 1):
                        push_fail |= _buf_push(&events, t, y0, y1, found)
                    if (terminal_mask >> found) & 1:
                        status = TERMINAL
                        term_id = found
                        break
                    if found <= 1:
                        _rhs(&S, mode0, mode1, t, y0, y1, &k10, &k11)
                        nfev += 1
                elif clipped:
                    status = DONE
                    break
                if fabs(hnew) > hmax:
                    hnew = direction * hmax
                h = hnew
            else:
                fac11 = pow(err, EXPO1)
                h = h / min(FACC1, fac11 / SAFE)
                last_rejected = True
                nrej += 1
            if push_fail:
                raise MemoryError()
            if fabs(h) <= EPS16 * max(1.0, fabs(t)):
                status = STEP_UNDERFLOW
                break
        if push_fail:
            raise MemoryError()
        return _pack(&samples, &events, status, term_id, nfev, nacc, nrej)
    finally:
        _buf_free(&samples)
        _buf_free(&events)


cdef object _pack(Buf* samples, Buf* events, int status, int term_id,
                  long nfev, long nacc, long nrej):
    cdef Py_ssize_t n = samples.n
    cdef Py_ssize_t m = events.n
    cdef Py_ssize_t i
    ts = np.empty(n, dtype=np.float64)
    ys = np.empty((n, 2), dtype=np.float64)
    cdef double[:] tv = ts
    cdef double[:, :] yv = ys
    for i in range(n):
        tv[i] = samples.a[i]
        yv[i, 0] = samples.b[i]
        yv[i, 1] = samples.c[i]
    ev_id = np.empty(m, dtype=np.int64)
    ev_t = np.empty(m, dtype=np.float64)
    ev_y = np.empty((m, 2), dtype=np.float64)
    cdef cnp.int64_t[:] iv = ev_id
    cdef double[:] etv = ev_t
    cdef double[:, :] eyv = ev_y
    for i in range(m):
        iv[i] = events.id[i]
        etv[i] = events.a[i]
        eyv[i, 0] = events.b[i]
        eyv[i, 1] = events.c[i]
    return (ts, ys, ev_id, ev_t, ev_y, status, term_id, nfev, nacc, nrej)
