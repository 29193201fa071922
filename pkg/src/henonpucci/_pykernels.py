"""Pure-Python integration kernel.

Adaptive Dormand-Prince 5(4) with Hairer's PI step control, for the two
piecewise-smooth planar systems of the package:

* ``RADIAL``: state ``(u, u')`` against the radius ``r``;
* ``PHASE``: state ``(x, w = ln z)`` against ``t = ln r``.

The branch of each Lipschitz piece is frozen for the duration of a step
(``mode0`` for ``m±``, ``mode1`` for ``M±``). Sign changes of the switching
functions are located by bisection on the cubic Hermite interpolant of the
accepted step, the step is re-taken to land on the switching point, and the
branch is flipped there. ``_ckernels.pyx`` is a line-by-line port; keep the
floating point operation order identical in both.

Parameter layout (``par``): lam, Lam, N, p, a, variant sign, section x,
upper x threshold, lower x threshold.
"""
import math

import numpy as np

RADIAL = 0
PHASE = 1

NSWITCH = 5

DONE = 0
TERMINAL = 1
STEP_LIMIT = 2
STEP_UNDERFLOW = 3
NONFINITE = 4

C2 = 1.0 / 5.0
C3 = 3.0 / 10.0
C4 = 4.0 / 5.0
C5 = 8.0 / 9.0
A21 = 1.0 / 5.0
A31 = 3.0 / 40.0
A32 = 9.0 / 40.0
A41 = 44.0 / 45.0
A42 = -56.0 / 15.0
A43 = 32.0 / 9.0
A51 = 19372.0 / 6561.0
A52 = -25360.0 / 2187.0
A53 = 64448.0 / 6561.0
A54 = -212.0 / 729.0
A61 = 9017.0 / 3168.0
A62 = -355.0 / 33.0
A63 = 46732.0 / 5247.0
A64 = 49.0 / 176.0
A65 = -5103.0 / 18656.0
A71 = 35.0 / 384.0
A73 = 500.0 / 1113.0
A74 = 125.0 / 192.0
A75 = -2187.0 / 6784.0
A76 = 11.0 / 84.0
E1 = 71.0 / 57600.0
E3 = -71.0 / 16695.0
E4 = 71.0 / 1920.0
E5 = -17253.0 / 339200.0
E6 = 22.0 / 525.0
E7 = -1.0 / 40.0

SAFE = 0.9
FACC1 = 5.0
FACC2 = 0.1
BETA = 0.04
EXPO1 = 0.2 - BETA * 0.75


def _spow(u, p):
    if u == 0.0:
        return 0.0
    if u > 0.0:
        return u ** p
    return -((-u) ** p)


def _rhs(system, par, mode0, mode1, t, y0, y1):
    lam = par[0]
    Lam = par[1]
    N = par[2]
    p = par[3]
    a = par[4]
    plus = par[5] > 0.0
    if system == RADIAL:
        if plus:
            cm = Lam if mode0 > 0 else lam
            sM = Lam if mode1 > 0 else lam
        else:
            cm = lam if mode0 > 0 else Lam
            sM = lam if mode1 > 0 else Lam
        arg = -(N - 1.0) * cm * y1 / t - t ** a * _spow(y0, p)
        return y1, arg / sM
    z = math.exp(y1)
    if plus:
        cm = Lam if mode0 > 0 else lam
        sM = Lam if mode1 > 0 else lam
    else:
        cm = lam if mode0 > 0 else Lam
        sM = lam if mode1 > 0 else Lam
    arg = (N - 1.0) * cm * y0 - z
    return y0 * (y0 + 1.0) - arg / sM, 2.0 + a - (p - 1.0) * y0


def _switch(k, system, par, mode0, t, y0, y1):
    if system == RADIAL:
        if k == 0:
            return y1
        if k == 1:
            if par[5] > 0.0:
                cm = par[1] if mode0 > 0 else par[0]
            else:
                cm = par[0] if mode0 > 0 else par[1]
            return -(par[2] - 1.0) * cm * y1 / t - t ** par[4] * _spow(y0, par[3])
        if k == 2:
            return y0
        return 1.0
    if k == 0:
        return -y0
    if k == 1:
        if par[5] > 0.0:
            cm = par[1] if mode0 > 0 else par[0]
        else:
            cm = par[0] if mode0 > 0 else par[1]
        return (par[2] - 1.0) * cm * y0 - math.exp(y1)
    if k == 2:
        return y0 - par[6]
    if k == 3:
        return y0 - par[7]
    return y0 - par[8]


def _sgn(v):
    if v > 0.0:
        return 1
    if v < 0.0:
        return -1
    return 0


def _hermite(th, h, a0, a1, b0, b1, fa0, fa1, fb0, fb1):
    d0 = b0 - a0
    d1 = b1 - a1
    q = th * (th - 1.0)
    r0 = a0 + th * d0 + q * ((1.0 - 2.0 * th) * d0 + (th - 1.0) * h * fa0 + th * h * fb0)
    r1 = a1 + th * d1 + q * ((1.0 - 2.0 * th) * d1 + (th - 1.0) * h * fa1 + th * h * fb1)
    return r0, r1


def _err_norm(e0, e1, y0, y1, n0, n1, rtol, atol):
    s0 = atol + rtol * max(abs(y0), abs(n0))
    s1 = atol + rtol * max(abs(y1), abs(n1))
    q0 = e0 / s0
    q1 = e1 / s1
    return math.sqrt(0.5 * (q0 * q0 + q1 * q1))


def _dp_step(system, par, m0, m1, t, y0, y1, k10, k11, h):
    k20, k21 = _rhs(system, par, m0, m1, t + C2 * h, y0 + h * (A21 * k10), y1 + h * (A21 * k11))
    k30, k31 = _rhs(system, par, m0, m1, t + C3 * h,
                    y0 + h * (A31 * k10 + A32 * k20), y1 + h * (A31 * k11 + A32 * k21))
    k40, k41 = _rhs(system, par, m0, m1, t + C4 * h,
                    y0 + h * (A41 * k10 + A42 * k20 + A43 * k30),
                    y1 + h * (A41 * k11 + A42 * k21 + A43 * k31))
    k50, k51 = _rhs(system, par, m0, m1, t + C5 * h,
                    y0 + h * (A51 * k10 + A52 * k20 + A53 * k30 + A54 * k40),
                    y1 + h * (A51 * k11 + A52 * k21 + A53 * k31 + A54 * k41))
    k60, k61 = _rhs(system, par, m0, m1, t + h,
                    y0 + h * (A61 * k10 + A62 * k20 + A63 * k30 + A64 * k40 + A65 * k50),
                    y1 + h * (A61 * k11 + A62 * k21 + A63 * k31 + A64 * k41 + A65 * k51))
    n0 = y0 + h * (A71 * k10 + A73 * k30 + A74 * k40 + A75 * k50 + A76 * k60)
    n1 = y1 + h * (A71 * k11 + A73 * k31 + A74 * k41 + A75 * k51 + A76 * k61)
    k70, k71 = _rhs(system, par, m0, m1, t + h, n0, n1)
    e0 = h * (E1 * k10 + E3 * k30 + E4 * k40 + E5 * k50 + E6 * k60 + E7 * k70)
    e1 = h * (E1 * k11 + E3 * k31 + E4 * k41 + E5 * k51 + E6 * k61 + E7 * k71)
    return n0, n1, k70, k71, e0, e1


def _polish(k, system, par, mode0, mode1, s_old, t, y0, y1, k10, k11, tn, lo, hi, event_tol):
    """Refine a Hermite-located switching point with true re-steps (Illinois).

    Returns the new-side time, the state and derivative there, and the
    number of right-hand side evaluations spent.
    """
    nfev = 0
    ta = t
    ga = _switch(k, system, par, mode0, t, y0, y1)
    tb = -1.0
    gb = 0.0
    have_b = False
    for tc in (lo, hi, tn):
        if tc == t:
            continue
        c0, c1, _, _, _, _ = _dp_step(system, par, mode0, mode1, t, y0, y1, k10, k11, tc - t)
        nfev += 6
        gc = _switch(k, system, par, mode0, tc, c0, c1)
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
    while have_b and abs(tb - ta) > event_tol and it < 60:
        it += 1
        if gb != ga:
            tc = tb - gb * (tb - ta) / (gb - ga)
        else:
            tc = 0.5 * (ta + tb)
        if not ((ta < tc < tb) or (tb < tc < ta)):
            tc = 0.5 * (ta + tb)
            if tc == ta or tc == tb:
                break
        c0, c1, _, _, _, _ = _dp_step(system, par, mode0, mode1, t, y0, y1, k10, k11, tc - t)
        nfev += 6
        gc = _switch(k, system, par, mode0, tc, c0, c1)
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
    n0, n1, k70, k71, _, _ = _dp_step(system, par, mode0, mode1, t, y0, y1, k10, k11, tb - t)
    nfev += 6
    return tb, n0, n1, k70, k71, nfev


def integrate(system, par, t0, y0, y1, t_end, rtol, atol, h0, hmax, max_steps,
              event_tol, terminal_mask, record_mask):
    """Integrate from ``t0`` toward ``t_end``.

    Returns ``(ts, ys, ev_id, ev_t, ev_y, status, term_id, nfev, nacc, nrej)``;
    ``ys`` has shape ``(n, 2)`` and ``ev_y`` shape ``(m, 2)``.
    """
    par = [float(v) for v in par]
    t = float(t0)
    y0 = float(y0)
    y1 = float(y1)
    t_end = float(t_end)
    direction = 1.0 if t_end >= t else -1.0
    active = 3 | int(terminal_mask) | int(record_mask)

    ts = [t]
    s0 = [y0]
    s1 = [y1]
    ev_id = []
    ev_t = []
    ev_0 = []
    ev_1 = []
    nfev = 0
    nacc = 0
    nrej = 0
    status = DONE
    term_id = -1

    # branch and sign state; zeros resolved by a short probe along the field
    mode0 = _sgn(_switch(0, system, par, -1, t, y0, y1))
    if mode0 == 0:
        mode0 = -1
    mode1 = _sgn(_switch(1, system, par, mode0, t, y0, y1))
    if mode1 == 0:
        mode1 = -1
    f0, f1 = _rhs(system, par, mode0, mode1, t, y0, y1)
    nfev += 1
    hp = 1e-7 * max(1.0, abs(t)) * direction
    sg = [0, 0, 0, 0, 0]
    for k in range(NSWITCH):
        if not (active >> k) & 1:
            continue
        g = _switch(k, system, par, mode0, t, y0, y1)
        s = _sgn(g)
        if s == 0:
            s = _sgn(_switch(k, system, par, mode0, t + hp, y0 + hp * f0, y1 + hp * f1))
            if s == 0:
                s = -1
        sg[k] = s
    if sg[0] != mode0 or sg[1] != mode1:
        mode0 = sg[0]
        mode1 = sg[1]
        f0, f1 = _rhs(system, par, mode0, mode1, t, y0, y1)
        nfev += 1
    k10 = f0
    k11 = f1

    span = abs(t_end - t)
    if span == 0.0:
        return _pack(ts, s0, s1, ev_id, ev_t, ev_0, ev_1, DONE, -1, nfev, 0, 0)
    if hmax <= 0.0:
        hmax = span
    # initial step
    if h0 > 0.0:
        h = min(h0, hmax, span)
    else:
        sc0 = atol + rtol * abs(y0)
        sc1 = atol + rtol * abs(y1)
        d0 = math.sqrt(0.5 * ((y0 / sc0) * (y0 / sc0) + (y1 / sc1) * (y1 / sc1)))
        d1 = math.sqrt(0.5 * ((k10 / sc0) * (k10 / sc0) + (k11 / sc1) * (k11 / sc1)))
        if d0 < 1e-5 or d1 < 1e-5:
            hh = 1e-6
        else:
            hh = 0.01 * d0 / d1
        hh = min(hh, span)
        g0, g1 = _rhs(system, par, mode0, mode1, t + direction * hh,
                      y0 + direction * hh * k10, y1 + direction * hh * k11)
        nfev += 1
        q0 = (g0 - k10) / sc0
        q1 = (g1 - k11) / sc1
        d2 = math.sqrt(0.5 * (q0 * q0 + q1 * q1)) / hh
        dm = max(d1, d2)
        if dm <= 1e-15:
            h1 = max(1e-6, hh * 1e-3)
        else:
            h1 = (0.01 / dm) ** 0.2
        h = min(100.0 * hh, h1, hmax, span)
    h = direction * h

    facold = 1e-4
    last_rejected = False
    nsteps = 0
    while True:
        if nsteps >= max_steps:
            status = STEP_LIMIT
            break
        clipped = False
        if direction * (t + h - t_end) >= 0.0:
            h = t_end - t
            clipped = True
        n0, n1, k70, k71, e0, e1 = _dp_step(system, par, mode0, mode1, t, y0, y1, k10, k11, h)
        nfev += 6
        nsteps += 1
        err = _err_norm(e0, e1, y0, y1, n0, n1, rtol, atol)
        if not math.isfinite(err):
            if abs(h) <= 16.0 * 2.220446049250313e-16 * max(1.0, abs(t)):
                status = NONFINITE
                break
            h = h * 0.1
            last_rejected = True
            nrej += 1
            continue
        if err <= 1.0:
            fac11 = err ** EXPO1
            fac = fac11 / facold ** BETA
            fac = max(FACC2, min(FACC1, fac / SAFE))
            hnew = h / fac
            facold = max(err, 1e-4)
            if last_rejected and abs(hnew) > abs(h):
                hnew = h
            last_rejected = False
            tn = t_end if clipped else t + h

            # event search on the accepted step
            found = -1
            t_ev = tn
            ev_lo = t
            for k in range(NSWITCH):
                if not (active >> k) & 1:
                    continue
                g = _switch(k, system, par, mode0, tn, n0, n1)
                sgk = _sgn(g)
                if sgk == 0 or sgk == sg[k]:
                    continue
                lo = t
                hi = tn
                while abs(hi - lo) > event_tol:
                    mid = 0.5 * (lo + hi)
                    if mid == lo or mid == hi:
                        break
                    th = (mid - t) / h
                    m0v, m1v = _hermite(th, h, y0, y1, n0, n1, k10, k11, k70, k71)
                    gm = _switch(k, system, par, mode0, mid, m0v, m1v)
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
                tn, n0, n1, k70, k71, nf = _polish(found, system, par, mode0, mode1, sg[found],
                                                   t, y0, y1, k10, k11, tn, ev_lo, t_ev,
                                                   event_tol)
                nfev += nf
            nacc += 1
            t = tn
            y0 = n0
            y1 = n1
            if not (math.isfinite(y0) and math.isfinite(y1)):
                status = NONFINITE
                break
            ts.append(t)
            s0.append(y0)
            s1.append(y1)
            k10 = k70
            k11 = k71
            if found >= 0:
                sg[found] = -sg[found]
                if found == 0:
                    mode0 = -mode0
                elif found == 1:
                    mode1 = -mode1
                if ((record_mask >> found) & 1) or ((terminal_mask >> found) & 1):
                    ev_id.append(found)
                    ev_t.append(t)
                    ev_0.append(y0)
                    ev_1.append(y1)
                if (terminal_mask >> found) & 1:
                    status = TERMINAL
                    term_id = found
                    break
                if found <= 1:
                    k10, k11 = _rhs(system, par, mode0, mode1, t, y0, y1)
                    nfev += 1
            elif clipped:
                status = DONE
                break
            if abs(hnew) > hmax:
                hnew = direction * hmax
            h = hnew
        else:
            fac11 = err ** EXPO1
            h = h / min(FACC1, fac11 / SAFE)
            last_rejected = True
            nrej += 1
        if abs(h) <= 16.0 * 2.220446049250313e-16 * max(1.0, abs(t)):
            status = STEP_UNDERFLOW
            break

    return _pack(ts, s0, s1, ev_id, ev_t, ev_0, ev_1, status, term_id, nfev, nacc, nrej)


def _pack(ts, s0, s1, ev_id, ev_t, ev_0, ev_1, status, term_id, nfev, nacc, nrej):
    ys = np.empty((len(ts), 2))
    ys[:, 0] = s0
    ys[:, 1] = s1
    ev_y = np.empty((len(ev_t), 2))
    ev_y[:, 0] = ev_0
    ev_y[:, 1] = ev_1
    return (np.asarray(ts, dtype=np.float64), ys, np.asarray(ev_id, dtype=np.int64),
            np.asarray(ev_t, dtype=np.float64), ev_y, status, term_id, nfev, nacc, nrej)
