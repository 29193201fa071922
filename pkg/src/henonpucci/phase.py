"""Planar quadratic system in ``x = -r u'/u``, ``z = r^{2+a} u^{p-1}``, ``t = ln r``.

One formula covers both quadrants::

    x' = x(x+1) - M±((N-1)·c·x - z),   z' = z(2 + a - (p-1)x)

with ``c`` the ``m±`` slope selected by the sign of ``u'`` (i.e. of ``-x``).
Integration runs on ``(x, ln z)`` so ``z`` stays positive.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .ivp import SolutionProfile
from .pucci import OperatorVariant, ProblemParams, derive_exponents

DEGENERATE_TOL = 1e-9

EV_QUADRANT = 0
EV_ELL = 1
EV_SECTION = 2
EV_XHI = 3
EV_XLO = 4


class PrecisionLoss(RuntimeError):
    def __init__(self, message, last_state):
        super().__init__(message)
        self.last_state = last_state


class Classification(enum.Enum):
    SADDLE = "Saddle"
    SOURCE = "Source"
    SINK = "Sink"
    CENTER = "Center"
    DEGENERATE = "Degenerate"


class Termination(enum.Enum):
    CONVERGED = "ConvergedToStationary"
    BLOWUP_BACKWARD_2Q = "BlowupBackward2Q"
    BLOWUP_FORWARD_X = "BlowupForwardX"
    SECTION_BUDGET = "SectionBudget"


@dataclass(frozen=True)
class PhasePoint:
    x: float
    z: float
    t: float = 0.0

    @property
    def quadrant(self) -> str:
        return quadrant_tag(self.x)


def quadrant_tag(x: float) -> str:
    if x > 0:
        return "1Q"
    if x < 0:
        return "2Q"
    return "axis"


@dataclass(frozen=True)
class PhaseConfig:
    rel_tol: float = 1e-11
    abs_tol: float = 1e-13
    event_tol: float = 1e-12
    max_steps: int = 2_000_000
    hmax: float = 0.5
    backend: Optional[str] = None

    def to_dict(self) -> dict:
        return {"rel_tol": self.rel_tol, "abs_tol": self.abs_tol, "event_tol": self.event_tol,
                "max_steps": int(self.max_steps), "hmax": self.hmax}


@dataclass(eq=False)
class PhaseTrajectory:
    """Sampled orbit with recorded events (``ev_id`` uses the ``EV_*`` codes)."""

    t: np.ndarray
    x: np.ndarray
    z: np.ndarray
    params: ProblemParams
    termination: Termination = Termination.SECTION_BUDGET
    converged_to: Optional[str] = None
    ev_id: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    ev_t: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ev_x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ev_z: np.ndarray = field(default_factory=lambda: np.zeros(0))
    info: dict = field(default_factory=dict)

    @property
    def points(self):
        return [PhasePoint(float(x), float(z), float(t)) for t, x, z in zip(self.t, self.x, self.z)]

    @property
    def quadrants(self):
        return [quadrant_tag(v) for v in self.x]

    def __len__(self):
        return len(self.t)

    def events(self, kind: int):
        m = self.ev_id == kind
        return self.ev_t[m], self.ev_x[m], self.ev_z[m]

    def ordered(self) -> "PhaseTrajectory":
        """Copy with ``t`` increasing (backward runs are stored in reverse)."""
        if len(self.t) < 2 or self.t[-1] > self.t[0]:
            return self
        o = np.argsort(self.ev_t, kind="stable")
        return PhaseTrajectory(self.t[::-1].copy(), self.x[::-1].copy(), self.z[::-1].copy(),
                               self.params, self.termination, self.converged_to,
                               self.ev_id[o], self.ev_t[o], self.ev_x[o], self.ev_z[o], dict(self.info))


@dataclass(frozen=True)
class StationaryPoint:
    name: str
    location: tuple
    eigenvalues: tuple
    classification: Classification
    directions: dict
    jacobian: tuple


@dataclass(frozen=True)
class Geometry:
    ell_slope: float
    parabola: tuple  # (b, c): z = b·x - c·x²
    pi2_x: float
    tangency_point: tuple
    box: tuple  # (x_max, z_max)
    params: ProblemParams

    def region(self, x: float, z: float) -> str:
        """'R+' (concave, M± argument < 0), 'R-' (convex) or 'ell' (on the line)."""
        arg = _argument(x, z, self.params)
        if arg < 0:
            return "R+"
        if arg > 0:
            return "R-"
        return "ell"

    def parabola_z(self, x):
        b, c = self.parabola
        return b * np.asarray(x) - c * np.asarray(x) ** 2

    def ell_z(self, x):
        return self.ell_slope * np.asarray(x)


# ---------------------------------------------------------------- field


def _slopes(x, params: ProblemParams):
    """``m±`` slope for the phase state: sign of u' is the sign of -x."""
    lam, Lam = params.lam, params.Lam
    upper = x < 0
    if params.variant is OperatorVariant.PLUS:
        return np.where(upper, Lam, lam)
    return np.where(upper, lam, Lam)


def _argument(x, z, params: ProblemParams):
    return (params.N - 1.0) * _slopes(x, params) * x - z


def _field(x, z, params: ProblemParams):
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    arg = _argument(x, z, params)
    pos = arg > 0
    if params.variant is OperatorVariant.PLUS:
        div = np.where(pos, params.Lam, params.lam)
    else:
        div = np.where(pos, params.lam, params.Lam)
    xdot = x * (x + 1.0) - arg / div
    zdot = z * (2.0 + params.a - (params.p - 1.0) * x)
    return xdot, zdot


def vector_field(point, params: ProblemParams):
    """``(x', z')`` at a point (``PhasePoint`` or ``(x, z)``); arrays allowed."""
    if isinstance(point, PhasePoint):
        x, z = point.x, point.z
    else:
        x, z = point
    if np.any(np.asarray(z) < 0):
        raise ValueError("vector field is defined for z >= 0")
    xd, zd = _field(x, z, params)
    if np.ndim(xd) == 0:
        return float(xd), float(zd)
    return xd, zd


def branch_field(x: float, z: float, params: ProblemParams):
    """Region-wise closed forms of ``x'`` (cross-check of the ``M±`` form)."""
    lam, Lam, N = params.lam, params.Lam, params.N
    plus = params.variant is OperatorVariant.PLUS
    zd = z * (2.0 + params.a - (params.p - 1.0) * x)
    if x < 0:
        xd = x * (x - params.Ntilde_minus + 2.0) + z / lam if plus else \
            x * (x - params.Ntilde_plus + 2.0) + z / Lam
        return xd, zd
    slope = params.concavity_slope
    if z >= slope * x:  # R+ (and on the line)
        xd = x * (x - N + 2.0) + z / (lam if plus else Lam)
    else:
        xd = x * (x - params.Ntilde + 2.0) + z / params.sigma
    return xd, zd


# ---------------------------------------------------------------- stationary points


def _rminus_jacobian(x, z, params):
    Nt = params.Ntilde
    return np.array([[2.0 * x - Nt + 2.0, 1.0 / params.sigma],
                     [-(params.p - 1.0) * z, 2.0 + params.a - (params.p - 1.0) * x]])


def _classify(eig, *, center=False, degenerate=False) -> Classification:
    if degenerate:
        return Classification.DEGENERATE
    if center:
        return Classification.CENTER
    re = [e.real for e in eig]
    if re[0] * re[1] < 0:
        return Classification.SADDLE
    if all(v > 0 for v in re):
        return Classification.SOURCE
    if all(v < 0 for v in re):
        return Classification.SINK
    return Classification.DEGENERATE


def _eig2(J):
    tr = J[0, 0] + J[1, 1]
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    disc = cmath.sqrt(tr * tr / 4.0 - det)
    e = (tr / 2.0 + disc, tr / 2.0 - disc)
    return tuple(complex(v) if v.imag != 0 else complex(v.real, 0.0) for v in e)


def unstable_slope_O(params: ProblemParams) -> float:
    """Slope of the unstable direction of O inside 1Q: ``c(N+a)``, ``c`` = lambda (Plus) or Lambda (Minus).

    The direction lies above the concavity line, so it comes from the
    linearization of the concave-region branch there.
    """
    c = params.lam if params.variant is OperatorVariant.PLUS else params.Lam
    return c * (params.N + params.a)


def stable_slope_A0(params: ProblemParams) -> float:
    """``-A`` with ``A = sigma[(Ntilde-2)p - (2+a)]``."""
    return -params.sigma * ((params.Ntilde - 2.0) * params.p - (2.0 + params.a))


def z0_value(params: ProblemParams) -> float:
    a = params.alpha
    return a * params.sigma * (params.Ntilde - 2.0 - a)


def stationary_points(params: ProblemParams):
    """O, A0, M0 with eigendata of the convex-region (``R-``) branch.

    Classification labels follow the closed-form thresholds; Center and
    Degenerate are assigned within ``1e-9`` of the critical exponents.
    """
    ex = derive_exponents(params)
    Nt = params.Ntilde
    alpha = params.alpha
    z0 = z0_value(params)
    degenerate = abs(params.p - ex.p_sa) <= DEGENERATE_TOL
    center = abs(params.p - ex.p_pa) <= DEGENERATE_TOL

    J_O = _rminus_jacobian(0.0, 0.0, params)
    eO = _eig2(J_O)
    O = StationaryPoint(
        "O", (0.0, 0.0), eO, Classification.SADDLE,
        {"stable": 0.0, "unstable": unstable_slope_O(params),
         "unstable_rminus_branch": params.sigma * (Nt + params.a)},
        tuple(map(tuple, J_O)),
    )

    J_A = _rminus_jacobian(Nt - 2.0, 0.0, params)
    eA = _eig2(J_A)
    mu = 2.0 + params.a - (params.p - 1.0) * (Nt - 2.0)
    dirs = {"unstable": 0.0}
    if mu < 0 and not degenerate:
        dirs["stable"] = stable_slope_A0(params)
        cA = Classification.SADDLE
    else:
        cA = Classification.DEGENERATE if degenerate else Classification.SOURCE
    A0 = StationaryPoint("A0", (Nt - 2.0, 0.0), eA, cA, dirs, tuple(map(tuple, J_A)))

    J_M = _rminus_jacobian(alpha, z0, params)
    eM = _eig2(J_M)
    if degenerate:
        cM = Classification.DEGENERATE
    elif z0 < 0:
        cM = Classification.SADDLE
    elif center:
        cM = Classification.CENTER
    else:
        cM = Classification.SOURCE if params.p < ex.p_pa else Classification.SINK
    M0 = StationaryPoint("M0", (alpha, z0), eM, cM, {}, tuple(map(tuple, J_M)))
    return [O, A0, M0]


def numerical_jacobian(x: float, z: float, params: ProblemParams, h: float = 1e-6, branch: str = "full"):
    """Central differences of the field (``branch='full'``) or of the frozen ``R-`` branch."""
    if branch == "full":
        def f(a, b):
            return np.array(_field(a, b, params), dtype=float)
    else:
        def f(a, b):
            return np.array([a * (a - params.Ntilde + 2.0) + b / params.sigma,
                             b * (2.0 + params.a - (params.p - 1.0) * a)])
    J = np.empty((2, 2))
    J[:, 0] = (f(x + h, z) - f(x - h, z)) / (2 * h)
    J[:, 1] = (f(x, z + h) - f(x, z - h)) / (2 * h)
    return J


def geometry(params: ProblemParams) -> Geometry:
    slope = params.concavity_slope
    s = params.sigma
    b = s * (params.Ntilde - 2.0)
    xp = (1.0 + params.a) / params.p
    box_sigma = params.lam if params.variant is OperatorVariant.PLUS else params.Lam
    return Geometry(
        ell_slope=slope,
        parabola=(b, s),
        pi2_x=params.alpha,
        tangency_point=(xp, slope * xp),
        box=(params.Ntilde - 2.0, box_sigma * params.alpha * (params.N + params.a)),
        params=params,
    )


# ---------------------------------------------------------------- transforms


def to_phase(profile: SolutionProfile) -> PhaseTrajectory:
    """Pointwise map of a positive profile; the launch zero and the located ``rho`` are dropped."""
    r, u, up = profile.r, profile.u, profile.uprime
    lo, hi = 0, len(r)
    if hi and u[0] == 0.0:
        lo = 1
    if profile.rho is not None and hi - lo > 0 and r[hi - 1] == profile.rho:
        hi -= 1
    r, u, up = r[lo:hi], u[lo:hi], up[lo:hi]
    if np.any(u <= 0):
        raise ValueError("to_phase needs u > 0 on the sampled range")
    params = profile.params
    x = -r * up / u
    z = r ** (2.0 + params.a) * u ** (params.p - 1.0)
    term = Termination.BLOWUP_FORWARD_X if profile.rho is not None else Termination.SECTION_BUDGET
    return PhaseTrajectory(np.log(r), x, z, params, term)


def from_phase(traj: PhaseTrajectory) -> SolutionProfile:
    """``u = r^{-alpha} z^{1/(p-1)}``, ``u' = -x u / r`` with ``r = e^t``."""
    z = np.asarray(traj.z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("from_phase needs z > 0")
    params = traj.params
    r = np.exp(np.asarray(traj.t, dtype=float))
    u = r ** (-params.alpha) * z ** (1.0 / (params.p - 1.0))
    up = -np.asarray(traj.x) * u / r
    return SolutionProfile.from_samples(r, u, up, params)


# ---------------------------------------------------------------- integration


def _kernel_par(params, section=0.0, x_hi=0.0, x_lo=0.0):
    par = params.as_array()
    par[6] = section
    par[7] = x_hi
    par[8] = x_lo
    return par


def integrate_phase(
    params: ProblemParams,
    x0: float,
    z0: float,
    t0: float,
    t_end: float,
    config: PhaseConfig = PhaseConfig(),
    *,
    section: Optional[float] = None,
    x_hi: Optional[float] = None,
    x_lo: Optional[float] = None,
) -> PhaseTrajectory:
    """Integrate the field from ``(x0, z0)`` at ``t0`` to ``t_end`` (either direction).

    A fixed ``hmax`` keeps the step sequence independent of ``t_end``, so runs
    sharing a start agree on their common range.
    Crossings of ``x = 0`` and of the concavity line are always recorded;
    ``section`` adds ``x = section`` crossings; reaching ``x_hi`` or ``x_lo``
    stops the run (blow-up detection).
    """
    if not z0 > 0:
        raise ValueError("phase integration needs z > 0")
    record = (1 << EV_QUADRANT) | (1 << EV_ELL)
    terminal = 0
    if section is not None:
        record |= 1 << EV_SECTION
    if x_hi is not None:
        terminal |= 1 << EV_XHI
    if x_lo is not None:
        terminal |= 1 << EV_XLO
    par = _kernel_par(params, section or 0.0, x_hi or 0.0, x_lo or 0.0)
    f = kernels.get_integrator(config.backend)
    ts, ys, ev_id, ev_t, ev_y, status, term_id, nfev, nacc, nrej = f(
        kernels.PHASE, par, float(t0), float(x0), math.log(z0), float(t_end), config.rel_tol,
        config.abs_tol, 0.0, config.hmax, int(config.max_steps), config.event_tol, terminal, record,
    )
    termination = Termination.SECTION_BUDGET
    if status == kernels.TERMINAL:
        termination = Termination.BLOWUP_FORWARD_X if term_id == EV_XHI else Termination.BLOWUP_BACKWARD_2Q
    elif status != kernels.DONE:
        # the state left the representable range: blow-up in x (forward or backward)
        if ys[-1, 0] > 0 or (status == kernels.NONFINITE and t_end > t0):
            termination = Termination.BLOWUP_FORWARD_X
        else:
            termination = Termination.BLOWUP_BACKWARD_2Q
    return PhaseTrajectory(
        ts, ys[:, 0].copy(), np.exp(ys[:, 1]), params, termination, None,
        ev_id, ev_t, ev_y[:, 0].copy(), np.exp(ev_y[:, 1]),
        {"status": int(status), "nfev": int(nfev), "naccept": int(nacc), "nreject": int(nrej)},
    )


def nearest_stationary(x: float, z: float, params: ProblemParams):
    """``(name, distance)`` of the closest of A0, M0 (M0 only when in 1Q) and O."""
    cands = {"O": (0.0, 0.0), "A0": (params.Ntilde - 2.0, 0.0)}
    z0 = z0_value(params)
    if z0 > 0:
        cands["M0"] = (params.alpha, z0)
    best = min(cands.items(), key=lambda kv: math.hypot(x - kv[1][0], z - kv[1][1]))
    return best[0], math.hypot(x - best[1][0], z - best[1][1])


def _mark_convergence(traj: PhaseTrajectory, tol: float):
    if traj.termination is Termination.SECTION_BUDGET and len(traj.t):
        name, d = nearest_stationary(traj.x[-1], traj.z[-1], traj.params)
        if d < tol:
            traj.termination = Termination.CONVERGED
            traj.converged_to = name
    return traj


def manifold_seed_eps(params: ProblemParams) -> float:
    return 1e-6 * max(1.0, params.Ntilde - 2.0)


def unstable_manifold_O(params: ProblemParams, config: PhaseConfig = PhaseConfig(), *,
                        t_span: float = 60.0, eps: Optional[float] = None,
                        x_hi: float = 1e6, converge_tol: float = 1e-6) -> PhaseTrajectory:
    """Forward orbit from ``O + eps·(1, s)`` with ``s`` the unstable slope (``t`` starts at 0)."""
    eps = manifold_seed_eps(params) if eps is None else eps
    s = unstable_slope_O(params)
    traj = integrate_phase(params, eps, s * eps, 0.0, t_span, config, x_hi=x_hi)
    traj.info.update({"seed_eps": eps, "seed_slope": s})
    return _mark_convergence(traj, converge_tol)


def stable_manifold_A0(params: ProblemParams, config: PhaseConfig = PhaseConfig(), *,
                       t_span: float = 200.0, eps: Optional[float] = None,
                       x_lo: float = -1e6, require_crossing: bool = True) -> PhaseTrajectory:
    """Backward orbit from ``A0 + eps·(-1, A)/|(-1, A)|`` into 1Q, across ``x = 0``, to the 2Q blow-up.

    Returned with ``t`` increasing and ``t = 0`` at the seed. ``info`` holds
    the z-axis crossing ``(T, z)`` and the backward blow-up time estimate.
    Below the critical exponent the orbit can wind into M0 instead; with
    ``require_crossing=False`` that orbit is returned with ``crossing_t = None``.
    """
    ex = derive_exponents(params)
    if not params.p > ex.p_sa + DEGENERATE_TOL:
        raise ValueError(f"stable manifold of A0 needs p > p_sa = {ex.p_sa}")
    eps = manifold_seed_eps(params) if eps is None else eps
    A = -stable_slope_A0(params)
    nrm = math.hypot(1.0, A)
    xs, zs = params.Ntilde - 2.0 - eps / nrm, A * eps / nrm
    traj = integrate_phase(params, xs, zs, 0.0, -t_span, config, x_lo=x_lo).ordered()
    tc, xc, zc = traj.events(EV_QUADRANT)
    if len(tc) == 0:
        if not require_crossing:
            traj.info.update({"seed_eps": eps, "seed_point": (xs, zs), "seed_slope": -A,
                              "crossing_t": None})
            return traj
        raise PrecisionLoss("stable manifold did not reach the z axis",
                            (traj.t[0], traj.x[0], traj.z[0]))
    T = float(tc[-1])
    info = {"seed_eps": eps, "seed_point": (xs, zs), "seed_slope": -A,
            "crossing_t": T, "crossing_z": float(zc[-1]), "crossing_radius": math.exp(T)}
    if traj.termination is Termination.BLOWUP_BACKWARD_2Q:
        info["blowup_t"] = float(traj.t[0] + 1.0 / traj.x[0])
    traj.info.update(info)
    return traj


# ---------------------------------------------------------------- audits


@dataclass
class AuditReport:
    ok: bool
    checked: int
    violations: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checked": self.checked, "violations": self.violations[:20],
                "n_violations": len(self.violations), **self.details}


def blowup_bound_2Q(t: Sequence[float], x: Sequence[float], z: Sequence[float], t0: float,
                    params: ProblemParams, rtol: float = 1e-9) -> AuditReport:
    """Check ``x(t) <= -k/(c0 e^{k(t-t0)} - 1)`` for sampled ``t <= t0`` and ``x' > 0``, ``z' > 0`` in 2Q.

    ``k`` is ``Ntilde_minus - 2`` for Plus and ``Ntilde_plus - 2`` for Minus.
    """
    t = np.asarray(t, float)
    x = np.asarray(x, float)
    z = np.asarray(z, float)
    i0 = int(np.argmin(np.abs(t - t0)))
    x0 = x[i0]
    if not x0 < 0:
        raise ValueError("blow-up bound needs x(t0) < 0")
    k = (params.Ntilde_minus if params.variant is OperatorVariant.PLUS else params.Ntilde_plus) - 2.0
    c0 = 1.0 - k / x0
    viol = []
    n = 0
    for ti, xi, zi in zip(t, x, z):
        if ti > t0 or not xi < 0:
            continue
        n += 1
        den = c0 * math.exp(k * (ti - t0)) - 1.0
        if den > 0:
            bound = -k / den
            if xi - bound > rtol * max(1.0, abs(bound)):
                viol.append({"t": float(ti), "x": float(xi), "bound": bound, "kind": "bound"})
        xd, zd = _field(xi, zi, params)
        if not (xd > 0 and zd > 0):
            viol.append({"t": float(ti), "x": float(xi), "z": float(zi), "kind": "direction"})
    return AuditReport(not viol, n, viol, {"k": k, "c0": c0})


def apriori_box_check(traj: PhaseTrajectory, params: ProblemParams, segment: str = "global") -> AuditReport:
    """Confinement to ``(0, Ntilde-2) x (0, s·alpha(N+a))``.

    ``segment='forward'`` checks only the ``x`` bound, ``'backward'`` only the
    ``z`` bound. Blow-up terminations are flagged as not globally defined.
    """
    g = geometry(params)
    xm, zm = g.box
    viol = []
    for t, x, z in zip(traj.t, traj.x, traj.z):
        bad = False
        if segment in ("global", "forward") and not (0 < x < xm):
            bad = True
        if segment in ("global", "backward") and not (0 < z < zm):
            bad = True
        if bad:
            viol.append({"t": float(t), "x": float(x), "z": float(z)})
    global_def = traj.termination not in (Termination.BLOWUP_FORWARD_X, Termination.BLOWUP_BACKWARD_2Q)
    return AuditReport(not viol, len(traj.t), viol, {"box": (xm, zm), "globally_defined": global_def})


def flow_direction_audit(params: ProblemParams, n_samples: int = 10_000, seed: int = 0) -> AuditReport:
    """Sample the concavity line, both axes, the parabola, the vertical line ``x = alpha`` and 2Q."""
    rng = np.random.default_rng(seed)
    g = geometry(params)
    k = n_samples // 6
    slope = g.ell_slope
    xp = g.tangency_point[0]
    Nt2 = params.Ntilde - 2.0
    alpha = params.alpha
    z0 = z0_value(params)
    viol = []
    n = 0

    def flag(kind, x, z, msg):
        viol.append({"kind": kind, "x": float(x), "z": float(z), "msg": msg})

    # concavity line: d/dt (z - slope x) has the sign of (1+a) - p x
    xs = rng.uniform(0.0, 4.0 * max(xp, alpha, 1.0), k)
    xs = xs[np.abs(xs - xp) > 1e-9]
    for x in xs:
        z = slope * x
        xd, zd = _field(x, z, params)
        cross = zd - slope * xd
        dzdx = slope * (params.p - 1.0) * x * (alpha - x) / (x * (x + 1.0))
        if not math.isclose(zd / xd, dzdx, rel_tol=1e-9, abs_tol=1e-12):
            flag("ell", x, z, "dz/dx mismatch")
        if (x < xp and not cross > 0) or (x > xp and not cross < 0):
            flag("ell", x, z, "crossing direction")
    n += len(xs)
    # x axis
    xs = rng.uniform(0.0, 3.0 * Nt2, k)
    for x in xs:
        if x <= 0 or abs(x - Nt2) < 1e-9:
            continue
        xd, zd = _field(x, 0.0, params)
        if zd != 0 or (x < Nt2 and not xd < 0) or (x > Nt2 and not xd > 0):
            flag("x_axis", x, 0.0, "direction")
        n += 1
    # z axis
    zs = rng.uniform(1e-6, 10.0 * max(1.0, abs(z0)), k)
    for z in zs:
        xd, zd = _field(0.0, z, params)
        if not (xd > 0 and zd > 0):
            flag("z_axis", 0.0, z, "direction")
        n += 1
    # parabola (nullcline of x)
    xs = rng.uniform(0.0, Nt2, k)
    for x in xs:
        if x <= 0 or abs(x - alpha) < 1e-9:
            continue
        z = float(g.parabola_z(x))
        xd, zd = _field(x, z, params)
        if abs(xd) > 1e-12 * max(1.0, z):
            flag("pi1", x, z, "not vertical")
        if (x < alpha and not zd > 0) or (x > alpha and not zd < 0):
            flag("pi1", x, z, "vertical direction")
        n += 1
    # vertical line x = alpha (nullcline of z)
    zs = rng.uniform(1e-6, 4.0 * max(abs(z0), 1.0), k)
    for z in zs:
        if abs(z - z0) < 1e-9:
            continue
        xd, zd = _field(alpha, z, params)
        if abs(zd) > 1e-12 * max(1.0, z) or (z < z0 and not xd < 0) or (z > z0 and not xd > 0):
            flag("pi2", alpha, z, "horizontal direction")
        n += 1
    # second quadrant
    m = n_samples - 5 * k
    xs = -rng.uniform(1e-6, 10.0, m)
    zs = rng.uniform(1e-6, 10.0, m)
    for x, z in zip(xs, zs):
        xd, zd = _field(x, z, params)
        if not (xd > 0 and zd > 0):
            flag("2Q", x, z, "direction")
        n += 1
    return AuditReport(not viol, n, viol, {"seed": seed})


# ---------------------------------------------------------------- return map


@dataclass
class ReturnMap:
    z_seed: float
    z_returns: list
    z0: float
    times: list
    exhausted: bool

    @property
    def distances(self):
        return [abs(z - self.z0) for z in [self.z_seed, *self.z_returns]]

    def monotone(self) -> str:
        d = self.distances
        if len(d) < 2:
            return "none"
        if all(b > a for a, b in zip(d, d[1:])):
            return "outward"
        if all(b < a for a, b in zip(d, d[1:])):
            return "inward"
        return "mixed"


def poincare_return(params: ProblemParams, seed_offset: float, n_returns: int = 1,
                    config: PhaseConfig = PhaseConfig(rel_tol=1e-12, abs_tol=1e-14),
                    t_budget: Optional[float] = None) -> ReturnMap:
    """Successive crossings of ``x = alpha`` above ``M0`` starting at ``(alpha, z0 + seed_offset)``."""
    z0 = z0_value(params)
    if not z0 > 0:
        raise ValueError("return map needs M0 in 1Q (p > p_sa)")
    if not seed_offset > 0:
        raise ValueError("seed offset must be positive")
    alpha = params.alpha
    J = _rminus_jacobian(alpha, z0, params)
    omega = math.sqrt(max(J[0, 1] * -J[1, 0] - (J[0, 0] / 2) ** 2, 1e-12))
    period = 2 * math.pi / omega
    if t_budget is None:
        t_budget = period * (n_returns + 2) * 1.5
    zs = z0 + seed_offset
    traj = integrate_phase(params, alpha, zs, 0.0, t_budget, config, section=alpha,
                           x_hi=params.Ntilde - 2.0 + 1.0)
    et, ex_, ez = traj.events(EV_SECTION)
    returns, times = [], []
    for t, z in zip(et, ez):
        if t > 0 and z > z0:
            returns.append(float(z))
            times.append(float(t))
            if len(returns) == n_returns:
                break
    return ReturnMap(zs, returns, z0, times, len(returns) < n_returns)
