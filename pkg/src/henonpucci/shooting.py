"""Shooting solvers: annuli by bracketing, exterior domains by the fast-decay transition.

The annular problem brackets ``delta`` between a regime where the first zero
lies beyond the outer radius and one where it lies before it, then bisects.
The exterior problem continues each shot into the phase plane at its maximum
and reads the decay class off the forward orbit.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .ivp import (
    IntegrationError,
    IntegratorConfig,
    ShootingInput,
    SolutionProfile,
    integrate_ivp,
    negate_profile,
)
from .phase import (
    EV_SECTION,
    PhaseConfig,
    PhaseTrajectory,
    Termination,
    geometry,
    integrate_phase,
    z0_value,
)
from .pucci import ProblemParams

UNBOUNDED = math.inf
DELTA_MIN = 1e-8
DELTA_MAX = 1e8
EXPANSION = 4.0


class InvalidAnnulus(ValueError):
    pass


class BracketFailure(RuntimeError):
    def __init__(self, message, sweep):
        super().__init__(message)
        self.sweep = sweep


class NoTransitionFound(RuntimeError):
    def __init__(self, message, sweep):
        super().__init__(message)
        self.sweep = sweep


class DecayClass(enum.Enum):
    FAST = "Fast"
    SLOW = "Slow"
    PSEUDO_SLOW = "PseudoSlow"
    ANNULAR = "Annular"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class AnnulusRequest:
    params: ProblemParams
    inner: float
    outer: float
    boundary_tol: float = 1e-10

    def __post_init__(self):
        if not (0 < self.inner < self.outer < math.inf):
            raise InvalidAnnulus(
                f"constraint 0 < inner < outer < inf violated (inner={self.inner}, outer={self.outer})")
        if not self.boundary_tol > 0:
            raise ValueError("boundary_tol must be positive")


@dataclass(frozen=True)
class ExteriorRequest:
    params: ProblemParams
    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("exterior radius must be positive")


@dataclass(frozen=True)
class ClassifierConfig:
    """Observation settings for decay classification.

    The orbit is watched up to ``r_obs = obs_factor·R``; Fast means it is
    within ``near_tol`` of A0 there. Otherwise the run is extended by
    ``omega_budget`` in ``t = ln r`` to read the limit set.
    """

    obs_factor: float = 1e6
    near_tol: float = 1e-3
    omega_budget: float = 400.0
    slow_tol: float = 1e-4
    min_crossings: int = 5
    min_amplitude: float = 1e-6
    phase: PhaseConfig = PhaseConfig()

    def to_dict(self) -> dict:
        return {"obs_factor": self.obs_factor, "near_tol": self.near_tol,
                "omega_budget": self.omega_budget, "slow_tol": self.slow_tol,
                "min_crossings": self.min_crossings, "min_amplitude": self.min_amplitude,
                "phase": self.phase.to_dict()}


@dataclass
class SolveReport:
    found_delta: float
    boundary_residual: float
    profile: Optional[SolutionProfile]
    decay: Optional[DecayClass]
    bracket_history: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    negative: bool = False
    trajectory: Optional[PhaseTrajectory] = None


# ---------------------------------------------------------------- annulus


def rho_of_delta(params: ProblemParams, inner: float, delta: float,
                 config: IntegratorConfig = IntegratorConfig()) -> float:
    """First zero of the shot with slope ``delta``, or ``UNBOUNDED`` (``inf``) at ``r_max``."""
    if not delta > 0:
        raise ValueError("rho_of_delta needs delta > 0; use the operator swap for delta < 0")
    prof = integrate_ivp(ShootingInput(params, inner, delta), config)
    return UNBOUNDED if prof.rho is None else prof.rho


def _annulus_config(config: IntegratorConfig, outer: float) -> IntegratorConfig:
    return config if config.r_max is not None else config.with_(r_max=1e3 * outer)


def boundary_residual(params: ProblemParams, inner: float, outer: float, delta: float,
                      config: IntegratorConfig = IntegratorConfig()):
    """``(|u(outer)|, profile on [inner, outer])`` integrating exactly to ``outer``."""
    prof = integrate_ivp(ShootingInput(params, inner, delta), config, r_stop=outer, stop_at_zero=False)
    return abs(float(prof.u[-1])), prof


def solve_annulus(request: AnnulusRequest, config: IntegratorConfig = IntegratorConfig(),
                  max_bisections: int = 200) -> SolveReport:
    """Bracket ``delta`` by geometric expansion from 1, then bisect on ``sign(rho - outer)``.

    ``UNBOUNDED`` counts as beyond the outer radius. The reported slope is the
    bracket end whose first zero lies beyond ``outer`` (so ``u > 0`` inside).
    """
    params, a0, b = request.params, request.inner, request.outer
    cfg = _annulus_config(config, b)
    history = []

    def beyond(d):
        rho = rho_of_delta(params, a0, d, cfg)
        history.append((d, rho))
        return rho > b

    d = 1.0
    if beyond(d):
        lo = d
        while True:
            d *= EXPANSION
            if d > DELTA_MAX:
                raise BracketFailure(f"no slope with first zero before {b} in [1, {DELTA_MAX}]", history)
            if not beyond(d):
                hi = d
                break
            lo = d
    else:
        hi = d
        while True:
            d /= EXPANSION
            if d < DELTA_MIN:
                raise BracketFailure(f"no slope with first zero beyond {b} in [{DELTA_MIN}, 1]", history)
            if beyond(d):
                lo = d
                break
            hi = d
    res, prof = boundary_residual(params, a0, b, lo, cfg)
    it = 0
    while res > request.boundary_tol and it < max_bisections:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        it += 1
        if beyond(mid):
            lo = mid
            res, prof = boundary_residual(params, a0, b, lo, cfg)
        else:
            hi = mid
    diag = {"bisections": it, "bracket": (lo, hi), "bracket_width": hi - lo,
            "rho": history_rho(history, lo), "min_u_interior": float(np.min(prof.u[1:-1]))
            if len(prof.u) > 2 else math.nan, "config": cfg.to_dict()}
    if res > request.boundary_tol:
        diag["warning"] = "boundary tolerance not reached at floating point resolution"
    return SolveReport(lo, res, prof, DecayClass.ANNULAR, history, diag)


def history_rho(history, delta):
    for d, rho in reversed(history):
        if d == delta:
            return rho
    return math.nan


# ---------------------------------------------------------------- exterior


def phase_start(params: ProblemParams, R: float, delta: float, config: IntegratorConfig):
    """Radial shot up to its maximum, or to ``r_max`` when the maximum lies beyond.

    Returns ``(profile, t, x, z)`` at the hand-over point.
    """
    prof = integrate_ivp(ShootingInput(params, R, delta), config, stop_at_max=True)
    if prof.tau is not None:
        ut = float(prof.u[prof.tau_index])
        return prof, math.log(prof.tau), 0.0, prof.tau ** (2.0 + params.a) * ut ** (params.p - 1.0)
    if prof.rho is not None:
        return prof, None, None, None
    r, u, up = float(prof.r[-1]), float(prof.u[-1]), float(prof.uprime[-1])
    return prof, math.log(r), -r * up / u, r ** (2.0 + params.a) * u ** (params.p - 1.0)


def _crossing_stats(traj: PhaseTrajectory, alpha: float, t_from: float):
    et, ex, ez = traj.events(EV_SECTION)
    m = et >= t_from
    ez = ez[m]
    if len(ez) == 0:
        return 0, 0.0
    return len(ez), float(np.max(ez) - np.min(ez))


def classify_decay(params: ProblemParams, R: float, delta: float,
                   config: IntegratorConfig = IntegratorConfig(),
                   classifier: ClassifierConfig = ClassifierConfig(), details: bool = False):
    """Decay class of the shot from ``R`` with slope ``delta`` (``details=True`` adds a dict).

    Annular when ``x`` passes ``Ntilde - 2`` (after which it blows up);
    Fast when the orbit sits within ``near_tol`` of A0 at ``r_obs``;
    otherwise the extended run decides Slow (near M0), PseudoSlow (recurrent
    section crossings of ``x = alpha`` with non-vanishing amplitude inside the
    a-priori box) or Undetermined.
    """
    if not delta > 0:
        raise ValueError("classify_decay needs delta > 0")
    info = {"delta": delta, "R": R}
    prof, t0, x0, zt = phase_start(params, R, delta, config)
    Nt2 = params.Ntilde - 2.0
    if t0 is None:
        info["rho"] = prof.rho
        return (DecayClass.ANNULAR, info) if details else DecayClass.ANNULAR
    info["tau"] = prof.tau
    t_obs = math.log(classifier.obs_factor * R)
    alpha = params.alpha
    z0 = z0_value(params)
    traj = integrate_phase(params, x0, zt, t0, max(t_obs, t0 + 1.0), classifier.phase,
                           x_hi=Nt2, section=alpha if z0 > 0 else None)
    info["trajectory"] = traj

    def done(c, **kw):
        info.update(kw)
        return (c, info) if details else c

    if traj.termination is Termination.BLOWUP_FORWARD_X:
        return done(DecayClass.ANNULAR, t_exit=float(traj.t[-1]))
    xe, ze = traj.x[-1], traj.z[-1]
    dA = math.hypot(xe - Nt2, ze)
    if dA < classifier.near_tol:
        return done(DecayClass.FAST, dist_A0=dA)
    ext = integrate_phase(params, xe, ze, traj.t[-1], traj.t[-1] + classifier.omega_budget,
                          classifier.phase, x_hi=Nt2, section=alpha if z0 > 0 else None)
    info["extension"] = ext
    if ext.termination is Termination.BLOWUP_FORWARD_X:
        return done(DecayClass.ANNULAR, t_exit=float(ext.t[-1]))
    xe, ze = ext.x[-1], ext.z[-1]
    if z0 > 0:
        dM = math.hypot(xe - alpha, ze - z0)
        if dM < classifier.slow_tol:
            return done(DecayClass.SLOW, dist_M0=dM)
        t_half = ext.t[0] + 0.5 * classifier.omega_budget
        n, amp = _crossing_stats(ext, alpha, t_half)
        xm, zm = geometry(params).box
        tail = ext.t >= t_half
        in_box = bool(np.all((ext.x[tail] > 0) & (ext.x[tail] < xm) & (ext.z[tail] < zm)))
        if n >= classifier.min_crossings and amp >= classifier.min_amplitude and in_box:
            return done(DecayClass.PSEUDO_SLOW, crossings=n, amplitude=amp, dist_M0=dM)
        info["dist_M0"] = dM
    dA = math.hypot(xe - Nt2, ze)
    if dA < classifier.near_tol:
        return done(DecayClass.FAST, dist_A0=dA)
    return done(DecayClass.UNDETERMINED)


def _annular_side(params, R, delta, config, classifier, budget):
    """True when the orbit from the maximum passes ``x = Ntilde - 2`` within ``budget``."""
    prof, t0, x0, zt = phase_start(params, R, delta, config)
    if t0 is None:
        return True
    Nt2 = params.Ntilde - 2.0
    t_end = max(t0 + budget, math.log(classifier.obs_factor * R))
    traj = integrate_phase(params, x0, zt, t0, t_end, classifier.phase, x_hi=Nt2)
    for _ in range(3):
        if traj.termination is Termination.BLOWUP_FORWARD_X:
            return True
        if math.hypot(traj.x[-1] - Nt2, traj.z[-1]) > 1e-2:
            return False
        traj = integrate_phase(params, traj.x[-1], traj.z[-1], traj.t[-1], traj.t[-1] + budget,
                               classifier.phase, x_hi=Nt2)
    return traj.termination is Termination.BLOWUP_FORWARD_X


def sample_profile(profile: SolutionProfile, radii) -> np.ndarray:
    """``u`` at ``radii`` by cubic Hermite interpolation of ``(u, u')``."""
    r, u, up = profile.r, profile.u, profile.uprime
    radii = np.asarray(radii, dtype=float)
    if np.any(radii < r[0]) or np.any(radii > r[-1]):
        raise ValueError("radii outside the sampled range")
    i = np.clip(np.searchsorted(r, radii, side="right") - 1, 0, len(r) - 2)
    h = r[i + 1] - r[i]
    s = (radii - r[i]) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * u[i] + h10 * h * up[i] + h01 * u[i + 1] + h11 * h * up[i + 1]


def fit_decay_exponent(params: ProblemParams, R: float, delta: float, r_lo: float = 1e2,
                       r_hi: float = 1e4, n: int = 200, config: Optional[IntegratorConfig] = None):
    """Least-squares slope of ``ln u`` against ``ln r`` on log-uniform radii in ``[r_lo, r_hi]``."""
    cfg = config or IntegratorConfig(rel_tol=1e-11, abs_tol=1e-24)
    prof = integrate_ivp(ShootingInput(params, R, delta), cfg, r_stop=r_hi * (1 + 1e-12))
    if prof.rho is not None and prof.rho <= r_hi:
        raise ValueError(f"shot has a zero at {prof.rho} inside the fit window")
    radii = np.geomspace(r_lo, r_hi, n)
    uu = sample_profile(prof, radii)
    slope, _ = np.polyfit(np.log(radii), np.log(uu), 1)
    return float(slope)


def fit_tail_exponent(traj: PhaseTrajectory, t_lo: float, t_hi: float, n: int = 200) -> float:
    """Least-squares slope of ``ln u`` against ``ln r`` on ``[t_lo, t_hi]`` from a phase orbit.

    ``ln u = -alpha t + ln z/(p-1)``, so far tails are read without
    integrating the radial equation out to huge radii.
    """
    o = traj.ordered()
    if not (o.t[0] <= t_lo < t_hi <= o.t[-1]):
        raise ValueError("fit window outside the trajectory")
    params = traj.params
    t = np.linspace(t_lo, t_hi, n)
    lnu = -params.alpha * t + np.interp(t, o.t, np.log(o.z)) / (params.p - 1.0)
    slope, _ = np.polyfit(t, lnu, 1)
    return float(slope)


def find_fast_decay_delta(params: ProblemParams, R: float = 1.0,
                          config: IntegratorConfig = IntegratorConfig(),
                          classifier: ClassifierConfig = ClassifierConfig(),
                          delta_rtol: float = 1e-12, fit: bool = True) -> SolveReport:
    """Transition slope between the Annular regime and the unbounded one.

    Expands upward from 1 until the shot is annular, then downward until it
    is not, then bisects to relative width ``delta_rtol``; the default sits
    above the discretization noise of the side test (about 1e-14 relative).
    The non-annular end of the bracket is reported, so the shot
    stays positive; ``diagnostics`` carries the bracket, the distance of the
    orbit to A0 at ``r_obs`` and the fitted decay exponent.
    """
    Nt2 = params.Ntilde - 2.0
    budget = 60.0 / Nt2 + 20.0
    history = []

    def annular(d):
        a = _annular_side(params, R, d, config, classifier, budget)
        history.append((d, DecayClass.ANNULAR.value if a else "unbounded"))
        return a

    d = 1.0
    while not annular(d):
        d *= EXPANSION
        if d > DELTA_MAX:
            raise NoTransitionFound("no annular regime in the slope budget", history)
    hi = d
    while True:
        d /= EXPANSION
        if d < DELTA_MIN:
            raise NoTransitionFound("no unbounded regime below the annular one", history)
        if not annular(d):
            lo = d
            break
        hi = d
    it = 0
    while hi - lo > delta_rtol * lo:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        it += 1
        if annular(mid):
            hi = mid
        else:
            lo = mid
    dstar = lo
    decay, info = classify_decay(params, R, dstar, config, classifier, details=True)
    traj = info.pop("trajectory", None)
    info.pop("extension", None)
    diag = {"bracket": (lo, hi), "bracket_width": hi - lo, "bisections": it, "classification": info,
            "side_budget": budget, "expected_exponent": -Nt2, "classifier": classifier.to_dict(),
            "config": config.to_dict()}
    if fit:
        diag["decay_exponent"] = fit_decay_exponent(params, R, dstar)
    return SolveReport(dstar, math.nan, None, decay, history, diag, trajectory=traj)


# ---------------------------------------------------------------- the set of annular slopes


def _explore_one(args):
    params, inner, d, config, classifier = args
    try:
        rho = rho_of_delta(params, inner, d, config)
        c = classify_decay(params, inner, d, config, classifier)
        return (d, rho, c, None)
    except IntegrationError as exc:
        return (d, math.nan, DecayClass.UNDETERMINED, str(exc))


@dataclass
class DExploration:
    rows: list
    components: list
    delta_star_grid: Optional[float]
    delta_star: Optional[float]
    failures: list

    def to_dict(self) -> dict:
        return {"components": self.components, "delta_star_grid": self.delta_star_grid,
                "delta_star": self.delta_star, "failures": self.failures,
                "n_rows": len(self.rows)}


def explore_D(params: ProblemParams, inner: float, delta_grid: Sequence[float],
              config: IntegratorConfig = IntegratorConfig(),
              classifier: ClassifierConfig = ClassifierConfig(),
              workers: Optional[int] = None, refine: bool = True) -> DExploration:
    """Tabulate ``(delta, rho, class)`` and the annular components on the grid.

    Components are maximal runs of consecutive Annular grid points, reported
    as ``(first, last)``; no interval structure is assumed. ``delta_star`` is
    refined by bisection inside the grid cell below the top component when
    that component reaches the end of the grid.
    """
    grid = [float(d) for d in delta_grid]
    if any(d <= 0 for d in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("delta grid must be positive and strictly increasing")
    jobs = [(params, inner, d, config, classifier) for d in grid]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_explore_one, jobs))
    else:
        rows = [_explore_one(j) for j in jobs]
    comps = []
    start = None
    for i, (d, rho, c, err) in enumerate(rows):
        if c is DecayClass.ANNULAR and start is None:
            start = i
        if c is not DecayClass.ANNULAR and start is not None:
            comps.append((grid[start], grid[i - 1]))
            start = None
    if start is not None:
        comps.append((grid[start], grid[-1]))
    failures = [(d, err) for d, _, _, err in rows if err]
    dsg = dstar = None
    if comps and comps[-1][1] == grid[-1]:
        dsg = comps[-1][0]
        k = grid.index(dsg)
        if refine and k > 0:
            lo, hi = grid[k - 1], dsg
            budget = 60.0 / (params.Ntilde - 2.0) + 20.0
            while hi - lo > 1e-10 * lo:
                mid = 0.5 * (lo + hi)
                if mid in (lo, hi):
                    break
                if _annular_side(params, inner, mid, config, classifier, budget):
                    hi = mid
                else:
                    lo = mid
            dstar = 0.5 * (lo + hi)
    return DExploration(rows, comps, dsg, dstar, failures)


# ---------------------------------------------------------------- negative solutions


def solve_negative(request, config: IntegratorConfig = IntegratorConfig(), **kw) -> SolveReport:
    """Negative solution of the original operator: solve with the swapped one and negate."""
    if isinstance(request, AnnulusRequest):
        swapped = AnnulusRequest(request.params.swapped(), request.inner, request.outer,
                                 request.boundary_tol)
        rep = solve_annulus(swapped, config, **kw)
    elif isinstance(request, ExteriorRequest):
        rep = find_fast_decay_delta(request.params.swapped(), request.R, config, **kw)
    else:
        raise TypeError("solve_negative expects an AnnulusRequest or ExteriorRequest")
    if rep.profile is not None:
        rep.profile = negate_profile(rep.profile, request.params)
    rep.found_delta = -rep.found_delta
    rep.negative = True
    rep.diagnostics["negative_via"] = request.params.swapped().variant.value
    return rep


# ---------------------------------------------------------------- critical exponent scan


def estimate_p_star(params: ProblemParams, p_grid: Sequence[float], R: float = 1.0,
                    config: IntegratorConfig = IntegratorConfig(),
                    classifier: ClassifierConfig = ClassifierConfig()):
    """Smallest grid ``p`` from which the fast-decay search succeeds for every larger grid ``p``."""
    results = []
    for p in p_grid:
        q = params.replace(p=float(p))
        try:
            rep = find_fast_decay_delta(q, R, config, classifier, fit=False)
            ok = rep.decay is DecayClass.FAST
            results.append((float(p), ok, rep.found_delta))
        except (NoTransitionFound, ValueError, IntegrationError):
            results.append((float(p), False, None))
    p_star = None
    for p, ok, _ in reversed(results):
        if not ok:
            break
        p_star = p
    return {"p_star_upper": p_star, "scan": results}
