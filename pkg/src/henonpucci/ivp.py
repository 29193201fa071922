"""Shooting initial value problem in the radius.

``u(a0) = 0``, ``u'(a0) = delta``, integrated outward with event location for
the maximum ``tau`` (``u' = 0``), the first zero ``rho`` (``u = 0``) and every
switch of the ``M±`` branch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import kernels
from .pucci import ProblemParams, radial_rhs

EV_TAU = 0
EV_SWITCH = 1
EV_ZERO = 2


class IntegrationError(RuntimeError):
    """Base class for integrator failures; ``last_state`` is ``(r, u, u')``."""

    def __init__(self, message, last_state):
        super().__init__(message)
        self.last_state = tuple(float(v) for v in last_state)


class StepLimitExceeded(IntegrationError):
    pass


class StiffnessFailure(IntegrationError):
    """Step size underflow or a non-finite state."""


@dataclass(frozen=True)
class ShootingInput:
    params: ProblemParams
    inner_radius: float
    delta: float

    def __post_init__(self):
        if not (self.inner_radius > 0 and math.isfinite(self.inner_radius)):
            raise ValueError(f"inner radius must be positive, got {self.inner_radius}")
        if not math.isfinite(self.delta):
            raise ValueError(f"delta must be finite, got {self.delta}")


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and budgets. ``None`` radii/tolerances scale with the inner radius.

    ``r_max`` defaults to ``1e6·a0`` and ``event_tol`` to ``1e-12·a0``.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    r_max: Optional[float] = None
    max_steps: int = 5_000_000
    event_tol: Optional[float] = None
    backend: Optional[str] = None

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.event_tol is not None and not self.event_tol > 0:
            raise ValueError("event_tol must be positive")
        if self.r_max is not None and not self.r_max > 0:
            raise ValueError("r_max must be positive")
        if int(self.max_steps) < 1:
            raise ValueError("max_steps must be >= 1")

    def resolve(self, inner: float):
        """Concrete ``(r_max, event_tol)`` for an inner radius."""
        r_max = self.r_max if self.r_max is not None else 1e6 * inner
        ev = self.event_tol if self.event_tol is not None else 1e-12 * inner
        if not r_max > inner:
            raise ValueError(f"r_max={r_max} must exceed the inner radius {inner}")
        return r_max, ev

    def with_(self, **changes) -> "IntegratorConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "r_max": self.r_max,
            "max_steps": int(self.max_steps),
            "event_tol": self.event_tol,
        }


@dataclass(frozen=True, eq=False)
class SolutionProfile:
    """Sampled radial solution.

    ``rho`` is the first zero, or ``None`` with ``unbounded=True`` when the
    integration reached ``r_max`` with ``u`` of one sign (truncation flag).
    ``switch_indices`` are sample indices where a Lipschitz branch changes;
    every such point is a sample, so no step straddles it.
    """

    r: np.ndarray
    u: np.ndarray
    uprime: np.ndarray
    input: ShootingInput
    tau: Optional[float] = None
    rho: Optional[float] = None
    unbounded: bool = False
    switch_indices: tuple = ()
    tau_index: Optional[int] = None
    r_end: Optional[float] = None
    stats: dict = field(default_factory=dict)

    @property
    def params(self) -> ProblemParams:
        return self.input.params

    @property
    def samples(self):
        return list(zip(self.r.tolist(), self.u.tolist(), self.uprime.tolist()))

    def __len__(self):
        return len(self.r)

    @property
    def u_tau(self) -> Optional[float]:
        return None if self.tau_index is None else float(self.u[self.tau_index])

    @classmethod
    def from_samples(cls, r, u, uprime, params: ProblemParams, **kw) -> "SolutionProfile":
        """Wrap arbitrary samples (analytic profiles, tests)."""
        r = np.asarray(r, dtype=float)
        u = np.asarray(u, dtype=float)
        up = np.asarray(uprime, dtype=float)
        if not (r.shape == u.shape == up.shape and r.ndim == 1 and len(r) >= 1):
            raise ValueError("r, u, uprime must be 1-D arrays of equal length")
        if len(r) > 1 and not np.all(np.diff(r) > 0):
            raise ValueError("samples must be strictly increasing in r")
        delta = float(up[0]) if math.isfinite(up[0]) else 0.0
        inp = ShootingInput(params, float(r[0]), delta)
        return cls(r=r, u=u, uprime=up, input=inp, **kw)


def integrate_ivp(
    inp: ShootingInput,
    config: IntegratorConfig = IntegratorConfig(),
    r_stop: Optional[float] = None,
    stop_at_zero: bool = True,
    stop_at_max: bool = False,
) -> SolutionProfile:
    """Integrate the shooting problem from ``(a0, 0, delta)``.

    Parameters
    ----------
    inp : ShootingInput
    config : IntegratorConfig
    r_stop : float, optional
        Integrate exactly to this radius instead of ``r_max``.
    stop_at_zero : bool
        Stop at the first zero of ``u`` (default). When false the zero is
        still located and recorded, and integration continues.
    stop_at_max : bool
        Stop at the maximum ``tau`` (the phase-plane continuation starts there).

    Raises
    ------
    StepLimitExceeded, StiffnessFailure
    """
    if inp.delta == 0:
        raise ValueError("delta must be nonzero")
    a0 = inp.inner_radius
    r_max, ev_tol = config.resolve(a0)
    t_end = r_max if r_stop is None else float(r_stop)
    if not t_end > a0:
        raise ValueError(f"end radius {t_end} must exceed the inner radius {a0}")
    integrate = kernels.get_integrator(config.backend)
    terminal = (1 << EV_ZERO) if stop_at_zero else 0
    if stop_at_max:
        terminal |= 1 << EV_TAU
    record = (1 << EV_TAU) | (1 << EV_SWITCH) | (1 << EV_ZERO)
    ts, ys, ev_id, ev_t, ev_y, status, term_id, nfev, nacc, nrej = integrate(
        kernels.RADIAL, inp.params.as_array(), a0, 0.0, inp.delta, t_end,
        config.rel_tol, config.abs_tol, 0.0, 0.0, int(config.max_steps), ev_tol,
        terminal, record,
    )
    last = (ts[-1], ys[-1, 0], ys[-1, 1])
    if status == kernels.STEP_LIMIT:
        raise StepLimitExceeded(f"step budget {config.max_steps} exhausted at r={ts[-1]:.6g}", last)
    if status in (kernels.STEP_UNDERFLOW, kernels.NONFINITE):
        raise StiffnessFailure(f"integration failed at r={ts[-1]:.6g} (status {status})", last)

    index = {float(t): i for i, t in enumerate(ts)}
    tau = tau_i = rho = None
    switches = []
    for k, te in zip(ev_id.tolist(), ev_t.tolist()):
        i = index.get(te)
        if k == EV_TAU and tau is None:
            tau, tau_i = te, i
        if k in (EV_TAU, EV_SWITCH) and i is not None:
            switches.append(i)
        if k == EV_ZERO and rho is None:
            rho = te
    unbounded = rho is None and r_stop is None and status == kernels.DONE
    stats = {"nfev": int(nfev), "naccept": int(nacc), "nreject": int(nrej), "backend": config.backend
             or kernels.BACKEND, "r_max": r_max, "event_tol": ev_tol}
    return SolutionProfile(
        r=ts, u=ys[:, 0].copy(), uprime=ys[:, 1].copy(), input=inp, tau=tau, rho=rho,
        unbounded=unbounded, switch_indices=tuple(sorted(set(switches))), tau_index=tau_i,
        r_end=float(ts[-1]), stats=stats,
    )


def rescale_profile(profile: SolutionProfile, gamma: float) -> SolutionProfile:
    """Sampled ``u_g(r) = g·u(g^{1/alpha} r)`` on the rescaled grid."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    alpha = profile.params.alpha
    s = gamma ** (-1.0 / alpha)
    slope = gamma ** (1.0 + 1.0 / alpha)
    inp = ShootingInput(profile.params, profile.input.inner_radius * s, profile.input.delta * slope)

    def sc(v):
        return None if v is None else v * s

    return replace(
        profile, r=profile.r * s, u=profile.u * gamma, uprime=profile.uprime * slope, input=inp,
        tau=sc(profile.tau), rho=sc(profile.rho), r_end=sc(profile.r_end), stats=dict(profile.stats),
    )


def negate_profile(profile: SolutionProfile, params: Optional[ProblemParams] = None) -> SolutionProfile:
    """``-u`` sample by sample; ``params`` relabels the operator (swap construction)."""
    params = params or profile.params
    inp = ShootingInput(params, profile.input.inner_radius, -profile.input.delta)
    return replace(profile, u=-profile.u, uprime=-profile.uprime, input=inp, stats=dict(profile.stats))


def _lagrange_dweights(xs: np.ndarray, x0: float) -> np.ndarray:
    """Weights ``w`` with ``p'(x0) = sum w_j f_j`` for the interpolant through ``xs``."""
    n = len(xs)
    w = np.zeros(n)
    for j in range(n):
        denom = 1.0
        for m in range(n):
            if m != j:
                denom *= xs[j] - xs[m]
        acc = 0.0
        for k in range(n):
            if k == j:
                continue
            prod = 1.0
            for m in range(n):
                if m != j and m != k:
                    prod *= x0 - xs[m]
            acc += prod
        w[j] = acc / denom
    return w


def numeric_second_derivative(profile: SolutionProfile, width: int = 5) -> np.ndarray:
    """``u''`` at every sample from a local polynomial through ``u'``.

    Windows never straddle a recorded switch index. Entries with fewer than
    three usable points are NaN.
    """
    r = profile.r
    up = profile.uprime
    n = len(r)
    out = np.full(n, np.nan)
    cuts = sorted({0, n - 1, *[i for i in profile.switch_indices if 0 < i < n - 1]})
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        seg = hi - lo + 1
        if seg < 3:
            continue
        m = min(width, seg)
        for i in range(lo, hi + 1):
            start = min(max(i - m // 2, lo), hi - m + 1)
            idx = slice(start, start + m)
            xs = r[idx] - r[i]
            out[i] = float(np.dot(_lagrange_dweights(xs, 0.0), up[idx]))
    return out


def residual_audit(profile: SolutionProfile) -> float:
    """Max over interior samples of ``|u''_numeric - radial_rhs(r, u, u')|``."""
    if len(profile.r) < 3:
        raise ValueError("residual audit needs at least three samples")
    upp = numeric_second_derivative(profile)
    params = profile.params
    worst = 0.0
    for i in range(1, len(profile.r) - 1):
        if not math.isfinite(upp[i]):
            continue
        res = abs(upp[i] - radial_rhs(profile.r[i], profile.u[i], profile.uprime[i], params))
        if not math.isfinite(res):
            return math.inf
        worst = max(worst, res)
    return worst


def equation_residual(r: float, u: float, uprime: float, upp: float, params: ProblemParams) -> float:
    """``M±(D²u) + r^a |u|^{p-1}u`` evaluated from the radial derivatives."""
    from .pucci import hessian_eigenvalues, pucci_eval, signed_power

    eig = hessian_eigenvalues(r, uprime, upp, params.N)
    return pucci_eval(eig, params) + r ** params.a * signed_power(u, params.p)
