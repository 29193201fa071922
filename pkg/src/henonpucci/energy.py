"""Weighted energies along radial profiles and their monotonicity audits.

``small = u'^2/(2 r^a) + |u|^{p+1}/(sigma(p+1))`` and
``big = r^{2(Ntilde_minus-1)+a} · small``. The small energy uses
``sigma = Lambda`` where ``u u' > 0`` and ``lambda`` where ``u u' < 0``; the
big energy uses ``lambda`` up to the maximum and ``Lambda`` after it.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .ivp import SolutionProfile
from .pucci import OperatorVariant, ProblemParams


class EnergyPhase(enum.Enum):
    INCREASING = "Increasing"
    DECREASING = "Decreasing"
    CRITICAL = "Critical"


@dataclass(frozen=True)
class EnergySample:
    r: float
    small_energy: float
    big_energy: float
    sigma_used: str
    phase: EnergyPhase


def small_energy(r, u, uprime, sigma, params: ProblemParams):
    """``u'^2/(2 r^a) + |u|^{p+1}/(sigma(p+1))``; broadcasts over arrays."""
    p = params.p
    return np.asarray(uprime) ** 2 / (2.0 * np.asarray(r, dtype=float) ** params.a) + \
        np.abs(u) ** (p + 1.0) / (sigma * (p + 1.0))


def big_energy_exponent(params: ProblemParams) -> float:
    return 2.0 * (params.Ntilde_minus - 1.0) + params.a


def big_energy(r, u, uprime, sigma, params: ProblemParams):
    """``r^{2(Ntilde_minus-1)+a}`` times the small energy."""
    return np.asarray(r, dtype=float) ** big_energy_exponent(params) * \
        small_energy(r, u, uprime, sigma, params)


def energy_samples(profile: SolutionProfile):
    """Per-sample energies with the phase-dependent ``sigma`` (list of ``EnergySample``).

    ``small`` uses the sign of ``u u'``; ``big`` switches at the maximum.
    """
    params = profile.params
    lam, Lam = params.lam, params.Lam
    ti = profile.tau_index if profile.tau_index is not None else len(profile.r)
    out = []
    for i, (r, u, up) in enumerate(zip(profile.r, profile.u, profile.uprime)):
        s = u * up
        if s > 0:
            ph, sig, name = EnergyPhase.INCREASING, Lam, "Lambda"
        elif s < 0:
            ph, sig, name = EnergyPhase.DECREASING, lam, "lambda"
        else:
            ph = EnergyPhase.CRITICAL
            sig, name = (lam, "lambda") if i <= ti else (Lam, "Lambda")
        sig_big = lam if i <= ti else Lam
        out.append(EnergySample(float(r), float(small_energy(r, u, up, sig, params)),
                                float(big_energy(r, u, up, sig_big, params)), name, ph))
    return out


@dataclass
class MonotonicityReport:
    ok: bool
    worst: float
    worst_r: float
    checks: dict = field(default_factory=dict)
    hypothesis_ok: bool = True

    def to_dict(self) -> dict:
        return {"ok": self.ok, "worst_relative_violation": self.worst, "worst_r": self.worst_r,
                "hypothesis_ok": self.hypothesis_ok, "checks": self.checks}


def _violation(values: np.ndarray, r: np.ndarray, increasing: bool):
    """Largest relative step against the expected direction, and where."""
    if len(values) < 2:
        return 0.0, math.nan
    d = np.diff(values)
    if increasing:
        d = -d
    scale = max(float(np.max(np.abs(values))), np.finfo(float).tiny)
    k = int(np.argmax(d))
    return max(float(d[k]) / scale, 0.0), float(r[k + 1])


def monotonicity_audit(profile: SolutionProfile, rtol: float = 1e-7) -> MonotonicityReport:
    """Small energy non-increasing on each monotone piece; big energies non-decreasing.

    The maximum sample closes the first interval and opens the second,
    evaluated with both conventions. Violations are relative to the
    largest energy on the interval.
    """
    params = profile.params
    r, u, up = profile.r, profile.u, profile.uprime
    n = len(r)
    ti = profile.tau_index if profile.tau_index is not None else n - 1
    lam, Lam = params.lam, params.Lam
    pieces = [("rising", slice(0, ti + 1), Lam, lam), ("falling", slice(ti, n), lam, Lam)]
    checks = {}
    worst, worst_r = 0.0, math.nan
    for name, sl, sig_small, sig_big in pieces:
        rr = r[sl]
        if len(rr) < 2:
            continue
        es = small_energy(rr, u[sl], up[sl], sig_small, params)
        eb = big_energy(rr, u[sl], up[sl], sig_big, params)
        v1, r1 = _violation(es, rr, increasing=False)
        v2, r2 = _violation(eb, rr, increasing=True)
        checks[f"small_{name}"] = {"violation": v1, "at_r": r1}
        checks[f"big_{name}"] = {"violation": v2, "at_r": r2}
        for v, rv in ((v1, r1), (v2, r2)):
            if v > worst:
                worst, worst_r = v, rv
    hyp = params.Ntilde_plus >= 1.5 and params.a > -1
    return MonotonicityReport(worst <= rtol, worst, worst_r, checks, hyp)


def small_delta_bound(profile: SolutionProfile):
    """Worst ``a0^a u^{p+1}/(p+1) - Lambda delta^2/2`` over samples up to the maximum (``<= 0`` holds)."""
    params = profile.params
    a0, delta = profile.input.inner_radius, profile.input.delta
    ti = profile.tau_index if profile.tau_index is not None else len(profile.r) - 1
    lhs = a0 ** params.a * np.abs(profile.u[: ti + 1]) ** (params.p + 1.0) / (params.p + 1.0)
    rhs = params.Lam * delta ** 2 / 2.0
    return float(np.max(lhs) - rhs), rhs


def growth_bound_at_tau(profile: SolutionProfile):
    """``(lhs, rhs)`` of ``tau^{2(Ntilde_minus-1)+a} u^{p+1}(tau) >= lambda(p+1)/2 · a0^{2(Ntilde_minus-1)} delta^2``."""
    if profile.tau_index is None:
        raise ValueError("profile has no maximum")
    params = profile.params
    k = 2.0 * (params.Ntilde_minus - 1.0)
    tau = profile.tau
    ut = abs(profile.u[profile.tau_index])
    lhs = tau ** (k + params.a) * ut ** (params.p + 1.0)
    rhs = params.lam * (params.p + 1.0) / 2.0 * profile.input.inner_radius ** k * profile.input.delta ** 2
    return lhs, rhs


def tau_width_bound(profile: SolutionProfile):
    """``(lhs, rhs)`` of ``(tau - a0) u^{(p-1)/2}(tau) <= I_p / C``.

    ``I_p = (1/q) B(1/q, 1/2)`` with ``q = p+1`` and
    ``C = sqrt(2 min(a0^a, tau^a)/(s (p+1)))``, ``s`` = lambda (Plus) or Lambda (Minus).
    """
    if profile.tau_index is None:
        raise ValueError("profile has no maximum")
    params = profile.params
    q = params.p + 1.0
    a0, tau = profile.input.inner_radius, profile.tau
    s = params.lam if params.variant is OperatorVariant.PLUS else params.Lam
    C = math.sqrt(2.0 * min(a0 ** params.a, tau ** params.a) / (s * q))
    Ip = math.exp(math.lgamma(1.0 / q) + math.lgamma(0.5) - math.lgamma(1.0 / q + 0.5)) / q
    ut = abs(profile.u[profile.tau_index])
    return (tau - a0) * ut ** ((params.p - 1.0) / 2.0), Ip / C
