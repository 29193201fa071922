"""Problem parameters, Pucci operator algebra and the critical exponents.

The radial equation for a positive radial ``u`` of

    M±(D²u) + |x|^a u^p = 0

reads ``u'' = M±(-(N-1)/r · m±(u') - r^a |u|^{p-1} u)`` where ``m±`` and
``M±`` are the piecewise-linear Lipschitz pieces defined below.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable


class InvalidParameters(ValueError):
    """Raised when problem parameters violate a standing assumption."""


class OperatorVariant(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"

    @property
    def sign(self) -> float:
        return 1.0 if self is OperatorVariant.PLUS else -1.0

    def swapped(self) -> "OperatorVariant":
        return OperatorVariant.MINUS if self is OperatorVariant.PLUS else OperatorVariant.PLUS

    @classmethod
    def parse(cls, value) -> "OperatorVariant":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        if key in ("plus", "+", "p"):
            return cls.PLUS
        if key in ("minus", "-", "m"):
            return cls.MINUS
        raise InvalidParameters(f"operator must be 'plus' or 'minus', got {value!r}")


@dataclass(frozen=True)
class DerivedExponents:
    Ntilde_plus: float
    Ntilde_minus: float
    p_pa: float
    p_sa: float
    p_delta_a: float
    alpha: float


@dataclass(frozen=True)
class ProblemParams:
    """Ellipticity constants, dimension, exponent, weight power and operator.

    Validated at construction: ``0 < lam <= Lam``, ``N >= 3``, ``p > 1``,
    ``a > -1`` and, for the Plus operator, ``Ntilde_plus > 2``.
    """

    lam: float
    Lam: float
    N: int
    p: float
    a: float = 0.0
    variant: OperatorVariant = OperatorVariant.PLUS

    def __post_init__(self):
        object.__setattr__(self, "variant", OperatorVariant.parse(self.variant))
        for name in ("lam", "Lam", "p", "a"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidParameters(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if isinstance(self.N, float) and not self.N.is_integer():
            raise InvalidParameters(f"N must be an integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if not self.lam > 0:
            raise InvalidParameters(f"constraint 0 < lambda violated (lambda={self.lam})")
        if not self.lam <= self.Lam:
            raise InvalidParameters(
                f"constraint lambda <= Lambda violated (lambda={self.lam}, Lambda={self.Lam})"
            )
        if self.N < 3:
            raise InvalidParameters(f"constraint N >= 3 violated (N={self.N})")
        if not self.p > 1:
            raise InvalidParameters(f"constraint p > 1 violated (p={self.p})")
        if not self.a > -1:
            raise InvalidParameters(f"constraint a > -1 violated (a={self.a})")
        if self.variant is OperatorVariant.PLUS and not self.Ntilde_plus > 2:
            raise InvalidParameters(
                f"constraint Ntilde_plus > 2 violated for the Plus operator "
                f"(Ntilde_plus={self.Ntilde_plus})"
            )

    # dimension-like numbers
    @property
    def Ntilde_plus(self) -> float:
        return self.lam / self.Lam * (self.N - 1) + 1.0

    @property
    def Ntilde_minus(self) -> float:
        return self.Lam / self.lam * (self.N - 1) + 1.0

    @property
    def Ntilde(self) -> float:
        """The dimension-like number attached to the operator variant."""
        return self.Ntilde_plus if self.variant is OperatorVariant.PLUS else self.Ntilde_minus

    @property
    def alpha(self) -> float:
        return (2.0 + self.a) / (self.p - 1.0)

    @property
    def sigma(self) -> float:
        """Ellipticity constant multiplying ``z0``: Lambda for Plus, lambda for Minus."""
        return self.Lam if self.variant is OperatorVariant.PLUS else self.lam

    @property
    def concavity_slope(self) -> float:
        """Slope of the concavity line: lambda(N-1) for Plus, Lambda(N-1) for Minus."""
        c = self.lam if self.variant is OperatorVariant.PLUS else self.Lam
        return c * (self.N - 1)

    def replace(self, **changes) -> "ProblemParams":
        fields = dict(lam=self.lam, Lam=self.Lam, N=self.N, p=self.p, a=self.a, variant=self.variant)
        fields.update(changes)
        return ProblemParams(**fields)

    def swapped(self) -> "ProblemParams":
        return self.replace(variant=self.variant.swapped())

    def as_array(self):
        """Flat float layout consumed by the integration kernels."""
        import numpy as np

        return np.array(
            [self.lam, self.Lam, float(self.N), self.p, self.a, self.variant.sign, 0.0, 0.0, 0.0],
            dtype=np.float64,
        )

    def to_dict(self) -> dict:
        return {
            "operator": self.variant.value,
            "lambda": self.lam,
            "Lambda": self.Lam,
            "N": self.N,
            "p": self.p,
            "a": self.a,
        }


def derive_exponents(params: ProblemParams) -> DerivedExponents:
    """Dimension-like numbers and critical exponents for ``params``.

    The variant selects which of ``Ntilde_plus``/``Ntilde_minus`` enters the
    pseudo-critical and Serrin-type exponents.
    """
    if not isinstance(params, ProblemParams):
        raise InvalidParameters("derive_exponents expects ProblemParams")
    Nt = params.Ntilde
    if not Nt > 2:
        raise InvalidParameters(f"constraint Ntilde > 2 violated (Ntilde={Nt})")
    a = params.a
    N = params.N
    return DerivedExponents(
        Ntilde_plus=params.Ntilde_plus,
        Ntilde_minus=params.Ntilde_minus,
        p_pa=(Nt + 2.0 * a + 2.0) / (Nt - 2.0),
        p_sa=(Nt + a) / (Nt - 2.0),
        p_delta_a=(N + 2.0 + 2.0 * a) / (N - 2.0),
        alpha=params.alpha,
    )


# Lipschitz pieces. The lower branch uses "s <= 0" exactly.

def m_plus(s: float, lam: float, Lam: float) -> float:
    return lam * s if s <= 0 else Lam * s


def M_plus(s: float, lam: float, Lam: float) -> float:
    return s / lam if s <= 0 else s / Lam


def m_minus(s: float, lam: float, Lam: float) -> float:
    return Lam * s if s <= 0 else lam * s


def M_minus(s: float, lam: float, Lam: float) -> float:
    return s / Lam if s <= 0 else s / lam


def m_pm(s: float, params: ProblemParams) -> float:
    """``m+`` or ``m-`` according to ``params.variant``."""
    if params.variant is OperatorVariant.PLUS:
        return m_plus(s, params.lam, params.Lam)
    return m_minus(s, params.lam, params.Lam)


def M_pm(s: float, params: ProblemParams) -> float:
    """``M+`` or ``M-`` according to ``params.variant``."""
    if params.variant is OperatorVariant.PLUS:
        return M_plus(s, params.lam, params.Lam)
    return M_minus(s, params.lam, params.Lam)


def pucci_eval(eigenvalues: Iterable[float], params: ProblemParams) -> float:
    """Pucci extremal operator evaluated on a Hessian eigenvalue multiset."""
    eig = [float(e) for e in eigenvalues]
    if not eig:
        raise ValueError("pucci_eval needs at least one eigenvalue")
    pos = sum(e for e in eig if e >= 0)
    neg = sum(e for e in eig if e < 0)
    if params.variant is OperatorVariant.PLUS:
        return params.Lam * pos + params.lam * neg
    return params.lam * pos + params.Lam * neg


def signed_power(u: float, p: float) -> float:
    """Odd extension ``|u|^{p-1} u`` with ``0 -> 0``."""
    if u == 0:
        return 0.0
    if u > 0:
        return u ** p
    return -((-u) ** p)


def operator_argument(r: float, u: float, uprime: float, params: ProblemParams) -> float:
    """The argument fed to ``M±`` in the radial equation."""
    cm = _m_slope(uprime, params)
    return -(params.N - 1.0) * cm * uprime / r - r ** params.a * signed_power(u, params.p)


def _m_slope(s: float, params: ProblemParams) -> float:
    upper = s > 0
    if params.variant is OperatorVariant.PLUS:
        return params.Lam if upper else params.lam
    return params.lam if upper else params.Lam


def _M_divisor(s: float, params: ProblemParams) -> float:
    upper = s > 0
    if params.variant is OperatorVariant.PLUS:
        return params.Lam if upper else params.lam
    return params.lam if upper else params.Lam


def radial_rhs(r: float, u: float, uprime: float, params: ProblemParams) -> float:
    """Second derivative ``u''`` from the radial equation (odd extension in ``u``)."""
    if not r > 0:
        raise ValueError(f"radial_rhs requires r > 0, got r={r}")
    arg = operator_argument(r, u, uprime, params)
    return arg / _M_divisor(arg, params)


def hessian_eigenvalues(r: float, uprime: float, upp: float, N: int) -> list[float]:
    """Eigenvalues of the Hessian of a radial function: ``u''`` and ``u'/r`` (N-1 times)."""
    return [upp] + [uprime / r] * (N - 1)


def singular_solution(params: ProblemParams):
    """Exact singular solution ``u = c r^{-alpha}`` attached to ``M0``.

    Returns ``(c, alpha)``; requires ``p > p_sa`` so that ``z0 > 0``.
    """
    alpha = params.alpha
    z0 = alpha * params.sigma * (params.Ntilde - 2.0 - alpha)
    if not z0 > 0:
        raise InvalidParameters(f"singular solution needs p > p_sa (z0={z0} <= 0)")
    return z0 ** (1.0 / (params.p - 1.0)), alpha
