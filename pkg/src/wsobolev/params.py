"""Weight pairs, admissibility regimes and the Grushin parameter map."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Any, Mapping

from .errors import DomainError
from .special import sphere_area

CASE_TOL = 1e-12


def _exact_or_float(x: Any) -> Fraction | float:
    # ints and Fractions compare exactly; floats go through the tolerance path
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    return float(x)


@dataclass(frozen=True)
class WeightPair:
    """Dimension n of the y variable and weight exponents alpha, beta."""

    n: int
    alpha: float
    beta: float

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not math.isfinite(float(self.alpha)) or float(self.alpha) <= 0:
            raise DomainError(f"alpha must be > 0, got {self.alpha!r}")
        if not math.isfinite(float(self.beta)) or float(self.beta) <= -1:
            raise DomainError(f"beta must be > -1, got {self.beta!r}")

    @property
    def a(self) -> float:
        return float(self.alpha)

    @property
    def b(self) -> float:
        return float(self.beta)

    @property
    def p_star(self) -> float:
        return critical_exponent(self)

    @property
    def decay(self) -> float:
        """Exponent (n + alpha - 1)/2 carried by extremals and the Kelvin map."""
        return 0.5 * (self.n + self.a - 1.0)

    def is_case1(self) -> bool:
        """True when beta = alpha - 1."""
        al, be = _exact_or_float(self.alpha), _exact_or_float(self.beta)
        if isinstance(al, Fraction) and isinstance(be, Fraction):
            return be == al - 1
        return abs(float(be) - (float(al) - 1.0)) <= CASE_TOL * max(1.0, abs(float(al)))

    def is_case2(self) -> bool:
        """True when beta = alpha."""
        al, be = _exact_or_float(self.alpha), _exact_or_float(self.beta)
        if isinstance(al, Fraction) and isinstance(be, Fraction):
            return be == al
        return abs(float(be) - float(al)) <= CASE_TOL * max(1.0, abs(float(al)))

    def to_json(self) -> dict[str, Any]:
        return {"n": self.n, "alpha": self.a, "beta": self.b}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "WeightPair":
        missing = [k for k in ("n", "alpha", "beta") if k not in obj]
        if missing:
            raise DomainError(f"missing field(s): {', '.join(missing)}")
        n = obj["n"]
        if isinstance(n, float) and n.is_integer():
            n = int(n)
        if not isinstance(n, int) or isinstance(n, bool):
            raise DomainError(f"n must be an integer, got {n!r}")
        for key in ("alpha", "beta"):
            if isinstance(obj[key], bool) or not isinstance(obj[key], Real):
                raise DomainError(f"{key} must be a number, got {obj[key]!r}")
        return cls(n, obj["alpha"], obj["beta"])


@dataclass(frozen=True)
class AdmissibilityClass:
    gn_valid: bool
    strict_valid: bool
    reg_valid: bool
    n1_unique: bool


def critical_exponent(wp: WeightPair) -> float:
    """p* = 2(n + beta + 1)/(n + alpha - 1)."""
    denom = wp.n + wp.a - 1.0
    if denom <= 0:
        raise DomainError("n + alpha - 1 must be positive")
    return 2.0 * (wp.n + wp.b + 1.0) / denom


def classify(wp: WeightPair) -> AdmissibilityClass:
    n, al, be = wp.n, wp.a, wp.b
    lower = (n - 1) * be / (n + 1)
    base = al > 0 and be > -1
    gn = base and lower <= al <= be + 2
    strict = base and lower < al < be + 2
    reg = gn and al + be >= 0
    if n == 1:
        n1 = (1.0 - (1.0 - al) ** 2) / 4.0 <= al * (2.0 + be) / (al + be + 2.0) ** 2
    else:
        n1 = True
    return AdmissibilityClass(gn, strict, reg, n1)


def in_nonexistence_regime(wp: WeightPair) -> bool:
    """n >= 2, alpha >= 2 and alpha = (n-1) beta/(n+1), where no positive solution exists."""
    if wp.n < 2 or wp.a < 2:
        return False
    return abs(wp.b - (wp.n + 1) * wp.a / (wp.n - 1)) <= CASE_TOL * max(1.0, wp.b)


@dataclass(frozen=True)
class GrushinParams:
    """x-dimension n, z-dimension m and degeneracy exponent tau."""

    n: int
    m: int
    tau: float

    def __post_init__(self):
        for name in ("n", "m"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if not math.isfinite(float(self.tau)) or float(self.tau) <= 0:
            raise DomainError(f"tau must be > 0, got {self.tau!r}")

    @property
    def Q(self) -> float:
        """Homogeneous dimension m + n(tau + 1)."""
        return self.m + self.n * (float(self.tau) + 1.0)

    @property
    def p_star(self) -> float:
        Q = self.Q
        return 2.0 * Q / (Q - 2.0)

    def to_json(self) -> dict[str, Any]:
        return {"n": self.n, "m": self.m, "tau": float(self.tau)}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "GrushinParams":
        missing = [k for k in ("n", "m", "tau") if k not in obj]
        if missing:
            raise DomainError(f"missing field(s): {', '.join(missing)}")
        vals = {}
        for key in ("n", "m"):
            v = obj[key]
            if isinstance(v, float) and v.is_integer():
                v = int(v)
            if not isinstance(v, int) or isinstance(v, bool):
                raise DomainError(f"{key} must be an integer, got {v!r}")
            vals[key] = v
        if isinstance(obj["tau"], bool) or not isinstance(obj["tau"], Real):
            raise DomainError(f"tau must be a number, got {obj['tau']!r}")
        return cls(vals["n"], vals["m"], obj["tau"])


def grushin_to_weight(gp: GrushinParams) -> WeightPair:
    """Weight exponents produced by the substitution t = |z|^(tau+1)."""
    tau = gp.tau
    if isinstance(tau, (int, Fraction)) and not isinstance(tau, bool):
        alpha = Fraction(gp.m + tau - 1) / (tau + 1)
        beta = Fraction(gp.m) / (tau + 1) - 1
        # keep exact rationals when they are integers or the caller passed exact data
        return WeightPair(gp.n, alpha, beta)
    tau = float(tau)
    return WeightPair(gp.n, (gp.m + tau - 1.0) / (tau + 1.0), gp.m / (tau + 1.0) - 1.0)


def conversion_factor(gp: GrushinParams) -> float:
    """(m omega_m)^(2/Q) (tau+1)^((2Q-2)/Q)."""
    Q = gp.Q
    return sphere_area(gp.m) ** (2.0 / Q) * (float(gp.tau) + 1.0) ** ((2.0 * Q - 2.0) / Q)


def constant_conversion(gp: GrushinParams, s_weighted: float) -> float:
    """Grushin constant obtained from the weighted half-space constant."""
    s_weighted = float(s_weighted)
    if not s_weighted > 0:
        raise DomainError("s_weighted must be positive")
    return conversion_factor(gp) * s_weighted
