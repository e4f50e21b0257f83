"""Log-gamma and the closed-form sharp constants.

All constants are evaluated in log space so that large Gamma arguments
(n + 2*alpha up to a few hundred) never overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .errors import DomainError, UnsupportedCaseError

# Lanczos approximation with g = 671/128 and 14 terms; absolute error of
# ln Gamma is a few ulps for x >= 0.5.
_LANCZOS_G = 5.24218750000000000
_LANCZOS_C0 = 0.999999999999997092
_LANCZOS_COEF = (
    57.1562356658629235,
    -59.5979603554754912,
    14.1360979747417471,
    -0.491913816097620199,
    0.339946499848118887e-4,
    0.465236289270485756e-4,
    -0.983744753048795646e-4,
    0.158088703224912494e-3,
    -0.210264441724104883e-3,
    0.217439618115212643e-3,
    -0.164318106536763890e-3,
    0.844182239838527433e-4,
    -0.261908384015814087e-4,
    0.368991826595316234e-5,
)
_LN_SQRT_2PI = 0.91893853320467274178
_EULER_GAMMA = 0.57721566490153286061


def _zeta_table(kmax: int) -> tuple[float, ...]:
    head = (math.pi ** 2 / 6.0, 1.2020569031595942854, math.pi ** 4 / 90.0,
            1.0369277551433699263)
    tail = tuple(math.fsum(j ** -float(k) for j in range(2000, 0, -1))
                 for k in range(6, kmax + 1))
    return head + tail


# zeta(2), ..., zeta(40) for the Taylor series of ln Gamma about 1
_ZETA = _zeta_table(40)


def _ln_gamma_1p(z: float) -> float:
    """ln Gamma(1 + z) for |z| <= 1/4, accurate relative to the result."""
    terms = [-_EULER_GAMMA * z]
    zk = -z
    for k, zeta_k in enumerate(_ZETA, start=2):
        zk *= -z
        terms.append(zeta_k * zk / k)
    return math.fsum(terms)


def ln_gamma(x: float) -> float:
    """Natural log of the Gamma function for real x > 0."""
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"ln_gamma needs a finite positive argument, got {x!r}")
    if x < 0.5:
        # shift up once; the series is only tuned for x >= 0.5
        return ln_gamma(x + 1.0) - math.log(x)
    # near the zeros at 1 and 2 the Lanczos form loses relative accuracy
    if abs(x - 1.0) <= 0.25:
        return _ln_gamma_1p(x - 1.0)
    if abs(x - 2.0) <= 0.25:
        return _ln_gamma_1p(x - 2.0) + math.log1p(x - 2.0)
    ser = _LANCZOS_C0
    y = x
    for c in _LANCZOS_COEF:
        y += 1.0
        ser += c / y
    tmp = x + _LANCZOS_G
    return (x + 0.5) * math.log(tmp) - tmp + _LN_SQRT_2PI + math.log(ser / x)


def gamma(x: float) -> float:
    """Gamma function for real x > 0 (overflows like math.gamma for huge x)."""
    return math.exp(ln_gamma(x))


def sphere_area(m: int) -> float:
    """Surface measure of the unit sphere S^{m-1} in R^m (equals m * omega_m)."""
    if m < 1:
        raise DomainError(f"dimension must be >= 1, got {m}")
    return 2.0 * math.exp(0.5 * m * math.log(math.pi) - ln_gamma(0.5 * m))


def ball_volume(m: int) -> float:
    """Volume omega_m of the unit ball in R^m."""
    if m < 1:
        raise DomainError(f"dimension must be >= 1, got {m}")
    return math.exp(0.5 * m * math.log(math.pi) - ln_gamma(0.5 * m + 1.0))


class Formula(str, Enum):
    BETA_ALPHA_MINUS_1 = "BetaAlphaMinus1"
    BETA_EQ_ALPHA = "BetaEqAlpha"
    GRUSHIN_TAU1 = "GrushinTau1"


@dataclass(frozen=True)
class ConstantResult:
    value: float
    formula_id: Formula
    params_echo: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value > 0):
            raise DomainError(f"constant must be finite and positive, got {self.value}")

    def __float__(self) -> float:
        return self.value


def _check_n_alpha(n: int, alpha: float) -> None:
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    if not (math.isfinite(alpha) and alpha > 0):
        raise DomainError(f"alpha must be positive, got {alpha!r}")


def sharp_constant_case1(n: int, alpha: float) -> ConstantResult:
    """Sharp constant for the weight pair (alpha, beta = alpha - 1)."""
    _check_n_alpha(n, alpha)
    log_bracket = (
        0.5 * n * math.log(math.pi)
        + ln_gamma(alpha)
        + ln_gamma(0.5 * n + alpha)
        - ln_gamma(n + 2.0 * alpha)
    )
    value = alpha * (n + alpha - 1.0) * math.exp(log_bracket / (n + alpha))
    return ConstantResult(value, Formula.BETA_ALPHA_MINUS_1,
                          {"n": n, "alpha": alpha, "beta": alpha - 1.0})


def sharp_constant_case2(n: int, alpha: float) -> ConstantResult:
    """Sharp constant for the weight pair (alpha, beta = alpha)."""
    _check_n_alpha(n, alpha)
    log_bracket = (
        0.5 * n * math.log(math.pi)
        - math.log(2.0)
        + ln_gamma(0.5 * (alpha + 1.0))
        + ln_gamma(0.5 * (n + alpha + 1.0))
        - ln_gamma(n + alpha + 1.0)
    )
    value = (n + alpha - 1.0) * (n + alpha + 1.0) * math.exp(
        2.0 * log_bracket / (n + alpha + 1.0))
    return ConstantResult(value, Formula.BETA_EQ_ALPHA,
                          {"n": n, "alpha": alpha, "beta": alpha})


def grushin_sharp_constant_tau1(n: int, m: int) -> ConstantResult:
    """Sharp constant of the Grushin inequality with tau = 1."""
    if int(n) != n or n < 1 or int(m) != m or m < 1:
        raise DomainError(f"n and m must be positive integers, got {n!r}, {m!r}")
    if n == 1 and m == 2:
        raise UnsupportedCaseError("the case n=1, m=2 is not covered by the closed form")
    log_bracket = (
        0.5 * (n + m) * math.log(math.pi)
        + ln_gamma(0.5 * (n + m))
        - ln_gamma(float(n + m))
    )
    value = m * (2 * n + m - 2) * math.exp(2.0 * log_bracket / (2 * n + m))
    return ConstantResult(value, Formula.GRUSHIN_TAU1, {"n": n, "m": m, "tau": 1.0})
