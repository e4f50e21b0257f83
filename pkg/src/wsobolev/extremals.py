"""Closed-form extremals, the Kelvin map to the ball, and a PDE residual check.

Points of the half space are passed as ``y`` with trailing axis of length n
and ``t`` broadcastable against ``y[..., 0]``.  Evaluators are plain callables
``u(y, t) -> ndarray``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError
from .params import WeightPair

Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


class CaseId(enum.Enum):
    Case1 = "beta=alpha-1"
    Case2 = "beta=alpha"
    General = "profile"


def _as_points(y, t, n: int):
    y = np.asarray(y, dtype=float)
    if n == 1 and (y.ndim == 0 or y.shape[-1] != 1):
        y = y[..., None]
    if y.shape[-1] != n:
        raise DomainError(f"y must have trailing dimension {n}, got shape {y.shape}")
    t = np.asarray(t, dtype=float)
    return y, t


def raw_constant(wp: WeightPair) -> float:
    """Constant c with -div(t^a grad U) = c t^b U^(p*-1) for the raw bubble U (k = A = 1)."""
    e = wp.decay
    if wp.is_case1():
        return wp.a * (wp.n + wp.a - 1.0)
    if wp.is_case2():
        return 4.0 * e * (e + 1.0)
    raise DomainError("raw bubbles exist only for beta = alpha - 1 or beta = alpha")


def unit_amplitude(wp: WeightPair) -> float:
    """Amplitude k making k U an exact solution with unit right-hand constant."""
    return raw_constant(wp) ** (1.0 / (wp.p_star - 2.0))


@dataclass(frozen=True)
class ExtremalSpec:
    wp: WeightPair
    A: float = 1.0
    y0: tuple = ()
    k: float = 1.0
    case_id: CaseId | None = None
    profile: object = None

    def __post_init__(self):
        if not self.A > 0:
            raise DomainError("A must be positive")
        if not self.k > 0:
            raise DomainError("k must be positive")
        y0 = np.atleast_1d(np.asarray(self.y0, dtype=float))
        y0 = tuple(y0.tolist()) if y0.size else (0.0,) * self.wp.n
        if len(y0) != self.wp.n:
            raise DomainError(f"y0 must have length {self.wp.n}")
        object.__setattr__(self, "y0", y0)
        case = self.case_id
        if case is None:
            if self.profile is not None:
                case = CaseId.General
            elif self.wp.is_case1():
                case = CaseId.Case1
            elif self.wp.is_case2():
                case = CaseId.Case2
            else:
                raise DomainError("general weight pairs need a radial profile")
        object.__setattr__(self, "case_id", case)
        if case is CaseId.Case1 and not self.wp.is_case1():
            raise DomainError("Case1 requires beta = alpha - 1")
        if case is CaseId.Case2 and not self.wp.is_case2():
            raise DomainError("Case2 requires beta = alpha")
        if case is CaseId.General and self.profile is None:
            raise DomainError("General case requires a profile")
        if case is not CaseId.General and self.profile is not None:
            raise DomainError("closed-form cases carry no profile")

    @classmethod
    def normalized(cls, wp: WeightPair, A: float = 1.0, y0=()) -> "ExtremalSpec":
        """Closed-form extremal scaled to solve the equation with unit constant."""
        return cls(wp, A=A, y0=y0, k=unit_amplitude(wp))

    def evaluator(self) -> Evaluator:
        if self.case_id is CaseId.Case1:
            return lambda y, t: eval_case1(self, y, t)
        if self.case_id is CaseId.Case2:
            return lambda y, t: eval_case2(self, y, t)
        return lambda y, t: self.k * ball_to_halfspace(self.profile, self.wp, self.A, self.y0, y, t)

    def to_json(self) -> dict:
        return {"params": self.wp.to_json(), "A": self.A, "y0": list(self.y0), "k": self.k,
                "case": self.case_id.name}


def eval_case1(spec: ExtremalSpec, y, t) -> np.ndarray:
    """k (A/((A+t)^2 + |y-y0|^2))^((n+alpha-1)/2)."""
    if spec.case_id is not CaseId.Case1:
        raise DomainError("eval_case1 needs a Case1 spec")
    y, t = _as_points(y, t, spec.wp.n)
    d2 = np.sum((y - np.asarray(spec.y0)) ** 2, axis=-1) + (spec.A + t) ** 2
    return spec.k * (spec.A / d2) ** spec.wp.decay


def eval_case2(spec: ExtremalSpec, y, t) -> np.ndarray:
    """k (A/(A^2 + t^2 + |y-y0|^2))^((n+alpha-1)/2)."""
    if spec.case_id is not CaseId.Case2:
        raise DomainError("eval_case2 needs a Case2 spec")
    y, t = _as_points(y, t, spec.wp.n)
    d2 = np.sum((y - np.asarray(spec.y0)) ** 2, axis=-1) + spec.A ** 2 + t ** 2
    return spec.k * (spec.A / d2) ** spec.wp.decay


def from_ball(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inversion in the unit sphere about -e_{n+1}.

    ``x`` has trailing axis n+1.  Returns (y, t, |x + e_{n+1}|).
    """
    x = np.asarray(x, dtype=float)
    xe = x.copy()
    xe[..., -1] += 1.0
    d = np.linalg.norm(xe, axis=-1)
    if np.any(d == 0):
        raise DomainError("the pole -e_{n+1} has no image")
    img = xe / (d ** 2)[..., None]
    return img[..., :-1], img[..., -1] - 1.0, d


def ball_radius(x: np.ndarray) -> np.ndarray:
    """Distance |x + e_{n+1}/2| to the centre of the image ball."""
    x = np.asarray(x, dtype=float)
    c = x.copy()
    c[..., -1] += 0.5
    return np.linalg.norm(c, axis=-1)


def kelvin_to_ball(u_eval: Evaluator, wp: WeightPair, x) -> np.ndarray:
    """|x+e|^{-(n+alpha-1)} u(-e + (x+e)/|x+e|^2) on the ball B_{1/2}(-e/2)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != wp.n + 1:
        raise DomainError(f"x must have trailing dimension {wp.n + 1}")
    if np.any(ball_radius(x) > 0.5 + 1e-12):
        raise DomainError("point outside the closed ball B_{1/2}(-e/2)")
    y, t, d = from_ball(x)
    t = np.maximum(t, 0.0)
    return d ** (-2.0 * wp.decay) * u_eval(y, t)


def ball_to_halfspace(profile, wp: WeightPair, A: float, y0, y, t) -> np.ndarray:
    """Extremal built from a ball profile psi on [0, 1/2].

    u = D^{-(n+alpha-1)/2} psi_A(|Y/D - e/(2A)|) with Y = (y-y0, t+A), D = |Y|^2
    and psi_A(s) = A^{(n+alpha-1)/2} psi(A s).
    """
    if not A > 0:
        raise DomainError("A must be positive")
    y, t = _as_points(y, t, wp.n)
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    dy = y - (y0 if y0.size else 0.0)
    ta = t + A
    D = np.sum(dy ** 2, axis=-1) + ta ** 2
    s2 = np.sum((dy / D[..., None]) ** 2, axis=-1) + (ta / D - 0.5 / A) ** 2
    arg = A * np.sqrt(s2)
    if np.any(arg > 0.5 + 1e-9):
        raise DomainError("profile argument outside [0, 1/2]")
    arg = np.minimum(arg, 0.5)
    e = wp.decay
    return D ** (-e) * A ** e * np.asarray(profile(arg), dtype=float)


def scale_translate(u_eval: Evaluator, lam: float, z, wp: WeightPair) -> Evaluator:
    """lambda^{(n+alpha-1)/2} u(lambda y + z, lambda t)."""
    if not lam > 0:
        raise DomainError("lambda must be positive")
    z = np.zeros(wp.n) if z is None else np.atleast_1d(np.asarray(z, dtype=float))
    if z.shape != (wp.n,):
        raise DomainError(f"z must have length {wp.n}")
    fac = lam ** wp.decay

    def scaled(y, t):
        y, t = _as_points(y, t, wp.n)
        return fac * u_eval(lam * y + z, lam * t)

    return scaled


def sphere_reflect(u_eval: Evaluator, wp: WeightPair, b, y, t) -> np.ndarray:
    """Reflection of u through the sphere about (b, 0) of radius sqrt(1+|b|^2)."""
    b = np.atleast_1d(np.asarray(b, dtype=float))
    y, t = _as_points(y, t, wp.n)
    lam2 = 1.0 + float(b @ b)
    dy = y - b
    d2 = np.sum(dy ** 2, axis=-1) + t ** 2
    yr = b + lam2 * dy / d2[..., None]
    tr = lam2 * t / d2
    return (lam2 / d2) ** wp.decay * u_eval(yr, tr)


def moving_sphere_check(u_eval: Evaluator, wp: WeightPair, b, y, t) -> float:
    """Max relative gap between u and its reflection about the sphere centred at (b, 0)."""
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if b.shape != (wp.n,):
        raise DomainError(f"b must have length {wp.n}")
    y, t = _as_points(y, t, wp.n)
    d2 = np.sum((y - b) ** 2, axis=-1) + t ** 2
    keep = d2 > 1e-24
    y, t = y[keep], np.broadcast_to(t, keep.shape)[keep]
    u = u_eval(y, t)
    return float(np.max(np.abs(u - sphere_reflect(u_eval, wp, b, y, t)) / u))


def random_halfspace_points(rng: np.random.Generator, n: int, count: int, scale: float = 3.0):
    """Points with y ~ N(0, scale^2) and t ~ |N(0, scale^2)|."""
    y = rng.normal(scale=scale, size=(count, n))
    t = np.abs(rng.normal(scale=scale, size=count))
    return y, t


def _radial(u_eval: Evaluator, n: int):
    def g(rho, t):
        rho, t = np.broadcast_arrays(np.asarray(rho, float), np.asarray(t, float))
        y = np.zeros(rho.shape + (n,))
        y[..., 0] = rho
        return u_eval(y, t)
    return g


def _ratio_field(g, wp: WeightPair, rho, t, h):
    n, a, b, p = wp.n, wp.a, wp.b, wp.p_star
    R, T = np.meshgrid(rho, t, indexing="ij")
    u = g(R, T)
    if np.any(u <= 0):
        raise DomainError("u must be positive on the grid")
    urp, urm = g(R + h, T), g(R - h, T)
    utp, utm = g(R, T + h), g(R, T - h)
    u_rr = (urp - 2 * u + urm) / h ** 2
    u_tt = (utp - 2 * u + utm) / h ** 2
    u_t = (utp - utm) / (2 * h)
    with np.errstate(divide="ignore", invalid="ignore"):
        u_r_over_r = np.where(R > 0, (urp - urm) / (2 * h) / R, u_rr)
    lap = u_rr + (n - 1) * u_r_over_r + u_tt
    div = T ** a * lap + a * T ** (a - 1) * u_t
    return -div / (T ** b * u ** (p - 1))


def pde_residual_ratio(u_eval: Evaluator, wp: WeightPair, rho_max: float = 2.0,
                       t_max: float = 2.0, n_cells: int = 400,
                       richardson: bool = True) -> tuple[float, float]:
    """Mean and max relative spread of -div(t^a grad u)/(t^b u^(p*-1)).

    Second-order centred differences on a uniform (rho, t) grid whose first row
    sits at t = h.  Neighbours are taken from the evaluator, so rho = 0 uses an
    even ghost and the limit n u_rr replaces u_rr + (n-1) u_r/rho there.  With
    ``richardson`` the ratio is also computed with h/2 and combined as
    (4 R_{h/2} - R_h)/3.
    """
    h = min(rho_max, t_max) / n_cells
    rho = np.arange(0, n_cells) * h
    t = np.arange(1, n_cells + 1) * h
    g = _radial(u_eval, wp.n)
    ratio = _ratio_field(g, wp, rho, t, h)
    if richardson:
        ratio = (4.0 * _ratio_field(g, wp, rho, t, h / 2) - ratio) / 3.0
    mean = float(np.mean(ratio))
    return mean, float(np.max(np.abs(ratio - mean)) / abs(mean))


def neumann_trend(u_eval: Evaluator, wp: WeightPair, rho: float = 0.3,
                  ts=(1e-3, 1e-4, 1e-5)) -> np.ndarray:
    """t^alpha du/dt near the boundary; tends to 0 for solutions of the Neumann problem."""
    g = _radial(u_eval, wp.n)
    out = []
    for t in ts:
        h = 0.1 * t
        out.append(t ** wp.a * float((g(rho, t + h) - g(rho, t - h)) / (2 * h)))
    return np.array(out)


def field_rows(u_eval: Evaluator, wp: WeightPair, rho, t):
    """CSV rows (rho, t, u) on the tensor grid rho x t."""
    g = _radial(u_eval, wp.n)
    R, T = np.meshgrid(np.asarray(rho, float), np.asarray(t, float), indexing="ij")
    U = g(R, T)
    return [(float(a), float(b), float(c)) for a, b, c in zip(R.ravel(), T.ravel(), U.ravel())]
