"""Fields on Grushin space obtained from half-space fields by t = |z|^(tau+1)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, UnsupportedCaseError
from .extremals import ExtremalSpec, ball_to_halfspace, eval_case1
from .params import GrushinParams, WeightPair, classify, grushin_to_weight
from .quadrature import LEVELS, Field2D, QuadConfig, biradial_integrals, dirichlet_energy, extrapolate
from .special import sphere_area

GrushinEvaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _as_xz(x, z, gp: GrushinParams):
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if gp.n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if gp.m == 1 and (z.ndim == 0 or z.shape[-1] != 1):
        z = z[..., None]
    if x.shape[-1] != gp.n or z.shape[-1] != gp.m:
        raise DomainError(f"x and z need trailing dimensions {gp.n} and {gp.m}")
    return x, z


@dataclass(frozen=True)
class GrushinField:
    """Evaluator u(x, z) that depends on z through |z| only."""

    evaluator: GrushinEvaluator
    gp: GrushinParams

    def __post_init__(self):
        if not classify(grushin_to_weight(self.gp)).strict_valid:
            raise DomainError("mapped weight pair is not strictly admissible")

    def __call__(self, x, z):
        x, z = _as_xz(x, z, self.gp)
        return self.evaluator(x, z)

    def shell_spread(self, rng: np.random.Generator, x, radius: float, count: int = 64) -> float:
        """Max minus min of u over ``count`` random z on the sphere |z| = radius, at fixed x."""
        z = rng.normal(size=(count, self.gp.m))
        z *= radius / np.linalg.norm(z, axis=1)[:, None]
        xs = np.broadcast_to(np.atleast_1d(np.asarray(x, float)), (count, self.gp.n))
        v = self(xs, z)
        return float(np.ptp(v))


def lift(u_half, gp: GrushinParams) -> GrushinField:
    """u(x, z) = u~(x, |z|^(tau+1))."""
    k = float(gp.tau) + 1.0

    def u(x, z):
        x, z = _as_xz(x, z, gp)
        return u_half(x, np.linalg.norm(z, axis=-1) ** k)

    return GrushinField(u, gp)


def restrict(field: GrushinField):
    """Half-space evaluator u~(y, t) = u(y, t^(1/(tau+1)) e_1)."""
    gp = field.gp
    k = float(gp.tau) + 1.0

    def u_half(y, t):
        y = np.asarray(y, dtype=float)
        if gp.n == 1 and (y.ndim == 0 or y.shape[-1] != 1):
            y = y[..., None]
        r = np.asarray(t, dtype=float) ** (1.0 / k)
        z = np.zeros(np.broadcast(y[..., 0], r).shape + (gp.m,))
        z[..., 0] = r
        return field(np.broadcast_to(y, z.shape[:-1] + (gp.n,)), z)

    return u_half


def extremal_exponent(gp: GrushinParams) -> float:
    """(Q-2)/(2(tau+1))."""
    return (gp.Q - 2.0) / (2.0 * (float(gp.tau) + 1.0))


def _check_tau1(gp: GrushinParams):
    if float(gp.tau) != 1.0:
        raise DomainError("closed-form Grushin extremal needs tau = 1")
    if gp.n == 1 and gp.m == 2:
        raise UnsupportedCaseError("n = 1, m = 2 is not covered by the classification")


def eval_grushin_extremal(gp: GrushinParams, A: float, x0, x, z) -> np.ndarray:
    """(A/(|x-x0|^2 + (|z|^2+A)^2))^((2n+m-2)/4)."""
    _check_tau1(gp)
    if not A > 0:
        raise DomainError("A must be positive")
    x, z = _as_xz(x, z, gp)
    x0 = np.zeros(gp.n) if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float))
    d2 = np.sum((x - x0) ** 2, axis=-1) + (np.sum(z ** 2, axis=-1) + A) ** 2
    return (A / d2) ** ((2 * gp.n + gp.m - 2) / 4.0)


def grushin_extremal_field(gp: GrushinParams, A: float = 1.0, x0=None) -> GrushinField:
    _check_tau1(gp)
    return GrushinField(lambda x, z: eval_grushin_extremal(gp, A, x0, x, z), gp)


def eval_grushin_general(gp: GrushinParams, A: float, x0, profile, x, z) -> np.ndarray:
    """Profile-based extremal: the half-space form composed with t = |z|^(tau+1)."""
    wp = grushin_to_weight(gp)
    x, z = _as_xz(x, z, gp)
    x0 = np.zeros(gp.n) if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float))
    t = np.linalg.norm(z, axis=-1) ** (float(gp.tau) + 1.0)
    return ball_to_halfspace(profile, _float_pair(wp), A, x0, x, t)


def _float_pair(wp: WeightPair) -> WeightPair:
    return WeightPair(wp.n, float(wp.alpha), float(wp.beta))


def halfspace_case1(gp: GrushinParams, A: float = 1.0, x0=None):
    """The beta = alpha - 1 bubble matching the tau = 1 Grushin extremal."""
    wp = _float_pair(grushin_to_weight(gp))
    spec = ExtremalSpec(wp, A=A, y0=() if x0 is None else x0)
    return lambda y, t: eval_case1(spec, y, t)


@dataclass
class LiftIdentityReport:
    energy_halfspace: float
    energy_grushin: float
    power_halfspace: float
    power_grushin: float

    @property
    def energy_deviation(self) -> float:
        return abs(self.energy_halfspace - self.energy_grushin) / abs(self.energy_grushin)

    @property
    def power_deviation(self) -> float:
        return abs(self.power_halfspace - self.power_grushin) / abs(self.power_grushin)

    def to_json(self) -> dict:
        return {"energy_halfspace": self.energy_halfspace, "energy_grushin": self.energy_grushin,
                "power_halfspace": self.power_halfspace, "power_grushin": self.power_grushin,
                "energy_deviation": self.energy_deviation, "power_deviation": self.power_deviation}


def lift_identities(u_half, gp: GrushinParams, levels: Sequence[int] = LEVELS,
                    extent: float = 1e14, core: float = 1.0) -> LiftIdentityReport:
    """Both sides of the change-of-variables identities for u = lift(u~).

    int t^alpha |grad u~|^2 = (1/(|S^{m-1}|(tau+1))) * Grushin energy of u and
    int t^beta |u~|^p* = ((tau+1)/|S^{m-1}|) int |u|^p*, each side computed by
    its own quadrature and extrapolated over ``levels``.
    """
    wp = _float_pair(grushin_to_weight(gp))
    field = lift(u_half, gp)
    k = float(gp.tau) + 1.0
    sm = sphere_area(gp.m)
    cfg = QuadConfig(extent, extent, 16, 16, core=core)
    eh, ph, eg, pg = [], [], [], []
    for N in levels:
        f = Field2D.from_config(u_half, wp, cfg.refined(N))
        eh.append(dirichlet_energy(f))
        ph.append(f.integrate(np.abs(f.values) ** wp.p_star, wp.b))
        e, p = biradial_integrals(field, gp, N, extent, core)
        eg.append(e / (sm * k))
        pg.append(p * k / sm)
    return LiftIdentityReport(extrapolate(eh)[0], extrapolate(eg)[0],
                              extrapolate(ph)[0], extrapolate(pg)[0])
