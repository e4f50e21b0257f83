"""Radial ball ODE: shooting solver, hyperbolic form and energy diagnostics.

The equation on 0 < r < 1/2, with q = 1/4 - r^2, is

    psi'' + (n/r - 2 alpha r/q) psi' - alpha (n+alpha-1) psi/q = -q^(beta-alpha) psi^(p-1)

with psi'(0) = 0 and q^alpha psi' -> 0 at r = 1/2.  The right-hand constant is
normalized to 1; a solution for constant C is obtained as C^(-1/(p-2)) psi.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError, NoSolution, ShotFailed
from .params import WeightPair, classify

R_EPS = 1e-4
STOP_BASE = 1e-2
STOP_LEVELS = 6
RTOL = 1e-10
RESIDUAL_TOL = 1e-8
OVERFLOW_GUARD = 1e12


def _distinct_exponents(candidates, gap=0.2):
    out = [0.0]
    for e in candidates:
        if e > 0 and all(abs(e - x) > gap for x in out):
            out.append(float(e))
    return out


@dataclass(frozen=True)
class EndpointModel:
    """Local model psi(1/2 - s) ~ sum_k coef_k s^exponent_k near the boundary."""

    exponents: tuple[float, ...]
    coefs: tuple[float, ...]

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return sum(c * s ** e for c, e in zip(self.coefs, self.exponents))

    def derivative_r(self, s):
        """d psi/dr = -d psi/ds."""
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for c, e in zip(self.coefs, self.exponents):
            if e > 0:
                out = out - c * e * s ** (e - 1.0)
        return out


@dataclass
class RadialProfile:
    r_grid: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    K: float
    wp: WeightPair
    endpoint: EndpointModel | None = None
    _spline: CubicHermiteSpline | None = field(default=None, repr=False)

    def __post_init__(self):
        self.r_grid = np.asarray(self.r_grid, dtype=float)
        self.psi = np.asarray(self.psi, dtype=float)
        self.dpsi = np.asarray(self.dpsi, dtype=float)
        if np.any(np.diff(self.r_grid) <= 0):
            raise DomainError("r_grid must be strictly increasing")
        if self.r_grid[0] < 0 or self.r_grid[-1] > 0.5:
            raise DomainError("r_grid must lie in [0, 1/2]")

    @property
    def r_last(self) -> float:
        return float(self.r_grid[-1])

    def __call__(self, r):
        """Evaluate psi on [0, 1/2]; beyond the last sample the endpoint model is used."""
        r = np.asarray(r, dtype=float)
        if np.any(r < -1e-14) or np.any(r > 0.5 + 1e-12):
            raise DomainError("profile argument outside [0, 1/2]")
        if self._spline is None:
            self._spline = CubicHermiteSpline(self.r_grid, self.psi, self.dpsi)
        r = np.clip(r, 0.0, 0.5)
        inside = r <= self.r_last
        out = np.empty_like(r)
        out[inside] = self._spline(r[inside])
        if np.any(~inside):
            s = 0.5 - r[~inside]
            if self.endpoint is not None:
                out[~inside] = self.endpoint(s)
            else:
                # linear blend between the last sample and K
                w = s / (0.5 - self.r_last)
                out[~inside] = w * self.psi[-1] + (1.0 - w) * self.K
        return out

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        if self._spline is None:
            self._spline = CubicHermiteSpline(self.r_grid, self.psi, self.dpsi)
        r = np.clip(r, 0.0, 0.5)
        inside = r <= self.r_last
        out = np.empty_like(r)
        out[inside] = self._spline(r[inside], 1)
        if np.any(~inside):
            s = 0.5 - r[~inside]
            if self.endpoint is not None:
                out[~inside] = self.endpoint.derivative_r(s)
            else:
                out[~inside] = (self.K - self.psi[-1]) / (0.5 - self.r_last)
        return out

    def to_csv_rows(self):
        return [(float(a), float(b), float(c)) for a, b, c in zip(self.r_grid, self.psi, self.dpsi)]


def _rhs_factory(wp: WeightPair):
    n, al, be = wp.n, wp.a, wp.b
    p = wp.p_star
    lam = al * (n + al - 1.0)

    def rhs(r, y):
        psi, dpsi = y
        q = 0.25 - r * r
        force = q ** (be - al) * abs(psi) ** (p - 2.0) * psi
        return [dpsi, -(n / r - 2.0 * al * r / q) * dpsi + lam * psi / q - force]

    return rhs


def frobenius_coefficient(wp: WeightPair, psi0: float) -> float:
    """c2 in psi(r) = psi0 + c2 r^2 + O(r^4)."""
    n, al, be = wp.n, wp.a, wp.b
    p = wp.p_star
    return (4.0 * al * (n + al - 1.0) * psi0 - 4.0 ** (al - be) * psi0 ** (p - 1.0)) / (2.0 * (n + 1.0))


def frobenius_start(wp: WeightPair, psi0: float, r_eps: float = R_EPS) -> tuple[float, float]:
    """Series values (psi, psi') at r_eps for the solution with psi(0) = psi0."""
    if not (psi0 > 0 and math.isfinite(psi0)):
        raise DomainError(f"psi0 must be positive, got {psi0!r}")
    if not (0 < r_eps <= 1e-3):
        raise DomainError("r_eps must lie in (0, 1e-3]")
    c2 = frobenius_coefficient(wp, psi0)
    return psi0 + c2 * r_eps ** 2, 2.0 * c2 * r_eps


def stop_radii(base: float = STOP_BASE, levels: int = STOP_LEVELS) -> np.ndarray:
    return 0.5 - base * 2.0 ** -np.arange(levels)


def flux_corrected_functional(wp: WeightPair, r, psi, dpsi):
    """q^alpha psi' plus the leading part of the remaining flux integral up to r = 1/2.

    Integrating (r^n q^alpha psi')' = r^n [alpha(n+alpha-1) q^(alpha-1) psi - q^beta psi^(p-1)]
    over (r, 1/2) with frozen psi gives the correction terms used here; the result
    tends to the same limit as q^alpha psi' but with a much smaller remainder.
    """
    n, al, be = wp.n, wp.a, wp.b
    p = wp.p_star
    r = np.asarray(r, dtype=float)
    s = 0.5 - r
    q = 0.25 - r * r
    corr = (n + al - 1.0) * psi * s ** al - np.abs(psi) ** (p - 1.0) * s ** (be + 1.0) / (be + 1.0)
    return (r ** n) * (q ** al * dpsi + corr) / 0.5 ** n


def _limit_fit(s, values, exponents):
    s = np.asarray(s, dtype=float)
    exps = exponents[: len(s)]
    V = np.column_stack([s ** e for e in exps])
    coef, *_ = np.linalg.lstsq(V, np.asarray(values, dtype=float), rcond=None)
    return coef, exps


def boundary_exponents(wp: WeightPair):
    al, be = wp.a, wp.b
    return _distinct_exponents([1.0, al + 1.0, be + 2.0, al + 2.0, be + 3.0])


def psi_exponents(wp: WeightPair):
    al, be = wp.a, wp.b
    # a smaller gap keeps s^(beta-alpha+2) next to s when beta - alpha is near 0.2;
    # dropping it leaves a slope jump where the model joins the samples
    return _distinct_exponents([1.0, be - al + 2.0, 2.0, be - al + 3.0, 3.0], gap=0.1)


@dataclass
class ShotResult:
    psi0: float
    profile: RadialProfile
    stops: np.ndarray
    boundary_raw: np.ndarray
    boundary_corrected: np.ndarray
    boundary_limit: float
    K: float

    @property
    def boundary_last(self) -> float:
        """q^alpha psi' at the last stopping radius."""
        return float(self.boundary_raw[-1])


def shoot(wp: WeightPair, psi0: float, r_eps: float = R_EPS, base: float = STOP_BASE,
          levels: int = STOP_LEVELS, rtol: float = RTOL, n_samples: int = 801) -> ShotResult:
    """Integrate from r_eps towards 1/2 and estimate the boundary functional.

    Raises ShotFailed if psi reaches zero or exceeds the overflow guard.
    """
    psi_start, dpsi_start = frobenius_start(wp, psi0, r_eps)
    stops = stop_radii(base, levels)
    r_end = float(stops[-1])
    guard = OVERFLOW_GUARD * max(1.0, psi0)

    def hit_zero(r, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1

    def blow_up(r, y):
        return guard - abs(y[0])

    blow_up.terminal = True

    # dense samples: uniform in r plus a geometric cluster towards the endpoint
    uniform = np.linspace(r_eps, stops[0], n_samples)
    cluster = 0.5 - np.geomspace(0.5 - stops[0], 0.5 - r_end, 8 * levels)
    t_eval = np.unique(np.concatenate([uniform, cluster, stops]))
    t_eval = t_eval[(t_eval >= r_eps) & (t_eval <= r_end)]

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sol = solve_ivp(_rhs_factory(wp), (r_eps, r_end), [psi_start, dpsi_start],
                        method="DOP853", rtol=rtol, atol=rtol * 1e-4 * max(1.0, psi0),
                        t_eval=t_eval, events=[hit_zero, blow_up])
    if sol.status == 1:
        if sol.t_events[0].size:
            raise ShotFailed("psi reached zero", float(sol.t_events[0][0]))
        raise ShotFailed("psi exceeded the overflow guard", float(sol.t_events[1][0]))
    if sol.status != 0:
        t_done = np.asarray(sol.t)
        raise ShotFailed(f"integrator failed: {sol.message}", float(t_done[-1]) if t_done.size else r_eps)

    r = sol.t
    psi, dpsi = sol.y
    idx = np.searchsorted(r, stops)
    idx = np.minimum(idx, r.size - 1)
    r_s, psi_s, dpsi_s = r[idx], psi[idx], dpsi[idx]
    q_s = 0.25 - r_s * r_s
    raw = q_s ** wp.a * dpsi_s
    corrected = flux_corrected_functional(wp, r_s, psi_s, dpsi_s)
    s = 0.5 - r_s
    coef, _ = _limit_fit(s, corrected, boundary_exponents(wp))
    limit = float(coef[0])
    pcoef, pexps = _limit_fit(s, psi_s, psi_exponents(wp))
    K = float(pcoef[0])
    endpoint = EndpointModel(tuple(pexps), tuple(float(c) for c in pcoef))

    r_grid = np.concatenate([[0.0], r])
    psi_grid = np.concatenate([[psi0], psi])
    dpsi_grid = np.concatenate([[0.0], dpsi])
    profile = RadialProfile(r_grid, psi_grid, dpsi_grid, K, wp, endpoint)
    return ShotResult(psi0, profile, r_s, raw, corrected, limit, K)


def _shot_sign(wp, psi0, **kw):
    """+1 for a surviving shot with positive boundary limit, -1 otherwise."""
    try:
        res = shoot(wp, psi0, **kw)
    except ShotFailed:
        return -1, None
    return (1 if res.boundary_limit > 0 else -1), res


@dataclass
class ShootingResult:
    K: float
    psi0: float
    profile: RadialProfile
    residual: float
    iters: int
    flags: list[str] = field(default_factory=list)
    roots: list[float] = field(default_factory=list)

    def report(self) -> dict:
        return {
            "params": self.profile.wp.to_json(),
            "K": self.K,
            "psi0": self.psi0,
            "residual": self.residual,
            "iters": self.iters,
            "flags": list(self.flags),
            "roots": list(self.roots),
        }


def solve_bvp(wp: WeightPair, psi_range=(1e-6, 1e6), sweep_points: int = 49,
              xtol: float = 1e-12, residual_tol: float = RESIDUAL_TOL,
              k_floor: float = 1e-3, polish_rtol: float | None = 1e-12,
              **shot_kw) -> ShootingResult:
    """Find psi0 so that the boundary functional vanishes, by sweep and bisection.

    A candidate root is accepted only if the extrapolated boundary functional is
    below residual_tol and the boundary value K is bounded away from zero
    (K > k_floor * psi0); otherwise the bracket is discarded.  NoSolution is
    raised when no candidate survives.  The accepted psi0 is re-integrated with
    ``polish_rtol`` so that the returned profile carries less integration noise.
    """
    cls = classify(wp)
    if not cls.gn_valid:
        raise DomainError(f"parameters {wp} are not admissible")
    grid = np.geomspace(psi_range[0], psi_range[1], sweep_points)
    signs = []
    iters = 0
    for psi0 in grid:
        sgn, _ = _shot_sign(wp, psi0, **shot_kw)
        signs.append(sgn)
        iters += 1
    brackets = [(grid[i], grid[i + 1]) for i in range(len(grid) - 1)
                if signs[i] > 0 and signs[i + 1] < 0]
    flags = []
    if any(signs[i] < 0 and signs[i + 1] > 0 for i in range(len(grid) - 1)):
        flags.append("non-monotone")
    if wp.n == 1 and not cls.n1_unique:
        flags.append("uniqueness-not-guaranteed")

    accepted: list[tuple[float, ShotResult]] = []
    rejected = []
    for lo, hi in brackets:
        best = None
        while hi / lo - 1.0 > xtol:
            mid = math.sqrt(lo * hi)
            sgn, res = _shot_sign(wp, mid, **shot_kw)
            iters += 1
            if sgn > 0:
                lo = mid
            else:
                hi = mid
            if res is not None and (best is None or abs(res.boundary_limit) < abs(best.boundary_limit)):
                best = res
        for end in (lo, hi):
            _, res = _shot_sign(wp, end, **shot_kw)
            iters += 1
            if res is not None and (best is None or abs(res.boundary_limit) < abs(best.boundary_limit)):
                best = res
        if (best is not None and abs(best.boundary_limit) < residual_tol
                and best.K > k_floor * best.psi0 and np.all(best.profile.psi > 0)):
            accepted.append((best.psi0, best))
        else:
            rejected.append((lo, hi, None if best is None else best.boundary_limit,
                             None if best is None else best.K))
    if not accepted:
        raise NoSolution(f"no positive solution found for {wp.to_json()}; "
                         f"{len(brackets)} bracket(s) examined, rejected: {rejected}")
    if len(accepted) > 1:
        flags.append("multiple-roots")
    psi0, res = min(accepted, key=lambda item: abs(item[1].boundary_limit))
    if polish_rtol is not None:
        kw = dict(shot_kw)
        kw["rtol"] = polish_rtol
        try:
            polished = shoot(wp, psi0, **kw)
            iters += 1
            if abs(polished.boundary_limit) <= max(abs(res.boundary_limit), residual_tol):
                res = polished
        except ShotFailed:
            pass
    return ShootingResult(K=res.K, psi0=psi0, profile=res.profile, residual=abs(res.boundary_limit),
                          iters=iters, flags=flags, roots=[a for a, _ in accepted])


def constant_solution_value(wp: WeightPair) -> float:
    """The constant solution [alpha(n+alpha-1)]^((n+alpha-1)/2) when beta = alpha - 1."""
    return (wp.a * (wp.n + wp.a - 1.0)) ** wp.decay


def case2_profile_constant(wp: WeightPair) -> float:
    """C with psi(r) = C (r^2 + 1/4)^(-(n+alpha-1)/2) solving the equation when beta = alpha."""
    e = wp.decay
    return (e * (e + 1.0)) ** (0.5 * e)


def case2_profile(wp: WeightPair, r):
    r = np.asarray(r, dtype=float)
    return case2_profile_constant(wp) * (r * r + 0.25) ** (-wp.decay)


# ---------------------------------------------------------------------------
# hyperbolic form


@dataclass
class HyperbolicProfile:
    s_grid: np.ndarray
    v: np.ndarray
    dv: np.ndarray
    K: float
    wp: WeightPair
    source: RadialProfile | None = field(default=None, repr=False)

    @property
    def linear_coefficient(self) -> float:
        return hyperbolic_linear_coefficient(self.wp)

    def plateau(self) -> np.ndarray:
        """v(s) exp((n+alpha-1)s/2); tends to K."""
        return self.v * np.exp(self.wp.decay * self.s_grid)

    def plateau_deviation(self, s_lo: float = 10.0, s_hi: float = 20.0) -> float:
        """Max relative distance of the plateau from K on [s_lo, s_hi].

        The exact correction is (1+e^{-s})^{-(n+alpha-1)}, so the deviation at
        s_lo is about (n+alpha-1) e^{-s_lo} even for an exact profile.
        """
        mask = (self.s_grid >= s_lo) & (self.s_grid <= s_hi)
        if not np.any(mask):
            raise DomainError("no samples in the requested s window")
        return float(np.max(np.abs(self.plateau()[mask] - self.K)) / self.K)


def hyperbolic_linear_coefficient(wp: WeightPair) -> float:
    return (wp.n ** 2 - (1.0 - wp.a) ** 2) / 4.0


def _v_and_dv(profile: RadialProfile, wp: WeightPair, s):
    e = wp.decay
    s = np.asarray(s, dtype=float)
    half = 0.5 * s
    # e^{es}/(e^s+1)^{2e} = (2 cosh(s/2))^{-2e}
    g = (2.0 * np.cosh(half)) ** (-2.0 * e)
    th = np.tanh(half)
    r = 0.5 * th
    psi = profile(r)
    dpsi = profile.derivative(r)
    dr = 0.25 / np.cosh(half) ** 2
    v = g * psi
    dv = -e * th * v + g * dpsi * dr
    return v, dv


def to_hyperbolic(profile: RadialProfile, wp: WeightPair | None = None, s_max: float = 20.0,
                  n_points: int = 2001, s_min: float = 1e-3) -> HyperbolicProfile:
    """Resample v(s) = w(tanh(s/2)), w(r) = ((1-r^2)/4)^((n+alpha-1)/2) psi(r/2)."""
    wp = wp or profile.wp
    s = np.concatenate([[0.0], np.geomspace(s_min, s_max, n_points - 1)])
    v, dv = _v_and_dv(profile, wp, s)
    return HyperbolicProfile(s, v, dv, profile.K, wp, profile)


def hyperbolic_residual(profile: RadialProfile, wp: WeightPair | None = None,
                        s_lo: float = 0.5, s_hi: float = 12.0, n_points: int = 2001,
                        step: float = 1e-2):
    """Max relative residual of v'' + n coth(s) v' + lambda v + v^(p-1) = 0 on [s_lo, s_hi].

    v'' is a fourth-order central difference of the exact v' with spacing ``step``;
    the spacing is kept well above the profile's sample spacing so that
    integration noise in the samples is not amplified.
    """
    wp = wp or profile.wp
    s = np.linspace(s_lo, s_hi, n_points)
    v, dv = _v_and_dv(profile, wp, s)
    dvs = [_v_and_dv(profile, wp, s + k * step)[1] for k in (-2, -1, 1, 2)]
    d2v = (dvs[0] - 8.0 * dvs[1] + 8.0 * dvs[2] - dvs[3]) / (12.0 * step)
    lam = hyperbolic_linear_coefficient(wp)
    p = wp.p_star
    terms = [d2v, wp.n / np.tanh(s) * dv, lam * v, np.abs(v) ** (p - 1.0)]
    res = sum(terms)
    scale = sum(np.abs(t) for t in terms)
    return float(np.max(np.abs(res) / scale))


# ---------------------------------------------------------------------------
# energy function


@dataclass(frozen=True)
class EnergyParams:
    a: float
    b: float
    A: float
    B: float
    p: float
    n: int

    def A_alternative(self, alpha: float) -> float:
        """((a p - n)^2 - (alpha - 1)^2)/4, equal to A."""
        return ((self.a * self.p - self.n) ** 2 - (alpha - 1.0) ** 2) / 4.0

    def G(self, s):
        sh = np.sinh(s)
        return self.A * sh ** self.b + self.B * sh ** (self.b - 2.0)

    def dG(self, s):
        sh, ch = np.sinh(s), np.cosh(s)
        return (self.A * self.b * sh ** 2 + self.B * (self.b - 2.0)) * sh ** (self.b - 3.0) * ch


def energy_params(wp: WeightPair) -> EnergyParams:
    n, al = wp.n, wp.a
    p = wp.p_star
    a = 2.0 * n / (p + 2.0)
    b = a * (p - 2.0)
    B = 0.5 * a * (2.0 - a * p)
    A = (n ** 2 - (1.0 - al) ** 2) / 4.0 - a * a * p / 2.0
    return EnergyParams(a, b, A, B, p, n)


def energy_regime(wp: WeightPair) -> str | None:
    """'A1' (n=1, A<=0, energy nonincreasing), 'A2' (n>=2, p < 2(n+1)/(n-1), A>=0,
    energy nondecreasing), 'A3' (p equal to that critical value) or None."""
    ep = energy_params(wp)
    if wp.n == 1:
        return "A1" if ep.A <= 0 else None
    crit = 2.0 * (wp.n + 1.0) / (wp.n - 1.0)
    if abs(ep.p - crit) <= 1e-12 * crit:
        return "A3"
    if ep.p < crit and ep.A >= 0:
        return "A2"
    return None


@dataclass
class EnergySamples:
    s: np.ndarray
    energy: np.ndarray
    denergy_numeric: np.ndarray
    denergy_identity: np.ndarray

    def max_relative_mismatch(self) -> float:
        scale = np.max(np.abs(self.denergy_identity))
        return float(np.max(np.abs(self.denergy_numeric - self.denergy_identity)) / scale)


def energy_function(hp_or_profile, wp: WeightPair | None = None, s_lo: float = 0.5,
                    s_hi: float = 10.0, n_points: int = 20001) -> EnergySamples:
    """Energy E(s) = sinh^b (vhat')^2/2 + |vhat|^p/p + G vhat^2/2 with vhat = sinh^a v,
    its finite-difference derivative and the closed expression G' vhat^2 / 2."""
    if isinstance(hp_or_profile, RadialProfile):
        profile = hp_or_profile
    else:
        profile = getattr(hp_or_profile, "source", None)
    if profile is None:
        raise DomainError("energy_function needs the radial profile behind the hyperbolic samples")
    wp = wp or profile.wp
    ep = energy_params(wp)
    s = np.linspace(s_lo, s_hi, n_points)
    v, dv = _v_and_dv(profile, wp, s)
    sh, ch = np.sinh(s), np.cosh(s)
    vh = sh ** ep.a * v
    dvh = ep.a * sh ** (ep.a - 1.0) * ch * v + sh ** ep.a * dv
    E = 0.5 * sh ** ep.b * dvh ** 2 + np.abs(vh) ** ep.p / ep.p + 0.5 * ep.G(s) * vh ** 2
    dE_num = np.gradient(E, s, edge_order=2)
    dE_id = 0.5 * ep.dG(s) * vh ** 2
    return EnergySamples(s, E, dE_num, dE_id)
