"""Weighted integrals of y-radial fields and the Rayleigh quotients F and G.

Fields are sampled on tensor grids in (rho, t) with rho = |y|.  Integrals of
g(x) x^gamma use product weights from piecewise quadratic interpolation of g
on consecutive cell pairs; on the pair touching x = 0 the monomial moments of
x^gamma are exact, so integrable endpoint singularities cost nothing extra.
Derivatives are fourth-order differences in the grid index divided by the
same difference of the coordinates, which is exact for smoothly stretched
grids.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from .errors import DegenerateFieldError, DomainError
from .lattice import LatticeField, lattice_rayleigh_G
from .params import GrushinParams, WeightPair, conversion_factor, grushin_to_weight
from .special import sphere_area

_GL_X, _GL_W = leggauss(10)
LEVELS = (200, 400, 800, 1600)


class TailMode(enum.Enum):
    NONE = "none"
    POWER_LAW = "power-law"


@dataclass(frozen=True)
class QuadConfig:
    """Box [0, R] x [0, T] with sinh-stretched grids; ``core`` is the width of
    the nearly uniform region near the origin."""

    R: float = 1e14
    T: float = 1e14
    n_rho: int = 800
    n_t: int = 800
    tail_mode: TailMode = TailMode.NONE
    core: float = 1.0

    def __post_init__(self):
        if not (self.R > 0 and self.T > 0 and self.core > 0):
            raise DomainError("R, T and core must be positive")
        for k in (self.n_rho, self.n_t):
            if k < 16 or k % 2:
                raise DomainError("resolutions must be even and at least 16")

    def refined(self, n_cells: int) -> "QuadConfig":
        return QuadConfig(self.R, self.T, n_cells, n_cells, self.tail_mode, self.core)

    def grids(self):
        return stretched_grid(self.n_rho, self.R, self.core), stretched_grid(self.n_t, self.T, self.core)


def stretched_grid(n_cells: int, xmax: float, core: float = 1.0) -> np.ndarray:
    """core * sinh(s) on a uniform s grid; nearly uniform below ``core``, geometric beyond."""
    return core * np.sinh(np.linspace(0.0, math.asinh(xmax / core), n_cells + 1))


def product_weights(x: np.ndarray, gamma: float) -> np.ndarray:
    """Weights w with sum w_i g(x_i) ~ int_{x_0}^{x_N} g(x) x^gamma dx."""
    x = np.asarray(x, dtype=float)
    N = len(x) - 1
    if N < 2 or N % 2:
        raise DomainError("product weights need an even number of cells")
    if gamma <= -1 and x[0] == 0:
        raise DomainError(f"x^{gamma} is not integrable at 0")
    a, b, c = x[0:-1:2], x[1::2], x[2::2]
    s = 0.5 * (c - a)[:, None] * _GL_X + 0.5 * (c + a)[:, None]
    w = 0.5 * (c - a)[:, None] * _GL_W * s ** gamma
    A, B, C = a[:, None], b[:, None], c[:, None]
    La = (s - B) * (s - C) / ((A - B) * (A - C))
    Lb = (s - A) * (s - C) / ((B - A) * (B - C))
    Lc = (s - A) * (s - B) / ((C - A) * (C - B))
    pw = np.stack([np.sum(w * La, 1), np.sum(w * Lb, 1), np.sum(w * Lc, 1)], axis=1)
    if x[0] == 0.0:
        # exact moments of 1, x, x^2 against x^gamma on [0, x_2]
        a0, b0, c0 = x[0], x[1], x[2]
        mom = np.array([c0 ** (gamma + j + 1) / (gamma + j + 1) for j in range(3)])
        V = np.array([[1.0, 1.0, 1.0], [a0, b0, c0], [a0 * a0, b0 * b0, c0 * c0]])
        pw[0] = np.linalg.solve(V, mom)
    W = np.zeros(N + 1)
    np.add.at(W, np.arange(0, N, 2), pw[:, 0])
    np.add.at(W, np.arange(1, N, 2), pw[:, 1])
    np.add.at(W, np.arange(2, N + 1, 2), pw[:, 2])
    return W


def index_derivative(f: np.ndarray, axis: int = 0, parity: int | None = None) -> np.ndarray:
    """Fourth-order derivative with respect to the grid index.

    ``parity`` +1 / -1 reflects f evenly / oddly across index 0; None uses
    one-sided stencils there.  The last two indices always use one-sided stencils.
    """
    f = np.moveaxis(np.asarray(f, dtype=float), axis, 0)
    if f.shape[0] < 5:
        raise DomainError("need at least 5 points for fourth-order differences")
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / 12
    if parity is None:
        d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / 12
        d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / 12
    else:
        s = parity
        d[0] = (s * f[2] - 8 * s * f[1] + 8 * f[1] - f[2]) / 12
        d[1] = (s * f[1] - 8 * f[0] + 8 * f[2] - f[3]) / 12
    d[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / 12
    d[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / 12
    return np.moveaxis(d, 0, axis)


def grid_derivative(f: np.ndarray, x: np.ndarray, axis: int, parity_at_zero: int | None) -> np.ndarray:
    """df/dx on a stretched grid.  The coordinate itself is odd across x = 0."""
    x = np.asarray(x, dtype=float)
    xp = -1 if (parity_at_zero is not None and x[0] == 0.0) else None
    fp = parity_at_zero if x[0] == 0.0 else None
    metric = index_derivative(x, 0, xp)
    shape = [1] * np.ndim(f)
    shape[axis] = -1
    return index_derivative(f, axis, fp) / metric.reshape(shape)


@dataclass
class Field2D:
    """Samples u(rho_i, t_j) of a y-radial function on the half space."""

    rho_grid: np.ndarray
    t_grid: np.ndarray
    values: np.ndarray
    wp: WeightPair

    def __post_init__(self):
        self.rho_grid = np.asarray(self.rho_grid, dtype=float)
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        for g in (self.rho_grid, self.t_grid):
            if g.ndim != 1 or np.any(np.diff(g) <= 0):
                raise DomainError("grids must be strictly increasing")
        if self.rho_grid[0] < 0 or self.t_grid[0] < 0:
            raise DomainError("grids must start at a nonnegative value")
        if self.values.shape != (len(self.rho_grid), len(self.t_grid)):
            raise DomainError("values shape does not match the grids")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("values must be finite")

    @classmethod
    def from_evaluator(cls, u_eval, wp: WeightPair, rho, t) -> "Field2D":
        """Sample an evaluator u(y, t) along y = (rho, 0, ..., 0)."""
        R, T = np.meshgrid(np.asarray(rho, float), np.asarray(t, float), indexing="ij")
        y = np.zeros(R.shape + (wp.n,))
        y[..., 0] = R
        return cls(rho, t, u_eval(y, T), wp)

    @classmethod
    def from_config(cls, u_eval, wp: WeightPair, config: QuadConfig) -> "Field2D":
        rho, t = config.grids()
        return cls.from_evaluator(u_eval, wp, rho, t)

    def scaled(self, c: float) -> "Field2D":
        return Field2D(self.rho_grid, self.t_grid, c * self.values, self.wp)

    def gradient(self):
        """(u_rho, u_t): even in rho, one-sided at t = 0."""
        u_r = grid_derivative(self.values, self.rho_grid, 0, +1)
        u_t = grid_derivative(self.values, self.t_grid, 1, None)
        return u_r, u_t

    def integrate(self, integrand: np.ndarray, gamma: float) -> float:
        """|S^{n-1}| int int rho^{n-1} t^gamma integrand drho dt."""
        Wr = product_weights(self.rho_grid, self.wp.n - 1)
        Wt = product_weights(self.t_grid, gamma)
        return float(sphere_area(self.wp.n) * (Wr @ integrand @ Wt))

    def to_csv_rows(self):
        R, T = np.meshgrid(self.rho_grid, self.t_grid, indexing="ij")
        return [(float(a), float(b), float(c)) for a, b, c in zip(R.ravel(), T.ravel(), self.values.ravel())]


@dataclass
class QuadReport:
    value: float
    est_error: float
    grid: dict
    tail_contribution: float = 0.0
    order: float = float("nan")
    samples: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"value": self.value, "est_error": self.est_error, "grid": self.grid,
                "tail_contribution": self.tail_contribution, "order": self.order,
                "samples": list(self.samples)}


def _power_law_tail(f: Field2D, gamma: float, p: float) -> float:
    """Integral of the fitted c (rho^2+t^2)^(-q/2) model outside the box, to the power p."""
    R, T = f.rho_grid[-1], f.t_grid[-1]
    L = min(R, T)
    RR, TT = np.meshgrid(f.rho_grid, f.t_grid, indexing="ij")
    r = np.hypot(RR, TT)
    u = np.abs(f.values)
    mask = (r >= 0.1 * L) & (r <= L) & (u > 0)
    if np.count_nonzero(mask) < 3:
        raise DomainError("not enough samples on the last decade to fit a tail")
    slope, icpt = np.polyfit(np.log(r[mask]), np.log(u[mask]), 1)
    q, c = -slope, math.exp(icpt)
    n = f.wp.n
    k = n + gamma + 1.0 - q * p
    if k >= 0:
        raise DomainError("fitted decay is too slow for a finite tail")
    th_star = math.atan2(T, R)

    def integrand(th):
        edge = min(R / math.cos(th) if th < math.pi / 2 else math.inf,
                   T / math.sin(th) if th > 0 else math.inf)
        return math.cos(th) ** (n - 1) * math.sin(th) ** gamma * edge ** k

    val = integrate.quad(integrand, 0.0, th_star, limit=200)[0]
    val += integrate.quad(integrand, th_star, math.pi / 2, limit=200)[0]
    return float(sphere_area(n) * c ** p * val / (-k))


def weighted_lp_report(f: Field2D, weight_exp: float, p: float,
                       tail_mode: TailMode = TailMode.NONE) -> QuadReport:
    if weight_exp <= -1:
        raise DomainError("t^gamma is not integrable for gamma <= -1")
    if p < 1:
        raise DomainError("p must be at least 1")
    body = f.integrate(np.abs(f.values) ** p, weight_exp)
    tail = _power_law_tail(f, weight_exp, p) if tail_mode is TailMode.POWER_LAW else 0.0
    total = body + tail
    return QuadReport(total ** (1.0 / p), float("nan"),
                      {"n_rho": len(f.rho_grid) - 1, "n_t": len(f.t_grid) - 1,
                       "R": float(f.rho_grid[-1]), "T": float(f.t_grid[-1])},
                      tail_contribution=tail / total if total else 0.0)


def weighted_lp_norm(f: Field2D, weight_exp: float, p: float,
                     tail_mode: TailMode = TailMode.NONE) -> float:
    """(|S^{n-1}| int int rho^{n-1} t^gamma |u|^p)^(1/p)."""
    return weighted_lp_report(f, weight_exp, p, tail_mode).value


def dirichlet_energy(f: Field2D) -> float:
    """int t^alpha |grad u|^2 over the half space."""
    u_r, u_t = f.gradient()
    return f.integrate(u_r ** 2 + u_t ** 2, f.wp.a)


def rayleigh_F(f: Field2D) -> float:
    """int t^alpha |grad u|^2 / (int t^beta |u|^p*)^(2/p*)."""
    p = f.wp.p_star
    den = f.integrate(np.abs(f.values) ** p, f.wp.b)
    if not den > 0:
        raise DegenerateFieldError("denominator vanishes")
    return dirichlet_energy(f) / den ** (2.0 / p)


def extrapolate(values: Sequence[float]) -> tuple[float, float, float]:
    """Limit of a sequence computed on grids refined by 2 each time.

    The convergence order is estimated from the last three values (Aitken);
    returns (limit, error estimate, order).  When the differences do not
    contract monotonically the last value is returned with the last change
    as its error.
    """
    v = np.asarray(values, dtype=float)
    if len(v) < 3:
        return float(v[-1]), float(abs(v[-1] - v[-2])) if len(v) > 1 else float("nan"), float("nan")
    d1, d2 = v[-2] - v[-3], v[-1] - v[-2]
    if d2 == 0:
        return float(v[-1]), 0.0, float("inf")
    ratio = d1 / d2
    if not ratio > 1:
        return float(v[-1]), float(abs(d2)), float("nan")
    order = math.log2(ratio)
    limit = v[-1] + d2 / (ratio - 1.0)
    err = abs(limit - v[-1])
    if len(v) >= 4:
        prev = extrapolate(v[:-1])
        if math.isfinite(prev[2]):
            err = abs(limit - prev[0])
    return float(limit), float(err), float(order)


def refine(fn: Callable[[int], float], levels: Sequence[int] = LEVELS) -> QuadReport:
    """Evaluate fn on each resolution and extrapolate."""
    samples = [fn(N) for N in levels]
    value, err, order = extrapolate(samples)
    return QuadReport(value, err, {"levels": list(levels)}, order=order, samples=samples)


def rayleigh_F_extrapolated(u_eval, wp: WeightPair, config: QuadConfig = QuadConfig(),
                            levels: Sequence[int] = LEVELS) -> QuadReport:
    """rayleigh_F of an evaluator on a sequence of nested grids, extrapolated."""
    rep = refine(lambda N: rayleigh_F(Field2D.from_config(u_eval, wp, config.refined(N))), levels)
    rep.grid.update({"R": config.R, "T": config.T, "core": config.core})
    return rep


def weighted_lp_extrapolated(u_eval, wp: WeightPair, weight_exp: float, p: float,
                             config: QuadConfig = QuadConfig(),
                             levels: Sequence[int] = LEVELS) -> QuadReport:
    rep = refine(lambda N: weighted_lp_norm(Field2D.from_config(u_eval, wp, config.refined(N)),
                                            weight_exp, p, config.tail_mode), levels)
    rep.grid.update({"R": config.R, "T": config.T, "core": config.core})
    return rep


# ---------------------------------------------------------------- Grushin side

def _biradial_values(u_xz, gp: GrushinParams, a, b):
    A, B = np.meshgrid(a, b, indexing="ij")
    x = np.zeros(A.shape + (gp.n,))
    z = np.zeros(B.shape + (gp.m,))
    x[..., 0] = A
    z[..., 0] = B
    return np.asarray(u_xz(x, z), dtype=float)


def biradial_integrals(u_xz, gp: GrushinParams, n_cells: int = 800, extent: float = 1e14,
                       core: float = 1.0) -> tuple[float, float]:
    """Grushin energy and int |u|^(2Q/(Q-2)) for u radial in x and in z.

    Both are double integrals in a = |x|, b = |z| with the sphere areas and
    the factors a^(n-1) b^(m-1) folded into product weights.
    """
    a = stretched_grid(n_cells, extent, core)
    b = stretched_grid(n_cells, extent, core)
    U = _biradial_values(u_xz, gp, a, b)
    tau = float(gp.tau)
    u_a = grid_derivative(U, a, 0, +1)
    u_b = grid_derivative(U, b, 1, +1)
    Wa = product_weights(a, gp.n - 1)
    Wb = product_weights(b, gp.m - 1)
    const = sphere_area(gp.n) * sphere_area(gp.m)
    energy = const * (Wa @ u_b ** 2 @ Wb
                      + (tau + 1.0) ** 2 * (Wa @ u_a ** 2 @ product_weights(b, gp.m - 1 + 2 * tau)))
    power = const * (Wa @ np.abs(U) ** gp.p_star @ Wb)
    return float(energy), float(power)


def rayleigh_G_biradial(u_xz, gp: GrushinParams, n_cells: int = 800,
                        extent: float = 1e14, core: float = 1.0) -> float:
    """G for fields radial in x and in z on one grid level."""
    energy, power = biradial_integrals(u_xz, gp, n_cells, extent, core)
    if not power > 0:
        raise DegenerateFieldError("denominator vanishes")
    return energy / power ** (2.0 / gp.p_star)


def rayleigh_G(u, gp: GrushinParams, levels: Sequence[int] = LEVELS, extent: float = 1e14,
               core: float = 1.0) -> float:
    """Grushin quotient of a lattice field, or of an evaluator u(x, z) radial in x and z.

    Lattice fields use forward differences and plain sums.  Evaluators go
    through the bi-radial quadrature with refinement and extrapolation.
    """
    if isinstance(u, LatticeField):
        return lattice_rayleigh_G(u, gp)
    return rayleigh_G_report(u, gp, levels, extent, core).value


def rayleigh_G_report(u_xz, gp: GrushinParams, levels: Sequence[int] = LEVELS,
                      extent: float = 1e14, core: float = 1.0) -> QuadReport:
    rep = refine(lambda N: rayleigh_G_biradial(u_xz, gp, N, extent, core), levels)
    rep.grid.update({"extent": extent, "core": core})
    return rep


def functional_bridge_check(u_half, gp: GrushinParams, levels: Sequence[int] = LEVELS,
                            extent: float = 1e14, core: float = 1.0) -> float:
    """|G[u] - c F[u~]| / G[u] where u(x, z) = u~(x, |z|^(tau+1))."""
    from .grushin import lift

    wp = grushin_to_weight(gp)
    g = rayleigh_G_report(lift(u_half, gp), gp, levels, extent, core).value
    f = rayleigh_F_extrapolated(u_half, wp, QuadConfig(extent, extent, 16, 16, core=core), levels).value
    return abs(g - conversion_factor(gp) * f) / abs(g)


# ---------------------------------------------------------------- Poincare and scaling

def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    w = np.zeros_like(x)
    dx = np.diff(x)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    return w


def poincare_check(f: Field2D, center_t: float, r: float) -> float:
    """Weighted Poincare ratio on the half ball about the axis point (0, center_t).

    Returns int_{B_r} t^a |u - mean|^2 / (r^2 int_{B_3r} t^a |grad u|^2), the
    mean being the t^a-weighted average over B_r.  Balls are intersected with
    the half space; the field must cover the 3r ball.
    """
    if not r > 0:
        raise DomainError("r must be positive")
    if f.rho_grid[0] != 0.0:
        raise DomainError("on-axis balls need rho_grid[0] = 0")
    if f.rho_grid[-1] < 3 * r or f.t_grid[-1] < center_t + 3 * r:
        raise DomainError("the 3r ball is not covered by the grid")
    n, a = f.wp.n, f.wp.a
    R, T = np.meshgrid(f.rho_grid, f.t_grid, indexing="ij")
    w = (sphere_area(n) * np.outer(_trapezoid_weights(f.rho_grid), _trapezoid_weights(f.t_grid))
         * R ** (n - 1) * T ** a)
    d2 = R ** 2 + (T - center_t) ** 2
    inner = d2 <= r * r
    outer = d2 <= 9 * r * r
    mass = np.sum(w[inner])
    if mass == 0:
        raise DomainError("the ball contains no grid points")
    mean = np.sum(w[inner] * f.values[inner]) / mass
    lhs = np.sum(w[inner] * (f.values[inner] - mean) ** 2)
    u_r, u_t = f.gradient()
    rhs = np.sum(w[outer] * (u_r ** 2 + u_t ** 2)[outer])
    if lhs == 0:
        return 0.0
    if rhs == 0:
        raise DegenerateFieldError("gradient vanishes on the 3r ball while u oscillates")
    return float(lhs / (r * r * rhs))


def ggn1_ratio(f: Field2D, k: float, l: float) -> float:
    """(int t^l |u|^q)^(1/q) / int t^k |grad u| with q = (n+l+1)/(n+k)."""
    n = f.wp.n
    q = (n + l + 1.0) / (n + k)
    u_r, u_t = f.gradient()
    den = f.integrate(np.sqrt(u_r ** 2 + u_t ** 2), k)
    if not den > 0:
        raise DegenerateFieldError("gradient vanishes")
    return f.integrate(np.abs(f.values) ** q, l) ** (1.0 / q) / den


def smooth_bump(rho, t, center_t: float = 1.0, radius: float = 0.5):
    """C-infinity bump exp(1 - 1/(1 - d^2/radius^2)) about the axis point (0, center_t)."""
    d2 = (np.asarray(rho) ** 2 + (np.asarray(t) - center_t) ** 2) / radius ** 2
    out = np.zeros(np.broadcast(d2).shape)
    inside = d2 < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - d2[inside]))
    return out


def scaling_necessity_ratios(n: int, k: float, l: float, t0s=(1.0, 10.0, 100.0),
                             lam: float = 0.5, cells: int = 400) -> list[float]:
    """GGN-1 ratio of u(y/lam, t0 + (t - t0)/lam) for a fixed bump u, per t0.

    The rescaled bump sits at height about t0 (1 - lam) + lam, so the ratio
    behaves like t0^(l/q - k); it grows without bound when l > (n+1) k / n.
    """
    wp = WeightPair(n, max(k, 1e-9), l)
    out = []
    for t0 in t0s:
        # support of the rescaled bump: rho <= lam*radius, t in t0 + lam*([0.5, 1.5] - t0)
        lo = t0 + lam * (0.5 - t0)
        hi = t0 + lam * (1.5 - t0)
        rho = np.linspace(0.0, lam * 0.5, cells + 1)
        t = np.linspace(lo, hi, cells + 1)
        R, T = np.meshgrid(rho, t, indexing="ij")
        vals = smooth_bump(R / lam, t0 + (T - t0) / lam)
        out.append(ggn1_ratio(Field2D(rho, t, vals, wp), k, l))
    return out
