"""Sharp constants from scratch by a normalized gradient flow.

The Rayleigh quotient is discretized with bilinear (Q1) finite elements on a
stretched tensor grid in (rho, t), with homogeneous Dirichlet values on the
outer edges.  Each step moves along the Sobolev gradient of the quotient on
the unit sphere of the weighted L^p* norm, clips at 0 and renormalizes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import RegularGridInterpolator
from scipy.special import roots_jacobi

from .errors import DegenerateFieldError, DomainError, Stagnation
from .params import WeightPair, classify
from .quadrature import Field2D, stretched_grid
from .special import sphere_area

LR_MIN = 1e-12


def _cell_rule(x: np.ndarray, gamma: float, q: int):
    """Per-cell points and weights for int x^gamma f dx (Gauss-Jacobi on a cell touching 0)."""
    a, h = x[:-1], np.diff(x)
    g, gw = leggauss(q)
    pts = a[:, None] + h[:, None] * (g[None, :] + 1.0) / 2.0
    w = h[:, None] / 2.0 * gw[None, :] * pts ** gamma
    if x[0] == 0.0 and gamma != 0:
        jx, jw = roots_jacobi(q, 0.0, gamma)
        pts[0] = h[0] * (jx + 1.0) / 2.0
        w[0] = (h[0] / 2.0) ** (gamma + 1.0) * jw
    return pts, w


def fem_1d(x: np.ndarray, gamma: float, q: int = 4):
    """P1 mass and stiffness matrices with weight x^gamma, plus the map from
    nodal values to quadrature points and the flattened quadrature weights."""
    N = len(x)
    pts, w = _cell_rule(x, gamma, q)
    h = np.diff(x)
    s = (pts - x[:-1, None]) / h[:, None]
    phi_l, phi_r = 1.0 - s, s
    m_ll = (w * phi_l * phi_l).sum(1)
    m_lr = (w * phi_l * phi_r).sum(1)
    m_rr = (w * phi_r * phi_r).sum(1)
    kk = w.sum(1) / h ** 2
    idx = np.arange(N - 1)
    rows = np.concatenate([idx, idx + 1, idx, idx + 1])
    cols = np.concatenate([idx, idx + 1, idx + 1, idx])
    M = sp.coo_matrix((np.concatenate([m_ll, m_rr, m_lr, m_lr]), (rows, cols)), shape=(N, N)).tocsr()
    K = sp.coo_matrix((np.concatenate([kk, kk, -kk, -kk]), (rows, cols)), shape=(N, N)).tocsr()
    qrows = np.arange(pts.size)
    qcell = np.repeat(idx, q)
    B = sp.coo_matrix((np.concatenate([phi_l.ravel(), phi_r.ravel()]),
                       (np.concatenate([qrows, qrows]), np.concatenate([qcell, qcell + 1]))),
                      shape=(pts.size, N)).tocsr()
    return M, K, B, w.ravel()


class GalerkinProblem:
    """Discrete energy and L^p*_beta norm for nodal values on rho_grid x t_grid."""

    def __init__(self, wp: WeightPair, rho_grid: np.ndarray, t_grid: np.ndarray, q: int = 4):
        self.wp = wp
        self.rho = np.asarray(rho_grid, dtype=float)
        self.t = np.asarray(t_grid, dtype=float)
        self.p = wp.p_star
        sn = sphere_area(wp.n)
        Mr, Kr, Br, wr = fem_1d(self.rho, wp.n - 1, q)
        Mta, Kta, _, _ = fem_1d(self.t, wp.a, q)
        _, _, Bt, wt = fem_1d(self.t, wp.b, q)
        self.K = (sn * (sp.kron(Kr, Mta) + sp.kron(Mr, Kta))).tocsr()
        self.Br, self.Bt = Br, Bt
        self.W = sn * np.outer(wr, wt)
        self.shape = (len(self.rho), len(self.t))
        free = np.ones(self.shape, dtype=bool)
        free[-1, :] = False
        free[:, -1] = False
        self.free = free.ravel()
        self._lu = None

    @property
    def lu(self):
        if self._lu is None:
            self._lu = spl.splu(self.K[self.free][:, self.free].tocsc())
        return self._lu

    def at_quadrature(self, u: np.ndarray) -> np.ndarray:
        return self.Br @ u.reshape(self.shape) @ self.Bt.T

    def energy(self, u: np.ndarray) -> float:
        return float(u @ (self.K @ u))

    def power(self, u: np.ndarray) -> float:
        """int t^beta |u_h|^p* over the half space."""
        return float(np.sum(self.W * np.abs(self.at_quadrature(u)) ** self.p))

    def norm(self, u: np.ndarray) -> float:
        return self.power(u) ** (1.0 / self.p)

    def power_gradient(self, u: np.ndarray) -> np.ndarray:
        """Gradient of power(u)/p* with respect to nodal values."""
        V = self.at_quadrature(u)
        return (self.Br.T @ (self.W * np.abs(V) ** (self.p - 2) * V) @ self.Bt).ravel()

    def quotient(self, u: np.ndarray) -> float:
        nrm = self.norm(u)
        if not nrm > 0:
            raise DegenerateFieldError("field vanishes")
        return self.energy(u) / nrm ** 2

    def normalize(self, u: np.ndarray) -> np.ndarray:
        u = np.where(self.free, u, 0.0)
        nrm = self.norm(u)
        if not nrm > 0:
            raise DegenerateFieldError("cannot normalize a vanishing field")
        return u / nrm

    def to_field(self, u: np.ndarray) -> Field2D:
        return Field2D(self.rho, self.t, u.reshape(self.shape), self.wp)

    def sample(self, u_eval) -> np.ndarray:
        return Field2D.from_evaluator(u_eval, self.wp, self.rho, self.t).values.ravel()


@dataclass(frozen=True)
class MinimizeConfig:
    n_nodes: int = 256
    R: float = 1e4
    T: float = 1e4
    core: float = 0.02
    max_iters: int = 5000
    lr: float = 1.0
    window: int = 100
    tol: float = 1e-9
    grow_after: int = 20
    grow_factor: float = 1.1
    bump_center: float = 0.25
    domain_check: bool = True
    domain_tol: float = 2e-3

    def grids(self):
        return (stretched_grid(self.n_nodes - 1, self.R, self.core),
                stretched_grid(self.n_nodes - 1, self.T, self.core))


@dataclass
class FlowState:
    field: Field2D
    step: int = 0
    F_history: list = field(default_factory=list)
    lr: float = 1.0
    accepted: int = 0
    problem: GalerkinProblem | None = field(default=None, repr=False)
    lr_history: list = field(default_factory=list)

    @property
    def F(self) -> float:
        return self.F_history[-1]

    def trace_rows(self):
        """(step, F, lr) with the step size used to reach each accepted iterate."""
        lrs = [float("nan")] + list(self.lr_history)
        return [(k, float(F), lr) for k, (F, lr) in enumerate(zip(self.F_history, lrs))]


def initial_state(problem: GalerkinProblem, u0=None, lr: float = 1.0,
                  bump_center: float = 0.25) -> FlowState:
    """Normalized start; the default is exp(-(rho^2 + (t - c)^2))."""
    if u0 is None:
        R, T = np.meshgrid(problem.rho, problem.t, indexing="ij")
        u0 = np.exp(-(R ** 2 + (T - bump_center) ** 2))
    u0 = np.asarray(u0, dtype=float).ravel()
    u = problem.normalize(u0)
    return FlowState(problem.to_field(u), 0, [problem.quotient(u)], lr, 0, problem)


def flow_step(state: FlowState, wp: WeightPair | None = None, grow_after: int = 20,
              grow_factor: float = 1.1, lr_max: float = 1.0) -> FlowState:
    """One accepted step of the normalized flow.

    The descent direction is the Sobolev gradient z = u - E K^{-1} grad(N)/p*,
    where E is the energy and N the p*-th power of the norm; on the unit sphere
    this is the energy-metric gradient of the quotient.  The step is halved
    until the quotient does not increase.
    """
    P = state.problem
    if P is None:
        raise DomainError("state carries no discretization")
    if wp is not None and wp != P.wp:
        raise DomainError("weight pair does not match the state")
    u = state.field.values.ravel()
    F = state.F
    E = P.energy(u)
    z = np.zeros_like(u)
    z[P.free] = u[P.free] - E * P.lu.solve(P.power_gradient(u)[P.free])
    lr, accepted = state.lr, state.accepted
    while True:
        v = np.maximum(u - lr * z, 0.0)
        try:
            v = P.normalize(v)
            Fn = P.quotient(v)
        except DegenerateFieldError:
            Fn = math.inf
        if Fn <= F:
            break
        lr /= 2.0
        accepted = 0
        if lr < LR_MIN:
            raise Stagnation(f"step size underflow at step {state.step}, F = {F!r}")
    used = lr
    accepted += 1
    if accepted >= grow_after:
        lr = min(lr * grow_factor, lr_max)
        accepted = 0
    return FlowState(P.to_field(v), state.step + 1, state.F_history + [Fn], lr, accepted, P,
                     state.lr_history + [used])


def run_flow(state: FlowState, config: MinimizeConfig) -> tuple[FlowState, list[str]]:
    flags = []
    w = config.window
    while state.step < config.max_iters:
        try:
            state = flow_step(state, grow_after=config.grow_after,
                              grow_factor=config.grow_factor, lr_max=config.lr)
        except Stagnation:
            flags.append("stagnation")
            break
        h = state.F_history
        if len(h) > w and abs(h[-w - 1] - h[-1]) < config.tol * h[-1]:
            break
    else:
        flags.append("max-iters")
    return state, flags


@dataclass
class MinimizeResult:
    S_estimate: float
    field: Field2D
    iters: int
    flags: list
    state: FlowState = field(repr=False)
    domain_estimate: float | None = None

    @property
    def domain_shift(self) -> float | None:
        if self.domain_estimate is None:
            return None
        return abs(self.domain_estimate - self.S_estimate) / self.S_estimate

    def report(self) -> dict:
        return {"params": self.field.wp.to_json(), "S_estimate": self.S_estimate,
                "iters": self.iters, "flags": list(self.flags),
                "grid": {"n_nodes": len(self.field.rho_grid), "R": float(self.field.rho_grid[-1]),
                         "T": float(self.field.t_grid[-1])},
                "domain_estimate": self.domain_estimate, "domain_shift": self.domain_shift}


def _transfer(field_: Field2D, rho: np.ndarray, t: np.ndarray) -> np.ndarray:
    interp = RegularGridInterpolator((field_.rho_grid, field_.t_grid), field_.values,
                                     bounds_error=False, fill_value=0.0)
    Rg, Tg = np.meshgrid(rho, t, indexing="ij")
    return interp(np.stack([Rg, Tg], axis=-1)).ravel()


def minimize_constant(wp: WeightPair, config: MinimizeConfig = MinimizeConfig(), u0=None) -> MinimizeResult:
    """Estimate the sharp constant by running the flow to stationarity.

    With ``domain_check`` the box is doubled at the end and the flow restarted
    from the transferred field; a shift above ``domain_tol`` raises a flag.
    """
    cls = classify(wp)
    if not cls.strict_valid:
        raise DomainError(f"{wp.to_json()} is not strictly admissible")
    rho, t = config.grids()
    P = GalerkinProblem(wp, rho, t)
    state = initial_state(P, u0, config.lr, config.bump_center)
    state, flags = run_flow(state, config)
    res = MinimizeResult(state.F, state.field, state.step, flags, state)
    if config.domain_check:
        big = replace(config, R=2 * config.R, T=2 * config.T, domain_check=False)
        rho2, t2 = big.grids()
        P2 = GalerkinProblem(wp, rho2, t2)
        s2, _ = run_flow(initial_state(P2, _transfer(state.field, rho2, t2), config.lr), big)
        res.domain_estimate = s2.F
        if res.domain_shift > config.domain_tol:
            res.flags.append("domain-truncation")
    return res
