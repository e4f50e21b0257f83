"""Fields on a centred (n+m)-dimensional lattice and the discrete Grushin quotient."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateFieldError, DomainError
from .params import GrushinParams


@dataclass
class LatticeField:
    """Values on the lattice [-L, L]^(n+m) with ``res`` points per axis.

    Axes 0..n-1 carry x, axes n..n+m-1 carry z.
    """

    dims: tuple[int, int]
    extent: float
    res: int
    values: np.ndarray

    def __post_init__(self):
        n, m = self.dims
        if n < 1 or m < 1:
            raise DomainError("both blocks need at least one axis")
        if self.res < 3 or self.res % 2 == 0:
            raise DomainError("res must be odd and at least 3")
        if not self.extent > 0:
            raise DomainError("extent must be positive")
        self.values = np.asarray(self.values)
        if self.values.shape != (self.res,) * (n + m):
            raise DomainError(f"values must have shape {(self.res,) * (n + m)}")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("values must be finite")

    @property
    def h(self) -> float:
        return 2.0 * self.extent / (self.res - 1)

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.extent, self.extent, self.res)

    def coords(self):
        """Open mesh of coordinates (x_1..x_n, z_1..z_m)."""
        return np.meshgrid(*([self.axis] * sum(self.dims)), indexing="ij", sparse=True)

    def z_norm(self) -> np.ndarray:
        n, m = self.dims
        c = self.coords()
        return np.sqrt(sum(ci ** 2 for ci in c[n:]))

    def x_norm(self) -> np.ndarray:
        n, _ = self.dims
        c = self.coords()
        return np.sqrt(sum(ci ** 2 for ci in c[:n]))

    def with_values(self, values) -> "LatticeField":
        return LatticeField(self.dims, self.extent, self.res, values)

    @classmethod
    def from_function(cls, f: Callable, dims, extent: float, res: int) -> "LatticeField":
        """Sample f(x, z) where x has trailing axis n and z trailing axis m."""
        n, m = dims
        ax = np.linspace(-extent, extent, res)
        grids = np.meshgrid(*([ax] * (n + m)), indexing="ij")
        pts = np.stack(grids, axis=-1)
        return cls(tuple(dims), extent, res, np.asarray(f(pts[..., :n], pts[..., n:])))

    def to_csv_rows(self):
        """Header row followed by one row per lattice site (coords..., value)."""
        n, m = self.dims
        header = [f"dims={n},{m}", f"extent={self.extent!r}", f"res={self.res}"]
        grids = np.meshgrid(*([self.axis] * (n + m)), indexing="ij")
        rows = [header]
        flat = [g.ravel() for g in grids] + [self.values.ravel()]
        rows.extend(zip(*(map(float, col) for col in flat)))
        return rows


def forward_diff(v: np.ndarray, axis: int, periodic: bool, h: float) -> np.ndarray:
    """(v[i+1] - v[i])/h, wrapping around or treating the outside as 0."""
    if periodic:
        return (np.roll(v, -1, axis=axis) - v) / h
    pad = [(0, 0)] * v.ndim
    pad[axis] = (0, 1)
    ext = np.pad(v, pad)
    return np.diff(ext, axis=axis) / h


def centered_diff(v: np.ndarray, axis: int, periodic: bool, h: float) -> np.ndarray:
    """(v[i+1] - v[i-1])/(2h) with the same edge conventions as forward_diff."""
    if periodic:
        return (np.roll(v, -1, axis=axis) - np.roll(v, 1, axis=axis)) / (2 * h)
    pad = [(0, 0)] * v.ndim
    pad[axis] = (1, 1)
    ext = np.pad(v, pad)
    n = v.shape[axis]
    return (np.take(ext, np.arange(2, n + 2), axis=axis)
            - np.take(ext, np.arange(0, n), axis=axis)) / (2 * h)


def lattice_energy(f: LatticeField, tau: float, scheme: str = "forward") -> float:
    """Sum of |D_z u|^2 + (tau+1)^2 |z|^(2 tau) |D_x u|^2 times the cell volume.

    x differences are periodic, matching the discrete Fourier transform used
    by the rearrangement pipeline; z differences see zeros outside the box.
    ``scheme`` is "forward" or "centered".
    """
    if scheme == "forward":
        diff = forward_diff
    elif scheme == "centered":
        diff = centered_diff
    else:
        raise DomainError(f"unknown difference scheme {scheme!r}")
    n, m = f.dims
    v = f.values
    h = f.h
    vol = h ** (n + m)
    ez = sum(np.sum(np.abs(diff(v, n + j, False, h)) ** 2) for j in range(m))
    gx = sum(np.abs(diff(v, i, True, h)) ** 2 for i in range(n))
    ex = np.sum((tau + 1.0) ** 2 * f.z_norm() ** (2.0 * tau) * gx)
    return float((ez + ex) * vol)


def lattice_lp(f: LatticeField, p: float) -> float:
    """(sum |u|^p h^(n+m))^(1/p)."""
    vol = f.h ** sum(f.dims)
    return float((np.sum(np.abs(f.values) ** p) * vol) ** (1.0 / p))


def lattice_rayleigh_G(f: LatticeField, gp: GrushinParams, scheme: str = "forward") -> float:
    if f.dims != (gp.n, gp.m):
        raise DomainError("lattice dims do not match (n, m)")
    den = lattice_lp(f, gp.p_star)
    if den == 0:
        raise DegenerateFieldError("field vanishes on the lattice")
    return lattice_energy(f, float(gp.tau), scheme) / den ** 2
