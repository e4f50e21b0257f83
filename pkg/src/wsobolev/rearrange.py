"""Discrete symmetric decreasing rearrangement in coordinate blocks and the
Fourier rearrangement w = F^{-1}_xi[(F_x(u*_x))*_z].

Lattice sites of a block are ranked by their distance to the centre, ties
broken by lexicographic index; in one dimension this is the pendulum order
0, -h, +h, -2h, +2h, ...  The sorted moduli are laid out along this ranking.
With ``ties="average"`` values on each equal-distance shell are averaged
afterwards, which makes the output exactly symmetric at the price of strict
equimeasurability.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .lattice import LatticeField, lattice_lp, lattice_rayleigh_G
from .params import GrushinParams


class Block(enum.Enum):
    X = "x"
    Z = "z"


def _block_axes(dims, block: Block) -> list[int]:
    n, m = dims
    return list(range(n)) if block is Block.X else list(range(n, n + m))


def block_ranking(res: int, ndim: int) -> tuple[np.ndarray, np.ndarray]:
    """Flat site indices of a res^ndim block in rank order, and their squared distances."""
    c = (res - 1) // 2
    offs = np.meshgrid(*([np.arange(res) - c] * ndim), indexing="ij")
    d2 = sum(o.astype(np.int64) ** 2 for o in offs).ravel()
    order = np.argsort(d2, kind="stable")
    return order, d2[order]


def rearrange_array(values: np.ndarray, axes: list[int], ties: str = "lex") -> np.ndarray:
    """Rearrange |values| over ``axes`` (each of equal odd length) slice by slice."""
    if ties not in ("lex", "average"):
        raise DomainError(f"unknown tie mode {ties!r}")
    v = np.abs(np.asarray(values))
    rest = [a for a in range(v.ndim) if a not in axes]
    moved = np.transpose(v, rest + axes)
    res = v.shape[axes[0]]
    flat = moved.reshape(moved.shape[:len(rest)] + (-1,))
    order, d2 = block_ranking(res, len(axes))
    ranked = -np.sort(-flat, axis=-1)
    if ties == "average":
        bounds = np.flatnonzero(np.diff(d2)) + 1
        starts = np.concatenate([[0], bounds])
        sums = np.add.reduceat(ranked, starts, axis=-1)
        counts = np.diff(np.concatenate([starts, [len(d2)]]))
        ranked = np.repeat(sums / counts, counts, axis=-1)
    out = np.empty_like(flat)
    out[..., order] = ranked
    out = out.reshape(moved.shape)
    inv = np.argsort(rest + axes)
    return np.transpose(out, inv)


def schwarz_block(f: LatticeField, block: Block, ties: str = "lex") -> LatticeField:
    """Symmetric decreasing rearrangement of |f| in the x or z block."""
    block = Block(block)
    return f.with_values(rearrange_array(f.values, _block_axes(f.dims, block), ties))


def is_block_decreasing(f: LatticeField, block: Block) -> bool:
    """Every slice is nonincreasing along the rank order of its block."""
    axes = _block_axes(f.dims, Block(block))
    rest = [a for a in range(f.values.ndim) if a not in axes]
    moved = np.transpose(f.values, rest + axes)
    flat = moved.reshape(moved.shape[:len(rest)] + (-1,))
    order, _ = block_ranking(f.res, len(axes))
    return bool(np.all(np.diff(flat[..., order], axis=-1) <= 0))


def shell_spread(f: LatticeField, block: Block) -> float:
    """Largest value range over an equal-distance shell of the block, across slices."""
    axes = _block_axes(f.dims, Block(block))
    rest = [a for a in range(f.values.ndim) if a not in axes]
    moved = np.transpose(f.values, rest + axes)
    flat = moved.reshape(moved.shape[:len(rest)] + (-1,))
    order, d2 = block_ranking(f.res, len(axes))
    ranked = flat[..., order]
    worst = 0.0
    for lo, hi in _shells(d2):
        seg = ranked[..., lo:hi]
        worst = max(worst, float(np.max(np.max(seg, -1) - np.min(seg, -1))))
    return worst


def _shells(d2: np.ndarray):
    bounds = np.flatnonzero(np.diff(d2)) + 1
    starts = np.concatenate([[0], bounds])
    ends = np.concatenate([bounds, [len(d2)]])
    return list(zip(starts, ends))


def weighted_moment_check(f: LatticeField, tau: float) -> tuple[float, float]:
    """(sum |z|^(2 tau) f, sum |z|^(2 tau) f*_z) times the cell volume; f >= 0."""
    if np.any(f.values < 0):
        raise DomainError("weighted moment check needs a nonnegative field")
    w = f.z_norm() ** (2.0 * tau)
    vol = f.h ** sum(f.dims)
    before = float(np.sum(w * f.values) * vol)
    after = float(np.sum(w * schwarz_block(f, Block.Z).values) * vol)
    return before, after


def exponent_is_integer(gp: GrushinParams, tol: float = 1e-12) -> bool:
    s = gp.p_star
    return abs(s - round(s)) <= tol


@dataclass
class FourierRearrangement:
    w: LatticeField
    ux: LatticeField
    imag_residue: float
    flags: list


def fourier_rearrange_full(u: LatticeField, gp: GrushinParams, ties: str = "lex",
                           rearrange_z: bool = True) -> FourierRearrangement:
    """u -> u*_x -> DFT in x -> rearrange |.| in z -> inverse DFT in x.

    The DFT is taken with the lattice centre as origin, so the x-symmetric
    data produce Fourier coefficients that are even in xi and the result is
    real.  ``imag_residue`` is max|Im w| / max|w| before the imaginary part is
    dropped.
    """
    if u.dims != (gp.n, gp.m):
        raise DomainError("lattice dims do not match (n, m)")
    if np.iscomplexobj(u.values) and np.any(u.values.imag != 0):
        raise DomainError("u must be real-valued")
    flags = []
    if not exponent_is_integer(gp):
        warnings.warn(f"2Q/(Q-2) = {gp.p_star!r} is not an integer", stacklevel=2)
        flags.append("non-integer-exponent")
    xa = _block_axes(u.dims, Block.X)
    ux = schwarz_block(u, Block.X, ties)
    vhat = np.fft.fftn(np.fft.ifftshift(ux.values, axes=xa), axes=xa)
    if rearrange_z:
        what = rearrange_array(np.abs(vhat), _block_axes(u.dims, Block.Z), ties)
    else:
        what = vhat
    w = np.fft.fftshift(np.fft.ifftn(what, axes=xa), axes=xa)
    peak = float(np.max(np.abs(w)))
    residue = float(np.max(np.abs(w.imag)) / peak) if peak > 0 else 0.0
    return FourierRearrangement(u.with_values(w.real.copy()), ux, residue, flags)


def fourier_rearrange(u: LatticeField, gp: GrushinParams, ties: str = "lex") -> LatticeField:
    return fourier_rearrange_full(u, gp, ties).w


def convolution_positivity_check(u: LatticeField, s: int, gp: GrushinParams | None = None,
                                 rearrange_z: bool = True) -> tuple[float, float]:
    """(sum |u*_x|^s, sum |w|^s) times the cell volume."""
    if int(s) != s or s < 2:
        raise DomainError("s must be an integer >= 2")
    gp = gp or GrushinParams(u.dims[0], u.dims[1], 1)
    fr = fourier_rearrange_full(u, gp, rearrange_z=rearrange_z)
    return lattice_lp(fr.ux, s) ** s, lattice_lp(fr.w, s) ** s


def product_rearrangement_check(fs, ties: str = "lex") -> tuple[float, float]:
    """(sum prod f_j, sum prod f_j*) for nonnegative arrays on a common centred lattice."""
    fs = [np.asarray(f, dtype=float) for f in fs]
    if any(np.any(f < 0) for f in fs):
        raise DomainError("functions must be nonnegative")
    axes = list(range(fs[0].ndim))
    lhs = float(np.sum(np.prod(fs, axis=0)))
    rhs = float(np.sum(np.prod([rearrange_array(f, axes, ties) for f in fs], axis=0)))
    return lhs, rhs


def dirichlet_sum(values: np.ndarray, h: float) -> float:
    """Sum of squared forward differences along every axis, zero outside the box."""
    total = 0.0
    for ax in range(values.ndim):
        pad = [(0, 0)] * values.ndim
        pad[ax] = (1, 1)
        total += float(np.sum(np.diff(np.pad(values, pad), axis=ax) ** 2))
    return total * h ** (values.ndim - 2)


@dataclass
class ChainResult:
    G_u: float
    G_ux: float
    G_w: float
    imag_residue: float
    flags: list

    @property
    def violation(self) -> float:
        """Largest breach of G[w] <= G[u*_x] <= G[u], relative to G[u]."""
        return max(0.0, self.G_w - self.G_ux, self.G_ux - self.G_u) / abs(self.G_u)

    def to_json(self) -> dict:
        return {"G_u": self.G_u, "G_ux": self.G_ux, "G_w": self.G_w,
                "imag_residue": self.imag_residue, "violation": self.violation,
                "flags": list(self.flags)}


def rearrangement_chain(u: LatticeField, gp: GrushinParams, scheme: str = "forward") -> ChainResult:
    fr = fourier_rearrange_full(u, gp)
    return ChainResult(lattice_rayleigh_G(u, gp, scheme), lattice_rayleigh_G(fr.ux, gp, scheme),
                       lattice_rayleigh_G(fr.w, gp, scheme), fr.imag_residue, fr.flags)


def random_bump(rng: np.random.Generator, dims, extent: float, res: int, count: int = 3) -> LatticeField:
    """Lattice samples of :func:`random_bump_function`."""
    return LatticeField.from_function(random_bump_function(rng, dims, extent, count), dims, extent, res)


def random_bump_function(rng: np.random.Generator, dims, extent: float, count: int = 3):
    """Sum of ``count`` Gaussians with random signed amplitudes, centres and widths."""
    d = sum(dims)
    amps = rng.uniform(-1.0, 1.0, count)
    amps[0] = 1.0 + rng.uniform(0.0, 1.0)
    centres = rng.uniform(-0.35 * extent, 0.35 * extent, size=(count, d))
    widths = rng.uniform(0.08 * extent, 0.25 * extent, count)

    def f(x, z):
        pts = np.concatenate([x, z], axis=-1)
        out = np.zeros(pts.shape[:-1])
        for a, c, s in zip(amps, centres, widths):
            out += a * np.exp(-np.sum((pts - c) ** 2, axis=-1) / (2 * s * s))
        return out

    return f
