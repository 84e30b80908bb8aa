"""Channel grids, discrete fields, regions, and the basic operators on them.

The domain is a channel [0, Lx) x [0, Ly], periodic in x1, with the solid
wall at x2 = 0 and the top at x2 = Ly.  Derivatives in x1 are
Fourier-spectral; derivatives in x2 are second-order finite differences on
a (possibly nonuniform) grid, one-sided at the wall and the top.
Quadrature is uniform-in-x1 times trapezoidal-in-x2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "Region",
    "make_channel_grid",
    "strength_for_min_spacing",
    "grids_compatible",
    "layer_region",
    "lp_norm",
    "integrate",
    "x_derivative",
    "y_derivative",
    "gradient",
    "curl2d",
    "divergence2d",
]


def _locked(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    """Tensor-product channel grid with per-node quadrature weights."""

    nx: int
    ny: int
    period: float
    height: float
    clustering: str
    strength: float
    x: np.ndarray
    y: np.ndarray
    weights_y: np.ndarray
    quad_weights: np.ndarray

    def __post_init__(self):
        if self.y[0] != 0.0:
            raise ValueError("y grid must start exactly at the wall x2 = 0")
        if not np.all(np.diff(self.y) > 0.0):
            raise ValueError("y coordinates must be strictly increasing")
        total = float(self.quad_weights.sum())
        target = self.period * self.height
        if abs(total - target) > 1e-12 * target:
            raise ValueError(
                f"quadrature weights sum to {total!r}, expected {target!r}"
            )

    @property
    def dx(self) -> float:
        return self.period / self.nx

    @property
    def dy_min(self) -> float:
        return float(np.min(np.diff(self.y)))

    @property
    def shape(self):
        return (self.nx, self.ny)

    def wavenumbers(self) -> np.ndarray:
        """rfft wavenumbers 2*pi*m/Lx, m = 0..nx//2."""
        return 2.0 * np.pi / self.period * np.arange(self.nx // 2 + 1)


def _tanh_points(ny: int, height: float, strength: float) -> np.ndarray:
    t = np.linspace(0.0, 1.0, ny)
    y = height * (1.0 - np.tanh(strength * (1.0 - t)) / np.tanh(strength))
    y[0] = 0.0
    y[-1] = height
    return y


def make_channel_grid(nx, ny, period, height, clustering="uniform", strength=2.0):
    """Build a channel grid.

    Parameters
    ----------
    nx, ny : int
        Node counts; nx must be even (Fourier in x1), ny >= 3.
    period, height : float
        Domain extents Lx, Ly.
    clustering : {"uniform", "tanh"}
        Wall-normal node placement.  "tanh" clusters nodes toward the wall,
        y = Ly * (1 - tanh(s*(1 - t))/tanh(s)) for t uniform on [0, 1].
    strength : float
        Clustering strength s (> 0), ignored for uniform grids.
    """
    if nx < 4 or nx % 2 != 0:
        raise ValueError("nx must be an even integer >= 4")
    if ny < 3:
        raise ValueError("ny must be >= 3")
    if not (period > 0.0 and height > 0.0):
        raise ValueError("period and height must be positive")
    if clustering == "uniform":
        y = np.linspace(0.0, height, ny)
        strength = 0.0
    elif clustering == "tanh":
        if not strength > 0.0:
            raise ValueError("tanh clustering requires strength > 0")
        y = _tanh_points(ny, height, strength)
    else:
        raise ValueError(f"unknown clustering {clustering!r}")

    dx = period / nx
    x = dx * np.arange(nx)
    dy = np.diff(y)
    wy = np.empty(ny)
    wy[0] = 0.5 * dy[0]
    wy[-1] = 0.5 * dy[-1]
    wy[1:-1] = 0.5 * (dy[:-1] + dy[1:])
    quad = dx * np.broadcast_to(wy, (nx, ny))
    return Grid(
        nx=nx,
        ny=ny,
        period=float(period),
        height=float(height),
        clustering=clustering,
        strength=float(strength),
        x=_locked(x),
        y=_locked(y),
        weights_y=_locked(wy),
        quad_weights=_locked(quad),
    )


def strength_for_min_spacing(ny, height, target):
    """Tanh strength whose first wall-normal spacing is `target`.

    Solves y_1(s) = target by bisection; used to match a grid's near-wall
    resolution to a known layer thickness.
    """
    from scipy.optimize import brentq

    if not 0.0 < target < height / (ny - 1):
        raise ValueError("target spacing must be below the uniform spacing")

    def first_gap(s):
        return _tanh_points(ny, height, s)[1] - target

    return float(brentq(first_gap, 1e-8, 60.0, xtol=1e-12, rtol=1e-14))


def grids_compatible(a: "Grid", b: "Grid") -> bool:
    """Same discretization, not necessarily the same object (e.g. one of
    the two was rebuilt from a manifest)."""
    return a is b or (
        a.shape == b.shape
        and a.period == b.period
        and a.height == b.height
        and np.array_equal(a.y, b.y)
    )


@dataclass(frozen=True)
class ScalarField:
    """Scalar samples on a grid, immutable once constructed."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", _locked(v))


@dataclass(frozen=True)
class VectorField:
    """Velocity-like pair of scalar components on a shared grid."""

    grid: Grid
    comp1: np.ndarray
    comp2: np.ndarray

    def __post_init__(self):
        for name in ("comp1", "comp2"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != self.grid.shape:
                raise ValueError(f"{name} shape {v.shape} != grid shape {self.grid.shape}")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, _locked(v))


@dataclass(frozen=True)
class Region:
    """Boolean node mask over a grid."""

    grid: Grid
    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask)
        if m.dtype != np.bool_ or m.shape != self.grid.shape:
            raise ValueError("mask must be boolean with the grid's shape")
        m = np.ascontiguousarray(m)
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @property
    def node_count(self) -> int:
        return int(self.mask.sum())

    @property
    def is_empty(self) -> bool:
        return not self.mask.any()


def layer_region(grid: Grid, h: float) -> Region:
    """Near-wall strip 0 < x2 <= h (wall nodes themselves excluded)."""
    if h < 0.0:
        raise ValueError("layer height must be >= 0")
    row = (grid.y > 0.0) & (grid.y <= h)
    return Region(grid, np.broadcast_to(row, grid.shape).copy())


def lp_norm(field: ScalarField, p, region: Region | None = None) -> float:
    """L^p norm over a region (whole domain if region is None).

    Finite p uses the grid quadrature weights; p = inf is the nodewise max
    of |values| over the region.  An empty region has norm 0.
    """
    if region is not None and region.grid is not field.grid:
        raise ValueError("region and field live on different grids")
    if np.isinf(p):
        if p < 0:
            raise ValueError("p must be >= 1")
        v = np.abs(field.values)
        if region is not None:
            v = v[region.mask]
        return float(v.max()) if v.size else 0.0
    p = float(p)
    if p < 1.0:
        raise ValueError("p must be >= 1")
    v = np.abs(field.values)
    w = field.grid.quad_weights
    if region is not None:
        v = v[region.mask]
        w = w[region.mask]
        if v.size == 0:
            return 0.0
    return float(np.sum(w * v**p) ** (1.0 / p))


def integrate(grid: Grid, values: np.ndarray, region: Region | None = None) -> float:
    """Quadrature of a nodal sample array, optionally over a region."""
    w = grid.quad_weights
    if region is not None:
        return float(np.sum(w[region.mask] * values[region.mask]))
    return float(np.sum(w * values))


def x_derivative(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Spectral d/dx1 along axis 0 (Nyquist mode dropped)."""
    vhat = np.fft.rfft(values, axis=0)
    k = grid.wavenumbers()
    if grid.nx % 2 == 0:
        k = k.copy()
        k[-1] = 0.0
    shape = (len(k),) + (1,) * (values.ndim - 1)
    vhat *= 1j * k.reshape(shape)
    return np.fft.irfft(vhat, n=grid.nx, axis=0)


def _d1_stencils(y: np.ndarray):
    """Interior + one-sided boundary coefficients for d/dy, 2nd order."""
    h1 = y[1:-1] - y[:-2]
    h2 = y[2:] - y[1:-1]
    lo = -h2 / (h1 * (h1 + h2))
    di = (h2 - h1) / (h1 * h2)
    up = h1 / (h2 * (h1 + h2))
    a, b = y[1] - y[0], y[2] - y[1]
    bottom = (
        -(2 * a + b) / (a * (a + b)),
        (a + b) / (a * b),
        -a / (b * (a + b)),
    )
    c, d = y[-1] - y[-2], y[-2] - y[-3]
    top = (
        (2 * c + d) / (c * (c + d)),
        -(c + d) / (c * d),
        c / (d * (c + d)),
    )
    return lo, di, up, bottom, top


def _d2_interior(y: np.ndarray):
    """Interior three-point coefficients for d2/dy2 on a nonuniform grid."""
    h1 = y[1:-1] - y[:-2]
    h2 = y[2:] - y[1:-1]
    lo = 2.0 / (h1 * (h1 + h2))
    di = -2.0 / (h1 * h2)
    up = 2.0 / (h2 * (h1 + h2))
    return lo, di, up


def y_derivative(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Finite-difference d/dx2 along axis 1 (works on real or complex data)."""
    lo, di, up, bottom, top = _d1_stencils(grid.y)
    out = np.empty_like(values)
    out[:, 1:-1] = lo * values[:, :-2] + di * values[:, 1:-1] + up * values[:, 2:]
    out[:, 0] = bottom[0] * values[:, 0] + bottom[1] * values[:, 1] + bottom[2] * values[:, 2]
    out[:, -1] = top[0] * values[:, -1] + top[1] * values[:, -2] + top[2] * values[:, -3]
    return out


def gradient(grid: Grid, values: np.ndarray):
    """(d/dx1, d/dx2) of a nodal sample array."""
    return x_derivative(grid, values), y_derivative(grid, values)


def curl2d(vel: VectorField) -> ScalarField:
    """Scalar vorticity d1(comp2) - d2(comp1)."""
    g = vel.grid
    return ScalarField(g, x_derivative(g, vel.comp2) - y_derivative(g, vel.comp1))


def divergence2d(vel: VectorField) -> ScalarField:
    """Discrete divergence d1(comp1) + d2(comp2)."""
    g = vel.grid
    return ScalarField(g, x_derivative(g, vel.comp1) + y_derivative(g, vel.comp2))
