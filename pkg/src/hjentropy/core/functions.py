"""Grid-sampled scalar functions and vector fields, with interpolation, differencing and norms."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import ConfigurationError, DomainError
from .grid import Box, Grid

EXTENSIONS = ("clamp", "none")


def _as_points(x, dim: int) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if dim == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
        pts = pts[..., None]
    if pts.shape[-1] != dim:
        raise ConfigurationError(f"expected points with {dim} coordinates, got shape {pts.shape}")
    return pts


def interpolate(grid: Grid, values: np.ndarray, points: np.ndarray, extension: str = "clamp"):
    """Multilinear interpolation of nodal ``values`` (leading axes = grid axes).

    Trailing axes of ``values`` beyond the grid dimension are carried along, which lets
    the same routine serve scalar and vector fields.
    """
    dim = grid.dim
    pts = _as_points(points, dim)
    lo = grid.box.lower
    hi = grid.box.upper
    if extension == "none":
        inside = grid.box.contains(pts)
        if not np.all(inside):
            bad = pts[~inside].reshape(-1, dim)[0]
            raise DomainError(f"point {bad.tolist()} lies outside the sampled box {grid.box}")
    elif extension != "clamp":
        raise ConfigurationError(f"unknown extension {extension!r}; use one of {EXTENSIONS}")
    pts = np.clip(pts, lo, hi)
    h = grid.spacing
    scaled = (pts - lo) / h
    base = np.clip(np.floor(scaled).astype(np.int64), 0, grid.points - 2)
    frac = scaled - base
    out = 0.0
    for corner in itertools.product((0, 1), repeat=dim):
        weight = 1.0
        index = []
        for i, c in enumerate(corner):
            weight = weight * (frac[..., i] if c else 1.0 - frac[..., i])
            index.append(base[..., i] + c)
        picked = values[tuple(index)]
        if picked.ndim > weight.ndim:
            weight = weight.reshape(weight.shape + (1,) * (picked.ndim - weight.ndim))
        out = out + weight * picked
    return out


@dataclass
class SampledFunction:
    """Nodal values of a scalar function on a uniform grid.

    ``extension`` says what happens outside the grid box: ``"clamp"`` evaluates at the
    nearest point of the box (so a function that is constant near the box edges is
    extended by that constant), ``"none"`` raises DomainError.
    """

    grid: Grid
    values: np.ndarray
    extension: str = "clamp"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ConfigurationError(
                f"values have shape {self.values.shape}, grid expects {self.grid.shape}"
            )
        if self.extension not in EXTENSIONS:
            raise ConfigurationError(f"unknown extension {self.extension!r}")

    @classmethod
    def from_callable(cls, grid: Grid, fn: Callable, extension: str = "clamp") -> "SampledFunction":
        """Sample ``fn`` (called on an array of points with coordinates on the last axis)."""
        nodes = grid.nodes()
        return cls(grid, np.asarray(fn(nodes), dtype=float).reshape(grid.shape), extension)

    @property
    def dim(self) -> int:
        return self.grid.dim

    def eval(self, x) -> np.ndarray:
        return interpolate(self.grid, self.values, x, self.extension)

    __call__ = eval

    def resample(self, grid: Grid) -> "SampledFunction":
        if grid == self.grid:
            return SampledFunction(grid, self.values.copy(), self.extension)
        return SampledFunction(grid, self.eval(grid.nodes()), self.extension)

    def reflect(self) -> "SampledFunction":
        """The function ``x -> f(-x)``; needs a grid symmetric about the origin."""
        if any(abs(c) > 1e-12 * self.grid.box.half_width for c in self.grid.box.center):
            raise ConfigurationError("reflection needs a grid box centered at the origin")
        return SampledFunction(self.grid, np.flip(self.values), self.extension)

    def copy(self) -> "SampledFunction":
        return SampledFunction(self.grid, self.values.copy(), self.extension)

    def _other(self, other):
        if isinstance(other, SampledFunction):
            if other.grid != self.grid:
                raise ConfigurationError("arithmetic between functions on different grids")
            return other.values
        return other

    def __add__(self, other):
        return SampledFunction(self.grid, self.values + self._other(other), self.extension)

    __radd__ = __add__

    def __sub__(self, other):
        return SampledFunction(self.grid, self.values - self._other(other), self.extension)

    def __rsub__(self, other):
        return SampledFunction(self.grid, self._other(other) - self.values, self.extension)

    def __neg__(self):
        return SampledFunction(self.grid, -self.values, self.extension)

    def __mul__(self, scalar):
        return SampledFunction(self.grid, self.values * self._other(scalar), self.extension)

    __rmul__ = __mul__


@dataclass
class SampledVectorField:
    """Nodal values of an ``R^dim``-valued field; ``values`` has shape ``grid.shape + (dim,)``."""

    grid: Grid
    values: np.ndarray
    extension: str = "clamp"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = self.grid.shape + (self.grid.dim,)
        if self.values.shape != expected:
            raise ConfigurationError(f"field has shape {self.values.shape}, expected {expected}")

    @property
    def dim(self) -> int:
        return self.grid.dim

    def eval(self, x) -> np.ndarray:
        return interpolate(self.grid, self.values, x, self.extension)

    def component(self, i: int) -> SampledFunction:
        return SampledFunction(self.grid, self.values[..., i], self.extension)

    def magnitude(self) -> np.ndarray:
        return np.linalg.norm(self.values, axis=-1)

    def __sub__(self, other: "SampledVectorField") -> "SampledVectorField":
        if other.grid != self.grid:
            raise ConfigurationError("difference of fields on different grids")
        return SampledVectorField(self.grid, self.values - other.values, self.extension)


def gradient(f: SampledFunction) -> SampledVectorField:
    """Central differences inside, one-sided first-order differences at the box faces."""
    if f.grid.points < 3:
        raise ConfigurationError("differencing needs at least 3 points per axis")
    parts = np.gradient(f.values, f.grid.spacing, edge_order=1)
    if f.dim == 1:
        parts = [parts]
    return SampledVectorField(f.grid, np.stack(parts, axis=-1), f.extension)


def integrate(grid: Grid, nodal: np.ndarray, domain: Box | None = None) -> float:
    weights = grid.quadrature_weights(domain)
    return float(np.sum(weights * nodal))


def norm_l1(f: SampledFunction, domain: Box | None = None) -> float:
    return integrate(f.grid, np.abs(f.values), domain)


def norm_l1_field(field_: SampledVectorField, domain: Box | None = None) -> float:
    """L1 norm of the pointwise Euclidean magnitude."""
    return integrate(field_.grid, field_.magnitude(), domain)


def norm_w11(f: SampledFunction, domain: Box | None = None) -> float:
    """``||f||_L1 + ||grad f||_L1`` with differenced gradients."""
    return norm_l1(f, domain) + norm_l1_field(gradient(f), domain)


def max_slope(f: SampledFunction) -> float:
    """Largest nodal gradient magnitude, used as a Lipschitz estimate."""
    return float(np.max(gradient(f).magnitude()))
