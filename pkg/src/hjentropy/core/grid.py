"""Axis-aligned boxes, uniform tensor grids and nodal quadrature weights."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ConfigurationError, DomainError

_REL_TOL = 1e-12


def unit_ball_volume(dim: int) -> float:
    """Lebesgue measure of the Euclidean unit ball in ``dim`` dimensions.

    Built by the two-step recursion from 2 and pi, so the line gives exactly 2.
    """
    if dim < 1:
        raise ConfigurationError(f"dimension must be positive, got {dim}")
    volume = 2.0 if dim % 2 else math.pi
    for k in range(3 if dim % 2 else 4, dim + 1, 2):
        volume *= 2 * math.pi / k
    return volume


@dataclass(frozen=True)
class Box:
    """The cube ``center + [-half_width, half_width]^dim``."""

    center: tuple
    half_width: float

    def __post_init__(self):
        center = tuple(float(c) for c in np.atleast_1d(self.center))
        object.__setattr__(self, "center", center)
        if not (self.half_width > 0 and math.isfinite(self.half_width)):
            raise ConfigurationError(f"half_width must be positive, got {self.half_width}")
        object.__setattr__(self, "half_width", float(self.half_width))

    @classmethod
    def centered(cls, half_width: float, dim: int) -> "Box":
        return cls((0.0,) * dim, half_width)

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.center) - self.half_width

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.center) + self.half_width

    @property
    def volume(self) -> float:
        return (2.0 * self.half_width) ** self.dim

    @property
    def diameter(self) -> float:
        return 2.0 * self.half_width * math.sqrt(self.dim)

    def contains_box(self, other: "Box") -> bool:
        slack = _REL_TOL * max(1.0, self.half_width)
        return bool(
            np.all(other.lower >= self.lower - slack) and np.all(other.upper <= self.upper + slack)
        )

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of points (last axis = coordinates) lying in the closed box."""
        pts = np.asarray(points, dtype=float)
        slack = _REL_TOL * max(1.0, self.half_width)
        return np.all((pts >= self.lower - slack) & (pts <= self.upper + slack), axis=-1)


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid with ``points`` nodes per axis covering a box, endpoints included."""

    box: Box
    points: int

    def __post_init__(self):
        if int(self.points) != self.points or self.points < 2:
            raise ConfigurationError(f"a grid needs at least 2 points per axis, got {self.points}")
        object.__setattr__(self, "points", int(self.points))

    @classmethod
    def centered(cls, half_width: float, points: int, dim: int = 1) -> "Grid":
        return cls(Box.centered(half_width, dim), points)

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def spacing(self) -> float:
        return 2.0 * self.box.half_width / (self.points - 1)

    @property
    def shape(self) -> tuple:
        return (self.points,) * self.dim

    @property
    def size(self) -> int:
        return self.points**self.dim

    def axis(self, i: int) -> np.ndarray:
        lo = self.box.center[i] - self.box.half_width
        hi = self.box.center[i] + self.box.half_width
        return np.linspace(lo, hi, self.points)

    def axes(self) -> list:
        return [self.axis(i) for i in range(self.dim)]

    def nodes(self) -> np.ndarray:
        """Array of shape ``shape + (dim,)`` with node coordinates."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def node(self, index: Sequence[int]) -> np.ndarray:
        return np.array([self.axis(i)[k] for i, k in enumerate(index)])

    def refined(self, factor: int = 2) -> "Grid":
        """Same box with the spacing divided by ``factor`` (old nodes are kept)."""
        return Grid(self.box, (self.points - 1) * factor + 1)

    def axis_weights(self, i: int, lo: float, hi: float) -> np.ndarray:
        """Length of each node's dual cell along axis ``i`` clipped to ``[lo, hi]``."""
        x = self.axis(i)
        h = self.spacing
        left = np.maximum(np.maximum(x - h / 2, x[0]), lo)
        right = np.minimum(np.minimum(x + h / 2, x[-1]), hi)
        return np.clip(right - left, 0.0, None)

    def quadrature_weights(self, domain: Box | None = None) -> np.ndarray:
        """Tensor-product nodal weights for integrals over ``domain`` (default: the grid box).

        Raises DomainError when the domain sticks out of the grid box.
        """
        domain = self.box if domain is None else domain
        if domain.dim != self.dim:
            raise ConfigurationError(f"domain has dimension {domain.dim}, grid has {self.dim}")
        if not self.box.contains_box(domain):
            raise DomainError(
                f"integration box {domain} is not inside the grid box {self.box}"
            )
        weights = None
        for i in range(self.dim):
            w = self.axis_weights(i, domain.lower[i], domain.upper[i])
            weights = w if weights is None else np.multiply.outer(weights, w)
        return weights
