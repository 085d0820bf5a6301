"""Uniformly convex Hamiltonians with derivatives and the constants the estimates consume."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..errors import ConfigurationError


def _points(mom, dim):
    arr = np.asarray(mom, dtype=float)
    if dim == 1 and (arr.ndim == 0 or arr.shape[-1] != 1):
        arr = arr[..., None]
    return arr


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """A Hamiltonian on ``R^dim`` together with its derivatives.

    All callables are vectorized over leading axes: ``eval`` maps ``(..., dim)`` to
    ``(...)``, ``grad`` to ``(..., dim)`` and ``hess`` to ``(..., dim, dim)``.
    Instances hash by identity so they can key caches.

    ``conjugate`` is an optional closed form of the Legendre transform. ``grad_sup`` and
    ``hess_sup`` give ``sup_{|p| <= r} |grad H|`` and ``sup_{|p| <= r} ||D^2 H||`` in
    closed form; when absent they are estimated by sampling.
    """

    name: str
    dim: int
    eval: Callable
    grad: Callable
    hess: Callable
    alpha: float
    h0: float
    d2h0_norm: float
    m0: float
    conjugate: Optional[Callable] = None
    grad_sup: Optional[Callable] = None
    hess_sup: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    def __call__(self, mom):
        return self.eval(_points(mom, self.dim))

    def sup_grad(self, radius: float) -> float:
        if self.grad_sup is not None:
            return float(self.grad_sup(radius))
        return float(np.max(np.linalg.norm(self.grad(_ball_samples(self.dim, radius)), axis=-1)))

    def sup_hess(self, radius: float) -> float:
        if self.hess_sup is not None:
            return float(self.hess_sup(radius))
        mats = self.hess(_ball_samples(self.dim, radius))
        return float(np.max(np.linalg.norm(mats, ord=2, axis=(-2, -1))))

    def check_assumptions(self, radius: float = 3.0, samples: int = 2000, seed: int = 0) -> dict:
        """Sample uniform convexity, the critical point at 0 and the Hessian growth bound."""
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-radius, radius, size=(samples, self.dim))
        eigs = np.linalg.eigvalsh(self.hess(pts))
        grad0 = np.linalg.norm(self.grad(np.zeros(self.dim)))
        m0 = min(self.m0, radius)
        near = _ball_samples(self.dim, m0)
        growth = float(np.max(np.linalg.norm(self.hess(near), ord=2, axis=(-2, -1))))
        return {
            "min_eigenvalue": float(eigs.min()),
            "convex_ok": bool(eigs.min() >= self.alpha * (1 - 1e-12)),
            "grad_at_zero": float(grad0),
            "critical_ok": bool(grad0 <= 1e-12),
            "hess_growth": growth,
            "growth_ok": bool(growth <= 2 * self.d2h0_norm * (1 + 1e-12)),
        }


def _ball_samples(dim: int, radius: float, per_axis: int = 201) -> np.ndarray:
    axes = [np.linspace(-radius, radius, per_axis if dim == 1 else 41)] * dim
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    return pts[np.linalg.norm(pts, axis=-1) <= radius * (1 + 1e-12)]


def quadratic(dim: int = 1, scale: float = 1.0, offset: float = 0.0) -> HamiltonianSpec:
    """``scale |p|^2 / 2 + offset``; its conjugate is ``|q|^2 / (2 scale) - offset``."""
    if scale <= 0:
        raise ConfigurationError(f"quadratic Hamiltonian needs scale > 0, got {scale}")
    eye = np.eye(dim)
    return HamiltonianSpec(
        name="quadratic",
        dim=dim,
        eval=lambda mom: 0.5 * scale * np.sum(mom * mom, axis=-1) + offset,
        grad=lambda mom: scale * np.asarray(mom, dtype=float),
        hess=lambda mom: np.broadcast_to(scale * eye, np.shape(mom)[:-1] + (dim, dim)).copy(),
        alpha=scale,
        h0=offset,
        d2h0_norm=scale,
        m0=math.inf,
        conjugate=lambda slope: np.sum(slope * slope, axis=-1) / (2 * scale) - offset,
        grad_sup=lambda radius: scale * radius,
        hess_sup=lambda radius: scale,
        params={"scale": scale, "offset": offset},
    )


def quartic(dim: int = 1, offset: float = 0.0) -> HamiltonianSpec:
    """``|p|^2/2 + |p|^4/4 + offset``.

    The Hessian is ``(1 + |p|^2) I + 2 p p^T`` with norm ``1 + 3|p|^2``, which stays below
    twice its value at the origin for ``|p| <= 1/sqrt(3)``.
    """
    eye = np.eye(dim)

    def hess(mom):
        mom = np.asarray(mom, dtype=float)
        sq = np.sum(mom * mom, axis=-1)[..., None, None]
        return (1 + sq) * eye + 2 * mom[..., :, None] * mom[..., None, :]

    return HamiltonianSpec(
        name="quartic",
        dim=dim,
        eval=lambda mom: (lambda sq: 0.5 * sq + 0.25 * sq * sq + offset)(np.sum(mom * mom, axis=-1)),
        grad=lambda mom: (1 + np.sum(mom * mom, axis=-1))[..., None] * np.asarray(mom, dtype=float),
        hess=hess,
        alpha=1.0,
        h0=offset,
        d2h0_norm=1.0,
        m0=1 / math.sqrt(3),
        grad_sup=lambda radius: radius + radius**3,
        hess_sup=lambda radius: 1 + 3 * radius * radius,
        params={"offset": offset},
    )


def cosh_separable(dim: int = 1, offset: float = 0.0) -> HamiltonianSpec:
    """``sum_i (cosh p_i - 1) + offset`` with the closed-form conjugate
    ``sum_i (q_i asinh q_i - sqrt(1 + q_i^2) + 1) - offset``.

    ``sinh(sqrt(s))^2`` is convex in ``s`` and vanishes at 0, so the gradient norm on a
    ball peaks on a coordinate axis, giving ``sinh(r)``.
    """

    def hess(mom):
        mom = np.asarray(mom, dtype=float)
        out = np.zeros(mom.shape + (dim,))
        idx = np.arange(dim)
        out[..., idx, idx] = np.cosh(mom)
        return out

    def conj(slope):
        slope = np.asarray(slope, dtype=float)
        return np.sum(slope * np.arcsinh(slope) - np.sqrt(1 + slope * slope) + 1, axis=-1) - offset

    return HamiltonianSpec(
        name="cosh",
        dim=dim,
        eval=lambda mom: np.sum(np.cosh(mom) - 1, axis=-1) + offset,
        grad=lambda mom: np.sinh(np.asarray(mom, dtype=float)),
        hess=hess,
        alpha=1.0,
        h0=offset,
        d2h0_norm=1.0,
        m0=math.acosh(2.0),
        conjugate=conj,
        grad_sup=lambda radius: math.sinh(radius),
        hess_sup=lambda radius: math.cosh(radius),
        params={"offset": offset},
    )


PRESETS = {"quadratic": quadratic, "quartic": quartic, "cosh": cosh_separable}


def make_hamiltonian(name: str, dim: int = 1, **params) -> HamiltonianSpec:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown Hamiltonian preset {name!r}; choose from {sorted(PRESETS)}"
        ) from None
    try:
        return factory(dim, **params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for preset {name!r}: {exc}") from None
