"""Named initial data and seeded random generators for the three function classes.

Generators build members that lie in their class by construction. Each returned
function is also re-measured by the caller's tests, since grid sampling can push
discrete estimates slightly past the analytic bounds.
"""

from __future__ import annotations

import numpy as np

from . import regularity
from .core import ClassParams, Grid, SampledFunction, SampledVectorField
from .errors import ConfigurationError


def _radius_inf(pts):
    return np.max(np.abs(pts), axis=-1)


def zero(points):
    return np.zeros(np.shape(points)[:-1])


def hat(points):
    """``max(0, 1 - |x|)`` with the Euclidean norm."""
    return np.maximum(0.0, 1.0 - np.linalg.norm(points, axis=-1))


def smooth_bump(points):
    """``(1 - |x|^2)^2`` inside the unit ball; Lipschitz constant ``8 / (3 sqrt 3)``."""
    r2 = np.sum(np.asarray(points) ** 2, axis=-1)
    return np.where(r2 < 1.0, (1.0 - r2) ** 2, 0.0)


PRESETS = {"zero": zero, "hat": hat, "bump": smooth_bump}


def preset(name: str, grid: Grid) -> SampledFunction:
    try:
        fn = PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown initial data preset {name!r}; choose from {sorted(PRESETS)}"
        ) from None
    return SampledFunction.from_callable(grid, fn)


def random_lipschitz_member(params: ClassParams, grid: Grid, rng: np.random.Generator,
                            pieces: int = 6) -> SampledFunction:
    """A random member of the Lipschitz class vanishing outside the support cube.

    A max of mins of affine functions with slopes of length at most ``M`` is clipped to
    ``[-M d, M d]`` with ``d`` the sup-norm distance to the outside of the cube. Both
    operations preserve the Lipschitz bound (``d`` is 1-Lipschitz for the sup norm,
    hence for the Euclidean one), and the clip forces zero outside.
    """
    dim = params.dim
    lip = params.lipschitz
    pts = grid.nodes()
    groups = []
    for _ in range(pieces):
        slopes = rng.normal(size=(3, dim))
        slopes *= (lip * rng.uniform(0.3, 1.0, size=(3, 1))
                   / np.linalg.norm(slopes, axis=1, keepdims=True))
        offsets = rng.uniform(-0.5, 0.5, size=3) * lip * params.support
        groups.append(np.min(pts @ slopes.T + offsets, axis=-1))
    raw = np.max(np.stack(groups), axis=0)
    dist = np.maximum(params.support - _radius_inf(pts), 0.0)
    return SampledFunction(grid, np.clip(raw, -lip * dist, lip * dist))


def random_monotone_field(params: ClassParams, grid: Grid, rng: np.random.Generator,
                          ridges: int = 5) -> SampledVectorField:
    """Gradient of a random concave function, scaled into the value box and the variation
    budget.

    The potential is ``-sum a_k sqrt(<w_k, x> - s_k)^2 + e_k^2) - c |x|^2 / 2``, which is
    concave, so its gradient is monotone decreasing. After sampling, the field is scaled by
    a positive factor so that ``max |F_i| < M`` and the measured total variation stays
    below ``C``.
    """
    dim = params.dim
    pts = grid.nodes()
    field = -rng.uniform(0.0, 1.0) * pts
    for _ in range(ridges):
        direction = rng.normal(size=dim)
        direction /= np.linalg.norm(direction)
        shift = rng.uniform(-params.support, params.support)
        width = rng.uniform(0.05, 0.5) * params.support
        weight = rng.uniform(0.2, 1.0)
        s = pts @ direction - shift
        field -= weight * (s / np.sqrt(s * s + width * width))[..., None] * direction
    sampled = SampledVectorField(grid, field)
    tv = regularity.total_variation(sampled)
    peak = float(np.max(np.abs(field)))
    scale = 1.0
    if tv > 0:
        scale = min(scale, 0.9 * params.variation / tv)
    if peak > 0:
        scale = min(scale, 0.99 * params.lipschitz / peak)
    scale *= rng.uniform(0.5, 1.0)
    return SampledVectorField(grid, field * scale)


def random_semiconcave_member(params: ClassParams, grid: Grid, rng: np.random.Generator,
                              bumps: int = 4) -> SampledFunction:
    """A random function supported in the cube, with slope at most ``M`` and
    semiconcavity constant at most ``K``.

    It superposes smooth bumps ``a (r^2 - |x - c|^2)_+^2`` and truncated concave bowls
    ``-a (r^2 - |x - c|^2)_+``, all supported inside the cube. The sum is then scaled down
    until the measured Lipschitz and semiconcavity constants fit with a 2% margin. The
    bowls alone are semiconvex but not semiconcave along their rim, so scaling is what
    makes the result admissible.
    """
    dim = params.dim
    pts = grid.nodes()
    total = np.zeros(grid.shape)
    for k in range(bumps):
        radius = rng.uniform(0.15, 0.5) * params.support
        center = rng.uniform(-params.support + radius, params.support - radius, size=dim)
        r2 = radius**2 - np.sum((pts - center) ** 2, axis=-1)
        amp = rng.uniform(0.2, 1.0)
        if k % 2 == 0:
            total += amp * np.maximum(r2, 0.0) ** 2 / radius**4
        else:
            total -= amp * np.maximum(r2, 0.0) / radius**2
    f = SampledFunction(grid, total)
    lip = regularity.lipschitz_estimate(f)
    sc = max(regularity.sc_constant(f), 0.0)
    scale = 1.0
    if lip > 0:
        scale = min(scale, 0.98 * params.lipschitz / lip)
    if sc > 0:
        scale = min(scale, 0.98 * params.semiconcavity / sc)
    return f * (scale * rng.uniform(0.5, 1.0))
