"""Grid estimators for slopes, semiconcavity, total variation and monotonicity,
plus numerical Poincare checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Box,
    Grid,
    SampledFunction,
    SampledVectorField,
    gradient,
    integrate,
    norm_l1,
    norm_l1_field,
)
from .errors import ClassMembershipError, NotSemiconcaveError

_RANDOM_PAIRS = 10_000
_EXHAUSTIVE_LIMIT = 10_000


def _forward_differences(values: np.ndarray, spacing: float):
    return [np.diff(values, axis=i) / spacing for i in range(values.ndim)]


def lipschitz_estimate(f: SampledFunction) -> float:
    """Largest discrete slope: axis difference quotients and central-gradient magnitudes.

    In one dimension this is exactly the Lipschitz constant of the piecewise-linear
    interpolant.
    """
    spacing = f.grid.spacing
    slopes = max(float(np.max(np.abs(d))) if d.size else 0.0 for d in _forward_differences(f.values, spacing))
    if f.dim > 1 and f.grid.points >= 3:
        slopes = max(slopes, float(np.max(gradient(f).magnitude())))
    return slopes


def steepest_nodes(f: SampledFunction, threshold: float, limit: int = 10) -> list:
    """Nodes where some forward difference quotient exceeds ``threshold``."""
    spacing = f.grid.spacing
    hits = set()
    for d in _forward_differences(f.values, spacing):
        for ix in np.argwhere(np.abs(d) > threshold):
            hits.add(tuple(int(i) for i in ix))
    return sorted(hits)[:limit]


def second_differences(f: SampledFunction) -> list:
    """Per-axis arrays of ``f(x + h e_i) + f(x - h e_i) - 2 f(x)`` over interior nodes."""
    v = f.values
    out = []
    for i in range(f.dim):
        fwd = [slice(None)] * f.dim
        mid = [slice(None)] * f.dim
        bwd = [slice(None)] * f.dim
        fwd[i], mid[i], bwd[i] = slice(2, None), slice(1, -1), slice(None, -2)
        out.append(v[tuple(fwd)] + v[tuple(bwd)] - 2 * v[tuple(mid)])
    return out


def sc_constant(f: SampledFunction) -> float:
    """Signed semiconcavity estimate: the largest axis second difference divided by ``h^2``.

    A negative value means the samples are uniformly concave along the grid axes. Only
    axis directions are probed, so this is a surrogate of the full definition.
    """
    spacing = f.grid.spacing
    diffs = second_differences(f)
    if not diffs or diffs[0].size == 0:
        return 0.0
    return float(max(np.max(d) for d in diffs)) / spacing**2


def semiconvexity_constant(f: SampledFunction) -> float:
    """Signed lower curvature estimate: minus the smallest axis second difference over ``h^2``."""
    return sc_constant(-f)


def total_variation(V: SampledVectorField) -> float:
    """Anisotropic discrete total variation ``sum_i sum_x |V(x + h e_i) - V(x)| h^(N-1)``."""
    spacing = V.grid.spacing
    dim = V.dim
    tv = 0.0
    for i in range(dim):
        tv += float(np.sum(np.linalg.norm(np.diff(V.values, axis=i), axis=-1)))
    return tv * spacing ** (dim - 1)


def support_radius(f: SampledFunction, tol: float = 1e-12) -> float:
    """Smallest ``a`` such that ``f`` equals its value at the box corner on every node with
    ``|x|_inf > a``; the grid half-width when no such margin exists."""
    nodes = f.grid.nodes()
    far = np.max(np.abs(nodes - np.asarray(f.grid.box.center)), axis=-1)
    reference = f.values[(0,) * f.dim]
    differs = np.abs(f.values - reference) > tol * max(1.0, float(np.max(np.abs(f.values))))
    if not np.any(differs):
        return 0.0
    return float(np.max(far[differs]))


@dataclass
class RegularityReport:
    lip: float
    sc_constant: float
    tv: float
    support_radius: float
    sc_surrogate: str = "axis second differences"


def estimate_regularity(f: SampledFunction) -> RegularityReport:
    """Slope, semiconcavity, gradient variation and support radius of sampled data."""
    tv = total_variation(gradient(f)) if f.grid.points >= 3 else 0.0
    return RegularityReport(
        lip=lipschitz_estimate(f),
        sc_constant=sc_constant(f),
        tv=tv,
        support_radius=support_radius(f),
    )


def monotone_field(f: SampledFunction, semiconcavity: float, c: float = 2.0) -> SampledVectorField:
    """The field ``grad f(x) - semiconcavity * x``, decreasing in the monotone-operator
    sense when ``f`` is semiconcave with that constant.

    Raises NotSemiconcaveError when the measured constant exceeds
    ``semiconcavity + c * spacing``.
    """
    measured = sc_constant(f)
    if measured > semiconcavity + c * f.grid.spacing:
        raise NotSemiconcaveError(
            f"measured semiconcavity constant {measured:.6g} exceeds {semiconcavity} plus slack"
        )
    g = gradient(f)
    return SampledVectorField(f.grid, g.values - semiconcavity * f.grid.nodes(), f.extension)


@dataclass
class MonotonicityReport:
    max_pairing: float
    max_normalized: float
    certificate: tuple | None
    pairs_checked: int
    exhaustive: bool
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_normalized <= self.tol


def _pairing(values, nodes, a, b):
    dv = values[b] - values[a]
    dx = nodes[b] - nodes[a]
    pair = np.sum(dv * dx, axis=-1)
    norm = np.linalg.norm(dx, axis=-1)
    return pair, pair / np.where(norm > 0, norm, 1.0)


def check_monotone_decreasing(
    V: SampledVectorField, tol: float = 0.0, random_pairs: int = _RANDOM_PAIRS, seed: int = 0
) -> MonotonicityReport:
    """Look for pairs of nodes with ``<V(y) - V(x), y - x> > tol |y - x|``.

    Every pair of adjacent nodes is checked, plus ``random_pairs`` random pairs; the
    search is exhaustive when the grid has at most 10^4 nodes. The certificate is the
    worst pair found, as flat node indices.
    """
    nodes = V.grid.nodes().reshape(-1, V.dim)
    values = V.values.reshape(-1, V.dim)
    idx = np.arange(nodes.shape[0]).reshape(V.grid.shape)
    firsts, seconds = [], []
    for i in range(V.dim):
        a = np.take(idx, np.arange(V.grid.points - 1), axis=i).ravel()
        b = np.take(idx, np.arange(1, V.grid.points), axis=i).ravel()
        firsts.append(a)
        seconds.append(b)
    exhaustive = nodes.shape[0] <= _EXHAUSTIVE_LIMIT
    if not exhaustive and random_pairs:
        rng = np.random.default_rng(seed)
        firsts.append(rng.integers(0, nodes.shape[0], random_pairs))
        seconds.append(rng.integers(0, nodes.shape[0], random_pairs))
    best_pair, best_norm, cert, count = -np.inf, -np.inf, None, 0

    def absorb(a, b):
        nonlocal best_pair, best_norm, cert, count
        pair, normalized = _pairing(values, nodes, a, b)
        count += a.size
        if pair.size:
            best_pair = max(best_pair, float(pair.max()))
            k = int(np.argmax(normalized))
            if normalized[k] > best_norm:
                best_norm = float(normalized[k])
                cert = (int(a[k]), int(b[k]))

    absorb(np.concatenate(firsts), np.concatenate(seconds))
    if exhaustive:
        n = nodes.shape[0]
        rows = max(1, 2_000_000 // max(n, 1))
        for start in range(0, n, rows):
            a = np.repeat(np.arange(start, min(n, start + rows)), n)
            b = np.tile(np.arange(n), min(n, start + rows) - start)
            keep = a < b
            absorb(a[keep], b[keep])
    return MonotonicityReport(
        max_pairing=best_pair if best_pair > -np.inf else 0.0,
        max_normalized=best_norm if best_norm > -np.inf else 0.0,
        certificate=cert,
        pairs_checked=count,
        exhaustive=exhaustive,
        tol=tol,
    )


@dataclass
class PoincareReport:
    zero_trace_lhs: float | None
    zero_trace_rhs: float | None
    mean_lhs: float
    mean_rhs: float
    tol_factor: float

    @property
    def zero_trace_ok(self) -> bool:
        if self.zero_trace_lhs is None:
            return True
        return self.zero_trace_lhs <= self.zero_trace_rhs * self.tol_factor + 1e-15

    @property
    def mean_ok(self) -> bool:
        return self.mean_lhs <= self.mean_rhs * self.tol_factor + 1e-15

    @property
    def passed(self) -> bool:
        return self.zero_trace_ok and self.mean_ok


def _boundary_values(values: np.ndarray) -> np.ndarray:
    parts = []
    for i in range(values.ndim):
        parts.append(np.take(values, [0, values.shape[i] - 1], axis=i).ravel())
    return np.concatenate(parts)


def _restrict(grid: Grid, values: np.ndarray, domain: Box):
    """Nodes of ``grid`` inside ``domain`` as a sub-grid (domain faces must be grid lines)."""
    spacing = grid.spacing
    sl, centers = [], []
    for i in range(grid.dim):
        lo = int(round((domain.lower[i] - grid.box.lower[i]) / spacing))
        hi = int(round((domain.upper[i] - grid.box.lower[i]) / spacing))
        sl.append(slice(lo, hi + 1))
    sub_values = values[tuple(sl)]
    points = sub_values.shape[0]
    sub = Grid(Box(domain.center, domain.half_width), points)
    return sub, sub_values


def check_poincare(obj, domain: Box | None = None, c: float = 1.0, zero_trace: bool | None = None,
                   trace_c: float = 2.0) -> PoincareReport:
    """Two Poincare-type inequalities evaluated by quadrature on ``domain``.

    For a scalar function: the zero-trace bound ``int|f| <= Vol^(1/N) int|grad f|`` (when
    requested, after checking the trace vanishes within ``trace_c h`` times the slope) and
    the mean-zero bound ``int|f - mean| <= diam/2 * TV(f)``. For a vector field only the
    mean-zero bound applies, with TV the discrete total variation. Passing means
    ``LHS <= RHS (1 + c h)``.
    """
    grid = obj.grid
    domain = grid.box if domain is None else domain
    spacing = grid.spacing
    sub, vals = _restrict(grid, obj.values, domain)
    factor = 1 + c * spacing
    vol = domain.volume
    if isinstance(obj, SampledVectorField):
        weights = sub.quadrature_weights()
        mean = np.tensordot(weights, vals, axes=sub.dim) / vol
        lhs = integrate(sub, np.linalg.norm(vals - mean, axis=-1))
        rhs = domain.diameter / 2 * total_variation(SampledVectorField(sub, vals))
        return PoincareReport(None, None, lhs, rhs, factor)

    f = SampledFunction(sub, vals)
    want_trace = True if zero_trace is None else zero_trace
    zt_lhs = zt_rhs = None
    if want_trace:
        trace = float(np.max(np.abs(_boundary_values(vals))))
        slope = lipschitz_estimate(f)
        if trace > max(trace_c * spacing * slope, 1e-12):
            if zero_trace:
                raise ClassMembershipError(
                    f"boundary trace {trace:.3g} is not zero within grid tolerance"
                )
        else:
            zt_lhs = norm_l1(f)
            zt_rhs = vol ** (1 / sub.dim) * norm_l1_field(gradient(f))
    mean = integrate(sub, vals) / vol
    lhs = integrate(sub, np.abs(vals - mean))
    scalar_tv = sum(float(np.sum(np.abs(np.diff(vals, axis=i)))) for i in range(sub.dim))
    rhs = domain.diameter / 2 * scalar_tv * spacing ** (sub.dim - 1)
    return PoincareReport(zt_lhs, zt_rhs, lhs, rhs, factor)
