"""Discrete convex conjugates.

The reference path scans every node of a momentum search grid for each slope node,
then polishes the discrete argmax: by damped Newton iterations when analytic
derivatives are available, or by a parabolic fit for purely sampled inputs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import Grid, HamiltonianSpec, SampledFunction, SampledVectorField
from .errors import ConfigurationError, DomainError, SearchBoxError

_CHUNK_ENTRIES = 4_000_000


@dataclass(frozen=True, eq=False)
class ConvexFunction:
    """A smooth convex function given by callables, vectorized like HamiltonianSpec."""

    dim: int
    eval: Callable
    grad: Callable
    hess: Callable


@dataclass
class ConjugateResult:
    """Nodal conjugate values and the maximizing momentum at every slope node."""

    hstar: SampledFunction
    argmax: SampledVectorField
    refined: bool
    iterations: int = 0


@dataclass
class ConjugateIdentityReport:
    grad_residual: float
    hess_max_eig: float
    hess_bound: float
    origin_residual: Optional[float]
    tol: float
    grad_ok: bool
    hess_ok: bool
    origin_ok: bool

    @property
    def passed(self) -> bool:
        return self.grad_ok and self.hess_ok and self.origin_ok

    @property
    def hess_slack(self) -> float:
        return self.hess_max_eig - self.hess_bound


def _flat_nodes(grid: Grid) -> np.ndarray:
    return grid.nodes().reshape(-1, grid.dim)


def _has_derivatives(fn) -> bool:
    return callable(getattr(fn, "grad", None)) and callable(getattr(fn, "hess", None))


def newton_conjugate_points(fn, slopes: np.ndarray, start: np.ndarray | None = None,
                            max_iter: int = 80, tol: float = 1e-13):
    """Solve ``grad fn(p) = q`` for every row of ``q`` by damped Newton steps on
    ``fn(p) - <p, q>``; returns ``(values, p, iterations)`` with ``values = <p,q> - fn(p)``.

    Backtracking keeps each step a descent step, so the iteration converges from any
    start for uniformly convex ``fn``.
    """
    slopes = np.asarray(slopes, dtype=float)
    mom = np.zeros_like(slopes) if start is None else np.array(start, dtype=float)

    def objective(pts):
        return fn.eval(pts) - np.sum(pts * slopes, axis=-1)

    scale = 1.0 + np.linalg.norm(slopes, axis=-1)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        resid = fn.grad(mom) - slopes
        if np.all(np.linalg.norm(resid, axis=-1) <= tol * scale):
            break
        step = np.linalg.solve(fn.hess(mom), resid[..., None])[..., 0]
        decrease = np.sum(resid * step, axis=-1)
        before = objective(mom)
        damping = np.ones(slopes.shape[:-1])
        trial = mom - step
        for _ in range(40):
            after = objective(trial)
            bad = after > before - 1e-4 * damping * decrease + 1e-15 * (1 + np.abs(before))
            if not np.any(bad):
                break
            damping = np.where(bad, 0.5 * damping, damping)
            trial = mom - damping[..., None] * step
        mom = trial
    values = np.sum(mom * slopes, axis=-1) - fn.eval(mom)
    return values, mom, iterations


def conjugate_function(fn) -> ConvexFunction:
    """The conjugate of a smooth uniformly convex function as a ConvexFunction.

    Values and gradients come from Newton solves of ``grad H(p) = q``; the Hessian is
    the inverse of ``D^2 H`` at the solution.
    """
    if not _has_derivatives(fn):
        raise ConfigurationError("a smooth conjugate needs analytic gradient and Hessian")
    closed = getattr(fn, "conjugate", None)

    def argmax(slopes):
        return newton_conjugate_points(fn, slopes)[1]

    def value(slopes):
        slopes = np.asarray(slopes, dtype=float)
        if closed is not None:
            return closed(slopes)
        return newton_conjugate_points(fn, slopes)[0]

    return ConvexFunction(
        dim=fn.dim,
        eval=value,
        grad=argmax,
        hess=lambda slopes: np.linalg.inv(fn.hess(argmax(slopes))),
    )


def conjugate_values(fn, slopes: np.ndarray) -> np.ndarray:
    """Conjugate values at arbitrary slopes, using the closed form when one exists."""
    slopes = np.asarray(slopes, dtype=float)
    closed = getattr(fn, "conjugate", None)
    if closed is not None:
        return closed(slopes)
    flat = slopes.reshape(-1, slopes.shape[-1])
    return newton_conjugate_points(fn, flat)[0].reshape(slopes.shape[:-1])


def _brute_force(q_nodes: np.ndarray, p_nodes: np.ndarray, fp: np.ndarray):
    """First-occurrence argmax of ``<p, q> - f(p)`` over all p nodes, by chunks of q."""
    rows = max(1, _CHUNK_ENTRIES // max(1, p_nodes.shape[0]))
    best = np.empty(q_nodes.shape[0], dtype=np.int64)
    vals = np.empty(q_nodes.shape[0])
    for start in range(0, q_nodes.shape[0], rows):
        block = q_nodes[start : start + rows] @ p_nodes.T - fp[None, :]
        idx = np.argmax(block, axis=1)
        best[start : start + rows] = idx
        vals[start : start + rows] = block[np.arange(idx.size), idx]
    return vals, best


def _parabolic_polish(q_nodes, p_grid: Grid, fp_grid: np.ndarray, best: np.ndarray, vals):
    """One axis-wise parabolic refinement step around each discrete argmax."""
    spacing = p_grid.spacing
    dim = p_grid.dim
    multi = np.array(np.unravel_index(best, p_grid.shape)).T
    p_best = _flat_nodes(p_grid)[best].copy()
    gain = np.zeros_like(vals)
    for i in range(dim):
        lo = multi.copy()
        hi = multi.copy()
        lo[:, i] -= 1
        hi[:, i] += 1
        usable = (lo[:, i] >= 0) & (hi[:, i] < p_grid.points)
        lo[~usable, i] = multi[~usable, i]
        hi[~usable, i] = multi[~usable, i]
        s_lo = q_nodes[:, i] * (-spacing) - fp_grid[tuple(lo.T)] + fp_grid[tuple(multi.T)]
        s_hi = q_nodes[:, i] * spacing - fp_grid[tuple(hi.T)] + fp_grid[tuple(multi.T)]
        curv = s_lo + s_hi
        ok = usable & (curv < -1e-300)
        shift = np.where(ok, (s_lo - s_hi) / (2 * np.where(ok, curv, -1.0)), 0.0)
        shift = np.clip(shift, -0.5, 0.5)
        gain += np.where(ok, -((s_lo - s_hi) ** 2) / (8 * np.where(ok, curv, -1.0)), 0.0)
        p_best[:, i] += shift * spacing
    return vals + np.maximum(gain, 0.0), p_best


def conjugate(fn, q_grid: Grid, p_search: Grid, refine: bool = True) -> ConjugateResult:
    """Conjugate ``H*(q) = max_p <p, q> - H(p)`` at every node of ``q_grid``.

    ``fn`` may be a HamiltonianSpec (or any object with ``eval``/``grad``/``hess``) or a
    SampledFunction. The discrete maximization runs over the nodes of ``p_search``.

    Raises:
        SearchBoxError: a discrete maximizer sits on the boundary of ``p_search``.
        DomainError: a sampled input does not cover ``p_search``.
    """
    if q_grid.dim != p_search.dim:
        raise ConfigurationError("slope and momentum grids must share the dimension")
    sampled = isinstance(fn, SampledFunction)
    if sampled and not fn.grid.box.contains_box(p_search.box):
        raise DomainError("the momentum search box exceeds the sampled input's box")
    p_nodes = _flat_nodes(p_search)
    q_nodes = _flat_nodes(q_grid)
    fp = np.asarray(fn.eval(p_nodes), dtype=float).reshape(-1)
    vals, best = _brute_force(q_nodes, p_nodes, fp)

    multi = np.array(np.unravel_index(best, p_search.shape)).T
    on_edge = np.any((multi == 0) | (multi == p_search.points - 1), axis=1)
    if np.any(on_edge):
        k = int(np.flatnonzero(on_edge)[0])
        node = tuple(int(i) for i in np.unravel_index(k, q_grid.shape))
        raise SearchBoxError(
            f"search box too small: the maximizer for slope node {node} "
            f"(q = {q_nodes[k].tolist()}) lies on the momentum box boundary",
            node_index=node,
            slope=q_nodes[k],
        )

    p_best = p_nodes[best]
    iterations = 0
    if refine and not sampled and _has_derivatives(fn):
        new_vals, new_p, iterations = newton_conjugate_points(fn, q_nodes, start=p_best)
        keep = new_vals >= vals
        vals = np.where(keep, new_vals, vals)
        p_best = np.where(keep[:, None], new_p, p_best)
    elif refine:
        vals, p_best = _parabolic_polish(q_nodes, p_search, fp.reshape(p_search.shape), best, vals)

    return ConjugateResult(
        hstar=SampledFunction(q_grid, vals.reshape(q_grid.shape)),
        argmax=SampledVectorField(q_grid, p_best.reshape(q_grid.shape + (q_grid.dim,))),
        refined=refine,
        iterations=iterations,
    )


def conjugate_1d(p_nodes: np.ndarray, values: np.ndarray, q_nodes: np.ndarray):
    """Linear-time discrete conjugate in one dimension.

    Builds the lower convex hull of the samples, then sweeps sorted slopes along its
    edges. Returns ``(conjugate values, argmax momenta)``; ties go to the smaller p,
    matching the brute-force scan.
    """
    mom = np.asarray(p_nodes, dtype=float)
    vals = np.asarray(values, dtype=float)
    slopes = np.asarray(q_nodes, dtype=float)
    if mom.ndim != 1 or np.any(np.diff(mom) <= 0) or np.any(np.diff(slopes) < 0):
        raise ConfigurationError("conjugate_1d needs increasing momenta and sorted slopes")
    hull: list[int] = []
    for k in range(mom.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (mom[b] - mom[a]) * (vals[k] - vals[a]) - (vals[b] - vals[a]) * (mom[k] - mom[a])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(k)
    hull_mom = mom[hull]
    hull_val = vals[hull]
    edges = np.diff(hull_val) / np.diff(hull_mom)
    out = np.empty_like(slopes)
    arg = np.empty_like(slopes)
    j = 0
    for k, slope in enumerate(slopes):
        while j < edges.size and edges[j] < slope:
            j += 1
        out[k] = slope * hull_mom[j] - hull_val[j]
        arg[k] = hull_mom[j]
    return out, arg


def _fd_hessian_max_eig(f: SampledFunction) -> float:
    """Largest eigenvalue of the centered finite-difference Hessian over interior nodes."""
    v = f.values
    spacing = f.grid.spacing
    dim = f.dim
    core = tuple(slice(1, -1) for _ in range(dim))

    def shifted(offset):
        return v[tuple(slice(1 + o, v.shape[i] - 1 + o) for i, o in enumerate(offset))]

    mats = np.zeros(v[core].shape + (dim, dim))
    for i in range(dim):
        e = [0] * dim
        e[i] = 1
        minus = [-c for c in e]
        mats[..., i, i] = (shifted(e) + shifted(minus) - 2 * v[core]) / spacing**2
    for i, j in itertools.combinations(range(dim), 2):
        def off(a, b):
            o = [0] * dim
            o[i], o[j] = a, b
            return shifted(o)

        mixed = (off(1, 1) - off(1, -1) - off(-1, 1) + off(-1, -1)) / (4 * spacing**2)
        mats[..., i, j] = mixed
        mats[..., j, i] = mixed
    return float(np.max(np.linalg.eigvalsh(mats)))


def verify_conjugate_identities(hamiltonian: HamiltonianSpec, result: ConjugateResult, tol: float,
                                region_radius: float | None = None) -> ConjugateIdentityReport:
    """Check the gradient inversion identity, the Hessian ceiling and the value at the origin.

    ``region_radius`` restricts the gradient-identity nodes to ``|q| <= region_radius``.
    """
    grid = result.hstar.grid
    q_nodes = _flat_nodes(grid)
    mom = result.argmax.values.reshape(-1, grid.dim)
    residual = np.linalg.norm(hamiltonian.grad(mom) - q_nodes, axis=-1)
    if region_radius is not None:
        residual = residual[np.linalg.norm(q_nodes, axis=-1) <= region_radius + 1e-12]
    grad_residual = float(residual.max()) if residual.size else 0.0

    bound = 1.0 / hamiltonian.alpha
    hess_eig = _fd_hessian_max_eig(result.hstar) if grid.points >= 3 else float("-inf")

    origin_residual = None
    if np.all(grid.box.contains(np.zeros(grid.dim))):
        origin_residual = float(abs(result.hstar.eval(np.zeros(grid.dim)) + hamiltonian.h0))
    return ConjugateIdentityReport(
        grad_residual=grad_residual,
        hess_max_eig=hess_eig,
        hess_bound=bound,
        origin_residual=origin_residual,
        tol=tol,
        grad_ok=grad_residual <= tol,
        hess_ok=hess_eig <= bound + tol,
        origin_ok=origin_residual is None or origin_residual <= tol,
    )


def biconjugate(fn, p_grid: Grid, q_search: Grid) -> ConjugateResult:
    """The conjugate of the conjugate on ``p_grid``, maximizing over the slope grid ``q_search``."""
    if _has_derivatives(fn):
        return conjugate(conjugate_function(fn), p_grid, q_search)
    first = conjugate(fn, q_search, fn.grid)
    return conjugate(first.hstar, p_grid, q_search)
