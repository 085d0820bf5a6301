"""The Hopf-Lax semigroup on sampled data and checks of its structural properties.

``hopf_lax`` minimizes ``t H*((x - y)/t) + u0(y)`` over a lattice of candidate points
``y = x - m * step`` (``step`` is the output spacing divided by ``subdivisions``) inside
the ball that minimizers never leave. Since every output node sees the same candidate
lattice, the discrete scheme keeps exact analogues of the continuous properties: axis
second differences of the output stay below ``spacing^2 / (alpha t)`` and slopes do not
grow beyond the initial Lipschitz bound plus a grid-scale term.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import regularity
from .core import (
    Box,
    ClassParams,
    Grid,
    HamiltonianSpec,
    SampledFunction,
    SampledVectorField,
    norm_l1,
    norm_w11,
)
from .errors import ClassMembershipError, ConfigurationError, SearchRadiusError
from .legendre import conjugate_values


@dataclass
class HopfLaxSolution:
    u: SampledFunction
    time: float
    minimizers: SampledVectorField
    hamiltonian: HamiltonianSpec
    u0_ref: str = ""
    search_radius: float = 0.0


@dataclass(frozen=True)
class SupportBound:
    """Half-width of the cube outside which the solution at the horizon equals
    ``-horizon * H(0)`` for every initial datum of the class."""

    radius: float
    support: float
    speed: float


def support_bound(params: ClassParams, hamiltonian: HamiltonianSpec,
                  horizon: float | None = None) -> SupportBound:
    horizon = params.horizon if horizon is None else horizon
    speed = hamiltonian.sup_grad(params.lipschitz)
    return SupportBound(radius=params.support + horizon * speed, support=params.support, speed=speed)


@functools.lru_cache(maxsize=32)
def _stencil(hamiltonian: HamiltonianSpec, time: float, step: float, reach: int, radius: float):
    """Integer offsets inside the search ball with transport costs ``time H*(m step / time)``.

    Offsets are sorted in decreasing lexicographic order, so a strict running minimum
    keeps the lexicographically smallest minimizer ``x - m step`` on ties.
    """
    span = range(reach, -reach - 1, -1)
    offsets = np.array(list(itertools.product(span, repeat=hamiltonian.dim)), dtype=np.int64)
    keep = np.linalg.norm(offsets * step, axis=1) <= radius * (1 + 1e-12)
    offsets = offsets[keep]
    costs = time * conjugate_values(hamiltonian, offsets * step / time)
    offsets.setflags(write=False)
    costs.setflags(write=False)
    return offsets, costs


def clear_cache() -> None:
    _stencil.cache_clear()


def hopf_lax(
    u0: SampledFunction,
    hamiltonian: HamiltonianSpec,
    time: float,
    out_grid: Grid | None = None,
    lipschitz: float | None = None,
    subdivisions: int = 1,
    u0_ref: str = "",
) -> HopfLaxSolution:
    """Evaluate the Hopf-Lax solution at ``time`` on the nodes of ``out_grid``.

    Args:
        u0: initial data; outside its box it extends according to its extension mode.
        hamiltonian: uniformly convex Hamiltonian.
        time: nonnegative time; zero returns the data itself.
        out_grid: output nodes (default: the grid of ``u0``).
        lipschitz: Lipschitz bound of ``u0``, estimated from the samples when omitted.
            It sizes the search ball ``|x - y| <= time * sup_{|p| <= lipschitz} |grad H(p)|``.
        subdivisions: candidate points are spaced ``spacing / subdivisions``.
        u0_ref: provenance tag stored on the result.

    Raises:
        SearchRadiusError: a minimizer fell on the outer shell of the search ball,
            which means the supplied Lipschitz bound is too small.
    """
    grid = u0.grid if out_grid is None else out_grid
    if grid.dim != hamiltonian.dim or u0.dim != hamiltonian.dim:
        raise ConfigurationError("data, grid and Hamiltonian dimensions differ")
    if time < 0:
        raise ConfigurationError(f"time must be nonnegative, got {time}")
    sub = int(subdivisions)
    if sub < 1:
        raise ConfigurationError("subdivisions must be a positive integer")
    if time == 0:
        mins = SampledVectorField(grid, grid.nodes())
        return HopfLaxSolution(u0.resample(grid), 0.0, mins, hamiltonian, u0_ref)

    slope_bound = regularity.lipschitz_estimate(u0) if lipschitz is None else float(lipschitz)
    spacing = grid.spacing
    step = spacing / sub
    reach_radius = time * hamiltonian.sup_grad(slope_bound)
    radius = reach_radius + 2 * spacing
    reach = int(math.ceil(radius / step))
    offsets, costs = _stencil(hamiltonian, float(time), float(step), reach, float(radius))

    points = grid.points
    fine_len = (points - 1) * sub + 1 + 2 * reach
    axes = [grid.box.lower[i] - reach * step + step * np.arange(fine_len) for i in range(grid.dim)]
    ext = np.asarray(u0.eval(np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)), dtype=float)

    best = np.full(grid.shape, np.inf)
    arg = np.zeros(grid.shape, dtype=np.int64)
    stop = (points - 1) * sub + 1
    for j, (offset, cost) in enumerate(zip(offsets, costs)):
        window = tuple(slice(reach - o, reach - o + stop, sub) for o in offset)
        cand = ext[window] + cost
        better = cand < best
        if np.any(better):
            best = np.where(better, cand, best)
            arg = np.where(better, j, arg)

    chosen = offsets[arg]
    dist = np.linalg.norm(chosen * step, axis=-1)
    shell = dist > reach_radius + spacing * (1 + 1e-9)
    if np.any(shell):
        node = tuple(int(i) for i in np.argwhere(shell)[0])
        raise SearchRadiusError(
            f"minimizer for node {node} lies {dist[node]:.4g} away, beyond the search "
            f"radius {reach_radius:.4g}; the Lipschitz bound {slope_bound:.4g} is too small",
            node_index=node,
            point=grid.node(node),
        )
    return HopfLaxSolution(
        u=SampledFunction(grid, best, u0.extension),
        time=float(time),
        minimizers=SampledVectorField(grid, grid.nodes() - chosen * step),
        hamiltonian=hamiltonian,
        u0_ref=u0_ref,
        search_radius=reach_radius,
    )


@dataclass
class SemigroupReport:
    discrepancy: float
    tol: float
    spacing: float
    passed: bool


def verify_semigroup_law(
    u0: SampledFunction,
    hamiltonian: HamiltonianSpec,
    first: float,
    second: float,
    grid: Grid | None = None,
    tol: float | None = None,
    domain: Box | None = None,
    c: float = 5.0,
    subdivisions: int = 1,
) -> SemigroupReport:
    """Compare one solve to ``first + second`` with two chained solves, in L1 over ``domain``.

    The default tolerance is ``c * spacing * Vol(domain)``.
    """
    grid = u0.grid if grid is None else grid
    domain = grid.box if domain is None else domain
    slope = regularity.lipschitz_estimate(u0)
    kw = dict(subdivisions=subdivisions)
    direct = hopf_lax(u0, hamiltonian, first + second, grid, lipschitz=slope, **kw).u
    middle = hopf_lax(u0, hamiltonian, second, grid, lipschitz=slope, **kw).u
    slope_mid = max(slope, regularity.lipschitz_estimate(middle))
    composed = hopf_lax(middle, hamiltonian, first, grid, lipschitz=slope_mid, **kw).u
    discrepancy = norm_l1(direct - composed, domain)
    tol = c * grid.spacing * domain.volume if tol is None else tol
    return SemigroupReport(discrepancy, tol, grid.spacing, discrepancy <= tol)


@dataclass
class ProVReport:
    sc_measured: float
    sc_bound: float
    sc_ok: bool
    lip_measured: float
    lip_bound: float
    lip_ok: bool
    support_radius: float
    outside_max: float
    outside_bound: float
    outside_ok: bool
    support_tested: bool
    solution: SampledFunction = field(repr=False, default=None)

    @property
    def passed(self) -> bool:
        return self.sc_ok and self.lip_ok and self.outside_ok


def check_class_membership(u0: SampledFunction, params: ClassParams, slope_slack: float = 1e-9):
    """Raise ClassMembershipError unless ``u0`` vanishes outside the support cube and its
    measured Lipschitz constant is at most ``params.lipschitz + slope_slack``."""
    nodes = u0.grid.nodes()
    outside = np.max(np.abs(nodes), axis=-1) > params.support * (1 + 1e-12)
    scale = max(1.0, float(np.max(np.abs(u0.values))))
    bad = outside & (np.abs(u0.values) > 1e-12 * scale)
    if np.any(bad):
        where = [tuple(int(i) for i in ix) for ix in np.argwhere(bad)[:10]]
        raise ClassMembershipError(
            f"data does not vanish outside [-{params.support}, {params.support}]^{params.dim}; "
            f"offending nodes {where}",
            offending=where,
        )
    lip = regularity.lipschitz_estimate(u0)
    if lip > params.lipschitz + slope_slack:
        where = regularity.steepest_nodes(u0, params.lipschitz + slope_slack)
        raise ClassMembershipError(
            f"measured Lipschitz constant {lip:.6g} exceeds the bound {params.lipschitz}; "
            f"offending nodes {where}",
            offending=where,
        )


def verify_provv(
    u0: SampledFunction,
    hamiltonian: HamiltonianSpec,
    horizon: float,
    params: ClassParams,
    grid: Grid | None = None,
    sc_rel: float = 0.1,
    lip_c: float = 2.0,
    support_c: float = 5.0,
    subdivisions: int = 1,
) -> ProVReport:
    """Solve to ``horizon`` and check three properties of the solution.

    They are semiconcavity with constant ``1/(alpha horizon)`` (up to the relative slack
    ``sc_rel``), the Lipschitz bound of the class (up to ``lip_c * spacing``) and the value
    ``-horizon H(0)`` outside the propagated support cube (up to ``support_c * spacing *
    lipschitz``).
    """
    check_class_membership(u0, params)
    sol = hopf_lax(u0, hamiltonian, horizon, grid, lipschitz=params.lipschitz,
                   subdivisions=subdivisions)
    u = sol.u
    spacing = u.grid.spacing
    sc = regularity.sc_constant(u)
    sc_bound = 1.0 / (hamiltonian.alpha * horizon)
    lip = regularity.lipschitz_estimate(u)
    bound = support_bound(params, hamiltonian, horizon)
    outside = np.max(np.abs(u.grid.nodes()), axis=-1) > bound.radius * (1 + 1e-12)
    dev = np.abs(u.values + horizon * hamiltonian.h0)
    outside_max = float(dev[outside].max()) if np.any(outside) else 0.0
    outside_bound = support_c * spacing * params.lipschitz
    return ProVReport(
        sc_measured=sc,
        sc_bound=sc_bound,
        sc_ok=sc <= sc_bound * (1 + sc_rel),
        lip_measured=lip,
        lip_bound=params.lipschitz,
        lip_ok=lip <= params.lipschitz + lip_c * spacing,
        support_radius=bound.radius,
        outside_max=outside_max,
        outside_bound=outside_bound,
        outside_ok=outside_max <= outside_bound,
        support_tested=bool(np.any(outside)),
        solution=u,
    )


@dataclass
class InclusionReport:
    checked: int
    passed_count: int
    rejected: int
    reports: list
    rejections: list

    @property
    def passed(self) -> bool:
        return self.passed_count == self.checked


def check_inclusion_sc(
    u0_set: Iterable[SampledFunction],
    hamiltonian: HamiltonianSpec,
    horizon: float,
    params: ClassParams,
    grid: Grid | None = None,
    **kwargs,
) -> InclusionReport:
    """Run verify_provv on each candidate. Candidates failing the class preconditions are
    recorded as rejections and left out of the pass count."""
    reports, rejections = [], []
    for k, u0 in enumerate(u0_set):
        try:
            reports.append(verify_provv(u0, hamiltonian, horizon, params, grid, **kwargs))
        except ClassMembershipError as exc:
            rejections.append((k, str(exc)))
    passed = sum(r.passed for r in reports)
    return InclusionReport(len(reports), passed, len(rejections), reports, rejections)


def continuity_spot_check(
    u0: SampledFunction,
    direction: SampledFunction,
    hamiltonian: HamiltonianSpec,
    time: float,
    scales: Sequence[float] = (0.1, 0.05, 0.025),
    lipschitz: float | None = None,
):
    """Perturb ``u0`` by ``scale * direction`` and record input and output W^{1,1} distances.

    Returns rows ``(scale, input distance, output distance)``. No modulus of continuity
    is asserted; callers look for output distances shrinking along with the inputs.
    """
    if lipschitz is None:
        lipschitz = (regularity.lipschitz_estimate(u0)
                     + max(scales) * regularity.lipschitz_estimate(direction))
    base = hopf_lax(u0, hamiltonian, time, lipschitz=lipschitz).u
    rows = []
    for scale in scales:
        moved = u0 + direction * scale
        out = hopf_lax(moved, hamiltonian, time, lipschitz=lipschitz).u
        rows.append((scale, norm_w11(moved - u0), norm_w11(out - base)))
    return rows
