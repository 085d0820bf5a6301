"""Constructive covers of monotone vector fields by cellwise quantization, their lift to
semiconcave functions and the upper-bound constants.

A field on the support cube is averaged over each cube of a regular partition. Every
averaged component is then snapped to the midpoint of one of ``cells`` equal bins in
``[-M, M]``. The quantized field identifies the cover element. It is kept as a codec
(bin indices, a byte key and a short hash) because the cover itself has far too many
elements to list.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import regularity
from .core import (
    Box,
    ClassParams,
    Grid,
    HamiltonianSpec,
    SampledFunction,
    SampledVectorField,
    gradient,
    norm_l1_field,
    norm_w11,
    unit_ball_volume,
)
from .errors import (
    ClassMembershipError,
    ConfigurationError,
    MonotonicityError,
    ValidityError,
)

_GUARD = 1e-12


# ---------------------------------------------------------------------------
# constants


def gamma1(params: ClassParams) -> float:
    """Quantization error coefficient ``sqrt(N) (M (2L)^N + L C)``."""
    dim = params.dim
    return math.sqrt(dim) * (params.lipschitz * (2 * params.support) ** dim
                             + params.support * params.variation)


def gamma_proof(params: ClassParams) -> float:
    return 2 * params.dim * (2 * gamma1(params)) ** params.dim


def gamma_display(params: ClassParams) -> float:
    dim = params.dim
    base = params.lipschitz * params.support**dim + params.support * params.variation
    return 2 ** (dim * dim + dim + 1) * dim ** (dim / 2 + 1) * base**dim


def lifted_slope(params: ClassParams) -> float:
    """Slope bound ``M + K sqrt(N) L`` of the gradient minus ``K x``."""
    return params.lipschitz + params.semiconcavity * math.sqrt(params.dim) * params.support


def lifted_variation(params: ClassParams) -> float:
    """Variation bound of the lifted field."""
    dim = params.dim
    return (2 ** (1.5 * dim) * dim ** (dim / 2 + 2) * unit_ball_volume(dim)
            * (params.lipschitz + (params.semiconcavity + 1) * params.support) ** dim)


def gamma_sc(support: float, lipschitz: float, semiconcavity: float, dim: int) -> float:
    """Coefficient of ``eps^(-N)`` in the entropy upper bound of the semiconcave class."""
    return (unit_ball_volume(dim) ** dim
            * (4 * dim * (1 + lipschitz + (semiconcavity + 1) * support)) ** (4 * dim * dim))


def propagated_support(params: ClassParams, hamiltonian: HamiltonianSpec) -> float:
    """``L + T sup_{|p| <= M} |grad H(p)|``."""
    return params.support + params.horizon * hamiltonian.sup_grad(params.lipschitz)


@dataclass(frozen=True)
class UpperBoundConstants:
    gamma1: float
    gamma: float
    gamma_display: float
    M1: float
    C1: float
    gamma_sc: float
    Gamma_plus: float
    Gamma_plus_via_gamma_sc: float
    propagated_support: float
    horizon_curvature: float


def gamma_plus(params: ClassParams, hamiltonian: HamiltonianSpec) -> UpperBoundConstants:
    """All upper-bound constants; the reachable-set constant is computed from its
    expanded form and again as ``gamma_sc(l, M, 1/(alpha T), N)``."""
    dim = params.dim
    reach = propagated_support(params, hamiltonian)
    curv = 1.0 / (hamiltonian.alpha * params.horizon)
    expanded = (unit_ball_volume(dim) ** dim
                * (4 * dim * (1 + params.lipschitz + (curv + 1) * reach)) ** (4 * dim * dim))
    return UpperBoundConstants(
        gamma1=gamma1(params),
        gamma=gamma_proof(params),
        gamma_display=gamma_display(params),
        M1=lifted_slope(params),
        C1=lifted_variation(params),
        gamma_sc=gamma_sc(params.support, params.lipschitz, params.semiconcavity, dim),
        Gamma_plus=expanded,
        Gamma_plus_via_gamma_sc=gamma_sc(reach, params.lipschitz, curv, dim),
        propagated_support=reach,
        horizon_curvature=curv,
    )


# ---------------------------------------------------------------------------
# partition and quantization


@dataclass(frozen=True)
class CubePartition:
    support: float
    cells: int
    dim: int

    @property
    def side(self) -> float:
        return 2 * self.support / self.cells

    @property
    def shape(self) -> tuple:
        return (self.cells,) * self.dim

    def bounds(self, k: int) -> tuple:
        return -self.support + k * self.side, -self.support + (k + 1) * self.side

    def cell_box(self, index) -> Box:
        center = tuple(-self.support + (k + 0.5) * self.side for k in index)
        return Box(center, self.side / 2)

    def indices(self):
        return itertools.product(range(self.cells), repeat=self.dim)

    def axis_overlap(self, grid: Grid, axis: int) -> np.ndarray:
        """``(points, cells)`` matrix of dual-cell lengths intersected with each cube."""
        return np.stack([grid.axis_weights(axis, *self.bounds(k)) for k in range(self.cells)],
                        axis=1)


def _check_grid(grid: Grid, partition: CubePartition) -> None:
    box = grid.box
    if any(abs(c) > 1e-12 for c in box.center) or abs(box.half_width - partition.support) > 1e-12:
        raise ConfigurationError("the field grid must cover exactly the support cube")
    if (grid.points - 1) % partition.cells:
        raise ConfigurationError(
            f"grid with {grid.points} points does not align with {partition.cells} cubes per "
            f"axis; use (points - 1) divisible by the cube count"
        )


def cell_averages(field: SampledVectorField, partition: CubePartition) -> np.ndarray:
    """Quadrature averages over every cube, shape ``cells^N + (N,)``."""
    grid = field.grid
    data = field.values
    for axis in range(grid.dim):
        weights = partition.axis_overlap(grid, axis)
        data = np.moveaxis(np.tensordot(data, weights, axes=([axis], [0])), -1, axis)
    return data / partition.side**grid.dim


def _node_cells(grid: Grid, partition: CubePartition, axis: int):
    """For each node along ``axis``: the two cubes its dual cell may touch, with weights."""
    weights = partition.axis_overlap(grid, axis)
    x = grid.axis(axis)
    left_edge = x - grid.spacing / 2 + partition.support
    first = np.clip(np.floor(left_edge / partition.side + 1e-9).astype(int), 0, partition.cells - 1)
    second = np.minimum(first + 1, partition.cells - 1)
    rows = np.arange(grid.points)
    w_first = weights[rows, first]
    w_second = np.where(second != first, weights[rows, second], 0.0)
    return (first, w_first), (second, w_second)


def piecewise_distance(field: SampledVectorField, partition: CubePartition,
                       cell_values: np.ndarray) -> float:
    """L1 distance between sampled ``field`` and a field constant on every cube, using the
    same dual-cell quadrature as the averages."""
    grid = field.grid
    per_axis = [_node_cells(grid, partition, i) for i in range(grid.dim)]
    total = 0.0
    for choice in itertools.product((0, 1), repeat=grid.dim):
        cells = [per_axis[i][c][0] for i, c in enumerate(choice)]
        weights = [per_axis[i][c][1] for i, c in enumerate(choice)]
        w = weights[0]
        for extra in weights[1:]:
            w = np.multiply.outer(w, extra)
        idx = np.meshgrid(*cells, indexing="ij")
        local = cell_values[tuple(idx)]
        total += float(np.sum(w * np.linalg.norm(field.values - local, axis=-1)))
    return total


def bin_midpoints(bound: float, cells: int) -> np.ndarray:
    return -bound + (np.arange(cells) + 0.5) * 2 * bound / cells


def bin_index(values, bound: float, cells: int) -> np.ndarray:
    """Half-open bins of width ``2 bound / cells``; the top bin is closed."""
    width = 2 * bound / cells
    k = np.floor((np.asarray(values) + bound) / width).astype(np.int64)
    return np.clip(k, 0, cells - 1)


@dataclass
class QuantizedMonotoneField:
    partition: CubePartition
    bins: np.ndarray
    bound: float
    averages: np.ndarray | None = None

    @property
    def values(self) -> np.ndarray:
        return bin_midpoints(self.bound, self.partition.cells)[self.bins]

    @property
    def key(self) -> bytes:
        return self.bins.astype("<u2").tobytes()

    @property
    def center_hash(self) -> str:
        return hashlib.sha1(self.key).hexdigest()[:16]

    def eval(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        side = self.partition.side
        idx = np.clip(np.floor((pts + self.partition.support) / side).astype(int),
                      0, self.partition.cells - 1)
        return self.values[tuple(np.moveaxis(idx, -1, 0))]

    def axis_monotone_violation(self):
        """First ``(cell, next cell, component)`` where a component increases along its own
        axis, or None."""
        vals = self.values
        for comp in range(self.partition.dim):
            diff = np.diff(vals[..., comp], axis=comp)
            bad = np.argwhere(diff > 0)
            if bad.size:
                cell = tuple(int(i) for i in bad[0])
                nxt = list(cell)
                nxt[comp] += 1
                return cell, tuple(nxt), comp
        return None


def quantize_monotone(field: SampledVectorField, params: ClassParams, cells: int,
                      check: bool = True) -> QuantizedMonotoneField:
    """Average ``field`` over each cube and snap every component to its bin midpoint.

    With ``check`` the field is first tested for monotonicity and for values inside
    ``[-M, M]`` and ClassMembershipError is raised on failure. The quantized output must be
    axis-monotone; a violation raises MonotonicityError naming the two cubes.
    """
    partition = CubePartition(params.support, int(cells), params.dim)
    _check_grid(field.grid, partition)
    bound = params.lipschitz
    if check:
        peak = float(np.max(np.abs(field.values)))
        if peak > bound * (1 + 1e-12):
            raise ClassMembershipError(f"field value {peak:.6g} escapes the box [-{bound}, {bound}]")
        mono = regularity.check_monotone_decreasing(field, tol=1e-12)
        if not mono.passed:
            raise ClassMembershipError(
                f"field is not monotone decreasing; worst pair {mono.certificate} with "
                f"normalized pairing {mono.max_normalized:.3g}",
                offending=mono.certificate,
            )
    averages = cell_averages(field, partition)
    quantized = QuantizedMonotoneField(partition, bin_index(averages, bound, cells), bound, averages)
    violation = quantized.axis_monotone_violation()
    if violation is not None:
        a, b, comp = violation
        raise MonotonicityError(
            f"component {comp} increases from cube {a} to cube {b}", a, b, comp
        )
    return quantized


# ---------------------------------------------------------------------------
# cover plans


@dataclass
class Assignment:
    quantized: QuantizedMonotoneField
    distance: float
    radius: float

    @property
    def center_hash(self) -> str:
        return self.quantized.center_hash

    @property
    def inside(self) -> bool:
        return self.distance <= self.radius * (1 + 1e-12)


@dataclass
class CoverPlan:
    params: ClassParams
    eps: float
    cells: int
    radius: float
    log2_count_bound: float
    gamma1: float
    gamma: float
    gamma_display: float

    @property
    def partition(self) -> CubePartition:
        return CubePartition(self.params.support, self.cells, self.params.dim)

    def aligned_grid(self, per_cell: int = 8) -> Grid:
        return Grid(Box((0.0,) * self.params.dim, self.params.support), self.cells * per_cell + 1)

    def assign(self, field: SampledVectorField, check: bool = True) -> Assignment:
        quantized = quantize_monotone(field, self.params, self.cells, check=check)
        dist = piecewise_distance(field, self.partition, quantized.values)
        return Assignment(quantized, dist, self.radius)

    def encode(self, quantized: QuantizedMonotoneField) -> bytes:
        return quantized.key

    def decode(self, key: bytes) -> QuantizedMonotoneField:
        bins = np.frombuffer(key, dtype="<u2").astype(np.int64)
        shape = self.partition.shape + (self.params.dim,)
        if bins.size != int(np.prod(shape)):
            raise ConfigurationError("key does not match the cover partition")
        return QuantizedMonotoneField(self.partition, bins.reshape(shape), self.params.lipschitz)


def cells_for(gamma1_value: float, eps: float) -> int:
    return int(math.floor(gamma1_value / eps + _GUARD)) + 1


def build_cover_monotone(params: ClassParams, eps: float) -> CoverPlan:
    """Cover of the monotone class at accuracy ``eps``: ``floor(gamma1 / eps) + 1`` cubes per
    axis, element radius ``gamma1 / cells``, at most ``2^(2 N cells^N)`` elements.

    Raises ValidityError unless ``0 < eps <= gamma1 / 5``.
    """
    g1 = gamma1(params)
    if not 0 < eps <= g1 / 5 * (1 + _GUARD):
        raise ValidityError(f"eps = {eps:.6g} must lie in (0, gamma1/5 = {g1 / 5:.6g}]")
    cells = cells_for(g1, eps)
    return CoverPlan(
        params=params,
        eps=eps,
        cells=cells,
        radius=g1 / cells,
        log2_count_bound=2.0 * params.dim * cells**params.dim,
        gamma1=g1,
        gamma=gamma_proof(params),
        gamma_display=gamma_display(params),
    )


@dataclass
class LiftedAssignment:
    inner: Assignment
    field: SampledVectorField

    @property
    def center_hash(self) -> str:
        return self.inner.center_hash


@dataclass
class LiftedCoverPlan:
    params: ClassParams
    eps: float
    inner: CoverPlan
    log2_count_bound: float
    gamma_sc: float

    @property
    def inner_eps(self) -> float:
        return self.inner.eps

    @property
    def poincare_factor(self) -> float:
        return 2 * self.params.support + 1

    def aligned_grid(self, per_cell: int = 4) -> Grid:
        return self.inner.aligned_grid(per_cell)

    def lift(self, u: SampledFunction) -> SampledVectorField:
        """``grad u - K x``; raises NotSemiconcaveError when ``u`` is not K-semiconcave."""
        return regularity.monotone_field(u, self.params.semiconcavity)

    def assign(self, u: SampledFunction, check: bool = True) -> LiftedAssignment:
        field = self.lift(u)
        return LiftedAssignment(self.inner.assign(field, check=check), field)

    def certificate(self, first: SampledFunction, second: SampledFunction) -> dict:
        """Measured lifted-gradient distance and W^{1,1} distance of two members, together with
        the implication they must satisfy."""
        grad_gap = norm_l1_field(gradient(first) - gradient(second))
        w11 = norm_w11(first - second)
        close = grad_gap <= self.inner_eps * (1 + 1e-12)
        return {
            "gradient_distance": grad_gap,
            "w11_distance": w11,
            "premise": close,
            "holds": (not close) or w11 <= self.eps * (1 + 1e-9),
        }


def lift_cover_semiconcave(params: ClassParams, eps: float) -> LiftedCoverPlan:
    """Cover of the semiconcave class: the lifted fields ``grad u - K x`` are covered in the
    monotone class with slope ``M1`` and variation ``C1`` at accuracy ``eps / (2L + 1)``.

    Two members whose lifted fields are that close are within ``eps`` in W^{1,1}, since their
    difference vanishes on the boundary. The count is at most ``2^(gamma_sc / eps^N)``.
    """
    inner_params = params.with_(lipschitz=lifted_slope(params), variation=lifted_variation(params))
    inner_eps = eps / (2 * params.support + 1)
    inner = build_cover_monotone(inner_params, inner_eps)
    coef = gamma_sc(params.support, params.lipschitz, params.semiconcavity, params.dim)
    return LiftedCoverPlan(params, eps, inner, coef / eps**params.dim, coef)


# ---------------------------------------------------------------------------
# brute-force enumeration of small quantized families


def count_monotone_tuples(cells: int) -> int:
    """Brute-force count of non-increasing ``cells``-tuples over ``cells`` ordered values."""
    return sum(1 for t in itertools.product(range(cells), repeat=cells)
               if all(a >= b for a, b in zip(t, t[1:])))


def monotone_tuples_formula(cells: int) -> int:
    return math.comb(2 * cells - 1, cells)


def count_quantized_fields(cells: int, dim: int) -> int:
    """Brute-force count of all axis-monotone quantized fields on the partition."""
    shape = (cells,) * dim + (dim,)
    total = 0
    for flat in itertools.product(range(cells), repeat=int(np.prod(shape))):
        vals = np.array(flat).reshape(shape)
        if all(np.all(np.diff(vals[..., c], axis=c) <= 0) for c in range(dim)):
            total += 1
    return total


def quantized_count_bound(cells: int, dim: int) -> int:
    """``Card(K)^(number of axis lines)`` with ``N cells^(N-1)`` lines."""
    return monotone_tuples_formula(cells) ** (dim * cells ** (dim - 1))


def distinct_quantizations(plan: CoverPlan, fields, check: bool = True) -> int:
    return len({plan.assign(f, check=check).quantized.key for f in fields})


def validate_cover(plan: CoverPlan, generator: Callable[[Grid, np.random.Generator], SampledVectorField],
                   members: int, seed: int, per_cell: int = 8) -> dict:
    """Assign ``members`` seeded random fields and summarize distances against the radius."""
    rng = np.random.default_rng(seed)
    grid = plan.aligned_grid(per_cell)
    rows = []
    keys = set()
    for member in range(members):
        field = generator(grid, rng)
        result = plan.assign(field)
        keys.add(result.quantized.key)
        rows.append((member, plan.cells, result.center_hash, result.distance, plan.radius,
                     result.inside))
    return {
        "rows": rows,
        "distinct": len(keys),
        "all_inside": all(r[-1] for r in rows),
        "max_distance": max(r[3] for r in rows) if rows else 0.0,
        "log2_count_bound": plan.log2_count_bound,
    }
