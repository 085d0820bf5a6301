"""Bump-function packings, their exact Hamming counting and the reachability construction.

A sign pattern picks one of two signs for a scaled bump in each cube of a regular
partition. Bumps have disjoint supports, so the gradient distance between two
superpositions is the number of differing signs times twice the gradient mass of one
bump. Everything about the packing then reduces to counting Hamming balls on the cube
``{-1, +1}^cells``. The count is done exactly with big integers and compared with a
Hoeffding tail bound.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from . import regularity
from .core import (
    Box,
    ClassParams,
    Grid,
    HamiltonianSpec,
    SampledFunction,
    gradient,
    norm_l1_field,
    norm_w11,
    unit_ball_volume,
)
from .errors import (
    ClassMembershipError,
    ConfigurationError,
    ReachabilityConditionError,
    ValidityError,
)
from .semigroup import hopf_lax

_GUARD = 1e-12


# ---------------------------------------------------------------------------
# the radial profile and the single bump


def profile(r):
    """Radial profile: ``1/16 - r^2/2`` up to 1/4, ``(r - 1/2)^2 / 2`` up to 1/2, then 0."""
    r = np.asarray(r, dtype=float)
    inner = 1.0 / 16.0 - 0.5 * r * r
    outer = 0.5 * (r - 0.5) ** 2
    return np.where(r <= 0.25, inner, np.where(r <= 0.5, outer, 0.0))


def profile_derivative(r):
    """``|1/4 - r| - 1/4`` on ``[0, 1/2]`` and 0 beyond."""
    r = np.asarray(r, dtype=float)
    return np.where(r <= 0.5, np.abs(0.25 - r) - 0.25, 0.0)


def bump_value(points, height: float, width: float):
    """``(height width^2 / 6) * profile(|x| / width)``; vanishes outside the ball of radius
    ``width / 2``."""
    pts = np.asarray(points, dtype=float)
    radius = np.linalg.norm(pts, axis=-1)
    return height * width**2 / 6.0 * profile(radius / width)


def bump_gradient(points, height: float, width: float):
    pts = np.asarray(points, dtype=float)
    radius = np.linalg.norm(pts, axis=-1)
    safe = np.where(radius > 0, radius, 1.0)
    scale = height * width / 6.0 * profile_derivative(radius / width) / safe
    return np.where(radius[..., None] > 0, scale[..., None] * pts, 0.0)


def beta(semiconcavity: float, support: float, dim: int) -> float:
    """Gradient mass of one bump: ``K L^(N+1) omega_N (2^N - 1) / (12 (N+1) 4^N)``."""
    omega = unit_ball_volume(dim)
    return (semiconcavity * support ** (dim + 1) * omega / 12.0
            * (2**dim - 1) / ((dim + 1) * 4**dim))


def beta_sc(semiconcavity: float, support: float, dim: int) -> float:
    """Coefficient of ``eps^(-N)`` in the entropy lower bound of the semiconcave class."""
    omega = unit_ball_volume(dim)
    inner = semiconcavity * omega * support ** (dim + 1) / (48.0 * (dim + 1) * 2 ** (dim + 1))
    return inner**dim / (8.0 * math.log(2.0))


@dataclass
class BumpProfile:
    """One bump with curvature budget ``semiconcavity`` and width ``support``."""

    semiconcavity: float
    support: float
    dim: int
    b: SampledFunction | None = None

    def value(self, points):
        return bump_value(points, self.semiconcavity, self.support)

    def gradient(self, points):
        return bump_gradient(points, self.semiconcavity, self.support)

    @property
    def sup_bound(self) -> float:
        return self.semiconcavity * self.support**2 / 96.0

    @property
    def gradient_sup_bound(self) -> float:
        return self.semiconcavity * self.support / 24.0

    @property
    def gradient_lipschitz_bound(self) -> float:
        return self.semiconcavity / 2.0

    @property
    def gradient_mass(self) -> float:
        return beta(self.semiconcavity, self.support, self.dim)

    def invariants(self, samples: int = 20001) -> dict:
        """Analytic checks on a dense radial sample."""
        r = np.linspace(0.0, 1.0, samples)
        c = profile(r)
        dc = profile_derivative(r)
        radial = np.zeros((samples, self.dim))
        radial[:, 0] = r * self.support
        grads = np.linalg.norm(self.gradient(radial), axis=-1)
        dr = r[1] * self.support
        grad_lip = float(np.max(np.abs(np.diff(grads)) / dr))
        return {
            "profile_at_zero": float(c[0]),
            "vanishes_outside_half": bool(np.all(c[r >= 0.5] == 0.0)),
            "profile_sup": float(np.max(np.abs(c))),
            "profile_slope_sup": float(np.max(np.abs(dc))),
            "value_sup": float(np.max(np.abs(self.value(radial)))),
            "gradient_sup": float(np.max(grads)),
            "gradient_lipschitz": grad_lip,
        }


def build_bump(semiconcavity: float, support: float, dim: int, grid: Grid | None = None) -> BumpProfile:
    """The bump together with its samples on ``grid`` (when given)."""
    if semiconcavity <= 0 or support <= 0:
        raise ConfigurationError("bump parameters must be positive")
    bump = BumpProfile(semiconcavity, support, dim)
    if grid is not None:
        bump.b = SampledFunction.from_callable(grid, bump.value)
    return bump


# ---------------------------------------------------------------------------
# sign patterns and the family of superpositions


@dataclass(frozen=True)
class SignPattern:
    """A vector of signs, one per cube, stored in row-major cube order."""

    cells: int
    dim: int
    delta: tuple

    def __post_init__(self):
        if len(self.delta) != self.cells**self.dim:
            raise ConfigurationError("sign pattern length must be cells**dim")
        if any(d not in (-1, 1) for d in self.delta):
            raise ConfigurationError("sign pattern entries must be -1 or +1")

    @classmethod
    def from_index(cls, cells: int, dim: int, index: int) -> "SignPattern":
        """Lexicographic numbering with ``-1 < +1``: index 0 is all minus signs."""
        size = cells**dim
        bits = [(index >> (size - 1 - j)) & 1 for j in range(size)]
        return cls(cells, dim, tuple(1 if b else -1 for b in bits))

    @property
    def index(self) -> int:
        out = 0
        for d in self.delta:
            out = (out << 1) | (1 if d > 0 else 0)
        return out

    def hamming(self, other: "SignPattern") -> int:
        return sum(a != b for a, b in zip(self.delta, other.delta))

    def as_array(self) -> np.ndarray:
        return np.array(self.delta, dtype=float).reshape((self.cells,) * self.dim)


class BumpFamily:
    """Superpositions of scaled bumps, one per cube of the partition of the support cube.

    Bumps are centered at the cube midpoints ``-support + (2 i + 1) support / cells``.
    """

    def __init__(self, params: ClassParams, cells: int):
        self.params = params
        self.cells = int(cells)
        self.dim = params.dim
        self.height = params.semiconcavity
        self.width = params.support
        self.size = self.cells**self.dim

    @property
    def cell_mass(self) -> float:
        """Gradient mass of one scaled bump."""
        return beta(self.height, self.width, self.dim) / self.cells ** (self.dim + 1)

    def distance_formula(self, a: SignPattern, b: SignPattern) -> float:
        return a.hamming(b) * 2.0 * self.cell_mass

    def centers(self) -> np.ndarray:
        ticks = -self.width + (2 * np.arange(self.cells) + 1) * self.width / self.cells
        return np.stack(np.meshgrid(*([ticks] * self.dim), indexing="ij"), axis=-1)

    def _locate(self, points):
        pts = np.asarray(points, dtype=float)
        if self.dim == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
            pts = pts[..., None]
        cell_side = 2 * self.width / self.cells
        idx = np.clip(np.floor((pts + self.width) / cell_side).astype(np.int64), 0, self.cells - 1)
        center = -self.width + (2 * idx + 1) * self.width / self.cells
        inside = np.all(np.abs(pts) <= self.width, axis=-1)
        flat = np.ravel_multi_index(tuple(np.moveaxis(idx, -1, 0)), (self.cells,) * self.dim)
        return pts, center, flat, inside

    def value(self, pattern: SignPattern, points):
        pts, center, flat, inside = self._locate(points)
        signs = np.asarray(pattern.delta, dtype=float)[flat]
        local = self.cells * (pts - center)
        vals = signs * bump_value(local, self.height, self.width) / self.cells**2
        return np.where(inside, vals, 0.0)

    def gradient(self, pattern: SignPattern, points):
        pts, center, flat, inside = self._locate(points)
        signs = np.asarray(pattern.delta, dtype=float)[flat]
        local = self.cells * (pts - center)
        grads = signs[..., None] * bump_gradient(local, self.height, self.width) / self.cells
        return np.where(inside[..., None], grads, 0.0)

    def sample(self, pattern: SignPattern, grid: Grid) -> SampledFunction:
        return SampledFunction.from_callable(grid, lambda pts: self.value(pattern, pts))

    def pattern(self, index: int) -> SignPattern:
        return SignPattern.from_index(self.cells, self.dim, index)

    def members(self) -> Iterator[SignPattern]:
        """Lazily enumerate all sign patterns in lexicographic order."""
        for index in range(2**self.size):
            yield self.pattern(index)

    def random_pattern(self, rng: np.random.Generator) -> SignPattern:
        signs = rng.choice([-1, 1], size=self.size)
        return SignPattern(self.cells, self.dim, tuple(int(s) for s in signs))


def build_family(params: ClassParams, cells: int) -> BumpFamily:
    """Family of bump superpositions; every member lies in the semiconcave class when the
    partition is fine enough that slopes stay below the Lipschitz budget.

    Raises ClassMembershipError when ``cells < K L / (24 M)``.
    """
    if cells < 1:
        raise ConfigurationError("need at least one cube per axis")
    needed = params.semiconcavity * params.support / (24.0 * params.lipschitz)
    if cells < needed * (1 - _GUARD):
        raise ClassMembershipError(
            f"{cells} cubes per axis is below the slope requirement {needed:.6g}"
        )
    return BumpFamily(params, cells)


# ---------------------------------------------------------------------------
# counting


def _floor_guarded(value: float) -> int:
    return int(math.floor(value + _GUARD * max(1.0, abs(value))))


def hamming_threshold(params: ClassParams, cells: int, eps: float) -> int:
    """Largest Hamming distance whose gradient distance is within ``2 eps``."""
    mass = beta(params.semiconcavity, params.support, params.dim)
    return _floor_guarded(cells ** (params.dim + 1) * eps / mass)


def ball_size(size: int, radius: int) -> int:
    """Exact number of sign vectors within Hamming distance ``radius`` of a fixed one."""
    return sum(math.comb(size, j) for j in range(0, min(radius, size) + 1))


def hoeffding_log2_bound(size: int, radius: int) -> float:
    """``log2`` of ``2^size exp(-2 mu^2 / size)`` with ``mu = size/2 - radius``; the trivial
    bound ``size`` when ``mu <= 0``."""
    mu = size / 2.0 - radius
    if mu <= 0:
        return float(size)
    return size - 2.0 * mu * mu / (size * math.log(2.0))


@dataclass
class PackingCounts:
    cells: int
    size: int
    threshold: int
    ball: int
    hoeffding_log2: float
    eps: float
    beta: float

    @property
    def members(self) -> int:
        return 2**self.size

    @property
    def log2_ball(self) -> float:
        return math.log2(self.ball)

    @property
    def hoeffding_bound(self) -> float:
        return 2.0**self.hoeffding_log2

    @property
    def hoeffding_dominates(self) -> bool:
        return self.log2_ball <= self.hoeffding_log2 + 1e-12

    @property
    def packing_lower(self) -> Fraction:
        return Fraction(self.members, self.ball)

    @property
    def log2_packing_lower(self) -> float:
        return self.size - self.log2_ball

    @property
    def tail_probability(self) -> Fraction:
        return Fraction(self.ball, self.members)


def packing_count(params: ClassParams, cells: int, eps: float) -> PackingCounts:
    """Exact Hamming-ball size at radius ``2 eps``, its Hoeffding bound and the packing
    lower bound ``2^size / ball``.

    Raises ValidityError unless ``cells <= beta / (2 eps)``.
    """
    if eps <= 0:
        raise ValidityError("eps must be positive")
    mass = beta(params.semiconcavity, params.support, params.dim)
    if cells > mass / (2 * eps) * (1 + _GUARD):
        raise ValidityError(
            f"{cells} cubes per axis exceeds the limit beta/(2 eps) = {mass / (2 * eps):.6g}"
        )
    size = cells**params.dim
    radius = hamming_threshold(params, cells, eps)
    return PackingCounts(
        cells=cells,
        size=size,
        threshold=radius,
        ball=ball_size(size, radius),
        hoeffding_log2=hoeffding_log2_bound(size, radius),
        eps=eps,
        beta=mass,
    )


def _popcount(arr: np.ndarray) -> np.ndarray:
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(arr).astype(np.int64)
    arr = arr.astype(np.uint64)
    out = np.zeros(arr.shape, dtype=np.int64)
    while np.any(arr):
        out += (arr & 1).astype(np.int64)
        arr = arr >> 1
    return out


def hamming_masks(size: int, radius: int) -> np.ndarray:
    """All bit masks of length ``size`` with at most ``radius`` ones."""
    masks = [0]
    for weight in range(1, min(radius, size) + 1):
        for combo in itertools.combinations(range(size), weight):
            masks.append(sum(1 << b for b in combo))
    return np.array(masks, dtype=np.int64)


def greedy_packing(size: int, radius: int) -> list:
    """Lexicographic greedy maximal set of indices with pairwise Hamming distance > radius."""
    masks = hamming_masks(size, radius)
    covered = np.zeros(2**size, dtype=bool)
    chosen = []
    for index in range(2**size):
        if covered[index]:
            continue
        chosen.append(index)
        covered[index ^ masks] = True
    return chosen


@dataclass
class EmpiricalPackingReport:
    counts: PackingCounts
    exhaustive: bool
    ball_exhaustive: int | None
    greedy_size: int | None
    greedy_separated: bool | None
    pairs_checked: int
    max_relative_error: float
    metric_tol: float
    exp_bound_log: float
    greedy_log: float | None

    @property
    def ball_matches(self) -> bool:
        return self.ball_exhaustive is None or self.ball_exhaustive == self.counts.ball

    @property
    def greedy_ok(self) -> bool:
        if self.greedy_size is None:
            return True
        return Fraction(self.greedy_size) >= self.counts.packing_lower and bool(self.greedy_separated)

    @property
    def metric_ok(self) -> bool:
        return self.max_relative_error <= self.metric_tol

    @property
    def passed(self) -> bool:
        return (self.ball_matches and self.greedy_ok and self.metric_ok
                and self.counts.hoeffding_dominates)


def quadrature_grid(params: ClassParams, cells: int, per_cell: int | None = None) -> Grid:
    per_cell = (200 if params.dim == 1 else 24) if per_cell is None else per_cell
    return Grid(Box((0.0,) * params.dim, params.support), cells * per_cell + 1)


def gradient_distance_quadrature(family: BumpFamily, a: SignPattern, b: SignPattern,
                                 grid: Grid) -> float:
    """``||grad u_a - grad u_b||_L1`` from differenced samples on ``grid``."""
    diff = family.sample(a, grid) - family.sample(b, grid)
    return norm_l1_field(gradient(diff))


def empirical_packing(
    params: ClassParams,
    cells: int,
    eps: float,
    sample_size: int = 200,
    seed: int = 0,
    exhaustive_limit: int = 24,
    all_pairs_limit: int = 6,
    per_cell: int | None = None,
    metric_tol: float = 0.02,
) -> EmpiricalPackingReport:
    """Check the counting argument on an actual family.

    In exhaustive mode (``cells^N <= exhaustive_limit``) the ball around the first
    pattern is counted by brute force over all patterns, and a lexicographic greedy
    packing at radius ``2 eps`` is built and verified to be separated. Independently,
    gradient distances are measured by quadrature. This covers all pairs when there are
    at most ``2^all_pairs_limit`` members and ``sample_size`` random pairs otherwise;
    each is compared with the Hamming formula.
    """
    counts = packing_count(params, cells, eps)
    family = build_family(params, cells)
    size = counts.size
    exhaustive = size <= exhaustive_limit
    ball_ex = greedy = separated = None
    greedy_log = None
    if exhaustive:
        indices = np.arange(2**size, dtype=np.int64)
        ball_ex = int(np.sum(_popcount(indices) <= counts.threshold))
        chosen = greedy_packing(size, counts.threshold)
        greedy = len(chosen)
        greedy_log = math.log(greedy)
        pick = np.array(chosen[:4096], dtype=np.int64)
        if pick.size > 1:
            dists = _popcount(pick[:, None] ^ pick[None, :])
            np.fill_diagonal(dists, size + 1)
            separated = bool(np.all(dists > counts.threshold))
        else:
            separated = True

    grid = quadrature_grid(params, cells, per_cell)
    rng = np.random.default_rng(seed)
    if size <= all_pairs_limit:
        pairs = list(itertools.combinations(range(2**size), 2))
    else:
        pairs = [tuple(int(v) for v in rng.integers(0, 2**size, 2)) for _ in range(sample_size)]
    worst = 0.0
    samples = {}

    def sampled(index):
        if index not in samples:
            samples[index] = family.sample(family.pattern(index), grid)
        return samples[index]

    checked = 0
    for i, j in pairs:
        if i == j:
            continue
        a, b = family.pattern(i), family.pattern(j)
        formula = family.distance_formula(a, b)
        measured = norm_l1_field(gradient(sampled(i) - sampled(j)))
        worst = max(worst, abs(measured - formula) / formula)
        checked += 1
        if len(samples) > 512:
            samples.clear()
    return EmpiricalPackingReport(
        counts=counts,
        exhaustive=exhaustive,
        ball_exhaustive=ball_ex,
        greedy_size=greedy,
        greedy_separated=separated,
        pairs_checked=checked,
        max_relative_error=worst,
        metric_tol=metric_tol,
        exp_bound_log=size / 8.0,
        greedy_log=greedy_log,
    )


# ---------------------------------------------------------------------------
# constants


@dataclass
class LowerBoundConstants:
    beta: float
    beta_sc: float
    Gamma_minus: float
    Gamma_minus_via_beta_sc: float
    eps_max: float
    eps_proof: float
    eps_theorem_facing: float
    eps_reachable: float
    reach_semiconcavity: float
    dim: int

    def n_eps(self, eps: float) -> int:
        """Cubes per axis used at accuracy ``eps``: ``floor(beta / (4 eps)) + 1``."""
        return _floor_guarded(self.beta / (4.0 * eps)) + 1


def eps_bounds(params: ClassParams) -> tuple:
    """The two admissible-accuracy thresholds for the packing of the semiconcave class:
    ``min(beta/8, 6 M beta / (K L))`` and ``min(K, M) omega L^N / ((N+1) 2^(N+8))``."""
    dim = params.dim
    mass = beta(params.semiconcavity, params.support, dim)
    proof = min(mass / 8.0, 6.0 * params.lipschitz * mass / (params.semiconcavity * params.support))
    facing = (min(params.semiconcavity, params.lipschitz) * unit_ball_volume(dim)
              * params.support**dim / ((dim + 1) * 2 ** (dim + 8)))
    return proof, facing


def reach_semiconcavity(hamiltonian: HamiltonianSpec, horizon: float) -> float:
    """Largest semiconcavity constant a reachable target may have: ``1/(4 ||D^2 H(0)|| T)``."""
    return 1.0 / (4.0 * hamiltonian.d2h0_norm * horizon)


def gamma_minus_closed(support: float, d2h0_norm: float, horizon: float, dim: int) -> float:
    omega = unit_ball_volume(dim)
    return ((omega / (192.0 * (dim + 1) * d2h0_norm * horizon)) ** dim
            * (support / 4.0) ** (dim * (dim + 1)) / (8.0 * math.log(2.0)))


def gamma_minus(params: ClassParams, hamiltonian: HamiltonianSpec) -> LowerBoundConstants:
    """Lower-bound constants for the class parameters and the reachable-set constant.

    The reachable-set constant evaluates the semiconcave-class coefficient at half the
    support and at the reachable curvature ``1/(4 ||D^2 H(0)|| T)``; it is computed both
    that way and from its expanded closed form.
    """
    dim = params.dim
    horizon = params.horizon
    k_reach = reach_semiconcavity(hamiltonian, horizon)
    proof, facing = eps_bounds(params)
    d2 = hamiltonian.d2h0_norm
    reach_eps = (min(params.lipschitz, k_reach, params.support * k_reach)
                 * unit_ball_volume(dim) * params.support**dim / ((dim + 1) * 2 ** (dim + 8)))
    return LowerBoundConstants(
        beta=beta(params.semiconcavity, params.support, dim),
        beta_sc=beta_sc(params.semiconcavity, params.support, dim),
        Gamma_minus=gamma_minus_closed(params.support, d2, horizon, dim),
        Gamma_minus_via_beta_sc=beta_sc(k_reach, params.support / 2.0, dim),
        eps_max=min(proof, facing),
        eps_proof=proof,
        eps_theorem_facing=facing,
        eps_reachable=reach_eps,
        reach_semiconcavity=k_reach,
        dim=dim,
    )


def validate_eps(params: ClassParams, eps: float) -> None:
    """Raise ValidityError when ``eps`` exceeds either admissible-accuracy threshold."""
    proof, facing = eps_bounds(params)
    if eps > min(proof, facing) * (1 + _GUARD):
        raise ValidityError(
            f"eps = {eps:.6g} exceeds the admissible threshold {min(proof, facing):.6g} "
            f"(proof bound {proof:.6g}, theorem bound {facing:.6g})"
        )


# ---------------------------------------------------------------------------
# reachability


@dataclass
class ReachReport:
    residual_w11: float
    residual_tol: float
    u0_support: float
    u0_support_bound: float
    u0_lip: float
    u0_lip_bound: float
    semiconvexity: list = field(default_factory=list)
    cond5_ok: bool = True
    measured_slope: float = 0.0
    measured_curvature: float = 0.0

    @property
    def residual_ok(self) -> bool:
        return self.residual_w11 <= self.residual_tol

    @property
    def support_ok(self) -> bool:
        return self.u0_support <= self.u0_support_bound

    @property
    def lip_ok(self) -> bool:
        return self.u0_lip <= self.u0_lip_bound

    @property
    def semiconvexity_ok(self) -> bool:
        return all(measured <= bound for _, measured, bound in self.semiconvexity)

    @property
    def passed(self) -> bool:
        return (self.residual_ok and self.support_ok and self.lip_ok
                and self.semiconvexity_ok and self.cond5_ok)


def reach_conditions(psi: SampledFunction, params: ClassParams, hamiltonian: HamiltonianSpec,
                     slack_c: float = 2.0) -> tuple:
    """Evaluate the compatibility inequalities for a target; returns ``(failed, slope,
    curvature)`` where ``failed`` maps each violated inequality to its two sides."""
    spacing = psi.grid.spacing
    horizon = params.horizon
    k_reach = reach_semiconcavity(hamiltonian, horizon)
    slope = regularity.lipschitz_estimate(psi)
    curvature = regularity.sc_constant(psi)
    supp = regularity.support_radius(psi)
    slope_cap = min(hamiltonian.m0, params.lipschitz, params.support * k_reach)
    checks = {
        "K <= 1/(4|D2H(0)|T)": (params.semiconcavity, k_reach * (1 + _GUARD)),
        "sc(psi) <= K": (curvature, params.semiconcavity + slack_c * spacing),
        "Lip(psi) <= min(m0, M, L/(4|D2H(0)|T))": (slope, slope_cap * (1 + 1e-9)),
        "supp(psi) in [-L/2, L/2]^N": (supp, params.support / 2.0 + spacing * (1 + 1e-9)),
    }
    failed = {name: sides for name, sides in checks.items() if sides[0] > sides[1]}
    return failed, slope, curvature


def controllability_reach(
    psi: SampledFunction,
    params: ClassParams,
    hamiltonian: HamiltonianSpec,
    subdivisions: int = 4,
    residual_c: float = 10.0,
    slack_c: float = 2.0,
    monitor_times: int = 8,
):
    """Build initial data whose evolution to the horizon equals ``psi - T H(0)``.

    The data is obtained by running the semigroup on the reflected negative of the
    target and reflecting back. The report checks class membership of the data, the
    W^{1,1} residual of the forward evolution and the semiconvexity of the backward run
    at equispaced times against the Riccati bound ``K / (1 - a K t)``, where
    ``a = sup_{|p| <= m} ||D^2 H||``. A lattice term ``(1/(alpha t) + k0) / (4 r^2)``
    is added, with ``r`` the number of subdivisions and ``k0`` the measured upper
    curvature of the reflected target.

    Raises ReachabilityConditionError listing the violated inequalities.
    """
    grid = psi.grid
    spacing = grid.spacing
    horizon = params.horizon
    failed, slope, curvature = reach_conditions(psi, params, hamiltonian, slack_c)
    if failed:
        detail = "; ".join(f"{k}: {a:.6g} > {b:.6g}" for k, (a, b) in failed.items())
        raise ReachabilityConditionError(f"target is not reachable: {detail}", failed)
    hess_cap = hamiltonian.sup_hess(slope)
    k_target = params.semiconcavity
    cond5_ok = k_target <= 1.0 / (2.0 * hess_cap * horizon) * (1 + _GUARD)

    w0 = -psi.reflect()
    run_slope = max(slope, 1e-12)
    upper_curv = max(regularity.semiconvexity_constant(psi), 0.0)
    monitor = []
    forward = None
    for j in range(1, monitor_times + 1):
        time = horizon * j / monitor_times
        sol = hopf_lax(w0, hamiltonian, time, lipschitz=run_slope, subdivisions=subdivisions).u
        measured = regularity.semiconvexity_constant(sol)
        riccati = k_target / (1.0 - hess_cap * k_target * time)
        lattice = (1.0 / (hamiltonian.alpha * time) + upper_curv) / (4.0 * subdivisions**2)
        monitor.append((time, measured, riccati + lattice + slack_c * spacing))
        if j == monitor_times:
            forward = sol
    shifted = forward + horizon * hamiltonian.h0
    u0 = -shifted.reflect()

    u0_slope = regularity.lipschitz_estimate(u0)
    evolved = hopf_lax(u0, hamiltonian, horizon, lipschitz=max(u0_slope, 1e-12),
                       subdivisions=subdivisions).u
    residual = norm_w11(evolved + horizon * hamiltonian.h0 - psi)
    report = ReachReport(
        residual_w11=residual,
        residual_tol=residual_c * spacing,
        u0_support=regularity.support_radius(u0),
        u0_support_bound=params.support + slack_c * spacing,
        u0_lip=u0_slope,
        u0_lip_bound=params.lipschitz + slack_c * spacing,
        semiconvexity=monitor,
        cond5_ok=cond5_ok,
        measured_slope=slope,
        measured_curvature=curvature,
    )
    return u0, report


def admissible_reach_params(hamiltonian: HamiltonianSpec, support: float, horizon: float,
                            lipschitz: float | None = None) -> ClassParams:
    """Class parameters at the reachable curvature, with the largest admissible target slope
    when ``lipschitz`` is omitted."""
    k_reach = reach_semiconcavity(hamiltonian, horizon)
    cap = min(hamiltonian.m0, support * k_reach)
    lip = cap if lipschitz is None else lipschitz
    return ClassParams(support=support, lipschitz=lip, semiconcavity=k_reach, variation=1.0,
                       horizon=horizon, dim=hamiltonian.dim)


def target_family(params: ClassParams, cells: int) -> BumpFamily:
    """Bump superpositions supported in half the support cube, used as reachable targets."""
    half = params.with_(support=params.support / 2.0)
    return build_family(half, cells)
