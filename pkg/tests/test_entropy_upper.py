import itertools
import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from hjentropy import entropy_upper as eu
from hjentropy import families, regularity
from hjentropy.core import ClassParams, Grid, SampledFunction, SampledVectorField, quadratic
from hjentropy.errors import (
    ClassMembershipError,
    ConfigurationError,
    MonotonicityError,
    NotSemiconcaveError,
    ValidityError,
)


def field_from(grid, fn):
    return SampledVectorField(grid, fn(grid.nodes()))


def cube_slices(grid, cells):
    per = (grid.points - 1) // cells
    return [slice(k * per, (k + 1) * per + 1) for k in range(cells)]


def averages_oracle_1d(field, cells, support):
    """Per-cube trapezoid rule over the nodes of the closed cube."""
    x = field.grid.axis(0)
    side = 2 * support / cells
    return np.array([trapezoid(field.values[s, 0], x[s]) / side for s in cube_slices(field.grid, cells)])


def distance_oracle_1d(field, cells, values):
    x = field.grid.axis(0)
    return sum(trapezoid(np.abs(field.values[s, 0] - v), x[s])
               for s, v in zip(cube_slices(field.grid, cells), values))


def distance_oracle_2d(field, cells, values):
    x = field.grid.axis(0)
    slices = cube_slices(field.grid, cells)
    total = 0.0
    for i, j in itertools.product(range(cells), repeat=2):
        block = field.values[slices[i], slices[j]]
        gap = np.linalg.norm(block - values[i, j], axis=-1)
        total += trapezoid(trapezoid(gap, x[slices[j]], axis=1), x[slices[i]])
    return total


# ---------------------------------------------------------------------------
# constants


def test_gamma1_reference():
    assert eu.gamma1(ClassParams()) == 3.0


def test_lifted_slope_reference():
    assert eu.lifted_slope(ClassParams()) == 2.0


def test_gamma_plus_reference_and_second_route():
    consts = eu.gamma_plus(ClassParams(), quadratic(1))
    assert consts.propagated_support == 2.0
    assert consts.Gamma_plus == pytest.approx(663552, rel=1e-14)
    assert consts.Gamma_plus == pytest.approx(2 * 24**4, rel=1e-14)
    assert consts.Gamma_plus_via_gamma_sc == pytest.approx(consts.Gamma_plus, rel=1e-14)


def test_gamma_proof_and_display_reported_side_by_side():
    consts = eu.gamma_plus(ClassParams(), quadratic(1))
    assert consts.gamma == 2 * (2 * 3.0)
    assert consts.gamma_display == pytest.approx(2**3 * 1 * 2.0)


def _gamma_plus_at(**changes):
    return eu.gamma_plus(ClassParams().with_(**changes), quadratic(1)).Gamma_plus


@pytest.mark.parametrize("name", ["support", "lipschitz"])
def test_gamma_plus_increases_in_width_and_slope(name):
    values = [_gamma_plus_at(**{name: v}) for v in np.linspace(0.2, 4.0, 40)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_gamma_plus_in_horizon_has_single_minimum():
    # the curvature factor 1/(alpha T) + 1 falls while the reach L + T sup|grad H| grows,
    # so the product decreases until T = sqrt(L / (alpha sup|grad H|)) and increases after
    support, slope = 1.0, 0.25
    turn = math.sqrt(support / slope)
    before = [_gamma_plus_at(lipschitz=slope, horizon=t) for t in np.linspace(0.1, turn, 30)]
    after = [_gamma_plus_at(lipschitz=slope, horizon=t) for t in np.linspace(turn, 4 * turn, 30)]
    assert all(b < a for a, b in zip(before, before[1:]))
    assert all(b > a for a, b in zip(after, after[1:]))


# ---------------------------------------------------------------------------
# quantization


def test_zero_field_snaps_to_quarter():
    params = ClassParams()
    grid = Grid.centered(1.0, 41)
    q = eu.quantize_monotone(field_from(grid, np.zeros_like), params, 4)
    np.testing.assert_array_equal(q.values[:, 0], 0.25)


def test_linear_field_two_cells():
    params = ClassParams()
    grid = Grid.centered(1.0, 41)
    q = eu.quantize_monotone(field_from(grid, lambda x: -x), params, 2)
    np.testing.assert_allclose(q.averages[:, 0], [0.5, -0.5], atol=1e-14)
    np.testing.assert_array_equal(q.values[:, 0], [0.5, -0.5])


def test_bin_edges_half_open_top_closed():
    idx = eu.bin_index(np.array([-1.0, -0.5, -1e-15, 0.0, 0.5, 1.0]), 1.0, 4)
    np.testing.assert_array_equal(idx, [0, 1, 1, 2, 3, 3])
    np.testing.assert_allclose(eu.bin_midpoints(1.0, 4), [-0.75, -0.25, 0.25, 0.75])


def test_cell_averages_match_trapezoid_oracle():
    params = ClassParams()
    rng = np.random.default_rng(4)
    for cells in (3, 7):
        grid = Grid.centered(1.0, cells * 20 + 1)
        field = families.random_monotone_field(params, grid, rng)
        q = eu.quantize_monotone(field, params, cells)
        np.testing.assert_allclose(q.averages[:, 0], averages_oracle_1d(field, cells, 1.0),
                                   atol=1e-13)


def test_distance_matches_trapezoid_oracle_1d():
    params = ClassParams()
    plan = eu.build_cover_monotone(params, 0.5)
    rng = np.random.default_rng(5)
    grid = plan.aligned_grid(16)
    for _ in range(5):
        field = families.random_monotone_field(params, grid, rng)
        result = plan.assign(field)
        oracle = distance_oracle_1d(field, plan.cells, result.quantized.values[:, 0])
        assert result.distance == pytest.approx(oracle, rel=1e-12)


def test_distance_matches_trapezoid_oracle_2d():
    params = ClassParams(dim=2)
    plan = eu.build_cover_monotone(params, 1.0)
    rng = np.random.default_rng(6)
    grid = plan.aligned_grid(4)
    field = families.random_monotone_field(params, grid, rng)
    result = plan.assign(field)
    oracle = distance_oracle_2d(field, plan.cells, result.quantized.values)
    assert result.distance == pytest.approx(oracle, rel=1e-12)


def test_misaligned_grid_is_rejected():
    params = ClassParams()
    with pytest.raises(ConfigurationError):
        eu.quantize_monotone(field_from(Grid.centered(1.0, 40), np.zeros_like), params, 4)


def test_increasing_field_rejected_by_membership_check():
    params = ClassParams()
    grid = Grid.centered(1.0, 41)
    with pytest.raises(ClassMembershipError):
        eu.quantize_monotone(field_from(grid, lambda x: 0.5 * x), params, 4)


def test_increasing_field_trips_axis_assertion_when_unchecked():
    params = ClassParams()
    grid = Grid.centered(1.0, 41)
    with pytest.raises(MonotonicityError) as info:
        eu.quantize_monotone(field_from(grid, lambda x: 0.9 * x), params, 4, check=False)
    assert (info.value.cell_a, info.value.cell_b, info.value.component) == ((0,), (1,), 0)


def test_field_outside_value_box_rejected():
    params = ClassParams(lipschitz=0.5)
    grid = Grid.centered(1.0, 41)
    with pytest.raises(ClassMembershipError):
        eu.quantize_monotone(field_from(grid, lambda x: -x), params, 4)


def test_quantized_outputs_axis_monotone_in_two_dimensions():
    params = ClassParams(dim=2)
    rng = np.random.default_rng(8)
    grid = Grid.centered(1.0, 4 * 5 + 1, dim=2)
    for _ in range(10):
        q = eu.quantize_monotone(families.random_monotone_field(params, grid, rng), params, 5)
        assert q.axis_monotone_violation() is None


def test_codec_round_trip():
    params = ClassParams(dim=2)
    plan = eu.build_cover_monotone(params, 1.0)
    grid = plan.aligned_grid(4)
    field = families.random_monotone_field(params, grid, np.random.default_rng(9))
    q = plan.assign(field).quantized
    back = plan.decode(plan.encode(q))
    np.testing.assert_array_equal(back.bins, q.bins)
    np.testing.assert_array_equal(back.values, q.values)
    with pytest.raises(ConfigurationError):
        plan.decode(b"\x00\x00")


def test_eval_piecewise_constant():
    params = ClassParams()
    grid = Grid.centered(1.0, 41)
    q = eu.quantize_monotone(field_from(grid, lambda x: -x), params, 2)
    np.testing.assert_array_equal(q.eval(np.array([[-0.7], [-0.01], [0.01], [1.0]]))[:, 0],
                                  [0.5, 0.5, -0.5, -0.5])


# ---------------------------------------------------------------------------
# cover plans


def test_plan_reference_values():
    plan = eu.build_cover_monotone(ClassParams(), 0.5)
    assert plan.cells == 7
    assert plan.log2_count_bound == 14
    assert plan.radius == pytest.approx(3 / 7)
    assert plan.radius <= 0.5


def test_plan_rejects_coarse_accuracy():
    with pytest.raises(ValidityError):
        eu.build_cover_monotone(ClassParams(), 0.7)
    with pytest.raises(ValidityError):
        eu.build_cover_monotone(ClassParams(), 0.0)
    eu.build_cover_monotone(ClassParams(), 0.6)


@pytest.mark.parametrize("eps", [0.5, 0.25])
def test_cover_validity_one_dimension(eps):
    params = ClassParams()
    plan = eu.build_cover_monotone(params, eps)
    gen = lambda grid, rng: families.random_monotone_field(params, grid, rng)
    summary = eu.validate_cover(plan, gen, members=100, seed=11)
    assert summary["all_inside"]
    assert summary["max_distance"] <= eps
    assert math.log2(summary["distinct"]) <= summary["log2_count_bound"]


def test_cover_validity_two_dimensions():
    params = ClassParams(dim=2)
    plan = eu.build_cover_monotone(params, 1.0)
    gen = lambda grid, rng: families.random_monotone_field(params, grid, rng)
    summary = eu.validate_cover(plan, gen, members=100, seed=12, per_cell=3)
    assert summary["all_inside"] and summary["max_distance"] <= 1.0


def test_lifted_zero_member_is_deterministic():
    params = ClassParams()
    plan = eu.lift_cover_semiconcave(params, 0.5)
    grid = plan.aligned_grid()
    zero = SampledFunction(grid, np.zeros(grid.shape))
    first, second = plan.assign(zero), plan.assign(zero)
    assert first.center_hash == second.center_hash
    assert first.inner.inside
    cert = plan.certificate(zero, zero)
    assert cert["w11_distance"] == 0 and cert["holds"]


def test_lifted_plan_parameters():
    params = ClassParams()
    plan = eu.lift_cover_semiconcave(params, 0.5)
    assert plan.inner.params.lipschitz == 2.0
    assert plan.inner_eps == pytest.approx(0.5 / 3)
    assert plan.log2_count_bound == pytest.approx(eu.gamma_sc(1, 1, 1, 1) / 0.5)


def test_lifted_cover_and_twin_certificate():
    params = ClassParams()
    plan = eu.lift_cover_semiconcave(params, 0.5)
    grid = plan.aligned_grid(max(2, -(-800 // plan.inner.cells)))
    rng = np.random.default_rng(13)
    for _ in range(20):
        u = families.random_semiconcave_member(params, grid, rng)
        other = families.random_semiconcave_member(params, grid, rng)
        assert plan.assign(u).inner.inside
        cert = plan.certificate(u, other)
        assert cert["holds"]
        gap = cert["gradient_distance"]
        weight = min(1.0, 0.99 * plan.inner_eps / gap) if gap > 0 else 1.0
        twin_cert = plan.certificate(u, u * (1 - weight) + other * weight)
        assert twin_cert["premise"] and twin_cert["holds"]


def test_lifting_rejects_convex_data():
    params = ClassParams()
    plan = eu.lift_cover_semiconcave(params, 0.5)
    grid = plan.aligned_grid()
    convex = SampledFunction.from_callable(grid, lambda x: 2.0 * x[..., 0] ** 2)
    with pytest.raises(NotSemiconcaveError):
        plan.assign(convex)


# ---------------------------------------------------------------------------
# counting


@pytest.mark.parametrize("cells", range(1, 8))
def test_monotone_tuples_brute_force_matches_binomial(cells):
    assert eu.count_monotone_tuples(cells) == eu.monotone_tuples_formula(cells)


@pytest.mark.parametrize("cells", [6, 7, 8])
def test_monotone_tuples_below_central_binomial(cells):
    count = eu.monotone_tuples_formula(cells)
    assert count <= math.comb(2 * cells, cells) <= 2 ** (2 * cells)


@pytest.mark.parametrize("cells", [1, 2, 3])
def test_quantized_family_enumeration_one_dimension(cells):
    assert eu.count_quantized_fields(cells, 1) == eu.quantized_count_bound(cells, 1)


def test_quantized_family_enumeration_two_dimensions():
    count = eu.count_quantized_fields(2, 2)
    assert count == 81
    assert count <= eu.quantized_count_bound(2, 2) <= 2 ** (2 * 2 * 2**2)


def test_distinct_quantizations_bounded():
    params = ClassParams()
    plan = eu.build_cover_monotone(params, 0.5)
    rng = np.random.default_rng(14)
    grid = plan.aligned_grid()
    fields = [families.random_monotone_field(params, grid, rng) for _ in range(50)]
    distinct = eu.distinct_quantizations(plan, fields)
    assert 1 < distinct <= eu.quantized_count_bound(plan.cells, 1) <= 2**plan.log2_count_bound


def test_generated_fields_are_monotone_members():
    params = ClassParams()
    grid = Grid.centered(1.0, 201)
    rng = np.random.default_rng(15)
    for _ in range(10):
        field = families.random_monotone_field(params, grid, rng)
        assert np.max(np.abs(field.values)) < params.lipschitz
        assert regularity.total_variation(field) <= params.variation
        assert regularity.check_monotone_decreasing(field, tol=1e-12).passed
