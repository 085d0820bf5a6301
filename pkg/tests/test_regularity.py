import numpy as np
import pytest

from hjentropy import families, regularity
from hjentropy.core import Box, ClassParams, Grid, SampledFunction, SampledVectorField, gradient, quadratic
from hjentropy.entropy_lower import build_bump
from hjentropy.entropy_upper import lifted_variation
from hjentropy.errors import ClassMembershipError, NotSemiconcaveError
from hjentropy.semigroup import hopf_lax


def sampled(points, fn, half_width=1.0, dim=1):
    return SampledFunction.from_callable(Grid.centered(half_width, points, dim), fn)


def test_zero_function_report():
    rep = regularity.estimate_regularity(sampled(21, lambda x: 0 * x[..., 0]))
    assert rep.lip == 0 and rep.sc_constant == 0 and rep.tv == 0 and rep.support_radius == 0


def test_concave_quadratic_signed_constant():
    f = sampled(201, lambda x: -0.5 * x[..., 0] ** 2)
    assert regularity.sc_constant(f) == pytest.approx(-1.0, abs=1e-9)
    second = regularity.second_differences(f)[0]
    np.testing.assert_allclose(second, -f.grid.spacing**2, atol=1e-15)
    assert regularity.lipschitz_estimate(f) == pytest.approx(1.0, abs=f.grid.spacing)


def test_semiconvexity_is_mirror():
    f = sampled(101, lambda x: x[..., 0] ** 2)
    assert regularity.semiconvexity_constant(f) == pytest.approx(-2.0, abs=1e-9)
    assert regularity.sc_constant(f) == pytest.approx(2.0, abs=1e-9)


def test_bump_semiconcavity_within_budget():
    grid = Grid.centered(1.0, 401)
    bump = build_bump(1.0, 1.0, 1, grid).b
    assert regularity.sc_constant(bump) <= 1.0 + 2 * grid.spacing


def test_support_radius_of_hat():
    f = sampled(81, families.hat, half_width=2.0)
    assert regularity.support_radius(f) == pytest.approx(1.0, abs=f.grid.spacing)


def test_total_variation_of_linear_field():
    grid = Grid.centered(1.0, 51)
    field = SampledVectorField(grid, -grid.nodes())
    assert regularity.total_variation(field) == pytest.approx(2.0)


def test_total_variation_two_dimensional():
    grid = Grid.centered(1.0, 21, dim=2)
    # F(x, y) = (-x, 0): variation of the first component along axis 0 over each row
    values = np.zeros(grid.shape + (2,))
    values[..., 0] = -grid.nodes()[..., 0]
    tv = regularity.total_variation(SampledVectorField(grid, values))
    assert tv == pytest.approx(2.0 * 21 * grid.spacing)


def test_monotone_field_of_zero_is_minus_x():
    f = sampled(11, lambda x: 0 * x[..., 0])
    field = regularity.monotone_field(f, 1.0)
    np.testing.assert_allclose(field.values, -f.grid.nodes())


def test_monotone_field_rejects_convex_data():
    f = sampled(101, lambda x: x[..., 0] ** 2)
    with pytest.raises(NotSemiconcaveError):
        regularity.monotone_field(f, 1.0)


def test_minus_identity_is_monotone_decreasing():
    grid = Grid.centered(1.0, 31, dim=2)
    rep = regularity.check_monotone_decreasing(SampledVectorField(grid, -grid.nodes()))
    assert rep.passed and rep.exhaustive and rep.max_pairing <= 0


def test_identity_fails_with_certificate():
    grid = Grid.centered(1.0, 31)
    rep = regularity.check_monotone_decreasing(SampledVectorField(grid, grid.nodes()))
    assert not rep.passed
    a, b = rep.certificate
    x = grid.nodes().reshape(-1, 1)
    assert float((x[b] - x[a]) @ (x[b] - x[a])) > 0


def test_random_pair_mode_on_large_grid():
    grid = Grid.centered(1.0, 121, dim=2)
    values = -grid.nodes().copy()
    values[60, 60, 0] += 0.5  # a local bump breaks monotonicity along axis 0
    rep = regularity.check_monotone_decreasing(SampledVectorField(grid, values))
    assert not rep.exhaustive and not rep.passed


def test_bump_field_passes_random_pairs():
    grid = Grid.centered(1.0, 201)
    bump = build_bump(1.0, 1.0, 1, grid).b
    field = regularity.monotone_field(bump, 1.0)
    rep = regularity.check_monotone_decreasing(field, tol=2 * grid.spacing)
    assert rep.passed


def test_monotone_field_of_solved_bump():
    grid = Grid.centered(2.0, 201)
    bump = build_bump(1.0, 1.0, 1, grid).b
    t = 1.0
    u = hopf_lax(bump, quadratic(1), t, lipschitz=1 / 24).u
    values = gradient(u).values - grid.nodes() / t
    rep = regularity.check_monotone_decreasing(SampledVectorField(grid, values), tol=2 * grid.spacing)
    assert rep.passed


def test_bump_variation_below_lifted_constant():
    grid = Grid.centered(1.0, 401)
    bump = build_bump(1.0, 1.0, 1, grid).b
    tv = regularity.total_variation(gradient(bump))
    assert tv <= lifted_variation(ClassParams())


def test_poincare_hat_exact_integrals():
    f = sampled(201, families.hat)
    rep = regularity.check_poincare(f, zero_trace=True)
    spacing = f.grid.spacing
    # the central difference at the kink reads zero, costing one cell of slope mass
    assert rep.zero_trace_lhs == pytest.approx(1.0, abs=spacing)
    assert rep.zero_trace_rhs == pytest.approx(4.0, abs=4 * spacing)
    assert rep.passed


def test_poincare_zero_function():
    rep = regularity.check_poincare(sampled(21, lambda x: 0 * x[..., 0]))
    assert rep.zero_trace_lhs == 0 and rep.mean_lhs == 0 and rep.passed


def test_poincare_requires_zero_trace_when_asked():
    f = sampled(41, lambda x: 1 + x[..., 0])
    with pytest.raises(ClassMembershipError):
        regularity.check_poincare(f, zero_trace=True)
    assert regularity.check_poincare(f).zero_trace_lhs is None


def test_poincare_mean_subtracted_bump_gradient():
    grid = Grid.centered(1.0, 401)
    field = gradient(build_bump(1.0, 1.0, 1, grid).b)
    rep = regularity.check_poincare(field)
    assert rep.passed


def test_poincare_on_sub_box():
    f = sampled(201, families.hat, half_width=2.0)
    rep = regularity.check_poincare(f, domain=Box((0.0,), 1.0), zero_trace=True)
    assert rep.passed


@pytest.mark.parametrize("seed", range(5))
def test_poincare_on_generated_members(seed):
    rng = np.random.default_rng(seed)
    params = ClassParams(dim=2)
    grid = Grid.centered(1.0, 101, dim=2)
    for member in (families.random_lipschitz_member(params, grid, rng),
                   families.random_semiconcave_member(params, grid, rng)):
        assert regularity.check_poincare(member, zero_trace=True).passed
    assert regularity.check_poincare(families.random_monotone_field(params, grid, rng)).passed


def test_generated_semiconcave_members_fit_their_budgets():
    params = ClassParams(semiconcavity=0.5, lipschitz=0.8)
    grid = Grid.centered(1.0, 201)
    rng = np.random.default_rng(11)
    for _ in range(10):
        u = families.random_semiconcave_member(params, grid, rng)
        assert regularity.lipschitz_estimate(u) <= params.lipschitz
        assert regularity.sc_constant(u) <= params.semiconcavity
        field = regularity.monotone_field(u, params.semiconcavity)
        assert regularity.check_monotone_decreasing(field, tol=1e-12).passed
