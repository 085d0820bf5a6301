"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line with the measured quantities; the lines
are gathered in the terminal summary (see ``conftest.py``). Running this file directly
with ``python tests/test_acceptance.py`` prints the same lines without pytest.
"""

from __future__ import annotations

import math
import time

import numpy as np
from scipy.integrate import quad

from hjentropy import entropy_lower as lower
from hjentropy import entropy_upper as upper
from hjentropy import families
from hjentropy.core import (
    ClassParams,
    Grid,
    gradient,
    make_hamiltonian,
    norm_l1_field,
    quadratic,
)
from hjentropy.legendre import biconjugate, conjugate, conjugate_function, verify_conjugate_identities
from hjentropy.semigroup import verify_provv, verify_semigroup_law

RESULTS: list[str] = []


def record(number: int, title: str, ok: bool, elapsed: float, limit: float, detail: str) -> None:
    within = elapsed < limit
    status = "PASS" if ok and within else "FAIL"
    line = f"{status} criterion {number} {title}: {detail}; runtime {elapsed:.2f}s (limit {limit:g}s)"
    RESULTS.append(line)
    print(line)
    assert ok, line
    assert within, line


def timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


# ---------------------------------------------------------------------------


def test_criterion_1_legendre_identities():
    def work():
        worst = {"grad": 0.0, "bic": 0.0, "hess_excess": -math.inf}
        for name in ("quadratic", "quartic"):
            ham = make_hamiltonian(name, 1)
            q_grid = Grid.centered(2.0, 201)
            star = conjugate_function(ham)
            reach = 1.25 * float(np.max(np.abs(star.grad(np.array([[-2.0], [2.0]]))))) + 0.5
            res = conjugate(ham, q_grid, Grid.centered(reach, 403))
            ident = verify_conjugate_identities(ham, res, tol=1e-6)
            p_grid = Grid.centered(1.0, 201)
            back = biconjugate(ham, p_grid, Grid.centered(3.0, 403))
            bic = float(np.max(np.abs(back.hstar.values - ham.eval(p_grid.nodes()))))
            worst["grad"] = max(worst["grad"], ident.grad_residual)
            worst["bic"] = max(worst["bic"], bic)
            worst["hess_excess"] = max(worst["hess_excess"], ident.hess_max_eig - 1 / ham.alpha)
        return worst

    worst, elapsed = timed(work)
    ok = worst["grad"] <= 1e-6 and worst["bic"] <= 1e-6 and worst["hess_excess"] <= 1e-3
    record(1, "Legendre identities", ok, elapsed, 5,
           f"max gradient residual {worst['grad']:.2e} (<= 1e-6), biconjugation "
           f"{worst['bic']:.2e} (<= 1e-6), Hessian excess over 1/alpha "
           f"{worst['hess_excess']:.2e} (<= 1e-3)")


def test_criterion_2_semigroup_law():
    def work():
        out = {}
        for name in ("hat", "bump"):
            errors, tol_ok = [], True
            for points in (81, 161, 321):
                grid = Grid.centered(2.0, points)
                u0 = families.preset(name, grid)
                rep = verify_semigroup_law(u0, quadratic(1), 0.25, 0.25)
                tol_ok &= rep.discrepancy <= 5 * grid.spacing * grid.box.volume
                errors.append(rep.discrepancy)
            ratios = [a / b for a, b in zip(errors, errors[1:])]
            out[name] = (tol_ok, ratios)
        return out

    out, elapsed = timed(work)
    ok = all(t and min(r) >= 1.8 for t, r in out.values())
    detail = ", ".join(f"{k} within 5 h Vol={t}, refinement ratios "
                       + "/".join(f"{x:.2f}" for x in r) for k, (t, r) in out.items())
    record(2, "semigroup law", ok, elapsed, 30, detail + " (ratios >= 1.8)")


def test_criterion_3_solution_regularity():
    params = ClassParams()
    ham = quadratic(1)

    def work():
        grid = Grid.centered(3.0, 301)
        worst = [0.0, 0.0, 0.0]
        tested = True
        for seed in range(10):
            u0 = families.random_lipschitz_member(params, grid, np.random.default_rng(seed))
            rep = verify_provv(u0, ham, 1.0, params)
            worst[0] = max(worst[0], rep.sc_measured / (1.1 / (ham.alpha * 1.0)))
            worst[1] = max(worst[1], rep.lip_measured - (params.lipschitz + 2 * grid.spacing))
            worst[2] = max(worst[2], rep.outside_max / (5 * grid.spacing * params.lipschitz))
            tested &= rep.support_tested and rep.support_radius == 2.0
        return worst, tested

    (worst, tested), elapsed = timed(work)
    ok = worst[0] <= 1 and worst[1] <= 0 and worst[2] <= 1 and tested
    record(3, "solution regularity", ok, elapsed, 60,
           f"semiconcavity / (1.1/(alpha T)) {worst[0]:.3f} (<= 1), Lip excess over M+2h "
           f"{worst[1]:.2e} (<= 0), outside [-2,2] deviation / 5hM {worst[2]:.2e} (<= 1)")


def test_criterion_4_cover_validity():
    params = ClassParams()

    def work():
        info = []
        gen = lambda grid, rng: families.random_monotone_field(params, grid, rng)
        ok = upper.gamma1(params) == 3.0
        for index, eps in enumerate((0.5, 0.25)):
            plan = upper.build_cover_monotone(params, eps)
            summary = upper.validate_cover(plan, gen, members=100, seed=100 + index,
                                           per_cell=max(2, 800 // plan.cells))
            bound = 3.0 / plan.cells
            inside = summary["max_distance"] <= bound
            counted = math.log2(summary["distinct"]) <= 2 * plan.cells
            lifted = upper.lift_cover_semiconcave(params, eps)
            grid = lifted.aligned_grid(max(2, -(-800 // lifted.inner.cells)))
            rng = np.random.default_rng(200 + index)
            lifted_ok = True
            worst_w11 = 0.0
            for _ in range(100):
                u = families.random_semiconcave_member(params, grid, rng)
                other = families.random_semiconcave_member(params, grid, rng)
                lifted_ok &= lifted.assign(u).inner.inside
                gap = norm_l1_field(gradient(u) - gradient(other))
                weight = min(1.0, 0.99 * lifted.inner_eps / gap) if gap > 0 else 1.0
                cert = lifted.certificate(u, u * (1 - weight) + other * weight)
                lifted_ok &= cert["premise"] and cert["holds"]
                worst_w11 = max(worst_w11, cert["w11_distance"] / eps)
            ok &= inside and counted and lifted_ok
            info.append(f"eps={eps}: n={plan.cells} max distance {summary['max_distance']:.4f} "
                        f"(<= 3/n={bound:.4f}), distinct {summary['distinct']} (<= 2^{2 * plan.cells}), "
                        f"lifted W11/eps max {worst_w11:.3f} (<= 1)")
        return ok, info

    (ok, info), elapsed = timed(work)
    record(4, "cover validity", ok, elapsed, 120, "; ".join(info))


def test_criterion_5_packing_combinatorics():
    def work():
        runs, ok = 0, True
        for dim, cells_list in ((1, range(2, 17)), (2, (2, 3, 4))):
            params = ClassParams(dim=dim)
            mass = lower.beta(1.0, 1.0, dim)
            for cells in cells_list:
                if cells**dim > 16:
                    continue
                for fraction in (0.1, 0.25, 0.5):
                    eps = fraction * mass / cells
                    rep = lower.empirical_packing(params, cells, eps, sample_size=4,
                                                  exhaustive_limit=16, all_pairs_limit=0)
                    ok &= rep.exhaustive and rep.ball_matches and rep.greedy_ok
                    ok &= rep.counts.hoeffding_dominates
                    runs += 1
        return ok, runs

    (ok, runs), elapsed = timed(work)
    record(5, "packing combinatorics", ok, elapsed, 60,
           f"{runs} exhaustive runs with n^N <= 16: brute-force ball equals binomial sum, "
           f"Hoeffding dominates, greedy >= 2^(n^N)/C_n in all = {ok}")


def test_criterion_6_bump_metric_law():
    def work():
        params = ClassParams()
        mass = lower.beta(1.0, 1.0, 1)
        worst = 0.0
        pairs = 0
        for cells in (2, 3):
            rep = lower.empirical_packing(params, cells, mass / (4 * cells), all_pairs_limit=6)
            worst = max(worst, rep.max_relative_error)
            pairs += rep.pairs_checked
        bump = lower.build_bump(1.0, 1.0, 1, Grid.centered(1.0, 2001))
        sampled = norm_l1_field(gradient(bump.b))
        radial = quad(lambda r: abs(lower.profile_derivative(r)) / 6, 0, 0.5, points=[0.25])[0]
        return worst, pairs, sampled, 2 * radial

    (worst, pairs, sampled, oracle), elapsed = timed(work)
    expected_pairs = math.comb(4, 2) + math.comb(8, 2)
    beta_err = abs(sampled - 1 / 48) * 48
    ok = worst <= 0.02 and pairs == expected_pairs and beta_err <= 0.02
    ok &= abs(oracle - 1 / 48) <= 1e-12
    record(6, "bump metric law", ok, elapsed, 30,
           f"{pairs} pairs, max relative error {worst:.2e} (<= 0.02); sampled beta "
           f"{sampled:.6f} vs 1/48 relative error {beta_err:.2e} (<= 0.02)")


def test_criterion_7_controllability():
    ham = quadratic(1)
    params = lower.admissible_reach_params(ham, 1.0, 1.0)

    def targets(grid):
        out = [lower.build_bump(params.semiconcavity, params.support, 1, grid).b]
        rng = np.random.default_rng(7)
        chosen = {2: rng.permutation(4)[:2], 3: rng.permutation(8)[:2]}
        for cells in (2, 3):
            family = lower.target_family(params, cells)
            out += [family.sample(family.pattern(int(k)), grid) for k in chosen[cells]]
        return out

    def work():
        coarse, fine = Grid.centered(2.0, 801), Grid.centered(2.0, 1601)
        ok, ratios, worst = True, [], 0.0
        for psi_c, psi_f in zip(targets(coarse), targets(fine)):
            _, rep_c = lower.controllability_reach(psi_c, params, ham)
            _, rep_f = lower.controllability_reach(psi_f, params, ham)
            ok &= rep_c.residual_w11 <= 10 * coarse.spacing
            ok &= rep_c.u0_support <= params.support
            ok &= rep_c.u0_lip <= params.lipschitz + 2 * coarse.spacing
            worst = max(worst, rep_c.residual_w11 / (10 * coarse.spacing))
            ratios.append(rep_c.residual_w11 / rep_f.residual_w11)
        return ok and min(ratios) >= 1.8, ratios, worst

    (ok, ratios, worst), elapsed = timed(work)
    record(7, "controllability", ok, elapsed, 120,
           f"5 targets, residual / 10h max {worst:.2e} (<= 1), refinement ratios "
           + "/".join(f"{r:.2f}" for r in ratios) + " (>= 1.8)")


def test_criterion_8_constant_ordering():
    def work():
        rng = np.random.default_rng(8)
        ordered = 0
        for _ in range(100):
            dim = int(rng.integers(1, 3))
            params = ClassParams(support=rng.uniform(0.1, 4), lipschitz=rng.uniform(0.1, 4),
                                 semiconcavity=rng.uniform(0.1, 4), variation=rng.uniform(0.1, 4),
                                 horizon=rng.uniform(0.1, 4), dim=dim)
            ham = quadratic(dim, scale=rng.uniform(0.5, 2))
            ordered += lower.gamma_minus(params, ham).Gamma_minus <= upper.gamma_plus(params, ham).Gamma_plus
        g_minus = lower.gamma_minus(ClassParams(support=4.0), quadratic(1)).Gamma_minus
        g_plus = upper.gamma_plus(ClassParams(), quadratic(1)).Gamma_plus
        return ordered, g_minus, g_plus

    (ordered, g_minus, g_plus), elapsed = timed(work)
    expected_minus = 1 / (8 * math.log(2) * 192)
    ok = (ordered == 100 and abs(g_minus - expected_minus) <= 1e-15
          and round(g_minus, 6) == 9.39e-4 and g_plus == 663552)
    record(8, "constant ordering", ok, elapsed, 1,
           f"Gamma- <= Gamma+ on {ordered}/100 sweep points, Gamma-(1,4,1,1) = {g_minus:.6e}, "
           f"Gamma+(1,1,1,1,1) = {g_plus:.10g}")


def test_criterion_9_scaling():
    ham = quadratic(1)
    full = lower.admissible_reach_params(ham, 1.0, 1.0)
    pack = full.with_(support=full.support / 2)
    mass = lower.beta(pack.semiconcavity, pack.support, 1)
    g_minus = lower.gamma_minus(full, ham).Gamma_minus

    def work():
        xs, ys, ok = [], [], True
        for eps in (mass / 8, mass / 16, mass / 32):
            cells = math.floor(mass / (4 * eps) + 1e-12) + 1
            rep = lower.empirical_packing(pack, cells, eps, sample_size=10)
            ok &= rep.exhaustive and rep.greedy_ok
            measured = math.log2(rep.greedy_size)
            ok &= measured >= g_minus / eps
            xs.append(1 / eps)
            ys.append(measured)
        slope = float(np.polyfit(xs, ys, 1)[0])
        return ok and slope > 0, ys, slope

    (ok, ys, slope), elapsed = timed(work)
    record(9, "scaling", ok, elapsed, 300,
           "log2 packing " + "/".join(f"{y:.2f}" for y in ys)
           + f" at eps = beta/8, beta/16, beta/32; fitted slope {slope:.3e} (> 0, Gamma- = {g_minus:.3e})")


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
