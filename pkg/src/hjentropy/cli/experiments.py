"""Runners behind the subcommands. Each returns a list of ReportRow in a fixed order."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .. import entropy_lower as lower
from .. import entropy_upper as upper
from .. import families, regularity
from ..core import Box, ClassParams, Grid, SampledFunction, gradient, norm_l1_field, to_csv
from ..errors import ReachabilityConditionError, SearchBoxError
from ..legendre import biconjugate, conjugate, conjugate_function, verify_conjugate_identities
from ..semigroup import hopf_lax, verify_provv, verify_semigroup_law
from .config import ExperimentConfig
from .report import ReportRow

log = logging.getLogger("hjentropy")


class Runner:
    """Shared plumbing: an ordered parallel map, timing and seeded generators."""

    def __init__(self, config: ExperimentConfig, threads: int | None = None):
        self.config = config
        self.threads = max(1, threads or config.threads)
        self.artifacts: dict = {}

    def map(self, fn, items):
        items = list(items)
        if self.threads == 1 or len(items) < 2:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(fn, items))

    def rng(self, *stream) -> np.random.Generator:
        return np.random.default_rng([self.config.seed, *stream])

    @staticmethod
    def timed(fn):
        start = time.perf_counter()
        rows = fn()
        elapsed = time.perf_counter() - start
        for row in rows:
            row.runtime = elapsed / max(len(rows), 1)
        return rows


def _grid(config: ExperimentConfig, half_width: float, points: int) -> Grid:
    hw = config.half_width if config.half_width is not None else half_width
    pts = config.points if config.points is not None else points
    return Grid.centered(hw, pts, config.class_params.dim)


# ---------------------------------------------------------------------------


def run_solve(runner: Runner) -> list:
    cfg = runner.config
    params = cfg.class_params
    ham = cfg.hamiltonian()
    grid = _grid(cfg, 3.0 * params.support + 1.0, 121 if params.dim == 1 else 41)
    u0 = families.preset(cfg.preset, grid)
    times = cfg.times or [0.25, 0.5, 1.0]

    def one(t):
        def work():
            horizon_params = params.with_(horizon=t)
            report = verify_provv(u0, ham, t, horizon_params, subdivisions=cfg.subdivisions)
            tag = {"preset": cfg.preset, "t": t, "h": grid.spacing}
            rows = [
                ReportRow("solve.semiconcavity", tag, report.sc_measured,
                          report.sc_bound * 1.1),
                ReportRow("solve.lipschitz", tag, report.lip_measured,
                          report.lip_bound + 2 * grid.spacing),
                ReportRow("solve.outside_support", {**tag, "radius": report.support_radius},
                          report.outside_max, report.outside_bound),
            ]
            if cfg.preset == "zero":
                dev = float(np.max(np.abs(report.solution.values + t * ham.h0)))
                rows.append(ReportRow("solve.constant_solution", tag, dev, 1e-12))
            half = verify_semigroup_law(u0, ham, t / 2, t / 2, subdivisions=cfg.subdivisions)
            rows.append(ReportRow("solve.semigroup_law", tag, half.discrepancy, half.tol))
            runner.artifacts[f"solution_t{t:g}.csv"] = to_csv(report.solution)
            return rows
        return Runner.timed(work)

    return [row for rows in runner.map(one, times) for row in rows]


def run_legendre(runner: Runner) -> list:
    cfg = runner.config
    ham = cfg.hamiltonian()
    dim = ham.dim
    hw = cfg.half_width if cfg.half_width is not None else 2.0
    points = cfg.points if cfg.points is not None else (201 if dim == 1 else 41)
    q_grid = Grid.centered(hw, points, dim)
    star = conjugate_function(ham)
    corners = np.array(np.meshgrid(*([[-hw, hw]] * dim), indexing="ij")).reshape(dim, -1).T
    p_radius = 1.25 * float(np.max(np.abs(star.grad(corners)))) + 0.5
    p_points = 2 * points + 1

    def work():
        try:
            res = conjugate(ham, q_grid, Grid.centered(p_radius, p_points, dim))
        except SearchBoxError as exc:
            return [ReportRow("legendre.search_box", {"node": str(exc.node_index)}, 1.0, 0.0)]
        ident = verify_conjugate_identities(ham, res, tol=1e-6)
        p_grid = Grid.centered(min(1.0, hw / 2), points, dim)
        back = biconjugate(ham, p_grid, Grid.centered(hw * 1.5, p_points, dim))
        bic = float(np.max(np.abs(back.hstar.values - ham.eval(p_grid.nodes()))))
        tag = {"hamiltonian": cfg.hamiltonian_name, "points": points, "dim": dim}
        rows = [
            ReportRow("legendre.gradient_inverse", tag, ident.grad_residual, 1e-6),
            ReportRow("legendre.hessian_ceiling", tag, ident.hess_max_eig, ident.hess_bound + 1e-3),
            ReportRow("legendre.biconjugation", tag, bic, 1e-6),
        ]
        if ident.origin_residual is not None:
            rows.append(ReportRow("legendre.value_at_origin", tag, ident.origin_residual, 1e-6))
        return rows

    return Runner.timed(work)


def run_verify(runner: Runner) -> list:
    cfg = runner.config
    params = cfg.class_params
    grid = _grid(cfg, params.support, 201 if params.dim == 1 else 41)
    members = cfg.members or 10

    def one(k):
        def work():
            u = families.random_semiconcave_member(params, grid, runner.rng(k))
            spacing = grid.spacing
            tag = {"member": k, "h": spacing}
            rep = regularity.estimate_regularity(u)
            field = regularity.monotone_field(u, params.semiconcavity)
            mono = regularity.check_monotone_decreasing(field, tol=1e-9)
            poinc = regularity.check_poincare(u, zero_trace=True)
            rows = [
                ReportRow("verify.lipschitz", tag, rep.lip, params.lipschitz + 2 * spacing),
                ReportRow("verify.semiconcavity", tag, rep.sc_constant,
                          params.semiconcavity + 2 * spacing),
                ReportRow("verify.monotone_pairing", tag, mono.max_normalized, mono.tol),
                ReportRow("verify.poincare_mean", tag, poinc.mean_lhs,
                          poinc.mean_rhs * poinc.tol_factor + 1e-15),
            ]
            if poinc.zero_trace_lhs is not None:
                rows.append(ReportRow("verify.poincare_zero_trace", tag, poinc.zero_trace_lhs,
                                      poinc.zero_trace_rhs * poinc.tol_factor + 1e-15))
            return rows
        return Runner.timed(work)

    return [row for rows in runner.map(one, range(members)) for row in rows]


def run_cover_upper(runner: Runner) -> list:
    cfg = runner.config
    params = cfg.class_params
    ham = cfg.hamiltonian()
    eps_list = cfg.eps_list or [0.5, 0.25]
    members = cfg.members or 100
    consts = upper.gamma_plus(params, ham)
    rows = [ReportRow("cover.gamma_plus_consistency",
                      {"Gamma_plus": consts.Gamma_plus},
                      abs(consts.Gamma_plus - consts.Gamma_plus_via_gamma_sc),
                      1e-9 * consts.Gamma_plus)]
    for e_index, eps in enumerate(eps_list):
        plan = upper.build_cover_monotone(params, eps)
        grid = plan.aligned_grid(max(2, 800 // plan.cells) if params.dim == 1 else 4)

        def one(k, plan=plan, grid=grid, e_index=e_index):
            def work():
                field = families.random_monotone_field(params, grid, runner.rng(1, e_index, k))
                result = plan.assign(field)
                return [ReportRow("cover.member_distance",
                                  {"eps": plan.eps, "member": k, "n": plan.cells,
                                   "center": result.center_hash},
                                  result.distance, plan.radius)], result.quantized.key
            start = time.perf_counter()
            out = work()
            out[0][0].runtime = time.perf_counter() - start
            return out

        results = runner.map(one, range(members))
        rows.extend(r[0][0] for r in results)
        distinct = len({r[1] for r in results})
        rows.append(ReportRow("cover.distinct_centers_log2",
                              {"eps": eps, "n": plan.cells, "distinct": distinct},
                              math.log2(distinct), plan.log2_count_bound))
        if cfg.lifted:
            rows.extend(_lifted_rows(runner, params, eps, e_index, members))
    return rows


def _lifted_rows(runner: Runner, params: ClassParams, eps: float, e_index: int, members: int):
    plan = upper.lift_cover_semiconcave(params, eps)
    cells = plan.inner.cells
    per_cell = max(2, -(-800 // cells)) if params.dim == 1 else 2
    grid = plan.aligned_grid(per_cell)

    def one(k):
        start = time.perf_counter()
        rng = runner.rng(2, e_index, k)
        u = families.random_semiconcave_member(params, grid, rng)
        other = families.random_semiconcave_member(params, grid, rng)
        assigned = plan.assign(u)
        gap = norm_l1_field(gradient(u) - gradient(other))
        weight = min(1.0, 0.99 * plan.inner_eps / gap) if gap > 0 else 1.0
        twin = u * (1 - weight) + other * weight
        cert = plan.certificate(u, twin)
        tag = {"eps": eps, "member": k, "n": cells, "center": assigned.center_hash}
        rows = [
            ReportRow("cover.lifted_field_distance", tag, assigned.inner.distance,
                      assigned.inner.radius),
            ReportRow("cover.lifted_twin_gradient", tag, cert["gradient_distance"],
                      plan.inner_eps),
            ReportRow("cover.lifted_twin_w11", tag, cert["w11_distance"], eps),
        ]
        elapsed = time.perf_counter() - start
        for row in rows:
            row.runtime = elapsed / len(rows)
        return rows

    return [row for rows in runner.map(one, range(members)) for row in rows]


def _packing_rows(params: ClassParams, cells: int, eps: float, tag: dict, prefix: str,
                  seed: int) -> list:
    rep = lower.empirical_packing(params, cells, eps, seed=seed)
    counts = rep.counts
    rows = [ReportRow(f"{prefix}.hoeffding_dominates", tag, counts.log2_ball,
                      counts.hoeffding_log2 + 1e-12)]
    if rep.exhaustive:
        rows.append(ReportRow(f"{prefix}.ball_exact", tag, rep.ball_exhaustive, counts.ball, "=="))
        rows.append(ReportRow(f"{prefix}.greedy_vs_bound_log2", tag, math.log2(rep.greedy_size),
                              counts.log2_packing_lower - 1e-12, ">="))
        rows.append(ReportRow(f"{prefix}.greedy_separated", tag, int(bool(rep.greedy_separated)),
                              1, "=="))
    rows.append(ReportRow(f"{prefix}.metric_relative_error", {**tag, "pairs": rep.pairs_checked},
                          rep.max_relative_error, rep.metric_tol))
    return rows, rep


def run_pack_lower(runner: Runner) -> list:
    cfg = runner.config
    params = cfg.class_params
    ham = cfg.hamiltonian()
    consts = lower.gamma_minus(params, ham)
    eps_list = cfg.eps_list or [consts.eps_max, consts.eps_max / 2]
    rows = [ReportRow("pack.gamma_minus_consistency", {"Gamma_minus": consts.Gamma_minus},
                      abs(consts.Gamma_minus - consts.Gamma_minus_via_beta_sc),
                      1e-12 * consts.Gamma_minus)]
    plus = upper.gamma_plus(params, ham)
    rows.append(ReportRow("pack.gamma_ordering", {}, consts.Gamma_minus, plus.Gamma_plus))

    def one(item):
        index, eps = item

        def work():
            cells = cfg.cells or consts.n_eps(eps)
            tag = {"eps": eps, "n": cells}
            out, rep = _packing_rows(params, cells, eps, tag, "pack", cfg.seed + index)
            if rep.exhaustive and eps <= consts.eps_max * (1 + 1e-12) and cfg.cells is None:
                out.append(ReportRow("pack.exp_bound_log", tag, rep.greedy_log,
                                     rep.exp_bound_log, ">="))
            return out
        return Runner.timed(work)

    for chunk in runner.map(one, list(enumerate(eps_list))):
        rows.extend(chunk)
    return rows


def _reach_targets(params: ClassParams, grid: Grid, count: int, runner: Runner):
    """The single bump first, then distinct seeded sign patterns alternating between 2 and 3
    cubes per axis."""
    bump = lower.build_bump(params.semiconcavity, params.support, params.dim, grid)
    targets = [("bump", bump.b)]
    orders = {}
    for k in range(1, count):
        cells = 2 + (k - 1) % 2
        family = lower.target_family(params, cells)
        if cells not in orders:
            orders[cells] = list(runner.rng(3, cells).permutation(2**family.size))
        index = int(orders[cells].pop(0)) if orders[cells] else int(runner.rng(3, k).integers(2**family.size))
        pattern = family.pattern(index)
        targets.append((f"pattern{cells}:{pattern.index}", family.sample(pattern, grid)))
    return targets


def reach_params(cfg: ExperimentConfig) -> ClassParams:
    params = cfg.class_params
    ham = cfg.hamiltonian()
    base = lower.admissible_reach_params(ham, params.support, params.horizon, cfg.reach_lipschitz)
    if cfg.reach_semiconcavity is not None:
        base = base.with_(semiconcavity=cfg.reach_semiconcavity)
    return base


def run_reach(runner: Runner) -> list:
    cfg = runner.config
    params = reach_params(cfg)
    ham = cfg.hamiltonian()
    # coarser lattices cannot resolve the transport of low-slope targets, so the solver
    # returns them unchanged and the residual sits at round-off regardless of h
    points = cfg.points if cfg.points is not None else (801 if params.dim == 1 else 41)
    hw = cfg.half_width if cfg.half_width is not None else 2.0 * params.support
    levels = [points, 2 * points - 1] if cfg.refine else [points]
    base_grid = Grid.centered(hw, points, params.dim)
    names = [name for name, _ in _reach_targets(params, base_grid, cfg.targets, runner)]

    def one(k):
        def work():
            residuals, rows = [], []
            for level, pts in enumerate(levels):
                grid = Grid.centered(hw, pts, params.dim)
                name, psi = _reach_targets(params, grid, cfg.targets, runner)[k]
                tag = {"target": name, "h": grid.spacing}
                try:
                    _, rep = lower.controllability_reach(psi, params, ham,
                                                         subdivisions=max(cfg.subdivisions, 4))
                except ReachabilityConditionError as exc:
                    return [ReportRow(f"reach.condition[{key}]", tag, a, b)
                            for key, (a, b) in exc.failed.items()]
                residuals.append(rep.residual_w11)
                if level == 0:
                    worst = max(rep.semiconvexity, key=lambda m: m[1] - m[2])
                    rows += [
                        ReportRow("reach.residual_w11", tag, rep.residual_w11, rep.residual_tol),
                        ReportRow("reach.u0_support", tag, rep.u0_support, rep.u0_support_bound),
                        ReportRow("reach.u0_lipschitz", tag, rep.u0_lip, rep.u0_lip_bound),
                        ReportRow("reach.semiconvexity", {**tag, "t": worst[0]}, worst[1], worst[2]),
                        ReportRow("reach.riccati_condition", tag, int(rep.cond5_ok), 1, "=="),
                    ]
            if len(residuals) == 2 and residuals[1] > 0:
                rows.append(ReportRow("reach.residual_refinement_ratio",
                                      {"target": names[k]}, residuals[0] / residuals[1], 1.8, ">="))
            return rows
        return Runner.timed(work)

    return [row for rows in runner.map(one, range(cfg.targets)) for row in rows]


def scaling_params(cfg: ExperimentConfig) -> ClassParams:
    """Packing class of reachable targets: half the support, reachable curvature and slope."""
    full = reach_params(cfg)
    return full.with_(support=full.support / 2)


def run_scaling(runner: Runner) -> list:
    cfg = runner.config
    ham = cfg.hamiltonian()
    pack = scaling_params(cfg)
    full = reach_params(cfg)
    dim = pack.dim
    mass = lower.beta(pack.semiconcavity, pack.support, dim)
    eps_list = cfg.eps_list or [mass / 8, mass / 16, mass / 32]
    g_minus = lower.gamma_minus(full, ham).Gamma_minus
    g_plus = upper.gamma_plus(cfg.class_params, ham).Gamma_plus

    def one(item):
        index, eps = item

        def work():
            cells = lower._floor_guarded(mass / (4 * eps)) + 1
            tag = {"eps": eps, "n": cells, "inv_eps_pow": eps ** (-dim)}
            out, rep = _packing_rows(pack, cells, eps, tag, "scaling", cfg.seed + index)
            return out, rep
        start = time.perf_counter()
        out, rep = work()
        for row in out:
            row.runtime = (time.perf_counter() - start) / len(out)
        return out, rep, eps

    results = runner.map(one, list(enumerate(eps_list)))
    rows = []
    xs, ys = [], []
    for out, rep, eps in results:
        rows.extend(out)
        if not rep.exhaustive:
            continue
        measured = math.log2(rep.greedy_size)
        tag = {"eps": eps, "n": rep.counts.cells}
        rows.append(ReportRow("scaling.log2_packing_vs_lower", tag, measured,
                              g_minus / eps**dim, ">="))
        rows.append(ReportRow("scaling.log2_packing_vs_upper", tag, measured,
                              g_plus / eps**dim))
        xs.append(eps ** (-dim))
        ys.append(measured)
    if len(xs) >= 2:
        slope, _ = np.polyfit(np.array(xs), np.array(ys), 1)
        rows.append(ReportRow("scaling.fitted_slope_positive",
                              {"points": len(xs), "Gamma_minus": g_minus, "Gamma_plus": g_plus},
                              float(slope), 0.0, ">"))
        rows.append(ReportRow("scaling.fitted_slope_vs_upper", {"points": len(xs)},
                              float(slope), g_plus))
    return rows


RUNNERS = {
    "solve": run_solve,
    "legendre": run_legendre,
    "verify": run_verify,
    "cover-upper": run_cover_upper,
    "pack-lower": run_pack_lower,
    "reach": run_reach,
    "scaling": run_scaling,
}
