"""Seeded self-check suites for every module, runnable as one batch.

Each suite draws its own instances from a named substream of the given
seed, so adding or reordering checks does not reshuffle the others.  The
suites are sized to finish in seconds; the heavyweight statistical
versions of the same properties live in the acceptance tests.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from . import deformation as dfm
from . import dynamics as dyn
from . import geometry as geo
from . import potential as pot
from .errors import (
    DegeneratePointError,
    DegenerateRegionError,
    RegionFormatError,
    SingularPivotError,
    ZeroMeanFitnessError,
)
from .expressions import parse_expression
from .finite_difference import variation_order_check
from .integral import (
    asymptote_S2,
    closed_S2,
    cone_face_flux,
    cone_region,
    entropy_integral,
    linear_entropy_volume_check,
)
from .model import StatisticalModel, affine_model, canonicalize, evaluate, expr_model
from .polylog import li2, li3


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    residual: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "residual": float(self.residual),
            "detail": self.detail,
        }


@dataclass(frozen=True)
class VerificationSummary:
    seed: int
    passed: bool
    checks: list[CheckResult]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "passed": bool(self.passed),
            "checks": [c.to_dict() for c in self.checks],
        }


def _rng(seed: int, stream: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(stream.encode())]))


def _stream_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


# --- random instance generators (shared with the test-suite) --------------


def random_affine(rng: np.random.Generator, n: int, m: int) -> StatisticalModel:
    A = rng.uniform(-2.0, 2.0, size=(m, n))
    b = rng.uniform(-1.0, 1.0, size=m)
    return affine_model(A, b)


_EXPR_TEMPLATES = (
    "{a}*{x} + {b}",
    "{a}*sin({x}) + {b}*{y}",
    "{a}*cos({x}*{b}) + {c}",
    "{a}*{x}^2 + {b}*{y}",
    "exp({a}*{x}) + {b}*{y}",
    "{a}*{x}*{y} + {b}*sin({y})",
)


def random_expr_model(rng: np.random.Generator, n: int, m: int) -> StatisticalModel:
    sources = []
    for _ in range(m):
        tpl = _EXPR_TEMPLATES[rng.integers(len(_EXPR_TEMPLATES))]
        i = int(rng.integers(1, n + 1))
        j = int(rng.integers(1, n + 1))
        src = tpl.format(
            a=repr(round(float(rng.uniform(-1.2, 1.2)), 4)),
            b=repr(round(float(rng.uniform(-1.2, 1.2)), 4)),
            c=repr(round(float(rng.uniform(-1.2, 1.2)), 4)),
            x=f"x{i}",
            y=f"x{j}",
        )
        sources.append(src)
    return expr_model(sources, n)


def random_model(rng: np.random.Generator, n: int, m: int) -> StatisticalModel:
    if rng.uniform() < 0.5:
        return random_affine(rng, n, m)
    return random_expr_model(rng, n, m)


def random_point(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.uniform(-1.5, 1.5, size=n)


def random_values_deformation(rng: np.random.Generator, m: int) -> dfm.Deformation:
    return dfm.constant_deformation(rng.uniform(-1.0, 1.0, size=m))


def random_linear_region(n: int, seed: int, max_tries: int = 50):
    """Random valid cone region between two ordered linear sheets.

    The upper sheet reuses the lower sheet's exponent rows and adds more,
    so it dominates everywhere and the sheets can never cross.  Generator
    heights sit above every exponent slope with a positive margin, which
    keeps the body compact and the cone pointed.
    """
    rng = _stream_rng(seed, 11)
    for _ in range(max_tries):
        m_low = int(rng.integers(1, 4))
        extra = int(rng.integers(1, 3))
        A_low = rng.uniform(-1.2, 1.2, size=(m_low, n))
        A_up = np.vstack([A_low, rng.uniform(-1.2, 1.2, size=(extra, n))])
        lower = affine_model(A_low)
        upper = affine_model(A_up)
        k = n + 2 + int(rng.integers(0, 2))
        rays = []
        for _ in range(k):
            xg = rng.uniform(-1.0, 1.0, size=n)
            slope = float(np.max(A_up @ xg))
            rays.append(np.concatenate([xg, [max(0.05, slope) + rng.uniform(0.3, 1.0)]]))
        try:
            return cone_region(np.array(rays), lower, upper)
        except (DegenerateRegionError, RegionFormatError):
            continue
    raise RuntimeError("could not draw a valid region")


def fd_quantities(rep: dfm.VariationReport) -> list[tuple]:
    """(pointwise quantity, analytic variation) pairs for FD arbitration."""
    return [
        (lambda ev: ev.w, rep.delta_w),
        (lambda ev: ev.S, rep.delta_S),
        (geo.g_matrix, rep.delta_g),
        (geo.det_g, rep.delta_det_g),
        (geo.hessian_from_evaluation, rep.delta_hess_F),
        (geo.omega_matrix, rep.delta_omega),
        (geo.gauss_curvature, rep.delta_K),
        (geo.riemann_tensor, rep.delta_riemann),
        (geo.scalar_curvature, rep.delta_scalar_curvature),
    ]


# --- suites ----------------------------------------------------------------


def model_geometry_checks(seed: int, trials: int = 60) -> list[CheckResult]:
    rng = _rng(seed, "geom")
    worst_S = 0.0
    worst_decomp = 0.0
    worst_wg = 0.0
    worst_det = 0.0
    worst_scalar = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(2, 7))
        model = random_model(rng, n, m)
        ev = evaluate(model, random_point(rng, n))
        direct = -float(np.sum(ev.w * ev.log_w))
        worst_S = max(worst_S, abs(ev.S - direct))
        rep = geo.entropy_from_evaluation(ev)
        worst_decomp = max(worst_decomp, abs(rep.S_geom - ev.S))
        g = geo.g_matrix(ev)
        W_lit, W_mat = geo.weingarten_literal(ev), geo.weingarten_matrix(ev)
        worst_wg = max(worst_wg, float(np.max(np.abs(W_lit - W_mat))))
        dg = geo.det_g(ev)
        lhs = np.linalg.det(dg * np.eye(n) - np.outer(ev.fbar_i, ev.fbar_i))
        worst_det = max(worst_det, abs(lhs - dg ** (n - 1)) / max(1.0, dg ** (n - 1)))
        Om = geo.omega_matrix(ev)
        r1 = geo.scalar_curvature(ev)
        r2 = geo.scalar_curvature_closed(ev.fbar_i, Om, dg)
        worst_scalar = max(worst_scalar, abs(r1 - r2) / max(1.0, abs(r1)))
    out = [
        CheckResult("entropy_two_forms", worst_S <= 1e-10, worst_S),
        CheckResult("entropy_geometric_decomposition", worst_decomp <= 1e-10, worst_decomp),
        CheckResult("weingarten_two_forms", worst_wg <= 1e-10, worst_wg),
        CheckResult("determinant_lemma", worst_det <= 1e-10, worst_det),
        CheckResult("scalar_curvature_two_forms", worst_scalar <= 1e-8, worst_scalar),
    ]
    ideal = affine_model(np.eye(3))
    worst_K = max(
        abs(geo.gauss_curvature(evaluate(ideal, random_point(rng, 3))))
        for _ in range(40)
    )
    out.append(CheckResult("super_ideal_flatness", worst_K <= 1e-12, worst_K))
    merged = canonicalize(affine_model(np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])))
    out.append(CheckResult(
        "duplicate_row_merge",
        merged.m == 2 and abs(merged.b[0] - math.log(2.0)) <= 1e-15,
        abs(merged.b[0] - math.log(2.0)),
    ))
    return out


def deformation_checks(seed: int, trials: int = 60) -> list[CheckResult]:
    rng = _rng(seed, "deform")
    worst_routes = 0.0
    worst_rev = 0.0
    worst_anti = 0.0
    witness_fail = 0
    for _ in range(trials):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(2, 7))
        model = random_model(rng, n, m)
        ev = evaluate(model, random_point(rng, n))
        values = rng.uniform(-1.0, 1.0, size=m)
        d = dfm.resolve_deformation(dfm.constant_deformation(values), ev)
        de = dfm.delta_entropy(ev, d.values)
        scale = dfm.zero_scale(ev, d.values)
        worst_routes = max(
            worst_routes,
            abs(de.via_mean - de.via_covariance) / scale,
            abs(de.via_mean - de.via_bilinear) / scale,
        )
        plus = dfm.classify(ev, d.values)
        minus = dfm.classify(ev, -d.values)
        worst_anti = max(worst_anti, abs(plus.delta_S + minus.delta_S) / scale)
        try:
            completed = dfm.solve_reversible_component(ev, values[:-1])
            worst_rev = max(worst_rev, abs(dfm.delta_entropy(ev, completed).value) / scale)
        except SingularPivotError:
            pass
        try:
            rep = dfm.total_uncorrelation_test(ev, d.values)
            cst = dfm.total_uncorrelation_test(ev, np.full(m, 0.7))
            if rep.uncorrelated or rep.witness_u is None or not cst.uncorrelated:
                witness_fail += 1
        except DegeneratePointError:
            pass
    out = [
        CheckResult("delta_entropy_three_routes", worst_routes <= 1e-12, worst_routes),
        CheckResult("classification_antisymmetry", worst_anti <= 1e-12, worst_anti),
        CheckResult("reversible_completion", worst_rev <= 1e-12, worst_rev),
        CheckResult("uncorrelation_witness", witness_fail == 0, float(witness_fail)),
    ]

    fd_fail = 0
    worst_order_err = 0.0
    rng2 = _rng(seed, "deform-fd")
    for _ in range(10):
        n = int(rng2.integers(1, 3))
        m = int(rng2.integers(2, 5))
        model = random_model(rng2, n, m)
        x = random_point(rng2, n)
        d = dfm.constant_deformation(rng2.uniform(-1.0, 1.0, size=m))
        rep = dfm.variation_report(model, x, d)
        ev0 = evaluate(model, x)
        for fun, analytic in fd_quantities(rep):
            # the FD floor is the centred-difference roundoff level,
            # which scales with the quantity's own magnitude
            qnorm = float(np.max(np.abs(np.asarray(fun(ev0)))))
            chk = variation_order_check(model, x, d, fun, analytic,
                                        floor=1e-10 * max(1.0, qnorm))
            if not chk.ok:
                fd_fail += 1
                worst_order_err = max(worst_order_err, chk.err_fine)
    out.append(CheckResult("variation_fd_convergence", fd_fail == 0, worst_order_err,
                           detail=f"{fd_fail} failing instances"))

    rng3 = _rng(seed, "halfspace")
    ideal = affine_model(np.eye(4))
    x = random_point(rng3, 4)
    worst_half = 0.0
    boundary = abs(dfm.superideal_delta_entropy(x, np.ones(4), 0.7))
    for _ in range(200):
        v1 = rng3.uniform(-1.0, 1.0, size=4)
        v2 = rng3.uniform(-1.0, 1.0, size=4)
        s1 = dfm.superideal_delta_entropy(x, v1, 1.0)
        s2 = dfm.superideal_delta_entropy(x, v2, 1.0)
        if s1 < 0.0:
            v1, s1 = -v1, -s1
        if s2 < 0.0:
            v2, s2 = -v2, -s2
        c1, c2 = rng3.uniform(0.0, 2.0, size=2)
        combo = dfm.superideal_delta_entropy(x, c1 * v1 + c2 * v2, 1.0)
        expect = c1 * s1 + c2 * s2
        worst_half = max(worst_half, abs(combo - expect), -min(combo, 0.0))
    out.append(CheckResult("halfspace_closure", worst_half <= 1e-12 and boundary <= 1e-15,
                           max(worst_half, boundary)))
    return out


def dynamics_checks(seed: int, trials: int = 60) -> list[CheckResult]:
    rng = _rng(seed, "dyn")
    agree_fail = 0
    simplex_worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(2, 6))
        model = random_model(rng, n, m)
        ev = evaluate(model, random_point(rng, n))
        d = dfm.resolve_deformation(random_values_deformation(rng, m), ev)
        rep = dyn.stationarity_equivalence(ev, d.values)
        flags = [rep.fitness_expectation_matches, rep.tilted_expectation_matches]
        flags = [f for f in flags if f is not None]
        if any(f != rep.delta_S_zero for f in flags):
            agree_fail += 1
    model = affine_model(np.array([[1.0, 0.2], [-0.5, 1.0], [0.3, -1.2]]))
    orbit = dyn.replicator_orbit(model, np.array([0.3, -0.2]), steps=300, shift="auto")
    sums = np.abs(orbit.weights.sum(axis=1) - 1.0)
    simplex_worst = float(np.max(sums))
    neg = float(np.min(orbit.weights))
    graph_gap = 0.0
    for _ in range(20):
        w = rng.dirichlet(np.ones(int(rng.integers(2, 6))))
        gr = dyn.product_graph(w)
        L = dyn.laplacian(gr)
        H = np.diag(w) - np.outer(w, w)
        graph_gap = max(graph_gap, float(np.max(np.abs(L - H))))
    zero_mean_raised = False
    try:
        dyn.replicator_step(np.array([0.5, 0.5]), np.array([1.0, -1.0]))
    except ZeroMeanFitnessError:
        zero_mean_raised = True
    return [
        CheckResult("stationarity_three_routes", agree_fail == 0, float(agree_fail)),
        CheckResult("orbit_stays_in_simplex", simplex_worst <= 1e-12 and neg >= 0.0, simplex_worst),
        CheckResult("product_graph_laplacian", graph_gap <= 1e-14, graph_gap),
        CheckResult("zero_mean_fitness_error", zero_mean_raised, 0.0),
    ]


def potential_checks(seed: int, m: int = 3) -> list[CheckResult]:
    res = potential_residuals(m, seed)
    return [
        CheckResult("weight_pde_vs_closed_form", res["pde_residual"] <= 1e-9, res["pde_residual"]),
        CheckResult("path_independence", res["path_residual"] <= 1e-9, res["path_residual"]),
        CheckResult("params_round_trip", res["round_trip_residual"] <= 1e-10, res["round_trip_residual"]),
        CheckResult("weight_jacobian_fd", res["jacobian_residual"] <= 1e-10, res["jacobian_residual"]),
    ]


def potential_residuals(m: int, seed: int) -> dict:
    """Residuals behind `potential verify`: PDE vs closed form, two paths,
    parameter round-trip, and the closed-form Jacobian against FD."""
    rng = _rng(seed, f"potential-{m}")
    sigma = np.concatenate([[0.0], rng.uniform(-1.0, 1.0, size=m - 1)])
    gamma = float(rng.uniform(0.0, 1.5))
    params = pot.PotentialParams(sigma=tuple(sigma), gamma=gamma)
    f0 = rng.uniform(-1.0, 1.0, size=m)
    f1 = f0 + rng.uniform(-1.5, 1.5, size=m)
    h0 = pot.closed_form_weights(f0, params)

    h_end = pot.integrate_weight_pde(f0, f1, h0, steps=1000)
    pde_res = float(np.max(np.abs(h_end - pot.closed_form_weights(f1, params))))

    mid_a = f0 + rng.uniform(-0.5, 0.5, size=m)
    mid_b = f0 + rng.uniform(-0.5, 0.5, size=m)
    end_a = pot.integrate_along([f0, mid_a, f1], h0, steps_per_leg=1200)
    end_b = pot.integrate_along([f0, mid_b, f1], h0, steps_per_leg=1200)
    path_res = float(np.max(np.abs(end_a - end_b)))

    fitted = pot.fit_params(f0, h0)
    h_back = pot.closed_form_weights(f1, fitted)
    round_res = float(np.max(np.abs(h_back - pot.closed_form_weights(f1, params))))

    jac = pot.weight_jacobian(f0, params)
    eps = 1e-6
    fd = np.zeros((m, m))
    for j in range(m):
        fp = f0.copy()
        fm = f0.copy()
        fp[j] += eps
        fm[j] -= eps
        fd[:, j] = (pot.closed_form_weights(fp, params) - pot.closed_form_weights(fm, params)) / (2 * eps)
    jac_res = float(np.max(np.abs(jac - fd)))

    return {
        "m": m,
        "seed": seed,
        "pde_residual": pde_res,
        "path_residual": path_res,
        "round_trip_residual": round_res,
        "jacobian_residual": jac_res,
    }


def polylog_checks(seed: int) -> list[CheckResult]:
    rng = _rng(seed, "polylog")
    worst2 = 0.0
    worst3 = 0.0
    eps = 1e-6
    for _ in range(60):
        t = float(rng.uniform(-4.0, 4.0))
        d3 = (li3(-math.exp(t + eps)) - li3(-math.exp(t - eps))) / (2 * eps)
        worst3 = max(worst3, abs(d3 - li2(-math.exp(t))))
        d2 = (li2(-math.exp(t + eps)) - li2(-math.exp(t - eps))) / (2 * eps)
        worst2 = max(worst2, abs(d2 + math.log1p(math.exp(t))))
    return [
        CheckResult("li3_derivative_is_li2", worst3 <= 1e-8, worst3),
        CheckResult("li2_derivative_is_log", worst2 <= 1e-8, worst2),
    ]


def integral_checks(seed: int) -> list[CheckResult]:
    ideal2 = affine_model(np.eye(2))
    worst_quad = 0.0
    for c in (0.5, 1.0):
        q = entropy_integral(ideal2, [-c, -c], [c, c], tol=1e-8)
        worst_quad = max(worst_quad, abs(q.value - closed_S2(c)))
    ratio = abs(closed_S2(10.0) / asymptote_S2(10.0) - 1.0)
    small = abs(closed_S2(1e-8))
    region = random_linear_region(1, seed)
    rep = linear_entropy_volume_check(region, samples=200_000, seed=seed)
    gap = abs(rep.delta_S - rep.volume_times)
    flux = cone_face_flux(region, samples_per_facet=2048, seed=seed)
    return [
        CheckResult("quadrature_matches_closed_form", worst_quad <= 1e-6, worst_quad),
        CheckResult("asymptote_ratio", ratio <= 0.01, ratio),
        CheckResult("closed_form_zero_limit", small <= 1e-6, small),
        CheckResult("volume_identity_3sigma", gap <= 3.0 * rep.mc_sigma, gap,
                    detail=f"sigma={rep.mc_sigma:.3e}"),
        CheckResult("cone_face_flux_vanishes", flux.max_residual <= 1e-9, flux.max_residual),
    ]


def run_all(seed: int) -> VerificationSummary:
    checks: list[CheckResult] = []
    checks += model_geometry_checks(seed)
    checks += deformation_checks(seed)
    checks += dynamics_checks(seed)
    checks += potential_checks(seed)
    checks += polylog_checks(seed)
    checks += integral_checks(seed)
    return VerificationSummary(seed=seed, passed=all(c.passed for c in checks), checks=checks)
