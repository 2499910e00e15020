"""First-order deformations: weights, entropy, classification, geometry."""

import json
import math

import numpy as np
import pytest

from statsurf.deformation import (
    classify,
    constant_deformation,
    delta_entropy,
    delta_weights,
    expression_deformation,
    gibbs_kernel,
    moment_correlation,
    parse_deformation,
    perturbed_model,
    shift_deformation,
    shift_delta_entropy,
    shift_delta_f,
    shift_delta_weights,
    solve_reversible_component,
    superideal_delta_entropy,
    total_uncorrelation_test,
    variation_report,
    zero_scale,
)
from statsurf.errors import (
    DeformationFormatError,
    DegeneratePointError,
    InputError,
    SingularPivotError,
)
from statsurf.finite_difference import variation_order_check
from statsurf.geometry import gauss_curvature
from statsurf.model import affine_model, evaluate, expr_model

MODEL3 = affine_model([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], b=[0.3, -0.2, 0.1])
X0 = np.array([0.4, -0.7])


@pytest.fixture
def ev3():
    return evaluate(MODEL3, X0)


def test_parse_deformation_forms():
    d = parse_deformation('{"delta_f": [1.0, -2.0, 0.5]}')
    assert d.values == (1.0, -2.0, 0.5)
    d = parse_deformation({"delta_f": ["x1^2", "sin(x2)"]})
    assert len(d.exprs) == 2
    d = parse_deformation({"shift": {"v": [1.0, 0.0], "tau": 0.25}})
    assert d.shift.tau == 0.25


@pytest.mark.parametrize(
    "doc",
    [
        "not json {",
        json.dumps([1.0]),
        {},
        {"delta_f": []},
        {"delta_f": [1.0, "x1"]},
        {"delta_f": [True, False]},
        {"delta_f": [1.0], "shift": {"v": [1.0], "tau": 0.1}},
        {"shift": {"v": [1.0]}},
        {"delta_f": [float("nan")]},
    ],
)
def test_parse_deformation_rejects(doc):
    with pytest.raises(DeformationFormatError):
        parse_deformation(doc)


def test_constant_deformation_kernel_zero(ev3):
    dw = delta_weights(ev3, constant_deformation([2.5, 2.5, 2.5]))
    assert dw.tolist() == [0.0, 0.0, 0.0]
    dS = delta_entropy(ev3, constant_deformation([2.5, 2.5, 2.5]))
    assert dS.value == 0.0


def test_gibbs_kernel_structure(ev3):
    H = gibbs_kernel(ev3.w)
    assert H == pytest.approx(H.T, abs=1e-16)
    assert H @ np.ones(3) == pytest.approx(np.zeros(3), abs=1e-16)
    vals = np.linalg.eigvalsh(H)
    assert vals.min() >= -1e-15


def test_delta_weights_sum_to_zero(ev3):
    dw = delta_weights(ev3, constant_deformation([0.3, -1.1, 0.7]))
    assert float(dw.sum()) == pytest.approx(0.0, abs=1e-16)
    # pairwise form equals the kernel product
    H = gibbs_kernel(ev3.w)
    assert dw == pytest.approx(H @ np.array([0.3, -1.1, 0.7]), abs=1e-15)


def test_three_entropy_routes_agree(ev3):
    rng = np.random.default_rng(11)
    for _ in range(20):
        df = rng.uniform(-3.0, 3.0, size=3)
        dS = delta_entropy(ev3, constant_deformation(df))
        tol = 1e-12 * zero_scale(ev3, df)
        assert abs(dS.via_mean - dS.via_covariance) <= tol
        assert abs(dS.via_mean - dS.via_bilinear) <= tol
        assert dS.value == dS.via_covariance


def test_delta_entropy_is_linear(ev3):
    d1 = np.array([0.5, -0.3, 0.9])
    d2 = np.array([-1.2, 0.4, 0.1])
    s1 = delta_entropy(ev3, constant_deformation(d1)).value
    s2 = delta_entropy(ev3, constant_deformation(d2)).value
    s12 = delta_entropy(ev3, constant_deformation(2.0 * d1 - 3.0 * d2)).value
    assert s12 == pytest.approx(2.0 * s1 - 3.0 * s2, abs=1e-13)
    assert delta_entropy(ev3, constant_deformation(-d1)).value == pytest.approx(
        -s1, abs=1e-14
    )


def test_variance_deformation_raises_entropy(ev3):
    df = -(ev3.f - ev3.fbar)
    var = float(ev3.w @ (ev3.f - ev3.fbar) ** 2)
    dS = delta_entropy(ev3, constant_deformation(df))
    assert dS.value == pytest.approx(var, abs=1e-13)
    res = classify(ev3, constant_deformation(df))
    assert res.label == "increasing"
    res = classify(ev3, constant_deformation(-df))
    assert res.label == "decreasing"
    assert res.delta_S == pytest.approx(-var, abs=1e-13)


def test_classify_reversible_and_residuals(ev3):
    res = classify(ev3, constant_deformation([4.0, 4.0, 4.0]))
    assert res.label == "reversible"
    assert res.balance_residual == pytest.approx(0.0, abs=1e-13)
    assert res.quadratic_residual == pytest.approx(0.0, abs=1e-12)
    # the balance residual is the entropy variation itself
    res = classify(ev3, constant_deformation([0.7, -0.4, 1.3]))
    assert res.balance_residual == pytest.approx(res.delta_S, abs=1e-13)


def test_reversible_completion(ev3):
    partial = [0.3, -0.8]
    df = solve_reversible_component(ev3, partial)
    assert df[:2].tolist() == partial
    assert delta_entropy(ev3, constant_deformation(df)).value == pytest.approx(
        0.0, abs=1e-13
    )
    df0 = solve_reversible_component(ev3, partial, pivot=0)
    assert df0[1:].tolist() == partial
    assert delta_entropy(ev3, constant_deformation(df0)).value == pytest.approx(
        0.0, abs=1e-13
    )


def test_reversible_completion_errors(ideal2):
    ev = evaluate(ideal2, [0.0, 0.0])
    # f at either pivot equals the mean (both are zero)
    with pytest.raises(SingularPivotError):
        solve_reversible_component(ev, [1.0])
    ev3 = evaluate(MODEL3, X0)
    with pytest.raises(InputError):
        solve_reversible_component(ev3, [1.0])
    with pytest.raises(InputError):
        solve_reversible_component(ev3, [1.0, 2.0], pivot=5)


def test_uncorrelation_constant_passes(ev3):
    rep = total_uncorrelation_test(ev3, constant_deformation([1.5, 1.5, 1.5]))
    assert rep.uncorrelated
    assert rep.witness_u is None
    assert np.max(np.abs(rep.correlations)) <= rep.tolerances.max()


def test_uncorrelation_finds_witness(ev3):
    df = ev3.f - ev3.fbar
    rep = total_uncorrelation_test(ev3, constant_deformation(df))
    assert not rep.uncorrelated
    assert rep.witness_u == 1
    assert moment_correlation(ev3, constant_deformation(df), 1) == pytest.approx(
        float(ev3.w @ (ev3.f - ev3.fbar) ** 2), abs=1e-13
    )


def test_uncorrelation_degenerate_point(ideal2):
    ev = evaluate(ideal2, [0.0, 0.0])
    with pytest.raises(DegeneratePointError):
        total_uncorrelation_test(ev, constant_deformation([1.0, 2.0]))


def test_moment_correlation_validates(ev3):
    with pytest.raises(InputError):
        moment_correlation(ev3, constant_deformation([1.0, 2.0, 3.0]), 0)


def test_shift_closed_forms_match_general():
    v = np.array([0.8, -0.3])
    tau = 0.45
    d = shift_deformation(v, tau)
    ev = evaluate(MODEL3, X0)
    df = shift_delta_f(MODEL3, v, tau)
    assert df == pytest.approx(tau * (MODEL3.A @ v), abs=1e-15)
    dw_closed = shift_delta_weights(MODEL3, X0, v, tau)
    assert dw_closed == pytest.approx(delta_weights(ev, d), abs=1e-13)
    dS_closed = shift_delta_entropy(MODEL3, X0, v, tau)
    assert dS_closed == pytest.approx(delta_entropy(ev, d).value, abs=1e-13)


def test_shift_is_directional_derivative():
    # moving the point against the shift reproduces delta S to first order
    v = np.array([0.8, -0.3])
    tau = 1.0
    dS = shift_delta_entropy(MODEL3, X0, v, tau)
    eps = 1e-6
    S_p = evaluate(MODEL3, X0 + eps * v).S
    S_m = evaluate(MODEL3, X0 - eps * v).S
    assert (S_p - S_m) / (2 * eps) == pytest.approx(dS, abs=1e-8)


def test_superideal_matches_identity_model():
    x = np.array([0.2, -0.5, 1.1])
    v = np.array([1.0, 0.0, -2.0])
    tau = 0.3
    ident = affine_model(np.eye(3))
    assert superideal_delta_entropy(x, v, tau) == pytest.approx(
        shift_delta_entropy(ident, x, v, tau), abs=1e-14
    )


def test_superideal_halfspace_properties():
    rng = np.random.default_rng(5)
    x = rng.uniform(-1.0, 1.0, size=4)
    v1 = rng.uniform(-1.0, 1.0, size=4)
    v2 = rng.uniform(-1.0, 1.0, size=4)
    tau = 0.7
    s1 = superideal_delta_entropy(x, v1, tau)
    s2 = superideal_delta_entropy(x, v2, tau)
    # linear in v: positive combinations stay on one side
    for a, b in [(2.0, 3.0), (0.5, 0.0), (1.0, 1.0)]:
        assert superideal_delta_entropy(x, a * v1 + b * v2, tau) == pytest.approx(
            a * s1 + b * s2, abs=1e-13
        )
    assert superideal_delta_entropy(x, -v1, tau) == pytest.approx(-s1, abs=1e-14)
    # the all-ones direction is on the boundary
    assert superideal_delta_entropy(x, np.ones(4), tau) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(InputError):
        superideal_delta_entropy(x, v1[:2], tau)


def test_perturbed_model_affine_path():
    d = constant_deformation([0.5, -0.2, 0.1])
    pm = perturbed_model(MODEL3, d, 1e-3)
    assert pm.kind == "affine"
    assert pm.b == pytest.approx(MODEL3.b + 1e-3 * np.array([0.5, -0.2, 0.1]))
    with pytest.raises(DeformationFormatError):
        perturbed_model(MODEL3, constant_deformation([1.0]), 1e-3)


def test_perturbed_model_first_order():
    model = expr_model(["x1^2", "sin(x1)"], n=1)
    x = [0.6]
    ev = evaluate(model, x)
    d = expression_deformation(["cos(x1)", "x1"])
    from statsurf.deformation import resolve_deformation

    dv = resolve_deformation(d, ev)
    eps = 1e-6
    F_p = evaluate(perturbed_model(model, d, eps), x).F
    F_m = evaluate(perturbed_model(model, d, -eps), x).F
    assert (F_p - F_m) / (2 * eps) == pytest.approx(float(ev.w @ dv.values), abs=1e-9)


def test_variation_fd_confirms_entropy_and_curvature():
    model = expr_model(["x1^2 + x2", "sin(x1) * cos(x2)", "x1 * x2"], n=2)
    x = np.array([0.35, -0.55])
    d = expression_deformation(["x1", "x2^2", "cos(x1 + x2)"])
    rep = variation_report(model, x, d)
    chk = variation_order_check(
        model, x, d, lambda e: e.S, rep.delta_S, floor=1e-10 * max(1.0, abs(evaluate(model, x).S))
    )
    assert chk.ok, chk
    K0 = abs(gauss_curvature(evaluate(model, x)))
    chk = variation_order_check(
        model, x, d, gauss_curvature, rep.delta_K, floor=1e-10 * max(1.0, K0)
    )
    assert chk.ok, chk


def test_as_printed_curvature_coefficient_fails_fd():
    model = expr_model(["x1^2 + x2", "sin(x1) * cos(x2)", "x1 * x2"], n=2)
    x = np.array([0.35, -0.55])
    d = expression_deformation(["x1", "x2^2", "cos(x1 + x2)"])
    good = variation_report(model, x, d, as_printed=False)
    bad = variation_report(model, x, d, as_printed=True)
    assert bad.as_printed and not good.as_printed
    assert bad.delta_K != pytest.approx(good.delta_K, rel=1e-6)
    K0 = abs(gauss_curvature(evaluate(model, x)))
    chk = variation_order_check(
        model, x, d, gauss_curvature, bad.delta_K, floor=1e-10 * max(1.0, K0)
    )
    assert not chk.ok


def test_variation_report_serializes(ev3):
    rep = variation_report(MODEL3, X0, constant_deformation([0.2, -0.1, 0.4]))
    doc = rep.to_dict()
    json.dumps(doc)
    assert doc["classification"] in {"increasing", "decreasing", "reversible"}
    assert len(doc["delta_w"]) == 3
    assert doc["delta_det_g"] == pytest.approx(np.trace(np.array(doc["delta_g"])))
