import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from projmetric import catalog
from projmetric.exprlang import eval_jet, parse
from projmetric.jets import Jet, PointTM
from projmetric.metrizability import (
    Classification,
    ConditionReport,
    EtaZero,
    InconsistentReducibility,
    LieContext,
    OmegaLin,
    Verdict,
    aggregate,
    analyze_frame,
    analyze_point,
    classify,
    coeff1_form,
    cond_phi_prime_span,
    omega,
    reduced_condition,
    reducibility,
    theta_matrix,
    third_order_coeffs,
    verdict,
)
from projmetric.spraygeom import FramePack, bracket, eigenframe, jacobi, Tolerances

from conftest import points

U = PointTM((0.3, -0.2, 0.5), (0.7, 1.1, 0.9))
TOL = 1e-8
A1, A2 = catalog._A1, catalog._A2


def _jet(src, u, order=6):
    return eval_jet(parse(src, 3), u, order)


def _fixture_frame(u=U, order=6):
    fx = catalog.get("reducible-rank1").model
    return fx, fx.frame(u, order)


# classification and condition 1 ---------------------------------------------------


@pytest.mark.parametrize(
    "name, expected",
    [
        ("flat3", Classification.FLAT),
        ("isotropic3", Classification.ISOTROPIC),
        ("paper-example", Classification.GENERIC),
        ("perturbed-example", Classification.GENERIC),
    ],
)
def test_classify_catalog(name, expected):
    s = catalog.get(name).model
    for u in points(count=5):
        cls, _ = classify(jacobi(s, u).Phi, u.y)
        assert cls is expected


def test_classify_degenerate():
    # two equal nonzero eigenvalues is the isotropic case in dimension 3
    assert classify(np.diag([1.0, 1.0 + 1e-12, 0.0]), [0.0, 0.0, 1.0])[0] is Classification.ISOTROPIC
    Phi = np.diag([1.0, 1e-12, 0.0])
    cls, info = classify(Phi, [0.0, 0.0, 1.0])
    assert cls is Classification.DEGENERATE
    assert info["reason"] == "eigenvalue collision"


def test_cond1_example(example):
    for u in points(count=10, seed=5):
        F = eigenframe(None, example, u)
        fit = cond_phi_prime_span(F)
        lam = F.lambdas
        mu = np.diag(fit.M)
        assert fit.residual <= TOL
        assert fit.A == pytest.approx((mu[0] - mu[1]) / (lam[0] - lam[1]), rel=1e-9)
        assert fit.B == pytest.approx((lam[0] * mu[1] - lam[1] * mu[0]) / (lam[0] - lam[1]), rel=1e-9, abs=1e-12)
        assert np.all(np.abs(fit.normal_component) <= TOL)


def test_cond1_perturbed_fails(perturbed):
    res = [cond_phi_prime_span(eigenframe(None, perturbed, u)).residual for u in points(count=5)]
    assert min(res) > TOL


# third-order coefficients -----------------------------------------------------------


def test_third_order_example_vanishes(example):
    for u in points(count=10, seed=9):
        T = third_order_coeffs(eigenframe(None, example, u))
        for which in ("kappa", "theta", "beta", "gamma"):
            assert T.max_abs(which) <= TOL


def test_reducibility_example_and_perturbed(example, perturbed):
    F = eigenframe(None, example, U)
    assert reducibility(third_order_coeffs(F), F).reducible
    G = eigenframe(None, perturbed, U)
    red = reducibility(third_order_coeffs(G), G)
    assert not red.reducible and red.consistent
    assert red.beta_gamma_max > 1e-3


def test_theta_coefficient_symmetric_in_pair(perturbed):
    # theta^k_ij as defined is symmetric under i <-> j
    T = third_order_coeffs(eigenframe(None, perturbed, U))
    for k in range(3):
        assert T.theta[(k, 0, 1)] == pytest.approx(T.theta[(k, 1, 0)], abs=1e-12)


def test_inconsistent_reducibility():
    # [v_1, h_1] = d/dx3 = h_3 lies outside D_1 but has no D_2 component
    rows = [
        ["1", "0", "y1", "0", "0", "0"],
        ["0", "1", "0", "0", "0", "0"],
        ["0", "0", "1", "0", "0", "0"],
        ["0", "0", "0", "1", "0", "0"],
        ["0", "0", "0", "0", "1", "0"],
        ["0", "0", "0", "0", "0", "1"],
    ]
    fx = catalog.FrameFixture(3, tuple(map(tuple, rows)), ("1", "-1", "0"), ("1", "-1"))
    F = fx.frame(U, 4)
    with pytest.raises(InconsistentReducibility):
        reducibility(third_order_coeffs(F), F)


# the closed-Omega oracle ---------------------------------------------------------------


def _omega_true(u, order=6):
    return Jet.stack([_jet(A1, u, order), _jet(A2, u, order)])


def test_omega_components():
    _, F = _fixture_frame()
    fr = np.eye(6)
    a = OmegaLin.unit(F, 0)
    e = lambda k: Jet.const(F.fields.space, fr[k])
    assert np.allclose(omega(F, e(3), e(0)).value, a.value)
    assert np.allclose(omega(F, e(0), e(3)).value, -a.value)
    assert np.allclose(omega(F, e(3), e(1)).value, 0)
    assert np.allclose(omega(F, e(5), e(2)).value, 0)  # a_33 = 0


@pytest.mark.parametrize("a", range(6))
@pytest.mark.parametrize("j", [0, 1])
def test_lie_rules_against_closed_omega(a, j):
    fx, F = _fixture_frame()
    true = _omega_true(U)
    eta = fx.relation_jet(U, 6)
    ctx = LieContext(F, eta)
    direct = F.derive(a, true[j]).value
    rule = float(ctx.lie_unit(a, j).value @ true.value)
    assert rule == pytest.approx(direct, rel=1e-9, abs=1e-10)


def test_second_lie_derivative_against_closed_omega():
    fx, F = _fixture_frame()
    true = _omega_true(U)
    ctx = LieContext(F, fx.relation_jet(U, 6))
    for a, b in [(0, 3), (1, 4), (3, 1), (4, 0), (2, 5)]:
        for j in (0, 1):
            form = ctx.lie_unit(b, j)
            direct = F.derive(a, F.derive(b, true[j])).value
            rule = float(ctx.lie(a, form).value @ true.value)
            assert rule == pytest.approx(direct, rel=1e-8, abs=1e-9)


def _exact_two_form(u, order):
    """Omega = d(theta) for a polynomial 1-form theta, as a jet matrix."""
    rng = np.random.default_rng(7)
    names = ["x1", "x2", "x3", "y1", "y2", "y3"]
    theta = []
    for _ in range(6):
        terms = [f"{c:.3f}*{names[p]}*{names[q]}" for c, p, q in zip(rng.normal(size=3), rng.integers(0, 6, 3), rng.integers(0, 6, 3))]
        theta.append(_jet(" + ".join(terms).replace("+ -", "- "), u, order))
    T = Jet.stack(theta)
    G = T.gradient()  # G[i, k] = d theta_i / d z_k
    return G.T - G  # Omega[k, i] = d_k theta_i - d_i theta_k


def test_six_term_identity_on_exact_form():
    _, F = _fixture_frame(order=4)
    W = _exact_two_form(U, 4)

    def om(X, Y):
        return (X * (W @ Y)).sum()

    e, Y, Z = F.fields[0] + F.fields[4], F.fields[3], F.fields[1] * F.fields[5][4]
    lhs = om(Y, Z).directional(e).value
    rhs = (
        -om(Z, e).directional(Y)
        - om(e, Y).directional(Z)
        + om(bracket(e, Y), Z)
        + om(bracket(Y, Z), e)
        + om(bracket(Z, e), Y)
    ).value
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_theta_annihilates_true_solution():
    fx, F = _fixture_frame()
    Theta, rank, _ = theta_matrix(F, fx.relation_jet(U, 6))
    a = _omega_true(U).value
    assert np.max(np.abs(a @ Theta)) <= 1e-9 * np.abs(Theta).max()
    assert rank == 1


def test_uncorrected_fifth_expansion_breaks_annihilation():
    fx, F = _fixture_frame()
    Theta, rank, _ = theta_matrix(F, fx.relation_jet(U, 6), tau5="uncorrected")
    a = _omega_true(U).value
    resid = np.abs(a @ Theta)
    assert np.all(resid[[0, 1, 2, 3, 4, 6]] <= 1e-9 * np.abs(Theta).max())
    assert resid[5] > 1e-3
    assert rank == 2


def test_theta_first_column_is_C_derivative():
    fx, F = _fixture_frame()
    eta = fx.relation_jet(U, 6)
    Theta, _, _ = theta_matrix(F, eta)
    assert np.allclose(Theta[:, 1], F.derive(5, eta).value)
    assert np.allclose(Theta[:, 0], eta.value)


def test_eta_zero_raises():
    _, F = _fixture_frame()
    eta = Jet.stack([_jet("0", U), _jet("1 + x1^2", U)])
    with pytest.raises(EtaZero):
        theta_matrix(F, eta)


def test_reduced_condition_two_paths(perturbed, example):
    # the eta pair equals the a_11, a_22 coefficients of the full third-order form
    F = eigenframe(None, perturbed, U, order=5)
    T = third_order_coeffs(F)
    pair = reduced_condition(F, T)
    main, _ = coeff1_form(F, T)
    assert np.max(np.abs(pair.values)) > 1e-3
    assert np.allclose(pair.values, main.value, rtol=1e-13, atol=1e-13)
    _, dropped = coeff1_form(eigenframe(None, example, U, order=5))
    assert dropped is not None and np.all(np.abs(dropped.value) <= TOL)


def test_coordinate_frame_has_zero_third_order_relation():
    # frames of the form h_i = d/dx_i + g_i d/dy_i give eta = 0 identically,
    # which is why the synthetic fixtures carry their relation explicitly
    _, F = _fixture_frame(order=5)
    assert np.all(reduced_condition(F).values == 0.0)


# verdicts --------------------------------------------------------------------------------


def _report(**kw):
    base = dict(point={}, classification=Classification.GENERIC, reducible=True, cond1_passed=True)
    base.update(kw)
    return ConditionReport(**base)


@pytest.mark.parametrize(
    "kw, expected",
    [
        (dict(classification=Classification.FLAT), Verdict.ISOTROPIC),
        (dict(classification=Classification.DEGENERATE), Verdict.INCONCLUSIVE),
        (dict(reducible=False), Verdict.INCONCLUSIVE),
        (dict(eta=[0.0, 0.0], eta_zero=[True, True]), Verdict.THM44),
        (dict(eta=[0.0, 1.0], eta_zero=[True, False]), Verdict.NOT),
        (dict(eta=[1.0, -2.0], eta_zero=[False, False], theta_rank=1), Verdict.FINAL),
        (dict(eta=[1.0, 2.0], eta_zero=[False, False], theta_rank=1), Verdict.NOT),
        (dict(eta=[1.0, -2.0], eta_zero=[False, False], theta_rank=2), Verdict.NOT),
        (dict(eta=[1.0, -2.0], eta_zero=[False, False], theta_rank=None), Verdict.INCONCLUSIVE),
        (dict(cond1_passed=False, eta=[1.0, -2.0], eta_zero=[False, False], theta_rank=1), Verdict.FINAL),
    ],
)
def test_verdict_tree(kw, expected):
    assert verdict(_report(**kw))[0] is expected


def test_aggregate():
    r = lambda v: _report(verdict=v)
    assert aggregate([r(Verdict.THM44)] * 3)[0] is Verdict.THM44
    assert aggregate([r(Verdict.THM44), r(Verdict.NOT)])[0] is Verdict.NOT
    assert aggregate([r(Verdict.THM44), r(Verdict.INCONCLUSIVE)])[0] is Verdict.INCONCLUSIVE
    assert aggregate([])[0] is Verdict.INCONCLUSIVE


def test_report_serializes():
    r = analyze_point(catalog.get("perturbed-example").model, U)
    d = r.to_dict()
    assert d["verdict"] == "inconclusive"
    assert list(d)[0] == "point"
    assert "1,2" in d["beta"]


# invariance ----------------------------------------------------------------------------


def _flags(r):
    return (r.classification, r.cond1_passed, r.reducible, r.verdict, tuple(r.eta_zero or ()), r.theta_rank)


@given(s1=st.floats(0.2, 5.0), s2=st.floats(0.2, 5.0), flip=st.booleans())
def test_invariant_under_eigenvector_rescaling(s1, s2, flip):
    for name in ("paper-example", "perturbed-example"):
        s = catalog.get(name).model
        base = analyze_point(s, U)
        sc = (-s1 if flip else s1, s2)
        other = analyze_point(s, U, scales=sc, permutation=(1, 0))
        assert _flags(other) == _flags(base)


@given(t=st.floats(0.3, 3.0))
def test_invariant_under_y_scaling(t):
    for name in ("paper-example", "perturbed-example", "isotropic3"):
        s = catalog.get(name).model
        assert _flags(analyze_point(s, U.scaled(t))) == _flags(analyze_point(s, U))


def test_analyze_frame_supplied_relation():
    fx, F = _fixture_frame()
    r = analyze_frame(F, Tolerances(), relation=fx.relation_jet(U, 6))
    assert r.eta_source == "supplied"
    assert r.theta_rank == 1 and r.verdict is Verdict.FINAL
