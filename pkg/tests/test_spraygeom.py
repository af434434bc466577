import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from projmetric import catalog
from projmetric.exprlang import SprayModel
from projmetric.jets import PointTM
from projmetric.spraygeom import (
    ComplexEigenvalues,
    EigenvalueCollision,
    FramePack,
    PointGeometry,
    bracket,
    connection,
    curvature,
    dyn_cov_derivative,
    eigenframe,
    eigvec_first_order,
    frame_brackets,
    jacobi,
    jet_inverse,
    phi_prime_coordinates,
    phi_prime_frame,
)

from conftest import SPRAYS, points

U = PointTM((0.3, -0.2, 0.5), (0.7, 1.1, 0.9))
TOL = 1e-8


def test_connection_by_hand():
    s = SprayModel.from_strings(["x1*y1*y3", "x3*y2^2", "y3^2"])
    N = connection(s, PointTM((1, 1, 1), (1, 1, 1))).N
    assert N[0, 0] == pytest.approx(-0.5)
    assert N[1, 1] == pytest.approx(-1.0)
    assert N[2, 2] == pytest.approx(-1.0)


def test_flat_connection_vanishes():
    c = connection(catalog.get("flat3").model, U)
    assert np.all(c.N == 0)


def test_example_family_gamma13(example):
    # Gamma^1_3 = (1/2) d_u f^1 y_1 - f^1 y_3 with f^1(x1, x3, u) = x1 u
    for u in points(count=5):
        N = connection(example, u).N
        x1, y1, y3 = u.x[0], u.y[0], u.y[2]
        f1, du = x1 * y1 / y3, x1
        assert N[0, 2] == pytest.approx(0.5 * du * y1 - f1 * y3, abs=1e-12)


@pytest.mark.parametrize("name", SPRAYS)
def test_homogeneity_and_curvature_identities(name):
    s = catalog.get(name).model
    for u in points(count=5, seed=3):
        g = PointGeometry(s, u, 4)
        c = connection(s, u, geom=g)
        J = jacobi(s, u, geom=g)
        R = curvature(s, u, geom=g)
        scale = 1 + J.norm
        assert c.homogeneity_residual <= TOL * scale
        assert c.horizontality_residual <= TOL * scale
        assert J.homogeneity_residual <= TOL * scale
        assert J.annihilation_residual <= TOL * scale
        assert R.contraction_residual <= TOL * scale
        assert R.jacobi_bracket_residual <= TOL * scale
        assert R.skew_residual == 0


def test_example_phi_upper_triangular(example):
    for u in points(count=5):
        Phi = jacobi(example, u).Phi
        assert np.all(np.abs(Phi[2]) <= TOL)
        assert abs(Phi[1, 0]) <= TOL and abs(Phi[0, 1]) <= TOL


def test_isotropic_eigenvalues_equal():
    s = catalog.get("isotropic3").model
    Phi = jacobi(s, U).Phi
    w = np.linalg.eigvals(Phi).real
    nonzero = np.delete(w, np.argmin(np.abs(w)))
    assert abs(nonzero[0] - nonzero[1]) <= 1e-9 * np.abs(w).max()


def test_eigenframe_example(example):
    F = eigenframe(None, example, U)
    lam = F.lambdas
    assert lam[-1] == 0 and len(set(np.round(lam, 10))) == 3
    assert np.allclose(F.P[:, -1], U.y)
    g = F.geometry
    for i in range(3):
        h = F.h(i)
        res = g.phi_on(h).value - lam[i] * F.v(i).value
        assert np.max(np.abs(res)) <= TOL
    assert np.allclose(F.h(2).value, g.S.value)
    assert np.allclose(F.v(2).value, g.C.value)


def test_eigenvalue_jets_match_first_order():
    # first-order eigenvalue/eigenvector coefficients against the left/right perturbation formula
    s = catalog.get("perturbed-example").model
    F = eigenframe(None, s, U)
    g = F.geometry
    Phi = g.Phi
    A0 = np.asarray(Phi.value)
    for slot, k in enumerate(F.label_order):
        for var in range(6):
            alpha = tuple(int(i == var) for i in range(6))
            dA = np.asarray(Phi.derivative(alpha))
            dlam, dp = eigvec_first_order(A0, dA, k)
            assert F.eigenvalues[slot].derivative(alpha) == pytest.approx(dlam, abs=1e-9)


def test_collision_surfaced():
    s = catalog.get("isotropic3").model
    with pytest.raises(EigenvalueCollision):
        eigenframe(None, s, U)
    with pytest.raises(EigenvalueCollision):
        eigenframe(None, catalog.get("flat3").model, U)


def test_complex_eigenvalues():
    # rotation-like Jacobi endomorphism
    s = SprayModel.from_strings(["x2*y3^2 - y1*y2", "-x1*y3^2", "0"])
    with pytest.raises((ComplexEigenvalues, EigenvalueCollision)):
        eigenframe(None, s, U)


def test_example_brackets(example):
    for u in points(count=5, seed=7):
        F = eigenframe(None, example, u)
        c = frame_brackets(example, u, F)
        n = 3
        assert np.max(np.abs(c[n + 0, 1])) <= TOL  # [v1, h2]
        assert np.max(np.abs(c[n + 1, 0])) <= TOL  # [v2, h1]
        assert np.max(np.abs(c[0, 1])) <= TOL  # [h1, h2]
        for i in range(2):
            comp = c[i, n + i].copy()
            comp[n + i] = 0.0
            assert np.max(np.abs(comp)) <= TOL  # [h_i, v_i] in span(v_i)


def test_bracket_reconstruction():
    F = eigenframe(None, catalog.get("perturbed-example").model, U)
    for a, b in [(0, 1), (0, 4), (3, 5), (2, 4)]:
        direct = F.bracket_field(a, b).value
        recon = F.combo(F.structure[a, b]).value
        assert np.max(np.abs(direct - recon)) <= 1e-9


@pytest.mark.parametrize("name", ["paper-example", "perturbed-example"])
def test_jacobi_identity_of_frame(name):
    F = eigenframe(None, catalog.get(name).model, U, order=4)
    c = F.structure
    m = 6
    worst = 0.0
    for a in range(m):
        for b in range(a + 1, m):
            for d in range(b + 1, m):
                total = 0.0
                for (p, q, r) in [(a, b, d), (b, d, a), (d, a, b)]:
                    # [[e_p, e_q], e_r] in frame components
                    inner = c[p, q]
                    val = -F.combo(inner).directional(F.fields[r]) + F.fields[r].directional(F.combo(inner))
                    total = total + F.components(val).value
                worst = max(worst, float(np.max(np.abs(total))))
    assert worst <= 1e-6


def test_jacobi_identity_finite_differences():
    # brackets of coordinate fields computed by central differences as oracle
    s = catalog.get("perturbed-example").model
    F = eigenframe(None, s, U, order=3)
    X, Y = F.fields[0], F.fields[4]
    jet_br = bracket(X, Y).value
    h = 1e-5
    c = U.coords

    def field_at(k, sign):
        cc = c.copy()
        cc[k] += sign * h
        v = PointTM(tuple(cc[:3]), tuple(cc[3:]))
        Fv = eigenframe(None, s, v, order=2)
        return Fv.fields[0].value, Fv.fields[4].value

    dX = np.zeros((6, 6))
    dY = np.zeros((6, 6))
    for k in range(6):
        (xp, yp), (xm, ym) = field_at(k, 1), field_at(k, -1)
        dX[:, k] = (xp - xm) / (2 * h)
        dY[:, k] = (yp - ym) / (2 * h)
    fd = dY @ X.value - dX @ Y.value
    assert np.max(np.abs(fd - jet_br)) <= 1e-6


def test_jet_inverse():
    F = eigenframe(None, catalog.get("paper-example").model, U)
    E = F.fields.T
    I = (jet_inverse(E) @ E).coeffs
    ref = np.zeros_like(I)
    ref[..., 0] = np.eye(6)
    assert np.max(np.abs(I - ref)) <= 1e-10


def test_phi_prime_frame_vs_coordinates(perturbed):
    F = eigenframe(None, perturbed, U)
    M = dyn_cov_derivative(perturbed, U, F)
    coord = phi_prime_coordinates(F.geometry)
    assert np.max(np.abs(np.linalg.solve(F.P, coord @ F.P) - M)) <= 1e-9


def test_example_phi_prime_diagonal(example):
    for u in points(count=5, seed=11):
        F = eigenframe(None, example, u)
        M = phi_prime_frame(F)
        Mv = np.asarray(M.value)
        assert np.max(np.abs(Mv - np.diag(np.diag(Mv)))) <= TOL
        assert abs(Mv[2, 2]) <= TOL
        for i in range(2):
            assert Mv[i, i] == pytest.approx(F.derive(2, F.eigenvalues[i]).value, abs=1e-10)


@given(t=st.floats(0.25, 4.0), s1=st.floats(0.2, 5.0), s2=st.floats(-5.0, -0.2))
def test_structure_scaling(t, s1, s2):
    # rescaling y scales Phi by t^2; rescaling eigenvectors leaves eigenvalues unchanged
    s = catalog.get("perturbed-example").model
    J1 = jacobi(s, U).Phi
    J2 = jacobi(s, U.scaled(t)).Phi
    assert np.allclose(J2, t * t * J1, rtol=1e-10, atol=1e-12)
    F = eigenframe(None, s, U, scales=(s1, s2))
    G = eigenframe(None, s, U)
    assert np.allclose(F.lambdas, G.lambdas)


def test_from_fields_shape_check():
    F = eigenframe(None, catalog.get("paper-example").model, U)
    with pytest.raises(ValueError):
        FramePack.from_fields(F.fields[:5], F.eigenvalues)
