"""Acceptance criteria 1-7; each test prints one PASS/FAIL line."""
import time

import numpy as np
import pytest

from projmetric import catalog
from projmetric.analysis import AnalysisConfig, analyze, sample_points
from projmetric.exprlang import evaluate
from projmetric.jets import PointTM
from projmetric.metrizability import Classification, analyze_point
from projmetric.spencer import PSI_WEIGHTS, cartan_test, spencer_H, tau_nullity
from projmetric.spencer.claims import dim_g, rank_sigma3
from projmetric.spraygeom import (
    EigenvalueCollision,
    PointGeometry,
    connection,
    curvature,
    eigenframe,
    jacobi,
)


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail

    return emit


def test_criterion_1_rank_sigma3(report):
    rows, ok = [], True
    for n in (2, 3, 4):
        t = time.perf_counter()
        r = rank_sigma3(n)
        secs = time.perf_counter() - t
        expected = (6 * n**3 + 9 * n**2 - 9 * n + 12) // 6
        ok &= r == expected and secs <= 60
        rows.append(f"n={n}: {r} vs {expected} ({secs:.1f}s)")
    report(1, ok, "; ".join(rows))


def test_criterion_2_tau_exact(report):
    t = tau_nullity(3)
    ok = t.nullity == t.rank_sigma3 == 38 and t.composition_zero
    report(2, ok, f"nul tau = {t.nullity}, rank sigma3 = {t.rank_sigma3}, tau o sigma3 = 0: {t.composition_zero}")


def test_criterion_3_spencer(report):
    t0 = time.perf_counter()
    parts, ok = [], True
    g3 = dim_g(3, 3)
    ok &= g3 == 18
    parts.append(f"dim g3 = {g3}")
    for m in (3, 4, 5):
        r = spencer_H(3, m)
        exp = (5 * m * m + 53 * m + 38) // 2
        ok &= r.H == 0 and r.rank_delta1 == exp and r.complex_ok
        parts.append(f"m={m}: H={r.H}, rank d1={r.rank_delta1}/{exp}")
    h22 = spencer_H(3, 2).H
    ok &= h22 == 1
    parts.append(f"H22 = {h22}")
    secs = time.perf_counter() - t0
    ok &= secs <= 600
    report(3, ok, "; ".join(parts) + f" ({secs:.1f}s)")


def test_criterion_4_cartan(report):
    pt = cartan_test(3, 3, psi_weights=PSI_WEIGHTS)
    p = cartan_test(3, 3)
    ok = pt.passed and not p.passed
    report(
        4,
        ok,
        f"P~: {pt.dim_next} vs {pt.total} ({'pass' if pt.passed else 'fail'}); "
        f"P: {p.dim_next} vs {p.total} ({'pass' if p.passed else 'fail'})",
    )


def test_criterion_5_example(report):
    tol = 1e-8
    s = catalog.get("paper-example").model
    t0 = time.perf_counter()
    cfg = AnalysisConfig(points=20, seed=0, tol=tol)
    rep = analyze(s, cfg)
    checks = {k: True for k in ("Phi y", "triangular", "distinct", "brackets", "third-order", "span")}
    for u in sample_points(3, cfg):
        g = PointGeometry(s, u, 4)
        J = jacobi(s, u, geom=g)
        Phi = J.Phi
        checks["Phi y"] &= J.annihilation_residual <= tol
        checks["triangular"] &= bool(np.all(np.abs(Phi[2]) <= tol) and abs(Phi[1, 0]) <= tol and abs(Phi[0, 1]) <= tol)
        F = eigenframe(J, s, u, geom=g)
        lam = F.lambdas
        checks["distinct"] &= min(abs(lam[0] - lam[1]), abs(lam[0]), abs(lam[1])) > tol
        c = np.asarray(F.structure.value)
        checks["brackets"] &= max(np.abs(c[3, 1]).max(), np.abs(c[4, 0]).max(), np.abs(c[0, 1]).max()) <= tol
    pts = rep["points"]
    for p in pts:
        checks["third-order"] &= all(
            abs(v) <= tol for key in ("kappa", "theta", "beta", "gamma") for v in p[key].values()
        )
        checks["span"] &= p["cond1_residual"] <= tol
    secs = time.perf_counter() - t0
    verdict = rep["aggregate"]["verdict"]
    ok = all(checks.values()) and verdict == "metrizable-by-Thm4.4" and secs <= 10
    failed = [k for k, v in checks.items() if not v]
    report(5, ok, f"20 points, verdict {verdict}, failed checks {failed or 'none'} ({secs:.1f}s)")


def _fd_ok(model, u):
    from projmetric.exprlang import eval_jet

    h = 1e-5
    c = u.coords
    for e in model.coeffs:
        j = eval_jet(e, u, 1)
        for k in range(2 * u.n):
            p, m = c.copy(), c.copy()
            p[k] += h
            m[k] -= h
            n = u.n
            fd = (evaluate(e, p[:n], p[n:]) - evaluate(e, m[:n], m[n:])) / (2 * h)
            d = j.derivative(tuple(int(i == k) for i in range(2 * n)))
            if abs(d - fd) > 1e-6 * max(abs(fd), 1.0):
                return False
    return True


def _bracket_jacobi(F):
    c = F.structure
    worst = 0.0
    m = 2 * F.n
    for a in range(m):
        for b in range(a + 1, m):
            for d in range(b + 1, m):
                total = 0.0
                for p, q, r in ((a, b, d), (b, d, a), (d, a, b)):
                    X = F.combo(c[p, q])
                    total = total + F.components(F.fields[r].directional(X) - X.directional(F.fields[r])).value
                worst = max(worst, float(np.max(np.abs(total))))
    return worst


def _flags(r):
    return (r.classification, r.cond1_passed, r.reducible, r.verdict, tuple(r.eta_zero or ()), r.theta_rank)


def test_criterion_6_properties(report):
    tol = 1e-8
    sprays = [e.model for e in catalog.CATALOG.values() if e.kind == "spray"]
    pts = sample_points(3, AnalysisConfig(points=6, seed=1))
    fd = homog = contraction = True
    worst_jacobi = 0.0
    invariant = True
    for s in sprays:
        for u in pts:
            fd &= _fd_ok(s, u)
            g = PointGeometry(s, u, 4)
            J = jacobi(s, u, geom=g)
            scale = 1 + J.norm
            homog &= connection(s, u, geom=g).homogeneity_residual <= tol * scale
            homog &= J.homogeneity_residual <= tol * scale
            contraction &= curvature(s, u, geom=g).contraction_residual <= tol * scale
            base = analyze_point(s, u)
            invariant &= _flags(analyze_point(s, u.scaled(1.7))) == _flags(base)
            if base.classification is Classification.GENERIC:
                invariant &= _flags(analyze_point(s, u, scales=(-2.5, 0.3))) == _flags(base)
                worst_jacobi = max(worst_jacobi, _bracket_jacobi(eigenframe(J, s, u, geom=g)))
    ok = fd and homog and contraction and worst_jacobi <= 1e-6 and invariant
    report(
        6,
        ok,
        f"finite differences {fd}, Euler N/Phi {homog}, i_S R = Phi {contraction}, "
        f"Jacobi identity residual {worst_jacobi:.1e}, invariance {invariant}",
    )


def test_criterion_7_negative_paths(report):
    cfg = AnalysisConfig(points=4, seed=2)
    flat = analyze(catalog.get("flat3").model, cfg)["aggregate"]
    flat_ok = flat["metrizable"] and flat["classification_counts"] == {"flat": 4}
    u = PointTM((0.3, -0.2, 0.5), (0.7, 1.1, 0.9))
    try:
        eigenframe(None, catalog.get("isotropic3").model, u)
        collision = False
    except EigenvalueCollision:
        collision = True
    iso = analyze_point(catalog.get("isotropic3").model, u)
    collision &= iso.classification is not Classification.GENERIC
    results = {
        name: analyze(catalog.get(name).model, cfg)["aggregate"]
        for name in ("reducible-rank1", "reducible-samesign", "reducible-rank2")
    }
    theta_ok = (
        results["reducible-rank1"]["verdict"] == "metrizable-by-final-Thm"
        and results["reducible-rank1"]["theta_ranks"] == [1]
        and results["reducible-samesign"]["verdict"] == "not-metrizable"
        and results["reducible-samesign"]["theta_ranks"] == [1]
        and results["reducible-rank2"]["verdict"] == "not-metrizable"
        and results["reducible-rank2"]["theta_ranks"] == [2]
    )
    ok = flat_ok and collision and theta_ok
    summary = ", ".join(f"{k}: {v['verdict']} rank {v['theta_ranks']}" for k, v in results.items())
    report(7, ok, f"flat {flat['verdict']}; collision surfaced {collision}; {summary}")
