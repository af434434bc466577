"""Sampling, per-point fan-out and the JSON report."""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .catalog import FrameFixture
from .exprlang import SprayModel
from .jets import PointTM
from .metrizability import (
    ORDER_BASIC,
    ORDER_THETA,
    Classification,
    ConditionReport,
    Verdict,
    aggregate,
    analyze_frame,
    analyze_point,
)
from .spraygeom import Tolerances

__all__ = ["SCHEMA_VERSION", "AnalysisConfig", "sample_points", "analyze", "run_point", "fold"]

SCHEMA_VERSION = "1.0"


@dataclass
class AnalysisConfig:
    points: int = 50
    seed: int = 0
    x_box: tuple[float, float] = (-1.0, 1.0)
    y_annulus: tuple[float, float] = (0.5, 2.0)
    explicit: list = field(default_factory=list)  # [(x, y), ...]
    tol: float = 1e-8
    sep_tol: float = 1e-7
    rank_tol: float = 1e-6
    order: int = ORDER_BASIC
    theta_order: int = ORDER_THETA
    jobs: int = 1
    skip_homogeneity: bool = False

    def __post_init__(self):
        if self.points < 0 or (self.points == 0 and not self.explicit):
            raise ValueError("need at least one sample point")
        lo, hi = self.x_box
        if not lo < hi:
            raise ValueError("x box bounds must satisfy lo < hi")
        r0, r1 = self.y_annulus
        if not 0 < r0 <= r1:
            raise ValueError("y annulus must satisfy 0 < r_min <= r_max")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    @property
    def tolerances(self) -> Tolerances:
        return Tolerances(self.tol, self.sep_tol, self.rank_tol)

    def echo(self) -> dict:
        d = asdict(self)
        d["x_box"] = list(self.x_box)
        d["y_annulus"] = list(self.y_annulus)
        d["explicit"] = [[list(x), list(y)] for x, y in self.explicit]
        return d


def sample_points(n: int, cfg: AnalysisConfig) -> list[PointTM]:
    """Explicit points first, then ``cfg.points`` seeded draws.

    ``x`` is uniform in the box; ``y`` has a uniform direction and a norm
    uniform in the annulus.
    """
    pts = [PointTM(tuple(map(float, x)), tuple(map(float, y))) for x, y in cfg.explicit]
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.points):
        x = rng.uniform(*cfg.x_box, size=n)
        d = rng.standard_normal(n)
        d /= np.linalg.norm(d)
        y = d * rng.uniform(*cfg.y_annulus)
        pts.append(PointTM(tuple(x.tolist()), tuple(y.tolist())))
    return pts


def run_point(model, u: PointTM, cfg: AnalysisConfig) -> ConditionReport:
    """One point; errors become inconclusive reports rather than exceptions."""
    tols = cfg.tolerances
    try:
        if isinstance(model, FrameFixture):
            F = model.frame(u, cfg.theta_order)
            rel = model.relation_jet(u, cfg.theta_order)
            lam = F.lambdas
            gap = float(np.min(np.abs(np.subtract.outer(lam, lam)[np.triu_indices(len(lam), 1)])))
            if gap <= tols.sep_tol * (1.0 + float(np.max(np.abs(lam)))):
                return ConditionReport(
                    point={"x": list(u.x), "y": list(u.y)},
                    classification=Classification.DEGENERATE,
                    eigenvalues=lam.tolist(),
                    reasons=["eigenvalue collision"],
                )
            return analyze_frame(F, tols, point={"x": list(u.x), "y": list(u.y)}, relation=rel)
        return analyze_point(model, u, tols, cfg.order, cfg.theta_order)
    except ArithmeticError as exc:  # jet, geometry and eta failures
        return ConditionReport(
            point={"x": list(u.x), "y": list(u.y)},
            classification=Classification.DEGENERATE,
            reasons=[f"{type(exc).__name__}: {exc}"],
        )


def _worker(args):
    model, u, cfg = args
    return run_point(model, u, cfg)


def fold(reports: list[ConditionReport]) -> dict:
    """Aggregate verdict; degenerate points are reported but do not vote."""
    voting = [r for r in reports if r.classification is not Classification.DEGENERATE]
    skipped = len(reports) - len(voting)
    if voting:
        v, reasons = aggregate(voting)
    else:
        v, reasons = Verdict.INCONCLUSIVE, ["no point with a usable eigenframe"]
    if skipped:
        reasons = reasons + [f"{skipped} degenerate point(s) excluded"]
    counts: dict[str, int] = {}
    for r in reports:
        counts[r.classification.value] = counts.get(r.classification.value, 0) + 1
    return {
        "verdict": v.value,
        "metrizable": v.metrizable,
        "reasons": reasons,
        "classification_counts": dict(sorted(counts.items())),
        "max_cond1_residual": _max(r.cond1_residual for r in reports),
        "max_abs_eta": _max(max(map(abs, r.eta)) if r.eta else None for r in reports),
        "theta_ranks": sorted({r.theta_rank for r in reports if r.theta_rank is not None}),
    }


def _max(values):
    vals = [v for v in values if v is not None]
    return max(vals) if vals else None


def _spray_echo(model) -> dict:
    if isinstance(model, FrameFixture):
        return {
            "kind": "frame",
            "dimension": model.n,
            "label": model.label,
            "fields": [list(r) for r in model.fields],
            "eigenvalues": list(model.eigenvalues),
            "relation": list(model.relation),
        }
    return {"kind": "spray", "dimension": model.n, "label": model.label, "coeffs": model.sources}


def analyze(model: SprayModel | FrameFixture, cfg: AnalysisConfig, source: str = "") -> dict:
    """Full analysis; returns the report as an ordered dict ready for JSON."""
    t0 = time.perf_counter()
    pts = sample_points(model.n, cfg)
    homogeneity = None
    if isinstance(model, SprayModel):
        failures = [i + 1 for i, rep in enumerate(model.check_homogeneity(pts)) if not rep.passed]
        homogeneity = {"checked": not cfg.skip_homogeneity, "failed_components": failures}
        if failures and not cfg.skip_homogeneity:
            raise HomogeneityError(f"coefficients {failures} are not 2-homogeneous")
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            reports = list(pool.map(_worker, [(model, u, cfg) for u in pts]))
    else:
        reports = [run_point(model, u, cfg) for u in pts]
    t1 = time.perf_counter()
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "projmetric", "version": __version__},
        "input": {"source": source, **_spray_echo(model), "homogeneity": homogeneity},
        "config": cfg.echo(),
        "aggregate": fold(reports),
        "points": [r.to_dict() for r in reports],
        "timing": {"seconds": round(t1 - t0, 6), "per_point": round((t1 - t0) / max(len(pts), 1), 6)},
    }


class HomogeneityError(ValueError):
    pass
