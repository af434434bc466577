"""Command-line entry point: ``analyze``, ``spencer`` and ``catalog``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import catalog
from .analysis import AnalysisConfig, HomogeneityError, analyze
from .exprlang import ExprSyntaxError
from .jets import JetError
from .spencer import ResourceLimit, verify

EXIT_METRIZABLE, EXIT_NOT, EXIT_INCONCLUSIVE = 0, 1, 2
EXIT_USAGE, EXIT_INPUT, EXIT_RESOURCE = 3, 4, 5


def _range(text: str) -> tuple[int, ...]:
    """``"3"`` or ``"2..5"`` (inclusive)."""
    try:
        if ".." in text:
            lo, hi = (int(t) for t in text.split("..", 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or A..B, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return tuple(range(lo, hi + 1))


def _dump(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, ensure_ascii=False) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_analyze(args) -> int:
    if args.file.startswith("catalog:"):
        model = catalog.get(args.file.split(":", 1)[1]).model
    else:
        model = catalog.load(args.file)
    cfg = AnalysisConfig(
        points=args.points,
        seed=args.seed,
        tol=args.tol,
        sep_tol=args.sep_tol,
        rank_tol=args.rank_tol,
        jobs=args.jobs,
        skip_homogeneity=args.skip_homogeneity,
    )
    report = analyze(model, cfg, source=args.file)
    _dump(report, args.out)
    agg = report["aggregate"]
    print(f"verdict: {agg['verdict']} ({'; '.join(agg['reasons'])})", file=sys.stderr)
    if agg["metrizable"]:
        return EXIT_METRIZABLE
    return EXIT_NOT if agg["verdict"] == "not-metrizable" else EXIT_INCONCLUSIVE


def cmd_spencer(args) -> int:
    claims = verify(ns=args.n, ms=args.m, seed=args.seed, limit=args.limit)
    rows = [c.as_dict() for c in claims]
    if args.json:
        _dump({"seed": args.seed, "claims": rows}, args.out)
    else:
        print(f"{'claim':44s} {'formula':>8s} {'brute':>8s}  match  auth")
        for r in rows:
            print(f"{r['claim_id']:44s} {str(r['formula']):>8s} {str(r['brute_force']):>8s}  "
                  f"{'yes' if r['match'] else 'NO ':5s}  {'yes' if r['authoritative'] else 'info'}")
    ok = all(c.match for c in claims if c.authoritative)
    return 0 if ok else 1


def cmd_catalog(args) -> int:
    if args.action == "list":
        for name in catalog.names():
            e = catalog.get(name)
            print(f"{name:20s} {e.kind:6s} expected: {e.expected}")
        return 0
    if not args.name:
        print(f"catalog {args.action} needs an entry name", file=sys.stderr)
        return EXIT_USAGE
    e = catalog.get(args.name)
    text = catalog.dumps(e.model, comment=f"{e.name}: {e.provenance}\nexpected verdict: {e.expected}")
    if args.action == "show":
        sys.stdout.write(text)
    else:
        out = args.out or f"{e.name}.toml"
        Path(out).write_text(text, encoding="utf-8")
        print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="projmetric", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="sample a spray and evaluate the metrizability conditions")
    a.add_argument("file", help="spray file (.toml or .json), or catalog:<name>")
    a.add_argument("--points", type=int, default=50)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--tol", type=float, default=1e-8)
    a.add_argument("--sep-tol", type=float, default=1e-7)
    a.add_argument("--rank-tol", type=float, default=1e-6)
    a.add_argument("--jobs", type=int, default=1)
    a.add_argument("--skip-homogeneity", action="store_true")
    a.add_argument("--out", help="write the JSON report here instead of stdout")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("spencer", help="check the symbol and Spencer dimension claims")
    s.add_argument("--n", type=_range, default=(2, 3, 4))
    s.add_argument("--m", type=_range, default=(2, 3, 4, 5))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--limit", type=int, default=20000, help="largest matrix dimension allowed")
    s.add_argument("--json", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_spencer)

    c = sub.add_parser("catalog", help="built-in sprays and fixtures")
    c.add_argument("action", choices=("list", "show", "export"))
    c.add_argument("name", nargs="?")
    c.add_argument("--out")
    c.set_defaults(func=cmd_catalog)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except catalog.UnknownCatalogEntry as exc:
        print(f"error: unknown catalog entry {exc.args[0]!r}", file=sys.stderr)
        return EXIT_INPUT
    except (catalog.SpecError, ExprSyntaxError, HomogeneityError, JetError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceLimit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
