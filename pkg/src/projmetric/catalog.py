"""Built-in sprays and synthetic frame fixtures, and their file format.

A spray file is TOML (or JSON) with ``dimension``, ``label`` and
``coeffs = ["f1", ...]``.  A frame fixture adds ``kind = "frame"`` and gives
the adapted frame directly: ``fields`` (2n rows of 2n component
expressions in the coordinate basis ``d/dx_i, d/dy_i``), ``eigenvalues``
(n expressions) and ``relation`` (the pair ``eta_1, eta_2``).
"""
from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .exprlang import SprayModel, eval_jet, parse
from .jets import Jet, PointTM
from .spraygeom import FramePack

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "UnknownCatalogEntry",
    "SpecError",
    "FrameFixture",
    "Entry",
    "CATALOG",
    "names",
    "get",
    "load",
    "loads",
    "dumps",
]


class UnknownCatalogEntry(KeyError):
    pass


class SpecError(ValueError):
    """Malformed spray or fixture file."""


@dataclass(frozen=True)
class FrameFixture:
    """An adapted frame, its eigenvalue functions and a supplied reduced relation."""

    n: int
    fields: tuple[tuple[str, ...], ...]
    eigenvalues: tuple[str, ...]
    relation: tuple[str, str]
    label: str = ""

    def __post_init__(self):
        m = 2 * self.n
        if len(self.fields) != m or any(len(r) != m for r in self.fields):
            raise SpecError(f"fields must be {m} rows of {m} expressions")
        if len(self.eigenvalues) != self.n:
            raise SpecError(f"need {self.n} eigenvalues")
        if len(self.relation) != 2:
            raise SpecError("relation must have two entries")
        # parse eagerly so bad input fails at load time
        object.__setattr__(self, "_parsed", {s: parse(s, self.n) for s in self._sources()})

    def _sources(self):
        yield from (s for row in self.fields for s in row)
        yield from self.eigenvalues
        yield from self.relation

    def _jet(self, s: str, u: PointTM, order: int) -> Jet:
        return eval_jet(self._parsed[s], u, order)

    def frame(self, u: PointTM, order: int) -> FramePack:
        rows = [Jet.stack([self._jet(s, u, order) for s in row]) for row in self.fields]
        lam = Jet.stack([self._jet(s, u, order) for s in self.eigenvalues])
        return FramePack.from_fields(Jet.stack(rows), lam)

    def relation_jet(self, u: PointTM, order: int) -> Jet:
        return Jet.stack([self._jet(s, u, order) for s in self.relation])


@dataclass(frozen=True)
class Entry:
    name: str
    model: SprayModel | FrameFixture
    provenance: str
    expected: str
    tags: tuple[str, ...] = field(default_factory=tuple)

    @property
    def kind(self) -> str:
        return "frame" if isinstance(self.model, FrameFixture) else "spray"


def _coordinate_frame(g: list[str], n: int = 3) -> tuple[tuple[str, ...], ...]:
    """``h_i = d/dx_i + g_i d/dy_i``, ``v_i = d/dy_i``."""
    rows = []
    for i in range(n):
        r = ["0"] * (2 * n)
        r[i] = "1"
        r[n + i] = g[i]
        rows.append(tuple(r))
    for i in range(n):
        r = ["0"] * (2 * n)
        r[n + i] = "1"
        rows.append(tuple(r))
    return tuple(rows)


# Omega = a_1 dy_1^dx_1 + a_2 dy_2^dx_2 is closed when a_i depends on (x_i, y_i) only;
# a relation proportional to (a_22, -a_11) is then satisfied by a genuine solution.
_G = ["x2*y1^2 + x1*y1*y3 + x3*y1", "x1*y2^2 - x2*y1*y2 + y3^2", "x1*x2*y3 + y1*y2"]
_FIELDS = _coordinate_frame(_G)
_LAMBDAS = ("1 + x1^2", "-1 - y2^2", "0")
_A1 = "(1 + x1^2 + y1^2)"
_A2 = "(2 + x2*y2 + y2^2)"
_PHI = "(1 + x3^2 + y1^2*y2^2)"


def _fixture(label, relation):
    return FrameFixture(3, _FIELDS, _LAMBDAS, relation, label)


_ENTRIES = [
    Entry(
        "flat3",
        SprayModel.from_strings(["0", "0", "0"], label="flat3"),
        "straight lines in R^3",
        "metrizable-isotropic",
        ("flat",),
    ),
    Entry(
        "isotropic3",
        SprayModel.from_strings(
            [f"-2*(x1*y1 + x2*y2 + x3*y3)*y{i}" for i in (1, 2, 3)], label="isotropic3"
        ),
        "projectively flat spray f^i = P y^i with P = -2 <x, y>",
        "metrizable-isotropic",
        ("isotropic",),
    ),
    Entry(
        "paper-example",
        SprayModel.from_strings(["x1*y1*y3", "x3*y2^2", "y3^2"], label="paper-example"),
        "member of the family x1'' = f^1(x1, x3, x1'/x3') x3'^2, "
        "x2'' = f^2(x2, x3, x2'/x3') x3'^2, x3'' = f^3(x3) x3'^2 "
        "with f^1 = x1 u, f^2 = x3 u^2, f^3 = 1",
        "metrizable-by-Thm4.4",
        ("generic",),
    ),
    Entry(
        "perturbed-example",
        SprayModel.from_strings(
            ["x1*y1*y3 + x2*y1*y3", "x3*y2^2", "y3^2"], label="perturbed-example"
        ),
        "paper-example with f^1 += x2 y1 y3, which couples the first two blocks",
        "inconclusive",
        ("generic",),
    ),
    Entry(
        "reducible-rank1",
        _fixture("reducible-rank1", (f"{_PHI}*{_A2}", f"-{_PHI}*{_A1}")),
        "synthetic reducible frame; relation solved by the closed form "
        "a_11 = " + _A1 + ", a_22 = " + _A2 + " (eta_1 eta_2 < 0)",
        "metrizable-by-final-Thm",
        ("synthetic",),
    ),
    Entry(
        "reducible-samesign",
        _fixture("reducible-samesign", (f"{_PHI}*{_A2}", f"{_PHI}*{_A1}")),
        "synthetic reducible frame; relation solved by a_11 = " + _A1
        + ", a_22 = -" + _A2 + " so Theta has rank 1 but eta_1 eta_2 > 0",
        "not-metrizable",
        ("synthetic",),
    ),
    Entry(
        "reducible-rank2",
        _fixture("reducible-rank2", ("3 + x1*y2", "-(5 + x3*y1^2)")),
        "synthetic reducible frame with a relation no closed form satisfies",
        "not-metrizable",
        ("synthetic",),
    ),
]

CATALOG: dict[str, Entry] = {e.name: e for e in _ENTRIES}


def names() -> list[str]:
    return list(CATALOG)


def get(name: str) -> Entry:
    try:
        return CATALOG[name]
    except KeyError:
        raise UnknownCatalogEntry(name) from None


# file format -------------------------------------------------------------------


def _from_mapping(d: dict) -> SprayModel | FrameFixture:
    try:
        n = int(d["dimension"])
    except (KeyError, TypeError, ValueError):
        raise SpecError("missing or invalid 'dimension'") from None
    label = str(d.get("label", ""))
    kind = d.get("kind", "spray")
    if kind == "spray":
        coeffs = d.get("coeffs")
        if not isinstance(coeffs, list) or not all(isinstance(c, str) for c in coeffs):
            raise SpecError("'coeffs' must be a list of expression strings")
        if len(coeffs) != n:
            raise SpecError(f"dimension {n} but {len(coeffs)} coefficients")
        return SprayModel.from_strings(coeffs, label=label)
    if kind == "frame":
        try:
            return FrameFixture(
                n,
                tuple(tuple(r) for r in d["fields"]),
                tuple(d["eigenvalues"]),
                tuple(d["relation"]),
                label,
            )
        except KeyError as exc:
            raise SpecError(f"frame fixture needs {exc.args[0]!r}") from None
    raise SpecError(f"unknown kind {kind!r}")


def loads(text: str, fmt: str = "toml") -> SprayModel | FrameFixture:
    try:
        data = json.loads(text) if fmt == "json" else tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise SpecError(f"cannot parse {fmt}: {exc}") from None
    return _from_mapping(data)


def load(path: str | Path) -> SprayModel | FrameFixture:
    p = Path(path)
    fmt = "json" if p.suffix.lower() == ".json" else "toml"
    return loads(p.read_text(encoding="utf-8"), fmt)


def _toml_str(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def _toml_list(items) -> str:
    return "[" + ", ".join(_toml_str(s) for s in items) + "]"


def dumps(model: SprayModel | FrameFixture, comment: str = "") -> str:
    """TOML text that ``loads`` reads back to an equivalent model."""
    lines = [f"# {ln}" for ln in comment.splitlines()] if comment else []
    if isinstance(model, FrameFixture):
        lines += [
            'kind = "frame"',
            f"dimension = {model.n}",
            f"label = {_toml_str(model.label)}",
            "fields = [",
            *(f"  {_toml_list(r)}," for r in model.fields),
            "]",
            f"eigenvalues = {_toml_list(model.eigenvalues)}",
            f"relation = {_toml_list(model.relation)}",
        ]
    else:
        lines += [
            f"dimension = {model.n}",
            f"label = {_toml_str(model.label)}",
            f"coeffs = {_toml_list(model.sources)}",
        ]
    return "\n".join(lines) + "\n"
