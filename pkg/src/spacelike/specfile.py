"""Surface-spec files.

A spec is a flat ``key = value`` text file; ``#`` starts a comment and blank
lines are ignored.  Keys:

``chart``
    ``disk`` or ``polar`` (required).
``domain``
    ``u0 u1 v0 v1``, the chart rectangle (required).
``graph``
    height expression in ``u`` and ``v``; the patch is t = graph(u, v) over
    the chart rectangle.
``x``, ``y``, ``t`` (disk) or ``r``, ``theta``, ``t`` (polar)
    the three coordinate expressions of a general patch.
``rotational``
    ``<K> axis`` or ``<K> annulus <r0> <h0> <v0>``: a rotational graph of
    constant curvature K obtained by shooting; polar chart only, with the
    domain's u-range read as the radius range.
``max_step``
    largest integrator step for ``rotational`` (default 0.01).
``label``
    free text.

Exactly one of ``graph``, the coordinate triple or ``rotational`` must be
given.  Example::

    chart = disk
    domain = -0.5 0.5 -0.5 0.5
    graph = 0.2*sinh(u)*cos(v)
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .ambient import HyperbolicChart
from .expr import ExprError
from .surface import SurfacePatch

ROTATIONAL_MAX_STEP = 0.01
KEYS = {"chart", "domain", "graph", "x", "y", "t", "r", "theta", "rotational", "max_step", "label"}


class SpecError(ValueError):
    """Malformed surface spec; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass(frozen=True)
class SurfaceSpec:
    text: str
    entries: dict = field(default_factory=dict)

    @property
    def fingerprint(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()[:16]

    @property
    def is_ode(self) -> bool:
        return "rotational" in self.entries


def parse_spec(text: str) -> SurfaceSpec:
    entries: dict[str, str] = {}
    lines: dict[str, int] = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"expected 'key = value', got {raw.strip()!r}", n)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise SpecError(f"unknown key {key!r}", n)
        if key in entries:
            raise SpecError(f"duplicate key {key!r}", n)
        if not value:
            raise SpecError(f"empty value for {key!r}", n)
        entries[key] = value
        lines[key] = n
    for key in ("chart", "domain"):
        if key not in entries:
            raise SpecError(f"missing required key {key!r}")
    spec = SurfaceSpec(text, entries)
    _validate(spec, lines)
    return spec


def _validate(spec: SurfaceSpec, lines: dict) -> None:
    e = spec.entries
    try:
        chart = HyperbolicChart(e["chart"])
    except ValueError as exc:
        raise SpecError(str(exc), lines["chart"]) from None
    names = chart.coordinate_names + ("t",)
    triple = [k for k in names if k in e]
    stray = [k for k in ("x", "y", "r", "theta") if k in e and k not in names]
    if stray:
        raise SpecError(f"key {stray[0]!r} does not belong to the {chart.short_name} chart", lines[stray[0]])
    kinds = sum(["graph" in e, bool(triple), "rotational" in e])
    if kinds != 1:
        raise SpecError("give exactly one of 'graph', the coordinate triple or 'rotational'")
    if triple and len(triple) != 3:
        missing = [k for k in names if k not in e]
        raise SpecError(f"coordinate triple incomplete, missing {missing}")
    if "rotational" in e and chart.short_name != "polar":
        raise SpecError("'rotational' needs chart = polar", lines["rotational"])
    _domain(e["domain"], lines["domain"])


def _domain(value: str, line: int | None = None) -> tuple[float, float, float, float]:
    try:
        d = tuple(float(x) for x in value.split())
    except ValueError:
        raise SpecError(f"domain must be four numbers, got {value!r}", line) from None
    if len(d) != 4 or not (d[0] < d[1] and d[2] < d[3]):
        raise SpecError(f"domain must be 'u0 u1 v0 v1' with u0 < u1 and v0 < v1, got {value!r}", line)
    return d  # type: ignore[return-value]


def load_spec(path) -> SurfaceSpec:
    return parse_spec(Path(path).read_text())


def _rotational(spec: SurfaceSpec, chart, domain) -> SurfacePatch:
    from . import rotational as rot

    words = spec.entries["rotational"].split()
    try:
        K = float(words[0])
        kind = words[1]
        if kind == "axis" and len(words) == 2:
            start = rot.AxisStart()
        elif kind == "annulus" and len(words) == 5:
            start = rot.AnnulusStart(*(float(w) for w in words[2:]))
        else:
            raise ValueError
    except (ValueError, IndexError):
        raise SpecError("rotational must be '<K> axis' or '<K> annulus <r0> <h0> <v0>'") from None
    max_step = float(spec.entries.get("max_step", ROTATIONAL_MAX_STEP))
    r_hi = max(domain[1], start.r0) if isinstance(start, rot.AnnulusStart) else domain[1]
    prof = rot.shoot(start, K, (rot.AXIS_LIMIT, r_hi), max_step=max_step)
    lo, hi = prof.r_range
    if domain[0] < lo or domain[1] > hi:
        raise SpecError(
            f"rotational profile only exists for r in [{lo:.17g}, {hi:.17g}]; "
            f"domain asks for [{domain[0]:.17g}, {domain[1]:.17g}]"
        )
    patch = rot.profile_to_patch(prof, domain[:2], domain[2:])
    patch.meta.update(ode=True, K_target=K, profile=prof.diagnostics())
    return patch


def build_patch(spec: SurfaceSpec) -> SurfacePatch:
    """Construct the patch a spec describes."""
    e = spec.entries
    chart = HyperbolicChart(e["chart"])
    domain = _domain(e["domain"])
    label = e.get("label", "")
    try:
        if "rotational" in e:
            return _rotational(spec, chart, domain)
        if "graph" in e:
            return SurfacePatch.graph(chart, domain, e["graph"], label=label)
        names = chart.coordinate_names + ("t",)
        return SurfacePatch.from_exprs(chart, domain, [e[k] for k in names], label=label)
    except ExprError as exc:
        raise SpecError(f"bad expression: {exc}") from None


__all__ = ["SpecError", "SurfaceSpec", "parse_spec", "load_spec", "build_patch"]
