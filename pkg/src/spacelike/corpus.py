"""Randomized spacelike graph patches on the disk chart.

The shipped file ``data/corpus.txt`` holds one height expression per line and
is exactly what :func:`generate` produces with the default seed.  Every graph
lives on ``DOMAIN`` and has Euclidean gradient below ``GRADIENT_BOUND`` there;
since the disk conformal factor is at least 2, that keeps the graph spacelike.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from .ambient import DISK
from .expr import evaluate, parse
from .jets import jet_var
from .surface import Grid, SurfacePatch

DOMAIN = (-0.5, 0.5, -0.5, 0.5)
SEED = 20240611
SIZE = 20
GRADIENT_BOUND = 1.2

_TEMPLATES = (
    "{a}*sinh(u)*cos(v)",
    "{a}*u^2 + {b}*v^2",
    "{a}*exp(u)*sin(v)",
    "{a}*log(1 + u^2 + v^2)",
    "{a}*atan(u*v) + {b}*u",
    "{a}*cosh(u - v) + {b}*v",
    "{a}*u*v^2 + {b}*u^3",
    "{a}*sqrt(1 + u^2 + 2*v^2)",
    "{a}*tanh({b}*u + v)",
    "{a}*sin(2*u)*cos(3*v)",
)


def _gradient_max(source: str, n: int = 41) -> float:
    u, v = Grid(n, n, DOMAIN).points()
    h = evaluate(parse(source), {"u": jet_var("u", u), "v": jet_var("v", v)})
    return float(np.max(np.hypot(h.coeffs[1], h.coeffs[2])))


def generate(seed: int = SEED, size: int = SIZE) -> list[str]:
    """Draw ``size`` height expressions, redrawing any that are too steep."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(size):
        template = _TEMPLATES[k % len(_TEMPLATES)]
        while True:
            a, b = rng.uniform(-0.6, 0.6, size=2)
            source = template.format(a=f"{a:.6f}", b=f"{b:.6f}").replace("+ -", "- ")
            if _gradient_max(source) <= GRADIENT_BOUND:
                break
        out.append(source)
    return out


def load_sources() -> list[str]:
    text = resources.files(__package__).joinpath("data/corpus.txt").read_text()
    return [line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")]


def load() -> list[SurfacePatch]:
    """The shipped corpus as disk-chart graph patches."""
    return [SurfacePatch.graph(DISK, DOMAIN, s, label=f"corpus {k}") for k, s in enumerate(load_sources())]
