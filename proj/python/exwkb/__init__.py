"""Exact WKB engine: formal series, Borel continuation, Stokes graphs and resummation."""

import json

from . import _exwkb
from ._exwkb import (
    InputError,
    NumericalError,
    Potential,
    borel_germ,
    borel_ray,
    liouville,
    motzkin,
    ode_oracle,
    resum_wkb,
    stokes_svg,
    wkb_coefficients,
)

__all__ = [
    "InputError",
    "NumericalError",
    "Potential",
    "borel_germ",
    "borel_ray",
    "classify",
    "jump_fit",
    "liouville",
    "motzkin",
    "ode_oracle",
    "polynomial",
    "resum_wkb",
    "singularities",
    "stokes_diagram",
    "stokes_graph",
    "stokes_svg",
    "wkb_coefficients",
]


def _num(z):
    z = complex(z)
    return [z.real, z.imag]


def polynomial(*qs):
    """Potential with polynomial Q_k given as ascending coefficient lists."""
    return Potential.from_json(
        json.dumps({"Q": [{"num": [_num(c) for c in q], "den": [1.0]} for q in qs]})
    )


def classify(p):
    return json.loads(_exwkb.classify_json(p))


def singularities(p, x, sheet=1, radius=10.0, depth=3, germ=24):
    return json.loads(_exwkb.singularities_json(p, x, sheet, radius, depth, germ))


def stokes_graph(p, alpha):
    return json.loads(_exwkb.stokes_graph_json(p, alpha))


def stokes_diagram(p, x, sheet=1, n_phases=36):
    return json.loads(_exwkb.stokes_diagram_json(p, x, sheet, n_phases))


def jump_fit(p, x, y0, alpha, hbar_abs):
    return json.loads(_exwkb.jump_fit_json(p, x, y0, alpha, list(hbar_abs)))
