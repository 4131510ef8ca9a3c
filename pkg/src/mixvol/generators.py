"""Named test bodies and the generator mini-language used by the CLI.

Specs accepted by `generate`:
    cube            unit cube [0,1]^d
    simplex         standard simplex conv{0, e_1, ..., e_d}
    diamond         cross-polytope conv{+-e_i}
    segment         segment [0, e_1]
    segment:K       segment [0, e_K]  (1-based axis index)
    random-rotation:SEED
                    unit cube rotated by a seeded Haar rotation
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import InputError
from .polytope import Polytope
from .util import random_rotation


def cube(d: int, name: str | None = None) -> Polytope:
    pts = np.array(list(itertools.product((0.0, 1.0), repeat=d)))
    return Polytope.hull(pts, name=name or f"cube{d}")


def simplex(d: int, name: str | None = None) -> Polytope:
    pts = np.vstack([np.zeros(d), np.eye(d)])
    return Polytope.hull(pts, name=name or f"simplex{d}")


def diamond(d: int, name: str | None = None) -> Polytope:
    pts = np.vstack([np.eye(d), -np.eye(d)])
    return Polytope.hull(pts, name=name or f"diamond{d}")


def segment(d: int, axis: int = 0, name: str | None = None) -> Polytope:
    """[0, e_axis] as a lower-dimensional body in R^d."""
    if not (0 <= axis < d):
        raise InputError(f"segment axis {axis} out of range for dimension {d}")
    pts = np.zeros((2, d))
    pts[1, axis] = 1.0
    return Polytope.hull(pts, name=name or f"seg{d}.{axis}",
                         allow_degenerate=True)


def rotated_cube(d: int, seed: int, name: str | None = None) -> Polytope:
    rot = random_rotation(d, np.random.default_rng(int(seed)))
    return cube(d).transform(rot)


def generate(spec: str, d: int) -> Polytope:
    """Build a body from a generator spec string (see module docstring)."""
    head, _, arg = spec.partition(":")
    head = head.strip().lower()
    if head == "cube":
        return cube(d)
    if head == "simplex":
        return simplex(d)
    if head == "diamond":
        return diamond(d)
    if head == "segment":
        axis = int(arg) - 1 if arg else 0
        return segment(d, axis=axis, name=f"seg{d}.{axis}")
    if head == "random-rotation":
        if not arg:
            raise InputError("random-rotation needs a seed: random-rotation:SEED")
        body = rotated_cube(d, int(arg))
        body.name = f"rotcube{d}.{int(arg)}"
        return body
    raise InputError(f"unknown generator spec {spec!r}")
