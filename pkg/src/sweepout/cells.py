"""Cell types for equivariant sphere-system configurations.

The model is a three-colored cell complex: spheres carry circle diagrams
(double curves), curves carry triple points (vertices), and the complement
decomposes into regions.  Everything is referenced by opaque integer ids so
that rewrites can build new complexes cheaply and so that documents
round-trip byte-exactly.

Conventions used throughout the package:

  * A curve with vertex tuple (v0, .., v{n-1}) has n edges; edge i runs from
    vertices[i] to vertices[(i+1) % n].  A curve with an empty tuple is a
    closed loop with no vertices and hence no darts.
  * A dart is a directed edge (curve, edge, dir) with dir in {+1, -1};
    dir=+1 points from vertices[i] to vertices[i+1].
  * Rotations list, for each vertex on a sphere, the four OUTGOING darts in
    cyclic order (chirality fixed per sphere by the side convention below).
  * Face cycles are either dart cycles ("d", curve, edge, dir), stored by
    the minimal dart of the traced orbit, or loop occurrences
    ("l", curve, tag) with tag in {0, 1} naming the two sides of a loop.
  * Region sides are (face, side) slots with side in {0, 1}; side 1 of a
    face on a c-colored sphere always touches the region whose coloring
    contains c.  Crossing a sphere toggles its color in the coloring.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple, Optional


class Color(enum.IntEnum):
    RED = 0
    GREEN = 1
    BLUE = 2

    @property
    def letter(self) -> str:
        return "rgb"[self.value]


COLOR_NAMES = {Color.RED: "red", Color.GREEN: "green", Color.BLUE: "blue"}
COLOR_BY_NAME = {name: color for color, name in COLOR_NAMES.items()}


def rho(c: Color) -> Color:
    """The order-three color rotation red -> green -> blue -> red."""
    return Color((c + 1) % 3)


def rho_inv(c: Color) -> Color:
    return Color((c + 2) % 3)


def complement(a: Color, b: Color) -> Color:
    """The third color.  a and b must differ."""
    if a == b:
        raise ValueError(f"complement undefined for equal colors {a!r}")
    return Color(3 - a - b)


class Dart(NamedTuple):
    """A directed edge of a double curve."""

    curve: int
    edge: int
    dir: int  # +1 forward along the stored vertex tuple, -1 backward


def reverse(d: Dart) -> Dart:
    return Dart(d.curve, d.edge, -d.dir)


# Cycle descriptors inside Face.cycles.
# ("d", curve, edge, dir): the traced dart orbit containing that dart,
#                          keyed by the orbit's minimal dart.
# ("l", curve, tag):       one side (tag 0 or 1) of a vertexless loop.
DART_CYCLE = "d"
LOOP_CYCLE = "l"


def dart_cycle_key(d: Dart) -> tuple:
    return (DART_CYCLE, d.curve, d.edge, d.dir)


def loop_cycle_key(curve: int, tag: int) -> tuple:
    return (LOOP_CYCLE, curve, tag)


@dataclass(frozen=True)
class Vertex:
    """A triple point.  sign is +1 or -1."""

    id: int
    sign: int


@dataclass(frozen=True)
class Curve:
    """A double curve.

    label is the complementary color; carriers are the ids of the two
    spheres containing the curve, ordered by carrier color.  vertices is
    the cyclic tuple of triple points along the curve (possibly empty).
    """

    id: int
    label: Color
    carriers: tuple[int, int]
    vertices: tuple[int, ...] = ()

    @property
    def is_loop(self) -> bool:
        return not self.vertices

    @property
    def n_edges(self) -> int:
        return len(self.vertices)

    def edge_ends(self, i: int) -> tuple[int, int]:
        n = len(self.vertices)
        return self.vertices[i], self.vertices[(i + 1) % n]

    def darts(self):
        for i in range(len(self.vertices)):
            yield Dart(self.id, i, 1)
            yield Dart(self.id, i, -1)


def dart_head(curve: Curve, d: Dart) -> int:
    a, b = curve.edge_ends(d.edge)
    return b if d.dir == 1 else a


def dart_tail(curve: Curve, d: Dart) -> int:
    a, b = curve.edge_ends(d.edge)
    return a if d.dir == 1 else b


@dataclass(frozen=True)
class Sphere:
    """One sweepout sphere with its diagram's rotation system.

    rotation maps each vertex on the sphere to the cyclic 4-tuple of
    outgoing darts, alternating between the sphere's two curve labels.
    Chirality convention: counterclockwise as seen from the side-0
    (color-outside) side of the sphere.
    """

    id: int
    color: Color
    rotation: dict[int, tuple[Dart, Dart, Dart, Dart]] = field(default_factory=dict)


@dataclass(frozen=True)
class Face:
    """A complementary 2-cell of a sphere's diagram.

    cycles is the sorted tuple of boundary-cycle descriptors; the grouping
    of cycles into faces carries the nesting information that the rotation
    system alone does not determine.
    """

    id: int
    sphere: int
    cycles: tuple[tuple, ...] = ()


@dataclass(frozen=True)
class Region:
    """A complementary 3-cell.

    colors is the mod-2 coloring (inside which color classes the region
    lies); sides is the frozenset of (face id, side) slots on its boundary.
    """

    id: int
    colors: frozenset
    sides: frozenset


def normalize_rotation(rot: tuple[Dart, Dart, Dart, Dart]) -> tuple:
    """Rotate a 4-tuple so its minimal dart comes first (storage form)."""
    k = rot.index(min(rot))
    return rot[k:] + rot[:k]


def normalize_carriers(spheres: dict, a: int, b: int) -> tuple[int, int]:
    """Order a carrier pair by carrier color."""
    if spheres[a].color <= spheres[b].color:
        return (a, b)
    return (b, a)
