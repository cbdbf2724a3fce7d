"""The move calculus: nine equivariant rewrites, traces, and the graphic.

A move is specified by a site naming cells of one instance; applying it
rewrites the configuration at the site and at its two phi-images, then
reassembles phi over the result.  Every application ends in a full
validate; a failure there is a ResultInvalid bug, never user error.

Conventions:
  * Ids of structurally changed cells are retired and fresh ids issued;
    a cell keeps its id only under incidence-preserving bookkeeping
    (sphere field rewrites, region side lists, curve carrier updates).
  * Instances are applied in orbit order; sites of later instances are
    retargeted through the earlier instances' cell trails, refusing the
    rare sites whose orbit images interact ambiguously.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Optional

from .cells import (
    COLOR_NAMES,
    Color,
    Curve,
    DART_CYCLE,
    Dart,
    Face,
    LOOP_CYCLE,
    Region,
    Sphere,
    Vertex,
    complement,
    dart_cycle_key,
    dart_head,
    dart_tail,
    loop_cycle_key,
    normalize_rotation,
    reverse,
    rho,
)
from .complex import (
    Configuration,
    dart_components,
    derive_face_phi,
    empty_configuration,
    trace_sphere_orbits,
    validate,
)


class MoveError(Exception):
    """Base class for refusals and failures of the move engine."""


class InvalidSite(MoveError):
    """The site references cells the configuration does not have."""


class PreconditionFailed(MoveError):
    """The cells exist but the move's requirements do not hold."""


class ResultInvalid(MoveError):
    """Post-move validation failed; this is an engine bug, not user error."""


class DeltaViolation(MoveError):
    """Incremental complexity bookkeeping disagrees with a recount."""


class BoundaryMismatch(MoveError):
    """Splice endpoints do not match up to relabeling."""


class SupportOverlap(MoveError):
    """A retained move's site stopped making sense after a splice."""


class IncompleteTrace(MoveError):
    """A whole-trace analysis needs a full empty-to-empty trace."""


class MoveKind(enum.Enum):
    APPEAR = "appear"
    VANISH = "vanish"
    CUT = "cut"
    PASTE = "paste"
    BIRTH = "birth"
    DEATH = "death"
    SADDLE = "saddle"
    TRIPLE_BIRTH = "triple_birth"
    TRIPLE_DEATH = "triple_death"

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    MoveKind.APPEAR: "A",
    MoveKind.VANISH: "V",
    MoveKind.CUT: "C",
    MoveKind.PASTE: "P",
    MoveKind.BIRTH: "B",
    MoveKind.DEATH: "D",
    MoveKind.SADDLE: "S",
    MoveKind.TRIPLE_BIRTH: "T+",
    MoveKind.TRIPLE_DEATH: "T-",
}

COMPOUND_DOUBLE_BIRTH = "compound_double_birth"
COMPOUND_DOUBLE_DEATH = "compound_double_death"
COMPOUND_TRIPLE_BIRTH = "compound_triple_birth"
COMPOUND_TRIPLE_DEATH = "compound_triple_death"


class Complexity(NamedTuple):
    """(triple points, vertexless double curves), ordered lexicographically."""

    n: int
    d: int


def complexity(config: Configuration) -> Complexity:
    d = sum(1 for c in config.curves.values() if c.is_loop)
    return Complexity(len(config.vertices), d)


# === cell trails ===


class Trail:
    """Maps cell references of a site across one instance's rewrite.

    Retired cells either have a designated continuation (the remnant of a
    split face, the rerouted piece of a cut curve) or none, in which case a
    later instance referencing them is refused.
    """

    def __init__(self):
        self.face: dict[int, int] = {}
        self.region: dict[int, int] = {}
        self.sphere: dict[int, int] = {}
        self.dart: dict[Dart, Dart] = {}
        # loop curve -> ("loop", curve', tag-map) when still a loop under a
        # new id, or ("edge", dart-for-tag0, dart-for-tag1) giving, per old
        # side, the continuation dart whose face lies on that side, or
        # ("sides", {(sphere, tag): dart}) when the sides of the two
        # carriers continue to different darts of the vertexed curve.
        self.loop: dict[int, tuple] = {}
        # (sphere, dart) -> dart overrides for end references consumed at
        # a crossing, where the per-carrier continuation differs from the
        # plain edge rename
        self.ends: dict[tuple, Dart] = {}
        self.gone: set = set()
        # darts with no continuation (their edges collapsed away)
        self.dead_darts: set = set()

    def map_face(self, f: int) -> int:
        while f in self.face:
            f = self.face[f]
        if f in self.gone:
            raise PreconditionFailed(f"face {f} consumed by an earlier instance")
        return f

    def map_region(self, r: int) -> int:
        while r in self.region:
            r = self.region[r]
        if r in self.gone:
            raise PreconditionFailed(f"region {r} consumed by an earlier instance")
        return r

    def map_sphere(self, s: int) -> int:
        while s in self.sphere:
            s = self.sphere[s]
        if s in self.gone:
            raise PreconditionFailed(f"sphere {s} consumed by an earlier instance")
        return s

    def map_dart(self, d: Dart) -> Dart:
        # single-step: each entry already names the final post-move dart,
        # and moves that keep curve ids would otherwise chain spuriously
        if d in self.dead_darts:
            raise PreconditionFailed(f"edge {d} consumed by an earlier instance")
        if d in self.dart:
            d = self.dart[d]
        if d.curve in self.gone:
            raise PreconditionFailed(f"edge {d} consumed by an earlier instance")
        return d

    def map_end(self, end: tuple, sphere: Optional[int] = None) -> tuple:
        """Map an end/cycle reference ("d", c, i, dir) or ("l", c, tag).

        `sphere` is the carrier the reference lives on (already mapped);
        it disambiguates loop sides when the two carriers continue
        differently.
        """
        if end[0] == DART_CYCLE:
            d = Dart(end[1], end[2], end[3])
            if sphere is not None and (sphere, d) in self.ends:
                d = self.ends[(sphere, d)]
            else:
                d = self.map_dart(d)
            return (DART_CYCLE, d.curve, d.edge, d.dir)
        kind, curve, tag = end
        if curve in self.loop:
            entry = self.loop[curve]
            if entry[0] == "loop":
                return (LOOP_CYCLE, entry[1], entry[2][tag])
            if entry[0] == "sides":
                if sphere is None or (sphere, tag) not in entry[1]:
                    raise PreconditionFailed(
                        f"loop {curve} side has no continuation here"
                    )
                d = self.map_dart(entry[1][(sphere, tag)])
                return (DART_CYCLE, d.curve, d.edge, d.dir)
            d = entry[1 + tag]
            d = self.map_dart(d)
            return (DART_CYCLE, d.curve, d.edge, d.dir)
        if curve in self.gone:
            raise PreconditionFailed(f"loop {curve} consumed by an earlier instance")
        return end


# === sites ===


@dataclass(frozen=True)
class AppearSite:
    region: int
    color: Color

    def translate(self, config: Configuration) -> "AppearSite":
        return AppearSite(config.phi[self.region], rho(self.color))

    def retarget(self, trail: Trail) -> "AppearSite":
        return AppearSite(trail.map_region(self.region), self.color)

    def to_doc(self) -> dict:
        return {"region": self.region, "color": COLOR_NAMES[self.color]}


@dataclass(frozen=True)
class VanishSite:
    sphere: int

    def translate(self, config: Configuration) -> "VanishSite":
        return VanishSite(config.phi[self.sphere])

    def retarget(self, trail: Trail) -> "VanishSite":
        return VanishSite(trail.map_sphere(self.sphere))

    def to_doc(self) -> dict:
        return {"sphere": self.sphere}


@dataclass(frozen=True)
class BirthSite:
    face_a: int
    face_b: int
    region: int

    def translate(self, config: Configuration) -> "BirthSite":
        fmap = config.face_phi
        return BirthSite(fmap[self.face_a], fmap[self.face_b], config.phi[self.region])

    def retarget(self, trail: Trail) -> "BirthSite":
        return BirthSite(
            trail.map_face(self.face_a),
            trail.map_face(self.face_b),
            trail.map_region(self.region),
        )

    def to_doc(self) -> dict:
        return {"face_a": self.face_a, "face_b": self.face_b, "region": self.region}


@dataclass(frozen=True)
class DeathSite:
    curve: int

    def translate(self, config: Configuration) -> "DeathSite":
        return DeathSite(config.phi[self.curve])

    def retarget(self, trail: Trail) -> "DeathSite":
        if self.curve in trail.gone or self.curve in trail.loop:
            raise PreconditionFailed(
                f"curve {self.curve} consumed by an earlier instance"
            )
        return self

    def to_doc(self) -> dict:
        return {"curve": self.curve}


@dataclass(frozen=True)
class CutSite:
    """Compress a sphere along a disc in the side-`side` region of `face`.

    piece lists the boundary cycles of `face` on the first piece's side of
    the compression circle (the rest go to the second piece).  assignment,
    when given, lists the region's side slots going with the first piece
    whenever corner connectivity alone cannot decide the region split.
    """

    sphere: int
    face: int
    piece: tuple
    side: int
    assignment: Optional[frozenset] = None

    def translate(self, config: Configuration) -> "CutSite":
        fmap = config.face_phi
        piece = tuple(sorted(_translate_cycle(config, c) for c in self.piece))
        assignment = None
        if self.assignment is not None:
            assignment = frozenset((fmap[f], s) for f, s in self.assignment)
        return CutSite(
            config.phi[self.sphere], fmap[self.face], piece, self.side, assignment
        )

    def retarget(self, trail: Trail) -> "CutSite":
        sphere = trail.map_sphere(self.sphere)
        piece = tuple(sorted(trail.map_end(c, sphere) for c in self.piece))
        assignment = None
        if self.assignment is not None:
            assignment = frozenset(
                (trail.map_face(f), s) for f, s in self.assignment
            )
        return CutSite(
            sphere,
            trail.map_face(self.face),
            piece,
            self.side,
            assignment,
        )

    def to_doc(self) -> dict:
        doc = {
            "sphere": self.sphere,
            "face": self.face,
            "piece": [list(c) for c in sorted(self.piece)],
            "side": self.side,
        }
        if self.assignment is not None:
            doc["assignment"] = [list(s) for s in sorted(self.assignment)]
        return doc


@dataclass(frozen=True)
class PasteSite:
    """Tube two same-color spheres together across a region adjacent to
    one chosen face on each."""

    face_a: int
    face_b: int
    region: int

    def translate(self, config: Configuration) -> "PasteSite":
        fmap = config.face_phi
        return PasteSite(fmap[self.face_a], fmap[self.face_b], config.phi[self.region])

    def retarget(self, trail: Trail) -> "PasteSite":
        return PasteSite(
            trail.map_face(self.face_a),
            trail.map_face(self.face_b),
            trail.map_region(self.region),
        )

    def to_doc(self) -> dict:
        return {"face_a": self.face_a, "face_b": self.face_b, "region": self.region}


@dataclass(frozen=True)
class Chord:
    """An arc across one face between two boundary points.

    Ends are ("d", curve, edge, dir) darts whose trace side is the chord's
    face, or ("l", curve, tag) for a point on a vertexless circle seen from
    the tag side.  partition lists the face's other boundary cycles going
    with the piece behind end p when the chord separates its face.
    """

    sphere: int
    p: tuple
    q: tuple
    partition: Optional[frozenset] = None
    p_first: Optional[bool] = None  # order along a shared edge, p nearer tail

    def translate(self, config: Configuration) -> "Chord":
        partition = None
        if self.partition is not None:
            partition = frozenset(
                _translate_cycle(config, c) for c in self.partition
            )
        return Chord(
            config.phi[self.sphere],
            _translate_end(config, self.p),
            _translate_end(config, self.q),
            partition,
            self.p_first,
        )

    def retarget(self, trail: Trail) -> "Chord":
        sphere = trail.map_sphere(self.sphere)
        partition = None
        if self.partition is not None:
            partition = frozenset(
                trail.map_end(c, sphere) for c in self.partition
            )
        return Chord(
            sphere,
            trail.map_end(self.p, sphere),
            trail.map_end(self.q, sphere),
            partition,
            self.p_first,
        )

    def to_doc(self) -> dict:
        doc = {"sphere": self.sphere, "p": list(self.p), "q": list(self.q)}
        if self.partition is not None:
            doc["partition"] = [list(c) for c in sorted(self.partition)]
        if self.p_first is not None:
            doc["p_first"] = self.p_first
        return doc


@dataclass(frozen=True)
class SaddleSite:
    region: int
    chord_a: Chord
    chord_b: Chord
    assignment: Optional[frozenset] = None

    def translate(self, config: Configuration) -> "SaddleSite":
        assignment = None
        if self.assignment is not None:
            fmap = config.face_phi
            assignment = frozenset((fmap[f], s) for f, s in self.assignment)
        return SaddleSite(
            config.phi[self.region],
            self.chord_a.translate(config),
            self.chord_b.translate(config),
            assignment,
        )

    def retarget(self, trail: Trail) -> "SaddleSite":
        assignment = None
        if self.assignment is not None:
            assignment = frozenset(
                (trail.map_face(f), s) for f, s in self.assignment
            )
        return SaddleSite(
            trail.map_region(self.region),
            self.chord_a.retarget(trail),
            self.chord_b.retarget(trail),
            assignment,
        )

    def to_doc(self) -> dict:
        doc = {
            "region": self.region,
            "chord_a": self.chord_a.to_doc(),
            "chord_b": self.chord_b.to_doc(),
        }
        if self.assignment is not None:
            doc["assignment"] = [list(s) for s in sorted(self.assignment)]
        return doc


@dataclass(frozen=True)
class TripleBirthSite:
    # region None means "rederive from the chord faces": a retarget may
    # find it split by an earlier instance with no designated continuation
    region: Optional[int]
    chord_r: Chord
    chord_g: Chord
    chord_b: Chord
    assignment: Optional[frozenset] = None

    def chords(self) -> tuple:
        return (self.chord_r, self.chord_g, self.chord_b)

    def translate(self, config: Configuration) -> "TripleBirthSite":
        # phi advances each sphere's color, so the chord roles rotate
        assignment = None
        if self.assignment is not None:
            fmap = config.face_phi
            assignment = frozenset((fmap[f], s) for f, s in self.assignment)
        region = None if self.region is None else config.phi[self.region]
        return TripleBirthSite(
            region,
            self.chord_b.translate(config),
            self.chord_r.translate(config),
            self.chord_g.translate(config),
            assignment,
        )

    def retarget(self, trail: Trail) -> "TripleBirthSite":
        assignment = None
        if self.assignment is not None:
            assignment = frozenset(
                (trail.map_face(f), s) for f, s in self.assignment
            )
        region = None
        if self.region is not None:
            try:
                region = trail.map_region(self.region)
            except PreconditionFailed:
                region = None
        return TripleBirthSite(
            region,
            self.chord_r.retarget(trail),
            self.chord_g.retarget(trail),
            self.chord_b.retarget(trail),
            assignment,
        )

    def to_doc(self) -> dict:
        doc = {
            "region": self.region,
            "chord_r": self.chord_r.to_doc(),
            "chord_g": self.chord_g.to_doc(),
            "chord_b": self.chord_b.to_doc(),
        }
        if self.assignment is not None:
            doc["assignment"] = [list(s) for s in sorted(self.assignment)]
        return doc


@dataclass(frozen=True)
class TripleDeathSite:
    region: int  # the football

    def translate(self, config: Configuration) -> "TripleDeathSite":
        return TripleDeathSite(config.phi[self.region])

    def retarget(self, trail: Trail) -> "TripleDeathSite":
        return TripleDeathSite(trail.map_region(self.region))

    def to_doc(self) -> dict:
        return {"region": self.region}


SITE_TYPES = {
    MoveKind.APPEAR: AppearSite,
    MoveKind.VANISH: VanishSite,
    MoveKind.CUT: CutSite,
    MoveKind.PASTE: PasteSite,
    MoveKind.BIRTH: BirthSite,
    MoveKind.DEATH: DeathSite,
    MoveKind.SADDLE: SaddleSite,
    MoveKind.TRIPLE_BIRTH: TripleBirthSite,
    MoveKind.TRIPLE_DEATH: TripleDeathSite,
}


@dataclass(frozen=True)
class MoveEvent:
    kind: MoveKind
    site: object
    compound_role: Optional[str] = None

    def to_doc(self) -> dict:
        doc = {"kind": self.kind.value, "site": self.site.to_doc()}
        if self.compound_role is not None:
            doc["compound_role"] = self.compound_role
        return doc


def _translate_end(config: Configuration, end: tuple) -> tuple:
    """phi image of a chord end; darts map strictly, keeping position."""
    if end[0] == LOOP_CYCLE:
        return loop_cycle_key(config.phi[end[1]], end[2])
    return (DART_CYCLE, config.phi[end[1]], end[2], end[3])


def _translate_cycle(config: Configuration, cyc: tuple) -> tuple:
    """phi image of a stored boundary cycle, rekeyed to its minimal dart."""
    if cyc[0] == LOOP_CYCLE:
        return loop_cycle_key(config.phi[cyc[1]], cyc[2])
    key = Dart(cyc[1], cyc[2], cyc[3])
    sphere = None
    for s, orbs in config.traced_orbits.items():
        if key in orbs:
            sphere = s
            break
    img = Dart(config.phi[key.curve], key.edge, key.dir)
    if sphere is None:
        return dart_cycle_key(img)
    darts = config.traced_orbits[sphere][key]
    return dart_cycle_key(min(Dart(config.phi[d.curve], d.edge, d.dir) for d in darts))


# === workspace ===


class _Work:
    """Mutable cell tables for building the configuration after one
    instance of a move."""

    def __init__(self, config: Configuration):
        self.vertices = dict(config.vertices)
        self.curves = dict(config.curves)
        self.spheres = dict(config.spheres)
        self.faces = dict(config.faces)
        self.regions = dict(config.regions)
        self.outside = config.outside_region
        self._next = config.max_id() + 1
        self.created: list[int] = []
        self.retired: list[int] = []
        self.trail = Trail()

    def fresh(self) -> int:
        i = self._next
        self._next += 1
        self.created.append(i)
        return i

    def retire(self, cid: int, pool: dict) -> None:
        del pool[cid]
        self.retired.append(cid)
        self.trail.gone.add(cid)

    def region_of_slot(self, slot: tuple) -> Region:
        for r in self.regions.values():
            if slot in r.sides:
                return r
        raise InvalidSite(f"no region on face side {slot}")

    def reslot_region(self, rid: int, remove: Iterable, add: Iterable) -> None:
        r = self.regions[rid]
        sides = set(r.sides)
        for slot in remove:
            sides.discard(slot)
        for slot in add:
            sides.add(slot)
        self.regions[rid] = Region(rid, r.colors, frozenset(sides))

    def to_configuration(self, phi: Optional[dict] = None) -> Configuration:
        return Configuration(
            vertices=self.vertices,
            curves=self.curves,
            spheres=self.spheres,
            faces=self.faces,
            regions=self.regions,
            phi=phi if phi is not None else {},
            outside_region=self.outside,
            engine_built=True,
        )


# === the four sphere/curve bookkeeping moves ===


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise PreconditionFailed(message)


def _lookup(pool: dict, cid, what: str):
    try:
        return pool[cid]
    except (KeyError, TypeError):
        raise InvalidSite(f"no {what} {cid!r}") from None


def _apply_appear(state: Configuration, site: AppearSite) -> _Work:
    work = _Work(state)
    region = _lookup(work.regions, site.region, "region")
    color = site.color
    sphere_id = work.fresh()
    face_id = work.fresh()
    ball_id = work.fresh()
    ball_colors = frozenset(region.colors ^ {color})
    ball_bit = 1 if color in ball_colors else 0
    work.spheres[sphere_id] = Sphere(sphere_id, color)
    work.faces[face_id] = Face(face_id, sphere_id, ())
    work.regions[ball_id] = Region(ball_id, ball_colors, frozenset({(face_id, ball_bit)}))
    work.reslot_region(region.id, (), {(face_id, 1 - ball_bit)})
    return work


def _apply_vanish(state: Configuration, site: VanishSite) -> _Work:
    work = _Work(state)
    sphere = _lookup(work.spheres, site.sphere, "sphere")
    carried = [c for c in work.curves.values() if sphere.id in c.carriers]
    _require(not carried, f"sphere {sphere.id} still carries double curves")
    faces = [f for f in work.faces.values() if f.sphere == sphere.id]
    _require(len(faces) == 1 and not faces[0].cycles,
             f"sphere {sphere.id} does not have a single bare face")
    face = faces[0]
    sides = [work.region_of_slot((face.id, s)) for s in (0, 1)]
    balls = [r for r in sides
             if len(r.sides) == 1 and r.id != work.outside]
    _require(bool(balls), f"sphere {sphere.id} bounds no ball on either side")
    ball = min(balls, key=lambda r: r.id)
    outer = sides[0] if sides[1].id == ball.id else sides[1]
    work.retire(ball.id, work.regions)
    work.retire(face.id, work.faces)
    work.retire(sphere.id, work.spheres)
    work.reslot_region(outer.id, {(face.id, 0), (face.id, 1)}, ())
    return work


def _apply_birth(state: Configuration, site: BirthSite) -> _Work:
    work = _Work(state)
    face_a = _lookup(work.faces, site.face_a, "face")
    face_b = _lookup(work.faces, site.face_b, "face")
    region = _lookup(work.regions, site.region, "region")
    sphere_a = work.spheres[face_a.sphere]
    sphere_b = work.spheres[face_b.sphere]
    _require(sphere_a.color != sphere_b.color,
             "birth needs faces on different-colored spheres")
    slot_a = next(((face_a.id, s) for s in (0, 1)
                   if (face_a.id, s) in region.sides), None)
    slot_b = next(((face_b.id, s) for s in (0, 1)
                   if (face_b.id, s) in region.sides), None)
    _require(slot_a is not None and slot_b is not None,
             "both faces must touch the site region")
    ca, cb = sphere_a.color, sphere_b.color
    if ca > cb:
        face_a, face_b, sphere_a, sphere_b = face_b, face_a, sphere_b, sphere_a
        slot_a, slot_b = slot_b, slot_a
        ca, cb = cb, ca
    curve_id = work.fresh()
    cap_a_id = work.fresh()
    rem_a_id = work.fresh()
    cap_b_id = work.fresh()
    rem_b_id = work.fresh()
    lens_id = work.fresh()
    work.curves[curve_id] = Curve(
        curve_id, complement(ca, cb), (sphere_a.id, sphere_b.id)
    )
    work.faces[cap_a_id] = Face(cap_a_id, sphere_a.id, (loop_cycle_key(curve_id, 0),))
    work.faces[rem_a_id] = Face(
        rem_a_id, sphere_a.id,
        tuple(sorted(face_a.cycles + (loop_cycle_key(curve_id, 1),))),
    )
    work.faces[cap_b_id] = Face(cap_b_id, sphere_b.id, (loop_cycle_key(curve_id, 0),))
    work.faces[rem_b_id] = Face(
        rem_b_id, sphere_b.id,
        tuple(sorted(face_b.cycles + (loop_cycle_key(curve_id, 1),))),
    )
    lens_colors = frozenset(region.colors ^ {ca, cb})
    q_a = work.region_of_slot((face_a.id, 1 - slot_a[1]))
    q_b = work.region_of_slot((face_b.id, 1 - slot_b[1]))
    # each cap separates the lens from the region beyond the other face
    bit_cap_a = 1 if ca in lens_colors else 0
    bit_cap_b = 1 if cb in lens_colors else 0
    work.regions[lens_id] = Region(
        lens_id, lens_colors,
        frozenset({(cap_a_id, bit_cap_a), (cap_b_id, bit_cap_b)}),
    )
    work.reslot_region(
        region.id,
        {slot_a, slot_b},
        {(rem_a_id, slot_a[1]), (rem_b_id, slot_b[1])},
    )
    work.reslot_region(
        q_a.id,
        {(face_a.id, 1 - slot_a[1])},
        {(rem_a_id, 1 - slot_a[1]), (cap_b_id, 1 - bit_cap_b)},
    )
    if q_b.id != q_a.id:
        work.reslot_region(
            q_b.id,
            {(face_b.id, 1 - slot_b[1])},
            {(rem_b_id, 1 - slot_b[1]), (cap_a_id, 1 - bit_cap_a)},
        )
    else:
        work.reslot_region(
            q_a.id,
            {(face_b.id, 1 - slot_b[1])},
            {(rem_b_id, 1 - slot_b[1]), (cap_a_id, 1 - bit_cap_a)},
        )
    work.retire(face_a.id, work.faces)
    work.retire(face_b.id, work.faces)
    work.trail.face[face_a.id] = rem_a_id
    work.trail.face[face_b.id] = rem_b_id
    return work


def _apply_death(state: Configuration, site: DeathSite) -> _Work:
    work = _Work(state)
    curve = _lookup(work.curves, site.curve, "curve")
    _require(curve.is_loop, f"curve {curve.id} has triple points")
    sa, sb = curve.carriers
    lens = None
    for tag_a in (0, 1):
        cap_a = state.loop_face.get((sa, curve.id, tag_a))
        if cap_a is None or work.faces[cap_a].cycles != (loop_cycle_key(curve.id, tag_a),):
            continue
        for tag_b in (0, 1):
            cap_b = state.loop_face.get((sb, curve.id, tag_b))
            if cap_b is None or work.faces[cap_b].cycles != (
                loop_cycle_key(curve.id, tag_b),
            ):
                continue
            for bit_a in (0, 1):
                candidate = work.region_of_slot((cap_a, bit_a))
                if len(candidate.sides) != 2:
                    continue
                other = next(iter(candidate.sides - {(cap_a, bit_a)}))
                if other[0] == cap_b:
                    lens = (cap_a, tag_a, bit_a, cap_b, tag_b, other[1], candidate)
                    break
            if lens:
                break
        if lens:
            break
    _require(lens is not None,
             f"curve {curve.id} bounds no bare-disc lens on its carriers")
    cap_a, tag_a, bit_a, cap_b, tag_b, bit_b, lens_region = lens
    merged = []
    for sphere_id, cap_id, tag, bit in (
        (sa, cap_a, tag_a, bit_a), (sb, cap_b, tag_b, bit_b),
    ):
        rem_id = state.loop_face[(sphere_id, curve.id, 1 - tag)]
        rem = work.faces[rem_id]
        new_id = work.fresh()
        cycles = tuple(sorted(
            c for c in rem.cycles if c != loop_cycle_key(curve.id, 1 - tag)
        ))
        work.faces[new_id] = Face(new_id, sphere_id, cycles)
        for side in (0, 1):
            holder = work.region_of_slot((rem_id, side))
            work.reslot_region(holder.id, {(rem_id, side)}, {(new_id, side)})
        q = work.region_of_slot((cap_id, 1 - bit))
        work.reslot_region(q.id, {(cap_id, 1 - bit)}, ())
        work.retire(rem_id, work.faces)
        work.retire(cap_id, work.faces)
        work.trail.face[rem_id] = new_id
        merged.append(new_id)
    work.retire(lens_region.id, work.regions)
    work.retire(curve.id, work.curves)
    return work


# === orbit application ===


_APPLIERS = {
    MoveKind.APPEAR: _apply_appear,
    MoveKind.VANISH: _apply_vanish,
    MoveKind.BIRTH: _apply_birth,
    MoveKind.DEATH: _apply_death,
}


def register_applier(kind: MoveKind, fn) -> None:
    _APPLIERS[kind] = fn


def apply_move(config: Configuration, event, site=None) -> Configuration:
    """Apply one move at its site and at the two phi-translated sites.

    `event` is a MoveEvent, or a MoveKind with `site` given separately.
    Returns the new configuration; raises InvalidSite / PreconditionFailed
    / ResultInvalid.
    """
    if isinstance(event, MoveEvent):
        kind, base_site = event.kind, event.site
    else:
        kind, base_site = event, site
    applier = _APPLIERS.get(kind)
    if applier is None:
        raise InvalidSite(f"unknown move kind {kind!r}")
    try:
        sites = [base_site]
        sites.append(base_site.translate(config))
        sites.append(sites[1].translate(config))
    except KeyError as e:
        raise InvalidSite(f"site references missing cell: {e}") from None
    state = config
    manifests: list[tuple[list[int], list[int]]] = []
    trails: list[Trail] = []
    for k in range(3):
        current = sites[k]
        for trail in trails:
            current = current.retarget(trail)
        work = applier(state, current)
        manifests.append((list(work.created), list(work.retired)))
        trails.append(work.trail)
        state = work.to_configuration()
    phi = _assemble_phi(config, state, manifests)
    state = _align_curve_words(state, phi)
    phi = _assemble_phi_regions(state, phi, manifests)
    result = replace(state, phi=phi, outside_region=_canonical_outside(state, phi))
    report = validate(result)
    if not report.ok:
        raise ResultInvalid(f"{kind.value} broke the configuration:\n{report}")
    return result


def _canonical_outside(state: Configuration, phi: dict) -> Optional[int]:
    """The invariant complement region, when the symmetry still has one.

    A region split can leave the three uncolored pieces permuted by the
    symmetry (the seed crossing orbit does exactly this); the designation
    is then meaningless and drops to None until a merge restores it.
    """
    old = state.outside_region
    if (
        old in state.regions
        and not state.regions[old].colors
        and phi.get(old) == old
    ):
        return old
    fixed = [
        r
        for r in sorted(state.regions)
        if not state.regions[r].colors and phi.get(r) == r
    ]
    return fixed[0] if len(fixed) == 1 else None


def _assemble_phi(
    before: Configuration, after: Configuration, manifests
) -> dict[int, int]:
    """Reconstruct the symmetry map after the three instances have run.

    Surviving cells keep their old images.  Created vertices and spheres
    pair up positionally: the appliers create them in a fixed role order,
    and neither kind can be consumed by a sibling instance.  Created
    curves are matched through their already-mapped vertices and carriers
    (this survives instance chains, where a later instance rewrites its
    predecessor's fresh cells), then faces and regions follow structurally.
    """
    in_phi_pools = (after.vertices, after.curves, after.spheres, after.regions)

    def tracked(cid: int) -> bool:
        return any(cid in pool for pool in in_phi_pools)

    survivors = {x for x in before.phi if tracked(x)}
    phi = {x: before.phi[x] for x in survivors}
    for x in survivors:
        if phi[x] not in survivors:
            raise ResultInvalid(
                f"cell {x} survived but its phi image {phi[x]} did not"
            )
    created = [[c for c in m[0] if tracked(c)] for m in manifests]

    for pool in (after.vertices, after.spheres):
        lists = [[c for c in created[k] if c in pool] for k in range(3)]
        if not (len(lists[0]) == len(lists[1]) == len(lists[2])):
            raise ResultInvalid("instance creation manifests disagree")
        for k in range(3):
            for a, b in zip(lists[k], lists[(k + 1) % 3]):
                phi[a] = b

    new_curves = sorted(
        c for k in range(3) for c in created[k] if c in after.curves
    )

    def curve_sig(c: int, image: bool):
        curve = after.curves[c]
        if not image:
            return (curve.label, frozenset(curve.carriers), curve.vertices)
        return (
            rho(curve.label),
            frozenset(phi[s] for s in curve.carriers),
            tuple(phi[v] for v in curve.vertices),
        )

    families: dict = {}
    for c in new_curves:
        families.setdefault(curve_sig(c, image=False), []).append(c)
    for c in new_curves:
        try:
            target = families.get(curve_sig(c, image=True))
        except KeyError:
            raise ResultInvalid(
                f"created curve {c} touches cells with no phi image"
            ) from None
        home = families[curve_sig(c, image=False)]
        if target is None or len(target) != len(home):
            raise ResultInvalid("created curves do not close under phi")
        phi[c] = target[home.index(c)]

    return phi


def _assemble_phi_regions(
    after: Configuration, phi: dict, manifests
) -> dict[int, int]:
    """Match created regions through the face action of the assembled phi.

    Runs after the curve words have been realigned: the face map is read
    off the stored diagrams, so the gauge must already be equivariant.
    """
    phi = dict(phi)
    new_regions = [
        r for m in manifests for r in m[0] if r in after.regions and r not in phi
    ]
    if new_regions:
        probe = replace(after, phi=phi)
        fmap = derive_face_phi(probe)
        if fmap is None:
            raise ResultInvalid("phi does not act on the faces")
        by_sides = {after.regions[r].sides: r for r in new_regions}
        for r in new_regions:
            image_sides = frozenset(
                (fmap[f], bit) for f, bit in after.regions[r].sides
            )
            target = by_sides.get(image_sides)
            if target is None:
                raise ResultInvalid("created regions do not close under phi")
            phi[r] = target
    return phi


def _align_curve_words(state: Configuration, phi: dict) -> Configuration:
    """Rotate stored vertex words so phi acts on them positionally.

    The symmetry carries each crossing to its sibling on the next curve of
    the orbit, so a move that inserts or removes crossings leaves the three
    words agreeing only up to a cyclic shift.  The starting index of a word
    is a stored gauge with no intrinsic meaning; realign it wherever a
    shift restores the positional action, renaming edges to match.
    """
    shifts: dict[int, int] = {}
    seen: set = set()
    for a in sorted(state.curves):
        if a in seen:
            continue
        orbit = [a]
        while phi.get(orbit[-1]) not in (None, a):
            orbit.append(phi[orbit[-1]])
        seen.update(orbit)
        if len(orbit) != 3 or any(c not in state.curves for c in orbit):
            continue
        words = {c: state.curves[c].vertices for c in orbit}
        if all(not w for w in words.values()) or any(
            len(w) != len(words[a]) for w in words.values()
        ):
            continue
        cand: dict[int, int] = {a: 0}
        aligned = words[a]
        ok = True
        for c, cn in ((orbit[0], orbit[1]), (orbit[1], orbit[2])):
            want = tuple(phi.get(v) for v in aligned)
            cur = words[cn]
            r = next(
                (k for k in range(len(cur)) if cur[k:] + cur[:k] == want),
                None,
            )
            if r is None:
                ok = False
                break
            cand[cn] = r
            aligned = want
        if ok and tuple(phi.get(v) for v in aligned) == words[a]:
            shifts.update({c: r for c, r in cand.items() if r})
    if not shifts:
        return state

    def move_dart(d: Dart) -> Dart:
        r = shifts.get(d.curve)
        if not r:
            return d
        n = len(state.curves[d.curve].vertices)
        return Dart(d.curve, (d.edge - r) % n, d.dir)

    curves = dict(state.curves)
    for cid, r in shifts.items():
        w = curves[cid].vertices
        curves[cid] = replace(curves[cid], vertices=w[r:] + w[:r])
    touched = {
        sid
        for cid in shifts
        for sid in state.curves[cid].carriers
    }
    spheres = dict(state.spheres)
    keymaps: dict[int, dict] = {}
    for sid in touched:
        sp = spheres[sid]
        spheres[sid] = replace(
            sp,
            rotation={
                v: normalize_rotation(tuple(move_dart(d) for d in rot))
                for v, rot in sp.rotation.items()
            },
        )
        km: dict = {}
        for d0, cycle in trace_sphere_orbits(state, sid).items():
            if not any(d.curve in shifts for d in cycle):
                continue
            new_key = dart_cycle_key(min(move_dart(d) for d in cycle))
            if new_key != dart_cycle_key(d0):
                km[dart_cycle_key(d0)] = new_key
        if km:
            keymaps[sid] = km
    faces = dict(state.faces)
    for fid, face in state.faces.items():
        km = keymaps.get(face.sphere)
        if not km or not any(k in km for k in face.cycles):
            continue
        faces[fid] = replace(
            face, cycles=tuple(sorted(km.get(k, k) for k in face.cycles))
        )
    return replace(state, curves=curves, spheres=spheres, faces=faces)


def move_support(before: Configuration, after: Configuration) -> set:
    """Cells created, retired, or rewritten by a move (phi-closed)."""
    support: set = set()
    for pools in (
        (before.vertices, after.vertices),
        (before.curves, after.curves),
        (before.spheres, after.spheres),
        (before.faces, after.faces),
        (before.regions, after.regions),
    ):
        old, new = pools
        for cid in old.keys() | new.keys():
            if cid not in old or cid not in new or old[cid] != new[cid]:
                support.add(cid)
    return support


# === site enumeration (bookkeeping moves) ===


def appear_sites(config: Configuration):
    for rid in sorted(config.regions):
        for color in (Color.RED, Color.GREEN, Color.BLUE):
            yield AppearSite(rid, color)


def vanish_sites(config: Configuration):
    for sid in sorted(config.spheres):
        if config.sphere_curves.get(sid):
            continue
        faces = config.sphere_faces.get(sid, ())
        if len(faces) != 1:
            continue
        for side in (0, 1):
            region = config.regions[config.region_at(faces[0], side)]
            if len(region.sides) == 1 and region.id != config.outside_region:
                yield VanishSite(sid)
                break


def birth_sites(config: Configuration):
    for rid in sorted(config.regions):
        slots = sorted(config.regions[rid].sides)
        for i, (fa, _) in enumerate(slots):
            for fb, _ in slots[i + 1:]:
                ca = config.spheres[config.faces[fa].sphere].color
                cb = config.spheres[config.faces[fb].sphere].color
                if ca == cb:
                    continue
                yield BirthSite(fa, fb, rid)


def death_sites(config: Configuration):
    for cid in sorted(config.curves):
        curve = config.curves[cid]
        if not curve.is_loop:
            continue
        try:
            _apply_death(config, DeathSite(cid))
        except MoveError:
            continue
        yield DeathSite(cid)


# === quadrant pairing and corner connectivity ===
#
# Around a double-curve occurrence the two carrier spheres cut space into
# four quadrants, each bounded by one face-side per carrier.  The stored
# data does not record the pairing directly; it is recovered by matching
# side regions, which is unique in all but contrived symmetric cases.


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb

    def parts(self) -> list[frozenset]:
        groups: dict = {}
        for x in self.parent:
            groups.setdefault(self.find(x), set()).add(x)
        return [frozenset(g) for g in groups.values()]


def _occurrence_faces(state: Configuration, occ: tuple):
    """Faces on both carriers at an edge ("e", curve, i) or loop ("l", curve)."""
    cid = occ[1]
    sa, sb = state.curves[cid].carriers
    if occ[0] == "e":
        i = occ[2]
        fa = (state.dart_face[(sa, Dart(cid, i, 1))],
              state.dart_face[(sa, Dart(cid, i, -1))])
        fb = (state.dart_face[(sb, Dart(cid, i, 1))],
              state.dart_face[(sb, Dart(cid, i, -1))])
    else:
        fa = (state.loop_face[(sa, cid, 0)], state.loop_face[(sa, cid, 1)])
        fb = (state.loop_face[(sb, cid, 0)], state.loop_face[(sb, cid, 1)])
    return fa, fb


def _quadrant_matchings(label, fa, fb) -> list[frozenset]:
    """Slot pairings at one occurrence consistent with the side regions."""
    out = []
    for u in (0, 1):
        for v in (0, 1):
            pairs = (
                ((fa[0], u), (fb[0], v)),
                ((fa[0], 1 - u), (fb[1], v)),
                ((fa[1], u), (fb[0], 1 - v)),
                ((fa[1], 1 - u), (fb[1], 1 - v)),
            )
            if all(label(a) == label(b) for a, b in pairs):
                entry = frozenset(frozenset(p) for p in pairs)
                if entry not in out:
                    out.append(entry)
    return out


def _slot_occurrences(state: Configuration, slots) -> set:
    occs = set()
    for face_id, _ in slots:
        face = state.faces[face_id]
        for cyc in face.cycles:
            if cyc[0] == LOOP_CYCLE:
                occs.add(("l", cyc[1]))
            else:
                key = Dart(cyc[1], cyc[2], cyc[3])
                for d in state.traced_orbits[face.sphere].get(key, (key,)):
                    occs.add(("e", d.curve, d.edge))
    return occs


def _corner_graph(state: Configuration, slots: frozenset, label):
    """Certain and candidate corner adjacency over a prospective region's
    slot set.  Certain edges occur in every region-consistent quadrant
    matching; candidate edges occur in at least one."""
    certain = _UnionFind(slots)
    loose = _UnionFind(slots)
    for occ in sorted(_slot_occurrences(state, slots)):
        matchings = _quadrant_matchings(label, *_occurrence_faces(state, occ))
        if not matchings:
            raise PreconditionFailed(
                f"no region-consistent quadrant pairing at {occ}"
            )
        common = frozenset.intersection(*matchings)
        for matching in matchings:
            for pair in matching:
                a, b = tuple(pair)
                if a in slots and b in slots:
                    loose.union(a, b)
                    if pair in common:
                        certain.union(a, b)
    return certain, loose


def _resolve_split(state, slots, label, anchor1, anchor2, assignment):
    """Decide whether a compressed region splits, and partition its slots.

    Returns None when the region stays connected, else (piece1, piece2)
    with anchor1 in piece1.  Parts not corner-connected to either anchor
    default to piece2 (a compression disc isotoped close to the cut face),
    unless an explicit assignment overrides.
    """
    certain, loose = _corner_graph(state, slots, label)
    if certain.find(anchor1) == certain.find(anchor2):
        return None
    if assignment is None and loose.find(anchor1) == loose.find(anchor2):
        raise PreconditionFailed(
            "quadrant pairings are ambiguous here; give an explicit assignment"
        )
    parts = certain.parts()
    part1 = next(p for p in parts if anchor1 in p)
    part2 = next(p for p in parts if anchor2 in p)
    if assignment is not None:
        piece1 = set(assignment) | {anchor1}
        piece2 = set(slots) - piece1
        if anchor2 in piece1:
            raise PreconditionFailed("assignment merges the two cut pieces")
        for p in parts:
            if p & piece1 and p & piece2:
                raise PreconditionFailed(
                    "assignment splits a corner-connected boundary piece"
                )
        return frozenset(piece1), frozenset(piece2)
    for p in parts:
        if p in (part1, part2):
            continue
        if loose.find(next(iter(p))) == loose.find(anchor1):
            raise PreconditionFailed(
                "boundary piece may belong to either side; give an assignment"
            )
    piece2 = set(slots) - set(part1)
    return frozenset(part1), frozenset(piece2)


# === cut and paste ===


def _resolve_piece(state: Configuration, face: Face, piece: tuple) -> frozenset:
    """Normalize a site's bipartition entries to the face's stored keys."""
    by_dart = {}
    for cyc in face.cycles:
        if cyc[0] == DART_CYCLE:
            key = Dart(cyc[1], cyc[2], cyc[3])
            for d in state.traced_orbits[face.sphere].get(key, (key,)):
                by_dart[d] = cyc
    out = set()
    for entry in piece:
        if entry in face.cycles:
            out.add(entry)
            continue
        if entry[0] == DART_CYCLE:
            d = Dart(entry[1], entry[2], entry[3])
            if d in by_dart:
                out.add(by_dart[d])
                continue
        raise InvalidSite(f"cycle {entry!r} is not on face {face.id}")
    return frozenset(out)


def _sphere_attachment(state: Configuration, sphere_id: int, face: Face):
    """Union-find of the sphere's cells with `face` removed; keys are
    ("f", id), ("c", dart-component index) and ("o", loop id)."""
    comps = dart_components(state, sphere_id)
    comp_of_curve = {}
    for i, comp in enumerate(comps):
        for c in comp:
            comp_of_curve[c] = i
    nodes = [("f", f) for f in state.sphere_faces.get(sphere_id, ())
             if f != face.id]
    nodes += [("c", i) for i in range(len(comps))]
    nodes += [("o", c) for c in state.sphere_curves.get(sphere_id, ())
              if state.curves[c].is_loop]
    uf = _UnionFind(nodes)

    def cycle_node(cyc):
        if cyc[0] == LOOP_CYCLE:
            return ("o", cyc[1])
        return ("c", comp_of_curve[cyc[1]])

    for fid in state.sphere_faces.get(sphere_id, ()):
        if fid == face.id:
            continue
        for cyc in state.faces[fid].cycles:
            uf.union(("f", fid), cycle_node(cyc))
    return uf, cycle_node


def _apply_cut(state: Configuration, site: CutSite) -> _Work:
    work = _Work(state)
    sphere = _lookup(work.spheres, site.sphere, "sphere")
    face = _lookup(work.faces, site.face, "face")
    if site.side not in (0, 1):
        raise InvalidSite(f"bad side bit {site.side!r}")
    _require(face.sphere == sphere.id, "cut face must lie on the cut sphere")
    piece = _resolve_piece(state, face, site.piece)
    rest = frozenset(face.cycles) - piece
    x_id = state.region_at(face.id, site.side)
    y_id = state.region_at(face.id, 1 - site.side)

    uf, cycle_node = _sphere_attachment(state, sphere.id, face)
    roots1 = {uf.find(cycle_node(c)) for c in piece}
    roots2 = {uf.find(cycle_node(c)) for c in rest}
    if roots1 & roots2:
        raise PreconditionFailed(
            "bipartition separates cycles of one connected diagram piece"
        )

    s1 = work.fresh()
    s2 = work.fresh()
    f1 = work.fresh()
    f2 = work.fresh()

    def side_of(node) -> int:
        return s1 if uf.find(node) in roots1 else s2

    rot1: dict[int, tuple] = {}
    rot2: dict[int, tuple] = {}
    for cid in state.sphere_curves.get(sphere.id, ()):
        curve = work.curves[cid]
        node = ("o", cid) if curve.is_loop else cycle_node(
            dart_cycle_key(curve.darts()[0])
        )
        target = side_of(node)
        carriers = tuple(target if s == sphere.id else s for s in curve.carriers)
        work.curves[cid] = Curve(cid, curve.label, carriers, curve.vertices)
        if not curve.is_loop:
            for v in curve.vertices:
                rot = sphere.rotation.get(v)
                if rot is not None:
                    (rot1 if target == s1 else rot2)[v] = rot
    for fid in state.sphere_faces.get(sphere.id, ()):
        if fid == face.id:
            continue
        old = work.faces[fid]
        work.faces[fid] = Face(fid, side_of(("f", fid)), old.cycles)
    work.spheres[s1] = Sphere(s1, sphere.color, rot1)
    work.spheres[s2] = Sphere(s2, sphere.color, rot2)
    work.faces[f1] = Face(f1, s1, tuple(sorted(piece)))
    work.faces[f2] = Face(f2, s2, tuple(sorted(rest)))
    work.retire(face.id, work.faces)
    work.retire(sphere.id, work.spheres)

    work.reslot_region(
        y_id, {(face.id, 1 - site.side)},
        {(f1, 1 - site.side), (f2, 1 - site.side)},
    )

    x = work.regions[x_id]
    anchor1 = (f1, site.side)
    anchor2 = (f2, site.side)
    new_slots = frozenset(x.sides - {(face.id, site.side)}) | {anchor1, anchor2}
    temp = work.to_configuration()
    pre_side = state.side_region

    def label(slot):
        if slot[0] in (f1, f2):
            return x_id if slot[1] == site.side else y_id
        try:
            return pre_side[slot]
        except KeyError:
            raise PreconditionFailed(f"dangling face side {slot}") from None

    split = _resolve_split(temp, new_slots, label, anchor1, anchor2,
                           site.assignment)
    if split is None:
        work.reslot_region(x_id, {(face.id, site.side)}, {anchor1, anchor2})
    else:
        piece1, piece2 = split
        x1 = work.fresh()
        x2 = work.fresh()
        work.regions[x1] = Region(x1, x.colors, piece1)
        work.regions[x2] = Region(x2, x.colors, piece2)
        work.retire(x_id, work.regions)
        if work.outside == x_id:
            work.outside = x2
    return work


def _apply_paste(state: Configuration, site: PasteSite) -> _Work:
    work = _Work(state)
    face_a = _lookup(work.faces, site.face_a, "face")
    face_b = _lookup(work.faces, site.face_b, "face")
    region = _lookup(work.regions, site.region, "region")
    sphere_a = work.spheres[face_a.sphere]
    sphere_b = work.spheres[face_b.sphere]
    _require(sphere_a.id != sphere_b.id, "paste needs two distinct spheres")
    _require(sphere_a.color == sphere_b.color,
             "paste needs spheres of one color")
    bits_a = {s for s in (0, 1) if (face_a.id, s) in region.sides}
    bits_b = {s for s in (0, 1) if (face_b.id, s) in region.sides}
    _require(bool(bits_a) and bool(bits_b),
             "both faces must touch the site region")
    common = bits_a & bits_b
    _require(bool(common), "configuration sides disagree")
    bit = min(common)
    slot_a = (face_a.id, bit)
    slot_b = (face_b.id, bit)
    ya = work.region_of_slot((face_a.id, 1 - bit))
    yb = work.region_of_slot((face_b.id, 1 - bit))

    merged_sphere = work.fresh()
    h = work.fresh()
    rotation = dict(sphere_a.rotation)
    rotation.update(sphere_b.rotation)
    work.spheres[merged_sphere] = Sphere(merged_sphere, sphere_a.color, rotation)
    for cid in list(state.sphere_curves.get(sphere_a.id, ())) + list(
        state.sphere_curves.get(sphere_b.id, ())
    ):
        curve = work.curves[cid]
        carriers = tuple(
            merged_sphere if s in (sphere_a.id, sphere_b.id) else s
            for s in curve.carriers
        )
        work.curves[cid] = Curve(cid, curve.label, carriers, curve.vertices)
    for fid in list(state.sphere_faces.get(sphere_a.id, ())) + list(
        state.sphere_faces.get(sphere_b.id, ())
    ):
        if fid in (face_a.id, face_b.id):
            continue
        old = work.faces[fid]
        work.faces[fid] = Face(fid, merged_sphere, old.cycles)
    work.faces[h] = Face(
        h, merged_sphere, tuple(sorted(face_a.cycles + face_b.cycles))
    )
    work.retire(face_a.id, work.faces)
    work.retire(face_b.id, work.faces)
    work.retire(sphere_a.id, work.spheres)
    work.retire(sphere_b.id, work.spheres)
    work.trail.face[face_a.id] = h
    work.trail.face[face_b.id] = h
    work.trail.sphere[sphere_a.id] = merged_sphere
    work.trail.sphere[sphere_b.id] = merged_sphere

    work.reslot_region(region.id, {slot_a, slot_b}, {(h, bit)})
    if ya.id == yb.id:
        work.reslot_region(
            ya.id,
            {(face_a.id, 1 - bit), (face_b.id, 1 - bit)},
            {(h, 1 - bit)},
        )
    else:
        merged_region = work.fresh()
        sides = (ya.sides | yb.sides) - {
            (face_a.id, 1 - bit), (face_b.id, 1 - bit)
        }
        work.regions[merged_region] = Region(
            merged_region, ya.colors, frozenset(sides | {(h, 1 - bit)})
        )
        work.retire(ya.id, work.regions)
        work.retire(yb.id, work.regions)
        work.trail.region[ya.id] = merged_region
        work.trail.region[yb.id] = merged_region
        if work.outside in (ya.id, yb.id):
            work.outside = merged_region
    return work


register_applier(MoveKind.CUT, _apply_cut)
register_applier(MoveKind.PASTE, _apply_paste)


def cut_sites(config: Configuration, max_cycles: int = 4):
    for sid in sorted(config.spheres):
        for fid in config.sphere_faces.get(sid, ()):
            cycles = config.faces[fid].cycles
            if len(cycles) > max_cycles:
                continue
            subsets = [()]
            for cyc in cycles:
                subsets += [s + (cyc,) for s in subsets]
            for piece in subsets:
                for side in (0, 1):
                    yield CutSite(sid, fid, tuple(sorted(piece)), side)


def paste_sites(config: Configuration):
    for rid in sorted(config.regions):
        slots = sorted(config.regions[rid].sides)
        for i, (fa, _) in enumerate(slots):
            for fb, _ in slots[i + 1:]:
                pa = config.faces[fa].sphere
                pb = config.faces[fb].sphere
                if pa == pb:
                    continue
                if config.spheres[pa].color != config.spheres[pb].color:
                    continue
                yield PasteSite(fa, fb, rid)


# === saddle ===
#
# A saddle slides a band between two crossings p and q of the same pair of
# spheres.  Its site is one chord per sphere, drawn in a face g_a on sphere
# a and g_b on sphere b, ending on the strands through p and q.  Both
# strands are cut at p and q and rewired along the band's two boundary
# edges: E1 joins the tail side of p to the head side of q and E2 the tail
# side of q to the head side of p, sides taken in the site darts'
# directions.  Loop strands have no stored direction; their cut ports are
# the gauge pair "x"/"y" with E1 at "x".


class _SaddleEnd(NamedTuple):
    kind: str
    curve: int
    dart: Optional[Dart]
    tag: Optional[int]
    face: int


def _resolve_saddle_end(state: Configuration, sphere_id: int, end) -> _SaddleEnd:
    if not isinstance(end, tuple):
        raise InvalidSite(f"malformed chord end {end!r}")
    if len(end) == 4 and end[0] == DART_CYCLE:
        _, cid, i, s = end
        curve = _lookup(state.curves, cid, "curve")
        if curve.is_loop or not (0 <= i < len(curve.vertices)) or s not in (1, -1):
            raise InvalidSite(f"bad dart end {end!r}")
        d = Dart(cid, i, s)
        face = state.dart_face.get((sphere_id, d))
        if face is None:
            raise InvalidSite(f"dart {d} is not traced on sphere {sphere_id}")
        return _SaddleEnd(DART_CYCLE, cid, d, None, face)
    if len(end) == 3 and end[0] == LOOP_CYCLE:
        _, cid, tag = end
        curve = _lookup(state.curves, cid, "curve")
        if not curve.is_loop or tag not in (0, 1):
            raise InvalidSite(f"bad loop end {end!r}")
        face = state.loop_face.get((sphere_id, cid, tag))
        if face is None:
            raise InvalidSite(f"loop {cid} is not on sphere {sphere_id}")
        return _SaddleEnd(LOOP_CYCLE, cid, None, tag, face)
    raise InvalidSite(f"malformed chord end {end!r}")


class _Cut(NamedTuple):
    key: str  # "p" or "q"
    curve: int
    edge: Optional[int]


class _Arc(NamedTuple):
    """Maximal intact piece of a cut curve, running src -> dst along the
    stored direction.  Ports are (cut key, side): "u" front of a cut along
    its edge, "w" behind it, "x"/"y" the gauge ports of a cut loop."""

    curve: int
    src: tuple
    dst: tuple
    vertices: tuple
    edges: tuple


def _curve_arcs(curve: Curve, cuts: list, p_first: Optional[bool]) -> list:
    if curve.is_loop:
        if len(cuts) == 1:
            k = cuts[0].key
            return [_Arc(curve.id, (k, "y"), (k, "x"), (), ())]
        a, b = cuts[0].key, cuts[1].key
        return [_Arc(curve.id, (a, "y"), (b, "x"), (), ()),
                _Arc(curve.id, (b, "y"), (a, "x"), (), ())]
    n = len(curve.vertices)
    if len(cuts) == 1:
        k = cuts[0]
        verts = tuple(curve.vertices[(k.edge + 1 + t) % n] for t in range(n))
        edges = tuple((k.edge + 1 + t) % n for t in range(n - 1))
        return [_Arc(curve.id, (k.key, "w"), (k.key, "u"), verts, edges)]
    ka, kb = cuts
    if ka.edge == kb.edge:
        first, second = (ka, kb) if ((ka.key == "p") == p_first) else (kb, ka)
        verts = tuple(curve.vertices[(ka.edge + 1 + t) % n] for t in range(n))
        edges = tuple((ka.edge + 1 + t) % n for t in range(n - 1))
        return [
            _Arc(curve.id, (first.key, "w"), (second.key, "u"), (), ()),
            _Arc(curve.id, (second.key, "w"), (first.key, "u"), verts, edges),
        ]
    out = []
    ordered = sorted(cuts, key=lambda c: c.edge)
    for j, k in enumerate(ordered):
        nxt = ordered[(j + 1) % 2]
        count = (nxt.edge - k.edge) % n
        verts = tuple(curve.vertices[(k.edge + 1 + t) % n] for t in range(count))
        edges = tuple((k.edge + 1 + t) % n for t in range(count - 1))
        out.append(_Arc(curve.id, (k.key, "w"), (nxt.key, "u"), verts, edges))
    return out


def _arc_items(arc: _Arc, forward: bool) -> list:
    """Trace items of one arc traversal; loop arcs are silent connectors.

    Half items record which third of a cut edge was walked and whether the
    walk ran with (+1) or against (-1) the edge's stored direction."""
    if arc.src[1] in ("x", "y"):
        return []
    items = []
    verts = arc.vertices
    k = len(verts)
    if forward:
        items.append(("half",) + arc.src + (1,))
        for t, v in enumerate(verts):
            items.append(("v", v))
            if t < k - 1:
                items.append(("edge", arc.curve, arc.edges[t], 1))
        items.append(("half",) + arc.dst + (1,))
    else:
        items.append(("half",) + arc.dst + (-1,))
        for t in range(k - 1, -1, -1):
            items.append(("v", verts[t]))
            if t > 0:
                items.append(("edge", arc.curve, arc.edges[t - 1], -1))
        items.append(("half",) + arc.src + (-1,))
    return items


def _trace_surgery(arcs: list, conns: dict) -> list:
    """Close the cut arcs up across the band edges into new curve cycles.

    Walking alternates crossing a band edge with traversing the arc at the
    port where it landed, backwards when the port is the arc's dst.  Every
    cycle crosses at least one band edge, so the two seeds reach all of
    them; cycles come out E1-first."""
    arc_at = {}
    for arc in arcs:
        arc_at[arc.src] = (arc, True)
        arc_at[arc.dst] = (arc, False)
    conn_at = {}
    for name, (end0, end1) in conns.items():
        conn_at[end0] = (name, end1)
        conn_at[end1] = (name, end0)
    cycles = []
    seen = set()
    for _, start in (("E1", conns["E1"][0]), ("E2", conns["E2"][0])):
        if start in seen:
            continue
        items = []
        port = start
        while True:
            name, other = conn_at[port]
            items.append(("conn", name))
            seen.add(port)
            seen.add(other)
            arc, departing = arc_at[other]
            items.extend(_arc_items(arc, departing))
            port = arc.dst if departing else arc.src
            if port == start:
                break
        cycles.append(items)
    return cycles


def _chunk_items(items: list) -> tuple:
    """Rotate a traced cycle to start at a vertex and split it into the
    per-edge item runs between consecutive vertices."""
    idx = next((i for i, it in enumerate(items) if it[0] == "v"), None)
    if idx is None:
        return [], []
    rot = items[idx:] + items[:idx]
    verts = [rot[0][1]]
    chunks = []
    cur: list = []
    for it in rot[1:]:
        if it[0] == "v":
            chunks.append(cur)
            cur = []
            verts.append(it[1])
        else:
            cur.append(it)
    chunks.append(cur)
    return verts, chunks


def _cyc_slice(seq: tuple, start: int, stop: int) -> tuple:
    n = len(seq)
    k = (stop - start) % n
    return tuple(seq[(start + j) % n] for j in range(k))


def _apply_saddle(state: Configuration, site: SaddleSite) -> _Work:
    work = _Work(state)
    region = _lookup(work.regions, site.region, "region")
    ca, cb = site.chord_a, site.chord_b
    sa = _lookup(work.spheres, ca.sphere, "sphere").id
    sb = _lookup(work.spheres, cb.sphere, "sphere").id
    _require(sa != sb, "saddle chords must lie on two spheres")
    pa = _resolve_saddle_end(state, sa, ca.p)
    qa = _resolve_saddle_end(state, sa, ca.q)
    pb = _resolve_saddle_end(state, sb, cb.p)
    qb = _resolve_saddle_end(state, sb, cb.q)
    for x, y in ((pa, pb), (qa, qb)):
        same = (x.kind == y.kind and x.curve == y.curve
                and (x.kind == LOOP_CYCLE or x.dart.edge == y.dart.edge))
        _require(same, "the two chords must end on the same strand crossings")
    _require(pa.face == qa.face and pb.face == qb.face,
             "chord ends must lie in one face per sphere")
    g_a, g_b = state.faces[pa.face], state.faces[pb.face]
    cp, cq = state.curves[pa.curve], state.curves[qa.curve]
    _require(set(cp.carriers) == {sa, sb} and set(cq.carriers) == {sa, sb},
             "saddle strands must run between the two chord spheres")
    if pa.kind == DART_CYCLE and qa.kind == DART_CYCLE:
        _require((pb.dart == pa.dart) == (qb.dart == qa.dart),
                 "the band between the chords is twisted")
    same_edge = (pa.kind == DART_CYCLE and qa.kind == DART_CYCLE
                 and pa.curve == qa.curve and pa.dart.edge == qa.dart.edge)
    same_loop = (pa.kind == LOOP_CYCLE and qa.kind == LOOP_CYCLE
                 and pa.curve == qa.curve)
    pf = ca.p_first
    if pf is None:
        pf = cb.p_first
    elif cb.p_first is not None:
        _require(cb.p_first == pf, "the chords disagree about the cut order")
    if same_edge:
        _require(pf is not None, "two cuts on one edge need p_first")

    bits = []
    for g in (g_a, g_b):
        onsides = [s for s in (0, 1) if (g.id, s) in region.sides]
        _require(len(onsides) == 1,
                 "the site region must lie on one side of each chord face")
        bits.append(onsides[0])
    beta_a, beta_b = bits

    def far_face(end: _SaddleEnd, sphere_id: int) -> int:
        if end.kind == DART_CYCLE:
            return state.dart_face[(sphere_id, reverse(end.dart))]
        return state.loop_face[(sphere_id, end.curve, 1 - end.tag)]

    h_pa, h_qa = far_face(pa, sa), far_face(qa, sa)
    h_pb, h_qb = far_face(pb, sb), far_face(qb, sb)
    ua_id = state.region_at(g_a.id, 1 - beta_a)
    ub_id = state.region_at(g_b.id, 1 - beta_b)
    closes = "the band's corner regions do not close up"
    for h in (h_pa, h_qa):
        _require((h, beta_a) in work.regions[ub_id].sides, closes)
    for h in (h_pb, h_qb):
        _require((h, beta_b) in work.regions[ua_id].sides, closes)
    wp = state.region_at(h_pa, 1 - beta_a)
    wq = state.region_at(h_qa, 1 - beta_a)
    _require(wp == state.region_at(h_pb, 1 - beta_b), closes)
    _require(wq == state.region_at(h_qb, 1 - beta_b), closes)

    # --- curve surgery ---

    cut_p = _Cut("p", pa.curve, None if pa.dart is None else pa.dart.edge)
    cut_q = _Cut("q", qa.curve, None if qa.dart is None else qa.dart.edge)

    def tail_port(end: _SaddleEnd) -> str:
        if end.kind == LOOP_CYCLE:
            return "x"
        return "u" if end.dart.dir == 1 else "w"

    def head_port(end: _SaddleEnd) -> str:
        if end.kind == LOOP_CYCLE:
            return "y"
        return "w" if end.dart.dir == 1 else "u"

    conns = {
        "E1": (("p", tail_port(pa)), ("q", head_port(qa))),
        "E2": (("q", tail_port(qa)), ("p", head_port(pa))),
    }
    if pa.curve == qa.curve:
        arcs = _curve_arcs(cp, [cut_p, cut_q], pf)
    else:
        arcs = _curve_arcs(cp, [cut_p], None) + _curve_arcs(cq, [cut_q], None)

    dart_map: dict[Dart, Dart] = {}
    halfdart: dict[tuple, tuple] = {}
    new_curves = []  # (id, band edges crossed, has vertices)
    for items in _trace_surgery(arcs, conns):
        cid = work.fresh()
        names = frozenset(it[1] for it in items if it[0] == "conn")
        verts, chunks = _chunk_items(items)
        work.curves[cid] = Curve(cid, cp.label, cp.carriers, tuple(verts))
        for j, chunk in enumerate(chunks):
            kept = [it for it in chunk if it[0] == "edge"]
            if kept:
                (_, crv, idx, sense), = kept
                dart_map[Dart(crv, idx, sense)] = Dart(cid, j, 1)
                dart_map[Dart(crv, idx, -sense)] = Dart(cid, j, -1)
            else:
                for it in chunk:
                    if it[0] == "half":
                        halfdart[(it[1], it[2])] = (Dart(cid, j, 1), it[3])
        new_curves.append((cid, names, bool(verts)))

    loops_info: dict[str, int] = {}
    e1_through = True
    if same_edge:
        big = next(c for c in new_curves if c[2])
        loops_info["pocket"] = next(c[0] for c in new_curves if not c[2])
        e1_through = "E1" in big[1]
    elif same_loop:
        l1 = next(c[0] for c in new_curves if "E1" in c[1])
        loops_info["l1"] = l1
        loops_info["l2"] = next(c[0] for c in new_curves if c[0] != l1)
    elif pa.kind == LOOP_CYCLE and qa.kind == LOOP_CYCLE:
        loops_info["merged"] = new_curves[0][0]

    cuts_on_edge: dict[tuple, list] = {}
    for cut in (cut_p, cut_q):
        if cut.edge is not None:
            cuts_on_edge.setdefault((cut.curve, cut.edge), []).append(cut)
    for lst in cuts_on_edge.values():
        if len(lst) == 2 and ((lst[0].key == "p") != pf):
            lst.reverse()

    def repl(d: Dart) -> Dart:
        # the new dart carrying d's first-walked third of its cut edge
        lst = cuts_on_edge[(d.curve, d.edge)]
        cut = lst[0] if d.dir == 1 else lst[-1]
        new, sense = halfdart[(cut.key, "u" if d.dir == 1 else "w")]
        return new if sense == d.dir else reverse(new)

    for crv, idx in cuts_on_edge:
        for s in (1, -1):
            d = Dart(crv, idx, s)
            dart_map[d] = repl(d)

    cut_ids = {cp.id, cq.id}

    def nkey(seq) -> tuple:
        return dart_cycle_key(min(dart_map.get(d, d) for d in seq))

    # --- face surgery, one sphere at a time ---

    def surger(sphere_id: int, pe: _SaddleEnd, qe: _SaddleEnd,
               chord: Chord, g: Face) -> tuple:
        orbits = state.traced_orbits.get(sphere_id, {})
        owner: dict[Dart, Dart] = {}
        for key, seq in orbits.items():
            for d in seq:
                owner[d] = key

        def okey(d: Dart) -> tuple:
            return dart_cycle_key(owner[d])

        def orb(d: Dart) -> tuple:
            return orbits[owner[d]]

        def tr_key(key: tuple) -> tuple:
            if key[0] == LOOP_CYCLE:
                return key
            seq = orbits[Dart(key[1], key[2], key[3])]
            if any(d.curve in cut_ids for d in seq):
                return nkey(seq)
            return key

        other = set(g.cycles)
        split = None
        adds: set = set()
        if pe.kind == DART_CYCLE and qe.kind == DART_CYCLE:
            dp, dq = pe.dart, qe.dart
            other -= {okey(dp), okey(dq)}
            if dp == dq:
                orbit = orb(dp)
                subst = nkey(tuple(repl(d) if d == dp else d for d in orbit))
                pocket = loop_cycle_key(loops_info["pocket"], 0)
                split = ({subst}, {pocket}) if e1_through else ({pocket}, {subst})
            elif owner[dp] == owner[dq]:
                orbit = orb(dp)
                ip, iq = orbit.index(dp), orbit.index(dq)
                seq1 = (repl(dp),) + _cyc_slice(orbit, iq + 1, ip)
                seq2 = (repl(dq),) + _cyc_slice(orbit, ip + 1, iq)
                split = ({nkey(seq1)}, {nkey(seq2)})
            else:
                op, oq = orb(dp), orb(dq)
                ip, iq = op.index(dp), oq.index(dq)
                merged = ((repl(dp),) + _cyc_slice(oq, iq + 1, iq)
                          + (repl(dq),) + _cyc_slice(op, ip + 1, ip))
                adds = {nkey(merged)}
        elif pe.kind == LOOP_CYCLE and qe.kind == LOOP_CYCLE:
            if pe.curve == qe.curve:
                other -= {loop_cycle_key(pe.curve, pe.tag)}
                split = ({loop_cycle_key(loops_info["l1"], pe.tag)},
                         {loop_cycle_key(loops_info["l2"], pe.tag)})
            else:
                other -= {loop_cycle_key(pe.curve, pe.tag),
                          loop_cycle_key(qe.curve, qe.tag)}
                adds = {loop_cycle_key(loops_info["merged"], pe.tag)}
        else:
            le, de = (pe, qe) if pe.kind == LOOP_CYCLE else (qe, pe)
            other -= {loop_cycle_key(le.curve, le.tag), okey(de.dart)}
            orbit = orb(de.dart)
            adds = {nkey(tuple(repl(d) if d == de.dart else d for d in orbit))}

        if chord.partition:
            part = set(_resolve_piece(state, g, tuple(chord.partition)))
            if not part <= other:
                raise InvalidSite("partition names the strands being rewired")
            if split is None:
                raise PreconditionFailed(
                    "partition given but the chord does not separate its face")
        else:
            part = set()
        rest = other - part
        if split is None:
            new_g = work.fresh()
            work.faces[new_g] = Face(
                new_g, sphere_id,
                tuple(sorted(adds | {tr_key(k) for k in rest})),
            )
            pieces = (new_g,)
        else:
            p1 = work.fresh()
            p2 = work.fresh()
            work.faces[p1] = Face(
                p1, sphere_id,
                tuple(sorted(split[0] | {tr_key(k) for k in part})),
            )
            work.faces[p2] = Face(
                p2, sphere_id,
                tuple(sorted(split[1] | {tr_key(k) for k in rest})),
            )
            pieces = (p1, p2)
        work.retire(g.id, work.faces)
        if split is None:
            work.trail.face[g.id] = new_g

        hp, hq = far_face(pe, sphere_id), far_face(qe, sphere_id)
        pool = set(state.faces[hp].cycles) | set(state.faces[hq].cycles)
        hadds: set = set()
        if pe.kind == DART_CYCLE and qe.kind == DART_CYCLE:
            rp, rq = reverse(pe.dart), reverse(qe.dart)
            pool -= {okey(rp), okey(rq)}
            if rp == rq:
                orbit = orb(rp)
                hadds = {nkey(tuple(repl(d) if d == rp else d for d in orbit)),
                         loop_cycle_key(loops_info["pocket"], 1)}
            elif owner[rp] == owner[rq]:
                orbit = orb(rp)
                ip, iq = orbit.index(rp), orbit.index(rq)
                hadds = {nkey((repl(rp),) + _cyc_slice(orbit, iq + 1, ip)),
                         nkey((repl(rq),) + _cyc_slice(orbit, ip + 1, iq))}
            else:
                op, oq = orb(rp), orb(rq)
                ip, iq = op.index(rp), oq.index(rq)
                hadds = {nkey((repl(rp),) + _cyc_slice(oq, iq + 1, iq)
                              + (repl(rq),) + _cyc_slice(op, ip + 1, ip))}
        elif pe.kind == LOOP_CYCLE and qe.kind == LOOP_CYCLE:
            if pe.curve == qe.curve:
                pool -= {loop_cycle_key(pe.curve, 1 - pe.tag)}
                hadds = {loop_cycle_key(loops_info["l1"], 1 - pe.tag),
                         loop_cycle_key(loops_info["l2"], 1 - pe.tag)}
            else:
                pool -= {loop_cycle_key(pe.curve, 1 - pe.tag),
                         loop_cycle_key(qe.curve, 1 - qe.tag)}
                hadds = {loop_cycle_key(loops_info["merged"], 1 - pe.tag)}
        else:
            le, de = (pe, qe) if pe.kind == LOOP_CYCLE else (qe, pe)
            rd = reverse(de.dart)
            pool -= {loop_cycle_key(le.curve, 1 - le.tag), okey(rd)}
            orbit = orb(rd)
            hadds = {nkey(tuple(repl(d) if d == rd else d for d in orbit))}
        h_new = work.fresh()
        work.faces[h_new] = Face(
            h_new, sphere_id, tuple(sorted(hadds | {tr_key(k) for k in pool}))
        )
        for fid in {hp, hq}:
            work.retire(fid, work.faces)
            work.trail.face[fid] = h_new

        for fid in state.sphere_faces.get(sphere_id, ()):
            if fid in (g.id, hp, hq):
                continue
            f = state.faces[fid]
            cyc = tuple(sorted(tr_key(k) for k in f.cycles))
            if cyc != f.cycles:
                work.faces[fid] = Face(fid, sphere_id, cyc)
        return pieces, h_new

    pieces_a, h_a = surger(sa, pa, qa, ca, g_a)
    pieces_b, h_b = surger(sb, pb, qb, cb, g_b)

    for sid in (sa, sb):
        sph = state.spheres[sid]
        rot = {
            v: normalize_rotation(tuple(dart_map.get(d, d) for d in r))
            for v, r in sph.rotation.items()
        }
        work.spheres[sid] = Sphere(sid, sph.color, rot)

    work.retire(cp.id, work.curves)
    if cq.id != cp.id:
        work.retire(cq.id, work.curves)
    work.trail.dart.update(dart_map)
    if pa.kind == LOOP_CYCLE and qa.kind == LOOP_CYCLE and pa.curve != qa.curve:
        lam = loops_info["merged"]
        work.trail.loop[pa.curve] = ("loop", lam, {0: 0, 1: 1})
        if (pa.tag ^ qa.tag) == (pb.tag ^ qb.tag):
            delta = pa.tag ^ qa.tag
            work.trail.loop[qa.curve] = ("loop", lam, {0: delta, 1: 1 - delta})

    # --- regions ---

    work.reslot_region(
        ua_id,
        {(g_a.id, 1 - beta_a), (h_pb, beta_b), (h_qb, beta_b)},
        {(f, 1 - beta_a) for f in pieces_a} | {(h_b, beta_b)},
    )
    work.reslot_region(
        ub_id,
        {(g_b.id, 1 - beta_b), (h_pa, beta_a), (h_qa, beta_a)},
        {(f, 1 - beta_b) for f in pieces_b} | {(h_a, beta_a)},
    )
    w_old = {(h_pa, 1 - beta_a), (h_qa, 1 - beta_a),
             (h_pb, 1 - beta_b), (h_qb, 1 - beta_b)}
    w_new = {(h_a, 1 - beta_a), (h_b, 1 - beta_b)}
    w_ids = {wp, wq}
    if wp == wq:
        work.reslot_region(wp, w_old, w_new)
    else:
        rwp, rwq = work.regions[wp], work.regions[wq]
        wid = work.fresh()
        work.regions[wid] = Region(
            wid, rwp.colors,
            frozenset(((rwp.sides | rwq.sides) - w_old) | w_new),
        )
        work.retire(wp, work.regions)
        work.retire(wq, work.regions)
        work.trail.region[wp] = wid
        work.trail.region[wq] = wid
        if work.outside in (wp, wq):
            work.outside = wid

    r_drop = {(g_a.id, beta_a), (g_b.id, beta_b)}
    r_add = ({(f, beta_a) for f in pieces_a}
             | {(f, beta_b) for f in pieces_b})
    if len(pieces_a) == 1 and len(pieces_b) == 1:
        work.reslot_region(region.id, r_drop, r_add)
        return work

    slots = frozenset((set(region.sides) - r_drop) | r_add)
    fresh_bits: dict[int, dict] = {}
    for f in pieces_a:
        fresh_bits[f] = {beta_a: region.id, 1 - beta_a: ua_id}
    for f in pieces_b:
        fresh_bits[f] = {beta_b: region.id, 1 - beta_b: ub_id}
    fresh_bits[h_a] = {beta_a: ub_id, 1 - beta_a: "W"}
    fresh_bits[h_b] = {beta_b: ua_id, 1 - beta_b: "W"}
    pre_side = state.side_region

    def label(slot):
        ent = fresh_bits.get(slot[0])
        if ent is not None:
            return ent[slot[1]]
        rid = pre_side.get(slot)
        if rid is None:
            raise PreconditionFailed(f"dangling face side {slot}")
        return "W" if rid in w_ids else rid

    if len(pieces_a) == 2:
        anchor1, anchor2 = (pieces_a[0], beta_a), (pieces_a[1], beta_a)
    else:
        anchor1, anchor2 = (pieces_b[0], beta_b), (pieces_b[1], beta_b)
    temp = work.to_configuration()
    split = _resolve_split(temp, slots, label, anchor1, anchor2,
                           site.assignment)
    if split is None:
        work.reslot_region(region.id, r_drop, r_add)
    else:
        piece1, piece2 = split
        r1 = work.fresh()
        r2 = work.fresh()
        work.regions[r1] = Region(r1, region.colors, piece1)
        work.regions[r2] = Region(r2, region.colors, piece2)
        work.retire(region.id, work.regions)
        if work.outside == region.id:
            work.outside = r2
    return work


register_applier(MoveKind.SADDLE, _apply_saddle)


def _same_occurrence(x: tuple, y: tuple) -> bool:
    if x[0] != y[0] or x[1] != y[1]:
        return False
    return x[0] == LOOP_CYCLE or x[2] == y[2]


def _chord_region(config: Configuration, fa: int, fb: int) -> Optional[int]:
    for s in (0, 1):
        rid = config.region_at(fa, s)
        sides = config.regions[rid].sides
        if (fb, 0) in sides or (fb, 1) in sides:
            return rid
    return None


def saddle_sites(config: Configuration):
    """Chord pairs along shared double-curve occurrences, bare form only
    (no partitions or assignments; ambiguous region splits refuse later)."""
    by_carriers: dict = {}
    for c in sorted(config.curves):
        by_carriers.setdefault(frozenset(config.curves[c].carriers), []).append(c)
    for carriers in sorted(by_carriers, key=sorted):
        cids = by_carriers[carriers]
        sa, sb = sorted(carriers)
        ends: dict = {}
        for cid in cids:
            curve = config.curves[cid]
            for sid in (sa, sb):
                lst = []
                if curve.is_loop:
                    for tag in (0, 1):
                        lst.append(((LOOP_CYCLE, cid, tag),
                                    config.loop_face[(sid, cid, tag)]))
                else:
                    for i in range(len(curve.vertices)):
                        for s in (1, -1):
                            lst.append(((DART_CYCLE, cid, i, s),
                                        config.dart_face[(sid, Dart(cid, i, s))]))
                ends[(cid, sid)] = lst
        for ci, cu in enumerate(cids):
            for cv in cids[ci:]:
                for ep_a, fpa in ends[(cu, sa)]:
                    for eq_a, fqa in ends[(cv, sa)]:
                        if fpa != fqa:
                            continue
                        if cu == cv and ep_a > eq_a:
                            continue
                        same_edge = (ep_a[0] == DART_CYCLE
                                     and eq_a[0] == DART_CYCLE
                                     and ep_a[1:3] == eq_a[1:3])
                        if same_edge and ep_a != eq_a:
                            continue
                        pf = True if same_edge else None
                        for ep_b, fpb in ends[(cu, sb)]:
                            if not _same_occurrence(ep_a, ep_b):
                                continue
                            for eq_b, fqb in ends[(cv, sb)]:
                                if fpb != fqb:
                                    continue
                                if not _same_occurrence(eq_a, eq_b):
                                    continue
                                if (ep_a[0] == DART_CYCLE
                                        and eq_a[0] == DART_CYCLE
                                        and ((ep_b[3] == ep_a[3])
                                             != (eq_b[3] == eq_a[3]))):
                                    continue
                                rid = _chord_region(config, fpa, fpb)
                                if rid is None:
                                    continue
                                yield SaddleSite(
                                    rid,
                                    Chord(sa, ep_a, eq_a, None, pf),
                                    Chord(sb, ep_b, eq_b, None, pf),
                                )


# === triple point birth and death ===
#
# The site is a triangle of chords, one per sphere, whose six ends pair
# up along three strand crossings.  Each chord drags its sphere's film
# across the crossing of the other two, so every strand gains the same
# two new vertices, and every chord face loses a bigon.  Around one new
# vertex pair the local picture on a sphere, walking "up" along the
# p-strand's effective direction (the q-strand is crossed against it):
#
#        in      mid      out
#   p  --->o--------->o--->        rot(v_s) = (Amid+ Bmid+ Ain- Bout-)
#          |          |            rot(v_n) = (Bin+ Aout+ Bmid- Amid-)
#   q  <---o<---------o<---
#         v_s        v_n
#
# The first vertex walked along a strand fixes its insertion order: on a
# vertexed curve the sign alternation forces it, on a circle it is gauged
# positive-first, and per sphere the two strands must agree, which pins
# (or checks) the effective directions.


class _RoleDarts(NamedTuple):
    mid_up: Dart
    mid_dn: Dart
    in_up: Dart
    in_dn: Dart
    out_up: Dart
    out_dn: Dart


def _strand_darts(cid: int, mid_e: int, in_e: int, out_e: int,
                  eff: int, beta: bool) -> _RoleDarts:
    up = -eff if beta else eff
    return _RoleDarts(
        Dart(cid, mid_e, up), Dart(cid, mid_e, -up),
        Dart(cid, in_e, up), Dart(cid, in_e, -up),
        Dart(cid, out_e, up), Dart(cid, out_e, -up),
    )


def _birth_role_darts(end: _SaddleEnd, eff: int, beta: bool) -> _RoleDarts:
    # edge names after the insertion; an end on edge i never wraps
    if end.kind == LOOP_CYCLE:
        mid_e, in_e, out_e = 0, 1, 1
    else:
        i = end.dart.edge
        mid_e = i + 1
        in_e = i if eff == 1 else i + 2
        out_e = i + 2 if eff == 1 else i
    return _strand_darts(end.curve, mid_e, in_e, out_e, eff, beta)


def _apply_triple_birth(state: Configuration, site: TripleBirthSite) -> _Work:
    work = _Work(state)
    chords = site.chords()
    spheres = [_lookup(work.spheres, ch.sphere, "sphere") for ch in chords]
    sids = [s.id for s in spheres]
    _require(len(set(sids)) == 3, "the three chords must lie on three spheres")
    for sph, color in zip(spheres, (Color.RED, Color.GREEN, Color.BLUE)):
        _require(sph.color == color, "chord roles must match the sphere colors")

    ends: dict[int, tuple] = {}
    for sid, ch in zip(sids, chords):
        pe = _resolve_saddle_end(state, sid, ch.p)
        qe = _resolve_saddle_end(state, sid, ch.q)
        _require(pe.curve != qe.curve,
                 "each chord must run between two distinct strands")
        _require(pe.face == qe.face, "chord ends must lie in one face per sphere")
        ends[sid] = (pe, qe)

    occur: dict[int, list] = {}
    for sid in sids:
        for role, e in enumerate(ends[sid]):
            occur.setdefault(e.curve, []).append((sid, role, e))
    _require(len(occur) == 3, "the chords must close a triangle of strands")
    for cid, lst in occur.items():
        _require(len(lst) == 2, "each strand must join exactly two chords")
        (s1, _, e1), (s2, _, e2) = lst
        curve = state.curves[cid]
        _require(set(curve.carriers) == {s1, s2},
                 "strands must run between the spheres whose chords meet them")
        same = (e1.kind == e2.kind
                and (e1.kind == LOOP_CYCLE or e1.dart.edge == e2.dart.edge))
        _require(same, "the two chords must end on the same strand crossing")
    site_cids = set(occur)

    g_faces = [state.faces[ends[sid][0].face] for sid in sids]
    _require(len({g.id for g in g_faces}) == 3,
             "the three chord faces must be distinct")
    if site.region is not None:
        region = _lookup(work.regions, site.region, "region")
    else:
        cands = [
            r for r in work.regions.values()
            if all(
                sum(((g.id, s) in r.sides) for s in (0, 1)) == 1
                for g in g_faces
            )
        ]
        _require(len(cands) == 1,
                 "the site region cannot be recovered from the chord faces")
        region = cands[0]
    betas: dict[int, int] = {}
    for sid, g in zip(sids, g_faces):
        onsides = [s for s in (0, 1) if (g.id, s) in region.sides]
        _require(len(onsides) == 1,
                 "the site region must lie on one side of each chord face")
        betas[sid] = onsides[0]

    def far_face(end: _SaddleEnd, sphere_id: int) -> int:
        if end.kind == DART_CYCLE:
            return state.dart_face[(sphere_id, reverse(end.dart))]
        return state.loop_face[(sphere_id, end.curve, 1 - end.tag)]

    u_of = {sid: state.region_at(g.id, 1 - betas[sid])
            for sid, g in zip(sids, g_faces)}
    h_face = {}
    for sid in sids:
        for role, e in enumerate(ends[sid]):
            h_face[(sid, role)] = far_face(e, sid)
    closes = "the crossing's corner regions do not close up"
    w_of: dict[int, int] = {}
    for cid, lst in occur.items():
        (s1, r1, _), (s2, r2, _) = lst
        h1, h2 = h_face[(s1, r1)], h_face[(s2, r2)]
        _require(state.region_at(h1, betas[s1]) == u_of[s2], closes)
        _require(state.region_at(h2, betas[s2]) == u_of[s1], closes)
        w1 = state.region_at(h1, 1 - betas[s1])
        _require(w1 == state.region_at(h2, 1 - betas[s2]), closes)
        w_of[cid] = w1

    # --- signs and effective directions ---

    sigma: dict[int, int] = {}
    for cid, lst in occur.items():
        curve = state.curves[cid]
        if curve.is_loop:
            sigma[cid] = 1
        else:
            i = lst[0][2].dart.edge
            sigma[cid] = -state.vertices[curve.vertices[i]].sign
    eff: dict[tuple, int] = {}
    for sid in sids:
        pe, qe = ends[sid]
        sp = None if pe.kind == LOOP_CYCLE else pe.dart.dir
        sq = None if qe.kind == LOOP_CYCLE else qe.dart.dir
        prod = -sigma[pe.curve] * sigma[qe.curve]
        if sp is not None and sq is not None:
            _require(sp * sq == prod,
                     "the three crossings close with the wrong chirality")
        elif sp is not None:
            sq = prod * sp
        elif sq is not None:
            sp = prod * sq
        else:
            sp, sq = 1, prod
        eff[(sid, 0)], eff[(sid, 1)] = sp, sq

    v_plus = work.fresh()
    v_minus = work.fresh()
    work.vertices[v_plus] = Vertex(v_plus, 1)
    work.vertices[v_minus] = Vertex(v_minus, -1)

    # --- strand rewrites; curve ids are kept ---

    dart_map: dict[Dart, Dart] = {}
    for cid, lst in occur.items():
        curve = state.curves[cid]
        pair = (v_plus, v_minus) if sigma[cid] == 1 else (v_minus, v_plus)
        if curve.is_loop:
            work.curves[cid] = Curve(cid, curve.label, curve.carriers, pair)
            continue
        i = lst[0][2].dart.edge
        n = len(curve.vertices)
        verts = curve.vertices[:i + 1] + pair + curve.vertices[i + 1:]
        work.curves[cid] = Curve(cid, curve.label, curve.carriers, verts)
        for k in range(i + 1, n):
            for s in (1, -1):
                dart_map[Dart(cid, k, s)] = Dart(cid, k + 2, s)
        dart_map[Dart(cid, i, -1)] = Dart(cid, i + 2, -1)

    def mapped(seq) -> tuple:
        return tuple(dart_map.get(d, d) for d in seq)

    def key_of(seq) -> tuple:
        return dart_cycle_key(min(seq))

    roles: dict[tuple, _RoleDarts] = {}
    vs_of: dict[int, tuple] = {}
    for sid in sids:
        pe, qe = ends[sid]
        roles[(sid, 0)] = _birth_role_darts(pe, eff[(sid, 0)], beta=False)
        roles[(sid, 1)] = _birth_role_darts(qe, eff[(sid, 1)], beta=True)
        south_first = eff[(sid, 0)] * sigma[pe.curve] == 1
        vs_of[sid] = (v_plus, v_minus) if south_first else (v_minus, v_plus)

    # --- face surgery, one sphere at a time ---

    pieces_of: dict[int, tuple] = {}
    split_of: dict[int, Optional[tuple]] = {}
    bigons: dict[int, int] = {}
    h_new_of: dict[tuple, int] = {}

    for sph, ch, g in zip(spheres, chords, g_faces):
        sid = sph.id
        orbits = state.traced_orbits.get(sid, {})
        owner: dict[Dart, Dart] = {}
        for key, seq in orbits.items():
            for d in seq:
                owner[d] = key

        def okey(d: Dart) -> tuple:
            return dart_cycle_key(owner[d])

        def orb(d: Dart) -> tuple:
            return orbits[owner[d]]

        def tr_key(key: tuple) -> tuple:
            if key[0] == LOOP_CYCLE:
                return key
            seq = orbits[Dart(key[1], key[2], key[3])]
            if any(d.curve in site_cids for d in seq):
                return key_of(mapped(seq))
            return key

        pe, qe = ends[sid]
        ra, rb = roles[(sid, 0)], roles[(sid, 1)]
        other = set(g.cycles)
        for e in (pe, qe):
            if e.kind == DART_CYCLE:
                other -= {okey(e.dart)}
            else:
                other -= {loop_cycle_key(e.curve, e.tag)}

        split = None
        adds: set = set()
        if (pe.kind == DART_CYCLE and qe.kind == DART_CYCLE
                and owner[pe.dart] == owner[qe.dart]):
            orbit = orb(pe.dart)
            ip, iq = orbit.index(pe.dart), orbit.index(qe.dart)
            south = ((ra.in_up, rb.out_dn)
                     + mapped(_cyc_slice(orbit, iq + 1, ip)))
            north = ((ra.out_up,) + mapped(_cyc_slice(orbit, ip + 1, iq))
                     + (rb.in_dn,))
            split = ({key_of(south)}, {key_of(north)})
        else:
            if pe.kind == DART_CYCLE:
                op = orb(pe.dart)
                ip = op.index(pe.dart)
                a_in: tuple = (ra.in_up,)
                a_out: tuple = (ra.out_up,) + mapped(_cyc_slice(op, ip + 1, ip))
            else:
                a_in, a_out = (ra.in_up,), ()
            if qe.kind == DART_CYCLE:
                oq = orb(qe.dart)
                iq = oq.index(qe.dart)
                b_mid = ((rb.out_dn,) + mapped(_cyc_slice(oq, iq + 1, iq))
                         + (rb.in_dn,))
            else:
                b_mid = (rb.out_dn,)
            adds = {key_of(a_in + b_mid + a_out)}

        if ch.partition:
            part = set(_resolve_piece(state, g, tuple(ch.partition)))
            if not part <= other:
                raise InvalidSite("partition names the strands being rewired")
            if split is None:
                raise PreconditionFailed(
                    "partition given but the chord does not separate its face")
        else:
            part = set()
        rest = other - part
        if split is None:
            new_g = work.fresh()
            work.faces[new_g] = Face(
                new_g, sid,
                tuple(sorted(adds | {tr_key(k) for k in rest})),
            )
            pieces = (new_g,)
        else:
            p1 = work.fresh()
            p2 = work.fresh()
            work.faces[p1] = Face(
                p1, sid, tuple(sorted(split[0] | {tr_key(k) for k in part})))
            work.faces[p2] = Face(
                p2, sid, tuple(sorted(split[1] | {tr_key(k) for k in rest})))
            pieces = (p1, p2)
        work.retire(g.id, work.faces)
        if split is None:
            work.trail.face[g.id] = new_g
        pieces_of[sid] = pieces
        split_of[sid] = split

        bid = work.fresh()
        work.faces[bid] = Face(bid, sid, (key_of((ra.mid_dn, rb.mid_up)),))
        bigons[sid] = bid

        for role, e, sub, loop_comp in (
            (0, pe, (ra.out_dn, rb.mid_dn, ra.in_dn),
             (reverse(ra.in_up), rb.mid_dn)),
            (1, qe, (rb.out_up, ra.mid_up, rb.in_up),
             (reverse(rb.out_dn), ra.mid_up)),
        ):
            hid = h_face[(sid, role)]
            pool = set(state.faces[hid].cycles)
            if e.kind == DART_CYCLE:
                rd = reverse(e.dart)
                pool -= {okey(rd)}
                seq: list = []
                for d in orb(rd):
                    if d == rd:
                        seq.extend(sub)
                    else:
                        seq.append(dart_map.get(d, d))
                hadds = {key_of(tuple(seq))}
            else:
                pool -= {loop_cycle_key(e.curve, 1 - e.tag)}
                hadds = {key_of(loop_comp)}
            h_new = work.fresh()
            work.faces[h_new] = Face(
                h_new, sid, tuple(sorted(hadds | {tr_key(k) for k in pool})))
            work.retire(hid, work.faces)
            work.trail.face[hid] = h_new
            h_new_of[(sid, role)] = h_new

        touched = {g.id, h_face[(sid, 0)], h_face[(sid, 1)]}
        for fid in state.sphere_faces.get(sid, ()):
            if fid in touched:
                continue
            f = state.faces[fid]
            cyc = tuple(sorted(tr_key(k) for k in f.cycles))
            if cyc != f.cycles:
                work.faces[fid] = Face(fid, sid, cyc)

        rot = {
            v: normalize_rotation(mapped(r))
            for v, r in state.spheres[sid].rotation.items()
        }
        v_s, v_n = vs_of[sid]
        rot[v_s] = normalize_rotation((ra.mid_up, rb.mid_up, ra.in_dn, rb.out_dn))
        rot[v_n] = normalize_rotation((rb.in_up, ra.out_up, rb.mid_dn, ra.mid_dn))
        work.spheres[sid] = Sphere(sid, sph.color, rot)

    # --- regions ---

    rm_of: dict[int, set] = {}
    ad_of: dict[int, set] = {}

    def slotmove(rid: int, rm, ad) -> None:
        rm_of.setdefault(rid, set()).update(rm)
        ad_of.setdefault(rid, set()).update(ad)

    for sid, g in zip(sids, g_faces):
        b = betas[sid]
        slotmove(u_of[sid], {(g.id, 1 - b)},
                 {(f, 1 - b) for f in pieces_of[sid]})
    for cid, lst in occur.items():
        (s1, r1, _), (s2, r2, _) = lst
        b1, b2 = betas[s1], betas[s2]
        h1, h2 = h_face[(s1, r1)], h_face[(s2, r2)]
        n1, n2 = h_new_of[(s1, r1)], h_new_of[(s2, r2)]
        slotmove(u_of[s2], {(h1, b1)}, {(n1, b1)})
        slotmove(u_of[s1], {(h2, b2)}, {(n2, b2)})
        z = next(s for s in sids if s not in (s1, s2))
        slotmove(w_of[cid],
                 {(h1, 1 - b1), (h2, 1 - b2)},
                 {(n1, 1 - b1), (n2, 1 - b2), (bigons[z], betas[z])})
    for rid in rm_of:
        work.reslot_region(rid, rm_of[rid], ad_of[rid])

    f_id = work.fresh()
    work.regions[f_id] = Region(
        f_id,
        frozenset(region.colors ^ {sph.color for sph in spheres}),
        frozenset((bigons[sid], 1 - betas[sid]) for sid in sids),
    )

    r_drop = {(g.id, betas[sid]) for sid, g in zip(sids, g_faces)}
    r_add: set = set()
    for sid in sids:
        r_add |= {(f, betas[sid]) for f in pieces_of[sid]}
    if all(split_of[sid] is None for sid in sids):
        work.reslot_region(region.id, r_drop, r_add)
    else:
        slots = frozenset((set(region.sides) - r_drop) | r_add)
        fresh_bits: dict[int, dict] = {}
        for sid in sids:
            for f in pieces_of[sid]:
                fresh_bits[f] = {betas[sid]: region.id,
                                 1 - betas[sid]: u_of[sid]}
        for cid, lst in occur.items():
            (s1, r1, _), (s2, r2, _) = lst
            fresh_bits[h_new_of[(s1, r1)]] = {betas[s1]: u_of[s2],
                                              1 - betas[s1]: w_of[cid]}
            fresh_bits[h_new_of[(s2, r2)]] = {betas[s2]: u_of[s1],
                                              1 - betas[s2]: w_of[cid]}
        for sid in sids:
            c_miss = next(c for c in occur
                          if sid not in {s for s, _, _ in occur[c]})
            fresh_bits[bigons[sid]] = {betas[sid]: w_of[c_miss],
                                       1 - betas[sid]: f_id}
        pre_side = state.side_region

        def label(slot):
            ent = fresh_bits.get(slot[0])
            if ent is not None:
                return ent[slot[1]]
            rid = pre_side.get(slot)
            if rid is None:
                raise PreconditionFailed(f"dangling face side {slot}")
            return rid

        a_sid = next(sid for sid in sids if split_of[sid] is not None)
        anchor1 = (pieces_of[a_sid][0], betas[a_sid])
        anchor2 = (pieces_of[a_sid][1], betas[a_sid])
        temp = work.to_configuration()
        split = _resolve_split(temp, slots, label, anchor1, anchor2,
                               site.assignment)
        if split is None:
            work.reslot_region(region.id, r_drop, r_add)
        else:
            piece1, piece2 = split
            r1 = work.fresh()
            r2 = work.fresh()
            work.regions[r1] = Region(r1, region.colors, piece1)
            work.regions[r2] = Region(r2, region.colors, piece2)
            work.retire(region.id, work.regions)
            if work.outside == region.id:
                work.outside = r2

    # --- trails ---

    work.trail.dart.update(dart_map)
    for cid, lst in occur.items():
        if state.curves[cid].is_loop:
            entry: dict[tuple, Dart] = {}
            for s1, r1, e in lst:
                d_up = (roles[(s1, r1)].in_up if r1 == 0
                        else roles[(s1, r1)].out_dn)
                entry[(s1, e.tag)] = d_up
                entry[(s1, 1 - e.tag)] = reverse(d_up)
            work.trail.loop[cid] = ("sides", entry)
            continue
        # consumed dart ends: the per-carrier continuation on the chord-face
        # side is the fresh incoming/outgoing strand dart, not the edge rename
        for s1, r1, e in lst:
            d_up = (roles[(s1, r1)].in_up if r1 == 0
                    else roles[(s1, r1)].out_dn)
            work.trail.ends[(s1, e.dart)] = d_up
            work.trail.ends[(s1, reverse(e.dart))] = reverse(d_up)
    return work


register_applier(MoveKind.TRIPLE_BIRTH, _apply_triple_birth)


def _death_role_darts(curve: Curve, mid_e: int, eff: int,
                      beta: bool) -> _RoleDarts:
    # edge names as the birth left them; on short strands they wrap
    n = len(curve.vertices)
    in_e = (mid_e - 1) % n if eff == 1 else (mid_e + 1) % n
    out_e = (mid_e + 1) % n if eff == 1 else (mid_e - 1) % n
    return _strand_darts(curve.id, mid_e, in_e, out_e, eff, beta)


def _apply_triple_death(state: Configuration, site: TripleDeathSite) -> _Work:
    work = _Work(state)
    region = _lookup(work.regions, site.region, "region")
    shape = "the site region is not a pocket between three crossing bigons"
    _require(len(region.sides) == 3, shape)

    infos = []
    for fid, bit in sorted(region.sides):
        f = state.faces.get(fid)
        _require(f is not None and len(f.cycles) == 1
                 and f.cycles[0][0] == DART_CYCLE, shape)
        head = f.cycles[0]
        seq = state.traced_orbits.get(f.sphere, {}).get(
            Dart(head[1], head[2], head[3]), ())
        _require(len(seq) == 2, shape)
        infos.append((f.sphere, f, 1 - bit, seq))
    _require(len({f.id for _, f, _, _ in infos}) == 3, shape)
    sids = [sid for sid, _, _, _ in infos]
    _require(len(set(sids)) == 3, shape)
    sphere_colors = {state.spheres[s].color for s in sids}
    _require(len(sphere_colors) == 3, shape)

    # --- decode the two strand roles on each sphere ---
    # Either bigon dart may be read as the "down" mid dart: swapping the
    # roles permutes the expected rotations among themselves.

    form = "the crossing pair does not pull apart"
    betas: dict[int, int] = {}
    bigon_of: dict[int, Face] = {}
    roles: dict[tuple, _RoleDarts] = {}
    strand: dict[tuple, int] = {}
    eff: dict[tuple, int] = {}
    pair = None
    for sid, bigon, beta, (du, dv) in infos:
        cu = state.curves[du.curve]
        cv = state.curves[dv.curve]
        _require(cu.id != cv.id, shape)
        s, t = -du.dir, -dv.dir
        ra = _death_role_darts(cu, du.edge, s, beta=False)
        rb = _death_role_darts(cv, dv.edge, t, beta=True)
        v_s, v_n = dart_head(cu, du), dart_tail(cu, du)
        if pair is None:
            pair = {v_s, v_n}
            _require(len(pair) == 2, form)
        _require({v_s, v_n} == pair, form)
        rot = state.spheres[sid].rotation
        _require(rot.get(v_s) == normalize_rotation(
            (ra.mid_up, rb.mid_up, ra.in_dn, rb.out_dn)), form)
        _require(rot.get(v_n) == normalize_rotation(
            (rb.in_up, ra.out_up, rb.mid_dn, ra.mid_dn)), form)
        betas[sid] = beta
        bigon_of[sid] = bigon
        roles[(sid, 0)], roles[(sid, 1)] = ra, rb
        strand[(sid, 0)], strand[(sid, 1)] = cu.id, cv.id
        eff[(sid, 0)], eff[(sid, 1)] = s, t
    sgn = [state.vertices[v].sign for v in pair]
    _require(sgn[0] * sgn[1] == -1, form)

    by_curve: dict[int, list] = {}
    for sid in sids:
        for role in (0, 1):
            by_curve.setdefault(strand[(sid, role)], []).append((sid, role))
    _require(len(by_curve) == 3, shape)
    mid_of: dict[int, int] = {}
    for cid, lst in by_curve.items():
        _require(len(lst) == 2, shape)
        (s1, r1), (s2, r2) = lst
        m1 = roles[(s1, r1)].mid_up.edge
        _require(m1 == roles[(s2, r2)].mid_up.edge, shape)
        _require(set(state.curves[cid].carriers) == {s1, s2}, shape)
        mid_of[cid] = m1
    site_cids = set(by_curve)

    # --- the corner faces and regions must close like three crossings ---

    h_face: dict[tuple, int] = {}
    lobes: dict[int, tuple] = {}
    for sid in sids:
        ra, rb = roles[(sid, 0)], roles[(sid, 1)]
        fl1 = state.dart_face[(sid, ra.in_up)]
        fl2 = state.dart_face[(sid, ra.out_up)]
        ha = state.dart_face[(sid, rb.mid_dn)]
        hb = state.dart_face[(sid, ra.mid_up)]
        _require(ha != hb and not ({ha, hb} & {fl1, fl2}), shape)
        lobes[sid] = (fl1, fl2)
        h_face[(sid, 0)], h_face[(sid, 1)] = ha, hb

    closes = "the crossing's corner regions do not close up"
    u_of: dict[int, int] = {}
    for sid in sids:
        b = betas[sid]
        fl1, fl2 = lobes[sid]
        u1 = state.region_at(fl1, 1 - b)
        _require(u1 == state.region_at(fl2, 1 - b), closes)
        u_of[sid] = u1
    w_of: dict[int, int] = {}
    for cid, lst in by_curve.items():
        z = next(s for s in sids if all(s != x for x, _ in lst))
        w_of[cid] = state.region_at(bigon_of[z].id, betas[z])
    for cid, lst in by_curve.items():
        (s1, r1), (s2, r2) = lst
        h1, h2 = h_face[(s1, r1)], h_face[(s2, r2)]
        _require(state.region_at(h1, betas[s1]) == u_of[s2], closes)
        _require(state.region_at(h2, betas[s2]) == u_of[s1], closes)
        _require(state.region_at(h1, 1 - betas[s1]) == w_of[cid], closes)
        _require(state.region_at(h2, 1 - betas[s2]) == w_of[cid], closes)

    # --- strand rewrites: the vertex pair drops out, curve ids are kept ---

    dart_map: dict[Dart, Dart] = {}
    merged_of: dict[int, Optional[int]] = {}
    for cid in sorted(site_cids):
        curve = state.curves[cid]
        m = mid_of[cid]
        n = len(curve.vertices)
        _require({curve.vertices[m], curve.vertices[(m + 1) % n]} == pair,
                 shape)
        if n == 2:
            work.curves[cid] = Curve(cid, curve.label, curve.carriers, ())
            merged_of[cid] = None
            for e in (0, 1):
                for d in (1, -1):
                    work.trail.dead_darts.add(Dart(cid, e, d))
            continue
        removed = {m, (m + 1) % n}
        newpos: dict[int, int] = {}
        keep = []
        for k, v in enumerate(curve.vertices):
            if k in removed:
                continue
            newpos[k] = len(keep)
            keep.append(v)
        merged_of[cid] = newpos[(m - 1) % n]
        work.curves[cid] = Curve(cid, curve.label, curve.carriers,
                                 tuple(keep))
        fold = {(m - 1) % n, m, (m + 1) % n}
        for k in range(n):
            tgt = merged_of[cid] if k in fold else newpos[k]
            if tgt == k:
                continue
            for d in (1, -1):
                dart_map[Dart(cid, k, d)] = Dart(cid, tgt, d)

    def mapped(seq) -> tuple:
        return tuple(dart_map.get(d, d) for d in seq)

    def key_of(seq) -> tuple:
        return dart_cycle_key(min(seq))

    # --- face surgery, one sphere at a time ---

    g_new_of: dict[int, int] = {}
    h_new_of: dict[tuple, int] = {}
    for sid in sids:
        orbits = state.traced_orbits.get(sid, {})
        owner: dict[Dart, Dart] = {}
        for key, seq in orbits.items():
            for d in seq:
                owner[d] = key

        def okey(d: Dart) -> tuple:
            return dart_cycle_key(owner[d])

        def orb(d: Dart) -> tuple:
            return orbits[owner[d]]

        def tr_key(key: tuple) -> tuple:
            if key[0] == LOOP_CYCLE:
                return key
            seq = orbits[Dart(key[1], key[2], key[3])]
            if any(d.curve in site_cids for d in seq):
                return key_of(mapped(seq))
            return key

        ra, rb = roles[(sid, 0)], roles[(sid, 1)]
        cu_id, cv_id = strand[(sid, 0)], strand[(sid, 1)]
        d_u = (None if merged_of[cu_id] is None
               else Dart(cu_id, merged_of[cu_id], eff[(sid, 0)]))
        d_v = (None if merged_of[cv_id] is None
               else Dart(cv_id, merged_of[cv_id], eff[(sid, 1)]))
        fl1, fl2 = lobes[sid]

        # the two chord lobes close back into one face
        seq1 = orb(ra.in_up)
        n1 = len(seq1)
        i1 = seq1.index(ra.in_up)
        _require(seq1[(i1 + 1) % n1] == rb.out_dn, shape)
        new_comps: set = set()
        if fl1 != fl2:
            _require(d_u is not None and d_v is not None, shape)
            s_part = _cyc_slice(seq1, i1 + 2, i1)
            seq2 = orb(ra.out_up)
            i2 = seq2.index(ra.out_up)
            _require(rb.in_dn in seq2, shape)
            j2 = seq2.index(rb.in_dn)
            _require(_cyc_slice(seq2, j2 + 1, i2) == (), shape)
            n_part = _cyc_slice(seq2, i2 + 1, j2)
            new_comps.add(key_of(
                (d_u,) + mapped(n_part) + (d_v,) + mapped(s_part)))
            consumed = {okey(ra.in_up), okey(ra.out_up)}
        else:
            consumed = {okey(ra.in_up)}
            if d_u is None and d_v is None:
                _require(n1 == 2, shape)
                new_comps = {loop_cycle_key(cu_id, 0),
                             loop_cycle_key(cv_id, 0)}
            elif d_u is None:
                _require(rb.in_dn in seq1, shape)
                j = seq1.index(rb.in_dn)
                _require(_cyc_slice(seq1, j + 1, i1) == (), shape)
                new_comps = {
                    loop_cycle_key(cu_id, 0),
                    key_of((d_v,) + mapped(_cyc_slice(seq1, i1 + 2, j))),
                }
            elif d_v is None:
                _require(seq1[(i1 + 2) % n1] == ra.out_up, shape)
                new_comps = {
                    loop_cycle_key(cv_id, 0),
                    key_of((d_u,) + mapped(_cyc_slice(seq1, i1 + 3, i1))),
                }
            else:
                _require(rb.in_dn in seq1, shape)
                j = seq1.index(rb.in_dn)
                _require(seq1[(j + 1) % n1] == ra.out_up, shape)
                new_comps = {
                    key_of((d_u,) + mapped(_cyc_slice(seq1, j + 2, i1))),
                    key_of((d_v,) + mapped(_cyc_slice(seq1, i1 + 2, j))),
                }

        pool = set(state.faces[fl1].cycles) | set(state.faces[fl2].cycles)
        pool -= consumed
        gid = work.fresh()
        work.faces[gid] = Face(gid, sid, tuple(sorted(
            new_comps | {tr_key(k) for k in pool})))
        work.retire(fl1, work.faces)
        work.trail.face[fl1] = gid
        if fl2 != fl1:
            work.retire(fl2, work.faces)
            work.trail.face[fl2] = gid
        g_new_of[sid] = gid

        # far-face splices come back out
        seq_a = orb(rb.mid_dn)
        la = len(seq_a)
        ja = seq_a.index(rb.mid_dn)
        _require(seq_a[(ja + 1) % la] == ra.in_dn, shape)
        if d_u is None:
            _require(la == 2, shape)
            ha_comp = loop_cycle_key(cu_id, 1)
        else:
            _require(seq_a[(ja - 1) % la] == ra.out_dn, shape)
            ha_comp = key_of((reverse(d_u),)
                             + mapped(_cyc_slice(seq_a, ja + 2, ja - 1)))
        seq_b = orb(ra.mid_up)
        lb = len(seq_b)
        jb = seq_b.index(ra.mid_up)
        _require(seq_b[(jb + 1) % lb] == rb.in_up, shape)
        if d_v is None:
            _require(lb == 2, shape)
            hb_comp = loop_cycle_key(cv_id, 1)
        else:
            _require(seq_b[(jb - 1) % lb] == rb.out_up, shape)
            hb_comp = key_of((reverse(d_v),)
                             + mapped(_cyc_slice(seq_b, jb + 2, jb - 1)))
        for role, mid_d, comp in ((0, rb.mid_dn, ha_comp),
                                  (1, ra.mid_up, hb_comp)):
            hid = h_face[(sid, role)]
            hpool = set(state.faces[hid].cycles) - {okey(mid_d)}
            nid = work.fresh()
            work.faces[nid] = Face(nid, sid, tuple(sorted(
                {comp} | {tr_key(k) for k in hpool})))
            work.retire(hid, work.faces)
            work.trail.face[hid] = nid
            h_new_of[(sid, role)] = nid

        work.retire(bigon_of[sid].id, work.faces)

        touched = {fl1, fl2, h_face[(sid, 0)], h_face[(sid, 1)],
                   bigon_of[sid].id}
        for fid in state.sphere_faces.get(sid, ()):
            if fid in touched:
                continue
            f = state.faces[fid]
            cyc = tuple(sorted(tr_key(k) for k in f.cycles))
            if cyc != f.cycles:
                work.faces[fid] = Face(fid, sid, cyc)

        sph = state.spheres[sid]
        rot = {
            v: normalize_rotation(mapped(r))
            for v, r in sph.rotation.items()
            if v not in pair
        }
        work.spheres[sid] = Sphere(sid, sph.color, rot)

    # --- regions ---

    rm_of: dict[int, set] = {}
    ad_of: dict[int, set] = {}

    def slotmove(rid: int, rm, ad) -> None:
        rm_of.setdefault(rid, set()).update(rm)
        ad_of.setdefault(rid, set()).update(ad)

    for sid in sids:
        b = betas[sid]
        fl1, fl2 = lobes[sid]
        slotmove(u_of[sid], {(fl1, 1 - b), (fl2, 1 - b)},
                 {(g_new_of[sid], 1 - b)})
    for cid, lst in by_curve.items():
        (s1, r1), (s2, r2) = lst
        b1, b2 = betas[s1], betas[s2]
        h1, h2 = h_face[(s1, r1)], h_face[(s2, r2)]
        k1, k2 = h_new_of[(s1, r1)], h_new_of[(s2, r2)]
        slotmove(u_of[s2], {(h1, b1)}, {(k1, b1)})
        slotmove(u_of[s1], {(h2, b2)}, {(k2, b2)})
        z = next(s for s in sids if s not in (s1, s2))
        slotmove(w_of[cid],
                 {(h1, 1 - b1), (h2, 1 - b2), (bigon_of[z].id, betas[z])},
                 {(k1, 1 - b1), (k2, 1 - b2)})
    for rid in rm_of:
        work.reslot_region(rid, rm_of[rid], ad_of[rid])

    work.retire(region.id, work.regions)

    r_ids = {state.region_at(fl, betas[sid])
             for sid in sids for fl in lobes[sid]}
    r_colors = {state.regions[r].colors for r in r_ids}
    _require(len(r_colors) == 1, closes)
    _require(region.colors == next(iter(r_colors)) ^ sphere_colors, shape)
    r_drop = {(fl, betas[sid]) for sid in sids for fl in lobes[sid]}
    r_add = {(g_new_of[sid], betas[sid]) for sid in sids}
    if len(r_ids) == 1:
        work.reslot_region(next(iter(r_ids)), r_drop, r_add)
    else:
        rid = work.fresh()
        sides: set = set()
        for r in sorted(r_ids):
            sides |= set(work.regions[r].sides)
            work.retire(r, work.regions)
            work.trail.region[r] = rid
        work.regions[rid] = Region(rid, next(iter(r_colors)),
                                   frozenset((sides - r_drop) | r_add))
        if work.outside in r_ids:
            work.outside = rid

    for v in sorted(pair):
        work.retire(v, work.vertices)
    work.trail.dart.update(dart_map)
    return work


register_applier(MoveKind.TRIPLE_DEATH, _apply_triple_death)


def _strand_end_options(config: Configuration, sid: int, cid: int,
                        occ: Optional[int]) -> list:
    """(end, face) pairs for one occurrence of a strand on one carrier."""
    out = []
    if occ is None:
        for tag in (0, 1):
            out.append(((LOOP_CYCLE, cid, tag),
                        config.loop_face[(sid, cid, tag)]))
    else:
        for d in (1, -1):
            out.append(((DART_CYCLE, cid, occ, d),
                        config.dart_face[(sid, Dart(cid, occ, d))]))
    return out


def _triangle_sites(config: Configuration, spheres: tuple, cids: tuple):
    occ_lists = []
    for cid in cids:
        curve = config.curves[cid]
        occ_lists.append([None] if curve.is_loop
                         else list(range(len(curve.vertices))))
    for occs in itertools.product(*occ_lists):
        sig = []
        for cid, occ in zip(cids, occs):
            if occ is None:
                sig.append(1)
            else:
                v = config.curves[cid].vertices[occ]
                sig.append(-config.vertices[v].sign)
        end_opts = []
        for k in range(3):
            for sid in (spheres[k], spheres[(k + 1) % 3]):
                end_opts.append(
                    _strand_end_options(config, sid, cids[k], occs[k]))
        for picks in itertools.product(*end_opts):
            # leg k runs spheres[k] -> spheres[(k+1)%3]; picks[2k] is its
            # end on the first carrier, picks[2k+1] on the second
            chords = []
            gfs = []
            ok = True
            for j in range(3):
                p_end, p_face = picks[2 * j]
                q_end, q_face = picks[2 * ((j - 1) % 3) + 1]
                if p_face != q_face:
                    ok = False
                    break
                if (p_end[0] == DART_CYCLE and q_end[0] == DART_CYCLE
                        and p_end[3] * q_end[3] != -sig[j] * sig[j - 1]):
                    ok = False
                    break
                chords.append(Chord(spheres[j], p_end, q_end))
                gfs.append(p_face)
            if not ok or len(set(gfs)) != 3:
                continue
            for region in config.regions.values():
                if all(
                    sum(((g, s) in region.sides) for s in (0, 1)) == 1
                    for g in gfs
                ):
                    yield TripleBirthSite(region.id, *chords)


def triple_birth_sites(config: Configuration):
    """Chord triangles that close three new strand crossings, bare form
    only (no partitions or assignments; ambiguous splits refuse later).

    The chord on each sphere runs p-to-q from the strand shared with the
    next color's sphere to the strand shared with the previous color's,
    the same order translation produces."""
    by_color: dict = {}
    for sid in sorted(config.spheres):
        by_color.setdefault(config.spheres[sid].color, []).append(sid)
    for spheres in itertools.product(
        by_color.get(Color.RED, ()),
        by_color.get(Color.GREEN, ()),
        by_color.get(Color.BLUE, ()),
    ):
        legs = []
        for k in range(3):
            pairk = frozenset((spheres[k], spheres[(k + 1) % 3]))
            legs.append([
                c for c in sorted(config.curves)
                if frozenset(config.curves[c].carriers) == pairk
            ])
        if all(legs):
            for cids in itertools.product(*legs):
                yield from _triangle_sites(config, spheres, cids)


def triple_death_sites(config: Configuration):
    """Pocket regions bounded by three crossing bigons on three spheres;
    the deeper local checks are left to the applier."""
    for rid in sorted(config.regions):
        region = config.regions[rid]
        if len(region.sides) != 3:
            continue
        sids = set()
        ok = True
        for fid, _ in region.sides:
            f = config.faces.get(fid)
            if (f is None or len(f.cycles) != 1
                    or f.cycles[0][0] != DART_CYCLE):
                ok = False
                break
            head = f.cycles[0]
            seq = config.traced_orbits.get(f.sphere, {}).get(
                Dart(head[1], head[2], head[3]), ())
            if len(seq) != 2 or seq[0].curve == seq[1].curve:
                ok = False
                break
            sids.add(f.sphere)
        if ok and len(sids) == 3:
            yield TripleDeathSite(rid)


def seed_football_orbit() -> Configuration:
    """The smallest symmetric configuration with triple points: one
    sphere per color, joined pairwise by one double curve, with one
    crossing pair closed up.  Complexity (6, 0)."""
    config = empty_configuration()
    config = apply_move(config, MoveKind.APPEAR,
                        AppearSite(config.outside_region, Color.RED))
    by_color = {config.spheres[s].color: s for s in config.spheres}

    def bare_face(sid: int) -> int:
        return next(f for f in sorted(config.faces)
                    if config.faces[f].sphere == sid)

    config = apply_move(config, MoveKind.BIRTH, BirthSite(
        bare_face(by_color[Color.RED]),
        bare_face(by_color[Color.GREEN]),
        config.outside_region,
    ))
    last: Optional[MoveError] = None
    for site in triple_birth_sites(config):
        try:
            return apply_move(config, MoveKind.TRIPLE_BIRTH, site)
        except MoveError as e:
            last = e
    raise PreconditionFailed(f"no closing triangle on the seed: {last}")
