"""Document serialization for configurations, traces, and patterns.

Documents are plain JSON with sorted keys and id-sorted lists, so equal
structures serialize to identical bytes and `parse(serialize(x))` followed
by `serialize` reproduces the input document byte for byte.
"""

from __future__ import annotations

import json
from typing import Any

from .cells import (
    COLOR_BY_NAME,
    COLOR_NAMES,
    Color,
    Curve,
    Dart,
    Face,
    Region,
    Sphere,
    Vertex,
)
from .complex import Configuration


class DocumentError(ValueError):
    """Raised when a document cannot be decoded into a configuration."""


COLOR_LEGEND = [COLOR_NAMES[Color(i)] for i in range(3)]


# --- encoding ---


def _dart_doc(d: Dart) -> list:
    return [d.curve, d.edge, d.dir]


def _cycle_doc(cyc: tuple) -> list:
    return list(cyc)


def configuration_to_doc(config: Configuration) -> dict:
    return {
        "colors": list(COLOR_LEGEND),
        "vertices": [
            {"id": v.id, "sign": v.sign}
            for v in sorted(config.vertices.values(), key=lambda v: v.id)
        ],
        "curves": [
            {
                "id": c.id,
                "label": COLOR_NAMES[c.label],
                "carriers": list(c.carriers),
                "vertices": list(c.vertices),
            }
            for c in sorted(config.curves.values(), key=lambda c: c.id)
        ],
        "spheres": [
            {
                "id": s.id,
                "color": COLOR_NAMES[s.color],
                "rotation": {
                    str(v): [_dart_doc(d) for d in rot]
                    for v, rot in sorted(s.rotation.items())
                },
            }
            for s in sorted(config.spheres.values(), key=lambda s: s.id)
        ],
        "faces": [
            {
                "id": f.id,
                "sphere": f.sphere,
                "cycles": [_cycle_doc(cyc) for cyc in f.cycles],
            }
            for f in sorted(config.faces.values(), key=lambda f: f.id)
        ],
        "regions": [
            {
                "id": r.id,
                "colors": [COLOR_NAMES[c] for c in sorted(r.colors)],
                "sides": [list(slot) for slot in sorted(r.sides)],
            }
            for r in sorted(config.regions.values(), key=lambda r: r.id)
        ],
        "phi": {str(k): v for k, v in sorted(config.phi.items())},
        "outside_region": config.outside_region,
        "engine_built": config.engine_built,
    }


def serialize_configuration(config: Configuration) -> str:
    return json.dumps(configuration_to_doc(config), sort_keys=True, indent=2) + "\n"


# --- decoding ---


def _need(doc: dict, key: str, kind=None):
    if key not in doc:
        raise DocumentError(f"missing key {key!r}")
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise DocumentError(f"key {key!r} has type {type(value).__name__}")
    return value


def _color(name: Any) -> Color:
    try:
        return COLOR_BY_NAME[name]
    except (KeyError, TypeError):
        raise DocumentError(f"unknown color {name!r}") from None


def _dart(doc: Any) -> Dart:
    if (
        not isinstance(doc, (list, tuple))
        or len(doc) != 3
        or not all(isinstance(x, int) for x in doc)
        or doc[2] not in (1, -1)
    ):
        raise DocumentError(f"bad dart {doc!r}")
    return Dart(doc[0], doc[1], doc[2])


def _cycle(doc: Any) -> tuple:
    if not isinstance(doc, (list, tuple)) or not doc:
        raise DocumentError(f"bad cycle {doc!r}")
    if doc[0] == "d":
        if len(doc) != 4 or not all(isinstance(x, int) for x in doc[1:]):
            raise DocumentError(f"bad cycle {doc!r}")
    elif doc[0] == "l":
        if len(doc) != 3 or doc[2] not in (0, 1) or not isinstance(doc[1], int):
            raise DocumentError(f"bad cycle {doc!r}")
    else:
        raise DocumentError(f"bad cycle kind {doc!r}")
    return tuple(doc)


def configuration_from_doc(doc: dict) -> Configuration:
    if not isinstance(doc, dict):
        raise DocumentError("configuration document must be an object")
    legend = _need(doc, "colors", list)
    if legend != COLOR_LEGEND:
        raise DocumentError(f"color legend must be {COLOR_LEGEND}")
    vertices = {}
    for v in _need(doc, "vertices", list):
        vid = _need(v, "id", int)
        sign = _need(v, "sign", int)
        if sign not in (1, -1):
            raise DocumentError(f"vertex {vid}: sign {sign}")
        if vid in vertices:
            raise DocumentError(f"vertex {vid} repeated")
        vertices[vid] = Vertex(vid, sign)
    curves = {}
    for c in _need(doc, "curves", list):
        cid = _need(c, "id", int)
        carriers = _need(c, "carriers", list)
        if len(carriers) != 2 or not all(isinstance(s, int) for s in carriers):
            raise DocumentError(f"curve {cid}: carriers {carriers!r}")
        vs = _need(c, "vertices", list)
        if not all(isinstance(v, int) for v in vs):
            raise DocumentError(f"curve {cid}: vertices {vs!r}")
        if cid in curves:
            raise DocumentError(f"curve {cid} repeated")
        curves[cid] = Curve(cid, _color(_need(c, "label")), tuple(carriers), tuple(vs))
    spheres = {}
    for s in _need(doc, "spheres", list):
        sid = _need(s, "id", int)
        rotation = {}
        for key, rot in _need(s, "rotation", dict).items():
            try:
                v = int(key)
            except ValueError:
                raise DocumentError(f"sphere {sid}: rotation key {key!r}") from None
            if not isinstance(rot, list) or len(rot) != 4:
                raise DocumentError(f"sphere {sid}: rotation at {v} must list 4 darts")
            rotation[v] = tuple(_dart(d) for d in rot)
        if sid in spheres:
            raise DocumentError(f"sphere {sid} repeated")
        spheres[sid] = Sphere(sid, _color(_need(s, "color")), rotation)
    faces = {}
    for f in _need(doc, "faces", list):
        fid = _need(f, "id", int)
        if fid in faces:
            raise DocumentError(f"face {fid} repeated")
        faces[fid] = Face(
            fid,
            _need(f, "sphere", int),
            tuple(_cycle(cyc) for cyc in _need(f, "cycles", list)),
        )
    regions = {}
    for r in _need(doc, "regions", list):
        rid = _need(r, "id", int)
        sides = set()
        for slot in _need(r, "sides", list):
            if (
                not isinstance(slot, (list, tuple))
                or len(slot) != 2
                or not isinstance(slot[0], int)
                or slot[1] not in (0, 1)
            ):
                raise DocumentError(f"region {rid}: side {slot!r}")
            sides.add((slot[0], slot[1]))
        colors = frozenset(_color(name) for name in _need(r, "colors", list))
        if rid in regions:
            raise DocumentError(f"region {rid} repeated")
        regions[rid] = Region(rid, colors, frozenset(sides))
    phi = {}
    for key, value in _need(doc, "phi", dict).items():
        try:
            k = int(key)
        except ValueError:
            raise DocumentError(f"phi key {key!r}") from None
        if not isinstance(value, int):
            raise DocumentError(f"phi value {value!r}")
        phi[k] = value
    outside = doc.get("outside_region")
    if outside is not None and not isinstance(outside, int):
        raise DocumentError(f"outside_region {outside!r}")
    engine_built = doc.get("engine_built", False)
    if not isinstance(engine_built, bool):
        raise DocumentError(f"engine_built {engine_built!r}")
    return Configuration(
        vertices=vertices,
        curves=curves,
        spheres=spheres,
        faces=faces,
        regions=regions,
        phi=phi,
        outside_region=outside,
        engine_built=engine_built,
    )


def parse_configuration(text: str) -> Configuration:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentError(f"not JSON: {e}") from None
    return configuration_from_doc(doc)


def same_configuration(a: Configuration, b: Configuration) -> bool:
    """Structural equality: identical cells, ids, and maps."""
    return configuration_to_doc(a) == configuration_to_doc(b)
