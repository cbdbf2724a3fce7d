"""Configuration container, face tracing, validation, and isomorphism."""

import dataclasses

import pytest

from sweepout.cells import Color, Curve, Dart, Face, Region, Sphere
from sweepout.complex import (
    AmbiguousNesting,
    EulerMismatch,
    InconsistentColoring,
    UnknownCell,
    derive_faces,
    empty_configuration,
    find_isomorphism,
    invariant_key,
    isomorphic,
    orbit,
    region_adjacency,
    trace_sphere_orbits,
    validate,
)

from helpers import (
    chain_config,
    crossing_sphere_config,
    disjoint_orbit_config,
    relabel,
    two_loops_sphere_config,
)

R, G, B = Color.RED, Color.GREEN, Color.BLUE


# --- empty configuration ---


def test_empty_configuration_valid():
    config = empty_configuration()
    report = validate(config)
    assert report.ok, str(report)
    assert str(report) == "valid"
    assert config.outside_region == 0
    assert config.regions[0].colors == frozenset()


def test_empty_configuration_ids():
    config = empty_configuration()
    assert config.max_id() == 0
    assert config.fresh_ids(3) == [1, 2, 3]


# --- face tracing oracles ---


def test_sphere_without_curves_has_one_face():
    config = disjoint_orbit_config()
    bare = dataclasses.replace(config, faces={}, regions={}, phi={}, outside_region=None)
    assert derive_faces(bare, 0) == [()]


def test_two_crossings_give_four_bigons():
    config = crossing_sphere_config()
    orbits = trace_sphere_orbits(config, 0)
    assert len(orbits) == 4
    assert sorted(len(cycle) for cycle in orbits.values()) == [2, 2, 2, 2]
    groups = derive_faces(config, 0)
    assert len(groups) == 4
    assert all(len(g) == 1 for g in groups)


def test_two_disjoint_loops_give_three_faces():
    config = two_loops_sphere_config()
    groups = derive_faces(config, 0)
    assert len(groups) == 3
    assert sorted(len(g) for g in groups) == [1, 1, 2]
    # the annulus face must use one side of each circle
    annulus = next(g for g in groups if len(g) == 2)
    assert {cyc[1] for cyc in annulus} == {5, 6}


def test_three_loops_are_ambiguous():
    config = two_loops_sphere_config()
    curves = dict(config.curves)
    curves[7] = Curve(7, label=G, carriers=(0, 2))
    config = dataclasses.replace(config, curves=curves)
    with pytest.raises(AmbiguousNesting):
        derive_faces(config, 0)


def test_derive_faces_unknown_sphere():
    with pytest.raises(UnknownCell):
        derive_faces(empty_configuration(), 99)


def test_stored_grouping_must_close_up():
    config = chain_config()
    # split the red annulus into two faces: one face too many for a sphere
    faces = dict(config.faces)
    faces[7] = Face(7, sphere=0, cycles=(("l", 3, 1),))
    faces[22] = Face(22, sphere=0, cycles=(("l", 5, 1),))
    broken = dataclasses.replace(config, faces=faces)
    with pytest.raises(EulerMismatch):
        derive_faces(broken, 0)


# --- whole-configuration oracles ---


def test_disjoint_orbit_validates():
    report = validate(disjoint_orbit_config())
    assert report.ok, str(report)


def test_disjoint_orbit_region_colorings():
    config = disjoint_orbit_config()
    graph = region_adjacency(config)
    assert len(graph) == 4
    colorings = sorted(
        tuple(sorted(c.name for c in config.regions[r].colors)) for r in graph
    )
    assert colorings == [(), ("BLUE",), ("GREEN",), ("RED",)]
    # the outside region touches all three spheres
    assert len(graph[6]) == 3


def test_chain_validates():
    report = validate(chain_config())
    assert report.ok, str(report)


def test_chain_region_adjacency():
    config = chain_config()
    graph = region_adjacency(config)
    assert len(graph) == 7
    # outside touches the three annuli
    assert [f for f, _ in graph[15]] == [7, 10, 13]
    # each two-color region touches exactly two caps
    assert len(graph[19]) == 2


def test_region_adjacency_rejects_bad_coloring():
    config = chain_config()
    regions = dict(config.regions)
    regions[19] = Region(19, frozenset({R, B}), regions[19].sides)
    broken = dataclasses.replace(config, regions=regions)
    with pytest.raises(InconsistentColoring):
        region_adjacency(broken)


# --- validation catches tampering ---


def _codes(config):
    return validate(config).codes()


def test_validate_catches_swapped_region_symmetry():
    config = chain_config()
    phi = dict(config.phi)
    phi[16], phi[17] = phi[17], phi[16]
    assert "phi-order" in _codes(dataclasses.replace(config, phi=phi))


def test_validate_catches_wrong_label():
    config = chain_config()
    curves = dict(config.curves)
    curves[3] = Curve(3, label=G, carriers=(0, 1))
    codes = _codes(dataclasses.replace(config, curves=curves))
    assert "carrier-colors" in codes
    assert "phi-label" in codes


def test_validate_catches_missing_slot():
    config = chain_config()
    regions = dict(config.regions)
    regions[19] = Region(19, frozenset({R, G}), frozenset({(6, 1)}))
    codes = _codes(dataclasses.replace(config, regions=regions))
    assert "slot-missing" in codes


def test_validate_catches_same_region_on_both_sides():
    config = chain_config()
    regions = dict(config.regions)
    sides16 = set(regions[16].sides) | {(9, 1)}
    regions[16] = Region(16, frozenset({R}), frozenset(sides16))
    regions[19] = Region(19, frozenset({R, G}), frozenset({(6, 1)}))
    codes = _codes(dataclasses.replace(config, regions=regions))
    assert "face-sides" in codes


def test_validate_catches_loop_sides_in_one_face():
    config = chain_config()
    faces = dict(config.faces)
    faces[6] = Face(6, sphere=0, cycles=(("l", 3, 0), ("l", 3, 1)))
    faces[7] = Face(7, sphere=0, cycles=(("l", 5, 1),))
    codes = _codes(dataclasses.replace(config, faces=faces))
    assert "loop-sides" in codes


def test_validate_catches_unbalanced_signs():
    config = crossing_sphere_config()
    # not a full configuration, but the arithmetic stage still runs
    report = validate(config)
    assert "mod-six" in report.codes() or not report.ok


def test_validate_catches_outside_moved():
    config = chain_config()
    broken = dataclasses.replace(config, outside_region=16)
    codes = _codes(broken)
    assert "outside-coloring" in codes


# --- orbits ---


def test_orbit_of_cells():
    config = chain_config()
    assert orbit(config, 3) == (3, 4, 5)
    assert orbit(config, 0) == (0, 1, 2)
    assert orbit(config, 15) == (15,)
    assert orbit(config, 16) == (16, 17, 18)


def test_orbit_of_faces_is_derived():
    config = chain_config()
    assert orbit(config, 6) == (6, 11, 14)
    assert orbit(config, 7) == (7, 10, 13)
    assert orbit(config, 8) == (8, 9, 12)


def test_orbit_of_edge_and_dart():
    config = chain_config()
    assert orbit(config, ("edge", 3, 0)) == (
        ("edge", 3, 0), ("edge", 4, 0), ("edge", 5, 0)
    )
    d = Dart(3, 0, 1)
    assert orbit(config, d) == (d, Dart(4, 0, 1), Dart(5, 0, 1))


def test_orbit_unknown_cell():
    config = chain_config()
    with pytest.raises(UnknownCell):
        orbit(config, 999)
    with pytest.raises(UnknownCell):
        orbit(config, ("edge", 999, 0))


# --- isomorphism ---


def test_relabeled_chain_is_isomorphic():
    a = chain_config()
    b = relabel(a, 100)
    assert invariant_key(a) == invariant_key(b)
    m = find_isomorphism(a, b)
    assert m is not None
    assert all(m[x] == x + 100 for x in m)


def test_chain_not_isomorphic_to_disjoint():
    assert not isomorphic(chain_config(), disjoint_orbit_config())


def test_empty_isomorphic_to_itself():
    a = empty_configuration()
    b = relabel(a, 7)
    m = find_isomorphism(a, b)
    assert m == {0: 7}


def test_iso_rejects_recolored_copy():
    a = chain_config()
    b = relabel(a, 100)
    # flip one loop's side assignment in a region: no longer the same complex
    regions = dict(b.regions)
    r19, r20 = regions[119], regions[120]
    regions[119] = Region(119, r19.colors, r20.sides)
    regions[120] = Region(120, r20.colors, r19.sides)
    b = dataclasses.replace(b, regions=regions)
    assert find_isomorphism(a, b) is None
