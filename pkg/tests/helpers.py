"""Hand-built configurations used as ground truth across the test suite.

Everything here is constructed cell by cell, independent of the move engine,
so engine output can be checked against these rather than against itself.
"""

from sweepout.cells import Color, Curve, Dart, Face, Region, Sphere, Vertex
from sweepout.complex import Configuration

R, G, B = Color.RED, Color.GREEN, Color.BLUE


def disjoint_orbit_config() -> Configuration:
    """One orbit of pairwise disjoint spheres: four regions, no curves."""
    spheres = {i: Sphere(id=i, color=Color(i)) for i in range(3)}
    faces = {3 + i: Face(id=3 + i, sphere=i, cycles=()) for i in range(3)}
    regions = {
        6: Region(id=6, colors=frozenset(), sides=frozenset({(3, 0), (4, 0), (5, 0)})),
        7: Region(id=7, colors=frozenset({R}), sides=frozenset({(3, 1)})),
        8: Region(id=8, colors=frozenset({G}), sides=frozenset({(4, 1)})),
        9: Region(id=9, colors=frozenset({B}), sides=frozenset({(5, 1)})),
    }
    phi = {0: 1, 1: 2, 2: 0, 6: 6, 7: 8, 8: 9, 9: 7}
    return Configuration(
        spheres=spheres, faces=faces, regions=regions, phi=phi, outside_region=6
    )


def chain_config() -> Configuration:
    """Three spheres overlapping in a cycle, one vertexless curve per pair.

    Each sphere carries two disjoint loops and splits into two caps and an
    annulus; seven regions.  The smallest symmetric configuration whose
    spheres actually meet.
    """
    spheres = {0: Sphere(0, R), 1: Sphere(1, G), 2: Sphere(2, B)}
    curves = {
        3: Curve(3, label=B, carriers=(0, 1)),
        4: Curve(4, label=R, carriers=(1, 2)),
        5: Curve(5, label=G, carriers=(0, 2)),
    }
    lf = lambda c, t: ("l", c, t)
    faces = {
        6: Face(6, sphere=0, cycles=(lf(3, 0),)),            # red cap inside green
        7: Face(7, sphere=0, cycles=(lf(3, 1), lf(5, 1))),   # red annulus
        8: Face(8, sphere=0, cycles=(lf(5, 0),)),            # red cap inside blue
        9: Face(9, sphere=1, cycles=(lf(3, 0),)),            # green cap inside red
        10: Face(10, sphere=1, cycles=(lf(3, 1), lf(4, 1))),
        11: Face(11, sphere=1, cycles=(lf(4, 0),)),          # green cap inside blue
        12: Face(12, sphere=2, cycles=(lf(4, 0),)),          # blue cap inside green
        13: Face(13, sphere=2, cycles=(lf(4, 1), lf(5, 1))),
        14: Face(14, sphere=2, cycles=(lf(5, 0),)),          # blue cap inside red
    }
    regions = {
        15: Region(15, frozenset(), frozenset({(7, 0), (10, 0), (13, 0)})),
        16: Region(16, frozenset({R}), frozenset({(7, 1), (9, 0), (14, 0)})),
        17: Region(17, frozenset({G}), frozenset({(6, 0), (10, 1), (12, 0)})),
        18: Region(18, frozenset({B}), frozenset({(8, 0), (11, 0), (13, 1)})),
        19: Region(19, frozenset({R, G}), frozenset({(6, 1), (9, 1)})),
        20: Region(20, frozenset({G, B}), frozenset({(11, 1), (12, 1)})),
        21: Region(21, frozenset({B, R}), frozenset({(8, 1), (14, 1)})),
    }
    phi = {
        0: 1, 1: 2, 2: 0,
        3: 4, 4: 5, 5: 3,
        15: 15, 16: 17, 17: 18, 18: 16, 19: 20, 20: 21, 21: 19,
    }
    return Configuration(
        spheres=spheres, curves=curves, faces=faces, regions=regions,
        phi=phi, outside_region=15,
    )


def crossing_sphere_config() -> Configuration:
    """Partial data: a red sphere whose diagram is two circles crossing twice.

    Only sphere 0 is fully described; good for face tracing, not validation.
    """
    spheres = {0: Sphere(0, R), 1: Sphere(1, G), 2: Sphere(2, B)}
    vertices = {10: Vertex(10, 1), 11: Vertex(11, -1)}
    curves = {
        3: Curve(3, label=G, carriers=(0, 2), vertices=(10, 11)),
        4: Curve(4, label=B, carriers=(0, 1), vertices=(10, 11)),
    }
    rot10 = (Dart(3, 0, 1), Dart(4, 0, 1), Dart(3, 1, -1), Dart(4, 1, -1))
    rot11 = (Dart(3, 0, -1), Dart(4, 1, 1), Dart(3, 1, 1), Dart(4, 0, -1))
    spheres[0] = Sphere(0, R, rotation={10: rot10, 11: rot11})
    return Configuration(spheres=spheres, vertices=vertices, curves=curves)


def two_loops_sphere_config() -> Configuration:
    """Partial data: a red sphere carrying two disjoint green circles."""
    spheres = {0: Sphere(0, R), 2: Sphere(2, B)}
    curves = {
        5: Curve(5, label=G, carriers=(0, 2)),
        6: Curve(6, label=G, carriers=(0, 2)),
    }
    return Configuration(spheres=spheres, curves=curves)


def relabel(config: Configuration, offset: int) -> Configuration:
    """Shift every cell id by a constant; a guaranteed isomorphic copy."""
    m = lambda x: x + offset
    vertices = {m(v.id): Vertex(m(v.id), v.sign) for v in config.vertices.values()}
    curves = {
        m(c.id): Curve(
            m(c.id), c.label,
            tuple(m(s) for s in c.carriers),
            tuple(m(v) for v in c.vertices),
        )
        for c in config.curves.values()
    }
    spheres = {
        m(s.id): Sphere(
            m(s.id), s.color,
            {
                m(v): tuple(Dart(m(d.curve), d.edge, d.dir) for d in rot)
                for v, rot in s.rotation.items()
            },
        )
        for s in config.spheres.values()
    }
    faces = {
        m(f.id): Face(
            m(f.id), m(f.sphere),
            tuple(sorted(
                (cyc[0], m(cyc[1])) + cyc[2:] for cyc in f.cycles
            )),
        )
        for f in config.faces.values()
    }
    regions = {
        m(r.id): Region(
            m(r.id), r.colors, frozenset((m(f), s) for f, s in r.sides)
        )
        for r in config.regions.values()
    }
    phi = {m(k): m(v) for k, v in config.phi.items()}
    outside = None if config.outside_region is None else m(config.outside_region)
    return Configuration(
        vertices=vertices, curves=curves, spheres=spheres, faces=faces,
        regions=regions, phi=phi, outside_region=outside,
        engine_built=config.engine_built,
    )
