"""Regenerate the benchmark instance files under src/trusstopo/data/.

The tables below are transcribed from the classic discrete sizing
benchmarks; each instance records its source in the ``provenance`` field.
Run from the repository root:  python tools/make_benchmarks.py
"""

import json
from pathlib import Path

from trusstopo.instance import StressLimit, instance_to_dict, make_instance

OUT = Path(__file__).resolve().parents[1] / "src" / "trusstopo" / "data"

# AISC catalogue of 64 sections, in^2
AISC_64 = [
    0.111, 0.141, 0.196, 0.250, 0.307, 0.391, 0.442, 0.563, 0.602, 0.766, 0.785,
    0.994, 1.000, 1.228, 1.266, 1.457, 1.563, 1.620, 1.800, 1.990, 2.130, 2.380,
    2.620, 2.630, 2.880, 2.930, 3.090, 3.130, 3.380, 3.470, 3.550, 3.630, 3.840,
    3.870, 3.880, 4.180, 4.220, 4.490, 4.590, 4.800, 4.970, 5.120, 5.740, 7.220,
    7.970, 8.530, 9.300, 10.850, 11.500, 13.500, 13.900, 14.200, 15.500, 16.000,
    16.900, 18.800, 19.900, 22.000, 22.900, 24.500, 26.500, 28.000, 30.000, 33.500,
]

# 42-section subset used for the discrete 10-bar problem, in^2
AISC_42 = [
    1.62, 1.80, 1.99, 2.13, 2.38, 2.62, 2.63, 2.88, 2.93, 3.09, 3.13, 3.38, 3.47,
    3.55, 3.63, 3.84, 3.87, 3.88, 4.18, 4.22, 4.49, 4.59, 4.80, 4.97, 5.12, 5.74,
    7.22, 7.97, 11.50, 13.50, 13.90, 14.20, 15.50, 16.00, 16.90, 18.80, 19.90,
    22.00, 22.90, 26.50, 30.00, 33.50,
]

IN2_TO_MM2 = 645.16


def ten_bar():
    # node numbering: supports 1, 4; loaded 2, 3; node 6 is the free top corner
    coords = {1: (0, 360), 2: (360, 0), 3: (720, 0), 4: (0, 0), 5: (360, 360), 6: (720, 360)}
    conn = [(1, 5), (5, 6), (4, 2), (2, 3), (5, 2), (6, 3), (1, 2), (4, 5), (5, 3), (2, 6)]
    return make_instance(
        name="ten_bar",
        dimension=2,
        coords=coords,
        supports={1: (True, True), 4: (True, True)},
        connectivity=conn,
        groups=[[k] for k in range(1, 11)],
        loads=[{2: (0, -100.0), 3: (0, -100.0)}],
        size_set=AISC_42,
        density=0.1,
        elastic_modulus=1.0e4,
        stress_limit=25.0,
        displacement_limit=2.0,
        provenance=(
            "Planar 10-bar cantilever, discrete case: 360 in bays, 100 kip loads, "
            "E=1e4 ksi, rho=0.1 lb/in^3, +/-25 ksi, +/-2 in, 42-section AISC list "
            "(Li, Huang & Liu 2009, HPSO discrete truss examples). Members keep the "
            "classic numbering; nodes renumbered so supports are 1,4 and loads 2,3."
        ),
        units={"length": "in", "force": "kip", "stress": "ksi", "mass": "lb"},
    )


def _twentyfive_geometry():
    coords = {
        1: (-37.5, 0, 200), 2: (37.5, 0, 200),
        3: (-37.5, 37.5, 100), 4: (37.5, 37.5, 100),
        5: (37.5, -37.5, 100), 6: (-37.5, -37.5, 100),
        7: (-100, 100, 0), 8: (100, 100, 0), 9: (100, -100, 0), 10: (-100, -100, 0),
    }
    conn = [
        (1, 2), (1, 4), (2, 3), (1, 5), (2, 6), (2, 4), (2, 5), (1, 3), (1, 6),
        (3, 6), (4, 5), (3, 4), (5, 6), (3, 10), (6, 7), (4, 9), (5, 8), (3, 8),
        (4, 7), (6, 9), (5, 10), (3, 7), (4, 8), (5, 9), (6, 10),
    ]
    groups = [[1], [2, 3, 4, 5], [6, 7, 8, 9], [10, 11], [12, 13],
              [14, 15, 16, 17], [18, 19, 20, 21], [22, 23, 24, 25]]
    supports = {k: (True, True, True) for k in (7, 8, 9, 10)}
    return coords, conn, groups, supports


def twentyfive_bar_case1():
    coords, conn, groups, supports = _twentyfive_geometry()
    sizes = [round(0.1 * k, 1) for k in range(1, 27)] + [2.8, 3.0, 3.2, 3.4]
    return make_instance(
        name="twentyfive_bar_case1",
        dimension=3,
        coords=coords,
        supports=supports,
        connectivity=conn,
        groups=groups,
        loads=[{1: (1.0, -10.0, -10.0), 2: (0, -10.0, -10.0), 3: (0.5, 0, 0), 6: (0.6, 0, 0)}],
        size_set=sizes,
        density=0.1,
        elastic_modulus=1.0e4,
        stress_limit=40.0,
        displacement_limit=0.35,
        provenance=(
            "Spatial 25-bar tower, single load case and 30-value set {0.1..2.6, 2.8..3.4} in^2 "
            "(Rajeev & Krishnamoorthy 1992; also Degertekin et al. 2019 case 1). "
            "E=1e4 ksi, rho=0.1 lb/in^3, +/-40 ksi, +/-0.35 in."
        ),
        units={"length": "in", "force": "kip", "stress": "ksi", "mass": "lb"},
    )


def twentyfive_bar_case2():
    coords, conn, groups, supports = _twentyfive_geometry()
    sizes = [0.01] + [round(0.4 * k, 1) for k in range(1, 16)]
    return make_instance(
        name="twentyfive_bar_case2",
        dimension=3,
        coords=coords,
        supports=supports,
        connectivity=conn,
        groups=groups,
        loads=[
            {1: (1.0, 10.0, -5.0), 2: (0, 10.0, -5.0), 3: (0.5, 0, 0), 6: (0.5, 0, 0)},
            {1: (0, 20.0, -5.0), 2: (0, -20.0, -5.0)},
        ],
        size_set=sizes,
        density=0.1,
        elastic_modulus=1.0e4,
        stress_limit=40.0,
        displacement_limit=0.35,
        provenance=(
            "Spatial 25-bar tower, two load cases and 16-value set {0.01, 0.4..6.0} in^2 "
            "(Lee et al. 2005; Li, Huang & Liu 2009). E=1e4 ksi, rho=0.1 lb/in^3, "
            "+/-40 ksi, +/-0.35 in."
        ),
        units={"length": "in", "force": "kip", "stress": "ksi", "mass": "lb"},
    )


def fiftytwo_bar():
    coords = {}
    for level in range(5):
        for k in range(4):
            coords[4 * level + k + 1] = (2000.0 * k, 3000.0 * level)
    conn = []
    groups = []
    for s in range(4):
        lo = [4 * s + k + 1 for k in range(4)]
        hi = [4 * (s + 1) + k + 1 for k in range(4)]
        vert = [(lo[k], hi[k]) for k in range(4)]
        diag = [(lo[0], hi[1]), (lo[1], hi[0]), (lo[1], hi[2]), (lo[2], hi[1]), (lo[2], hi[3]), (lo[3], hi[2])]
        horiz = [(hi[0], hi[1]), (hi[1], hi[2]), (hi[2], hi[3])]
        for part in (vert, diag, horiz):
            start = len(conn) + 1
            conn.extend(part)
            groups.append(list(range(start, len(conn) + 1)))
    sizes = [round(a * IN2_TO_MM2, 3) for a in AISC_64]
    return make_instance(
        name="fiftytwo_bar",
        dimension=2,
        coords=coords,
        supports={k: (True, True) for k in (1, 2, 3, 4)},
        connectivity=conn,
        groups=groups,
        loads=[{k: (1.0e5, 2.0e5) for k in (17, 18, 19, 20)}],
        size_set=sizes,
        density=7.86e-6,
        elastic_modulus=2.07e5,
        stress_limit=180.0,
        displacement_limit=None,
        provenance=(
            "Planar 52-bar tower (Wu & Chow 1995): 2 m bays, 3 m storeys, Px=100 kN, "
            "Py=200 kN at the four top nodes, E=207 GPa, rho=7860 kg/m^3, +/-180 MPa, "
            "64-section AISC list converted to mm^2."
        ),
        units={"length": "mm", "force": "N", "stress": "MPa", "mass": "kg"},
    )


def fifteen_bar():
    # symmetric Howe-type layout: bottom chord 1-5, top chord 6-8
    coords = {
        1: (0.0, 0.0), 2: (2540.0, 0.0), 3: (5080.0, 0.0), 4: (7620.0, 0.0), 5: (10160.0, 0.0),
        6: (2540.0, 2540.0), 7: (5080.0, 2540.0), 8: (7620.0, 2540.0),
    }
    conn = [
        (1, 2), (2, 3), (3, 4), (4, 5), (6, 7), (7, 8), (1, 6), (2, 6), (3, 7),
        (4, 8), (8, 5), (3, 6), (3, 8), (2, 7), (4, 7),
    ]
    sizes = [113.2, 143.2, 145.9, 174.9, 185.9, 235.9, 265.9, 297.1, 308.6,
             334.3, 338.2, 497.8, 507.6, 736.7, 791.2, 1063.7]
    p = 35.0e3
    return make_instance(
        name="fifteen_bar",
        dimension=2,
        coords=coords,
        supports={1: (True, True), 5: (False, True)},
        connectivity=conn,
        groups=[[k] for k in range(1, 16)],
        loads=[
            {6: (0, -p), 7: (0, -p), 8: (0, -p)},
            {7: (0, -p), 8: (0, -p)},
            {7: (0, -p), 6: (0, -p)},
        ],
        size_set=sizes,
        density=7.8e-6,
        elastic_modulus=2.0e5,
        stress_limit=120.0,
        displacement_limit=10.0,
        provenance=(
            "Planar 15-bar truss with three load cases (Zhang et al. 2005, as used by "
            "Li et al. 2009): 16-value set 113.2..1063.7 mm^2, E=200 GPa, rho=7800 kg/m^3, "
            "+/-120 MPa, +/-10 mm, P=35 kN. Node layout RECONSTRUCTED (symmetric, 2540 mm "
            "panels); the source geometry table was not available when transcribing."
        ),
        units={"length": "mm", "force": "N", "stress": "MPa", "mass": "kg"},
    )


def seventytwo_bar():
    coords = {}
    corners = [(0.0, 0.0), (120.0, 0.0), (120.0, 120.0), (0.0, 120.0)]
    for level in range(5):
        for k, (x, y) in enumerate(corners):
            coords[4 * level + k + 1] = (x, y, 60.0 * level)
    conn = []
    groups = []
    for s in range(4):
        lo = [4 * s + k + 1 for k in range(4)]
        hi = [4 * (s + 1) + k + 1 for k in range(4)]
        vert = [(lo[k], hi[k]) for k in range(4)]
        diag = []
        for k in range(4):
            n = (k + 1) % 4
            diag += [(lo[k], hi[n]), (hi[k], lo[n])]
        horiz = [(hi[k], hi[(k + 1) % 4]) for k in range(4)]
        plan = [(hi[0], hi[2]), (hi[1], hi[3])]
        for part in (vert, diag, horiz, plan):
            start = len(conn) + 1
            conn.extend(part)
            groups.append(list(range(start, len(conn) + 1)))
    return make_instance(
        name="seventytwo_bar",
        dimension=3,
        coords=coords,
        supports={k: (True, True, True) for k in (1, 2, 3, 4)},
        connectivity=conn,
        groups=groups,
        loads=[
            {17: (5.0, 5.0, -5.0)},
            {17: (0, 0, -5.0), 18: (0, 0, -5.0), 19: (0, 0, -5.0), 20: (0, 0, -5.0)},
        ],
        size_set=AISC_64,
        density=0.1,
        elastic_modulus=1.0e4,
        stress_limit=25.0,
        displacement_limit=[0.25, 0.25, None],
        provenance=(
            "Spatial 72-bar four-storey tower (Wu & Chow 1995 discrete case): 120 in square "
            "plan, 60 in storeys, groups ordered bottom storey first (verticals, face "
            "diagonals, horizontals, plan diagonals). E=1e4 ksi, rho=0.1 lb/in^3, "
            "+/-25 ksi, +/-0.25 in horizontal drift, 64-section AISC list."
        ),
        units={"length": "in", "force": "kip", "stress": "ksi", "mass": "lb"},
    )


BUILDERS = [ten_bar, fifteen_bar, twentyfive_bar_case1, twentyfive_bar_case2, fiftytwo_bar, seventytwo_bar]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for build in BUILDERS:
        inst = build()
        path = OUT / f"{inst.name}.json"
        path.write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n")
        print(f"{path.name}: {len(inst.nodes)} nodes, {len(inst.members)} members, m={inst.m}")


if __name__ == "__main__":
    main()
