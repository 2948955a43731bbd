#!/usr/bin/env python3
"""Tour of protocol construction and quality figures.

Builds the polyhedron protocols, the named literature protocols and a
waveplate series, then prints for each one the row count, the rank of the
measurement matrix, the completeness class, the condition number and whether
the rows resolve the identity.
"""

import numpy as np

import tomoq

PROTOCOLS = [
    ("tetrahedron (R4)", tomoq.polyhedron_protocol("tetrahedron", 1)),
    ("cube", tomoq.polyhedron_protocol("cube", 1)),
    ("octahedron", tomoq.polyhedron_protocol("octahedron", 1)),
    ("dodecahedron", tomoq.polyhedron_protocol("dodecahedron", 1)),
    ("icosahedron", tomoq.polyhedron_protocol("icosahedron", 1)),
    ("fullerene", tomoq.polyhedron_protocol("fullerene", 1)),
    ("pentakis dodecahedron", tomoq.polyhedron_protocol("pentakis_dodecahedron", 1)),
    ("J4", tomoq.named_protocol("J4")),
    ("kosut8", tomoq.named_protocol("kosut8")),
    ("B9 at 0.356 pi", tomoq.b9(0.356 * np.pi)),
    ("B9 at pi/2 (degenerate)", tomoq.b9(np.pi / 2)),
    ("R16 = tetrahedron x2", tomoq.named_protocol("R16")),
    ("J16 = J4 x J4", tomoq.named_protocol("J16")),
    ("B144 (counter mode)", tomoq.b144(1.2, 0.5)),
]


def main():
    header = f"{'protocol':26s} {'m':>6s} {'dim':>4s} {'rank':>5s} {'class':>34s} {'K':>10s} {'unity':>6s}"
    print(header)
    print("-" * len(header))
    for name, p in PROTOCOLS:
        a = tomoq.analyze(tomoq.measurement_matrix(p))
        uc = tomoq.unity_check(p)
        k = a.condition_number if np.isfinite(a.condition_number) else np.inf
        print(f"{name:26s} {p.m:6d} {p.dim:4d} {a.rank:5d} {a.completeness:>34s} "
              f"{k:10.4f} {'yes' if uc.holds else 'no':>6s}")

    print()
    print("Condition numbers of tensor powers stay (sqrt 3)^l for every solid:")
    for solid in ("tetrahedron", "icosahedron"):
        ks = []
        for l in (1, 2, 3):
            a = tomoq.analyze(tomoq.measurement_matrix(tomoq.polyhedron_protocol(solid, l)))
            ks.append(f"l={l}: {a.condition_number:.12f}")
        print(f"  {solid:12s} " + "   ".join(ks))


if __name__ == "__main__":
    main()
