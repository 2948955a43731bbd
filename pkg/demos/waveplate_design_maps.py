#!/usr/bin/env python3
"""Design maps for waveplate protocols.

Scans the single-plate B9 protocol over its optical thickness, locating the
condition-number optimum and the minimax-loss optimum, and maps the
two-plate B144 protocol over physical thicknesses for a supplied
birefringence.  Writes b9_delta_scan.csv and b144_thickness_map.csv.
"""

import numpy as np

import tomoq
from tomoq import fileio


def main():
    deltas = np.linspace(0.01, 0.99, 197) * np.pi
    field = tomoq.thickness_scan("B9", deltas=deltas, bloch_grid=300)
    fileio.scan_to_csv(field, "b9_delta_scan.csv")
    k, lmax = field.values["K"], field.values["L_max"]
    i_k = int(np.argmin(np.where(np.isfinite(k), k, np.inf)))
    i_l = int(np.argmin(np.where(np.isfinite(lmax), lmax, np.inf)))
    print("B9: one plate, nine orientations, fixed analyzer")
    print(f"  best condition number K = {k[i_k]:.4f} at delta = {deltas[i_k] / np.pi:.3f} pi")
    print(f"  best worst-case loss   L = {lmax[i_l]:.4f} at delta = {deltas[i_l] / np.pi:.3f} pi")
    print(f"  {int(field.flags.sum())} singular grid points flagged "
          "(conditionality collapses near 0, pi/2 and pi)")
    for name, p in [("R4", tomoq.named_protocol("R4")), ("J4", tomoq.named_protocol("J4"))]:
        a = tomoq.analyze(tomoq.measurement_matrix(p))
        print(f"  reference {name}: K = {a.condition_number:.4f}")
    print("  wrote b9_delta_scan.csv")

    print("\nB144: two plates per arm, counter-rotating pairs, 12x12 orientations")
    dn, lam = 0.0090, 702.0
    field2 = tomoq.thickness_scan(
        "B144",
        thickness1=np.arange(1.100, 1.3501, 0.0125),
        thickness2=np.arange(0.300, 0.5501, 0.0125),
        birefringence=dn,
        wavelength=lam,
    )
    fileio.scan_to_csv(field2, "b144_thickness_map.csv")
    s = field2.summaries["K"]
    print(f"  birefringence {dn}, wavelength {lam} nm")
    print(f"  best K on the map: {s['min']:.2f} at thicknesses {np.round(s['argmin'], 4)} mm")
    print(f"  worst finite K on the map: {s['max']:.1f}")
    print("  wrote b144_thickness_map.csv (log10 of the K column makes the navigation map)")


if __name__ == "__main__":
    main()
