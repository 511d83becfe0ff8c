"""Regenerate the shipped H2 tables in src/sfion/data.

h2_ground_curve.dat
    Morse curve for the H2 X 1Sigma_g+ state built from spectroscopic
    constants: R_e = 1.40112 bohr, D_e = 0.1744757 hartree (from the
    Born-Oppenheimer minimum -1.1744757 hartree), omega_e = 4401.21 cm^-1;
    E(R -> inf) = -1 hartree.
h2_vertical_ip.dat
    E(H2+, R) - E(H2, R) with the H2+ energy from the separated-equation
    solver in sfion.h2plus_exact (plus 1/R) and E(H2, R) from the Morse curve.

Usage: python3 tools/make_h2_tables.py
"""

import math
from pathlib import Path

import numpy as np

from sfion.h2plus_exact import electronic_energy

DATA = Path(__file__).resolve().parents[1] / "src" / "sfion" / "data"

R_E = 1.40112
D_E = 0.1744757
OMEGA_E = 4401.21 / 219474.6313632
MU_H2 = 918.076


def morse(r):
    a = OMEGA_E * math.sqrt(MU_H2 / (2.0 * D_E))
    return -1.0 - D_E + D_E * (1.0 - np.exp(-a * (np.asarray(r) - R_E))) ** 2


def main():
    r = np.round(np.arange(0.40, 6.0 + 1e-9, 0.02), 10)
    with open(DATA / "h2_ground_curve.dat", "w", encoding="utf-8") as fh:
        fh.write("# H2 ground-state Born-Oppenheimer curve, Morse form\n")
        fh.write(f"# R_e = {R_E} bohr, D_e = {D_E} hartree, omega_e = 4401.21 cm^-1, E(inf) = -1 hartree\n")
        fh.write("# generated by tools/make_h2_tables.py\n")
        fh.write("# R_bohr, V_hartree\n")
        for ri, vi in zip(r, morse(r)):
            fh.write(f"{ri:.2f}, {vi:.10f}\n")

    r = np.round(np.arange(0.80, 3.0 + 1e-9, 0.05), 10)
    with open(DATA / "h2_vertical_ip.dat", "w", encoding="utf-8") as fh:
        fh.write("# H2 vertical ionization potential, E(H2+) - E(H2)\n")
        fh.write("# E(H2+): separated two-center equations, 1s sigma_g, plus 1/R\n")
        fh.write("# E(H2): Morse curve of h2_ground_curve.dat\n")
        fh.write("# generated by tools/make_h2_tables.py\n")
        fh.write("# R_bohr, Ip_hartree\n")
        for ri in r:
            ip = electronic_energy(ri) + 1.0 / ri - float(morse(ri))
            fh.write(f"{ri:.2f}, {ip:.10f}\n")
            print(f"{ri:.2f} {ip:.8f}", flush=True)


if __name__ == "__main__":
    main()
