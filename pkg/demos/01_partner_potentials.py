"""Dump the potential ladder and its lowest eigenstates to CSV.

Every level of the hierarchy shares the spectrum of the plain box above
its own ground state. The script tabulates the potentials, the first few
wavefunctions per level, and the exact level energies, then (optionally)
renders one overview figure.
"""

import csv
from pathlib import Path

import numpy as np

import susyquench as sq

OUT = Path(__file__).resolve().parent / "out"
L = 4.0
LEVELS = (1, 2, 3, 4)
STATES = 3


def main():
    OUT.mkdir(exist_ok=True)
    geom = sq.BoxGeometry(L)
    basis = sq.HierarchyBasis(geom)
    x = np.linspace(-geom.half + 1e-3, geom.half - 1e-3, 401)

    with open(OUT / "potentials.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x"] + [f"V{a}" for a in LEVELS]
                   + [f"psi{a}_{m}" for a in LEVELS for m in range(1, STATES + 1)])
        cols = [sq.partner_potential(a, geom)(x) for a in LEVELS]
        cols += [basis.state(a, m)(x) for a in LEVELS for m in range(1, STATES + 1)]
        for i in range(x.size):
            w.writerow([f"{x[i]:.8f}"] + [f"{c[i]:.10g}" for c in cols])

    E1 = geom.energy_unit
    print(f"E1 = {E1:.10f}, revival time = {sq.revival_time(geom):.10f}")
    print("level  m   n   E/E1")
    for a in LEVELS:
        for m in range(1, STATES + 1):
            s = basis.state(a, m)
            print(f"{a:5d} {m:3d} {m + a - 1:3d} {s.energy / E1:7.1f}   {s.parity}")
    print(f"wrote {OUT / 'potentials.csv'}")

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    fig, axes = plt.subplots(1, len(LEVELS), figsize=(12, 3), sharey=True)
    for ax, a in zip(axes, LEVELS):
        V = sq.partner_potential(a, geom)(x)
        ax.plot(x, V / E1, "k-", lw=1)
        for m in range(1, STATES + 1):
            s = basis.state(a, m)
            ax.plot(x, s(x) * 8 + s.energy / E1, lw=0.8)
        ax.set_title(f"level {a}")
        ax.set_ylim(-5, 60)
        ax.set_xlabel("x")
    axes[0].set_ylabel("E / E1")
    fig.tight_layout()
    fig.savefig(OUT / "potentials.png", dpi=150)
    print(f"wrote {OUT / 'potentials.png'}")


if __name__ == "__main__":
    main()
