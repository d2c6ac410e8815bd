"""Hybrid-mode dispersion of a fiber cavity with a 4 um diamond membrane.

Sweeps the air gap, prints where modes turn air-like or diamond-like, and
compares the closed-form frequencies with the exact characteristic roots.
Pass an output path to save a plot (needs matplotlib).
"""
import sys

import numpy as np

from memcav import (CavityGeometry, air_character_curve, dispersion_curves, fsr,
                    resonance_approx, resonance_exact, tune_to_resonance)

NU = 471.3e12
g0 = CavityGeometry(4.6e-6, 4e-6, 2.417)

la, m, nu = dispersion_curves(g0, 4.6e-6, 6.6e-6, 5e-9, 30, 70)
inband = (nu > 440e12) & (nu < 500e12)
print(f"{np.count_nonzero(inband.any(axis=0))} modes cross 440-500 THz for L_a in 4.6-6.6 um")

m45, g45 = tune_to_resonance(g0, NU)
print(f"mode {m45} sits on the laser at L_a = {g45.air_gap * 1e6:.4f} um")

gaps = np.linspace(4.6e-6, 5.6e-6, 201)
char = air_character_curve(m45, g0, gaps)
print("air character along the branch (0 diamond-like, 1 air-like):")
for x, c in zip(gaps[::25], char[::25]):
    print(f"  L_a = {x * 1e6:.3f} um   {c:.2f}")

# closed form vs exact roots at the tuned geometry
for k, nu_exact in resonance_exact(g45, (440e12, 500e12)):
    err = (resonance_approx(k, g45) - nu_exact) / fsr(g45)
    print(f"  m={k:3d}  exact {nu_exact / 1e12:.4f} THz  closed form off by {100 * err:+.2f}% FSR")

if len(sys.argv) > 1:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(la * 1e6, np.where(inband, nu, np.nan) / 1e12, lw=0.8)
    ax.axhline(NU / 1e12, color="k", ls=":")
    ax.set_xlabel("air gap (um)")
    ax.set_ylabel("frequency (THz)")
    fig.tight_layout()
    fig.savefig(sys.argv[1])
