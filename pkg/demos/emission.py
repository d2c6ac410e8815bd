"""Purcell enhancement of the NV zero-phonon line and what vibrations cost."""
import math

import numpy as np

from memcav import (SPEED_OF_LIGHT, CavityGeometry, EmitterSpec, VibrationSpec,
                    beam_waist_and_mode_volume, cavity_purcell_factor, emission_on_resonance,
                    entanglement_rate_gain, length_linewidth, tune_to_resonance,
                    vibration_averaged_emission)

NU = 471.3e12
lam = SPEED_OF_LIGHT / NU
m, g = tune_to_resonance(CavityGeometry(4.6e-6, 4e-6), NU)
w0, V = beam_waist_and_mode_volume(g, NU)
print(f"mode {m}: waist {w0 * 1e6:.2f} um, volume {V / lam ** 3:.1f} lambda^3")

ideal = EmitterSpec()
off = EmitterSpec(dipole_mismatch=math.radians(30), antinode_offset=lam / (10 * 2.417))

print("finesse   F_P    p_zpl(ideal)  p_zpl(mismatched)  lifetime (ns)")
for F in (4000, 8000, 15000):
    fp = cavity_purcell_factor(F, g, NU)
    a = emission_on_resonance(fp, ideal, lam, 2.417)
    b = emission_on_resonance(fp, off, lam, 2.417)
    print(f"{F:7d} {fp:6.1f}   {a.p_zpl_cavity:10.3f}   {b.p_zpl_cavity:14.3f}   "
          f"{a.lifetime * 1e9:10.2f}")

F = 5000
print(f"\nlength linewidth at F={F}: {length_linewidth(F, m, g) * 1e12:.1f} pm")
for sigma in np.linspace(0, 1e-9, 6):
    r = vibration_averaged_emission(ideal, g, m, F, VibrationSpec(sigma), nu=NU)
    print(f"  sigma {sigma * 1e9:.1f} nm: p_zpl = {r.p_zpl_cavity:.4f} ({r.quadrature_nodes} nodes)")

print(f"\nentanglement rate gain for 13x ZPL and 3x collection: {entanglement_rate_gain(13, 3):g}")
