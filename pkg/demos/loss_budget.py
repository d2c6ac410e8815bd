"""Finesse from the round-trip loss budget, then the membrane penalties."""
import numpy as np

from memcav import (CavityGeometry, MirrorSpec, SurfaceSpec, bare_finesse, calibrate_aperture,
                    clipping_loss, finesse_vs_character, interface_scattering_loss,
                    plane_mirror_penalty)

NU = 471.3e12
lam = 299_792_458 / NU

bare = bare_finesse(MirrorSpec(50, 70), MirrorSpec(0, 100))
print(f"bare cavity: {bare.total:.0f} ppm -> F = {bare.finesse:.0f}")

s = interface_scattering_loss(SurfaceSpec(0.35e-9), lam, 2.417)
print(f"0.35 nm rms interface: {s:.1f} ppm -> F = {bare.add('scattering', s).finesse:.0f}")

# air-like modes keep the bare finesse, diamond-like modes lose a factor ~3
pen = plane_mirror_penalty(bare, s)
for c, F in zip((0.0, 0.25, 0.5, 0.75, 1.0), finesse_vs_character(bare, s, pen, np.linspace(0, 1, 5))):
    print(f"  air character {c:.2f}: F = {F:.0f}")

# pick the aperture that halves the finesse between 45 and 55 half-waves
gap = lambda q: q * lam / 2 - 2.417 * 4e-6
a = calibrate_aperture(bare.total, CavityGeometry(gap(45), 4e-6), CavityGeometry(gap(55), 4e-6), NU)
print(f"aperture radius {a * 1e6:.2f} um")
for q in (40, 45, 50, 55, 58):
    g = CavityGeometry(gap(q), 4e-6, aperture_radius=a)
    clip = clipping_loss(g, NU)
    print(f"  {q} half-waves: clipping {clip:9.1f} ppm, F = {bare.add('clip', clip).finesse:.0f}")
