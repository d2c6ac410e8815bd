"""Analysis of synthetic scans: geometry, linewidth and vibration broadening."""
import numpy as np

from memcav import (CavityGeometry, bin_by_sync, finesse_from_linewidth, fit_geometry,
                    fit_linewidth_sidebanded, fit_vibration_broadening, fsr, tune_to_resonance,
                    with_displacement)
from memcav.synth import (TwoPhaseJitter, synthesize_mode_points, synthesize_sideband_scan,
                          synthesize_vibration_sweeps)

truth = CavityGeometry(14.3e-6, 4e-6)

# geometry from resonances seen while stepping the air gap
pts = synthesize_mode_points(truth, np.linspace(0, 1.5e-6, 31), noise=10e6, seed=1)
fit = fit_geometry(pts.points, CavityGeometry(14.35e-6, 3.95e-6))
b = fit.best
print(f"L_a = {b.geometry.air_gap * 1e6:.6f} um +/- {b.air_gap_err * 1e15:.0f} fm, "
      f"d = {b.geometry.membrane_thickness * 1e6:.6f} um +/- {b.thickness_err * 1e15:.0f} fm")
for alt in fit.alternatives:
    print(f"  index shift {alt.index_shift:+d}: rms {alt.rms / 1e6:.0f} MHz")

# linewidth from a sideband-calibrated scan
lw_true = fsr(truth) / 10_000
scan = synthesize_sideband_scan(lw_true, 6e9, noise=0.05, seed=2)
lw = fit_linewidth_sidebanded(scan)
F, dF = finesse_from_linewidth(lw, truth)
print(f"linewidth {lw.linewidth / 1e9:.3f} +/- {lw.uncertainty / 1e9:.3f} GHz, F = {F:.0f} +/- {dF:.0f}")

# vibration broadening, whole record and per pulse-tube phase
m, g = tune_to_resonance(CavityGeometry(4.6e-6, 4e-6), 471.3e12)
v = with_displacement(fit_vibration_broadening(synthesize_vibration_sweeps(50, 22.2e9, seed=3)), m, g)
print(f"broadening {v.fwhm_frequency / 1e9:.2f} GHz -> {v.displacement * 1e9:.3f} nm FWHM")

sweeps = synthesize_vibration_sweeps(50, TwoPhaseJitter(14e9, 50e9), seed=4)
for sb in bin_by_sync(sweeps, 0.1):
    if sb.fit:
        print(f"  delay {sb.center:.2f} s: {sb.fit.fwhm_frequency / 1e9:5.1f} GHz")
