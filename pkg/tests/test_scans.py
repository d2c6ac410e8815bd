import math
import warnings

import numpy as np
import pytest
from scipy.optimize import curve_fit

from memcav import (SPEED_OF_LIGHT, CavityGeometry, FitRejected, ModePoint, PeaksUnresolved,
                    ScanRecord, bin_by_sync, displacement_from_broadening, finesse_from_linewidth,
                    fit_geometry, fit_linewidth_sidebanded, fit_vibration_broadening,
                    frequency_slope, fsr, with_displacement)
from memcav.errors import FitError
from memcav.scans import LinewidthFit, sweep_center
from memcav.synth import (TwoPhaseJitter, synthesize_mode_points, synthesize_sideband_scan,
                          synthesize_vibration_sweeps)

TRUTH = CavityGeometry(14.3e-6, 4e-6)
OFFSETS = np.linspace(0.0, 1.5e-6, 31)


# -- geometry ---------------------------------------------------------------

def test_scan_record_invariants():
    with pytest.raises(ValueError):
        ScanRecord("cavity_length", [0, 1, 1], [1, 1, 1])
    with pytest.raises(ValueError):
        ScanRecord("cavity_length", [0, 1, 2], [1, -1, 1])
    with pytest.raises(ValueError):
        ScanRecord("voltage", [0, 1, 2], [1, 1, 1])
    with pytest.raises(ValueError):
        ScanRecord("cavity_length", [], [])
    with pytest.raises(ValueError):
        ModePoint(0.0, -1.0)
    r = ScanRecord("laser_frequency", [3, 2, 1], [1, 2, 3], sync_offset=0.5)
    np.testing.assert_array_equal(r.sync_offset, [0.5, 0.5, 0.5])


def test_geometry_noiseless_round_trip():
    pts = synthesize_mode_points(TRUTH, OFFSETS, seed=0)
    fit = fit_geometry(pts.points, CavityGeometry(14.32e-6, 3.99e-6))
    assert fit.geometry.air_gap == pytest.approx(14.3e-6, rel=1e-9)
    assert fit.geometry.membrane_thickness == pytest.approx(4e-6, rel=1e-9)
    assert not fit.underdetermined
    assert len(fit.alternatives) == 2
    assert {a.index_shift for a in fit.alternatives} == {-1, 1}
    assert all(a.rms > 1e3 * max(fit.best.rms, 1.0) for a in fit.alternatives)


def test_geometry_grid_search_from_rough_start():
    pts = synthesize_mode_points(TRUTH, OFFSETS, seed=0)
    fit = fit_geometry(pts.points, CavityGeometry(14.4e-6, 3.9e-6), search=(0.3e-6, 0.2e-6))
    assert fit.geometry.air_gap == pytest.approx(14.3e-6, rel=1e-9)
    assert fit.geometry.membrane_thickness == pytest.approx(4e-6, rel=1e-9)


def test_geometry_bare_cavity():
    g = CavityGeometry(12e-6, 0.0)
    pts = synthesize_mode_points(g, np.linspace(0, 0.5e-6, 6), seed=0)
    fit = fit_geometry(pts.points, CavityGeometry(12.05e-6, 0.0))
    assert fit.geometry.membrane_thickness == 0.0
    assert fit.geometry.air_gap == pytest.approx(12e-6, rel=1e-12)
    for p, m in zip(pts.points, fit.best.mode_indices):
        assert p.frequency == pytest.approx(SPEED_OF_LIGHT * m / (2 * (12e-6 + p.length_offset)),
                                            rel=1e-12)


def test_geometry_underdetermined_flag():
    pts = synthesize_mode_points(TRUTH, np.linspace(0, 0.05e-6, 6), seed=0)
    with pytest.warns(RuntimeWarning):
        fit = fit_geometry(pts.points, CavityGeometry(14.31e-6, 4e-6))
    assert fit.underdetermined


def test_geometry_needs_points():
    with pytest.raises(ValueError):
        fit_geometry([ModePoint(0, 470e12)] * 3, TRUTH)


def test_geometry_noise_coverage():
    inside = 0
    for seed in range(30):
        pts = synthesize_mode_points(TRUTH, OFFSETS, noise=10e6, seed=seed)
        b = fit_geometry(pts.points, CavityGeometry(14.31e-6, 4.01e-6)).best
        ok = (abs(b.geometry.air_gap - 14.3e-6) <= 3 * b.air_gap_err and
              abs(b.geometry.membrane_thickness - 4e-6) <= 3 * b.thickness_err)
        inside += ok
    assert inside >= 27


# -- linewidth --------------------------------------------------------------

def test_linewidth_exact_recovery():
    scan = synthesize_sideband_scan(1e9, 6e9, seed=0)
    fit = fit_linewidth_sidebanded(scan)
    assert fit.linewidth == pytest.approx(1e9, rel=1e-6)
    assert fit.calibration_scale == pytest.approx(20e9, rel=1e-6)


def test_linewidth_axis_reversal_and_affine_invariance():
    scan = synthesize_sideband_scan(1e9, 6e9, noise=0.05, seed=3)
    base = fit_linewidth_sidebanded(scan)
    rev = ScanRecord(scan.axis, scan.axis_values[::-1], scan.signal[::-1], scan.sideband_offset)
    assert fit_linewidth_sidebanded(rev).linewidth == pytest.approx(base.linewidth, rel=1e-9)
    aff = ScanRecord(scan.axis, 37.5 * scan.axis_values - 12.25, scan.signal, scan.sideband_offset)
    fa = fit_linewidth_sidebanded(aff)
    assert fa.linewidth == pytest.approx(base.linewidth, rel=1e-9)
    assert fa.calibration_scale == pytest.approx(base.calibration_scale / 37.5, rel=1e-9)


def test_linewidth_needs_sideband_offset():
    scan = synthesize_sideband_scan(1e9, 6e9, seed=0)
    bare = ScanRecord(scan.axis, scan.axis_values, scan.signal)
    with pytest.raises(ValueError):
        fit_linewidth_sidebanded(bare)


def test_linewidth_unresolved_or_rejected():
    rng = np.random.default_rng(0)
    noise = ScanRecord("cavity_length", np.linspace(0, 1, 500), rng.uniform(0, 1, 500), 6e9)
    with pytest.raises(FitError):
        fit_linewidth_sidebanded(noise)
    one = ScanRecord("cavity_length", np.linspace(-1, 1, 500),
                     1 / (1 + (np.linspace(-1, 1, 500) / 0.05) ** 2), 6e9)
    with pytest.raises((PeaksUnresolved, FitRejected)):
        fit_linewidth_sidebanded(one)


def test_linewidth_median_and_coverage():
    fits = [fit_linewidth_sidebanded(synthesize_sideband_scan(1e9, 6e9, noise=0.05, seed=s))
            for s in range(60)]
    lw = np.array([f.linewidth for f in fits])
    err = np.array([f.uncertainty for f in fits])
    assert np.median(lw) == pytest.approx(1e9, rel=0.02)
    cover = np.mean(np.abs(lw - 1e9) <= err)
    assert 0.6 <= cover <= 0.999


def test_finesse_from_linewidth():
    g = CavityGeometry(14.3e-6, 4e-6)
    fit = LinewidthFit(fsr(g) / 10_000, fsr(g) / 1e6, 1.0, 1.0, (0, 0, 0), (0, 0, 0))
    F, err = finesse_from_linewidth(fit, g)
    assert F == pytest.approx(10_000, rel=1e-14)
    assert err == pytest.approx(100, rel=1e-12)
    fit2 = LinewidthFit(2 * fit.linewidth, 0, 1.0, 1.0, (0, 0, 0), (0, 0, 0))
    assert finesse_from_linewidth(fit2, g)[0] == pytest.approx(5_000, rel=1e-14)


def test_bare_cavity_linewidth_matches_loss_budget():
    g = CavityGeometry(12e-6, 0.0)
    target = 2 * math.pi / 220e-6
    lw = fsr(g) / target
    hz_per_unit = 20e9
    fit = fit_linewidth_sidebanded(synthesize_sideband_scan(lw, 6e9, hz_per_unit, seed=0))
    F, err = finesse_from_linewidth(fit, g)
    assert F == pytest.approx(target, rel=1e-6)


# -- vibration --------------------------------------------------------------

def test_sweep_center_methods():
    x = np.linspace(-10, 10, 2001)
    y = np.exp(-(x - 1.5) ** 2)
    assert sweep_center(x, y) == pytest.approx(1.5, abs=1e-6)
    assert sweep_center(x, y, method="max") == pytest.approx(1.5, abs=1e-2)
    with pytest.raises(ValueError):
        sweep_center(x, y, method="median")


def test_broadening_recovers_jitter():
    sweeps = synthesize_vibration_sweeps(50, 22.2e9, seed=1)
    fit = fit_vibration_broadening(sweeps)
    assert fit.fwhm_frequency == pytest.approx(22.2e9, rel=0.03)
    assert fit.n_used == 50 and fit.n_excluded == 0


def test_broadening_doubling_and_permutation():
    a = fit_vibration_broadening(synthesize_vibration_sweeps(30, 15e9, seed=2))
    b = fit_vibration_broadening(synthesize_vibration_sweeps(30, 30e9, seed=2))
    assert b.fwhm_frequency / a.fwhm_frequency == pytest.approx(2.0, rel=0.02)
    sweeps = synthesize_vibration_sweeps(30, 22.2e9, seed=4)
    order = np.random.default_rng(9).permutation(len(sweeps))
    p = fit_vibration_broadening([sweeps[i] for i in order])
    q = fit_vibration_broadening(sweeps)
    assert p.fwhm_frequency == pytest.approx(q.fwhm_frequency, rel=0.01)


def test_broadening_zero_jitter_floor():
    lw = 0.2e9
    fit = fit_vibration_broadening(synthesize_vibration_sweeps(20, 0.0, lw, drift_sigma=0,
                                                               noise=0.002, seed=5))
    # oracle: Gaussian + baseline fitted to the clean Lorentzian on the same span
    x = np.linspace(-0.6e9, 0.6e9, 2000)
    y = 1 / (1 + (2 * x / lw) ** 2)

    def gauss(x, a, mu, s, b):
        return a * np.exp(-0.5 * ((x - mu) / s) ** 2) + b

    popt, _ = curve_fit(gauss, x, y, p0=[1, 0, lw / 2, 0])
    oracle = 2 * math.sqrt(2 * math.log(2)) * abs(popt[2])
    assert fit.fwhm_frequency == pytest.approx(oracle, rel=0.05)


def test_broadening_needs_two_sweeps():
    sweeps = synthesize_vibration_sweeps(1, seed=0)
    with pytest.raises(ValueError):
        fit_vibration_broadening(sweeps)


def test_broadening_excludes_flat_sweeps():
    sweeps = synthesize_vibration_sweeps(5, seed=0)
    rng = np.random.default_rng(0)
    flat = ScanRecord("laser_frequency", sweeps[0].axis_values, 1 + 0.01 * rng.standard_normal(2000))
    with pytest.warns(RuntimeWarning):
        fit = fit_vibration_broadening(sweeps + [flat])
    assert fit.n_excluded == 1 and fit.n_used == 5
    with pytest.raises(FitError):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fit_vibration_broadening([flat, flat])


def test_displacement_conversion_linear():
    m, g = 50, CavityGeometry(6.27e-6, 4e-6)
    s = frequency_slope(m, g)
    assert displacement_from_broadening(22.2e9, m, g) == pytest.approx(22.2e9 / s, rel=1e-15)
    d14 = displacement_from_broadening(14e9, m, g)
    d50 = displacement_from_broadening(50e9, m, g)
    assert d50 / d14 == pytest.approx(50 / 14, rel=1e-14)
    fit = with_displacement(fit_vibration_broadening(synthesize_vibration_sweeps(5, seed=0)), m, g)
    assert fit.displacement == pytest.approx(fit.fwhm_frequency / s, rel=1e-15)


def test_bins_single_bin_reproduces_whole_fit():
    sweeps = synthesize_vibration_sweeps(10, seed=6)
    whole = fit_vibration_broadening(sweeps)
    bins = bin_by_sync(sweeps, bin_width=1.0, period=1.0)
    assert len(bins) == 1
    assert bins[0].fit.fwhm_frequency == whole.fwhm_frequency


def test_bins_two_phase_minimum():
    sweeps = synthesize_vibration_sweeps(50, TwoPhaseJitter(14e9, 50e9), seed=7)
    bins = bin_by_sync(sweeps, bin_width=0.05)
    fw = [b.fit.fwhm_frequency if b.fit else np.inf for b in bins]
    best = bins[int(np.argmin(fw))]
    assert 0.25 <= best.center < 0.30
    others = [f for b, f in zip(bins, fw) if b is not best]
    assert min(fw) < 0.5 * np.median(others)


def test_bins_sparse_and_missing_sync():
    sweeps = synthesize_vibration_sweeps(3, seed=8)
    bins = bin_by_sync(sweeps, bin_width=0.01, min_samples=10**6)
    assert all(b.fit is None for b in bins)
    no_sync = [ScanRecord(s.axis, s.axis_values, s.signal) for s in sweeps]
    with pytest.raises(ValueError):
        bin_by_sync(no_sync, 0.05)
    with pytest.raises(ValueError):
        bin_by_sync(sweeps, 0.0)
