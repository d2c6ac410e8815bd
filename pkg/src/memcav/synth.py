"""Seeded synthetic data for every fitter.

Each generator takes an explicit ``seed`` (an int or a
:class:`numpy.random.Generator`) and records its truth parameters in the
returned metadata, so a fit can always be checked against what produced it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Union

import numpy as np
from scipy.special import voigt_profile

from .emitter import fwhm_to_sigma
from .modes import SPEED_OF_LIGHT, CavityGeometry, _closed_form
from .scans import CAVITY_LENGTH, LASER_FREQUENCY, ModePoint, ScanRecord

Seed = Union[int, np.random.Generator]


def _rng(seed: Seed):
    if seed is None:
        raise ValueError("an explicit seed or Generator is required")
    return np.random.default_rng(seed)


def _seed_meta(seed):
    return {"seed": str(seed) if isinstance(seed, (int, np.integer)) else "generator"}


def _fmt(v):
    return repr(float(v))


@dataclass
class ModePointSet:
    points: List[ModePoint]
    metadata: Dict[str, str] = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]


def mode_frequencies(g: CavityGeometry, offsets, band):
    """Closed-form resonances of every mode inside ``band`` at ``L_a + offset``."""
    nu_lo, nu_hi = band
    out = []
    for off in np.asarray(offsets, dtype=float):
        la = g.air_gap + off
        s = la + g.refractive_index * g.membrane_thickness
        fsr0 = SPEED_OF_LIGHT / (2 * s)
        for m in range(max(1, int(nu_lo / fsr0) - 2), int(nu_hi / fsr0) + 3):
            if g.membrane_thickness == 0:
                nu = SPEED_OF_LIGHT * m / (2 * la)
            else:
                nu = float(_closed_form(m, la, g.membrane_thickness, g.refractive_index))
            if nu_lo <= nu <= nu_hi:
                out.append((float(off), m, nu))
    return out


def synthesize_mode_points(g: CavityGeometry, offsets, band=(440e12, 500e12),
                           noise: float = 0.0, seed: Seed = 0) -> ModePointSet:
    """Fundamental-mode frequencies with optional Gaussian frequency noise (Hz)."""
    if noise < 0:
        raise ValueError("noise must be >= 0")
    rng = _rng(seed)
    rows = mode_frequencies(g, offsets, band)
    nus = np.array([r[2] for r in rows])
    if noise > 0:
        nus = nus + rng.normal(0.0, noise, nus.size)
    points = [ModePoint(r[0], float(nu)) for r, nu in zip(rows, nus)]
    meta = {"generator": "mode_points", **_seed_meta(seed),
            "truth_air_gap_m": _fmt(g.air_gap),
            "truth_membrane_thickness_m": _fmt(g.membrane_thickness),
            "truth_refractive_index": _fmt(g.refractive_index),
            "noise_hz": _fmt(noise)}
    return ModePointSet(points, meta)


def triple_lorentzian(x, center, width, spacing, amplitudes=(1.0, 0.4, 0.4), baseline=0.0):
    """Carrier at ``center`` and sidebands at ``center -+ spacing`` (axis units)."""
    a0, a1, a2 = amplitudes
    x = np.asarray(x, dtype=float)
    return (baseline
            + a0 / (1 + (2 * (x - center) / width) ** 2)
            + a1 / (1 + (2 * (x - center + spacing) / width) ** 2)
            + a2 / (1 + (2 * (x - center - spacing) / width) ** 2))


def synthesize_sideband_scan(linewidth: float = 1e9, sideband_offset: float = 6e9,
                             hz_per_unit: float = 20e9, n_points: int = 2001,
                             center: float = 0.0, span: float = None,
                             amplitudes=(1.0, 0.4, 0.4), baseline: float = 0.2,
                             noise: float = 0.0, seed: Seed = 0) -> ScanRecord:
    """Length scan through a carrier and its two phase-modulation sidebands.

    ``hz_per_unit`` converts the scan axis (e.g. piezo volts) to optical
    frequency; ``noise`` is the additive Gaussian noise sigma as a fraction of
    the carrier amplitude. Negative samples are clipped to zero, so keep the
    baseline several noise sigmas above zero to avoid biasing the fit.
    """
    if not (linewidth > 0 and sideband_offset > 0 and hz_per_unit > 0 and n_points >= 16):
        raise ValueError("invalid sideband-scan parameters")
    rng = _rng(seed)
    spacing = sideband_offset / hz_per_unit
    width = linewidth / hz_per_unit
    if span is None:
        span = 4 * spacing
    x = center + np.linspace(-span / 2, span / 2, n_points)
    y = triple_lorentzian(x, center, width, spacing, amplitudes, baseline)
    if noise > 0:
        y = np.clip(y + rng.normal(0.0, noise * amplitudes[0], n_points), 0.0, None)
    meta = {"generator": "sideband_scan", **_seed_meta(seed),
            "truth_linewidth_hz": _fmt(linewidth), "truth_hz_per_unit": _fmt(hz_per_unit),
            "noise_fraction": _fmt(noise)}
    return ScanRecord(CAVITY_LENGTH, x, y, sideband_offset=sideband_offset, metadata=meta)


@dataclass(frozen=True)
class TwoPhaseJitter:
    """Jitter FWHM ``low`` inside the sync-delay window, ``high`` elsewhere."""

    low: float
    high: float
    window: tuple = (0.25, 0.30)

    def __call__(self, phase):
        phase = np.asarray(phase, dtype=float)
        inside = (phase >= self.window[0]) & (phase < self.window[1])
        return np.where(inside, self.low, self.high)

    def describe(self):
        return f"two_phase(low={self.low!r},high={self.high!r},window={self.window!r})"


def jittered_line(detuning, linewidth, jitter_fwhm):
    """Time-averaged transmission of a unit-peak Lorentzian whose centre
    fluctuates with a Gaussian of FWHM ``jitter_fwhm``."""
    gamma = linewidth / 2
    sigma = fwhm_to_sigma(np.asarray(jitter_fwhm, dtype=float))
    return math.pi * gamma * voigt_profile(detuning, sigma, gamma)


def synthesize_vibration_sweeps(n_sweeps: int = 50,
                                jitter_fwhm: Union[float, Callable] = 22.2e9,
                                linewidth: float = 0.2e9, span: float = None,
                                n_points: int = 2000, laser_center: float = 471.3e12,
                                drift_sigma: float = 3e9, noise: float = 0.01,
                                baseline: float = 0.05, sweep_duration: float = 41.0,
                                period: float = 1.0, seed: Seed = 0) -> List[ScanRecord]:
    """Slow laser sweeps across a cavity line broadened by length jitter.

    Each sample is the transmission averaged over many fast vibration cycles
    (a Voigt profile). A sweep lasts ``sweep_duration`` seconds, so its
    samples cover many pulse-tube cycles; ``sync_offset`` is the per-sample
    delay since the last sync pulse. ``jitter_fwhm`` may be a callable of that
    delay. Every sweep also gets a slow centre drift of ``drift_sigma``.
    ``noise`` and ``baseline`` are relative to the sweep's noiseless peak.
    """
    if n_sweeps < 1 or n_points < 16:
        raise ValueError("invalid sweep parameters")
    rng = _rng(seed)
    jitter = jitter_fwhm if callable(jitter_fwhm) else (lambda phase: np.full_like(phase, jitter_fwhm))
    if span is None:
        ref = float(np.max(jitter(np.linspace(0, period, 1001, endpoint=False))))
        span = 6 * max(ref, linewidth)
    detuning = np.linspace(-span / 2, span / 2, n_points)
    t = np.linspace(0.0, sweep_duration, n_points, endpoint=False)
    desc = jitter_fwhm.describe() if hasattr(jitter_fwhm, "describe") else _fmt(jitter_fwhm)
    sweeps = []
    for k in range(n_sweeps):
        t0 = rng.uniform(0.0, period)
        drift = rng.normal(0.0, drift_sigma) if drift_sigma > 0 else 0.0
        sync = np.mod(t0 + t, period)
        clean = jittered_line(detuning - drift, linewidth, jitter(sync))
        peak = float(clean.max())
        y = clean + baseline * peak
        if noise > 0:
            y = np.clip(y + rng.normal(0.0, noise * peak, n_points), 0.0, None)
        meta = {"generator": "vibration_sweep", **_seed_meta(seed), "sweep_index": str(k),
                "truth_jitter_fwhm_hz": desc, "truth_linewidth_hz": _fmt(linewidth),
                "truth_drift_hz": _fmt(drift)}
        sweeps.append(ScanRecord(LASER_FREQUENCY, laser_center + detuning, y,
                                 sync_offset=sync, metadata=meta))
    return sweeps
