"""Purcell enhancement and zero-phonon-line emission into the cavity mode.

Weak-coupling rate model: the cavity adds a channel of rate
``F_eff * beta0 * Gamma0`` on top of the unchanged free-space decay
``Gamma0 = 1 / tau0``, where ``beta0`` is the free-space ZPL branching ratio.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import roots_hermite

from .errors import ZeroSlope
from .modes import (SPEED_OF_LIGHT, CavityGeometry, beam_waist_and_mode_volume, frequency_slope,
                    fsr, resonance_approx)

FWHM_PER_SIGMA = 2 * math.sqrt(2 * math.log(2))


def fwhm_to_sigma(fwhm):
    return fwhm / FWHM_PER_SIGMA


def sigma_to_fwhm(sigma):
    return sigma * FWHM_PER_SIGMA


@dataclass(frozen=True)
class EmitterSpec:
    """Free-space emitter properties and placement errors.

    ``antinode_offset`` is the distance from the field antinode measured
    inside the membrane, so the field intensity factor is
    ``cos(2 pi n offset / lambda)**2``.
    """

    zpl_branching: float = 0.03
    free_lifetime: float = 12e-9
    dipole_mismatch: float = 0.0
    antinode_offset: float = 0.0

    def __post_init__(self):
        if not 0 < self.zpl_branching < 1:
            raise ValueError(f"zpl_branching must be in (0, 1), got {self.zpl_branching!r}")
        if not self.free_lifetime > 0:
            raise ValueError(f"free_lifetime must be positive, got {self.free_lifetime!r}")
        if not 0 <= self.dipole_mismatch <= math.pi / 2:
            raise ValueError(f"dipole_mismatch must be in [0, pi/2] rad, got {self.dipole_mismatch!r}")

    def coupling_factor(self, wavelength: Optional[float] = None,
                        refractive_index: float = 2.417) -> float:
        """Fraction of the ideal Purcell factor seen by this emitter."""
        f = math.cos(self.dipole_mismatch) ** 2
        if self.antinode_offset != 0:
            if wavelength is None:
                raise ValueError("wavelength is required for a non-zero antinode offset")
            if abs(self.antinode_offset) > wavelength / (4 * refractive_index) * (1 + 1e-12):
                raise ValueError("antinode offset exceeds a quarter wavelength in the medium")
            f *= math.cos(2 * math.pi * refractive_index * self.antinode_offset / wavelength) ** 2
        return f


@dataclass(frozen=True)
class VibrationSpec:
    """Gaussian cavity-length fluctuations with standard deviation ``displacement_sigma``."""

    displacement_sigma: float = 0.0

    def __post_init__(self):
        if not self.displacement_sigma >= 0:
            raise ValueError("displacement_sigma must be >= 0")

    @classmethod
    def from_fwhm(cls, fwhm: float) -> "VibrationSpec":
        return cls(fwhm_to_sigma(fwhm))

    @property
    def fwhm(self) -> float:
        return sigma_to_fwhm(self.displacement_sigma)


@dataclass(frozen=True)
class EmissionResult:
    purcell_factor: float
    lifetime: float
    p_zpl_cavity: float
    quadrature_nodes: Optional[int] = None


def quality_factor(finesse: float, g: CavityGeometry, nu: float) -> float:
    """``Q = nu / (fsr / finesse)``."""
    if not finesse > 0:
        raise ValueError("finesse must be positive")
    return finesse * nu / fsr(g)


def purcell_factor(Q: float, V: float, nu: float, refractive_index: float) -> float:
    """Ideal Purcell factor ``3/(4 pi^2) (c / n nu)^3 Q / V``."""
    if not (Q > 0 and V > 0 and nu > 0 and refractive_index > 0):
        raise ValueError("Q, V, nu and n must be positive")
    lam_medium = SPEED_OF_LIGHT / (refractive_index * nu)
    return 3 / (4 * math.pi**2) * lam_medium**3 * Q / V


def cavity_purcell_factor(finesse: float, g: CavityGeometry, nu: float) -> float:
    """Purcell factor of geometry ``g`` at ``nu`` for a measured finesse."""
    _, V = beam_waist_and_mode_volume(g, nu)
    return purcell_factor(quality_factor(finesse, g, nu), V, nu, g.refractive_index)


def emission_on_resonance(purcell: float, emitter: EmitterSpec,
                          wavelength: Optional[float] = None,
                          refractive_index: float = 2.417) -> EmissionResult:
    """Lifetime and cavity ZPL probability for a resonant emitter.

    ``wavelength`` (vacuum) is only needed when the emitter is off the antinode.
    """
    if not purcell >= 0:
        raise ValueError("Purcell factor must be >= 0")
    f_eff = purcell * emitter.coupling_factor(wavelength, refractive_index)
    x = f_eff * emitter.zpl_branching
    return EmissionResult(purcell_factor=f_eff, lifetime=emitter.free_lifetime / (1 + x),
                          p_zpl_cavity=x / (1 + x))


def length_linewidth(finesse: float, m: int, g: CavityGeometry) -> float:
    """Cavity linewidth expressed as an air-gap FWHM (m)."""
    if not finesse > 0:
        raise ValueError("finesse must be positive")
    slope = frequency_slope(m, g)
    if not slope > 0:
        raise ZeroSlope(f"mode {m} does not tune with length here; use frequency detuning")
    return fsr(g) / finesse / slope


def detuned_purcell(purcell_res: float, displacement, m: int, g: CavityGeometry,
                    finesse: float):
    """Lorentzian drop of the Purcell factor with air-gap displacement."""
    width = length_linewidth(finesse, m, g)
    dl = np.asarray(displacement, dtype=float)
    out = purcell_res / (1 + (2 * dl / width) ** 2)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=32)
def _hermite(n):
    x, w = roots_hermite(n)
    return x, w / math.sqrt(math.pi)


def vibration_averaged_emission(emitter: EmitterSpec, g: CavityGeometry, m: int, finesse: float,
                                vibration: VibrationSpec, nu: Optional[float] = None,
                                purcell_res: Optional[float] = None, rtol: float = 1e-6,
                                min_nodes: int = 64, max_nodes: int = 2**20) -> EmissionResult:
    """Emission averaged over Gaussian air-gap fluctuations.

    The ZPL probability and the total decay rate are averaged with
    Gauss-Hermite quadrature. The node count starts at ``min_nodes`` and is
    doubled until both averages change by less than ``rtol`` relative. The
    rule has to resolve a Lorentzian of width ``w`` inside a Gaussian of
    width ``sigma``, so the node count grows roughly as ``(sigma / w)**2``:
    about 1e4 nodes at ``sigma = 4 w`` and 1e6 at ``sigma = 30 w``. A
    RuntimeWarning is issued if ``max_nodes`` is reached. The reported
    lifetime is ``1 / <Gamma>``.

    ``nu`` defaults to the closed-form frequency of mode ``m``;
    ``purcell_res`` defaults to the ideal Purcell factor of ``g``.
    """
    if nu is None:
        nu = resonance_approx(m, g)
    if purcell_res is None:
        purcell_res = cavity_purcell_factor(finesse, g, nu)
    lam = SPEED_OF_LIGHT / nu
    f_res = purcell_res * emitter.coupling_factor(lam, g.refractive_index)
    beta = emitter.zpl_branching
    sigma = vibration.displacement_sigma
    width = length_linewidth(finesse, m, g)
    if sigma == 0:
        res = emission_on_resonance(purcell_res, emitter, lam, g.refractive_index)
        return EmissionResult(res.purcell_factor, res.lifetime, res.p_zpl_cavity, 1)

    def averages(n):
        x, w = _hermite(n)
        f = f_res / (1 + (2 * math.sqrt(2) * sigma * x / width) ** 2)
        return float(np.dot(w, beta * f / (1 + beta * f))), float(np.dot(w, f))

    n = min_nodes
    p, f_mean = averages(n)
    while True:
        if 2 * n > max_nodes:
            warnings.warn(f"vibration average not converged to rtol={rtol} with {n} nodes",
                          RuntimeWarning, stacklevel=2)
            break
        p2, f2 = averages(2 * n)
        n *= 2
        done = abs(p2 - p) <= rtol * abs(p2) and abs(f2 - f_mean) <= rtol * abs(f2)
        p, f_mean = p2, f2
        if done:
            break
    return EmissionResult(purcell_factor=f_mean, lifetime=emitter.free_lifetime / (1 + beta * f_mean),
                          p_zpl_cavity=p, quadrature_nodes=n)


def entanglement_rate_gain(zpl_gain: float, collection_gain: float) -> float:
    """Two-photon entangling success-rate gain ``(zpl_gain * collection_gain)**2``."""
    if zpl_gain < 0 or collection_gain < 0:
        raise ValueError("gains must be >= 0")
    return (zpl_gain * collection_gain) ** 2
