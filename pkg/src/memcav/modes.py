"""Longitudinal mode structure of a plano-concave cavity with a dielectric membrane.

The membrane (thickness ``d``, index ``n``) sits on the plane mirror and an air
gap ``L_a`` separates it from the curved fiber mirror. Two routes to the
resonance frequencies are provided:

* :func:`resonance_approx` -- the closed-form first-order expression

  .. math::

      \\nu_m \\approx \\frac{c}{2\\pi(L_a + n d)} \\left\\{ \\pi m - (-1)^m
      \\arcsin\\left[ \\frac{n-1}{n+1}
      \\sin\\left( \\frac{m\\pi (L_a - n d)}{L_a + n d} \\right) \\right] \\right\\}

* :func:`resonance_exact` -- bracketed roots of the lossless two-layer
  characteristic equation ``n tan(k L_a) + tan(n k d) = 0``.

All lengths are in metres and all frequencies in hertz. Frequency slopes are
reported as magnitudes, ``-d nu / d L_a``, since every branch moves down in
frequency as the air gap grows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import constants
from scipy.optimize import bisect, brentq, minimize_scalar

from .errors import InvalidGeometry, PeriodNotFound, UnstableCavity

SPEED_OF_LIGHT = constants.c  # 299 792 458 m/s, exact

# grid density and refinement tolerance for slope-extremum search
_MIN_POINTS_PER_PERIOD = 400
_GOLDEN_TOL = 1e-10


@dataclass(frozen=True)
class CavityGeometry:
    """Plano-concave cavity geometry.

    Parameters
    ----------
    air_gap : float
        Air layer thickness ``L_a`` between membrane and fiber mirror (m).
    membrane_thickness : float
        Membrane thickness ``d`` (m). Zero gives a bare cavity.
    refractive_index : float
        Membrane refractive index.
    radius_of_curvature : float
        Fiber mirror radius of curvature (m).
    aperture_radius : float, optional
        Usable radius of the curved mirror (m), only needed for clipping loss.
    """

    air_gap: float
    membrane_thickness: float = 0.0
    refractive_index: float = 2.417
    radius_of_curvature: float = 18.4e-6
    aperture_radius: Optional[float] = None

    def __post_init__(self):
        if not (self.air_gap > 0 and math.isfinite(self.air_gap)):
            raise InvalidGeometry(f"air gap must be positive, got {self.air_gap!r}")
        if not (self.membrane_thickness >= 0 and math.isfinite(self.membrane_thickness)):
            raise InvalidGeometry(
                f"membrane thickness must be >= 0, got {self.membrane_thickness!r}")
        if not self.refractive_index >= 1:
            raise InvalidGeometry(
                f"refractive index must be >= 1, got {self.refractive_index!r}")
        if not self.radius_of_curvature > 0:
            raise InvalidGeometry(
                f"radius of curvature must be positive, got {self.radius_of_curvature!r}")
        if self.aperture_radius is not None and not self.aperture_radius > 0:
            raise InvalidGeometry(
                f"aperture radius must be positive, got {self.aperture_radius!r}")

    @property
    def optical_length(self) -> float:
        """``L_a + n d``, the length that sets the free spectral range."""
        return self.air_gap + self.refractive_index * self.membrane_thickness

    @property
    def geometric_length(self) -> float:
        """``L_a + d / n``, the length seen by Gaussian-beam propagation."""
        return self.air_gap + self.membrane_thickness / self.refractive_index

    def with_air_gap(self, air_gap: float) -> "CavityGeometry":
        return replace(self, air_gap=air_gap)


@dataclass(frozen=True)
class ResonantMode:
    index: int
    frequency: float
    slope: float
    air_character: float


def _check_index(m):
    if int(m) != m or m < 1:
        raise ValueError(f"mode index must be a positive integer, got {m!r}")
    return int(m)


def _sign(m):
    return 1.0 if m % 2 == 0 else -1.0


def _closed_form(m, la, d, n):
    # vectorised over la
    s = la + n * d
    r = (n - 1.0) / (n + 1.0)
    u = m * np.pi * (la - n * d) / s
    return SPEED_OF_LIGHT / (2 * np.pi * s) * (np.pi * m - _sign(m) * np.arcsin(r * np.sin(u)))


def _closed_form_slope(m, la, d, n):
    """``-d nu / d L_a`` of the closed form."""
    s = la + n * d
    r = (n - 1.0) / (n + 1.0)
    u = m * np.pi * (la - n * d) / s
    du = 2.0 * m * np.pi * n * d / s**2
    nu = _closed_form(m, la, d, n)
    dasin = r * np.cos(u) * du / np.sqrt(1.0 - (r * np.sin(u)) ** 2)
    dnu = -nu / s - SPEED_OF_LIGHT / (2 * np.pi * s) * _sign(m) * dasin
    return -dnu


def resonance_approx(m: int, g: CavityGeometry) -> float:
    """Resonance frequency of mode ``m`` from the closed-form approximation."""
    m = _check_index(m)
    if g.membrane_thickness == 0:
        return SPEED_OF_LIGHT * m / (2 * g.air_gap)
    return float(_closed_form(m, g.air_gap, g.membrane_thickness, g.refractive_index))


def _characteristic(k, la, d, n):
    # n tan(k la) + tan(n k d) = 0 multiplied through by both cosines; the
    # product form has no poles and keeps the roots where both cosines vanish
    return n * np.sin(k * la) * np.cos(n * k * d) + np.cos(k * la) * np.sin(n * k * d)


def resonance_exact(g: CavityGeometry, band, rtol: float = 1e-12):
    """All exact lossless two-layer resonances with frequency inside ``band``.

    The characteristic function is sampled from ``k = 0`` upward with a phase
    step of 0.02 rad of round-trip optical phase, every sign change is refined
    by bisection, and roots are numbered consecutively from 1 so that the
    index matches ``nu = c m / 2 L_a`` in the bare-cavity limit.

    Returns
    -------
    list of (int, float)
        ``(m, nu)`` pairs ordered by frequency. Empty if no root is in band.
    """
    nu_lo, nu_hi = band
    if not 0 <= nu_lo < nu_hi:
        raise ValueError(f"invalid frequency band {band!r}")
    la, d, n = g.air_gap, g.membrane_thickness, g.refractive_index
    if d == 0:
        fsr0 = SPEED_OF_LIGHT / (2 * la)
        m_lo = max(1, math.ceil(nu_lo / fsr0))
        m_hi = math.floor(nu_hi / fsr0)
        return [(m, SPEED_OF_LIGHT * m / (2 * la)) for m in range(m_lo, m_hi + 1)]

    k_hi = 2 * np.pi * nu_hi / SPEED_OF_LIGHT
    step = 0.02 / g.optical_length
    k = (np.arange(int(k_hi / step) + 2) + 0.5) * step
    f = _characteristic(k, la, d, n)
    roots = []
    for i in np.nonzero(np.sign(f[:-1]) != np.sign(f[1:]))[0]:
        if f[i + 1] == 0:
            continue  # counted at the next interval
        if f[i] == 0:
            roots.append(k[i])
        else:
            roots.append(bisect(_characteristic, k[i], k[i + 1], args=(la, d, n),
                                xtol=1e-300, rtol=rtol, maxiter=200))
    out = []
    for m, kr in enumerate(roots, start=1):
        nu = SPEED_OF_LIGHT * kr / (2 * np.pi)
        if nu_lo <= nu <= nu_hi:
            out.append((m, float(nu)))
    return out


def fsr(g: CavityGeometry) -> float:
    """Free spectral range ``c / 2(L_a + n d)``."""
    return SPEED_OF_LIGHT / (2 * g.optical_length)


def frequency_slope(m: int, g: CavityGeometry) -> float:
    """``-d nu / d L_a`` of the closed form at ``(m, g)`` in Hz/m (analytic)."""
    m = _check_index(m)
    if g.membrane_thickness == 0:
        return SPEED_OF_LIGHT * m / (2 * g.air_gap**2)
    return float(_closed_form_slope(m, g.air_gap, g.membrane_thickness, g.refractive_index))


def dispersion_curves(g0: CavityGeometry, la_min: float, la_max: float, step: float,
                      m_min: int, m_max: int):
    """Closed-form resonances on a grid of air gaps.

    Returns
    -------
    la : ndarray, shape (N,)
    m : ndarray of int, shape (M,)
    nu : ndarray, shape (N, M)
        ``nu[i, j]`` is the frequency of mode ``m[j]`` at air gap ``la[i]``.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if not 0 < la_min <= la_max:
        raise ValueError(f"invalid air-gap range [{la_min!r}, {la_max!r}]")
    m_min, m_max = _check_index(m_min), _check_index(m_max)
    if m_max < m_min:
        raise ValueError("empty mode range")
    n_pts = int(math.floor((la_max - la_min) / step + 1e-9)) + 1
    la = la_min + step * np.arange(n_pts)
    # validates d and n once
    g0.with_air_gap(la_min)
    m = np.arange(m_min, m_max + 1)
    d, n = g0.membrane_thickness, g0.refractive_index
    if d == 0:
        nu = SPEED_OF_LIGHT * m[None, :] / (2 * la[:, None])
    else:
        nu = np.column_stack([_closed_form(mm, la, d, n) for mm in m])
    return la, m, nu


# -- air-like character -----------------------------------------------------

@dataclass(frozen=True)
class SlopeExtremum:
    air_gap: float
    frequency: float
    slope: float
    steep: bool


def _branch_period(m, g):
    # air-gap change that advances the arcsine argument by 2 pi at fixed m
    s = g.optical_length
    return s**2 / (m * g.refractive_index * g.membrane_thickness)


def slope_extrema(m: int, g: CavityGeometry, la_lo: float, la_hi: float):
    """Local maxima (steep) and minima (flat) of the slope along branch ``m``.

    The branch is sampled on a dyadic lattice of air gaps anchored at zero with
    at least 400 points per branch period, and every interior extremum is
    refined by golden-section search. The lattice spacing depends only on
    ``(m, n, d)``, never on the window or ``g.air_gap``, so the same extremum
    is found from any window containing it.
    """
    m = _check_index(m)
    d, n = g.membrane_thickness, g.refractive_index
    # the branch period s**2/(m n d) is bounded below by n d / m
    h = 2.0 ** math.floor(math.log2(n * d / m / _MIN_POINTS_PER_PERIOD))
    i_lo = max(1, math.floor(la_lo / h))
    i_hi = math.ceil(la_hi / h)
    x = h * np.arange(i_lo, i_hi + 1)
    s = _closed_form_slope(m, x, d, n)
    ds = np.diff(s)
    out = []
    for i in np.nonzero(np.sign(ds[:-1]) != np.sign(ds[1:]))[0] + 1:
        steep = bool(ds[i - 1] > 0)
        sgn = -1.0 if steep else 1.0
        res = minimize_scalar(lambda t: sgn * _closed_form_slope(m, t, d, n),
                              bracket=(x[i - 1], x[i], x[i + 1]), method="golden",
                              tol=_GOLDEN_TOL)
        xe = float(res.x)
        out.append(SlopeExtremum(xe, float(_closed_form(m, xe, d, n)),
                                 float(_closed_form_slope(m, xe, d, n)), steep))
    return out


def _character_from_extrema(extrema, la, nu):
    pos = [e.air_gap for e in extrema]
    i = np.searchsorted(pos, la, side="right") - 1
    if i < 0 or i + 1 >= len(extrema):
        return None
    a, b = extrema[i], extrema[i + 1]
    if a.steep == b.steep:
        return None
    steep, flat = (a, b) if a.steep else (b, a)
    c = (nu - flat.frequency) / (steep.frequency - flat.frequency)
    return min(1.0, max(0.0, float(c)))


def air_character(m: int, g: CavityGeometry) -> float:
    """Air-like character of mode ``m`` at geometry ``g``.

    1 at the steepest point of the branch, 0 at the flattest, linear in
    frequency in between, using the two adjacent slope extrema that bracket
    the current air gap. A bare cavity is fully air-like.
    """
    m = _check_index(m)
    if g.membrane_thickness == 0:
        return 1.0
    p = _branch_period(m, g)
    extrema = slope_extrema(m, g, g.air_gap - 1.5 * p, g.air_gap + 1.5 * p)
    c = _character_from_extrema(extrema, g.air_gap, resonance_approx(m, g))
    if c is None:
        raise PeriodNotFound(f"no steep/flat cycle of mode {m} around L_a={g.air_gap:.6g} m")
    return c


def air_character_curve(m: int, g: CavityGeometry, air_gaps) -> np.ndarray:
    """Vectorised :func:`air_character` over many air gaps on one branch.

    Points whose bracketing extrema fall outside ``air_gaps`` (extended by
    one and a half branch periods) are returned as NaN.
    """
    m = _check_index(m)
    la = np.asarray(air_gaps, dtype=float)
    if g.membrane_thickness == 0:
        return np.ones_like(la)
    p = _branch_period(m, g.with_air_gap(float(np.min(la))))
    extrema = slope_extrema(m, g, la.min() - 1.5 * p, la.max() + 1.5 * p)
    nu = _closed_form(m, la, g.membrane_thickness, g.refractive_index)
    out = np.empty_like(la)
    for j, (x, f) in enumerate(zip(la.ravel(), np.ravel(nu))):
        c = _character_from_extrema(extrema, x, f)
        out.flat[j] = np.nan if c is None else c
    return out


# -- Gaussian mode geometry -------------------------------------------------

def beam_waist_and_mode_volume(g: CavityGeometry, nu: float):
    """Waist radius on the plane mirror and mode volume.

    ``w0**2 = (lambda/pi) sqrt(L_g (R - L_g))`` with ``L_g = L_a + d/n`` and
    ``V = (pi/4) w0**2 (L_a + n d)``.

    Returns
    -------
    w0 : float
        Waist radius (m).
    volume : float
        Mode volume (m^3).
    """
    lg = g.geometric_length
    R = g.radius_of_curvature
    if not 0 < lg < R:
        raise UnstableCavity(f"L_g = {lg:.6g} m outside (0, R = {R:.6g} m)")
    lam = SPEED_OF_LIGHT / nu
    w0_sq = lam / np.pi * math.sqrt(lg * (R - lg))
    return math.sqrt(w0_sq), np.pi / 4 * w0_sq * g.optical_length


def mirror_spot_radius(g: CavityGeometry, nu: float) -> float:
    """Gaussian mode radius on the curved mirror, ``w0 sqrt(1 + (L_g/z_R)^2)``."""
    w0, _ = beam_waist_and_mode_volume(g, nu)
    lam = SPEED_OF_LIGHT / nu
    z_r = np.pi * w0**2 / lam
    return w0 * math.sqrt(1 + (g.geometric_length / z_r) ** 2)


# -- convenience ------------------------------------------------------------

def nearest_mode(g: CavityGeometry, nu: float) -> int:
    """Index of the closed-form mode closest in frequency to ``nu``."""
    m0 = max(1, round(nu / fsr(g)))
    candidates = range(max(1, m0 - 2), m0 + 3)
    return min(candidates, key=lambda m: abs(resonance_approx(m, g) - nu))


def tune_to_resonance(g: CavityGeometry, nu: float, m: Optional[int] = None):
    """Adjust the air gap so that mode ``m`` resonates exactly at ``nu``.

    ``m`` defaults to the mode currently nearest to ``nu``.

    Returns
    -------
    m : int
    geometry : CavityGeometry
    """
    if m is None:
        m = nearest_mode(g, nu)
    m = _check_index(m)

    def f(la):
        return resonance_approx(m, g.with_air_gap(la)) - nu

    lam = SPEED_OF_LIGHT / nu
    half = lam / 4
    for _ in range(12):
        lo, hi = max(g.air_gap - half, g.air_gap * 1e-3), g.air_gap + half
        if f(lo) * f(hi) <= 0:
            la = brentq(f, lo, hi, xtol=1e-18, rtol=1e-15)
            return m, g.with_air_gap(la)
        half *= 2
    raise ValueError(f"mode {m} cannot be tuned to {nu:.6g} Hz near L_a={g.air_gap:.6g} m")


def mode(m: int, g: CavityGeometry) -> ResonantMode:
    return ResonantMode(index=_check_index(m), frequency=resonance_approx(m, g),
                        slope=frequency_slope(m, g), air_character=air_character(m, g))
