"""Fits to measured (or synthetic) cavity scans.

* mode-point sets -> membrane thickness and air gap (:func:`fit_geometry`)
* sideband-calibrated length scans -> cavity linewidth (:func:`fit_linewidth_sidebanded`)
* slow laser sweeps under vibration -> Gaussian broadening (:func:`fit_vibration_broadening`)

All nonlinear fits go through :func:`scipy.optimize.least_squares`
(Levenberg-Marquardt) with analytic Jacobians.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import find_peaks

from .emitter import FWHM_PER_SIGMA
from .errors import FitError, FitRejected, PeaksUnresolved, ZeroSlope
from .modes import SPEED_OF_LIGHT, CavityGeometry, _closed_form, _closed_form_slope, frequency_slope, fsr

MAX_ITERATIONS = 200
STEP_TOL = 1e-12

CAVITY_LENGTH = "cavity_length"
LASER_FREQUENCY = "laser_frequency"


@dataclass(frozen=True)
class ModePoint:
    length_offset: float
    frequency: float

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError(f"frequency must be positive, got {self.frequency!r}")


@dataclass
class ScanRecord:
    """One scan: signal against a monotone axis.

    ``sync_offset`` is either a scalar (the whole scan sits at one delay after
    the cryostat sync pulse) or one delay per sample.
    """

    axis: str
    axis_values: np.ndarray
    signal: np.ndarray
    sideband_offset: Optional[float] = None
    sync_offset: Optional[np.ndarray] = None
    metadata: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.axis not in (CAVITY_LENGTH, LASER_FREQUENCY):
            raise ValueError(f"unknown axis type {self.axis!r}")
        self.axis_values = np.asarray(self.axis_values, dtype=float)
        self.signal = np.asarray(self.signal, dtype=float)
        if self.axis_values.ndim != 1 or self.axis_values.size == 0:
            raise ValueError("scan needs a non-empty 1-d axis")
        if self.signal.shape != self.axis_values.shape:
            raise ValueError("axis and signal lengths differ")
        if not np.all(np.isfinite(self.axis_values)) or not np.all(np.isfinite(self.signal)):
            raise ValueError("scan values must be finite")
        if np.any(self.signal < 0):
            raise ValueError("signal must be >= 0")
        dx = np.diff(self.axis_values)
        if not (np.all(dx > 0) or np.all(dx < 0)):
            raise ValueError("axis values must be strictly monotone")
        if self.sync_offset is not None:
            sync = np.asarray(self.sync_offset, dtype=float)
            self.sync_offset = np.broadcast_to(sync, self.axis_values.shape).copy()

    def __len__(self):
        return self.axis_values.size

    def subset(self, mask) -> "ScanRecord":
        sync = None if self.sync_offset is None else self.sync_offset[mask]
        return ScanRecord(self.axis, self.axis_values[mask], self.signal[mask],
                          self.sideband_offset, sync, dict(self.metadata))


# -- geometry ---------------------------------------------------------------

@dataclass(frozen=True)
class GeometrySolution:
    geometry: CavityGeometry
    mode_indices: np.ndarray
    residuals: np.ndarray
    rms: float
    air_gap_err: float
    thickness_err: float
    index_shift: int = 0


@dataclass(frozen=True)
class GeometryFit:
    """Best solution plus the neighbouring mode-index assignments."""

    best: GeometrySolution
    alternatives: List[GeometrySolution]
    underdetermined: bool

    @property
    def geometry(self):
        return self.best.geometry

    @property
    def residuals(self):
        return self.best.residuals


def _model_frequencies(m, la, d, n):
    out = np.empty_like(la)
    for mm in np.unique(m):
        sel = m == mm
        out[sel] = (SPEED_OF_LIGHT * mm / (2 * la[sel]) if d == 0
                    else _closed_form(int(mm), la[sel], d, n))
    return out


def _assign_indices(offsets, freqs, la0, d, n):
    s = la0 + offsets + n * d
    m0 = np.maximum(1, np.rint(2 * s * freqs / SPEED_OF_LIGHT)).astype(int)
    best = m0.copy()
    err = np.full(freqs.shape, np.inf)
    for shift in range(-2, 3):
        cand = np.maximum(1, m0 + shift)
        e = np.abs(_model_frequencies(cand, la0 + offsets, d, n) - freqs)
        better = e < err
        best[better], err[better] = cand[better], e[better]
    return best


# internal units: micrometres and terahertz
_UM = 1e-6
_THZ = 1e12


def _solve_geometry(offsets, freqs, m, init, fit_thickness):
    n = init.refractive_index
    off_um = offsets / _UM
    f_thz = freqs / _THZ

    def unpack(p):
        return (p[0], p[1]) if fit_thickness else (p[0], init.membrane_thickness / _UM)

    def resid(p):
        la0, d = unpack(p)
        return _model_frequencies(m, (la0 + off_um) * _UM, d * _UM, n) / _THZ - f_thz

    def jac(p):
        la0, d = unpack(p)
        la = (la0 + off_um) * _UM
        s = np.empty_like(la)
        for mm in np.unique(m):
            sel = m == mm
            s[sel] = (SPEED_OF_LIGHT * mm / (2 * la[sel] ** 2) if d == 0
                      else _closed_form_slope(int(mm), la[sel], d * _UM, n))
        cols = [-s * _UM / _THZ]
        if fit_thickness:
            # d nu / d d by central difference on the closed form (1 pm step)
            h = 1e-6
            up = _model_frequencies(m, la, (d + h) * _UM, n)
            dn = _model_frequencies(m, la, max(d - h, 0.0) * _UM, n)
            cols.append((up - dn) / (((d + h) - max(d - h, 0.0)) * _THZ))
        return np.column_stack(cols)

    p0 = [init.air_gap / _UM]
    if fit_thickness:
        p0.append(init.membrane_thickness / _UM)
    n_par = len(p0)
    res = least_squares(resid, p0, jac=jac, method="lm", xtol=STEP_TOL, ftol=1e-15, gtol=1e-15,
                        max_nfev=MAX_ITERATIONS * (n_par + 1))
    if res.status <= 0:
        raise FitError(f"geometry fit did not converge: {res.message}")
    la0, d = unpack(res.x)
    if la0 <= 0 or d < 0:
        raise FitError(f"geometry fit left the physical region (L_a={la0} um, d={d} um)")
    r = res.fun * _THZ
    dof = max(len(r) - n_par, 1)
    s2 = float(np.sum(res.fun**2)) / dof
    J = res.jac
    try:
        cov = np.linalg.inv(J.T @ J) * s2
        errs = np.sqrt(np.abs(np.diag(cov)))
    except np.linalg.LinAlgError:
        errs = np.full(n_par, np.inf)
    geom = CavityGeometry(la0 * _UM, d * _UM, n, init.radius_of_curvature, init.aperture_radius)
    return geom, r, errs[0] * _UM, (errs[1] * _UM if fit_thickness else 0.0)


def _grid_search(offsets, freqs, init, la_window, d_window, n_grid=41):
    """Best (L_a, d) start on a coarse grid, scoring nearest-branch residuals."""
    n = init.refractive_index
    r = (n - 1) / (n + 1)
    la0 = init.air_gap + np.linspace(-la_window, la_window, n_grid)
    d = np.clip(init.membrane_thickness + np.linspace(-d_window, d_window, n_grid), 0, None)
    LA, D = (a.ravel()[:, None] for a in np.meshgrid(la0, d, indexing="ij"))
    la = LA + offsets[None, :]
    s = la + n * D
    m0 = np.rint(2 * s * freqs[None, :] / SPEED_OF_LIGHT)
    best = np.full(la.shape, np.inf)
    for shift in range(-2, 3):
        m = np.maximum(1, m0 + shift)
        sign = 1.0 - 2.0 * np.mod(m, 2)
        u = m * np.pi * (la - n * D) / s
        nu = SPEED_OF_LIGHT / (2 * np.pi * s) * (np.pi * m - sign * np.arcsin(r * np.sin(u)))
        best = np.minimum(best, (nu - freqs[None, :]) ** 2)
    cost = best.sum(axis=1)
    order = np.argsort(cost)
    return [(float(LA[i, 0]), float(D[i, 0])) for i in order[:5]]


def fit_geometry(points: Sequence[ModePoint], init: CavityGeometry,
                 fit_thickness: Optional[bool] = None, max_reassign: int = 5,
                 search: Optional[tuple] = None) -> GeometryFit:
    """Fit membrane thickness and air gap to fundamental-mode frequencies.

    ``length_offset`` of each point is added to the fitted air gap. Mode
    indices come from nearest-branch matching against the current geometry;
    the fit is repeated until the assignment is stable. Solutions with every
    index shifted by -1 and +1 are refitted and returned too, since an
    optical-length error of lambda/2 is not otherwise detectable. The
    solution with the smallest RMS residual is ``best``.

    ``fit_thickness`` defaults to ``init.membrane_thickness > 0``; a bare
    cavity fits only the air gap.

    Nearest-branch matching needs ``init`` within roughly lambda/8 of optical
    length. For rougher starting values pass ``search=(la_window, d_window)``:
    a coarse grid over ``init`` +- those half-widths picks the five best
    starts and the lowest-residual converged fit wins.
    """
    if len(points) < (4 if fit_thickness is not False else 1):
        raise ValueError("need at least 4 mode points")
    offsets = np.array([p.length_offset for p in points], dtype=float)
    freqs = np.array([p.frequency for p in points], dtype=float)
    if fit_thickness is None:
        fit_thickness = init.membrane_thickness > 0
    n = init.refractive_index

    def converge(geom, m):
        for _ in range(max_reassign):
            geom, r, ela, ed = _solve_geometry(offsets, freqs, m, geom, fit_thickness)
            m_new = _assign_indices(offsets, freqs, geom.air_gap, geom.membrane_thickness, n)
            if np.array_equal(m_new, m):
                break
            m = m_new
        return geom, m, r, ela, ed

    starts = [init]
    if search is not None:
        d_win = search[1] if fit_thickness else 0.0
        starts = [CavityGeometry(la, d, n, init.radius_of_curvature, init.aperture_radius)
                  for la, d in _grid_search(offsets, freqs, init, search[0], d_win)
                  if la + offsets.min() > 0]
    found = []
    for g0 in starts:
        m = _assign_indices(offsets, freqs, g0.air_gap, g0.membrane_thickness, n)
        try:
            found.append(converge(g0, m))
        except FitError:
            if len(starts) == 1:
                raise
    if not found:
        raise FitError("no start point converged")
    geom, m, r, ela, ed = min(found, key=lambda f: float(np.sum(f[2] ** 2)))
    solutions = [GeometrySolution(geom, m, r, float(np.sqrt(np.mean(r**2))), ela, ed, 0)]
    lam = SPEED_OF_LIGHT / float(np.mean(freqs))
    for shift in (-1, 1):
        ms = m + shift
        if np.any(ms < 1):
            continue
        la_start = geom.air_gap + shift * lam / 2
        if la_start + offsets.min() <= 0:
            continue
        try:
            g_alt, r_alt, e1, e2 = _solve_geometry(offsets, freqs, ms, geom.with_air_gap(la_start),
                                                   fit_thickness)
        except FitError:
            continue
        solutions.append(GeometrySolution(g_alt, ms, r_alt, float(np.sqrt(np.mean(r_alt**2))),
                                          e1, e2, shift))
    solutions.sort(key=lambda s: s.rms)
    span = float(np.ptp(offsets))
    underdetermined = bool(fit_thickness and span < lam / 2)
    if underdetermined:
        warnings.warn("mode points span less than lambda/2 of air gap; thickness is unreliable",
                      RuntimeWarning, stacklevel=2)
    return GeometryFit(solutions[0], solutions[1:], underdetermined)


# -- sideband linewidth -----------------------------------------------------

@dataclass(frozen=True)
class LinewidthFit:
    linewidth: float
    uncertainty: float
    calibration_scale: float
    goodness: float
    centers: tuple = ()
    center_errors: tuple = ()


def _lorentz3(p, x):
    b = p[0]
    out = np.full_like(x, b)
    for j in range(3):
        a, c, w = p[1 + 3 * j: 4 + 3 * j]
        out += a / (1 + (2 * (x - c) / w) ** 2)
    return out


def _lorentz3_jac(p, x):
    J = np.empty((x.size, 10))
    J[:, 0] = 1.0
    for j in range(3):
        a, c, w = p[1 + 3 * j: 4 + 3 * j]
        u = 2 * (x - c) / w
        den = 1 + u**2
        J[:, 1 + 3 * j] = 1 / den
        J[:, 2 + 3 * j] = a * 2 * u / den**2 * (2 / w)
        J[:, 3 + 3 * j] = a * 2 * u**2 / den**2 / w
    return J


def _half_max_width(x, y, i, base):
    half = base + (y[i] - base) / 2
    lo = i
    while lo > 0 and y[lo] > half:
        lo -= 1
    hi = i
    while hi < y.size - 1 and y[hi] > half:
        hi += 1
    return max(x[hi] - x[lo], x[1] - x[0])


def _seed_peaks(t, y, expected_spacing=None):
    """Carrier = tallest peak; sidebands = tallest peak on each side beyond
    25% of the expected carrier-sideband spacing."""
    k = max(3, y.size // 400) | 1
    ys = np.convolve(y, np.ones(k) / k, mode="same")
    base = float(np.median(ys))
    peaks, _ = find_peaks(ys, prominence=0.1 * (ys.max() - base))
    if peaks.size < 3:
        raise PeaksUnresolved(f"found {peaks.size} peaks, need 3")
    ic = int(peaks[np.argmax(ys[peaks])])
    wc = _half_max_width(t, ys, ic, base)
    others = peaks[peaks != ic]
    if expected_spacing is None:
        near = others[np.abs(t[others] - t[ic]) > 1.5 * wc]
        left, right = near[t[near] < t[ic]], near[t[near] > t[ic]]
        if left.size == 0 or right.size == 0:
            raise PeaksUnresolved("no sideband candidate on one side of the carrier")
        il, ir = left[np.argmax(ys[left])], right[np.argmax(ys[right])]
        expected_spacing = 0.5 * (abs(t[il] - t[ic]) + abs(t[ir] - t[ic]))
    far = others[np.abs(t[others] - t[ic]) >= 0.25 * expected_spacing]
    left, right = far[t[far] < t[ic]], far[t[far] > t[ic]]
    if left.size == 0 or right.size == 0:
        raise PeaksUnresolved("no sideband beyond 25% of the expected spacing")
    il, ir = left[np.argmax(ys[left])], right[np.argmax(ys[right])]
    p0 = [base]
    for i in (ic, il, ir):
        p0 += [ys[i] - base, t[i], _half_max_width(t, ys, i, base)]
    return np.array(p0, dtype=float)


def fit_linewidth_sidebanded(scan: ScanRecord, sideband_offset: Optional[float] = None,
                             expected_spacing: Optional[float] = None,
                             noise_sigma: Optional[float] = None,
                             reject_fraction: float = 0.2) -> LinewidthFit:
    """Cavity linewidth from a length scan showing carrier and two sidebands.

    Three Lorentzians on a constant baseline are fitted. The two sidebands
    sit ``sideband_offset`` above and below the carrier, which converts the
    axis to frequency: ``scale = 2 df / |x_+ - x_-|`` and the linewidth is
    the carrier FWHM times ``scale``. The axis is normalised internally, so
    the result does not depend on the units of ``axis_values``.

    Raises
    ------
    PeaksUnresolved
        Fewer than three peaks could be seeded.
    FitRejected
        A peak-centre uncertainty exceeds ``reject_fraction`` of the
        carrier-sideband spacing.
    """
    df = sideband_offset if sideband_offset is not None else scan.sideband_offset
    if df is None or not df > 0:
        raise ValueError("a positive sideband offset is required")
    x = scan.axis_values
    x_mid = 0.5 * (x[0] + x[-1])
    x_span = x[-1] - x[0]
    t = (x - x_mid) / x_span
    y = scan.signal
    spacing_t = None if expected_spacing is None else abs(expected_spacing / x_span)
    p0 = _seed_peaks(t, y, spacing_t)
    res = least_squares(lambda p: _lorentz3(p, t) - y, p0, jac=lambda p: _lorentz3_jac(p, t),
                        method="lm", xtol=STEP_TOL, ftol=1e-15, gtol=1e-15,
                        max_nfev=MAX_ITERATIONS * 11)
    if res.status <= 0:
        raise FitError(f"linewidth fit did not converge: {res.message}")
    p = res.x
    dof = max(t.size - p.size, 1)
    ssr = float(np.sum(res.fun**2))
    s2 = ssr / dof
    try:
        cov = np.linalg.inv(res.jac.T @ res.jac) * s2
    except np.linalg.LinAlgError as exc:
        raise FitError("singular Jacobian in linewidth fit") from exc
    centers = p[[2, 5, 8]]
    errs = np.sqrt(np.abs(np.diag(cov)))[[2, 5, 8]]
    ic_side = np.argsort(centers[1:]) + 1
    i_lo, i_hi = ic_side
    dist = abs(centers[i_hi] - centers[i_lo])
    if dist == 0:
        raise FitError("sideband centres coincide")
    w = abs(p[3])
    scale_t = 2 * df / dist
    linewidth = w * scale_t
    # gradient of w * 2 df / (c_hi - c_lo) wrt (w, c_lo, c_hi)
    idx = [3, 2 + 3 * i_lo, 2 + 3 * i_hi]
    grad = np.array([scale_t, w * 2 * df / dist**2, -w * 2 * df / dist**2])
    var = float(grad @ cov[np.ix_(idx, idx)] @ grad)
    goodness = s2 / noise_sigma**2 if noise_sigma else s2
    fit = LinewidthFit(linewidth=float(linewidth), uncertainty=math.sqrt(max(var, 0.0)),
                       calibration_scale=float(scale_t / abs(x_span)), goodness=float(goodness),
                       centers=tuple(float(c * x_span + x_mid) for c in centers),
                       center_errors=tuple(float(e * abs(x_span)) for e in errs))
    limit = reject_fraction * dist / 2
    if np.any(errs > limit) or not np.all(np.isfinite(errs)):
        raise FitRejected(f"peak centre uncertainty {errs.max():.3g} exceeds {limit:.3g}", fit)
    if not (min(centers[i_lo], centers[i_hi]) < centers[0] < max(centers[i_lo], centers[i_hi])):
        raise FitRejected("carrier does not sit between the sidebands", fit)
    return fit


def finesse_from_linewidth(fit: LinewidthFit, g: CavityGeometry):
    """``fsr / linewidth`` and its propagated 1-sigma uncertainty."""
    if not fit.linewidth > 0:
        raise ValueError("linewidth must be positive")
    f = fsr(g) / fit.linewidth
    return f, f * fit.uncertainty / fit.linewidth


# -- vibration broadening ---------------------------------------------------

@dataclass(frozen=True)
class BroadeningFit:
    fwhm_frequency: float
    fwhm_uncertainty: float
    displacement: Optional[float] = None
    displacement_uncertainty: Optional[float] = None
    n_used: int = 0
    n_excluded: int = 0
    grid: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    average: Optional[np.ndarray] = field(default=None, repr=False, compare=False)


def _noise_level(y):
    # robust white-noise sigma from first differences
    return 1.4826 * float(np.median(np.abs(np.diff(y)))) / math.sqrt(2)


def sweep_center(x, y, top_fraction: float = 0.2, method: str = "centroid") -> float:
    """Peak position: signal-weighted centroid of the top 20% of the signal range, or the raw maximum."""
    if method == "max":
        return float(x[np.argmax(y)])
    if method != "centroid":
        raise ValueError(f"unknown centring method {method!r}")
    lo, hi = float(np.min(y)), float(np.max(y))
    thr = hi - top_fraction * (hi - lo)
    sel = y >= thr
    wts = y[sel] - lo
    if wts.sum() <= 0:
        return float(x[np.argmax(y)])
    return float(np.sum(x[sel] * wts) / np.sum(wts))


def _has_peak(y, threshold=5.0):
    noise = _noise_level(y)
    return float(np.max(y) - np.median(y)) > threshold * max(noise, 1e-300)


def _gauss(p, x):
    a, mu, s, b = p
    return a * np.exp(-0.5 * ((x - mu) / s) ** 2) + b


def _gauss_jac(p, x):
    a, mu, s, b = p
    z = (x - mu) / s
    e = np.exp(-0.5 * z**2)
    return np.column_stack([e, a * e * z / s, a * e * z**2 / s, np.ones_like(x)])


def fit_gaussian(x, y):
    """Gaussian plus constant baseline; returns ``(params, covariance)``."""
    b0 = float(np.min(y))
    w = np.clip(y - b0, 0, None)
    if w.sum() <= 0:
        raise FitError("no signal above baseline")
    mu0 = float(np.sum(x * w) / w.sum())
    s0 = math.sqrt(max(float(np.sum(w * (x - mu0) ** 2) / w.sum()), (x[1] - x[0]) ** 2))
    # moments overestimate the width on a wide baseline
    s0 = min(s0, _half_max_width(x, y, int(np.argmax(y)), b0) / FWHM_PER_SIGMA)
    scale = max(abs(x[-1] - x[0]), 1e-300)
    xs = (x - mu0) / scale
    p0 = [float(np.max(y) - b0), 0.0, s0 / scale, b0]
    res = least_squares(lambda p: _gauss(p, xs) - y, p0, jac=lambda p: _gauss_jac(p, xs),
                        method="lm", xtol=STEP_TOL, ftol=1e-15, gtol=1e-15,
                        max_nfev=MAX_ITERATIONS * 5)
    if res.status <= 0:
        raise FitError(f"Gaussian fit did not converge: {res.message}")
    s2 = float(np.sum(res.fun**2)) / max(x.size - 4, 1)
    try:
        cov = np.linalg.inv(res.jac.T @ res.jac) * s2
    except np.linalg.LinAlgError as exc:
        raise FitError("singular Jacobian in Gaussian fit") from exc
    a, mu, s, b = res.x
    params = np.array([a, mu * scale + mu0, abs(s) * scale, b])
    units = np.array([1.0, scale, scale, 1.0])
    return params, cov * np.outer(units, units)


def fit_vibration_broadening(sweeps: Sequence[ScanRecord], center_method: str = "centroid",
                             min_sweeps: int = 2) -> BroadeningFit:
    """Gaussian FWHM of the overlapped average of slow laser sweeps.

    Each sweep is centred on its own peak (centroid of the top 20% of the
    signal), all sweeps are interpolated onto a shared grid covering the
    range common to every centred sweep, averaged, and fitted with a Gaussian
    on a constant baseline. Sweeps without a peak five noise-sigmas above
    their median are excluded and counted in ``n_excluded``.
    """
    if len(sweeps) < min_sweeps:
        raise ValueError(f"need at least {min_sweeps} sweeps, got {len(sweeps)}")
    centred = []
    excluded = 0
    for sw in sweeps:
        x, y = sw.axis_values, sw.signal
        if x[0] > x[-1]:
            x, y = x[::-1], y[::-1]
        if x.size < 5 or not _has_peak(y):
            excluded += 1
            continue
        centred.append((x - sweep_center(x, y, method=center_method), y))
    if excluded:
        warnings.warn(f"{excluded} sweep(s) without a peak were excluded", RuntimeWarning,
                      stacklevel=2)
    if len(centred) < min_sweeps:
        raise FitError("fewer than two sweeps with a detectable peak")
    lo = max(x[0] for x, _ in centred)
    hi = min(x[-1] for x, _ in centred)
    step = float(np.median([np.median(np.diff(x)) for x, _ in centred]))
    if not hi - lo > 4 * step:
        raise FitError("centred sweeps do not overlap")
    grid = lo + step * np.arange(int(math.floor((hi - lo) / step)) + 1)
    avg = np.mean([np.interp(grid, x, y) for x, y in centred], axis=0)
    params, cov = fit_gaussian(grid, avg)
    fwhm = params[2] * FWHM_PER_SIGMA
    err = math.sqrt(abs(cov[2, 2])) * FWHM_PER_SIGMA
    return BroadeningFit(fwhm_frequency=float(fwhm), fwhm_uncertainty=float(err),
                         n_used=len(centred), n_excluded=excluded, grid=grid, average=avg)


def displacement_from_broadening(fwhm_frequency: float, m: int, g: CavityGeometry) -> float:
    """Air-gap displacement (FWHM) equivalent to a frequency broadening."""
    slope = frequency_slope(m, g)
    if not slope > 0:
        raise ZeroSlope(f"mode {m} has zero length slope here")
    return fwhm_frequency / slope


def with_displacement(fit: BroadeningFit, m: int, g: CavityGeometry) -> BroadeningFit:
    slope = frequency_slope(m, g)
    if not slope > 0:
        raise ZeroSlope(f"mode {m} has zero length slope here")
    return BroadeningFit(fit.fwhm_frequency, fit.fwhm_uncertainty,
                         fit.fwhm_frequency / slope, fit.fwhm_uncertainty / slope,
                         fit.n_used, fit.n_excluded, fit.grid, fit.average)


@dataclass(frozen=True)
class SyncBin:
    center: float
    n_sweeps: int
    fit: Optional[BroadeningFit]


def bin_by_sync(sweeps: Sequence[ScanRecord], bin_width: float, period: float = 1.0,
                min_samples: int = 8, **kwargs) -> List[SyncBin]:
    """Broadening fit per delay bin after the cryostat sync pulse.

    Samples are assigned to bins by ``sync_offset mod period``; within a bin
    every sweep contributes its samples in that bin. Bins reached by fewer
    than two sweeps (or whose fit fails) carry ``fit=None``.
    """
    if not bin_width > 0:
        raise ValueError("bin width must be positive")
    for sw in sweeps:
        if sw.sync_offset is None:
            raise ValueError("every sweep needs a sync offset")
    n_bins = max(1, int(math.ceil(period / bin_width - 1e-9)))
    out = []
    for b in range(n_bins):
        lo, hi = b * bin_width, min((b + 1) * bin_width, period)
        parts = []
        for sw in sweeps:
            phase = np.mod(sw.sync_offset, period)
            mask = (phase >= lo) & (phase < hi)
            if np.count_nonzero(mask) >= min_samples:
                parts.append(sw if mask.all() else sw.subset(mask))
        fit = None
        if len(parts) >= 2:
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    fit = fit_vibration_broadening(parts, **kwargs)
            except FitError:
                fit = None
        out.append(SyncBin(0.5 * (lo + hi), len(parts), fit))
    return out
