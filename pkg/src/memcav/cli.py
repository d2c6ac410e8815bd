"""Command-line front end.

Every subcommand writes CSV tables into ``--out`` and prints a short summary.
Exit codes: 0 success, 1 fit or analysis failure, 2 input or config error.
"""
from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .emitter import (EmitterSpec, cavity_purcell_factor, emission_on_resonance,
                      entanglement_rate_gain, vibration_averaged_emission, VibrationSpec)
from .errors import ConfigError, FitError, FitRejected, PeaksUnresolved
from .io import (PlotTable, list_csv, load_config, read_mode_points, read_scan, write_mode_points,
                 write_scan)
from .modes import (SPEED_OF_LIGHT, air_character_curve, dispersion_curves, fsr,
                    frequency_slope, tune_to_resonance)
from .scans import (bin_by_sync, fit_geometry, fit_linewidth_sidebanded,
                    fit_vibration_broadening, with_displacement)
from .synth import TwoPhaseJitter, synthesize_mode_points, synthesize_sideband_scan, \
    synthesize_vibration_sweeps

U64_MAX = 2**64 - 1

# reference point values shown next to the model in reported_comparison.csv
_REPORTED_P_RESONANT = 0.80
_REPORTED_P_VIB_IDEAL = 0.33
_REPORTED_P_VIB_MISMATCHED = 0.26
_REPORTED_VIB_FINESSE = 5000.0


def _seed(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text):
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _count(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a count >= 1, got {text!r}")
    return v


class Run:
    """Shared state for one command invocation."""

    def __init__(self, args, command):
        self.args = args
        self.command = command
        self.config = load_config(args.config)
        self.out = Path(args.out)
        self.seed = args.seed

    def meta(self, **extra):
        m = {"tool": "memcav", "tool_version": __version__, "command": self.command,
             "config_hash": self.config.hash, "seed": str(self.seed)}
        m.update({k: str(v) for k, v in extra.items()})
        return m

    def write(self, name, columns, rows, **extra):
        table = PlotTable(columns, rows, self.meta(**extra))
        table.write(self.out / name)
        return table

    def svg(self, name, x, curves, xlabel, ylabel):
        if not self.args.svg:
            return
        _render_svg(self.out / name, x, curves, xlabel, ylabel)


def _render_svg(path, x, curves, xlabel, ylabel):
    try:
        import matplotlib
    except ImportError:
        raise ConfigError("--svg needs matplotlib (pip install 'artifact[plot]')") from None
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "memcav"
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, y in curves:
        ax.plot(x if np.ndim(x) == 1 else x[label], y, lw=1, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if 0 < len(curves) <= 8:
        ax.legend(fontsize=7)
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _tuned(run, mode_index=None):
    cfg = run.config
    return tune_to_resonance(cfg.geometry, cfg.laser_frequency, mode_index)


# -- subcommands ------------------------------------------------------------

def cmd_modes(run):
    a = run.args
    g = run.config.geometry
    la_min = g.air_gap if a.la_min is None else a.la_min
    la_max = la_min + 2e-6 if a.la_max is None else a.la_max
    if not 0 < la_min <= la_max:
        raise ConfigError(f"empty air-gap range [{la_min!r}, {la_max!r}]")
    nu_lo, nu_hi = a.nu_min, a.nu_max
    if not 0 < nu_lo < nu_hi:
        raise ConfigError("empty frequency band")
    n, d = g.refractive_index, g.membrane_thickness
    fsr_hi = SPEED_OF_LIGHT / (2 * (la_min + n * d))
    fsr_lo = SPEED_OF_LIGHT / (2 * (la_max + n * d))
    m_lo = max(1, int(nu_lo / fsr_hi) - 1)
    m_hi = int(math.ceil(nu_hi / fsr_lo)) + 1
    la, ms, nu = dispersion_curves(g, la_min, la_max, a.la_step, m_lo, m_hi)
    disp, char = [], []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for j, m in enumerate(ms):
            keep = (nu[:, j] >= nu_lo) & (nu[:, j] <= nu_hi)
            if not keep.any():
                continue
            c = air_character_curve(int(m), g, la[keep])
            for x, f, cc in zip(la[keep], nu[keep, j], c):
                disp.append((x, m, f))
                char.append((x, m, cc))
    extra = dict(membrane_thickness_m=repr(d), refractive_index=repr(n))
    run.write("dispersion.csv", ["air_gap_m", "mode_index", "frequency_hz"], disp, **extra)
    run.write("character.csv", ["air_gap_m", "mode_index", "air_character"], char, **extra)
    if disp:
        arr = np.array(disp)
        curves = [(str(int(m)), arr[arr[:, 1] == m, 2] / 1e12) for m in np.unique(arr[:, 1])]
        xs = {lab: arr[arr[:, 1] == float(lab), 0] * 1e6 for lab, _ in curves}
        run.svg("dispersion.svg", xs, curves, "air gap (um)", "frequency (THz)")
    print(f"modes: {len(disp)} points on {len(set(r[1] for r in disp))} branches")
    return 0


def cmd_fit_geometry(run):
    a = run.args
    points, _ = read_mode_points(a.points)
    init = run.config.geometry
    search = tuple(a.search) if a.search else None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        fit = fit_geometry(points, init, search=search)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    rows = []
    for rank, s in enumerate([fit.best] + list(fit.alternatives)):
        rows.append((rank, s.index_shift, s.geometry.air_gap, s.air_gap_err,
                     s.geometry.membrane_thickness, s.thickness_err, s.rms,
                     int(np.min(s.mode_indices))))
    src = Path(a.points).name
    run.write("geometry_fit.csv",
              ["rank", "index_shift", "air_gap_m", "air_gap_err_m", "membrane_thickness_m",
               "membrane_thickness_err_m", "rms_residual_hz", "min_mode_index"], rows,
              input=src, underdetermined=str(fit.underdetermined).lower())
    b = fit.best
    res_rows = [(p.length_offset, p.frequency, m, r)
                for p, m, r in zip(points, b.mode_indices, b.residuals)]
    run.write("geometry_residuals.csv",
              ["length_offset_m", "frequency_hz", "mode_index", "residual_hz"], res_rows,
              input=src)
    print(f"fit-geometry: air_gap={float(b.geometry.air_gap)!r} m +- {b.air_gap_err:.3g}, "
          f"thickness={float(b.geometry.membrane_thickness)!r} m +- {b.thickness_err:.3g}, "
          f"rms={b.rms:.4g} Hz, alternatives={len(fit.alternatives)}, "
          f"underdetermined={fit.underdetermined}")
    return 0


def cmd_linewidth(run):
    a = run.args
    cfg = run.config
    files = list_csv(a.scans)
    rows, rejected, widths, errs = [], [], [], []
    for i, path in enumerate(files):
        scan = read_scan(path)
        df = scan.sideband_offset if scan.sideband_offset is not None else cfg.sideband_offset
        try:
            fit = fit_linewidth_sidebanded(scan, df)
        except (FitRejected, PeaksUnresolved, FitError) as exc:
            f = getattr(exc, "fit", None)
            rows.append((i, np.nan if f is None else f.linewidth,
                         np.nan if f is None else f.uncertainty,
                         np.nan if f is None else f.calibration_scale,
                         np.nan if f is None else f.goodness, 0))
            rejected.append(path.name)
            continue
        rows.append((i, fit.linewidth, fit.uncertainty, fit.calibration_scale, fit.goodness, 1))
        widths.append(fit.linewidth)
        errs.append(fit.uncertainty)
    names = ";".join(p.name for p in files)
    run.write("linewidth_scans.csv",
              ["scan_index", "linewidth_hz", "uncertainty_hz", "calibration_hz_per_unit",
               "goodness", "accepted"], rows, files=names, rejected=";".join(rejected))
    if not widths:
        print(f"linewidth: all {len(files)} scans rejected", file=sys.stderr)
        return 1
    w = np.array(widths)
    mean, median = float(np.mean(w)), float(np.median(w))
    sem = float(np.std(w, ddof=1) / math.sqrt(w.size)) if w.size > 1 else float(errs[0])
    free = fsr(cfg.geometry)
    finesse = free / mean
    run.write("linewidth_summary.csv",
              ["n_accepted", "n_rejected", "mean_linewidth_hz", "median_linewidth_hz",
               "linewidth_sem_hz", "fsr_hz", "finesse", "finesse_err"],
              [(w.size, len(rejected), mean, median, sem, free, finesse, finesse * sem / mean)],
              rejected=";".join(rejected))
    print(f"linewidth: {w.size} accepted, {len(rejected)} rejected, mean={mean:.6g} Hz, "
          f"median={median:.6g} Hz, finesse={finesse:.6g}")
    if rejected:
        print("rejected: " + ", ".join(rejected), file=sys.stderr)
    return 0


def cmd_vibration(run):
    a = run.args
    sweeps = [read_scan(p) for p in list_csv(a.sweeps)]
    if len(sweeps) < 2:
        raise ConfigError(f"need at least 2 sweeps, got {len(sweeps)}")
    m, g = _tuned(run, a.mode_index)
    slope = frequency_slope(m, g)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        fit = with_displacement(fit_vibration_broadening(sweeps, a.center_method), m, g)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    extra = dict(mode_index=m, air_gap_m=repr(g.air_gap), slope_hz_per_m=repr(slope))
    run.write("vibration_summary.csv",
              ["fwhm_hz", "fwhm_err_hz", "displacement_fwhm_m", "displacement_err_m", "n_used",
               "n_excluded"],
              [(fit.fwhm_frequency, fit.fwhm_uncertainty, fit.displacement,
                fit.displacement_uncertainty, fit.n_used, fit.n_excluded)], **extra)
    print(f"vibration: fwhm={fit.fwhm_frequency:.6g} Hz, displacement={fit.displacement:.4g} m "
          f"(mode {m}, slope {slope:.4g} Hz/m)")
    if any(sw.sync_offset is None for sw in sweeps):
        print("warning: sync_offset_s column missing; running unbinned", file=sys.stderr)
        return 0
    bins = bin_by_sync(sweeps, a.bin_width, a.period, center_method=a.center_method)
    rows = []
    for b in bins:
        if b.fit is None:
            rows.append((b.center, b.n_sweeps, np.nan, np.nan, np.nan, np.nan))
        else:
            rows.append((b.center, b.n_sweeps, b.fit.fwhm_frequency, b.fit.fwhm_uncertainty,
                         b.fit.fwhm_frequency / slope, b.fit.fwhm_uncertainty / slope))
    table = run.write("vibration_bins.csv",
                      ["sync_delay_s", "n_sweeps", "fwhm_hz", "fwhm_err_hz", "displacement_fwhm_m",
                       "displacement_err_m"], rows, bin_width_s=repr(a.bin_width), **extra)
    run.svg("vibration_bins.svg", table.column("sync_delay_s"),
            [("displacement", table.column("displacement_fwhm_m") * 1e9)],
            "delay after sync (s)", "displacement FWHM (nm)")
    return 0


def cmd_purcell(run):
    a = run.args
    cfg = run.config
    if not a.finesse_min <= a.finesse_max:
        raise ConfigError("empty finesse range")
    m, g = _tuned(run, a.mode_index)
    nu, lam, n = cfg.laser_frequency, cfg.wavelength, g.refractive_index
    ideal = EmitterSpec(cfg.emitter.zpl_branching, cfg.emitter.free_lifetime)
    real = cfg.emitter
    extra = dict(mode_index=m, air_gap_m=repr(g.air_gap), laser_frequency_hz=repr(nu))

    finesses = np.linspace(a.finesse_min, a.finesse_max, a.finesse_steps)
    rows = []
    for F in finesses:
        fp = cavity_purcell_factor(F, g, nu)
        e0 = emission_on_resonance(fp, ideal, lam, n)
        e1 = emission_on_resonance(fp, real, lam, n)
        rows.append((F, fp, e0.p_zpl_cavity, e0.lifetime, e1.p_zpl_cavity, e1.lifetime))
    t1 = run.write("purcell_finesse.csv",
                   ["finesse", "purcell_factor", "p_zpl_ideal", "lifetime_ideal_s",
                    "p_zpl_emitter", "lifetime_emitter_s"], rows, **extra)

    sigmas = np.linspace(0.0, a.sigma_max, a.sigma_steps)
    Fv = a.vibration_finesse
    rows = []
    for s in sigmas:
        vib = VibrationSpec(float(s))
        e0 = vibration_averaged_emission(ideal, g, m, Fv, vib, nu=nu)
        e1 = vibration_averaged_emission(real, g, m, Fv, vib, nu=nu)
        rows.append((s, e0.p_zpl_cavity, e0.lifetime, e1.p_zpl_cavity, e1.lifetime))
    t2 = run.write("purcell_vibration.csv",
                   ["sigma_m", "p_zpl_ideal", "lifetime_ideal_s", "p_zpl_emitter",
                    "lifetime_emitter_s"], rows, finesse=repr(Fv), **extra)

    gain = entanglement_rate_gain(a.zpl_gain, a.collection_gain)
    run.write("purcell_summary.csv", ["zpl_gain", "collection_gain", "entanglement_rate_gain"],
              [(a.zpl_gain, a.collection_gain, gain)])

    # reported point values next to this model's values
    sig = cfg.vibration.displacement_sigma
    cases = []
    for F in (4000.0, 15000.0):
        fp = cavity_purcell_factor(F, g, nu)
        cases.append((len(cases) + 1, F, 0.0, 0, _REPORTED_P_RESONANT,
                      emission_on_resonance(fp, ideal, lam, n).p_zpl_cavity))
    vib = VibrationSpec(sig)
    for mism, em, ref in ((0, ideal, _REPORTED_P_VIB_IDEAL), (1, real, _REPORTED_P_VIB_MISMATCHED)):
        p = vibration_averaged_emission(em, g, m, _REPORTED_VIB_FINESSE, vib, nu=nu).p_zpl_cavity
        cases.append((len(cases) + 1, _REPORTED_VIB_FINESSE, sig, mism, ref, p))
    run.write("reported_comparison.csv",
              ["case", "finesse", "sigma_m", "mismatched", "reported_p_zpl", "model_p_zpl"], cases,
              note="cases 1-2 reported value is a lower bound; 3-4 are point values", **extra)

    run.svg("purcell_finesse.svg", t1.column("finesse"),
            [("ideal", t1.column("p_zpl_ideal")), ("emitter", t1.column("p_zpl_emitter"))],
            "finesse", "p_zpl into cavity")
    run.svg("purcell_vibration.svg", t2.column("sigma_m") * 1e9,
            [("ideal", t2.column("p_zpl_ideal")), ("emitter", t2.column("p_zpl_emitter"))],
            "length sigma (nm)", "mean p_zpl into cavity")
    print(f"entanglement_rate_gain zpl_gain={a.zpl_gain:g} collection_gain={a.collection_gain:g} "
          f"gain={gain:g}")
    return 0


def cmd_synth(run):
    a = run.args
    cfg = run.config
    rng = np.random.default_rng(run.seed)
    common = run.meta(kind=a.kind)
    if a.kind == "modes":
        noise = 0.0 if a.noise is None else a.noise
        offsets = np.linspace(a.offset_min, a.offset_max, a.count)
        pts = synthesize_mode_points(cfg.geometry, offsets, (a.nu_min, a.nu_max), noise, rng)
        write_mode_points(pts.points, run.out / "mode_points.csv", {**pts.metadata, **common})
        print(f"synth: {len(pts)} mode points")
        return 0
    if a.kind == "linewidth":
        noise = 0.05 if a.noise is None else a.noise
        lw = a.linewidth if a.linewidth else fsr(cfg.geometry) / a.finesse
        for i in range(a.count):
            scan = synthesize_sideband_scan(lw, cfg.sideband_offset, noise=noise, seed=rng)
            write_scan(scan, run.out / f"scan_{i:03d}.csv", {**common, "file_index": str(i)})
        print(f"synth: {a.count} sideband scans, linewidth {lw:.6g} Hz")
        return 0
    noise = 0.01 if a.noise is None else a.noise
    jitter = TwoPhaseJitter(*a.two_phase) if a.two_phase else a.jitter_fwhm
    sweeps = synthesize_vibration_sweeps(a.count, jitter, a.linewidth or 0.2e9,
                                         laser_center=cfg.laser_frequency, noise=noise, seed=rng)
    for i, sw in enumerate(sweeps):
        write_scan(sw, run.out / f"sweep_{i:03d}.csv", {**common, "file_index": str(i)})
    print(f"synth: {len(sweeps)} vibration sweeps")
    return 0


# -- parser -----------------------------------------------------------------

def _global_flags(p, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--config", default=d(None), help="flat JSON run configuration")
    p.add_argument("--out", default=d("."), help="output directory (default: .)")
    p.add_argument("--seed", type=_seed, default=d(0), help="RNG seed, unsigned 64-bit")
    p.add_argument("--svg", action="store_true", default=d(False),
                   help="also render simple SVG line plots (needs matplotlib)")


def build_parser():
    parser = argparse.ArgumentParser(prog="memcav",
                                     description="Membrane-in-the-middle fiber cavity toolkit.")
    parser.add_argument("--version", action="version", version=f"memcav {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help):
        p = sub.add_parser(name, help=help)
        _global_flags(p, suppress=True)
        return p

    p = add("modes", "dispersion and air-like character tables")
    p.add_argument("--la-min", type=_positive, help="first air gap (m); default config air gap")
    p.add_argument("--la-max", type=_positive, help="last air gap (m); default la-min + 2 um")
    p.add_argument("--la-step", type=_positive, default=5e-9)
    p.add_argument("--nu-min", type=_positive, default=440e12)
    p.add_argument("--nu-max", type=_positive, default=500e12)
    p.set_defaults(func=cmd_modes)

    p = add("fit-geometry", "fit air gap and membrane thickness to mode points")
    p.add_argument("points", help="mode-point CSV")
    p.add_argument("--search", type=_positive, nargs=2, metavar=("LA_WIN", "D_WIN"),
                   help="grid-search half-widths (m) around the config geometry")
    p.set_defaults(func=cmd_fit_geometry)

    p = add("linewidth", "sideband-calibrated linewidth and finesse")
    p.add_argument("scans", help="scan CSV or a directory of them")
    p.set_defaults(func=cmd_linewidth)

    p = add("vibration", "vibration broadening and sync-binned displacement")
    p.add_argument("sweeps", help="directory of laser-sweep CSVs")
    p.add_argument("--bin-width", type=_positive, default=0.05, help="sync bin width (s)")
    p.add_argument("--period", type=_positive, default=1.0, help="sync period (s)")
    p.add_argument("--center-method", choices=("centroid", "max"), default="centroid")
    p.add_argument("--mode-index", type=_count, help="mode tuned to the laser; default nearest")
    p.set_defaults(func=cmd_vibration)

    p = add("purcell", "emission probability and lifetime tables")
    p.add_argument("--finesse-min", type=_positive, default=4000.0)
    p.add_argument("--finesse-max", type=_positive, default=15000.0)
    p.add_argument("--finesse-steps", type=_count, default=23)
    p.add_argument("--sigma-max", type=_positive, default=1e-9, help="largest length sigma (m)")
    p.add_argument("--sigma-steps", type=_count, default=21)
    p.add_argument("--vibration-finesse", type=_positive, default=5000.0)
    p.add_argument("--mode-index", type=_count)
    p.add_argument("--zpl-gain", type=float, default=13.0)
    p.add_argument("--collection-gain", type=float, default=3.0)
    p.set_defaults(func=cmd_purcell)

    p = add("synth", "deterministic synthetic datasets")
    p.add_argument("kind", choices=("modes", "linewidth", "vibration"))
    p.add_argument("--count", type=_count, default=None,
                   help="files (scans/sweeps) or length offsets (modes)")
    p.add_argument("--noise", type=float, default=None,
                   help="Hz for modes; fraction of peak for scans and sweeps")
    p.add_argument("--offset-min", type=float, default=0.0)
    p.add_argument("--offset-max", type=float, default=1e-6)
    p.add_argument("--nu-min", type=_positive, default=440e12)
    p.add_argument("--nu-max", type=_positive, default=500e12)
    p.add_argument("--linewidth", type=_positive, default=None, help="cavity linewidth (Hz)")
    p.add_argument("--finesse", type=_positive, default=10000.0,
                   help="sets the linewidth from the config FSR when --linewidth is absent")
    p.add_argument("--jitter-fwhm", type=_positive, default=22.2e9)
    p.add_argument("--two-phase", type=_positive, nargs=2, metavar=("LOW", "HIGH"),
                   help="jitter FWHM inside/outside the 0.25-0.30 s window")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "synth" and args.count is None:
        args.count = 21 if args.kind == "modes" else 50
    try:
        run = Run(args, args.command)
        return args.func(run)
    except ConfigError as exc:
        print(f"memcav {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (FitError, RuntimeError, ZeroDivisionError) as exc:
        print(f"memcav {args.command}: analysis failed: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"memcav {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
