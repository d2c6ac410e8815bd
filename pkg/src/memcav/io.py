"""Run configuration and the CSV file formats.

Files are UTF-8 with LF line endings. Optional ``#key=value`` metadata lines
precede a single header line; numbers are written with :func:`repr` so that a
write -> read -> write round trip is byte-identical.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .emitter import EmitterSpec, VibrationSpec, fwhm_to_sigma
from .errors import ConfigError
from .losses import MirrorSpec, SurfaceSpec
from .modes import SPEED_OF_LIGHT, CavityGeometry
from .scans import CAVITY_LENGTH, LASER_FREQUENCY, ModePoint, ScanRecord

_LASER_FREQUENCY = 471.3e12

DEFAULTS = {
    "air_gap_m": 4.6e-6,
    "membrane_thickness_m": 4e-6,
    "refractive_index": 2.417,
    "radius_of_curvature_m": 18.4e-6,
    "aperture_radius_m": None,
    "fiber_transmission_ppm": 50.0,
    "fiber_loss_ppm": 70.0,
    "plane_loss_ppm": 100.0,
    "rms_roughness_m": 0.35e-9,
    "zpl_branching": 0.03,
    "free_lifetime_s": 12e-9,
    "dipole_mismatch_deg": 30.0,
    # a tenth of the wavelength inside the membrane
    "antinode_offset_m": SPEED_OF_LIGHT / _LASER_FREQUENCY / (10 * 2.417),
    "sideband_offset_hz": 6e9,
    "laser_frequency_hz": _LASER_FREQUENCY,
    "vibration_sigma_m": fwhm_to_sigma(0.80e-9),
}


@dataclass(frozen=True)
class RunConfig:
    geometry: CavityGeometry
    fiber: MirrorSpec
    plane: MirrorSpec
    surface: SurfaceSpec
    emitter: EmitterSpec
    vibration: VibrationSpec
    laser_frequency: float
    sideband_offset: float
    raw: Dict[str, object] = field(default_factory=dict, compare=False)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.laser_frequency

    @property
    def hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _key_line(text, key):
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i
    return None


def _where(text, key):
    line = _key_line(text, key) if text is not None else None
    return f"line {line}, field {key!r}" if line else f"field {key!r}"


def config_from_dict(values: Dict[str, object], text: Optional[str] = None) -> RunConfig:
    """Build and validate a :class:`RunConfig`; missing fields take defaults."""
    unknown = sorted(set(values) - set(DEFAULTS))
    if unknown:
        raise ConfigError("; ".join(f"{_where(text, k)}: unknown field" for k in unknown))
    raw = dict(DEFAULTS)
    raw.update(values)
    for k, v in raw.items():
        if v is None and k == "aperture_radius_m":
            continue
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"{_where(text, k)}: expected a finite number, got {v!r}")
        raw[k] = float(v)

    def build(keys, fn):
        try:
            return fn()
        except ValueError as exc:
            raise ConfigError(f"{_where(text, keys)}: {exc}") from None

    geom = build("air_gap_m", lambda: CavityGeometry(
        raw["air_gap_m"], raw["membrane_thickness_m"], raw["refractive_index"],
        raw["radius_of_curvature_m"], raw["aperture_radius_m"]))
    fiber = build("fiber_transmission_ppm",
                  lambda: MirrorSpec(raw["fiber_transmission_ppm"], raw["fiber_loss_ppm"]))
    plane = build("plane_loss_ppm", lambda: MirrorSpec(0.0, raw["plane_loss_ppm"]))
    surface = build("rms_roughness_m", lambda: SurfaceSpec(raw["rms_roughness_m"]))
    emitter = build("zpl_branching", lambda: EmitterSpec(
        raw["zpl_branching"], raw["free_lifetime_s"], math.radians(raw["dipole_mismatch_deg"]),
        raw["antinode_offset_m"]))
    vib = build("vibration_sigma_m", lambda: VibrationSpec(raw["vibration_sigma_m"]))
    for k in ("laser_frequency_hz", "sideband_offset_hz"):
        if not raw[k] > 0:
            raise ConfigError(f"{_where(text, k)}: must be positive")
    lam = SPEED_OF_LIGHT / raw["laser_frequency_hz"]
    if abs(raw["antinode_offset_m"]) > lam / (4 * raw["refractive_index"]):
        raise ConfigError(f"{_where(text, 'antinode_offset_m')}: exceeds lambda/(4 n)")
    return RunConfig(geom, fiber, plane, surface, emitter, vib, raw["laser_frequency_hz"],
                     raw["sideband_offset_hz"], raw)


def load_config(path=None) -> RunConfig:
    """Read a flat JSON config. ``None`` gives the built-in defaults."""
    if path is None:
        return config_from_dict({})
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None

    def no_duplicates(pairs):
        seen = {}
        for k, v in pairs:
            if k in seen:
                raise ConfigError(f"{path}: {_where(text, k)}: duplicate field")
            seen[k] = v
        return seen

    try:
        values = json.loads(text, object_pairs_hook=no_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(values, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    try:
        return config_from_dict(values, text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


# -- CSV --------------------------------------------------------------------

def _num(v) -> str:
    return repr(float(v))


@dataclass
class PlotTable:
    columns: List[str]
    rows: np.ndarray
    metadata: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float).reshape(-1, len(self.columns))

    def column(self, name) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def to_text(self) -> str:
        lines = [f"#{k}={v}" for k, v in self.metadata.items()]
        lines.append(",".join(self.columns))
        lines += [",".join(_num(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def write(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_text())

    @classmethod
    def read(cls, path) -> "PlotTable":
        meta, header, rows = _read_csv(path)
        return cls(header, np.array(rows, dtype=float).reshape(-1, len(header)), meta)


def _read_csv(path):
    meta: Dict[str, str] = {}
    header = None
    rows = []
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                if header is not None:
                    raise ConfigError(f"{path}:{lineno}: metadata after header")
                key, sep, value = line[1:].partition("=")
                if not sep:
                    raise ConfigError(f"{path}:{lineno}: metadata line needs key=value")
                meta[key.strip()] = value.strip()
            elif header is None:
                header = [h.strip() for h in line.split(",")]
            else:
                parts = line.split(",")
                if len(parts) != len(header):
                    raise ConfigError(f"{path}:{lineno}: expected {len(header)} values, "
                                      f"got {len(parts)}")
                try:
                    rows.append([float(p) for p in parts])
                except ValueError:
                    raise ConfigError(f"{path}:{lineno}: non-numeric value") from None
    if header is None:
        raise ConfigError(f"{path}: missing header line")
    return meta, header, rows


MODE_POINT_HEADER = ["length_offset_m", "frequency_hz"]


def write_mode_points(points: Sequence[ModePoint], path, metadata=None):
    rows = [[p.length_offset, p.frequency] for p in points]
    PlotTable(MODE_POINT_HEADER, rows, dict(metadata or {})).write(path)


def read_mode_points(path):
    """Returns ``(points, metadata)``."""
    meta, header, rows = _read_csv(path)
    if header != MODE_POINT_HEADER:
        raise ConfigError(f"{path}: header must be {','.join(MODE_POINT_HEADER)}")
    try:
        points = [ModePoint(r[0], r[1]) for r in rows]
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not points:
        raise ConfigError(f"{path}: no mode points")
    return points, meta


SCAN_HEADER = ["axis_value", "signal_v"]
SYNC_COLUMN = "sync_offset_s"


def write_scan(scan: ScanRecord, path, metadata=None):
    meta = {"axis": scan.axis}
    if scan.sideband_offset is not None:
        meta["sideband_offset_hz"] = _num(scan.sideband_offset)
    meta.update(scan.metadata)
    meta.update(metadata or {})
    cols = [scan.axis_values, scan.signal]
    header = list(SCAN_HEADER)
    if scan.sync_offset is not None:
        cols.append(scan.sync_offset)
        header.append(SYNC_COLUMN)
    PlotTable(header, np.column_stack(cols), meta).write(path)


def read_scan(path) -> ScanRecord:
    meta, header, rows = _read_csv(path)
    if header not in (SCAN_HEADER, SCAN_HEADER + [SYNC_COLUMN]):
        raise ConfigError(f"{path}: header must be axis_value,signal_v[,sync_offset_s]")
    if not rows:
        raise ConfigError(f"{path}: no samples")
    data = np.array(rows, dtype=float)
    axis = meta.pop("axis", None)
    if axis not in (CAVITY_LENGTH, LASER_FREQUENCY):
        raise ConfigError(f"{path}: metadata 'axis' must be {CAVITY_LENGTH} or {LASER_FREQUENCY}")
    df = meta.pop("sideband_offset_hz", None)
    try:
        df = None if df is None else float(df)
        return ScanRecord(axis, data[:, 0], data[:, 1], df,
                          data[:, 2] if data.shape[1] == 3 else None, meta)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def list_csv(path) -> List[Path]:
    """A single file, or every ``*.csv`` in a directory in sorted order."""
    p = Path(path)
    if p.is_dir():
        files = sorted(q for q in p.iterdir() if q.suffix == ".csv")
        if not files:
            raise ConfigError(f"{path}: no .csv files")
        return files
    if not p.exists():
        raise ConfigError(f"{path}: no such file or directory")
    return [p]


def relpath(p, start) -> str:
    return os.path.relpath(p, start).replace(os.sep, "/")
