"""Hybrid fiber cavities with a diamond membrane: mode model, loss budget,
emitter coupling and scan analysis."""

__version__ = "0.1.0"

from .errors import (ConfigError, FitError, FitRejected, InvalidGeometry, PeaksUnresolved,
                     PeriodNotFound, UnstableCavity, ZeroSlope)
from .modes import (SPEED_OF_LIGHT, CavityGeometry, ResonantMode, air_character,
                    air_character_curve, beam_waist_and_mode_volume, dispersion_curves,
                    frequency_slope, fsr, mirror_spot_radius, mode, nearest_mode,
                    resonance_approx, resonance_exact, slope_extrema, tune_to_resonance)
from .losses import (LossBudget, MirrorSpec, SurfaceSpec, bare_finesse, calibrate_aperture,
                     clipping_loss, effective_finesse, finesse_from_loss, finesse_vs_character,
                     interface_scattering_loss, loss_from_finesse, plane_mirror_penalty)
from .emitter import (EmissionResult, EmitterSpec, VibrationSpec, cavity_purcell_factor,
                      detuned_purcell, emission_on_resonance, entanglement_rate_gain,
                      fwhm_to_sigma, length_linewidth, purcell_factor, quality_factor,
                      sigma_to_fwhm, vibration_averaged_emission)
from .scans import (BroadeningFit, GeometryFit, GeometrySolution, LinewidthFit, ModePoint,
                    ScanRecord, SyncBin, bin_by_sync, displacement_from_broadening,
                    finesse_from_linewidth, fit_geometry, fit_linewidth_sidebanded,
                    fit_vibration_broadening, with_displacement)
