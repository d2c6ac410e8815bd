"""Round-trip loss budgets and finesse.

Every loss item is a round-trip power loss in ppm; items add linearly and the
finesse is ``2 pi / (total * 1e-6)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy.optimize import brentq

from .modes import CavityGeometry, mirror_spot_radius

PPM = 1e-6


@dataclass(frozen=True)
class MirrorSpec:
    transmission: float
    absorption_scatter_loss: float = 0.0

    def __post_init__(self):
        for name in ("transmission", "absorption_scatter_loss"):
            v = getattr(self, name)
            if not 0 <= v < 1e6:
                raise ValueError(f"{name} must be in [0, 1e6) ppm, got {v!r}")

    @property
    def total(self) -> float:
        return self.transmission + self.absorption_scatter_loss


@dataclass(frozen=True)
class SurfaceSpec:
    rms_roughness: float

    def __post_init__(self):
        if not self.rms_roughness >= 0:
            raise ValueError(f"rms roughness must be >= 0, got {self.rms_roughness!r}")


@dataclass(frozen=True)
class LossBudget:
    """Itemised round-trip losses in ppm."""

    items: Tuple[Tuple[str, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "items", tuple((str(k), float(v)) for k, v in self.items))
        for label, loss in self.items:
            if not loss >= 0:
                raise ValueError(f"loss item {label!r} must be >= 0 ppm, got {loss!r}")

    @property
    def total(self) -> float:
        return math.fsum(v for _, v in self.items)

    @property
    def finesse(self) -> float:
        total = self.total
        if total <= 0:
            raise ZeroDivisionError("finesse undefined for a lossless budget")
        return 2 * math.pi / (total * PPM)

    def add(self, label: str, loss: float) -> "LossBudget":
        return LossBudget(self.items + ((label, loss),))

    def as_dict(self):
        return dict(self.items)


def finesse_from_loss(total_ppm: float) -> float:
    if total_ppm <= 0:
        raise ZeroDivisionError("finesse undefined for zero loss")
    return 2 * math.pi / (total_ppm * PPM)


def loss_from_finesse(finesse: float) -> float:
    return 2 * math.pi / finesse / PPM


def bare_finesse(fiber: MirrorSpec, plane: MirrorSpec) -> LossBudget:
    """Loss budget of the empty cavity from the two mirror specifications.

    Raises
    ------
    ZeroDivisionError
        If every item is zero (finesse undefined).
    """
    budget = LossBudget((
        ("fiber_transmission", fiber.transmission),
        ("fiber_loss", fiber.absorption_scatter_loss),
        ("plane_transmission", plane.transmission),
        ("plane_loss", plane.absorption_scatter_loss),
    ))
    budget.finesse  # raises for a lossless budget
    return budget


def interface_scattering_loss(surface: SurfaceSpec, wavelength: float,
                              refractive_index: float) -> float:
    """Scalar roughness loss of the membrane-air interface in ppm.

    Uses the index-contrast scaled phase variance ``((n - 1) 4 pi sigma / lambda)**2``.
    """
    if not wavelength > 0:
        raise ValueError("wavelength must be positive")
    phase = (refractive_index - 1) * 4 * math.pi * surface.rms_roughness / wavelength
    return phase**2 / PPM


def clipping_loss(g: CavityGeometry, nu: float) -> float:
    """Power spilling past the curved-mirror aperture, ppm per round trip.

    ``exp(-2 a**2 / w_m**2)`` with ``w_m`` the Gaussian spot radius on the
    curved mirror. Zero when no aperture is set.
    """
    if g.aperture_radius is None:
        return 0.0
    w_m = mirror_spot_radius(g, nu)
    return math.exp(-2 * g.aperture_radius**2 / w_m**2) / PPM


def calibrate_aperture(base_loss: float, g_plateau: CavityGeometry, g_edge: CavityGeometry,
                       nu: float, factor: float = 2.0) -> float:
    """Aperture radius at which finesse at ``g_edge`` is ``1/factor`` of ``g_plateau``.

    Solves ``base + clip(edge) = factor * (base + clip(plateau))`` for the
    larger of the two roots (apertures wider than the mode).
    """
    w_p = mirror_spot_radius(g_plateau, nu)
    w_e = mirror_spot_radius(g_edge, nu)
    if not w_e > w_p:
        raise ValueError("edge geometry must have the larger spot on the curved mirror")

    def excess(a):
        clip_e = math.exp(-2 * a**2 / w_e**2) / PPM
        clip_p = math.exp(-2 * a**2 / w_p**2) / PPM
        return base_loss + clip_e - factor * (base_loss + clip_p)

    # the excess peaks where d/d(a^2) vanishes, which has a closed form
    u = math.log(factor * w_e**2 / w_p**2) / (1 / w_p**2 - 1 / w_e**2)
    a_peak = math.sqrt(max(u, 0.0) / 2)
    if excess(a_peak) <= 0:
        raise ValueError("no aperture reproduces the requested finesse drop")
    a_hi = a_peak
    while excess(a_hi) > 0:
        a_hi *= 1.5
    return brentq(excess, a_peak, a_hi, xtol=1e-15, rtol=1e-12)


def plane_mirror_penalty(bare: LossBudget, scattering: float, reduction: float = 3.0) -> float:
    """Extra ppm that, together with ``scattering``, divides the bare finesse by ``reduction``."""
    penalty = (reduction - 1.0) * bare.total - scattering
    if penalty < 0:
        raise ValueError("scattering alone already exceeds the requested reduction")
    return penalty


def effective_finesse(bare: LossBudget, scattering: float, character: float,
                      plane_mirror_penalty: float) -> LossBudget:
    """Budget for a hybrid mode of air-like character ``character``.

    Interface scattering and the coating penalty are both weighted by
    ``1 - character``: diamond-like modes have an antinode at the interface,
    air-like modes a node.
    """
    if not 0 <= character <= 1:
        raise ValueError(f"character must be in [0, 1], got {character!r}")
    w = 1.0 - character
    return bare.add("interface_scattering", w * scattering).add(
        "plane_mirror_penalty", w * plane_mirror_penalty)


def finesse_vs_character(bare: LossBudget, scattering: float, plane_mirror_penalty: float,
                         characters) -> np.ndarray:
    return np.array([effective_finesse(bare, scattering, c, plane_mirror_penalty).finesse
                     for c in np.atleast_1d(characters)])
