"""Gaussian beam propagation, complex q-parameter algebra and vector refraction.

A TEM00 beam is fully described by its waist radius w0 and wavelength; the
complex parameter q(z) = z + j*zR carries both spot size and wavefront
curvature and transforms through an optical system as q' = (A q + B)/(C q + D).
All functions here are pure and operate on immutable value types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateTransform, TotalInternalReflection


@dataclass(frozen=True)
class GaussianBeam:
    """Source beam: waist radius w0 [m], wavelength [m], optical power [W]."""

    waist_radius: float
    wavelength: float
    power: float = 0.0

    def __post_init__(self):
        if self.waist_radius <= 0.0:
            raise ValueError("waist radius must be positive")
        if self.wavelength <= 0.0:
            raise ValueError("wavelength must be positive")
        if self.power < 0.0:
            raise ValueError("power must be nonnegative")

    @property
    def rayleigh_range(self) -> float:
        return math.pi * self.waist_radius**2 / self.wavelength


@dataclass(frozen=True)
class ComplexQ:
    """q-parameter split into axial offset from the waist and Rayleigh range."""

    axial_offset: float
    rayleigh_range: float

    def __post_init__(self):
        if self.rayleigh_range <= 0.0:
            raise ValueError("physical beams need a positive Rayleigh range")

    @property
    def value(self) -> complex:
        return complex(self.axial_offset, self.rayleigh_range)

    @classmethod
    def from_complex(cls, q: complex) -> "ComplexQ":
        return cls(q.real, q.imag)


@dataclass(frozen=True)
class LensSpec:
    """Plano-convex lens: flat entry face, spherical exit face.

    ``center_thickness`` is measured on the optical axis and must be at
    least the sag of the convex cap so the edge thickness is nonnegative.
    """

    diameter: float
    curvature_radius: float
    center_thickness: float
    refractive_index: float

    def __post_init__(self):
        if self.diameter <= 0.0:
            raise ValueError("lens diameter must be positive")
        if self.diameter / 2.0 > self.curvature_radius:
            raise ValueError("convex surface cannot span the aperture: L/2 > R")
        if self.refractive_index <= 1.0:
            raise ValueError("lens index must exceed 1")
        if self.center_thickness < self.sag:
            raise ValueError("center thickness below the sag of the convex cap")

    @property
    def sag(self) -> float:
        # stable for curvature_radius == inf (flat slab limit)
        half = self.diameter / 2.0
        r = self.curvature_radius
        if math.isinf(r):
            return 0.0
        return half**2 / (r + math.sqrt(r**2 - half**2))

    @property
    def focal_length(self) -> float:
        """Effective focal length from the lensmaker's equation, R/(n-1)."""
        return self.curvature_radius / (self.refractive_index - 1.0)


@dataclass(frozen=True)
class TransformedBeam:
    """Beam image after the lens.

    ``waist_offset`` is Re{q'} at the exit surface: the axial position of
    the exit plane measured from the transformed waist.  A positive value
    therefore places the (virtual) waist upstream of the exit face, i.e.
    behind the lens, which is the operating regime of this design.
    """

    waist_radius: float
    rayleigh_range: float
    waist_offset: float
    wavelength: float
    direction: tuple[float, float, float] = (0.0, 0.0, 1.0)
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.waist_radius <= 0.0 or self.rayleigh_range <= 0.0:
            raise ValueError("transformed beam must have positive waist and range")

    def spot_radius(self, z):
        """e^-2 intensity radius at axial distance z from the waist."""
        return self.waist_radius * np.sqrt(1.0 + (np.asarray(z) / self.rayleigh_range) ** 2)


def spot_radius(beam: GaussianBeam, z):
    """Beam spot radius w(z) = w0 sqrt(1 + (z/zR)^2); even in z."""
    return beam.waist_radius * np.sqrt(1.0 + (np.asarray(z) / beam.rayleigh_range) ** 2)


def beam_intensity(beam: GaussianBeam, r, z):
    """Irradiance [W/m^2] at radial offset r and axial distance z from the waist."""
    w = spot_radius(beam, z)
    return 2.0 * beam.power / (math.pi * w**2) * np.exp(-2.0 * np.asarray(r) ** 2 / w**2)


def divergence_half_angle(beam: GaussianBeam) -> float:
    """Far-field half-angle, lambda / (pi w0)."""
    return beam.wavelength / (math.pi * beam.waist_radius)


def wavefront_curvature(beam: GaussianBeam, z: float) -> float:
    """Wavefront radius of curvature R(z) = z (1 + (zR/z)^2); infinite at the waist."""
    if z == 0.0:
        return math.inf
    return z * (1.0 + (beam.rayleigh_range / z) ** 2)


def q_at(beam: GaussianBeam, z: float) -> ComplexQ:
    return ComplexQ(z, beam.rayleigh_range)


def refract_masked(v1, n, mu):
    """Vector-form Snell refraction; batched, flags rays past critical angle.

    v2 = sqrt(1 - mu^2 (1 - (n.v1)^2)) n + mu (v1 - (n.v1) n), with
    mu = n1/n2.  Both inputs must be unit vectors with n.v1 >= 0 (normal
    taken on the transmission side).  Returns (v2, ok) where ok is False
    where total internal reflection occurs; those rows of v2 are zero.
    """
    v1 = np.asarray(v1, dtype=float)
    n = np.asarray(n, dtype=float)
    mu = np.asarray(mu, dtype=float)
    cos_inc = np.sum(n * v1, axis=-1)
    radicand = 1.0 - mu**2 * (1.0 - cos_inc**2)
    ok = radicand >= 0.0
    cos_out = np.sqrt(np.where(ok, radicand, 0.0))
    v2 = cos_out[..., None] * n + mu[..., None] * (v1 - cos_inc[..., None] * n)
    return np.where(ok[..., None], v2, 0.0), ok


def refract(v1, n, mu):
    """Refraction of unit vector(s) v1 at a surface with unit normal n.

    Raises TotalInternalReflection if any input lies past the critical
    angle.  The result is exactly unit-norm for unit-norm inputs.
    """
    v2, ok = refract_masked(v1, n, mu)
    if not np.all(ok):
        raise TotalInternalReflection(
            f"mu={mu}: incidence past the critical angle"
        )
    return v2


def abcd_plano_convex(lens: LensSpec, traversal_thickness: float):
    """Ray-transfer entries for flat entry, glass path tau, spherical exit.

    A = 1, B = tau/n, C = (1-n)/R, D = 1 + (tau/R)(1/n - 1).
    """
    n = lens.refractive_index
    r = lens.curvature_radius
    a = 1.0
    b = traversal_thickness / n
    c = 0.0 if math.isinf(r) else (1.0 - n) / r
    d = 1.0 if math.isinf(r) else 1.0 + (traversal_thickness / r) * (1.0 / n - 1.0)
    return a, b, c, d


def transform_through_lens(
    beam: GaussianBeam,
    lens: LensSpec,
    source_distance: float,
    traversal_thickness: float,
) -> TransformedBeam:
    """Image a beam whose waist sits ``source_distance`` before the flat face.

    Applies q' = (A q + B)/(C q + D) with q = source_distance + j*zR and
    returns the transformed waist radius, Rayleigh range and the waist
    offset Re{q'} at the exit surface.
    """
    if source_distance <= 0.0:
        raise ValueError("source distance must be positive")
    if not 0.0 < traversal_thickness <= lens.center_thickness:
        raise ValueError("traversal thickness must lie in (0, center thickness]")
    a, b, c, d = abcd_plano_convex(lens, traversal_thickness)
    q = complex(source_distance, beam.rayleigh_range)
    den = c * q + d
    if abs(den) < 1e-15:
        raise DegenerateTransform("beam waist imaged at infinity")
    q_out = (a * q + b) / den
    rayleigh = q_out.imag
    waist = math.sqrt(beam.wavelength * rayleigh / math.pi)
    return TransformedBeam(
        waist_radius=waist,
        rayleigh_range=rayleigh,
        waist_offset=q_out.real,
        wavelength=beam.wavelength,
    )
