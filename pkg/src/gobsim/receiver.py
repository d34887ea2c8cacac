"""Seven-element angle-diversity receiver built from dielectric CPCs.

Six elements are tilted at twice the CPC acceptance angle around a
vertical center element, giving a half-angle field of view of three times
the acceptance angle.  Each element concentrates onto a small array of
PIN photodiodes whose outputs are combined with equal gain, so an element
behaves as one detector of effective area N_PD * A_PD * G_CPC.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ap import BeamRecord, BeamSet, per_beam_irradiance
from .errors import EmptyCluster, IndexOutOfRange

BOLTZMANN = 1.380649e-23  # J/K, exact
ELEMENTARY_CHARGE = 1.602176634e-19  # C, exact

NUM_ELEMENTS = 7


@dataclass(frozen=True)
class AdrSpec:
    """Angle-diversity receiver parameters (one CPC + PD array per element)."""

    acceptance_angle: float  # CPC acceptance half-angle [rad]
    refractive_index: float  # CPC dielectric index
    num_pd: int  # photodiodes per element array
    pd_area: float  # single photodiode area [m^2]
    fill_factor: float  # PD array fill factor in (0, 1]
    responsivity: float  # PD responsivity [A/W]

    def __post_init__(self):
        if not 0.0 < self.acceptance_angle < math.pi / 2.0:
            raise ValueError("acceptance angle must lie in (0, pi/2)")
        if not 0.0 < self.fill_factor <= 1.0:
            raise ValueError("fill factor must lie in (0, 1]")
        if self.num_pd < 1 or self.pd_area <= 0.0 or self.responsivity <= 0.0:
            raise ValueError("PD count, area and responsivity must be positive")
        if self.refractive_index < 1.0:
            raise ValueError("CPC index must be at least 1")

    @classmethod
    def from_fov(cls, fov: float, **kwargs) -> "AdrSpec":
        """Construct from the overall half-angle field of view (= 3 theta_cpc)."""
        return cls(acceptance_angle=fov / 3.0, **kwargs)

    @property
    def field_of_view(self) -> float:
        return 3.0 * self.acceptance_angle

    @property
    def concentration_gain(self) -> float:
        """Etendue-limited CPC gain, n^2 / sin^2(theta)."""
        return self.refractive_index**2 / math.sin(self.acceptance_angle) ** 2

    @property
    def exit_area(self) -> float:
        return self.num_pd * self.pd_area / self.fill_factor

    @property
    def entrance_area(self) -> float:
        return self.concentration_gain * self.exit_area


def element_normal(j: int, acceptance_angle: float) -> np.ndarray:
    """Unit normal of receiver element j (1..7); element 7 points straight up."""
    if not 1 <= j <= NUM_ELEMENTS:
        raise IndexOutOfRange(f"receiver element {j} outside 1..7")
    if j == NUM_ELEMENTS:
        return np.array([0.0, 0.0, 1.0])
    elev = 2.0 * acceptance_angle
    azim = (j - 1) * math.pi / 3.0
    return np.array(
        [math.sin(elev) * math.cos(azim), math.sin(elev) * math.sin(azim), math.cos(elev)]
    )


def element_normals(acceptance_angle: float) -> np.ndarray:
    """(7, 3) stack of all element normals."""
    return np.array([element_normal(j, acceptance_angle) for j in range(1, NUM_ELEMENTS + 1)])


def incidence_cosines(beams: BeamSet, adr: AdrSpec) -> np.ndarray:
    """(7, 225) cos(psi) between each element normal and each beam's arrival.

    The arrival direction is the reversed propagation vector (a downward
    beam arrives from above).  Entries with psi outside [0, theta_cpc] are
    zeroed: the CPC rejects rays beyond its acceptance angle.  This uses
    the beam direction, not the exact element-to-source geometry.
    """
    normals = element_normals(adr.acceptance_angle)
    cos_psi = normals @ (-beams.directions.T)
    accept = cos_psi >= math.cos(adr.acceptance_angle)
    return np.where(accept, cos_psi, 0.0)


def gain_tensor(beams: BeamSet, xy: np.ndarray, adr: AdrSpec) -> np.ndarray:
    """DC channel gains H[k, j, i] for UEs at ``xy`` (shape (K, 2)).

    H = 2 N_PD A_PD G_CPC / (pi w'^2) * exp(-2 d^2 sin^2 phi / w'^2)
        * cos(psi) * [psi <= theta_cpc]

    i.e. the beam irradiance at the UE (per unit transmit power) collected
    over the element's effective area and foreshortened by the incidence
    angle.  The gains are dimensionless: received power = H * P_t.
    """
    irr = per_beam_irradiance(beams, xy, 1.0)  # (K, B), irradiance per watt
    collect = adr.num_pd * adr.pd_area * adr.concentration_gain
    cos_psi = incidence_cosines(beams, adr)  # (7, B)
    return collect * irr[:, None, :] * cos_psi[None, :, :]


def channel_gain(beam: BeamRecord, ue_position, adr: AdrSpec, j: int) -> float:
    """Scalar DC gain between one beam and element j of a UE on z = 0."""
    normal = element_normal(j, adr.acceptance_angle)
    arrival = -np.asarray(beam.direction)
    cos_psi = float(normal @ arrival)
    if cos_psi < math.cos(adr.acceptance_angle):
        return 0.0
    from .ap import beam_intensity_at

    p = np.asarray(ue_position, dtype=float)
    if p.shape == (2,):
        p = np.array([p[0], p[1], 0.0])
    irr = beam_intensity_at(beam, p, 1.0)
    return adr.num_pd * adr.pd_area * adr.concentration_gain * irr * cos_psi


def cluster_gain(gains: np.ndarray, cluster) -> tuple[np.ndarray, float]:
    """Per-element and total gain of a beam cluster for one UE.

    ``gains`` is the (7, 225) slice of the gain tensor for the UE and
    ``cluster`` an iterable of 1-based beam indices.  Returns the 7-vector
    of per-element sums and their total.
    """
    idx = np.asarray(sorted(cluster), dtype=int)
    if idx.size == 0:
        raise EmptyCluster("cluster gain of an empty beam set")
    if idx.min() < 1 or idx.max() > gains.shape[1]:
        raise IndexOutOfRange("beam index outside the gain tensor")
    per_element = gains[:, idx - 1].sum(axis=1)
    return per_element, float(per_element.sum())


@dataclass(frozen=True)
class NoiseSpec:
    """Receiver noise model parameters (all linear units)."""

    temperature: float = 300.0  # K
    load_resistance: float = 50.0  # ohm
    noise_figure: float = 10.0 ** 0.5  # linear (5 dB)
    rin_psd: float = 10.0 ** -15.5  # 1/Hz (-155 dBHz)
    bandwidth: float = 2e9  # Hz

    def __post_init__(self):
        for name in ("temperature", "load_resistance", "noise_figure", "rin_psd", "bandwidth"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")


def noise_psd(cluster_powers: np.ndarray, adr: AdrSpec, noise: NoiseSpec):
    """One-sided noise PSD and variance at a receiver element.

    ``cluster_powers`` holds the optical powers P_kj received from every
    cluster along the last axis.  The PSD combines thermal, shot and laser
    intensity noise:

        S = 4 kB T / R_L * F_n * N_PD  +  2 q sum_u R P_u  +  RIN sum_u (R P_u)^2

    Returns (psd, variance) with variance = psd * bandwidth.
    """
    p = np.asarray(cluster_powers, dtype=float)
    if np.any(p < 0.0):
        raise ValueError("received powers must be nonnegative")
    photo = adr.responsivity * p
    thermal = 4.0 * BOLTZMANN * noise.temperature / noise.load_resistance
    psd = (
        thermal * noise.noise_figure * adr.num_pd
        + 2.0 * ELEMENTARY_CHARGE * photo.sum(axis=-1)
        + noise.rin_psd * (photo**2).sum(axis=-1)
    )
    return psd, psd * noise.bandwidth
