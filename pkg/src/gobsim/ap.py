"""Double-tier access point: a 3x3 array of tilted 5x5 VCSEL-array transmitters.

Each transmitter element holds a square VCSEL grid behind one plano-convex
lens; the lens fans the 25 beams out, and per-element Euler tilts aim the
nine fans at complementary regions of the receiver plane.  This module
builds the full set of world-frame beams and evaluates the spatial
irradiance they produce on the plane z = 0 (the access point sits near
z = height).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .beams import GaussianBeam, LensSpec, TransformedBeam, transform_through_lens
from .errors import IndexOutOfRange

# Per-element tilt signs (alpha; beta) and lateral offset signs (x'; y'),
# one column per transmitter element 1..9.  The middle element (column 5)
# is untilted and centered.
TILT_SIGNS = np.array(
    [
        [-1, -1, -1, 0, 0, 0, 1, 1, 1],
        [-1, 0, 1, 1, 0, -1, -1, 0, 1],
    ],
    dtype=float,
)
OFFSET_SIGNS = np.array(
    [
        [1, 0, -1, 1, 0, -1, 1, 0, -1],
        [1, 1, 1, 0, 0, 0, -1, -1, -1],
    ],
    dtype=float,
)


@dataclass(frozen=True)
class ApConfig:
    """Geometry and source parameters of the access point."""

    pitch: float  # VCSEL pitch within an array [m]
    array_to_lens: float  # VCSEL plane to flat lens face [m]
    element_spacing: float  # center-to-center distance of adjacent elements [m]
    tilt: float  # per-element tilt magnitude [rad]
    height: float  # vertical AP to receiver-plane separation [m]
    lens: LensSpec
    source: GaussianBeam
    elements_per_side: int = 3
    vcsels_per_side: int = 5

    def __post_init__(self):
        if self.pitch <= 0.0 or self.height <= 0.0:
            raise ValueError("pitch and height must be positive")
        if not 0.0 <= self.tilt < math.pi / 2.0:
            raise ValueError("tilt must lie in [0, pi/2)")
        if self.elements_per_side != 3 or self.vcsels_per_side != 5:
            raise ValueError("this design uses a 3x3 grid of 5x5 arrays")

    @property
    def num_elements(self) -> int:
        return self.elements_per_side**2

    @property
    def vcsels_per_element(self) -> int:
        return self.vcsels_per_side**2

    @property
    def num_beams(self) -> int:
        return self.num_elements * self.vcsels_per_element

    @property
    def mount_depth(self) -> float:
        """Axial depth of an element, VCSEL plane to lens vertex."""
        return self.array_to_lens + self.lens.center_thickness


@dataclass(frozen=True)
class BeamRecord:
    """One of the 225 network beams, in world coordinates."""

    global_index: int  # 1..225
    element_index: int  # 1..9
    local_index: int  # 1..25
    origin: tuple[float, float, float]  # element position q_v [m]
    direction: tuple[float, float, float]  # unit vector, z component < 0
    transformed: TransformedBeam


def vcsel_local_position(i: int, pitch: float) -> tuple[float, float]:
    """Coordinates of the i-th VCSEL (1..25) on its array, row-major from top-left."""
    if not 1 <= i <= 25:
        raise IndexOutOfRange(f"VCSEL index {i} outside 1..25")
    m = math.ceil(i / 5)
    n = i - 5 * (m - 1)
    return ((-3 + n) * pitch, (3 - m) * pitch)


def local_refracted_direction(i: int, cfg: ApConfig) -> np.ndarray:
    """Unit propagation vector of the i-th beam after the convex lens face.

    The beam leaves its VCSEL parallel to the lens axis, enters the flat
    face at normal incidence and is bent only at the spherical face.  With
    q = [sqrt(R^2 - n^2 r^2) - n sqrt(R^2 - r^2)] / R^2 the exit direction is
    (q x, q y, n + q sqrt(R^2 - r^2)), which is exactly unit-norm.
    """
    x, y = vcsel_local_position(i, cfg.pitch)
    r2 = x * x + y * y
    n = cfg.lens.refractive_index
    rad = cfg.lens.curvature_radius
    if math.sqrt(r2) >= rad / n:
        from .errors import TotalInternalReflection

        raise TotalInternalReflection(
            f"VCSEL {i} at radius {math.sqrt(r2):.4g} m past the critical radius R/n"
        )
    axial = math.sqrt(rad**2 - r2)
    q = (math.sqrt(rad**2 - n**2 * r2) - n * axial) / rad**2
    return np.array([q * x, q * y, n + q * axial])


def rotation_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def element_tilt_angles(v: int, tilt: float) -> tuple[float, float]:
    """(alpha_v, beta_v) for element v in 1..9."""
    if not 1 <= v <= 9:
        raise IndexOutOfRange(f"element index {v} outside 1..9")
    return (tilt * TILT_SIGNS[0, v - 1], tilt * TILT_SIGNS[1, v - 1])


def element_rotation(v: int, tilt: float) -> np.ndarray:
    """World rotation of element v: Ry(pi + beta_v) Rx(alpha_v).

    The pi term flips the element downward so local +z (out of the lens)
    maps onto world -z for the untilted middle element.
    """
    alpha, beta = element_tilt_angles(v, tilt)
    return rotation_y(math.pi + beta) @ rotation_x(alpha)


def element_position(v: int, cfg: ApConfig) -> np.ndarray:
    """World coordinates q_v of the center of element v's VCSEL plane."""
    alpha, beta = element_tilt_angles(v, cfg.tilt)
    xo = cfg.element_spacing * OFFSET_SIGNS[0, v - 1]
    yo = cfg.element_spacing * OFFSET_SIGNS[1, v - 1]
    dc = cfg.mount_depth
    return np.array(
        [
            -xo - dc * math.sin(alpha) * math.cos(beta),
            yo - dc * math.sin(alpha),
            cfg.height + dc * (1.0 - math.cos(alpha) * math.cos(beta)),
        ]
    )


def traversal_thickness(i: int, cfg: ApConfig) -> float:
    """Glass path length of beam i's axis: sqrt(R^2 - r^2) + tau_c - R."""
    x, y = vcsel_local_position(i, cfg.pitch)
    rad = cfg.lens.curvature_radius
    if math.isinf(rad):
        return cfg.lens.center_thickness
    return math.sqrt(rad**2 - x * x - y * y) + cfg.lens.center_thickness - rad


@dataclass
class BeamSet:
    """All beams of one access point, with vectorized views.

    Immutable by convention; arrays are laid out in global beam order
    (element-major, then VCSEL row-major), 0-based along axis 0.
    """

    config: ApConfig
    records: tuple[BeamRecord, ...]

    @cached_property
    def origins(self) -> np.ndarray:
        return np.array([r.origin for r in self.records])

    @cached_property
    def directions(self) -> np.ndarray:
        return np.array([r.direction for r in self.records])

    @cached_property
    def waist_radii(self) -> np.ndarray:
        return np.array([r.transformed.waist_radius for r in self.records])

    @cached_property
    def rayleigh_ranges(self) -> np.ndarray:
        return np.array([r.transformed.rayleigh_range for r in self.records])

    @cached_property
    def element_indices(self) -> np.ndarray:
        return np.array([r.element_index for r in self.records])

    @cached_property
    def spot_centers(self) -> np.ndarray:
        """(225, 2) intersections of each beam axis with the plane z = 0."""
        t = self.origins[:, 2] / -self.directions[:, 2]
        return self.origins[:, :2] + t[:, None] * self.directions[:, :2]

    def __len__(self) -> int:
        return len(self.records)


def build_beams(cfg: ApConfig) -> BeamSet:
    """Construct the full world-frame beam set of the access point."""
    records = []
    local_dirs = [local_refracted_direction(i, cfg) for i in range(1, 26)]
    transforms = [
        transform_through_lens(cfg.source, cfg.lens, cfg.array_to_lens, traversal_thickness(i, cfg))
        for i in range(1, 26)
    ]
    for v in range(1, cfg.num_elements + 1):
        rot = element_rotation(v, cfg.tilt)
        qv = element_position(v, cfg)
        for i in range(1, cfg.vcsels_per_element + 1):
            j = 25 * (v - 1) + i
            direction = rot @ local_dirs[i - 1]
            records.append(
                BeamRecord(
                    global_index=j,
                    element_index=v,
                    local_index=i,
                    origin=tuple(qv),
                    direction=tuple(direction),
                    transformed=transforms[i - 1],
                )
            )
    return BeamSet(config=cfg, records=tuple(records))


def per_beam_irradiance(beams: BeamSet, xy: np.ndarray, power: float) -> np.ndarray:
    """Irradiance of every beam at points on the receiver plane.

    ``xy`` has shape (P, 2); the result has shape (P, len(beams)).  For a
    point p the beam range is measured from the element position q_v, the
    radiance angle phi from the beam axis, and the local spot radius is
    evaluated at the axial distance d*cos(phi):

        I = 2 P / (pi w'^2) * exp(-2 d^2 sin^2(phi) / w'^2)
    """
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    pts = np.concatenate([xy, np.zeros((len(xy), 1))], axis=1)
    dvec = pts[:, None, :] - beams.origins[None, :, :]  # (P, B, 3)
    dist = np.linalg.norm(dvec, axis=2)
    axial = np.einsum("pbk,bk->pb", dvec, beams.directions)
    trans2 = np.maximum(dist**2 - axial**2, 0.0)  # d^2 sin^2(phi)
    w2 = beams.waist_radii[None, :] ** 2 * (
        1.0 + (axial / beams.rayleigh_ranges[None, :]) ** 2
    )
    return 2.0 * power / (math.pi * w2) * np.exp(-2.0 * trans2 / w2)


def beam_intensity_at(beam: BeamRecord, point, power: float) -> float:
    """Irradiance of a single beam at a world point (scalar form)."""
    p = np.asarray(point, dtype=float)
    dvec = p - np.asarray(beam.origin)
    dist = float(np.linalg.norm(dvec))
    axial = float(dvec @ np.asarray(beam.direction))
    trans2 = max(dist**2 - axial**2, 0.0)
    w2 = beam.transformed.waist_radius**2 * (
        1.0 + (axial / beam.transformed.rayleigh_range) ** 2
    )
    return 2.0 * power / (math.pi * w2) * math.exp(-2.0 * trans2 / w2)


@dataclass
class GridField:
    """Scalar field sampled at the centers of a regular cell grid.

    ``values[iy, ix]`` corresponds to (x[ix], y[iy]); both axes ascend.
    """

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    kind: str = "field"
    units: str = ""

    @property
    def extent(self) -> tuple[float, float, float, float]:
        dx = self.x[1] - self.x[0] if len(self.x) > 1 else 0.0
        dy = self.y[1] - self.y[0] if len(self.y) > 1 else 0.0
        return (
            float(self.x[0] - dx / 2),
            float(self.x[-1] + dx / 2),
            float(self.y[0] - dy / 2),
            float(self.y[-1] + dy / 2),
        )

    def same_grid(self, other: "GridField") -> bool:
        return (
            self.values.shape == other.values.shape
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
        )


def grid_axes(extent, resolution: int | tuple[int, int]):
    """Cell-center coordinate arrays for ``resolution`` cells per axis."""
    if isinstance(resolution, int):
        nx = ny = resolution
    else:
        nx, ny = resolution
    if nx < 2 or ny < 2:
        raise ValueError("resolution must be at least 2 cells per axis")
    xmin, xmax, ymin, ymax = extent
    xe = np.linspace(xmin, xmax, nx + 1)
    ye = np.linspace(ymin, ymax, ny + 1)
    return 0.5 * (xe[:-1] + xe[1:]), 0.5 * (ye[:-1] + ye[1:])


def total_intensity_field(
    beams: BeamSet,
    extent,
    resolution: int | tuple[int, int],
    power: float | None = None,
    elements: list[int] | None = None,
    chunk_rows: int = 16,
) -> GridField:
    """Total irradiance of the access point on the receiver plane.

    ``elements`` optionally restricts the sum to a subset of transmitter
    elements (1-based), which reproduces single-element design studies.
    """
    pt = beams.config.source.power if power is None else power
    x, y = grid_axes(extent, resolution)
    if elements is None:
        mask = slice(None)
        sub = beams
    else:
        keep = np.isin(beams.element_indices, elements)
        sub = BeamSet(
            config=beams.config,
            records=tuple(r for r, k in zip(beams.records, keep) if k),
        )
    values = np.empty((len(y), len(x)))
    for start in range(0, len(y), chunk_rows):
        ys = y[start : start + chunk_rows]
        gx, gy = np.meshgrid(x, ys)
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        contrib = per_beam_irradiance(sub, pts, pt).sum(axis=1)
        values[start : start + chunk_rows] = contrib.reshape(len(ys), len(x))
    if not np.all(np.isfinite(values)) or np.any(values < 0.0):
        raise ValueError("intensity field must be finite and nonnegative")
    return GridField(x=x, y=y, values=values, kind="intensity", units="W/m2")
