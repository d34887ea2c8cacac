"""Independent Monte Carlo ray tracer used to validate the analytic fields.

Rays are sampled from each VCSEL's Gaussian mode (position and angle
spectra at the waist), traced with full vector Snell refraction at both
lens faces — including the flat entry face, which the analytic model
treats as non-deviating for the beam axis — and binned where they land on
the receiver plane.  Agreement between the binned estimate and the
closed-form intensity field quantifies the analytic approximations.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ap import ApConfig, BeamSet, GridField, grid_axes, vcsel_local_position
from .beams import GaussianBeam, LensSpec, divergence_half_angle, refract_masked
from .errors import GridMismatch

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RayBatch:
    """Sampled rays of one source: local origins, unit directions, per-ray weight."""

    origins: np.ndarray  # (N, 3), waist plane at z = 0
    directions: np.ndarray  # (N, 3), unit, +z
    weight: float  # identical weight per ray (power fraction)


def sample_rays(beam: GaussianBeam, count: int, rng: np.random.Generator) -> RayBatch:
    """Draw rays from the beam's waist: Gaussian position and angle spectra.

    The irradiance profile exp(-2 r^2 / w0^2) corresponds to a per-axis
    position std of w0/2; the far-field spectrum gives a per-axis angular
    std of half the divergence angle (small-angle).  Position and angle
    are independent at a true waist.
    """
    if count < 1:
        raise ValueError("need at least one ray")
    pos_std = beam.waist_radius / 2.0
    ang_std = divergence_half_angle(beam) / 2.0
    xy = rng.normal(0.0, pos_std, size=(count, 2))
    angles = rng.normal(0.0, ang_std, size=(count, 2))
    origins = np.column_stack([xy, np.zeros(count)])
    directions = np.column_stack([angles, np.ones(count)])
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return RayBatch(origins=origins, directions=directions, weight=1.0 / count)


def trace_rays(
    batch: RayBatch,
    vcsel_xy: tuple[float, float],
    lens: LensSpec,
    array_to_lens: float,
    rotation: np.ndarray,
    element_origin: np.ndarray,
):
    """Trace a ray batch from one VCSEL to the receiver plane z = 0.

    Pipeline: refract at the flat face (air to glass), intersect the
    spherical exit face, refract (glass to air), map to world coordinates
    with the element pose, intersect the plane.  Returns (hits, landed)
    where ``hits`` holds the (x, y) landing points of rays with
    ``landed`` True; all other rays escaped (aperture clip, total internal
    reflection, or upward exit).
    """
    n_lens = lens.refractive_index
    half_aperture = lens.diameter / 2.0
    origins = batch.origins + np.array([vcsel_xy[0], vcsel_xy[1], 0.0])
    dirs = batch.directions
    alive = np.ones(len(origins), dtype=bool)

    # flat face plane z = array_to_lens
    t1 = (array_to_lens - origins[:, 2]) / dirs[:, 2]
    p1 = origins + t1[:, None] * dirs
    alive &= np.hypot(p1[:, 0], p1[:, 1]) <= half_aperture
    d1, ok = refract_masked(dirs, np.array([0.0, 0.0, 1.0]), 1.0 / n_lens)
    alive &= ok

    # spherical exit face: center on the axis, apex at array_to_lens + tau_c
    center = np.array([0.0, 0.0, array_to_lens + lens.center_thickness - lens.curvature_radius])
    rel = p1 - center
    b = np.einsum("nk,nk->n", rel, d1)
    c = np.einsum("nk,nk->n", rel, rel) - lens.curvature_radius**2
    disc = b**2 - c
    alive &= disc >= 0.0
    t2 = -b + np.sqrt(np.maximum(disc, 0.0))
    alive &= t2 > 0.0
    p2 = p1 + t2[:, None] * d1
    alive &= np.hypot(p2[:, 0], p2[:, 1]) <= half_aperture
    normals = (p2 - center) / lens.curvature_radius
    d2, ok = refract_masked(d1, normals, n_lens)
    alive &= ok

    # element pose: world = R p_local + q_v, then intersect z = 0
    pw = p2 @ rotation.T + element_origin
    dw = d2 @ rotation.T
    alive &= dw[:, 2] < 0.0
    t3 = np.where(alive, -pw[:, 2] / np.where(dw[:, 2] != 0.0, dw[:, 2], -1.0), 0.0)
    hits = pw[:, :2] + t3[:, None] * dw[:, :2]
    return hits[alive], alive


@dataclass
class OracleField:
    """Binned ray-trace estimate of the receiver-plane irradiance."""

    field: GridField
    counts: np.ndarray  # rays landed per cell
    beam_centroids: np.ndarray  # (B, 2) mean landing point per beam (NaN if none)
    beam_landed: np.ndarray  # (B,) rays landed per beam
    total_rays: int
    escaped_rays: int

    @property
    def escaped_fraction(self) -> float:
        return self.escaped_rays / self.total_rays if self.total_rays else 0.0


def trace_field(
    beams: BeamSet,
    rays_per_vcsel: int,
    extent,
    resolution: int | tuple[int, int],
    seed: int = 0,
    power: float | None = None,
    threads: int = 1,
) -> OracleField:
    """Trace every beam of the access point and bin hits on the plane.

    Each beam draws from its own counter-based stream keyed by
    (seed, global beam index), so the result is independent of execution
    order and ``threads``; per-beam histograms are reduced in beam order.
    """
    cfg = beams.config
    pt = cfg.source.power if power is None else power
    x, y = grid_axes(extent, resolution)
    xmin, xmax, ymin, ymax = (
        extent[0],
        extent[1],
        extent[2],
        extent[3],
    )
    xedges = np.linspace(xmin, xmax, len(x) + 1)
    yedges = np.linspace(ymin, ymax, len(y) + 1)
    cell_area = (xedges[1] - xedges[0]) * (yedges[1] - yedges[0])

    rotations = {}
    for record in beams.records:
        if record.element_index not in rotations:
            from .ap import element_rotation

            rotations[record.element_index] = element_rotation(
                record.element_index, cfg.tilt
            )

    def trace_one(b: int):
        record = beams.records[b]
        rng = np.random.Generator(
            np.random.Philox(key=[seed & _MASK64, record.global_index])
        )
        batch = sample_rays(cfg.source, rays_per_vcsel, rng)
        hits, alive = trace_rays(
            batch,
            vcsel_local_position(record.local_index, cfg.pitch),
            cfg.lens,
            cfg.array_to_lens,
            rotations[record.element_index],
            np.asarray(record.origin),
        )
        hist, _, _ = np.histogram2d(hits[:, 0], hits[:, 1], bins=[xedges, yedges])
        landed = int(alive.sum())
        centroid = hits.mean(axis=0) if landed else np.array([np.nan, np.nan])
        return hist.T, centroid, landed

    indices = range(len(beams))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(trace_one, indices))
    else:
        results = [trace_one(b) for b in indices]

    counts = np.zeros((len(y), len(x)))
    centroids = np.empty((len(beams), 2))
    landed = np.zeros(len(beams), dtype=int)
    for b, (hist, centroid, n_landed) in enumerate(results):
        counts += hist
        centroids[b] = centroid
        landed[b] = n_landed
    total = rays_per_vcsel * len(beams)
    ray_power = pt / rays_per_vcsel
    values = counts * ray_power / cell_area
    field = GridField(x=x, y=y, values=values, kind="intensity", units="W/m2")
    return OracleField(
        field=field,
        counts=counts,
        beam_centroids=centroids,
        beam_landed=landed,
        total_rays=total,
        escaped_rays=total - int(landed.sum()),
    )


@dataclass(frozen=True)
class FieldComparison:
    """Agreement metrics between the analytic field and the ray oracle."""

    nrmse: float  # RMS difference of unit-peak fields over significant cells
    cells_compared: int
    centroid_offsets: np.ndarray | None  # (B,) metres, analytic spot vs ray centroid
    escaped_fraction: float


def compare_fields(
    analytic: GridField, oracle: OracleField, beams: BeamSet | None = None
) -> FieldComparison:
    """Normalized RMSE over cells where the analytic field exceeds 1% of peak.

    Both fields are normalized to unit maximum first.  When ``beams`` is
    given, per-spot centroid offsets (analytic beam-axis intersections vs
    ray centroids) are included.
    """
    if not analytic.same_grid(oracle.field):
        raise GridMismatch("analytic and oracle fields use different grids")
    a = analytic.values / analytic.values.max()
    o = oracle.field.values / oracle.field.values.max()
    mask = a > 0.01
    nrmse = float(np.sqrt(np.mean((a[mask] - o[mask]) ** 2)))
    offsets = None
    if beams is not None:
        offsets = np.linalg.norm(beams.spot_centers - oracle.beam_centroids, axis=1)
    return FieldComparison(
        nrmse=nrmse,
        cells_compared=int(mask.sum()),
        centroid_offsets=offsets,
        escaped_fraction=oracle.escaped_fraction,
    )
