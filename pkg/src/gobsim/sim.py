"""Monte Carlo campaign engine: user drops, per-drop rates, CDFs and maps.

A drop places K users uniformly on the receiver plane, associates each
with its best cluster, applies the configured multi-access scheme inside
each cluster and produces per-user rates plus network metrics.  Every
drop draws from a counter-based substream keyed by (campaign seed,
density index, drop index), so results are bit-identical regardless of
execution order or worker count, and all layouts/schemes see the same
user positions (common random numbers).
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .ap import BeamSet, GridField, grid_axes
from .clustering import ClusterLayout, UeAssignment, assign_ues, spot_grid_indices, GRID_SIDE
from .mac import MacConfig, NetworkMetrics, network_metrics
from .receiver import AdrSpec, NoiseSpec, gain_tensor, noise_psd

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class DropSpec:
    """One Monte Carlo drop: user count (or area density) in a room."""

    num_ues: int | None = None
    density: float | None = None  # UE per m^2 of floor area
    room: tuple[float, float, float] = (5.0, 5.0, 3.0)
    seed: int = 0

    def __post_init__(self):
        if (self.num_ues is None) == (self.density is None):
            raise ValueError("specify exactly one of num_ues or density")
        if self.room[0] <= 0.0 or self.room[1] <= 0.0:
            raise ValueError("room floor dimensions must be positive")

    @property
    def ue_count(self) -> int:
        if self.num_ues is not None:
            if self.num_ues < 1:
                raise ValueError("need at least one UE")
            return self.num_ues
        k = round(self.density * self.room[0] * self.room[1])
        if k < 1:
            raise ValueError("density too low for a single UE")
        return k


def drop_rng(seed: int, stream: int, drop_index: int) -> np.random.Generator:
    """Counter-based generator for one drop; independent of execution order."""
    word = ((stream & 0xFFFFFFFF) << 32) | (drop_index & 0xFFFFFFFF)
    return np.random.Generator(np.random.Philox(key=[seed & _MASK64, word]))


def sample_drop(spec: DropSpec, drop_index: int = 0, stream: int = 0) -> np.ndarray:
    """K i.i.d. uniform UE positions on the room floor, shape (K, 2)."""
    rng = drop_rng(spec.seed, stream, drop_index)
    k = spec.ue_count
    half = (spec.room[0] / 2.0, spec.room[1] / 2.0)
    return rng.uniform(low=(-half[0], -half[1]), high=half, size=(k, 2))


@dataclass(frozen=True)
class DropResult:
    """Per-user outcome of one drop plus the network summary."""

    serving: np.ndarray  # 0-based cluster index per user
    order: np.ndarray  # 1-based decode position inside the cluster (NOMA order)
    sinr: np.ndarray  # linear SINR per user
    rates: np.ndarray  # bit/s per user
    metrics: NetworkMetrics


class DropEngine:
    """Evaluates drops for a fixed system (beams, receiver, layout, scheme).

    Stateless after construction; safe to reuse across drops and threads.
    """

    def __init__(
        self,
        beams: BeamSet,
        layout: ClusterLayout,
        adr: AdrSpec,
        noise: NoiseSpec,
        mac: MacConfig,
    ):
        self.beams = beams
        self.layout = layout
        self.adr = adr
        self.noise = noise
        self.mac = mac
        self._gamma = mac.noise_scale(adr.responsivity)
        self._zeta = mac.power_normalization

    def _channel(self, positions: np.ndarray):
        gains = gain_tensor(self.beams, positions, self.adr)  # (K, 7, B)
        folded = self.layout.fold_gains(gains)  # (K, 7, U)
        cluster_powers = self.mac.tx_power * folded
        _, variance = noise_psd(cluster_powers, self.adr, self.noise)  # (K, 7)
        return folded, variance

    def evaluate(self, positions: np.ndarray) -> DropResult:
        positions = np.atleast_2d(np.asarray(positions, dtype=float))
        folded, variance = self._channel(positions)
        totals = folded.sum(axis=1)  # (K, U)
        serving = np.argmax(totals, axis=1)
        k = len(positions)
        users = np.arange(k)

        # Ascending-gain decode order inside every cluster, ties by UE id.
        gain_srv = totals[users, serving]
        sort = np.lexsort((users, gain_srv, serving))
        group_start = np.zeros(k, dtype=int)
        if k > 1:
            new_group = np.flatnonzero(np.diff(serving[sort]) != 0) + 1
            starts = np.concatenate([[0], new_group])
        else:
            starts = np.array([0])
        group_of_sorted = np.searchsorted(starts, np.arange(k), side="right") - 1
        rank_sorted = np.arange(k) - starts[group_of_sorted]
        rank = np.empty(k, dtype=int)
        rank[sort] = rank_sorted

        counts = np.bincount(serving, minlength=self.layout.n_clusters)
        size = counts[serving].astype(float)
        active = (counts > 0).astype(float)

        h_srv = folded[users, :, serving]  # (K, 7)
        ici_sq = np.einsum("kju,u->kj", folded**2, active) - h_srv**2
        ici_sq = np.maximum(ici_sq, 0.0)
        gamma, zeta = self._gamma, self._zeta

        if self.mac.scheme == "noma":
            # a_k and sum_{l>k} a_l^2 in closed form from (cluster size, rank)
            amp = np.sqrt((size - rank) / (size * (size + 1) / 2.0))
            residual = (size - rank - 1) * (size - rank) / (size * (size + 1))
            denom = residual[:, None] * h_srv**2 + ici_sq + gamma * variance
            weights = zeta * math.sqrt(gamma) * amp[:, None] * h_srv / denom
            s_all = np.einsum("kj,kju->ku", weights, folded)
            s_srv = (weights * h_srv).sum(axis=1)
            ici = np.einsum("ku,u->k", s_all**2, active) - s_srv**2
            ici = np.maximum(ici, 0.0)
            signal = (amp * s_srv) ** 2
            den = residual * s_srv**2 + ici + gamma * (weights**2 * variance).sum(axis=1)
            sinr = np.where(signal > 0.0, signal / np.where(den > 0.0, den, 1.0), 0.0)
            rates = (
                self.mac.subcarrier_utilization
                * self.mac.bandwidth
                * np.log2(1.0 + sinr / self.mac.snr_gap)
            )
        else:
            bfrac = 1.0 / size
            pfrac = 1.0 / size
            denom = ici_sq + gamma * bfrac[:, None] * variance
            weights = zeta * np.sqrt(gamma * pfrac)[:, None] * h_srv / denom
            s_all = np.einsum("kj,kju->ku", weights, folded)
            s_srv = (weights * h_srv).sum(axis=1)
            ici = np.einsum("ku,u->k", s_all**2, active) - s_srv**2
            ici = np.maximum(ici, 0.0)
            signal = pfrac * s_srv**2
            den = ici + gamma * bfrac * (weights**2 * variance).sum(axis=1)
            sinr = np.where(signal > 0.0, signal / np.where(den > 0.0, den, 1.0), 0.0)
            rates = (
                bfrac
                * self.mac.subcarrier_utilization
                * self.mac.bandwidth
                * np.log2(1.0 + sinr / self.mac.snr_gap)
            )

        return DropResult(
            serving=serving,
            order=rank + 1,
            sinr=sinr,
            rates=rates,
            metrics=network_metrics(rates),
        )


def run_drop(
    positions: np.ndarray,
    beams: BeamSet,
    layout: ClusterLayout,
    adr: AdrSpec,
    noise: NoiseSpec,
    mac: MacConfig,
) -> DropResult:
    """Evaluate one drop end to end (gains, assignment, SINR, rates)."""
    return DropEngine(beams, layout, adr, noise, mac).evaluate(positions)


@dataclass(frozen=True)
class CdfSeries:
    """Empirical CDF: sorted sample values with probabilities i/n."""

    values: np.ndarray
    probabilities: np.ndarray

    @classmethod
    def from_samples(cls, samples) -> "CdfSeries":
        values = np.sort(np.asarray(samples, dtype=float))
        n = len(values)
        return cls(values=values, probabilities=np.arange(1, n + 1) / n)


@dataclass(frozen=True)
class CampaignSpec:
    """Grid of Monte Carlo series: layouts x schemes x densities."""

    drops: int
    layouts: tuple[str, ...]
    schemes: tuple[str, ...]
    densities: tuple[float, ...] = ()
    ue_counts: tuple[int, ...] = ()
    room: tuple[float, float, float] = (5.0, 5.0, 3.0)
    seed: int = 0

    def __post_init__(self):
        if self.drops < 1:
            raise ValueError("need at least one drop")
        if bool(self.densities) == bool(self.ue_counts):
            raise ValueError("specify exactly one of densities or ue_counts")

    def drop_specs(self) -> list[DropSpec]:
        if self.densities:
            return [
                DropSpec(density=rho, room=self.room, seed=self.seed)
                for rho in self.densities
            ]
        return [
            DropSpec(num_ues=k, room=self.room, seed=self.seed) for k in self.ue_counts
        ]


@dataclass
class SeriesResult:
    """All drops of one (layout, scheme, density) series."""

    layout: str
    scheme: str
    density: float
    ue_count: int
    sum_rates: np.ndarray
    jains: np.ndarray

    @property
    def mean_sum_rate(self) -> float:
        return float(self.sum_rates.mean())

    @property
    def mean_jain(self) -> float:
        return float(self.jains.mean())

    def stderr_sum_rate(self) -> float:
        n = len(self.sum_rates)
        return float(self.sum_rates.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0

    def stderr_jain(self) -> float:
        n = len(self.jains)
        return float(self.jains.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0

    def cdf_sum_rate(self) -> CdfSeries:
        return CdfSeries.from_samples(self.sum_rates)

    def cdf_jain(self) -> CdfSeries:
        return CdfSeries.from_samples(self.jains)


@dataclass
class CampaignResult:
    spec: CampaignSpec
    series: list[SeriesResult]

    def get(self, layout: str, scheme: str, density: float) -> SeriesResult:
        for s in self.series:
            if s.layout == layout and s.scheme == scheme and math.isclose(s.density, density):
                return s
        raise KeyError((layout, scheme, density))


def run_campaign(
    spec: CampaignSpec,
    beams: BeamSet,
    layouts: dict[str, ClusterLayout],
    adr: AdrSpec,
    noise: NoiseSpec,
    mac: MacConfig,
    threads: int = 1,
) -> CampaignResult:
    """Run every (layout, scheme, density) series over the campaign drops.

    Drops are independent and may run on a thread pool; aggregation is an
    ordered reduction by drop index so the outputs do not depend on the
    number of workers.
    """
    drop_specs = spec.drop_specs()
    engines = []
    combos = []
    for name in spec.layouts:
        for scheme in spec.schemes:
            combos.append((name, scheme))
            engines.append(None)  # per-density engines built below

    series_out: list[SeriesResult] = []
    for di, dspec in enumerate(drop_specs):
        k = dspec.ue_count
        rho = k / (spec.room[0] * spec.room[1])
        combo_engines = [
            DropEngine(beams, layouts[name], adr, noise, replace(mac, scheme=scheme))
            for name, scheme in combos
        ]

        def one_drop(drop_index: int):
            positions = sample_drop(dspec, drop_index, stream=di)
            out = []
            for engine in combo_engines:
                m = engine.evaluate(positions).metrics
                out.append((m.sum_rate, m.jain))
            return out

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                per_drop = list(pool.map(one_drop, range(spec.drops)))
        else:
            per_drop = [one_drop(d) for d in range(spec.drops)]

        for ci, (name, scheme) in enumerate(combos):
            sum_rates = np.array([per_drop[d][ci][0] for d in range(spec.drops)])
            jains = np.array([per_drop[d][ci][1] for d in range(spec.drops)])
            series_out.append(
                SeriesResult(
                    layout=name,
                    scheme=scheme,
                    density=rho,
                    ue_count=k,
                    sum_rates=sum_rates,
                    jains=jains,
                )
            )
    return CampaignResult(spec=spec, series=series_out)


def single_user_sinr(
    points: np.ndarray,
    beams: BeamSet,
    layout: ClusterLayout,
    adr: AdrSpec,
    noise: NoiseSpec,
    mac: MacConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """SINR and rate of one hypothetical UE per point, all clusters active.

    Every non-serving cluster transmits at full power (worst-case
    inter-cluster interference), which is also the regime where NOMA and
    OFDMA coincide for a single served user.  Returns (sinr, rate).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    gains = gain_tensor(beams, points, adr)
    folded = layout.fold_gains(gains)  # (P, 7, U)
    totals = folded.sum(axis=1)
    serving = np.argmax(totals, axis=1)
    users = np.arange(len(points))
    _, variance = noise_psd(mac.tx_power * folded, adr, noise)
    h_srv = folded[users, :, serving]
    ici_sq = np.maximum((folded**2).sum(axis=2) - h_srv**2, 0.0)
    gamma = mac.noise_scale(adr.responsivity)
    zeta = mac.power_normalization
    denom = ici_sq + gamma * variance
    weights = zeta * math.sqrt(gamma) * h_srv / denom
    s_all = np.einsum("kj,kju->ku", weights, folded)
    s_srv = (weights * h_srv).sum(axis=1)
    ici = np.maximum((s_all**2).sum(axis=1) - s_srv**2, 0.0)
    signal = s_srv**2
    den = ici + gamma * (weights**2 * variance).sum(axis=1)
    sinr = np.where(signal > 0.0, signal / np.where(den > 0.0, den, 1.0), 0.0)
    rate = mac.subcarrier_utilization * mac.bandwidth * np.log2(1.0 + sinr / mac.snr_gap)
    return sinr, rate


def spatial_maps(
    beams: BeamSet,
    layout: ClusterLayout,
    adr: AdrSpec,
    noise: NoiseSpec,
    mac: MacConfig,
    extent,
    resolution: int | tuple[int, int],
    chunk_rows: int = 8,
    threads: int = 1,
) -> tuple[GridField, GridField]:
    """Single-user SINR (dB) and rate (bit/s) heatmaps over the plane."""
    x, y = grid_axes(extent, resolution)
    sinr_map = np.empty((len(y), len(x)))
    rate_map = np.empty((len(y), len(x)))
    chunks = list(range(0, len(y), chunk_rows))

    def fill(start: int):
        ys = y[start : start + chunk_rows]
        gx, gy = np.meshgrid(x, ys)
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        sinr, rate = single_user_sinr(pts, beams, layout, adr, noise, mac)
        sinr_map[start : start + chunk_rows] = sinr.reshape(len(ys), len(x))
        rate_map[start : start + chunk_rows] = rate.reshape(len(ys), len(x))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, chunks))
    else:
        for start in chunks:
            fill(start)
    sinr_db = 10.0 * np.log10(np.maximum(sinr_map, 1e-30))
    return (
        GridField(x=x, y=y, values=sinr_db, kind="sinr", units="dB"),
        GridField(x=x, y=y, values=rate_map, kind="rate", units="bit/s"),
    )


def coverage_edge_points(beams: BeamSet) -> np.ndarray:
    """Outward spot-border anchor points of the outermost spot ring.

    For every beam whose cell lies on the border of the 15x15 spot grid,
    this returns the point one spot radius w'(d) beyond the spot center in
    the direction of the nearest wall: the edge of the covered region.
    """
    cells = spot_grid_indices(beams)
    rows, cols = cells // GRID_SIDE, cells % GRID_SIDE
    centers = beams.spot_centers
    axial = np.einsum(
        "bk,bk->b", centers - beams.origins[:, :2], beams.directions[:, :2]
    )
    dist = np.linalg.norm(
        np.concatenate([centers, np.zeros((len(centers), 1))], axis=1) - beams.origins,
        axis=1,
    )
    spot_r = beams.waist_radii * np.sqrt(1.0 + (dist / beams.rayleigh_ranges) ** 2)
    points = []
    for b in range(len(beams)):
        outward = np.zeros(2)
        if rows[b] == 0:
            outward[1] += 1.0
        if rows[b] == GRID_SIDE - 1:
            outward[1] -= 1.0
        if cols[b] == 0:
            outward[0] -= 1.0
        if cols[b] == GRID_SIDE - 1:
            outward[0] += 1.0
        if not outward.any():
            continue
        outward /= np.linalg.norm(outward)
        points.append(centers[b] + spot_r[b] * outward)
    return np.array(points)


# ---------------------------------------------------------------------------
# Output files


def _fmt(value) -> str:
    return repr(float(value))


def write_grid_csv(field: GridField, path) -> None:
    """Row-major CSV with a comment header carrying grid extent/resolution."""
    xmin, xmax, ymin, ymax = field.extent
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# kind={field.kind} units={field.units}\n")
        fh.write(f"# xmin={_fmt(xmin)} xmax={_fmt(xmax)} nx={len(field.x)}\n")
        fh.write(f"# ymin={_fmt(ymin)} ymax={_fmt(ymax)} ny={len(field.y)}\n")
        for row in field.values:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_grid_csv(path) -> GridField:
    kind, units = "field", ""
    meta = {}
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    key, _, val = token.partition("=")
                    meta[key] = val
                kind = meta.get("kind", kind)
                units = meta.get("units", units)
                continue
            rows.append([float(tok) for tok in line.split(",")])
    values = np.array(rows)
    nx, ny = int(meta["nx"]), int(meta["ny"])
    x, _ = grid_axes(
        (float(meta["xmin"]), float(meta["xmax"]), float(meta["ymin"]), float(meta["ymax"])),
        (nx, ny),
    )
    _, y = grid_axes(
        (float(meta["xmin"]), float(meta["xmax"]), float(meta["ymin"]), float(meta["ymax"])),
        (nx, ny),
    )
    return GridField(x=x, y=y, values=values, kind=kind, units=units)


def write_cdf_csv(cdf: CdfSeries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("value,probability\n")
        for v, p in zip(cdf.values, cdf.probabilities):
            fh.write(f"{_fmt(v)},{_fmt(p)}\n")


def write_mean_csv(result: CampaignResult, metric: str, path) -> None:
    """Means with standard errors per (layout, scheme, density)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"layout,scheme,rho,ue_count,drops,mean_{metric},stderr_{metric}\n")
        for s in result.series:
            if metric == "sumrate":
                mean, err = s.mean_sum_rate, s.stderr_sum_rate()
            else:
                mean, err = s.mean_jain, s.stderr_jain()
            fh.write(
                f"{s.layout},{s.scheme},{_fmt(s.density)},{s.ue_count},"
                f"{len(s.sum_rates)},{_fmt(mean)},{_fmt(err)}\n"
            )


def write_drop_csv(result: DropResult, drop_id: int, scheme: str, path) -> None:
    """Per-user rows (drop_id, ue_id, cluster, scheme, sinr_db, rate_bps)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("drop_id,ue_id,cluster,scheme,sinr_db,rate_bps\n")
        for ue in range(len(result.rates)):
            sinr_db = 10.0 * math.log10(max(result.sinr[ue], 1e-30))
            fh.write(
                f"{drop_id},{ue},{int(result.serving[ue]) + 1},{scheme},"
                f"{_fmt(sinr_db)},{_fmt(result.rates[ue])}\n"
            )


def write_manifest(payload: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
