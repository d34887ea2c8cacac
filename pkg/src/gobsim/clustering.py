"""Static beam clustering: built-in layouts, layout files and UE association.

A layout is an exact partition of the 225 beam indices.  The built-in
layouts are the single-beam baseline (maximal spatial reuse), one cluster
per transmitter element, and three tilings of the 15x15 beam-spot grid
whose region sizes are encoded as row/column width tables.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .ap import BeamSet
from .errors import NotAPartition, ParseError, UnknownLayout

GRID_SIDE = 15  # beam spots per side of the full coverage grid

# Row/column widths of the grid tilings, outer product of widths x widths.
# Keys are layout names; s4 keeps a 3x3-spot central region with size-6
# clusters along the axes and size-4 clusters in the quadrants.
_TILE_WIDTHS = {
    "s2": (3, 3, 3, 3, 3),
    "s3": (3, 2, 2, 1, 2, 2, 3),
    "s4": (2, 2, 2, 3, 2, 2, 2),
}

BUILTIN_LAYOUTS = ("sdma", "s1", "s2", "s3", "s4")


@dataclass(frozen=True)
class ClusterLayout:
    """Named exact partition of beam indices 1..num_beams into clusters."""

    name: str
    clusters: tuple[tuple[int, ...], ...]
    num_beams: int = 225

    def __post_init__(self):
        seen = np.zeros(self.num_beams + 1, dtype=int)
        for cluster in self.clusters:
            if len(cluster) == 0:
                raise NotAPartition("empty cluster in layout")
            for b in cluster:
                if not 1 <= b <= self.num_beams:
                    raise NotAPartition(f"beam {b} outside 1..{self.num_beams}")
                seen[b] += 1
        for b in range(1, self.num_beams + 1):
            if seen[b] > 1:
                raise NotAPartition(f"beam {b} duplicated")
            if seen[b] == 0:
                raise NotAPartition(f"beam {b} unassigned")

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    @cached_property
    def membership(self) -> np.ndarray:
        """0-based cluster index of each beam, shape (num_beams,)."""
        member = np.empty(self.num_beams, dtype=int)
        for u, cluster in enumerate(self.clusters):
            for b in cluster:
                member[b - 1] = u
        return member

    @cached_property
    def _fold_order(self):
        order = np.argsort(self.membership, kind="stable")
        counts = np.bincount(self.membership, minlength=self.n_clusters)
        offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
        return order, offsets

    def fold_gains(self, gains: np.ndarray) -> np.ndarray:
        """Sum a (..., num_beams) gain array into (..., n_clusters)."""
        order, offsets = self._fold_order
        return np.add.reduceat(gains[..., order], offsets, axis=-1)

    def sizes(self) -> list[int]:
        return [len(c) for c in self.clusters]


def spot_grid_indices(beams: BeamSet) -> np.ndarray:
    """Map each beam to its cell of the 15x15 spot grid, as row * 15 + col.

    Row 0 is the top of the plane (largest y), column 0 the left (most
    negative x).  Each transmitter element occupies one 5x5 block whose
    position follows the sign of the element's mean landing point; inside
    a block, beams are ordered by their landing coordinates.  Raises if
    the construction does not produce a bijection onto the 225 cells.
    """
    centers = beams.spot_centers
    elements = beams.element_indices
    cell = np.full(len(beams), -1, dtype=int)
    mean_x = np.array([centers[elements == v, 0].mean() for v in range(1, 10)])
    mean_y = np.array([centers[elements == v, 1].mean() for v in range(1, 10)])
    eps_x = 0.1 * np.abs(mean_x).max()
    eps_y = 0.1 * np.abs(mean_y).max()

    def third(value, eps):
        if value < -eps:
            return 0
        if value > eps:
            return 2
        return 1

    for v in range(1, 10):
        beam_ids = np.flatnonzero(elements == v)
        block_col = third(mean_x[v - 1], eps_x)
        block_row = 2 - third(mean_y[v - 1], eps_y)  # +y lands in the top row
        pts = centers[beam_ids]
        by_y = beam_ids[np.argsort(-pts[:, 1], kind="stable")]
        for r in range(5):
            row_ids = by_y[5 * r : 5 * (r + 1)]
            row_pts = centers[row_ids]
            ordered = row_ids[np.argsort(row_pts[:, 0], kind="stable")]
            for c, b in enumerate(ordered):
                cell[b] = (5 * block_row + r) * GRID_SIDE + (5 * block_col + c)
    if sorted(cell) != list(range(GRID_SIDE**2)):
        raise NotAPartition("beam landing pattern does not tile the 15x15 spot grid")
    return cell


def _tiled_layout(name: str, widths, beams: BeamSet) -> ClusterLayout:
    if sum(widths) != GRID_SIDE:
        raise ValueError("tile widths must sum to the grid side")
    cell = spot_grid_indices(beams)
    cell_to_beam = np.empty(GRID_SIDE**2, dtype=int)
    cell_to_beam[cell] = np.arange(1, len(cell) + 1)
    edges = np.concatenate([[0], np.cumsum(widths)])
    clusters = []
    for br in range(len(widths)):
        rows = range(edges[br], edges[br + 1])
        for bc in range(len(widths)):
            cols = range(edges[bc], edges[bc + 1])
            members = sorted(
                int(cell_to_beam[r * GRID_SIDE + c]) for r in rows for c in cols
            )
            clusters.append(tuple(members))
    return ClusterLayout(name=name, clusters=tuple(clusters))


def builtin_layout(name: str, beams: BeamSet | None = None) -> ClusterLayout:
    """One of the built-in layouts: sdma, s1, s2, s3 or s4.

    The grid tilings (s2..s4) need the beam geometry to locate each beam
    on the spot grid; ``beams`` is required for those.
    """
    if name == "sdma":
        return ClusterLayout("sdma", tuple((b,) for b in range(1, 226)))
    if name == "s1":
        return ClusterLayout(
            "s1", tuple(tuple(range(25 * v + 1, 25 * v + 26)) for v in range(9))
        )
    if name in _TILE_WIDTHS:
        if beams is None:
            raise ValueError(f"layout {name!r} needs the beam set to tile the spot grid")
        return _tiled_layout(name, _TILE_WIDTHS[name], beams)
    raise UnknownLayout(name)


def layout_from_file(path) -> ClusterLayout:
    """Read a layout file: one cluster per line, 1-based beam indices.

    Blank lines and '#' comments are ignored.  The result must partition
    1..225 exactly; gaps and duplicates are rejected with the offending
    beam index.
    """
    clusters = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                members = tuple(int(tok) for tok in line.split())
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            clusters.append(members)
    if not clusters:
        raise ParseError(f"{path}: no clusters found")
    import os

    name = os.path.splitext(os.path.basename(str(path)))[0]
    return ClusterLayout(name=name, clusters=tuple(clusters))


def write_layout(layout: ClusterLayout, path) -> None:
    """Write a layout in the plain-text format read by layout_from_file."""
    with open(path, "w", encoding="utf-8") as fh:
        for cluster in layout.clusters:
            fh.write(" ".join(str(b) for b in cluster) + "\n")


@dataclass
class UeAssignment:
    """Serving-cluster choice for each UE (0-based cluster indices)."""

    serving: np.ndarray
    n_clusters: int

    def users_of(self, u: int) -> np.ndarray:
        return np.flatnonzero(self.serving == u)

    @property
    def counts(self) -> np.ndarray:
        return np.bincount(self.serving, minlength=self.n_clusters)

    @property
    def active_clusters(self) -> np.ndarray:
        return np.flatnonzero(self.counts > 0)


def assign_ues(gains: np.ndarray, layout: ClusterLayout) -> UeAssignment:
    """Associate each UE with the cluster of highest total channel gain.

    ``gains`` is the (K, 7, num_beams) tensor.  Ties break toward the
    lowest cluster index, so the result is deterministic and invariant
    under positive scaling of the gains.
    """
    per_beam = gains.sum(axis=1)  # (K, B)
    totals = layout.fold_gains(per_beam)  # (K, U)
    serving = np.argmax(totals, axis=1)
    return UeAssignment(serving=serving, n_clusters=layout.n_clusters)
