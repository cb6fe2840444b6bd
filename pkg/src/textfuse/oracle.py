"""Brute-force raster ground truth for the exact geometry routines.

Deliberately slow and simple: polygons are rasterized on a dense grid of
cell centers and areas/IoU are computed by counting.  Used by the test
suite and the `oracle-check` CLI subcommand as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import ConvexPolygon, DegenerateInput


@dataclass(frozen=True)
class RasterGrid:
    resolution: int
    bounds: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax

    def __post_init__(self) -> None:
        if self.resolution < 64:
            raise ValueError(f"resolution must be >= 64, got {self.resolution}")
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmax > xmin and ymax > ymin):
            raise ValueError(f"empty grid bounds: {self.bounds}")

    @property
    def cell_area(self) -> float:
        xmin, ymin, xmax, ymax = self.bounds
        return ((xmax - xmin) / self.resolution) * ((ymax - ymin) / self.resolution)

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        xmin, ymin, xmax, ymax = self.bounds
        xs = xmin + (np.arange(self.resolution) + 0.5) * (xmax - xmin) / self.resolution
        ys = ymin + (np.arange(self.resolution) + 0.5) * (ymax - ymin) / self.resolution
        return np.meshgrid(xs, ys, sparse=True)


def grid_for(polys: Sequence[ConvexPolygon], resolution: int = 1024) -> RasterGrid:
    """Grid whose bounds strictly contain all vertices with a one-cell margin."""
    xs = [v.x for p in polys for v in p.vertices]
    ys = [v.y for p in polys for v in p.vertices]
    if not xs:
        raise DegenerateInput("no vertices to build a grid around")
    xmin, xmax, ymin, ymax = min(xs), max(xs), min(ys), max(ys)
    span = max(xmax - xmin, ymax - ymin, 1e-6)
    margin = 1.5 * span / resolution
    return RasterGrid(resolution, (xmin - margin, ymin - margin, xmax + margin, ymax + margin))


def _inside_mask(p: ConvexPolygon, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    verts = p.vertices
    n = len(verts)
    if n == 0:
        return np.zeros(np.broadcast(gx, gy).shape, dtype=bool)
    mask = np.ones(np.broadcast(gx, gy).shape, dtype=bool)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        mask &= (b.x - a.x) * (gy - a.y) - (b.y - a.y) * (gx - a.x) >= 0
        if not mask.any():
            break
    return mask


def raster_area(p: ConvexPolygon, g: RasterGrid) -> float:
    """Count cell centers inside p times the cell area."""
    if p.is_empty:
        return 0.0
    gx, gy = g.centers()
    return float(_inside_mask(p, gx, gy).sum()) * g.cell_area


def raster_iou(a: ConvexPolygon, b: ConvexPolygon, g: RasterGrid) -> float:
    """IoU by cell counting; exactly symmetric in its arguments."""
    gx, gy = g.centers()
    ma = _inside_mask(a, gx, gy)
    mb = _inside_mask(b, gx, gy)
    union = int((ma | mb).sum())
    if union == 0:
        raise DegenerateInput("no grid cell falls inside either polygon")
    return int((ma & mb).sum()) / union
