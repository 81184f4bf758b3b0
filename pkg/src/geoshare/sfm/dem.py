"""Regular height grids from point clouds, plus the Esri ASCII writer."""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ..errors import GeoshareError

NODATA = -9999.0
# cells farther than this many cell-sizes from every point get no data
INFLUENCE_CELLS = 3.0


class EmptyCloud(GeoshareError):
    pass


@dataclass
class DemGrid:
    """Row-major heights; row 0 is the southernmost row (y = y0)."""

    x0: float
    y0: float
    cell: float
    ncols: int
    nrows: int
    heights: np.ndarray

    def __post_init__(self):
        if self.cell <= 0:
            raise GeoshareError("cell size must be positive")
        self.heights = np.asarray(self.heights, dtype=np.float64).reshape(
            self.nrows, self.ncols
        )


def build_dem(points: np.ndarray, x0: float, y0: float, cell: float,
              ncols: int, nrows: int, method: str = "idw") -> DemGrid:
    """Grid a 3D cloud: nearest-neighbor or inverse-distance-weighted
    (power 2) within an influence radius of 3 cell sizes."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) == 0:
        raise EmptyCloud("no points to grid")
    if ncols <= 0 or nrows <= 0 or cell <= 0:
        raise GeoshareError("grid shape and cell size must be positive")
    if method not in ("nearest", "idw"):
        raise GeoshareError(f"unknown method {method!r}")

    tree = cKDTree(points[:, :2])
    xs = x0 + (np.arange(ncols) + 0.5) * cell
    ys = y0 + (np.arange(nrows) + 0.5) * cell
    gx, gy = np.meshgrid(xs, ys)
    centers = np.column_stack([gx.ravel(), gy.ravel()])
    radius = INFLUENCE_CELLS * cell

    heights = np.full(len(centers), np.nan)
    if method == "nearest":
        dist, idx = tree.query(centers, k=1)
        ok = dist <= radius
        heights[ok] = points[idx[ok], 2]
    else:
        neighborhoods = tree.query_ball_point(centers, r=radius)
        for i, idxs in enumerate(neighborhoods):
            if not idxs:
                continue
            idxs = sorted(idxs)
            d2 = ((points[idxs, :2] - centers[i]) ** 2).sum(axis=1)
            exact = d2 <= (1e-12 * cell) ** 2
            if exact.any():
                heights[i] = points[idxs, 2][exact][0]
                continue
            w = 1.0 / d2  # inverse distance power 2
            heights[i] = float((w * points[idxs, 2]).sum() / w.sum())

    return DemGrid(x0=x0, y0=y0, cell=cell, ncols=ncols, nrows=nrows,
                   heights=heights.reshape(nrows, ncols))


def write_esri_ascii(grid: DemGrid, path: str | os.PathLike) -> None:
    """Esri ASCII grid; data rows run north to south."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"ncols {grid.ncols}\n")
        fh.write(f"nrows {grid.nrows}\n")
        fh.write(f"xllcorner {format(grid.x0, '.17g')}\n")
        fh.write(f"yllcorner {format(grid.y0, '.17g')}\n")
        fh.write(f"cellsize {format(grid.cell, '.17g')}\n")
        fh.write(f"NODATA_value {NODATA:g}\n")
        for row in grid.heights[::-1]:
            vals = np.where(np.isnan(row), NODATA, row)
            fh.write(" ".join(format(v, ".17g") for v in vals) + "\n")


def read_esri_ascii(path: str | os.PathLike) -> DemGrid:
    with open(path, "r", encoding="utf-8") as fh:
        header = {}
        for _ in range(6):
            key, value = fh.readline().split()
            header[key.lower()] = float(value)
        rows = [
            [float(v) for v in line.split()]
            for line in fh if line.strip()
        ]
    heights = np.array(rows[::-1], dtype=np.float64)
    nodata = header.get("nodata_value", NODATA)
    heights[heights == nodata] = np.nan
    return DemGrid(
        x0=header["xllcorner"], y0=header["yllcorner"], cell=header["cellsize"],
        ncols=int(header["ncols"]), nrows=int(header["nrows"]), heights=heights,
    )
