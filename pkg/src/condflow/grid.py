"""Uniform cell-centered 2D grids on the unit square, scalar fields over
them, chessboard observation masks, and field file I/O (CSV, PGM).

Conventions (fixed, documented here once):
  * cells are indexed row-major with j (the y index) outermost:
    ``cell = j * nx + i``;
  * field CSV files hold ny rows of nx comma-separated values with the
    bottom row (j = 0) on the first line, printed to 17 significant
    digits so a write/read round trip is bit exact;
  * PGM images are ASCII P2, min-max scaled to 0..255, top row first;
    a constant field renders mid-gray (128).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, ParseError

_MOD = "grid"


@dataclass(frozen=True)
class Grid2D:
    """Uniform cell-centered discretization of [0,1] x [0,1]."""

    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ArgumentError(
                f"grid dimensions must be positive, got {self.nx}x{self.ny}",
                module=_MOD,
            )

    @property
    def hx(self):
        return 1.0 / self.nx

    @property
    def hy(self):
        return 1.0 / self.ny

    @property
    def n_cells(self):
        return self.nx * self.ny

    def cell_index(self, i, j):
        """Flat index of cell column i, row j (row-major, j outer)."""
        return j * self.nx + i

    def cell_ij(self, index):
        """Inverse of :meth:`cell_index`."""
        return index % self.nx, index // self.nx

    def cell_centers(self):
        """(n_cells, 2) array of cell-center coordinates, flat order."""
        xs = (np.arange(self.nx) + 0.5) * self.hx
        ys = (np.arange(self.ny) + 0.5) * self.hy
        X, Y = np.meshgrid(xs, ys)
        return np.column_stack([X.ravel(), Y.ravel()])


def make_grid(nx, ny):
    """Build a Grid2D, validating dimensions."""
    return Grid2D(int(nx), int(ny))


@dataclass
class ScalarField:
    """One real value per grid cell (log-permeability, pressure, ...)."""

    grid: Grid2D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        if vals.size != self.grid.n_cells:
            raise ArgumentError(
                f"field has {vals.size} values for a grid of "
                f"{self.grid.n_cells} cells",
                module=_MOD,
            )
        if not np.all(np.isfinite(vals)):
            raise ArgumentError("field contains non-finite values", module=_MOD)
        self.values = vals

    def as_2d(self):
        """Values reshaped to (ny, nx), row j of the grid in row j."""
        return self.values.reshape(self.grid.ny, self.grid.nx)


@dataclass(frozen=True)
class ObservationMask:
    """Fixed, sorted selection of cell indices used as observation points."""

    grid: Grid2D
    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=int)
        if cells.ndim != 1 or np.any(cells < 0) or np.any(cells >= self.grid.n_cells):
            raise ArgumentError("mask cell indices out of range", module=_MOD)
        object.__setattr__(self, "cells", cells)


def chessboard_mask(grid):
    """Mask selecting the cells with (i + j) even (half the grid)."""
    i = np.arange(grid.nx)
    j = np.arange(grid.ny)
    I, J = np.meshgrid(i, j)
    sel = ((I + J) % 2 == 0).ravel()
    return ObservationMask(grid, np.flatnonzero(sel))


def _fmt(v):
    return format(v, ".17g")


def write_field_csv(fld, path):
    """Write a field as ny rows x nx columns, bottom row first."""
    arr = fld.as_2d()
    with open(path, "w") as fh:
        for j in range(fld.grid.ny):
            fh.write(",".join(_fmt(v) for v in arr[j]))
            fh.write("\n")


def read_field_csv(path, grid):
    """Read a field CSV written by :func:`write_field_csv`."""
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split(",")
            if len(tokens) != grid.nx:
                raise ParseError(
                    f"{path}:{lineno}: expected {grid.nx} values, "
                    f"got {len(tokens)}",
                    module=_MOD,
                )
            try:
                rows.append([float(t) for t in tokens])
            except ValueError as exc:
                raise ParseError(
                    f"{path}:{lineno}: non-numeric token ({exc})", module=_MOD
                ) from exc
    if len(rows) != grid.ny:
        raise ParseError(
            f"{path}: expected {grid.ny} rows, got {len(rows)}", module=_MOD
        )
    return ScalarField(grid, np.array(rows).ravel())


def write_field_pgm(fld, path):
    """Render a field as an ASCII PGM image, one pixel per cell."""
    arr = fld.as_2d()
    lo, hi = arr.min(), arr.max()
    if hi > lo:
        pix = np.rint((arr - lo) / (hi - lo) * 255.0).astype(int)
    else:
        pix = np.full(arr.shape, 128, dtype=int)
    with open(path, "w") as fh:
        fh.write(f"P2\n{fld.grid.nx} {fld.grid.ny}\n255\n")
        for j in range(fld.grid.ny - 1, -1, -1):
            fh.write(" ".join(str(v) for v in pix[j]))
            fh.write("\n")
