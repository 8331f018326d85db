"""Uniform Cartesian meshes.

Cells are indexed (i1, .., id) with axis order matching the state array
layout; cell (0, .., 0) touches the low corner of the domain.
"""

import numpy as np


class CartesianMesh:
    """Axis-aligned box split into equal cells.

    Args:
        extents: per-axis (low, high) coordinate pairs.
        cells: per-axis cell counts.
    """

    def __init__(self, extents, cells):
        extents = [tuple(float(v) for v in e) for e in extents]
        cells = [int(n) for n in cells]
        if len(extents) != len(cells):
            raise ValueError("extents and cells must have equal length")
        if not 1 <= len(cells) <= 3:
            raise ValueError("only 1, 2 or 3 space dimensions are supported")
        for (lo, hi), n in zip(extents, cells):
            if hi <= lo:
                raise ValueError(f"empty extent ({lo}, {hi})")
            if n < 1:
                raise ValueError(f"cell count must be positive, got {n}")
        self.dim = len(cells)
        self.extents = tuple(extents)
        self.cells = tuple(cells)
        self.spacings = tuple((hi - lo) / n for (lo, hi), n in zip(extents, cells))
        self.n_elements = int(np.prod(self.cells))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacings))

    def axis_nodes(self, axis, positions):
        """Physical coordinates of reference positions in every cell along
        one axis, shape (cells[axis], len(positions))."""
        lo = self.extents[axis][0]
        dx = self.spacings[axis]
        idx = np.arange(self.cells[axis])
        return lo + (idx[:, None] + np.asarray(positions)[None, :]) * dx

    def node_coords(self, tables):
        """Coordinates of all quadrature nodes.

        Returns (n1, .., nd, p, .., p, dim) with one grid axis and one
        node axis per dimension, p = degree + 1.
        """
        d = self.dim
        shape = self.cells + (tables.degree + 1,) * d + (d,)
        out = np.empty(shape)
        for j in range(d):
            coords = self.axis_nodes(j, tables.nodes)
            sh = [1] * (2 * d)
            sh[j] = self.cells[j]
            sh[d + j] = tables.degree + 1
            out[..., j] = coords.reshape(sh)
        return out

    def face_node_coords(self, tables, axis, side):
        """Node coordinates on one domain boundary face.

        Returns (g1, .., gd, t1, .., t_{d-1}, dim) where the grid axis
        `axis` has length 1 and the node axes skip `axis`.
        """
        d = self.dim
        grid_shape = tuple(1 if j == axis else self.cells[j] for j in range(d))
        node_shape = tuple(tables.degree + 1 for j in range(d) if j != axis)
        out = np.empty(grid_shape + node_shape + (d,))
        bnd = self.extents[axis][1] if side else self.extents[axis][0]
        out[..., axis] = bnd
        tang = [j for j in range(d) if j != axis]
        for pos, j in enumerate(tang):
            coords = self.axis_nodes(j, tables.nodes)
            sh = [1] * (2 * d - 1)
            sh[j] = self.cells[j]
            sh[d + pos] = tables.degree + 1
            out[..., j] = coords.reshape(sh)
        return out

    def subcell_axis_coords(self, axis, n_sub, layers=0):
        """Centres of the global subcell grid along one axis, including
        `layers` ghost subcells per side."""
        lo = self.extents[axis][0]
        h = self.spacings[axis] / n_sub
        idx = np.arange(-layers, self.cells[axis] * n_sub + layers)
        return lo + (idx + 0.5) * h

    def subcell_centers(self, n_sub):
        """Centres of all subcells, (n1, .., nd, s, .., s, dim)."""
        d = self.dim
        shape = self.cells + (n_sub,) * d + (d,)
        out = np.empty(shape)
        ref = (np.arange(n_sub) + 0.5) / n_sub
        for j in range(d):
            coords = self.axis_nodes(j, ref)
            sh = [1] * (2 * d)
            sh[j] = self.cells[j]
            sh[d + j] = n_sub
            out[..., j] = coords.reshape(sh)
        return out
