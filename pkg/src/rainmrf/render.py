"""Per-year state maps as PGM or SVG images.

Each lattice cell is drawn as a square of ``cell`` pixels with north at the
top.  Cells missing from the grid are drawn gray.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidParameter

PGM_ABSENT = 0
SVG_COLORS = {0: "#808080", 1: "#0000ff", 2: "#ff0000", 3: "#ffffff"}


def state_raster(z, grid, t: int) -> np.ndarray:
    """(rows, cols) array of states for year index ``t``; 0 marks absent cells, row 0 is north."""
    z = np.asarray(z)
    if not 0 <= t < z.shape[1]:
        raise InvalidParameter(f"year index {t} outside 0..{z.shape[1] - 1}")
    rows, cols = grid.lattice_shape()
    img = np.zeros((rows, cols), dtype=np.uint8)
    img[rows - 1 - grid.ij[:, 0], grid.ij[:, 1]] = z[:, t]
    return img


def _check_cell(cell):
    if cell < 1:
        raise InvalidParameter("cell size must be >= 1 pixel")


def render_pgm(z, grid, t: int, cell: int = 8) -> bytes:
    """Binary PGM; gray level = 85 * state, absent cells 0."""
    _check_cell(cell)
    img = state_raster(z, grid, t).astype(np.uint16) * 85
    img = np.kron(img, np.ones((cell, cell), dtype=np.uint16)).astype(np.uint8)
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + img.tobytes()


def render_svg(z, grid, t: int, cell: int = 8) -> str:
    """SVG with one square per lattice cell: blue high, red low, white normal, gray absent."""
    _check_cell(cell)
    img = state_raster(z, grid, t)
    h, w = img.shape
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w * cell}" height="{h * cell}" '
        f'viewBox="0 0 {w * cell} {h * cell}" shape-rendering="crispEdges">'
    ]
    for r in range(h):
        for c in range(w):
            lines.append(f'<rect x="{c * cell}" y="{r * cell}" width="{cell}" height="{cell}" '
                         f'fill="{SVG_COLORS[int(img[r, c])]}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
