"""Inspection exports: feature-image grids (PGM) and code scatter data (CSV).

A node whose inputs are image pixels can be looked at directly: its input
weights form an image.  The grid export tiles the first rows*cols nodes of
a layer, each tile rescaled to the full gray range on its own, separated by
one-pixel black rules.  The scatter export dumps two chosen components of
the code vectors with labels, ready for any plotting tool.
"""

from __future__ import annotations

import csv

import numpy as np

__all__ = ["feature_grid", "write_pgm", "export_feature_grid", "export_scatter"]

SEPARATOR_GRAY = 0
DEGENERATE_GRAY = 128


def feature_grid(
    weights: np.ndarray,
    img_shape: tuple[int, int],
    grid_shape: tuple[int, int],
) -> np.ndarray:
    """Tile node input weights as gray images; returns a uint8 matrix.

    ``weights`` is a (d2, d1 + 1) layer matrix; the bias column is dropped.
    Each of the first rows*cols nodes becomes one img_shape tile, scaled to
    0..255 by its own min and max (a constant tile maps to mid-gray).
    """
    h, w = img_shape
    rows, cols = grid_shape
    if h < 1 or w < 1 or rows < 1 or cols < 1:
        raise ValueError("image and grid shapes must be positive")
    d2 = weights.shape[0]
    d1 = weights.shape[1] - 1
    if h * w != d1:
        raise ValueError(f"image shape {h}x{w} does not match {d1} inputs")
    if rows * cols > d2:
        raise ValueError(f"grid {rows}x{cols} needs {rows * cols} nodes, layer has {d2}")

    out = np.full(
        (rows * h + rows - 1, cols * w + cols - 1), SEPARATOR_GRAY, dtype=np.uint8
    )
    for g in range(rows * cols):
        tile = weights[g, :d1].reshape(h, w)
        lo, hi = tile.min(), tile.max()
        if hi > lo:
            gray = np.rint((tile - lo) / (hi - lo) * 255.0).astype(np.uint8)
        else:
            gray = np.full((h, w), DEGENERATE_GRAY, dtype=np.uint8)
        r, c = divmod(g, cols)
        out[r * (h + 1) : r * (h + 1) + h, c * (w + 1) : c * (w + 1) + w] = gray
    return out


def write_pgm(path, image: np.ndarray) -> None:
    """Write a binary (P5) PGM with maxval 255."""
    image = np.asarray(image)
    if image.ndim != 2 or image.dtype != np.uint8:
        raise ValueError("PGM export expects a 2-d uint8 image")
    height, width = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


def export_feature_grid(
    path,
    weights: np.ndarray,
    img_shape: tuple[int, int],
    grid_shape: tuple[int, int],
) -> None:
    """feature_grid + write_pgm in one step."""
    write_pgm(path, feature_grid(weights, img_shape, grid_shape))


def export_scatter(
    path,
    codes: np.ndarray,
    labels: np.ndarray,
    components: tuple[int, int] = (0, 1),
) -> None:
    """Write (code_a, code_b, label) rows for two code components."""
    codes = np.asarray(codes, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if codes.ndim != 2 or codes.shape[0] != labels.shape[0]:
        raise ValueError("codes and labels must align")
    a, b = components
    if not (0 <= a < codes.shape[1] and 0 <= b < codes.shape[1]):
        raise ValueError(f"components {components} out of range for width {codes.shape[1]}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["code_a", "code_b", "label"])
        for i in range(codes.shape[0]):
            writer.writerow([repr(float(codes[i, a])), repr(float(codes[i, b])), int(labels[i])])
