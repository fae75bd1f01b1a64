"""Frame directories, PNG output and comparison grids."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .image import as_frame

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".ppm"}


def list_frames(dir_path: str | Path) -> list[Path]:
    """Image files in ``dir_path``; lexicographic filename order is temporal order."""
    d = Path(dir_path)
    if not d.is_dir():
        raise FileNotFoundError(f"input directory {d} does not exist")
    return sorted((p for p in d.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES), key=lambda p: p.name)


def read_frame(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        img.load()
        if img.mode not in ("RGB", "L"):
            img = img.convert("RGB")
        return as_frame(np.asarray(img))


def write_frame(path: str | Path, frame: np.ndarray) -> None:
    Image.fromarray(np.ascontiguousarray(frame)).save(Path(path), format="PNG")


def comparison_grid(
    panels: list[np.ndarray],
    labels: list[str],
    gutter: int = 8,
    label_height: int = 16,
    background: int = 255,
) -> np.ndarray:
    """Panels left to right at native scale, labels in a strip above them.

    Panel ``i`` occupies columns ``i * (w + gutter)`` onward, rows
    ``label_height`` onward, copied byte for byte.
    """
    if not panels:
        raise ValueError("need at least one panel")
    h, w = panels[0].shape[:2]
    if any(p.shape != panels[0].shape for p in panels):
        raise ValueError("all panels must have the same size")
    n = len(panels)
    grid = np.full((label_height + h, n * w + (n - 1) * gutter, 3), background, dtype=np.uint8)
    img = Image.fromarray(grid)
    draw = ImageDraw.Draw(img)
    for i, label in enumerate(labels):
        draw.text((i * (w + gutter) + 2, 2), label, fill=(0, 0, 0))
    grid = np.array(img)
    for i, panel in enumerate(panels):
        x0 = i * (w + gutter)
        grid[label_height:, x0 : x0 + w] = panel
    return grid
