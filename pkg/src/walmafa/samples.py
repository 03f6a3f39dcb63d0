"""Locations of the small image pairs bundled with the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .imageio import load_image


def data_dir() -> Path:
    return Path(str(resources.files("walmafa") / "data"))


def training_dir() -> Path:
    """Directory holding ``low/`` and ``high/`` with eight 64x64 pairs."""
    return data_dir() / "pairs"


def swap_pair_paths() -> tuple[Path, Path]:
    d = data_dir() / "swap"
    return d / "low.png", d / "high.png"


def load_pairs(directory=None, dtype=np.float64) -> list[tuple[np.ndarray, np.ndarray]]:
    """Load every ``low/NAME.png`` with its ``high/NAME.png`` partner, sorted by name."""
    d = Path(directory) if directory is not None else training_dir()
    names = sorted(p.name for p in (d / "low").glob("*.png"))
    return [(load_image(d / "low" / n, dtype), load_image(d / "high" / n, dtype)) for n in names]
