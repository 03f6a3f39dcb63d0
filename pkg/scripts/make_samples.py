"""Regenerate the bundled low/high sample pairs in src/walmafa/data/.

High images are area-resized crops of scikit-image's test photographs. Low
images are synthesised by gamma darkening, a gain drop and mild sensor
noise, then quantised to 8 bits. Needs scikit-image (not a runtime
dependency of the package).
"""

from pathlib import Path

import numpy as np
import skimage.data
from skimage.transform import resize
from PIL import Image

OUT = Path(__file__).resolve().parents[1] / "src" / "walmafa" / "data"
GAMMA, GAIN, NOISE = 2.0, 0.35, 0.01

# (image, top, left, side): square crops resized to the target size
TRAIN_CROPS = [
    ("astronaut", 0, 0, 512),
    ("coffee", 0, 100, 400),
    ("chelsea", 0, 60, 300),
    ("rocket", 0, 120, 427),
    ("immunohistochemistry", 0, 0, 512),
    ("cat", 0, 150, 300),
    ("astronaut", 200, 200, 256),
    ("coffee", 100, 250, 256),
]
SWAP_CROP = ("chelsea", 20, 100, 256)


def _square(name, top, left, side, size):
    img = getattr(skimage.data, name)()[top:top + side, left:left + side, :3]
    return resize(img, (size, size), anti_aliasing=True)


def darken(high: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    low = GAIN * high ** GAMMA + rng.normal(0.0, NOISE, high.shape)
    return np.clip(low, 0.0, 1.0)


def _save(path: Path, x: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.round(np.clip(x, 0, 1) * 255).astype(np.uint8)).save(path)


def main() -> None:
    rng = np.random.default_rng(2024)
    for i, crop in enumerate(TRAIN_CROPS):
        high = np.round(_square(*crop, 64) * 255) / 255
        _save(OUT / "pairs" / "high" / f"{i:02d}.png", high)
        _save(OUT / "pairs" / "low" / f"{i:02d}.png", darken(high, rng))
    high = np.round(_square(*SWAP_CROP, 128) * 255) / 255
    _save(OUT / "swap" / "high.png", high)
    _save(OUT / "swap" / "low.png", darken(high, rng))


if __name__ == "__main__":
    main()
