"""Space-time diagrams as binary PGM images, one cell per pixel, time downward."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import SpaceTimeRecord

INK = 255


@dataclass(frozen=True, eq=False)
class ImageBuffer:
    """Grayscale ink levels, ``pixels[t, i]``: 0 is white, 255 black."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.array(self.pixels, dtype=np.uint8)
        if p.ndim != 2:
            raise ValueError("image must be 2-d")
        p.setflags(write=False)
        object.__setattr__(self, "pixels", p)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def black_count(self) -> int:
        return int(np.count_nonzero(self.pixels == INK))

    def __eq__(self, other):
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    __hash__ = None


def render_chain(record: SpaceTimeRecord, chain: str = "x") -> ImageBuffer:
    return ImageBuffer(record.chain(chain) * np.uint8(INK))


def render_incoherence(record: SpaceTimeRecord) -> ImageBuffer:
    """Black wherever the two chains disagree."""
    return ImageBuffer((record.x != record.y).astype(np.uint8) * np.uint8(INK))


def pgm_bytes(image: ImageBuffer) -> bytes:
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    # PGM gray levels run from black (0) to white (maxval)
    return header + (INK - image.pixels).astype(np.uint8).tobytes()


def write_pgm(image: ImageBuffer, path) -> Path:
    path = Path(path)
    path.write_bytes(pgm_bytes(image))
    return path


def read_pgm(path) -> ImageBuffer:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5" or int(parts[3]) != 255:
        raise ValueError(f"{path} is not an 8-bit binary PGM")
    w, h = int(parts[1]), int(parts[2])
    raw = np.frombuffer(parts[4][: w * h], dtype=np.uint8).reshape(h, w)
    return ImageBuffer(INK - raw)


def image_name(code0: int, code1: int, chain: str) -> str:
    return f"rule_{code0}_{code1}_{chain}.pgm"


def render_record(record: SpaceTimeRecord, out_dir, chains=("x", "y"),
                  incoherence: bool = True) -> list[Path]:
    """Write the per-chain diagrams (and the disagreement map as chain ``"i"``)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    c0, c1 = record.rule.codes
    paths = [write_pgm(render_chain(record, ch), out / image_name(c0, c1, ch)) for ch in chains]
    if incoherence:
        paths.append(write_pgm(render_incoherence(record), out / image_name(c0, c1, "i")))
    return paths
