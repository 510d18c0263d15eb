"""Integral measures of a space-time configuration.

The space-time matrix of a chain has one row per time step (t = 0..tau) and
one column per site. Local patterns are the 3x3 windows lying fully inside
that matrix; a window is keyed as a 9-bit integer read row-major, the
top-left cell being the most significant bit. Windows with no excited cell
are not counted.

Two footprints are supported. ``"full"`` keys all nine cells. ``"low7"``
keeps the key modulo 128, i.e. ignores the first two cells of the earliest
row; with it the entropy, diversity and richness of random-start runs line
up with the published rule tables (richness saturates at 128/512), which
the full footprint cannot do. ``"low7"`` is the default.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import asdict, dataclass

import numpy as np

from .core import DomainError, SpaceTimeRecord

N_PATTERNS = 512
DEFLATE_LEVEL = 6
MEASURES = ("H", "D", "R", "P", "A", "I", "Z")
FOOTPRINTS = {"full": 0x1FF, "low7": 0x07F}
DEFAULT_FOOTPRINT = "low7"


@dataclass(frozen=True)
class WindowHistogram:
    counts: np.ndarray  # length 512, counts[0] == 0

    @property
    def eta(self) -> int:
        return int(self.counts.sum())

    def as_dict(self) -> dict[int, int]:
        return {int(k): int(self.counts[k]) for k in np.flatnonzero(self.counts)}


@dataclass(frozen=True)
class MetricsRecord:
    H: float
    D: float
    R: float
    P: float
    A: float
    I: float
    Z: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


def _matrix(record: SpaceTimeRecord, chain: str) -> np.ndarray:
    if chain == "xy":
        # chains side by side, each keeping its own windows
        return np.concatenate([record.x, np.zeros((record.tau + 1, 1), np.uint8), record.y], axis=1)
    return record.chain(chain)


def window_codes(m: np.ndarray) -> np.ndarray:
    """9-bit key of every 3x3 window of a 2-d 0/1 matrix."""
    rows, cols = m.shape
    m = m.astype(np.uint16)
    code = np.zeros((rows - 2, cols - 2), np.uint16)
    for a in range(3):
        for b in range(3):
            code = (code << 1) | m[a:rows - 2 + a, b:cols - 2 + b]
    return code


def window_histogram(record: SpaceTimeRecord, chain: str = "x",
                     footprint: str = DEFAULT_FOOTPRINT) -> WindowHistogram:
    m = _matrix(record, chain)
    if m.shape[0] < 3 or m.shape[1] < 3:
        raise DomainError("need n >= 3 and tau >= 2 for a 3x3 window")
    try:
        mask = FOOTPRINTS[footprint]
    except KeyError:
        raise DomainError(f"unknown footprint {footprint!r}") from None
    codes = window_codes(m) & mask
    counts = np.bincount(codes.ravel(), minlength=N_PATTERNS).astype(np.int64)
    counts[0] = 0
    return WindowHistogram(counts)


def _probabilities(hist: WindowHistogram) -> np.ndarray:
    eta = hist.eta
    if eta == 0:
        return np.zeros(0)
    c = hist.counts[hist.counts > 0]
    return c / eta


def shannon_entropy(hist: WindowHistogram) -> float:
    """Entropy of the window distribution in nats; 0 for an empty histogram."""
    p = _probabilities(hist)
    if p.size == 0:
        return 0.0
    return float(max(0.0, -(p * np.log(p)).sum()))


def simpson_diversity(hist: WindowHistogram) -> float:
    p = _probabilities(hist)
    if p.size == 0:
        return 0.0
    return float(max(0.0, 1.0 - (p * p).sum()))


def richness(hist: WindowHistogram) -> float:
    return int(np.count_nonzero(hist.counts)) / N_PATTERNS


def space_filling(record: SpaceTimeRecord, chain: str = "x") -> float:
    """Fraction of cells with an excited cell somewhere in their 3x3
    space-time neighbourhood (the cell included)."""
    m = _matrix(record, chain).astype(bool)
    rows, cols = m.shape
    pad = np.zeros((rows + 2, cols + 2), bool)
    pad[1:-1, 1:-1] = m
    near = np.zeros_like(m)
    for a in range(3):
        for b in range(3):
            near |= pad[a:a + rows, b:b + cols]
    if chain == "xy":
        near = np.delete(near, record.n, axis=1)
    return float(near.sum() / near.size)


def activity(record: SpaceTimeRecord, chain: str = "x") -> float:
    if chain == "xy":
        return float((record.x.sum() + record.y.sum()) / (2 * record.x.size))
    return float(record.chain(chain).mean())


def incoherence(record: SpaceTimeRecord) -> float:
    diff = int(record.x.sum(dtype=np.int64)) - int(record.y.sum(dtype=np.int64))
    return abs(diff) / record.x.size


def disagreement(record: SpaceTimeRecord) -> float:
    """Fraction of cells where the chains differ; bounds :func:`incoherence` from above."""
    return float(np.count_nonzero(record.x != record.y) / record.x.size)


def compressed_size(record: SpaceTimeRecord, chain: str = "x") -> int:
    """Bytes of a raw DEFLATE stream (level 6) of the chain, one byte per cell."""
    data = np.ascontiguousarray(record.chain(chain)).tobytes()
    comp = zlib.compressobj(DEFLATE_LEVEL, zlib.DEFLATED, -15)
    return len(comp.compress(data) + comp.flush())


def compressibility(record: SpaceTimeRecord, chain: str = "x") -> float:
    return 1.0 / compressed_size(record, "x" if chain == "xy" else chain)


def compute_all(record: SpaceTimeRecord, chain: str = "x",
                footprint: str = DEFAULT_FOOTPRINT) -> MetricsRecord:
    """All seven measures; incoherence always uses both chains."""
    hist = window_histogram(record, chain, footprint)
    return MetricsRecord(
        H=shannon_entropy(hist),
        D=simpson_diversity(hist),
        R=richness(hist),
        P=space_filling(record, chain),
        A=activity(record, chain),
        I=incoherence(record),
        Z=compressibility(record, chain),
    )


def max_entropy(eta: int) -> float:
    return math.log(min(eta, N_PATTERNS - 1)) if eta > 0 else 0.0
