"""Rule-space statistics over sweep results.

Entropy classes, how often each neighbour count excites or sustains a cell
within a group of rules (frequency vectors), the dominating count per
class, group averages and least-squares fits.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import Rule

N_CLASSES = 50
CLASS_WIDTH = 0.1
GROUP_MEASURES = ("H", "D", "R", "P", "A", "I")


class UndefinedClassError(ValueError):
    pass


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class EntropyClass:
    z: int
    lo: float
    hi: float
    members: tuple[Rule, ...]


@dataclass(frozen=True)
class FrequencyVector:
    """Share of rules in a group having a 1 at each neighbour count."""

    values: tuple[Fraction, ...]
    k: int  # 0: resting -> excited, 1: excited -> excited
    basis_size: int

    def as_floats(self) -> tuple[float, ...]:
        return tuple(float(v) for v in self.values)


def entropy_class_index(h: float) -> int:
    """1-based class of an entropy value; values >= 5 fall into the last class."""
    z = int(np.floor(round(h / CLASS_WIDTH, 9))) + 1
    return min(max(z, 1), N_CLASSES)


def entropy_classes(entropies: Mapping[Rule, float]) -> list[EntropyClass]:
    buckets: list[list[Rule]] = [[] for _ in range(N_CLASSES)]
    for rule, h in entropies.items():
        buckets[entropy_class_index(h) - 1].append(rule)
    return [EntropyClass(z, round((z - 1) * CLASS_WIDTH, 10), round(z * CLASS_WIDTH, 10),
                         tuple(sorted(members, key=lambda r: r.index)))
            for z, members in enumerate(buckets, start=1)]


def group_frequency_vectors(rules: Iterable[Rule]) -> tuple[FrequencyVector, FrequencyVector]:
    rules = list(rules)
    if not rules:
        raise UndefinedClassError("frequency vectors of an empty rule set")
    m = len(rules)
    out = []
    for k in (0, 1):
        ones = [sum(r.f[k][j] for r in rules) for j in range(5)]
        out.append(FrequencyVector(tuple(Fraction(c, m) for c in ones), k, m))
    return out[0], out[1]


def class_frequency_vectors(cls: EntropyClass) -> tuple[FrequencyVector, FrequencyVector]:
    if not cls.members:
        raise UndefinedClassError(f"entropy class {cls.z} is empty")
    return group_frequency_vectors(cls.members)


def dominating_position(v: FrequencyVector) -> tuple[int, bool]:
    """Argmax position, lowest index on ties; second item flags a tie."""
    best = max(v.values)
    hits = [j for j, val in enumerate(v.values) if val == best]
    return hits[0], len(hits) > 1


def dominating_positions(vectors: Sequence[FrequencyVector]) -> tuple[str, list[bool]]:
    if not vectors:
        raise ValueError("no vectors")
    picks = [dominating_position(v) for v in vectors]
    return "".join(str(p) for p, _ in picks), [tie for _, tie in picks]


def threshold_simplify(v: FrequencyVector | Sequence, cutoff: float = 0.5) -> tuple[int, ...]:
    values = v.values if isinstance(v, FrequencyVector) else v
    return tuple(int(val >= cutoff) for val in values)


def positional_agreement(a: str, b: str) -> float:
    n = min(len(a), len(b))
    if n == 0:
        return 0.0
    return sum(x == y for x, y in zip(a[:n], b[:n])) / max(len(a), len(b))


@dataclass(frozen=True)
class GroupStats:
    label: str
    size: int
    mean: dict[str, float]
    std: dict[str, float]


def group_statistics(groups: Mapping[str, Iterable[Rule]],
                     metrics: Mapping[Rule, Mapping[str, float]],
                     measures: Sequence[str] = GROUP_MEASURES,
                     ddof: int = 0) -> list[GroupStats]:
    """Mean and standard deviation (population by default) per group."""
    out = []
    for label, rules in groups.items():
        rules = list(rules)
        if not rules:
            raise UndefinedClassError(f"group {label!r} is empty")
        table = np.array([[metrics[r][m] for m in measures] for r in rules], float)
        mean = table.mean(axis=0)
        std = table.std(axis=0, ddof=ddof) if len(rules) > ddof else np.zeros(len(measures))
        out.append(GroupStats(label, len(rules),
                              dict(zip(measures, map(float, mean))),
                              dict(zip(measures, map(float, std)))))
    return out


def localization_groups(counts: Mapping[Rule, tuple[int, int]]) -> dict[str, list[Rule]]:
    """Split rules by their (T, S) counts.

    ``travelling``: T > 0; ``stationary``: S > 0 and T == 0; ``both``: T > 0
    and S > 0; ``none``: T == S == 0.
    """
    rules = sorted(counts, key=lambda r: r.index)
    return {
        "all": rules,
        "travelling": [r for r in rules if counts[r][0] > 0],
        "stationary": [r for r in rules if counts[r][1] > 0 and counts[r][0] == 0],
        "both": [r for r in rules if counts[r][0] > 0 and counts[r][1] > 0],
        "none": [r for r in rules if counts[r] == (0, 0)],
    }


@dataclass(frozen=True)
class FitResult:
    model: str  # "poly<k>" or "log"
    coefficients: tuple[float, ...]  # constant term first
    r_squared: float
    residuals: np.ndarray
    design: np.ndarray

    def predict(self, xs) -> np.ndarray:
        return _design(self.model, np.asarray(xs, float)) @ np.array(self.coefficients)


def _design(model: str, xs: np.ndarray) -> np.ndarray:
    if model == "log":
        return np.column_stack([np.ones_like(xs), np.log(xs)])
    if model.startswith("poly"):
        k = int(model[4:])
        return np.vander(xs, k + 1, increasing=True)
    raise FitError(f"unknown model {model!r}")


def fit(xs, ys, model: str = "log") -> FitResult:
    """Least-squares fit of ``ys`` against ``xs``.

    ``model`` is ``"log"`` (y = a + b ln x) or ``"poly<k>"``. R^2 is reported
    as 0 when ``ys`` has no variance.
    """
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise FitError("xs and ys must be 1-d and equally long")
    if model == "log" and np.any(xs <= 0):
        raise FitError("log model needs xs > 0")
    X = _design(model, xs)
    if xs.size < X.shape[1] or np.linalg.matrix_rank(X) < X.shape[1]:
        raise FitError("underdetermined or degenerate fit")
    coef, *_ = np.linalg.lstsq(X, ys, rcond=None)
    resid = ys - X @ coef
    ss_tot = float(((ys - ys.mean()) ** 2).sum())
    r2 = 0.0 if ss_tot == 0 else max(0.0, 1.0 - float(resid @ resid) / ss_tot)
    return FitResult(model, tuple(float(c) for c in coef), r2, resid, X)
