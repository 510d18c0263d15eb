"""Probe a rule with all 1024 five-cell seeds and classify what each seed
grows into: nothing, a stationary localization, or a travelling one."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import _words
from .core import AutomatonState, DomainError, Rule

KINDS = ("none", "stationary", "travelling")
N_SEEDS = 1024


@dataclass(frozen=True)
class Thresholds:
    """Classifier constants.

    A seed survives when ``act_lo <= total activity <= act_hi_per_step * tau``
    and (with ``require_persist``) some cell is excited at every step.
    Survivors whose excited cells, accumulated over the run, span at most
    ``w_s`` sites are stationary; a span above ``w_t`` with never more than
    ``c_max`` excited cells at once is travelling. Anything else is settled
    by looking for a period ``p <= p_max`` and drift over the last
    ``window`` steps. ``allow_absorbed`` also counts as travelling a narrow
    wave that dies on reaching a chain end; it is off by default because
    such a seed did not persist.
    """

    act_lo: int = 10
    act_hi_per_step: int = 6
    w_s: int = 20
    w_t: int = 50
    c_max: int = 12
    p_max: int = 60
    window: int = 120
    require_persist: bool = True
    allow_absorbed: bool = False

    def act_hi(self, tau: int) -> int:
        return self.act_hi_per_step * tau


@dataclass(frozen=True)
class Seed:
    sx: int
    sy: int
    placement: int

    @property
    def rows(self) -> tuple[str, str]:
        return f"{self.sx:05b}", f"{self.sy:05b}"

    def state(self, n: int) -> AutomatonState:
        if not 0 <= self.placement <= n - 5:
            raise DomainError("seed does not fit in the chain")
        x = np.zeros(n, np.uint8)
        y = np.zeros(n, np.uint8)
        for j in range(5):
            x[self.placement + j] = (self.sx >> (4 - j)) & 1
            y[self.placement + j] = (self.sy >> (4 - j)) & 1
        return AutomatonState(x, y)

    def reflect_swap(self, n: int) -> Seed:
        """The seed whose initial state is ``reflect_swap`` of this one."""
        return Seed(_reverse5(self.sy), _reverse5(self.sx), n - 5 - self.placement)


def _reverse5(v: int) -> int:
    return int(f"{v:05b}"[::-1], 2)


def centred_placement(n: int) -> int:
    return n // 2 - 2


def enumerate_seeds(n: int, placement: int | None = None) -> list[Seed]:
    """All 1024 seeds in ``sx * 32 + sy`` order."""
    if n < 20:
        raise DomainError("chain too short for seeding (n >= 20)")
    start = centred_placement(n) if placement is None else placement
    return [Seed(k >> 5, k & 31, start) for k in range(N_SEEDS)]


@dataclass(frozen=True)
class LocalizationVerdict:
    kind: str
    total_activity: int
    support_span: int
    persisted: bool
    period: int | None = None
    shift: int | None = None
    peak: int = 0
    last_active: int = -1
    reached_end: bool = False


@dataclass(frozen=True)
class RuleLocalizationCounts:
    code0: int
    code1: int
    T: int
    S: int
    verdicts: tuple[LocalizationVerdict, ...] = field(default=(), repr=False, compare=False)


def _classify(rule: Rule, seeds: list[Seed], n: int, tau: int, th: Thresholds):
    if tau < 100:
        raise DomainError("tau must be at least 100 for classification")
    if not seeds:
        return []
    placements = {s.placement for s in seeds}
    out = []
    for start in sorted(placements):
        idx = [k for k, s in enumerate(seeds) if s.placement == start]
        if not 0 <= start <= n - 5:
            raise DomainError("seed does not fit in the chain")
        sx = np.array([seeds[k].sx for k in idx], np.int64)
        sy = np.array([seeds[k].sy for k in idx], np.int64)
        res = _words.classify_seeds(
            rule.code0, rule.code1, n, tau, start, sx, sy,
            th.act_lo, th.act_hi(tau), th.w_s, th.w_t, th.c_max, th.p_max,
            th.window, th.require_persist, th.allow_absorbed)
        for j, k in enumerate(idx):
            out.append((k, res[j]))
    out.sort(key=lambda kv: kv[0])
    verdicts = []
    for _, row in out:
        kind, total, span, persisted, period, shift, peak, last, touched = (int(v) for v in row)
        verdicts.append(LocalizationVerdict(
            kind=KINDS[kind],
            total_activity=total,
            support_span=span,
            persisted=bool(persisted),
            period=None if period < 0 else period,
            shift=None if period < 0 else shift,
            peak=peak,
            last_active=last,
            reached_end=bool(touched),
        ))
    return verdicts


def classify_seed(rule: Rule, seed: Seed, tau: int, n: int = 300,
                  thresholds: Thresholds = Thresholds()) -> LocalizationVerdict:
    return _classify(rule, [seed], n, tau, thresholds)[0]


def count_localizations(rule: Rule, tau: int = 1000, n: int = 300,
                        thresholds: Thresholds = Thresholds(),
                        keep_verdicts: bool = False) -> RuleLocalizationCounts:
    """Travelling (T) and stationary (S) seed counts for one rule."""
    if rule.f[0][0] == 1:
        # every resting cell with resting neighbours ignites at t=1; the
        # activity ceiling is exceeded long before tau
        verdicts = ()
        if keep_verdicts:
            verdicts = tuple(_classify(rule, enumerate_seeds(n), n, tau, thresholds))
        return RuleLocalizationCounts(rule.code0, rule.code1, 0, 0, verdicts)
    verdicts = _classify(rule, enumerate_seeds(n), n, tau, thresholds)
    T = sum(v.kind == "travelling" for v in verdicts)
    S = sum(v.kind == "stationary" for v in verdicts)
    return RuleLocalizationCounts(rule.code0, rule.code1, T, S,
                                  tuple(verdicts) if keep_verdicts else ())


def write_verdicts(path, seeds: Iterable[Seed], verdicts: Iterable[LocalizationVerdict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed_sx", "seed_sy", "kind", "total_activity", "support_span", "period", "shift"])
        for s, v in zip(seeds, verdicts):
            w.writerow([f"{s.sx:05b}", f"{s.sy:05b}", v.kind, v.total_activity, v.support_span,
                        "" if v.period is None else v.period, "" if v.shift is None else v.shift])
