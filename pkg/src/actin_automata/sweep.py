"""Resumable, parallel evaluation of the whole rule space.

A sweep directory holds ``metrics.csv``, ``localization.csv`` and a
``manifest.json`` recording the configuration, its hash and which rule
ranges are complete. Rows are appended in rule order as they finish, so an
interrupted run can pick up where it stopped.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Iterator

import numpy as np

from . import __version__
from .core import DomainError, N_RULES, AutomatonState, Rule, random_state, run
from .localization import Seed, Thresholds, centred_placement, count_localizations
from .metrics import DEFAULT_FOOTPRINT, MEASURES, compute_all

METRICS_FILE = "metrics.csv"
LOCALIZATION_FILE = "localization.csv"
MANIFEST_FILE = "manifest.json"
METRICS_HEADER = ("code0", "code1") + MEASURES
LOCALIZATION_HEADER = ("code0", "code1", "T", "S")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


class ConfigMismatchError(RuntimeError):
    """The output directory was produced by a different configuration."""


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


@dataclass(frozen=True)
class InitSpec:
    """Initial condition of a metrics run.

    ``kind`` is ``"window"`` (centred random window of ``width`` cells),
    ``"full"`` (whole chain random) or ``"seed"`` (a five-cell seed
    ``sx``/``sy`` at the centre).
    """

    kind: str = "window"
    width: int = 100
    p: float = 0.5
    sx: int = 0
    sy: int = 0

    def __post_init__(self):
        if self.kind not in ("window", "full", "seed"):
            raise DomainError(f"unknown init kind {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise DomainError("excitation probability must lie in [0, 1]")
        if self.kind == "window" and self.width < 1:
            raise DomainError("window width must be positive")
        if not (0 <= self.sx < 32 and 0 <= self.sy < 32):
            raise DomainError("seed patterns are 5-bit")

    @classmethod
    def parse(cls, text: str) -> InitSpec:
        """``random100:0.5``, ``random:0.5`` (full chain) or ``seed:10001,10111``."""
        text = text.strip()
        try:
            if text.startswith("seed:"):
                a, b = text[5:].split(",")
                if len(a) != 5 or len(b) != 5:
                    raise ValueError
                return cls("seed", sx=int(a, 2), sy=int(b, 2))
            if text.startswith("random"):
                head, _, p = text.partition(":")
                prob = float(p) if p else 0.5
                width = head[len("random"):]
                if width:
                    return cls("window", width=int(width), p=prob)
                return cls("full", p=prob)
        except ValueError:
            pass
        raise DomainError(f"bad init spec {text!r}")

    def __str__(self):
        if self.kind == "seed":
            return f"seed:{self.sx:05b},{self.sy:05b}"
        if self.kind == "full":
            return f"random:{self.p:g}"
        return f"random{self.width}:{self.p:g}"

    def build(self, n: int, rng: np.random.Generator) -> AutomatonState:
        if self.kind == "seed":
            return Seed(self.sx, self.sy, centred_placement(n)).state(n)
        return random_state(n, rng, self.p, None if self.kind == "full" else self.width)


@dataclass(frozen=True)
class SweepConfig:
    n: int = 300
    tau: int = 1000
    loc_tau: int | None = None  # localization run length; defaults to tau
    init: InitSpec = InitSpec()
    rng_seed: int = 1
    rules: tuple[int, int] = (0, N_RULES)  # half-open range of rule indices
    chain: str = "x"
    footprint: str = DEFAULT_FOOTPRINT
    thresholds: Thresholds = Thresholds()
    workers: int = 1
    out_dir: str = "."

    def __post_init__(self):
        lo, hi = self.rules
        if not 0 <= lo < hi <= N_RULES:
            raise DomainError(f"rule range {self.rules} outside 0..{N_RULES}")
        if self.n < 20 or self.tau < 2:
            raise DomainError("need n >= 20 and tau >= 2")
        if not 0 <= self.rng_seed < 2 ** 64:
            raise DomainError("rng seed must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise DomainError("workers must be at least 1")

    @property
    def localization_tau(self) -> int:
        return self.tau if self.loc_tau is None else self.loc_tau

    @property
    def rule_indices(self) -> range:
        return range(*self.rules)

    def canonical(self) -> dict:
        """Everything that determines output bytes (not workers or paths)."""
        d = asdict(self)
        del d["workers"], d["out_dir"]
        d["init"] = str(self.init)
        d["rules"] = list(self.rules)
        d["loc_tau"] = self.localization_tau
        return d

    def canonical_text(self) -> str:
        return json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return f"{fnv1a64(self.canonical_text().encode()):016x}"


def parse_rule_range(text: str) -> tuple[int, int]:
    """``"0..63"`` (inclusive) or a single index, as a half-open range."""
    try:
        if ".." in text:
            a, b = text.split("..")
            lo, hi = int(a), int(b) + 1
        else:
            lo = int(text)
            hi = lo + 1
    except ValueError:
        raise DomainError(f"bad rule range {text!r}") from None
    if not 0 <= lo < hi <= N_RULES:
        raise DomainError(f"rule range {text!r} outside 0..{N_RULES - 1}")
    return lo, hi


def rule_rng(rng_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(rng_seed ^ index)


def metrics_for_rule(config: SweepConfig, index: int) -> tuple[int, int, dict[str, float]]:
    rule = Rule.from_index(index)
    state = config.init.build(config.n, rule_rng(config.rng_seed, index))
    record = run(rule, state, config.tau)
    m = compute_all(record, config.chain, config.footprint)
    return rule.code0, rule.code1, m.as_dict()


def localization_for_rule(config: SweepConfig, index: int) -> tuple[int, int, int, int]:
    c = count_localizations(Rule.from_index(index), config.localization_tau, config.n,
                            config.thresholds)
    return c.code0, c.code1, c.T, c.S


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _metrics_line(row) -> list[str]:
    c0, c1, m = row
    return [str(c0), str(c1)] + [_fmt(m[k]) for k in MEASURES]


def _localization_line(row) -> list[str]:
    return [str(v) for v in row]


def _csv_line(fields: Iterable[str]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(fields)
    return buf.getvalue()


# manifest -------------------------------------------------------------------

def _ranges(indices: Iterable[int]) -> list[list[int]]:
    """Collapse sorted indices into inclusive [lo, hi] runs."""
    out: list[list[int]] = []
    for k in indices:
        if out and out[-1][1] == k - 1:
            out[-1][1] = k
        else:
            out.append([k, k])
    return out


def read_manifest(out_dir) -> dict | None:
    path = Path(out_dir) / MANIFEST_FILE
    if not path.exists():
        return None
    with open(path) as fh:
        return json.load(fh)


def _write_manifest(config: SweepConfig, done: dict[str, list[int]]) -> None:
    manifest = {
        "tool_version": __version__,
        "config": config.canonical(),
        "config_hash": config.config_hash(),
        "completed": {kind: _ranges(sorted(idx)) for kind, idx in sorted(done.items())},
    }
    path = Path(config.out_dir) / MANIFEST_FILE
    tmp = path.with_suffix(".json.tmp")
    with open(tmp, "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _check_manifest(config: SweepConfig) -> dict | None:
    manifest = read_manifest(config.out_dir)
    if manifest is not None and manifest.get("config_hash") != config.config_hash():
        raise ConfigMismatchError(
            f"{config.out_dir} holds a sweep with config hash {manifest.get('config_hash')}, "
            f"current config hashes to {config.config_hash()}")
    return manifest


# append-only tables ---------------------------------------------------------

def _recover_table(path: Path, header: tuple[str, ...]) -> list[int]:
    """Truncate a partial trailing line and return the rule indices present.

    Creates the file with its header when missing.
    """
    if not path.exists() or path.stat().st_size == 0:
        with open(path, "w", newline="") as fh:
            fh.write(_csv_line(header))
        return []
    data = path.read_bytes()
    cut = data.rfind(b"\n") + 1
    if cut < len(data):
        with open(path, "r+b") as fh:
            fh.truncate(cut)
        data = data[:cut]
    lines = data.decode().splitlines()
    if not lines or tuple(lines[0].split(",")) != header:
        raise ConfigMismatchError(f"{path} has an unexpected header")
    done = []
    for ln in lines[1:]:
        c0, c1 = ln.split(",")[:2]
        done.append(int(c0) * 32 + int(c1))
    return done


def _map(fn: Callable, config: SweepConfig, todo: list[int]) -> Iterator:
    if config.workers == 1 or len(todo) < 2:
        for k in todo:
            yield fn(config, k)
        return
    chunk = max(1, min(16, len(todo) // (4 * config.workers)))
    with ProcessPoolExecutor(config.workers) as pool:
        # map yields in submission order, so the file is written in rule order
        yield from pool.map(fn, [config] * len(todo), todo, chunksize=chunk)


def _run_table(config: SweepConfig, kind: str, filename: str, header, fn, fmt,
               progress: Callable[[int, int], None] | None = None) -> int:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = _check_manifest(config)
    done_tables = {}
    if manifest is not None:
        for k, ranges in manifest.get("completed", {}).items():
            done_tables[k] = [i for lo, hi in ranges for i in range(lo, hi + 1)]
    present = _recover_table(out / filename, header)
    have = set(present)
    todo = [k for k in config.rule_indices if k not in have]
    done_tables[kind] = sorted(have)
    _write_manifest(config, done_tables)
    if not todo:
        return 0
    written = 0
    with open(out / filename, "a", newline="") as fh:
        for row in _map(fn, config, todo):
            fh.write(_csv_line(fmt(row)))
            fh.flush()
            k = row[0] * 32 + row[1]
            done_tables[kind].append(k)
            written += 1
            if progress is not None:
                progress(written, len(todo))
            if written % 64 == 0:
                _write_manifest(config, done_tables)
    _write_manifest(config, done_tables)
    return written


def run_metrics_sweep(config: SweepConfig, progress=None) -> int:
    """Compute the metrics row of every rule in range; returns rows written."""
    return _run_table(config, "metrics", METRICS_FILE, METRICS_HEADER,
                      metrics_for_rule, _metrics_line, progress)


def run_localization_sweep(config: SweepConfig, progress=None) -> int:
    """Count travelling/stationary seeds of every rule in range."""
    return _run_table(config, "localization", LOCALIZATION_FILE, LOCALIZATION_HEADER,
                      localization_for_rule, _localization_line, progress)


@dataclass
class ResumeHandle:
    config: SweepConfig
    pending: dict[str, list[int]] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return not any(self.pending.values())

    def next_rule(self, kind: str) -> int | None:
        todo = self.pending.get(kind, [])
        return todo[0] if todo else None

    def run(self, progress=None) -> int:
        n = 0
        if self.pending.get("metrics"):
            n += run_metrics_sweep(self.config, progress)
        if self.pending.get("localization"):
            n += run_localization_sweep(self.config, progress)
        return n


def resume(out_dir, config: SweepConfig | None = None, workers: int | None = None) -> ResumeHandle:
    """Continuation handle for a sweep directory.

    With ``config`` given, its hash must match the stored one. Without it the
    stored configuration is rebuilt from the manifest.
    """
    manifest = read_manifest(out_dir)
    if manifest is None:
        raise FileNotFoundError(f"no {MANIFEST_FILE} in {out_dir}")
    if config is None:
        config = config_from_canonical(manifest["config"], out_dir=str(out_dir))
    else:
        config = replace(config, out_dir=str(out_dir))
    if workers is not None:
        config = replace(config, workers=workers)
    if manifest["config_hash"] != config.config_hash():
        raise ConfigMismatchError(
            f"config hash {config.config_hash()} does not match manifest {manifest['config_hash']}")
    pending = {}
    for kind, filename in (("metrics", METRICS_FILE), ("localization", LOCALIZATION_FILE)):
        path = Path(out_dir) / filename
        if kind not in manifest.get("completed", {}) and not path.exists():
            continue
        have = set(_recover_table(path, METRICS_HEADER if kind == "metrics" else LOCALIZATION_HEADER))
        pending[kind] = [k for k in config.rule_indices if k not in have]
    return ResumeHandle(config, pending)


def config_from_canonical(d: dict, **overrides) -> SweepConfig:
    d = dict(d)
    d["init"] = InitSpec.parse(d["init"])
    d["rules"] = tuple(d["rules"])
    d["thresholds"] = Thresholds(**d["thresholds"])
    d.update(overrides)
    return SweepConfig(**d)


# loading --------------------------------------------------------------------

def load_metrics(path) -> dict[Rule, dict[str, float]]:
    p = Path(path)
    if p.is_dir():
        p = p / METRICS_FILE
    out = {}
    with open(p, newline="") as fh:
        for row in csv.DictReader(fh):
            rule = Rule.from_index(int(row["code0"]) * 32 + int(row["code1"]))
            out[rule] = {k: float(row[k]) for k in MEASURES}
    return out


def load_localization(path) -> dict[Rule, tuple[int, int]]:
    p = Path(path)
    if p.is_dir():
        p = p / LOCALIZATION_FILE
    out = {}
    with open(p, newline="") as fh:
        for row in csv.DictReader(fh):
            rule = Rule.from_index(int(row["code0"]) * 32 + int(row["code1"]))
            out[rule] = (int(row["T"]), int(row["S"]))
    return out
