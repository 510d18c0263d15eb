"""Actin automaton rules, states and steppers.

Two chains ``x`` and ``y`` of binary cells, each cell updated from its own
state and the number of excited cells among four neighbours::

    u(x_i) = {x_{i-1}, x_{i+1}, y_i, y_{i-1}}
    u(y_i) = {y_{i-1}, y_{i+1}, x_i, x_{i+1}}

Cells outside ``0..n-1`` are permanently resting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _words

N_RULES = 1024


class DomainError(ValueError):
    """Argument outside the domain of an operation."""


def _frozen(a):
    a = np.array(a, dtype=np.uint8)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Rule:
    """Transition matrix ``f[s][sigma]``: next state of a cell in state ``s``
    with ``sigma`` excited neighbours."""

    f: tuple[tuple[int, ...], tuple[int, ...]]

    def __post_init__(self):
        if len(self.f) != 2 or any(len(row) != 5 for row in self.f):
            raise DomainError("rule matrix must be 2x5")
        if any(v not in (0, 1) for row in self.f for v in row):
            raise DomainError("rule matrix entries must be 0 or 1")
        object.__setattr__(self, "f", tuple(tuple(int(v) for v in row) for row in self.f))

    @property
    def code0(self) -> int:
        return _row_code(self.f[0])

    @property
    def code1(self) -> int:
        return _row_code(self.f[1])

    @property
    def index(self) -> int:
        """Position of the rule in sweep order, ``code0 * 32 + code1``."""
        return self.code0 * 32 + self.code1

    @property
    def codes(self) -> tuple[int, int]:
        return self.code0, self.code1

    @classmethod
    def from_rows(cls, row0: str, row1: str) -> Rule:
        """Build from binary strings as printed in rule tables, e.g. ``"00111"``."""
        if len(row0) != 5 or len(row1) != 5 or set(row0 + row1) - {"0", "1"}:
            raise DomainError(f"bad rule rows {row0!r}, {row1!r}")
        return cls((tuple(map(int, row0)), tuple(map(int, row1))))

    @classmethod
    def from_index(cls, index: int) -> Rule:
        if not 0 <= index < N_RULES:
            raise DomainError(f"rule index {index} outside 0..1023")
        return decode_rule(index >> 5, index & 31)

    def rows(self) -> tuple[str, str]:
        return "".join(map(str, self.f[0])), "".join(map(str, self.f[1]))

    def __str__(self):
        return f"({self.code0},{self.code1})"


def _row_code(row) -> int:
    return sum(bit << (4 - j) for j, bit in enumerate(row))


def decode_rule(code0: int, code1: int) -> Rule:
    """Expand decimal codes into the 2x5 matrix, sigma=0 being the MSB."""
    for c in (code0, code1):
        if not isinstance(c, (int, np.integer)) or not 0 <= c <= 31:
            raise DomainError(f"rule code {c!r} outside 0..31")
    return Rule(tuple(tuple((int(c) >> (4 - j)) & 1 for j in range(5)) for c in (code0, code1)))


def encode_rule(rule: Rule) -> tuple[int, int]:
    return rule.code0, rule.code1


def all_rules() -> list[Rule]:
    return [Rule.from_index(k) for k in range(N_RULES)]


@dataclass(frozen=True, eq=False)
class AutomatonState:
    """Both chains at time ``t``; arrays are read-only uint8 of length n."""

    x: np.ndarray
    y: np.ndarray
    t: int = 0

    def __post_init__(self):
        x, y = _frozen(self.x), _frozen(self.y)
        if x.ndim != 1 or x.shape != y.shape or x.size == 0:
            raise DomainError("chains must be non-empty 1-d arrays of equal length")
        if x.max(initial=0) > 1 or y.max(initial=0) > 1:
            raise DomainError("cells must be 0 or 1")
        if self.t < 0:
            raise DomainError("time step must be non-negative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size

    @classmethod
    def resting(cls, n: int) -> AutomatonState:
        return cls(np.zeros(n, np.uint8), np.zeros(n, np.uint8))

    def __eq__(self, other):
        if not isinstance(other, AutomatonState):
            return NotImplemented
        return (self.t == other.t and np.array_equal(self.x, other.x)
                and np.array_equal(self.y, other.y))

    def __hash__(self):
        return hash((self.t, self.x.tobytes(), self.y.tobytes()))

    def same_cells(self, other: AutomatonState) -> bool:
        return np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)


def random_state(n: int, rng: np.random.Generator, p: float = 0.5,
                 width: int | None = None) -> AutomatonState:
    """Resting chains with a centred window of ``width`` random cells
    (whole chain when ``width`` is None), each excited with probability p."""
    width = n if width is None else min(width, n)
    lo = (n - width) // 2
    cells = (rng.random((2, width)) < p).astype(np.uint8)
    x = np.zeros(n, np.uint8)
    y = np.zeros(n, np.uint8)
    x[lo:lo + width] = cells[0]
    y[lo:lo + width] = cells[1]
    return AutomatonState(x, y)


def neighbor_sum(state: AutomatonState, chain: str, i: int) -> int:
    n = state.n
    if not 0 <= i < n:
        raise DomainError(f"site {i} outside 0..{n - 1}")
    if chain == "x":
        own, other, other_offsets = state.x, state.y, (0, -1)
    elif chain == "y":
        own, other, other_offsets = state.y, state.x, (0, 1)
    else:
        raise DomainError(f"unknown chain {chain!r}")

    def at(a, j):
        return int(a[j]) if 0 <= j < n else 0

    return at(own, i - 1) + at(own, i + 1) + sum(at(other, i + o) for o in other_offsets)


def step_reference(state: AutomatonState, rule: Rule) -> AutomatonState:
    """Per-site stepper; slow, kept as the oracle for :func:`step`."""
    n = state.n
    f = rule.f
    nx = [f[int(state.x[i])][neighbor_sum(state, "x", i)] for i in range(n)]
    ny = [f[int(state.y[i])][neighbor_sum(state, "y", i)] for i in range(n)]
    return AutomatonState(np.array(nx, np.uint8), np.array(ny, np.uint8), state.t + 1)


def step(state: AutomatonState, rule: Rule) -> AutomatonState:
    """Word-parallel synchronous update of both chains."""
    n = state.n
    x, y = _words.pack(state.x), _words.pack(state.y)
    nx, ny = np.empty_like(x), np.empty_like(y)
    _words.step_words(x, y, nx, ny, rule.code0, rule.code1, _words.top_mask(n))
    return AutomatonState(_words.unpack(nx, n), _words.unpack(ny, n), state.t + 1)


@dataclass(frozen=True, eq=False)
class SpaceTimeRecord:
    """History of both chains: ``x[t]``/``y[t]`` for t = 0..tau."""

    x: np.ndarray
    y: np.ndarray
    rule: Rule
    tau: int = field(init=False)
    n: int = field(init=False)

    def __post_init__(self):
        x, y = _frozen(self.x), _frozen(self.y)
        if x.ndim != 2 or x.shape != y.shape:
            raise DomainError("histories must be equal-shaped 2-d arrays")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "tau", x.shape[0] - 1)
        object.__setattr__(self, "n", x.shape[1])

    def chain(self, name: str) -> np.ndarray:
        if name == "x":
            return self.x
        if name == "y":
            return self.y
        raise DomainError(f"unknown chain {name!r}")

    def state(self, t: int) -> AutomatonState:
        return AutomatonState(self.x[t], self.y[t], t)

    @property
    def rows_x(self) -> list[np.ndarray]:
        return list(self.x)

    @property
    def rows_y(self) -> list[np.ndarray]:
        return list(self.y)

    def to_text(self) -> str:
        """ASCII dump: for each step one ``x`` line then one ``y`` line."""
        lines = []
        for t in range(self.tau + 1):
            for a in (self.x, self.y):
                lines.append("".join("01"[v] for v in a[t]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, rule: Rule) -> SpaceTimeRecord:
        lines = [ln for ln in text.splitlines() if ln]
        rows = np.array([[int(c) for c in ln] for ln in lines], dtype=np.uint8)
        return cls(rows[0::2], rows[1::2], rule)

    def __eq__(self, other):
        if not isinstance(other, SpaceTimeRecord):
            return NotImplemented
        return (self.rule == other.rule and np.array_equal(self.x, other.x)
                and np.array_equal(self.y, other.y))

    __hash__ = None


def run(rule: Rule, initial: AutomatonState, tau: int, reference: bool = False) -> SpaceTimeRecord:
    """Evolve ``tau`` steps from ``initial``."""
    if tau < 1:
        raise DomainError("tau must be at least 1")
    if reference:
        states = [initial]
        for _ in range(tau):
            states.append(step_reference(states[-1], rule))
        return SpaceTimeRecord(np.stack([s.x for s in states]),
                               np.stack([s.y for s in states]), rule)
    n = initial.n
    hx, hy = _words.run_words(_words.pack(initial.x), _words.pack(initial.y),
                              rule.code0, rule.code1, tau, _words.top_mask(n))
    return SpaceTimeRecord(_words.unpack(hx, n), _words.unpack(hy, n), rule)


def reflect_swap(state: AutomatonState) -> AutomatonState:
    """Mirror the lattice and exchange the chains: x'[i] = y[n-1-i], y'[i] = x[n-1-i]."""
    return AutomatonState(state.y[::-1], state.x[::-1], state.t)


def reflect_swap_record(record: SpaceTimeRecord) -> SpaceTimeRecord:
    return SpaceTimeRecord(record.y[:, ::-1], record.x[:, ::-1], record.rule)
