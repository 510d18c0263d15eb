"""Actin automata: two coupled binary chains with semi-totalistic rules,
their space-time measures and a rule-space survey."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    AutomatonState,
    DomainError,
    Rule,
    SpaceTimeRecord,
    all_rules,
    decode_rule,
    encode_rule,
    random_state,
    reflect_swap,
    run,
    step,
    step_reference,
)

__all__ = [
    "AutomatonState",
    "DomainError",
    "Rule",
    "SpaceTimeRecord",
    "all_rules",
    "decode_rule",
    "encode_rule",
    "random_state",
    "reflect_swap",
    "run",
    "step",
    "step_reference",
]
