"""IR and NS deviation detection."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .model import (
    Instance,
    NEG_INF,
    Outcome,
    WelfareValue,
    _utilities,
    utility,
    validate_outcome,
)

__all__ = [
    "DeviationKind",
    "SINGLETON",
    "Deviation",
    "find_ir_deviation",
    "find_ns_deviation",
    "is_individually_rational",
    "is_nash_stable",
    "all_ns_deviations",
]


class DeviationKind(str, Enum):
    IR = "ir"
    NS = "ns"


class _Singleton:
    __slots__ = ()

    def __repr__(self) -> str:
        return "SINGLETON"

    def __reduce__(self):
        return "SINGLETON"


# target of a move to a fresh singleton coalition (the empty coalition)
SINGLETON = _Singleton()


@dataclass(frozen=True)
class Deviation:
    agent: int
    kind: DeviationKind
    target: object  # coalition index in canonical order, or SINGLETON
    utility_before: WelfareValue
    utility_after: WelfareValue

    def to_json(self) -> dict:
        def enc(w):
            return "-inf" if w is NEG_INF else w

        return {
            "agent": self.agent,
            "kind": self.kind.value,
            "target": "singleton" if self.target is SINGLETON else self.target,
            "utility_before": enc(self.utility_before),
            "utility_after": enc(self.utility_after),
        }


def _coalitions(instance: Instance, outcome) -> tuple[tuple[int, ...], ...]:
    coalitions = outcome.coalitions if isinstance(outcome, Outcome) else outcome
    return validate_outcome(instance, coalitions)


def _current_utilities(instance, coalitions) -> dict[int, WelfareValue]:
    util: dict[int, WelfareValue] = {}
    for c in coalitions:
        util.update(_utilities(instance, c))
    return util


def find_ir_deviation(instance: Instance, outcome) -> Deviation | None:
    """Lowest-id agent with negative utility, or ``None`` if the outcome is IR."""
    coalitions = _coalitions(instance, outcome)
    util = _current_utilities(instance, coalitions)
    for i in range(instance.n):
        if util[i] < 0:
            return Deviation(i, DeviationKind.IR, SINGLETON, util[i], 0)
    return None


def _ns_moves(instance: Instance, coalitions):
    util = _current_utilities(instance, coalitions)
    home = {}
    for idx, c in enumerate(coalitions):
        for a in c:
            home[a] = idx
    for i in range(instance.n):
        before = util[i]
        for idx, c in enumerate(coalitions):
            if idx == home[i]:
                continue
            after = utility(instance, i, c + (i,))
            if after > before:
                yield Deviation(i, DeviationKind.NS, idx, before, after)
        if before < 0:
            yield Deviation(i, DeviationKind.NS, SINGLETON, before, 0)


def find_ns_deviation(instance: Instance, outcome) -> Deviation | None:
    """First improving move in (agent id, target index) order, or ``None``.

    Targets are the other coalitions in canonical order, followed by
    ``SINGLETON`` (leaving for a fresh coalition).
    """
    return next(_ns_moves(instance, _coalitions(instance, outcome)), None)


def all_ns_deviations(instance: Instance, outcome) -> list[Deviation]:
    return list(_ns_moves(instance, _coalitions(instance, outcome)))


def is_individually_rational(instance: Instance, outcome) -> bool:
    return find_ir_deviation(instance, outcome) is None


def is_nash_stable(instance: Instance, outcome) -> bool:
    return find_ns_deviation(instance, outcome) is None
