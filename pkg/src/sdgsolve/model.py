"""Game representation: networks, scoring vectors, coalitions and welfare.

Agents are dense ids ``0..n-1``. Utilities and welfare are exact Python
integers, extended with the :data:`NEG_INF` sentinel for inadmissible
coalitions (a pair beyond the distance horizon, or a disconnected coalition).
"""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

__all__ = [
    "NEG_INF",
    "INFINITE",
    "ContractError",
    "InvalidOutcome",
    "ScoringVector",
    "Instance",
    "Outcome",
    "WelfareValue",
    "score",
    "distances_within",
    "utility",
    "coalition_utilities",
    "coalition_welfare",
    "welfare",
    "validate_outcome",
    "make_outcome",
    "is_connected_subset",
    "diameter",
]


class _NegInf:
    """Singleton standing for minus infinity in welfare arithmetic."""

    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __reduce__(self):
        return (_NegInf, ())

    def __repr__(self) -> str:
        return "NEG_INF"

    def __str__(self) -> str:
        return "-inf"

    def __add__(self, other):
        if isinstance(other, (int, _NegInf)):
            return self
        return NotImplemented

    __radd__ = __add__

    def __lt__(self, other):
        if isinstance(other, int):
            return True
        if isinstance(other, _NegInf):
            return False
        return NotImplemented

    def __le__(self, other):
        if isinstance(other, (int, _NegInf)):
            return True
        return NotImplemented

    def __gt__(self, other):
        if isinstance(other, (int, _NegInf)):
            return False
        return NotImplemented

    def __ge__(self, other):
        if isinstance(other, int):
            return False
        if isinstance(other, _NegInf):
            return True
        return NotImplemented

    def __eq__(self, other):
        return other is self

    def __hash__(self) -> int:
        return hash("sdgsolve.NEG_INF")


NEG_INF = _NegInf()
WelfareValue = Union[int, _NegInf]

# distance between agents with no connecting path
INFINITE = math.inf


class ContractError(ValueError):
    """An operation was called outside its precondition."""


class InvalidOutcome(ValueError):
    """A list of coalitions is not a partition of the agents."""

    def __init__(self, message: str, missing=(), duplicated=(), out_of_range=()):
        super().__init__(message)
        self.missing = tuple(missing)
        self.duplicated = tuple(duplicated)
        self.out_of_range = tuple(out_of_range)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


@dataclass(frozen=True)
class ScoringVector:
    """Non-increasing integer vector ``(s_1, ..., s_delta)``."""

    entries: tuple[int, ...]

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise ValueError("scoring vector must have at least one entry")
        for e in entries:
            if not _is_int(e):
                raise ValueError(f"scoring entries must be integers, got {e!r}")
        for a, b in zip(entries, entries[1:]):
            if b > a:
                raise ValueError(f"scoring vector must be non-increasing: {entries}")
        object.__setattr__(self, "entries", entries)
        if entries[0] <= 0:
            warnings.warn(
                "s_1 <= 0: the all-singletons outcome is optimal and stable",
                stacklevel=3,
            )

    @property
    def delta(self) -> int:
        return len(self.entries)

    @property
    def s1(self) -> int:
        return self.entries[0]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, idx):
        return self.entries[idx]


@dataclass(frozen=True)
class Instance:
    """A score-based social distance game.

    ``edges`` may be given as any iterable of pairs; it is normalised to a
    frozenset of ``(a, b)`` tuples with ``a < b``. ``labels`` optionally names
    each agent for file round-trips.
    """

    n: int
    edges: frozenset
    scoring: ScoringVector
    open_mode: bool = False
    labels: tuple | None = None
    adjacency: tuple = field(init=False, repr=False, compare=False)
    masks: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not _is_int(self.n) or self.n < 0:
            raise ValueError(f"agent count must be a non-negative integer, got {self.n!r}")
        norm = set()
        for e in self.edges:
            a, b = e
            if not (_is_int(a) and _is_int(b)):
                raise ValueError(f"edge endpoints must be integers: {e!r}")
            if a == b:
                raise ValueError(f"self-loop on agent {a}")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"edge {e!r} has an endpoint outside 0..{self.n - 1}")
            key = (min(a, b), max(a, b))
            if key in norm:
                raise ValueError(f"duplicate edge {key}")
            norm.add(key)
        object.__setattr__(self, "edges", frozenset(norm))
        if not isinstance(self.scoring, ScoringVector):
            object.__setattr__(self, "scoring", ScoringVector(tuple(self.scoring)))
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != self.n or len(set(labels)) != self.n:
                raise ValueError("labels must name every agent exactly once")
            object.__setattr__(self, "labels", labels)
        adj = [set() for _ in range(self.n)]
        for a, b in norm:
            adj[a].add(b)
            adj[b].add(a)
        object.__setattr__(self, "adjacency", tuple(frozenset(s) for s in adj))
        object.__setattr__(
            self, "masks", tuple(sum(1 << j for j in s) for s in adj)
        )

    @property
    def agents(self) -> range:
        return range(self.n)

    @property
    def max_degree(self) -> int:
        return max((len(s) for s in self.adjacency), default=0)

    def neighbors(self, i: int) -> frozenset:
        return self.adjacency[i]

    def has_edge(self, a: int, b: int) -> bool:
        return b in self.adjacency[a]

    def score(self, d) -> WelfareValue:
        return score(self, d)

    def components(self) -> list[tuple[int, ...]]:
        """Connected components as sorted tuples, ordered by minimum member."""
        seen = [False] * self.n
        comps = []
        for start in range(self.n):
            if seen[start]:
                continue
            seen[start] = True
            comp = [start]
            queue = deque([start])
            while queue:
                v = queue.popleft()
                for w in self.adjacency[v]:
                    if not seen[w]:
                        seen[w] = True
                        comp.append(w)
                        queue.append(w)
            comps.append(tuple(sorted(comp)))
        return comps

    def induced(self, agents: Sequence[int]) -> tuple["Instance", tuple[int, ...]]:
        """Subgame on ``agents``; returns it with the local-to-global id map."""
        agents = tuple(sorted(agents))
        local = {a: k for k, a in enumerate(agents)}
        edges = [
            (local[a], local[b]) for a, b in self.edges if a in local and b in local
        ]
        labels = None if self.labels is None else [self.labels[a] for a in agents]
        sub = Instance(len(agents), edges, self.scoring, self.open_mode, labels)
        return sub, agents

    def with_scoring(self, scoring, open_mode: bool | None = None) -> "Instance":
        return Instance(
            self.n,
            self.edges,
            scoring,
            self.open_mode if open_mode is None else open_mode,
            self.labels,
        )


@dataclass(frozen=True)
class Outcome:
    """A partition of all agents into coalitions, in canonical order."""

    coalitions: tuple[tuple[int, ...], ...]
    welfare: WelfareValue

    def coalition_of(self, agent: int) -> int:
        for idx, c in enumerate(self.coalitions):
            if agent in c:
                return idx
        raise KeyError(agent)

    def to_json(self) -> dict:
        w = self.welfare
        return {
            "coalitions": [list(c) for c in self.coalitions],
            "welfare": "-inf" if w is NEG_INF else w,
        }


def score(instance: Instance, d) -> WelfareValue:
    """Score contributed by a coalition partner at distance ``d``."""
    if d == INFINITE:
        return NEG_INF
    if not _is_int(d) or d < 1:
        raise ContractError(f"distance must be a positive integer or INFINITE, got {d!r}")
    s = instance.scoring.entries
    if d <= len(s):
        return s[d - 1]
    return s[-1] if instance.open_mode else NEG_INF


def _bfs_masked(masks, source: int, allowed: int) -> dict[int, int]:
    """BFS from ``source`` over agents in bitmask ``allowed``."""
    dist = {source: 0}
    frontier = 1 << source
    seen = frontier
    d = 0
    while frontier:
        d += 1
        nxt = 0
        f = frontier
        while f:
            low = f & -f
            v = low.bit_length() - 1
            f ^= low
            nxt |= masks[v]
        nxt &= allowed & ~seen
        seen |= nxt
        frontier = nxt
        f = nxt
        while f:
            low = f & -f
            dist[low.bit_length() - 1] = d
            f ^= low
    return dist


def _to_mask(members: Iterable[int]) -> int:
    m = 0
    for a in members:
        m |= 1 << a
    return m


def _check_members(instance: Instance, members) -> tuple[int, ...]:
    c = tuple(sorted(set(members)))
    if not c:
        raise ContractError("coalition must be non-empty")
    if len(c) != len(tuple(members)):
        raise ContractError(f"coalition has duplicate members: {tuple(members)}")
    if c[0] < 0 or c[-1] >= instance.n:
        raise ContractError(f"coalition {c} has agents outside 0..{instance.n - 1}")
    return c


def distances_within(instance: Instance, members: Sequence[int]) -> list[list]:
    """All-pairs distances in ``G[members]``, rows/columns in sorted member order.

    Unreachable pairs hold :data:`INFINITE`.
    """
    c = _check_members(instance, members)
    allowed = _to_mask(c)
    out = []
    for i in c:
        dist = _bfs_masked(instance.masks, i, allowed)
        out.append([dist.get(j, INFINITE) for j in c])
    return out


def coalition_utilities(instance: Instance, members: Sequence[int]) -> dict[int, WelfareValue]:
    """Utility of every member of the coalition, keyed by agent."""
    c = _check_members(instance, members)
    return _utilities(instance, c)


def _utilities(instance: Instance, c: tuple[int, ...]) -> dict[int, WelfareValue]:
    if len(c) == 1:
        return {c[0]: 0}
    allowed = _to_mask(c)
    s = instance.scoring.entries
    delta = len(s)
    tail = s[-1] if instance.open_mode else NEG_INF
    out = {}
    for i in c:
        dist = _bfs_masked(instance.masks, i, allowed)
        if len(dist) < len(c):
            out[i] = NEG_INF
            continue
        total = 0
        for j, d in dist.items():
            if j == i:
                continue
            if d <= delta:
                total += s[d - 1]
            elif tail is NEG_INF:
                total = NEG_INF
                break
            else:
                total += tail
        out[i] = total
    return out


def utility(instance: Instance, i: int, members: Sequence[int]) -> WelfareValue:
    """Utility of agent ``i`` for the coalition ``members`` (which must hold ``i``)."""
    c = _check_members(instance, members)
    if i not in c:
        raise ContractError(f"agent {i} is not a member of coalition {c}")
    if len(c) == 1:
        return 0
    allowed = _to_mask(c)
    dist = _bfs_masked(instance.masks, i, allowed)
    if len(dist) < len(c):
        return NEG_INF
    total = 0
    for j, d in dist.items():
        if j != i:
            total = total + score(instance, d)
    return total


def coalition_welfare(instance: Instance, members: Sequence[int]) -> WelfareValue:
    """Sum of member utilities of a single coalition."""
    return sum(coalition_utilities(instance, members).values(), 0)


def validate_outcome(instance: Instance, coalitions) -> tuple[tuple[int, ...], ...]:
    """Check that ``coalitions`` partition the agents; return the canonical form.

    Raises :class:`InvalidOutcome` naming missing, duplicated and out-of-range
    agents.
    """
    seen: dict[int, int] = {}
    dup, bad = set(), set()
    blocks = []
    for c in coalitions:
        c = list(c)
        if not c:
            raise InvalidOutcome("empty coalition in outcome")
        for a in c:
            if not _is_int(a) or not 0 <= a < instance.n:
                bad.add(a)
                continue
            if a in seen:
                dup.add(a)
            seen[a] = seen.get(a, 0) + 1
        blocks.append(tuple(sorted(set(a for a in c if _is_int(a)))))
    missing = sorted(set(range(instance.n)) - set(seen))
    if missing or dup or bad:
        parts = []
        if missing:
            parts.append(f"missing agents {missing}")
        if dup:
            parts.append(f"duplicated agents {sorted(dup)}")
        if bad:
            parts.append(f"unknown agents {sorted(bad, key=repr)}")
        raise InvalidOutcome(
            "not a partition: " + "; ".join(parts),
            missing=missing,
            duplicated=sorted(dup),
            out_of_range=sorted(bad, key=repr),
        )
    return tuple(sorted(blocks, key=lambda b: b[0]))


def welfare(instance: Instance, outcome) -> WelfareValue:
    """Social welfare of an outcome (an :class:`Outcome` or a list of coalitions)."""
    coalitions = outcome.coalitions if isinstance(outcome, Outcome) else outcome
    canon = validate_outcome(instance, coalitions)
    total = 0
    for c in canon:
        total = total + sum(_utilities(instance, c).values(), 0)
        if total is NEG_INF:
            return NEG_INF
    return total


def make_outcome(instance: Instance, coalitions) -> Outcome:
    canon = validate_outcome(instance, coalitions)
    return Outcome(canon, welfare(instance, canon))


def is_connected_subset(instance: Instance, members: Sequence[int]) -> bool:
    c = tuple(members)
    if len(c) <= 1:
        return True
    dist = _bfs_masked(instance.masks, c[0], _to_mask(c))
    return len(dist) == len(set(c))


def diameter(instance: Instance, members: Sequence[int]):
    """Diameter of ``G[members]`` (:data:`INFINITE` when disconnected)."""
    rows = distances_within(instance, members)
    return max((d for row in rows for d in row), default=0)
