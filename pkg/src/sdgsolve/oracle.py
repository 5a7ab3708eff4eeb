"""Exhaustive solver over all set partitions of the agents.

This is the ground truth every other solver is checked against. Partitions
are generated block by block: the next block is always the one holding the
smallest unassigned agent, which visits each set partition exactly once (the
same family as restricted-growth strings with agent 0 in block 0) and lets a
completed block be rejected before its extensions are explored.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

from .model import NEG_INF, Instance, Outcome, WelfareValue, _utilities

__all__ = [
    "SolveMode",
    "SolveResult",
    "OracleRefused",
    "solve_exact",
    "iter_outcomes",
    "restricted_growth_strings",
    "bell_number",
    "DEFAULT_LIMIT_N",
]

DEFAULT_LIMIT_N = 12


class SolveMode(str, Enum):
    WF = "wf"
    WF_IR = "wf-ir"
    WF_NS = "wf-ns"

    @classmethod
    def parse(cls, value) -> "SolveMode":
        if isinstance(value, cls):
            return value
        v = str(value).lower().replace("_", "-")
        for m in cls:
            if m.value == v:
                return m
        raise ValueError(f"unknown mode {value!r}; expected one of wf, wf-ir, wf-ns")


@dataclass
class SolveResult:
    best: Outcome | None
    welfare: WelfareValue
    optimal_count: int | None
    explored: int
    mode: SolveMode
    algo: str = "oracle"
    size_cap: int | None = None
    stats: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        w = self.welfare
        return {
            "algo": self.algo,
            "mode": self.mode.value,
            "welfare": "-inf" if w is NEG_INF else w,
            "coalitions": None if self.best is None else [list(c) for c in self.best.coalitions],
            "optimal_count": self.optimal_count,
            "explored": self.explored,
            "size_cap": self.size_cap,
            "stats": self.stats,
        }


class OracleRefused(RuntimeError):
    """The instance is too large for exhaustive enumeration."""


def bell_number(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def restricted_growth_strings(n: int) -> Iterator[tuple[int, ...]]:
    """All restricted-growth strings of length ``n`` in lexicographic order."""
    if n == 0:
        yield ()
        return
    a = [0] * n
    b = [1] * n  # b[k] = 1 + max(a[:k])
    while True:
        yield tuple(a)
        k = n - 1
        while k > 0 and a[k] == b[k]:
            k -= 1
        if k == 0:
            return
        a[k] += 1
        for j in range(k + 1, n):
            a[j] = 0
            b[j] = max(b[k], a[k] + 1)


def _bits(mask: int) -> tuple[int, ...]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return tuple(out)


class _Evaluator:
    """Per-coalition utilities memoised by member bitmask."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self._cache: dict[int, dict] = {}

    def utilities(self, mask: int) -> dict:
        u = self._cache.get(mask)
        if u is None:
            u = _utilities(self.instance, _bits(mask))
            self._cache[mask] = u
        return u

    def block_welfare(self, mask: int) -> WelfareValue:
        return sum(self.utilities(mask).values(), 0)

    def is_ir_block(self, mask: int) -> bool:
        return all(v >= 0 for v in self.utilities(mask).values())

    def is_ns(self, blocks: list[int]) -> bool:
        for idx, home in enumerate(blocks):
            uh = self.utilities(home)
            for i in _bits(home):
                before = uh[i]
                if before < 0:
                    return False
                for jdx, other in enumerate(blocks):
                    if jdx == idx:
                        continue
                    if self.utilities(other | (1 << i))[i] > before:
                        return False
        return True


def _block_ok(ev: _Evaluator, mask: int, mode: SolveMode, prune: bool) -> bool:
    if not prune:
        return True
    if ev.block_welfare(mask) is NEG_INF:
        return False
    if mode is not SolveMode.WF and not ev.is_ir_block(mask):
        return False
    return True


def _partitions(ev, rest: int, chosen: list[int], mode, cap, prune) -> Iterator[list[int]]:
    if not rest:
        yield chosen
        return
    low = rest & -rest
    others = rest ^ low
    sub = others
    while True:
        block = sub | low
        if cap is None or block.bit_count() <= cap:
            if _block_ok(ev, block, mode, prune):
                chosen.append(block)
                yield from _partitions(ev, rest ^ block, chosen, mode, cap, prune)
                chosen.pop()
        if sub == 0:
            break
        sub = (sub - 1) & others


def _feasible(ev: _Evaluator, blocks: list[int], mode: SolveMode):
    """Welfare of the partition if it is admissible in ``mode``, else None."""
    total = 0
    for b in blocks:
        total = total + ev.block_welfare(b)
    if total is NEG_INF:
        return None
    if mode is SolveMode.WF_IR and not all(ev.is_ir_block(b) for b in blocks):
        return None
    return total


def _canonical(blocks: list[int]) -> tuple[tuple[int, ...], ...]:
    return tuple(sorted((_bits(b) for b in blocks), key=lambda c: c[0]))


def iter_outcomes(
    instance: Instance,
    mode=SolveMode.WF,
    size_cap: int | None = None,
    prune: bool = True,
) -> Iterator[tuple[tuple[tuple[int, ...], ...], WelfareValue]]:
    """Yield ``(canonical coalitions, welfare)`` for every admissible outcome."""
    mode = SolveMode.parse(mode)
    ev = _Evaluator(instance)
    full = (1 << instance.n) - 1
    for blocks in _partitions(ev, full, [], mode, size_cap, prune):
        w = _feasible(ev, blocks, mode)
        if w is None:
            continue
        if mode is SolveMode.WF_NS and not ev.is_ns(blocks):
            continue
        yield _canonical(blocks), w


def _search(instance, mode, size_cap, prune, first_blocks=None):
    """Best welfare, lexicographically least optimum, count and visit total."""
    ev = _Evaluator(instance)
    full = (1 << instance.n) - 1
    best_w: WelfareValue = NEG_INF
    best_c = None
    count = 0
    explored = 0

    def gen():
        if first_blocks is None:
            yield from _partitions(ev, full, [], mode, size_cap, prune)
            return
        for fb in first_blocks:
            if _block_ok(ev, fb, mode, prune):
                yield from _partitions(ev, full ^ fb, [fb], mode, size_cap, prune)

    for blocks in gen():
        explored += 1
        w = _feasible(ev, blocks, mode)
        if w is None or w < best_w:
            continue
        if mode is SolveMode.WF_NS and not ev.is_ns(blocks):
            continue
        canon = _canonical(blocks)
        if best_c is None or w > best_w:
            best_w, best_c, count = w, canon, 1
        else:
            count += 1
            if canon < best_c:
                best_c = canon
    return best_w, best_c, count, explored


def _search_chunk(args):
    return _search(*args)


def _first_blocks(n: int, cap):
    if n == 0:
        return []
    others = ((1 << n) - 1) ^ 1
    out = []
    sub = others
    while True:
        block = sub | 1
        if cap is None or block.bit_count() <= cap:
            out.append(block)
        if sub == 0:
            break
        sub = (sub - 1) & others
    return out


def solve_exact(
    instance: Instance,
    mode=SolveMode.WF,
    limit_n: int = DEFAULT_LIMIT_N,
    size_cap: int | None = None,
    prune: bool = True,
    threads: int = 1,
) -> SolveResult:
    """Maximise welfare over all partitions, optionally restricted to IR or NS.

    ``size_cap`` restricts coalitions to at most that many members (used to
    cross-check the tree-decomposition solver). ``prune`` toggles rejection of
    inadmissible blocks during generation; it never changes the optimum, only
    ``explored``. With ``threads > 1`` the search is split by the block holding
    agent 0 and reduced deterministically.
    """
    mode = SolveMode.parse(mode)
    if instance.n > limit_n:
        raise OracleRefused(
            f"exhaustive search refused: n = {instance.n} exceeds limit_n = {limit_n}"
        )
    if size_cap is not None and size_cap < 1:
        raise ValueError("size_cap must be at least 1")
    if instance.n == 0:
        return SolveResult(Outcome((), 0), 0, 1, 1, mode, size_cap=size_cap)

    if threads is None:
        threads = os.cpu_count() or 1
    if threads > 1:
        fbs = _first_blocks(instance.n, size_cap)
        chunks = [fbs[k::threads] for k in range(threads)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(
                pool.map(
                    _search_chunk,
                    [(instance, mode, size_cap, prune, c) for c in chunks if c],
                )
            )
        best_w, best_c, count, explored = NEG_INF, None, 0, 0
        for w, c, k, e in parts:
            explored += e
            if c is None:
                continue
            if best_c is None or w > best_w:
                best_w, best_c, count = w, c, k
            elif w == best_w:
                count += k
                best_c = min(best_c, c)
    else:
        best_w, best_c, count, explored = _search(instance, mode, size_cap, prune)

    if best_c is None:
        return SolveResult(None, NEG_INF, 0, explored, mode, size_cap=size_cap)
    return SolveResult(Outcome(best_c, best_w), best_w, count, explored, mode, size_cap=size_cap)
