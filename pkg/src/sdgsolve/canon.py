"""Canonical forms of small graphs whose first vertices are pinned.

A topology is ``(n_labeled, adj)`` where ``adj`` is a tuple of neighbour
bitmasks. Vertices ``0..n_labeled-1`` are labeled and keep their positions;
the remaining ("anonymous") vertices may be permuted freely. Two topologies
get the same canonical form exactly when some permutation of anonymous
vertices maps one onto the other.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import permutations

__all__ = [
    "canonical_adjacency",
    "canon_key",
    "brute_force_canonical",
    "relabel",
    "bits",
]


def bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def relabel(adj, perm) -> tuple[int, ...]:
    """Adjacency after sending vertex ``v`` to position ``perm[v]``."""
    out = [0] * len(adj)
    for v, mask in enumerate(adj):
        m = 0
        for u in bits(mask):
            m |= 1 << perm[u]
        out[perm[v]] = m
    return tuple(out)


def _refine(adj, colors):
    """Colour refinement to a stable colouring, colours re-ranked to 0..k-1."""
    n = len(adj)
    nbrs = [bits(adj[v]) for v in range(n)]
    classes = len(set(colors))
    while True:
        sigs = [(colors[v], tuple(sorted(colors[u] for u in nbrs[v]))) for v in range(n)]
        rank = {s: i for i, s in enumerate(sorted(set(sigs)))}
        colors = [rank[s] for s in sigs]
        if len(rank) == classes:
            return colors
        classes = len(rank)


def _twins(adj, u: int, v: int) -> bool:
    a = adj[u] & ~(1 << v)
    b = adj[v] & ~(1 << u)
    return a == b


def _search(adj, colors):
    colors = _refine(adj, colors)
    n = len(adj)
    counts: dict[int, int] = {}
    for c in colors:
        counts[c] = counts.get(c, 0) + 1
    if len(counts) == n:
        return relabel(adj, colors)
    target = min(c for c, k in counts.items() if k > 1)
    reps: list[int] = []
    for v in range(n):
        if colors[v] != target:
            continue
        # swapping twins is an automorphism, so one representative suffices
        if any(_twins(adj, v, r) for r in reps):
            continue
        reps.append(v)
    best = None
    for v in reps:
        branch = [2 * c for c in colors]
        branch[v] -= 1
        leaf = _search(adj, branch)
        if best is None or leaf < best:
            best = leaf
    return best


@lru_cache(maxsize=1 << 18)
def canonical_adjacency(n_labeled: int, adj: tuple[int, ...]) -> tuple[int, ...]:
    """Canonical adjacency with labeled vertices fixed and anonymous ones ordered."""
    n = len(adj)
    if n - n_labeled <= 1:
        return tuple(adj)
    colors = [v if v < n_labeled else n_labeled for v in range(n)]
    return _search(adj, colors)


def canon_key(n_labeled: int, adj) -> bytes:
    """Byte-string key of the canonical form."""
    form = canonical_adjacency(n_labeled, tuple(adj))
    width = max(1, (len(form) + 7) // 8)
    out = bytearray([n_labeled, len(form)])
    for m in form:
        out += m.to_bytes(width, "little")
    return bytes(out)


def brute_force_canonical(n_labeled: int, adj) -> tuple[int, ...]:
    """Least relabelled adjacency over all anonymous permutations (factorial time)."""
    n = len(adj)
    anon = list(range(n_labeled, n))
    best = None
    for p in permutations(anon):
        perm = list(range(n_labeled)) + list(p)
        cand = relabel(adj, perm)
        if best is None or cand < best:
            best = cand
    return tuple(adj) if best is None else best
