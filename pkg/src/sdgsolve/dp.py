"""Dynamic program over a nice tree decomposition with a coalition size cap.

Records at a node are keyed by the partition of the bag into coalitions and,
for each such coalition, its *topology*: the graph induced on the coalition so
far, with agents already forgotten kept only as anonymous vertices. A
coalition's welfare is credited when its last bag agent is forgotten, since
distances inside it are final only then. The stored value is the best welfare
of the coalitions finalised below the node.

For Nash stability, which depends on coalitions other than an agent's own, the
program keeps the ``k`` best records per key (IR-filtered) and the candidates
reaching the root are checked in decreasing welfare order; ``k`` doubles until
a stable candidate appears or the candidate list is exhausted.
"""

from __future__ import annotations

import heapq
import warnings
from bisect import bisect_left
from dataclasses import dataclass
from functools import lru_cache
from math import comb

from .bounds import AUTO, UNBOUNDED, effective_size_cap
from .canon import bits, canon_key, canonical_adjacency
from .model import NEG_INF, Instance, Outcome, make_outcome
from .oracle import SolveMode, SolveResult
from .stability import is_nash_stable
from .treewidth import (
    NiceTreeDecomposition,
    NodeKind,
    build_nice_decomposition,
    subtree_vertices,
    validate_decomposition,
)

__all__ = [
    "CoalitionTopology",
    "canonical_topology",
    "solve_dp",
    "reconstruct",
    "run_tables",
    "key_space_bound",
    "DPError",
    "NSSearchLimit",
]


class DPError(RuntimeError):
    """Inconsistent dynamic-programming state."""


class NSSearchLimit(DPError):
    """Nash-stable candidate search exceeded its record budget without an answer."""


@dataclass(frozen=True)
class CoalitionTopology:
    """Induced graph of a partial coalition: labeled bag agents plus anonymous members.

    ``adjacency`` lists neighbour bitmasks; positions ``0..len(labeled)-1`` are
    the labeled agents in sorted order, the rest are anonymous.
    """

    labeled: tuple[int, ...]
    anon_count: int
    adjacency: tuple[int, ...]

    def __post_init__(self):
        if list(self.labeled) != sorted(set(self.labeled)):
            raise ValueError("labeled agents must be sorted and distinct")
        if len(self.adjacency) != len(self.labeled) + self.anon_count:
            raise ValueError("adjacency size does not match member count")
        for v, m in enumerate(self.adjacency):
            if m >> len(self.adjacency) or m & (1 << v):
                raise ValueError(f"bad neighbour mask at vertex {v}")
            for u in bits(m):
                if not self.adjacency[u] & (1 << v):
                    raise ValueError("adjacency is not symmetric")

    @property
    def size(self) -> int:
        return len(self.adjacency)

    @property
    def canon_key(self) -> bytes:
        return canonical_topology(self)


def canonical_topology(t: CoalitionTopology) -> bytes:
    """Key equal for two topologies iff they agree up to permuting anonymous members."""
    return bytes(t.labeled) + b"|" + canon_key(len(t.labeled), t.adjacency)


def key_space_bound(bag_size: int, cap: int) -> int:
    """Upper bound on the number of record keys at a node with ``bag_size`` agents.

    Counts every set partition of the bag and, per block with ``L`` labeled
    agents, every graph on up to ``cap - L`` extra anonymous vertices without
    quotienting by symmetry.
    """

    def per_block(k: int) -> int:
        if k > cap:
            return 0
        return sum(2 ** (k * a + comb(a, 2)) for a in range(cap - k + 1))

    f = [1] + [0] * bag_size
    for m in range(1, bag_size + 1):
        f[m] = sum(comb(m - 1, k - 1) * per_block(k) * f[m - k] for k in range(1, m + 1))
    return f[bag_size]


# ---------------------------------------------------------------------------
# topology operations on (n_labeled, adjacency) pairs


@lru_cache(maxsize=1 << 16)
def _introduce(n_lab: int, adj: tuple, pos: int, nbr_mask: int) -> tuple:
    n = len(adj)
    perm = [i if i < pos else i + 1 for i in range(n)]
    out = [0] * (n + 1)
    for v, m in enumerate(adj):
        mm = 0
        for u in bits(m):
            mm |= 1 << perm[u]
        out[perm[v]] = mm
    for j in bits(nbr_mask):
        q = perm[j]
        out[q] |= 1 << pos
        out[pos] |= 1 << q
    return canonical_adjacency(n_lab + 1, tuple(out))


def _components_anchored(adj: tuple, n_lab: int) -> bool:
    """Every connected component holds at least one labeled vertex."""
    n = len(adj)
    seen = 0
    frontier = (1 << n_lab) - 1
    seen = frontier
    while frontier:
        nxt = 0
        for v in bits(frontier):
            nxt |= adj[v]
        frontier = nxt & ~seen
        seen |= frontier
    return seen == (1 << n) - 1


@lru_cache(maxsize=1 << 16)
def _forget_open(n_lab: int, adj: tuple, pos: int):
    """Turn labeled vertex ``pos`` anonymous; None if part of the coalition is cut off."""
    n = len(adj)
    perm = []
    for i in range(n):
        if i < pos:
            perm.append(i)
        elif i == pos:
            perm.append(n_lab - 1)
        elif i < n_lab:
            perm.append(i - 1)
        else:
            perm.append(i)
    out = [0] * n
    for v, m in enumerate(adj):
        mm = 0
        for u in bits(m):
            mm |= 1 << perm[u]
        out[perm[v]] = mm
    out = tuple(out)
    if not _components_anchored(out, n_lab - 1):
        return None
    return canonical_adjacency(n_lab - 1, out)


@lru_cache(maxsize=1 << 16)
def _glue(n_lab: int, adj1: tuple, adj2: tuple) -> tuple:
    a1 = len(adj1) - n_lab
    n = len(adj1) + len(adj2) - n_lab

    def shift(i):
        return i if i < n_lab else i + a1

    out = list(adj1) + [0] * (n - len(adj1))
    for v, m in enumerate(adj2):
        mm = 0
        for u in bits(m):
            mm |= 1 << shift(u)
        out[shift(v)] |= mm
    return canonical_adjacency(n_lab, tuple(out))


class _Context:
    def __init__(self, instance: Instance, mode: SolveMode, cap: int, k: int):
        self.instance = instance
        self.mode = mode
        self.cap = cap
        self.k = k
        s = instance.scoring.entries
        self.scores = s
        self.tail = s[-1] if instance.open_mode else None
        self._final: dict = {}

    def finalize(self, adj: tuple):
        """(total utility, least member utility) of a closed coalition, or None."""
        hit = self._final.get(adj, False)
        if hit is not False:
            return hit
        n = len(adj)
        full = (1 << n) - 1
        s, tail, delta = self.scores, self.tail, len(self.scores)
        total, least = 0, None
        result = None
        for src in range(n):
            seen = 1 << src
            frontier = seen
            d = 0
            u = 0
            while frontier:
                d += 1
                nxt = 0
                for v in bits(frontier):
                    nxt |= adj[v]
                frontier = nxt & ~seen
                seen |= frontier
                cnt = frontier.bit_count()
                if not cnt:
                    break
                if d <= delta:
                    u += cnt * s[d - 1]
                elif tail is None:
                    u = None
                    break
                else:
                    u += cnt * tail
            if u is None or seen != full:
                break
            total += u
            least = u if least is None else min(least, u)
        else:
            result = (total, least if least is not None else 0)
        self._final[adj] = result
        return result


class _Acc:
    """Per-key lists of the ``k`` best (welfare, open members, finalised) records."""

    def __init__(self, k: int):
        self.k = k
        self.d: dict = {}

    def add(self, key, entry):
        lst = self.d.get(key)
        if lst is None:
            self.d[key] = [entry]
        elif self.k == 1:
            if entry[0] > lst[0][0]:
                lst[0] = entry
        else:
            lst.append(entry)
            if len(lst) > 4 * self.k:
                lst.sort(key=lambda e: -e[0])
                del lst[self.k :]

    def done(self) -> dict:
        if self.k > 1:
            for lst in self.d.values():
                lst.sort(key=lambda e: -e[0])
                del lst[self.k :]
        return self.d


def _sorted_blocks(blocks: list):
    order = sorted(range(len(blocks)), key=lambda i: blocks[i][0][0])
    return tuple(blocks[i] for i in order), order


def _do_introduce(ctx: _Context, child: dict, v: int) -> dict:
    acc = _Acc(ctx.k)
    nb = ctx.instance.adjacency[v]
    for key, entries in child.items():
        # v opens a new coalition
        blocks = list(key) + [((v,), (0,))]
        new_key, order = _sorted_blocks(blocks)
        single = frozenset((v,))
        for w, opens, fin in entries:
            o = list(opens) + [single]
            acc.add(new_key, (w, tuple(o[i] for i in order), fin))
        # v joins a coalition already meeting the bag
        for b, (lab, adj) in enumerate(key):
            if len(adj) + 1 > ctx.cap:
                continue
            pos = bisect_left(lab, v)
            mask = 0
            for j, a in enumerate(lab):
                if a in nb:
                    mask |= 1 << j
            new_adj = _introduce(len(lab), adj, pos, mask)
            new_lab = lab[:pos] + (v,) + lab[pos:]
            blocks = list(key)
            blocks[b] = (new_lab, new_adj)
            new_key, order = _sorted_blocks(blocks)
            for w, opens, fin in entries:
                o = list(opens)
                o[b] = o[b] | single
                acc.add(new_key, (w, tuple(o[i] for i in order), fin))
    return acc.done()


def _do_forget(ctx: _Context, child: dict, v: int) -> dict:
    acc = _Acc(ctx.k)
    need_ir = ctx.mode is not SolveMode.WF
    for key, entries in child.items():
        for b, (lab, adj) in enumerate(key):
            if v in lab:
                break
        else:
            raise DPError(f"forgotten agent {v} is not in any block of {key}")
        pos = lab.index(v)
        if len(lab) == 1:
            fin_val = ctx.finalize(adj)
            if fin_val is None:
                continue
            contrib, least = fin_val
            if need_ir and least < 0:
                continue
            new_key = key[:b] + key[b + 1 :]
            for w, opens, fin in entries:
                coal = tuple(sorted(opens[b]))
                acc.add(new_key, (w + contrib, opens[:b] + opens[b + 1 :], ("c", coal, fin)))
            continue
        new_adj = _forget_open(len(lab), adj, pos)
        if new_adj is None:
            continue
        blocks = list(key)
        blocks[b] = (lab[:pos] + lab[pos + 1 :], new_adj)
        new_key, order = _sorted_blocks(blocks)
        for w, opens, fin in entries:
            acc.add(new_key, (w, tuple(opens[i] for i in order), fin))
    return acc.done()


def _do_join(ctx: _Context, left: dict, right: dict) -> dict:
    acc = _Acc(ctx.k)
    groups: dict = {}
    for key, entries in right.items():
        groups.setdefault(tuple(b[0] for b in key), []).append((key, entries))
    for key1, ents1 in left.items():
        sig = tuple(b[0] for b in key1)
        for key2, ents2 in groups.get(sig, ()):
            blocks = []
            for (lab, a1), (_, a2) in zip(key1, key2):
                if len(a1) + len(a2) - len(lab) > ctx.cap:
                    break
                blocks.append((lab, _glue(len(lab), a1, a2)))
            else:
                new_key = tuple(blocks)
                for i, j in _best_pairs(ents1, ents2, ctx.k):
                    w1, o1, f1 = ents1[i]
                    w2, o2, f2 = ents2[j]
                    opens = tuple(x | y for x, y in zip(o1, o2))
                    if f1 is None:
                        fin = f2
                    elif f2 is None:
                        fin = f1
                    else:
                        fin = ("j", f1, f2)
                    acc.add(new_key, (w1 + w2, opens, fin))
    return acc.done()


def _best_pairs(a: list, b: list, k: int):
    """Index pairs of the ``k`` largest ``a[i] + b[j]`` welfare sums (lists sorted descending)."""
    if k == 1:
        return [(0, 0)]
    if len(a) * len(b) <= k:
        return [(i, j) for i in range(len(a)) for j in range(len(b))]
    heap = [(-(a[0][0] + b[0][0]), 0, 0)]
    seen = {(0, 0)}
    out = []
    while heap and len(out) < k:
        _, i, j = heapq.heappop(heap)
        out.append((i, j))
        for ni, nj in ((i + 1, j), (i, j + 1)):
            if ni < len(a) and nj < len(b) and (ni, nj) not in seen:
                seen.add((ni, nj))
                heapq.heappush(heap, (-(a[ni][0] + b[nj][0]), ni, nj))
    return out


def run_tables(
    instance: Instance,
    td: NiceTreeDecomposition,
    mode: SolveMode,
    cap: int,
    k: int = 1,
    keep_tables: bool = False,
    check_introduce: bool = False,
):
    """Run the program; return (root records, stats, tables or None)."""
    ctx = _Context(instance, mode, cap, k)
    tables: dict = {}
    kept: dict = {} if keep_tables else None
    node_keys = []
    vx = subtree_vertices(td) if check_introduce else None
    for nid in td.postorder():
        node = td.nodes[nid]
        if node.kind is NodeKind.LEAF:
            table = {(): [(0, (), None)]}
        elif node.kind is NodeKind.INTRODUCE:
            (c,) = node.children
            if check_introduce:
                child = td.nodes[c]
                forgotten = vx[c] - set(child.bag)
                if instance.adjacency[node.agent] & forgotten:
                    raise DPError(
                        f"introduced agent {node.agent} at node {nid} has edges to forgotten agents"
                    )
            table = _do_introduce(ctx, tables.pop(c), node.agent)
        elif node.kind is NodeKind.FORGET:
            (c,) = node.children
            table = _do_forget(ctx, tables.pop(c), node.agent)
        else:
            c1, c2 = node.children
            table = _do_join(ctx, tables.pop(c1), tables.pop(c2))
        tables[nid] = table
        node_keys.append((nid, len(node.bag), len(table)))
        if keep_tables:
            kept[nid] = table
    root = tables[td.root].get((), [])
    stats = {
        "width": td.width,
        "max_keys": max((c for _, _, c in node_keys), default=0),
        "node_keys": node_keys,
    }
    return root, stats, kept


def _walk_finalised(fin) -> list[tuple[int, ...]]:
    out, stack = [], [fin]
    while stack:
        f = stack.pop()
        if f is None:
            continue
        if f[0] == "c":
            out.append(f[1])
            stack.append(f[2])
        else:
            stack.append(f[1])
            stack.append(f[2])
    return out


def reconstruct(instance: Instance, root_entry) -> Outcome:
    """Outcome encoded by a root record; checks its welfare against the record."""
    w, opens, fin = root_entry
    if opens:
        raise DPError("root record still has open coalitions")
    coalitions = _walk_finalised(fin)
    outcome = make_outcome(instance, coalitions)
    if outcome.welfare != w:
        raise DPError(f"reconstructed welfare {outcome.welfare} != recorded {w}")
    return outcome


def _solve_connected(instance, mode, requested_cap, td, ns_initial_k, ns_max_k, check_introduce):
    if td is None:
        td = build_nice_decomposition(instance)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cap_info = effective_size_cap(instance, requested_cap, treewidth=max(td.width, 0))
    cap = cap_info.resolve(instance.n)
    info = {"cap": cap, "cap_source": cap_info.source, "width": td.width}
    if mode is not SolveMode.WF_NS:
        root, stats, _ = run_tables(instance, td, mode, cap, 1, check_introduce=check_introduce)
        info["max_keys"] = stats["max_keys"]
        if not root:
            return None, info
        return reconstruct(instance, root[0]), info
    k = ns_initial_k
    checked = set()
    while True:
        root, stats, _ = run_tables(instance, td, SolveMode.WF_NS, cap, k, check_introduce=check_introduce)
        info["max_keys"] = stats["max_keys"]
        info["ns_candidates"] = len(root)
        for entry in root:
            outcome = reconstruct(instance, entry)
            if outcome.coalitions in checked:
                continue
            checked.add(outcome.coalitions)
            if is_nash_stable(instance, outcome):
                info["ns_k"] = k
                return outcome, info
        if len(root) < k:
            info["ns_k"] = k
            return None, info
        if k >= ns_max_k:
            raise NSSearchLimit(
                f"no Nash-stable outcome among the {k} best IR candidates; raise ns_max_k to search further"
            )
        k = min(2 * k, ns_max_k)


def solve_dp(
    instance: Instance,
    mode=SolveMode.WF,
    size_cap=AUTO,
    decomposition: NiceTreeDecomposition | None = None,
    *,
    ns_initial_k: int = 8,
    ns_max_k: int = 4096,
    check_introduce: bool = False,
) -> SolveResult:
    """Best outcome whose coalitions all have at most ``size_cap`` members.

    ``size_cap`` is an integer or ``AUTO`` (see
    :func:`sdgsolve.bounds.effective_size_cap`). Without an explicit
    decomposition each connected component is solved on its own decomposition.

    For ``wf-ns`` the ``k`` best IR records are kept per key, starting at
    ``ns_initial_k`` and doubling up to ``ns_max_k``; if no candidate at the
    root is Nash stable by then, :class:`NSSearchLimit` is raised rather than
    returning an unproven answer.
    """
    mode = SolveMode.parse(mode)
    if size_cap == "auto":
        size_cap = AUTO
    if size_cap is not AUTO:
        if isinstance(size_cap, bool) or not isinstance(size_cap, int) or size_cap < 1:
            raise ValueError(f"size cap must be a positive integer or AUTO, got {size_cap!r}")
    if decomposition is not None:
        errs = validate_decomposition(instance, decomposition)
        if errs:
            raise ValueError("invalid decomposition: " + "; ".join(errs[:5]))

    if instance.scoring.s1 <= 0:
        singles = make_outcome(instance, [(a,) for a in range(instance.n)])
        if mode is SolveMode.WF_NS and not is_nash_stable(instance, singles):
            raise DPError("all-singletons outcome unexpectedly unstable")
        return SolveResult(singles, 0, None, 0, mode, algo="dp", size_cap=None, stats={"shortcut": "s1<=0"})

    if decomposition is not None:
        parts = [(instance, tuple(range(instance.n)), decomposition)]
    else:
        parts = []
        for comp in instance.components():
            sub, ids = instance.induced(comp)
            parts.append((sub, ids, None))

    coalitions, total = [], 0
    comp_stats = []
    for sub, ids, td in parts:
        if sub.n == 1 and td is None:
            coalitions.append((ids[0],))
            continue
        outcome, info = _solve_connected(
            sub, mode, size_cap, td, ns_initial_k, ns_max_k, check_introduce
        )
        comp_stats.append(info)
        if outcome is None:
            return SolveResult(None, NEG_INF, None, 0, mode, algo="dp", size_cap=info["cap"], stats={"components": comp_stats})
        total += outcome.welfare
        coalitions.extend(tuple(ids[a] for a in c) for c in outcome.coalitions)
    best = make_outcome(instance, coalitions)
    if best.welfare != total:
        raise DPError(f"component welfare {total} != recomputed {best.welfare}")
    caps = [c["cap"] for c in comp_stats]
    return SolveResult(
        best,
        best.welfare,
        None,
        sum(c.get("max_keys", 0) for c in comp_stats),
        mode,
        algo="dp",
        size_cap=max(caps) if caps else (size_cap if size_cap is not AUTO else 1),
        stats={"components": comp_stats},
    )
