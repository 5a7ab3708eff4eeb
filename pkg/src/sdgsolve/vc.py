"""Exact solver parameterised by the vertex cover number of the network.

Agents outside a vertex cover ``U`` have all their neighbours in ``U``, so they
fall into groups by neighbourhood and agents of one group are interchangeable.
Every non-singleton coalition meets ``U``; a branch fixes how ``U`` is split
into coalitions and which groups are present in each. What remains is how
many agents of each group go where: a small integer program whose objective is
quadratic in the counts and whose stability constraints are linear. Group
agents not placed in any coalition stay alone.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import product
from typing import Iterator

from .model import INFINITE, NEG_INF, Instance, Outcome, make_outcome, score
from .oracle import SolveMode, SolveResult, restricted_growth_strings

__all__ = [
    "min_vertex_cover",
    "CoverStructure",
    "group_signatures",
    "type_distances",
    "LinearForm",
    "CountProgram",
    "build_program",
    "materialize",
    "iter_branches",
    "solve_vc",
    "VCRefused",
    "DEFAULT_MAX_COVER",
]

DEFAULT_MAX_COVER = 8


class VCRefused(RuntimeError):
    """The vertex cover is larger than the solver's guard."""


# ---------------------------------------------------------------------------
# vertex cover


def min_vertex_cover(instance: Instance, limit: int | None = None) -> tuple[int, ...] | None:
    """A minimum vertex cover by bounded search tree, or None if larger than ``limit``.

    Tries sizes 0, 1, 2, ... and branches on an uncovered edge (one endpoint
    must be in the cover); degree-1 endpoints are resolved by taking their
    neighbour, which is never worse.
    """
    edges = sorted(instance.edges)
    top = len(edges) if limit is None else min(limit, len(edges))

    def search(remaining, budget, chosen):
        if not remaining:
            return chosen
        if budget == 0:
            return None
        deg: dict[int, int] = {}
        for a, b in remaining:
            deg[a] = deg.get(a, 0) + 1
            deg[b] = deg.get(b, 0) + 1
        if len(remaining) > budget * max(deg.values()):
            return None
        for a, b in remaining:
            if deg[a] == 1 or deg[b] == 1:
                pick = b if deg[a] == 1 else a
                rest = [e for e in remaining if pick not in e]
                return search(rest, budget - 1, chosen | {pick})
        a, b = remaining[0]
        for pick in (a, b):
            rest = [e for e in remaining if pick not in e]
            found = search(rest, budget - 1, chosen | {pick})
            if found is not None:
                return found
        return None

    for size in range(top + 1):
        found = search(edges, size, frozenset())
        if found is not None:
            return tuple(sorted(found))
    return None


# ---------------------------------------------------------------------------
# groups and type graphs


@dataclass(frozen=True)
class CoverStructure:
    """A cover ``U`` and the agents outside it bucketed by neighbourhood.

    ``groups`` maps a neighbourhood (frozenset of cover agents, possibly
    empty for isolated agents) to the sorted agents having exactly it.
    """

    cover: tuple[int, ...]
    groups: dict

    @property
    def k(self) -> int:
        return len(self.cover)

    def count(self, w) -> int:
        return len(self.groups.get(w, ()))

    def signatures(self) -> list:
        """Group neighbourhoods in a fixed order (by sorted member tuple)."""
        return sorted(self.groups, key=lambda w: (len(w), tuple(sorted(w))))


def group_signatures(instance: Instance, cover) -> CoverStructure:
    cov = frozenset(cover)
    for a, b in instance.edges:
        if a not in cov and b not in cov:
            raise ValueError(f"edge ({a}, {b}) is not covered")
    groups: dict = {}
    for v in range(instance.n):
        if v in cov:
            continue
        groups.setdefault(frozenset(instance.adjacency[v]), []).append(v)
    return CoverStructure(tuple(sorted(cov)), {w: tuple(m) for w, m in groups.items()})


def _bfs(adj: list[set], src: int) -> list:
    dist = [INFINITE] * len(adj)
    dist[src] = 0
    q = deque([src])
    while q:
        v = q.popleft()
        for u in adj[v]:
            if dist[u] is INFINITE:
                dist[u] = dist[v] + 1
                q.append(u)
    return dist


def _type_graph(instance: Instance, block, presence) -> list[set]:
    """Vertices: ``block`` agents then one representative per present group."""
    block = list(block)
    idx = {a: i for i, a in enumerate(block)}
    adj = [set() for _ in range(len(block) + len(presence))]
    for a in block:
        for b in instance.adjacency[a]:
            if b in idx:
                adj[idx[a]].add(idx[b])
    for g, w in enumerate(presence):
        r = len(block) + g
        for a in w:
            if a in idx:
                adj[r].add(idx[a])
                adj[idx[a]].add(r)
    return adj


def type_distances(instance: Instance, block, presence):
    """Pairwise distances between the types of one coalition, or None if disconnected.

    ``block`` are the cover agents of the coalition and ``presence`` the
    neighbourhoods of the groups with at least one member in it. Returns
    ``(uu, uw, ww, same)``: cover-cover distances keyed by agent pair, cover
    to group keyed by ``(agent, W)``, group to group keyed by ``(W, W')``,
    and the distance between two members of one group (always 2).
    """
    block = tuple(block)
    presence = tuple(presence)
    adj = _type_graph(instance, block, presence)
    L = len(block)
    rows = [_bfs(adj, i) for i in range(len(adj))]
    if rows and any(d is INFINITE for d in rows[0]):
        return None
    uu = {(block[i], block[j]): rows[i][j] for i in range(L) for j in range(L) if i != j}
    uw = {(block[i], w): rows[i][L + g] for i in range(L) for g, w in enumerate(presence)}
    ww = {
        (w, w2): rows[L + g][L + h]
        for g, w in enumerate(presence)
        for h, w2 in enumerate(presence)
        if g != h
    }
    return uu, uw, ww, 2


# ---------------------------------------------------------------------------
# the count program


@dataclass(frozen=True)
class LinearForm:
    """``const + sum(coef * x[var])``; a constraint reads ``value >= 0``.

    ``guard`` names a group that must have an unplaced agent for the
    constraint to apply (deviations by, or towards, such a lone agent).
    """

    const: int
    coefs: tuple[tuple[int, int], ...]
    label: str = ""
    guard: frozenset | None = None

    def value(self, x) -> int:
        return self.const + sum(c * x[i] for i, c in self.coefs)


def _linear(const, coefs: dict, label="", guard=None) -> LinearForm:
    return LinearForm(const, tuple(sorted((i, c) for i, c in coefs.items() if c)), label, guard)


@dataclass
class CountProgram:
    """Integer program over counts ``x[i]`` of group agents per (coalition, group).

    Welfare is ``2 * (const + sum(lin[i] x_i) + sum(quad[i,j] x_i x_j) +
    sum(same[i] * C(x_i, 2)))``. Counts are at least 1 and at most
    ``upper[i]``; for each group the counts over coalitions sum to at most the
    group size (``capacity``), the rest staying alone.
    """

    variables: list  # (block index, W)
    upper: list
    capacity: dict  # W -> (n_W, [var indices])
    const: int
    lin: dict
    quad: dict
    same: dict
    constraints: list = field(default_factory=list)

    def objective(self, x) -> int:
        tot = self.const
        for i, c in self.lin.items():
            tot += c * x[i]
        for (i, j), c in self.quad.items():
            tot += c * x[i] * x[j]
        for i, c in self.same.items():
            tot += c * (x[i] * (x[i] - 1) // 2)
        return 2 * tot

    def leftover(self, x, w) -> int:
        n_w, idxs = self.capacity[w]
        return n_w - sum(x[i] for i in idxs)

    def violated(self, x) -> list[LinearForm]:
        out = []
        for c in self.constraints:
            if c.guard is not None and self.leftover(x, c.guard) <= 0:
                continue
            if c.value(x) < 0:
                out.append(c)
        return out

    def feasible(self, x) -> bool:
        return not self.violated(x)

    def assignments(self) -> Iterator[tuple[int, ...]]:
        """Every count vector within bounds and group capacities."""
        per_group = []
        for w, (n_w, idxs) in self.capacity.items():
            if not idxs:
                continue
            opts = [
                combo
                for combo in product(*(range(1, self.upper[i] + 1) for i in idxs))
                if sum(combo) <= n_w
            ]
            per_group.append((idxs, opts))
        x = [0] * len(self.variables)
        for choice in product(*(opts for _, opts in per_group)):
            for (idxs, _), combo in zip(per_group, choice):
                for i, v in zip(idxs, combo):
                    x[i] = v
            yield tuple(x)

    def solve(self):
        """(best objective, first optimal x, vectors evaluated), or (NEG_INF, None, n)."""
        best, best_x, seen = NEG_INF, None, 0
        for x in self.assignments():
            seen += 1
            val = self.objective(x)
            if best_x is not None and val <= best:
                continue
            if self.feasible(x):
                best, best_x = val, x
        return best, best_x, seen


def _score(instance, d):
    return score(instance, d) if d is not INFINITE else NEG_INF


def _deviation_utility(instance, cs, blocks, presences, b, mover):
    """Utility of ``mover`` after joining coalition ``b`` as a linear form over its counts.

    ``mover`` is ``("u", agent)`` or ``("g", W)``. Returns None when some
    member of the target would be unreachable or out of range (utility minus
    infinity, so the move never improves).
    """
    block, presence = blocks[b], presences[b]
    adj = _type_graph(instance, block, presence)
    t = len(adj)
    adj.append(set())
    if mover[0] == "u":
        a = mover[1]
        nbrs = [i for i, c in enumerate(block) if c in instance.adjacency[a]]
        nbrs += [len(block) + g for g, w in enumerate(presence) if a in w]
    else:
        w0 = mover[1]
        nbrs = [i for i, c in enumerate(block) if c in w0]
    for i in nbrs:
        adj[t].add(i)
        adj[i].add(t)
    dist = _bfs(adj, t)
    const = 0
    coefs: dict = {}
    for i in range(len(block)):
        s = _score(instance, dist[i])
        if s is NEG_INF:
            return None
        const += s
    for g, w in enumerate(presence):
        s = _score(instance, dist[len(block) + g])
        if s is NEG_INF:
            return None
        coefs[(b, w)] = coefs.get((b, w), 0) + s
    return const, coefs


class _Memo:
    """Per-coalition score tables and deviation forms shared across branches."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.tables: dict = {}
        self.devs: dict = {}

    def table(self, block, pres):
        key = (block, pres)
        if key not in self.tables:
            td = type_distances(self.instance, block, pres)
            result = None
            if td is not None:
                uu, uw, ww, _ = td
                result = {}
                for k, d in list(uu.items()) + list(uw.items()) + list(ww.items()):
                    sc = _score(self.instance, d)
                    if sc is NEG_INF:
                        result = None
                        break
                    result[k] = sc
            self.tables[key] = result
        return self.tables[key]

    def deviation(self, block, pres, mover):
        key = (block, pres, mover)
        if key not in self.devs:
            self.devs[key] = _deviation_utility(self.instance, None, [block], [pres], 0, mover)
        return self.devs[key]


def build_program(
    instance: Instance, cs: CoverStructure, blocks, presences, mode=SolveMode.WF, memo: _Memo | None = None
):
    """Count program of one branch, or None if the branch has no finite outcome.

    ``blocks`` partitions the cover; ``presences[j]`` lists the groups with at
    least one member in coalition ``j``.
    """
    mode = SolveMode.parse(mode)
    memo = memo or _Memo(instance)
    blocks = [tuple(b) for b in blocks]
    presences = [tuple(p) for p in presences]
    s2 = _score(instance, 2)
    variables = [(j, w) for j, pres in enumerate(presences) for w in pres]
    vindex = {v: i for i, v in enumerate(variables)}
    capacity = {w: (cs.count(w), []) for w in cs.signatures()}
    for i, (j, w) in enumerate(variables):
        capacity[w][1].append(i)
    upper = [1 if s2 is NEG_INF else cs.count(w) for (_, w) in variables]
    for w, (n_w, idxs) in capacity.items():
        if len(idxs) > n_w:
            return None

    const, lin, quad, same = 0, {}, {}, {}
    # own utilities as linear forms: key ("u", a) or ("g", j, W)
    own: dict = {}
    for j, (block, pres) in enumerate(zip(blocks, presences)):
        table = memo.table(block, pres)
        if table is None:
            return None
        for a in block:
            c = sum(table[(a, b)] for b in block if b != a)
            coefs = {vindex[(j, w)]: table[(a, w)] for w in pres}
            own[("u", a)] = (c, coefs)
        for w in pres:
            i = vindex[(j, w)]
            c = sum(table[(a, w)] for a in block)
            coefs = {vindex[(j, w2)]: table[(w, w2)] for w2 in pres if w2 != w}
            if s2 is not NEG_INF:
                coefs[i] = coefs.get(i, 0) + s2
                c -= s2
            own[("g", j, w)] = (c, coefs)
        # objective: half the utility sum, over unordered pairs
        for x, a in enumerate(block):
            for b in block[x + 1 :]:
                const += table[(a, b)]
        for w in pres:
            i = vindex[(j, w)]
            lin[i] = lin.get(i, 0) + sum(table[(a, w)] for a in block)
            if s2 is not NEG_INF:
                same[i] = s2
        for g, w in enumerate(pres):
            for w2 in pres[g + 1 :]:
                quad[(vindex[(j, w)], vindex[(j, w2)])] = table[(w, w2)]

    prog = CountProgram(variables, upper, capacity, const, lin, quad, same)
    if mode is SolveMode.WF:
        return prog

    for key, (c, coefs) in own.items():
        prog.constraints.append(_linear(c, coefs, label=f"IR {key}"))
    if mode is not SolveMode.WF_NS:
        return prog

    # Nash stability: every type against every other coalition, plus moves
    # involving group agents left alone
    def target_forms(mover, home):
        for b in range(len(blocks)):
            if b == home:
                continue
            dev = memo.deviation(blocks[b], presences[b], mover)
            if dev is not None:
                dc, dcoefs = dev
                yield b, (dc, {(b, w): v for (_, w), v in dcoefs.items()})

    for j, (block, pres) in enumerate(zip(blocks, presences)):
        movers = [(("u", a), ("u", a)) for a in block] + [(("g", w), ("g", j, w)) for w in pres]
        for mover, okey in movers:
            oc, ocoefs = own[okey]
            for b, (dc, dcoefs) in target_forms(mover, j):
                coefs = dict(ocoefs)
                for var, v in dcoefs.items():
                    coefs[vindex[var]] = coefs.get(vindex[var], 0) - v
                prog.constraints.append(_linear(oc - dc, coefs, label=f"NS {okey}->{b}"))
            if mover[0] == "u":
                # joining a lone agent of an adjacent group
                s1 = instance.scoring.s1
                for w in cs.signatures():
                    if mover[1] in w:
                        prog.constraints.append(
                            _linear(oc - s1, ocoefs, label=f"NS {okey}->alone{sorted(w)}", guard=w)
                        )
    for w in cs.signatures():
        if not w:
            continue
        for b, (dc, dcoefs) in target_forms(("g", w), None):
            coefs = {vindex[var]: -v for var, v in dcoefs.items()}
            prog.constraints.append(_linear(-dc, coefs, label=f"NS alone{sorted(w)}->{b}", guard=w))
    return prog


def materialize(instance: Instance, cs: CoverStructure, blocks, program: CountProgram, x) -> Outcome:
    """Outcome realising counts ``x``: group agents are handed out in sorted order."""
    pools = {w: list(m) for w, m in cs.groups.items()}
    coalitions = [list(b) for b in blocks]
    for (j, w), cnt in zip(program.variables, x):
        coalitions[j].extend(pools[w][:cnt])
        del pools[w][:cnt]
    for rest in pools.values():
        coalitions.extend([a] for a in rest)
    return make_outcome(instance, coalitions)


def iter_branches(instance: Instance, cs: CoverStructure, valid=None):
    """Yield ``(blocks, presences)`` for every cover partition and presence pattern.

    A group can only be present in a coalition where it has a neighbour;
    isolated agents are never present anywhere. ``valid(block, presence)``, if
    given, filters per-coalition patterns before they are combined.
    """
    sigs = [w for w in cs.signatures() if w]
    cover = cs.cover
    for rgs in restricted_growth_strings(len(cover)):
        m = max(rgs, default=-1) + 1
        blocks = [tuple(a for a, r in zip(cover, rgs) if r == j) for j in range(m)]
        options = []
        for block in blocks:
            bset = set(block)
            cand = [w for w in sigs if w & bset]
            subsets = []
            for mask in range(1 << len(cand)):
                sub = tuple(cand[i] for i in range(len(cand)) if mask >> i & 1)
                if valid is None or valid(block, sub):
                    subsets.append(sub)
            options.append(subsets)
        for pres in product(*options):
            used: dict = {}
            for p in pres:
                for w in p:
                    used[w] = used.get(w, 0) + 1
            if all(c <= cs.count(w) for w, c in used.items()):
                yield blocks, list(pres)


def solve_vc(instance: Instance, mode=SolveMode.WF, max_cover: int = DEFAULT_MAX_COVER) -> SolveResult:
    """Best outcome (optionally IR or NS) by branching over a minimum vertex cover."""
    mode = SolveMode.parse(mode)
    cover = min_vertex_cover(instance, limit=max_cover)
    if cover is None:
        raise VCRefused(f"vertex cover number exceeds the guard max_cover = {max_cover}")
    cs = group_signatures(instance, cover)
    best_w, best_out = NEG_INF, None
    branches = evaluated = 0
    memo = _Memo(instance)
    valid = lambda block, pres: memo.table(block, pres) is not None  # noqa: E731
    for blocks, pres in iter_branches(instance, cs, valid):
        if mode is not SolveMode.WF and best_out is not None:
            # the unconstrained optimum bounds the constrained one
            relaxed = build_program(instance, cs, blocks, pres, SolveMode.WF, memo)
            if relaxed is None:
                continue
            top = max(map(relaxed.objective, relaxed.assignments()), default=NEG_INF)
            if top is NEG_INF or top <= best_w:
                continue
        prog = build_program(instance, cs, blocks, pres, mode, memo)
        if prog is None:
            continue
        branches += 1
        val, x, seen = prog.solve()
        evaluated += seen
        if x is None or (best_out is not None and val <= best_w):
            continue
        best_w, best_out = val, materialize(instance, cs, blocks, prog, x)
        if best_out.welfare != val:
            raise RuntimeError(f"count program welfare {val} != outcome welfare {best_out.welfare}")
    stats = {"cover": list(cover), "groups": len(cs.groups), "branches": branches}
    if instance.n == 0:
        best_out, best_w = Outcome((), 0), 0
    return SolveResult(best_out, best_w, None, evaluated, mode, algo="vc", stats=stats)
