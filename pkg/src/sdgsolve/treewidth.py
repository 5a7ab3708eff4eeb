"""Nice tree decompositions: construction from elimination orderings and validation."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .model import Instance

__all__ = [
    "NodeKind",
    "NiceNode",
    "NiceTreeDecomposition",
    "min_fill_ordering",
    "exact_ordering",
    "ordering_width",
    "build_nice_decomposition",
    "nice_from_ordering",
    "validate_decomposition",
    "subtree_vertices",
    "EXACT_LIMIT",
]

EXACT_LIMIT = 12


class NodeKind(str, Enum):
    LEAF = "leaf"
    INTRODUCE = "introduce"
    FORGET = "forget"
    JOIN = "join"


@dataclass(frozen=True)
class NiceNode:
    id: int
    kind: NodeKind
    bag: tuple[int, ...]
    children: tuple[int, ...] = ()
    agent: int | None = None

    def to_json(self) -> dict:
        d = {"id": self.id, "kind": self.kind.value, "bag": list(self.bag), "children": list(self.children)}
        if self.agent is not None:
            d["agent"] = self.agent
        return d


@dataclass(frozen=True)
class NiceTreeDecomposition:
    """Rooted nice decomposition.

    Nodes built by this module have children with smaller ids than their
    parents, so ascending id order is a post-order.
    """

    nodes: tuple[NiceNode, ...]
    root: int

    @property
    def width(self) -> int:
        return max((len(x.bag) for x in self.nodes), default=0) - 1

    def postorder(self) -> list[int]:
        order, stack = [], [(self.root, False)]
        while stack:
            nid, done = stack.pop()
            if done:
                order.append(nid)
                continue
            stack.append((nid, True))
            for c in reversed(self.nodes[nid].children):
                stack.append((c, False))
        return order

    def to_json(self) -> dict:
        return {"nodes": [x.to_json() for x in self.nodes], "root": self.root, "width": self.width}

    @classmethod
    def from_json(cls, data: dict) -> "NiceTreeDecomposition":
        raw = sorted(data["nodes"], key=lambda d: d["id"])
        nodes = []
        for k, d in enumerate(raw):
            if d["id"] != k:
                raise ValueError("decomposition node ids must be 0..len(nodes)-1")
            nodes.append(
                NiceNode(
                    id=k,
                    kind=NodeKind(d["kind"]),
                    bag=tuple(sorted(d.get("bag", []))),
                    children=tuple(d.get("children", [])),
                    agent=d.get("agent"),
                )
            )
        return cls(tuple(nodes), int(data["root"]))


def _mask_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def min_fill_ordering(n: int, adjacency) -> list[int]:
    """Greedy elimination ordering: repeatedly remove a vertex of minimum fill-in.

    Ties go to smaller degree, then smaller id.
    """
    adj = [set(a) for a in adjacency]
    alive = set(range(n))
    order = []
    while alive:
        best, best_key = None, None
        for v in sorted(alive):
            nb = list(adj[v])
            fill = 0
            for a in range(len(nb)):
                na = adj[nb[a]]
                for b in range(a + 1, len(nb)):
                    if nb[b] not in na:
                        fill += 1
            key = (fill, len(nb), v)
            if best_key is None or key < best_key:
                best, best_key = v, key
        nb = adj[best]
        for a in nb:
            adj[a] |= nb
            adj[a].discard(a)
            adj[a].discard(best)
        alive.remove(best)
        adj[best] = set()
        order.append(best)
    return order


def exact_ordering(n: int, adjacency) -> list[int]:
    """Optimal elimination ordering by dynamic programming over vertex subsets.

    ``TW(S) = min_v max(TW(S - v), |Q(S - v, v)|)`` where ``Q(S, v)`` holds the
    vertices outside ``S + v`` reachable from ``v`` through ``S``. Exponential;
    meant for ``n <= EXACT_LIMIT``.
    """
    masks = [0] * n
    for v, nb in enumerate(adjacency):
        for w in nb:
            masks[v] |= 1 << w
    full = (1 << n) - 1

    def q_size(s: int, v: int) -> int:
        comp = 1 << v
        frontier = comp
        while frontier:
            nb = 0
            for u in _mask_bits(frontier):
                nb |= masks[u]
            new = nb & s & ~comp
            comp |= new
            frontier = new
        nb = 0
        for u in _mask_bits(comp):
            nb |= masks[u]
        return (nb & ~comp & ~s).bit_count()

    tw = {0: -1}
    choice = {}
    for s in sorted(range(1, full + 1), key=int.bit_count):
        best, arg = None, None
        for v in _mask_bits(s):
            rest = s & ~(1 << v)
            val = max(tw[rest], q_size(rest, v))
            if best is None or val < best:
                best, arg = val, v
        tw[s] = best
        choice[s] = arg
    order = []
    s = full
    while s:
        v = choice[s]
        order.append(v)
        s &= ~(1 << v)
    order.reverse()
    return order


def _eliminate(n: int, adjacency, order):
    pos = {v: k for k, v in enumerate(order)}
    if sorted(order) != list(range(n)):
        raise ValueError("ordering must be a permutation of the agents")
    adj = [set(a) for a in adjacency]
    bags, parent = {}, {}
    for v in order:
        nb = {w for w in adj[v] if pos[w] > pos[v]}
        bags[v] = frozenset(nb | {v})
        for a in nb:
            adj[a] |= nb
            adj[a].discard(a)
        parent[v] = min(nb, key=pos.__getitem__) if nb else None
    return bags, parent


def ordering_width(n: int, adjacency, order) -> int:
    bags, _ = _eliminate(n, adjacency, order)
    return max((len(b) for b in bags.values()), default=0) - 1


class _Builder:
    def __init__(self):
        self.nodes: list[NiceNode] = []

    def add(self, kind, bag, children=(), agent=None) -> int:
        nid = len(self.nodes)
        self.nodes.append(NiceNode(nid, kind, tuple(sorted(bag)), tuple(children), agent))
        return nid

    def adjust(self, nid: int, src: frozenset, dst: frozenset) -> int:
        bag = set(src)
        for v in sorted(src - dst):
            bag.discard(v)
            nid = self.add(NodeKind.FORGET, bag, (nid,), v)
        for v in sorted(dst - src):
            bag.add(v)
            nid = self.add(NodeKind.INTRODUCE, bag, (nid,), v)
        return nid

    def join_all(self, tops: list[int], bag) -> int:
        cur = tops[0]
        for other in tops[1:]:
            cur = self.add(NodeKind.JOIN, bag, (cur, other))
        return cur


def nice_from_ordering(n: int, adjacency, order) -> NiceTreeDecomposition:
    """Turn an elimination ordering into a nice decomposition with empty root and leaves."""
    bags, parent = _eliminate(n, adjacency, order)
    children = {v: [] for v in order}
    roots = []
    for v in order:
        if parent[v] is None:
            roots.append(v)
        else:
            children[parent[v]].append(v)
    b = _Builder()
    top: dict[int, int] = {}
    empty = frozenset()
    # elimination order is a post-order of the elimination forest
    for v in order:
        if children[v]:
            tops = [b.adjust(top[c], bags[c], bags[v]) for c in children[v]]
            top[v] = b.join_all(tops, bags[v])
        else:
            top[v] = b.adjust(b.add(NodeKind.LEAF, ()), empty, bags[v])
    if not roots:
        leaf = b.add(NodeKind.LEAF, ())
        return NiceTreeDecomposition(tuple(b.nodes), leaf)
    finals = [b.adjust(top[r], bags[r], empty) for r in roots]
    root = b.join_all(finals, ())
    return NiceTreeDecomposition(tuple(b.nodes), root)


def build_nice_decomposition(instance: Instance, exact_limit: int = EXACT_LIMIT, order=None):
    """Nice decomposition of the instance's network.

    Uses an optimal elimination ordering when ``n <= exact_limit`` and the
    min-fill heuristic otherwise, unless ``order`` is given.
    """
    n, adj = instance.n, instance.adjacency
    if order is None:
        order = min_fill_ordering(n, adj)
        if n <= exact_limit:
            exact = exact_ordering(n, adj)
            if ordering_width(n, adj, exact) < ordering_width(n, adj, order):
                order = exact
    return nice_from_ordering(n, adj, order)


def subtree_vertices(td: NiceTreeDecomposition) -> dict[int, frozenset]:
    """``V^x``: union of bags over the subtree rooted at each node."""
    out: dict[int, frozenset] = {}
    for nid in td.postorder():
        node = td.nodes[nid]
        acc = set(node.bag)
        for c in node.children:
            acc |= out[c]
        out[nid] = frozenset(acc)
    return out


def validate_decomposition(instance: Instance, td: NiceTreeDecomposition) -> list[str]:
    """Every violated decomposition or nice-shape condition; empty when valid."""
    errs: list[str] = []
    nodes = td.nodes
    count = len(nodes)
    if not 0 <= td.root < count:
        return [f"root id {td.root} is not a node"]
    for k, x in enumerate(nodes):
        if x.id != k:
            errs.append(f"node at position {k} carries id {x.id}")
    parents: dict[int, list[int]] = {}
    for x in nodes:
        for c in x.children:
            if not 0 <= c < count:
                errs.append(f"node {x.id} has unknown child {c}")
            else:
                parents.setdefault(c, []).append(x.id)
        for v in x.bag:
            if not 0 <= v < instance.n:
                errs.append(f"node {x.id} bag holds unknown agent {v}")
        if list(x.bag) != sorted(set(x.bag)):
            errs.append(f"node {x.id} bag is not a sorted set")
    if td.root in parents:
        errs.append(f"root {td.root} has a parent")
    for c, ps in parents.items():
        if len(ps) > 1:
            errs.append(f"node {c} has several parents {ps}")
    if errs:
        return errs

    reach, stack = set(), [td.root]
    while stack:
        nid = stack.pop()
        if nid in reach:
            errs.append(f"cycle through node {nid}")
            return errs
        reach.add(nid)
        stack.extend(nodes[nid].children)
    for x in nodes:
        if x.id not in reach:
            errs.append(f"node {x.id} is not reachable from the root")

    if nodes[td.root].bag:
        errs.append(f"root {td.root} bag is not empty")
    for x in nodes:
        kids = [nodes[c] for c in x.children]
        bag = set(x.bag)
        if x.kind is NodeKind.LEAF:
            if kids:
                errs.append(f"leaf {x.id} has children")
            if bag:
                errs.append(f"leaf {x.id} bag is not empty")
        elif x.kind is NodeKind.INTRODUCE:
            if len(kids) != 1:
                errs.append(f"introduce node {x.id} must have exactly one child")
            elif x.agent is None or x.agent in kids[0].bag or bag != set(kids[0].bag) | {x.agent}:
                errs.append(f"introduce node {x.id} does not add exactly agent {x.agent}")
        elif x.kind is NodeKind.FORGET:
            if len(kids) != 1:
                errs.append(f"forget node {x.id} must have exactly one child")
            elif x.agent is None or x.agent not in kids[0].bag or bag != set(kids[0].bag) - {x.agent}:
                errs.append(f"forget node {x.id} does not remove exactly agent {x.agent}")
        elif x.kind is NodeKind.JOIN:
            if len(kids) != 2:
                errs.append(f"join node {x.id} must have exactly two children")
            elif any(tuple(k.bag) != x.bag for k in kids):
                errs.append(
                    f"join node {x.id} child bags {[k.bag for k in kids]} differ from {x.bag}"
                )

    holders: dict[int, list[int]] = {v: [] for v in range(instance.n)}
    for x in nodes:
        for v in x.bag:
            if v in holders:
                holders[v].append(x.id)
    parent_of = {c: ps[0] for c, ps in parents.items()}
    for v, hs in holders.items():
        if not hs:
            errs.append(f"agent {v} appears in no bag")
            continue
        tops = [h for h in hs if h not in parent_of or v not in nodes[parent_of[h]].bag]
        if len(tops) != 1:
            errs.append(f"nodes holding agent {v} do not form a connected subtree")
    for a, b in sorted(instance.edges):
        if not any(a in x.bag and b in x.bag for x in nodes):
            errs.append(f"edge ({a}, {b}) is not covered by any bag")

    if not errs:
        vx = subtree_vertices(td)
        for x in nodes:
            if x.kind is NodeKind.JOIN and len(x.children) == 2:
                bag = set(x.bag)
                left = vx[x.children[0]] - bag
                right = vx[x.children[1]] - bag
                if left & right:
                    errs.append(f"join node {x.id} children share forgotten agents")
                for u in left:
                    if instance.adjacency[u] & right:
                        errs.append(f"join node {x.id} children are linked outside the bag")
                        break
    return errs
