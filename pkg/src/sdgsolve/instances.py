"""Fixture networks, the triangle-covered-colouring reduction, random graphs."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .model import Instance

__all__ = [
    "Fixture",
    "make_lemma2",
    "make_lemma3",
    "reduce_3ctcg",
    "random_instance",
    "random_tree",
    "random_bounded_degree_graph",
    "random_triangle_covered_graph",
    "is_three_colorable",
    "complement_edges",
    "random_partial_ktree",
]

SEPARATION_SCORING = (1, 1, -1, -1, -1, -1)


@dataclass(frozen=True)
class Fixture:
    instance: Instance
    named_agents: dict
    expected: dict
    # per-agent utility annotations: (description, coalition, {agent: utility})
    utility_tables: tuple = field(default=())


def _path_clique_graph(clique_size: int):
    """Path p0..p4 whose endpoints are joined to every agent of a clique."""
    path = list(range(5))
    clique = list(range(5, 5 + clique_size))
    edges = [(path[k], path[k + 1]) for k in range(4)]
    edges += list(itertools.combinations(clique, 2))
    edges += [(end, k) for end in (path[0], path[-1]) for k in clique]
    return path, clique, edges


def make_lemma2() -> Fixture:
    """Ten agents where the unique welfare optimum is not individually rational."""
    path, clique, edges = _path_clique_graph(5)
    inst = Instance(10, edges, SEPARATION_SCORING)
    x = path[2]
    grand = tuple(range(10))
    rest = tuple(a for a in grand if a != x)
    tables = (
        ("grand", grand, {x: -1, **{a: 7 for a in grand if a != x}}),
        (
            "rest-without-x",
            rest,
            {
                path[1]: 4,
                path[3]: 4,
                path[0]: 6,
                path[4]: 6,
                **{k: 8 for k in clique},
            },
        ),
    )
    return Fixture(
        instance=inst,
        named_agents={"x": x, "path": tuple(path), "clique": tuple(clique)},
        expected={
            "wf": 62,
            "wf_optimal_count": 1,
            "wf_outcome": (grand,),
            "x_alone": 60,
            "x_alone_outcome": (rest, (x,)),
        },
        utility_tables=tables,
    )


def make_lemma3() -> Fixture:
    """Ten agents where the best IR outcome is not Nash stable."""
    path, clique, edges = _path_clique_graph(4)
    x = path[2]
    y = 9
    edges.append((x, y))
    inst = Instance(10, edges, SEPARATION_SCORING)
    core = tuple(a for a in range(10) if a != y)
    core_without_x = tuple(a for a in core if a != x)
    tables = (
        ("core", core, {x: 0, **{a: 6 for a in core if a != x}}),
        ("grand", tuple(range(10)), {y: -3}),
    )
    return Fixture(
        instance=inst,
        named_agents={"x": x, "y": y, "path": tuple(path), "clique": tuple(clique)},
        expected={
            "wf_ir": 48,
            "wf_ir_optimal_count": 1,
            "wf_ir_outcome": (core, (y,)),
            "wf_ns": 46,
            "wf_ns_outcome": (core_without_x, (x, y)),
            "grand": 42,
        },
        utility_tables=tables,
    )


def complement_edges(n: int, edges) -> list[tuple[int, int]]:
    present = {(min(a, b), max(a, b)) for a, b in edges}
    return [e for e in itertools.combinations(range(n), 2) if e not in present]


def reduce_3ctcg(num_vertices: int, edges, triangles, s1: int = 1) -> tuple[Instance, int]:
    """Map a triangle-covered graph to (complement game with scoring (s1,), threshold).

    The graph is 3-colourable iff the game has an outcome of welfare at least
    the threshold ``3 * k * s1 * (k - 1)`` where ``k`` is the triangle count.
    """
    if num_vertices % 3:
        raise ValueError(f"vertex count {num_vertices} is not divisible by 3")
    k = num_vertices // 3
    edge_set = {(min(a, b), max(a, b)) for a, b in edges}
    triangles = [tuple(t) for t in triangles]
    if len(triangles) != k:
        raise ValueError(f"expected {k} triangles, got {len(triangles)}")
    covered = [v for t in triangles for v in t]
    if any(len(t) != 3 for t in triangles) or sorted(covered) != list(range(num_vertices)):
        raise ValueError("triangles must be vertex-disjoint and cover every vertex")
    for t in triangles:
        for a, b in itertools.combinations(t, 2):
            if (min(a, b), max(a, b)) not in edge_set:
                raise ValueError(f"{t} is not a triangle: missing edge {a}-{b}")
    inst = Instance(num_vertices, complement_edges(num_vertices, edge_set), (s1,))
    return inst, 3 * k * s1 * (k - 1)


def is_three_colorable(num_vertices: int, edges) -> bool:
    """Brute force over all 3^n colourings (vertex 0 pinned to colour 0)."""
    edges = list(edges)
    if num_vertices == 0:
        return True
    for rest in itertools.product(range(3), repeat=num_vertices - 1):
        col = (0,) + rest
        if all(col[a] != col[b] for a, b in edges):
            return True
    return False


def random_triangle_covered_graph(num_triangles: int, edge_prob: float, seed):
    """Disjoint triangles ``(3t, 3t+1, 3t+2)`` plus random cross edges."""
    rng = random.Random(seed)
    n = 3 * num_triangles
    triangles = [tuple(range(3 * t, 3 * t + 3)) for t in range(num_triangles)]
    edges = [e for t in triangles for e in itertools.combinations(t, 2)]
    for a, b in itertools.combinations(range(n), 2):
        if a // 3 != b // 3 and rng.random() < edge_prob:
            edges.append((a, b))
    return n, edges, triangles


def _connected(n: int, edges) -> bool:
    if n == 0:
        return True
    adj = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == n


def random_instance(
    n: int,
    edge_prob: float,
    seed,
    scoring=(1,),
    open_mode: bool = False,
    connected: bool = False,
    no_isolated: bool = False,
    max_tries: int = 10_000,
) -> Instance:
    """Erdos-Renyi graph, deterministic in ``seed``.

    With ``connected`` or ``no_isolated`` the graph is resampled from the same
    random stream until the filter holds.
    """
    if not 0.0 <= edge_prob <= 1.0:
        raise ValueError(f"edge_prob must lie in [0, 1], got {edge_prob}")
    rng = random.Random(seed)
    for _ in range(max_tries):
        edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < edge_prob]
        if connected and not _connected(n, edges):
            continue
        if no_isolated and n > 1:
            touched = {v for e in edges for v in e}
            if len(touched) < n:
                continue
        return Instance(n, edges, scoring, open_mode)
    raise RuntimeError(f"no graph passed the filters after {max_tries} samples")


def random_tree(n: int, seed, scoring=(1,), open_mode: bool = False) -> Instance:
    """Uniform random recursive tree: agent k attaches to a random earlier agent."""
    rng = random.Random(seed)
    edges = [(rng.randrange(k), k) for k in range(1, n)]
    return Instance(n, edges, scoring, open_mode)


def random_bounded_degree_graph(
    n: int, max_degree: int, seed, scoring=(1,), attempts: int | None = None
) -> Instance:
    """Connected graph with maximum degree at most ``max_degree``.

    A random spanning tree respecting the cap is grown first, then random extra
    edges are added while both endpoints have spare degree.
    """
    if max_degree < 2 and n > 2:
        raise ValueError("a connected graph on more than 2 agents needs max degree >= 2")
    rng = random.Random(seed)
    deg = [0] * n
    edges = set()
    for k in range(1, n):
        choices = [a for a in range(k) if deg[a] < max_degree]
        a = rng.choice(choices)
        edges.add((a, k))
        deg[a] += 1
        deg[k] += 1
    for _ in range(attempts if attempts is not None else 2 * n):
        a, b = rng.sample(range(n), 2) if n >= 2 else (0, 0)
        if a == b:
            continue
        e = (min(a, b), max(a, b))
        if e in edges or deg[a] >= max_degree or deg[b] >= max_degree:
            continue
        edges.add(e)
        deg[a] += 1
        deg[b] += 1
    return Instance(n, sorted(edges), scoring)


def random_partial_ktree(
    n: int, k: int, seed, keep_prob: float = 0.6, scoring=(1,), open_mode: bool = False
) -> Instance:
    """Connected graph of treewidth at most ``k``.

    Grows a random k-tree (each new agent joins a random existing k-clique),
    then keeps each non-spanning edge with probability ``keep_prob``; the edge
    from every new agent to its first clique member is always kept, so the
    result stays connected.
    """
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    rng = random.Random(seed)
    base = min(n, k + 1)
    edges = {(a, b) for a in range(base) for b in range(a + 1, base)}
    spine = {(a, a + 1) for a in range(base - 1)}
    cliques = [tuple(c) for c in itertools.combinations(range(base), min(k, base))]
    for v in range(base, n):
        clique = rng.choice(cliques)
        for j, u in enumerate(clique):
            edges.add((u, v))
            if j == 0:
                spine.add((u, v))
        for drop in range(len(clique)):
            cliques.append(tuple(sorted(clique[:drop] + clique[drop + 1 :] + (v,))))
    kept = sorted(e for e in edges if e in spine or rng.random() < keep_prob)
    return Instance(n, kept, scoring, open_mode=open_mode)
