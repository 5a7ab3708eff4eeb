import itertools
import json

import pytest

from conftest import small_pool
from sdgsolve.instances import make_lemma3, random_instance, random_partial_ktree
from sdgsolve.model import Instance
from sdgsolve.treewidth import (
    NiceNode,
    NiceTreeDecomposition,
    NodeKind,
    build_nice_decomposition,
    exact_ordering,
    min_fill_ordering,
    ordering_width,
    subtree_vertices,
    validate_decomposition,
)


def path(n):
    return Instance(n, [(i, i + 1) for i in range(n - 1)], (1,))


def clique(n):
    return Instance(n, list(itertools.combinations(range(n), 2)), (1,))


def test_small_widths():
    assert build_nice_decomposition(path(4)).width == 1
    assert build_nice_decomposition(clique(5)).width == 4
    assert build_nice_decomposition(Instance(0, [], (1,))).width == -1
    assert build_nice_decomposition(Instance(3, [], (1,))).width == 0


def test_separation_fixture_decomposition():
    inst = make_lemma3().instance
    td = build_nice_decomposition(inst)
    assert validate_decomposition(inst, td) == []
    assert td.width <= 5


def test_roundtrip_on_random_graphs():
    for seed in range(100):
        inst = random_instance(3 + seed % 12, 0.1 + (seed % 7) / 10, seed)
        td = build_nice_decomposition(inst)
        assert validate_decomposition(inst, td) == [], seed
        assert td.nodes[td.root].bag == ()


def test_shapes_and_subtree_sets():
    for inst in small_pool(30, max_n=7, seed=2):
        td = build_nice_decomposition(inst)
        vx = subtree_vertices(td)
        assert vx[td.root] == frozenset(range(inst.n))
        for node in td.nodes:
            for c in node.children:
                assert vx[c] <= vx[node.id]
            if node.kind is NodeKind.LEAF:
                assert node.bag == () and node.children == ()


def test_exact_ordering_is_no_worse_than_min_fill():
    for seed in range(40):
        inst = random_instance(9, 0.45, seed)
        adj = inst.adjacency
        exact = ordering_width(inst.n, adj, exact_ordering(inst.n, adj))
        heur = ordering_width(inst.n, adj, min_fill_ordering(inst.n, adj))
        assert exact <= heur
        assert build_nice_decomposition(inst).width == exact


def test_partial_ktree_width():
    for seed in range(10):
        inst = random_partial_ktree(30, 3, seed)
        # eliminating agents newest-first never exceeds the k-tree's cliques
        order = list(range(inst.n - 1, -1, -1))
        assert ordering_width(inst.n, inst.adjacency, order) <= 3
        td = build_nice_decomposition(inst, order=order)
        assert td.width <= 3
        assert validate_decomposition(inst, td) == []
        assert validate_decomposition(inst, build_nice_decomposition(inst)) == []
        small = random_partial_ktree(11, 3, seed)
        assert build_nice_decomposition(small).width <= 3


def test_json_roundtrip():
    inst = make_lemma3().instance
    td = build_nice_decomposition(inst)
    again = NiceTreeDecomposition.from_json(json.loads(json.dumps(td.to_json())))
    assert again == td


def _replace(td, nid, **changes):
    nodes = list(td.nodes)
    old = nodes[nid]
    fields = {k: getattr(old, k) for k in ("id", "kind", "bag", "children", "agent")}
    fields.update(changes)
    nodes[nid] = NiceNode(**fields)
    return NiceTreeDecomposition(tuple(nodes), td.root)


def test_missing_edge_is_reported():
    inst = path(3)
    td = build_nice_decomposition(inst)
    wider = Instance(3, sorted(inst.edges) + [(0, 2)], (1,))
    errs = validate_decomposition(wider, td)
    assert any("edge (0, 2)" in e for e in errs)


def test_join_with_mismatched_bags_is_reported():
    # two leaves introduce different agents, then join
    nodes = (
        NiceNode(0, NodeKind.LEAF, ()),
        NiceNode(1, NodeKind.INTRODUCE, (0,), (0,), 0),
        NiceNode(2, NodeKind.LEAF, ()),
        NiceNode(3, NodeKind.INTRODUCE, (1,), (2,), 1),
        NiceNode(4, NodeKind.JOIN, (0,), (1, 3)),
        NiceNode(5, NodeKind.FORGET, (), (4,), 0),
    )
    errs = validate_decomposition(Instance(2, [], (1,)), NiceTreeDecomposition(nodes, 5))
    assert any("join node 4" in e for e in errs)


def test_other_violations():
    inst = path(4)
    td = build_nice_decomposition(inst)
    intro = next(x for x in td.nodes if x.kind is NodeKind.INTRODUCE)
    bad = _replace(td, intro.id, agent=(intro.agent + 1) % 4)
    assert any(f"introduce node {intro.id}" in e for e in validate_decomposition(inst, bad))
    bad_root = _replace(td, td.root, bag=(0,))
    assert validate_decomposition(inst, bad_root)
    forget = next(x for x in td.nodes if x.kind is NodeKind.FORGET)
    bad = _replace(td, forget.id, kind=NodeKind.LEAF)
    assert any("leaf" in e for e in validate_decomposition(inst, bad))
    assert validate_decomposition(inst, NiceTreeDecomposition(td.nodes, 99))


def test_disconnected_agent_subtree_is_reported():
    # agent 0 introduced twice in separate branches
    nodes = (
        NiceNode(0, NodeKind.LEAF, ()),
        NiceNode(1, NodeKind.INTRODUCE, (0,), (0,), 0),
        NiceNode(2, NodeKind.FORGET, (), (1,), 0),
        NiceNode(3, NodeKind.LEAF, ()),
        NiceNode(4, NodeKind.INTRODUCE, (0,), (3,), 0),
        NiceNode(5, NodeKind.FORGET, (), (4,), 0),
        NiceNode(6, NodeKind.JOIN, (), (2, 5)),
    )
    errs = validate_decomposition(Instance(1, [], (1,)), NiceTreeDecomposition(nodes, 6))
    assert any("connected subtree" in e for e in errs)


def test_bad_order_rejected():
    with pytest.raises(ValueError):
        build_nice_decomposition(path(3), order=[0, 1])
