import pytest

from conftest import small_pool
from sdgsolve.bounds import AUTO
from sdgsolve.dp import NSSearchLimit, key_space_bound, reconstruct, run_tables, solve_dp
from sdgsolve.instances import random_instance, random_partial_ktree, random_tree
from sdgsolve.model import NEG_INF, Instance, welfare
from sdgsolve.oracle import SolveMode, solve_exact
from sdgsolve.stability import is_individually_rational, is_nash_stable
from sdgsolve.treewidth import NiceTreeDecomposition, build_nice_decomposition


def test_fixtures(lemma2, lemma3):
    r = solve_dp(lemma2.instance, SolveMode.WF)
    assert r.welfare == 62
    assert r.best.coalitions == lemma2.expected["wf_outcome"]
    assert r.stats["components"][0]["cap"] == 10
    assert solve_dp(lemma2.instance, SolveMode.WF_IR).welfare == 60
    r = solve_dp(lemma3.instance, SolveMode.WF_IR, size_cap=9)
    assert r.welfare == 48
    r = solve_dp(lemma3.instance, SolveMode.WF_NS, size_cap=9)
    assert r.welfare == 46
    assert is_nash_stable(lemma3.instance, r.best)


def test_cap_one_gives_singletons():
    inst = random_instance(7, 0.5, 3, scoring=(1, -1), connected=True)
    r = solve_dp(inst, size_cap=1)
    assert r.welfare == 0
    assert all(len(c) == 1 for c in r.best.coalitions)


def test_cap_monotone_and_matches_capped_oracle():
    for inst in small_pool(25, max_n=7, seed=31):
        prev = None
        for cap in range(1, inst.n + 1):
            w = solve_dp(inst, size_cap=cap).welfare
            assert w == solve_exact(inst, size_cap=cap).welfare
            if prev is not None:
                assert w >= prev
            prev = w


def test_equals_oracle_on_pool():
    for inst in small_pool(50, max_n=7, seed=32):
        for mode in SolveMode:
            want = solve_exact(inst, mode)
            for cap in (2, 3, inst.n, AUTO):
                got = solve_dp(inst, mode, size_cap=cap)
                capped = want if cap in (inst.n, AUTO) else solve_exact(inst, mode, size_cap=cap)
                assert got.welfare == capped.welfare, (inst, mode, cap)
                if got.best is not None:
                    assert welfare(inst, got.best.coalitions) == got.welfare
                    assert max(map(len, got.best.coalitions)) <= (inst.n if cap is AUTO else cap)


def test_open_mode_and_disconnected_graphs():
    for seed in range(15):
        inst = random_instance(7, 0.25, seed, scoring=(2, 1, -1), open_mode=seed % 2 == 1)
        for mode in SolveMode:
            assert solve_dp(inst, mode).welfare == solve_exact(inst, mode).welfare


def test_table_sizes_within_key_bound():
    for seed in range(10):
        inst = random_partial_ktree(12, 2, seed, scoring=(1, -1))
        td = build_nice_decomposition(inst)
        for cap in (2, 3, 4):
            _, stats, _ = run_tables(inst, td, SolveMode.WF, cap)
            for _, bag_size, count in stats["node_keys"]:
                assert count <= key_space_bound(bag_size, cap)


def test_key_bound_small_values():
    assert key_space_bound(0, 3) == 1
    # one agent alone, with one or two anonymous partners
    assert key_space_bound(1, 1) == 1
    assert key_space_bound(1, 2) == 1 + 2
    assert key_space_bound(2, 1) == 1


def test_reconstruction_and_introduce_check():
    inst = random_tree(10, 4, scoring=(1, -1))
    td = build_nice_decomposition(inst)
    root, _, _ = run_tables(inst, td, SolveMode.WF, 4, check_introduce=True)
    (entry,) = root
    out = reconstruct(inst, entry)
    assert out.welfare == entry[0]
    assert out.welfare == solve_exact(inst, size_cap=4).welfare


def test_rejects_bad_arguments():
    inst = Instance(3, [(0, 1), (1, 2)], (1,))
    with pytest.raises(ValueError):
        solve_dp(inst, size_cap=0)
    with pytest.raises(ValueError):
        solve_dp(inst, size_cap=True)
    td = build_nice_decomposition(Instance(3, [(0, 1)], (1,)))
    with pytest.raises(ValueError, match="invalid decomposition"):
        solve_dp(inst, decomposition=td)
    good = build_nice_decomposition(inst)
    again = NiceTreeDecomposition.from_json(good.to_json())
    assert solve_dp(inst, decomposition=again).welfare == solve_exact(inst).welfare


def test_nonpositive_first_score_gives_singletons():
    with pytest.warns(UserWarning):
        inst = Instance(4, [(0, 1), (1, 2), (2, 3)], (0, -1))
    r = solve_dp(inst, SolveMode.WF_NS)
    assert r.welfare == 0 and len(r.best.coalitions) == 4


def test_ns_search_limit_is_reported(lemma3):
    # the single best IR outcome is not Nash stable, so one candidate is not enough
    inst = lemma3.instance
    with pytest.raises(NSSearchLimit):
        solve_dp(inst, SolveMode.WF_NS, size_cap=9, ns_initial_k=1, ns_max_k=1)
    r = solve_dp(inst, SolveMode.WF_NS, size_cap=9, ns_initial_k=1)
    assert r.welfare == 46 and r.stats["components"][0]["ns_k"] >= 2


def test_proves_absence_of_stable_outcomes():
    # with pairs at most, a triangle under (1,) has no Nash stable outcome
    tri = Instance(3, [(0, 1), (1, 2), (0, 2)], (1,))
    assert solve_exact(tri, SolveMode.WF_NS, size_cap=2).best is None
    r = solve_dp(tri, SolveMode.WF_NS, size_cap=2)
    assert r.best is None and r.welfare is NEG_INF


def test_outputs_respect_mode():
    for inst in small_pool(30, max_n=7, seed=34):
        r = solve_dp(inst, SolveMode.WF_IR)
        assert is_individually_rational(inst, r.best)
        r = solve_dp(inst, SolveMode.WF_NS)
        if r.best is not None:
            assert is_nash_stable(inst, r.best)
        assert r.algo == "dp"
