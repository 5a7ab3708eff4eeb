"""End-to-end acceptance checks, one per criterion.

Run under pytest (``pytest tests/test_acceptance.py -s``) or directly as a
script; either way one ``PASS``/``FAIL`` line is printed per criterion.
"""

from __future__ import annotations

import itertools
import random
import sys
import time
import warnings

import pytest

from sdgsolve.bounds import (
    AUTO,
    degree_bound_is_sound,
    degree_size_bound,
    ns_ir_diameter_bound,
    treewidth_size_bound,
)
from sdgsolve.dp import NSSearchLimit, solve_dp
from sdgsolve.instances import (
    is_three_colorable,
    make_lemma2,
    make_lemma3,
    random_bounded_degree_graph,
    random_instance,
    random_partial_ktree,
    random_tree,
    reduce_3ctcg,
)
from sdgsolve.model import NEG_INF, Instance, coalition_utilities, diameter, make_outcome, utility, welfare
from sdgsolve.oracle import OracleRefused, SolveMode, iter_outcomes, solve_exact
from sdgsolve.stability import (
    SINGLETON,
    find_ir_deviation,
    find_ns_deviation,
    is_individually_rational,
    is_nash_stable,
)
from sdgsolve.vc import solve_vc

SCORINGS = [(1,), (1, -1), (2, 1, -1), (1, 1, -1, -1, -1, -1)]
WF, WF_IR, WF_NS = SolveMode.WF, SolveMode.WF_IR, SolveMode.WF_NS

# every outcome any criterion looks at, for the parity / NS => IR sweep
TOUCHED: list = []


def touch(instance, outcome):
    if outcome is not None:
        coalitions = outcome.coalitions if hasattr(outcome, "coalitions") else outcome
        TOUCHED.append((instance, tuple(tuple(c) for c in coalitions)))
    return outcome


class Failure(AssertionError):
    pass


def check(cond, msg):
    if not cond:
        raise Failure(msg)


# ---------------------------------------------------------------------------


def criterion_1():
    fx = make_lemma2()
    inst, x = fx.instance, fx.named_agents["x"]
    t = time.perf_counter()
    r = solve_exact(inst, WF)
    elapsed = time.perf_counter() - t
    touch(inst, r.best)
    check(r.welfare == 62, f"welfare {r.welfare}")
    check(r.optimal_count == 1, f"optimal_count {r.optimal_count}")
    check(r.best.coalitions == (tuple(range(10)),), "optimum is not the grand coalition")
    check(utility(inst, x, range(10)) == -1, "utility(x, grand) != -1")
    alone = touch(inst, make_outcome(inst, fx.expected["x_alone_outcome"]))
    check(alone.welfare == 60, f"welfare(x alone) = {alone.welfare}")
    dev = find_ir_deviation(inst, r.best)
    check(dev is not None and dev.agent == x, "grand coalition should fail IR through x")
    check(elapsed < 10, f"runtime {elapsed:.1f}s")
    return f"WF = 62 (unique, grand), u(x) = -1, x alone = 60, IR fails at x; {elapsed:.2f}s"


def criterion_2():
    fx = make_lemma3()
    inst = fx.instance
    x, y = fx.named_agents["x"], fx.named_agents["y"]
    t = time.perf_counter()
    r = solve_exact(inst, WF_IR)
    elapsed = time.perf_counter() - t
    touch(inst, r.best)
    core = tuple(a for a in range(10) if a != y)
    check(r.welfare == 48 and r.optimal_count == 1, f"WF_IR {r.welfare} x{r.optimal_count}")
    check(set(r.best.coalitions) == {core, (y,)}, f"optimum {r.best.coalitions}")
    dev = find_ns_deviation(inst, r.best)
    check(dev is not None and dev.agent == x and dev.target is not SINGLETON, "x should deviate")
    check(r.best.coalitions[dev.target] == (y,) and dev.utility_after == 1, "x should join {y} for 1")
    stable = touch(inst, make_outcome(inst, [[x, y], [a for a in core if a != x]]))
    check(is_nash_stable(inst, stable) and stable.welfare == 46, "({x,y}, C-x) should be NS with 46")
    check(utility(inst, y, range(10)) == -3, "utility(y, grand) != -3")
    check(elapsed < 10, f"runtime {elapsed:.1f}s")
    return f"WF_IR = 48 (unique), x -> {{x,y}} gains 1, NS outcome 46, u(y, grand) = -3; {elapsed:.2f}s"


def criterion_3():
    l2, l3 = make_lemma2().instance, make_lemma3().instance

    def best(inst, mode):
        r = solve_exact(inst, mode)
        touch(inst, r.best)
        return r.welfare

    a, b = best(l2, WF), best(l2, WF_IR)
    c, d = best(l3, WF_IR), best(l3, WF_NS)
    check((a, b) == (62, 60), f"IR-separation chain {a} > {b}")
    check((c, d) == (48, 46), f"NS-separation chain {c} > {d}")
    return f"WF {a} > WF_IR {b}; WF_IR {c} > WF_NS {d}"


def acceptance_pool(graphs=200, seed=2024):
    rng = random.Random(seed)
    out = []
    for g in range(graphs):
        n = rng.randint(2, 7)
        p = rng.choice([0.3, 0.45, 0.6, 0.8])
        for sc in SCORINGS:
            out.append(random_instance(n, p, seed * 1000 + g, scoring=sc, connected=True))
    return out


def criterion_4():
    pool = acceptance_pool()
    t = time.perf_counter()
    ns_unsupported = 0
    comparisons = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for inst in pool:
            for mode in SolveMode:
                want = solve_exact(inst, mode)
                touch(inst, want.best)
                got = [solve_vc(inst, mode)]
                for cap in (inst.n, AUTO):
                    try:
                        got.append(solve_dp(inst, mode, size_cap=cap))
                    except NSSearchLimit:
                        check(mode is WF_NS, "only wf-ns may give up")
                        ns_unsupported += 1
                for res in got:
                    touch(inst, res.best)
                    comparisons += 1
                    check(res.welfare == want.welfare, f"{res.algo} {mode.value} {res.welfare} != {want.welfare} on {inst}")
    elapsed = time.perf_counter() - t
    check(elapsed < 600, f"runtime {elapsed:.0f}s")
    graphs = len(pool) // len(SCORINGS)
    return (
        f"{graphs} graphs x {len(SCORINGS)} scorings, {comparisons} solver results equal to the oracle, "
        f"{ns_unsupported} dp wf-ns refusals; {elapsed:.1f}s"
    )


def _grow(inst, size, rng):
    start = rng.randrange(inst.n)
    members, frontier = {start}, set(inst.adjacency[start])
    while len(members) < size and frontier:
        v = rng.choice(sorted(frontier))
        members.add(v)
        frontier |= inst.adjacency[v]
        frontier -= members
    return sorted(members) if len(members) == size else None


def criterion_5(samples=1000):
    rng = random.Random(5)
    # degree bound: bounded maximum degree (>= 3, where the count is valid)
    deg_cases = [((1,), 3), ((1, 1), 3), ((2, -1), 3), ((1, 1, -1), 3), ((1,), 4), ((1, 1), 4)]
    done = 0
    while done < samples:
        sc, d = deg_cases[done % len(deg_cases)]
        inst = random_bounded_degree_graph(40, d, rng.randrange(10**9), scoring=sc, attempts=200)
        bound = degree_size_bound(sc, inst.max_degree)
        if bound >= inst.n or not degree_bound_is_sound(sc, inst.max_degree):
            continue
        c = _grow(inst, rng.randint(bound + 1, inst.n), rng)
        if c is None:
            continue
        utils = coalition_utilities(inst, c)
        check(all(u < 0 for u in utils.values()), f"degree-bound counterexample {inst} {c}")
        done += 1
    # treewidth bound: trees (treewidth 1) with s2 < 0, closed and open scoring
    tree_cases = [(1, -1), (2, -1), (3, -1, -1), (1, -1, -2), (2, -1, -1, -1)]
    done5 = 0
    while done5 < samples:
        sc = tree_cases[done5 % len(tree_cases)]
        inst = random_tree(30, rng.randrange(10**9), scoring=sc, open_mode=done5 % 2 == 1)
        bound = treewidth_size_bound(sc, 1)
        c = _grow(inst, rng.randint(bound + 1, inst.n), rng)
        if c is None:
            continue
        total = sum(coalition_utilities(inst, c).values(), 0)
        check(total < 0, f"treewidth-bound counterexample {inst} {c}")
        done5 += 1
    return f"{done} bounded-degree coalitions all-negative, {done5} tree coalitions with negative sum; 0 counterexamples"


def criterion_6():
    rng = random.Random(6)
    graphs = []
    for n in range(2, 13):
        graphs.append((n, [(i, i + 1) for i in range(n - 1)]))
        for _ in range(2):
            graphs.append((n, sorted(random_tree(n, rng.randrange(10**9)).edges)))
    seen_ir = seen_ns = 0
    for n, edges in graphs:
        for sc in [(1, -1), (2, 1, -1)]:
            inst = Instance(n, edges, sc, open_mode=True)
            bound = ns_ir_diameter_bound(sc)
            for mode in (WF_IR, WF_NS):
                for coalitions, w in iter_outcomes(inst, mode):
                    for c in coalitions:
                        d = diameter(inst, c)
                        check(d is not None and d <= bound, f"{mode.value} outcome {coalitions} on {inst}")
                    if mode is WF_IR:
                        seen_ir += 1
                    else:
                        seen_ns += 1
                        touch(inst, coalitions)
    return f"{len(graphs)} paths/trees x 2 open vectors: {seen_ir} IR and {seen_ns} NS outcomes within 2*s1*delta"


def criterion_7():
    triangles = [(0, 1, 2), (3, 4, 5)]
    base = [e for t in triangles for e in itertools.combinations(t, 2)]
    cross = [(a, b) for a in range(3) for b in range(3, 6)]
    yes = no = 0
    for s1 in (1, 2):
        for mask in range(1 << len(cross)):
            edges = base + [e for i, e in enumerate(cross) if mask >> i & 1]
            inst, b = reduce_3ctcg(6, edges, triangles, s1=s1)
            check(b == 6 * s1, f"threshold {b}")
            r = solve_exact(inst, WF)
            touch(inst, r.best)
            colourable = is_three_colorable(6, edges)
            check((r.welfare >= b) == colourable, f"reduction mismatch on {edges}")
            if r.welfare >= b:
                check(is_individually_rational(inst, r.best) and is_nash_stable(inst, r.best), "b-outcome not stable")
                yes += 1
            else:
                no += 1
    return f"512 cross-edge patterns x s1 in {{1,2}}: {yes} colourable, {no} not, all matching"


def criterion_8():
    inst = random_partial_ktree(40, 3, 8, scoring=(1, -1))
    try:
        solve_exact(inst)
        check(False, "oracle should refuse 40 agents")
    except OracleRefused:
        pass
    parts = []
    t0 = time.perf_counter()
    for mode in (WF, WF_IR):
        t = time.perf_counter()
        r = solve_dp(inst, mode, size_cap=3)
        dt = time.perf_counter() - t
        touch(inst, r.best)
        check(r.best is not None and max(map(len, r.best.coalitions)) <= 3, "cap violated")
        check(welfare(inst, r.best.coalitions) == r.welfare, "welfare mismatch")
        width = r.stats["components"][0]["width"]
        parts.append(f"{mode.value} {r.welfare} in {dt:.2f}s")
    total = time.perf_counter() - t0
    check(width <= 3, f"decomposition width {width}")
    check(total < 60, f"runtime {total:.1f}s")
    return f"n = 40, width {width}, cap 3: " + ", ".join(parts) + "; oracle refuses"


def criterion_9():
    pool = acceptance_pool(graphs=25, seed=9)
    enumerated = 0
    for inst in pool:
        for coalitions, w in iter_outcomes(inst, WF, prune=False):
            check(w % 2 == 0, f"odd welfare {w}")
            enumerated += 1
            if is_nash_stable(inst, coalitions):
                check(is_individually_rational(inst, coalitions), "NS outcome that is not IR")
    for inst, coalitions in TOUCHED:
        w = welfare(inst, coalitions)
        check(w is NEG_INF or w % 2 == 0, f"odd welfare {w} on {inst}")
        if is_nash_stable(inst, coalitions):
            check(is_individually_rational(inst, coalitions), "NS outcome that is not IR")
    return f"{enumerated} enumerated + {len(TOUCHED)} solver outcomes: welfare even, NS => IR"


CRITERIA = [
    (1, "optimum that is not IR (fixture)", criterion_1),
    (2, "IR optimum that is not NS (fixture)", criterion_2),
    (3, "mode-separation chain", criterion_3),
    (4, "cross-solver equivalence", criterion_4),
    (5, "coalition-size bound suites", criterion_5),
    (6, "open-scoring diameter suite", criterion_6),
    (7, "colouring reduction at 6 vertices", criterion_7),
    (8, "dp smoke benchmark n = 40", criterion_8),
    (9, "parity and NS => IR invariants", criterion_9),
]


def run_one(number, title, fn):
    t = time.perf_counter()
    try:
        detail = fn()
        ok = True
    except Failure as exc:
        detail, ok = str(exc), False
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail} ({time.perf_counter() - t:.1f}s)"
    return ok, line


@pytest.mark.parametrize("number,title,fn", CRITERIA, ids=[f"criterion_{n}" for n, _, _ in CRITERIA])
def test_criterion(number, title, fn, capsys):
    ok, line = run_one(number, title, fn)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [run_one(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
