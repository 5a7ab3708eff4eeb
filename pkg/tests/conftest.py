import random

import pytest

from sdgsolve.instances import make_lemma2, make_lemma3, random_instance

SCORINGS = [(1,), (1, -1), (2, 1, -1), (1, 1, -1, -1, -1, -1)]


def small_pool(count=60, max_n=7, seed=0, connected=True):
    """Deterministic mix of small connected graphs over the standard scorings."""
    rng = random.Random(seed)
    out = []
    for i in range(count):
        n = rng.randint(2, max_n)
        p = rng.choice([0.3, 0.5, 0.7, 0.9])
        sc = SCORINGS[i % len(SCORINGS)]
        out.append(random_instance(n, p, seed * 100_000 + i, scoring=sc, connected=connected))
    return out


def all_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in all_partitions(rest):
        yield [[first]] + part
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1 :]


@pytest.fixture(scope="session")
def lemma2():
    return make_lemma2()


@pytest.fixture(scope="session")
def lemma3():
    return make_lemma3()


@pytest.fixture(scope="session")
def pool():
    return small_pool()


def naive_distance(instance, members, a, b):
    """BFS from scratch restricted to ``members``."""
    members = set(members)
    frontier, seen, d = {a}, {a}, 0
    while frontier:
        if b in frontier:
            return d
        d += 1
        frontier = {
            w for v in frontier for w in members if w not in seen and instance.has_edge(v, w)
        }
        seen |= frontier
    return None

