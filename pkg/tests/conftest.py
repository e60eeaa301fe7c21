import itertools

import numpy as np
import pytest

from vsporder.poset import PartialOrder
from vsporder.trees import Bdt, Mdt

# v0: 1 on top, then 2 in parallel with the chain 3 > 4, then 5 at the bottom
V0_NESTED = {"S": [1, {"P": [2, {"S": [3, 4]}]}, 5]}
T0_NESTED = ("S", 1, ("S", ("P", 2, ("S", 3, 4)), 5))
M1_NESTED = {"S": [1, {"P": [2, 3, 4]}, 5, 6]}
V0_EDGES = {(1, 2), (1, 3), (1, 4), (1, 5), (2, 5), (3, 4), (3, 5), (4, 5)}
N_EDGES = [(1, 3), (1, 4), (2, 4)]


@pytest.fixture
def v0():
    return PartialOrder.from_edges([1, 2, 3, 4, 5], V0_EDGES)


@pytest.fixture
def t0():
    return Bdt.from_nested(T0_NESTED)


@pytest.fixture
def m0():
    return Mdt.from_nested(V0_NESTED)


@pytest.fixture
def m1():
    return Mdt.from_nested(M1_NESTED)


@pytest.fixture
def n_order():
    return PartialOrder.from_edges([1, 2, 3, 4], N_EDGES)


# independent oracles (no package code beyond PartialOrder containers)


def random_sp_relation(labels, rng, q=0.5):
    """Relation matrix of a random series-parallel order built by direct composition."""
    labels = list(labels)
    n = len(labels)
    idx = {a: i for i, a in enumerate(labels)}
    rel = np.zeros((n, n), dtype=bool)

    def build(block):
        if len(block) == 1:
            return
        perm = list(rng.permutation(block))
        cut = int(rng.integers(1, len(block)))
        top, bottom = perm[:cut], perm[cut:]
        build(top)
        build(bottom)
        if rng.random() < q:
            for a in top:
                for b in bottom:
                    rel[idx[a], idx[b]] = True

    build(labels)
    return rel


def random_sp_order(n, rng, q=0.5):
    labels = list(range(1, n + 1))
    return PartialOrder(labels, random_sp_relation(labels, rng, q))


def le_count_dp(rel) -> int:
    """Linear extensions by dynamic programming over placed-prefix bitmasks."""
    rel = np.asarray(rel, dtype=bool)
    n = rel.shape[0]
    above = [sum(1 << j for j in range(n) if rel[j, i]) for i in range(n)]
    f = [0] * (1 << n)
    f[0] = 1
    for mask in range(1 << n):
        if not f[mask]:
            continue
        for i in range(n):
            if not mask >> i & 1 and above[i] & mask == above[i]:
                f[mask | 1 << i] += f[mask]
    return f[(1 << n) - 1]


def linear_extensions_naive(po: PartialOrder):
    """Every permutation of the labels consistent with the order."""
    out = []
    for perm in itertools.permutations(range(po.n)):
        pos = {v: k for k, v in enumerate(perm)}
        if all(pos[i] < pos[j] for i, j in zip(*np.nonzero(po.relation))):
            out.append(tuple(po.labels[i] for i in perm))
    return out


def qj_list_prob_naive(po: PartialOrder, x, p, phi):
    """List probability by direct recursion over placement directions and LE counts."""
    from fractions import Fraction

    p = Fraction(p)
    phi = Fraction(phi)

    def lecount(alive):
        labs = sorted(alive, key=po.index)
        idx = [po.index(a) for a in labs]
        return le_count_dp(po.relation[np.ix_(idx, idx)]), labs

    def end_ratio(alive, a, top):
        total, labs = lecount(alive)
        idx = [po.index(b) for b in labs]
        i = po.index(a)
        blockers = [j for j in idx if j != i and (po.relation[j, i] if top else po.relation[i, j])]
        if blockers:
            return Fraction(0)
        rest = [b for b in labs if b != a]
        sub, _ = lecount(rest) if rest else (1, None)
        return Fraction(sub, total)

    def rec(lo, hi):
        if hi - lo < 1:
            return Fraction(1)
        alive = x[lo:hi + 1]
        rem = hi - lo + 1
        up = phi * (p / rem + (1 - p) * end_ratio(alive, x[lo], True)) if phi else 0
        down = (1 - phi) * (p / rem + (1 - p) * end_ratio(alive, x[hi], False)) if phi != 1 else 0
        total = Fraction(0)
        if up:
            total += up * rec(lo + 1, hi)
        if down:
            total += down * rec(lo, hi - 1)
        return total

    return rec(0, len(x) - 1)


def tv_distance(counts: dict, exact: dict) -> float:
    k = sum(counts.values())
    keys = set(counts) | set(exact)
    return 0.5 * sum(abs(counts.get(v, 0) / k - exact.get(v, 0.0)) for v in keys)


def log_close(a, b, tol=1e-12):
    if a == b:
        return True
    return abs(a - b) <= tol * max(1.0, abs(b))



# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
