"""Queue-jumping observation models QJ-U, QJ-D and QJ-B.

A list is built one actor at a time. At each step a direction is chosen
(always top for QJ-U, always bottom for QJ-D, top with probability phi for
QJ-B). With probability p the next actor is drawn uniformly from those left,
otherwise it is the top (bottom) actor of a uniform linear extension of the
order restricted to the actors left.

The chance that actor a is top of a uniform linear extension has a closed
form on a decomposition tree: zero if some alive actor sits above a at an S
ancestor, else the product over P ancestors u of alive(child holding a) /
alive(u). Only alive-leaf counts are needed, so restriction to a list's
members never builds a new tree.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .counting import count_le_value
from .data import Actor, RankDataset, RankList
from .errors import ActorMismatch

NEG_INF = -math.inf
MODELS = ("qju", "qjd", "qjb")


def normalize_model(model: str) -> str:
    m = str(model).lower().replace("-", "").replace("_", "")
    if m not in MODELS:
        raise ValueError(f"unknown observation model {model!r}")
    return m


def _logaddexp(x: float, y: float) -> float:
    if x == NEG_INF:
        return y
    if y == NEG_INF:
        return x
    if x > y:
        return x + math.log1p(math.exp(y - x))
    return y + math.log1p(math.exp(x - y))


def _log(x: float) -> float:
    return math.log(x) if x > 0.0 else NEG_INF


class ListEvaluator:
    """Likelihood evaluation for one fixed tree; reusable across lists."""

    def __init__(self, tree):
        self.tree = tree
        par = tree.parent
        kind = tree.kind
        self.size = len(par)
        self.leaf = dict(tree.leaf_of)
        self.paths = {}
        for a, leaf in tree.leaf_of.items():
            path = []
            w = leaf
            u = par[w]
            while u != -1:
                path.append((u, w, kind[u] == "S"))
                w = u
                u = par[u]
            self.paths[a] = path

    def _alive(self, members) -> list:
        alive = [0] * self.size
        for a in members:
            self._add(alive, a, 1)
        return alive

    def _add(self, alive, a, d):
        alive[self.leaf[a]] += d
        for u, _, _ in self.paths[a]:
            alive[u] += d

    def end_prob(self, alive, a, top: bool) -> float:
        """Probability that ``a`` is first (or last) in a uniform extension of the alive suborder."""
        ch = self.tree.children
        prob = 1.0
        for u, w, series in self.paths[a]:
            if series:
                kids = ch[u] if top else reversed(ch[u])
                for c in kids:
                    if c == w:
                        break
                    if alive[c]:
                        return 0.0
            else:
                prob *= alive[w] / alive[u]
        return prob

    def check(self, x: Sequence, full: bool = False):
        if len(set(x)) != len(x):
            raise ActorMismatch("list repeats an actor")
        unknown = [a for a in x if a not in self.leaf]
        if unknown:
            raise ActorMismatch(f"actors {unknown} are not in the tree")
        if full and len(x) != len(self.leaf):
            raise ActorMismatch("list must be a permutation of all actors in the tree")

    def _one_way(self, x: Sequence, p: float, top: bool) -> float:
        m = len(x)
        if m <= 1:
            return 0.0
        alive = self._alive(x)
        order = x if top else x[::-1]
        logs = []
        for k in range(m - 1):
            a = order[k]
            f = p / (m - k) + (1.0 - p) * self.end_prob(alive, a, top)
            if f <= 0.0:
                return NEG_INF
            logs.append(math.log(f))
            self._add(alive, a, -1)
        # summed innermost-first so the QJ-B recursion reproduces this bit for bit
        total = 0.0
        for v in reversed(logs):
            total = v + total
        return total

    def qju(self, x: Sequence, p: float) -> float:
        return self._one_way(tuple(x), p, True)

    def qjd(self, x: Sequence, p: float) -> float:
        return self._one_way(tuple(x), p, False)

    def qjb(self, x: Sequence, p: float, phi: float) -> float:
        x = tuple(x)
        m = len(x)
        if m <= 1:
            return 0.0
        # lt[a][b]: log factor for taking x[a] off the top of x[a..b];
        # lb[a][b]: same for x[b] off the bottom
        lt = [[0.0] * m for _ in range(m)]
        lb = [[0.0] * m for _ in range(m)]
        alive = [0] * self.size
        for a in range(m):
            for b in range(a, m):
                self._add(alive, x[b], 1)
                if b > a:
                    rem = b - a + 1
                    lt[a][b] = _log(p / rem + (1.0 - p) * self.end_prob(alive, x[a], True))
                    lb[a][b] = _log(p / rem + (1.0 - p) * self.end_prob(alive, x[b], False))
            for b in range(a, m):
                self._add(alive, x[b], -1)
        lphi = _log(phi)
        l1m = _log(1.0 - phi)
        P = [[0.0] * m for _ in range(m)]
        for length in range(2, m + 1):
            for a in range(0, m - length + 1):
                b = a + length - 1
                up = lphi + lt[a][b] + P[a + 1][b] if lphi != NEG_INF else NEG_INF
                down = l1m + lb[a][b] + P[a][b - 1] if l1m != NEG_INF else NEG_INF
                P[a][b] = _logaddexp(up, down)
        return P[0][m - 1]

    def log_lik(self, x: Sequence, model: str, p: float, phi: float = 1.0) -> float:
        if model == "qju":
            return self.qju(x, p)
        if model == "qjd":
            return self.qjd(x, p)
        return self.qjb(x, p, phi)

    def dataset(self, lists: Iterable[Sequence], model: str, p: float, phi: float = 1.0):
        model = normalize_model(model)
        per = np.array([self.log_lik(x, model, p, phi) for x in lists], dtype=float)
        return float(per.sum()), per

    # simulation
    def simulate(self, members: Sequence, p: float, phi: float, rng: np.random.Generator) -> tuple:
        remaining = list(members)
        alive = self._alive(remaining)
        head: list = []
        tail: list = []
        while len(remaining) > 1:
            top = rng.random() < phi
            r = len(remaining)
            if rng.random() < p:
                pick = int(rng.random() * r)
            else:
                probs = np.array([self.end_prob(alive, a, top) for a in remaining])
                cdf = np.cumsum(probs)
                pick = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
                pick = min(pick, r - 1)
            a = remaining.pop(pick)
            self._add(alive, a, -1)
            (head if top else tail).append(a)
        return tuple(head + remaining + tail[::-1])


def _full(x, tree):
    ev = ListEvaluator(tree)
    x = tuple(x)
    ev.check(x, full=True)
    return ev, x


def qju_log_lik(x: Sequence, tree, p: float) -> float:
    ev, x = _full(x, tree)
    return ev.qju(x, p)


def qjd_log_lik(x: Sequence, tree, p: float) -> float:
    ev, x = _full(x, tree)
    return ev.qjd(x, p)


def qjb_log_lik(x: Sequence, tree, p: float, phi: float) -> float:
    ev, x = _full(x, tree)
    return ev.qjb(x, p, phi)


def dataset_log_lik(y, tree, model: str, p: float, phi: float = 1.0):
    """Total and per-list log likelihood; each list is scored on the order restricted to its members."""
    ev = ListEvaluator(tree)
    lists = y.orderings if isinstance(y, RankDataset) else [tuple(x) for x in y]
    for x in lists:
        ev.check(x)
    return ev.dataset(lists, model, p, phi)


def qjb_log_lik_naive(x: Sequence, tree, p: float, phi: float) -> float:
    """Sum over every placement-direction vector z, with exact count ratios (test oracle)."""
    x = tuple(x)
    m = len(x)
    if m <= 1:
        return 0.0
    p = Fraction(p)
    phi = Fraction(phi)
    memo: dict = {}

    def ratio(alive: frozenset, a, top: bool) -> Fraction:
        k = (alive, a, top)
        if k not in memo:
            total = count_le_value(tree, alive)
            memo[k] = Fraction(_end_count(tree, a, alive, top), total)
        return memo[k]

    out = Fraction(0)
    for z in itertools.product((0, 1), repeat=m - 1):
        lo, hi = 0, m - 1
        alive = set(x)
        prob = Fraction(1)
        for zk in z:
            rem = hi - lo + 1
            if zk == 1:
                a = x[lo]
                lo += 1
                prob *= phi * (p / rem + (1 - p) * ratio(frozenset(alive), a, True))
            else:
                a = x[hi]
                hi -= 1
                prob *= (1 - phi) * (p / rem + (1 - p) * ratio(frozenset(alive), a, False))
            alive.discard(a)
            if prob == 0:
                break
        out += prob
    return math.log(out) if out > 0 else NEG_INF


def _end_count(tree, a, alive, top):
    # linear extensions of v[alive] with a at the end, found by direct tree inspection
    w = tree.leaf_of[a]
    u = tree.parent[w]
    while u != -1:
        if tree.kind[u] == "S":
            kids = tree.children[u] if top else tree.children[u][::-1]
            for c in kids:
                if c == w:
                    break
                if any(b in alive for b in tree.leaves_under(c)):
                    return 0
        w = u
        u = tree.parent[u]
    rest = set(alive)
    rest.discard(a)
    return count_le_value(tree, rest) if rest else 1


def simulate_qju(tree, p: float, rng: np.random.Generator, members: Sequence | None = None) -> tuple:
    members = sorted(tree.leaf_of) if members is None else list(members)
    return ListEvaluator(tree).simulate(members, p, 1.0, rng)


def simulate_qjd(tree, p: float, rng: np.random.Generator, members: Sequence | None = None) -> tuple:
    members = sorted(tree.leaf_of) if members is None else list(members)
    return ListEvaluator(tree).simulate(members, p, 0.0, rng)


def simulate_qjb(tree, p: float, phi: float, rng: np.random.Generator, members: Sequence | None = None) -> tuple:
    members = sorted(tree.leaf_of) if members is None else list(members)
    return ListEvaluator(tree).simulate(members, p, phi, rng)


def simulate_dataset(tree, model: str, p: float, phi: float, memberships, rng: np.random.Generator, actors=None) -> RankDataset:
    """One simulated list per membership set, each drawn on the restricted order."""
    model = normalize_model(model)
    phi = {"qju": 1.0, "qjd": 0.0}.get(model, phi)
    ev = ListEvaluator(tree)
    lists = []
    for o in memberships:
        o = list(o)
        ev.check(o)
        lists.append(RankList(ev.simulate(sorted(o), p, phi, rng)))
    if actors is None:
        actors = tuple(Actor(a, str(a), "") for a in sorted(tree.leaf_of))
    return RankDataset(tuple(actors), tuple(lists))
