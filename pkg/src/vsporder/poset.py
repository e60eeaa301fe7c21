"""Partial orders stored as dense boolean relation matrices.

``relation[i, j]`` is True when ``labels[i]`` is above ``labels[j]``.
The brute-force enumerators at the bottom of this module are deliberately
simple; they serve as oracles for the faster tree-based code.
"""
from __future__ import annotations

import itertools
from collections import deque
from typing import Hashable, Iterable, Sequence

import numpy as np

from .errors import CycleDetected, OracleBoundExceeded, UnknownActor

DEFAULT_ORACLE_BOUND = 10
POSET_ENUMERATION_BOUND = 5


class PartialOrder:
    """A transitively closed, irreflexive, antisymmetric relation on labelled actors.

    Equality and hashing ignore the order in which labels are stored.
    """

    __slots__ = ("labels", "relation", "_index", "_hash")

    def __init__(self, labels: Sequence[Hashable], relation, *, check: bool = True):
        labels = tuple(labels)
        rel = np.array(relation, dtype=bool, copy=True)
        n = len(labels)
        if rel.shape != (n, n):
            raise ValueError(f"relation shape {rel.shape} does not match {n} labels")
        if len(set(labels)) != n:
            raise ValueError("duplicate labels")
        if check:
            if rel.diagonal().any():
                raise CycleDetected("relation is not irreflexive")
            if (rel & rel.T).any():
                raise CycleDetected("relation is not antisymmetric")
            if n and ((rel.astype(np.uint8) @ rel.astype(np.uint8)) > 0)[~rel].any():
                raise ValueError("relation is not transitively closed")
        rel.setflags(write=False)
        self.labels = labels
        self.relation = rel
        self._index = {a: i for i, a in enumerate(labels)}
        self._hash = None

    # construction helpers
    @classmethod
    def from_edges(cls, labels: Iterable[Hashable], edges: Iterable[tuple]) -> "PartialOrder":
        """Close a set of (upper, lower) label pairs."""
        labels = tuple(labels)
        index = {a: i for i, a in enumerate(labels)}
        raw = np.zeros((len(labels), len(labels)), dtype=bool)
        for a, b in edges:
            if a not in index or b not in index:
                raise UnknownActor(f"edge ({a}, {b}) uses an unknown actor")
            raw[index[a], index[b]] = True
        return transitive_closure(raw, labels)

    @classmethod
    def empty(cls, labels: Iterable[Hashable]) -> "PartialOrder":
        labels = tuple(labels)
        return cls(labels, np.zeros((len(labels), len(labels)), dtype=bool), check=False)

    @classmethod
    def chain(cls, labels: Iterable[Hashable]) -> "PartialOrder":
        """Total order with ``labels[0]`` on top."""
        labels = tuple(labels)
        n = len(labels)
        return cls(labels, np.triu(np.ones((n, n), dtype=bool), 1), check=False)

    @property
    def n(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise UnknownActor(f"unknown actor {label!r}") from None

    def above(self, a, b) -> bool:
        """True when ``a`` is above ``b``."""
        return bool(self.relation[self.index(a), self.index(b)])

    def edges(self) -> frozenset:
        """All related (upper, lower) label pairs of the closure."""
        ii, jj = np.nonzero(self.relation)
        return frozenset((self.labels[i], self.labels[j]) for i, j in zip(ii, jj))

    def dual(self) -> "PartialOrder":
        return PartialOrder(self.labels, self.relation.T, check=False)

    def reorder(self, labels: Sequence[Hashable]) -> "PartialOrder":
        """Same order with labels stored in the given sequence."""
        idx = [self.index(a) for a in labels]
        if len(idx) != self.n:
            raise UnknownActor("reorder needs every label exactly once")
        return PartialOrder(labels, self.relation[np.ix_(idx, idx)], check=False)

    def __eq__(self, other):
        if not isinstance(other, PartialOrder):
            return NotImplemented
        if set(self.labels) != set(other.labels):
            return False
        return self.edges() == other.edges()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((frozenset(self.labels), self.edges()))
        return self._hash

    def __repr__(self):
        red = sorted(transitive_reduction(self), key=repr)
        return f"PartialOrder(labels={list(self.labels)}, reduction={red})"


def _topological_order(rel: np.ndarray) -> list[int]:
    n = rel.shape[0]
    indeg = rel.sum(axis=0).astype(int)
    queue = deque(i for i in range(n) if indeg[i] == 0)
    order = []
    while queue:
        i = queue.popleft()
        order.append(i)
        for j in np.flatnonzero(rel[i]):
            indeg[j] -= 1
            if indeg[j] == 0:
                queue.append(j)
    if len(order) != n:
        raise CycleDetected("relation contains a directed cycle")
    return order


def transitive_closure(raw, labels: Sequence[Hashable] | None = None) -> PartialOrder:
    """Transitive closure of a square boolean matrix describing a DAG."""
    rel = np.array(raw, dtype=bool, copy=True)
    if rel.ndim != 2 or rel.shape[0] != rel.shape[1]:
        raise ValueError("relation matrix must be square")
    n = rel.shape[0]
    if labels is None:
        labels = tuple(range(1, n + 1))
    _topological_order(rel)
    # Warshall, one row/column broadcast per pivot
    for k in range(n):
        rel |= rel[:, k : k + 1] & rel[k : k + 1, :]
    return PartialOrder(labels, rel, check=False)


def transitive_reduction(po: PartialOrder) -> frozenset:
    """Cover relation of ``po`` as a set of (upper, lower) label pairs."""
    r = po.relation.astype(np.uint8)
    implied = (r @ r) > 0
    keep = po.relation & ~implied
    ii, jj = np.nonzero(keep)
    return frozenset((po.labels[i], po.labels[j]) for i, j in zip(ii, jj))


def restrict(po: PartialOrder, o: Sequence[Hashable]) -> PartialOrder:
    """Suborder induced on the actors ``o`` (kept in the given order)."""
    o = tuple(o)
    if len(set(o)) != len(o):
        raise ValueError("restriction set has duplicates")
    idx = [po.index(a) for a in o]
    return PartialOrder(o, po.relation[np.ix_(idx, idx)], check=False)


def depth(po: PartialOrder) -> int:
    """Number of actors in a longest chain."""
    n = po.n
    if n == 0:
        return 0
    longest = np.ones(n, dtype=int)
    for i in _topological_order(po.relation):
        below = np.flatnonzero(po.relation[i])
        if below.size:
            longest[below] = np.maximum(longest[below], longest[i] + 1)
    return int(longest.max())


def find_forbidden(po: PartialOrder) -> tuple | None:
    """Return labels (a, b, c, d) forming the N pattern, or None.

    The pattern is a>c, a>d, b>d with a||b, b||c and c||d.
    """
    rel = po.relation
    unrelated = ~(rel | rel.T)
    np.fill_diagonal(unrelated, False)
    for a, d in zip(*np.nonzero(rel)):
        cs = np.flatnonzero(rel[a] & unrelated[:, d])
        if cs.size == 0:
            continue
        bs = np.flatnonzero(rel[:, d] & unrelated[a])
        if bs.size == 0:
            continue
        hit = unrelated[np.ix_(bs, cs)]
        if hit.any():
            bi, ci = np.argwhere(hit)[0]
            lab = po.labels
            return lab[a], lab[bs[bi]], lab[cs[ci]], lab[d]
    return None


def is_vsp(po: PartialOrder) -> bool:
    """True when ``po`` is vertex series-parallel (no induced N)."""
    return find_forbidden(po) is None


def enumerate_linear_extensions(po: PartialOrder, bound: int = DEFAULT_ORACLE_BOUND) -> list[tuple]:
    """All linear extensions, each listed top to bottom."""
    n = po.n
    if n > bound:
        raise OracleBoundExceeded(f"n={n} exceeds oracle bound {bound}")
    rel = po.relation
    n_above = rel.sum(axis=0).astype(int).tolist()
    below = [np.flatnonzero(rel[i]).tolist() for i in range(n)]
    placed = [False] * n
    prefix: list[int] = []
    out: list[tuple] = []

    def extend():
        if len(prefix) == n:
            out.append(tuple(po.labels[i] for i in prefix))
            return
        for i in range(n):
            if not placed[i] and n_above[i] == 0:
                placed[i] = True
                prefix.append(i)
                for j in below[i]:
                    n_above[j] -= 1
                extend()
                for j in below[i]:
                    n_above[j] += 1
                prefix.pop()
                placed[i] = False

    extend()
    return out


def enumerate_posets(n: int, labels: Sequence[Hashable] | None = None) -> list[PartialOrder]:
    """Every labelled partial order on ``n`` actors (n <= 5)."""
    if n > POSET_ENUMERATION_BOUND:
        raise OracleBoundExceeded(f"n={n} exceeds poset enumeration bound {POSET_ENUMERATION_BOUND}")
    labels = tuple(range(1, n + 1)) if labels is None else tuple(labels)
    pairs = list(itertools.combinations(range(n), 2))
    out = []
    for states in itertools.product((0, 1, 2), repeat=len(pairs)):
        rel = np.zeros((n, n), dtype=bool)
        for (i, j), s in zip(pairs, states):
            if s == 1:
                rel[i, j] = True
            elif s == 2:
                rel[j, i] = True
        r = rel.astype(np.uint8)
        if ((r @ r) > 0)[~rel].any():
            continue
        out.append(PartialOrder(labels, rel, check=False))
    return out


def enumerate_vsps(n: int, labels: Sequence[Hashable] | None = None) -> list[PartialOrder]:
    return [po for po in enumerate_posets(n, labels) if is_vsp(po)]
