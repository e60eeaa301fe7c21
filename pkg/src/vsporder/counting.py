"""Exact linear-extension counts on decomposition trees."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import UnknownActor


@dataclass(frozen=True)
class LeCount:
    value: int
    log_value: float

    @classmethod
    def of(cls, value: int) -> "LeCount":
        return cls(value, math.log(value) if value > 0 else -math.inf)

    def __int__(self):
        return self.value


def _prod(xs):
    # balanced product keeps big-int multiplications cheap
    xs = [x for x in xs if x != 1]
    if not xs:
        return 1
    while len(xs) > 1:
        nxt = [xs[i] * xs[i + 1] for i in range(0, len(xs) - 1, 2)]
        if len(xs) % 2:
            nxt.append(xs[-1])
        xs = nxt
    return xs[0]


def count_le_value(tree, keep=None) -> int:
    """Number of linear extensions of v(tree), optionally restricted to ``keep``.

    S nodes multiply child counts; P nodes additionally take the multinomial
    coefficient of the child sizes.
    """
    ch = tree.children
    kind = tree.kind
    actor = tree.actor
    size = [0] * len(ch)
    factors = []
    comb = math.comb
    for u in tree.postorder():
        c = ch[u]
        if c is None:
            size[u] = 1 if keep is None or actor[u] in keep else 0
            continue
        if kind[u] == "P":
            run = 0
            for w in c:
                s = size[w]
                if s:
                    if run:
                        factors.append(comb(run + s, s))
                    run += s
            size[u] = run
        else:
            size[u] = sum([size[w] for w in c])
    return _prod(factors)


def count_le(tree, keep=None) -> LeCount:
    return LeCount.of(count_le_value(tree, keep))


def _end_counts(tree, top: bool) -> dict:
    out = {}
    for a, leaf in tree.leaf_of.items():
        blocked = False
        w = leaf
        u = tree.parent[w]
        while u != -1:
            if tree.kind[u] == "S":
                end = tree.children[u][0] if top else tree.children[u][-1]
                if end != w:
                    blocked = True
                    break
            w = u
            u = tree.parent[u]
        if blocked:
            out[a] = LeCount(0, -math.inf)
        else:
            keep = set(tree.leaf_of)
            keep.discard(a)
            out[a] = count_le(tree, keep) if keep else LeCount(1, 0.0)
    return out


def top_counts(tree) -> dict:
    """Map actor -> number of linear extensions with that actor first."""
    return _end_counts(tree, top=True)


def bottom_counts(tree) -> dict:
    """Map actor -> number of linear extensions with that actor last."""
    return _end_counts(tree, top=False)


def end_probability(tree, actor, alive, top: bool = True) -> float:
    """Fraction of linear extensions of v(tree)[alive] with ``actor`` at the top (or bottom).

    Exact-count version used as a reference for the fast likelihood code.
    """
    if actor not in alive:
        raise UnknownActor(f"actor {actor!r} not in the alive set")
    rest = set(alive)
    rest.discard(actor)
    total = count_le_value(tree, set(alive))
    counts = _end_counts_restricted(tree, actor, rest, top)
    return counts / total


def _end_counts_restricted(tree, actor, rest, top):
    alive = set(rest) | {actor}
    w = tree.leaf_of[actor]
    u = tree.parent[w]
    while u != -1:
        if tree.kind[u] == "S":
            kids = tree.children[u] if top else tree.children[u][::-1]
            for c in kids:
                if c == w:
                    break
                if any(a in alive for a in tree.leaves_under(c)):
                    return 0
        w = u
        u = tree.parent[u]
    return count_le_value(tree, rest) if rest else 1
