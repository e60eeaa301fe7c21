"""Tree proposals: prune-and-regraft on BDTs and MDTs, and BDT node-type flips.

Moves return new trees and never mutate their input.
"""
from __future__ import annotations

from .trees import Bdt, Mdt, canonical_key

ABOVE_ROOT = -1  # regraft target meaning "new root above the current root"


def _other(kind: str) -> str:
    return "P" if kind == "S" else "S"


# BDT moves


def bdt_spr(t: Bdt, x: int, target: int, x_upper: bool = True) -> Bdt | None:
    """Move the subtree at ``x`` (with its parent node) onto the edge above ``target``.

    Returns None when ``target`` lies inside the moved subtree. Choosing the
    parent or sibling of ``x`` as target puts the subtree back where it was.
    For an S parent ``x_upper`` decides the new stacking.
    """
    e1 = t.parent[x]
    if e1 == -1:
        raise ValueError("cannot prune the root")
    if t.in_subtree(target, x):
        return None
    a, b = t.children[e1]
    s = b if a == x else a
    if target == e1:
        target = s
    out = t.copy()
    par = out.parent
    ch = out.children
    g = par[e1]
    par[s] = g
    if g == -1:
        out.root = s
    else:
        kids = ch[g]
        kids[kids.index(e1)] = s
    h = par[target]
    par[e1] = h
    if h == -1:
        out.root = e1
    else:
        kids = ch[h]
        kids[kids.index(target)] = e1
    par[target] = e1
    par[x] = e1
    ch[e1] = [x, target] if x_upper else [target, x]
    out._key = None
    return out


def local_targets(t: Bdt, x: int) -> list[int]:
    """Neighbouring regraft targets for the subtree at ``x``.

    The parent's own edge, the edges below the sibling, and the edge of the
    parent's sibling (each given by the node at its lower end).
    """
    e1 = t.parent[x]
    a, b = t.children[e1]
    s = b if a == x else a
    out = []
    g = t.parent[e1]
    if g != -1:
        out.append(g)
        c0, c1 = t.children[g]
        out.append(c1 if c0 == e1 else c0)
    if t.children[s] is not None:
        out.extend(t.children[s])
    return out


def bdt_flip(t: Bdt, u: int, upper_first: bool = True) -> Bdt:
    """Flip internal node ``u`` between S and P; a new S node takes the given stacking."""
    out = t.copy()
    if out.kind[u] == "S":
        out.kind[u] = "P"
    else:
        out.kind[u] = "S"
        if not upper_first:
            out.children[u].reverse()
    out._key = None
    return out


# MDT moves


def _prune(m: Mdt, x: int):
    """Copy of ``m`` with the subtree at ``x`` detached; None if that leaves equal adjacent types."""
    out = m.copy()
    par = out.parent
    ch = out.children
    e1 = par[x]
    ch[e1].remove(x)
    par[x] = -1
    if len(ch[e1]) == 1:
        s = ch[e1][0]
        g = par[e1]
        par[s] = g
        if g == -1:
            out.root = s
        else:
            kids = ch[g]
            kids[kids.index(e1)] = s
            if ch[s] is not None and out.kind[s] == out.kind[g]:
                return None
        out._release(e1)
    out._key = None
    return out


def mdt_plan(m: Mdt, x: int, i: int):
    """Work out the regraft of subtree ``x`` at target ``i``.

    ``i`` is a node id or ABOVE_ROOT. Returns (pruned tree, plan, weights) or
    None for an inadmissible move. Options are indexed 0..len(weights)-1 and
    built with :func:`mdt_apply`.
    """
    e1 = m.parent[x]
    if e1 == -1 or i == e1 or i == x:
        raise ValueError("invalid (x, i) pair")
    if i != ABOVE_ROOT and m.in_subtree(i, x):
        return None
    pruned = _prune(m, x)
    if pruned is None:
        return None
    xkind = m.kind[x]
    if i != ABOVE_ROOT and pruned.children[i] is not None:
        if xkind == pruned.kind[i]:
            return None
        if pruned.kind[i] == "S":
            c = len(pruned.children[i])
            return pruned, ("attach-S", i), [1.0 / (c + 1)] * (c + 1)
        return pruned, ("attach-P", i), [1.0]
    r = pruned.root if i == ABOVE_ROOT else i
    h = pruned.parent[r]
    if h != -1:
        jkind = _other(pruned.kind[h])
    elif pruned.children[r] is not None:
        jkind = _other(pruned.kind[r])
    elif xkind is not None:
        jkind = _other(xkind)
    else:
        # two lone leaves: any of the three orders on them
        return pruned, ("new-any", r), [1.0 / 3.0] * 3
    if xkind == jkind:
        return None
    if jkind == "S":
        return pruned, ("new-S", r), [0.5, 0.5]
    return pruned, ("new-P", r), [1.0]


def mdt_apply(pruned: Mdt, x: int, plan, option: int, inplace: bool = False) -> Mdt:
    out = pruned if inplace else pruned.copy()
    par = out.parent
    ch = out.children
    what, node = plan
    if what == "attach-S":
        ch[node].insert(option, x)
        par[x] = node
    elif what == "attach-P":
        ch[node].append(x)
        par[x] = node
    else:
        if what == "new-any":
            jkind = ("P", "S", "S")[option]
            x_first = option != 2
        else:
            jkind = "S" if what == "new-S" else "P"
            x_first = option == 0
        h = par[node]
        j = out._new(kind=jkind)
        par[j] = h
        if h == -1:
            out.root = j
        else:
            kids = ch[h]
            kids[kids.index(node)] = j
        ch[j] = [x, node] if x_first else [node, x]
        par[x] = j
        par[node] = j
    out._key = None
    return out


def mdt_targets(m: Mdt, x: int) -> list[int]:
    """Regraft targets open to subtree ``x``: every node and ABOVE_ROOT, minus x and its parent."""
    e1 = m.parent[x]
    return [u for u in m.preorder() if u != x and u != e1] + [ABOVE_ROOT]


def mdt_nonroot(m: Mdt) -> list[int]:
    return [u for u in m.preorder() if u != m.root]


def mdt_proposal_prob(m: Mdt, m_new: Mdt) -> float:
    """Total probability that one regraft proposal from ``m`` yields ``m_new``.

    Sums over every (subtree, target, option) path, since distinct paths can
    give the same tree.
    """
    target_key = m_new.key()
    if target_key == m.key():
        return 0.0
    nodes = m.preorder()
    n_nodes = len(nodes)
    if n_nodes < 3:
        return 0.0
    new_sets = {frozenset(v) for v in _leaf_sets(m_new).values()}
    all_actors = set(m.leaf_of)
    total = 0.0
    for x, leaves in _leaf_sets(m).items():
        if x == m.root or frozenset(leaves) not in new_sets:
            continue
        rest = all_actors.difference(leaves)
        if canonical_key(m, rest) != canonical_key(m_new, rest):
            continue
        for i in mdt_targets(m, x):
            res = mdt_plan(m, x, i)
            if res is None:
                continue
            pruned, plan, weights = res
            for opt, w in enumerate(weights):
                if mdt_apply(pruned, x, plan, opt).key() == target_key:
                    total += w
    # both the subtree and the target are uniform over n_nodes - 1 choices
    return total / ((n_nodes - 1) * (n_nodes - 1))


def _leaf_sets(t) -> dict:
    out: dict = {}
    for u in t.postorder():
        c = t.children[u]
        out[u] = [t.actor[u]] if c is None else [a for w in c for a in out[w]]
    return out
