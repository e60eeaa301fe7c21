"""Binary and multi decomposition trees for VSP partial orders.

Both tree types share one node-pool layout:

* ``parent[u]``   parent id, -1 for the root (and for free slots)
* ``children[u]`` list of child ids for internal nodes, None for leaves.
  For S nodes the list is the stacking order, upper child first.
* ``kind[u]``     'S', 'P' or None (leaf)
* ``actor[u]``    actor label for leaves, None otherwise
* ``leaf_of``     actor -> leaf id

Node ids are stable under edits; deleted ids go to a free list.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import (
    ActorPresent,
    EdgeNotFound,
    InvalidTree,
    LastActor,
    NotVsp,
    UnknownActor,
)
from .poset import PartialOrder

S_UP = "S-up"
S_DOWN = "S-down"
PAR = "P"
TYPE_DRAWS = (S_UP, S_DOWN, PAR)


class _Tree:
    __slots__ = ("parent", "children", "kind", "actor", "leaf_of", "root", "_free", "_key")

    def __init__(self):
        self.parent: list[int] = []
        self.children: list[list[int] | None] = []
        self.kind: list[str | None] = []
        self.actor: list = []
        self.leaf_of: dict = {}
        self.root = -1
        self._free: list[int] = []
        self._key = None

    # pool management
    def _new(self, kind=None, actor=None) -> int:
        if self._free:
            u = self._free.pop()
            self.parent[u] = -1
            self.children[u] = None if kind is None else []
            self.kind[u] = kind
            self.actor[u] = actor
        else:
            u = len(self.parent)
            self.parent.append(-1)
            self.children.append(None if kind is None else [])
            self.kind.append(kind)
            self.actor.append(actor)
        if kind is None:
            self.leaf_of[actor] = u
        return u

    def _release(self, u: int):
        if self.kind[u] is None:
            self.leaf_of.pop(self.actor[u], None)
        self.parent[u] = -1
        self.children[u] = None
        self.kind[u] = None
        self.actor[u] = None
        self._free.append(u)

    def _touch(self):
        self._key = None

    def copy(self):
        t = object.__new__(type(self))
        t.parent = self.parent[:]
        t.children = [None if c is None else c[:] for c in self.children]
        t.kind = self.kind[:]
        t.actor = self.actor[:]
        t.leaf_of = dict(self.leaf_of)
        t.root = self.root
        t._free = self._free[:]
        t._key = self._key
        return t

    # queries
    @property
    def n(self) -> int:
        return len(self.leaf_of)

    @property
    def actors(self) -> list:
        return sorted(self.leaf_of)

    def is_leaf(self, u: int) -> bool:
        return self.children[u] is None

    def preorder(self, start: int | None = None) -> list[int]:
        start = self.root if start is None else start
        out = []
        stack = [start]
        ch = self.children
        while stack:
            u = stack.pop()
            out.append(u)
            c = ch[u]
            if c is not None:
                stack.extend(reversed(c))
        return out

    def postorder(self, start: int | None = None) -> list[int]:
        # reversed preorder over reversed children is a valid postorder
        start = self.root if start is None else start
        out = []
        stack = [start]
        ch = self.children
        while stack:
            u = stack.pop()
            out.append(u)
            c = ch[u]
            if c is not None:
                stack.extend(c)
        out.reverse()
        return out

    def nodes(self) -> list[int]:
        return self.preorder()

    def internal_nodes(self) -> list[int]:
        return [u for u in self.preorder() if self.children[u] is not None]

    def in_subtree(self, u: int, top: int) -> bool:
        """True if ``u`` lies in the subtree rooted at ``top``."""
        par = self.parent
        while u != -1:
            if u == top:
                return True
            u = par[u]
        return False

    def leaves_under(self, u: int) -> list:
        return [self.actor[w] for w in self.preorder(u) if self.children[w] is None]

    def ancestors(self, u: int) -> list[int]:
        out = []
        u = self.parent[u]
        while u != -1:
            out.append(u)
            u = self.parent[u]
        return out

    def n_series(self) -> int:
        return sum(1 for u in self.preorder() if self.kind[u] == "S")

    # conversions
    def to_nested(self, u: int | None = None):
        """Nested JSON form: an actor id for a leaf, else {"S": [...]} / {"P": [...]}.

        S children are listed upper first.
        """
        u = self.root if u is None else u
        built = {}
        for w in self.postorder(u):
            if self.children[w] is None:
                built[w] = self.actor[w]
            else:
                built[w] = {self.kind[w]: [built.pop(c) for c in self.children[w]]}
        return built[u]

    def key(self):
        """Canonical nested-tuple key of the VSP this tree represents."""
        if self._key is None:
            self._key = canonical_key(self)
        return self._key

    def to_vsp(self, labels: Sequence[Hashable] | None = None) -> PartialOrder:
        return tree_to_vsp(self, labels)

    def depth(self) -> int:
        return tree_depth(self)

    def __repr__(self):
        return f"{type(self).__name__}({_format_key(self.key())})"

    @classmethod
    def _from_parsed(cls, spec):
        t = cls()
        # iterative build: stack of (spec, parent id)
        stack = [(spec, -1)]
        while stack:
            s, par = stack.pop()
            kind, kids = _parse_node(s)
            if kind is None:
                if kids in t.leaf_of:
                    raise InvalidTree(f"actor {kids!r} appears twice")
                u = t._new(actor=kids)
            else:
                u = t._new(kind=kind)
            t.parent[u] = par
            if par == -1:
                t.root = u
            else:
                t.children[par].append(u)
            if kind is not None:
                # push in reverse so children are appended in order
                for c in reversed(kids):
                    stack.append((c, u))
        # children were appended in traversal order, which is left to right
        return t


def _parse_node(s):
    """Return (kind, children) or (None, actor) for one nested-spec node."""
    if isinstance(s, dict):
        if len(s) != 1:
            raise InvalidTree(f"tree node must have exactly one key, got {sorted(s)}")
        (kind, kids), = s.items()
    elif isinstance(s, (tuple, list)):
        if not s:
            raise InvalidTree("empty tree node")
        kind, kids = s[0], list(s[1:])
    else:
        if isinstance(s, (bool, float)):
            raise InvalidTree(f"invalid actor id {s!r}")
        return None, s
    if kind not in ("S", "P"):
        raise InvalidTree(f"unknown node type {kind!r}")
    kids = list(kids)
    if len(kids) < 2:
        raise InvalidTree(f"{kind} node needs at least two children")
    return kind, kids


class Bdt(_Tree):
    """Binary decomposition tree."""

    __slots__ = ()

    @classmethod
    def single(cls, actor) -> "Bdt":
        t = cls()
        t.root = t._new(actor=actor)
        return t

    @classmethod
    def from_nested(cls, spec) -> "Bdt":
        """Build from nested form, e.g. ``("S", 1, ("P", 2, 3))`` or ``{"S": [1, {"P": [2, 3]}]}``."""
        t = cls._from_parsed(spec)
        t.validate()
        return t

    def validate(self):
        seen = 0
        for u in self.preorder():
            seen += 1
            c = self.children[u]
            if c is None:
                if self.leaf_of.get(self.actor[u]) != u:
                    raise InvalidTree("leaf map inconsistent")
                continue
            if len(c) != 2:
                raise InvalidTree("BDT internal nodes need exactly two children")
            if self.kind[u] not in ("S", "P"):
                raise InvalidTree("internal node without a type")
            for w in c:
                if self.parent[w] != u:
                    raise InvalidTree("parent pointer inconsistent")
        if seen != 2 * self.n - 1:
            raise InvalidTree("node count does not match leaf count")

    def signature(self):
        """Hashable structural identity (P children unordered, S stacking kept)."""
        built = {}
        mins = {}
        for w in self.postorder():
            c = self.children[w]
            if c is None:
                built[w] = self.actor[w]
                mins[w] = self.actor[w]
                continue
            a, b = c
            if self.kind[w] == "P" and mins[b] < mins[a]:
                a, b = b, a
            built[w] = (self.kind[w], built.pop(a), built.pop(b))
            mins[w] = min(mins.pop(a), mins.pop(b))
        return built[self.root]

    def __eq__(self, other):
        if not isinstance(other, Bdt):
            return NotImplemented
        return self.signature() == other.signature()

    def __hash__(self):
        return hash(self.signature())

    # in-place edits, used by the sampler and the public pure wrappers
    def _insert(self, e: int, actor, draw: str) -> int:
        if actor in self.leaf_of:
            raise ActorPresent(f"actor {actor!r} already in tree")
        if draw not in TYPE_DRAWS:
            raise ValueError(f"unknown type draw {draw!r}")
        if e < 0 or e >= len(self.parent) or (self.kind[e] is None and self.actor[e] is None):
            raise EdgeNotFound(f"no edge above node {e}")
        g = self.parent[e]
        leaf = self._new(actor=actor)
        j = self._new(kind="P" if draw == PAR else "S")
        self.children[j] = [leaf, e] if draw == S_UP else [e, leaf]
        self.parent[leaf] = j
        self.parent[e] = j
        self.parent[j] = g
        if g == -1:
            self.root = j
        else:
            sib = self.children[g]
            sib[sib.index(e)] = j
        self._key = None
        return j

    def _delete(self, actor):
        if actor not in self.leaf_of:
            raise UnknownActor(f"actor {actor!r} not in tree")
        if self.n == 1:
            raise LastActor("cannot delete the only actor")
        leaf = self.leaf_of[actor]
        j = self.parent[leaf]
        a, b = self.children[j]
        s = b if a == leaf else a
        g = self.parent[j]
        self.parent[s] = g
        if g == -1:
            self.root = s
        else:
            sib = self.children[g]
            sib[sib.index(j)] = s
        self._release(leaf)
        self._release(j)
        self._key = None


class Mdt(_Tree):
    """Multi decomposition tree: alternating types, at least two children per internal node."""

    __slots__ = ()

    @classmethod
    def from_nested(cls, spec) -> "Mdt":
        t = cls._from_parsed(spec)
        t.validate()
        return t

    @classmethod
    def from_key(cls, key) -> "Mdt":
        return cls._from_parsed(key)

    def validate(self):
        for u in self.preorder():
            c = self.children[u]
            if c is None:
                continue
            if len(c) < 2:
                raise InvalidTree("MDT internal nodes need at least two children")
            for w in c:
                if self.parent[w] != u:
                    raise InvalidTree("parent pointer inconsistent")
                if self.kind[w] == self.kind[u]:
                    raise InvalidTree("adjacent internal nodes share a type")

    def is_valid(self) -> bool:
        try:
            self.validate()
        except InvalidTree:
            return False
        return True

    def __eq__(self, other):
        if not isinstance(other, Mdt):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


def canonical_key(tree: _Tree, keep=None):
    """Canonical MDT key of the VSP represented by ``tree``, optionally restricted.

    Leaves map to their actor; an internal node maps to ``(kind, child, child, ...)``.
    Same-type neighbours are merged, P children are sorted by smallest actor and
    S children keep stacking order. Returns None if ``keep`` removes every actor.
    """
    # item: [kind or None, parts list, min actor, cached key]
    res: dict = {}
    ch = tree.children
    kind = tree.kind
    for u in tree.postorder():
        c = ch[u]
        if c is None:
            a = tree.actor[u]
            res[u] = None if (keep is not None and a not in keep) else (None, None, a, a)
            continue
        k = kind[u]
        parts = []
        for w in c:
            it = res.pop(w)
            if it is None:
                continue
            if it[0] == k:
                parts.extend(it[1])
            else:
                parts.append(it)
        if not parts:
            res[u] = None
        elif len(parts) == 1:
            res[u] = parts[0]
        else:
            res[u] = (k, parts, min(p[2] for p in parts), None)
    top = res[tree.root]
    if top is None:
        return None
    return _materialize(top)


def _materialize(item):
    # iterative conversion of nested items to key tuples
    if item[0] is None:
        return item[3]
    out_stack = []
    stack = [(item, False)]
    while stack:
        it, done = stack.pop()
        if it[0] is None:
            out_stack.append(it[3])
            continue
        parts = it[1]
        if it[0] == "P":
            parts = sorted(parts, key=lambda p: p[2])
        if not done:
            stack.append(((it[0], parts, it[2], None), True))
            for p in reversed(parts):
                stack.append((p, False))
        else:
            k = len(parts)
            kids = out_stack[-k:]
            del out_stack[-k:]
            out_stack.append((it[0], *kids))
    return out_stack[0]


def _format_key(key) -> str:
    if not isinstance(key, tuple):
        return repr(key)
    out = []
    stack = [key]
    while stack:
        x = stack.pop()
        if isinstance(x, str) and x in (",", ")"):
            out.append(x)
        elif isinstance(x, tuple):
            out.append(f"{x[0]}(")
            stack.append(")")
            kids = list(x[1:])
            for i, c in enumerate(reversed(kids)):
                stack.append(c)
                if i < len(kids) - 1:
                    stack.append(",")
        else:
            out.append(repr(x))
    return "".join(out)


def tree_to_vsp(tree: _Tree, labels: Sequence[Hashable] | None = None) -> PartialOrder:
    """Partial order of a BDT or MDT: i above j iff their common ancestor is S with i stacked higher."""
    labels = tuple(sorted(tree.leaf_of)) if labels is None else tuple(labels)
    if set(labels) != set(tree.leaf_of):
        raise UnknownActor("labels do not match the tree's actors")
    index = {a: i for i, a in enumerate(labels)}
    n = len(labels)
    rel = np.zeros((n, n), dtype=bool)
    under: dict = {}
    for u in tree.postorder():
        c = tree.children[u]
        if c is None:
            under[u] = [index[tree.actor[u]]]
            continue
        groups = [under.pop(w) for w in c]
        if tree.kind[u] == "S":
            below: list[int] = []
            for g in reversed(groups):
                if below:
                    rel[np.ix_(g, below)] = True
                below.extend(g)
        under[u] = [i for g in groups for i in g]
    return PartialOrder(labels, rel, check=False)


def bdt_to_vsp(t: Bdt) -> PartialOrder:
    return tree_to_vsp(t)


def mdt_to_vsp(m: Mdt) -> PartialOrder:
    return tree_to_vsp(m)


def bdt_collapse_to_mdt(t: _Tree) -> Mdt:
    """Merge adjacent same-type internal nodes, giving the unique MDT of v(t)."""
    return Mdt.from_key(t.key())


def restrict_tree(tree: _Tree, actors: Iterable) -> Mdt:
    """MDT of the VSP restricted to ``actors``."""
    keep = set(actors)
    missing = keep.difference(tree.leaf_of)
    if missing:
        raise UnknownActor(f"unknown actors {sorted(missing)}")
    if not keep:
        raise ValueError("cannot restrict to an empty actor set")
    return Mdt.from_key(canonical_key(tree, keep))


def dual_tree(tree: _Tree):
    """Tree of the dual order (every S stacking reversed)."""
    t = tree.copy()
    for u in t.preorder():
        if t.kind[u] == "S":
            t.children[u].reverse()
    t._key = None
    return t


def vsp_to_mdt(po: PartialOrder) -> Mdt:
    """Decompose a VSP into its MDT; raises NotVsp otherwise."""
    rel = po.relation
    comparable = rel | rel.T
    n = po.n
    if n == 0:
        raise ValueError("empty order")
    # build nested spec iteratively; each stack entry is (index array, slot list, slot index)
    root_slot: list = [None]
    stack = [(np.arange(n), root_slot, 0)]
    while stack:
        idx, slot, pos = stack.pop()
        if idx.size == 1:
            slot[pos] = po.labels[idx[0]]
            continue
        sub = comparable[np.ix_(idx, idx)]
        ncomp, lab = connected_components(sub, directed=False)
        if ncomp > 1:
            kids = [idx[lab == c] for c in range(ncomp)]
            node = ["P"] + [None] * ncomp
        else:
            inc = ~sub
            np.fill_diagonal(inc, False)
            ncomp, lab = connected_components(inc, directed=False)
            if ncomp == 1:
                raise NotVsp("order contains an induced N and is not series-parallel")
            kids = [idx[lab == c] for c in range(ncomp)]
            # order components top to bottom by how many other components they sit above
            r = rel[np.ix_(idx, idx)]
            rank = [sum(bool(r[lab == c][:, lab == d].all()) for d in range(ncomp) if d != c) for c in range(ncomp)]
            kids = [k for _, k in sorted(zip(rank, kids), key=lambda z: -z[0])]
            node = ["S"] + [None] * ncomp
        slot[pos] = node
        for i, k in enumerate(kids):
            stack.append((k, node, i + 1))
    return Mdt.from_key(canonical_key(Mdt._from_parsed(root_slot[0])))


# leaf insertion and deletion


def leaf_insert(t: Bdt, e: int, actor, type_draw: str) -> Bdt:
    """Insert ``actor`` on the edge above node ``e`` (``e == t.root`` is the edge above the root)."""
    out = t.copy()
    out._insert(e, actor, type_draw)
    return out


def leaf_delete(t: Bdt, actor) -> Bdt:
    out = t.copy()
    out._delete(actor)
    return out


def sample_bdt_prior(n: int, q: float, rng: np.random.Generator, actors: Sequence | None = None) -> Bdt:
    """Draw a BDT by sequential leaf insertion: uniform edge, type P w.p. 1-q, each S stacking w.p. q/2."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    actors = list(range(1, n + 1)) if actors is None else list(actors)
    if len(actors) != n:
        raise ValueError("actors length must equal n")
    # pool arrays built directly; ids stay contiguous because nothing is freed
    size = 2 * n - 1
    parent = [-1] * size
    children: list = [None] * size
    kind: list = [None] * size
    actor: list = [None] * size
    actor[0] = actors[0]
    root = 0
    u = rng.random((max(n - 1, 0), 2))
    nxt = 1
    for k in range(1, n):
        e = int(u[k - 1, 0] * (2 * k - 1))
        leaf, j = nxt, nxt + 1
        nxt += 2
        actor[leaf] = actors[k]
        r = u[k - 1, 1]
        if r < 1.0 - q:
            kind[j] = "P"
            children[j] = [e, leaf]
        elif r < 1.0 - q / 2:
            kind[j] = "S"
            children[j] = [leaf, e]
        else:
            kind[j] = "S"
            children[j] = [e, leaf]
        g = parent[e]
        parent[j] = g
        parent[e] = j
        parent[leaf] = j
        if g == -1:
            root = j
        else:
            c = children[g]
            c[0 if c[0] == e else 1] = j
    t = Bdt()
    t.parent, t.children, t.kind, t.actor, t.root = parent, children, kind, actor, root
    t.leaf_of = {a: i for i, a in enumerate(actor) if a is not None}
    return t


def tree_depth(tree: _Tree) -> int:
    """Longest chain length: leaves count 1, P takes the max, S adds its children."""
    d: dict = {}
    for u in tree.postorder():
        c = tree.children[u]
        if c is None:
            d[u] = 1
        elif tree.kind[u] == "S":
            d[u] = sum(d.pop(w) for w in c)
        else:
            d[u] = max(d.pop(w) for w in c)
    return d[tree.root]


@dataclass(frozen=True)
class ClusterSummary:
    s_cluster_sizes: tuple
    p_cluster_sizes: tuple


def sp_clusters(tree: _Tree) -> ClusterSummary:
    """Sizes of maximal connected same-type groups of internal nodes."""
    top: dict = {}
    size: dict = {}
    for u in tree.preorder():
        if tree.children[u] is None:
            continue
        g = tree.parent[u]
        head = top[g] if g != -1 and tree.kind[g] == tree.kind[u] else u
        top[u] = head
        size[head] = size.get(head, 0) + 1
    s = sorted(v for h, v in size.items() if tree.kind[h] == "S")
    p = sorted(v for h, v in size.items() if tree.kind[h] == "P")
    return ClusterSummary(tuple(s), tuple(p))


def enumerate_bdts(actors: Sequence) -> list[Bdt]:
    """Every typed BDT on ``actors`` ((2n-3)!! topologies times 3^(n-1) typings)."""
    actors = list(actors)
    if not actors:
        return []
    level = [Bdt.single(actors[0])]
    for a in actors[1:]:
        nxt = []
        for t in level:
            for e in t.preorder():
                for draw in TYPE_DRAWS:
                    nxt.append(leaf_insert(t, e, a, draw))
        level = nxt
    return level
