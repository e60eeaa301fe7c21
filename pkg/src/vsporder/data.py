"""Rank-list datasets and their JSON file format."""
from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DuplicateInList, ParseError, UnknownActorId

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Actor:
    id: int
    name: str = ""
    group: str = ""


@dataclass(frozen=True)
class RankList:
    """One observed list, top to bottom. Its membership is the set of its entries."""

    ordering: tuple

    def __post_init__(self):
        object.__setattr__(self, "ordering", tuple(self.ordering))
        if not self.ordering:
            raise ValueError("a list needs at least one actor")
        if len(set(self.ordering)) != len(self.ordering):
            raise DuplicateInList(f"list {list(self.ordering)} repeats an actor")

    @property
    def membership(self) -> frozenset:
        return frozenset(self.ordering)

    def __len__(self):
        return len(self.ordering)


@dataclass(frozen=True)
class RankDataset:
    actors: tuple
    lists: tuple

    def __post_init__(self):
        actors = tuple(a if isinstance(a, Actor) else Actor(int(a), str(a), "") for a in self.actors)
        lists = tuple(x if isinstance(x, RankList) else RankList(tuple(x)) for x in self.lists)
        object.__setattr__(self, "actors", actors)
        object.__setattr__(self, "lists", lists)
        ids = [a.id for a in actors]
        if len(set(ids)) != len(ids):
            raise ParseError("actor ids are not unique")
        known = set(ids)
        for j, lst in enumerate(lists):
            for a in lst.ordering:
                if a not in known:
                    raise UnknownActorId(f"lists[{j}] references undeclared actor id {a!r}")

    @classmethod
    def from_lists(cls, lists: Iterable[Sequence], actors: Iterable | None = None) -> "RankDataset":
        lists = [tuple(x) for x in lists]
        if actors is None:
            actors = sorted({a for x in lists for a in x})
        return cls(tuple(actors), tuple(lists))

    @property
    def actor_ids(self) -> list:
        return [a.id for a in self.actors]

    @property
    def groups(self) -> dict:
        return {a.id: a.group for a in self.actors}

    @property
    def orderings(self) -> list[tuple]:
        return [x.ordering for x in self.lists]

    def __len__(self):
        return len(self.lists)


def dataset_to_dict(ds: RankDataset) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "actors": [{"id": a.id, "name": a.name, "group": a.group} for a in ds.actors],
        "lists": [list(x.ordering) for x in ds.lists],
    }


def dataset_from_dict(doc) -> RankDataset:
    if not isinstance(doc, dict):
        raise ParseError("dataset must be a JSON object")
    unknown = set(doc) - {"format_version", "actors", "lists"}
    if unknown:
        raise ParseError(f"unknown top-level field(s) {sorted(unknown)}")
    version = doc.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ParseError(f"field format_version: unsupported version {version!r}")
    if not isinstance(doc.get("actors"), list):
        raise ParseError("field actors: expected a list")
    if not isinstance(doc.get("lists"), list):
        raise ParseError("field lists: expected a list")
    actors = []
    for i, a in enumerate(doc["actors"]):
        if not isinstance(a, dict):
            raise ParseError(f"field actors[{i}]: expected an object")
        extra = set(a) - {"id", "name", "group"}
        if extra:
            raise ParseError(f"field actors[{i}]: unknown key(s) {sorted(extra)}")
        aid = a.get("id")
        if not isinstance(aid, int) or isinstance(aid, bool):
            raise ParseError(f"field actors[{i}].id: expected an integer")
        name = a.get("name", str(aid))
        group = a.get("group", "")
        if not isinstance(name, str):
            raise ParseError(f"field actors[{i}].name: expected a string")
        if not isinstance(group, str):
            raise ParseError(f"field actors[{i}].group: expected a string")
        actors.append(Actor(aid, name, group))
    lists = []
    for j, x in enumerate(doc["lists"]):
        if not isinstance(x, list) or not x:
            raise ParseError(f"field lists[{j}]: expected a non-empty list")
        for k, a in enumerate(x):
            if not isinstance(a, int) or isinstance(a, bool):
                raise ParseError(f"field lists[{j}][{k}]: expected an integer id")
        dup = [a for a, c in Counter(x).items() if c > 1]
        if dup:
            raise DuplicateInList(f"field lists[{j}]: actor(s) {dup} repeated")
        lists.append(RankList(tuple(x)))
    return RankDataset(tuple(actors), tuple(lists))


def dataset_hash(ds: RankDataset) -> str:
    """Git blob hash of the dataset's canonical JSON encoding."""
    body = json.dumps(dataset_to_dict(ds), sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha1(b"blob %d\0" % len(body) + body).hexdigest()


def parse_dataset(path) -> RankDataset:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return dataset_from_dict(doc)


def write_dataset(ds: RankDataset, path) -> None:
    Path(path).write_text(json.dumps(dataset_to_dict(ds), indent=1) + "\n")


def filter_lpa(ds: RankDataset, k: int) -> RankDataset:
    """Keep actors appearing in at least ``k`` lists; drop lists left empty."""
    if k < 1:
        raise ValueError("k must be at least 1")
    counts = Counter(a for x in ds.lists for a in x.ordering)
    keep = {a.id for a in ds.actors if counts[a.id] >= k}
    actors = tuple(a for a in ds.actors if a.id in keep)
    lists = []
    for x in ds.lists:
        y = tuple(a for a in x.ordering if a in keep)
        if y:
            lists.append(RankList(y))
    return RankDataset(actors, tuple(lists))


def dataset_stats(ds: RankDataset) -> dict:
    """Actor count, list count and longest list, as reported in data summaries."""
    return {
        "n": len(ds.actors),
        "N": len(ds.lists),
        "max_length": max((len(x) for x in ds.lists), default=0),
    }
