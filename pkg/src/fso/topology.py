"""Nested compositional hierarchy of service-oriented communities.

A hierarchy is described declaratively::

    {"socs": [{"id": "house1", "level": 2, "engine": "sce.house1",
               "members": ["room1", "alice"]}, ...]}

A member id that names another SoC makes that SoC a child; any other id is a
level-0 actor. Containers always sit at a strictly higher level than their
members, and each non-root engine is also wired into its parent's member set.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping


class FsoError(ValueError):
    """Invalid hierarchy description.

    ``code`` is one of ``engine``, ``duplicate``, ``cycle``, ``level``,
    ``parents``, ``roots``, ``malformed`` or ``unknown``; ``soc`` names the
    offending SoC when there is one.
    """

    def __init__(self, code: str, message: str, soc: str | None = None):
        super().__init__(message)
        self.code = code
        self.soc = soc


@dataclass(frozen=True)
class Soc:
    id: str
    level: int
    engine: str
    actors: frozenset[str]  # direct level-0 members, engines excluded
    children: tuple[str, ...]  # child SoC ids, declaration order
    members: frozenset[str] = field(default_factory=frozenset)

    def __contains__(self, member: str) -> bool:
        return member in self.members or member == self.engine


@dataclass(frozen=True)
class Fso:
    socs: Mapping[str, Soc]
    root: str
    root_level: int
    parents: Mapping[str, str | None]
    home: Mapping[str, str]  # actor id -> SoC holding it as a direct member
    depths: Mapping[str, int]

    def __contains__(self, soc_id: str) -> bool:
        return soc_id in self.socs

    def soc(self, soc_id: str) -> Soc:
        try:
            return self.socs[soc_id]
        except KeyError:
            raise FsoError("unknown", f"unknown SoC {soc_id!r}", soc_id) from None

    @property
    def engines(self) -> dict[str, str]:
        return {s.engine: s.id for s in self.socs.values()}

    def depth(self, soc_id: str) -> int:
        self.soc(soc_id)
        return self.depths[soc_id]

    def subtree(self, soc_id: str) -> list[str]:
        """SoC ids under ``soc_id`` (inclusive) in preorder."""
        out: list[str] = []
        stack = [soc_id]
        while stack:
            s = stack.pop()
            out.append(s)
            stack.extend(reversed(self.socs[s].children))
        return out

    def is_ancestor(self, a: str, b: str) -> bool:
        """True when ``a`` is ``b`` or lies above it."""
        while b is not None:
            if a == b:
                return True
            b = self.parents[b]
        return False

    def distance(self, a: str, b: str) -> int:
        """Number of tree edges between two SoCs."""
        da, db = self.depths[a], self.depths[b]
        hops = 0
        while da > db:
            a, da, hops = self.parents[a], da - 1, hops + 1
        while db > da:
            b, db, hops = self.parents[b], db - 1, hops + 1
        while a != b:
            a, b, hops = self.parents[a], self.parents[b], hops + 2
        return hops

    def to_spec(self) -> dict[str, Any]:
        return {
            "socs": [
                {
                    "id": s.id,
                    "level": s.level,
                    "engine": s.engine,
                    "members": list(s.children) + sorted(s.actors),
                }
                for s in (self.socs[i] for i in self.subtree(self.root))
            ]
        }


def _check_entry(entry: Any) -> tuple[str, int, str | None, list[str]]:
    if not isinstance(entry, Mapping) or "id" not in entry:
        raise FsoError("malformed", f"SoC entry without id: {entry!r}")
    sid = entry["id"]
    if not isinstance(sid, str) or not sid:
        raise FsoError("malformed", f"SoC id must be a non-empty string: {sid!r}")
    level = entry.get("level")
    if not isinstance(level, int) or isinstance(level, bool) or level < 1:
        raise FsoError("level", f"SoC {sid!r}: level must be an integer >= 1", sid)
    engine = entry.get("engine")
    if engine is not None and (not isinstance(engine, str) or not engine):
        raise FsoError("engine", f"SoC {sid!r}: engine must be a non-empty string", sid)
    members = entry.get("members", [])
    if not isinstance(members, list) or not all(isinstance(m, str) and m for m in members):
        raise FsoError("malformed", f"SoC {sid!r}: members must be a list of ids", sid)
    return sid, level, engine, members


def build_fso(spec: Mapping[str, Any]) -> Fso:
    """Validate a hierarchy description and return the built tree."""
    if not isinstance(spec, Mapping) or not isinstance(spec.get("socs"), list):
        raise FsoError("malformed", "hierarchy spec needs a 'socs' list")
    entries = [_check_entry(e) for e in spec["socs"]]
    if not entries:
        raise FsoError("roots", "hierarchy spec declares no SoC")

    levels: dict[str, int] = {}
    engines: dict[str, str] = {}
    for sid, level, engine, _ in entries:
        if sid in levels:
            raise FsoError("duplicate", f"SoC {sid!r} declared twice", sid)
        if engine is None:
            raise FsoError("engine", f"SoC {sid!r} has no engine", sid)
        levels[sid] = level
        engines[sid] = engine
    engine_owner = {}
    for sid, engine in engines.items():
        if engine in engine_owner or engine in levels:
            raise FsoError("duplicate", f"engine id {engine!r} reused by SoC {sid!r}", sid)
        engine_owner[engine] = sid

    children: dict[str, list[str]] = {sid: [] for sid in levels}
    actors: dict[str, set[str]] = {sid: set() for sid in levels}
    parents: dict[str, str] = {}
    home: dict[str, str] = {}
    for sid, _, _, members in entries:
        for m in members:
            if m in levels:
                if m in parents and parents[m] != sid:
                    raise FsoError("parents", f"SoC {m!r} listed under {parents[m]!r} and {sid!r}", m)
                if m not in children[sid]:
                    children[sid].append(m)
                parents[m] = sid
            elif m in engine_owner:
                # engine of this SoC, or of a child listed redundantly
                continue
            else:
                if m in home and home[m] != sid:
                    raise FsoError("duplicate", f"actor {m!r} is a member of {home[m]!r} and {sid!r}", sid)
                home[m] = sid
                actors[sid].add(m)

    # cycles first: a cycle also breaks the level rule but is the clearer report
    state: dict[str, int] = {}
    for start in levels:
        if state.get(start):
            continue
        stack = [(start, iter(children[start]))]
        state[start] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
            elif state.get(nxt) == 1:
                raise FsoError("cycle", f"cycle detected through SoC {nxt!r}", nxt)
            elif not state.get(nxt):
                state[nxt] = 1
                stack.append((nxt, iter(children[nxt])))

    for sid in levels:
        for c in children[sid]:
            if levels[c] >= levels[sid]:
                raise FsoError(
                    "level",
                    f"level rule violated: SoC {sid!r} (level {levels[sid]}) contains "
                    f"{c!r} (level {levels[c]})",
                    sid,
                )
    for sid, engine in engines.items():
        p = parents.get(sid)
        if p is not None:
            # the only legal cross listing of an engine is in its own parent
            for other, _, _, members in entries:
                if engine in members and other not in (sid, p):
                    raise FsoError("duplicate", f"engine {engine!r} listed in unrelated SoC {other!r}", other)

    roots = [sid for sid in levels if sid not in parents]
    if len(roots) != 1:
        raise FsoError("roots", f"expected exactly one root, found {sorted(roots)}", (sorted(roots) or [None])[0])
    root = roots[0]

    depths = {root: 0}
    order = [root]
    for s in order:
        for c in children[s]:
            depths[c] = depths[s] + 1
            order.append(c)

    socs = {}
    for sid, level, engine, _ in entries:
        kids = tuple(children[sid])
        member_set = set(actors[sid]) | set(kids) | {engines[c] for c in kids}
        socs[sid] = Soc(sid, level, engine, frozenset(actors[sid]), kids, frozenset(member_set))
    return Fso(
        socs=socs,
        root=root,
        root_level=max(levels.values()),
        parents={sid: parents.get(sid) for sid in levels},
        home=home,
        depths=depths,
    )


def load_fso(path: str | Path) -> Fso:
    with open(path, encoding="utf-8") as fh:
        return build_fso(json.load(fh))


def parent(fso: Fso, s: str) -> str | None:
    fso.soc(s)
    return fso.parents[s]


def level_set(fso: Fso, k: int) -> set[str]:
    return {sid for sid, soc in fso.socs.items() if soc.level == k}


def escalation_path(fso: Fso, s: str) -> list[str]:
    """``[s, parent(s), ..., root]``: the route an exception travels."""
    fso.soc(s)
    path = [s]
    while fso.parents[path[-1]] is not None:
        path.append(fso.parents[path[-1]])
    return path


def summarize(fso: Fso) -> str:
    levels = sorted({s.level for s in fso.socs.values()})
    return f"{len(levels)} levels, {len(fso.socs)} SoCs, {len(fso.home)} actors, root {fso.root!r} at level {fso.root_level}"


def iter_actors(fso: Fso, socs: Iterable[str] | None = None) -> list[str]:
    ids = fso.subtree(fso.root) if socs is None else socs
    return [a for s in ids for a in sorted(fso.socs[s].actors)]
