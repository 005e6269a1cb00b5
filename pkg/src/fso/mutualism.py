"""Mutualistic preconditions between behavior systems.

A behavior system evaluates each of its behaviors as beneficial (+1),
insignificant (0) or disadvantageous (-1). A social action is a bijection
carrying behaviors of one system onto behaviors of another. Two systems are
in a mutualistic precondition when some behavior that costs its producer
nothing benefits the receiver, and some receiver behavior that costs it
nothing maps back onto a benefit for the producer. Chains extend the same
test along a sequence of systems.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .topology import Fso


class MutualismError(ValueError):
    pass


@dataclass(frozen=True)
class BehaviorSystem:
    id: str
    evaluation: Mapping[str, int]

    def __post_init__(self):
        for b, v in self.evaluation.items():
            if v not in (-1, 0, 1) or isinstance(v, bool):
                raise MutualismError(f"system {self.id!r}: evaluation of {b!r} must be -1, 0 or 1, got {v!r}")

    @property
    def behaviors(self) -> tuple[str, ...]:
        return tuple(sorted(self.evaluation))

    def __call__(self, behavior: str) -> int:
        return self.evaluation[behavior]


@dataclass(frozen=True)
class SocialAction:
    domain: str
    range: str
    mapping: Mapping[str, str]
    _inverse: dict[str, str] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        inv: dict[str, str] = {}
        dupes = []
        for b, img in self.mapping.items():
            if img in inv:
                dupes.append((inv[img], b, img))
            inv[img] = b
        if dupes:
            shown = ", ".join(f"{a!r} and {b!r} -> {img!r}" for a, b, img in dupes)
            raise MutualismError(f"action {self.domain}->{self.range} is not injective: {shown}")
        object.__setattr__(self, "_inverse", inv)

    def __call__(self, behavior: str) -> str:
        return self.mapping[behavior]

    def inverse(self) -> "SocialAction":
        return SocialAction(self.range, self.domain, dict(self._inverse))

    def preimage(self, behavior: str) -> str:
        return self._inverse[behavior]

    def check(self, domain: BehaviorSystem, range_: BehaviorSystem) -> None:
        """Raise unless this action is a bijection from ``domain`` onto ``range_``."""
        if (self.domain, self.range) != (domain.id, range_.id):
            raise MutualismError(
                f"action {self.domain}->{self.range} does not connect {domain.id}->{range_.id}"
            )
        if set(self.mapping) != set(domain.evaluation):
            missing = sorted(set(domain.evaluation) - set(self.mapping))
            extra = sorted(set(self.mapping) - set(domain.evaluation))
            raise MutualismError(f"action {self.domain}->{self.range}: unmapped {missing}, unknown {extra}")
        if set(self._inverse) != set(range_.evaluation):
            missing = sorted(set(range_.evaluation) - set(self._inverse))
            extra = sorted(set(self._inverse) - set(range_.evaluation))
            raise MutualismError(f"action {self.domain}->{self.range}: not onto {missing}, unknown images {extra}")


@dataclass(frozen=True)
class MpWitness:
    forward_behavior: str
    backward_behavior: str
    domain: str
    range: str


@dataclass(frozen=True)
class ChainWitness:
    forward_behavior: str
    backward_behavior: str
    chain: tuple[str, ...]


def check_mp(d: BehaviorSystem, r: BehaviorSystem, sigma: SocialAction) -> MpWitness | None:
    sigma.check(d, r)
    forward = next((b for b in d.behaviors if d(b) >= 0 and r(sigma(b)) > 0), None)
    if forward is None:
        return None
    backward = next((c for c in r.behaviors if r(c) >= 0 and d(sigma.preimage(c)) > 0), None)
    if backward is None:
        return None
    return MpWitness(forward, backward, d.id, r.id)


def _check_chain(systems: Sequence[BehaviorSystem], links: Sequence[SocialAction]) -> None:
    if len(systems) < 2:
        raise MutualismError("a chain needs at least two systems")
    if len(links) != len(systems) - 1:
        raise MutualismError(f"{len(systems)} systems need {len(systems) - 1} links, got {len(links)}")
    for i, link in enumerate(links):
        link.check(systems[i], systems[i + 1])


def compose_sigma(links: Sequence[SocialAction], i: int) -> dict[str, str]:
    """The ``i``-fold composite of the chain's links, as a behavior map.

    ``i = 0`` is the identity on the first system; negative ``i`` is the
    inverse of the ``|i|``-fold composite (maps system ``|i|`` back to the
    first system).
    """
    t = len(links)
    if not -t <= i <= t:
        raise MutualismError(f"composite index {i} outside [-{t}, {t}]")
    for a, b in zip(links, links[1:]):
        if a.range != b.domain:
            raise MutualismError(f"links {a.domain}->{a.range} and {b.domain}->{b.range} do not compose")
    if not links:
        return {}
    current = {b: b for b in links[0].mapping}
    for link in links[: abs(i)]:
        current = {b: link(img) for b, img in current.items()}
    if i >= 0:
        return current
    return {img: b for b, img in current.items()}


def backward_composite(links: Sequence[SocialAction], k: int) -> dict[str, str]:
    """Walk ``k`` links back from the last system: maps it onto system ``t - k``."""
    t = len(links)
    if not 0 <= k <= t:
        raise MutualismError(f"backward step {k} outside [0, {t}]")
    current = {c: c for c in links[-1].inverse().mapping} if links else {}
    for link in reversed(links[t - k:]):
        current = {c: link.preimage(img) for c, img in current.items()}
    return current


def check_chain_mp(systems: Sequence[BehaviorSystem], links: Sequence[SocialAction]) -> ChainWitness | None:
    """Chain test over systems ``S_0 .. S_t`` joined by ``links[i]: S_i -> S_i+1``.

    Forward: some ``b`` in ``S_0`` is non-negative in every ``S_i`` it is
    carried to for ``i < t`` and positive in ``S_t``. Backward mirrors it
    from ``S_t``: non-negative in ``S_t .. S_1``, positive back in ``S_0``.
    With two systems both reduce to the pairwise check.
    """
    _check_chain(systems, links)
    t = len(links)
    first, last = systems[0], systems[-1]

    def forward_ok(b: str) -> bool:
        img = b
        for i in range(t):
            if systems[i](img) < 0:
                return False
            img = links[i](img)
        return last(img) > 0

    def backward_ok(c: str) -> bool:
        img = c
        for i in range(t):
            if systems[t - i](img) < 0:
                return False
            img = links[t - 1 - i].preimage(img)
        return first(img) > 0

    forward = next((b for b in first.behaviors if forward_ok(b)), None)
    if forward is None:
        return None
    backward = next((c for c in last.behaviors if backward_ok(c)), None)
    if backward is None:
        return None
    return ChainWitness(forward, backward, tuple(s.id for s in systems))


def verify_witness(systems: Sequence[BehaviorSystem], links: Sequence[SocialAction], w: ChainWitness | MpWitness) -> bool:
    """Re-evaluate the inequalities on a witness through the composites."""
    t = len(links)
    fwd = [compose_sigma(links, i)[w.forward_behavior] for i in range(t + 1)]
    if any(systems[i](fwd[i]) < 0 for i in range(t)) or systems[t](fwd[t]) <= 0:
        return False
    back = [backward_composite(links, k)[w.backward_behavior] for k in range(t + 1)]
    if any(systems[t - k](back[k]) < 0 for k in range(t)) or systems[0](back[t]) <= 0:
        return False
    return True


@dataclass(frozen=True)
class Notice:
    """One awareness message: ``relay`` notices hop between engines."""

    target: str
    soc: str
    relay: bool = False
    via: str | None = None


def translucence_set(fso: Fso, participants: Iterable[str], witness: MpWitness | ChainWitness | None = None) -> list[Notice]:
    """Awareness messages making every participant aware of a relationship.

    Participants are actor ids or SoC ids (a SoC is reached through its
    engine). When they live in different SoCs, the engine of their lowest
    common ancestor fans the notification out and every tree edge down to a
    participant's SoC carries one relay notice.
    """
    homes: dict[str, str] = {}
    for p in participants:
        if p in fso.home:
            homes[p] = fso.home[p]
        elif p in fso.socs:
            homes[fso.socs[p].engine] = p
        else:
            raise MutualismError(f"participant {p!r} is not in the organization")
    if not homes:
        return []
    socs = sorted(set(homes.values()))
    apex = socs[0]
    for s in socs[1:]:
        while not fso.is_ancestor(apex, s):
            apex = fso.parents[apex]
    relays: list[Notice] = []
    seen: set[str] = set()
    for s in socs:
        hop = s
        path = []
        while hop != apex and hop not in seen:
            seen.add(hop)
            path.append(hop)
            hop = fso.parents[hop]
        for child in reversed(path):
            up = fso.parents[child]
            relays.append(Notice(fso.socs[child].engine, child, relay=True, via=fso.socs[up].engine))
    direct = [Notice(actor, homes[actor]) for actor in sorted(homes)]
    return relays + direct


# -- behavior model files -------------------------------------------------


@dataclass
class BehaviorModel:
    systems: dict[str, BehaviorSystem]
    actions: list[SocialAction]

    def action(self, domain: str, range_: str) -> SocialAction:
        for a in self.actions:
            if (a.domain, a.range) == (domain, range_):
                return a
        for a in self.actions:
            if (a.domain, a.range) == (range_, domain):
                return a.inverse()
        raise MutualismError(f"no action between {domain!r} and {range_!r}")

    def chain(self) -> tuple[list[BehaviorSystem], list[SocialAction]]:
        order = list(self.systems.values())
        return order, [self.action(a.id, b.id) for a, b in zip(order, order[1:])]


def parse_model(doc: Mapping[str, Any]) -> BehaviorModel:
    try:
        systems = {}
        for s in doc["systems"]:
            ev = {str(b): int(v) for b, v in s["eval"].items()}
            for b in s.get("behaviors", ev):
                if b not in ev:
                    raise MutualismError(f"system {s['id']!r}: behavior {b!r} has no evaluation")
            systems[s["id"]] = BehaviorSystem(s["id"], ev)
        actions = [SocialAction(a["domain"], a["range"], dict(a["map"])) for a in doc.get("actions", [])]
    except (KeyError, TypeError, AttributeError) as exc:
        raise MutualismError(f"malformed behavior model: {exc!r}") from None
    for a in actions:
        if a.domain not in systems or a.range not in systems:
            raise MutualismError(f"action {a.domain}->{a.range} names an unknown system")
        a.check(systems[a.domain], systems[a.range])
    return BehaviorModel(systems, actions)


def load_model(path: str | Path) -> BehaviorModel:
    with open(path, encoding="utf-8") as fh:
        return parse_model(json.load(fh))
