"""Service registry contents and the pure parts of the engine: matching and
role-protocol evaluation."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence


class RegistryError(ValueError):
    pass


@dataclass(frozen=True)
class RoleDescriptor:
    role_id: str
    capabilities: frozenset[str] = frozenset()
    attributes: Mapping[str, str] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if not isinstance(self.role_id, str) or not self.role_id:
            raise RegistryError("role_id must be a non-empty string")
        object.__setattr__(self, "capabilities", frozenset(self.capabilities))

    def admits(self, offered: "RoleDescriptor") -> bool:
        """Offered role fills this required role: same id, superset of tags."""
        return offered.role_id == self.role_id and self.capabilities <= offered.capabilities


def role(role_id: str, *capabilities: str, **attributes: str) -> RoleDescriptor:
    return RoleDescriptor(role_id, frozenset(capabilities), attributes)


@dataclass(frozen=True)
class EngagementPolicy:
    capacity: int = 1
    available: bool = True

    def __post_init__(self):
        if not isinstance(self.capacity, int) or self.capacity < 1:
            raise RegistryError(f"capacity must be a positive integer, got {self.capacity!r}")


@dataclass(frozen=True)
class Advertisement:
    actor: str
    offered: RoleDescriptor
    policy: EngagementPolicy = EngagementPolicy()
    soc: str = ""  # home SoC of the actor, filled in at publish time
    published_at: int = 0

    @property
    def key(self) -> tuple[str, str]:
        return self.actor, self.offered.role_id


@dataclass(frozen=True)
class Event:
    kind: str
    actor: str
    attributes: Mapping[str, str] = field(default_factory=dict, compare=False, hash=False)
    id: str | None = None


class RequestState(str, enum.Enum):
    CREATED = "created"
    ENABLED = "enabled"
    ACTIVE = "active"
    COMPLETED = "completed"
    UNFULFILLED = "unfulfilled"


@dataclass(eq=False)
class ServiceRequest:
    """Guarded action ``a: r_1, ..., r_n``; roles are identified by position."""

    id: str
    roles: tuple[RoleDescriptor, ...]
    origin_actor: str
    origin_soc: str
    duration: int = 1
    state: RequestState = RequestState.CREATED
    bindings: dict[int, str] = field(default_factory=dict)
    current_soc: str | None = None  # SoC whose engine currently holds the request
    exceptions: int = 0
    apex: str | None = None
    enabled_at: int | None = None
    activated_at: int | None = None

    def __post_init__(self):
        self.roles = tuple(self.roles)
        if not isinstance(self.duration, int) or self.duration < 1:
            raise RegistryError(f"request {self.id!r}: duration must be a positive integer")

    @property
    def unbound(self) -> tuple[int, ...]:
        return tuple(i for i in range(len(self.roles)) if i not in self.bindings)

    @property
    def is_active(self) -> bool:
        return len(self.bindings) == len(self.roles)


@dataclass(frozen=True)
class RequestTemplate:
    name: str
    roles: tuple[RoleDescriptor, ...]
    duration: int = 1

    def instantiate(self, event_id: str, origin_actor: str, origin_soc: str) -> ServiceRequest:
        return ServiceRequest(
            id=f"{self.name}@{event_id}",
            roles=tuple(self.roles),
            origin_actor=origin_actor,
            origin_soc=origin_soc,
            duration=self.duration,
        )


@dataclass(frozen=True)
class RoleProtocol:
    name: str
    guard: Callable[[Event], bool]
    actions: tuple[RequestTemplate, ...]


def on_event(kind: str) -> Callable[[Event], bool]:
    def guard(event: Event) -> bool:
        return event.kind == kind

    guard.__name__ = f"on_{kind}"
    return guard


@dataclass(frozen=True)
class Notification:
    target: str
    request_id: str
    role_id: str
    issued_at: int
    soc: str = ""


@dataclass
class Registry:
    soc: str
    advertisements: dict[tuple[str, str], Advertisement] = field(default_factory=dict)
    pending: dict[str, ServiceRequest] = field(default_factory=dict)
    protocols: list[RoleProtocol] = field(default_factory=list)
    outstanding: dict[tuple[str, str, str], int] = field(default_factory=dict)  # -> notify seq
    fired: set[tuple[str, str]] = field(default_factory=set)

    def put(self, ad: Advertisement) -> Advertisement | None:
        """Insert or replace; returns the advertisement it displaced."""
        old = self.advertisements.get(ad.key)
        self.advertisements[ad.key] = ad
        return old

    def lookup(self, actor: str, role_id: str) -> Advertisement | None:
        return self.advertisements.get((actor, role_id))


InUse = Callable[[str, str], int]


def admits_binding(ad: Advertisement, in_use: InUse | None) -> bool:
    if not ad.policy.available:
        return False
    used = in_use(ad.actor, ad.offered.role_id) if in_use else 0
    return used < ad.policy.capacity


def match_ads(
    ads: Iterable[Advertisement],
    request: ServiceRequest,
    positions: Sequence[int] | None = None,
    in_use: InUse | None = None,
    distance: Callable[[str], int] | None = None,
) -> dict[int, list[str]]:
    """Candidate actors per role position.

    Candidates offer the same role id with a superset of the required
    capabilities and have spare capacity. Ordering is nearest home SoC first,
    then earliest publication, then actor id.
    """
    if positions is None:
        positions = range(len(request.roles))
    pool = [ad for ad in ads if admits_binding(ad, in_use)]
    if distance is None:
        pool.sort(key=lambda ad: (ad.published_at, ad.actor))
    else:
        pool.sort(key=lambda ad: (distance(ad.soc), ad.published_at, ad.actor))
    out: dict[int, list[str]] = {}
    for pos in positions:
        want = request.roles[pos]
        out[pos] = [ad.actor for ad in pool if want.admits(ad.offered)]
    return out


def match(
    registry: Registry,
    request: ServiceRequest,
    positions: Sequence[int] | None = None,
    in_use: InUse | None = None,
    distance: Callable[[str], int] | None = None,
) -> dict[int, list[str]]:
    return match_ads(registry.advertisements.values(), request, positions, in_use, distance)


def evaluate_protocols(registry: Registry, event: Event, event_id: str | None = None) -> list[ServiceRequest]:
    """Instantiate the actions of every protocol whose guard holds on ``event``.

    Protocols fire in registration order. Does not record the firing; the
    engine does that so a replayed event stays idempotent.
    """
    eid = event_id or event.id or ""
    out = []
    for proto in registry.protocols:
        if (proto.name, eid) in registry.fired:
            continue
        if proto.guard(event):
            for tmpl in proto.actions:
                out.append(tmpl.instantiate(eid, event.actor, registry.soc))
    return out


def assign(
    candidates: Mapping[int, Sequence[str]],
    roles: Sequence[RoleDescriptor],
    free: Mapping[tuple[str, str], int],
) -> dict[int, str]:
    """Capacity-respecting assignment of positions to candidates.

    Positions are taken in ascending order and kept whenever an augmenting
    path exists, so the bound set is the largest one achievable and, among
    those, the lexicographically smallest. Earlier candidates are preferred.
    ``free`` gives the spare capacity of each (actor, role_id) slot.
    """
    holders: dict[tuple[str, str], list[int]] = {}
    result: dict[int, str] = {}

    def augment(pos: int, seen: set[tuple[str, str]]) -> bool:
        rid = roles[pos].role_id
        for actor in candidates.get(pos, ()):
            slot = (actor, rid)
            if slot in seen:
                continue
            seen.add(slot)
            taken = holders.setdefault(slot, [])
            if len(taken) < free.get(slot, 0):
                taken.append(pos)
                result[pos] = actor
                return True
            for other in list(taken):
                if augment(other, seen):
                    # `other` moved to a different slot; take its place here
                    taken.remove(other)
                    taken.append(pos)
                    result[pos] = actor
                    return True
        return False

    for pos in sorted(candidates):
        augment(pos, set())
    return result
