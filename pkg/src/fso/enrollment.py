"""Request resolution across the hierarchy: local enrollment, exception
escalation, global enrollment and social overlay networks (SONs)."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Callable

from .engine import (
    AcceptPolicy,
    CapacityLedger,
    SocialComputingEngine,
    Trace,
    always_accept,
)
from .registry import (
    Advertisement,
    Event,
    RegistryError,
    RequestState,
    RoleDescriptor,
    ServiceRequest,
    assign,
    evaluate_protocols,
    match_ads,
)
from .topology import Fso, FsoError


class EnrollmentError(RuntimeError):
    pass


@dataclass(frozen=True)
class LocalOutcome:
    bindings: dict[int, str]
    missing: tuple[int, ...]  # role positions still unbound

    @property
    def complete(self) -> bool:
        return not self.missing


@dataclass(frozen=True)
class Escalation:
    """A failed local enrollment forwarded to the parent engine."""

    request_id: str
    missing_roles: tuple[RoleDescriptor, ...]
    positions: tuple[int, ...]
    raised_by: str
    raised_to: str
    seq: int


@dataclass
class Son:
    id: str
    request_id: str
    bindings: dict[int, str]
    member_socs: frozenset[str]
    apex: str
    created_at: int
    duration: int
    dissolved_at: int | None = None

    @property
    def due(self) -> int:
        return self.created_at + self.duration

    @property
    def is_global(self) -> bool:
        return len(self.member_socs) >= 2


@dataclass
class Counters:
    requests: int = 0
    local_enrollments: int = 0
    global_enrollments: int = 0
    exceptions: int = 0
    sons_formed: int = 0
    unfulfilled: int = 0

    def as_dict(self) -> dict[str, int]:
        return dataclasses.asdict(self)


class Organization:
    """Live engines of an FSO plus the shared trace and capacity ledger.

    All mutation goes through this object and happens in call order, which
    the simulation drives from a single event queue. Set ``cooperation`` to
    False to switch off the exception rule: requests then only ever see their
    own SoC.
    """

    def __init__(
        self,
        fso: Fso,
        *,
        cooperation: bool = True,
        accept: AcceptPolicy = always_accept,
        trace: Trace | None = None,
    ):
        self.fso = fso
        self.cooperation = cooperation
        self.accept = accept
        self.trace = trace or Trace()
        self.ledger = CapacityLedger()
        self.engines = {
            sid: SocialComputingEngine(sid, soc.engine, self.ledger, self.trace)
            for sid, soc in fso.socs.items()
        }
        self._engine_ids = fso.engines
        self.requests: dict[str, ServiceRequest] = {}
        self.sons: dict[str, Son] = {}
        self.son_of: dict[str, str] = {}
        self.escalations: list[Escalation] = []
        self.counters = Counters()
        self.on_son_formed: list[Callable[[Son], None]] = []
        self.closed = False
        self._consulted: dict[str, set[str]] = {}
        self._pending: dict[str, ServiceRequest] = {}  # enable (FIFO) order

    # -- plumbing ---------------------------------------------------------

    @property
    def now(self) -> int:
        return self.trace.now

    @now.setter
    def now(self, t: int) -> None:
        self.trace.now = t

    def engine(self, soc: str) -> SocialComputingEngine:
        try:
            return self.engines[soc]
        except KeyError:
            raise FsoError("unknown", f"unknown SoC {soc!r}", soc) from None

    def request(self, request_id: str) -> ServiceRequest:
        try:
            return self.requests[request_id]
        except KeyError:
            raise EnrollmentError(f"unknown request {request_id!r}") from None

    def pending(self) -> list[ServiceRequest]:
        return list(self._pending.values())

    def _distance_from(self, origin: str) -> Callable[[str], int]:
        return lambda soc: self.fso.distance(origin, soc)

    # -- publish ----------------------------------------------------------

    def publish(self, soc: str, publisher: str, item: Advertisement | Event | ServiceRequest) -> list[dict[str, Any]]:
        """Deliver ``item`` from ``publisher`` to the engine of ``soc``.

        Returns the trace records this publication caused, in order.
        """
        engine = self.engine(soc)
        if publisher not in self.fso.socs[soc]:
            raise RegistryError(f"{publisher!r} is not a member of {soc!r}")
        start = self.trace.seq
        if isinstance(item, Advertisement):
            if item.actor != publisher:
                raise RegistryError(f"{publisher!r} cannot advertise on behalf of {item.actor!r}")
            if publisher in self._engine_ids:
                raise RegistryError(f"engine {publisher!r} may only publish exception traffic")
            ad = dataclasses.replace(item, soc=soc, published_at=self.trace.seq)
            engine.store(ad)
            self._retry(soc)
        elif isinstance(item, Event):
            rec = self.trace.emit("event", soc, actor=item.actor, event=item.kind)
            eid = item.id or f"e{rec['seq']}"
            fired = evaluate_protocols(engine.registry, item, eid)
            for proto in engine.registry.protocols:
                if proto.guard(item):
                    engine.registry.fired.add((proto.name, eid))
            for req in fired:
                if req.id in self.requests:
                    continue
                self.enable(soc, req)
                self.global_enroll(req.id)
        elif isinstance(item, ServiceRequest):
            if item.origin_actor != publisher:
                raise RegistryError(f"{publisher!r} cannot request on behalf of {item.origin_actor!r}")
            self.enable(soc, item)
            self.global_enroll(item.id)
        else:
            raise RegistryError(f"cannot publish {type(item).__name__}")
        return self.trace.since(start)

    # -- request lifecycle ------------------------------------------------

    def enable(self, soc: str, request: ServiceRequest) -> ServiceRequest:
        engine = self.engine(soc)
        if request.id in self.requests:
            raise EnrollmentError(f"duplicate request id {request.id!r}")
        if request.origin_actor not in self.fso.socs[soc]:
            raise RegistryError(f"{request.origin_actor!r} is not a member of {soc!r}")
        if request.state is not RequestState.CREATED:
            raise EnrollmentError(f"request {request.id!r} was already {request.state.value}")
        request.origin_soc = soc
        request.current_soc = soc
        request.enabled_at = self.now
        request.state = RequestState.ENABLED
        self.requests[request.id] = request
        self._consulted[request.id] = set()
        self._pending[request.id] = request
        engine.registry.pending[request.id] = request
        self.counters.requests += 1
        self.trace.emit(
            "enable", soc, request_id=request.id, actor=request.origin_actor,
            roles=[r.role_id for r in request.roles],
        )
        if not request.roles:
            self._activate(request, soc)
        return request

    def _attempt(self, req: ServiceRequest, soc: str, pool_socs: list[str], cause: int | None) -> LocalOutcome:
        engine = self.engines[soc]
        ads = [ad for s in pool_socs for ad in self.engines[s].registry.advertisements.values()]
        candidates = match_ads(ads, req, req.unbound, self.ledger.in_use, self._distance_from(req.origin_soc))
        engine.notify(req.id, candidates, cause)
        willing = {
            pos: [a for a in actors if self.accept(a, req, pos)]
            for pos, actors in candidates.items()
        }
        free = {
            (a, req.roles[pos].role_id): self.ledger.spare(a, req.roles[pos].role_id)
            for pos, actors in willing.items()
            for a in actors
        }
        chosen = assign(willing, req.roles, free)
        outcome = engine.bind(req.id, chosen)
        if outcome.active:
            self._activate(req, soc)
        return LocalOutcome(dict(req.bindings), req.unbound)

    def local_enroll(self, soc: str, request_id: str) -> LocalOutcome:
        """Match, notify and bind using only the registry of ``soc``."""
        req = self.request(request_id)
        if req.state is not RequestState.ENABLED or request_id not in self.engine(soc).registry.pending:
            raise EnrollmentError(f"request {request_id!r} is not enabled at {soc!r}")
        self._consulted[req.id].add(soc)
        return self._attempt(req, soc, [soc], None)

    def raise_exception(self, soc: str, request_id: str, missing: tuple[int, ...]) -> Escalation | None:
        """Publish the request and its missing roles to the parent engine.

        Returns None at the root: there is nobody to escalate to and the
        request stays pending there.
        """
        req = self.request(request_id)
        if not missing:
            raise EnrollmentError(f"request {request_id!r}: nothing missing to escalate")
        up = self.fso.parents[self.fso.soc(soc).id]
        if up is None:
            return None
        rec = self.trace.emit(
            "exception", soc, request_id=req.id, actor=self.fso.socs[soc].engine,
            roles=[req.roles[p].role_id for p in missing], raised_to=up,
        )
        esc = Escalation(req.id, tuple(req.roles[p] for p in missing), tuple(missing), soc, up, rec["seq"])
        self.escalations.append(esc)
        self.engines[up].registry.pending[req.id] = req
        req.current_soc = up
        req.exceptions += 1
        self.counters.exceptions += 1
        return esc

    def _enroll_above(self, req: ServiceRequest, soc: str, cause: int | None) -> LocalOutcome:
        """Match missing roles against every registry under ``soc``.

        Child engines not yet consulted for this request receive the query
        first (one delegate record each).
        """
        seen = self._consulted[req.id]
        pool = self.fso.subtree(soc)
        for s in pool:
            if s not in seen:
                seen.add(s)
                if s != soc:
                    self.trace.emit("delegate", s, request_id=req.id, actor=self.fso.socs[s].engine,
                                    roles=[req.roles[p].role_id for p in req.unbound], cause=cause)
        return self._attempt(req, soc, pool, cause)

    def global_enroll(self, request_id: str) -> Son | None:
        """Drive the request upward until active; returns its SON or None.

        A request that not even the root can satisfy stays pending there and
        is retried whenever capacity appears below it.
        """
        req = self.request(request_id)
        if req.state is RequestState.ACTIVE:
            return self._son_for(req)
        if req.state is not RequestState.ENABLED:
            return self.sons.get(self.son_of.get(req.id, ""))
        soc = req.current_soc
        if soc == req.origin_soc:
            outcome = self.local_enroll(soc, req.id)
        else:
            outcome = self._enroll_above(req, soc, None)
        while not outcome.complete and self.cooperation:
            esc = self.raise_exception(soc, req.id, outcome.missing)
            if esc is None:
                if soc == req.origin_soc and len(self.fso.socs) > 1:
                    # nobody above the root: it queries its own subtree instead
                    outcome = self._enroll_above(req, soc, None)
                break
            soc = esc.raised_to
            outcome = self._enroll_above(req, soc, esc.seq)
        if req.state is RequestState.ACTIVE:
            return self._son_for(req)
        return None

    def _activate(self, req: ServiceRequest, soc: str) -> None:
        req.state = RequestState.ACTIVE
        req.apex = soc
        req.activated_at = self.now
        self._pending.pop(req.id, None)
        for s in self.engines.values():
            if req.id in s.registry.pending:
                s.forget(req.id)
        homes = {self.fso.home[a] for a in req.bindings.values()}
        if homes <= {req.origin_soc}:
            self.counters.local_enrollments += 1
        else:
            self.counters.global_enrollments += 1
        self.trace.emit("active", soc, request_id=req.id, exceptions=req.exceptions)

    def _son_for(self, req: ServiceRequest) -> Son:
        sid = self.son_of.get(req.id)
        return self.sons[sid] if sid else self.form_son(req.id)

    # -- SON lifecycle ----------------------------------------------------

    def form_son(self, request_id: str, bindings: dict[int, str] | None = None) -> Son:
        req = self.request(request_id)
        if req.state is not RequestState.ACTIVE:
            raise EnrollmentError(f"request {request_id!r} is not active")
        if req.id in self.son_of:
            raise EnrollmentError(f"request {request_id!r} already has a SON")
        if bindings is not None and dict(bindings) != req.bindings:
            raise EnrollmentError(f"bindings for {request_id!r} differ from the enrolled ones")
        members = frozenset({req.origin_soc} | {self.fso.home[a] for a in req.bindings.values()})
        son = Son(
            id=f"son:{req.id}",
            request_id=req.id,
            bindings=dict(req.bindings),
            member_socs=members,
            apex=req.apex or req.origin_soc,
            created_at=self.now,
            duration=req.duration,
        )
        self.sons[son.id] = son
        self.son_of[req.id] = son.id
        self.counters.sons_formed += 1
        self.trace.emit(
            "son-formed", son.apex, request_id=req.id,
            roles=[req.roles[p].role_id for p in sorted(son.bindings)],
            socs=sorted(members), due=son.due,
        )
        for hook in self.on_son_formed:
            hook(son)
        return son

    def dissolve_son(self, son_id: str, now: int) -> dict[tuple[str, str], int]:
        """Release a SON at the end of its request; only legal at ``created_at + duration``."""
        son = self.sons.get(son_id)
        if son is None:
            raise EnrollmentError(f"unknown SON {son_id!r}")
        if son.dissolved_at is not None:
            raise EnrollmentError(f"SON {son_id!r} already dissolved")
        if now != son.due:
            raise EnrollmentError(f"SON {son_id!r} is due at {son.due}, not {now}")
        self.now = now
        req = self.requests[son.request_id]
        freed = self.engines[son.apex].release(req, keep=True)
        req.state = RequestState.COMPLETED
        son.dissolved_at = now
        self.trace.emit("son-dissolved", son.apex, request_id=req.id)
        for s in sorted({self.fso.home[a] for a, _ in freed}):
            self._retry(s)
        return freed

    def cancel(self, request_id: str) -> None:
        """Give up on an enabled request (deadline passed or run over)."""
        req = self.request(request_id)
        if req.state is not RequestState.ENABLED:
            raise EnrollmentError(f"request {request_id!r} is {req.state.value}, not enabled")
        freed = self.engines[req.current_soc].release(req)
        for s in self.engines.values():
            if req.id in s.registry.pending:
                s.forget(req.id)
        req.state = RequestState.UNFULFILLED
        self._pending.pop(req.id, None)
        self.counters.unfulfilled += 1
        self.trace.emit("unfulfilled", req.current_soc, request_id=req.id)
        for s in sorted({self.fso.home[a] for a, _ in freed}):
            self._retry(s)

    def close(self) -> None:
        """End of run: every request still pending becomes unfulfilled."""
        self.closed = True
        for req in self.pending():
            self.cancel(req.id)

    def _retry(self, touched: str) -> None:
        if self.closed:
            return
        for req in self.pending():
            if req.state is not RequestState.ENABLED:
                continue
            cur = req.current_soc
            local_only = cur == req.origin_soc and (self.fso.parents[cur] is not None or not self.cooperation)
            visible = touched == cur if local_only else self.fso.is_ancestor(cur, touched)
            if visible:
                self.global_enroll(req.id)
