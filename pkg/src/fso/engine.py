"""Per-SoC social computing engine, the shared event trace and the capacity
ledger."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping

from .registry import (
    Advertisement,
    Notification,
    Registry,
    RegistryError,
    RequestState,
    ServiceRequest,
)


class Trace:
    """Append-only list of engine effects, numbered by one global sequence."""

    def __init__(self):
        self.records: list[dict[str, Any]] = []
        self.now = 0

    @property
    def seq(self) -> int:
        return len(self.records)

    def emit(self, kind: str, soc: str, **fields: Any) -> dict[str, Any]:
        rec = {"seq": len(self.records), "t": self.now, "soc": soc, "kind": kind}
        rec.update((k, v) for k, v in fields.items() if v is not None)
        self.records.append(rec)
        return rec

    def since(self, seq: int) -> list[dict[str, Any]]:
        return self.records[seq:]

    def lines(self) -> list[str]:
        return [json.dumps(r, sort_keys=True, separators=(",", ":")) for r in self.records]

    def dump(self, fh) -> None:
        for line in self.lines():
            fh.write(line + "\n")

    def digest(self) -> str:
        h = hashlib.sha256()
        for line in self.lines():
            h.update(line.encode())
            h.update(b"\n")
        return h.hexdigest()


class CapacityLedger:
    """Active bindings per (actor, role_id) against the advertised capacity."""

    def __init__(self):
        self.capacity: dict[tuple[str, str], int] = {}
        self.available: dict[tuple[str, str], bool] = {}
        self.used: dict[tuple[str, str], int] = {}

    def set_policy(self, ad: Advertisement) -> None:
        self.capacity[ad.key] = ad.policy.capacity
        self.available[ad.key] = ad.policy.available

    def in_use(self, actor: str, role_id: str) -> int:
        return self.used.get((actor, role_id), 0)

    def spare(self, actor: str, role_id: str) -> int:
        key = (actor, role_id)
        if not self.available.get(key, False):
            return 0
        return max(0, self.capacity.get(key, 0) - self.used.get(key, 0))

    def acquire(self, actor: str, role_id: str) -> None:
        if self.spare(actor, role_id) < 1:
            raise RegistryError(f"capacity exhausted for {actor!r} as {role_id!r}")
        key = (actor, role_id)
        self.used[key] = self.used.get(key, 0) + 1

    def release(self, actor: str, role_id: str) -> None:
        key = (actor, role_id)
        n = self.used.get(key, 0)
        if n < 1:
            raise RegistryError(f"release without binding for {actor!r} as {role_id!r}")
        if n == 1:
            del self.used[key]
        else:
            self.used[key] = n - 1

    def snapshot(self) -> dict[tuple[str, str], int]:
        return dict(self.used)


@dataclass
class BindingOutcome:
    request_id: str
    bound: dict[int, str] = field(default_factory=dict)
    rejected: dict[int, str] = field(default_factory=dict)
    active: bool = False


class SocialComputingEngine:
    """Coordinator of one SoC: owns its registry, notifies and binds."""

    def __init__(self, soc: str, engine_id: str, ledger: CapacityLedger, trace: Trace):
        self.soc = soc
        self.id = engine_id
        self.registry = Registry(soc)
        self.ledger = ledger
        self.trace = trace

    def __repr__(self) -> str:
        return f"SocialComputingEngine({self.soc!r})"

    def store(self, ad: Advertisement) -> dict[str, Any]:
        self.registry.put(ad)
        self.ledger.set_policy(ad)
        return self.trace.emit(
            "advertise",
            self.soc,
            actor=ad.actor,
            role=ad.offered.role_id,
            capacity=ad.policy.capacity,
            available=ad.policy.available,
        )

    def _request(self, request_id: str) -> ServiceRequest:
        try:
            return self.registry.pending[request_id]
        except KeyError:
            raise RegistryError(f"request {request_id!r} is not enabled at {self.soc!r}") from None

    def notify(self, request_id: str, candidates: Mapping[int, Iterable[str]], cause: int | None = None) -> list[Notification]:
        """One notification per (actor, role); ones already outstanding are skipped."""
        req = self._request(request_id)
        out = []
        for pos in sorted(candidates):
            rid = req.roles[pos].role_id
            for actor in candidates[pos]:
                key = (actor, req.id, rid)
                if key in self.registry.outstanding:
                    continue
                rec = self.trace.emit("notify", self.soc, request_id=req.id, actor=actor, role=rid, cause=cause)
                self.registry.outstanding[key] = rec["seq"]
                out.append(Notification(actor, req.id, rid, self.trace.now, self.soc))
        return out

    def bind(self, request_id: str, acceptances: Mapping[int, str]) -> BindingOutcome:
        """Record accepted roles; the request turns active once every role is bound.

        An acceptance for a role the actor was never notified about is an
        error. One that arrives after the actor ran out of capacity is
        rejected and the role stays open.
        """
        req = self._request(request_id)
        outcome = BindingOutcome(req.id)
        for pos in sorted(acceptances):
            actor = acceptances[pos]
            if not 0 <= pos < len(req.roles):
                raise RegistryError(f"request {req.id!r} has no role position {pos}")
            rid = req.roles[pos].role_id
            notified = self.registry.outstanding.get((actor, req.id, rid))
            if notified is None:
                raise RegistryError(f"{actor!r} accepted {rid!r} on {req.id!r} without a notification")
            if pos in req.bindings:
                outcome.rejected[pos] = "already bound"
                continue
            if self.ledger.spare(actor, rid) < 1:
                outcome.rejected[pos] = "capacity"
                continue
            self.ledger.acquire(actor, rid)
            req.bindings[pos] = actor
            outcome.bound[pos] = actor
            self.trace.emit("bind", self.soc, request_id=req.id, actor=actor, role=rid, position=pos, cause=notified)
        if req.is_active and req.state is RequestState.ENABLED:
            req.state = RequestState.ACTIVE
        outcome.active = req.is_active
        return outcome

    def release(self, req: ServiceRequest, keep: bool = False) -> dict[tuple[str, str], int]:
        """Give back the capacity held by every binding of ``req``.

        ``keep`` leaves the binding map in place as a record (completed SONs).
        """
        freed: dict[tuple[str, str], int] = {}
        for pos in sorted(req.bindings):
            actor = req.bindings[pos]
            rid = req.roles[pos].role_id
            self.ledger.release(actor, rid)
            freed[(actor, rid)] = freed.get((actor, rid), 0) + 1
            self.trace.emit("release", self.soc, request_id=req.id, actor=actor, role=rid, position=pos)
        if not keep:
            req.bindings.clear()
        return freed

    def forget(self, request_id: str) -> None:
        self.registry.pending.pop(request_id, None)
        out = self.registry.outstanding
        for key in [k for k in out if k[1] == request_id]:
            del out[key]


AcceptPolicy = Callable[[str, ServiceRequest, int], bool]


def always_accept(actor: str, request: ServiceRequest, position: int) -> bool:
    return True
