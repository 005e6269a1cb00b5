"""Discrete-event drivers for the fire, healthcare and falls scenarios.

Each run builds an organization from the scenario's hierarchy, publishes the
advertisements at tick 0, pre-draws its external arrivals from per-class
random streams and then processes the event queue. At the horizon every
pending request is given up; already-formed SONs still run to completion so
capacity is fully returned.
"""
from __future__ import annotations

from dataclasses import dataclass
from statistics import fmean
from typing import Any

from ..enrollment import Organization, Son
from ..registry import (
    Advertisement,
    EngagementPolicy,
    Event,
    RequestState,
    RequestTemplate,
    RoleProtocol,
    ServiceRequest,
    on_event,
    role,
)
from ..topology import build_fso
from .clock import Scheduled, SimClock, streams
from .config import FIXTURES, ScenarioConfig
from .metrics import Metrics


class Simulation:
    stream_names: tuple[str, ...] = ()

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.p = config.params
        if config.fso is None:
            spec, adverts = FIXTURES[config.scenario](self.p)
        else:
            spec, adverts = config.fso, config.adverts or []
        self.fso = build_fso(spec)
        self.org = Organization(self.fso, cooperation=config.cooperation)
        self.trace = self.org.trace
        self.clock = SimClock()
        self.rng = streams(config.seed, *self.stream_names)
        self.open = True
        self.org.on_son_formed.append(self._son_formed)
        for ad in adverts:
            actor = ad["actor"]
            self.org.publish(
                self.fso.home[actor],
                actor,
                Advertisement(
                    actor,
                    role(ad["role"], *ad.get("capabilities", ())),
                    EngagementPolicy(int(ad.get("capacity", 1)), bool(ad.get("available", True))),
                ),
            )

    def emit(self, kind: str, soc: str, **fields: Any) -> dict[str, Any]:
        return self.trace.emit(kind, soc, **fields)

    def _son_formed(self, son: Son) -> None:
        self.clock.schedule(son.due, "dissolve", son.id)
        self.son_formed(son)

    def son_formed(self, son: Son) -> None:
        pass

    def generate(self) -> None:
        raise NotImplementedError

    def handle(self, ev: Scheduled) -> None:
        raise NotImplementedError

    def at_horizon(self) -> None:
        pass

    def results(self) -> dict[str, Any]:
        raise NotImplementedError

    def step(self, ev: Scheduled) -> None:
        """Advance the organization to ``ev.time`` and apply one event."""
        self.org.now = ev.time
        if ev.kind == "dissolve":
            self.org.dissolve_son(ev.payload, ev.time)
        else:
            self.handle(ev)

    def run(self) -> Metrics:
        self.generate()
        horizon = self.config.horizon
        while self.clock and self.clock.peek().time < horizon:
            self.step(self.clock.pop())
        self.org.now = horizon
        self.open = False
        self.emit("horizon", self.fso.root)
        self.org.close()
        self.at_horizon()
        while self.clock:
            self.step(self.clock.pop())
        values = self.results()
        values.update(self.org.counters.as_dict())
        return Metrics(self.config.scenario, self.config.seed, self.config.cooperation, values, self.trace.digest())


@dataclass
class Fire:
    house: str
    ignited: int
    request_id: str
    outcome: str | None = None  # "saved" | "burned"


class FireSimulation(Simulation):
    """Houses ignite; a house burns down unless a responder arrives strictly
    before ``ignited + burn_threshold``."""

    stream_names = ("ignition",)

    def generate(self) -> None:
        self.houses = sorted(s for s in self.fso.socs if s.startswith("house")) or sorted(
            s for s, soc in self.fso.socs.items() if soc.level == 1
        )
        self.state = {h: "intact" for h in self.houses}
        self.fires: dict[str, Fire] = {}
        rng = self.rng["ignition"]
        rate = float(self.p["ignition_rate"])
        for t in range(self.config.horizon):
            for h in self.houses:
                if rng.random() < rate:
                    self.clock.schedule(t, "ignition", h)

    def handle(self, ev: Scheduled) -> None:
        if ev.kind == "ignition":
            self.ignite(ev.payload, ev.time)
        elif ev.kind == "arrival":
            self.arrive(self.fires[ev.payload], ev.time)
        elif ev.kind == "burnout":
            self.burn_out(self.fires[ev.payload], ev.time)

    def ignite(self, house: str, t: int) -> None:
        if self.state[house] != "intact" or not self.open:
            return
        self.state[house] = "burning"
        resident = sorted(self.fso.socs[house].actors)[0]
        rid = f"fire:{house}:{t}"
        self.fires[rid] = Fire(house, t, rid)
        self.emit("ignition", house, request_id=rid)
        roles = [role("firefighter", "extinguish")]
        if self.p["require_spontaneous"]:
            roles.append(role("spontaneous-responder", "assist"))
        self.clock.schedule(t + int(self.p["burn_threshold"]), "burnout", rid)
        req = ServiceRequest(rid, tuple(roles), resident, house, duration=int(self.p["engagement_ticks"]))
        self.org.publish(house, resident, req)

    def son_formed(self, son: Son) -> None:
        fire = self.fires.get(son.request_id)
        if fire is None:
            return
        hops = max((self.fso.distance(fire.house, self.fso.home[a]) for a in son.bindings.values()), default=0)
        eta = son.created_at + int(self.p["response_base"]) + int(self.p["response_per_hop"]) * hops
        self.clock.schedule(eta, "arrival", fire.request_id)

    def arrive(self, fire: Fire, t: int) -> None:
        if fire.outcome is None and t < fire.ignited + int(self.p["burn_threshold"]):
            fire.outcome = "saved"
            self.state[fire.house] = "intact"
            self.emit("saved", fire.house, request_id=fire.request_id)

    def burn_out(self, fire: Fire, t: int) -> None:
        if fire.outcome is not None:
            return
        fire.outcome = "burned"
        self.state[fire.house] = "burned"
        self.emit("burned", fire.house, request_id=fire.request_id)
        if self.org.requests[fire.request_id].state is RequestState.ENABLED:
            self.org.cancel(fire.request_id)

    def results(self) -> dict[str, Any]:
        outcomes = [f.outcome for f in self.fires.values()]
        return {
            "houses_ignited": len(outcomes),
            "houses_burned_down": outcomes.count("burned"),
            "houses_saved": outcomes.count("saved"),
        }


@dataclass
class Patient:
    request_id: str
    community: str
    arrived: int
    started: int | None = None


class HealthcareSimulation(Simulation):
    """Patients need a nurse and a physician together for a treatment."""

    stream_names = ("arrivals", "patients")

    def generate(self) -> None:
        self.communities = sorted(s for s, soc in self.fso.socs.items() if soc.level == 1)
        self.patients: dict[str, Patient] = {}
        arrivals, who = self.rng["arrivals"], self.rng["patients"]
        rate = float(self.p["arrival_rate"])
        n = 0
        for t in range(self.config.horizon):
            for c in self.communities:
                if arrivals.random() < rate:
                    residents = sorted(a for a in self.fso.socs[c].actors if a.startswith("resident"))
                    actor = residents[who.randrange(len(residents))] if residents else sorted(self.fso.socs[c].actors)[0]
                    self.clock.schedule(t, "patient-arrival", (f"patient{n}", c, actor))
                    n += 1

    def handle(self, ev: Scheduled) -> None:
        if ev.kind == "patient-arrival" and self.open:
            pid, community, actor = ev.payload
            rid = f"care:{pid}"
            self.patients[rid] = Patient(rid, community, ev.time)
            self.emit("patient-arrival", community, request_id=rid, actor=actor)
            req = ServiceRequest(
                rid,
                (role("nurse", "care"), role("physician", "diagnose")),
                actor,
                community,
                duration=int(self.p["treatment_ticks"]),
            )
            self.org.publish(community, actor, req)

    def son_formed(self, son: Son) -> None:
        patient = self.patients.get(son.request_id)
        if patient is not None:
            patient.started = son.created_at
            self.emit("treatment-start", patient.community, request_id=patient.request_id,
                      wait=son.created_at - patient.arrived)

    def results(self) -> dict[str, Any]:
        horizon = self.config.horizon
        waits = [(p.started if p.started is not None else horizon) - p.arrived for p in self.patients.values()]
        treated = sum(p.started is not None for p in self.patients.values())
        return {
            "patients": len(self.patients),
            "treated": treated,
            "untreated": len(self.patients) - treated,
            "mean_wait_ticks": round(fmean(waits), 6) if waits else 0.0,
        }


@dataclass
class Alarm:
    id: str
    home: str
    raised: int
    false_positive: bool
    dismiss_roll: float
    decision: str | None = None  # "dispatch" | "dismiss"
    timed_out: bool = False
    response: int | None = None


class FallsSimulation(Simulation):
    """Fall alarms are checked by a volunteer before a responder is sent.

    A volunteer reply arriving strictly before the timeout dismisses a false
    positive with probability ``q``; true falls are always confirmed. Without
    a timely reply the responder is dispatched anyway.
    """

    stream_names = ("alarms", "truth", "verdicts")

    def __init__(self, config: ScenarioConfig):
        super().__init__(config)
        check = RequestTemplate("verify", (role("verifier", "verify"),), duration=int(self.p["verify_ticks"]))
        for sid, soc in self.fso.socs.items():
            if any(a.startswith("sensor") for a in soc.actors):
                self.org.engines[sid].registry.protocols.append(
                    RoleProtocol("fall-check", on_event("accelerometer-fired"), (check,))
                )

    def generate(self) -> None:
        self.homes = sorted(s for s, soc in self.fso.socs.items() if any(a.startswith("sensor") for a in soc.actors))
        self.alarms: dict[str, Alarm] = {}
        self.by_request: dict[str, Alarm] = {}
        rng, truth, verdicts = self.rng["alarms"], self.rng["truth"], self.rng["verdicts"]
        horizon = self.config.horizon
        times: list[tuple[int, str]] = []
        if self.p["alarm_count"] is not None:
            for _ in range(int(self.p["alarm_count"])):
                times.append((rng.randrange(horizon), self.homes[rng.randrange(len(self.homes))]))
            times.sort()
        else:
            rate = float(self.p["alarm_rate"])
            for t in range(horizon):
                for h in self.homes:
                    if rng.random() < rate:
                        times.append((t, h))
        for n, (t, home) in enumerate(times):
            alarm = Alarm(f"a{n}", home, t, truth.random() < float(self.p["p_fp"]), verdicts.random())
            self.alarms[alarm.id] = alarm
            self.clock.schedule(t, "alarm", alarm.id)

    def handle(self, ev: Scheduled) -> None:
        if ev.kind == "alarm":
            self.raise_alarm(self.alarms[ev.payload], ev.time)
        elif ev.kind == "verification-reply":
            self.reply(self.alarms[ev.payload], ev.time)
        elif ev.kind == "verify-timeout":
            self.timeout(self.alarms[ev.payload])
        elif ev.kind == "responder-arrival":
            alarm = self.alarms[ev.payload]
            if not alarm.false_positive:
                alarm.response = ev.time - alarm.raised
            self.emit("response-complete", alarm.home, request_id=f"respond@{alarm.id}", ticks=ev.time - alarm.raised)

    def raise_alarm(self, alarm: Alarm, t: int) -> None:
        if not self.open:
            return
        home = self.fso.socs[alarm.home]
        sensor = next(a for a in sorted(home.actors) if a.startswith("sensor"))
        self.clock.schedule(t + int(self.p["verify_timeout"]), "verify-timeout", alarm.id)
        self.by_request[f"verify@{alarm.id}"] = alarm
        self.org.publish(alarm.home, sensor, Event("accelerometer-fired", sensor, id=alarm.id))

    def son_formed(self, son: Son) -> None:
        alarm = self.by_request.get(son.request_id)
        if alarm is None:
            return
        if son.request_id.startswith("verify@"):
            self.clock.schedule(son.due, "verification-reply", alarm.id)
        else:
            hops = max(self.fso.distance(alarm.home, self.fso.home[a]) for a in son.bindings.values())
            eta = son.created_at + int(self.p["travel_base"]) + int(self.p["travel_per_hop"]) * hops
            self.clock.schedule(eta, "responder-arrival", alarm.id)

    def reply(self, alarm: Alarm, t: int) -> None:
        if alarm.decision is not None or t >= alarm.raised + int(self.p["verify_timeout"]):
            return
        if alarm.false_positive and alarm.dismiss_roll < float(self.p["q"]):
            alarm.decision = "dismiss"
            self.emit("dismiss", alarm.home, request_id=f"verify@{alarm.id}")
        else:
            self.dispatch(alarm)

    def timeout(self, alarm: Alarm) -> None:
        if alarm.decision is not None:
            return
        alarm.timed_out = True
        rid = f"verify@{alarm.id}"
        req = self.org.requests.get(rid)
        if req is not None and req.state is RequestState.ENABLED:
            self.org.cancel(rid)
        self.emit("timeout", alarm.home, request_id=rid)
        self.dispatch(alarm)

    def dispatch(self, alarm: Alarm) -> None:
        alarm.decision = "dispatch"
        rid = f"respond@{alarm.id}"
        self.emit("dispatch", alarm.home, request_id=rid)
        if not self.open:
            return
        elder = next(a for a in sorted(self.fso.socs[alarm.home].actors) if a.startswith("elder"))
        self.by_request[rid] = alarm
        req = ServiceRequest(rid, (role("responder", "first-aid"),), elder, alarm.home, duration=int(self.p["response_ticks"]))
        self.org.publish(alarm.home, elder, req)

    def results(self) -> dict[str, Any]:
        alarms = list(self.alarms.values())
        responses = [a.response for a in alarms if a.response is not None]
        return {
            "alarms": len(alarms),
            "true_falls": sum(not a.false_positive for a in alarms),
            "false_positives": sum(a.false_positive for a in alarms),
            "dispatches": sum(a.decision == "dispatch" for a in alarms),
            "verified_dismissals": sum(a.decision == "dismiss" for a in alarms),
            "alarms_handled": sum(a.decision is not None for a in alarms),
            "timeouts": sum(a.timed_out for a in alarms),
            "mean_response_ticks": round(fmean(responses), 6) if responses else None,
        }


SIMULATIONS = {"fire": FireSimulation, "healthcare": HealthcareSimulation, "falls": FallsSimulation}
