"""Scenario configuration files and the built-in fixtures."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

SCENARIOS = ("fire", "healthcare", "falls")

DEFAULTS: dict[str, dict[str, Any]] = {
    "fire": {
        "ignition_rate": 0.02,
        "burn_threshold": 15,
        "engagement_ticks": 10,
        "response_base": 1,
        "response_per_hop": 2,
        "require_spontaneous": False,
        "districts": 2,
        "houses_per_district": 4,
        "residents_per_house": 2,
        "spontaneous_fraction": 0.5,
        "firefighters": 2,
    },
    "healthcare": {
        "arrival_rate": 0.03,
        "treatment_ticks": 20,
        "residents_per_community": 5,
        "staffing": [[2, 2], [1, 0], [0, 1], [1, 1]],
    },
    "falls": {
        "alarm_rate": 0.005,
        "alarm_count": None,
        "p_fp": 0.3,
        "q": 0.9,
        "verify_timeout": 5,
        "verify_ticks": 2,
        "response_ticks": 10,
        "travel_base": 1,
        "travel_per_hop": 1,
        "neighborhoods": 2,
        "homes_per_neighborhood": 4,
        "volunteers_per_neighborhood": 4,
        "responders": 4,
    },
}

DEFAULT_HORIZON = {"fire": 100, "healthcare": 200, "falls": 500}

PROBABILITIES = ("ignition_rate", "spontaneous_fraction", "arrival_rate", "alarm_rate", "p_fp", "q")


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    scenario: str
    horizon: int
    seed: int = 0
    cooperation: bool = True
    fso: Mapping[str, Any] | None = None  # hierarchy spec; None builds the fixture
    adverts: list[Mapping[str, Any]] | None = None
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if not isinstance(self.horizon, int) or isinstance(self.horizon, bool) or self.horizon <= 0:
            raise ConfigError(f"horizon must be a positive integer, got {self.horizon!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")
        if not isinstance(self.cooperation, bool):
            raise ConfigError("cooperation must be true or false")
        unknown = set(self.params) - set(DEFAULTS[self.scenario])
        if unknown:
            raise ConfigError(f"unknown {self.scenario} parameters: {sorted(unknown)}")
        merged = {**DEFAULTS[self.scenario], **self.params}
        for key in PROBABILITIES:
            if key in merged and not 0.0 <= float(merged[key]) <= 1.0:
                raise ConfigError(f"{key} must lie in [0, 1], got {merged[key]!r}")
        self.params = merged
        if (self.fso is None) != (self.adverts is None):
            raise ConfigError("give both 'fso' and 'adverts', or neither to use the built-in fixture")

    def with_(self, **changes: Any) -> "ScenarioConfig":
        data = self.to_dict()
        params = {**data.pop("params"), **changes.pop("params", {})}
        data.update(changes)
        return ScenarioConfig(**data, params=params)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "scenario": self.scenario,
            "horizon": self.horizon,
            "seed": self.seed,
            "cooperation": self.cooperation,
            "params": dict(self.params),
        }
        if self.fso is not None:
            out["fso"] = self.fso
            out["adverts"] = self.adverts
        return out

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any], base: Path | None = None) -> "ScenarioConfig":
        if not isinstance(doc, Mapping):
            raise ConfigError("scenario config must be a JSON object")
        unknown = set(doc) - {"scenario", "fso", "adverts", "horizon", "seed", "cooperation", "params"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "scenario" not in doc:
            raise ConfigError("config needs a 'scenario'")
        scenario = doc["scenario"]
        fso = doc.get("fso")
        if isinstance(fso, str):
            if fso == "builtin":
                fso = None
            else:
                path = Path(fso) if base is None else base / fso
                try:
                    fso = json.loads(path.read_text(encoding="utf-8"))
                except OSError as exc:
                    raise ConfigError(f"cannot read hierarchy spec {path}: {exc.strerror}") from None
        return cls(
            scenario=scenario,
            horizon=doc.get("horizon", DEFAULT_HORIZON.get(scenario, 100)),
            seed=doc.get("seed", 0),
            cooperation=doc.get("cooperation", True),
            fso=fso,
            adverts=doc.get("adverts"),
            params=dict(doc.get("params", {})),
        )


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    return ScenarioConfig.from_dict(doc, path.parent)


def _advert(actor: str, role: str, caps: list[str], capacity: int = 1) -> dict[str, Any]:
    return {"actor": actor, "role": role, "capabilities": caps, "capacity": capacity}


def fire_fixture(p: Mapping[str, Any]) -> tuple[dict, list[dict]]:
    """City of districts and houses; only district 0 has a fire station.

    The first ``spontaneous_fraction`` of each district's houses shelter a
    resident able to extinguish small fires.
    """
    socs = []
    adverts = []
    districts = []
    n_spont = round(p["spontaneous_fraction"] * p["houses_per_district"])
    for d in range(p["districts"]):
        did = f"district{d}"
        members = []
        for h in range(p["houses_per_district"]):
            hid = f"house{d}.{h}"
            residents = [f"resident{d}.{h}.{r}" for r in range(p["residents_per_house"])]
            socs.append({"id": hid, "level": 1, "engine": f"sce.{hid}", "members": residents})
            members.append(hid)
            if h < n_spont and residents:
                adverts.append(_advert(residents[0], "firefighter", ["extinguish"]))
                if p["require_spontaneous"]:
                    adverts.append(_advert(residents[0], "spontaneous-responder", ["assist"]))
        if d == 0 and p["firefighters"]:
            crew = [f"firefighter{k}" for k in range(p["firefighters"])]
            socs.append({"id": "station0", "level": 1, "engine": "sce.station0", "members": crew})
            members.append("station0")
            adverts.extend(_advert(f, "firefighter", ["extinguish", "rescue", "equipment"]) for f in crew)
        socs.append({"id": did, "level": 2, "engine": f"sce.{did}", "members": members})
        districts.append(did)
    socs.append({"id": "city", "level": 3, "engine": "sce.city", "members": districts})
    return {"socs": socs}, adverts


def healthcare_fixture(p: Mapping[str, Any]) -> tuple[dict, list[dict]]:
    """Region of care communities with uneven nurse/physician staffing."""
    socs = []
    adverts = []
    names = []
    for i, (nurses, physicians) in enumerate(p["staffing"]):
        cid = f"community{i}"
        residents = [f"resident{i}.{k}" for k in range(p["residents_per_community"])]
        staff = [f"nurse{i}.{k}" for k in range(nurses)] + [f"physician{i}.{k}" for k in range(physicians)]
        socs.append({"id": cid, "level": 1, "engine": f"sce.{cid}", "members": residents + staff})
        adverts.extend(_advert(f"nurse{i}.{k}", "nurse", ["care"]) for k in range(nurses))
        adverts.extend(_advert(f"physician{i}.{k}", "physician", ["diagnose"]) for k in range(physicians))
        names.append(cid)
    socs.append({"id": "region", "level": 2, "engine": "sce.region", "members": names})
    return {"socs": socs}, adverts


def falls_fixture(p: Mapping[str, Any]) -> tuple[dict, list[dict]]:
    """Homes with a fall sensor each, a volunteer cloud per neighborhood and
    one city-wide care service."""
    socs = []
    adverts = []
    hoods = []
    for n in range(p["neighborhoods"]):
        nid = f"hood{n}"
        members = []
        for h in range(p["homes_per_neighborhood"]):
            hid = f"home{n}.{h}"
            socs.append({"id": hid, "level": 1, "engine": f"sce.{hid}", "members": [f"elder{n}.{h}", f"sensor{n}.{h}"]})
            members.append(hid)
        vols = [f"volunteer{n}.{k}" for k in range(p["volunteers_per_neighborhood"])]
        if vols:
            vid = f"volunteers{n}"
            socs.append({"id": vid, "level": 1, "engine": f"sce.{vid}", "members": vols})
            members.append(vid)
            adverts.extend(_advert(v, "verifier", ["verify"]) for v in vols)
        socs.append({"id": nid, "level": 2, "engine": f"sce.{nid}", "members": members})
        hoods.append(nid)
    crew = [f"responder{k}" for k in range(p["responders"])]
    socs.append({"id": "care", "level": 1, "engine": "sce.care", "members": crew})
    adverts.extend(_advert(r, "responder", ["first-aid"]) for r in crew)
    socs.append({"id": "city", "level": 3, "engine": "sce.city", "members": hoods + ["care"]})
    return {"socs": socs}, adverts


FIXTURES = {"fire": fire_fixture, "healthcare": healthcare_fixture, "falls": falls_fixture}
