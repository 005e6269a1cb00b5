import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fso import (
    Advertisement,
    EngagementPolicy,
    Event,
    Organization,
    RequestState,
    RequestTemplate,
    RoleProtocol,
    match,
    on_event,
    role,
)
from fso.registry import Registry, RegistryError, ServiceRequest, assign

from helpers import advertise, flat_org, request
from oracles import best_assignment


def test_role_admits_superset():
    want = role("firefighter", "water")
    assert want.admits(role("firefighter", "water", "ladder"))
    assert not want.admits(role("firefighter"))
    assert not want.admits(role("medic", "water"))


def test_bad_descriptors():
    with pytest.raises(RegistryError):
        role("")
    with pytest.raises(RegistryError):
        EngagementPolicy(capacity=0)
    with pytest.raises(RegistryError):
        ServiceRequest("r", (), "a", "s", duration=0)


def test_readvertising_replaces():
    reg = Registry("s")
    reg.put(Advertisement("a", role("x", "c1")))
    old = reg.put(Advertisement("a", role("x", "c2")))
    assert old.offered.capabilities == {"c1"}
    assert len(reg.advertisements) == 1


def test_match_order_and_filters():
    reg = Registry("s")
    reg.put(Advertisement("zed", role("x", "c"), published_at=1))
    reg.put(Advertisement("amy", role("x", "c"), published_at=2))
    reg.put(Advertisement("bob", role("x", "c"), published_at=1))
    reg.put(Advertisement("off", role("x", "c"), EngagementPolicy(available=False)))
    reg.put(Advertisement("weak", role("x")))
    req = ServiceRequest("r", (role("x", "c"), role("y")), "o", "s")
    assert match(reg, req) == {0: ["bob", "zed", "amy"], 1: []}
    busy = {("bob", "x"): 1}
    assert match(reg, req, [0], in_use=lambda a, r: busy.get((a, r), 0)) == {0: ["zed", "amy"]}


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_match_agrees_with_filter(seed):
    rng = random.Random(seed)
    caps = ["c1", "c2", "c3"]
    reg = Registry("s")
    raw = []
    for i in range(rng.randint(0, 8)):
        ad = {"actor": f"a{i}", "role": rng.choice("xy"), "capabilities": set(rng.sample(caps, rng.randint(0, 3))),
              "available": rng.random() < 0.8}
        raw.append(ad)
        reg.put(Advertisement(ad["actor"], role(ad["role"], *ad["capabilities"]),
                              EngagementPolicy(1, ad["available"]), published_at=i))
    roles = [role(rng.choice("xy"), *rng.sample(caps, rng.randint(0, 2))) for _ in range(rng.randint(1, 3))]
    got = match(reg, ServiceRequest("r", tuple(roles), "o", "s"))
    for pos, want in enumerate(roles):
        expect = [ad["actor"] for ad in raw
                  if ad["available"] and ad["role"] == want.role_id and want.capabilities <= ad["capabilities"]]
        assert got[pos] == expect


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_assign_matches_brute_force(seed):
    rng = random.Random(seed)
    ads = [{"actor": f"a{i}", "role": rng.choice("xy"), "capabilities": [], "capacity": rng.randint(1, 2)}
           for i in range(rng.randint(0, 6))]
    roles = [(rng.choice("xy"), frozenset()) for _ in range(rng.randint(1, 4))]
    bound, _ = best_assignment(roles, ads)
    cands = {p: [ad["actor"] for ad in ads if ad["role"] == rid] for p, (rid, _) in enumerate(roles)}
    free = {(ad["actor"], ad["role"]): ad["capacity"] for ad in ads}
    got = assign(cands, [role(r) for r, _ in roles], free)
    assert set(got) == bound
    load = {}
    for p, a in got.items():
        load[(a, roles[p][0])] = load.get((a, roles[p][0]), 0) + 1
    assert all(n <= free[k] for k, n in load.items())


def test_assign_reroutes_earlier_position():
    # greedy would give both positions to amy; augmenting moves position 0
    roles = [role("x"), role("x")]
    got = assign({0: ["amy", "bob"], 1: ["amy"]}, roles, {("amy", "x"): 1, ("bob", "x"): 1})
    assert got == {0: "bob", 1: "amy"}


def test_notify_dedup_and_bind_requires_notification():
    org = flat_org(["o", "a", "b"], accept=lambda *_: False)
    advertise(org, "a", "x")
    advertise(org, "b", "x")
    req = request("r", "o", [role("x"), role("x")])
    org.enable("s", req)
    org.local_enroll("s", "r")
    eng = org.engine("s")
    notes = [r for r in org.trace.records if r["kind"] == "notify"]
    # one per (actor, role) even though two positions want role x
    assert sorted(r["actor"] for r in notes) == ["a", "b"]
    org.local_enroll("s", "r")
    assert len([r for r in org.trace.records if r["kind"] == "notify"]) == 2
    with pytest.raises(RegistryError):
        eng.bind("r", {0: "o"})
    out = eng.bind("r", {0: "a"})
    assert out.bound == {0: "a"} and not out.active
    assert req.state is RequestState.ENABLED
    out = eng.bind("r", {1: "a"})
    assert out.rejected == {1: "capacity"}
    out = eng.bind("r", {1: "b"})
    assert out.active and req.state is RequestState.ACTIVE


def test_bind_unknown_request():
    org = flat_org(["o"])
    with pytest.raises(RegistryError):
        org.engine("s").bind("nope", {})


def test_publish_membership_checks():
    org = flat_org(["o", "a"])
    with pytest.raises(RegistryError):
        org.publish("s", "stranger", Advertisement("stranger", role("x")))
    with pytest.raises(RegistryError):
        org.publish("s", "o", Advertisement("a", role("x")))
    with pytest.raises(RegistryError):
        org.publish("s", "e.s", Advertisement("e.s", role("x")))
    with pytest.raises(RegistryError):
        org.publish("s", "a", request("r", "o", [role("x")]))
    with pytest.raises(RegistryError):
        org.publish("s", "a", "hello")


def _protocol_org():
    org = flat_org(["sensor", "v", "resp"])
    advertise(org, "v", "verifier")
    advertise(org, "resp", "responder")
    reg = org.engine("s").registry
    reg.protocols.append(RoleProtocol("check", on_event("fall"), (RequestTemplate("verify", (role("verifier"),)),)))
    reg.protocols.append(RoleProtocol("help", on_event("fall"), (RequestTemplate("respond", (role("responder"),)),)))
    reg.protocols.append(RoleProtocol("noise", on_event("smoke"), (RequestTemplate("x", (role("x"),)),)))
    return org


def test_protocols_fire_in_registration_order():
    org = _protocol_org()
    recs = org.publish("s", "sensor", Event("fall", "sensor", id="ev1"))
    enabled = [r["request_id"] for r in recs if r["kind"] == "enable"]
    assert enabled == ["verify@ev1", "respond@ev1"]
    assert org.request("verify@ev1").state is RequestState.ACTIVE
    assert org.request("respond@ev1").bindings == {0: "resp"}


def test_replayed_event_is_idempotent():
    org = _protocol_org()
    org.publish("s", "sensor", Event("fall", "sensor", id="ev1"))
    recs = org.publish("s", "sensor", Event("fall", "sensor", id="ev1"))
    assert [r["kind"] for r in recs] == ["event"]
    assert org.counters.requests == 2


def test_event_without_matching_guard():
    org = _protocol_org()
    recs = org.publish("s", "sensor", Event("door", "sensor"))
    assert [r["kind"] for r in recs] == ["event"]
