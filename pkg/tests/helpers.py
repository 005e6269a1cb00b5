"""Small builders shared by the test modules."""
from fso import Advertisement, EngagementPolicy, Organization, ServiceRequest, build_fso, role


def flat_org(actors, **kw):
    fso = build_fso({"socs": [{"id": "s", "level": 1, "engine": "e.s", "members": list(actors)}]})
    return Organization(fso, **kw)


def advertise(org, actor, role_id, *caps, capacity=1, available=True):
    soc = org.fso.home[actor]
    ad = Advertisement(actor, role(role_id, *caps), EngagementPolicy(capacity, available))
    return org.publish(soc, actor, ad)


def request(rid, origin, roles, origin_soc="", duration=1):
    return ServiceRequest(rid, tuple(roles), origin, origin_soc, duration)


def random_local_instance(rng):
    """One single-SoC enrollment problem as plain data."""
    caps = ["c1", "c2"]
    ads = []
    for i in range(rng.randint(0, 8)):
        ads.append({"actor": f"a{i}", "role": rng.choice("xyz"), "capabilities": rng.sample(caps, rng.randint(0, 2)),
                    "capacity": rng.randint(1, 2), "available": rng.random() < 0.9})
    roles = [(rng.choice("xyz"), frozenset(rng.sample(caps, rng.randint(0, 1)))) for _ in range(rng.randint(1, 3))]
    return ads, roles


def run_local_instance(ads, roles):
    """Publish ``ads`` into a one-SoC organization and enroll ``roles`` locally."""
    org = flat_org(["origin"] + [ad["actor"] for ad in ads])
    for ad in ads:
        advertise(org, ad["actor"], ad["role"], *ad["capabilities"], capacity=ad["capacity"], available=ad["available"])
    req = request("r", "origin", [role(r, *c) for r, c in roles])
    org.enable("s", req)
    return org, org.local_enroll("s", "r")


def random_tree_instance(rng, spec, actors_of):
    """Scatter advertisements over a hierarchy and pick a request."""
    ads = []
    for soc, actors in actors_of.items():
        for a in actors:
            ads.append({"actor": a, "soc": soc, "role": rng.choice("xyz"), "capabilities": [],
                        "capacity": rng.randint(1, 2), "available": True})
    roles = [(rng.choice("xyz"), frozenset()) for _ in range(rng.randint(1, 3))]
    origin = rng.choice(sorted(actors_of))
    return ads, roles, origin


def run_tree_instance(spec, ads, roles, origin, cooperation=True):
    members = {s["id"]: s for s in spec["socs"]}
    members[origin]["members"].append("requester")
    fso = build_fso(spec)
    org = Organization(fso, cooperation=cooperation)
    for ad in ads:
        advertise(org, ad["actor"], ad["role"], capacity=ad["capacity"])
    req = request("r", "requester", [role(r, *c) for r, c in roles])
    org.publish(origin, "requester", req)
    return org, req


ACCEPTANCE: list[str] = []


def record(number, title, ok, detail=""):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}" + (f"  ({detail})" if detail else "")
    ACCEPTANCE.append(line)
    print(line)
    return ok
