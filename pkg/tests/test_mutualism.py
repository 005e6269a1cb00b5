import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fso.mutualism import (
    BehaviorSystem,
    MutualismError,
    SocialAction,
    backward_composite,
    check_chain_mp,
    check_mp,
    compose_sigma,
    load_model,
    parse_model,
    translucence_set,
    verify_witness,
)

from oracles import chain_exhaustive, mp_double_loop, random_bijection, random_system


def random_chain(rng, t, size=None):
    size = size or rng.randint(1, 5)
    evals = [random_system(rng, f"s{k}b", size) for k in range(t + 1)]
    maps = [random_bijection(rng, sorted(evals[k]), sorted(evals[k + 1])) for k in range(t)]
    systems = [BehaviorSystem(f"S{k}", e) for k, e in enumerate(evals)]
    links = [SocialAction(f"S{k}", f"S{k + 1}", m) for k, m in enumerate(maps)]
    return evals, maps, systems, links


def test_animals_and_plants(data_dir):
    model = load_model(data_dir / "animals_plants.json")
    w = check_mp(model.systems["animals"], model.systems["plants"], model.actions[0])
    assert (w.forward_behavior, w.backward_behavior) == ("respiration", "photosynthesis")


def test_no_mp_when_one_side_only_gives():
    d = BehaviorSystem("d", {"give": 0})
    r = BehaviorSystem("r", {"take": 1})
    # forward holds; backward would need d to gain
    assert check_mp(d, r, SocialAction("d", "r", {"give": "take"})) is None


def test_empty_systems():
    assert check_mp(BehaviorSystem("d", {}), BehaviorSystem("r", {}), SocialAction("d", "r", {})) is None


def test_bad_evaluation_and_mapping():
    with pytest.raises(MutualismError):
        BehaviorSystem("d", {"b": 2})
    with pytest.raises(MutualismError):
        BehaviorSystem("d", {"b": True})
    with pytest.raises(MutualismError, match="not injective"):
        SocialAction("d", "r", {"a": "x", "b": "x"})
    d = BehaviorSystem("d", {"a": 0, "b": 1})
    r = BehaviorSystem("r", {"x": 1, "y": 0})
    with pytest.raises(MutualismError, match="unmapped"):
        check_mp(d, r, SocialAction("d", "r", {"a": "x"}))
    with pytest.raises(MutualismError, match="not onto"):
        check_mp(d, r, SocialAction("d", "r", {"a": "x", "b": "z"}))
    with pytest.raises(MutualismError, match="does not connect"):
        check_mp(d, r, SocialAction("r", "d", {"x": "a", "y": "b"}))


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_mp_against_double_loop(seed):
    evals, maps, systems, links = random_chain(random.Random(seed), 1)
    w = check_mp(systems[0], systems[1], links[0])
    expect = mp_double_loop(evals[0], evals[1], maps[0])
    assert (w and (w.forward_behavior, w.backward_behavior)) == (expect or None)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_mp_symmetric_under_inversion(seed):
    _, _, systems, links = random_chain(random.Random(seed), 1)
    w = check_mp(systems[0], systems[1], links[0])
    v = check_mp(systems[1], systems[0], links[0].inverse())
    assert (w is None) == (v is None)
    if w:
        assert (v.forward_behavior, v.backward_behavior) == (w.backward_behavior, w.forward_behavior)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_chain_against_exhaustive(seed, t):
    evals, maps, systems, links = random_chain(random.Random(seed), t)
    w = check_chain_mp(systems, links)
    expect = chain_exhaustive(evals, maps)
    assert (w and (w.forward_behavior, w.backward_behavior)) == (expect or None)
    if w:
        assert verify_witness(systems, links, w)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_two_system_chain_is_pairwise(seed):
    _, _, systems, links = random_chain(random.Random(seed), 1)
    w = check_chain_mp(systems, links)
    v = check_mp(systems[0], systems[1], links[0])
    assert (w and (w.forward_behavior, w.backward_behavior)) == (v and (v.forward_behavior, v.backward_behavior))


def test_chain3_fixture(data_dir):
    systems, links = load_model(data_dir / "chain3.json").chain()
    w = check_chain_mp(systems, links)
    assert (w.forward_behavior, w.backward_behavior) == ("dung", "canopy")


def test_negative_middle_breaks_chain():
    systems = [
        BehaviorSystem("a", {"x": 0}),
        BehaviorSystem("b", {"y": -1}),
        BehaviorSystem("c", {"z": 1}),
    ]
    links = [SocialAction("a", "b", {"x": "y"}), SocialAction("b", "c", {"y": "z"})]
    assert check_chain_mp(systems, links) is None
    # the pairwise ends alone would pass if they were adjacent
    assert check_mp(BehaviorSystem("a", {"x": 1}), BehaviorSystem("c", {"z": 1}), SocialAction("a", "c", {"x": "z"}))


def test_chain_shape_errors():
    a = BehaviorSystem("a", {"x": 1})
    with pytest.raises(MutualismError):
        check_chain_mp([a], [])
    with pytest.raises(MutualismError):
        check_chain_mp([a, a], [])


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_composites(seed, t):
    _, maps, _, links = random_chain(random.Random(seed), t)
    first = sorted(maps[0])
    assert compose_sigma(links, 0) == {b: b for b in first}
    for i in range(1, t + 1):
        fwd = compose_sigma(links, i)
        back = compose_sigma(links, -i)
        assert all(back[fwd[b]] == b for b in first)
        # manual walk
        for b in first:
            img = b
            for m in maps[:i]:
                img = m[img]
            assert fwd[b] == img
    full = compose_sigma(links, t)
    assert backward_composite(links, t) == {v: k for k, v in full.items()}
    with pytest.raises(MutualismError):
        compose_sigma(links, t + 1)
    with pytest.raises(MutualismError):
        backward_composite(links, -1)


def test_parse_model_errors():
    with pytest.raises(MutualismError, match="malformed"):
        parse_model({"systems": [{"id": "a"}]})
    with pytest.raises(MutualismError, match="unknown system"):
        parse_model({"systems": [{"id": "a", "eval": {"x": 1}}],
                     "actions": [{"domain": "a", "range": "b", "map": {"x": "y"}}]})
    with pytest.raises(MutualismError, match="no evaluation"):
        parse_model({"systems": [{"id": "a", "behaviors": ["x", "y"], "eval": {"x": 1}}]})


def test_model_chain_uses_inverse_links():
    model = parse_model({
        "systems": [{"id": "a", "eval": {"x": 1}}, {"id": "b", "eval": {"y": 1}}],
        "actions": [{"domain": "b", "range": "a", "map": {"y": "x"}}],
    })
    _, links = model.chain()
    assert links[0].domain == "a" and links[0]("x") == "y"
    with pytest.raises(MutualismError):
        model.action("a", "c")


def test_translucence_same_soc(building):
    notes = translucence_set(building, ["dave", "accelerometer1"])
    assert [(n.target, n.relay) for n in notes] == [("accelerometer1", False), ("dave", False)]


def test_translucence_across_rooms(building):
    notes = translucence_set(building, ["bob", "carol"])
    relays = [n for n in notes if n.relay]
    assert {(n.target, n.via) for n in relays} == {("sce.room1.1", "sce.house1"), ("sce.room1.2", "sce.house1")}
    assert len(notes) == 4


def test_translucence_across_houses(building):
    notes = translucence_set(building, ["bob", "erin"])
    # four edges up to the building plus two direct notices
    assert sum(n.relay for n in notes) == 4 and len(notes) == 6


def test_translucence_edges(building):
    assert translucence_set(building, []) == []
    with pytest.raises(MutualismError):
        translucence_set(building, ["nobody"])
    notes = translucence_set(building, ["house1", "alice"])
    assert len(notes) == 2 and not any(n.relay for n in notes)
