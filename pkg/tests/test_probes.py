from metamorph import merge as mg
from metamorph import probes
from metamorph import rendezvous as rv
from metamorph import verify as vf
from metamorph.field import Field, WorldState, observe
from metamorph.kinematics import Action

from conftest import read_fixture


def cells(rows):
    return frozenset(map(tuple, rows))


class TestRendezvousAmbiguity:
    """At range 6 a module cannot tell whether the switch square already holds both systems."""

    def test_fixture_observations_agree_but_actions_differ(self, catalog):
        d = read_fixture("k6_ambiguity.json")
        f = Field(*d["field"])
        w1 = WorldState(f, cells(d["first"][0]), cells(d["first"][1]))
        w2 = WorldState(f, cells(d["second"][0]), cells(d["second"][1]))
        pos = tuple(d["module"])
        assert d["k"] == rv.RANGE - 1
        assert observe(w1, pos, 0, d["k"]) == observe(w2, pos, 0, d["k"])
        a1 = probes.required_action(w1, pos, catalog)
        a2 = probes.required_action(w2, pos, catalog)
        assert a1 != a2
        assert a1 == Action.from_json(d["action_first"]) and a2 == Action.from_json(d["action_second"])
        assert rv.rendezvous_done(w1) and not rv.rendezvous_done(w2)

    def test_range_seven_separates_them(self):
        d = read_fixture("k6_ambiguity.json")
        f = Field(*d["field"])
        w1 = WorldState(f, cells(d["first"][0]), cells(d["first"][1]))
        w2 = WorldState(f, cells(d["second"][0]), cells(d["second"][1]))
        assert observe(w1, tuple(d["module"]), 0, rv.RANGE) != observe(w2, tuple(d["module"]), 0, rv.RANGE)

    def test_search_reproduces_fixture(self, catalog):
        d = read_fixture("k6_ambiguity.json")
        amb = probes.rendezvous_ambiguity(Field(*d["field"]), catalog=catalog, samples=50)
        assert amb is not None
        assert probes.ambiguity_to_json(amb) == d

    def test_both_worlds_are_valid_starts(self, catalog):
        d = read_fixture("k6_ambiguity.json")
        for key in ("first", "second"):
            for side in d[key]:
                assert not catalog.shape_of(cells(side)).symmetric


class TestMergeBlindSpot:
    """A transformation leaving the 8x8 box by one cell puts some module out of range 7."""

    def test_fixture(self, catalog):
        d = read_fixture("k7_blind_spot.json")
        f = vf.merge_field()
        state = (cells(d["state"][0]), cells(d["state"][1]))
        module = tuple(d["module"])
        assert max(d["box"]) == vf.MERGE_BOX + 1
        assert d["distance"] > mg.RANGE - 2
        assert not probes.sees_all(state, f, module, mg.RANGE - 2)
        assert probes.sees_all(state, f, module, d["distance"])
        assert probes.sees_all(state, f, module, mg.RANGE)

    def test_start_fits_the_box(self):
        d = read_fixture("k7_blind_spot.json")
        start = cells(d["a"]) | cells(d["b"])
        xs = [x for x, _ in start]
        ys = [y for _, y in start]
        assert max(xs) - min(xs) + 1 == vf.MERGE_BOX and max(ys) - min(ys) + 1 == vf.MERGE_BOX

    def test_search_reproduces_fixture(self, catalog):
        spot = probes.merge_blind_spot(catalog=catalog)
        assert spot is not None
        assert probes.blind_spot_to_json(spot) == read_fixture("k7_blind_spot.json")
