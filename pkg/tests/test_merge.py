import random
from functools import lru_cache

import pytest
from hypothesis import given, settings, strategies as st

from metamorph import conformance as cf
from metamorph import engine as eng
from metamorph import merge as mg
from metamorph import verify as vf
from metamorph.field import Field, LocalFrame, WorldState, observe
from metamorph.shapes import embed

F = Field(20, 16)


@lru_cache(maxsize=None)
def all_pairs():
    return list(vf.merge_pairs())


def two(catalog, la, fa, lb, fb):
    return WorldState(F, embed(catalog.shape(la), fa), embed(catalog.shape(lb), fb))


class TestPartition:
    def test_two_systems(self, catalog):
        w = two(catalog, 3, LocalFrame((5, 5), 0), 10, LocalFrame((10, 5), 0))
        p = min(w.r1)
        own, other = mg.partition_observation(observe(w, p, 0, mg.RANGE))
        shift = lambda cs: frozenset((x - p[0], y - p[1]) for x, y in cs)
        assert own == shift(w.r1) and other == shift(w.r2)

    def test_touching_is_one_component(self):
        w = WorldState(F, {(5, 5), (5, 6), (5, 7), (5, 8), (6, 8)}, {(6, 5), (7, 5), (8, 5), (9, 5), (9, 6)})
        own, other = mg.partition_observation(observe(w, (5, 5), 0, mg.RANGE))
        assert len(own) == 10 and not other
        assert mg.decide_merge(observe(w, (5, 5), 0, mg.RANGE)).moves is False

    def test_three_components(self):
        w = WorldState(F, {(5, 5), (5, 6), (5, 7), (5, 8), (5, 9)}, {(7, 5), (8, 5), (10, 5), (11, 5), (12, 5)})
        with pytest.raises(mg.MergeError):
            mg.partition_observation(observe(w, (5, 5), 0, mg.RANGE))

    def test_needs_all_ten(self):
        w = WorldState(F, {(0, 0), (0, 1), (0, 2), (1, 0), (2, 0)}, {(12, 12), (13, 12), (14, 12), (14, 13), (13, 14)})
        with pytest.raises(mg.MergeError):
            mg.partition_observation(observe(w, (0, 0), 0, mg.RANGE))


class TestRoles:
    def test_lower_label_is_smaller(self, catalog):
        w = two(catalog, 3, LocalFrame((5, 5), 0), 10, LocalFrame((10, 6), 1))
        roles = mg.assign_roles(observe(w, min(w.r1), 0, mg.RANGE), catalog)
        assert roles.relation is mg.Relation.DIFFERENT_LABELS
        assert roles.smaller == 0 and roles.larger == 1
        roles = mg.assign_roles(observe(w, min(w.r2), 0, mg.RANGE), catalog)
        assert roles.smaller == 1 and roles.larger == 0

    def test_same_label_view_decides(self, catalog):
        w = two(catalog, 5, LocalFrame((5, 5), 0), 5, LocalFrame((10, 6), 0))
        roles = mg.assign_roles(observe(w, min(w.r1), 0, mg.RANGE), catalog)
        assert roles.relation is mg.Relation.SAME_LABEL

    def test_half_turn_is_symmetric(self, catalog):
        a = embed(catalog.shape(5), LocalFrame((5, 5), 0))
        b = frozenset((16 - x, 14 - y) for x, y in a)
        w = WorldState(F, a, b)
        roles = mg.assign_roles(observe(w, min(a), 0, mg.RANGE), catalog)
        assert roles.relation is mg.Relation.SYMMETRIC

    def test_roles_agree_across_modules(self, catalog):
        w = two(catalog, 7, LocalFrame((4, 4), 2), 12, LocalFrame((9, 7), 3))
        seen = set()
        for i, p in enumerate(sorted(w.r1)):
            r = mg.assign_roles(observe(w, p, i % 4, mg.RANGE), catalog)
            seen.add((r.relation, r.larger, r.smaller))
        assert len(seen) == 1


class TestGeometry:
    def test_x_overlapping(self):
        f = LocalFrame()
        a = frozenset({(0, 0), (2, 1)})
        assert not mg.x_overlapping(a, frozenset({(5, 0), (7, 2)}), f)
        assert mg.x_overlapping(a, frozenset({(2, 5), (4, 6)}), f)
        assert mg.x_overlapping(a, a, f)
        # in a quarter-turned frame the x axis is the world y axis
        assert not mg.x_overlapping(a, frozenset({(2, 5), (4, 6)}), LocalFrame((0, 0), 1))

    def test_merged(self):
        assert not mg.merged(WorldState(F, {(0, 0)}, {(5, 5)}))
        assert mg.merged(WorldState(F, {(0, 0)}, {(1, 0)}))
        assert mg.merged(WorldState(F, {(0, 0), (0, 1)}, set()))


class TestTables:
    def test_no_problems(self, catalog):
        assert cf.merge_problems(catalog) == []

    @pytest.mark.parametrize("label", range(1, 18))
    def test_increase_reaches_anchor(self, catalog, label):
        chain = cf.transform_chain(catalog, label, "increase")
        assert chain.labels[-1] == 18
        assert len(chain.labels) <= 17
        assert all(b > a for a, b in zip((label,) + chain.labels, chain.labels))
        assert chain.excursions <= 1 and chain.overshoot <= 1

    @pytest.mark.parametrize("label", range(3, 19))
    def test_decrease_reaches_traveler(self, catalog, label):
        chain = cf.transform_chain(catalog, label, "decrease")
        assert chain.labels[-1] in (1, 2)
        assert all(b < a for a, b in zip((label,) + chain.labels, chain.labels))
        assert 18 not in chain.labels
        assert chain.excursions <= 1 and chain.overshoot <= 1

    @pytest.mark.parametrize("label", [1, 2])
    def test_traveler_walks(self, catalog, label):
        plus, _, p1 = cf.traveler_cycle(catalog, label, "plus")
        minus, _, p2 = cf.traveler_cycle(catalog, label, "minus")
        assert p1 == p2 == []
        assert plus[0] > 0 and minus[0] < 0 and plus[1] == minus[1] == 0

    def test_exceptions_are_legal(self, catalog):
        assert catalog.merge.exceptions
        assert cf.exception_problems(catalog) == []


class TestRuns:
    def test_different_labels_walkthrough(self, catalog):
        """The larger system becomes the anchor, the smaller a traveler that walks over and joins."""
        a = embed(catalog.shape(3), LocalFrame((8, 4), 0))
        b = embed(catalog.shape(10), LocalFrame((3, 6), 0))
        w0 = WorldState(F, a, b)
        res = eng.run(w0, eng.MERGE, mg.merged, 500, catalog=catalog)
        assert res.solved
        assert mg.merged(res.final)
        labels = [(catalog.label_of(map(tuple, r["r1"])), catalog.label_of(map(tuple, r["r2"])))
                  for r in res.trace.records if not mg.merged(WorldState(F, map(tuple, r["r1"]), map(tuple, r["r2"])))]
        # the second system climbs to the anchor, the first only starts moving once it sees it
        assert any(lb == 18 for _, lb in labels)
        first_anchor = next(i for i, (_, lb) in enumerate(labels) if lb == 18)
        assert all(la == 3 for la, _ in labels[:first_anchor])
        assert {la for la, _ in labels[first_anchor:]} & {1, 2}
        assert res.reach["merge"] <= mg.RANGE

    def test_already_merged_is_solved_at_once(self, catalog):
        w = WorldState(F, {(5, 5), (5, 6), (5, 7), (5, 8), (6, 8)}, {(6, 5), (7, 5), (8, 5), (9, 5), (9, 6)})
        res = eng.run(w, eng.MERGE, mg.merged, 500, catalog=catalog)
        assert res.solved and res.ticks == 0

    def test_symmetric_start_merges(self, catalog):
        a = embed(catalog.shape(5), LocalFrame((5, 5), 0))
        b = frozenset((16 - x, 14 - y) for x, y in a)
        res = eng.run(WorldState(F, a, b), eng.MERGE, mg.merged, 500, catalog=catalog)
        assert res.solved

    def test_module_path_matches_system_path(self, catalog):
        rng = random.Random(3)
        for a, b, _ in rng.sample(all_pairs(), 60):
            w0 = vf.merge_world(a, b)
            slow = eng.run(w0, eng.MERGE, mg.merged, 500, catalog=catalog)
            fast = eng.run(w0, eng.MERGE, mg.merged, 500, catalog=catalog, fast=True)
            assert slow.trace.records == fast.trace.records
            assert slow.reach == fast.reach
            assert slow.solved


@settings(max_examples=60)
@given(st.randoms(use_true_random=False))
def test_roles_are_stable(rng):
    """A system that starts larger never becomes the smaller one later in the run."""
    from metamorph.catalog import load_catalog

    cat = load_catalog()
    pairs = all_pairs()
    a, b, _ = pairs[rng.randrange(len(pairs))]
    w0 = vf.merge_world(a, b)
    res = eng.run(w0, eng.MERGE, mg.merged, 500, fast=True, catalog=cat)
    assert res.solved
    pol = mg.policy(cat)
    first = None
    for r in res.trace.records:
        r1, r2 = frozenset(map(tuple, r["r1"])), frozenset(map(tuple, r["r2"]))
        if mg.merged(WorldState(w0.field, r1, r2)):
            break
        roles = pol.roles(r1, r2)
        if roles.relation is mg.Relation.SYMMETRIC:
            continue
        if first is None:
            first = roles.larger
        assert roles.larger == first
