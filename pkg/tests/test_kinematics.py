import pytest
from hypothesis import given, settings, strategies as st

from metamorph.field import Field, GridError, WorldState, is_connected
from metamorph.kinematics import (
    CCW,
    CW,
    Action,
    StepError,
    apply_step,
    destination,
    legal_single_actions,
    noop,
    rotation,
    rotation_destination,
    slide,
    trajectory,
    validate_action,
    validate_step,
)

import oracles

F = Field(12, 8)


def reason(w, s1, s2=()):
    try:
        validate_step(w, s1, s2)
    except StepError as e:
        return e.reason
    return None


class TestGeometry:
    def test_quarter_turns(self):
        assert rotation_destination((0, 1), (0, 0), CW) == ((1, 0), (1, 1))
        assert rotation_destination((1, 0), (0, 0), CCW) == ((0, 1), (1, 1))

    @pytest.mark.parametrize("sense", [CW, CCW])
    @pytest.mark.parametrize("d", [(1, 0), (0, 1), (-1, 0), (0, -1)])
    def test_rotation_matches_rational_rotation(self, sense, d):
        pivot = (4, 4)
        mover = (pivot[0] + d[0], pivot[1] + d[1])
        dest, transit = rotation_destination(mover, pivot, sense)
        vx, vy = d
        # exact rotation of the mover's centre about the pivot's centre
        ex = (vy, -vx) if sense == CW else (-vy, vx)
        assert dest == (pivot[0] + ex[0], pivot[1] + ex[1])
        # the transit corner is diagonal to the pivot and side-adjacent to both ends
        assert abs(transit[0] - pivot[0]) == 1 and abs(transit[1] - pivot[1]) == 1
        assert oracles.raster_path(rotation(mover, pivot, sense)) == [transit, dest]

    def test_pivot_must_be_adjacent(self):
        with pytest.raises(GridError):
            rotation_destination((0, 0), (1, 1), CW)
        with pytest.raises(GridError):
            rotation((0, 0), (2, 0), CW)

    def test_malformed_slides(self):
        with pytest.raises(GridError):
            slide((0, 0), (1, 1))
        with pytest.raises(GridError):
            slide((0, 0), (1, 0), 0)

    def test_trajectories(self):
        assert trajectory(slide((2, 2), (1, 0), 3)) == ((3, 2), (4, 2), (5, 2))
        assert trajectory(noop((2, 2))) == ()
        assert destination(slide((2, 2), (0, -1), 2)) == (2, 0)

    def test_json_round_trip(self):
        for a in (rotation((1, 1), (1, 2), CW), slide((3, 3), (-1, 0), 2), noop((0, 0))):
            assert Action.from_json(a.to_json()) == a


class TestValidateAction:
    def test_rotation_about_own_module(self):
        w = WorldState(F, {(3, 3), (4, 3)}, set())
        assert validate_action(w, rotation((4, 3), (3, 3), CCW)) == ((4, 4), (3, 4))

    def test_two_slide_along_three_guides(self):
        w = WorldState(F, {(3, 3), (3, 4), (4, 4), (5, 4)}, set())
        assert validate_action(w, slide((3, 3), (1, 0), 2)) == ((4, 3), (5, 3))

    def test_slide_with_short_guide_line(self):
        w = WorldState(F, {(3, 3), (3, 4), (4, 4)}, set())
        with pytest.raises(StepError) as e:
            validate_action(w, slide((3, 3), (1, 0), 2))
        assert e.value.reason == StepError.SUPPORT

    def test_guides_on_mixed_sides_rejected(self):
        w = WorldState(F, {(3, 3), (3, 4), (4, 2), (5, 2), (4, 4), (4, 5)}, set())
        # track (3,3)->(5,3): guides (3,4),(4,4) above and (4,2),(5,2) below, never one full line
        with pytest.raises(StepError) as e:
            validate_action(w, slide((3, 3), (1, 0), 2))
        assert e.value.reason == StepError.SUPPORT

    def test_walls_block(self):
        w = WorldState(F, {(0, 0), (1, 0)}, set())
        with pytest.raises(StepError) as e:
            validate_action(w, rotation((0, 0), (1, 0), CCW))
        assert e.value.reason == StepError.BLOCKED

    def test_foreign_pivot_rejected(self):
        w = WorldState(F, {(3, 3)}, {(4, 3)})
        with pytest.raises(StepError) as e:
            validate_action(w, rotation((3, 3), (4, 3), CW))
        assert e.value.reason == StepError.SUPPORT


class TestValidateStep:
    def test_all_noop_is_identity(self):
        w = WorldState(F, {(1, 1), (2, 1)}, {(6, 6), (7, 6)})
        plan = validate_step(w, [noop((1, 1))], [noop((6, 6))])
        assert plan.is_identity
        assert apply_step(w, plan) == w

    def test_single_rotation(self):
        w = WorldState(F, {(3, 3), (4, 3), (5, 3)}, set())
        plan = validate_step(w, [rotation((5, 3), (4, 3), CCW)])
        assert apply_step(w, plan).r1 == {(3, 3), (4, 3), (4, 4)}

    def test_overlap_across_systems(self):
        w = WorldState(F, {(3, 2), (3, 3)}, {(5, 2), (5, 3)})
        left = rotation((3, 3), (3, 2), CW)
        right = rotation((5, 3), (5, 2), CCW)
        assert trajectory(left) == ((4, 3), (4, 2)) == trajectory(right)
        assert reason(w, [left]) is None and reason(w, [], [right]) is None
        assert reason(w, [left], [right]) == StepError.OVERLAP

    def test_backbone(self):
        w = WorldState(F, {(1, 1), (2, 1), (3, 1)}, set())
        # the middle module turns up about its west neighbour; the two ends lose each other
        assert reason(w, [rotation((2, 1), (1, 1), CCW)]) == StepError.BACKBONE
        assert reason(w, [rotation((3, 1), (2, 1), CCW)]) is None

    def test_two_actions_for_one_module(self):
        w = WorldState(F, {(3, 3), (4, 3)}, set())
        assert reason(w, [slide((3, 3), (0, 1)), noop((3, 3))]) == StepError.MALFORMED
        assert reason(w, [], [noop((3, 3))]) == StepError.MALFORMED

    def test_distinct_destinations(self):
        # two ends of a bar turn onto the same cell above its middle
        w = WorldState(F, {(2, 3), (3, 3), (4, 3)}, set())
        s = [rotation((2, 3), (3, 3), CW), rotation((4, 3), (3, 3), CCW)]
        assert destination(s[0]) == destination(s[1]) == (3, 4)
        assert reason(w, s) == StepError.OVERLAP


class TestOracle:
    """The brute-force rasterising oracle against ``validate_step``."""

    def test_single_actions_exhaustive(self):
        checked, legal, bad = oracles.single_action_sweep()
        assert bad == []
        assert checked > 300_000 and legal > 10_000

    def test_pair_sample(self):
        checked, legal, bad = oracles.pair_sweep(10_000, seed=7)
        assert bad == []
        assert legal > 1000

    def test_legal_single_actions_are_legal(self):
        for cells in oracles.window_placements()[::37]:
            w = WorldState(Field(*oracles.WINDOW_FIELD), cells, frozenset())
            for a in legal_single_actions(cells, field=w.field):
                ok = oracles.oracle_step(w.field.w, w.field.h, cells, frozenset(), [a], [])
                # the helper does not check the backbone, so it may list more than the oracle keeps
                if ok:
                    validate_step(w, [a])


pent = st.sampled_from(oracles.window_placements())


@settings(max_examples=300)
@given(pent, st.data())
def test_validated_plans_keep_invariants(cells, data):
    w = WorldState(Field(*oracles.WINDOW_FIELD), cells, frozenset())
    acts = oracles.all_single_actions(cells)
    picks = data.draw(st.lists(st.sampled_from(acts), min_size=1, max_size=3, unique_by=lambda a: a.mover))
    try:
        plan = validate_step(w, picks)
    except StepError:
        return
    after = apply_step(w, plan)
    assert len(after.r1) == 5 and is_connected(after.r1)
    assert not after.r1 & after.r2


@settings(max_examples=300)
@given(pent, st.data())
def test_backbone_verdict_matches_connectivity(cells, data):
    w = WorldState(Field(*oracles.WINDOW_FIELD), cells, frozenset())
    movers = data.draw(st.sets(st.sampled_from(sorted(cells)), min_size=1, max_size=3))
    # every legal-looking single action of each mover, taken together
    picks = []
    for m in sorted(movers):
        options = [a for a in oracles.all_single_actions(cells) if a.mover == m]
        picks.append(data.draw(st.sampled_from(options)))
    backbone = cells - movers
    try:
        validate_step(w, picks)
    except StepError as e:
        if e.reason == StepError.BACKBONE:
            assert not is_connected(backbone)
        return
    assert is_connected(backbone)


@settings(max_examples=300)
@given(pent, st.data())
def test_connected_backbone_keeps_system_connected(cells, data):
    """Pivots and guides belong to the backbone, so each destination touches it."""
    w = WorldState(Field(*oracles.WINDOW_FIELD), cells, frozenset())
    acts = oracles.all_single_actions(cells)
    picks = data.draw(st.lists(st.sampled_from(acts), min_size=1, max_size=3, unique_by=lambda a: a.mover))
    try:
        validate_step(w, picks)
    except StepError as e:
        assert e.reason != StepError.CONNECTIVITY
