import pytest
from hypothesis import given, settings, strategies as st

from metamorph import engine as eng
from metamorph import rendezvous as rv
from metamorph import verify as vf
from metamorph.field import Field, LocalFrame, WorldState, observe
from metamorph.kinematics import apply_step, validate_step
from metamorph.recovery import find_case, follow
from metamorph.shapes import embed

OPEN = Field(30, 20)


def phase_cells(catalog, move, phase, frame):
    return frozenset(frame.to_world(c) for c in catalog.rendezvous.gaits[move].phases[phase].cells)


def recognize_all(w, cells, catalog):
    return {rv.recognize(observe(w, p, (p[0] + p[1]) % 4, rv.RANGE), catalog)[:2] for p in cells}


class TestRecognize:
    def test_open_field_m_ur_phase_0(self, catalog):
        cells = phase_cells(catalog, "M_UR", 0, LocalFrame((14, 9), 0))
        w = WorldState(OPEN, cells, frozenset())
        states = {(s.move, s.phase) for s in (rv.recognize(observe(w, p, 0, rv.RANGE), catalog) for p in cells)}
        assert states == {("M_UR", 0)}

    def test_half_turn_gives_same_move(self, catalog):
        a = phase_cells(catalog, "M_UR", 0, LocalFrame((14, 9), 0))
        b = phase_cells(catalog, "M_UR", 0, LocalFrame((16, 11), 2))
        wa, wb = WorldState(OPEN, a, frozenset()), WorldState(OPEN, b, frozenset())
        for p in a:
            sa = rv.recognize(observe(wa, p, 0, rv.RANGE), catalog)
            assert (sa.move, sa.phase) == ("M_UR", 0)
        for p in b:
            sb = rv.recognize(observe(wb, p, 0, rv.RANGE), catalog)
            assert (sb.move, sb.phase) == ("M_UR", 0)
            # seen from a half-turned frame the system looks exactly like the first one
            sb2 = rv.recognize(observe(wb, p, 2, rv.RANGE), catalog)
            assert sb2.frame.rotation == 0

    def test_symmetric_rejected(self, catalog):
        bar = frozenset((10 + i, 5) for i in range(5))
        w = WorldState(OPEN, bar, frozenset())
        st_ = rv.recognize(observe(w, (12, 5), 0, rv.RANGE), catalog)
        assert st_.rejected
        with pytest.raises(rv.Unrecognized):
            rv.decide(observe(w, (12, 5), 0, rv.RANGE), catalog)

    def test_reads_within_range(self, catalog):
        for s in catalog.shapes:
            if s.symmetric:
                continue
            for x, y in ((0, 0), (5, 3), (12, 6)):
                cells = embed(s, LocalFrame((x, y), 0))
                cells = frozenset(c for c in cells)
                if not all(OPEN.inside(c) for c in cells):
                    continue
                w = WorldState(OPEN, cells, frozenset())
                for p in cells:
                    o = observe(w, p, 0, rv.RANGE)
                    rv.decide(o, catalog)
                    assert o.reach <= rv.RANGE
                d = rv.system_decision(cells, OPEN, catalog)
                assert d.reach <= rv.RANGE


class TestDecide:
    def first_turn(self, name, catalog):
        f = Field(16, 10)
        a = find_case(name, f, catalog)
        return follow(a.start, f, catalog)[1]

    def test_correct_angle_at_long_wall_turns_tw(self, catalog):
        assert self.first_turn("C1", catalog) == "T_TW"

    def test_side_wall_from_m_ll_turns_lw(self, catalog):
        assert self.first_turn("C4", catalog) == "T_LW"

    def test_wrong_angle_at_long_wall_turns_rw(self, catalog):
        assert self.first_turn("W1", catalog) == "T_RW"

    def test_module_decisions_match_system_decision(self, catalog):
        for w0 in vf.sampled_scenarios(40, 5, ((12, 8), (24, 14)), catalog):
            for cells in (w0.r1, w0.r2):
                d = rv.system_decision(cells, w0.field, catalog)
                got = []
                for i, p in enumerate(sorted(cells)):
                    a = rv.decide(observe(w0, p, i % 4, rv.RANGE), catalog)
                    if a.moves:
                        from metamorph.field import rotate

                        got.append(a.transformed(lambda q: (p[0] + rotate(q, i % 4)[0], p[1] + rotate(q, i % 4)[1])))
                assert sorted(got, key=lambda a: a.mover) == list(d.actions)


class TestPathA:
    def test_geometry(self):
        f = Field(16, 10)
        path = rv.path_A(f)
        assert path.start == (0, 0)
        assert path.end == (15, 9)
        assert path.acute_corners == ((0, 0), (15, 9))
        assert path.traversals()[0] == ((0, 0), (9, 9))
        assert path.traversals()[-1][1] == (15, 9)
        assert path.mirrored() == ((15, 0), (0, 9))

    def test_area_is_parallelogram(self):
        f = Field(16, 10)
        path = rv.path_A(f)
        assert path.in_area((0, 0)) and path.in_area((15, 9)) and path.in_area((6, 0))
        assert not path.in_area((0, 9)) and not path.in_area((15, 0))


class TestSwitch:
    def test_inside_one_square(self):
        w = WorldState(OPEN, {(3, 3), (4, 3)}, {(8, 9)})
        assert rv.rendezvous_done(w)

    def test_far_apart(self):
        w = WorldState(OPEN, {(0, 0)}, {(20, 0)})
        assert not rv.rendezvous_done(w)

    def test_exactly_eight(self):
        assert rv.rendezvous_done(WorldState(OPEN, {(3, 3)}, {(10, 10)}))
        assert not rv.rendezvous_done(WorldState(OPEN, {(3, 3)}, {(11, 10)}))


def lone_cycle(field, catalog):
    """Run a lone system from the southwest corner until a configuration repeats.

    Returns the number of ticks before the cycle starts and the configurations on the cycle.
    """
    w = WorldState(field, phase_cells(catalog, "M_UR", 0, LocalFrame((0, 0), 0)), frozenset())
    seen, hist = {}, []
    while w.r1 not in seen:
        seen[w.r1] = len(hist)
        hist.append(w.r1)
        d = rv.system_decision(w.r1, field, catalog)
        w = apply_step(w, validate_step(w, d.actions, ()))
    return seen[w.r1], hist[seen[w.r1]:]


class TestLoneSystem:
    @pytest.mark.parametrize("size", vf.REFERENCE_FIELDS)
    def test_cycle_visits_both_acute_corners(self, catalog, size):
        """A system alone settles into a periodic walk along path A, forward and back."""
        f = Field(*size)
        start, cycle = lone_cycle(f, catalog)
        assert start < 2 * (f.w + f.h)
        assert len(cycle) < 4 * f.w * f.h
        corners = {rv.moving_frame(c, f, catalog)[2].rotation for c in cycle if rv.at_acute_corner(c, f, catalog)}
        assert corners == {0, 2}
        moves = {rv.system_decision(c, f, catalog).move for c in cycle}
        assert {"M_UR", "M_LL"} <= moves


@settings(max_examples=40)
@given(st.integers(0, 10_000))
def test_rendezvous_steps_are_legal(seed):
    """Whatever the start, every emitted step validates and the reads stay within range 7."""
    w0 = vf.sampled_scenarios(1, seed, ((16, 10),))[0]
    res = eng.run(w0, eng.RENDEZVOUS, rv.rendezvous_done, 3000, fast=True, handover=True)
    assert res.outcome is eng.Outcome.SOLVED, res.detail
    assert res.reach["rendezvous"] <= rv.RANGE
