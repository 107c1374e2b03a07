import json

import pytest
from hypothesis import given, strategies as st

from metamorph.catalog import (
    Catalog,
    classify,
    compare,
    compute_view,
    enumerate_shapes,
    export_catalog,
    min_view_frame,
    read_catalog,
    reflection_classes,
    symmetric_shapes,
)
from metamorph.field import GridError, LocalFrame, rotate, rotate_cells
from metamorph.shapes import GREATER, LESS, TIE, canonical_form, embed, free_form, normalize

import oracles


class TestEnumeration:
    def test_counts(self):
        shapes = enumerate_shapes()
        assert len(shapes) == 18
        assert len(symmetric_shapes()) == 4
        assert reflection_classes() == 12

    def test_against_independent_enumeration(self):
        one_sided, free, symmetric = oracles.pentomino_classes()
        assert {canonical_form(s.cells) for s in enumerate_shapes()} == {canonical_form(c) for c in one_sided}
        assert len(free) == 12 and symmetric == 4

    def test_symmetric_are_bar_plus_and_the_s_pair(self):
        bar = [(i, 0) for i in range(5)]
        plus = [(1, 0), (0, 1), (1, 1), (2, 1), (1, 2)]
        s_shape = [(0, 0), (1, 0), (1, 1), (1, 2), (2, 2)]
        z_shape = [(x, -y) for x, y in s_shape]
        want = {canonical_form(c) for c in (bar, plus, s_shape, z_shape)}
        assert {canonical_form(s.cells) for s in symmetric_shapes()} == want
        assert sorted(len(s.symmetries) for s in symmetric_shapes()) == [1, 1, 1, 3]

    def test_labels_and_roles(self, catalog):
        assert [s.label for s in catalog.shapes] == list(range(1, 19))
        assert [s.label for s in catalog.with_role("anchor")] == [18]
        assert sorted(s.label for s in catalog.with_role("traveler")) == [1, 2]
        assert catalog.shape(18).box == (3, 3)

    def test_chiral_pairs_have_distinct_labels(self, catalog):
        by_free = {}
        for s in catalog.shapes:
            by_free.setdefault(free_form(s.cells), []).append(s.label)
        pairs = [v for v in by_free.values() if len(v) == 2]
        assert len(pairs) == 6
        for s in catalog.shapes:
            mirrored = [(-x, y) for x, y in s.cells]
            other = catalog.shape_of(normalize(mirrored))
            if len(by_free[free_form(s.cells)]) == 2:
                assert other.label != s.label
            else:
                assert other.label == s.label


class TestExport:
    def test_byte_stable(self, tmp_path, catalog):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        export_catalog(a, catalog)
        export_catalog(b, read_catalog(a))
        assert a.read_bytes() == b.read_bytes()

    def test_round_trip(self, catalog):
        again = Catalog.from_json(json.loads(catalog.dumps()))
        assert again.dumps() == catalog.dumps()
        assert again.version == catalog.version

    def test_contents(self, tmp_path, catalog):
        p = tmp_path / "c.json"
        export_catalog(p, catalog)
        data = json.loads(p.read_text())
        assert len(data["shapes"]) == 18
        assert sum(bool(s["symmetries"]) for s in data["shapes"]) == 4


class TestClassify:
    def test_embed_then_classify_exhaustive(self, catalog):
        for s in catalog.shapes:
            for r in range(4):
                for x in range(9):
                    for y in range(9):
                        cells = embed(s, LocalFrame((x, y), r))
                        assert classify(cells).label == s.label

    def test_canonical_cells_get_identity_frame(self, catalog):
        for s in catalog.shapes:
            p = classify(s.cells)
            assert p.label == s.label
            assert embed(s, p.frame) == frozenset(s.cells)
            if not s.symmetric:
                assert p.frame == LocalFrame((0, 0), 0)

    def test_rejects(self):
        with pytest.raises(GridError):
            classify({(0, 0), (1, 0), (2, 0), (3, 0)})
        with pytest.raises(GridError):
            classify({(0, 0), (1, 0), (2, 0), (3, 0), (5, 0)})


class TestViews:
    def test_alone_view_is_sorted_canonical_cells(self, catalog):
        for s in catalog.shapes:
            if s.symmetric:
                continue
            assert compute_view(LocalFrame(), s.cells) == tuple(sorted(s.cells))

    def test_sorted_by_x_then_y(self):
        v = compute_view(LocalFrame((0, 0), 0), [(2, 1), (0, 3), (0, 1), (2, 0)])
        assert v == ((0, 1), (0, 3), (2, 0), (2, 1))

    def test_mirror_placed_pair_has_equal_views(self, catalog):
        s = catalog.shape(3)
        a = embed(s, LocalFrame((1, 1), 0))
        # half-turn about the centre of the 10x10 square
        b = frozenset((9 - x, 9 - y) for x, y in a)
        va = min_view_frame(a, a | b)[1]
        vb = min_view_frame(b, a | b)[1]
        assert va == vb

    def test_symmetric_shape_picks_unique_minimiser(self, catalog):
        s = next(s for s in catalog.shapes if s.symmetries == (2,))
        cells = embed(s, LocalFrame((3, 3), 0))
        other = {(9, 3)}
        views = sorted(compute_view(p.frame, cells | other) for p in catalog.placements(cells))
        assert len(views) == 2 and views[0] != views[1]
        assert min_view_frame(cells, cells | other)[1] == views[0]

    def test_compare(self):
        assert compare((3, ()), (10, ())) == LESS
        assert compare((4, ((0, 0),)), (4, ((0, 1),))) == LESS
        assert compare((4, ((0, 1),)), (4, ((0, 0),))) == GREATER
        assert compare((4, ((0, 1),)), (4, ((0, 1),))) == TIE


@given(st.integers(1, 18), st.integers(0, 3), st.integers(-5, 5), st.integers(-5, 5), st.integers(0, 3))
def test_view_equivariant(label, r, ox, oy, turn):
    """Turning the world together with the frame leaves the view unchanged."""
    from metamorph.catalog import load_catalog

    s = load_catalog().shape(label)
    frame = LocalFrame((ox, oy), r)
    cells = embed(s, frame)
    turned = rotate_cells(cells, turn)
    tframe = LocalFrame(rotate((ox, oy), turn), (r + turn) % 4)
    assert compute_view(frame, cells) == compute_view(tframe, turned)


@given(st.integers(1, 18), st.integers(0, 3), st.integers(0, 6), st.integers(0, 6), st.data())
def test_label_same_for_all_modules(label, r, x, y, data):
    """Every module of one system computes the same (label, view) from what it sees."""
    from metamorph.catalog import load_catalog
    from metamorph.merge import policy

    cat = load_catalog()
    own = embed(cat.shape(label), LocalFrame((x + 2, y + 2), r))
    other_label = data.draw(st.integers(1, 18))
    other = embed(cat.shape(other_label), LocalFrame((x + 14, y + 2), data.draw(st.integers(0, 3))))
    p = policy(cat)
    results = set()
    for m in own:
        # each module works in coordinates centred on itself
        shift = lambda cs: frozenset((cx - m[0], cy - m[1]) for cx, cy in cs)
        lab, view, _ = p.label_view(shift(own), shift(own | other))
        results.add((lab, view))
    assert len(results) == 1
