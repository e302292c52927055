from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from handshape.segmentation import (
    Contour,
    abs_diff,
    fill_region,
    find_contours,
    largest_region,
    regions,
    segment,
    SegmentConfig,
    threshold_binary,
)

NEIGHBOURS = [(dx, dy) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dx, dy) != (0, 0)]


def flood_components(fg):
    """8-connected components by BFS; returns pixel sets in raster order of their first pixel."""
    h, w = fg.shape
    seen = np.zeros_like(fg, dtype=bool)
    comps = []
    for y in range(h):
        for x in range(w):
            if fg[y, x] and not seen[y, x]:
                comp = set()
                queue = deque([(x, y)])
                seen[y, x] = True
                while queue:
                    cx, cy = queue.popleft()
                    comp.add((cx, cy))
                    for dx, dy in NEIGHBOURS:
                        nx, ny = cx + dx, cy + dy
                        if 0 <= nx < w and 0 <= ny < h and fg[ny, nx] and not seen[ny, nx]:
                            seen[ny, nx] = True
                            queue.append((nx, ny))
                comps.append(comp)
    return comps


def mask_from(points, h, w):
    m = np.zeros((h, w), dtype=np.uint8)
    for x, y in points:
        m[y, x] = 255
    return m


@st.composite
def random_masks(draw, max_side=24):
    h = draw(st.integers(1, max_side))
    w = draw(st.integers(1, max_side))
    density = draw(st.floats(0.05, 0.8))
    seed = draw(st.integers(0, 2**32 - 1))
    r = np.random.default_rng(seed)
    return np.where(r.random((h, w)) < density, 255, 0).astype(np.uint8)


class TestDiffThreshold:
    def test_identical_frames(self, rng):
        b = rng.integers(0, 256, (4, 5)).astype(np.uint8)
        assert np.all(abs_diff(b, b) == 0)

    def test_symmetric_example(self):
        assert abs_diff(np.array([[200]], np.uint8), np.array([[50]], np.uint8)).tolist() == [[150]]
        assert abs_diff(np.array([[50]], np.uint8), np.array([[200]], np.uint8)).tolist() == [[150]]

    @given(arrays(np.uint8, (6, 7)), arrays(np.uint8, (6, 7)))
    def test_pixelwise_oracle_and_symmetry(self, b, f):
        expected = [[abs(int(x) - int(y)) for x, y in zip(rb, rf)] for rb, rf in zip(b.tolist(), f.tolist())]
        assert abs_diff(b, f).tolist() == expected
        assert np.array_equal(abs_diff(b, f), abs_diff(f, b))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            abs_diff(np.zeros((2, 3), np.uint8), np.zeros((3, 2), np.uint8))

    def test_threshold_is_strict(self):
        d = np.array([[30, 25, 24, 0]], dtype=np.uint8)
        assert threshold_binary(d, 25).tolist() == [[255, 0, 0, 0]]

    @given(st.integers(0, 255))
    def test_zero_diff_is_black(self, t):
        assert not threshold_binary(np.zeros((3, 3), np.uint8), t).any()

    @given(arrays(np.uint8, (5, 5)), st.integers(0, 255), st.integers(0, 255))
    def test_monotone_in_threshold(self, d, t1, t2):
        t1, t2 = sorted((t1, t2))
        assert (threshold_binary(d, t1) == 255).sum() >= (threshold_binary(d, t2) == 255).sum()

    def test_segment_default_pipeline(self):
        bg = np.full((20, 20), 60, np.uint8)
        fr = bg.copy()
        fr[5:15, 5:15] = 200
        m = segment(bg, fr)
        assert set(np.unique(m)) <= {0, 255}
        assert m[10, 10] == 255 and m[0, 0] == 0
        raw = segment(bg, fr, SegmentConfig(25, None))
        assert (raw == 255).sum() == 100


class TestContours:
    def test_empty(self):
        assert find_contours(np.zeros((5, 5), np.uint8)) == []

    def test_square(self):
        m = np.zeros((5, 5), np.uint8)
        m[1:4, 1:4] = 255
        (c,) = find_contours(m)
        assert c.points == ((1, 1), (2, 1), (3, 1), (3, 2), (3, 3), (2, 3), (1, 3), (1, 2))
        assert c.chain_code == (0, 0, 6, 6, 4, 4, 2, 2)
        assert fill_region(c, 5, 5).area == 9

    def test_two_blocks_in_raster_order(self):
        m = np.zeros((6, 8), np.uint8)
        m[3:5, 1:3] = 255
        m[0:2, 5:7] = 255
        cs = find_contours(m)
        assert [c.start for c in cs] == [(5, 0), (1, 3)]
        assert len(flood_components(m == 255)) == 2

    def test_single_pixel(self):
        m = np.zeros((3, 3), np.uint8)
        m[1, 1] = 255
        (c,) = find_contours(m)
        assert c.points == ((1, 1),) and c.chain_code == (0,)
        r = fill_region(c, 3, 3)
        assert r.area == 1 and len(r.contour) == 1

    def test_c_shape_fill_is_flood_fill(self):
        m = np.zeros((7, 7), np.uint8)
        m[1, 1:6] = 255
        m[1:6, 1] = 255
        m[5, 1:6] = 255
        (c,) = find_contours(m)
        r = fill_region(c, 7, 7)
        (comp,) = flood_components(m == 255)
        assert np.array_equal(r.mask, mask_from(comp, 7, 7))
        assert r.area == 13

    def test_ring_keeps_its_hole(self):
        m = np.zeros((5, 5), np.uint8)
        m[0:5, 0:5] = 255
        m[2, 2] = 0
        (c,) = find_contours(m)
        r = fill_region(c, 5, 5)
        assert r.area == 24 and r.mask[2, 2] == 0

    def test_fill_without_source_encloses_interior(self):
        m = np.zeros((6, 6), np.uint8)
        m[1:5, 1:5] = 255
        (c,) = find_contours(m)
        bare = Contour(c.points, c.chain_code)
        assert fill_region(bare, 6, 6).area == 16

    def test_fill_rejects_out_of_bounds(self):
        with pytest.raises(ValueError):
            fill_region(Contour(((9, 9),), (0,)), 5, 5)

    def test_diagonal_line(self):
        m = np.eye(5, dtype=np.uint8) * 255
        (c,) = find_contours(m)
        # out along the diagonal and back
        assert c.points == ((0, 0), (1, 1), (2, 2), (3, 3), (4, 4), (3, 3), (2, 2), (1, 1))
        assert c.chain_code == (7, 7, 7, 7, 3, 3, 3, 3)

    @settings(max_examples=200, deadline=None)
    @given(random_masks())
    def test_trace_invariants(self, m):
        fg = m == 255
        h, w = m.shape
        comps = flood_components(fg)
        contours = find_contours(m)
        assert len(contours) == len(comps)
        for c, comp in zip(contours, comps):
            pts = c.points
            assert len(c.chain_code) == len(pts)
            assert set(pts) <= comp
            assert c.start == min(comp, key=lambda p: (p[1], p[0]))
            for k, (x, y) in enumerate(pts):
                nx, ny = pts[(k + 1) % len(pts)]
                if len(pts) > 1:
                    assert max(abs(nx - x), abs(ny - y)) == 1
                # boundary pixel: some 8-neighbour is background or off-image
                assert any(not (0 <= x + dx < w and 0 <= y + dy < h) or not fg[y + dy, x + dx]
                           for dx, dy in NEIGHBOURS) or len(comp) == h * w
            xs = [p[0] for p in comp]
            ys = [p[1] for p in comp]
            bx = [p[0] for p in pts]
            by = [p[1] for p in pts]
            assert (min(bx), max(bx), min(by), max(by)) == (min(xs), max(xs), min(ys), max(ys))

    @settings(max_examples=200, deadline=None)
    @given(random_masks())
    def test_regions_partition_foreground(self, m):
        rs = regions(m)
        comps = flood_components(m == 255)
        assert [r.area for r in rs] == [len(c) for c in comps]
        total = np.zeros(m.shape, dtype=int)
        for r, comp in zip(rs, comps):
            assert np.array_equal(r.mask, mask_from(comp, *m.shape))
            total += r.mask == 255
        assert np.array_equal(total, (m == 255).astype(int))


class TestLargestRegion:
    def test_picks_largest(self):
        m = np.zeros((10, 10), np.uint8)
        m[0:2, 0:2] = 255
        m[5:8, 5:8] = 255
        r = largest_region(m)
        assert r.area == 9 and r.contour.start == (5, 5)

    def test_empty(self):
        assert largest_region(np.zeros((4, 4), np.uint8)) is None

    def test_tie_goes_to_first_start(self):
        m = np.zeros((10, 10), np.uint8)
        m[6:8, 0:2] = 255
        m[1:3, 7:9] = 255
        assert largest_region(m).contour.start == (7, 1)

    @settings(max_examples=100, deadline=None)
    @given(random_masks())
    def test_agrees_with_full_region_list(self, m):
        rs = regions(m)
        best = largest_region(m)
        if not rs:
            assert best is None
            return
        expected = max(rs, key=lambda r: r.area)  # max keeps the first on ties
        assert best.area == expected.area
        assert best.contour.points == expected.contour.points
        assert np.array_equal(best.mask, expected.mask)
