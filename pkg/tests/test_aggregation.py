import logging

import numpy as np
import pytest

from diarkit import (
    InvalidInputError,
    SpeechRegion,
    TimeInterval,
    WindowEmbedding,
    aggregate,
    regions_from_windows,
    segmentize,
)


def region(start, end):
    return SpeechRegion(TimeInterval(start, end))


def window(start, end, vec):
    return WindowEmbedding(TimeInterval(start, end), np.asarray(vec, dtype=float))


class TestSegmentize:
    def test_even_split_with_remainder(self):
        out = segmentize([region(0.0, 1.0)], max_len=0.4)
        assert [(iv.start, iv.end) for iv in out] == [(0.0, 0.4), (0.4, 0.8), (0.8, 1.0)]

    def test_exact_fit(self):
        out = segmentize([region(0.0, 0.4)], max_len=0.4)
        assert [(iv.start, iv.end) for iv in out] == [(0.0, 0.4)]

    def test_tiny_remainder_merges_into_previous_piece(self):
        out = segmentize([region(0.0, 0.401)], max_len=0.4)
        assert [(iv.start, iv.end) for iv in out] == [(0.0, 0.401)]

    def test_region_shorter_than_minimum_dropped(self):
        assert segmentize([region(0.0, 0.005)], max_len=0.4) == []

    def test_multiple_regions(self):
        out = segmentize([region(0.0, 0.5), region(1.0, 1.3)], max_len=0.4)
        assert [(iv.start, iv.end) for iv in out] == [(0.0, 0.4), (0.4, 0.5), (1.0, 1.3)]

    def test_union_preserved(self):
        regions = [region(0.0, 1.7), region(2.0, 2.35), region(5.5, 9.01)]
        pieces = segmentize(regions, max_len=0.4)
        # pieces tile each region: contiguous within a region, exact outer bounds
        by_region = {}
        for piece in pieces:
            for r in regions:
                if r.interval.start <= piece.start and piece.end <= r.interval.end + 1e-12:
                    by_region.setdefault((r.interval.start, r.interval.end), []).append(piece)
        for (start, end), tiles in by_region.items():
            assert tiles[0].start == start
            assert abs(tiles[-1].end - end) < 1e-12
            for a, b in zip(tiles, tiles[1:]):
                assert a.end == b.start
        assert len(by_region) == len(regions)

    def test_piece_lengths_bounded(self):
        rng = np.random.default_rng(21)
        t = 0.0
        regions = []
        for _ in range(20):
            start = t + rng.uniform(0.05, 0.5)
            end = start + rng.uniform(0.011, 3.0)
            regions.append(region(start, end))
            t = end
        for piece in segmentize(regions, max_len=0.4):
            assert piece.duration <= 0.4 + 0.01 + 1e-9

    def test_overlapping_regions_rejected(self):
        with pytest.raises(InvalidInputError):
            segmentize([region(0, 1), region(0.5, 2)], max_len=0.4)

    def test_nonpositive_max_len_rejected(self):
        with pytest.raises(InvalidInputError):
            segmentize([region(0, 1)], max_len=0.0)


class TestAggregate:
    def test_single_window(self):
        out = aggregate([window(0.0, 0.24, [1, 0])], [TimeInterval(0.0, 0.4)])
        assert len(out) == 1
        assert np.allclose(out[0].embedding, [1, 0])

    def test_normalize_then_average(self):
        # [2,0] and [0,3] normalize to [1,0] and [0,1]; mean [0.5, 0.5]
        out = aggregate(
            [window(0.0, 0.1, [2, 0]), window(0.1, 0.2, [0, 3])],
            [TimeInterval(0.0, 0.4)],
        )
        assert np.allclose(out[0].embedding, [0.5, 0.5])
        # mean of unit vectors is not re-normalized
        assert abs(np.linalg.norm(out[0].embedding) - 1.0) > 0.1

    def test_boundary_window_goes_right(self):
        # center at exactly 0.4: belongs to [0.4, 0.8), not [0.0, 0.4)
        segs = [TimeInterval(0.0, 0.4), TimeInterval(0.4, 0.8)]
        out = aggregate(
            [window(0.28, 0.52, [1, 0]), window(0.4, 0.64, [0, 1])], segs
        )
        assert len(out) == 1
        assert out[0].interval == TimeInterval(0.4, 0.8)

    def test_empty_segments_dropped_with_warning(self, caplog):
        segs = [TimeInterval(0.0, 0.4), TimeInterval(1.0, 1.4)]
        with caplog.at_level(logging.WARNING, logger="diarkit.aggregation"):
            out = aggregate([window(0.0, 0.24, [1, 0])], segs)
        assert len(out) == 1
        assert "dropped 1" in caplog.text

    def test_all_segments_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            aggregate([window(5.0, 5.24, [1, 0])], [TimeInterval(0.0, 0.4)])

    def test_window_scale_invariance(self):
        rng = np.random.default_rng(22)
        windows = [
            window(0.12 * i, 0.12 * i + 0.24, rng.normal(size=8)) for i in range(30)
        ]
        segs = [TimeInterval(0.4 * j, 0.4 * (j + 1)) for j in range(10)]
        base = aggregate(windows, segs)
        scaled = aggregate(
            [WindowEmbedding(w.interval, w.embedding * 123.0) for w in windows], segs
        )
        for a, b in zip(base, scaled):
            assert np.max(np.abs(a.embedding - b.embedding)) < 1e-12

    def test_output_sorted_non_overlapping(self):
        rng = np.random.default_rng(23)
        windows = [
            window(0.12 * i, 0.12 * i + 0.24, rng.normal(size=4)) for i in range(50)
        ]
        segs = [TimeInterval(0.4 * j, 0.4 * (j + 1)) for j in range(16)]
        out = aggregate(windows, segs)
        for a, b in zip(out, out[1:]):
            assert a.interval.end <= b.interval.start

    def test_mixed_dimensions_rejected(self):
        with pytest.raises(InvalidInputError):
            aggregate(
                [window(0, 0.24, [1, 0]), window(0.12, 0.36, [1, 0, 0])],
                [TimeInterval(0, 0.4)],
            )

    def test_unsorted_windows_rejected(self):
        with pytest.raises(InvalidInputError):
            aggregate(
                [window(1.0, 1.24, [1, 0]), window(0.0, 0.24, [1, 0])],
                [TimeInterval(0, 2)],
            )


class TestRegionsFromWindows:
    def test_overlapping_windows_merge(self):
        regions = regions_from_windows(
            [window(0.0, 0.24, [1]), window(0.12, 0.36, [1]), window(1.0, 1.24, [1])]
        )
        assert [(r.interval.start, r.interval.end) for r in regions] == [
            (0.0, 0.36),
            (1.0, 1.24),
        ]

    def test_touching_windows_merge(self):
        regions = regions_from_windows([window(0.0, 0.5, [1]), window(0.5, 1.0, [1])])
        assert len(regions) == 1

    def test_empty(self):
        assert regions_from_windows([]) == []
