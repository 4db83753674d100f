import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from affectloop import eet
from affectloop.eet import (
    EetError,
    EetFormatError,
    EetVersionError,
    ResponseKind,
    ThresholdMode,
    ThresholdParams,
    TimeRegion,
    compute_phi,
    detect_responses,
    export_responses,
    find_extrema,
    import_events,
    load_session,
    read_trace,
    response_stats,
    save_session,
    time_regions,
    triangulate,
)
from eet_oracle import oracle_detect, oracle_extrema, oracle_phi

DEV = ThresholdParams(mode=ThresholdMode.DEVIATION)
LIT = ThresholdParams(mode=ThresholdMode.LITERAL)


class TestTimeRegions:
    def test_next_event_caps_region(self):
        rs = time_regions([100.0, 104.0], trace_end=1000.0)
        assert rs[0] == TimeRegion(100.0, 104.0)

    def test_window_caps_region(self):
        rs = time_regions([100.0, 150.0], trace_end=1000.0)
        assert rs[0] == TimeRegion(100.0, 110.0)

    def test_trace_end_caps_last_region(self):
        rs = time_regions([0.0], trace_end=4.0)
        assert rs[0] == TimeRegion(0.0, 4.0)

    def test_width_never_exceeds_window(self):
        rs = time_regions([0.0, 3.0, 5.0, 30.0], trace_end=100.0, window=10.0)
        assert all(r.end - r.start <= 10.0 for r in rs)
        assert all(r.start <= r.end for r in rs)


EXAMPLE_VALUES = [5.0, 5.0, 6.5, 8.0, 6.5, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0]
EXAMPLE_TIMES = [float(t) for t in range(11)]


class TestPhi:
    def test_deviation_example(self):
        # |diffs| = {0,1.5,1.5,1.5,1.5,0,0,0,0,0}: mu=0.6, sigma=sqrt(0.54)
        phi = compute_phi(EXAMPLE_VALUES, DEV)
        assert phi == pytest.approx(0.6 + 2 * math.sqrt(0.54))

    def test_literal_example(self):
        values = EXAMPLE_VALUES
        mu = sum(values) / len(values)
        sigma = math.sqrt(sum((v - mu) ** 2 for v in values) / len(values))
        assert compute_phi(values, LIT) == pytest.approx(mu + 2 * sigma)

    def test_constant_trace_deviation_phi_zero(self):
        assert compute_phi([5.0] * 10, DEV) == 0.0

    def test_degenerate_regions(self):
        assert compute_phi([], LIT) == math.inf
        assert compute_phi([5.0], DEV) == math.inf

    @given(st.lists(st.floats(min_value=0, max_value=10), min_size=2, max_size=50))
    def test_matches_numpy_oracle(self, values):
        assert compute_phi(values, DEV) == pytest.approx(
            oracle_phi(values, "deviation"), abs=1e-9)
        assert compute_phi(values, LIT) == pytest.approx(
            oracle_phi(values, "literal"), abs=1e-9)


class TestExtrema:
    def test_single_peak(self):
        ext = find_extrema(EXAMPLE_TIMES, EXAMPLE_VALUES)
        assert len(ext) == 1
        assert ext[0].time == 3.0
        assert ext[0].value == 8.0
        assert ext[0].polarity == 1

    def test_plateau_collapses_to_midpoint(self):
        values = [0.0, 1.0, 2.0, 2.0, 2.0, 1.0, 0.0]
        times = [float(t) for t in range(7)]
        ext = find_extrema(times, values)
        assert len(ext) == 1
        assert ext[0].index == 3  # middle of the plateau [2, 4]

    def test_monotone_has_no_extrema(self):
        assert find_extrema([0.0, 1.0, 2.0], [1.0, 2.0, 3.0]) == []

    def test_alternating_polarities(self):
        values = [5.0, 8.0, 2.0, 9.0, 3.0]
        ext = find_extrema([float(t) for t in range(5)], values)
        assert [e.polarity for e in ext] == [1, -1, 1]

    @given(st.lists(st.integers(min_value=0, max_value=5), min_size=3, max_size=40))
    def test_matches_run_length_oracle(self, raw):
        values = [float(v) for v in raw]
        times = [float(t) for t in range(len(values))]
        got = [(e.index, e.time, e.value, e.polarity)
               for e in find_extrema(times, values)]
        assert got == oracle_extrema(times, values)


class TestDetect:
    def test_deviation_example_is_simple_response(self):
        rs = detect_responses(EXAMPLE_TIMES, EXAMPLE_VALUES, [(0.0, "EnvEvent")],
                              "arousal", params=DEV)
        assert len(rs) == 1
        r = rs[0]
        assert r.kind is ResponseKind.SIMPLE
        assert r.extrema[0].value == 8.0
        assert r.extrema[0].initial == 5.0
        assert abs(r.extrema[0].delta) >= r.phi

    def test_literal_example_rejects_swing(self):
        rs = detect_responses(EXAMPLE_TIMES, EXAMPLE_VALUES, [(0.0, "EnvEvent")],
                              "arousal", params=LIT)
        assert rs == []

    def test_constant_trace_no_responses(self):
        times = [float(t) for t in range(20)]
        for params in (DEV, LIT):
            assert detect_responses(times, [5.0] * 20, [(0.0, "EnvEvent")],
                                    "arousal", params=params) == []

    def test_composite_response_alternates(self):
        values = [5.0, 9.0, 1.0, 9.0, 5.0, 5.0, 5.0]
        times = [float(t) for t in range(7)]
        rs = detect_responses(times, values, [(0.0, "EnvEvent")], "arousal",
                              params=ThresholdParams(), fixed_phi=3.0)
        assert len(rs) == 1
        polarities = [e.polarity for e in rs[0].extrema]
        assert rs[0].kind is ResponseKind.COMPOSITE
        assert all(a != b for a, b in zip(polarities, polarities[1:]))

    def test_chained_reference_updates(self):
        values = [5.0, 9.0, 1.0, 9.0, 5.0, 5.0, 5.0]
        times = [float(t) for t in range(7)]
        rs = detect_responses(times, values, [(0.0, "EnvEvent")], "arousal",
                              fixed_phi=3.0)
        ext = rs[0].extrema
        assert ext[0].initial == 5.0
        for prev, nxt in zip(ext, ext[1:]):
            assert nxt.initial == prev.value

    def test_extrema_inside_region(self):
        rng = random.Random(5)
        times = [t * 0.5 for t in range(200)]
        values = [5 + 4 * math.sin(t) + rng.uniform(-1, 1) for t in times]
        events = [(10.0, "A"), (31.0, "B"), (60.0, "C")]
        for r in detect_responses(times, values, events, "arousal"):
            for e in r.extrema:
                assert r.region.start <= e.time <= r.region.end

    def test_unsorted_events_rejected(self):
        with pytest.raises(EetError):
            detect_responses(EXAMPLE_TIMES, EXAMPLE_VALUES,
                             [(5.0, "A"), (1.0, "B")], "arousal")

    def test_content_outside_regions_ignored(self):
        times = [float(t) for t in range(40)]
        values = [5.0] * 40
        values[5] = 9.0  # inside [3, 13]
        a = detect_responses(times, values, [(3.0, "A")], "arousal", fixed_phi=2.0)
        values2 = list(values)
        values2[30] = 0.0  # outside the region
        b = detect_responses(times, values2, [(3.0, "A")], "arousal", fixed_phi=2.0)
        assert [(r.event_time, r.extrema) for r in a] == \
               [(r.event_time, r.extrema) for r in b]

    def test_shrinking_window_never_adds_extrema_fixed_phi(self):
        rng = random.Random(9)
        times = [t * 0.5 for t in range(100)]
        values = [5 + 3 * math.sin(1.3 * t) + rng.uniform(-0.5, 0.5) for t in times]
        events = [(4.0, "A"), (20.0, "B")]
        counts = []
        for w in (12.0, 8.0, 5.0, 2.0):
            rs = detect_responses(times, values, events, "arousal", window=w,
                                  fixed_phi=1.5)
            counts.append(sum(len(r.extrema) for r in rs))
        assert all(b <= a for a, b in zip(counts, counts[1:]))


def synthetic_trace(rng):
    n = rng.randrange(30, 120)
    period = 0.5
    times = [i * period for i in range(n)]
    neutral = 5.0
    pulses = [(rng.uniform(0, n * period), rng.uniform(-4, 4), rng.uniform(1, 6))
              for _ in range(rng.randrange(0, 5))]
    values = []
    for t in times:
        v = neutral + rng.uniform(-0.3, 0.3)
        for start, delta, tau in pulses:
            if t >= start:
                v += delta * math.exp(-(t - start) / tau)
        values.append(round(min(10.0, max(0.0, v)), 3))
    k = rng.randrange(1, 5)
    event_times = sorted(rng.uniform(0, times[-1]) for _ in range(k))
    events = [(round(t, 3), "EnvEvent") for t in event_times]
    return times, values, events


class TestOracleEquivalence:
    @pytest.mark.parametrize("mode", ["deviation", "literal"])
    def test_matches_brute_force(self, mode):
        params = ThresholdParams(mode=ThresholdMode(mode))
        for seed in range(200):
            rng = random.Random(seed)
            times, values, events = synthetic_trace(rng)
            got = detect_responses(times, values, events, "arousal", params=params)
            want = oracle_detect(times, values, events, mode=mode)
            assert len(got) == len(want), f"seed {seed}"
            for r, (event_time, phi, accepted) in zip(got, want):
                assert r.event_time == event_time
                assert r.phi == pytest.approx(phi, abs=1e-9)
                assert [(e.time, e.value, e.initial, e.polarity)
                        for e in r.extrema] == accepted, f"seed {seed}"


class TestTriangulate:
    def test_covers_both_dimensions(self):
        times = EXAMPLE_TIMES
        dims = {"arousal": EXAMPLE_VALUES, "valence": [5.0] * 11}
        rs = triangulate(times, dims, [(0.0, "EnvEvent")])
        assert [r.dimension for r in rs] == ["arousal"]
        dims["valence"] = [5.0, 5.0, 3.5, 2.0, 3.5, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0]
        rs = triangulate(times, dims, [(0.0, "EnvEvent")])
        assert [r.dimension for r in rs] == ["arousal", "valence"]


class TestStats:
    def test_ratios(self):
        times = EXAMPLE_TIMES
        rs = detect_responses(times, EXAMPLE_VALUES, [(0.0, "EnvEvent")], "arousal")
        stats = response_stats(2, rs)
        assert stats.response_ratio == 0.5
        assert stats.simple_fraction == 1.0

    def test_no_events_rejected(self):
        with pytest.raises(EetError):
            response_stats(0, [])

    def test_no_responses_ratio_zero(self):
        assert response_stats(4, []).response_ratio == 0.0


class TestImportEvents:
    def test_filters_stimulus_kinds(self):
        text = ("0\tBlockSpawn\tblock_id=1\t\n"
                "1.5\tEnvEvent\tsub=Bugs\t\n"
                "2\tFolderPickup\t\t\n")
        events, problems = import_events(text)
        assert events == [(1.5, "EnvEvent"), (2.0, "FolderPickup")]
        assert problems == []

    def test_malformed_lines_reported_not_fatal(self):
        text = "not-a-number\tEnvEvent\t\t\n3.0\tEnvEvent\t\t\njunk\n"
        events, problems = import_events(text)
        assert events == [(3.0, "EnvEvent")]
        assert len(problems) == 2
        assert "line 1" in problems[0]
        assert "line 3" in problems[1]

    def test_unsorted_reported_and_sorted(self):
        text = "5\tEnvEvent\t\t\n2\tEnvEvent\t\t\n"
        events, problems = import_events(text)
        assert events == [(2.0, "EnvEvent"), (5.0, "EnvEvent")]
        assert any("sorted" in p for p in problems)


class TestTraceFormat:
    def test_read_with_header(self):
        times, dims = read_trace("t,arousal,valence\n0,5,5\n0.5,6,4\n")
        assert times == [0.0, 0.5]
        assert dims["arousal"] == [5.0, 6.0]
        assert dims["valence"] == [5.0, 4.0]

    def test_bad_line_rejected(self):
        with pytest.raises(EetFormatError, match="line 2"):
            read_trace("0,5,5\n1,abc,5\n")


class TestExportResponses:
    def test_header_and_rows(self):
        rs = detect_responses(EXAMPLE_TIMES, EXAMPLE_VALUES, [(0.0, "EnvEvent")],
                              "arousal")
        text = export_responses(rs)
        lines = text.splitlines()
        assert lines[0].startswith("event_ts,event_kind,dimension")
        assert len(lines) == 2
        fields = lines[1].split(",")
        assert fields[1] == "EnvEvent"
        assert fields[9] == "Simple"


class TestSaveLoad:
    def _session(self):
        events = [(0.0, "EnvEvent")]
        rs = detect_responses(EXAMPLE_TIMES, EXAMPLE_VALUES, events, "arousal")
        dims = {"arousal": EXAMPLE_VALUES, "valence": [5.0] * 11}
        return EXAMPLE_TIMES, dims, events, rs

    def test_round_trip(self):
        times, dims, events, rs = self._session()
        text = save_session(times, dims, events, rs)
        l_times, l_dims, l_events, l_rs, l_params, l_window = load_session(text)
        assert l_times == times
        assert l_dims == dims
        assert l_events == events
        assert l_rs == rs
        assert l_window == eet.DEFAULT_WINDOW

    def test_header_line(self):
        times, dims, events, rs = self._session()
        assert save_session(times, dims, events, rs).startswith("EETv1\n")

    def test_missing_header_rejected(self):
        with pytest.raises(EetFormatError):
            load_session("{}\n")

    def test_future_version_rejected(self):
        with pytest.raises(EetVersionError):
            load_session("EETv9\n{}\n")

    def test_corrupt_payload_rejected(self):
        with pytest.raises(EetFormatError):
            load_session("EETv1\n{\"nope\": 1}\n")
