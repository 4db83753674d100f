import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from affectloop.core import EmotionalState, PhysiologicalSample
from affectloop import piers
from affectloop.piers import (
    CalibrationError,
    CalibrationPhase,
    CalibrationRecord,
    Channel,
    ClassificationError,
    FusionError,
    PiersClassifier,
    RSS_EPSILON,
    Target,
    fit_calibration,
    format_calibration,
    fuse,
    parse_calibration,
)


def lstsq_oracle(xs, ys):
    """Independent least-squares fit via numpy's normal equations."""
    a = np.vstack([np.asarray(xs), np.ones(len(xs))]).T
    coef, _, _, _ = np.linalg.lstsq(a, np.asarray(ys), rcond=None)
    slope, intercept = coef
    rss = float(np.sum((np.asarray(ys) - a @ coef) ** 2))
    return float(slope), float(intercept), rss


def make_records(rows):
    """rows: (phase, sc, hr, zyg, corr, arousal, valence)"""
    return [
        CalibrationRecord(
            phase=ph,
            features=PhysiologicalSample(0.0, sc, hr, zyg, corr),
            self_report=EmotionalState(a, v),
        )
        for ph, sc, hr, zyg, corr, a, v in rows
    ]


PHASES = list(CalibrationPhase)

FOUR_PHASE_ROWS = [
    (PHASES[0], 0.5, 60.0, 0.20, 0.80, 3.0, 8.0),
    (PHASES[1], 2.5, 95.0, 0.10, 0.90, 9.0, 4.0),
    (PHASES[2], 1.0, 70.0, 0.60, 0.30, 4.0, 9.0),
    (PHASES[3], 2.0, 85.0, 0.05, 0.95, 7.0, 2.0),
]


class TestFitCalibration:
    def test_matches_normal_equations_oracle(self):
        model = fit_calibration(make_records(FOUR_PHASE_ROWS))
        feature_cols = {
            Channel.SC: [0.5, 2.5, 1.0, 2.0],
            Channel.HR: [60.0, 95.0, 70.0, 85.0],
            Channel.EMG_ZYG: [0.20, 0.10, 0.60, 0.05],
            Channel.EMG_CORR: [0.80, 0.90, 0.30, 0.95],
        }
        targets = {
            Target.AROUSAL: [3.0, 9.0, 4.0, 7.0],
            Target.VALENCE: [8.0, 9.0, 2.0, 4.0],
        }
        # valence self-reports in phase order for the EMG channels
        targets[Target.VALENCE] = [8.0, 4.0, 9.0, 2.0]
        for channel, xs in feature_cols.items():
            m = model.model(channel)
            slope, intercept, rss = lstsq_oracle(xs, targets[m.target])
            assert m.slope == pytest.approx(slope, rel=1e-9)
            assert m.intercept == pytest.approx(intercept, rel=1e-9)
            assert m.rss == pytest.approx(rss, abs=1e-9)

    def test_hr_example_hand_computed(self):
        # HR {60, 70, 85, 95} vs arousal {3, 4, 7, 9}: slope = 127.5/725
        rows = [
            (PHASES[0], 1.0, 60.0, 0.5, 0.5, 3.0, 5.0),
            (PHASES[1], 1.0, 70.0, 0.5, 0.5, 4.0, 5.0),
            (PHASES[2], 1.0, 85.0, 0.5, 0.5, 7.0, 5.0),
            (PHASES[3], 1.0, 95.0, 0.5, 0.5, 9.0, 5.0),
        ]
        model = fit_calibration(make_records(rows))
        hr = model.model(Channel.HR)
        assert hr.slope == pytest.approx(127.5 / 725)
        assert hr.intercept == pytest.approx(5.75 - (127.5 / 725) * 77.5)

    def test_constant_channel_degenerate_not_fatal(self):
        rows = [(ph, 1.0, hr, zyg, corr, a, v) for (ph, _sc, hr, zyg, corr, a, v)
                in FOUR_PHASE_ROWS]
        model = fit_calibration(make_records(rows))
        sc = model.model(Channel.SC)
        assert sc.degenerate
        assert sc.slope == 0.0
        assert math.isinf(sc.rss)
        assert not model.model(Channel.HR).degenerate

    def test_too_few_records_rejected(self):
        with pytest.raises(CalibrationError):
            fit_calibration(make_records(FOUR_PHASE_ROWS[:1]))

    def test_bad_smoothing_window_rejected(self):
        with pytest.raises(CalibrationError):
            fit_calibration(make_records(FOUR_PHASE_ROWS), smoothing_window=0)

    def test_two_points_fit_exactly(self):
        rows = FOUR_PHASE_ROWS[:2]
        model = fit_calibration(make_records(rows))
        hr = model.model(Channel.HR)
        assert hr.predict(60.0) == pytest.approx(3.0)
        assert hr.predict(95.0) == pytest.approx(9.0)
        assert hr.rss == pytest.approx(0.0, abs=1e-18)

    def test_invert_round_trips(self):
        model = fit_calibration(make_records(FOUR_PHASE_ROWS))
        hr = model.model(Channel.HR)
        assert hr.predict(hr.invert(6.0)) == pytest.approx(6.0)

    def test_invert_degenerate_raises(self):
        rows = [(ph, 1.0, hr, zyg, corr, a, v) for (ph, _sc, hr, zyg, corr, a, v)
                in FOUR_PHASE_ROWS]
        model = fit_calibration(make_records(rows))
        with pytest.raises(ClassificationError):
            model.model(Channel.SC).invert(5.0)


class TestFuse:
    def test_equal_rss_is_plain_mean(self):
        assert fuse([(2.0, 1.0), (6.0, 1.0), (10.0, 1.0)]) == pytest.approx(6.0)

    def test_weighted_example(self):
        # weights 1/(1+eps), 1/(3+eps): (4/1 + 8/3)/(1/1 + 1/3) = 5.0
        assert fuse([(4.0, 1.0), (8.0, 3.0)]) == pytest.approx(5.0, abs=1e-5)

    def test_zero_rss_dominates(self):
        out = fuse([(3.0, 0.0), (9.0, 10.0)])
        assert out == pytest.approx(3.0, abs=1e-4)

    def test_degenerate_entries_excluded(self):
        assert fuse([(4.0, math.inf), (7.0, 1.0)]) == pytest.approx(7.0)

    def test_all_degenerate_raises(self):
        with pytest.raises(FusionError):
            fuse([(4.0, math.inf), (5.0, math.nan)])

    def test_empty_raises(self):
        with pytest.raises(FusionError):
            fuse([])

    @given(st.lists(
        st.tuples(st.floats(min_value=0, max_value=10),
                  st.floats(min_value=0, max_value=100)),
        min_size=1, max_size=8,
    ))
    def test_convex_combination(self, preds):
        out = fuse(preds)
        values = [v for v, _ in preds]
        assert min(values) - 1e-9 <= out <= max(values) + 1e-9

    @given(st.lists(
        st.tuples(st.floats(min_value=0, max_value=10),
                  st.floats(min_value=0, max_value=100)),
        min_size=1, max_size=8,
    ))
    def test_weights_normalize(self, preds):
        # fusing a constant returns that constant: the weights sum to 1
        const = [(3.25, r) for _, r in preds]
        assert fuse(const) == pytest.approx(3.25, abs=1e-9)


class TestClassifier:
    def _model(self):
        return fit_calibration(make_records(FOUR_PHASE_ROWS))

    def _sample(self, t=0.0, sc=1.5, hr=75.0, zyg=0.3, corr=0.6):
        return PhysiologicalSample(t, sc, hr, zyg, corr)

    def test_empty_window_rejected(self):
        with pytest.raises(ClassificationError):
            PiersClassifier(self._model()).classify([])

    def test_output_on_scale(self):
        out = PiersClassifier(self._model()).classify([self._sample()])
        assert 0.0 <= out.arousal <= 10.0
        assert 0.0 <= out.valence <= 10.0

    def test_constant_stream_converges_to_raw(self):
        clf = PiersClassifier(self._model())
        for _ in range(10):
            out = clf.classify([self._sample()])
        fresh = piers.classify([self._sample()], self._model())
        assert out.arousal == pytest.approx(fresh.arousal)
        assert out.valence == pytest.approx(fresh.valence)

    def test_smoothing_is_trailing_mean(self):
        model = fit_calibration(make_records(FOUR_PHASE_ROWS), smoothing_window=3)
        clf = PiersClassifier(model)
        raws = []
        outs = []
        for hr in (60.0, 75.0, 95.0, 82.0):
            window = [self._sample(hr=hr)]
            raws.append(piers.classify(window, fit_calibration(
                make_records(FOUR_PHASE_ROWS), smoothing_window=1)).arousal)
            outs.append(clf.classify(window).arousal)
        assert outs[2] == pytest.approx(sum(raws[0:3]) / 3)
        assert outs[3] == pytest.approx(sum(raws[1:4]) / 3)

    def test_window_mean_feature(self):
        # classifying two samples equals classifying their mean sample
        model = self._model()
        two = [self._sample(hr=70.0), self._sample(hr=90.0)]
        one = [self._sample(hr=80.0)]
        assert piers.classify(two, model).arousal == pytest.approx(
            piers.classify(one, model).arousal)

    def test_reset_clears_history(self):
        clf = PiersClassifier(self._model())
        clf.classify([self._sample(hr=95.0)])
        clf.reset()
        out = clf.classify([self._sample()])
        assert out.arousal == pytest.approx(
            piers.classify([self._sample()], self._model()).arousal)


class TestCalibrationFormat:
    def test_round_trip(self):
        records = make_records(FOUR_PHASE_ROWS)
        assert parse_calibration(format_calibration(records)) == records

    def test_comments_and_blanks_skipped(self):
        text = "# header\n\n" + format_calibration(make_records(FOUR_PHASE_ROWS[:2]))
        assert len(parse_calibration(text)) == 2

    def test_bad_field_count_reports_line(self):
        with pytest.raises(CalibrationError, match="line 1"):
            parse_calibration("RelaxingMusic,1,2,3\n")

    def test_bad_phase_rejected(self):
        with pytest.raises(CalibrationError):
            parse_calibration("NotAPhase,1,60,0.5,0.5,5,5\n")
