"""Data pipeline: windowing, scaling, flattening, voting, synthesis, I/O."""

import numpy as np
import pytest

from plasticmem.data import (
    FeatureBlock,
    LabeledSequence,
    SynthConfig,
    flatten_feature_map,
    load_csv,
    majority_vote,
    minmax_scale,
    save_csv,
    sliding_window,
    synth_generate,
    unflatten_feature_map,
)
from plasticmem.errors import DataLoadError, InvalidArgumentError


class TestSlidingWindow:
    def test_t10_w4_overlap_half(self):
        sig = np.arange(10.0)
        wins = sliding_window(sig, 4, 0.5)
        assert len(wins) == 4
        for i, start in enumerate((0, 2, 4, 6)):
            np.testing.assert_array_equal(wins[i].ravel(), sig[start:start + 4])

    def test_zero_overlap_partitions(self):
        sig = np.arange(11.0)
        wins = sliding_window(sig, 3, 0.0)
        assert len(wins) == 11 // 3
        np.testing.assert_array_equal(
            np.concatenate([w.ravel() for w in wins]), sig[:9]
        )

    def test_t1500_w375_overlap_half(self):
        wins = sliding_window(np.arange(1500.0), 375, 0.5)
        assert len(wins) == 7
        # stride floor(375 * 0.5) = 187; last window still complete
        np.testing.assert_array_equal(wins[1].ravel()[:1], [187.0])
        np.testing.assert_array_equal(wins[6].ravel()[:1], [6 * 187.0])
        assert wins[6].shape[0] == 375

    def test_all_windows_full_length_and_even_stride(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            T = int(rng.integers(5, 200))
            w = int(rng.integers(1, T + 1))
            ov = float(rng.uniform(0, 0.95))
            wins = sliding_window(rng.normal(0, 1, T), w, ov)
            stride = max(1, int(np.floor(w * (1 - ov))))
            assert len(wins) == (T - w) // stride + 1
            for win in wins:
                assert win.shape[0] == w

    def test_window_longer_than_series_warns_empty(self):
        with pytest.warns(UserWarning):
            wins = sliding_window(np.arange(3.0), 5, 0.0)
        assert wins == []

    def test_bad_overlap_rejected(self):
        with pytest.raises(InvalidArgumentError):
            sliding_window(np.arange(10.0), 4, 1.0)


class TestMinMaxScale:
    def test_basic(self):
        out = minmax_scale(np.array([[0.0], [5.0], [10.0]]))
        np.testing.assert_allclose(out.ravel(), [0.0, 0.5, 1.0], atol=1e-15)

    def test_constant_channel_zeros(self):
        out = minmax_scale(np.full((3, 1), 3.0))
        np.testing.assert_array_equal(out, np.zeros((3, 1)))

    def test_channels_independent(self):
        win = np.array([[3.0, 0.0], [3.0, 5.0], [3.0, 10.0]])
        out = minmax_scale(win)
        np.testing.assert_array_equal(out[:, 0], np.zeros(3))
        np.testing.assert_allclose(out[:, 1], [0.0, 0.5, 1.0], atol=1e-15)

    def test_range_and_idempotence(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            win = rng.normal(0, 5, (rng.integers(2, 20), rng.integers(1, 4)))
            out = minmax_scale(win)
            assert out.min() >= 0.0 and out.max() <= 1.0
            np.testing.assert_allclose(minmax_scale(out), out, atol=1e-12)

    def test_nan_rejected(self):
        with pytest.raises(InvalidArgumentError):
            minmax_scale(np.array([[np.nan], [1.0]]))


class TestFeatureMap:
    def test_1x1xC(self):
        block = FeatureBlock(1, 1, 3, np.arange(3.0).reshape(1, 1, 3))
        steps = flatten_feature_map(block)
        np.testing.assert_array_equal(steps, [[0.0, 1.0, 2.0]])

    def test_2x2_ordering(self):
        data = np.array([[[1.0], [2.0]], [[3.0], [4.0]]])
        steps = flatten_feature_map(FeatureBlock(2, 2, 1, data))
        np.testing.assert_array_equal(steps.ravel(), [1.0, 2.0, 3.0, 4.0])

    def test_bijection(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            h, w, c = (int(rng.integers(1, 6)) for _ in range(3))
            block = FeatureBlock(h, w, c, rng.normal(0, 1, (h, w, c)))
            back = unflatten_feature_map(flatten_feature_map(block), h, w)
            np.testing.assert_array_equal(back.data, block.data)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(InvalidArgumentError):
            FeatureBlock(2, 2, 1, np.zeros((2, 3, 1)))


class TestMajorityVote:
    def probs(self, *ps):
        return [np.asarray(p, dtype=np.float64) for p in ps]

    def test_modal(self):
        assert majority_vote([0, 0, 1], self.probs([0.9, 0.1], [0.8, 0.2], [0.3, 0.7])) == 0

    def test_singleton(self):
        assert majority_vote([1], self.probs([0.2, 0.8])) == 1

    def test_tie_by_mean_probs(self):
        assert majority_vote([0, 1], self.probs([0.7, 0.3], [0.4, 0.6])) == 0

    def test_tie_then_lower_index(self):
        assert majority_vote([0, 1], self.probs([0.5, 0.5], [0.5, 0.5])) == 0

    def test_permutation_invariant(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            n = int(rng.integers(1, 8))
            preds = [int(p) for p in rng.integers(0, 3, n)]
            probs = [rng.dirichlet(np.ones(3)) for _ in range(n)]
            base = majority_vote(preds, probs)
            perm = rng.permutation(n)
            assert majority_vote([preds[i] for i in perm],
                                 [probs[i] for i in perm]) == base

    def test_empty_rejected(self):
        with pytest.raises(InvalidArgumentError):
            majority_vote([], [])


class TestSynthGenerate:
    def test_deterministic(self):
        cfg = SynthConfig(n_records=10, steps=50, seed=4)
        a = synth_generate(cfg)
        b = synth_generate(cfg)
        assert len(a) == len(b) == 10
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.steps, y.steps)
            assert x.label == y.label and x.record_id == y.record_id

    def test_balanced(self):
        for kind in ("burst", "freq_shift", "long_range"):
            data = synth_generate(SynthConfig(n_records=11, steps=40,
                                              anomaly_kind=kind, seed=5))
            labels = [s.label for s in data]
            assert abs(labels.count(0) - labels.count(1)) <= 1

    def test_long_range_label_from_markers(self):
        # noiseless: the two largest-magnitude excursions determine the label
        data = synth_generate(SynthConfig(n_records=40, steps=100, noise_sd=0.0,
                                          anomaly_kind="long_range", seed=6))
        t = np.linspace(0.0, 1.0, 100, endpoint=False)
        base = 0.6 * np.sin(2 * np.pi * 5 * t) + 0.4 * np.sin(2 * np.pi * 11 * t)
        for seq in data:
            resid = seq.steps[:, 0] - base
            marks = np.flatnonzero(np.abs(resid) > 1.0)
            assert len(marks) >= 2
            early, late = marks[0], marks[-1]
            assert late - early > 50  # widely separated
            match = np.sign(resid[early]) == np.sign(resid[late])
            assert seq.label == (0 if match else 1)

    def test_windows_share_record_id(self):
        data = synth_generate(SynthConfig(n_records=3, steps=30,
                                          windows_per_record=4, seed=7))
        assert len(data) == 12
        ids = {s.record_id for s in data}
        assert len(ids) == 3

    def test_invalid_config(self):
        with pytest.raises(InvalidArgumentError):
            SynthConfig(n_records=0).validate()
        with pytest.raises(InvalidArgumentError):
            SynthConfig(anomaly_kind="weird").validate()


class TestCsvRoundtrip:
    def test_save_load(self, tmp_path):
        data = synth_generate(SynthConfig(n_records=4, steps=20, channels=2, seed=8))
        manifest = save_csv(data, tmp_path / "ds")
        back = load_csv(manifest)
        assert len(back) == len(data)
        for x, y in zip(data, back):
            np.testing.assert_array_equal(x.steps, y.steps)
            assert x.label == y.label and x.record_id == y.record_id

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(DataLoadError):
            load_csv(tmp_path / "nope.json")

    def test_malformed_manifest(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text("{not json")
        with pytest.raises(DataLoadError):
            load_csv(path)

    def test_missing_data_file(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text('[{"path": "gone.csv", "label": 0, "record_id": "r"}]')
        with pytest.raises(DataLoadError, match="gone.csv"):
            load_csv(path)

    def test_ragged_row_cites_line(self, tmp_path):
        (tmp_path / "d.csv").write_text("1,2\n3\n")
        (tmp_path / "m.json").write_text(
            '[{"path": "d.csv", "label": 0, "record_id": "r"}]'
        )
        with pytest.raises(DataLoadError, match=r"d\.csv:2"):
            load_csv(tmp_path / "m.json")

    def test_non_numeric_cites_line(self, tmp_path):
        (tmp_path / "d.csv").write_text("1,2\nx,4\n")
        (tmp_path / "m.json").write_text(
            '[{"path": "d.csv", "label": 0, "record_id": "r"}]'
        )
        with pytest.raises(DataLoadError, match=r"d\.csv:2"):
            load_csv(tmp_path / "m.json")

    def test_inconsistent_channels(self, tmp_path):
        (tmp_path / "a.csv").write_text("1,2\n")
        (tmp_path / "b.csv").write_text("1\n")
        (tmp_path / "m.json").write_text(
            '[{"path": "a.csv", "label": 0, "record_id": "a"},'
            ' {"path": "b.csv", "label": 1, "record_id": "b"}]'
        )
        with pytest.raises(DataLoadError, match="inconsistent"):
            load_csv(tmp_path / "m.json")

    def test_header_flag(self, tmp_path):
        (tmp_path / "d.csv").write_text("col\n1\n2\n")
        (tmp_path / "m.json").write_text(
            '{"header": true, "files":'
            ' [{"path": "d.csv", "label": 1, "record_id": "r"}]}'
        )
        back = load_csv(tmp_path / "m.json")
        np.testing.assert_array_equal(back[0].steps.ravel(), [1.0, 2.0])


class TestLabeledSequence:
    def test_rejects_empty_or_nonfinite(self):
        with pytest.raises(InvalidArgumentError):
            LabeledSequence(np.zeros((0, 2)), 0, "r")
        with pytest.raises(InvalidArgumentError):
            LabeledSequence(np.array([[np.inf]]), 0, "r")
