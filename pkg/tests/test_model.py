"""Classifier composition, loss, prediction, checkpoints."""

import json

import numpy as np
import pytest

from plasticmem import autograd as ag
from plasticmem.autograd import ParameterTape, const
from plasticmem.errors import InvalidArgumentError
from plasticmem.lstm import encode_sequence
from plasticmem.model import Classifier, ModelConfig, cross_entropy


def small_config(**kw):
    base = dict(input_dim=2, embed_dim=4, memory_len=2, num_classes=2,
                seed=0, memory_init="uniform")
    base.update(kw)
    return ModelConfig(**base)


class TestConfig:
    def test_validate_rejects_bad_values(self):
        for kw in (dict(input_dim=0), dict(eta=1.5), dict(memory_kind="foo"),
                   dict(trace_lifetime="forever"), dict(memory_init="gauss")):
            with pytest.raises(InvalidArgumentError):
                small_config(**kw).validate()

    def test_valid_config_passes(self):
        small_config().validate()


class TestForward:
    def test_uniform_head(self):
        model = Classifier(small_config())
        model.tape["head.w"].data[...] = 0.0
        model.tape["head.b"].data[...] = 0.0
        rng = np.random.default_rng(0)
        for _ in range(5):
            probs, _ = model.forward(rng.normal(0, 1, (4, 2)))
            np.testing.assert_allclose(probs.data, [0.5, 0.5], atol=1e-15)

    def test_length_one_diagnostics(self):
        model = Classifier(small_config())
        probs, diag = model.forward(np.zeros((1, 2)), diagnostics=True)
        assert len(diag.memory_outputs) == 1
        assert len(diag.attentions) == 1
        assert diag.memory_outputs[0].shape == (4,)
        assert diag.attentions[0].shape == (2,)

    def test_input_validation(self):
        model = Classifier(small_config())
        with pytest.raises(InvalidArgumentError):
            model.forward(np.zeros((0, 2)))
        with pytest.raises(InvalidArgumentError):
            model.forward(np.zeros((3, 5)))
        with pytest.raises(InvalidArgumentError):
            model.forward(np.full((3, 2), np.nan))

    def test_composition_oracle(self):
        # forward == hand-chained encoder + memory steps + head
        model = Classifier(small_config(seed=3))
        rng = np.random.default_rng(4)
        seq = rng.normal(0, 1, (3, 2))
        probs, _ = model.forward(seq)

        inputs = [const(seq[t]) for t in range(3)]
        embeddings = encode_sequence(model.enc1, model.enc2, inputs)
        model.cell.begin_sequence(False)
        m = None
        for e in embeddings:
            m, _ = model.cell.step(e)
        model.cell.end_sequence()
        logits = model.head_w.data @ m.data + model.head_b.data
        e = np.exp(logits - logits.max())
        np.testing.assert_allclose(probs.data, e / e.sum(), atol=1e-14)

    def test_per_sequence_forward_is_pure(self):
        model = Classifier(small_config(seed=5))
        seq = np.random.default_rng(6).normal(0, 1, (4, 2))
        a, _ = model.forward(seq)
        b, _ = model.forward(seq)
        np.testing.assert_array_equal(a.data, b.data)

    def test_persistent_forward_mutates_state(self):
        model = Classifier(small_config(seed=7, trace_lifetime="persistent"))
        seq = np.random.default_rng(8).normal(0, 1, (4, 2))
        a, _ = model.forward(seq)
        b, _ = model.forward(seq)
        assert not np.array_equal(a.data, b.data)


class TestLossAndPredict:
    def test_cross_entropy_certain(self):
        assert float(cross_entropy(const([1.0, 0.0]), 0).data) < 1e-11

    def test_cross_entropy_uniform(self):
        val = float(cross_entropy(const([0.5, 0.5]), 1).data)
        assert abs(val - 0.69315) < 5e-6

    def test_logit_gradient_is_probs_minus_onehot(self):
        rng = np.random.default_rng(9)
        logits0 = rng.normal(0, 1, 4)
        tape = ParameterTape()
        logits = tape.add("logits", logits0)
        probs = ag.softmax(logits)
        tape.backward(cross_entropy(probs, 2))
        onehot = np.zeros(4)
        onehot[2] = 1.0
        np.testing.assert_allclose(logits.grad, probs.data - onehot, atol=1e-12)

    def test_predict_matches_argmax(self):
        model = Classifier(small_config(seed=10))
        rng = np.random.default_rng(11)
        for _ in range(100):
            seq = rng.normal(0, 1, (3, 2))
            probs, _ = model.forward(seq)
            assert model.predict(seq) == int(np.argmax(probs.data))

    def test_tie_breaks_to_lower_index(self):
        model = Classifier(small_config())
        model.tape["head.w"].data[...] = 0.0
        model.tape["head.b"].data[...] = 0.0
        assert model.predict(np.zeros((2, 2))) == 0


class TestCheckpoint:
    def test_roundtrip_preserves_predictions(self, tmp_path):
        model = Classifier(small_config(seed=12))
        seq = np.random.default_rng(13).normal(0, 1, (4, 2))
        before, _ = model.forward(seq)
        path = tmp_path / "ckpt.json"
        model.save(path)
        loaded = Classifier.load(path)
        after, _ = loaded.forward(seq)
        np.testing.assert_array_equal(before.data, after.data)

    def test_roundtrip_bytes_stable(self, tmp_path):
        model = Classifier(small_config(seed=14))
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        model.save(p1)
        Classifier.load(p1).save(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_format_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"format": "something-else"}))
        with pytest.raises(InvalidArgumentError):
            Classifier.load(path)

    def test_runtime_state_roundtrip(self, tmp_path):
        model = Classifier(small_config(seed=15, trace_lifetime="persistent"))
        seq = np.random.default_rng(16).normal(0, 1, (4, 2))
        model.forward(seq)  # mutates carried memory/traces
        path = tmp_path / "ckpt.json"
        model.save(path)
        loaded = Classifier.load(path)
        np.testing.assert_array_equal(model.cell._M_data, loaded.cell._M_data)
        for n in model.cell.CONTROLLERS:
            np.testing.assert_array_equal(
                model.cell._hebb_data[n], loaded.cell._hebb_data[n]
            )
        a, _ = model.forward(seq)
        b, _ = loaded.forward(seq)
        np.testing.assert_array_equal(a.data, b.data)

    def test_baseline_kind_roundtrip(self, tmp_path):
        model = Classifier(small_config(seed=17, memory_kind="baseline"))
        seq = np.random.default_rng(18).normal(0, 1, (3, 2))
        before, _ = model.forward(seq)
        path = tmp_path / "b.json"
        model.save(path)
        after, _ = Classifier.load(path).forward(seq)
        np.testing.assert_array_equal(before.data, after.data)
