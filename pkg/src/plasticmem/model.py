"""End-to-end sequence classifier.

Two stacked LSTM layers embed the input sequence; a memory cell (baseline
attention or plastic) is stepped once per embedding; a dense softmax head
reads the final step's memory output.  Classification deliberately uses
only the final memory output m_T, keeping the memory responsible for
accumulating evidence over the sequence.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autograd as ag
from . import lstm as lstm_mod
from .autograd import ParameterTape, Value, const
from .errors import InvalidArgumentError
from .matio import check_finite
from .memory import (
    MEMORY_INIT_POLICIES,
    BaselineMemoryCell,
    PlasticMemoryCell,
)

CHECKPOINT_FORMAT = "plasticmem-checkpoint-v1"
MEMORY_KINDS = ("baseline", "plastic")
TRACE_LIFETIMES = ("per_sequence", "persistent")


@dataclass
class ModelConfig:
    input_dim: int
    embed_dim: int
    memory_len: int
    num_classes: int
    eta: float = 0.5
    alpha_init: float = 0.01
    memory_kind: str = "plastic"
    trace_lifetime: str = "per_sequence"
    memory_init: str = "zeros"
    seed: int = 0

    def validate(self) -> None:
        for name in ("input_dim", "embed_dim", "memory_len", "num_classes"):
            if int(getattr(self, name)) < 1:
                raise InvalidArgumentError(f"{name} must be >= 1")
        if not (0.0 <= self.eta <= 1.0):
            raise InvalidArgumentError(f"eta must be in [0, 1], got {self.eta}")
        if self.alpha_init < 0.0:
            raise InvalidArgumentError(
                f"alpha_init must be >= 0, got {self.alpha_init}"
            )
        if self.memory_kind not in MEMORY_KINDS:
            raise InvalidArgumentError(
                f"memory_kind {self.memory_kind!r} not in {MEMORY_KINDS}"
            )
        if self.trace_lifetime not in TRACE_LIFETIMES:
            raise InvalidArgumentError(
                f"trace_lifetime {self.trace_lifetime!r} not in {TRACE_LIFETIMES}"
            )
        if self.memory_init not in MEMORY_INIT_POLICIES:
            raise InvalidArgumentError(
                f"memory_init {self.memory_init!r} not in {MEMORY_INIT_POLICIES}"
            )


@dataclass
class StepDiagnostics:
    """Per-step memory outputs and attention vectors from one forward."""

    memory_outputs: list[np.ndarray] = field(default_factory=list)
    attentions: list[np.ndarray] = field(default_factory=list)


class Classifier:
    def __init__(self, config: ModelConfig, _plastic_controllers: bool = True):
        config.validate()
        self.config = config
        self.tape = ParameterTape()
        rng = np.random.default_rng(config.seed)
        k = config.embed_dim
        self.enc1 = lstm_mod.init_lstm(self.tape, "enc1", config.input_dim, k, rng)
        self.enc2 = lstm_mod.init_lstm(self.tape, "enc2", k, k, rng)
        if config.memory_kind == "plastic":
            self.cell = PlasticMemoryCell(
                self.tape, "mem", k, config.memory_len, config.eta, rng,
                config.memory_init, config.seed, plastic=_plastic_controllers,
                alpha_init=config.alpha_init,
            )
        else:
            self.cell = BaselineMemoryCell(
                self.tape, "mem", k, config.memory_len, rng,
                config.memory_init, config.seed,
            )
        bound = 1.0 / np.sqrt(k)
        self.head_w = self.tape.add(
            "head.w", rng.uniform(-bound, bound, (config.num_classes, k))
        )
        self.head_b = self.tape.add("head.b", np.zeros(config.num_classes))

    @property
    def persistent(self) -> bool:
        return self.config.trace_lifetime == "persistent"

    def reset_runtime_state(self) -> None:
        """Discard carried-over memory content and traces."""
        self.cell.reset_runtime_state()

    def forward(
        self, sequence: np.ndarray, diagnostics: bool = False
    ) -> tuple[Value, StepDiagnostics | None]:
        """Class probabilities for one (T, input_dim) sequence.

        In persistent trace mode this mutates the carried memory state, so
        repeated calls on the same input may differ; in per_sequence mode
        the call is a pure function of (parameters, sequence).
        """
        seq = check_finite(sequence, "input sequence")
        if seq.ndim != 2 or seq.shape[0] < 1:
            raise InvalidArgumentError(
                f"sequence must be (T, d) with T >= 1, got shape {seq.shape}"
            )
        if seq.shape[1] != self.config.input_dim:
            raise InvalidArgumentError(
                f"sequence dim {seq.shape[1]} != input_dim {self.config.input_dim}"
            )
        inputs = [const(seq[t]) for t in range(seq.shape[0])]
        embeddings = lstm_mod.encode_sequence(self.enc1, self.enc2, inputs)
        self.cell.begin_sequence(self.persistent)
        diag = StepDiagnostics() if diagnostics else None
        m = None
        for e in embeddings:
            m, z = self.cell.step(e)
            if diag is not None:
                diag.memory_outputs.append(m.data.copy())
                diag.attentions.append(z.data.copy())
        self.cell.end_sequence()
        logits = ag.add(ag.matvec(self.head_w, m), self.head_b)
        probs = ag.softmax(logits)
        return probs, diag

    def loss(self, sequence: np.ndarray, label: int) -> Value:
        probs, _ = self.forward(sequence)
        return cross_entropy(probs, label)

    def predict(self, sequence: np.ndarray) -> int:
        """Argmax class; ties break toward the lower class index."""
        probs, _ = self.forward(sequence)
        return int(np.argmax(probs.data))

    # -- checkpointing -------------------------------------------------------

    def checkpoint(self, include_state: bool = True) -> dict:
        doc = {
            "format": CHECKPOINT_FORMAT,
            "config": asdict(self.config),
            "matrices": {
                name: p.data.ravel().tolist() for name, p in self.tape.items()
            },
            "shapes": {name: list(p.data.shape) for name, p in self.tape.items()},
        }
        if include_state:
            doc["state"] = self.runtime_state()
        return doc

    def runtime_state(self) -> dict:
        state = {"memory": self.cell._M_data.ravel().tolist(),
                 "memory_shape": list(self.cell._M_data.shape)}
        if isinstance(self.cell, PlasticMemoryCell):
            state["traces"] = {
                n: self.cell._hebb_data[n].ravel().tolist()
                for n in self.cell.CONTROLLERS
            }
            state["buffers"] = {
                n: [a.tolist(), b.tolist()]
                for n, (a, b) in self.cell._buf_data.items()
            }
        return state

    def load_checkpoint(self, doc: dict) -> None:
        if doc.get("format") != CHECKPOINT_FORMAT:
            raise InvalidArgumentError(
                f"unsupported checkpoint format {doc.get('format')!r}"
            )
        values = {}
        for name, flat in doc["matrices"].items():
            shape = tuple(doc["shapes"][name])
            values[name] = np.asarray(flat, dtype=np.float64).reshape(shape)
        self.tape.load_values(values)
        state = doc.get("state")
        if state:
            k, l = self.config.embed_dim, self.config.memory_len
            self.cell._M_data = np.asarray(state["memory"]).reshape(
                tuple(state["memory_shape"])
            )
            if isinstance(self.cell, PlasticMemoryCell) and "traces" in state:
                for n, flat in state["traces"].items():
                    self.cell._hebb_data[n] = np.asarray(flat).reshape(k, k)
                self.cell._buf_data = {
                    n: (np.asarray(a), np.asarray(b))
                    for n, (a, b) in state.get("buffers", {}).items()
                }

    def save(self, path, include_state: bool = True) -> None:
        with open(path, "w") as fh:
            json.dump(self.checkpoint(include_state), fh, sort_keys=True)

    @classmethod
    def load(cls, path) -> "Classifier":
        with open(path) as fh:
            doc = json.load(fh)
        if doc.get("format") != CHECKPOINT_FORMAT:
            raise InvalidArgumentError(
                f"unsupported checkpoint format {doc.get('format')!r}"
            )
        model = cls(ModelConfig(**doc["config"]))
        model.load_checkpoint(doc)
        return model


def cross_entropy(probs: Value, label: int) -> Value:
    """-log p(label), probability floored at 1e-12 before the log."""
    return ag.neg_log_prob(probs, label, floor=1e-12)
