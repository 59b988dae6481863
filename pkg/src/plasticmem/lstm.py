"""LSTM cell and the two-layer encoder stack.

Gate blocks are stored stacked row-wise in the fixed order
(input, forget, candidate, output), each block of height ``hidden_dim``.
The forget-gate bias is initialized to 1.0; initial h and c are zero for
every sequence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd import ParameterTape, Value, const
from .errors import InvalidArgumentError

GATE_ORDER = ("input", "forget", "candidate", "output")


@dataclass
class LstmParams:
    wx: Value  # (4k, d)
    wh: Value  # (4k, k)
    b: Value  # (4k,)
    input_dim: int
    hidden_dim: int


@dataclass
class LstmState:
    h: Value
    c: Value


def init_lstm(
    tape: ParameterTape, prefix: str, input_dim: int, hidden_dim: int,
    rng: np.random.Generator,
) -> LstmParams:
    k = hidden_dim
    bound = 1.0 / np.sqrt(k)
    wx = tape.add(f"{prefix}.wx", rng.uniform(-bound, bound, (4 * k, input_dim)))
    wh = tape.add(f"{prefix}.wh", rng.uniform(-bound, bound, (4 * k, k)))
    b0 = np.zeros(4 * k)
    b0[k : 2 * k] = 1.0  # forget-gate bias, stabilizes early training
    b = tape.add(f"{prefix}.b", b0)
    return LstmParams(wx, wh, b, input_dim, hidden_dim)


def zero_state(hidden_dim: int) -> LstmState:
    return LstmState(const(np.zeros(hidden_dim)), const(np.zeros(hidden_dim)))


def lstm_step(params: LstmParams, state: LstmState, x: Value) -> tuple[Value, LstmState]:
    if x.data.shape != (params.input_dim,):
        raise InvalidArgumentError(
            f"lstm_step: input shape {x.data.shape}, expected ({params.input_dim},)"
        )
    pre = ag.add(ag.add(ag.matvec(params.wx, x), ag.matvec(params.wh, state.h)), params.b)
    h, c = ag.lstm_cell(pre, state.c)
    return h, LstmState(h, c)


def encode_sequence(
    layer1: LstmParams, layer2: LstmParams, inputs: list[Value]
) -> list[Value]:
    """Two stacked LSTM layers; returns the layer-2 hidden state per step."""
    if not inputs:
        raise InvalidArgumentError("encode_sequence: empty input sequence")
    s1 = zero_state(layer1.hidden_dim)
    s2 = zero_state(layer2.hidden_dim)
    out = []
    for x in inputs:
        h1, s1 = lstm_step(layer1, s1, x)
        h2, s2 = lstm_step(layer2, s2, h1)
        out.append(h2)
    return out
