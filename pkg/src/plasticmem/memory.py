"""External memory stack with attention-only and plastic addressing.

Both cell variants share the slot primitives:

* ``attend`` scores the query against every slot row and softmax-normalizes,
* ``read_slots`` returns the attention-weighted sum of slot rows,
* ``write_slots`` applies the per-slot erase/add blend
  ``M'[s,:] = (1 - z[s]) * M[s,:] + z[s] * m'``.

The baseline cell drives read/write with LSTM controllers; the plastic
cell replaces read, output, and write controllers with plasticity layers
sharing dimension k and learning rate eta.
"""

from __future__ import annotations

import numpy as np

from . import autograd as ag
from . import lstm as lstm_mod
from . import plastic as plastic_mod
from .autograd import ParameterTape, Value, const
from .errors import InvalidArgumentError, InvalidStateError

MEMORY_INIT_POLICIES = ("zeros", "uniform")


def init_memory(l: int, k: int, policy: str = "zeros", seed: int | None = None) -> np.ndarray:
    if l < 1 or k < 1:
        raise InvalidArgumentError(f"init_memory: non-positive dims l={l}, k={k}")
    if policy == "zeros":
        return np.zeros((l, k))
    if policy == "uniform":
        rng = np.random.default_rng(seed)
        return rng.uniform(-0.1, 0.1, (l, k))
    raise InvalidArgumentError(
        f"unknown memory init policy {policy!r}; valid: {MEMORY_INIT_POLICIES}"
    )


def attend(q: Value, M: Value) -> Value:
    """Per-slot similarity scores softmax-normalized into an attention vector."""
    return ag.softmax(ag.matvec(M, q))


def read_slots(z: Value, M: Value) -> Value:
    return ag.matvec_t(M, z)


def write_slots(M: Value, z: Value, m: Value) -> Value:
    return ag.mem_write(M, z, m)


class PlasticMemoryCell:
    """Memory stack with plastic read/output/write controllers.

    The cell is stateful and strictly sequential: call ``begin_sequence``
    before stepping through a sequence and ``end_sequence`` after, so that
    traces and memory content can persist (detached) across sequences when
    requested.
    """

    CONTROLLERS = ("read", "out", "write")

    def __init__(
        self,
        tape: ParameterTape,
        prefix: str,
        k: int,
        l: int,
        eta: float,
        rng: np.random.Generator,
        memory_init: str = "zeros",
        memory_seed: int | None = None,
        plastic: bool = True,
        alpha_init: float = 0.01,
    ):
        self.k = k
        self.l = l
        self.eta = eta
        self.plastic = plastic
        self.params = {
            name: plastic_mod.init_plastic_layer(
                tape, f"{prefix}.{name}", k, eta, rng, plastic, alpha_init
            )
            for name in self.CONTROLLERS
        }
        self.M0 = init_memory(l, k, memory_init, memory_seed)
        self.reset_runtime_state()
        self.M: Value | None = None
        self.states: dict[str, plastic_mod.PlasticLayerState] | None = None

    def reset_runtime_state(self) -> None:
        self._M_data = self.M0.copy()
        self._hebb_data = {n: np.zeros((self.k, self.k)) for n in self.CONTROLLERS}
        self._buf_data: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    def begin_sequence(self, persistent: bool) -> None:
        if persistent:
            self.M = const(self._M_data.copy())
            self.states = {}
            for n in self.CONTROLLERS:
                st = plastic_mod.fresh_state(self.k, self._hebb_data[n].copy())
                if n in self._buf_data:
                    a, b = self._buf_data[n]
                    st.prev_in = const(a.copy())
                    st.prev_out = const(b.copy())
                self.states[n] = st
        else:
            self.M = const(self.M0.copy())
            self.states = {n: plastic_mod.fresh_state(self.k) for n in self.CONTROLLERS}

    def step(self, x: Value) -> tuple[Value, Value]:
        """One memory access; returns (memory output m_t, attention z_t)."""
        if self.M is None or self.states is None:
            raise InvalidStateError("step called outside begin/end_sequence")
        q, self.states["read"] = plastic_mod.plastic_forward(
            self.params["read"], self.states["read"], x
        )
        z = attend(q, self.M)
        beta = read_slots(z, self.M)
        m, self.states["out"] = plastic_mod.plastic_forward(
            self.params["out"], self.states["out"], beta
        )
        mp, self.states["write"] = plastic_mod.plastic_forward(
            self.params["write"], self.states["write"], m
        )
        self.M = write_slots(self.M, z, mp)
        return m, z

    def end_sequence(self) -> None:
        if self.M is None or self.states is None:
            return
        self._M_data = self.M.data.copy()
        for n in self.CONTROLLERS:
            st = self.states[n]
            self._hebb_data[n] = st.hebb.data.copy()
            if st.prev_in is not None and st.prev_out is not None:
                self._buf_data[n] = (st.prev_in.data.copy(), st.prev_out.data.copy())
        self.M = None
        self.states = None


class BaselineMemoryCell:
    """Attention-only memory with LSTM read and write controllers."""

    def __init__(
        self,
        tape: ParameterTape,
        prefix: str,
        k: int,
        l: int,
        rng: np.random.Generator,
        memory_init: str = "zeros",
        memory_seed: int | None = None,
    ):
        self.k = k
        self.l = l
        self.read = lstm_mod.init_lstm(tape, f"{prefix}.read", k, k, rng)
        self.write = lstm_mod.init_lstm(tape, f"{prefix}.write", k, k, rng)
        self.M0 = init_memory(l, k, memory_init, memory_seed)
        self.reset_runtime_state()
        self.M: Value | None = None

    def reset_runtime_state(self) -> None:
        self._M_data = self.M0.copy()

    def begin_sequence(self, persistent: bool) -> None:
        # LSTM controller states always reset per sequence, mirroring the
        # encoder; only the memory content may persist.
        self.M = const(self._M_data.copy() if persistent else self.M0.copy())
        self._read_state = lstm_mod.zero_state(self.k)
        self._write_state = lstm_mod.zero_state(self.k)

    def step(self, x: Value) -> tuple[Value, Value]:
        if self.M is None:
            raise InvalidStateError("step called outside begin/end_sequence")
        q, self._read_state = lstm_mod.lstm_step(self.read, self._read_state, x)
        z = attend(q, self.M)
        m = read_slots(z, self.M)
        mp, self._write_state = lstm_mod.lstm_step(self.write, self._write_state, m)
        self.M = write_slots(self.M, z, mp)
        return m, z

    def end_sequence(self) -> None:
        if self.M is None:
            return
        self._M_data = self.M.data.copy()
        self.M = None
