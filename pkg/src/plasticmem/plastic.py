"""Fully connected layer with trainable differentiable plasticity.

Each connection combines a fixed weight w[i][j] with a Hebbian trace gated
by a trained coefficient alpha[i][j].  The trace follows an Oja-style rule
with decay:

    Hebb'[i][j] = Hebb[i][j] + eta * b[j] * (a[i] - b[j] * Hebb[i][j])

where (a, b) are the layer's previous (input, output) activations.  Within
a step the trace is first advanced from the stored previous pair, then the
output is computed through the updated trace:

    y[j] = tanh( sum_i (w[i][j] + alpha[i][j] * Hebb'[i][j]) * x[i] )

Under constant activations the trace contracts toward a[i]/b[j] with
per-step factor (1 - eta * b[j]^2).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd import ParameterTape, Value, const
from .errors import InvalidArgumentError

# |Hebb| beyond this is treated as a divergence diagnostic (never clipped).
TRACE_DIVERGENCE_LIMIT = 10.0


@dataclass
class PlasticLayerParams:
    w: Value  # (k, k) fixed component, trainable
    alpha: Value  # (k, k) plasticity coefficients, trainable
    eta: float  # plasticity learning rate, shared hyperparameter
    size: int
    plastic: bool = True  # False: ignore the trace, y = tanh(w.T x)


@dataclass
class PlasticLayerState:
    hebb: Value
    prev_in: Value | None = None
    prev_out: Value | None = None


def init_plastic_layer(
    tape: ParameterTape, prefix: str, k: int, eta: float,
    rng: np.random.Generator, plastic: bool = True, alpha_init: float = 0.01,
) -> PlasticLayerParams:
    bound = 1.0 / np.sqrt(k)
    w = tape.add(f"{prefix}.w", rng.uniform(-bound, bound, (k, k)))
    # alpha_init sets how plastic the layer is at the start of training:
    # near zero begins in the fixed-weight regime; larger values give the
    # trace pathway usable gradient signal from the first epoch
    alpha = tape.add(f"{prefix}.alpha", rng.uniform(-alpha_init, alpha_init, (k, k)))
    return PlasticLayerParams(w, alpha, eta, k, plastic)


def fresh_state(k: int, hebb: np.ndarray | None = None) -> PlasticLayerState:
    if hebb is None:
        hebb = np.zeros((k, k))
    return PlasticLayerState(const(hebb))


def hebb_update(state: PlasticLayerState, eta: float) -> Value:
    """Advance the trace from the stored activations; no-op before step 1."""
    if state.prev_in is None or state.prev_out is None:
        return state.hebb
    return ag.hebb_step(state.hebb, state.prev_in, state.prev_out, eta)


def plastic_forward(
    params: PlasticLayerParams, state: PlasticLayerState, x: Value
) -> tuple[Value, PlasticLayerState]:
    if x.data.shape != (params.size,):
        raise InvalidArgumentError(
            f"plastic_forward: input shape {x.data.shape}, expected ({params.size},)"
        )
    if np.isnan(x.data).any():
        raise InvalidArgumentError("plastic_forward: NaN in input")
    if not params.plastic:
        y = ag.tanh(ag.matvec_t(params.w, x))
        return y, state
    hebb = hebb_update(state, params.eta)
    if np.max(np.abs(hebb.data)) > TRACE_DIVERGENCE_LIMIT:
        warnings.warn(
            f"Hebbian trace magnitude exceeds {TRACE_DIVERGENCE_LIMIT}; "
            "likely divergence",
            RuntimeWarning,
            stacklevel=2,
        )
    w_eff = ag.add(params.w, ag.mul(params.alpha, hebb))
    y = ag.tanh(ag.matvec_t(w_eff, x))
    return y, PlasticLayerState(hebb, x, y)


def reset_trace(state: PlasticLayerState) -> PlasticLayerState:
    return PlasticLayerState(const(np.zeros_like(state.hebb.data)))
