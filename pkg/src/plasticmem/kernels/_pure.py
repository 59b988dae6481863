"""Pure numpy implementations of the hot per-step kernels.

Every function here has a matching signature in the compiled core
(``plasticmem.kernels._core``); this module is the fallback selected when
the extension is unavailable or ``PLASTICMEM_PURE_PYTHON=1`` is set.
"""

from __future__ import annotations

import numpy as np

BACKEND = "pure"


def softmax(v: np.ndarray) -> np.ndarray:
    shifted = v - np.max(v)
    e = np.exp(shifted)
    return e / np.sum(e)


# -- LSTM cell nonlinearity block -------------------------------------------
# `pre` holds the four stacked gate pre-activations [i; f; g; o], each of
# width k. Returns hc = [h'; c'] plus the saved activations the backward
# pass needs.

def lstm_cell_forward(pre: np.ndarray, c: np.ndarray):
    k = c.shape[0]
    i = 1.0 / (1.0 + np.exp(-pre[0:k]))
    f = 1.0 / (1.0 + np.exp(-pre[k : 2 * k]))
    g = np.tanh(pre[2 * k : 3 * k])
    o = 1.0 / (1.0 + np.exp(-pre[3 * k : 4 * k]))
    c2 = f * c + i * g
    tc = np.tanh(c2)
    h = o * tc
    hc = np.concatenate([h, c2])
    return hc, (i, f, g, o, tc)


def lstm_cell_backward(gh, gc_out, c, ctx):
    i, f, g, o, tc = ctx
    dc2 = gc_out + gh * o * (1.0 - tc * tc)
    do = gh * tc
    gpre = np.concatenate(
        [
            dc2 * g * i * (1.0 - i),
            dc2 * c * f * (1.0 - f),
            dc2 * i * (1.0 - g * g),
            do * o * (1.0 - o),
        ]
    )
    gc = dc2 * f
    return gpre, gc


# -- Hebbian trace update ----------------------------------------------------
# out[i,j] = H[i,j] * (1 - eta*b[j]^2) + eta * a[i] * b[j]

def hebb_forward(H: np.ndarray, a: np.ndarray, b: np.ndarray, eta: float) -> np.ndarray:
    decay = 1.0 - eta * b * b
    return H * decay[np.newaxis, :] + eta * np.outer(a, b)


def hebb_backward(G, H, a, b, eta):
    decay = 1.0 - eta * b * b
    gH = G * decay[np.newaxis, :]
    ga = eta * (G @ b)
    gb = eta * (G.T @ a - 2.0 * b * np.sum(G * H, axis=0))
    return gH, ga, gb


# -- Attention-weighted slot write -------------------------------------------
# out[s,:] = (1 - z[s]) * M[s,:] + z[s] * m

def write_forward(M: np.ndarray, z: np.ndarray, m: np.ndarray) -> np.ndarray:
    # erase/add form: exact at z in {0, 1} (a one-hot z must overwrite a
    # slot with m bit-for-bit, not up to rounding)
    return (1.0 - z)[:, np.newaxis] * M + z[:, np.newaxis] * m[np.newaxis, :]


def write_backward(G, M, z, m):
    gM = G * (1.0 - z)[:, np.newaxis]
    gz = np.sum(G * (m[np.newaxis, :] - M), axis=1)
    gm = G.T @ z
    return gM, gz, gm


# -- Inference-only fused sequence paths -------------------------------------

def _plastic_ctrl(w, alpha, eta, hebb, prev_in, prev_out, x):
    if prev_in is not None:
        hebb = hebb_forward(hebb, prev_in, prev_out, eta)
    y = np.tanh((w + alpha * hebb).T @ x)
    return y, hebb


def plastic_cell_sequence(wr, ar, wo, ao, ww, aw, eta, M, Hr, Ho, Hw, X):
    """Run the plastic memory cell over a full sequence without autodiff.

    X is (T, k); traces start from Hr/Ho/Hw with empty activation buffers.
    Returns (ms (T, k), zs (T, l), M, Hr, Ho, Hw).
    """
    T, k = X.shape
    l = M.shape[0]
    M = M.copy()
    ms = np.empty((T, k))
    zs = np.empty((T, l))
    buf_r = buf_o = buf_w = None  # (prev_in, prev_out) per controller
    for t in range(T):
        x = X[t]
        q, Hr = _plastic_ctrl(wr, ar, eta, Hr, *(buf_r or (None, None)), x)
        buf_r = (x, q)
        z = softmax(M @ q)
        beta = M.T @ z
        m, Ho = _plastic_ctrl(wo, ao, eta, Ho, *(buf_o or (None, None)), beta)
        buf_o = (beta, m)
        mp, Hw = _plastic_ctrl(ww, aw, eta, Hw, *(buf_w or (None, None)), m)
        buf_w = (m, mp)
        M = write_forward(M, z, mp)
        ms[t] = m
        zs[t] = z
    return ms, zs, M, Hr, Ho, Hw


def _lstm_step(wx, wh, b, h, c, x):
    pre = wx @ x + wh @ h + b
    hc, _ = lstm_cell_forward(pre, c)
    k = c.shape[0]
    return hc[:k], hc[k:]


def lstm_sequence(wx, wh, b, X):
    """Single LSTM layer over (T, d) inputs; returns hidden states (T, k)."""
    T = X.shape[0]
    k = wh.shape[1]
    h = np.zeros(k)
    c = np.zeros(k)
    out = np.empty((T, k))
    for t in range(T):
        h, c = _lstm_step(wx, wh, b, h, c, X[t])
        out[t] = h
    return out


def baseline_cell_sequence(r_wx, r_wh, r_b, w_wx, w_wh, w_b, M, X):
    """Attention-only memory cell with LSTM controllers, inference path."""
    T, k = X.shape
    l = M.shape[0]
    M = M.copy()
    hr = np.zeros(k)
    cr = np.zeros(k)
    hw = np.zeros(k)
    cw = np.zeros(k)
    ms = np.empty((T, k))
    zs = np.empty((T, l))
    for t in range(T):
        hr, cr = _lstm_step(r_wx, r_wh, r_b, hr, cr, X[t])
        z = softmax(M @ hr)
        m = M.T @ z
        hw, cw = _lstm_step(w_wx, w_wh, w_b, hw, cw, m)
        M = write_forward(M, z, hw)
        ms[t] = m
        zs[t] = z
    return ms, zs, M
