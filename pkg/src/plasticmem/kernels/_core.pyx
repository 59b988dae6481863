# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel core: fused hot loops for the memory cells.

Mirrors the API of ``plasticmem.kernels._pure``; selected at import when
available.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, tanh

cnp.import_array()

BACKEND = "compiled"


cdef inline double _sigmoid(double x) nogil:
    return 1.0 / (1.0 + exp(-x))


def softmax(double[::1] v):
    cdef Py_ssize_t n = v.shape[0], i
    cdef double mx = v[0], s = 0.0
    out = np.empty(n)
    cdef double[::1] o = out
    for i in range(1, n):
        if v[i] > mx:
            mx = v[i]
    for i in range(n):
        o[i] = exp(v[i] - mx)
        s += o[i]
    for i in range(n):
        o[i] /= s
    return out


def lstm_cell_forward(double[::1] pre, double[::1] c):
    cdef Py_ssize_t k = c.shape[0], j
    i_ = np.empty(k); f_ = np.empty(k); g_ = np.empty(k); o_ = np.empty(k)
    tc_ = np.empty(k); hc = np.empty(2 * k)
    cdef double[::1] iv = i_, fv = f_, gv = g_, ov = o_, tcv = tc_, hcv = hc
    cdef double c2
    for j in range(k):
        iv[j] = _sigmoid(pre[j])
        fv[j] = _sigmoid(pre[k + j])
        gv[j] = tanh(pre[2 * k + j])
        ov[j] = _sigmoid(pre[3 * k + j])
        c2 = fv[j] * c[j] + iv[j] * gv[j]
        tcv[j] = tanh(c2)
        hcv[j] = ov[j] * tcv[j]
        hcv[k + j] = c2
    return hc, (i_, f_, g_, o_, tc_)


def lstm_cell_backward(double[::1] gh, double[::1] gc_out, double[::1] c, ctx):
    i_, f_, g_, o_, tc_ = ctx
    cdef double[::1] iv = i_, fv = f_, gv = g_, ov = o_, tcv = tc_
    cdef Py_ssize_t k = c.shape[0], j
    gpre = np.empty(4 * k); gc = np.empty(k)
    cdef double[::1] gp = gpre, gcv = gc
    cdef double dc2, do
    for j in range(k):
        dc2 = gc_out[j] + gh[j] * ov[j] * (1.0 - tcv[j] * tcv[j])
        do = gh[j] * tcv[j]
        gp[j] = dc2 * gv[j] * iv[j] * (1.0 - iv[j])
        gp[k + j] = dc2 * c[j] * fv[j] * (1.0 - fv[j])
        gp[2 * k + j] = dc2 * iv[j] * (1.0 - gv[j] * gv[j])
        gp[3 * k + j] = do * ov[j] * (1.0 - ov[j])
        gcv[j] = dc2 * fv[j]
    return gpre, gc


def hebb_forward(double[:, ::1] H, double[::1] a, double[::1] b, double eta):
    cdef Py_ssize_t n = H.shape[0], m = H.shape[1], i, j
    out = np.empty((n, m))
    cdef double[:, ::1] o = out
    cdef double decay
    for j in range(m):
        decay = 1.0 - eta * b[j] * b[j]
        for i in range(n):
            o[i, j] = H[i, j] * decay + eta * a[i] * b[j]
    return out


def hebb_backward(double[:, ::1] G, double[:, ::1] H, double[::1] a,
                  double[::1] b, double eta):
    cdef Py_ssize_t n = H.shape[0], m = H.shape[1], i, j
    gH = np.empty((n, m)); ga = np.zeros(n); gb = np.zeros(m)
    cdef double[:, ::1] gHv = gH
    cdef double[::1] gav = ga, gbv = gb
    cdef double decay
    for j in range(m):
        decay = 1.0 - eta * b[j] * b[j]
        for i in range(n):
            gHv[i, j] = G[i, j] * decay
            gav[i] += eta * G[i, j] * b[j]
            gbv[j] += eta * G[i, j] * (a[i] - 2.0 * b[j] * H[i, j])
    return gH, ga, gb


def write_forward(double[:, ::1] M, double[::1] z, double[::1] m):
    cdef Py_ssize_t l = M.shape[0], k = M.shape[1], s, j
    out = np.empty((l, k))
    cdef double[:, ::1] o = out
    for s in range(l):
        for j in range(k):
            # erase/add form: exact at z in {0, 1}
            o[s, j] = (1.0 - z[s]) * M[s, j] + z[s] * m[j]
    return out


def write_backward(double[:, ::1] G, double[:, ::1] M, double[::1] z,
                   double[::1] m):
    cdef Py_ssize_t l = M.shape[0], k = M.shape[1], s, j
    gM = np.empty((l, k)); gz = np.zeros(l); gm = np.zeros(k)
    cdef double[:, ::1] gMv = gM
    cdef double[::1] gzv = gz, gmv = gm
    for s in range(l):
        for j in range(k):
            gMv[s, j] = G[s, j] * (1.0 - z[s])
            gzv[s] += G[s, j] * (m[j] - M[s, j])
            gmv[j] += G[s, j] * z[s]
    return gM, gz, gm


cdef void _hebb_inplace(double[:, ::1] H, double[::1] a, double[::1] b,
                        double eta) nogil:
    cdef Py_ssize_t n = H.shape[0], m = H.shape[1], i, j
    cdef double decay
    for j in range(m):
        decay = 1.0 - eta * b[j] * b[j]
        for i in range(n):
            H[i, j] = H[i, j] * decay + eta * a[i] * b[j]


cdef void _tanh_matvec_t(double[:, ::1] w, double[:, ::1] alpha,
                         double[:, ::1] H, double[::1] x,
                         double[::1] out) nogil:
    # out[j] = tanh(sum_i (w[i,j] + alpha[i,j] * H[i,j]) * x[i])
    cdef Py_ssize_t n = w.shape[0], m = w.shape[1], i, j
    cdef double acc
    for j in range(m):
        acc = 0.0
        for i in range(n):
            acc += (w[i, j] + alpha[i, j] * H[i, j]) * x[i]
        out[j] = tanh(acc)


cdef void _softmax_inplace(double[::1] v) nogil:
    cdef Py_ssize_t n = v.shape[0], i
    cdef double mx = v[0], s = 0.0
    for i in range(1, n):
        if v[i] > mx:
            mx = v[i]
    for i in range(n):
        v[i] = exp(v[i] - mx)
        s += v[i]
    for i in range(n):
        v[i] /= s


def plastic_cell_sequence(double[:, ::1] wr, double[:, ::1] ar,
                          double[:, ::1] wo, double[:, ::1] ao,
                          double[:, ::1] ww, double[:, ::1] aw,
                          double eta, double[:, ::1] M_in,
                          double[:, ::1] Hr_in, double[:, ::1] Ho_in,
                          double[:, ::1] Hw_in, double[:, ::1] X):
    cdef Py_ssize_t T = X.shape[0], k = X.shape[1], l = M_in.shape[0]
    cdef Py_ssize_t t, s, j, i
    M_arr = np.array(M_in); Hr_arr = np.array(Hr_in)
    Ho_arr = np.array(Ho_in); Hw_arr = np.array(Hw_in)
    ms = np.empty((T, k)); zs = np.empty((T, l))
    q_arr = np.empty(k); beta_arr = np.empty(k); x_arr = np.empty(k)
    m_arr = np.empty(k); mp_arr = np.empty(k); z_arr = np.empty(l)
    pin_r = np.empty(k); pout_r = np.empty(k)
    pin_o = np.empty(k); pout_o = np.empty(k)
    pin_w = np.empty(k); pout_w = np.empty(k)
    cdef double[:, ::1] M = M_arr, Hr = Hr_arr, Ho = Ho_arr, Hw = Hw_arr
    cdef double[:, ::1] msv = ms, zsv = zs
    cdef double[::1] q = q_arr, beta = beta_arr, m = m_arr, mp = mp_arr
    cdef double[::1] x = x_arr
    cdef double[::1] z = z_arr
    cdef double[::1] pinr = pin_r, poutr = pout_r, pino = pin_o
    cdef double[::1] pouto = pout_o, pinw = pin_w, poutw = pout_w
    cdef double acc
    with nogil:
        for t in range(T):
            for j in range(k):
                x[j] = X[t, j]
            # read controller
            if t > 0:
                _hebb_inplace(Hr, pinr, poutr, eta)
            _tanh_matvec_t(wr, ar, Hr, x, q)
            for j in range(k):
                pinr[j] = x[j]
                poutr[j] = q[j]
            # attention + slot read
            for s in range(l):
                acc = 0.0
                for j in range(k):
                    acc += M[s, j] * q[j]
                z[s] = acc
            _softmax_inplace(z)
            for j in range(k):
                acc = 0.0
                for s in range(l):
                    acc += z[s] * M[s, j]
                beta[j] = acc
            # output controller
            if t > 0:
                _hebb_inplace(Ho, pino, pouto, eta)
            _tanh_matvec_t(wo, ao, Ho, beta, m)
            for j in range(k):
                pino[j] = beta[j]
                pouto[j] = m[j]
            # write controller + memory update
            if t > 0:
                _hebb_inplace(Hw, pinw, poutw, eta)
            _tanh_matvec_t(ww, aw, Hw, m, mp)
            for j in range(k):
                pinw[j] = m[j]
                poutw[j] = mp[j]
            for s in range(l):
                for j in range(k):
                    M[s, j] = (1.0 - z[s]) * M[s, j] + z[s] * mp[j]
            for j in range(k):
                msv[t, j] = m[j]
            for s in range(l):
                zsv[t, s] = z[s]
    return ms, zs, M_arr, Hr_arr, Ho_arr, Hw_arr


cdef void _lstm_step_c(double[:, ::1] wx, double[:, ::1] wh, double[::1] b,
                       double[::1] h, double[::1] c, double[::1] x,
                       double[::1] pre) nogil:
    cdef Py_ssize_t k = h.shape[0], d = x.shape[0], r, j
    cdef double acc, ig, fg, gg, og, c2
    for r in range(4 * k):
        acc = b[r]
        for j in range(d):
            acc += wx[r, j] * x[j]
        for j in range(k):
            acc += wh[r, j] * h[j]
        pre[r] = acc
    for j in range(k):
        ig = _sigmoid(pre[j])
        fg = _sigmoid(pre[k + j])
        gg = tanh(pre[2 * k + j])
        og = _sigmoid(pre[3 * k + j])
        c2 = fg * c[j] + ig * gg
        c[j] = c2
        h[j] = og * tanh(c2)


def lstm_sequence(double[:, ::1] wx, double[:, ::1] wh, double[::1] b,
                  double[:, ::1] X):
    cdef Py_ssize_t T = X.shape[0], k = wh.shape[1], d = X.shape[1], t, j
    out = np.empty((T, k))
    h_arr = np.zeros(k); c_arr = np.zeros(k); pre_arr = np.empty(4 * k)
    x_arr = np.empty(d)
    cdef double[:, ::1] ov = out
    cdef double[::1] h = h_arr, c = c_arr, pre = pre_arr, x = x_arr
    with nogil:
        for t in range(T):
            for j in range(d):
                x[j] = X[t, j]
            _lstm_step_c(wx, wh, b, h, c, x, pre)
            for j in range(k):
                ov[t, j] = h[j]
    return out


def baseline_cell_sequence(double[:, ::1] r_wx, double[:, ::1] r_wh,
                           double[::1] r_b, double[:, ::1] w_wx,
                           double[:, ::1] w_wh, double[::1] w_b,
                           double[:, ::1] M_in, double[:, ::1] X):
    cdef Py_ssize_t T = X.shape[0], k = X.shape[1], l = M_in.shape[0]
    cdef Py_ssize_t t, s, j
    M_arr = np.array(M_in)
    ms = np.empty((T, k)); zs = np.empty((T, l))
    hr_a = np.zeros(k); cr_a = np.zeros(k); hw_a = np.zeros(k); cw_a = np.zeros(k)
    pre_a = np.empty(4 * k); z_a = np.empty(l); m_a = np.empty(k)
    x_a = np.empty(k)
    cdef double[:, ::1] M = M_arr, msv = ms, zsv = zs
    cdef double[::1] hr = hr_a, cr = cr_a, hw = hw_a, cw = cw_a
    cdef double[::1] pre = pre_a, z = z_a, m = m_a, x = x_a
    cdef double acc
    with nogil:
        for t in range(T):
            for j in range(k):
                x[j] = X[t, j]
            _lstm_step_c(r_wx, r_wh, r_b, hr, cr, x, pre)
            for s in range(l):
                acc = 0.0
                for j in range(k):
                    acc += M[s, j] * hr[j]
                z[s] = acc
            _softmax_inplace(z)
            for j in range(k):
                acc = 0.0
                for s in range(l):
                    acc += z[s] * M[s, j]
                m[j] = acc
            _lstm_step_c(w_wx, w_wh, w_b, hw, cw, m, pre)
            for s in range(l):
                for j in range(k):
                    M[s, j] = (1.0 - z[s]) * M[s, j] + z[s] * hw[j]
            for j in range(k):
                msv[t, j] = m[j]
            for s in range(l):
                zsv[t, s] = z[s]
    return ms, zs, M_arr
