"""Compiled inner loops for the Markov-chain samplers.

Random numbers are drawn by the caller (numpy ``Generator``) and passed in,
so results depend only on the seed and never on the JIT. Both kernels keep
per-unit local fields and update them only when a unit changes value.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _init_fields(v, h, w_vh, w_vv, b_v, b_h, f_v, f_h):
    n = v.shape[0]
    m = h.shape[0]
    for i in range(n):
        f = b_v[i]
        for k in range(n):
            f += w_vv[i, k] * v[k]
        for j in range(m):
            f += w_vh[i, j] * h[j]
        f_v[i] = f
    for j in range(m):
        f = b_h[j]
        for i in range(n):
            f += w_vh[i, j] * v[i]
        f_h[j] = f


@njit(cache=True)
def _flip_visible(i, d, w_vh, w_vv, f_v, f_h):
    for k in range(f_v.shape[0]):
        f_v[k] += d * w_vv[k, i]
    for j in range(f_h.shape[0]):
        f_h[j] += d * w_vh[i, j]


@njit(cache=True)
def _flip_hidden(j, d, w_vh, f_v):
    for i in range(f_v.shape[0]):
        f_v[i] += d * w_vh[i, j]


@njit(cache=True)
def anneal(states, w_vh, w_vv, b_v, b_h, betas, uniforms):
    """Single-bit-flip Metropolis annealing, one independent chain per row of ``states``.

    ``states`` (reads, N+M) uint8 is updated in place. ``uniforms`` has shape
    (reads, sweeps, N+M). Units are visited in index order within a sweep.
    Flipping unit i changes the energy by ``-(1 - 2 s_i) * field_i``.
    """
    n = b_v.shape[0]
    m = b_h.shape[0]
    f_v = np.empty(n)
    f_h = np.empty(m)
    for r in range(states.shape[0]):
        v = states[r, :n]
        h = states[r, n:]
        _init_fields(v, h, w_vh, w_vv, b_v, b_h, f_v, f_h)
        for t in range(betas.shape[0]):
            beta = betas[t]
            for i in range(n):
                delta = -(1.0 - 2.0 * v[i]) * f_v[i]
                if delta <= 0.0 or uniforms[r, t, i] < np.exp(-beta * delta):
                    d = 1.0 - 2.0 * v[i]
                    v[i] = 1 - v[i]
                    _flip_visible(i, d, w_vh, w_vv, f_v, f_h)
            for j in range(m):
                delta = -(1.0 - 2.0 * h[j]) * f_h[j]
                if delta <= 0.0 or uniforms[r, t, n + j] < np.exp(-beta * delta):
                    d = 1.0 - 2.0 * h[j]
                    h[j] = 1 - h[j]
                    _flip_hidden(j, d, w_vh, f_v)


@njit(cache=True)
def gibbs_sweeps(state, w_vh, w_vv, b_v, b_h, temperature, uniforms, trace):
    """Heat-bath sweeps on one chain: visibles one at a time, then the hidden block.

    ``state`` (N+M,) is updated in place; after sweep ``t`` it is copied into
    ``trace[t]``. ``uniforms`` has shape (sweeps, N+M). Hidden units have no
    mutual couplings, so updating them in sequence equals a block update.
    """
    n = b_v.shape[0]
    m = b_h.shape[0]
    v = state[:n]
    h = state[n:]
    f_v = np.empty(n)
    f_h = np.empty(m)
    _init_fields(v, h, w_vh, w_vv, b_v, b_h, f_v, f_h)
    for t in range(uniforms.shape[0]):
        for i in range(n):
            p = 1.0 / (1.0 + np.exp(-f_v[i] / temperature))
            new = 1 if uniforms[t, i] < p else 0
            if new != v[i]:
                v[i] = new
                _flip_visible(i, 2.0 * new - 1.0, w_vh, w_vv, f_v, f_h)
        for j in range(m):
            p = 1.0 / (1.0 + np.exp(-f_h[j] / temperature))
            new = 1 if uniforms[t, n + j] < p else 0
            if new != h[j]:
                h[j] = new
                _flip_hidden(j, 2.0 * new - 1.0, w_vh, f_v)
        trace[t, :] = state
