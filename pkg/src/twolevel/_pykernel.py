"""Pure numpy fallback for the compiled midpoint kernels.

Step exponentials are built in batches and multiplied by pairwise
reduction, so the Python-level loop runs over chunks rather than steps.
"""

import numpy as np

_CHUNK = 1 << 15


def _step_matrices(offset, axes, amps, freqs, phases, t, h):
    B = np.repeat(np.asarray(offset, dtype=float)[:, None], t.size, axis=1)
    for ax, amp, fr, ph in zip(axes, amps, freqs, phases):
        B[int(ax)] += amp * np.cos(fr * t + ph)
    a = -0.5 * B
    n = np.sqrt((a * a).sum(axis=0))
    c = np.cos(n * h)
    safe = np.where(n > 0.0, n, 1.0)
    s = np.where(n > 0.0, np.sin(n * h) / safe, h)
    M = np.empty((t.size, 2, 2), dtype=complex)
    M[:, 0, 0] = c - 1j * s * a[2]
    M[:, 1, 1] = c + 1j * s * a[2]
    M[:, 0, 1] = -1j * s * (a[0] - 1j * a[1])
    M[:, 1, 0] = -1j * s * (a[0] + 1j * a[1])
    return M


def _reduce(M):
    # later steps multiply from the left
    while M.shape[0] > 1:
        if M.shape[0] % 2:
            M = np.concatenate([M, np.eye(2, dtype=complex)[None]])
        M = M[1::2] @ M[0::2]
    return M[0]


def step_product(offset, axes, amps, freqs, phases, t0, h, n):
    U = np.eye(2, dtype=complex)
    for start in range(0, n, _CHUNK):
        j = np.arange(start, min(start + _CHUNK, n))
        M = _step_matrices(offset, axes, amps, freqs, phases, t0 + (j + 0.5) * h, h)
        U = _reduce(M) @ U
    return U


def interval_products(offset, axes, amps, freqs, phases, t0, h, substeps, n_intervals, cumulative):
    out = np.empty((n_intervals, 2, 2), dtype=complex)
    per_chunk = max(1, _CHUNK // max(substeps, 1))
    j = np.arange(substeps)
    for start in range(0, n_intervals, per_chunk):
        idx = np.arange(start, min(start + per_chunk, n_intervals))
        t = t0 + ((idx[:, None] * substeps + j[None, :]) + 0.5) * h
        M = _step_matrices(offset, axes, amps, freqs, phases, t.ravel(), h)
        M = M.reshape(idx.size, substeps, 2, 2)
        while M.shape[1] > 1:
            if M.shape[1] % 2:
                M = np.concatenate([M, np.broadcast_to(np.eye(2, dtype=complex), (idx.size, 1, 2, 2))], axis=1)
            M = M[:, 1::2] @ M[:, 0::2]
        out[idx] = M[:, 0]
    if cumulative:
        for i in range(1, n_intervals):
            out[i] = out[i] @ out[i - 1]
    return out
