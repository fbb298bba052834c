"""Hot numeric kernels: monomial feature evaluation and autoregressive rollout.

Both kernels exist twice: a numba-compiled version and a pure-numpy fallback.
The numba path is used when numba imports successfully and the ``EARC_NUMBA``
environment variable is not set to ``0``/``false``/``off`` at import time.
``benchmarks/bench_kernels.py`` times the two paths against each other.

Monomial features are evaluated through the (lead, parent) chains of a
compression plan: feature c equals window[lead[c]] times feature parent[c],
with the constant feature (last index) pinned to 1.  Every duplicate of a
monomial therefore shares one canonical product order, which is what makes
compression round trips bit-exact.
"""

import os

import numpy as np


def _flag_enabled():
    return os.environ.get("EARC_NUMBA", "1").strip().lower() not in ("0", "false", "off")


NUMBA_ENABLED = False
if _flag_enabled():
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a hard dependency normally
        NUMBA_ENABLED = False


def monomial_features_numpy(windows, lead, parent, out):
    """Fill ``out`` (rows, q) with the compressed monomial features of each window row."""
    q = lead.shape[0]
    out[:, q - 1] = 1.0
    for c in range(q - 1):
        np.multiply(windows[:, lead[c]], out[:, parent[c]], out=out[:, c])
    return out


def autoregress_numpy(coupling, lead, parent, seed, horizon, n_channels, lag,
                      consistent, norm_cap):
    """Iterate the one-step predictor ``horizon`` times from ``seed``.

    Returns (values, windows, steps, diverged) where the first ``steps`` rows
    are valid.  A step whose predicted dilated state is non-finite or has
    Euclidean norm above ``norm_cap`` is dropped and iteration stops.
    """
    m = seed.shape[0]
    q = lead.shape[0]
    values = np.zeros((horizon, n_channels))
    windows = np.zeros((horizon, m))
    w = seed.copy()
    phi = np.empty((1, q))
    for k in range(horizon):
        monomial_features_numpy(w[None, :], lead, parent, phi)
        y = coupling @ phi[0]
        if not np.all(np.isfinite(y)) or np.sqrt(np.sum(y * y)) > norm_cap:
            return values, windows, k, True
        if consistent:
            for j in range(n_channels):
                lo = j * lag
                w[lo:lo + lag - 1] = w[lo + 1:lo + lag]
                w[lo + lag - 1] = y[lo + lag - 1]
        else:
            w = y.copy()
        for j in range(n_channels):
            values[k, j] = y[j * lag + lag - 1]
        windows[k] = w
    return values, windows, horizon, False


if NUMBA_ENABLED:

    @njit(cache=True)
    def _monomial_features_jit(windows, lead, parent, out):
        rows = windows.shape[0]
        q = lead.shape[0]
        for i in range(rows):
            out[i, q - 1] = 1.0
            for c in range(q - 1):
                out[i, c] = windows[i, lead[c]] * out[i, parent[c]]
        return out

    @njit(cache=True)
    def _autoregress_jit(coupling, lead, parent, seed, horizon, n_channels, lag,
                         consistent, norm_cap):
        m = seed.shape[0]
        q = lead.shape[0]
        values = np.zeros((horizon, n_channels))
        windows = np.zeros((horizon, m))
        w = seed.copy()
        phi = np.empty(q)
        for k in range(horizon):
            phi[q - 1] = 1.0
            for c in range(q - 1):
                phi[c] = w[lead[c]] * phi[parent[c]]
            y = np.dot(coupling, phi)
            norm2 = 0.0
            ok = True
            for e in y:
                if not np.isfinite(e):
                    ok = False
                    break
                norm2 += e * e
            if not ok or np.sqrt(norm2) > norm_cap:
                return values, windows, k, True
            if consistent:
                for j in range(n_channels):
                    lo = j * lag
                    for t in range(lag - 1):
                        w[lo + t] = w[lo + t + 1]
                    w[lo + lag - 1] = y[lo + lag - 1]
            else:
                w = y.copy()
            for j in range(n_channels):
                values[k, j] = y[j * lag + lag - 1]
            windows[k] = w
        return values, windows, horizon, False

    def monomial_features(windows, lead, parent, out):
        return _monomial_features_jit(
            np.ascontiguousarray(windows), lead, parent, out
        )

    def autoregress(coupling, lead, parent, seed, horizon, n_channels, lag,
                    consistent, norm_cap):
        return _autoregress_jit(
            np.ascontiguousarray(coupling), lead, parent,
            np.ascontiguousarray(seed), horizon, n_channels, lag,
            consistent, norm_cap,
        )

else:
    monomial_features = monomial_features_numpy
    autoregress = autoregress_numpy
