"""Compensated summation with explicit error bounds."""
from __future__ import annotations

import numpy as np

EPS = 2.0**-52
U = EPS / 2  # unit roundoff


def _two_sum(a, b):
    s = a + b
    z = s - a
    e = (a - (s - z)) + (b - z)
    return s, e


def cascade_sum(x):
    """Sum along the last axis; returns (value, bound on |value - exact sum|).

    Pairwise reduction where every addition is an error-free TwoSum; the
    rounding errors are collected and added back at the end.  1-d input
    gives floats, n-d input gives arrays over the leading axes.
    """
    x = np.asarray(x, dtype=np.float64)
    scalar = x.ndim <= 1
    if scalar:
        x = x.reshape(1, -1)
    lead = x.shape[:-1]
    if x.shape[-1] == 0:
        z = np.zeros(lead)
        return (0.0, 0.0) if scalar else (z, z.copy())
    errs = []
    while x.shape[-1] > 1:
        if x.shape[-1] % 2:
            x = np.concatenate([x, np.zeros(lead + (1,))], axis=-1)
        s, e = _two_sum(x[..., 0::2], x[..., 1::2])
        errs.append(e)
        x = s
    head = x[..., 0]
    if errs:
        e = np.concatenate(errs, axis=-1)
        tail = e.sum(axis=-1)
        # numpy's pairwise sum: error <= n u sum|e| is a safe (very loose) bound
        tail_err = e.shape[-1] * U * np.abs(e).sum(axis=-1) * 1.01
    else:
        tail = tail_err = np.zeros(lead)
    value = head + tail
    bound = tail_err + U * np.abs(value) * 1.01
    if scalar:
        return float(value[0]), float(bound[0])
    return value, bound
