"""Recurrence-based routes to d_k: Miller backward recursion and the
monotone lower-bound iteration for c_k = d_k / k.

The wanted sequence is the minimal solution of the three-term recurrence:
every other solution outgrows it, so running the recurrence forward
from (d_0, d_1) amplifies rounding errors until the iterate leaves
[0, 1]. ``forward_recursion`` exists only to show that.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..errors import NonConvergenceError, ValidationError
from .distribution import CliqueSizeDistribution, DegreeDistribution, Method, _finish

_RESCALE_AT = 1e150
MAX_EXTENSION = 1 << 24


@njit(cache=True)
def _backward_pass(p, n_ext, n_keep):
    """Unnormalised backward solution for k = 0..n_keep as (log mantissa, rescale count).

    Starts from v_{n_ext+1} = 0, v_{n_ext} = 1 and divides by 1e150
    whenever the iterate grows past it; the integer count of divisions
    keeps differences of logs exact when the total scale is enormous.
    """
    mant = np.empty(n_keep + 1)
    count = np.zeros(n_keep + 1, dtype=np.int64)
    v_next = 0.0
    v = 1.0
    scaled = 0
    for k in range(n_ext, 0, -1):
        if k <= n_keep:
            mant[k] = math.log(v)
            count[k] = scaled
        v_prev = ((k + p) * v - (1.0 - p) * k * v_next) / (p * k)
        v_next = v
        v = v_prev
        if v > _RESCALE_AT:
            v /= _RESCALE_AT
            v_next /= _RESCALE_AT
            scaled += 1
    mant[0] = math.log(v)
    count[0] = scaled
    return mant, count


def _normalised_logs(p: float, n_ext: int, n_keep: int) -> np.ndarray:
    mant, count = _backward_pass(p, n_ext, n_keep)
    return (mant - mant[0]) + (count - count[0]) * math.log(_RESCALE_AT) + math.log((1.0 - p) / p)


def backward_recursion_oracle(
    p: float,
    K: int,
    K_ext: int | None = None,
    stable_rtol: float = 1e-12,
    adapt: bool = True,
) -> DegreeDistribution:
    """d_1..d_K by Miller's algorithm, rescaled so that d_0 = (1 - p) / p.

    ``K_ext`` defaults to 2K + 100. With ``adapt`` the extension doubles
    until entries 1..K+1 change by at most ``stable_rtol`` (relative, plus
    a rounding floor that grows with k) between successive extensions.
    """
    if not (0.0 < p < 1.0):
        raise ValidationError(f"p must lie strictly inside (0, 1), got {p!r}")
    if int(K) != K or K < 2:
        raise ValidationError("K must be an integer >= 2")
    K = int(K)
    n_ext = 2 * K + 100 if K_ext is None else int(K_ext)
    if n_ext <= K + 1:
        raise ValidationError("K_ext must exceed K + 1")
    logs = _normalised_logs(p, n_ext, K + 1)
    index = np.arange(1, K + 2, dtype=float)
    if adapt:
        while True:
            if 2 * n_ext > MAX_EXTENSION:
                raise NonConvergenceError(f"backward recursion not stable below K_ext={MAX_EXTENSION}")
            n_ext *= 2
            nxt = _normalised_logs(p, n_ext, K + 1)
            # rounding floor: logs resolve |log d_k| * eps, and each of the k
            # recurrence steps below K_ext adds about eps of relative error
            allowed = stable_rtol + 16.0 * np.finfo(float).eps * (np.abs(nxt[1:]) + index)
            stable = np.all(np.abs(np.expm1(nxt[1:] - logs[1:])) <= allowed)
            logs = nxt
            if stable:
                break
    d = _finish(p, logs, Method.BACKWARD_RECURSION, stable_rtol)
    d.d0 = (1.0 - p) / p
    return d


def forward_recursion(p: float, d1: float, K: int) -> np.ndarray:
    """d_0..d_K from d_0 = (1-p)/p and a given d_1, run forward.

    Numerically unstable by construction; not used to produce results.
    """
    d = np.empty(K + 1)
    d[0] = (1.0 - p) / p
    d[1] = d1
    for k in range(1, K):
        d[k + 1] = ((k + p) * d[k] - p * k * d[k - 1]) / ((1.0 - p) * k)
    return d


def lower_bound_iterates(p: float, K: int):
    """Yield a^(1), a^(2), ... for the clique-size lower bounds, truncated at K.

    a^(0) = 0; a_1 <- (1-p)(1 + 2 a_2)/(1+p) and
    a_k <- (p (k-1) a_{k-1} + (1-p)(k+1) a_{k+1}) / (k + p), with a_k = 0 for k > K.
    """
    k = np.arange(1, K + 1, dtype=float)
    left = p * (k - 1.0) / (k + p)
    right = (1.0 - p) * (k + 1.0) / (k + p)
    a = np.zeros(K + 2)  # a[0] and a[K+1] stay zero
    new = np.empty(K)
    while True:
        new[:] = left * a[:-2] + right * a[2:]
        new[0] = (1.0 - p) * (1.0 + 2.0 * a[2]) / (1.0 + p)
        a[1:-1] = new
        yield a[1:-1].copy()


def lower_bound_fixed_point(p: float, K: int, iterations: int) -> CliqueSizeDistribution:
    """a^(iterations): entrywise non-decreasing in the iteration count and below c_k."""
    if not (0.0 < p < 1.0):
        raise ValidationError(f"p must lie strictly inside (0, 1), got {p!r}")
    if iterations < 1 or K < 2:
        raise ValidationError("need iterations >= 1 and K >= 2")
    it = lower_bound_iterates(p, int(K))
    for _ in range(iterations - 1):
        next(it)
    return CliqueSizeDistribution(p, next(it), Method.FIXED_POINT)
