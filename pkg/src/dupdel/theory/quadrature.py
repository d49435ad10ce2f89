"""Gauss-Jacobi rules on [0, 1] for the weight r**a.

Nodes are the eigenvalues of the Jacobi matrix of the shifted recurrence
(Golub-Welsch). The integrals here are often carried by nodes whose
weight is many orders of magnitude below the largest one, and
eigenvector components only resolve such weights to absolute, not
relative, precision; those weights come from the Christoffel function
instead. Eigenvector weights are kept within four orders of magnitude of
the largest, where they are the more accurate of the two. Working on
[0, 1] directly keeps the zeroth moment at 1/(a + 1), so nothing
overflows for the large exponents that appear when p is close to 1/2
(scipy's ``roots_jacobi`` returns NaN weights there).
"""

from functools import lru_cache
import math

import numpy as np
from numba import njit
from scipy.linalg import eigh_tridiagonal

# Node-count ladder; a rule is always taken from this list so the cache stays small.
NODE_LADDER = (64, 96, 128, 192, 256, 384, 512, 768, 1024, 1536, 2048)
MAX_NODES = NODE_LADDER[-1]
_TRUST_VECTOR = math.log(1e-4)


def nodes_for_index(k: int) -> int:
    """Smallest ladder size >= max(64, 2*ceil(sqrt(k)) + 64)."""
    want = max(64, 2 * math.ceil(math.sqrt(k)) + 64)
    for n in NODE_LADDER:
        if n >= want:
            return n
    return MAX_NODES


def next_rung(n: int):
    i = NODE_LADDER.index(n)
    return NODE_LADDER[i + 1] if i + 1 < len(NODE_LADDER) else None


def _recurrence(n: int, a: float):
    """Diagonal and off-diagonal of the Jacobi matrix for r**a on [0, 1]."""
    j = np.arange(n, dtype=float)
    s = 2.0 * j + a
    with np.errstate(divide="ignore", invalid="ignore"):
        diag = a * a / (s * (s + 2.0))
    diag[0] = a / (a + 2.0)
    jj, ss = j[1:], s[1:]
    off2 = 4.0 * jj * jj * (jj + a) ** 2 / (ss * ss * (ss + 1.0) * (ss - 1.0))
    return 0.5 * (1.0 + diag), 0.5 * np.sqrt(off2)


@njit(cache=True)
def _log_christoffel(nodes, diag, off, log_mu0):
    """log of 1 / sum_j p_j(x)**2 over the orthonormal polynomials.

    Unlike eigenvector components this keeps full relative accuracy for
    weights far below the largest one. The running sum is rescaled so
    nothing overflows.
    """
    n = diag.shape[0]
    out = np.empty(nodes.shape[0])
    log_big = 200.0 * math.log(10.0)
    for i in range(nodes.shape[0]):
        x = nodes[i]
        p_prev = 0.0
        p_cur = 1.0
        total = 1.0
        log_scale = 0.0
        for j in range(n - 1):
            back = off[j - 1] * p_prev if j > 0 else 0.0
            p_next = ((x - diag[j]) * p_cur - back) / off[j]
            p_prev = p_cur
            p_cur = p_next
            total += p_cur * p_cur
            if total > 1e200:
                p_prev *= 1e-100
                p_cur *= 1e-100
                total *= 1e-200
                log_scale += log_big
        out[i] = log_mu0 - (math.log(total) + log_scale)
    return out


@lru_cache(maxsize=256)
def gauss_jacobi(n: int, a: float):
    """``(nodes, log_weights)`` with sum(w f(r)) ~ integral_0^1 r**a f(r) dr.

    The returned arrays are read-only and shared between callers.
    """
    if a <= -1.0:
        raise ValueError("weight exponent must exceed -1")
    diag, off = _recurrence(n, a)
    nodes, vecs = eigh_tridiagonal(diag, off)
    nodes = np.clip(nodes, 0.0, 1.0)
    log_mu0 = -math.log1p(a)
    with np.errstate(divide="ignore"):
        log_w_vec = 2.0 * np.log(np.abs(vecs[0])) + log_mu0
    log_w = _log_christoffel(nodes, diag, off, log_mu0)
    # eigenvector weights are exact to ~eps * max weight, the Christoffel
    # sum loses a little relative accuracy when nodes crowd against r = 1
    big = log_w_vec >= log_w_vec.max() + _TRUST_VECTOR
    log_w[big] = log_w_vec[big]
    nodes.flags.writeable = False
    log_w.flags.writeable = False
    return nodes, log_w
