"""Limiting degree distribution d_k of the duplication-deletion process.

The sequence is the unique positive bounded solution of

    (k + p) d_k = p k d_{k-1} + (1 - p) k d_{k+1},   d_0 = (1 - p) / p.

Away from p = 1/2 it is a hypergeometric integral. Writing
beta = p / (2p - 1) and gamma = (1 - p) / p, the substitution
r = (1 - t) / (1 - q t) turns both the supercritical and subcritical
integrals into

    d_k = C rho**k  integral_0^1  r**a  h(r)**k  dr,   h(r) = (1 - r) / (1 - q r)

with

    p > 1/2:  a = beta - 1,   q = gamma,     C = gamma * beta,  rho = 1
    p < 1/2:  a = -beta - 1,  q = 1 / gamma, C = 1 - beta,      rho = 1 / gamma

so ``h`` is bounded by 1 on [0, 1] and its pole 1/q sits outside the
interval. The endpoint factor r**a is the Gauss-Jacobi weight. At
p = 1/2 the solution is d_k = k integral_0^1 s**(k-1) exp(-s / (1 - s)) ds,
integrated with weight s**(k-1).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc, logsumexp

from ..errors import QuadratureError, ValidationError
from . import asymptotics as asy
from .quadrature import MAX_NODES, gauss_jacobi, next_rung, nodes_for_index
from .special import hypergeometric_2f1, log_gamma

CRITICAL_WINDOW = 1e-12
DEFAULT_TOL = 1e-12
DEFAULT_NORM_TOL = 1e-6
K_CAP = 100_000
_ROW_CHUNK = 2048
_CLAMP = 1e-12
_LOG_TINY = -650.0
_CHECK_STRIDE = 7


class Regime(enum.Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


class Method(enum.Enum):
    QUADRATURE = "quadrature"
    HYPERGEOMETRIC = "hypergeometric"
    BACKWARD_RECURSION = "backward_recursion"
    FIXED_POINT = "fixed_point"


@dataclass(frozen=True)
class RegimeParams:
    p: float
    beta: float | None
    gamma: float
    regime: Regime


def regime_params(p: float) -> RegimeParams:
    if not (0.0 < p < 1.0):
        raise ValidationError(f"p must lie strictly inside (0, 1), got {p!r}")
    gamma = (1.0 - p) / p
    if p == 0.5:
        return RegimeParams(p, None, gamma, Regime.CRITICAL)
    beta = p / (2.0 * p - 1.0)
    return RegimeParams(p, beta, gamma, Regime.SUPERCRITICAL if p > 0.5 else Regime.SUBCRITICAL)


def _is_critical(p: float) -> bool:
    return abs(p - 0.5) <= CRITICAL_WINDOW


@dataclass
class DegreeDistribution:
    """Truncated sequence d_1..d_K plus the bookkeeping value d_0.

    ``tail_mass`` estimates sum_{k>K} d_k through the partial-sum identity
    at n = K, which is why every method also computes ``next_value`` =
    d_{K+1}. ``log_values`` keeps entries that underflow in ``values``.
    """

    p: float
    values: np.ndarray
    d0: float
    next_value: float
    tail_mass: float
    method: Method
    tol: float
    log_values: np.ndarray | None = field(default=None, repr=False)

    @property
    def K(self) -> int:
        return int(self.values.shape[0])

    @property
    def regime(self) -> Regime:
        return Regime.CRITICAL if _is_critical(self.p) else regime_params(self.p).regime

    def d(self, k: int) -> float:
        """d_k for 0 <= k <= K + 1."""
        if k == 0:
            return self.d0
        if k == self.K + 1:
            return self.next_value
        if 1 <= k <= self.K:
            return float(self.values[k - 1])
        raise IndexError(f"k={k} outside 0..{self.K + 1}")

    def extended(self) -> np.ndarray:
        """Array d_0, d_1, ..., d_{K+1}."""
        return np.concatenate(([self.d0], self.values, [self.next_value]))

    def total(self) -> float:
        return math.fsum(self.values) + self.tail_mass

    def clique_sizes(self) -> "CliqueSizeDistribution":
        k = np.arange(1, self.K + 1, dtype=float)
        return CliqueSizeDistribution(self.p, self.values / k, self.method)


@dataclass
class CliqueSizeDistribution:
    """c_1..c_K with k c_k = d_k."""

    p: float
    values: np.ndarray
    method: Method

    @property
    def K(self) -> int:
        return int(self.values.shape[0])

    def degree_values(self) -> np.ndarray:
        return self.values * np.arange(1, self.K + 1, dtype=float)


def recursion_residual(d: DegreeDistribution, k: int) -> float:
    """(k + p) d_k - p k d_{k-1} - (1 - p) k d_{k+1}; zero for an exact solution."""
    if not (1 <= k <= d.K - 1):
        raise IndexError(f"residual needs 1 <= k <= K-1 = {d.K - 1}, got {k}")
    p = d.p
    return (k + p) * d.d(k) - p * k * d.d(k - 1) - (1.0 - p) * k * d.d(k + 1)


def recursion_residuals(d: DegreeDistribution) -> np.ndarray:
    """Residuals for k = 1..K (uses d_{K+1} for the last one)."""
    e = d.extended()
    k = np.arange(1, d.K + 1, dtype=float)
    p = d.p
    return (k + p) * e[1:-1] - p * k * e[:-2] - (1.0 - p) * k * e[2:]


def partial_sum_correction(p: float, n: int, d_n: float, d_next: float) -> float:
    """(-p (n+1) d_n + (1-p) n d_{n+1}) / (1 - p)."""
    return (-p * (n + 1) * d_n + (1.0 - p) * n * d_next) / (1.0 - p)


def partial_sum_identity_residual(d: DegreeDistribution, n: int) -> float:
    """sum_{k<=n} d_k - (1 + correction(n)); zero for any solution with d_0 = (1-p)/p."""
    if not (1 <= n <= d.K - 1):
        raise IndexError(f"identity needs 1 <= n <= K-1 = {d.K - 1}, got {n}")
    lhs = math.fsum(d.values[:n])
    return lhs - 1.0 - partial_sum_correction(d.p, n, d.d(n), d.d(n + 1))


def partial_sum_identity_residuals(d: DegreeDistribution) -> np.ndarray:
    """Residuals for n = 1..K (n = K uses d_{K+1})."""
    e = d.extended()
    n = np.arange(1, d.K + 1, dtype=float)
    p = d.p
    corr = (-p * (n + 1) * e[1:-1] + (1.0 - p) * n * e[2:]) / (1.0 - p)
    return np.cumsum(d.values) - 1.0 - corr


def tail_mass_from_identity(p: float, K: int, d_K: float, d_next: float) -> float:
    return -partial_sum_correction(p, K, d_K, d_next)


# --- tail rule ----------------------------------------------------------------


def asymptotic_tail_bound(p: float, K: int) -> float:
    """Asymptotic-formula estimate of sum_{k>K} d_k."""
    if _is_critical(p):
        z = 2.0 * math.sqrt(K)
        return asy.CRITICAL_CONSTANT * 2.0**-1.5 * math.gamma(2.5) * float(gammaincc(2.5, z))
    beta, gamma = p / (2 * p - 1), (1 - p) / p
    if p > 0.5:
        log_c = asy.log_supercritical_constant(p)
        return math.exp(min(700.0, log_c + (1.0 - beta) * math.log(K) - math.log(beta - 1.0)))
    log_next = float(asy.log_asymptotic_subcritical(p, K + 1))
    return math.exp(min(700.0, log_next)) / (1.0 - 1.0 / gamma)


def tail_rule_K(p: float, norm_tol: float = DEFAULT_NORM_TOL, cap: int = K_CAP) -> int:
    """Smallest K whose asymptotic tail estimate is below ``norm_tol`` (at most ``cap``)."""
    if asymptotic_tail_bound(p, cap) >= norm_tol:
        return cap
    lo, hi = 1, 1
    while asymptotic_tail_bound(p, hi) >= norm_tol:
        lo, hi = hi, hi * 2
    while lo < hi:
        mid = (lo + hi) // 2
        if asymptotic_tail_bound(p, mid) < norm_tol:
            hi = mid
        else:
            lo = mid + 1
    return max(2, min(hi, cap))


# --- quadrature ---------------------------------------------------------------


def _mobius_setup(p: float):
    """(a, q, 1 - q, log C, log rho) for the substituted integral."""
    beta = p / (2.0 * p - 1.0)
    gamma = (1.0 - p) / p
    if p > 0.5:
        # 1 - gamma = (2p - 1) / p keeps full precision near p = 1/2
        return beta - 1.0, gamma, (2.0 * p - 1.0) / p, math.log(gamma * beta), 0.0
    return -beta - 1.0, 1.0 / gamma, (1.0 - 2.0 * p) / (1.0 - p), math.log1p(-beta), -math.log(gamma)


def _log_integral_mobius(setup, ks: np.ndarray, n: int) -> np.ndarray:
    a, _, one_minus_q, log_c, log_rho = setup
    r, log_w = gauss_jacobi(n, a)
    one_minus_r = 1.0 - r
    with np.errstate(divide="ignore"):
        log_h = np.log(one_minus_r) - np.log(one_minus_r + one_minus_q * r)
    out = np.empty(ks.shape[0])
    for s in range(0, ks.shape[0], _ROW_CHUNK):
        kk = ks[s : s + _ROW_CHUNK].astype(float)[:, None]
        terms = log_w[None, :] + np.where(kk == 0.0, 0.0, kk * log_h[None, :])
        with np.errstate(divide="ignore"):
            block = np.log(np.exp(terms).sum(axis=1))
        tiny = block < _LOG_TINY
        if tiny.any():
            block[tiny] = logsumexp(terms[tiny], axis=1)
        out[s : s + _ROW_CHUNK] = block
    return out + log_c + ks * log_rho


def _log_integral_critical(ks: np.ndarray, n: int) -> np.ndarray:
    # Consecutive k share one rule: a block starting at k0 uses weight
    # s**(k0 - 1) and carries the extra s**(k - k0) in the integrand.
    out = np.empty(ks.shape[0])
    i = 0
    while i < ks.shape[0]:
        k0 = int(ks[i])
        width = max(1, math.isqrt(k0))
        j = i
        while j < ks.shape[0] and int(ks[j]) < k0 + width:
            j += 1
        s, log_w = gauss_jacobi(n, float(k0 - 1))
        inside = s < 1.0 - _CLAMP
        s_in = s[inside]
        base = log_w[inside] - s_in / (1.0 - s_in)
        with np.errstate(divide="ignore"):
            log_s = np.log(s_in)
        extra = (ks[i:j] - k0).astype(float)[:, None]
        terms = base[None, :] + np.where(extra == 0.0, 0.0, extra * log_s[None, :])
        out[i:j] = np.log(ks[i:j]) + logsumexp(terms, axis=1)
        i = j
    return out


def _adaptive_log_values(ks: np.ndarray, tol: float, evaluate) -> np.ndarray:
    """Evaluate log d_k on the node ladder, escalating groups that miss ``tol``.

    The error is estimated by the difference to the next rung of the
    ladder, on the two ends of each node group and every
    ``_CHECK_STRIDE``-th index in between (within a group the hardest
    entry is the largest k).
    """
    out = np.empty(ks.shape[0])
    rungs = np.array([nodes_for_index(int(k)) for k in ks])
    for n0 in np.unique(rungs):
        idx = np.nonzero(rungs == n0)[0]
        n = int(n0)
        probe = np.unique(np.concatenate((np.arange(0, idx.shape[0], _CHECK_STRIDE), [idx.shape[0] - 1])))
        current = evaluate(ks[idx], n)
        err = np.full(probe.shape[0], np.inf)
        while True:
            n_next = next_rung(n)
            if n_next is None:
                worst = int(probe[np.argmax(err)])
                raise QuadratureError(
                    f"quadrature missed tol={tol:g} with {MAX_NODES} nodes at k={int(ks[idx][worst])}",
                    worst_k=int(ks[idx][worst]),
                    error=float(np.max(err)),
                )
            check = evaluate(ks[idx][probe], n_next)
            err = np.abs(np.exp(current[probe]) - np.exp(check))
            if np.all(err <= tol):
                break
            n = n_next
            current = evaluate(ks[idx], n)
        out[idx] = current
    return out


def _finish(p, log_vals, method, tol) -> DegreeDistribution:
    """Package log d_0..log d_{K+1} into a DegreeDistribution."""
    vals = np.exp(log_vals)
    K = vals.shape[0] - 2
    return DegreeDistribution(
        p=p,
        values=vals[1 : K + 1].copy(),
        d0=float(vals[0]),
        next_value=float(vals[K + 1]),
        tail_mass=tail_mass_from_identity(p, K, float(vals[K]), float(vals[K + 1])),
        method=method,
        tol=tol,
        log_values=log_vals[1 : K + 1].copy(),
    )


def _check_K(K):
    if int(K) != K or K < 2:
        raise ValidationError(f"K must be an integer >= 2, got {K!r}")
    return int(K)


def degree_dist_supercritical(p: float, K: int | None = None, tol: float = DEFAULT_TOL) -> DegreeDistribution:
    """d_k for 1/2 < p < 1 by Gauss-Jacobi quadrature."""
    if not (0.5 < p < 1.0):
        raise ValidationError("supercritical branch needs 1/2 < p < 1")
    K = tail_rule_K(p) if K is None else _check_K(K)
    setup = _mobius_setup(p)
    ks = np.arange(0, K + 2)
    log_vals = _adaptive_log_values(ks, tol, lambda kk, n: _log_integral_mobius(setup, kk, n))
    return _finish(p, log_vals, Method.QUADRATURE, tol)


def degree_dist_subcritical(p: float, K: int | None = None, tol: float = DEFAULT_TOL) -> DegreeDistribution:
    """d_k for 0 < p < 1/2 by Gauss-Jacobi quadrature."""
    if not (0.0 < p < 0.5):
        raise ValidationError("subcritical branch needs 0 < p < 1/2")
    K = tail_rule_K(p) if K is None else _check_K(K)
    setup = _mobius_setup(p)
    ks = np.arange(0, K + 2)
    log_vals = _adaptive_log_values(ks, tol, lambda kk, n: _log_integral_mobius(setup, kk, n))
    return _finish(p, log_vals, Method.QUADRATURE, tol)


def degree_dist_critical(K: int | None = None, tol: float = DEFAULT_TOL) -> DegreeDistribution:
    """d_k at p = 1/2; d_0 = 1 is the bookkeeping value."""
    K = tail_rule_K(0.5) if K is None else _check_K(K)
    ks = np.arange(1, K + 2)
    log_vals = np.concatenate(([0.0], _adaptive_log_values(ks, tol, _log_integral_critical)))
    return _finish(0.5, log_vals, Method.QUADRATURE, tol)


def degree_distribution(p: float, K: int | None = None, tol: float = DEFAULT_TOL) -> DegreeDistribution:
    """Quadrature solution for any 0 < p < 1; |p - 1/2| <= 1e-12 counts as critical."""
    if not (0.0 < p < 1.0):
        raise ValidationError(f"p must lie strictly inside (0, 1), got {p!r}")
    if _is_critical(p):
        d = degree_dist_critical(K, tol)
        d.p = p
        return d
    if p > 0.5:
        return degree_dist_supercritical(p, K, tol)
    return degree_dist_subcritical(p, K, tol)


def degree_dist_hypergeometric(p: float, K: int) -> DegreeDistribution:
    """Supercritical d_k from the Gauss series:

    d_k = gamma Gamma(k+1) Gamma(beta) / Gamma(beta+k+1) 2F1(beta+1, k+1; beta+k+1; gamma)
    """
    if not (0.5 < p < 1.0):
        raise ValidationError("the series form is only used for 1/2 < p < 1")
    K = _check_K(K)
    beta = p / (2.0 * p - 1.0)
    gamma = (1.0 - p) / p
    log_vals = np.empty(K + 2)
    for k in range(K + 2):
        log_pref = math.log(gamma) + log_gamma(k + 1.0) + log_gamma(beta) - log_gamma(beta + k + 1.0)
        log_vals[k] = log_pref + math.log(hypergeometric_2f1(beta + 1.0, k + 1.0, beta + k + 1.0, gamma))
    return _finish(p, log_vals, Method.HYPERGEOMETRIC, 0.0)
