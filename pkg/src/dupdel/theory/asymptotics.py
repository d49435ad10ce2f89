"""Large-k behaviour of the limiting degree distribution in each regime."""

import math

import numpy as np

from ..errors import ValidationError
from .special import log_gamma


def _beta_gamma(p):
    return p / (2.0 * p - 1.0), (1.0 - p) / p


def log_supercritical_constant(p: float) -> float:
    beta, gamma = _beta_gamma(p)
    return math.log(gamma) + beta * math.log(beta) + log_gamma(beta + 1.0)


def log_subcritical_constant(p: float) -> float:
    beta, _ = _beta_gamma(p)
    return -math.log(-beta) + (1.0 - beta) * math.log1p(-beta) + log_gamma(1.0 - beta)


def supercritical_constant(p: float) -> float:
    """gamma * beta**beta * Gamma(beta + 1), the power-law prefactor."""
    return math.exp(log_supercritical_constant(p))


def subcritical_constant(p: float) -> float:
    """(-beta)**-1 (1 - beta)**(1 - beta) Gamma(1 - beta)."""
    return math.exp(log_subcritical_constant(p))


CRITICAL_CONSTANT = math.sqrt(math.e * math.pi)


def log_asymptotic_supercritical(p, k):
    if not (0.5 < p < 1.0):
        raise ValidationError("supercritical asymptotics need 1/2 < p < 1")
    beta, _ = _beta_gamma(p)
    return log_supercritical_constant(p) - beta * np.log(k)


def log_asymptotic_subcritical(p, k):
    if not (0.0 < p < 0.5):
        raise ValidationError("subcritical asymptotics need 0 < p < 1/2")
    beta, gamma = _beta_gamma(p)
    return log_subcritical_constant(p) - np.multiply(k, math.log(gamma)) + beta * np.log(k)


def log_asymptotic_critical(k):
    k = np.asarray(k, dtype=float)
    return 0.5 * (1.0 + math.log(math.pi)) + 0.25 * np.log(k) - 2.0 * np.sqrt(k)


def asymptotic_supercritical(p, k):
    """d_k ~ gamma beta**beta Gamma(beta+1) k**-beta for 1/2 < p < 1."""
    return np.exp(log_asymptotic_supercritical(p, np.asarray(k, dtype=float)))


def asymptotic_subcritical(p, k):
    """d_k ~ C gamma**-k k**beta for 0 < p < 1/2 (evaluated in log space)."""
    return np.exp(log_asymptotic_subcritical(p, np.asarray(k, dtype=float)))


def asymptotic_critical(k):
    """d_k ~ sqrt(e pi) k**(1/4) exp(-2 sqrt(k)) at p = 1/2."""
    return np.exp(log_asymptotic_critical(k))


def log_asymptotic(p: float, k, critical_window: float = 1e-12):
    if abs(p - 0.5) <= critical_window:
        return log_asymptotic_critical(k)
    if p > 0.5:
        return log_asymptotic_supercritical(p, np.asarray(k, dtype=float))
    return log_asymptotic_subcritical(p, np.asarray(k, dtype=float))


def asymptotic(p: float, k, critical_window: float = 1e-12):
    return np.exp(log_asymptotic(p, k, critical_window))
