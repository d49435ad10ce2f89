"""Exact and asymptotic limiting degree distribution, plus independent oracles."""

from .asymptotics import (
    CRITICAL_CONSTANT,
    asymptotic,
    asymptotic_critical,
    asymptotic_subcritical,
    asymptotic_supercritical,
    log_asymptotic,
    subcritical_constant,
    supercritical_constant,
)
from .distribution import (
    CRITICAL_WINDOW,
    K_CAP,
    CliqueSizeDistribution,
    DegreeDistribution,
    Method,
    Regime,
    RegimeParams,
    asymptotic_tail_bound,
    degree_dist_critical,
    degree_dist_hypergeometric,
    degree_dist_subcritical,
    degree_dist_supercritical,
    degree_distribution,
    partial_sum_identity_residual,
    partial_sum_identity_residuals,
    recursion_residual,
    recursion_residuals,
    regime_params,
    tail_rule_K,
)
from .export import asymptotic_ratios, parse_table_csv, table_to_csv, table_to_json
from .recursion import (
    backward_recursion_oracle,
    forward_recursion,
    lower_bound_fixed_point,
    lower_bound_iterates,
)
from .special import hypergeometric_2f1, log_gamma
