"""Empirical degree distributions and their comparison with the limit law."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels as kern
from .errors import ValidationError
from .process import CliqueState, ProcessParams, Snapshot, make_stream, simulate
from .theory.distribution import DegreeDistribution, Regime

MIN_FIT_POINTS = 5
# vertices a size class needs before it enters the default subcritical window
SUBCRITICAL_MIN_VERTICES = 100
SUBCRITICAL_K_MIN = 5
SUPERCRITICAL_K_MIN = 10
# cliques a size class needs before it enters the default power-law window
SUPERCRITICAL_MIN_CLIQUES = 10


@dataclass(frozen=True)
class EmpiricalDistribution:
    """D_{m,k} / N_m for the occupied sizes k at step m."""

    m: int
    n_vertices: int
    fractions: Mapping[int, float]

    def __post_init__(self):
        if self.n_vertices < 1:
            raise ValidationError("n_vertices must be positive")
        total = math.fsum(self.fractions.values())
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"fractions sum to {total!r}, not 1")

    @property
    def support(self) -> list[int]:
        return sorted(k for k, f in self.fractions.items() if f > 0)

    def max_size(self) -> int:
        return max(self.support)

    def vertex_counts(self) -> dict[int, float]:
        return {k: f * self.n_vertices for k, f in self.fractions.items()}

    def lumped(self, K: int) -> np.ndarray:
        """Array of fractions for k = 1..K followed by the mass beyond K."""
        out = np.zeros(K + 1)
        tail = []
        for k, f in self.fractions.items():
            if k <= K:
                out[k - 1] = f
            else:
                tail.append(f)
        out[K] = math.fsum(tail)
        return out


def _counts_of(source) -> tuple[int, int, dict[int, int]]:
    if isinstance(source, CliqueState):
        return source.step_index, source.num_vertices, source.counts_map()
    if isinstance(source, Snapshot):
        return source.m, source.n_vertices, source.counts_map()
    raise TypeError(f"expected CliqueState or Snapshot, got {type(source).__name__}")


def empirical_degree_distribution(source: CliqueState | Snapshot) -> EmpiricalDistribution:
    """fractions[k] = k C_k / N for every occupied size k."""
    m, n, counts = _counts_of(source)
    fractions = {k: k * c / n for k, c in sorted(counts.items()) if c > 0}
    return EmpiricalDistribution(m, n, fractions)


def pool_replicas(sources: Iterable[CliqueState | Snapshot]) -> EmpiricalDistribution:
    """Degree distribution of the disjoint union of several runs at the same m."""
    total: dict[int, int] = {}
    n_total = 0
    ms = set()
    for src in sources:
        m, n, counts = _counts_of(src)
        ms.add(m)
        n_total += n
        for k, c in counts.items():
            total[k] = total.get(k, 0) + c
    if len(ms) != 1:
        raise ValidationError("pooled runs must share the same step index")
    fractions = {k: k * c / n_total for k, c in sorted(total.items()) if c > 0}
    return EmpiricalDistribution(ms.pop(), n_total, fractions)


# --- one-step oracle ---------------------------------------------------------


def expected_next_clique_counts(state: CliqueState, p: float) -> dict[int, float]:
    """E[C_{m+1,k} | state] for k = 1..max size + 1.

    E[C_1] = C_1 (1 - 1/N) + (1 - p) + 2 (1 - p) C_2 / N
    E[C_k] = C_k (1 - k/N) + p (k-1) C_{k-1} / N + (1 - p)(k+1) C_{k+1} / N
    """
    if not (0.0 <= p <= 1.0):
        raise ValidationError(f"p must lie in [0, 1], got {p!r}")
    top = state.max_size() + 1
    c = np.zeros(top + 2)
    c[: top + 1] = state.counts[: top + 1]
    n = float(state.num_vertices)
    out = {1: c[1] * (1.0 - 1.0 / n) + (1.0 - p) + 2.0 * (1.0 - p) * c[2] / n}
    for k in range(2, top + 1):
        out[k] = c[k] * (1.0 - k / n) + p * (k - 1) * c[k - 1] / n + (1.0 - p) * (k + 1) * c[k + 1] / n
    return out


def monte_carlo_next_clique_counts(state: CliqueState, p: float, trials: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and standard error of C_{m+1,k}, k = 1..max size + 1.

    Each trial is one step from the same frozen state, drawn with the same
    word layout as the simulator.
    """
    if trials < 2:
        raise ValidationError("need at least two trials")
    work = state.copy()
    top = work.max_size() + 1
    work.ensure_capacity(top)
    words = np.asarray(rng.bit_generator.random_raw(2 * trials), dtype=np.uint64)
    sums = np.zeros(top + 1)
    sumsq = np.zeros(top + 1)
    kern.one_step_moments(work.counts, work.tree, work.cap, work.num_vertices, p, words, sums, sumsq)
    mean = sums[1:] / trials
    var = np.maximum(sumsq[1:] / trials - mean * mean, 0.0) * trials / (trials - 1)
    return mean, np.sqrt(var / trials)


# --- distances ---------------------------------------------------------------


def lumped_theory(theory: DegreeDistribution) -> np.ndarray:
    return np.concatenate((theory.values, [theory.tail_mass]))


def lumped_total_variation(u: Sequence[float], v: Sequence[float]) -> float:
    """Half the l1 distance between two lumped probability vectors."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValidationError("lumped vectors must share a support")
    return 0.5 * math.fsum(np.abs(u - v))


def total_variation(empirical: EmpiricalDistribution, theory: DegreeDistribution) -> float:
    """TV distance with all mass beyond the theory truncation K in one bucket."""
    return lumped_total_variation(empirical.lumped(theory.K), lumped_theory(theory))


# --- tail fits ---------------------------------------------------------------


def _window(empirical: EmpiricalDistribution, k_min: int, k_max: int) -> tuple[np.ndarray, np.ndarray]:
    if k_min < 1 or k_max < k_min:
        raise ValidationError(f"bad fit window [{k_min}, {k_max}]")
    ks = np.array([k for k in empirical.support if k_min <= k <= k_max], dtype=float)
    if ks.shape[0] < MIN_FIT_POINTS:
        raise ValidationError(
            f"only {ks.shape[0]} occupied sizes in [{k_min}, {k_max}], need {MIN_FIT_POINTS}"
        )
    fr = np.array([empirical.fractions[int(k)] for k in ks])
    return ks, np.log(fr)


def _ols_slope(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def default_power_law_window(empirical: EmpiricalDistribution) -> tuple[int, int]:
    """[10, last size holding >= 10 cliques].

    Beyond that point most sizes hold zero or one clique, and a log-log fit
    over occupied bins reads the sampling floor k / N instead of the law.
    """
    counts = empirical.vertex_counts()
    well = [k for k in empirical.support if counts[k] / k >= SUPERCRITICAL_MIN_CLIQUES - 1e-9]
    return SUPERCRITICAL_K_MIN, max([SUPERCRITICAL_K_MIN] + well)


def default_rate_window(empirical: EmpiricalDistribution) -> tuple[int, int]:
    """[5, last size holding >= 100 vertices].

    When that leaves fewer than five occupied sizes (short runs), k_min
    moves down until five are covered or it reaches 1.
    """
    counts = empirical.vertex_counts()
    well = [k for k in empirical.support if counts[k] >= SUBCRITICAL_MIN_VERTICES - 1e-9]
    k_max = max([SUBCRITICAL_K_MIN] + well)
    k_min = SUBCRITICAL_K_MIN
    occupied = [k for k in empirical.support if k <= k_max]
    while k_min > 1 and sum(1 for k in occupied if k >= k_min) < MIN_FIT_POINTS:
        k_min -= 1
    return k_min, k_max


def fit_power_law_exponent(empirical: EmpiricalDistribution, k_min: int | None = None, k_max: int | None = None) -> float:
    """Minus the OLS slope of log fraction against log k over occupied sizes."""
    lo, hi = default_power_law_window(empirical)
    ks, logf = _window(empirical, lo if k_min is None else k_min, hi if k_max is None else k_max)
    return -_ols_slope(np.log(ks), logf)


def fit_exponential_rate(empirical: EmpiricalDistribution, k_min: int | None = None, k_max: int | None = None) -> float:
    """Minus the OLS slope of log fraction against k; estimates ln((1-p)/p)."""
    lo, hi = default_rate_window(empirical)
    ks, logf = _window(empirical, lo if k_min is None else k_min, hi if k_max is None else k_max)
    return -_ols_slope(ks, logf)


def growth_rate_check(state: CliqueState | Snapshot, p: float) -> float:
    """N_m / (p m)."""
    m, n, _ = _counts_of(state)
    if m < 1:
        raise ValidationError("growth ratio needs at least one step")
    return n / (p * m)


# --- reports -----------------------------------------------------------------

REPORT_FIELDS = ("tv_distance", "fitted_exponent", "fitted_rate", "growth_ratio", "per_k_errors")
REPORT_CSV_HEADER = ("replica", "m", "k", "error", "tv_distance", "fitted_exponent", "fitted_rate", "growth_ratio")


@dataclass
class ComparisonReport:
    """Agreement between one empirical distribution and the theory table.

    ``per_k_errors`` holds empirical minus theoretical fractions for
    k = 1..min(K, largest occupied size).
    """

    tv_distance: float
    fitted_exponent: float | None
    fitted_rate: float | None
    growth_ratio: float
    per_k_errors: dict[int, float] = field(default_factory=dict)
    m: int = 0
    p: float | None = None
    K: int | None = None
    replica: int | None = None  # None marks a single run or a replica mean

    def to_json_dict(self) -> dict:
        return {
            "m": self.m,
            "p": self.p,
            "K": self.K,
            "replica": self.replica,
            "tv_distance": self.tv_distance,
            "fitted_exponent": self.fitted_exponent,
            "fitted_rate": self.fitted_rate,
            "growth_ratio": self.growth_ratio,
            "per_k_errors": {str(k): v for k, v in sorted(self.per_k_errors.items())},
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "ComparisonReport":
        return cls(
            tv_distance=float(data["tv_distance"]),
            fitted_exponent=None if data["fitted_exponent"] is None else float(data["fitted_exponent"]),
            fitted_rate=None if data["fitted_rate"] is None else float(data["fitted_rate"]),
            growth_ratio=float(data["growth_ratio"]),
            per_k_errors={int(k): float(v) for k, v in data["per_k_errors"].items()},
            m=int(data.get("m", 0)),
            p=data.get("p"),
            K=data.get("K"),
            replica=data.get("replica"),
        )


def _opt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def reports_to_csv(reports: Iterable[ComparisonReport]) -> str:
    """One row per (m, k); the scalar summaries repeat on every row."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_CSV_HEADER)
    for r in reports:
        for k, err in sorted(r.per_k_errors.items()):
            writer.writerow(
                ("" if r.replica is None else r.replica, r.m, k, repr(float(err)), repr(r.tv_distance), _opt(r.fitted_exponent), _opt(r.fitted_rate), repr(r.growth_ratio))
            )
    return buf.getvalue()


def reports_to_json(reports: Iterable[ComparisonReport]) -> str:
    return json.dumps([r.to_json_dict() for r in reports], indent=1)


def reports_from_json(text: str) -> list[ComparisonReport]:
    return [ComparisonReport.from_json_dict(d) for d in json.loads(text)]


def _try(fit, empirical):
    try:
        return fit(empirical)
    except ValidationError:
        return None


def compare_empirical(emp: EmpiricalDistribution, theory: DegreeDistribution, growth_ratio: float) -> ComparisonReport:
    exponent = rate = None
    if theory.regime is Regime.SUPERCRITICAL:
        exponent = _try(fit_power_law_exponent, emp)
    elif theory.regime is Regime.SUBCRITICAL:
        rate = _try(fit_exponential_rate, emp)
    top = min(theory.K, emp.max_size())
    errors = {k: emp.fractions.get(k, 0.0) - float(theory.values[k - 1]) for k in range(1, top + 1)}
    return ComparisonReport(
        tv_distance=total_variation(emp, theory),
        fitted_exponent=exponent,
        fitted_rate=rate,
        growth_ratio=growth_ratio,
        per_k_errors=errors,
        m=emp.m,
        p=theory.p,
        K=theory.K,
    )


def compare(source: CliqueState | Snapshot, theory: DegreeDistribution, replica: int | None = None) -> ComparisonReport:
    """Report for one run: TV, the regime's tail fit, growth ratio, per-k errors.

    A tail fit with too few occupied sizes is reported as None.
    """
    report = compare_empirical(empirical_degree_distribution(source), theory, growth_rate_check(source, theory.p))
    report.replica = replica
    return report


def _mean_or_none(values):
    vals = [v for v in values if v is not None]
    return math.fsum(vals) / len(vals) if vals else None


def mean_report(reports: Sequence[ComparisonReport]) -> ComparisonReport:
    """Field-wise replica mean of reports taken at the same checkpoint.

    Fits that were unavailable in some replicas are averaged over the
    others. Per-k errors are averaged over the sizes every report covers.
    """
    if not reports:
        raise ValidationError("no reports to average")
    if len({r.m for r in reports}) != 1:
        raise ValidationError("reports must share the same step index")
    keys = set(reports[0].per_k_errors)
    for r in reports[1:]:
        keys &= set(r.per_k_errors)
    return ComparisonReport(
        tv_distance=math.fsum(r.tv_distance for r in reports) / len(reports),
        fitted_exponent=_mean_or_none(r.fitted_exponent for r in reports),
        fitted_rate=_mean_or_none(r.fitted_rate for r in reports),
        growth_ratio=math.fsum(r.growth_ratio for r in reports) / len(reports),
        per_k_errors={k: math.fsum(r.per_k_errors[k] for r in reports) / len(reports) for k in sorted(keys)},
        m=reports[0].m,
        p=reports[0].p,
        K=reports[0].K,
    )


def convergence_trace(
    params: ProcessParams, theory: DegreeDistribution, checkpoints: Sequence[int], rng=None
) -> list[tuple[int, ComparisonReport]]:
    """One run, one report per checkpoint (checkpoints strictly increasing, >= 1)."""
    checkpoints = [int(c) for c in checkpoints]
    if not checkpoints or checkpoints[0] < 1:
        raise ValidationError("checkpoints must be positive")
    snaps: list[Snapshot] = []
    simulate(params, checkpoints[-1], checkpoints, lambda m, s: snaps.append(s), rng=rng)
    return [(s.m, compare(s, theory)) for s in snaps]


# --- replicas ----------------------------------------------------------------


def _replica_job(args) -> list[Snapshot]:
    p, seed, replica, num_steps, checkpoints = args
    snaps: list[Snapshot] = []
    schedule = list(checkpoints) if checkpoints else [num_steps]
    simulate(ProcessParams(p, seed), num_steps, schedule, lambda m, s: snaps.append(s), rng=make_stream(seed, replica))
    return snaps


def run_replicas(
    p: float,
    seed: int,
    num_steps: int,
    replicas: int,
    checkpoints: Sequence[int] = (),
    workers: int = 1,
) -> list[list[Snapshot]]:
    """Snapshots of ``replicas`` independent runs; replica i uses stream (seed, i).

    Without checkpoints each run yields one snapshot at ``num_steps``. The
    result is ordered by replica index whatever ``workers`` is.
    """
    if replicas < 1:
        raise ValidationError("replicas must be positive")
    ProcessParams(p, seed)
    jobs = [(p, seed, i, int(num_steps), tuple(checkpoints)) for i in range(replicas)]
    if workers <= 1 or replicas == 1:
        return [_replica_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_replica_job, jobs))
