"""Command-line front end: simulate, theory, compare, asymptotics, oracle-check.

Exit codes: 0 success, 1 invalid arguments, 2 numerical non-convergence or
an oracle deviation above threshold, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation

import numpy as np

from . import analysis
from .errors import NonConvergenceError, ValidationError
from .process import ProcessParams, make_stream, simulate, snapshots_to_csv, snapshots_to_json
from .theory import asymptotics as asy
from .theory.distribution import DEFAULT_TOL, _is_critical, degree_dist_hypergeometric, degree_distribution
from .theory.export import table_metadata, table_to_csv, table_to_json
from .theory.recursion import backward_recursion_oracle, lower_bound_fixed_point

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_IO = 3

COMMANDS = ("simulate", "theory", "compare", "asymptotics", "oracle-check")
ORACLE_K = 50
FIXED_POINT_K = 400
FIXED_POINT_ITERATIONS = 10_000
FIXED_POINT_MAX_K = 20
FIXED_POINT_THRESHOLD = 1e-4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def exact_int(text: str) -> int:
    """Integer from '1000000', '1e6' or '2.5e3'; rejects non-integral values."""
    try:
        value = Decimal(text.strip())
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not value.is_finite() or value != value.to_integral_value():
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    return int(value)


def int_list(text: str) -> list[int]:
    return [exact_int(part) for part in text.split(",") if part.strip()]


@dataclass
class RunConfig:
    command: str
    p: float | None = None
    steps: int | None = None
    seed: int = 0
    K: int | None = None
    tol: float = DEFAULT_TOL
    checkpoints: list[int] = field(default_factory=list)
    replicas: int = 1
    output_path: str | None = None
    format: str = "csv"
    threshold: float = 1e-8

    def validate(self) -> "RunConfig":
        if self.p is None:
            raise ValidationError("--p is required")
        if not (0.0 < self.p < 1.0) or math.isnan(self.p):
            raise ValidationError(f"--p must lie strictly inside (0, 1), got {self.p}")
        if self.K is not None and self.K < 2:
            raise ValidationError(f"--K must be an integer >= 2, got {self.K}")
        if not (self.tol > 0.0):
            raise ValidationError(f"--tol must be positive, got {self.tol}")
        if self.seed < 0 or self.seed >= 2**64:
            raise ValidationError(f"--seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.replicas < 1:
            raise ValidationError(f"--replicas must be positive, got {self.replicas}")
        if self.command in ("simulate", "compare"):
            self._validate_schedule()
        if self.command == "oracle-check" and not (self.threshold > 0.0):
            raise ValidationError(f"--threshold must be positive, got {self.threshold}")
        return self

    def _validate_schedule(self):
        cps = self.checkpoints
        if self.steps is None:
            if not cps:
                raise ValidationError("--steps is required when --checkpoints is not given")
            self.steps = cps[-1]
        if self.steps < 1:
            raise ValidationError(f"--steps must be positive, got {self.steps}")
        floor = 1 if self.command == "compare" else 0
        for a, b in zip(cps, cps[1:]):
            if b <= a:
                raise ValidationError("--checkpoints must be strictly increasing")
        if cps and (cps[0] < floor or cps[-1] > self.steps):
            raise ValidationError(f"--checkpoints must lie in [{floor}, --steps={self.steps}]")
        if not cps or cps[-1] != self.steps:
            self.checkpoints = list(cps) + [self.steps]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dupdel", description="Clique duplication-deletion process: simulation and limit law.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, *, sim=False, theory=True):
        sp.add_argument("--p", type=float, required=True, help="duplication probability, 0 < p < 1")
        if theory:
            sp.add_argument("--K", type=exact_int, help="truncation index (default: tail rule)")
            sp.add_argument("--tol", type=float, default=DEFAULT_TOL, help="per-entry quadrature tolerance")
        if sim:
            sp.add_argument("--steps", type=exact_int, help="number of steps, e.g. 1e6")
            sp.add_argument("--seed", type=exact_int, default=0)
            sp.add_argument("--checkpoints", type=int_list, default=[], help="comma separated, e.g. 1e3,1e4,1e5")
        sp.add_argument("--out", dest="output_path", help="output file (default: stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    common(sub.add_parser("simulate", help="run the process and write checkpoint snapshots"), sim=True, theory=False)
    common(sub.add_parser("theory", help="write the d_k table"))
    cmp_ = sub.add_parser("compare", help="simulate and compare with theory")
    common(cmp_, sim=True)
    cmp_.add_argument("--replicas", type=int, default=1, help="independent seeded runs")
    common(sub.add_parser("asymptotics", help="d_k against its large-k form on a log grid"))
    oc = sub.add_parser("oracle-check", help="cross-check the independent solution methods")
    common(oc)
    oc.add_argument("--threshold", type=float, default=1e-8, help="largest allowed pairwise deviation")
    return parser


def parse_config(argv) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    return RunConfig(**{k: v for k, v in ns.items() if v is not None or k == "K"}).validate()


# --- output ------------------------------------------------------------------


def write_output(text: str, path: str | None) -> None:
    """Write atomically: a temp file in the target directory, then rename."""
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".dupdel-", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _info(msg: str) -> None:
    print(msg, file=sys.stderr)


def _header(meta: dict) -> str:
    return "# " + " ".join(f"{k}={'none' if v is None else v}" for k, v in meta.items()) + "\n"


# --- commands ----------------------------------------------------------------


def cmd_simulate(cfg: RunConfig) -> int:
    params = ProcessParams(cfg.p, cfg.seed)
    snaps = []
    simulate(params, cfg.steps, cfg.checkpoints, lambda m, s: snaps.append(s))
    text = snapshots_to_json(snaps) + "\n" if cfg.format == "json" else snapshots_to_csv(snaps)
    write_output(text, cfg.output_path)
    _info(f"growth_ratio={snaps[-1].n_vertices / (cfg.p * cfg.steps)!r} at m={cfg.steps}")
    return EXIT_OK


def cmd_theory(cfg: RunConfig) -> int:
    d = degree_distribution(cfg.p, cfg.K, cfg.tol)
    write_output(table_to_json(d) + "\n" if cfg.format == "json" else table_to_csv(d), cfg.output_path)
    _info(f"K={d.K} tail_mass={d.tail_mass!r}")
    return EXIT_OK


def _replica_reports(cfg: RunConfig, theory) -> list[list]:
    """reports[i][j]: replica i at checkpoint j."""
    out = []
    for i in range(cfg.replicas):
        rng = make_stream(cfg.seed) if cfg.replicas == 1 else make_stream(cfg.seed, i)
        snaps = []
        simulate(ProcessParams(cfg.p, cfg.seed), cfg.steps, cfg.checkpoints, lambda m, s: snaps.append(s), rng=rng)
        replica = None if cfg.replicas == 1 else i
        out.append([analysis.compare(s, theory, replica) for s in snaps])
    return out


def cmd_compare(cfg: RunConfig) -> int:
    theory = degree_distribution(cfg.p, cfg.K, cfg.tol)
    per_replica = _replica_reports(cfg, theory)
    reports = [r for rows in per_replica for r in rows]
    if cfg.replicas > 1:
        reports += [analysis.mean_report(list(col)) for col in zip(*per_replica)]
    meta = {"p": cfg.p, "K": theory.K, "tol": cfg.tol, "steps": cfg.steps, "seed": cfg.seed, "replicas": cfg.replicas}
    if cfg.format == "json":
        text = json.dumps({"meta": meta, "reports": [r.to_json_dict() for r in reports]}, indent=1) + "\n"
    else:
        text = _header(meta) + analysis.reports_to_csv(reports)
    write_output(text, cfg.output_path)
    final = reports[-1]
    _info(
        f"m={final.m} K={theory.K} tv_distance={final.tv_distance:.6g} growth_ratio={final.growth_ratio:.6g} "
        f"fitted_exponent={final.fitted_exponent} fitted_rate={final.fitted_rate}"
    )
    return EXIT_OK


def asymptotic_grid(K: int, points: int = 40) -> np.ndarray:
    return np.unique(np.round(np.logspace(0.0, math.log10(K), points)).astype(int))


def cmd_asymptotics(cfg: RunConfig) -> int:
    d = degree_distribution(cfg.p, cfg.K, cfg.tol)
    ks = asymptotic_grid(d.K)
    log_d = d.log_values[ks - 1]
    log_a = asy.log_asymptotic(cfg.p, ks)
    rows = [(int(k), float(np.exp(ld)), float(np.exp(la)), float(np.exp(ld - la))) for k, ld, la in zip(ks, log_d, log_a)]
    meta = table_metadata(d)
    if cfg.format == "json":
        text = json.dumps({"meta": meta, "rows": [dict(zip(("k", "d_k", "asymptotic_k", "ratio"), r)) for r in rows]}, indent=1) + "\n"
    else:
        text = _header(meta) + "k,d_k,asymptotic_k,ratio\n" + "".join(f"{k},{a!r},{b!r},{c!r}\n" for k, a, b, c in rows)
    write_output(text, cfg.output_path)
    return EXIT_OK


def oracle_deviations(p: float, K: int = ORACLE_K, tol: float = DEFAULT_TOL) -> list[tuple[str, str, float, float]]:
    """(method a, method b, max deviation, threshold scale) for each method pair.

    Deviations are max |d_k^a - d_k^b| over k <= K. The fixed-point row
    is the largest gap c_k - a_k over k <= 20 and is held to 1e-4.
    """
    quad = degree_distribution(p, K, tol).values
    tables = {"quadrature": quad, "backward_recursion": backward_recursion_oracle(p, K).values}
    if p > 0.5 and not _is_critical(p):
        tables["hypergeometric"] = degree_dist_hypergeometric(p, K).values
    names = list(tables)
    out = []
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            out.append((a, b, float(np.max(np.abs(tables[a] - tables[b]))), None))
    c = quad[:FIXED_POINT_MAX_K] / np.arange(1, FIXED_POINT_MAX_K + 1)
    lower = lower_bound_fixed_point(p, FIXED_POINT_K, FIXED_POINT_ITERATIONS).values[:FIXED_POINT_MAX_K]
    out.append(("fixed_point", "quadrature", float(np.max(np.abs(c - lower))), FIXED_POINT_THRESHOLD))
    return out


def cmd_oracle_check(cfg: RunConfig) -> int:
    K = ORACLE_K if cfg.K is None else cfg.K
    rows = oracle_deviations(cfg.p, K, cfg.tol)
    breaches = []
    lines = []
    for a, b, dev, own in rows:
        limit = cfg.threshold if own is None else own
        ok = dev <= limit
        lines.append((a, b, dev, limit, ok))
        print(f"{a} vs {b}: max deviation {dev:.3e} (threshold {limit:.1e}) {'ok' if ok else 'BREACH'}")
        if not ok:
            breaches.append(f"{a} vs {b}")
    if cfg.output_path is not None:
        if cfg.format == "json":
            text = json.dumps(
                {"p": cfg.p, "K": K, "pairs": [dict(zip(("a", "b", "deviation", "threshold", "ok"), ln)) for ln in lines]},
                indent=1,
            ) + "\n"
        else:
            text = f"# p={cfg.p} K={K}\na,b,deviation,threshold,ok\n" + "".join(
                f"{a},{b},{dev!r},{lim!r},{str(ok).lower()}\n" for a, b, dev, lim, ok in lines
            )
        write_output(text, cfg.output_path)
    if breaches:
        _info("threshold exceeded: " + ", ".join(breaches))
        return EXIT_NUMERIC
    return EXIT_OK


HANDLERS = {
    "simulate": cmd_simulate,
    "theory": cmd_theory,
    "compare": cmd_compare,
    "asymptotics": cmd_asymptotics,
    "oracle-check": cmd_oracle_check,
}


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except (UsageError, ValidationError) as exc:
        _info(f"dupdel: error: {exc}")
        return EXIT_USAGE
    try:
        return HANDLERS[cfg.command](cfg)
    except ValidationError as exc:
        _info(f"dupdel {cfg.command}: error: {exc}")
        return EXIT_USAGE
    except (NonConvergenceError, FloatingPointError) as exc:
        _info(f"dupdel {cfg.command}: numerical failure: {exc}")
        return EXIT_NUMERIC
    except OSError as exc:
        _info(f"dupdel {cfg.command}: I/O error: {exc}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
