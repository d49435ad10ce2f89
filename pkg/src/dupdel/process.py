"""Clique-size representation of the duplication-deletion graph process.

Every component of the graph is a clique, so the whole state is the
multiset of clique sizes. A step picks a vertex uniformly at random,
i.e. a clique with probability proportional to its size, and then either
grows that clique by one vertex (probability ``p``) or splits one vertex
off as a new isolated vertex (probability ``1 - p``).

Random numbers come from numpy's Philox4x64 counter-based generator.
A run with seed ``s`` uses ``Philox(SeedSequence(s))``; replica ``i`` of
a batch uses ``Philox(SeedSequence(s, spawn_key=(i,)))``. Each step reads
two raw 64-bit words: the first selects the step kind
(``(w >> 11) * 2**-53 < p`` means duplication), the second selects the
vertex index ``floor(w * N / 2**64)``. The word is read even when the
step turns out to be a no-op, so the stream layout never depends on the
state.
"""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import _kernels as kern
from .errors import StateError, ValidationError

UINT64_MAX = 2**64 - 1
DEFAULT_CHUNK = 1 << 16


def _next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


@dataclass(frozen=True)
class ProcessParams:
    p: float
    seed: int = 0
    size_capacity_hint: int = 64

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise ValidationError(f"p must lie strictly inside (0, 1), got {self.p!r}")
        if not (0 <= int(self.seed) <= UINT64_MAX) or int(self.seed) != self.seed:
            raise ValidationError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.size_capacity_hint < 1:
            raise ValidationError("size_capacity_hint must be positive")


def make_stream(seed: int, replica: int | None = None) -> np.random.Generator:
    """Generator for a run (``replica=None``) or for one replica of a batch."""
    if replica is None:
        ss = np.random.SeedSequence(int(seed))
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=(int(replica),))
    return np.random.Generator(np.random.Philox(ss))


def _raw(rng, n: int) -> np.ndarray:
    bitgen = rng.bit_generator if isinstance(rng, np.random.Generator) else rng
    return np.asarray(bitgen.random_raw(n), dtype=np.uint64)


class StepKind(enum.Enum):
    DUPLICATION = "duplication"
    DELETION = "deletion"


@dataclass(frozen=True)
class StepOutcome:
    kind: StepKind
    affected_size: int


@dataclass(frozen=True)
class Snapshot:
    """Immutable copy of the clique counts at step ``m``."""

    m: int
    n_vertices: int
    counts: tuple  # ((k, C_k), ...) with k ascending and C_k > 0

    def counts_map(self) -> dict:
        return dict(self.counts)

    def to_json_dict(self) -> dict:
        return {
            "m": self.m,
            "n_vertices": self.n_vertices,
            "counts": [[k, c] for k, c in self.counts],
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "Snapshot":
        counts = tuple(sorted((int(k), int(c)) for k, c in data["counts"]))
        return cls(int(data["m"]), int(data["n_vertices"]), counts)


class CliqueState:
    """Mutable clique-size multiset with a Fenwick index for sampling.

    ``counts[k]`` is the number of k-cliques; sizes above ``cap`` are
    always empty. Transition functions in this module mutate the state in
    place and return it.
    """

    __slots__ = ("counts", "tree", "cap", "num_vertices", "num_cliques", "step_index")

    def __init__(self, counts: np.ndarray, num_vertices: int, num_cliques: int, step_index: int = 0):
        cap = counts.shape[0] - 2
        if cap < 1 or cap & (cap - 1):
            raise ValidationError("counts length must be a power of two plus 2")
        self.counts = counts
        self.cap = cap
        self.tree = kern.fenwick_build(counts, cap)
        self.num_vertices = int(num_vertices)
        self.num_cliques = int(num_cliques)
        self.step_index = int(step_index)

    @classmethod
    def from_counts(cls, counts: Mapping[int, int], step_index: int = 0, capacity_hint: int = 64) -> "CliqueState":
        sizes = [int(k) for k, c in counts.items() if c]
        if any(k < 1 for k in sizes) or any(c < 0 for c in counts.values()):
            raise ValidationError("clique sizes must be positive and counts non-negative")
        if not sizes:
            raise ValidationError("a state needs at least one vertex")
        cap = _next_pow2(max(capacity_hint, max(sizes) + 1))
        arr = np.zeros(cap + 2, dtype=np.int64)
        for k, c in counts.items():
            arr[int(k)] = int(c)
        n = sum(int(k) * int(c) for k, c in counts.items())
        return cls(arr, n, sum(int(c) for c in counts.values()), step_index)

    def counts_map(self) -> dict:
        ks = np.nonzero(self.counts)[0]
        return {int(k): int(self.counts[k]) for k in ks}

    def max_size(self) -> int:
        return int(np.nonzero(self.counts)[0][-1])

    def ensure_capacity(self, size: int) -> None:
        """Make room for cliques of ``size``; capacity doubles as needed."""
        if size <= self.cap:
            return
        new_cap = self.cap
        while new_cap < size:
            new_cap *= 2
        counts = np.zeros(new_cap + 2, dtype=np.int64)
        counts[: self.counts.shape[0]] = self.counts
        self.counts = counts
        self.cap = new_cap
        self.tree = kern.fenwick_build(counts, new_cap)

    def copy(self) -> "CliqueState":
        return CliqueState(self.counts.copy(), self.num_vertices, self.num_cliques, self.step_index)

    def snapshot(self) -> Snapshot:
        return Snapshot(self.step_index, self.num_vertices, tuple(self.counts_map().items()))

    def check_invariants(self) -> None:
        c = self.counts
        if (c < 0).any():
            raise StateError("negative clique count")
        ks = np.arange(c.shape[0], dtype=np.int64)
        if int(c[0]) != 0 or int((ks * c).sum()) != self.num_vertices:
            raise StateError("sum of k*C_k does not match the vertex count")
        if int(c.sum()) != self.num_cliques:
            raise StateError("sum of C_k does not match the clique count")

    def __eq__(self, other):
        if not isinstance(other, CliqueState):
            return NotImplemented
        return (
            self.counts_map() == other.counts_map()
            and self.num_vertices == other.num_vertices
            and self.step_index == other.step_index
        )

    def __repr__(self):
        return f"CliqueState(m={self.step_index}, N={self.num_vertices}, counts={self.counts_map()})"


def init_state(capacity_hint: int = 64) -> CliqueState:
    """The process starts from a single isolated vertex."""
    return CliqueState.from_counts({1: 1}, capacity_hint=capacity_hint)


def sample_vertex_clique_size(state: CliqueState, rng) -> int:
    """Size of the clique holding a uniformly chosen vertex (one raw word)."""
    w = _raw(rng, 1)[0]
    return _pick(state, w)


def _pick(state: CliqueState, word) -> int:
    target = (int(word) * state.num_vertices) >> 64
    return int(kern.fenwick_find(state.tree, state.cap, target))


def sample_vertex_clique_sizes(state: CliqueState, rng, size: int) -> np.ndarray:
    """Vectorised ``sample_vertex_clique_size``: consumes ``size`` words."""
    words = _raw(rng, size)
    out = np.empty(size, dtype=np.int64)
    kern.sample_sizes(state.tree, state.cap, state.num_vertices, words, out)
    return out


def _require(state: CliqueState, k: int) -> None:
    if not (1 <= k <= state.cap) or state.counts[k] < 1:
        raise StateError(f"no clique of size {k} to act on")


def apply_duplication(state: CliqueState, k: int) -> CliqueState:
    """A k-clique gains a vertex and becomes a (k+1)-clique."""
    _require(state, k)
    state.ensure_capacity(k + 1)
    kern.apply_dup(state.counts, state.tree, state.cap, k)
    state.num_vertices += 1
    return state


def apply_deletion(state: CliqueState, k: int) -> CliqueState:
    """One vertex of a k-clique loses all its edges (no-op for k = 1)."""
    _require(state, k)
    state.num_cliques += int(kern.apply_del(state.counts, state.tree, state.cap, k))
    return state


def step(state: CliqueState, params: ProcessParams, rng) -> tuple[CliqueState, StepOutcome]:
    words = _raw(rng, 2)
    k = _pick(state, words[1])
    if kern.word_to_unit(words[0]) < params.p:
        apply_duplication(state, k)
        kind = StepKind.DUPLICATION
    else:
        apply_deletion(state, k)
        kind = StepKind.DELETION
    state.step_index += 1
    if __debug__:
        state.check_invariants()
    return state, StepOutcome(kind, k)


def _validate_schedule(schedule: Sequence[int], num_steps: int) -> list[int]:
    out = []
    for c in schedule:
        if c is None or int(c) != c:
            raise ValidationError(f"checkpoint {c!r} is not an integer")
        c = int(c)
        if c < 0 or c > num_steps:
            raise ValidationError(f"checkpoint {c} outside [0, {num_steps}]")
        if out and c <= out[-1]:
            raise ValidationError("checkpoints must be strictly increasing")
        out.append(c)
    return out


def advance(state: CliqueState, p: float, num_steps: int, rng, chunk: int = DEFAULT_CHUNK) -> CliqueState:
    """Run ``num_steps`` further steps with the compiled kernel."""
    tally = np.array([state.num_vertices, state.num_cliques, 0], dtype=np.int64)
    remaining = int(num_steps)
    while remaining > 0:
        n = min(chunk, remaining)
        words = _raw(rng, 2 * n)
        done = 0
        while done < n:
            done = int(kern.run_steps(state.counts, state.tree, state.cap, words, done, n, p, tally))
            if done < n:
                state.ensure_capacity(2 * state.cap)
        remaining -= n
        state.step_index += n
    state.num_vertices = int(tally[0])
    state.num_cliques = int(tally[1])
    return state


def simulate(
    params: ProcessParams,
    num_steps: int,
    checkpoint_schedule: Iterable[int] = (),
    observer: Callable[[int, Snapshot], None] | None = None,
    rng=None,
) -> CliqueState:
    """Run the process from the initial state for ``num_steps`` steps.

    ``observer(m, snapshot)`` is called at each checkpoint with an
    immutable snapshot. ``rng`` defaults to the stream for ``params.seed``.
    """
    if num_steps < 0 or int(num_steps) != num_steps:
        raise ValidationError("num_steps must be a non-negative integer")
    num_steps = int(num_steps)
    schedule = _validate_schedule(list(checkpoint_schedule), num_steps)
    if rng is None:
        rng = make_stream(params.seed)
    state = init_state(params.size_capacity_hint)
    for m in schedule:
        advance(state, params.p, m - state.step_index, rng)
        state.check_invariants()
        if observer is not None:
            observer(m, state.snapshot())
    advance(state, params.p, num_steps - state.step_index, rng)
    state.check_invariants()
    return state


# --- snapshot serialization -------------------------------------------------

CSV_HEADER = ("m", "k", "count", "n_vertices")


def snapshots_to_csv(snapshots: Iterable[Snapshot]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for snap in snapshots:
        for k, c in snap.counts:
            writer.writerow((snap.m, k, c, snap.n_vertices))
    return buf.getvalue()


def snapshots_from_csv(text: str) -> list[Snapshot]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ValidationError(f"expected header {','.join(CSV_HEADER)}")
    grouped: dict[int, tuple[int, list]] = {}
    for row in reader:
        m = int(row["m"])
        n, rows = grouped.setdefault(m, (int(row["n_vertices"]), []))
        rows.append((int(row["k"]), int(row["count"])))
    return [Snapshot(m, n, tuple(sorted(rows))) for m, (n, rows) in sorted(grouped.items())]


def snapshots_to_json(snapshots: Iterable[Snapshot]) -> str:
    return json.dumps([s.to_json_dict() for s in snapshots], indent=1)


def snapshots_from_json(text: str) -> list[Snapshot]:
    return [Snapshot.from_json_dict(d) for d in json.loads(text)]
