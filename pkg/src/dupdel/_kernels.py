"""Compiled inner loops for the clique-size process.

Every step consumes exactly two raw 64-bit words from the stream: the
first decides duplication vs deletion, the second picks the vertex. The
Python-level ``step`` in ``process`` uses the same layout, so a run
driven word-by-word and a run driven through ``run_steps`` are
bit-identical.

Sizes are stored 1-based in ``counts`` (length ``cap + 2``) and the
Fenwick tree ``tree`` (length ``cap + 1``) holds weights ``k * counts[k]``.
``cap`` is always a power of two.
"""

import numpy as np
from numba import njit

_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_SHIFT11 = np.uint64(11)
_TWO_M53 = 1.0 / 9007199254740992.0

NEED_GROW = -1


@njit(cache=True)
def mulhi(w, n):
    """floor(w * n / 2**64) for 64-bit unsigned ``w`` and ``0 < n < 2**63``."""
    n = np.uint64(n)
    wh = w >> _SHIFT32
    wl = w & _MASK32
    nh = n >> _SHIFT32
    nl = n & _MASK32
    hh = wh * nh
    hl = wh * nl
    lh = wl * nh
    ll = wl * nl
    carry = ((hl & _MASK32) + (lh & _MASK32) + (ll >> _SHIFT32)) >> _SHIFT32
    return np.int64(hh + (hl >> _SHIFT32) + (lh >> _SHIFT32) + carry)


@njit(cache=True)
def word_to_unit(w):
    return np.float64(w >> _SHIFT11) * _TWO_M53


@njit(cache=True)
def fenwick_add(tree, cap, i, delta):
    while i <= cap:
        tree[i] += delta
        i += i & (-i)


@njit(cache=True)
def fenwick_find(tree, cap, target):
    """Smallest index k with prefix_sum(k) > target (target >= 0)."""
    pos = 0
    bit = cap
    rem = target
    while bit > 0:
        nxt = pos + bit
        if nxt <= cap and tree[nxt] <= rem:
            pos = nxt
            rem -= tree[nxt]
        bit >>= 1
    return pos + 1


@njit(cache=True)
def fenwick_build(counts, cap):
    tree = np.zeros(cap + 1, dtype=np.int64)
    for k in range(1, cap + 1):
        tree[k] += k * counts[k]
        parent = k + (k & (-k))
        if parent <= cap:
            tree[parent] += tree[k]
    return tree


@njit(cache=True)
def apply_dup(counts, tree, cap, k):
    counts[k] -= 1
    counts[k + 1] += 1
    fenwick_add(tree, cap, k, -k)
    fenwick_add(tree, cap, k + 1, k + 1)


@njit(cache=True)
def apply_del(counts, tree, cap, k):
    """Isolate one vertex of a k-clique; returns the change in clique count."""
    if k == 1:
        return 0
    counts[k] -= 1
    fenwick_add(tree, cap, k, -k)
    if k == 2:
        counts[1] += 2
        fenwick_add(tree, cap, 1, 2)
    else:
        counts[k - 1] += 1
        counts[1] += 1
        fenwick_add(tree, cap, k - 1, k - 1)
        fenwick_add(tree, cap, 1, 1)
    return 1


@njit(cache=True)
def run_steps(counts, tree, cap, words, start, stop, p, tally):
    """Advance the process for steps ``start..stop-1`` of the word buffer.

    ``tally`` is ``[n_vertices, n_cliques, n_duplications]`` and is updated
    in place. Returns the index of the first step not applied; this is
    less than ``stop`` only when a duplication would overflow ``cap``.
    """
    n = tally[0]
    cliques = tally[1]
    dups = tally[2]
    i = start
    while i < stop:
        w_kind = words[2 * i]
        w_vertex = words[2 * i + 1]
        k = fenwick_find(tree, cap, mulhi(w_vertex, n))
        if word_to_unit(w_kind) < p:
            if k + 1 > cap:
                break
            apply_dup(counts, tree, cap, k)
            n += 1
            dups += 1
        else:
            cliques += apply_del(counts, tree, cap, k)
        i += 1
    tally[0] = n
    tally[1] = cliques
    tally[2] = dups
    return i


@njit(cache=True)
def sample_sizes(tree, cap, n, words, out):
    for i in range(words.shape[0]):
        out[i] = fenwick_find(tree, cap, mulhi(words[i], n))


@njit(cache=True)
def one_step_moments(counts, tree, cap, n, p, words, sums, sumsq):
    """Accumulate first and second moments of the counts after one step.

    Each trial restarts from the frozen ``counts``; ``cap`` must leave room
    for a duplication of the largest occupied size.
    """
    work_counts = counts.copy()
    work_tree = tree.copy()
    size = sums.shape[0]
    for t in range(words.shape[0] // 2):
        work_counts[:] = counts
        work_tree[:] = tree
        w_kind = words[2 * t]
        w_vertex = words[2 * t + 1]
        k = fenwick_find(work_tree, cap, mulhi(w_vertex, n))
        if word_to_unit(w_kind) < p:
            apply_dup(work_counts, work_tree, cap, k)
        else:
            apply_del(work_counts, work_tree, cap, k)
        for j in range(1, size):
            c = work_counts[j]
            sums[j] += c
            sumsq[j] += c * c
