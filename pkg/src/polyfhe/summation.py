"""Intra-ciphertext summation kernels and their benchmark harness.

Three ways to sum the first n slots of a batched ciphertext without element
access: naive rotate-and-accumulate (n-1 rotations), a DFT DC-component
linear transform (n-1 rotations, n plaintext mults), and fold-and-add
(ceil(log2 n) rotations).  All three leave the total in slot 0; naive also
replicates it across every slot when n equals the capacity (windows wrap the
whole ring), which is how per-window protected values get stored replicated.

Rotation counters on results report the physical rotations the kernel
performed (relative to its input).  The fold kernel reuses its running
ciphertext on both sides of each add, which would double-count under the
backend's lineage-sum merge, so it normalizes its counters to the physical
count before returning.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass

import numpy as np

from .backend import EncryptionContext, SlotVector, _new, add, encrypt, mult_plain, rotate_left


@dataclass
class SumBenchRow:
    """One benchmark measurement: op counts and wall time for (n, method)."""

    n: int
    method: str
    rotations: int
    mults: int
    wall_ns: int


def naive_add_all(c: SlotVector, n: int) -> SlotVector:
    """Sum the first n slots by accumulating n-1 single rotations.

    Expects the data in the first n slots and zeros elsewhere.  Slot 0 of the
    result holds the sum; when n equals the slot capacity the rotations wrap
    the full ring and every slot holds the sum.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > c.slots.shape[0]:
        raise ValueError("n exceeds slot capacity")
    acc = c
    for i in range(1, n):
        acc = add(acc, rotate_left(c, i))
    return acc


def fold_add_all(c: SlotVector, n: int) -> SlotVector:
    """Sum the first n slots with ceil(log2 n) power-of-two rotations.

    Expects zeros in slots n .. 2^ceil(log2 n); callers zero-pad.  Only
    slot 0 of the result is guaranteed to hold the sum.  The loop runs the
    final rotate-by-1 step inclusively: the halving recursion needs offsets
    2^(k-1) .. 2^0 to cover every slot, and stopping one step early leaves
    the sum incomplete for n > 2.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > c.slots.shape[0]:
        raise ValueError("n exceeds slot capacity")
    k = (n - 1).bit_length()
    acc = c
    for i in range(k - 1, -1, -1):
        acc = add(acc, rotate_left(acc, 1 << i))
    # The running ciphertext feeds both sides of each add, so the lineage-sum
    # merge inflates the counters; report the physical k rotations instead.
    return _new(c.ctx, acc.slots, acc.logical_len, acc.depth_used, c.rotations_used + k, c.mults_used)


def dft_sum(c: SlotVector, n: int) -> SlotVector:
    """Sum the first n slots as the DC component of a DFT linear transform.

    Evaluates the all-ones DFT row by the diagonal method: for each offset d,
    rotate by d and mask slot 0, then add everything up.  Costs n-1 rotations
    and n plaintext mults, and one depth level.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    cap = c.slots.shape[0]
    if n > cap:
        raise ValueError("n exceeds slot capacity")
    e0 = np.zeros(cap, dtype=np.float64)
    e0[0] = 1.0
    acc = mult_plain(c, e0)
    for d in range(1, n):
        acc = add(acc, mult_plain(rotate_left(c, d), e0))
    return acc


def broadcast_slot0(c: SlotVector, count: int) -> SlotVector:
    """Replicate slot 0 into the first `count` slots (zeros elsewhere).

    One plaintext mask mult (a depth level) plus count-1 rotations.
    """
    cap = c.slots.shape[0]
    if not 1 <= count <= cap:
        raise ValueError("count must be in 1..capacity")
    e0 = np.zeros(cap, dtype=np.float64)
    e0[0] = 1.0
    masked = mult_plain(c, e0)
    acc = masked
    for i in range(1, count):
        acc = add(acc, rotate_left(masked, cap - i))
    return acc


def zero_pad_pow2(values: np.ndarray) -> np.ndarray:
    """Zero-pad a vector to the next power-of-two length (fold's precondition)."""
    n = len(values)
    target = 1 << (n - 1).bit_length() if n > 1 else 1
    if target == n:
        return np.asarray(values, dtype=np.float64)
    out = np.zeros(target, dtype=np.float64)
    out[:n] = values
    return out


_KERNELS = {"naive": naive_add_all, "dft": dft_sum, "fold": fold_add_all}


def bench_summation(sizes, ctx: EncryptionContext, seed: int = 0, repeats: int = 3) -> list[SumBenchRow]:
    """Time all three kernels on random inputs of each size.

    One row per (size, method); wall time is the median of `repeats` runs,
    op counts come from the result's counters.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for n in sizes:
        if n > ctx.slot_capacity:
            raise ValueError(f"size {n} exceeds slot capacity {ctx.slot_capacity}")
        data = rng.uniform(-1.0, 1.0, n)
        sv = encrypt(data, ctx)
        for method, kernel in _KERNELS.items():
            times = []
            out = None
            for _ in range(repeats):
                t0 = time.perf_counter_ns()
                out = kernel(sv, n)
                times.append(time.perf_counter_ns() - t0)
            expected = float(data.sum())
            if not math.isclose(out.slots[0], expected, rel_tol=1e-9, abs_tol=1e-9):
                raise AssertionError(f"kernel {method} disagrees with plain sum at n={n}")
            rows.append(SumBenchRow(n, method, out.rotations_used, out.mults_used, int(np.median(times))))
    return rows


def write_bench_csv(rows, path):
    """Write benchmark rows as CSV: n,method,rotations,mults,wall_ns."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["n", "method", "rotations", "mults", "wall_ns"])
        for r in rows:
            w.writerow([r.n, r.method, r.rotations, r.mults, r.wall_ns])
