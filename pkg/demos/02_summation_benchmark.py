#!/usr/bin/env python3
"""The three ways to sum slots inside a ciphertext, and why fold-and-add wins.

Summation is the workhorse behind dot products and the window polynomial: you
cannot index slots, so sums must be built from rotations.  Naive rotation
does it in n-1 rotations, the DFT DC-component trick in n-1 rotations plus n
plaintext mults, fold-and-add in ceil(log2 n) rotations.
"""
import numpy as np

from polyfhe.backend import EncryptionContext, encrypt
from polyfhe.summation import bench_summation, naive_add_all, write_bench_csv

ctx = EncryptionContext(2048, 16, key_id="bench")

data = np.arange(1.0, 9.0)
sv = encrypt(data, EncryptionContext(8, 16, key_id="bench"))
out = naive_add_all(sv, 8)
print(f"naive over {data.tolist()} -> slot values {out.slots}")
print("(n == capacity, so the sum lands replicated in every slot)\n")

rows = bench_summation([2**i for i in range(1, 12)], ctx, seed=0)
print(f"{'n':>6} {'method':>6} {'rotations':>10} {'mults':>6} {'ms':>9}")
for r in rows:
    print(f"{r.n:>6} {r.method:>6} {r.rotations:>10} {r.mults:>6} {r.wall_ns / 1e6:>9.3f}")

write_bench_csv(rows, "summation_bench.csv")
print("\nwrote summation_bench.csv")
naive_2048 = next(r for r in rows if r.n == 2048 and r.method == "naive")
fold_2048 = next(r for r in rows if r.n == 2048 and r.method == "fold")
print(f"at n=2048: fold uses {fold_2048.rotations} rotations vs naive's {naive_2048.rotations}, "
      f"{naive_2048.wall_ns / fold_2048.wall_ns:.0f}x faster here")
