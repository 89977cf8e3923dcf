#!/usr/bin/env python3
"""Tour of the simulated SIMD-slot ciphertext: encrypt, slot ops, rotations,
depth budget, and keyed serialization."""
import numpy as np

from polyfhe.backend import (
    EncryptionContext,
    add,
    decrypt,
    deserialize_ciphertext,
    encrypt,
    mult,
    mult_plain,
    rotate_left,
    serialize_ciphertext,
)
from polyfhe.errors import DepthExceeded, KeyMismatch

ctx = EncryptionContext(slot_capacity=8, depth_budget=4, key_id="alice")
print(f"context: capacity={ctx.slot_capacity}, depth budget={ctx.depth_budget}")

x = encrypt([1.0, 2.0, 3.0], ctx)
y = encrypt([10.0, 20.0, 30.0], ctx)
print("decrypt(x)          ->", decrypt(x, ctx).values)
print("decrypt(x + y)      ->", decrypt(add(x, y), ctx).values)
print("decrypt(x * y)      ->", decrypt(mult(x, y), ctx).values)
print("decrypt(2 * x)      ->", decrypt(mult_plain(x, 2.0), ctx).values)

# rotations are cyclic over the FULL capacity, so zero padding matters
r = rotate_left(encrypt([1, 2, 3, 4, 5, 6, 7, 8], ctx), 3)
print("rotate_left by 3    ->", r.slots, f"(rotations_used={r.rotations_used})")

# every ciphertext-ciphertext product consumes one depth level
acc = x
while True:
    try:
        acc = mult(acc, x)
    except DepthExceeded as exc:
        print(f"depth budget enforce-> {exc}")
        break
print(f"deepest ciphertext  -> depth_used={acc.depth_used}")

# decryption needs the right key; serialization is masked per-call
mallory = EncryptionContext(8, 4, key_id="mallory")
try:
    decrypt(x, mallory)
except KeyMismatch as exc:
    print("foreign decrypt     ->", exc)

blob1 = serialize_ciphertext(x, ctx)
blob2 = serialize_ciphertext(x, ctx)
print(f"two dumps of x differ: {blob1 != blob2} (fresh nonce each time)")
back = deserialize_ciphertext(blob1, ctx)
print("unmasked round trip ->", np.round(back.slots[:3], 12))
