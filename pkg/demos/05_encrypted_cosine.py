#!/usr/bin/env python3
"""Cosine similarity between two ciphertexts nobody decrypted in between.

Slot products + fold-and-add give the dot product and both squared norms;
public scale bounds push the denominator into the inverse-sqrt fit domain,
and the polynomial supplies 1/sqrt under encryption.
"""
import numpy as np

from polyfhe.backend import EncryptionContext, encrypt
from polyfhe.similarity import cosine_encrypted_score, cosine_plain, precheck_denominator, unit_cosine_setup

dim = 64
ctx = EncryptionContext(128, 16, key_id="match")
plan, approx = unit_cosine_setup(dim, degree=8)
tau = 2 * approx.fit_report.max_rel_err + 1e-6
print(f"plan: c_bound={plan.c_bound:.0f} d_bound={plan.d_bound:.0f}")
print(f"inverse-sqrt fit: degree 8 on [{approx.domain[0]:.2e}, {approx.domain[1]:.2e}], "
      f"max_rel_err={approx.fit_report.max_rel_err:.2e}")
print(f"score tolerance tau = {tau:.2e}\n")

rng = np.random.default_rng(3)
worst = 0.0
for trial in range(5):
    a = rng.normal(size=dim)
    a /= np.linalg.norm(a)
    b = rng.normal(size=dim)
    b /= np.linalg.norm(b)
    precheck_denominator(a, b, plan, approx)  # enrollment-time plaintext guard
    enc = cosine_encrypted_score(encrypt(a, ctx), encrypt(b, ctx), dim, plan, approx, ctx)
    ref = cosine_plain(a, b)
    worst = max(worst, abs(enc - ref))
    print(f"pair {trial}: encrypted {enc:+.6f} vs plaintext {ref:+.6f} (|err| {abs(enc - ref):.1e})")

v = rng.normal(size=dim)
v /= np.linalg.norm(v)
self_score = cosine_encrypted_score(encrypt(v, ctx), encrypt(v, ctx), dim, plan, approx, ctx)
print(f"\nself-similarity: {self_score:.6f} (exact answer 1)")
print(f"worst error over the pairs: {worst:.2e} <= tau")
