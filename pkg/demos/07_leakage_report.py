#!/usr/bin/env python3
"""Soft-biometric leakage across protection variants: Privacy Gain and
Suppression Rate.

A linear attacker tries to read gender / age band / ethnicity out of each
representation.  Raw embeddings leak heavily; the window polynomial and
prefix compression barely help on their own; masked ciphertext dumps pin the
attacker to chance.
"""
from polyfhe.backend import EncryptionContext
from polyfhe.leakage import VARIANTS, privacy_gain, run_leakage_suite, suppression_rate, write_leakage_csv
from polyfhe.pipeline import SyntheticSpec, gen_synthetic_dataset

# sanity cross-check of the metric algebra on a worked example
print(f"PG(98.12% -> 52.22%) x100 = {privacy_gain(0.9812, 0.5222) * 100:.2f}")
print(f"SR(98.12% -> 52.22%)      = {suppression_rate(0.9812, 0.5222):.4f}\n")

spec = SyntheticSpec(num_ids=40, samples_per_id=8, dim=512, class_separation=30.0,
                     attribute_correlation=0.7, seed=5)
ds = gen_synthetic_dataset(spec)
ctx = EncryptionContext(128, 16, key_id="leakage-demo")
reports = run_leakage_suite(ds, VARIANTS, ctx, seed=0)

print(f"{'attribute':10s} {'variant':22s} {'A_o':>6s} {'A_p':>6s} {'PGx100':>7s} {'SR':>8s} {'chance':>7s}")
for r in reports:
    print(f"{r.attribute:10s} {r.variant:22s} {r.a_o:6.3f} {r.a_p:6.3f} {r.pg * 100:7.2f} {r.sr:8.4f} {r.chance:7.3f}")

write_leakage_csv(reports, "leakage_report.csv")
print("\nwrote leakage_report.csv")
print("note the FHE rows: attribute accuracy collapses to (or below) the chance")
print("baseline while identification accuracy is preserved by the same pipeline.")
