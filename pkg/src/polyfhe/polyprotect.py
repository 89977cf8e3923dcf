"""Polynomial template protection over sliding windows of an embedding.

An n-dimensional embedding is split into m-wide windows with a configurable
overlap; each window maps to one output value p_j = sum_i coeffs[i] *
window[i]**exps[i], with user-specific nonzero distinct integer coefficients
and distinct positive exponents.  The encrypted path computes the same values
under the slot contract and stores each p_j replicated across the first m
slots of its own ciphertext (fold-and-add plus broadcast), which is what lets
later dot products across windows avoid rotations.

Exponents in the encrypted domain cannot differ per slot within one SIMD op,
so each window is decomposed into m branches: raise the whole window to one
exponent (square-and-multiply, shared sub-powers), then a single plaintext
mask both selects that branch's slot and applies its coefficient.  Depth per
window is ceil(log2 max_exp) + 2 (power chain, coefficient mask, broadcast
mask).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .backend import EncryptionContext, SlotVector, add, as_plain, mult, mult_plain, rotate_left
from .errors import CapacityExceeded, InfeasibleParams, InputTooShort
from .summation import broadcast_slot0, fold_add_all


@dataclass(frozen=True)
class PolyProtectParams:
    """User-specific transform parameters: window width m, overlap, C, E."""

    m: int
    overlap: int
    coeffs: tuple
    exps: tuple
    c_range: int
    params_id: str
    seed: int | None = None

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("m must be >= 2")
        if not 0 <= self.overlap <= self.m - 1:
            raise ValueError("overlap must be in [0, m-1]")
        if len(self.coeffs) != self.m or len(self.exps) != self.m:
            raise ValueError("coeffs and exps must have length m")
        if any(c == 0 for c in self.coeffs) or len(set(self.coeffs)) != self.m:
            raise ValueError("coefficients must be nonzero and pairwise distinct")
        if any(e < 1 for e in self.exps) or len(set(self.exps)) != self.m:
            raise ValueError("exponents must be positive and pairwise distinct")


def _params_id(m, overlap, c_range, coeffs, exps) -> str:
    canon = json.dumps([m, overlap, c_range, list(coeffs), list(exps)]).encode()
    return hashlib.sha256(canon).hexdigest()[:16]


def gen_params(m: int, overlap: int, c_range: int, seed) -> PolyProtectParams:
    """Sample per-user parameters deterministically from a seed.

    Coefficients: m draws without replacement from the nonzero integers in
    [-c_range, c_range].  Exponents: a random permutation of {1..m}, keeping
    encrypted depth at ceil(log2 m) + 2.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    if not 0 <= overlap <= m - 1:
        raise ValueError("overlap must be in [0, m-1]")
    if 2 * c_range < m:
        raise InfeasibleParams(
            f"c_range={c_range} offers only {2 * c_range} distinct nonzero coefficients, need {m}"
        )
    rng = np.random.default_rng(seed)
    pool = np.concatenate([np.arange(-c_range, 0), np.arange(1, c_range + 1)])
    coeffs = tuple(int(c) for c in rng.choice(pool, size=m, replace=False))
    exps = tuple(int(e) for e in rng.permutation(m) + 1)
    pid = _params_id(m, overlap, c_range, coeffs, exps)
    return PolyProtectParams(m, overlap, coeffs, exps, c_range, pid, seed)


@dataclass(frozen=True)
class ProtectedTemplate:
    """Transform output: k plaintext reals, or k replicated-slot ciphertexts."""

    values: object  # np.ndarray (plaintext form) or tuple[SlotVector, ...] (encrypted form)
    params_id: str
    k: int

    @property
    def encrypted(self) -> bool:
        return not isinstance(self.values, np.ndarray)


def output_len(n: int, m: int, overlap: int) -> int:
    """Number of windows covering an n-vector: ceil((n-m)/(m-overlap)) + 1."""
    if n < m:
        raise InputTooShort(f"embedding length {n} < window width m={m}")
    stride = m - overlap
    return (n - m + stride - 1) // stride + 1


def chunk_embedding(v, params: PolyProtectParams) -> list:
    """Split an embedding into its m-wide windows (tail zero-padded).

    Protecting the concatenation of these windows equals protect_plain on the
    original vector.
    """
    vals = as_plain(v).values
    n = len(vals)
    k = output_len(n, params.m, params.overlap)
    stride = params.m - params.overlap
    padded_len = (k - 1) * stride + params.m
    padded = np.zeros(padded_len, dtype=np.float64)
    padded[:n] = vals
    return [as_plain(padded[j * stride : j * stride + params.m]) for j in range(k)]


def protect_plain(v, params: PolyProtectParams) -> ProtectedTemplate:
    """Apply the window polynomial in the clear."""
    windows = np.stack([w.values for w in chunk_embedding(v, params)])
    coeffs = np.asarray(params.coeffs, dtype=np.float64)
    exps = np.asarray(params.exps, dtype=np.float64)
    values = (np.power(windows, exps) * coeffs).sum(axis=1)
    return ProtectedTemplate(values, params.params_id, len(values))


def _pow_ct(sv: SlotVector, e: int, memo: dict) -> SlotVector:
    # Balanced split keeps depth at exactly ceil(log2 e); memo shares
    # sub-powers across the m exponent branches of one window.
    if e == 1:
        return sv
    got = memo.get(e)
    if got is not None:
        return got
    half = e // 2
    out = mult(_pow_ct(sv, half, memo), _pow_ct(sv, e - half, memo))
    memo[e] = out
    return out


def protect_encrypted(windows, params: PolyProtectParams, ctx: EncryptionContext) -> ProtectedTemplate:
    """Apply the window polynomial under the slot contract.

    Each input ciphertext holds one m-wide window in its first m slots (zeros
    elsewhere).  Each output ciphertext holds that window's p_j replicated in
    its first m slots.
    """
    cap = ctx.slot_capacity
    outs = []
    for sv in windows:
        memo: dict = {}
        combined = None
        for i in range(params.m):
            mask = np.zeros(cap, dtype=np.float64)
            mask[i] = float(params.coeffs[i])
            branch = mult_plain(_pow_ct(sv, params.exps[i], memo), mask)
            combined = branch if combined is None else add(combined, branch)
        folded = fold_add_all(combined, params.m)
        outs.append(broadcast_slot0(folded, params.m))
    return ProtectedTemplate(tuple(outs), params.params_id, len(outs))


def protect_depth(params: PolyProtectParams) -> int:
    """Depth protect_encrypted consumes on top of its inputs' depth."""
    return (max(params.exps) - 1).bit_length() + 2


def pack_template(pt: ProtectedTemplate, scale: float = 1.0) -> SlotVector:
    """Pack an encrypted template's k replicated values into one ciphertext.

    Slot j of the result holds scale * p_j; one depth level (the placement
    masks double as the scaling), k-1 rotations.
    """
    if not pt.encrypted:
        raise TypeError("pack_template needs the encrypted form")
    cts = pt.values
    cap = cts[0].slots.shape[0]
    if pt.k > cap:
        raise CapacityExceeded(f"template length {pt.k} > slot capacity {cap}")
    acc = None
    for j, ct in enumerate(cts):
        placed = ct if j == 0 else rotate_left(ct, cap - j)  # slot 0 -> slot j
        mask = np.zeros(cap, dtype=np.float64)
        mask[j] = scale
        branch = mult_plain(placed, mask)
        acc = branch if acc is None else add(acc, branch)
    return acc


def template_correlation(a: ProtectedTemplate, b: ProtectedTemplate) -> float:
    """Pearson correlation between two plaintext templates (unlinkability probe)."""
    x = np.asarray(a.values, dtype=np.float64)
    y = np.asarray(b.values, dtype=np.float64)
    if len(x) != len(y):
        raise ValueError("templates must have equal length to correlate")
    return float(np.corrcoef(x, y)[0, 1])


# --- statistics used for public scale calibration ----------------------------


def _sphere_even_moment(power: int, dim: int) -> float:
    # E[v_i^{2r}] for v uniform on the unit sphere: prod_{t<r} (2t+1)/(dim+2t).
    r = power // 2
    out = 1.0
    for t in range(r):
        out *= (2 * t + 1) / (dim + 2 * t)
    return out


def expected_template_norm(params: PolyProtectParams, n: int) -> float:
    """Estimate ||p|| for unit-norm inputs of length n, from public data only.

    Treats coordinates as approximately independent sphere coordinates; used
    to rescale templates so encrypted cosine denominators land inside the
    inverse-sqrt fit domain.  Accuracy within a small factor is enough.
    """
    dim = n
    second = 0.0
    mean = 0.0
    for c, e in zip(params.coeffs, params.exps):
        second += c * c * _sphere_even_moment(2 * e, dim)
        if e % 2 == 0:
            mean += c * _sphere_even_moment(e, dim)
            second -= (c * _sphere_even_moment(e, dim)) ** 2
    second += mean * mean
    k = output_len(n, params.m, params.overlap)
    return math.sqrt(max(k * second, 1e-300))


# --- params persistence -------------------------------------------------------


def params_to_dict(params: PolyProtectParams) -> dict:
    return {
        "m": params.m,
        "overlap": params.overlap,
        "c_range": params.c_range,
        "coeffs": list(params.coeffs),
        "exps": list(params.exps),
        "params_id": params.params_id,
        "seed": params.seed,
    }


def params_from_dict(d: dict) -> PolyProtectParams:
    return PolyProtectParams(
        d["m"], d["overlap"], tuple(d["coeffs"]), tuple(d["exps"]), d["c_range"], d["params_id"], d.get("seed")
    )


def save_params(params: PolyProtectParams, path):
    with open(path, "w") as f:
        json.dump(params_to_dict(params), f, indent=2)


def load_params(path) -> PolyProtectParams:
    with open(path) as f:
        return params_from_dict(json.load(f))
