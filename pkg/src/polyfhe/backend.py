"""Simulated SIMD-slot homomorphic vector engine.

Models a CKKS-style batched ciphertext as a fixed-capacity array of float
slots with the operational contract of the real thing: slot-wise add/mult,
cyclic rotations over the full capacity, no individual-element access, a
multiplicative depth budget, and keyed masked serialization.  No lattice
cryptography is involved; the point is that every algorithm built on top is
expressed purely in terms of these operations, so its op counts, depth
consumption, and numerical behaviour are faithful even though the "encryption"
is a simulation.

Values are immutable: every operation returns a new SlotVector.  Contexts and
vectors can be shared freely across workers in exact mode; the noise and
seeded-nonce streams are ordered state, so noisy multiplication and seeded
serialization are only reproducible single-threaded.

Op accounting: each SlotVector carries rotation/mult counters describing the
work done to produce it.  Binary ops merge counters by summation (plus the op
itself), which over-counts when a value feeds both sides of an op; kernels
that guarantee exact counts (see summation module) normalize for that.
"""

from __future__ import annotations

import hashlib
import secrets
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityExceeded, DepthExceeded, KeyMismatch

_KEY_LEN = 16
_NONCE_LEN = 16


def _as_key_bytes(key_id) -> bytes:
    if key_id is None:
        return secrets.token_bytes(_KEY_LEN)
    if isinstance(key_id, bytes):
        if len(key_id) != _KEY_LEN:
            raise ValueError(f"key_id bytes must be length {_KEY_LEN}, got {len(key_id)}")
        return key_id
    if isinstance(key_id, str):
        return hashlib.sha256(b"polyfhe-key:" + key_id.encode()).digest()[:_KEY_LEN]
    raise TypeError("key_id must be str, bytes, or None")


@dataclass(frozen=True)
class PlainVector:
    """An unencrypted real vector (length >= 1)."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.shape[0] < 1:
            raise ValueError("PlainVector needs a 1-D array with at least one element")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.shape[0]


def as_plain(x) -> PlainVector:
    """Coerce an array-like (or PlainVector) into a PlainVector."""
    if isinstance(x, PlainVector):
        return x
    return PlainVector(np.atleast_1d(np.asarray(x, dtype=np.float64)))


@dataclass(frozen=True)
class EncryptionContext:
    """Key material and limits for one simulated keypair.

    slot_capacity must be a power of two.  masking_seed is derived from the
    key and drives the serialization keystream; noise_stddev > 0 turns on
    per-multiplication Gaussian noise (default 0 = exact mode, which all
    deterministic oracles rely on).  nonce_seed, when given, makes the
    serialization nonce stream reproducible -- every call still draws a fresh
    nonce, but two runs with the same seed produce byte-identical dumps,
    which reproducible experiment outputs depend on.
    """

    slot_capacity: int
    depth_budget: int = 16
    key_id: bytes = None  # str/bytes/None accepted; normalized to 16 bytes
    noise_stddev: float = 0.0
    nonce_seed: int = None
    masking_seed: bytes = field(init=False, repr=False, compare=False)
    _noise_rng: np.random.Generator = field(init=False, repr=False, compare=False)
    _nonce_rng: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        cap = self.slot_capacity
        if cap < 1 or cap & (cap - 1):
            raise ValueError(f"slot_capacity must be a power of two, got {cap}")
        if self.depth_budget < 1:
            raise ValueError("depth_budget must be >= 1")
        if self.noise_stddev < 0:
            raise ValueError("noise_stddev must be >= 0")
        key = _as_key_bytes(self.key_id)
        object.__setattr__(self, "key_id", key)
        seed = hashlib.sha256(b"polyfhe-mask:" + key).digest()
        object.__setattr__(self, "masking_seed", seed)
        noise_seed = int.from_bytes(hashlib.sha256(b"polyfhe-noise:" + key).digest()[:8], "little")
        object.__setattr__(self, "_noise_rng", np.random.default_rng(noise_seed))
        nonce_rng = None if self.nonce_seed is None else np.random.default_rng(self.nonce_seed)
        object.__setattr__(self, "_nonce_rng", nonce_rng)

    def _fresh_nonce(self) -> bytes:
        if self._nonce_rng is None:
            return secrets.token_bytes(_NONCE_LEN)
        return self._nonce_rng.bytes(_NONCE_LEN)


class SlotVector:
    """A simulated ciphertext: capacity-length slot array plus accounting.

    Treat instances as immutable; all operations below return new values.
    Do not read .slots in application code -- that is the simulator's
    backstage, not part of the encrypted-domain contract.
    """

    __slots__ = ("slots", "logical_len", "depth_used", "rotations_used", "mults_used", "key_id", "ctx")

    def __init__(self, slots, logical_len, depth_used, rotations_used, mults_used, ctx):
        self.slots = slots
        self.logical_len = logical_len
        self.depth_used = depth_used
        self.rotations_used = rotations_used
        self.mults_used = mults_used
        self.key_id = ctx.key_id
        self.ctx = ctx

    def __repr__(self):
        return (
            f"SlotVector(capacity={self.slots.shape[0]}, logical_len={self.logical_len}, "
            f"depth={self.depth_used}, rot={self.rotations_used}, mult={self.mults_used})"
        )


def _new(ctx, slots, logical_len, depth, rot, mul) -> SlotVector:
    sv = SlotVector.__new__(SlotVector)
    sv.slots = slots
    sv.logical_len = logical_len
    sv.depth_used = depth
    sv.rotations_used = rot
    sv.mults_used = mul
    sv.key_id = ctx.key_id
    sv.ctx = ctx
    return sv


def encrypt(plain, ctx: EncryptionContext) -> SlotVector:
    """Encrypt a plain vector: values in the leading slots, zeros after."""
    pv = as_plain(plain)
    n = len(pv)
    if n > ctx.slot_capacity:
        raise CapacityExceeded(f"plaintext length {n} > slot capacity {ctx.slot_capacity}")
    slots = np.zeros(ctx.slot_capacity, dtype=np.float64)
    slots[:n] = pv.values
    return _new(ctx, slots, n, 0, 0, 0)


def decrypt(sv: SlotVector, ctx: EncryptionContext) -> PlainVector:
    """Return the first logical_len slots; requires the producing key."""
    if sv.key_id != ctx.key_id:
        raise KeyMismatch("decrypt with a foreign context (missing secret key)")
    return PlainVector(sv.slots[: sv.logical_len].copy())


def _check_pair(a: SlotVector, b: SlotVector):
    if a.key_id != b.key_id:
        raise KeyMismatch("binary op across ciphertexts under different keys")
    if a.slots.shape[0] != b.slots.shape[0]:
        raise ValueError("binary op across ciphertexts of different capacities")


def add(a: SlotVector, b: SlotVector) -> SlotVector:
    """Slot-wise sum.  Depth is max of the inputs; counters merge."""
    _check_pair(a, b)
    sv = SlotVector.__new__(SlotVector)
    sv.slots = a.slots + b.slots
    sv.logical_len = a.logical_len if a.logical_len >= b.logical_len else b.logical_len
    sv.depth_used = a.depth_used if a.depth_used >= b.depth_used else b.depth_used
    sv.rotations_used = a.rotations_used + b.rotations_used
    sv.mults_used = a.mults_used + b.mults_used
    sv.key_id = a.key_id
    sv.ctx = a.ctx
    return sv


def sub(a: SlotVector, b: SlotVector) -> SlotVector:
    """Slot-wise difference; same accounting as add."""
    _check_pair(a, b)
    return _new(
        a.ctx,
        a.slots - b.slots,
        max(a.logical_len, b.logical_len),
        a.depth_used if a.depth_used >= b.depth_used else b.depth_used,
        a.rotations_used + b.rotations_used,
        a.mults_used + b.mults_used,
    )


def mult(a: SlotVector, b: SlotVector) -> SlotVector:
    """Slot-wise ciphertext-ciphertext product; consumes one depth level."""
    _check_pair(a, b)
    depth = (a.depth_used if a.depth_used >= b.depth_used else b.depth_used) + 1
    ctx = a.ctx
    if depth > ctx.depth_budget:
        raise DepthExceeded(f"mult would reach depth {depth} > budget {ctx.depth_budget}")
    slots = a.slots * b.slots
    if ctx.noise_stddev > 0.0:
        slots = slots + ctx._noise_rng.normal(0.0, ctx.noise_stddev, slots.shape[0])
    return _new(
        ctx,
        slots,
        max(a.logical_len, b.logical_len),
        depth,
        a.rotations_used + b.rotations_used,
        a.mults_used + b.mults_used + 1,
    )


def _coerce_scalars(scalars, capacity: int):
    if isinstance(scalars, (int, float)):
        return float(scalars)
    vals = scalars.values if isinstance(scalars, PlainVector) else np.asarray(scalars, dtype=np.float64)
    if vals.ndim == 0 or vals.shape[0] == 1:
        return float(vals.reshape(-1)[0]) if vals.ndim else float(vals)
    if vals.shape[0] != capacity:
        raise ValueError(f"plaintext operand must have length 1 or {capacity}, got {vals.shape[0]}")
    return vals


def mult_plain(a: SlotVector, scalars) -> SlotVector:
    """Slot-wise product with a plaintext scalar or capacity-length vector.

    Consumes one depth level (conservative CKKS-style rescale accounting).
    """
    ctx = a.ctx
    depth = a.depth_used + 1
    if depth > ctx.depth_budget:
        raise DepthExceeded(f"mult_plain would reach depth {depth} > budget {ctx.depth_budget}")
    if type(scalars) is np.ndarray and scalars.shape == a.slots.shape:
        vals = scalars
    else:
        vals = _coerce_scalars(scalars, a.slots.shape[0])
    sv = SlotVector.__new__(SlotVector)
    sv.slots = a.slots * vals
    sv.logical_len = a.logical_len
    sv.depth_used = depth
    sv.rotations_used = a.rotations_used
    sv.mults_used = a.mults_used + 1
    sv.key_id = a.key_id
    sv.ctx = ctx
    return sv


def add_plain(a: SlotVector, scalars) -> SlotVector:
    """Slot-wise sum with a plaintext scalar or capacity-length vector.

    Free of depth cost (plaintext additions do not consume a level).
    """
    vals = _coerce_scalars(scalars, a.slots.shape[0])
    return _new(a.ctx, a.slots + vals, a.logical_len, a.depth_used, a.rotations_used, a.mults_used)


def rotate_left(a: SlotVector, k: int) -> SlotVector:
    """Cyclic left rotation over the full capacity (k reduced mod capacity).

    Counts as one rotation even when the reduced offset is zero -- a real
    scheme still performs the Galois automorphism.
    """
    if k < 0:
        raise ValueError("rotation offset must be >= 0")
    s = a.slots
    cap = s.shape[0]
    k &= cap - 1  # capacity is a power of two
    if k:
        out = np.empty_like(s)
        out[: cap - k] = s[k:]
        out[cap - k :] = s[:k]
    else:
        out = s.copy()
    sv = SlotVector.__new__(SlotVector)
    sv.slots = out
    sv.logical_len = a.logical_len
    sv.depth_used = a.depth_used
    sv.rotations_used = a.rotations_used + 1
    sv.mults_used = a.mults_used
    sv.key_id = a.key_id
    sv.ctx = a.ctx
    return sv


# --- keyed serialization -----------------------------------------------------
#
# Byte layout: [key_id: 16][nonce: 16][capacity: 4 LE][masked slots: cap x 8 LE].
# Slots are XOR-masked (on their IEEE-754 byte image) with a SHA-256 counter
# keystream derived from (masking_seed, nonce), so the payload of any two
# plaintexts is byte-indistinguishable without the seed, and unmasking is exact.


def _keystream(seed: bytes, nonce: bytes, nbytes: int) -> bytes:
    blocks = []
    for ctr in range((nbytes + 31) // 32):
        blocks.append(hashlib.sha256(seed + nonce + ctr.to_bytes(8, "little")).digest())
    return b"".join(blocks)[:nbytes]


def serialize_ciphertext(sv: SlotVector, ctx: EncryptionContext, mask: bool = True) -> bytes:
    """Encode a ciphertext with a fresh nonce and a keyed XOR keystream.

    mask=False is a debug mode that writes raw slot bytes (used as the
    control arm of the leakage experiments); the layout is unchanged.
    """
    cap = sv.slots.shape[0]
    nonce = ctx._fresh_nonce()
    payload = sv.slots.astype("<f8").tobytes()
    if mask:
        ks = _keystream(ctx.masking_seed, nonce, len(payload))
        payload = (np.frombuffer(payload, dtype=np.uint8) ^ np.frombuffer(ks, dtype=np.uint8)).tobytes()
    return sv.key_id + nonce + struct.pack("<I", cap) + payload


def deserialize_ciphertext(blob: bytes, ctx: EncryptionContext, masked: bool = True) -> SlotVector:
    """Reverse serialize_ciphertext under the producing context.

    Depth/op counters are not part of the wire format; the result carries
    zeroed accounting and logical_len = capacity.  Callers that track depth
    across persistence restore it from what they know produced the value.
    """
    key = blob[:_KEY_LEN]
    if key != ctx.key_id:
        raise KeyMismatch("serialized ciphertext belongs to a different key")
    nonce = blob[_KEY_LEN : _KEY_LEN + _NONCE_LEN]
    (cap,) = struct.unpack("<I", blob[_KEY_LEN + _NONCE_LEN : _KEY_LEN + _NONCE_LEN + 4])
    if cap != ctx.slot_capacity:
        raise ValueError(f"blob capacity {cap} != context capacity {ctx.slot_capacity}")
    payload = blob[_KEY_LEN + _NONCE_LEN + 4 :]
    if len(payload) != cap * 8:
        raise ValueError("truncated ciphertext blob")
    if masked:
        ks = _keystream(ctx.masking_seed, nonce, len(payload))
        payload = (np.frombuffer(payload, dtype=np.uint8) ^ np.frombuffer(ks, dtype=np.uint8)).tobytes()
    slots = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return _new(ctx, slots, cap, 0, 0, 0)
