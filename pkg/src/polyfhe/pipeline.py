"""End-to-end 1:N identification: compress -> encrypt -> protect -> search.

The stage order is fixed (prefix compression first, then encryption, then the
window polynomial); building a pipeline with any other order refuses to run.
Synthetic labeled datasets stand in for real face-embedding corpora: per-
identity Gaussian clusters on the unit sphere, with a configurable fraction
of coordinates carrying attribute-aligned mean shifts so attribute
classifiers have something to find.

Because protection parameters are per-user, a 1:N search re-protects the
probe with each gallery record's own parameters before scoring -- N times the
protect cost, which is the price of user-specific transforms.  Encrypted
cosine needs the scaled denominator inside the inverse-sqrt fit domain, so
packed templates are normalized by a public, params-derived scale estimate
(the same scale on both sides of a comparison, so scores are unchanged).
"""

from __future__ import annotations

import concurrent.futures
import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backend import EncryptionContext, decrypt, deserialize_ciphertext, encrypt, serialize_ciphertext
from .errors import UnknownParamsId, ZeroPrefix
from .invsqrt import PolyApprox, fit_inv_sqrt
from .polyprotect import (
    PolyProtectParams,
    ProtectedTemplate,
    chunk_embedding,
    expected_template_norm,
    gen_params,
    output_len,
    pack_template,
    params_from_dict,
    params_to_dict,
    protect_depth,
    protect_encrypted,
    protect_plain,
)
from .similarity import NormalizationPlan, cosine_encrypted, cosine_plain, make_normalization_plan

ATTRIBUTE_CLASSES = {
    "gender": ("female", "male"),
    "age_band": ("0-22", "23-40", "41-59", "60+"),
    "ethnicity": ("hispanic", "white", "black", "asian"),
}

_CANONICAL_STAGES = ("compress", "encrypt", "protect")


@dataclass(frozen=True)
class Embedding:
    """A labeled embedding vector."""

    values: np.ndarray
    subject_id: str
    attributes: dict

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic labeled dataset (deterministic per seed)."""

    num_ids: int
    samples_per_id: int
    dim: int = 512
    class_separation: float = 30.0
    attribute_correlation: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.num_ids < 2:
            raise ValueError("num_ids must be >= 2")
        if self.samples_per_id < 1:
            raise ValueError("samples_per_id must be >= 1")
        if self.class_separation <= 0:
            raise ValueError("class_separation must be positive")
        if not 0.0 <= self.attribute_correlation <= 1.0:
            raise ValueError("attribute_correlation must be in [0, 1]")


@dataclass
class GalleryRecord:
    """One enrolled subject: protected template plus the ids to resolve it."""

    subject_id: str
    protected: ProtectedTemplate
    params_id: str
    compress_dim: int
    blobs: tuple = field(default=None, repr=False, compare=False)


_ATTR_SHIFT = 2.5


def gen_synthetic_dataset(spec: SyntheticSpec) -> list:
    """Per-identity Gaussian clusters on the unit sphere with attribute shifts.

    A fraction `attribute_correlation` of coordinates is partitioned among the
    three attributes; each attribute class adds a fixed pattern on its block
    to the identity center, so classifiers can recover labels across
    identities.  attribute_correlation = 0 leaves labels independent of the
    embedding.
    """
    rng = np.random.default_rng(spec.seed)
    dim = spec.dim
    n_attr = int(round(spec.attribute_correlation * dim))
    coords = rng.permutation(dim)[:n_attr]
    blocks = {}
    start = 0
    for i, attr in enumerate(ATTRIBUTE_CLASSES):
        size = n_attr // 3 + (1 if i < n_attr % 3 else 0)
        blocks[attr] = coords[start : start + size]
        start += size
    patterns = {
        attr: {cls: rng.normal(0.0, 1.0, len(blocks[attr])) for cls in classes}
        for attr, classes in ATTRIBUTE_CLASSES.items()
    }

    out = []
    for i in range(spec.num_ids):
        labels = {attr: classes[rng.integers(len(classes))] for attr, classes in ATTRIBUTE_CLASSES.items()}
        center = rng.normal(0.0, 1.0, dim)
        for attr, block in blocks.items():
            if len(block):
                center[block] += _ATTR_SHIFT * patterns[attr][labels[attr]]
        center /= np.linalg.norm(center)
        sid = f"id{i:04d}"
        for _ in range(spec.samples_per_id):
            x = spec.class_separation * center + rng.normal(0.0, 1.0, dim)
            x /= np.linalg.norm(x)
            out.append(Embedding(x, sid, dict(labels)))
    return out


def compress_prefix(e: Embedding, d: int) -> Embedding:
    """Keep the first d coordinates and renormalize to unit length.

    Assumes nested-prefix embeddings; training such embeddings is upstream of
    this library.
    """
    if not 1 <= d <= len(e.values):
        raise ValueError(f"compress dim {d} outside 1..{len(e.values)}")
    prefix = e.values[:d]
    norm = np.linalg.norm(prefix)
    if norm == 0.0:
        raise ZeroPrefix("prefix is the zero vector; cannot renormalize")
    return Embedding(prefix / norm, e.subject_id, e.attributes)


def enroll(e: Embedding, params: PolyProtectParams, ctx: EncryptionContext, d: int) -> GalleryRecord:
    """compress -> chunk -> encrypt -> protect; returns the persistable record."""
    v = compress_prefix(e, d)
    windows = [encrypt(chunk, ctx) for chunk in chunk_embedding(v.values, params)]
    protected = protect_encrypted(windows, params, ctx)
    return GalleryRecord(e.subject_id, protected, params.params_id, d)


def enroll_plain(e: Embedding, params: PolyProtectParams, d: int) -> GalleryRecord:
    """Plaintext twin of enroll (the parity oracle's gallery)."""
    v = compress_prefix(e, d)
    return GalleryRecord(e.subject_id, protect_plain(v.values, params), params.params_id, d)


def _score_record(probe, rec, params_store, ctx, plan, approx):
    params = params_store.get(rec.params_id)
    if params is None:
        raise UnknownParamsId(f"no parameters stored for params_id {rec.params_id}")
    v = compress_prefix(probe, rec.compress_dim)
    windows = [encrypt(chunk, ctx) for chunk in chunk_embedding(v.values, params)]
    probe_pt = protect_encrypted(windows, params, ctx)
    scale = 1.0 / expected_template_norm(params, rec.compress_dim)
    packed_gal = pack_template(rec.protected, scale)
    packed_probe = pack_template(probe_pt, scale)
    ct = cosine_encrypted(packed_gal, packed_probe, probe_pt.k, plan, approx, ctx)
    return rec.subject_id, float(decrypt(ct, ctx).values[0])


def identify(
    probe: Embedding,
    gallery: list,
    params_store: dict,
    ctx: EncryptionContext,
    plan: NormalizationPlan,
    approx: PolyApprox,
    jobs: int = 1,
) -> list:
    """Encrypted 1:N search: (subject_id, score) sorted by descending score.

    The probe is re-protected under each record's own parameters; scores are
    decrypted with the user context before ranking.  Ties break by subject_id
    for a stable order.
    """
    if not gallery:
        raise ValueError("identify needs a nonempty gallery")
    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            scores = list(pool.map(lambda r: _score_record(probe, r, params_store, ctx, plan, approx), gallery))
    else:
        scores = [_score_record(probe, rec, params_store, ctx, plan, approx) for rec in gallery]
    return sorted(scores, key=lambda t: (-t[1], t[0]))


def identify_plain(probe: Embedding, gallery: list, params_store: dict) -> list:
    """Plaintext twin of identify over plaintext-protected records."""
    if not gallery:
        raise ValueError("identify needs a nonempty gallery")
    scores = []
    for rec in gallery:
        params = params_store.get(rec.params_id)
        if params is None:
            raise UnknownParamsId(f"no parameters stored for params_id {rec.params_id}")
        v = compress_prefix(probe, rec.compress_dim)
        probe_t = protect_plain(v.values, params)
        scores.append((rec.subject_id, cosine_plain(probe_t.values, rec.protected.values)))
    return sorted(scores, key=lambda t: (-t[1], t[0]))


# --- pipeline object ----------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    """Everything that determines a run; (config, seed) fixes all outputs."""

    compress_dim: int = 64
    m: int = 5
    overlap: int = 4
    c_range: int = 50
    slot_capacity: int = 128
    depth_budget: int = 32
    approx_degree: int = 16
    domain_ratio: float = 8.0
    noise_stddev: float = 0.0
    encrypted: bool = True
    seed: int = 0
    stage_order: tuple = _CANONICAL_STAGES


class Pipeline:
    """Holds one run's context, normalization plan, fit, and params store.

    The plan and fit domain are sized from the config's (compress_dim, m,
    overlap), so every gallery record scored by this pipeline must share
    those; per-user variation lives in the coefficients and exponents.
    """

    def __init__(self, cfg: PipelineConfig):
        if tuple(cfg.stage_order) != _CANONICAL_STAGES:
            raise ValueError(f"stage order must be {_CANONICAL_STAGES}, got {tuple(cfg.stage_order)}")
        self.cfg = cfg
        self.ctx = EncryptionContext(
            cfg.slot_capacity,
            cfg.depth_budget,
            key_id=f"pipeline-{cfg.seed}",
            noise_stddev=cfg.noise_stddev,
            nonce_seed=cfg.seed,
        )
        self.k = output_len(cfg.compress_dim, cfg.m, cfg.overlap)
        # After the per-record scale normalization, packed templates sit near
        # unit norm; bound 4/sqrt(k) per element keeps the scaled numerator
        # inside [-1, 1] with slack, and centers the scaled denominator at
        # 1/d_bound where the inverse-sqrt fit is anchored.
        self.plan = make_normalization_plan(4.0 / math.sqrt(self.k), self.k)
        x0 = 1.0 / self.plan.d_bound
        lo = x0 / cfg.domain_ratio
        hi = min(1.0, x0 * cfg.domain_ratio)
        self.approx = fit_inv_sqrt(cfg.approx_degree, (lo, hi))
        self.params_store: dict = {}

    def gen_user_params(self, index: int) -> PolyProtectParams:
        params = gen_params(self.cfg.m, self.cfg.overlap, self.cfg.c_range, seed=[self.cfg.seed, index])
        self.params_store[params.params_id] = params
        return params

    def enroll(self, e: Embedding, params: PolyProtectParams) -> GalleryRecord:
        if self.cfg.encrypted:
            return enroll(e, params, self.ctx, self.cfg.compress_dim)
        return enroll_plain(e, params, self.cfg.compress_dim)

    def identify(self, probe: Embedding, gallery: list, jobs: int = 1) -> list:
        if self.cfg.encrypted:
            return identify(probe, gallery, self.params_store, self.ctx, self.plan, self.approx, jobs)
        return identify_plain(probe, gallery, self.params_store)


def enroll_split(dataset: list) -> tuple:
    """One enrolled sample per identity (the first), the rest are probes."""
    seen = set()
    enrollees, probes = [], []
    for e in dataset:
        if e.subject_id in seen:
            probes.append(e)
        else:
            seen.add(e.subject_id)
            enrollees.append(e)
    return enrollees, probes


def build_gallery(dataset: list, pipeline: Pipeline) -> tuple:
    """Enroll the per-identity split; returns (gallery, probes)."""
    enrollees, probes = enroll_split(dataset)
    gallery = []
    for i, e in enumerate(enrollees):
        params = pipeline.gen_user_params(i)
        gallery.append(pipeline.enroll(e, params))
    return gallery, probes


def rank1_accuracy(dataset: list, cfg: PipelineConfig, jobs: int = 1) -> float:
    """Fraction of probes whose top-scored gallery identity is correct."""
    pipeline = Pipeline(cfg)
    gallery, probes = build_gallery(dataset, pipeline)
    if not probes:
        raise ValueError("dataset leaves no probes after the enroll split")
    hits = 0
    for probe in probes:
        ranked = pipeline.identify(probe, gallery, jobs=jobs)
        hits += ranked[0][0] == probe.subject_id
    return hits / len(probes)


# --- dataset persistence --------------------------------------------------------


def save_dataset(dataset: list, path):
    """CSV with columns id,gender,age_band,ethnicity,v0..v{dim-1}."""
    dim = len(dataset[0].values)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "gender", "age_band", "ethnicity"] + [f"v{i}" for i in range(dim)])
        for e in dataset:
            w.writerow(
                [e.subject_id, e.attributes["gender"], e.attributes["age_band"], e.attributes["ethnicity"]]
                + [repr(float(v)) for v in e.values]
            )


def load_dataset(path) -> list:
    out = []
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        dim = len(header) - 4
        for row in r:
            attrs = {"gender": row[1], "age_band": row[2], "ethnicity": row[3]}
            out.append(Embedding(np.array([float(x) for x in row[4 : 4 + dim]]), row[0], attrs))
    return out


# --- gallery persistence ---------------------------------------------------------


def save_gallery(gallery: list, ctx: EncryptionContext, params_store: dict, out_dir):
    """Write manifest.json, per-params JSON, and binary ciphertext blobs.

    Records loaded from disk keep their original blob bytes, so a
    save -> load -> save round trip is bit-identical (re-serializing would
    draw fresh nonces).
    """
    out = Path(out_dir)
    (out / "blobs").mkdir(parents=True, exist_ok=True)
    (out / "params").mkdir(exist_ok=True)
    records_meta = []
    for i, rec in enumerate(gallery):
        blobs = rec.blobs
        if blobs is None:
            blobs = tuple(serialize_ciphertext(ct, ctx) for ct in rec.protected.values)
            rec.blobs = blobs
        paths = []
        for j, blob in enumerate(blobs):
            rel = f"blobs/{i}_{j}.ct"
            (out / rel).write_bytes(blob)
            paths.append(rel)
        records_meta.append(
            {
                "subject_id": rec.subject_id,
                "params_id": rec.params_id,
                "compress_dim": rec.compress_dim,
                "blob_paths": paths,
            }
        )
    for pid, params in params_store.items():
        with open(out / "params" / f"{pid}.json", "w") as f:
            json.dump(params_to_dict(params), f, indent=2)
    manifest = {
        "version": 1,
        "ctx": {
            "slot_capacity": ctx.slot_capacity,
            "depth_budget": ctx.depth_budget,
            "key_id": ctx.key_id.hex(),
        },
        "records": records_meta,
    }
    with open(out / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2)


def load_gallery(in_dir, ctx: EncryptionContext = None) -> tuple:
    """Read a saved gallery; returns (gallery, params_store, ctx).

    Blob bytes are kept on each record so a subsequent save is bit-identical.
    Ciphertext depth is not on the wire; it is restored from the protection
    parameters that produced each template.
    """
    src = Path(in_dir)
    with open(src / "manifest.json") as f:
        manifest = json.load(f)
    meta = manifest["ctx"]
    if ctx is None:
        ctx = EncryptionContext(meta["slot_capacity"], meta["depth_budget"], key_id=bytes.fromhex(meta["key_id"]))
    elif ctx.key_id.hex() != meta["key_id"]:
        raise ValueError("context key does not match the saved gallery")
    params_store = {}
    for pfile in sorted((src / "params").glob("*.json")):
        with open(pfile) as f:
            params = params_from_dict(json.load(f))
        params_store[params.params_id] = params
    gallery = []
    for rec_meta in manifest["records"]:
        params = params_store.get(rec_meta["params_id"])
        if params is None:
            raise UnknownParamsId(f"gallery references unknown params_id {rec_meta['params_id']}")
        depth = protect_depth(params)
        blobs = tuple((src / rel).read_bytes() for rel in rec_meta["blob_paths"])
        cts = []
        for blob in blobs:
            sv = deserialize_ciphertext(blob, ctx)
            sv.depth_used = depth
            cts.append(sv)
        protected = ProtectedTemplate(tuple(cts), rec_meta["params_id"], len(cts))
        gallery.append(
            GalleryRecord(rec_meta["subject_id"], protected, rec_meta["params_id"], rec_meta["compress_dim"], blobs)
        )
    return gallery, params_store, ctx
