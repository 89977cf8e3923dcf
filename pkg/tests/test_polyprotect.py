import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyfhe.backend import EncryptionContext, decrypt, encrypt
from polyfhe.errors import CapacityExceeded, InfeasibleParams, InputTooShort
from polyfhe.polyprotect import (
    PolyProtectParams,
    chunk_embedding,
    gen_params,
    load_params,
    output_len,
    pack_template,
    params_from_dict,
    params_to_dict,
    protect_depth,
    protect_encrypted,
    protect_plain,
    save_params,
    template_correlation,
)
from polyfhe.summation import fold_add_all


@pytest.fixture
def ctx():
    return EncryptionContext(8, 16, key_id="pp")


def test_gen_params_deterministic():
    a = gen_params(5, 2, 50, seed=7)
    b = gen_params(5, 2, 50, seed=7)
    assert a == b
    assert a.params_id == b.params_id


def test_gen_params_seeds_differ():
    a = gen_params(5, 2, 50, seed=1)
    b = gen_params(5, 2, 50, seed=2)
    assert a.coeffs != b.coeffs or a.exps != b.exps


def test_gen_params_contents():
    p = gen_params(6, 3, 40, seed=9)
    assert len(set(p.coeffs)) == 6
    assert all(c != 0 and -40 <= c <= 40 for c in p.coeffs)
    assert sorted(p.exps) == [1, 2, 3, 4, 5, 6]


def test_gen_params_overlap_bound():
    with pytest.raises(ValueError):
        gen_params(5, 5, 50, seed=1)
    with pytest.raises(ValueError):
        gen_params(5, -1, 50, seed=1)
    with pytest.raises(ValueError):
        gen_params(1, 0, 50, seed=1)


def test_gen_params_infeasible_range():
    with pytest.raises(InfeasibleParams):
        gen_params(5, 0, 2, seed=1)  # only 4 distinct nonzero values available
    gen_params(5, 0, 3, seed=1)  # 6 available: feasible


def test_params_validation():
    with pytest.raises(ValueError):
        PolyProtectParams(3, 0, (1, 1, 2), (1, 2, 3), 5, "x")  # repeated coeff
    with pytest.raises(ValueError):
        PolyProtectParams(3, 0, (1, -1, 2), (1, 2, 2), 5, "x")  # repeated exp
    with pytest.raises(ValueError):
        PolyProtectParams(3, 0, (0, -1, 2), (1, 2, 3), 5, "x")  # zero coeff


def test_protect_ones_vector_sums_coefficients():
    # ones kill the exponents, so each window value is just sum(C)
    p = gen_params(5, 0, 50, seed=3)
    out = protect_plain(np.ones(5), p)
    assert out.k == 1
    assert out.values[0] == pytest.approx(sum(p.coeffs), abs=1e-12)


def test_protect_stride_zero_overlap_matches_eq_layout():
    # v of length 10, m=5, overlap=0: second output uses v6..v10
    p = PolyProtectParams(5, 0, (2, -3, 1, 4, -1), (1, 2, 3, 4, 5), 5, "manual")
    v = np.arange(1.0, 11.0)
    out = protect_plain(v, p)
    assert out.k == 2
    expected_p2 = sum(c * v[5 + i] ** e for i, (c, e) in enumerate(zip(p.coeffs, p.exps)))
    assert out.values[1] == pytest.approx(expected_p2, rel=1e-12)


def test_protect_stride_max_overlap_matches_eq_layout():
    # v of length 6, m=5, overlap=4: second output starts at v2
    p = PolyProtectParams(5, 4, (2, -3, 1, 4, -1), (1, 2, 3, 4, 5), 5, "manual")
    v = np.array([0.3, -0.5, 0.2, 0.9, -0.1, 0.4])
    out = protect_plain(v, p)
    assert out.k == 2
    expected_p2 = sum(c * v[1 + i] ** e for i, (c, e) in enumerate(zip(p.coeffs, p.exps)))
    assert out.values[1] == pytest.approx(expected_p2, rel=1e-12)


def test_protect_brute_force_oracle():
    p = PolyProtectParams(5, 0, (2, -3, 1, 4, -1), (1, 2, 3, 4, 5), 5, "manual")
    v = np.array([0.5, -0.2, 0.1, 0.3, -0.4])
    expected = 0.0
    for c, e, x in zip(p.coeffs, p.exps, v):
        expected += c * x**e
    out = protect_plain(v, p)
    assert out.values[0] == pytest.approx(expected, rel=1e-12)


def test_protect_too_short():
    p = gen_params(5, 0, 50, seed=1)
    with pytest.raises(InputTooShort):
        protect_plain(np.ones(4), p)
    with pytest.raises(InputTooShort):
        chunk_embedding(np.ones(4), p)


def test_chunk_counts():
    p0 = gen_params(5, 0, 50, seed=1)
    p4 = gen_params(5, 4, 50, seed=1)
    assert len(chunk_embedding(np.ones(10), p0)) == 2
    assert len(chunk_embedding(np.ones(10), p4)) == 6
    assert len(chunk_embedding(np.ones(5), p4)) == 1


def test_chunk_tail_padding_covers_all_elements():
    p = gen_params(5, 0, 50, seed=1)
    v = np.arange(1.0, 13.0)  # length 12 -> 3 windows, last padded
    chunks = chunk_embedding(v, p)
    assert len(chunks) == 3
    assert chunks[2].values.tolist() == [11, 12, 0, 0, 0]


def test_chunked_protection_equals_whole():
    p = gen_params(4, 2, 30, seed=5)
    v = np.random.default_rng(0).normal(size=17)
    whole = protect_plain(v, p)
    per_window = [
        sum(c * w.values[i] ** e for i, (c, e) in enumerate(zip(p.coeffs, p.exps)))
        for w in chunk_embedding(v, p)
    ]
    assert np.allclose(whole.values, per_window, rtol=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    m=st.integers(min_value=2, max_value=8),
    data=st.data(),
    n=st.integers(min_value=8, max_value=96),
)
def test_output_len_properties(m, data, n):
    if n < m:
        n = m
    overlap = data.draw(st.integers(min_value=0, max_value=m - 1))
    k = output_len(n, m, overlap)
    assert k < n  # dimensionality reduction always holds
    if overlap == m - 1:
        assert k == n - m + 1
    # windows cover the vector: last window start + m >= n
    stride = m - overlap
    assert (k - 1) * stride + m >= n
    assert (k - 2) * stride + m < n or k == 1


def test_protect_encrypted_ones_window_replicates(ctx):
    p = PolyProtectParams(5, 0, (1, 2, 3, 4, 5), (1, 2, 3, 4, 5), 5, "manual")
    windows = [encrypt(np.ones(5), ctx)]
    out = protect_encrypted(windows, p, ctx)
    got = decrypt(out.values[0], ctx).values
    assert np.allclose(got[:5], 15.0, atol=1e-9)  # sum of coeffs, replicated
    assert np.allclose(got[5:], 0.0, atol=1e-12)


def test_protect_encrypted_matches_plain_oracle(ctx):
    rng = np.random.default_rng(8)
    for m in (3, 4, 5):
        for overlap in (0, m - 1):
            p = gen_params(m, overlap, 50, seed=[m, overlap])
            v = rng.normal(size=16)
            v /= np.linalg.norm(v)
            plain = protect_plain(v, p)
            windows = [encrypt(c, ctx) for c in chunk_embedding(v, p)]
            enc = protect_encrypted(windows, p, ctx)
            got = np.array([decrypt(ct, ctx).values[0] for ct in enc.values])
            assert np.max(np.abs(got - plain.values)) <= 1e-6


def test_protect_encrypted_depth_budget(ctx):
    p = PolyProtectParams(5, 0, (2, -3, 1, 4, -1), (1, 2, 3, 4, 5), 5, "manual")
    windows = [encrypt(np.full(5, 0.5), ctx)]
    out = protect_encrypted(windows, p, ctx)
    assert out.values[0].depth_used <= 5  # ceil(log2 5) + 2
    assert protect_depth(p) == 5


def test_protect_encrypted_agrees_with_fold_on_linear_window(ctx):
    # ones input: every branch passes its coefficient through, so the result
    # equals fold_add_all over the coefficient vector
    p = gen_params(5, 0, 20, seed=11)
    windows = [encrypt(np.ones(5), ctx)]
    enc = protect_encrypted(windows, p, ctx)
    folded = fold_add_all(encrypt(np.asarray(p.coeffs, dtype=float), ctx), 5)
    assert decrypt(enc.values[0], ctx).values[0] == pytest.approx(folded.slots[0], rel=1e-12)


def test_unlinkability_precursor_quick():
    rng = np.random.default_rng(0)
    cors = []
    for trial in range(50):
        v = rng.normal(size=64)
        v /= np.linalg.norm(v)
        t1 = protect_plain(v, gen_params(5, 4, 50, seed=[1, trial]))
        t2 = protect_plain(v, gen_params(5, 4, 50, seed=[2, trial]))
        cors.append(abs(template_correlation(t1, t2)))
    assert np.mean(cors) < 0.5


def test_pack_template_positions_and_scale(ctx):
    p = gen_params(5, 0, 50, seed=3)
    v = np.random.default_rng(1).normal(size=15)
    plain = protect_plain(v, p)
    windows = [encrypt(c, ctx) for c in chunk_embedding(v, p)]
    enc = protect_encrypted(windows, p, ctx)
    packed = pack_template(enc, scale=0.5)
    got = decrypt(packed, ctx).values[: plain.k]
    assert np.allclose(got, 0.5 * plain.values, atol=1e-9)
    assert packed.depth_used == enc.values[0].depth_used + 1


def test_pack_template_capacity_limit(ctx):
    p = gen_params(2, 1, 50, seed=3)  # k = n-1 windows, too many for capacity 8
    v = np.random.default_rng(1).normal(size=16)
    windows = [encrypt(c, ctx) for c in chunk_embedding(v, p)]
    enc = protect_encrypted(windows, p, ctx)
    with pytest.raises(CapacityExceeded):
        pack_template(enc)


def test_params_json_round_trip(tmp_path):
    p = gen_params(5, 3, 50, seed=21)
    path = tmp_path / "params.json"
    save_params(p, path)
    assert load_params(path) == p
    with open(path) as f:
        d = json.load(f)
    assert set(d) == {"m", "overlap", "c_range", "coeffs", "exps", "params_id", "seed"}
    assert params_from_dict(params_to_dict(p)) == p
