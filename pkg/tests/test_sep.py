"""Separation-baseline tests: noise recovery, extraction, and the pipeline."""

import json
import pathlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polarcoord.channels import AdditiveChannel
from polarcoord.polar import SetThresholds
from polarcoord.polar.sets import sets_from_json
from polarcoord.probkit import Pmf, binary_entropy
from polarcoord.rate_region import FeasibilityError
from polarcoord.rng import stream
from polarcoord.sep import (
    block_entropy_rate,
    design_channel_code,
    extract,
    format_sep_report,
    separate_operating_point,
    separate_pipeline,
    simulate_noise_recovery,
)

FIXTURES = pathlib.Path(__file__).parent / "fixtures"
GOLDEN = json.loads((FIXTURES / "golden.json").read_text())


def bsc_noise(p_o):
    return AdditiveChannel(2, Pmf([1.0 - p_o, p_o]))


# ---- entropy estimation --------------------------------------------------------


def test_block_entropy_rate_reference_points():
    rng = np.random.default_rng(11)
    assert block_entropy_rate(np.zeros(4096, dtype=int)) == 0.0
    # periodic bits repeat one byte value: structure the estimator must see
    assert block_entropy_rate(np.tile([0, 1], 2048)) == 0.0
    assert block_entropy_rate(rng.integers(0, 2, 100_000)) > 0.99
    bern = (rng.random(100_000) < 0.1).astype(np.uint8)
    assert abs(block_entropy_rate(bern) - binary_entropy(0.1)) < 0.02
    assert block_entropy_rate(np.array([1, 0, 1])) == 0.0  # no complete block
    with pytest.raises(ValueError, match="block width"):
        block_entropy_rate(bern, block_bits=0)
    with pytest.raises(ValueError, match="binary"):
        block_entropy_rate(np.array([0, 1, 2]))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_block_entropy_rate_is_block_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    bits = (rng.random(512) < rng.uniform(0.05, 0.95)).astype(np.uint8)
    rate = block_entropy_rate(bits)
    assert 0.0 <= rate <= 1.0
    shuffled = bits.reshape(64, 8)[rng.permutation(64)].reshape(-1)
    assert block_entropy_rate(shuffled) == pytest.approx(rate, abs=1e-12)


# ---- operating point -----------------------------------------------------------


def test_operating_point_legs():
    p1, p2 = separate_operating_point(0.4, 0.1, rate_margin=1.0)
    assert p1 == pytest.approx(0.1, abs=1e-9)
    assert p2 == pytest.approx(0.375, abs=1e-9)
    for p, p_o, margin in [(0.4, 0.1, 0.5), (0.3, 0.05, 0.4), (0.45, 0.2, 0.8)]:
        p1, p2 = separate_operating_point(p, p_o, margin)
        assert 0.0 <= p1 <= p
        assert p1 * (1 - p2) + p2 * (1 - p1) == pytest.approx(p, abs=1e-12)
    # a fat margin would overshoot the target leg; it clamps at p1 = p
    p1, p2 = separate_operating_point(0.12, 0.1, rate_margin=0.5)
    assert p1 == pytest.approx(0.12, abs=1e-12)
    assert p2 == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(FeasibilityError):
        separate_operating_point(0.2, 0.3)
    with pytest.raises(FeasibilityError):
        separate_operating_point(0.4, 0.5)
    with pytest.raises(ValueError, match="margin"):
        separate_operating_point(0.4, 0.1, rate_margin=0.0)


# ---- inner channel code --------------------------------------------------------


def test_channel_code_noiseless_roundtrip():
    rng = np.random.default_rng(3)
    code = design_channel_code(bsc_noise(0.0), 64, 32, rng, mc_samples=500)
    msgs = rng.integers(0, 2, (5, 32)).astype(np.uint8)
    decoded_msgs, decoded_words = code.decode(code.encode(msgs))
    assert np.array_equal(decoded_msgs, msgs)
    assert np.array_equal(decoded_words, code.encode(msgs))


def test_channel_code_validations():
    rng = np.random.default_rng(4)
    code = design_channel_code(bsc_noise(0.1), 32, 8, rng, mc_samples=500)
    assert code.rate == 0.25
    with pytest.raises(ValueError, match="messages carry"):
        code.encode(np.zeros((2, 9), dtype=np.uint8))
    with pytest.raises(ValueError, match="block length"):
        code.decode(np.zeros((2, 64), dtype=np.uint8))
    with pytest.raises(ValueError, match="binary"):
        design_channel_code(AdditiveChannel(3, Pmf([0.8, 0.1, 0.1])), 32, 8, rng)
    with pytest.raises(ValueError, match="power of two"):
        design_channel_code(bsc_noise(0.1), 48, 8, rng)
    with pytest.raises(ValueError, match="message size"):
        design_channel_code(bsc_noise(0.1), 32, 40, rng)


# ---- noise recovery ------------------------------------------------------------


def test_noise_recovery_bsc_reference():
    rng = np.random.default_rng(42)
    report = simulate_noise_recovery(bsc_noise(0.1), 0.3, 1024, 1000, rng)
    assert report.trials == 1000
    assert report.noise_mismatch_rate <= 0.05
    assert abs(report.empirical_entropy_rate - binary_entropy(0.1)) <= 0.05
    assert report.mi_estimate <= 0.02
    assert not report.above_capacity
    expected = np.floor(0.9 * 1024 * report.empirical_entropy_rate) / 1024
    assert report.extracted_bits_per_use == pytest.approx(expected, abs=1e-12)


def test_noise_recovery_negative_control():
    rng = np.random.default_rng(43)
    with pytest.warns(RuntimeWarning, match="negative control"):
        report = simulate_noise_recovery(bsc_noise(0.1), 0.7, 1024, 300, rng)
    assert report.above_capacity
    assert report.noise_mismatch_rate >= 0.5


def test_noise_recovery_noiseless_is_exact():
    rng = np.random.default_rng(44)
    report = simulate_noise_recovery(bsc_noise(0.0), 0.3, 256, 50, rng, mc_samples=500)
    assert report.noise_mismatch_rate == 0.0
    assert report.empirical_entropy_rate == 0.0
    assert report.extracted_bits_per_use == 0.0
    assert report.mi_estimate == pytest.approx(0.0, abs=1e-12)


def test_noise_recovery_validations():
    rng = np.random.default_rng(45)
    with pytest.raises(ValueError, match="trial"):
        simulate_noise_recovery(bsc_noise(0.1), 0.3, 64, 0, rng)
    with pytest.raises(ValueError, match="code rate"):
        simulate_noise_recovery(bsc_noise(0.1), 1.2, 64, 10, rng)


# ---- extraction ----------------------------------------------------------------


def test_extract_edges_and_determinism():
    rng = np.random.default_rng(8)
    z = (rng.random(2048) < 0.1).astype(np.uint8)
    assert extract(z, 0, seed=1).size == 0
    first = extract(z, 200, seed=1)
    assert first.shape == (200,)
    assert np.array_equal(first, extract(z, 200, seed=1))
    assert not np.array_equal(first, extract(z, 200, seed=2))
    with pytest.raises(ValueError, match="guard"):
        extract(np.zeros(1024, dtype=np.uint8), 1, seed=1)
    with pytest.raises(ValueError, match="guard"):
        extract(z, 2048, seed=1)
    with pytest.raises(ValueError, match="negative"):
        extract(z, -1, seed=1)
    with pytest.raises(ValueError, match="1-D"):
        extract(z.reshape(2, -1), 10, seed=1)
    with pytest.raises(ValueError, match="binary"):
        extract(np.array([0, 1, 2]), 0, seed=1)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_extract_is_linear_over_gf2(seed):
    rng = np.random.default_rng(seed)
    z1, z2 = rng.integers(0, 2, (2, 64)).astype(np.uint8)
    kwargs = dict(seed=5, entropy_rate=1.0)  # externally certified source
    lhs = extract(z1 ^ z2, 16, **kwargs)
    assert np.array_equal(lhs, extract(z1, 16, **kwargs) ^ extract(z2, 16, **kwargs))


def test_extract_leftover_hash_statistics():
    rng = np.random.default_rng(2024)
    m, runs = 4096, 1000
    out_len = int(0.4 * m)
    z_all = (rng.random((runs, m)) < 0.1).astype(np.uint8)
    pooled_rate = block_entropy_rate(z_all)
    pooled = np.concatenate(
        [extract(z_all[i], out_len, seed=99, entropy_rate=pooled_rate) for i in range(runs)]
    )
    assert 0.48 <= pooled.mean() <= 0.52
    assert 8 * block_entropy_rate(pooled) >= 7.8


# ---- the separate pipeline -----------------------------------------------------


@pytest.fixture(scope="module")
def sep_construction():
    sets = sets_from_json((FIXTURES / "sep_sets_n1024.json").read_text())
    code = design_channel_code(bsc_noise(0.1), 1024, sets.size("info"), stream(20_241, "sep-code"))
    return sets, code


def test_pipeline_noiseless_link_is_all_fresh():
    report = separate_pipeline(
        0.4, 0.0, 256, 3, np.random.default_rng(6),
        thresholds=SetThresholds(delta=0.1, mc_samples=5000),
    )
    assert report.extracted_credited == 0
    assert report.fresh_m2 == report.m2_budget
    assert report.ledger_balanced
    assert report.blocks_delivered == 3
    assert report.inner_mismatch == 0.0
    assert report.per_letter_tv <= 0.15


def test_pipeline_reference_matches_golden(sep_construction):
    sets, code = sep_construction
    reports = [
        separate_pipeline(0.4, 0.1, 1024, 8, np.random.default_rng(3000 + i), sets=sets, code=code)
        for i in range(10)
    ]
    tv_mean = np.mean([r.per_letter_tv for r in reports])
    assert tv_mean == pytest.approx(GOLDEN["sep_pipeline_tv_mean"], abs=1e-9)
    assert tv_mean <= 0.05
    for r in reports:
        assert r.ledger_balanced
        assert r.m2_budget == 8 * sets.size("synth_uniform")
        assert r.rates.r_c == sets.size("info") / 1024
        # recovered channel noise funds most of the synthesis budget
        floor = 0.8 * 1024 * binary_entropy(0.1) * (1 - r.inner_mismatch)
        assert r.extracted_credited >= 8 * floor
        assert r.rho2_realized <= r.rates.rho_2
        assert r.rho2_ideal == pytest.approx(
            max(0.0, binary_entropy(r.p2) - binary_entropy(0.1)), abs=1e-12
        )


def test_pipeline_validations(sep_construction):
    sets, code = sep_construction
    rng = np.random.default_rng(9)
    with pytest.raises(ValueError, match="at least one block"):
        separate_pipeline(0.4, 0.1, 1024, 0, rng, sets=sets, code=code)
    with pytest.raises(FeasibilityError):
        separate_pipeline(0.2, 0.3, 1024, 2, rng, sets=sets, code=code)
    with pytest.raises(ValueError, match="identity-link"):
        joint_sets = sets_from_json((FIXTURES / "sets_n1024.json").read_text())
        separate_pipeline(0.4, 0.1, 1024, 2, rng, sets=joint_sets, code=code)
    with pytest.raises(ValueError, match="positions"):
        separate_pipeline(0.4, 0.1, 512, 2, rng, sets=sets, code=code)
    bad_code = design_channel_code(bsc_noise(0.1), 1024, 10, np.random.default_rng(0), mc_samples=500)
    with pytest.raises(ValueError, match="channel code"):
        separate_pipeline(0.4, 0.1, 1024, 2, rng, sets=sets, code=bad_code)


def test_format_sep_report_lines(sep_construction):
    sets, code = sep_construction
    report = separate_pipeline(
        0.4, 0.1, 1024, 2, np.random.default_rng(77), sets=sets, code=code
    )
    text = format_sep_report(report)
    assert "separate-scheme run" in text
    assert "balanced=True" in text
    assert "extracted" in text
    assert f"rate {report.inner_code_rate:.6f}" in text
