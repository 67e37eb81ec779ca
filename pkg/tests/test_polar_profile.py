import numpy as np
import pytest

from helpers import EXAMPLE_PARAMS
from polarcoord.channels import Dmc
from polarcoord.polar import (
    SetThresholds,
    estimate_entropy_profile,
    exact_entropy_profile,
)
from polarcoord.polar.profile import sample_design
from polarcoord.probkit import JointPmf, binary_entropy
from polarcoord.rate_region import CoordinationDesign, bsc_example_design


def example_design():
    return bsc_example_design(**EXAMPLE_PARAMS)


def skewed_design(c_weight=0.3):
    """A = C with a non-uniform common symbol; X = C through BSC(0.2)."""
    p_ac = np.diag([1 - c_weight, c_weight])
    p_x = np.zeros((2, 2, 2))
    p_x[:, 0] = [0.8, 0.2]
    p_x[:, 1] = [0.2, 0.8]
    chan = np.array([[0.9, 0.1], [0.1, 0.9]])
    p_y = np.full((2, 2, 2), 0.5)
    target = np.einsum("ac,acx,ab,bcy->xy", p_ac, p_x, chan, p_y)
    return CoordinationDesign(
        p_ac=JointPmf(("a", "c"), p_ac),
        p_x_given_ac=p_x,
        channel=Dmc(chan),
        p_y_given_bc=p_y,
        target_q_xy=JointPmf(("x", "y"), target),
    )


def test_degenerate_contexts_are_exact():
    th = SetThresholds(delta=0.1, mc_samples=1_000)
    rng = np.random.default_rng(0)
    prof = estimate_entropy_profile(
        example_design(), 8, th, rng, contexts=["c", "a", "c|a", "a|c", "a|cxy", "y|bc"]
    )
    assert np.array_equal(prof.entropies["c"], np.ones(8))
    assert np.array_equal(prof.entropies["a"], np.ones(8))
    for ctx in ("c|a", "a|c", "a|cxy", "y|bc"):
        assert np.array_equal(prof.entropies[ctx], np.zeros(8))
        assert np.array_equal(prof.std_errors[ctx], np.zeros(8))


def test_constant_common_symbol_polarizes_to_zero():
    design = skewed_design(c_weight=0.0)
    th = SetThresholds(delta=0.1, mc_samples=1_000)
    prof = estimate_entropy_profile(
        design, 8, th, np.random.default_rng(1), contexts=["c"]
    )
    assert np.array_equal(prof.entropies["c"], np.zeros(8))


def test_monte_carlo_matches_exact_enumeration():
    design = example_design()
    th = SetThresholds(delta=0.1, mc_samples=6_000)
    prof = estimate_entropy_profile(
        design, 8, th, np.random.default_rng(42), contexts=["c|x", "c|b"]
    )
    for ctx in ("c|x", "c|b"):
        exact = exact_entropy_profile(design, 8, ctx)
        err = np.abs(prof.entropies[ctx] - exact)
        bound = 4.0 * prof.std_errors[ctx] + 0.01
        assert np.all(err <= bound), f"{ctx}: {err} vs {bound}"


def test_chain_rule_preserves_total_entropy():
    design = skewed_design(c_weight=0.3)
    th = SetThresholds(delta=0.1, mc_samples=20_000)
    prof = estimate_entropy_profile(
        design, 64, th, np.random.default_rng(3), contexts=["c"]
    )
    assert prof.entropies["c"].mean() == pytest.approx(
        binary_entropy(0.3), abs=0.01
    )


def test_conditional_chain_rule_example():
    design = example_design()
    th = SetThresholds(delta=0.1, mc_samples=30_000)
    prof = estimate_entropy_profile(
        design, 256, th, np.random.default_rng(4), contexts=["c|x"]
    )
    assert prof.entropies["c|x"].mean() == pytest.approx(
        binary_entropy(0.375), abs=0.03
    )


def test_small_sample_resolution_warns():
    th = SetThresholds(delta=0.01, mc_samples=1_000)
    with pytest.warns(RuntimeWarning, match="standard error"):
        estimate_entropy_profile(
            example_design(), 8, th, np.random.default_rng(5), contexts=["c|x"]
        )


def test_enumeration_guards():
    design = example_design()
    with pytest.raises(ValueError, match="too large"):
        exact_entropy_profile(design, 8, "c|bxy")
    with pytest.raises(ValueError, match="power of two"):
        exact_entropy_profile(design, 6, "c|x")
    with pytest.raises(ValueError, match="power of two"):
        estimate_entropy_profile(
            design, 6, SetThresholds(), np.random.default_rng(0)
        )
    with pytest.raises(ValueError, match="unknown context"):
        estimate_entropy_profile(
            design, 8, SetThresholds(), np.random.default_rng(0), contexts=["q|z"]
        )


def test_sample_design_statistics():
    rng = np.random.default_rng(8)
    drawn = sample_design(example_design(), 200, 500, rng)
    assert drawn["x"].mean() == pytest.approx(0.5, abs=0.01)
    assert np.mean(drawn["x"] != drawn["y"]) == pytest.approx(0.4, abs=0.01)
    # A = C in the example, and Y = C exactly when B = C
    assert np.array_equal(drawn["a"], drawn["c"])
    match = drawn["b"] == drawn["c"]
    assert np.array_equal(drawn["y"][match], drawn["c"][match])


def test_thresholds_validation():
    with pytest.raises(ValueError):
        SetThresholds(delta=0.0)
    with pytest.raises(ValueError):
        SetThresholds(delta=0.5)
    with pytest.raises(ValueError):
        SetThresholds(mc_samples=999)
