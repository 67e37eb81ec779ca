import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polarcoord.channels import Dmc, bsc
from polarcoord.probkit import Pmf, binary_entropy
from polarcoord.rate_region import (
    AuxChain,
    FeasibilityError,
    RateTuple,
    bsc_example_design,
    check_joint_region,
    check_separate_region,
    crossover_po,
    info_quantities,
    optimize_joint_sum_rate,
    separate_sum_rate,
    special_case_deterministic_channel,
    special_case_function_of_x,
    sweep_curves,
)

EXAMPLE = dict(p1=0.375, alpha=0.0, beta=1.0, p_o=0.1)


def binary_chain(p1, p2):
    return AuxChain(Pmf([0.5, 0.5]), np.asarray(bsc(p1).rows), np.asarray(bsc(p2).rows))


def test_example_design_induces_bsc_target():
    d = bsc_example_design(**EXAMPLE)
    xy = d.target_q_xy.probs
    assert xy[0, 1] == pytest.approx(0.2, abs=1e-12)  # flip 0.4, X uniform
    # alpha = beta makes p2 independent of the channel
    d2 = bsc_example_design(p1=0.1, alpha=0.3, beta=0.3, p_o=0.25)
    assert d2.target_q_xy.probs[0, 1] == pytest.approx(
        (0.1 + 0.3 - 2 * 0.1 * 0.3) / 2, abs=1e-12
    )
    # p1 = 0 pins X = C
    d3 = bsc_example_design(p1=0.0, alpha=0.2, beta=0.2, p_o=0.1)
    assert np.asarray(d3.p_x_given_ac)[0, 1] == pytest.approx([0.0, 1.0])


def test_info_quantities_match_oracle(golden):
    q = info_quantities(bsc_example_design(**EXAMPLE))
    t = golden["example_rate_targets"]
    assert q.i_x_c == pytest.approx(t["r_c"], abs=1e-9)
    assert q.h_y_given_bc == pytest.approx(t["rho_2"], abs=1e-9)
    assert q.i_b_c == pytest.approx(golden["sep_rc_p_o_0.1"], abs=1e-9)
    # A = C collapses the pair quantities
    assert q.i_xy_ac == pytest.approx(q.i_xy_c, abs=1e-12)
    assert q.i_x_ac == pytest.approx(q.i_x_c, abs=1e-12)


def test_joint_region_verdicts():
    d = bsc_example_design(**EXAMPLE)
    q = info_quantities(d)
    zero = RateTuple(0, 0, 0, 0, 0)
    assert not check_joint_region(q, zero).feasible

    eps = 1e-3
    r_c = q.i_x_c + eps
    rates = RateTuple(
        r_o=q.i_xy_c - q.i_x_c + eps,
        r_c=r_c,
        r_a=eps,
        rho_1=r_c + eps + eps - q.i_x_ac + eps,
        rho_2=q.h_y_given_bc + eps,
    )
    verdict = check_joint_region(q, rates)
    assert verdict.feasible, verdict.slacks
    # strictness: sitting exactly on a bound is infeasible
    boundary = RateTuple(rates.r_o, q.i_x_c, rates.r_a, rates.rho_1, rates.rho_2)
    assert not check_joint_region(q, boundary).feasible


@given(
    st.floats(0, 1), st.floats(0, 1), st.floats(0, 1),
    st.floats(0, 0.5), st.floats(0, 0.5),
)
def test_joint_region_monotone_in_randomness(r_o, r_a, rho_1, inc_o, inc_rho):
    q = info_quantities(bsc_example_design(**EXAMPLE))
    base = RateTuple(r_o, 0.3, r_a, rho_1, 0.1)
    more = RateTuple(r_o + inc_o, 0.3, r_a, rho_1 + inc_rho, 0.1 + inc_rho)
    if check_joint_region(q, base).feasible:
        assert check_joint_region(q, more).feasible


def test_separate_region_check():
    chain = binary_chain(0.2, 0.25)
    j = chain.joint()
    ch = bsc(0.1)
    r = RateTuple(r_o=1.0, r_c=0.5, r_a=0.0, rho_1=0.3, rho_2=1.0)
    verdict = check_separate_region(chain, ch, noise_entropy=binary_entropy(0.1), r=r)
    assert verdict.feasible, verdict.slacks
    assert verdict.slacks["channel_floor"] == pytest.approx(
        0.5 - (1 - binary_entropy(0.2)), abs=1e-9
    )
    # capacity bound is strict
    at_cap = RateTuple(1.0, 1 - binary_entropy(0.1), 0.0, 1.0, 1.0)
    assert not check_separate_region(chain, ch, 0.0, at_cap).feasible


def test_function_of_x_special_case():
    v = special_case_function_of_x(0.4, bsc(0.1))
    assert v.feasible
    assert v.slacks["capacity_margin"] == pytest.approx(0.131004, abs=1e-6)
    assert special_case_function_of_x(0.0, bsc(0.4)).feasible
    # boundary: H(Y) = 1 over a perfect bit pipe is *not* strictly inside
    assert not special_case_function_of_x(1.0, bsc(0.0)).feasible


def test_deterministic_channel_special_case():
    chain = binary_chain(0.2, 0.3)
    identity = Dmc(np.eye(2))
    r = RateTuple(r_o=2.0, r_c=0.9, r_a=0.0, rho_1=0.7, rho_2=1.0)
    v = special_case_deterministic_channel(chain, identity, r)
    assert v.slacks["capacity_ceiling"] == pytest.approx(1.0 - 0.9, abs=1e-12)
    assert v.slacks["channel_floor"] == pytest.approx(
        0.9 - (1 - binary_entropy(0.2)), abs=1e-9
    )
    assert v.feasible
    constant = Dmc(np.array([[1.0, 0.0], [1.0, 0.0]]))
    assert not special_case_deterministic_channel(chain, constant, r).feasible
    with pytest.raises(ValueError):
        special_case_deterministic_channel(chain, bsc(0.1), r)


def test_optimizer_matches_grid_oracle(golden):
    for key in ("0.00", "0.10", "0.35"):
        opt = optimize_joint_sum_rate(0.4, float(key), grid_step=1e-3)
        ref = golden["joint_grid"][key]
        assert opt.min_sum == pytest.approx(ref["min_sum"], abs=1e-9)
        assert opt.r_c == pytest.approx(ref["r_c"], abs=1e-9)
        assert (opt.alpha, opt.beta) == (ref["alpha"], ref["beta"])


def test_optimizer_empty_feasible_set_distinct():
    with pytest.raises(FeasibilityError):
        optimize_joint_sum_rate(0.4, 0.45, grid_step=1e-2)


def test_separate_sum_rate_values(golden):
    assert separate_sum_rate(0.4, 0.2) == pytest.approx(
        golden["separate_ext"]["0.20"], abs=1e-12
    )
    assert separate_sum_rate(0.4, 0.0) == pytest.approx(binary_entropy(0.4), abs=1e-12)
    with pytest.raises(FeasibilityError):
        separate_sum_rate(0.4, 0.41)
    with pytest.raises(FeasibilityError):
        separate_sum_rate(0.4, 0.5)


def test_crossover_closed_form(golden):
    assert crossover_po(0.0) == 0.0
    assert crossover_po(0.5) == pytest.approx(0.5, abs=1e-15)
    assert crossover_po(0.4) == pytest.approx(golden["crossover_p4"], abs=1e-12)


def test_sweep_curves_structure():
    grid = np.arange(0.0, 0.5, 0.05)
    rows = sweep_curves(0.4, grid, grid_step=1e-2)
    assert [r.p_o for r in rows] == pytest.approx(list(grid))
    threshold = crossover_po(0.4)
    for row in rows:
        assert row.crossover_flag == int(row.p_o > threshold)
        assert row.sep_rc == pytest.approx(1 - binary_entropy(row.p_o), abs=1e-12)
        if not math.isnan(row.sep_ext_sum):
            assert row.sep_noext_sum >= row.sep_ext_sum - 1e-12
        if row.p_o <= threshold:
            assert row.joint_rc <= row.sep_rc + 1e-9
    # infeasible tail keeps the schema, with nan values
    assert math.isnan(rows[-1].joint_sum) and math.isnan(rows[-1].sep_ext_sum)
    # sep_rc monotone nonincreasing
    rcs = [r.sep_rc for r in rows]
    assert all(a >= b - 1e-12 for a, b in zip(rcs, rcs[1:]))
