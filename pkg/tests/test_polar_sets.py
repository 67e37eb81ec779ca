import numpy as np
import pytest

from polarcoord.polar import (
    DecodabilityError,
    EntropyProfile,
    SetThresholds,
    derive_sets,
    sets_from_json,
    sets_to_json,
    validate_alignment,
)
from polarcoord.polar.profile import CONTEXTS

N = 16


def synthetic_profile(corrupt_emitter=False, noiseless=False):
    """Hand-built 16-position profile exercising every derived set.

    Index plan: 0,1,11 fresh; 2,3 reused; 4 hidden-reused; 5 hidden-fresh;
    6,7,8,12 carry; 9,10 direct info; 13-15 unpolarized leftovers; action
    layer puts 0 shared / 1 local / 2 input-driven; synthesis is uniform
    at 14,15.
    """
    ent = {ctx: np.full(N, 0.05) for ctx in CONTEXTS}
    ent["c"] = np.ones(N)
    ent["c"][13] = 0.05
    ent["c"][14] = ent["c"][15] = 0.5

    cx = np.full(N, 0.05)
    cx[[0, 1, 11, 2, 3, 4, 5]] = 0.95
    cx[[6, 7, 8, 12]] = 0.3
    cx[13] = 0.02
    ent["c|x"] = cx

    cxy = np.full(N, 0.05)
    cxy[[2, 3]] = 0.95
    cxy[4] = 0.55
    cxy[13] = 0.02
    ent["c|xy"] = cxy

    cb = np.full(N, 0.05)
    cb[[4, 5, 6, 7, 8, 12]] = 0.95
    cb[13] = 0.02
    ent["c|b"] = cb

    cbx = np.full(N, 0.05)
    cbx[4] = 0.6
    cbx[13] = 0.02
    ent["c|bx"] = cbx

    cbxy = np.full(N, 0.05)
    cbxy[4] = 0.5
    cbxy[13] = 0.02
    ent["c|bxy"] = cbxy

    ca = np.full(N, 0.05)
    ca[13] = 0.02
    if corrupt_emitter:
        ca[9] = 0.95
    ent["c|a"] = ca

    ent["a"] = np.ones(N)
    ent["a"][15] = 0.5
    ac = np.full(N, 0.05)
    ac[[0, 1, 2]] = 0.95
    ent["a|c"] = ac
    acx = np.full(N, 0.05)
    acx[[0, 1]] = 0.95
    ent["a|cx"] = acx
    acxy = np.full(N, 0.05)
    acxy[0] = 0.95
    ent["a|cxy"] = acxy

    ybc = np.full(N, 0.05)
    ybc[[14, 15]] = 0.95
    ent["y|bc"] = ybc

    if noiseless:
        for ctx in ("c|b", "c|bx", "c|bxy"):
            ent[ctx] = np.full(N, 0.02)

    return EntropyProfile(
        n_positions=N,
        mc_samples=1_000,
        entropies=ent,
        std_errors={ctx: np.zeros(N) for ctx in CONTEXTS},
    )


def indices(mask):
    return np.flatnonzero(mask).tolist()


def test_synthetic_set_algebra():
    sets = derive_sets(synthetic_profile(), SetThresholds(delta=0.1))
    assert indices(sets.fresh_rand) == [0, 1, 11]
    assert indices(sets.reused_rand) == [2, 3]
    assert indices(sets.hidden_reused) == [4]
    assert indices(sets.hidden_fresh) == [5]
    assert indices(sets.carry) == [6, 7, 8, 12]
    assert indices(sets.info) == [9, 10]
    assert indices(sets.act_shared) == [0]
    assert indices(sets.act_local) == [1]
    assert indices(sets.act_from_input) == [2]
    assert indices(sets.act_from_common) == list(range(3, 15))
    assert indices(sets.synth_uniform) == [14, 15]
    assert indices(sets.recoverable_enc) == list(range(13))
    assert indices(sets.recoverable_dec) == [0, 1, 2, 3, 9, 10, 11]
    # largest-remainder split of 4 carried bits across |F|=3 vs 2
    assert indices(sets.carry_to_fresh) == [6, 7]
    assert indices(sets.carry_to_reused) == [8, 12]
    assert indices(sets.slot_fresh) == [0, 1]
    assert indices(sets.slot_reused) == [2, 3]
    assert sets.size("carry_to_fresh") == sets.size("slot_fresh")
    assert sets.size("carry_to_reused") == sets.size("slot_reused")


def test_noiseless_channel_clears_carry_and_hidden():
    sets = derive_sets(synthetic_profile(noiseless=True), SetThresholds(delta=0.1))
    assert not sets.carry.any()
    assert not sets.hidden_fresh.any() and not sets.hidden_reused.any()
    assert not sets.slot_fresh.any() and not sets.slot_reused.any()


def _polarized(rng, n, p_high):
    """Random bimodal entropy array mimicking a polarized profile."""
    high = rng.random(n) < p_high
    return np.where(high, 1.0 - 0.05 * rng.random(n), 0.05 * rng.random(n))


def test_partition_and_disjointness_random_profiles():
    rng = np.random.default_rng(23)
    p_high = {
        "c": 0.85,
        "c|x": 0.55,
        "c|xy": 0.35,
        "c|b": 0.18,
        "c|a": 0.10,
        "c|bx": 0.12,
        "c|bxy": 0.08,
        "a": 0.8,
        "a|c": 0.5,
        "a|cx": 0.3,
        "a|cxy": 0.2,
        "y|bc": 0.3,
    }
    succeeded = 0
    for _ in range(40):
        ent = {ctx: _polarized(rng, 32, p_high[ctx]) for ctx in CONTEXTS}
        prof = EntropyProfile(
            n_positions=32,
            mc_samples=1_000,
            entropies=ent,
            std_errors={ctx: np.zeros(32) for ctx in CONTEXTS},
        )
        try:
            sets = derive_sets(prof, SetThresholds(delta=0.1))
        except DecodabilityError:
            continue
        succeeded += 1
        pieces = [
            sets.fresh_rand,
            sets.reused_rand,
            sets.hidden_fresh | sets.hidden_reused,
            sets.carry,
            sets.info,
            ~sets.near_uniform["c"] & ~sets.still_noisy["c|b"],
        ]
        total = np.zeros(32, dtype=int)
        for piece in pieces:
            total += piece
        assert np.all(total == 1)
        assert not (sets.fresh_rand & sets.reused_rand).any()
        assert not (sets.carry & (sets.hidden_fresh | sets.hidden_reused)).any()
        assert (sets.slot_fresh & sets.fresh_rand).sum() == sets.slot_fresh.sum()
        assert (sets.slot_reused & sets.reused_rand).sum() == sets.slot_reused.sum()
        assert sets.size("slot_fresh") == sets.size("carry_to_fresh")
        assert sets.size("slot_reused") == sets.size("carry_to_reused")
        assert sets.size("carry_to_fresh") + sets.size("carry_to_reused") == sets.size("carry")
        # enforced nesting
        assert not (sets.near_uniform["c|xy"] & ~sets.near_uniform["c|x"]).any()
        assert not (sets.near_uniform["c|x"] & ~sets.near_uniform["c"]).any()
        assert not (sets.still_noisy["c|bxy"] & ~sets.still_noisy["c|bx"]).any()
    assert succeeded >= 10


def test_decodability_violation_raises():
    ent = {ctx: np.full(8, 0.05) for ctx in CONTEXTS}
    ent["c"] = np.ones(8)
    ent["c|b"] = np.full(8, 0.95)  # nothing decodable
    prof = EntropyProfile(
        n_positions=8,
        mc_samples=1_000,
        entropies=ent,
        std_errors={ctx: np.zeros(8) for ctx in CONTEXTS},
    )
    with pytest.raises(DecodabilityError, match="chaining is infeasible"):
        derive_sets(prof, SetThresholds(delta=0.1))


def test_alignment_clean_profile_passes():
    sets = derive_sets(synthetic_profile(), SetThresholds(delta=0.1))
    report = validate_alignment(sets)
    assert report.passed
    assert len(report.checks_run) > 2


def test_alignment_reports_corruption():
    sets = derive_sets(synthetic_profile(corrupt_emitter=True), SetThresholds(delta=0.1))
    report = validate_alignment(sets)
    assert not report.passed
    names = {v.check for v in report.violations}
    assert "emitter-noise within receiver-noise" in names
    assert "decoder-recoverable within encoder-recoverable" in names
    assert {v.index for v in report.violations} == {9}
    assert all(v.gap > v.tolerance for v in report.violations)


def test_alignment_flags_monotonicity_breaks():
    prof = synthetic_profile()
    ent = {k: v.copy() for k, v in prof.entropies.items()}
    ent["c|xy"][9] = 0.7  # exceeds the 0.05 of c|x at index 9
    broken = EntropyProfile(
        n_positions=N,
        mc_samples=1_000,
        entropies=ent,
        std_errors=prof.std_errors,
    )
    report = validate_alignment(derive_sets(broken, SetThresholds(delta=0.1)))
    assert any(
        v.check == "conditioning monotonicity c|x -> c|xy" and v.index == 9
        for v in report.violations
    )


def test_json_roundtrip():
    sets = derive_sets(synthetic_profile(), SetThresholds(delta=0.1))
    doc = sets_to_json(sets)
    back = sets_from_json(doc)
    assert back.n_positions == sets.n_positions
    assert back.delta == sets.delta
    assert back.mc_samples == sets.mc_samples
    for name in ("fresh_rand", "carry", "slot_reused", "synth_uniform"):
        assert np.array_equal(getattr(back, name), getattr(sets, name))
    for ctx in CONTEXTS:
        assert np.allclose(back.entropies[ctx], sets.entropies[ctx])
    assert validate_alignment(back).passed


def test_json_schema_version_guard():
    sets = derive_sets(synthetic_profile(), SetThresholds(delta=0.1))
    doc = sets_to_json(sets).replace('"schema_version": 1', '"schema_version": 9')
    with pytest.raises(ValueError, match="schema version"):
        sets_from_json(doc)


def test_incomplete_profile_rejected():
    prof = synthetic_profile()
    ent = dict(prof.entropies)
    del ent["c|bx"]
    partial = EntropyProfile(
        n_positions=N, mc_samples=1_000, entropies=ent, std_errors=prof.std_errors
    )
    with pytest.raises(ValueError, match="incomplete"):
        derive_sets(partial, SetThresholds(delta=0.1))
