"""Index-set algebra over an entropy profile.

Positions of the polarized common layer are classified by two thresholded
families: *near-uniform* sets (entropy above 1 - delta given the context)
and *still-noisy* sets (entropy above delta).  Boolean combinations of
these produce the operating sets of the codec:

==================  =====================================================
``fresh_rand``      near-uniform given the input but resolved once the
                    output pair is known, and decodable from the channel:
                    filled with per-block fresh shared randomness
``reused_rand``     near-uniform even given both actions, decodable:
                    filled with shared randomness reused across blocks
``hidden_fresh``    not decodable from the channel but resolved by the
                    full action pair: fresh randomness, never recovered
``hidden_reused``   not decodable and still noisy given everything:
                    reused randomness, never recovered
``carry``           message bits the channel cannot deliver in-place;
                    chained into the next block's slots
``info``            message bits the channel delivers directly
``slot_fresh``      lowest-index members of ``fresh_rand`` that host the
``slot_reused``     previous block's carry (one-time-padded); ditto for
                    ``reused_rand``
``carry_to_fresh``  the split of ``carry`` routed to each slot family,
``carry_to_reused`` sized proportionally with largest-remainder rounding
==================  =====================================================

The action layer splits analogously into ``act_local`` (encoder-private),
``act_shared`` (common randomness), ``act_from_input`` and
``act_from_common`` (sequential draws), and the synthesis layer
contributes ``synth_uniform`` (receiver-local uniform bits).

Nesting of the thresholded families is enforced by intersection before any
derived set is formed, so the partition identities hold exactly even on a
noisy profile; :func:`validate_alignment` reports where the raw estimates
violated the nesting or degradedness expectations and by how much.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from polarcoord.polar.profile import CONTEXTS, EntropyProfile

_SCHEMA_VERSION = 1

_VERY_HIGH_CONTEXTS = ("c", "c|x", "c|xy", "a", "a|c", "a|cx", "a|cxy", "y|bc")
_STILL_NOISY_CONTEXTS = ("c|b", "c|a", "c|bx", "c|bxy")

_MASK_FIELDS = (
    "fresh_rand",
    "reused_rand",
    "carry",
    "hidden_fresh",
    "hidden_reused",
    "info",
    "act_local",
    "act_shared",
    "act_from_input",
    "act_from_common",
    "recoverable_enc",
    "recoverable_dec",
    "carry_to_fresh",
    "carry_to_reused",
    "slot_fresh",
    "slot_reused",
    "synth_uniform",
)


class DecodabilityError(RuntimeError):
    """The carry set outgrew the slots that must host it (infeasible block)."""


@dataclass(frozen=True)
class SetThresholds:
    """Entropy threshold (bits) and Monte Carlo sample count."""

    delta: float = 0.1
    mc_samples: int = 100_000

    def __post_init__(self):
        if not 0.0 < self.delta < 0.5:
            raise ValueError(f"delta must be in (0, 0.5), got {self.delta}")
        if self.mc_samples < 1_000:
            raise ValueError(f"mc_samples must be >= 1000, got {self.mc_samples}")


@dataclass(frozen=True)
class PolarSets:
    """Derived index sets plus the profile they came from.

    Boolean masks are length ``n_positions``.  ``near_uniform`` holds the
    thresholded high-entropy masks per context, ``still_noisy`` the
    above-delta masks for the receiver/emitter contexts; both are
    nesting-enforced.  The profile's entropies and standard errors ride
    along so alignment checks and serialization are self-contained.
    """

    n_positions: int
    delta: float
    mc_samples: int
    entropies: Mapping[str, np.ndarray] = field(repr=False)
    std_errors: Mapping[str, np.ndarray] = field(repr=False)
    near_uniform: Mapping[str, np.ndarray] = field(repr=False)
    still_noisy: Mapping[str, np.ndarray] = field(repr=False)
    fresh_rand: np.ndarray = field(repr=False)
    reused_rand: np.ndarray = field(repr=False)
    carry: np.ndarray = field(repr=False)
    hidden_fresh: np.ndarray = field(repr=False)
    hidden_reused: np.ndarray = field(repr=False)
    info: np.ndarray = field(repr=False)
    act_local: np.ndarray = field(repr=False)
    act_shared: np.ndarray = field(repr=False)
    act_from_input: np.ndarray = field(repr=False)
    act_from_common: np.ndarray = field(repr=False)
    recoverable_enc: np.ndarray = field(repr=False)
    recoverable_dec: np.ndarray = field(repr=False)
    carry_to_fresh: np.ndarray = field(repr=False)
    carry_to_reused: np.ndarray = field(repr=False)
    slot_fresh: np.ndarray = field(repr=False)
    slot_reused: np.ndarray = field(repr=False)
    synth_uniform: np.ndarray = field(repr=False)

    def size(self, name):
        """Cardinality of one derived set."""
        return int(np.count_nonzero(getattr(self, name)))


def _largest_remainder_split(total, weight_a, weight_b):
    """Split ``total`` proportionally to the weights, remainders largest-first."""
    denom = weight_a + weight_b
    if total == 0:
        return 0, 0
    share_a = total * weight_a // denom
    share_b = total * weight_b // denom
    leftover = total - share_a - share_b
    if leftover:
        if total * weight_a % denom >= total * weight_b % denom:
            share_a += leftover
        else:
            share_b += leftover
    return int(share_a), int(share_b)


def _lowest_members(mask, count):
    out = np.zeros_like(mask)
    out[np.flatnonzero(mask)[:count]] = True
    return out


def derive_sets(profile: EntropyProfile, thresholds: SetThresholds) -> PolarSets:
    """Threshold a profile and compute every derived index set.

    Deterministic given the profile: no randomness is involved.  Raises
    :class:`DecodabilityError` when the carry cannot fit into the slots,
    i.e. the chaining construction is infeasible at this blocklength.
    """
    n = profile.n_positions
    ent = profile.entropies
    missing = [ctx for ctx in CONTEXTS if ctx not in ent]
    if missing:
        raise ValueError(f"profile incomplete: missing contexts {missing}")

    high = {ctx: ent[ctx] > 1.0 - thresholds.delta for ctx in _VERY_HIGH_CONTEXTS}
    noisy = {ctx: ent[ctx] > thresholds.delta for ctx in _STILL_NOISY_CONTEXTS}

    # enforce nesting by intersection: more side information keeps a set
    # inside its parent
    high["c|x"] &= high["c"]
    high["c|xy"] &= high["c|x"]
    high["a|c"] &= high["a"]
    high["a|cx"] &= high["a|c"]
    high["a|cxy"] &= high["a|cx"]
    noisy["c|bx"] &= noisy["c|b"]
    noisy["c|bxy"] &= noisy["c|bx"]

    v_c, v_cx, v_cxy = high["c"], high["c|x"], high["c|xy"]
    h_cb, h_ca = noisy["c|b"], noisy["c|a"]

    fresh_rand = (v_cx & ~v_cxy) & ~h_cb
    reused_rand = v_cxy & ~h_cb
    hidden = v_cx & h_cb
    hidden_reused = hidden & noisy["c|bxy"]
    hidden_fresh = hidden & ~noisy["c|bxy"]
    carry = ~v_cx & h_cb
    info = (v_c & ~v_cx) & ~h_cb

    pieces = [fresh_rand, reused_rand, hidden, carry, info, ~v_c & ~h_cb]
    cover = np.zeros(n, dtype=int)
    for mask in pieces:
        cover += mask
    if not np.all(cover == 1):
        raise AssertionError("common-layer pieces failed to partition the block")

    act_local = high["a|cx"] & ~high["a|cxy"]
    act_shared = high["a|cxy"]
    act_from_input = high["a|c"] & ~high["a|cx"]
    act_from_common = high["a"] & ~high["a|c"]

    recoverable_enc = v_c & ~h_ca
    recoverable_dec = v_c & ~h_cb

    n_fresh = int(np.count_nonzero(fresh_rand))
    n_reused = int(np.count_nonzero(reused_rand))
    n_carry = int(np.count_nonzero(carry))
    if n_carry > n_fresh + n_reused:
        raise DecodabilityError(
            f"carry of {n_carry} bits exceeds the {n_fresh + n_reused} "
            f"slot-capable positions; chaining is infeasible at N={n}"
        )
    to_fresh, to_reused = _largest_remainder_split(n_carry, n_fresh, n_reused)
    carry_to_fresh = _lowest_members(carry, to_fresh)
    carry_to_reused = carry & ~carry_to_fresh
    slot_fresh = _lowest_members(fresh_rand, to_fresh)
    slot_reused = _lowest_members(reused_rand, to_reused)

    return PolarSets(
        n_positions=n,
        delta=thresholds.delta,
        mc_samples=profile.mc_samples,
        entropies=dict(profile.entropies),
        std_errors=dict(profile.std_errors),
        near_uniform=high,
        still_noisy=noisy,
        fresh_rand=fresh_rand,
        reused_rand=reused_rand,
        carry=carry,
        hidden_fresh=hidden_fresh,
        hidden_reused=hidden_reused,
        info=info,
        act_local=act_local,
        act_shared=act_shared,
        act_from_input=act_from_input,
        act_from_common=act_from_common,
        recoverable_enc=recoverable_enc,
        recoverable_dec=recoverable_dec,
        carry_to_fresh=carry_to_fresh,
        carry_to_reused=carry_to_reused,
        slot_fresh=slot_fresh,
        slot_reused=slot_reused,
        synth_uniform=high["y|bc"].copy(),
    )


@dataclass(frozen=True)
class AlignmentViolation:
    check: str
    index: int
    gap: float
    tolerance: float


@dataclass(frozen=True)
class AlignmentReport:
    """Outcome of the alignment checks; empty violations means aligned."""

    checks_run: tuple[str, ...]
    violations: tuple[AlignmentViolation, ...]

    @property
    def passed(self):
        return not self.violations


def validate_alignment(sets: PolarSets, gap_threshold_se: float = 3.0):
    """Check degradedness and conditioning-monotonicity expectations.

    A raw-profile discrepancy only counts as a violation when its entropy
    gap exceeds ``gap_threshold_se`` combined standard errors, so a report
    on a Monte Carlo profile is expected to come back clean.  Violations
    are returned, never raised: the caller decides what is fatal.
    """
    ent, se = sets.entropies, sets.std_errors
    delta = sets.delta
    violations = []
    checks = []

    checks.append("emitter-noise within receiver-noise")
    bad = np.flatnonzero(sets.still_noisy["c|a"] & ~sets.still_noisy["c|b"])
    for j in bad:
        gap = min(ent["c|a"][j] - delta, delta - ent["c|b"][j])
        tol = gap_threshold_se * max(se["c|a"][j], se["c|b"][j])
        if gap > tol:
            violations.append(
                AlignmentViolation("emitter-noise within receiver-noise", int(j), float(gap), float(tol))
            )

    checks.append("decoder-recoverable within encoder-recoverable")
    bad = np.flatnonzero(sets.recoverable_dec & ~sets.recoverable_enc)
    for j in bad:
        gap = min(ent["c|a"][j] - delta, delta - ent["c|b"][j])
        tol = gap_threshold_se * max(se["c|a"][j], se["c|b"][j])
        if gap > tol:
            violations.append(
                AlignmentViolation(
                    "decoder-recoverable within encoder-recoverable", int(j), float(gap), float(tol)
                )
            )

    pairs = [
        (base, cond)
        for base, (base_layer, base_obs) in CONTEXTS.items()
        for cond, (cond_layer, cond_obs) in CONTEXTS.items()
        if base != cond
        and base_layer == cond_layer
        and base_layer != "synth"
        and set(base_obs) < set(cond_obs)
    ]
    for base, cond in pairs:
        name = f"conditioning monotonicity {base} -> {cond}"
        checks.append(name)
        rise = ent[cond] - ent[base]
        tol = gap_threshold_se * (se[cond] + se[base])
        for j in np.flatnonzero(rise > np.maximum(tol, 1e-12)):
            violations.append(
                AlignmentViolation(name, int(j), float(rise[j]), float(tol[j]))
            )

    return AlignmentReport(checks_run=tuple(checks), violations=tuple(violations))


def sets_to_json(sets: PolarSets) -> str:
    """Serialize a PolarSets to a JSON document (schema-versioned)."""
    doc = {
        "schema_version": _SCHEMA_VERSION,
        "n_positions": sets.n_positions,
        "delta": sets.delta,
        "mc_samples": sets.mc_samples,
        "entropies": {k: np.asarray(v).tolist() for k, v in sets.entropies.items()},
        "std_errors": {k: np.asarray(v).tolist() for k, v in sets.std_errors.items()},
        "near_uniform": {
            k: np.asarray(v).astype(int).tolist() for k, v in sets.near_uniform.items()
        },
        "still_noisy": {
            k: np.asarray(v).astype(int).tolist() for k, v in sets.still_noisy.items()
        },
        "sets": {
            name: np.asarray(getattr(sets, name)).astype(int).tolist()
            for name in _MASK_FIELDS
        },
    }
    return json.dumps(doc, sort_keys=True)


def sets_from_json(document: str) -> PolarSets:
    """Rebuild a PolarSets from :func:`sets_to_json` output."""
    doc = json.loads(document)
    version = doc.get("schema_version")
    if version != _SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {version}")
    masks = {
        name: np.asarray(values, dtype=bool)
        for name, values in doc["sets"].items()
    }
    unknown = set(masks) - set(_MASK_FIELDS)
    if unknown:
        raise ValueError(f"unknown set names {sorted(unknown)}")
    return PolarSets(
        n_positions=int(doc["n_positions"]),
        delta=float(doc["delta"]),
        mc_samples=int(doc["mc_samples"]),
        entropies={k: np.asarray(v) for k, v in doc["entropies"].items()},
        std_errors={k: np.asarray(v) for k, v in doc["std_errors"].items()},
        near_uniform={k: np.asarray(v, dtype=bool) for k, v in doc["near_uniform"].items()},
        still_noisy={k: np.asarray(v, dtype=bool) for k, v in doc["still_noisy"].items()},
        **masks,
    )
