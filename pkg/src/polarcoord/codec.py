"""Block-chained polar codec for coordination over a noisy link.

The encoder at the first node turns k action blocks into k channel-input
blocks.  Each block's common layer is assembled from three sources: shared
randomness (fresh per block, plus a word reused across all blocks), the
previous block's undeliverable message bits (one-time-padded into the
lowest-index near-uniform positions — the chaining), and successive-
cancellation draws for the positions that actually carry information about
the local actions.  The action layer is then drawn conditionally on the
realized common layer, and the last block's undelivered bits are flushed
through a repetition-coded cleanup transmission.

The decoder works block k down to block 1: shared randomness and the
recovered carry pre-fill most positions, the rest are estimated from the
channel output by MAP over the SC conditional, and the chain hands each
block's carry to its predecessor by stripping the one-time pads.  Output
actions are then synthesized through the receiver-side polarized layer,
consuming local uniform bits only at the positions that need them.

Two finite-blocklength conventions matter and are deliberate:

* positions whose conditional is near-deterministic given only the past
  are set by MAP (argmax), identically at both nodes, instead of being
  randomly drawn — random draws would desynchronize the nodes;
* the decoder's SC recursion conditions on the padded values it estimated
  (what was physically transmitted), not on the pad randomness; the
  alternative reading exists but is not used here.

Every random bit is budgeted by :class:`RandomnessLedger`, which exposes
an exact audit, and the encoder's private SC-draw randomness is counted
separately (one bit per nondegenerate draw) so it never pollutes the
shared-randomness accounting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from polarcoord.channels import Dmc
from polarcoord.polar.engines import ScSequencer, layer_weights
from polarcoord.polar.profile import _categorical
from polarcoord.polar.sets import PolarSets
from polarcoord.polar.transform import polar_transform
from polarcoord.rate_region import CoordinationDesign, RateTuple
from polarcoord.rng import random_bits, stream

__all__ = [
    "RandomnessLedger",
    "LedgerPublicPart",
    "ChainState",
    "CodecOutput",
    "DecodeResult",
    "ChainRunStats",
    "encode_chain",
    "decode_chain",
    "realized_rates",
    "repetition_factor",
    "cleanup_transmit",
    "run_chain",
    "format_run_report",
]

_NEAR_CERTAIN = 1.0 - 1e-9


# ---- index bookkeeping -------------------------------------------------------


@dataclass(frozen=True)
class _Layout:
    """Index arrays shared by the encoder and the decoder (all sorted)."""

    size: int
    fill_fresh: np.ndarray  # indices taking the leading bits of each fresh word
    fill_reused: np.ndarray  # indices taking the leading bits of the reused word
    slot_fresh: np.ndarray  # chaining slots inside the fresh-random set
    slot_reused: np.ndarray  # chaining slots inside the reused-random set
    carry: np.ndarray  # undeliverable positions; lowest go to fresh slots
    enc_known: np.ndarray  # bool: encoder fills from randomness (slots included)
    dec_known: np.ndarray  # bool: decoder fills from randomness (slots excluded)
    draw_with_x: np.ndarray  # bool: encoder draws given the action block
    estimate_with_b: np.ndarray  # bool: decoder estimates from the channel block
    past_only: np.ndarray  # bool: near-deterministic given the past alone
    act_local: np.ndarray
    act_shared: np.ndarray
    act_from_input: np.ndarray  # bool
    act_from_common: np.ndarray  # bool
    act_past_only: np.ndarray  # bool
    synth_uniform: np.ndarray  # bool


def _layout(sets: PolarSets) -> _Layout:
    n = sets.n_positions
    slot_fresh = np.flatnonzero(sets.slot_fresh)
    slot_reused = np.flatnonzero(sets.slot_reused)
    carry = np.flatnonzero(sets.carry)
    if slot_fresh.size + slot_reused.size != carry.size:
        raise ValueError("slot capacity does not match the carry size")

    hidden = sets.hidden_fresh | sets.hidden_reused
    enc_known = sets.fresh_rand | sets.reused_rand | hidden
    dec_known = enc_known & ~sets.slot_fresh & ~sets.slot_reused
    draw_with_x = sets.carry | sets.info
    past_only = ~sets.near_uniform["c"] & ~sets.carry
    estimate_with_b = sets.slot_fresh | sets.slot_reused | sets.info

    enc_cover = enc_known.astype(int) + draw_with_x + past_only
    dec_cover = dec_known.astype(int) + sets.carry + estimate_with_b + past_only
    if not (np.all(enc_cover == 1) and np.all(dec_cover == 1)):
        raise ValueError("index sets do not partition the block")

    act_past = ~sets.near_uniform["a"]
    act_cover = (
        sets.act_local.astype(int)
        + sets.act_shared
        + sets.act_from_input
        + sets.act_from_common
        + act_past
    )
    if not np.all(act_cover == 1):
        raise ValueError("action-layer sets do not partition the block")

    return _Layout(
        size=n,
        fill_fresh=np.flatnonzero((sets.fresh_rand & ~sets.slot_fresh) | sets.hidden_fresh),
        fill_reused=np.flatnonzero((sets.reused_rand & ~sets.slot_reused) | sets.hidden_reused),
        slot_fresh=slot_fresh,
        slot_reused=slot_reused,
        carry=carry,
        enc_known=enc_known,
        dec_known=dec_known,
        draw_with_x=draw_with_x,
        estimate_with_b=estimate_with_b,
        past_only=past_only,
        act_local=np.flatnonzero(sets.act_local),
        act_shared=np.flatnonzero(sets.act_shared),
        act_from_input=sets.act_from_input,
        act_from_common=sets.act_from_common,
        act_past_only=act_past,
        synth_uniform=sets.synth_uniform,
    )


# ---- randomness accounting ---------------------------------------------------


@dataclass(frozen=True)
class LedgerPublicPart:
    """The randomness the decoder legitimately holds: per-block fresh words
    and the reused word.  The action-layer words and the encoder-local bits
    stay private to the encoder."""

    n_blocks: int
    j_blocks: np.ndarray  # (batch, k, fills + pads)
    jbar1: np.ndarray  # (batch, fills + pads)


@dataclass
class RandomnessLedger:
    """Every budgeted random bit of one chained run, batch-shaped.

    Per batch row: ``j_blocks[r, i]`` is block i's fresh common-randomness
    word (leading fill bits, trailing one-time-pad bits), ``jbar1[r]`` the
    word reused by every block (same split), ``jbar2[r]`` the reused
    action-layer word, and ``m1_blocks[r, i]`` block i's encoder-local
    bits.  ``m2_consumed`` counts the decoder's local uniform draws and is
    filled in after decoding.  ``sc_private_bits`` counts the encoder's
    nondegenerate SC draws (private channel-synthesis randomness, tracked
    but excluded from the shared budget), and ``overhead_channel_uses``
    the cleanup transmission's channel uses.
    """

    n_blocks: int
    j_blocks: np.ndarray
    jbar1: np.ndarray
    jbar2: np.ndarray
    m1_blocks: np.ndarray
    m2_consumed: int = 0
    sc_private_bits: np.ndarray = field(default=None)
    overhead_channel_uses: int = 0

    def __post_init__(self):
        if self.sc_private_bits is None:
            self.sc_private_bits = np.zeros(self.j_blocks.shape[0], dtype=np.int64)

    @classmethod
    def draw(cls, sets: PolarSets, k: int, seeds) -> "RandomnessLedger":
        """Draw all shared and encoder-local randomness from named streams.

        ``seeds`` is one master seed or a sequence of them; each batch row
        draws only from its own seed's streams, so a batched ledger is
        row-for-row identical to the corresponding solo ledgers.
        """
        if k < 1:
            raise ValueError(f"need at least one block, got k={k}")
        seed_list = [int(seeds)] if np.isscalar(seeds) else [int(s) for s in seeds]
        lay = _layout(sets)
        n_j = lay.fill_fresh.size + lay.slot_fresh.size
        n_jbar1 = lay.fill_reused.size + lay.slot_reused.size
        n_jbar2 = lay.act_shared.size
        n_m1 = lay.act_local.size

        j_rows, jb1_rows, jb2_rows, m1_rows = [], [], [], []
        for s in seed_list:
            j_rows.append(
                np.stack([random_bits(stream(s, "common-fresh", i), n_j) for i in range(k)])
            )
            jb1_rows.append(random_bits(stream(s, "common-reused"), n_jbar1))
            jb2_rows.append(random_bits(stream(s, "common-act"), n_jbar2))
            m1_rows.append(
                np.stack([random_bits(stream(s, "enc-local", i), n_m1) for i in range(k)])
            )
        return cls(
            n_blocks=k,
            j_blocks=np.stack(j_rows),
            jbar1=np.stack(jb1_rows),
            jbar2=np.stack(jb2_rows),
            m1_blocks=np.stack(m1_rows),
        )

    @property
    def batch(self) -> int:
        return self.j_blocks.shape[0]

    def public_part(self) -> LedgerPublicPart:
        """What Algorithm 2 receives: J_{1:k} and the reused word only."""
        return LedgerPublicPart(self.n_blocks, self.j_blocks, self.jbar1)

    def audit(self, sets: PolarSets) -> tuple[int, int]:
        """(consumed, expected) budgeted bits per batch row.

        Expected is recomputed from the set sizes:
        k*(fills_fresh + pads) + fills_reused + pads + |shared action| +
        k*|local action| + decoder uniform draws.  The private SC-draw
        count and the cleanup overhead are tracked separately and do not
        enter this balance.
        """
        lay = _layout(sets)
        k = self.n_blocks
        expected = (
            k * (lay.fill_fresh.size + lay.slot_fresh.size)
            + lay.fill_reused.size
            + lay.slot_reused.size
            + lay.act_shared.size
            + k * lay.act_local.size
            + self.m2_consumed
        )
        consumed = (
            self.j_blocks[0].size
            + self.jbar1.shape[1]
            + self.jbar2.shape[1]
            + self.m1_blocks[0].size
            + self.m2_consumed
        )
        return int(consumed), int(expected)


# ---- chained encoding --------------------------------------------------------


@dataclass
class ChainState:
    """Mutable carry of the chain: the previous block's undelivered bits
    (lowest-index ones headed for the fresh slots first) and the channel
    blocks emitted so far."""

    block_index: int
    carried: np.ndarray  # (batch, |carry|)
    sent: list


@dataclass(frozen=True)
class CodecOutput:
    """Encoder result: channel inputs, the realized common layer, the raw
    polarized words (for audits), the cleanup payload, and the rates."""

    a_blocks: np.ndarray = field(repr=False)  # (batch, k, N)
    c_blocks: np.ndarray = field(repr=False)
    u2_blocks: np.ndarray = field(repr=False)
    cleanup_payload: np.ndarray = field(repr=False)  # (batch, |carry|)
    rates: RateTuple


def _as_rngs(rngs, batch):
    if isinstance(rngs, np.random.Generator):
        return None, rngs
    gens = list(rngs)
    if len(gens) != batch:
        raise ValueError(f"need {batch} generators, got {len(gens)}")
    return gens, None


def _uniforms(rngs, batch, shape):
    """(batch, *shape) uniforms; per-row generators keep batch == solo."""
    gens, single = _as_rngs(rngs, batch)
    if single is not None:
        return single.random((batch, *shape))
    return np.stack([g.random(shape) for g in gens])


def _draw(pair, u):
    return (u < pair[:, 1]).astype(np.uint8)


def _map_bit(pair):
    return np.argmax(pair, axis=1).astype(np.uint8)


def encode_chain(
    design: CoordinationDesign,
    x_blocks: np.ndarray,
    sets: PolarSets,
    ledger: RandomnessLedger,
    rng,
) -> CodecOutput:
    """Encode k action blocks into k channel-input blocks plus a cleanup payload.

    Parameters
    ----------
    design : CoordinationDesign
        Supplies every conditional the SC engines factor over.
    x_blocks : ndarray, shape (k, N) or (batch, k, N)
        Action symbols, i.i.d. from the design's X marginal.
    sets : PolarSets
        Derived index sets; must partition the block.
    ledger : RandomnessLedger
        Pre-drawn randomness with matching batch and k; its
        ``sc_private_bits`` counter is updated in place.
    rng : numpy.random.Generator or sequence of them
        Source of the SC-draw uniforms (one generator per batch row keeps
        batched runs identical to solo runs).

    Returns
    -------
    CodecOutput
        Arrays keep the batch axis iff the input had one.
    """
    x = np.asarray(x_blocks)
    squeeze = x.ndim == 2
    if squeeze:
        x = x[None]
    if x.ndim != 3:
        raise ValueError(f"x_blocks must be (k, N) or (batch, k, N), got {x.shape}")
    batch, k, n = x.shape
    if n != sets.n_positions:
        raise ValueError(f"block length {n} does not match the sets' {sets.n_positions}")
    if k != ledger.n_blocks or batch != ledger.batch:
        raise ValueError("ledger shape does not match the encode request")
    lay = _layout(sets)
    n_fill_f, n_fill_r = lay.fill_fresh.size, lay.fill_reused.size
    n_sf = lay.slot_fresh.size
    if ledger.j_blocks.shape[2] != n_fill_f + n_sf:
        raise ValueError("fresh-word length does not match the sets")
    if ledger.jbar1.shape[1] != n_fill_r + lay.slot_reused.size:
        raise ValueError("reused-word length does not match the sets")

    u_draw = _uniforms(rng, batch, (2, k, n))
    state = ChainState(block_index=0, carried=np.zeros((batch, lay.carry.size), np.uint8), sent=[])
    u2_blocks = np.zeros((batch, k, n), dtype=np.uint8)
    c_blocks = np.zeros_like(u2_blocks)
    a_blocks = np.zeros_like(u2_blocks)
    private = np.zeros(batch, dtype=np.int64)

    for i in range(k):
        state.block_index = i + 1
        u2 = np.zeros((batch, n), dtype=np.uint8)
        word = ledger.j_blocks[:, i]
        u2[:, lay.fill_fresh] = word[:, :n_fill_f]
        u2[:, lay.slot_fresh] = state.carried[:, :n_sf] ^ word[:, n_fill_f:]
        u2[:, lay.fill_reused] = ledger.jbar1[:, :n_fill_r]
        u2[:, lay.slot_reused] = state.carried[:, n_sf:] ^ ledger.jbar1[:, n_fill_r:]

        engines = []
        seq_x = seq_past = None
        if lay.draw_with_x.any():
            seq_x = ScSequencer(layer_weights(design, "common", {"x": x[:, i]}))
            engines.append(seq_x)
        if lay.past_only.any():
            seq_past = ScSequencer(layer_weights(design, "common", {}, shape=(batch, n)))
            engines.append(seq_past)
        if engines:
            for j in range(n):
                if lay.enc_known[j]:
                    bits = u2[:, j]
                elif lay.draw_with_x[j]:
                    pair = seq_x.next_prob()
                    bits = _draw(pair, u_draw[:, 0, i, j])
                    private += pair.max(axis=1) < _NEAR_CERTAIN
                    u2[:, j] = bits
                else:  # near-deterministic from the past: MAP, never random
                    pair = seq_past.next_prob()
                    bits = _map_bit(pair)
                    u2[:, j] = bits
                for eng in engines:
                    eng.commit(bits)
        c = polar_transform(u2)

        u1 = np.zeros((batch, n), dtype=np.uint8)
        u1[:, lay.act_shared] = ledger.jbar2
        u1[:, lay.act_local] = ledger.m1_blocks[:, i]
        a_engines = []
        seq_ac = seq_acx = seq_a = None
        if lay.act_from_common.any():
            seq_ac = ScSequencer(layer_weights(design, "action", {"c": c}))
            a_engines.append(seq_ac)
        if lay.act_from_input.any():
            seq_acx = ScSequencer(layer_weights(design, "action", {"c": c, "x": x[:, i]}))
            a_engines.append(seq_acx)
        if lay.act_past_only.any():
            seq_a = ScSequencer(layer_weights(design, "action", {}, shape=(batch, n)))
            a_engines.append(seq_a)
        if a_engines:
            for j in range(n):
                if lay.act_from_common[j]:
                    pair = seq_ac.next_prob()
                elif lay.act_from_input[j]:
                    pair = seq_acx.next_prob()
                elif lay.act_past_only[j]:
                    pair = seq_a.next_prob()
                else:
                    pair = None
                if pair is None:
                    bits = u1[:, j]
                else:
                    bits = _draw(pair, u_draw[:, 1, i, j])
                    private += pair.max(axis=1) < _NEAR_CERTAIN
                    u1[:, j] = bits
                for eng in a_engines:
                    eng.commit(bits)
        a = polar_transform(u1)

        u2_blocks[:, i], c_blocks[:, i], a_blocks[:, i] = u2, c, a
        state.carried = u2[:, lay.carry]
        state.sent.append(a)

    ledger.sc_private_bits = ledger.sc_private_bits + private
    out = CodecOutput(
        a_blocks=a_blocks,
        c_blocks=c_blocks,
        u2_blocks=u2_blocks,
        cleanup_payload=state.carried,
        rates=realized_rates(sets, k),
    )
    if squeeze:
        out = CodecOutput(
            a_blocks=a_blocks[0],
            c_blocks=c_blocks[0],
            u2_blocks=u2_blocks[0],
            cleanup_payload=state.carried[0],
            rates=out.rates,
        )
    return out


# ---- reverse-order decoding and synthesis ------------------------------------


@dataclass(frozen=True)
class DecodeResult:
    """Decoder result: recovered common layer, synthesized actions, the
    carry bits the decoder used per block, and its uniform-draw count."""

    c_hat_blocks: np.ndarray = field(repr=False)
    y_blocks: np.ndarray = field(repr=False)
    carry_bits: np.ndarray = field(repr=False)  # (batch, k, |carry|)
    m2_consumed: int = 0


def decode_chain(
    design: CoordinationDesign,
    b_blocks: np.ndarray,
    cleanup_payload: np.ndarray,
    sets: PolarSets,
    public: LedgerPublicPart,
    rng,
) -> DecodeResult:
    """Recover the common layer block k down to block 1 and synthesize actions.

    The decoder holds only ``public`` (fresh words and the reused word).
    Block k's carry comes from the cleanup payload; every earlier block's
    carry is recovered by stripping the one-time pads off the successor's
    slot estimates.  Positions neither pre-filled nor carried are MAP
    estimates: against the channel block for the slots and the directly
    delivered information, against the past alone for the near-
    deterministic complement (bit-synchronized with the encoder).  The
    output block then rides through the receiver-side polarized layer,
    drawing uniform bits at the designated positions (counted into M2)
    and SC draws elsewhere.

    ``rng`` supplies the synthesis uniforms, one generator per batch row
    or a single generator.  Returns batch-shaped arrays iff ``b_blocks``
    had a batch axis.
    """
    b = np.asarray(b_blocks)
    squeeze = b.ndim == 2
    if squeeze:
        b = b[None]
    batch, k, n = b.shape
    if k != public.n_blocks:
        raise ValueError("public randomness does not match the block count")
    if n != sets.n_positions:
        raise ValueError(f"block length {n} does not match the sets' {sets.n_positions}")
    payload = np.asarray(cleanup_payload)
    if squeeze:
        payload = payload[None]
    lay = _layout(sets)
    n_fill_f, n_fill_r = lay.fill_fresh.size, lay.fill_reused.size
    if payload.shape != (batch, lay.carry.size):
        raise ValueError("cleanup payload shape does not match the carry set")

    u_synth = _uniforms(rng, batch, (2, k, n))
    c_hats = np.zeros((batch, k, n), dtype=np.uint8)
    y_blocks = np.zeros_like(c_hats)
    carry_bits = np.zeros((batch, k, lay.carry.size), dtype=np.uint8)
    m2 = 0

    carried = payload
    for i in range(k - 1, -1, -1):
        u2 = np.zeros((batch, n), dtype=np.uint8)
        word = public.j_blocks[:, i]
        u2[:, lay.fill_fresh] = word[:, :n_fill_f]
        u2[:, lay.fill_reused] = public.jbar1[:, :n_fill_r]
        u2[:, lay.carry] = carried
        carry_bits[:, i] = carried

        engines = []
        seq_b = seq_past = None
        if lay.estimate_with_b.any():
            seq_b = ScSequencer(layer_weights(design, "common", {"b": b[:, i]}))
            engines.append(seq_b)
        if lay.past_only.any():
            seq_past = ScSequencer(layer_weights(design, "common", {}, shape=(batch, n)))
            engines.append(seq_past)
        if engines:
            for j in range(n):
                if lay.dec_known[j] or sets.carry[j]:
                    bits = u2[:, j]
                elif lay.estimate_with_b[j]:
                    bits = _map_bit(seq_b.next_prob())
                    u2[:, j] = bits
                else:
                    bits = _map_bit(seq_past.next_prob())
                    u2[:, j] = bits
                for eng in engines:
                    eng.commit(bits)
        c_hat = polar_transform(u2)
        c_hats[:, i] = c_hat
        carried = np.concatenate(
            [
                u2[:, lay.slot_fresh] ^ word[:, n_fill_f:],
                u2[:, lay.slot_reused] ^ public.jbar1[:, n_fill_r:],
            ],
            axis=1,
        )

        t = np.zeros((batch, n), dtype=np.uint8)
        seq_y = None
        if not lay.synth_uniform.all():
            seq_y = ScSequencer(layer_weights(design, "synth", {"b": b[:, i], "c": c_hat}))
        for j in range(n):
            if lay.synth_uniform[j]:
                bits = (u_synth[:, 0, i, j] < 0.5).astype(np.uint8)
                m2 += 1
            else:
                bits = _draw(seq_y.next_prob(), u_synth[:, 1, i, j])
            t[:, j] = bits
            if seq_y is not None:
                seq_y.commit(bits)
        y_blocks[:, i] = polar_transform(t)

    result = DecodeResult(
        c_hat_blocks=c_hats, y_blocks=y_blocks, carry_bits=carry_bits, m2_consumed=m2
    )
    if squeeze:
        result = DecodeResult(
            c_hat_blocks=c_hats[0],
            y_blocks=y_blocks[0],
            carry_bits=carry_bits[0],
            m2_consumed=m2,
        )
    return result


# ---- rates and cleanup -------------------------------------------------------


def realized_rates(sets: PolarSets, k: int) -> RateTuple:
    """Finite-blocklength rates of a k-block chained run, in bits per action.

    Common randomness amortizes the reused word over all k blocks; the
    message rate counts the carried and directly delivered positions; the
    action-layer rate splits the same way; the two local-randomness rates
    are per-block constants.
    """
    if k < 1:
        raise ValueError(f"need at least one block, got k={k}")
    n = sets.n_positions
    n_j = sets.size("fresh_rand") + sets.size("hidden_fresh")
    n_jbar1 = sets.size("reused_rand") + sets.size("hidden_reused")
    return RateTuple(
        r_o=(n_jbar1 + k * n_j) / (k * n),
        r_c=(sets.size("carry") + sets.size("info")) / n,
        r_a=(sets.size("act_shared") + k * sets.size("act_from_input")) / (k * n),
        rho_1=sets.size("act_local") / n,
        rho_2=sets.size("synth_uniform") / n,
    )


def repetition_factor(ch: Dmc, target: float = 1e-4) -> int:
    """Smallest odd repetition count whose majority decode meets ``target``.

    Works on binary-input binary-output channels; the per-bit error is the
    binomial tail of the worse input's flip probability.
    """
    rows = np.asarray(ch.rows)
    if rows.shape != (2, 2):
        raise ValueError("repetition cleanup needs a binary channel")
    q = float(max(rows[0, 1], rows[1, 0]))
    if q >= 0.5:
        raise ValueError(f"flip probability {q} leaves no majority margin")
    if q == 0.0:
        return 1
    r = 1
    while r < 10_000:
        tail = sum(comb(r, j) * q**j * (1 - q) ** (r - j) for j in range((r + 1) // 2, r + 1))
        if tail <= target:
            return r
        r += 2
    raise RuntimeError(f"no repetition factor below 10000 meets {target}")


def cleanup_transmit(
    payload: np.ndarray,
    ch: Dmc,
    rng,
    ledger: RandomnessLedger | None = None,
    target: float = 1e-4,
) -> np.ndarray:
    """Convey the final carry through the channel by repetition + majority.

    ``payload`` is (|carry|,) or (batch, |carry|); ``rng`` one generator or
    one per batch row.  Channel uses are added to the ledger's overhead
    counter when a ledger is given.
    """
    bits = np.asarray(payload)
    squeeze = bits.ndim == 1
    if squeeze:
        bits = bits[None]
    batch, width = bits.shape
    if width == 0:
        return payload if not squeeze else np.asarray(payload)
    r = repetition_factor(ch, target)
    u = _uniforms(rng, batch, (width, r))
    cdf = np.cumsum(np.asarray(ch.rows), axis=1)[bits]  # (batch, width, 2)
    received = (u[..., None] >= cdf[:, :, None, :]).sum(axis=-1)
    decoded = (received.sum(axis=-1) > r // 2).astype(np.uint8)
    if ledger is not None:
        ledger.overhead_channel_uses += r * width
    return decoded[0] if squeeze else decoded


# ---- end-to-end run ----------------------------------------------------------


@dataclass(frozen=True)
class ChainRunStats:
    """Measured outcome of a full encode/transmit/decode run."""

    seeds: tuple
    n_blocks: int
    size: int
    rates: RateTuple
    block_recovery: np.ndarray = field(repr=False)  # (batch, k) exact-match flags
    per_letter_tv: np.ndarray = field(repr=False)  # (batch,)
    pairwise_tv: np.ndarray = field(repr=False)  # (batch,)
    ledger_consumed: int = 0
    ledger_expected: int = 0
    sc_private_bits: np.ndarray = field(default=None, repr=False)
    m2_consumed: int = 0
    overhead_channel_uses: int = 0
    # tv of the empirical (x, y) pmf accumulated over every seed and block;
    # tighter than any per-row figure because the sample pool is batch*k*N.
    pooled_tv: float = 0.0


def _per_letter_tv(x, y, target):
    """Per-row tv between the empirical (x, y) law and a target table."""
    q = np.asarray(target)
    nx, ny = q.shape
    batch = x.shape[0]
    out = np.empty(batch)
    flat_x = x.reshape(batch, -1)
    flat_y = y.reshape(batch, -1)
    for r in range(batch):
        counts = np.bincount(flat_x[r] * ny + flat_y[r], minlength=nx * ny)
        emp = counts / counts.sum()
        out[r] = 0.5 * np.abs(emp - q.reshape(-1)).sum()
    return out


def _pairwise_tv(x, y, target):
    """Per-row tv between adjacent-pair statistics and the product law."""
    q = np.asarray(target).reshape(-1)
    nx, ny = np.asarray(target).shape
    m = nx * ny
    prod = np.outer(q, q).reshape(-1)
    batch = x.shape[0]
    out = np.empty(batch)
    sym = (x.reshape(batch, -1) * ny + y.reshape(batch, -1)).astype(np.int64)
    for r in range(batch):
        pair = sym[r, :-1] * m + sym[r, 1:]
        counts = np.bincount(pair, minlength=m * m)
        emp = counts / counts.sum()
        out[r] = 0.5 * np.abs(emp - prod).sum()
    return out


def run_chain(
    design: CoordinationDesign,
    sets: PolarSets,
    k: int,
    seeds,
    channel: Dmc | None = None,
) -> ChainRunStats:
    """Draw actions, encode, transmit, decode, and measure coordination.

    One batch row per seed; every stochastic step draws from streams named
    off that row's seed, so results are independent of batching.  The
    physical link defaults to the design's channel but can be overridden
    (e.g. an identity link for exactness checks).
    """
    seed_list = [int(seeds)] if np.isscalar(seeds) else [int(s) for s in seeds]
    ch = design.channel if channel is None else channel
    n = sets.n_positions
    q_x = design.target_q_xy.marginal("x").probs

    x = np.stack(
        [_categorical(q_x, (k, n), stream(s, "x-source")) for s in seed_list]
    ).astype(np.uint8)
    ledger = RandomnessLedger.draw(sets, k, seed_list)
    out = encode_chain(design, x, sets, ledger, [stream(s, "enc-sc") for s in seed_list])

    noise_u = np.stack([stream(s, "chan-noise").random((k, n)) for s in seed_list])
    cdf = np.cumsum(np.asarray(ch.rows), axis=1)[out.a_blocks]
    b = (noise_u[..., None] >= cdf).sum(axis=-1)

    payload = cleanup_transmit(
        out.cleanup_payload, ch, [stream(s, "cleanup-noise") for s in seed_list], ledger
    )
    dec = decode_chain(
        design, b, payload, sets, ledger.public_part(), [stream(s, "dec-synth") for s in seed_list]
    )
    ledger.m2_consumed = dec.m2_consumed

    consumed, expected = ledger.audit(sets)
    q = np.asarray(design.target_q_xy.probs)
    pooled = np.bincount(
        (x.reshape(-1) * q.shape[1] + dec.y_blocks.reshape(-1)), minlength=q.size
    )
    pooled_tv = 0.5 * np.abs(pooled / pooled.sum() - q.reshape(-1)).sum()
    return ChainRunStats(
        seeds=tuple(seed_list),
        n_blocks=k,
        size=n,
        rates=out.rates,
        block_recovery=np.all(dec.c_hat_blocks == out.c_blocks, axis=-1),
        per_letter_tv=_per_letter_tv(x, dec.y_blocks, design.target_q_xy.probs),
        pairwise_tv=_pairwise_tv(x, dec.y_blocks, design.target_q_xy.probs),
        ledger_consumed=consumed,
        ledger_expected=expected,
        sc_private_bits=ledger.sc_private_bits.copy(),
        m2_consumed=dec.m2_consumed,
        overhead_channel_uses=ledger.overhead_channel_uses,
        pooled_tv=float(pooled_tv),
    )


def format_run_report(stats: ChainRunStats) -> str:
    """Human-readable run report (the CLI wraps this in its JSON output)."""
    r = stats.rates
    rec = stats.block_recovery
    lines = [
        "chained codec run",
        f"  blocklength ........ {stats.size}",
        f"  blocks (k) ......... {stats.n_blocks}",
        f"  seeds .............. {', '.join(str(s) for s in stats.seeds)}",
        (
            "  realized rates ..... "
            f"R_o={r.r_o:.6f} R_c={r.r_c:.6f} R_a={r.r_a:.6f} "
            f"rho1={r.rho_1:.6f} rho2={r.rho_2:.6f}"
        ),
        f"  blocks recovered ... {int(rec.sum())}/{rec.size} exact",
        (
            "  per-letter tv ...... "
            f"mean={stats.per_letter_tv.mean():.6f} max={stats.per_letter_tv.max():.6f}"
        ),
        f"  pooled-law tv ...... {stats.pooled_tv:.6f}",
        (
            "  adjacent-pair tv ... "
            f"mean={stats.pairwise_tv.mean():.6f} max={stats.pairwise_tv.max():.6f}"
        ),
        (
            "  ledger ............. "
            f"consumed={stats.ledger_consumed} expected={stats.ledger_expected} "
            f"balanced={stats.ledger_consumed == stats.ledger_expected}"
        ),
        f"  sc private bits .... mean={stats.sc_private_bits.mean():.1f}/row",
        f"  decoder uniforms ... {stats.m2_consumed}",
        f"  cleanup overhead ... {stats.overhead_channel_uses} channel uses",
    ]
    return "\n".join(lines)
