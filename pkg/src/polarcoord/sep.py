"""Separation baseline: channel code, noise recovery, extraction, Y-synthesis.

The chained codec treats the noisy link as a coordination resource.  The
baseline here treats it the classical way instead: an inner channel code
makes the link look noiseless, the coordination code runs on top of that
clean pipe, and the decoder claws some randomness back by reconstructing
the channel noise it just fought — ``Ẑ = B - A(Î)`` is a free sample of
the noise process whenever the decoded message is right — and feeding it
through a seeded extractor into the Y-synthesis budget.

Three public layers:

* :func:`simulate_noise_recovery` measures how well that reconstruction
  works in isolation (mismatch rate, entropy of the recovered noise, and
  a leakage proxy between the recovered noise and the message pair).
* :func:`extract` is the seeded GF(2) universal hash with an entropy guard.
* :func:`separate_pipeline` composes the full baseline — coordination
  encode over an identity link, inner polar channel code over BSC(p_o),
  noise recovery, extraction, and Y-synthesis — with an exact ledger:
  fresh decoder randomness plus extracted bits equals the synthesis
  budget, bit for bit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .channels import AdditiveChannel, additive_dmc, capacity
from .codec import RandomnessLedger, _layout, _per_letter_tv, encode_chain
from .polar import (
    PolarSets,
    ScSequencer,
    SetThresholds,
    derive_sets,
    estimate_entropy_profile,
    genie_pass,
    layer_weights,
    polar_transform,
)
from .polar.profile import _categorical
from .probkit import Pmf, binary_entropy
from .rate_region import RateTuple, bsc_example_design, separate_sum_rate
from .rng import random_bits, stream

__all__ = [
    "ChannelCode",
    "ExtractionReport",
    "SepRunReport",
    "block_entropy_rate",
    "design_channel_code",
    "extract",
    "format_sep_report",
    "separate_operating_point",
    "separate_pipeline",
    "simulate_noise_recovery",
]


def block_entropy_rate(symbols, block_bits: int = 8) -> float:
    """Plug-in entropy of non-overlapping bit blocks, in bits per symbol.

    Groups the input into ``block_bits``-wide words, estimates the word
    entropy with the plug-in formula plus the Miller-Madow bias term, and
    divides by the block width.  Rows of a 2-D input are independent
    records: no block straddles a row boundary, and row tails that do not
    fill a block are dropped.  Returns 0.0 when no complete block fits.
    """
    if block_bits < 1:
        raise ValueError(f"block width must be positive, got {block_bits}")
    bits = np.atleast_2d(np.asarray(symbols))
    if bits.size and (bits.min() < 0 or bits.max() > 1):
        raise ValueError("symbols must be binary")
    n_per_row = bits.shape[1] // block_bits
    if n_per_row == 0:
        return 0.0
    blocks = bits[:, : n_per_row * block_bits].astype(np.int64)
    words = blocks.reshape(-1, block_bits) @ (1 << np.arange(block_bits, dtype=np.int64))
    counts = np.bincount(words, minlength=1 << block_bits)
    n = words.size
    probs = counts[counts > 0] / n
    plug_in = float(-(probs * np.log2(probs)).sum())
    miller_madow = (probs.size - 1) / (2.0 * n * math.log(2.0))
    return min((plug_in + miller_madow) / block_bits, 1.0)


def _h2_inv(h: float) -> float:
    """The p in [0, 1/2] with binary entropy h, by bisection."""
    if not 0.0 <= h <= 1.0:
        raise ValueError(f"entropy {h!r} outside [0, 1]")
    lo, hi = 0.0, 0.5
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < h:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---- inner channel code --------------------------------------------------------


@dataclass(frozen=True)
class ChannelCode:
    """Binary polar channel code for an additive binary channel.

    ``info`` holds the message positions (everything else is frozen to
    zero); ``noise`` is the channel noise pmf the code was designed for,
    which the decoder's leaf weights are built from.
    """

    m: int
    info: np.ndarray
    noise: np.ndarray

    @property
    def rate(self) -> float:
        return self.info.size / self.m

    def encode(self, messages: np.ndarray) -> np.ndarray:
        """Codewords (batch, m) for a (batch, n_info) message batch."""
        msgs = np.atleast_2d(np.asarray(messages))
        if msgs.shape[1] != self.info.size:
            raise ValueError(f"messages carry {msgs.shape[1]} bits, code takes {self.info.size}")
        u = np.zeros((msgs.shape[0], self.m), dtype=np.uint8)
        u[:, self.info] = msgs
        return polar_transform(u)

    def _leaf_weights(self, received: np.ndarray) -> np.ndarray:
        b = np.asarray(received)
        return np.stack([self.noise[b], self.noise[b ^ 1]], axis=-1)

    def decode(self, received: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """MAP-SC decode of a (batch, m) channel-output batch.

        Returns ``(messages, codewords)``: the decoded message bits and
        the codewords they re-encode to (the decoder's channel-input
        estimate, which noise recovery subtracts from the observation).
        """
        b = np.atleast_2d(np.asarray(received))
        if b.shape[1] != self.m:
            raise ValueError(f"received block length {b.shape[1]}, expected {self.m}")
        is_info = np.zeros(self.m, dtype=bool)
        is_info[self.info] = True
        seq = ScSequencer(self._leaf_weights(b))
        zero = np.zeros(b.shape[0], dtype=np.uint8)
        for j in range(self.m):
            if is_info[j]:
                seq.commit(np.argmax(seq.next_prob(), axis=1).astype(np.uint8))
            else:
                seq.commit(zero)
        u_hat = seq.committed()
        return u_hat[:, self.info], seq.leaves()


def design_channel_code(
    a: AdditiveChannel,
    m: int,
    n_info: int,
    rng: np.random.Generator,
    mc_samples: int = 4000,
) -> ChannelCode:
    """Pick the ``n_info`` most reliable polarized positions by Monte Carlo.

    Sends the all-zero codeword (so the observation is the noise itself),
    runs genie-aided passes to estimate each position's conditional
    entropy, and keeps the lowest-entropy positions as message carriers.
    """
    if a.q != 2:
        raise ValueError("the inner channel code is binary")
    if m < 1 or m & (m - 1):
        raise ValueError(f"blocklength must be a power of two, got {m}")
    if not 0 <= n_info <= m:
        raise ValueError(f"message size {n_info} outside [0, {m}]")
    noise = np.asarray(a.noise.probs)
    h_sum = np.zeros(m)
    done = 0
    chunk = max(1, (1 << 21) // m)
    while done < mc_samples:
        rows = min(chunk, mc_samples - done)
        z = (rng.random((rows, m)) < noise[1]).astype(np.uint8)
        weights = np.stack([noise[z], noise[z ^ 1]], axis=-1)
        p_true, _ = genie_pass(weights, np.zeros_like(z), dtype=np.float32)
        h_sum += (-np.log2(np.maximum(p_true, 1e-300))).sum(axis=0)
        done += rows
    order = np.argsort(h_sum / done, kind="stable")
    return ChannelCode(m=m, info=np.sort(order[:n_info]), noise=noise)


# ---- noise recovery ------------------------------------------------------------


@dataclass(frozen=True)
class ExtractionReport:
    """Aggregate noise-recovery statistics over a batch of code trials.

    ``noise_mismatch_rate`` estimates the probability that the recovered
    noise block differs from the true one anywhere; ``mi_estimate`` is a
    per-position plug-in proxy for the leakage between the recovered noise
    and the (sent, decoded) message pair, in bits per channel use.
    """

    trials: int
    noise_mismatch_rate: float
    empirical_entropy_rate: float
    mi_estimate: float
    extracted_bits_per_use: float
    above_capacity: bool = False

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError(f"need at least one trial, got {self.trials}")
        if not 0.0 <= self.noise_mismatch_rate <= 1.0:
            raise ValueError(f"mismatch rate {self.noise_mismatch_rate!r} outside [0, 1]")
        if not 0.0 <= self.empirical_entropy_rate <= 1.0:
            raise ValueError(f"entropy rate {self.empirical_entropy_rate!r} outside [0, 1]")
        if self.mi_estimate < 0.0:
            raise ValueError(f"mutual information {self.mi_estimate!r} negative")
        if not 0.0 <= self.extracted_bits_per_use <= 1.0:
            raise ValueError(f"extracted rate {self.extracted_bits_per_use!r} outside [0, 1]")


def _per_position_mi(z_hat: np.ndarray, sent: np.ndarray, decoded: np.ndarray) -> float:
    """Mean over positions of plug-in I(Ẑ_t ; (A_t, Â_t)) in bits."""
    trials, m = z_hat.shape
    pair = sent.astype(np.int64) + 2 * decoded.astype(np.int64)
    code = 2 * pair + z_hat
    idx = code + 8 * np.arange(m, dtype=np.int64)[None, :]
    counts = np.bincount(idx.ravel(), minlength=8 * m).astype(np.float64)
    p = counts.reshape(m, 4, 2) / trials
    p_pair = p.sum(axis=2, keepdims=True)
    p_z = p.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(p > 0, p / (p_pair * p_z), 1.0)
        terms = np.where(p > 0, p * np.log2(ratio), 0.0)
    return float(terms.sum(axis=(1, 2)).mean())


def simulate_noise_recovery(
    a: AdditiveChannel,
    code_rate: float,
    m: int,
    trials: int,
    rng: np.random.Generator,
    block_bits: int = 8,
    mc_samples: int = 4000,
) -> ExtractionReport:
    """Round-trip a channel code and measure the decoder's noise estimate.

    Each trial draws a fresh message, encodes, adds channel noise, SC
    decodes, and reconstructs the noise as the difference between the
    observation and the re-encoded decoded message.  All trials run as one
    batched SC pass; the reported statistics are sums over trials, so the
    lockstep batch is equivalent to merging independent per-trial runs.

    A rate at or above capacity is allowed — the run is then a negative
    control and is flagged on the report and by a warning.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    if not 0.0 <= code_rate <= 1.0:
        raise ValueError(f"code rate {code_rate!r} outside [0, 1]")
    cap, _ = capacity(additive_dmc(a))
    above = code_rate >= cap and cap < 1.0
    if above:
        warnings.warn(
            f"code rate {code_rate} is not below the channel capacity {cap:.6f}; "
            "noise recovery is expected to fail (negative control)",
            RuntimeWarning,
            stacklevel=2,
        )
    code = design_channel_code(a, m, int(code_rate * m), rng, mc_samples=mc_samples)
    noise = np.asarray(a.noise.probs)

    msgs = random_bits(rng, trials * code.info.size).reshape(trials, -1)
    z = (rng.random((trials, m)) < noise[1]).astype(np.uint8)
    sent = code.encode(msgs)
    received = sent ^ z
    _, decoded = code.decode(received)
    z_hat = received ^ decoded

    entropy_rate = block_entropy_rate(z_hat, block_bits)
    return ExtractionReport(
        trials=trials,
        noise_mismatch_rate=float(np.any(z_hat != z, axis=1).mean()),
        empirical_entropy_rate=entropy_rate,
        mi_estimate=_per_position_mi(z_hat, sent, decoded),
        extracted_bits_per_use=math.floor(0.9 * m * entropy_rate) / m,
        above_capacity=above,
    )


# ---- extraction ----------------------------------------------------------------


def extract(
    z_hat,
    out_len: int,
    seed: int,
    block_bits: int = 8,
    entropy_rate: float | None = None,
) -> np.ndarray:
    """Hash recovered noise into near-uniform bits with a seeded GF(2) matrix.

    The matrix is drawn from the stream named by ``seed``, so identical
    ``(z_hat, out_len, seed)`` always produce identical output, and one
    public seed can serve every run.  The output length is guarded at 90%
    of the source's entropy: ``entropy_rate`` supplies an external
    estimate (e.g. pooled over many runs); when ``None`` the rate is
    measured from ``z_hat`` itself, which makes a constant input
    unextractable by construction.
    """
    z = np.asarray(z_hat)
    if z.ndim != 1:
        raise ValueError(f"recovered noise must be 1-D, got shape {z.shape}")
    if z.size and (z.min() < 0 or z.max() > 1):
        raise ValueError("recovered noise must be binary")
    if out_len < 0:
        raise ValueError(f"output length {out_len} negative")
    rate = block_entropy_rate(z, block_bits) if entropy_rate is None else entropy_rate
    guard = math.floor(0.9 * z.size * rate)
    if out_len > guard:
        raise ValueError(f"output length {out_len} exceeds the entropy guard {guard}")
    if out_len == 0:
        return np.zeros(0, dtype=np.uint8)
    matrix = random_bits(stream(seed, "extractor"), out_len * z.size).reshape(out_len, z.size)
    # float32 keeps the matmul on BLAS and is exact here: row sums of 0/1
    # entries stay far below 2**24.
    out = matrix.astype(np.float32) @ z.astype(np.float32)
    return (out.astype(np.int64) & 1).astype(np.uint8)


# ---- the separate pipeline -----------------------------------------------------


def separate_operating_point(p: float, p_o: float, rate_margin: float = 0.5) -> tuple[float, float]:
    """Finite-length legs (p1, p2) of the separate design for target BSC(p).

    The idealized operating point pins the X-leg at p1 = p_o so the
    coordination message rate equals channel capacity, but no finite code
    decodes at capacity.  The X-leg therefore backs off until the message
    rate is ``rate_margin`` of capacity, and the Y-leg re-aims at the
    target: p2 = (p - p1) / (1 - 2 p1), keeping p1 * p2 = p under binary
    convolution.  ``rate_margin=1`` reproduces the idealized point.
    """
    separate_sum_rate(p, p_o)  # feasibility screen; raises off the region
    if not 0.0 < rate_margin <= 1.0:
        raise ValueError(f"rate margin {rate_margin!r} outside (0, 1]")
    cap = 1.0 - binary_entropy(p_o)
    p1 = min(_h2_inv(1.0 - rate_margin * cap), p)
    p2 = (p - p1) / (1.0 - 2.0 * p1)
    return p1, p2


@dataclass(frozen=True)
class SepRunReport:
    """Outcome of one separate-scheme run, with the decoder-side ledger.

    ``rates`` are the coordination codec's realized rates, whose rho_2 is
    the gross synthesis budget per action; ``rho2_realized`` nets out the
    extraction credit, and ``rho2_ideal`` is the asymptotic bound
    max(0, H(Y|U) - H(Z)) at this design point, which assumes a lossless
    rate-H(Z) extractor.
    """

    size: int
    n_blocks: int
    p: float
    p_o: float
    p1: float
    p2: float
    rates: RateTuple
    inner_code_rate: float
    inner_mismatch: float
    blocks_delivered: int
    per_letter_tv: float
    m2_budget: int
    extracted_credited: int
    fresh_m2: int
    rho2_ideal: float
    rho2_realized: float

    @property
    def ledger_balanced(self) -> bool:
        """Fresh plus extracted synthesis bits equal the budget exactly."""
        return self.fresh_m2 + self.extracted_credited == self.m2_budget


def separate_pipeline(
    p: float,
    p_o: float,
    size: int,
    k: int,
    rng: np.random.Generator,
    rate_margin: float = 0.5,
    thresholds: SetThresholds | None = None,
    sets: PolarSets | None = None,
    code: ChannelCode | None = None,
    block_bits: int = 8,
    code_mc_samples: int = 4000,
) -> SepRunReport:
    """Run the separation baseline once, one channel use per action symbol.

    Stages: (1) coordination encode over an identity link — the design's
    channel is noiseless, so the common layer is delivered by construction
    and the directly delivered positions are the only message; (2) those
    message bits cross the real BSC(p_o) inside an inner polar channel
    code of the same blocklength; (3) the decoder re-encodes its message
    estimate, subtracts it from the observation to recover the channel
    noise, extracts near-uniform bits from the recovery, and spends them
    on Y-synthesis before touching fresh local randomness.

    ``sets`` and ``code`` may be passed in to amortize the Monte Carlo
    constructions across runs; they must match ``(p, p_o, size,
    rate_margin)`` and the thresholds.  Everything stochastic inside the
    run draws from streams named off one integer pulled from ``rng``, so
    the report is a deterministic function of the generator state.
    """
    if k < 1:
        raise ValueError(f"need at least one block, got k={k}")
    p1, p2 = separate_operating_point(p, p_o, rate_margin)
    design = bsc_example_design(p1, p2, 0.0, 0.0)
    if thresholds is None:
        thresholds = SetThresholds(delta=0.1, mc_samples=20_000)
    seed = int(rng.integers(1 << 62))

    if sets is None:
        profile = estimate_entropy_profile(design, size, thresholds, stream(seed, "sep-profile"))
        sets = derive_sets(profile, thresholds)
    if sets.n_positions != size:
        raise ValueError(f"sets describe {sets.n_positions} positions, expected {size}")
    for name in ("carry", "hidden_fresh", "hidden_reused"):
        if sets.size(name):
            raise ValueError("sets do not describe an identity-link design")
    lay = _layout(sets)
    info_idx = np.flatnonzero(sets.info)
    if lay.fill_fresh.size + lay.fill_reused.size + info_idx.size != size:
        raise ValueError("sets do not partition into shared words plus message")

    if code is None:
        link = AdditiveChannel(2, Pmf([1.0 - p_o, p_o]))
        code = design_channel_code(link, size, info_idx.size, stream(seed, "sep-code"), code_mc_samples)
    if code.m != size or code.info.size != info_idx.size:
        raise ValueError("channel code does not match the blocklength or message size")

    # coordination stage over the identity link
    q_x = np.asarray(design.target_q_xy.marginal("x").probs)
    x = _categorical(q_x, (k, size), stream(seed, "x-source")).astype(np.uint8)
    ledger = RandomnessLedger.draw(sets, k, seed)
    out = encode_chain(design, x, sets, ledger, stream(seed, "enc-sc"))
    msgs = out.u2_blocks[:, info_idx]

    # inner transmission: one code block per coordination block
    z = (stream(seed, "chan-noise").random((k, size)) < p_o).astype(np.uint8)
    sent = code.encode(msgs)
    received = sent ^ z
    msg_hat, decoded = code.decode(received)
    z_hat = received ^ decoded
    delivered = int(np.all(msg_hat == msgs, axis=1).sum())
    mismatch = float(np.any(z_hat != z, axis=1).mean())

    # decoder-side common layer: every position is a shared fill or message
    public = ledger.public_part()
    u2_hat = np.zeros((k, size), dtype=np.uint8)
    u2_hat[:, lay.fill_fresh] = public.j_blocks[0]
    u2_hat[:, lay.fill_reused] = public.jbar1[0][None, :]
    u2_hat[:, info_idx] = msg_hat
    c_hat = polar_transform(u2_hat)

    # extraction first, fresh bits for the remainder of the budget
    n_synth = sets.size("synth_uniform")
    ext_seeds = stream(seed, "ext-seeds").integers(1 << 62, size=k)
    uniform_bits = np.zeros((k, n_synth), dtype=np.uint8)
    credited = 0
    for i in range(k):
        available = math.floor(0.9 * size * block_entropy_rate(z_hat[i], block_bits))
        credit = min(available, n_synth)
        if credit:
            uniform_bits[i, :credit] = extract(z_hat[i], credit, int(ext_seeds[i]), block_bits)
        if credit < n_synth:
            uniform_bits[i, credit:] = random_bits(stream(seed, "dec-synth", i), n_synth - credit)
        credited += credit
    m2_budget = k * n_synth
    fresh_m2 = m2_budget - credited
    ledger.m2_consumed = fresh_m2

    # Y-synthesis through the design's output layer, all blocks in lockstep
    y = _synthesize(design, sets, c_hat, uniform_bits, stream(seed, "dec-sc"))

    rho2_ideal = max(0.0, binary_entropy(p2) - binary_entropy(p_o))
    return SepRunReport(
        size=size,
        n_blocks=k,
        p=p,
        p_o=p_o,
        p1=p1,
        p2=p2,
        rates=out.rates,
        inner_code_rate=code.rate,
        inner_mismatch=mismatch,
        blocks_delivered=delivered,
        per_letter_tv=float(_per_letter_tv(x[None], y[None], design.target_q_xy.probs)[0]),
        m2_budget=m2_budget,
        extracted_credited=credited,
        fresh_m2=fresh_m2,
        rho2_ideal=rho2_ideal,
        rho2_realized=fresh_m2 / (k * size),
    )


def _synthesize(design, sets, c_hat, uniform_bits, rng) -> np.ndarray:
    """Receiver-side output layer: committed bits at the budgeted positions,
    SC draws elsewhere, conditioned on the reconstructed common layer."""
    k, size = c_hat.shape
    t = np.zeros((k, size), dtype=np.uint8)
    u_draw = rng.random((k, size))
    seq_y = None
    if not sets.synth_uniform.all():
        seq_y = ScSequencer(layer_weights(design, "synth", {"b": c_hat, "c": c_hat}))
    cursor = 0
    for j in range(size):
        if sets.synth_uniform[j]:
            bits = uniform_bits[:, cursor]
            cursor += 1
        else:
            pair = seq_y.next_prob()
            bits = (u_draw[:, j] < pair[:, 1]).astype(np.uint8)
        t[:, j] = bits
        if seq_y is not None:
            seq_y.commit(bits)
    return polar_transform(t)


def format_sep_report(report: SepRunReport) -> str:
    """Human-readable run report (the CLI wraps this in its JSON output)."""
    r = report.rates
    lines = [
        "separate-scheme run",
        f"  blocklength ........ {report.size}",
        f"  blocks (k) ......... {report.n_blocks}",
        f"  target / link ...... BSC({report.p}) over BSC({report.p_o})",
        f"  design legs ........ p1={report.p1:.6f} p2={report.p2:.6f}",
        (
            "  realized rates ..... "
            f"R_o={r.r_o:.6f} R_c={r.r_c:.6f} R_a={r.r_a:.6f} "
            f"rho1={r.rho_1:.6f} rho2={r.rho_2:.6f}"
        ),
        (
            "  inner code ......... "
            f"rate {report.inner_code_rate:.6f}, "
            f"{report.blocks_delivered}/{report.n_blocks} messages exact, "
            f"noise mismatch {report.inner_mismatch:.3f}"
        ),
        f"  per-letter tv ...... {report.per_letter_tv:.6f}",
        (
            "  synthesis budget ... "
            f"{report.m2_budget} draws = {report.extracted_credited} extracted "
            f"+ {report.fresh_m2} fresh"
        ),
        (
            "  rho2 ............... "
            f"ideal {report.rho2_ideal:.6f} realized {report.rho2_realized:.6f}"
        ),
        f"  ledger ............. balanced={report.ledger_balanced}",
    ]
    return "\n".join(lines)
