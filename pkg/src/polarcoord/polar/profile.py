"""Per-index conditional entropy profiles of the polarized layers.

For a blocklength-N design, the profile records, for every polarized index
j and every conditioning context, an estimate of H(U_j | U^{j-1}, side
information).  Estimates come from genie-aided Monte Carlo (sample the
design, reveal the true polarized past, accumulate -log2 of the true-bit
probability); contexts whose single-letter law is degenerate are filled in
exactly instead:

* a deterministic target given the context's side information has an
  identically-zero profile;
* an exactly uniform binary target with no side information has an
  identically-one profile (the transform preserves the uniform law).

Degeneracy detection uses a 1e-12 tolerance on the single-letter tables.
Monte Carlo is used verbatim everywhere else.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from polarcoord.polar.engines import _full_joint_tables, genie_pass, layer_weights

_DEGENERACY_TOL = 1e-12

#: context name -> (layer, observed axes); insertion order is the canonical
#: ordering used by reports and serialization.
CONTEXTS: Mapping[str, tuple[str, tuple[str, ...]]] = {
    "c": ("common", ()),
    "c|x": ("common", ("x",)),
    "c|xy": ("common", ("x", "y")),
    "c|b": ("common", ("b",)),
    "c|a": ("common", ("a",)),
    "c|bx": ("common", ("b", "x")),
    "c|bxy": ("common", ("b", "x", "y")),
    "a": ("action", ()),
    "a|c": ("action", ("c",)),
    "a|cx": ("action", ("c", "x")),
    "a|cxy": ("action", ("c", "x", "y")),
    "y|bc": ("synth", ("b", "c")),
}

_TARGET_AXIS = {"common": "c", "action": "a", "synth": "y"}
_AXES = ("a", "c", "x", "b", "y")


@dataclass(frozen=True)
class EntropyProfile:
    """Estimated per-index conditional entropies, one array per context.

    ``entropies[ctx]`` and ``std_errors[ctx]`` are length-N arrays in bits;
    exact (degenerate-context) entries carry zero standard error.
    ``mc_samples`` is the nominal Monte Carlo sample count used for the
    non-degenerate contexts.
    """

    n_positions: int
    mc_samples: int
    entropies: Mapping[str, np.ndarray] = field(repr=False)
    std_errors: Mapping[str, np.ndarray] = field(repr=False)

    def __post_init__(self):
        for ctx, values in self.entropies.items():
            if len(values) != self.n_positions:
                raise ValueError(f"context {ctx!r} has {len(values)} entries")


def sample_design(design, batch, size, rng):
    """Draw i.i.d. per-position samples (a, c, x, b, y) from a design.

    Returns a dict of (batch, size) uint8 arrays keyed by axis name.
    """
    p_ac = np.asarray(design.p_ac.probs)
    na, nc = p_ac.shape
    flat_ac = _categorical(p_ac.reshape(-1), (batch, size), rng)
    a, c = np.divmod(flat_ac, nc)

    x = _categorical_rows(np.asarray(design.p_x_given_ac)[a, c], rng)
    b = _categorical_rows(np.asarray(design.channel.rows)[a], rng)
    y = _categorical_rows(np.asarray(design.p_y_given_bc)[b, c], rng)
    out = {"a": a, "c": c, "x": x, "b": b, "y": y}
    return {k: v.astype(np.uint8) for k, v in out.items()}


def _categorical(p, shape, rng):
    cdf = np.cumsum(p)
    u = rng.random(shape)
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(p) - 1)


def _categorical_rows(rows, rng):
    cdf = np.cumsum(rows, axis=-1)
    u = rng.random(rows.shape[:-1] + (1,))
    idx = (u >= cdf).sum(axis=-1)
    return np.minimum(idx, rows.shape[-1] - 1)


def _context_table(design, context):
    """Single-letter joint table P(obs..., target) for one context."""
    layer, obs_names = CONTEXTS[context]
    target = _TARGET_AXIS[layer]
    keep = set(obs_names) | {target}
    joint = _full_joint_tables(design)
    drop = tuple(i for i, name in enumerate(_AXES) if name not in keep)
    table = joint.sum(axis=drop)
    remaining = [name for name in _AXES if name in keep]
    perm = [remaining.index(name) for name in remaining if name != target]
    perm.append(remaining.index(target))
    return np.ascontiguousarray(table.transpose(perm))


def _degenerate_value(design, context):
    """0.0 / 1.0 for an exactly-degenerate context, else None."""
    table = _context_table(design, context)
    target_size = table.shape[-1]
    rows = table.reshape(-1, target_size)
    mass = rows.sum(axis=-1)
    live = rows[mass > _DEGENERACY_TOL]
    peaked = live.max(axis=-1) >= (1.0 - _DEGENERACY_TOL) * live.sum(axis=-1)
    if np.all(peaked):
        return 0.0
    _, obs_names = CONTEXTS[context]
    if not obs_names and target_size == 2:
        prior = rows.sum(axis=0)
        if abs(prior[0] - prior[1]) <= _DEGENERACY_TOL:
            return 1.0
    return None


def estimate_entropy_profile(design, size, thresholds, rng, contexts=None, samples=None):
    """Monte Carlo entropy profile of a design at blocklength ``size``.

    Parameters
    ----------
    design : CoordinationDesign
        Single-letter design; the common and action alphabets must be
        binary (and the output alphabet too, for the synthesis context).
    size : int
        Blocklength N, a power of two.
    thresholds : SetThresholds
        Supplies the Monte Carlo sample count; its ``delta`` is used only
        to flag insufficient resolution.
    rng : numpy.random.Generator
        Source for all sampling.
    contexts : iterable of str, optional
        Subset of :data:`CONTEXTS` to estimate (default: all).
    samples : int, optional
        Override the sample count from ``thresholds``.  Diagnostics that
        deliberately probe below the production floor (to confirm the
        noise-floor verdicts) pass a small count here.

    Returns
    -------
    EntropyProfile
    """
    if size <= 0 or size & (size - 1):
        raise ValueError(f"blocklength must be a power of two, got {size}")
    names = list(CONTEXTS) if contexts is None else list(contexts)
    unknown = [ctx for ctx in names if ctx not in CONTEXTS]
    if unknown:
        raise ValueError(f"unknown contexts {unknown}")

    samples = thresholds.mc_samples if samples is None else int(samples)
    if samples < 1:
        raise ValueError(f"sample count must be positive, got {samples}")
    entropies: dict[str, np.ndarray] = {}
    std_errors: dict[str, np.ndarray] = {}
    mc_names = []
    for ctx in names:
        value = _degenerate_value(design, ctx)
        if value is not None:
            entropies[ctx] = np.full(size, value)
            std_errors[ctx] = np.zeros(size)
        else:
            mc_names.append(ctx)

    if mc_names:
        sums = {ctx: np.zeros(size) for ctx in mc_names}
        sq_sums = {ctx: np.zeros(size) for ctx in mc_names}
        chunk = max(1, min(samples, (1 << 21) // size))
        done = 0
        while done < samples:
            take = min(chunk, samples - done)
            drawn = sample_design(design, take, size, rng)
            for ctx in mc_names:
                layer, obs_names = CONTEXTS[ctx]
                target = _TARGET_AXIS[layer]
                obs = {name: drawn[name] for name in obs_names}
                weights = layer_weights(design, layer, obs, shape=(take, size))
                # float32 halves the bandwidth-bound cost; the per-position
                # estimates are averages of 1e5 draws, far coarser than that
                p_true, _ = genie_pass(weights, drawn[target], dtype=np.float32)
                bits = -np.log2(np.maximum(p_true, 1e-300))
                sums[ctx] += bits.sum(axis=0)
                sq_sums[ctx] += (bits * bits).sum(axis=0)
            done += take
        for ctx in mc_names:
            mean = sums[ctx] / samples
            var = np.maximum(sq_sums[ctx] / samples - mean * mean, 0.0)
            entropies[ctx] = np.clip(mean, 0.0, 1.0)
            std_errors[ctx] = np.sqrt(var / samples)

    worst = max((se.max() for se in std_errors.values()), default=0.0)
    if worst > thresholds.delta / 3:
        warnings.warn(
            f"max standard error {worst:.4f} is large relative to the "
            f"threshold delta={thresholds.delta}; consider more samples",
            RuntimeWarning,
            stacklevel=2,
        )
    ordered = {ctx: entropies[ctx] for ctx in names}
    ordered_se = {ctx: std_errors[ctx] for ctx in names}
    return EntropyProfile(
        n_positions=size,
        mc_samples=samples,
        entropies=ordered,
        std_errors=ordered_se,
    )


def exact_entropy_profile(design, size, context):
    """Exact per-index conditional entropies by full enumeration.

    Enumerates every (symbol vector, observation vector) pair, weights each
    by its joint probability, and averages -log2 of the genie conditionals.
    Only viable for tiny blocks: the pair count 2^N * |obs|^N must stay
    below 2^18.
    """
    if size <= 0 or size & (size - 1):
        raise ValueError(f"blocklength must be a power of two, got {size}")
    table = _context_table(design, context)
    target_size = table.shape[-1]
    if target_size != 2:
        raise ValueError("exact profile requires a binary target")
    obs_sizes = table.shape[:-1]
    n_obs = int(np.prod(obs_sizes, dtype=np.int64)) if obs_sizes else 1
    n_sym = 2**size
    total = n_sym * n_obs**size
    if total > 1 << 18:
        raise ValueError(f"enumeration of {total} pairs is too large")

    sym_all = _all_vectors(2, size)[:, None, :]  # (U, 1, N)
    obs_all = _all_vectors(n_obs, size)[None, :, :]  # (1, O, N)
    flat_table = table.reshape(n_obs, target_size)

    weight = np.ones((n_sym, obs_all.shape[1]))
    for i in range(size):
        weight *= flat_table[obs_all[..., i], sym_all[..., i]]

    sym_b = np.broadcast_to(sym_all, (n_sym, obs_all.shape[1], size)).reshape(-1, size)
    obs_b = np.broadcast_to(obs_all, (n_sym, obs_all.shape[1], size)).reshape(-1, size)
    leaf = flat_table[obs_b]  # (pairs, N, 2)
    p_true, _ = genie_pass(leaf, sym_b)

    w = weight.reshape(-1, 1)
    with np.errstate(divide="ignore"):
        bits = np.where(w > 0, -np.log2(np.maximum(p_true, 1e-300)), 0.0)
    return (w * bits).sum(axis=0)


def _all_vectors(alphabet, length):
    """All ``alphabet**length`` vectors, most significant position first."""
    counts = alphabet**length
    idx = np.arange(counts)
    out = np.empty((counts, length), dtype=np.intp)
    for i in range(length - 1, -1, -1):
        out[:, i] = idx % alphabet
        idx //= alphabet
    return out
