"""Shared test utilities: brute-force oracles and design generators."""

import numpy as np

from polarcoord.channels import Dmc
from polarcoord.polar.transform import polar_transform
from polarcoord.probkit import JointPmf
from polarcoord.rate_region import CoordinationDesign

EXAMPLE_PARAMS = dict(p1=0.375, alpha=0.0, beta=1.0, p_o=0.1)


def all_bit_vectors(length):
    """(2**length, length) array of all bit vectors, index 0 first."""
    idx = np.arange(2**length)[:, None]
    return ((idx >> np.arange(length)[None, ::-1]) & 1).astype(np.uint8)


def enumeration_posterior(leaf_weights, past):
    """Exact P(U_j | U^{j-1}=past, obs) by enumerating all polarized vectors.

    ``leaf_weights`` is (N, 2); ``past`` is the committed prefix, and the
    returned pair is for index ``len(past)``.
    """
    leaf_weights = np.asarray(leaf_weights, dtype=float)
    size = leaf_weights.shape[0]
    j = len(past)
    u_all = all_bit_vectors(size)
    syms = polar_transform(u_all)
    w = leaf_weights[np.arange(size)[None, :], syms].prod(axis=-1)
    keep = np.ones(len(u_all), dtype=bool)
    if j:
        keep = np.all(u_all[:, :j] == np.asarray(past, dtype=np.uint8), axis=-1)
    p0 = w[keep & (u_all[:, j] == 0)].sum()
    p1 = w[keep & (u_all[:, j] == 1)].sum()
    total = p0 + p1
    if total == 0:
        return np.array([0.5, 0.5])
    return np.array([p0, p1]) / total


def random_design(rng, floor=0.05):
    """A random all-binary coordination design with bounded-away-from-zero
    probabilities (keeps every SC conditional well defined)."""
    p_ac = rng.random((2, 2)) + floor
    p_ac /= p_ac.sum()
    p_x = rng.random((2, 2, 2)) + floor
    p_x /= p_x.sum(axis=-1, keepdims=True)
    chan = rng.random((2, 2)) + floor
    chan /= chan.sum(axis=-1, keepdims=True)
    p_y = rng.random((2, 2, 2)) + floor
    p_y /= p_y.sum(axis=-1, keepdims=True)
    target = np.einsum("ac,acx,ab,bcy->xy", p_ac, p_x, chan, p_y)
    return CoordinationDesign(
        p_ac=JointPmf(("a", "c"), p_ac),
        p_x_given_ac=p_x,
        channel=Dmc(chan),
        p_y_given_bc=p_y,
        target_q_xy=JointPmf(("x", "y"), target),
    )


def make_sets(
    size,
    f1=0,
    f2=0,
    hidden_fresh=0,
    hidden_reused=0,
    carry=0,
    info=0,
    act_shared=0,
    act_local=0,
    act_input=0,
    synth=0,
    uniform_action=True,
    delta=0.1,
):
    """Hand-built PolarSets with contiguous index ranges per class.

    The common layer is laid out [f1 | f2 | hidden_fresh | hidden_reused |
    carry | info | leftover]; the action layer [shared | local | input |
    from-common...] (or fully unpolarized when ``uniform_action`` is
    False); the synthesis-uniform set takes the last ``synth`` indices.
    Entropy values are synthetic: the derived sets need not describe any
    real design, which is exactly what structural codec tests want.
    """
    from polarcoord.polar import EntropyProfile, SetThresholds, derive_sets
    from polarcoord.polar.profile import CONTEXTS

    used = f1 + f2 + hidden_fresh + hidden_reused + carry + info
    if used > size:
        raise ValueError("common-layer classes exceed the block")
    lo, hi = 0.05, 0.95

    def span(start, count):
        out = np.full(size, lo)
        out[start : start + count] = hi
        return out, start + count

    ent = {ctx: np.full(size, lo) for ctx in CONTEXTS}
    ent["c"] = np.ones(size)
    ent["c"][used:] = 0.3  # leftover cell: compressible, undecodable

    cx = np.full(size, lo)
    cx[: f1 + f2 + hidden_fresh + hidden_reused] = hi
    ent["c|x"] = cx
    cxy = np.full(size, lo)
    cxy[f1 : f1 + f2] = hi
    ent["c|xy"] = cxy
    cb = np.full(size, lo)
    cb[f1 + f2 : used - info] = hi
    ent["c|b"] = cb
    cbx = np.full(size, lo)
    cbx[f1 + f2 : f1 + f2 + hidden_fresh + hidden_reused] = hi
    ent["c|bx"] = cbx
    cbxy = np.full(size, lo)
    cbxy[f1 + f2 + hidden_fresh : f1 + f2 + hidden_fresh + hidden_reused] = hi
    ent["c|bxy"] = cbxy

    if uniform_action:
        ent["a"] = np.ones(size)
        ent["a|c"], stop = span(0, act_shared + act_local + act_input)
        ent["a|cx"], _ = span(0, act_shared + act_local)
        ent["a|cxy"], _ = span(0, act_shared)
    elif act_shared or act_local or act_input:
        raise ValueError("action classes need uniform_action=True")

    ybc = np.full(size, lo)
    if synth:
        ybc[size - synth :] = hi
    ent["y|bc"] = ybc

    profile = EntropyProfile(
        n_positions=size,
        mc_samples=1_000,
        entropies=ent,
        std_errors={ctx: np.zeros(size) for ctx in CONTEXTS},
    )
    return derive_sets(profile, SetThresholds(delta=delta))
