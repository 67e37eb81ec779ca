"""Successive-cancellation probability engines over the polar factor graph.

The polarized vector U relates to the physical symbol vector S through the
involutive transform S = U·G.  Both engines below answer the same question —
the conditional law of a single polarized bit given earlier polarized bits
and per-position observations — but in two operating modes:

* :class:`ScSequencer` walks the indices j = 0, 1, ..., N-1 one at a time,
  letting the caller choose each committed bit (draw it, pick the argmax, or
  force a known value).  This is the engine the encoder and decoder run.
* :func:`genie_pass` assumes the *true* realization of U is available (the
  genie) and returns P(U_j = true value | true past, observations) for every
  j in one vectorized sweep.  This is the engine the Monte Carlo entropy
  profiler runs, at O(B·N·log N) total cost.

Observations enter only through per-leaf weight pairs
``w_i(s) = P(S_i = s, obs_i)``; any joint weighting of a binary symbol with
side information can be expressed this way, which is what
:func:`layer_weights` produces for the three layers of a coordination
design.
"""

from __future__ import annotations

import numpy as np

from polarcoord.rate_region import CoordinationDesign

_LAYERS = ("common", "action", "synth")
_AXES = ("a", "c", "x", "b", "y")


def _full_joint_tables(design: CoordinationDesign):
    """Joint table P(a, c, x, b, y) of the single-letter design."""
    p_ac = np.asarray(design.p_ac.probs)
    p_x = np.asarray(design.p_x_given_ac)
    chan = np.asarray(design.channel.rows)
    p_y = np.asarray(design.p_y_given_bc)
    return np.einsum("ac,acx,ab,bcy->acxby", p_ac, p_x, chan, p_y)


def layer_weights(design, layer, observed, shape=None):
    """Per-leaf weight pairs for one polarized layer of a design.

    Parameters
    ----------
    design : CoordinationDesign
        Single-letter design joint; the polarized target must be binary.
    layer : {"common", "action", "synth"}
        Which variable is polarized: the common codeword symbol, the action
        symbol, or the synthesized output symbol.
    observed : dict[str, ndarray]
        Conditioning observations, keyed by axis name among
        ``{"a", "c", "x", "b", "y"}`` (excluding the target itself), each an
        integer array of shape (B, N).  May be empty.
    shape : tuple, optional
        Required (B, N) when ``observed`` is empty, ignored otherwise.

    Returns
    -------
    ndarray
        Array of shape (B, N, 2) with ``w[b, i, s] = P(S_i = s, obs_i)``
        under the design.  Unnormalized; engines normalize as needed.
    """
    if layer not in _LAYERS:
        raise ValueError(f"unknown layer {layer!r}")
    target = {"common": "c", "action": "a", "synth": "y"}[layer]
    if target in observed:
        raise ValueError(f"target axis {target!r} cannot be observed")
    bad = set(observed) - set(_AXES)
    if bad:
        raise ValueError(f"unknown observation axes {sorted(bad)}")

    joint = _full_joint_tables(design)
    if joint.shape[_AXES.index(target)] != 2:
        raise ValueError(f"layer {layer!r} requires a binary alphabet")

    keep = set(observed) | {target}
    drop = tuple(i for i, name in enumerate(_AXES) if name not in keep)
    table = joint.sum(axis=drop)
    remaining = [name for name in _AXES if name in keep]
    obs_names = [name for name in remaining if name != target]
    # reorder so the observation axes lead and the target axis comes last
    perm = [remaining.index(name) for name in obs_names]
    perm.append(remaining.index(target))
    table = np.ascontiguousarray(table.transpose(perm))

    if not obs_names:
        if shape is None:
            raise ValueError("shape required when nothing is observed")
        return np.broadcast_to(table, (*shape, 2)).copy()
    obs_arrays = [np.asarray(observed[name]) for name in obs_names]
    shapes = {arr.shape for arr in obs_arrays}
    if len(shapes) > 1:
        raise ValueError(f"observation shapes differ: {sorted(shapes)}")
    flat = np.ravel_multi_index(tuple(obs_arrays), table.shape[:-1])
    return table.reshape(-1, 2)[flat]


def _check_pair(ps, pt):
    """Distribution of s XOR t from independent pair distributions."""
    p0 = ps[..., 0] * pt[..., 0] + ps[..., 1] * pt[..., 1]
    p1 = ps[..., 1] * pt[..., 0] + ps[..., 0] * pt[..., 1]
    return np.stack([p0, p1], axis=-1)


def _variable_pair(ps, pt, known_even):
    """Distribution of t given the committed even bit s XOR t."""
    flip = known_even[..., None] == 1
    ps_of_t = np.where(flip, ps[..., ::-1], ps)
    return ps_of_t * pt


def _normalized(pair):
    total = pair.sum(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(total > 0, pair / np.where(total > 0, total, 1.0), 0.5)
    return out


class ScSequencer:
    """Sequential successive-cancellation engine over batched blocks.

    Parameters
    ----------
    leaf_weights : ndarray
        Shape (B, N, 2): per-position unnormalized weights
        ``w_i(s) = P(S_i = s, obs_i)``.  N must be a power of two.

    Notes
    -----
    All batch rows advance in lockstep: :meth:`next_prob` returns the (B, 2)
    conditional law of bit j given each row's committed past, and
    :meth:`commit` fixes bit j for every row.  The caller owns the policy
    (random draw, argmax, or known fill); several sequencers fed the same
    commit stream realize several conditioning contexts of one pass.

    The even-index law combines the two child pairs through the check-node
    rule and caches them; the odd-index law reuses the cache through the
    variable-node rule, so a full pass costs O(B·N·log N).
    """

    def __init__(self, leaf_weights):
        w = np.asarray(leaf_weights, dtype=np.float64)
        if w.ndim != 3 or w.shape[-1] != 2:
            raise ValueError(f"leaf weights must be (B, N, 2), got {w.shape}")
        batch, size, _ = w.shape
        if size == 0 or size & (size - 1):
            raise ValueError(f"N must be a power of two, got {size}")
        if np.any(w < 0) or np.any(w.sum(axis=-1) <= 0):
            raise ValueError("leaf weights must be nonnegative with positive sums")
        self._batch = batch
        self._size = size
        self._depth = size.bit_length() - 1
        self._leaf = _normalized(w)
        self._bits = [
            np.zeros((batch, 1 << d, size >> d), dtype=np.uint8)
            for d in range(self._depth + 1)
        ]
        self._cache = [
            np.zeros((batch, 1 << d, 2, 2)) for d in range(self._depth)
        ]
        self._next = 0

    @property
    def position(self):
        return self._next

    @property
    def batch_size(self):
        return self._batch

    @property
    def block_size(self):
        return self._size

    def next_prob(self):
        """Conditional law (B, 2) of the next uncommitted polarized bit."""
        if self._next >= self._size:
            raise RuntimeError("all positions already committed")
        return self._pair(0, 0, self._next)

    def commit(self, bits):
        """Fix the next polarized bit to ``bits`` (shape (B,)) and advance.

        Valid without a preceding :meth:`next_prob` (known fills): the pair
        descent still runs so the per-level caches stay aligned with the
        walk — the odd-index rule reads them back one step later.
        """
        if self._next >= self._size:
            raise RuntimeError("all positions already committed")
        self._pair(0, 0, self._next)
        values = (np.asarray(bits).astype(np.uint8) & 1).reshape(self._batch)
        self._commit(0, 0, self._next, values)
        self._next += 1

    def committed(self):
        """The (B, j) bits committed so far, in index order."""
        return self._bits[0][:, 0, : self._next].copy()

    def leaves(self):
        """After a full pass: the (B, N) physical symbols S = U·G."""
        if self._next < self._size:
            raise RuntimeError("pass incomplete; leaves undefined")
        return self._bits[self._depth][:, :, 0].copy()

    def _pair(self, d, pos, q):
        if d == self._depth:
            return self._leaf[:, pos, :]
        if q % 2 == 0:
            ps = self._pair(d + 1, 2 * pos, q // 2)
            pt = self._pair(d + 1, 2 * pos + 1, q // 2)
            self._cache[d][:, pos, 0] = ps
            self._cache[d][:, pos, 1] = pt
            return _normalized(_check_pair(ps, pt))
        ps = self._cache[d][:, pos, 0]
        pt = self._cache[d][:, pos, 1]
        even = self._bits[d][:, pos, q - 1]
        return _normalized(_variable_pair(ps, pt, even))

    def _commit(self, d, pos, q, values):
        self._bits[d][:, pos, q] = values
        if d == self._depth:
            return
        if q % 2 == 1:
            even = self._bits[d][:, pos, q - 1]
            self._commit(d + 1, 2 * pos, q // 2, even ^ values)
            self._commit(d + 1, 2 * pos + 1, q // 2, values)


def genie_pass(leaf_weights, symbols, dtype=np.float64):
    """Genie-aided conditional probabilities of every polarized bit at once.

    Parameters
    ----------
    leaf_weights : ndarray
        Shape (B, N, 2), as for :class:`ScSequencer`.
    symbols : ndarray
        Shape (B, N): the realized physical symbols S (so U = S·G is the
        realized polarized vector the genie reveals).
    dtype : numpy dtype, optional
        Internal arithmetic dtype.  The pass is memory-bandwidth bound, so
        ``np.float32`` roughly halves its cost; the default keeps full
        precision for exactness checks.

    Returns
    -------
    p_true : ndarray
        Shape (B, N): ``p_true[b, j] = P(U_j = u_j | U^{j-1} = u^{j-1},
        obs)`` evaluated at the realized u, as float64.
    u_true : ndarray
        Shape (B, N): the realized polarized bits, equal to
        ``polar_transform(symbols)``.

    Notes
    -----
    Works bottom-up on the single probability ``p = P(bit = 1)`` per node:
    each level merges adjacent nodes with the check rule at even offsets
    (which preserves normalization exactly) and the variable rule
    (conditioned on the true even bit) at odd offsets.  Along the true
    trajectory each odd-rule normalizer is positive because the realized
    observations have positive likelihood.
    """
    w = np.asarray(leaf_weights, dtype=np.float64)
    s = np.asarray(symbols)
    if w.ndim != 3 or w.shape[-1] != 2:
        raise ValueError(f"leaf weights must be (B, N, 2), got {w.shape}")
    if s.shape != w.shape[:2]:
        raise ValueError(f"symbols shape {s.shape} != batch shape {w.shape[:2]}")
    size = w.shape[1]
    if size == 0 or size & (size - 1):
        raise ValueError(f"N must be a power of two, got {size}")

    total = w.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(total > 0, w[..., 1] / np.where(total > 0, total, 1.0), 0.5)
    p = p[:, :, None].astype(dtype)  # (B, nodes, width): P(node bit = 1)
    bits = (s.astype(np.uint8) & 1)[:, :, None]
    while p.shape[1] > 1:
        ps, pt = p[:, 0::2], p[:, 1::2]
        vs, vt = bits[:, 0::2], bits[:, 1::2]
        even_bits = vs ^ vt
        p_even = ps + pt - 2.0 * ps * pt
        ps_flip = np.where(even_bits == 1, 1.0 - ps, ps)
        num = ps_flip * pt
        den = num + (1.0 - ps_flip) * (1.0 - pt)
        with np.errstate(invalid="ignore", divide="ignore"):
            p_odd = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.5)
        batch, nodes, width = p_even.shape
        merged = np.empty((batch, nodes, 2 * width), dtype=dtype)
        merged[:, :, 0::2] = p_even
        merged[:, :, 1::2] = p_odd
        merged_bits = np.empty((batch, nodes, 2 * width), dtype=np.uint8)
        merged_bits[:, :, 0::2] = even_bits
        merged_bits[:, :, 1::2] = vt
        p, bits = merged, merged_bits

    u_true = bits[:, 0]
    p1 = p[:, 0].astype(np.float64)
    p_true = np.where(u_true == 1, p1, 1.0 - p1)
    return p_true, u_true
