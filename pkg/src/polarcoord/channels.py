"""Discrete memoryless channels: containers, composition, capacity.

A channel is a dense row-stochastic matrix ``rows[a, b] = P(b | a)``.
Capacity is computed with Blahut-Arimoto iterations, stopping on the
classical duality gap: with output marginal q induced by the current
input law p, the per-input divergences D_a = KL(P(.|a) || q) sandwich
capacity between sum_a p_a D_a and max_a D_a.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .probkit import Pmf

__all__ = [
    "Dmc",
    "AdditiveChannel",
    "bsc",
    "additive_dmc",
    "cascade",
    "transmit",
    "capacity",
]

_ROW_TOL = 1e-9


@dataclass(frozen=True)
class Dmc:
    """Discrete memoryless channel with transition rows ``P(b | a)``.

    Parameters
    ----------
    rows : array_like, shape (input_size, output_size)
        Row-stochastic transition matrix; each row sums to one within 1e-9.
    """

    rows: np.ndarray

    def __post_init__(self) -> None:
        rows = np.array(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.size == 0:
            raise ValueError("transition matrix must be 2-D and nonempty")
        if np.any(rows < 0):
            raise ValueError("transition probabilities must be nonnegative")
        sums = rows.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > _ROW_TOL):
            bad = int(np.argmax(np.abs(sums - 1.0)))
            raise ValueError(f"row {bad} sums to {sums[bad]!r}, expected 1")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def input_size(self) -> int:
        return self.rows.shape[0]

    @property
    def output_size(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True)
class AdditiveChannel:
    """Channel ``B = (A + Z) mod q`` with noise ``Z ~ noise``, independent of A."""

    q: int
    noise: Pmf

    def __post_init__(self) -> None:
        if self.q < 2:
            raise ValueError("alphabet size must be at least 2")
        if self.noise.alphabet_size != self.q:
            raise ValueError(
                f"noise alphabet {self.noise.alphabet_size} != modulus {self.q}"
            )


def bsc(p: float) -> Dmc:
    """Binary symmetric channel with crossover probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"crossover probability {p!r} outside [0, 1]")
    return Dmc(np.array([[1 - p, p], [p, 1 - p]]))


def additive_dmc(a: AdditiveChannel) -> Dmc:
    """Dense transition matrix of an additive-noise channel."""
    noise = np.asarray(a.noise.probs)
    shifts = (np.arange(a.q)[None, :] - np.arange(a.q)[:, None]) % a.q
    return Dmc(noise[shifts])


def cascade(first: Dmc, second: Dmc) -> Dmc:
    """Channel obtained by feeding ``first``'s output into ``second``."""
    if first.output_size != second.input_size:
        raise ValueError(
            f"cannot cascade: {first.output_size} outputs into "
            f"{second.input_size} inputs"
        )
    return Dmc(np.asarray(first.rows) @ np.asarray(second.rows))


def transmit(ch: Dmc, seq: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Pass a symbol sequence through the channel, one use per symbol."""
    seq = np.asarray(seq)
    if seq.size and (seq.min() < 0 or seq.max() >= ch.input_size):
        raise ValueError("input symbol outside channel alphabet")
    # Inverse-CDF sampling vectorized over the sequence: one uniform per use.
    cdf = np.cumsum(np.asarray(ch.rows), axis=1)[seq]
    u = rng.random(seq.shape)
    out = (u[..., None] >= cdf).sum(axis=-1)
    return out.astype(np.int64)


def capacity(ch: Dmc, tol: float = 1e-9, max_iters: int = 100_000) -> tuple[float, Pmf]:
    """Channel capacity in bits and a capacity-achieving input law.

    Blahut-Arimoto with uniform initialization; stops when the duality
    gap ``max_a D_a - sum_a p_a D_a`` drops to ``tol`` bits.  Returns the
    lower bound (within ``tol`` of capacity) and the final input pmf.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    w = np.asarray(ch.rows)
    p = np.full(ch.input_size, 1.0 / ch.input_size)
    with np.errstate(divide="ignore", invalid="ignore"):
        w_log_w = np.where(w > 0, w * np.log2(w), 0.0).sum(axis=1)
    for _ in range(max_iters):
        q = p @ w
        with np.errstate(divide="ignore", invalid="ignore"):
            cross = np.where(w > 0, w * np.log2(np.where(q > 0, q, 1.0)), 0.0).sum(axis=1)
        d = w_log_w - cross  # KL(P(.|a) || q) per input, in bits
        lower = float(p @ d)
        upper = float(d.max())
        if upper - lower <= tol:
            return lower, Pmf(p)
        p = p * np.exp2(d - upper)
        p /= p.sum()
    raise RuntimeError(f"no convergence to gap {tol} within {max_iters} iterations")
