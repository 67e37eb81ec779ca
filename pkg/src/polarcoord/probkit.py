"""Dense finite-alphabet probability containers and information measures.

Everything here is exact dense-table arithmetic in float64, intended for
the small alphabets of coordination designs (a handful of symbols per
axis, not hundreds).  Entropies and divergences are in bits.

Distributions are immutable after construction and are validated on
construction: probabilities must be nonnegative and sum to one within
1e-9.  Nothing renormalizes silently; call :meth:`Pmf.normalized` /
:meth:`JointPmf.normalized` when that is what you mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Pmf",
    "JointPmf",
    "EmpiricalCounts",
    "binary_entropy",
    "entropy",
    "conditional_entropy",
    "mutual_information",
    "conditional_mutual_information",
    "tv_distance",
    "kl_divergence",
    "sample",
    "empirical_pmf",
]

_SUM_TOL = 1e-9


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.float64)
    out.setflags(write=False)
    return out


def _validate_probs(probs: np.ndarray) -> None:
    if np.any(probs < 0):
        raise ValueError("probabilities must be nonnegative")
    total = float(probs.sum())
    if abs(total - 1.0) > _SUM_TOL:
        raise ValueError(f"probabilities sum to {total!r}, expected 1 within {_SUM_TOL}")


def _entropy_bits(probs: np.ndarray) -> float:
    """Shannon entropy in bits of a (not necessarily 1-D) probability array."""
    p = np.asarray(probs, dtype=np.float64).ravel()
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(p), 0.0)
    return float(-terms.sum())


@dataclass(frozen=True)
class Pmf:
    """Probability mass function on ``{0, ..., alphabet_size - 1}``.

    Parameters
    ----------
    probs : array_like
        Nonnegative weights summing to one within 1e-9.
    """

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = _freeze(self.probs)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("Pmf requires a nonempty 1-D probability vector")
        _validate_probs(probs)
        object.__setattr__(self, "probs", probs)

    @property
    def alphabet_size(self) -> int:
        return self.probs.size

    @classmethod
    def uniform(cls, n: int) -> "Pmf":
        return cls(np.full(n, 1.0 / n))

    def normalized(self) -> "Pmf":
        """Explicitly rescale to sum exactly one (the only sanctioned renormalization)."""
        total = float(np.asarray(self.probs).sum())
        if total <= 0:
            raise ValueError("cannot normalize a zero-mass vector")
        return Pmf(np.asarray(self.probs) / total)


@dataclass(frozen=True)
class JointPmf:
    """Joint pmf over named axes, stored as one dense array.

    Parameters
    ----------
    axes : sequence of str
        One name per array dimension, all distinct (e.g. ``("x", "y")``).
    probs : array_like
        Dense joint table, ``probs.ndim == len(axes)``, summing to one.
    """

    axes: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self) -> None:
        axes = tuple(self.axes)
        if len(set(axes)) != len(axes):
            raise ValueError(f"duplicate axis names in {axes!r}")
        probs = _freeze(self.probs)
        if probs.ndim != len(axes):
            raise ValueError(
                f"table has {probs.ndim} dimensions but {len(axes)} axis names were given"
            )
        _validate_probs(probs)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "probs", probs)

    def axis_index(self, name: str) -> int:
        try:
            return self.axes.index(name)
        except ValueError:
            raise KeyError(f"no axis {name!r}; have {self.axes!r}") from None

    def _resolve(self, names: str | Iterable[str]) -> tuple[int, ...]:
        if isinstance(names, str):
            names = (names,)
        idx = tuple(self.axis_index(n) for n in names)
        if len(set(idx)) != len(idx):
            raise ValueError(f"repeated axis in {tuple(names)!r}")
        return idx

    def marginal(self, names: str | Iterable[str]) -> "JointPmf":
        """Marginal over the named axes, in their original axis order."""
        keep = sorted(self._resolve(names))
        drop = tuple(i for i in range(self.probs.ndim) if i not in keep)
        table = self.probs.sum(axis=drop) if drop else self.probs
        return JointPmf(tuple(self.axes[i] for i in keep), table)

    def as_pmf(self) -> Pmf:
        if len(self.axes) != 1:
            raise ValueError(f"need exactly one axis to view as Pmf, have {self.axes!r}")
        return Pmf(self.probs)

    def normalized(self) -> "JointPmf":
        total = float(np.asarray(self.probs).sum())
        if total <= 0:
            raise ValueError("cannot normalize a zero-mass table")
        return JointPmf(self.axes, np.asarray(self.probs) / total)


@dataclass(frozen=True)
class EmpiricalCounts:
    """Raw occurrence counts over named axes (same layout as JointPmf)."""

    axes: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self) -> None:
        axes = tuple(self.axes)
        counts = np.array(self.counts, dtype=np.int64)
        if counts.ndim != len(axes):
            raise ValueError("counts dimensionality does not match axis names")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        counts.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def from_samples(
        cls,
        axes: Sequence[str],
        samples: Sequence[np.ndarray],
        sizes: Sequence[int],
    ) -> "EmpiricalCounts":
        """Tally aligned sample arrays (one array of symbol indices per axis)."""
        if len(axes) != len(samples) or len(axes) != len(sizes):
            raise ValueError("axes, samples and sizes must align")
        flat = np.ravel_multi_index(
            tuple(np.asarray(s).ravel() for s in samples), tuple(sizes)
        )
        counts = np.bincount(flat, minlength=int(np.prod(sizes))).reshape(tuple(sizes))
        return cls(tuple(axes), counts)


def binary_entropy(p: float) -> float:
    """h2(p) in bits; exact 0 at the endpoints."""
    if p < 0 or p > 1:
        raise ValueError(f"p={p!r} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def entropy(p: Pmf | JointPmf) -> float:
    """Shannon entropy in bits."""
    return _entropy_bits(p.probs)


def conditional_entropy(
    j: JointPmf,
    target: str | Iterable[str],
    given: str | Iterable[str],
) -> float:
    """H(target | given) in bits, via H(target, given) - H(given)."""
    t = j._resolve(target)
    g = j._resolve(given)
    if set(t) & set(g):
        raise ValueError("target and given axes overlap")
    names_tg = tuple(j.axes[i] for i in sorted(t + g))
    names_g = tuple(j.axes[i] for i in sorted(g))
    h_tg = _entropy_bits(j.marginal(names_tg).probs)
    h_g = _entropy_bits(j.marginal(names_g).probs) if names_g else 0.0
    return h_tg - h_g


def mutual_information(
    j: JointPmf,
    left: str | Iterable[str],
    right: str | Iterable[str],
) -> float:
    """I(left ; right) in bits."""
    l = j._resolve(left)
    r = j._resolve(right)
    if set(l) & set(r):
        raise ValueError("left and right axes overlap")
    names = lambda idx: tuple(j.axes[i] for i in sorted(idx))
    h_l = _entropy_bits(j.marginal(names(l)).probs)
    h_r = _entropy_bits(j.marginal(names(r)).probs)
    h_lr = _entropy_bits(j.marginal(names(l + r)).probs)
    return h_l + h_r - h_lr


def conditional_mutual_information(
    j: JointPmf,
    left: str | Iterable[str],
    right: str | Iterable[str],
    given: str | Iterable[str],
) -> float:
    """I(left ; right | given) in bits."""
    l = j._resolve(left)
    r = j._resolve(right)
    g = j._resolve(given)
    if (set(l) & set(r)) or (set(l) & set(g)) or (set(r) & set(g)):
        raise ValueError("axis groups overlap")
    names = lambda idx: tuple(j.axes[i] for i in sorted(idx))
    h_lg = _entropy_bits(j.marginal(names(l + g)).probs)
    h_rg = _entropy_bits(j.marginal(names(r + g)).probs)
    h_lrg = _entropy_bits(j.marginal(names(l + r + g)).probs)
    h_g = _entropy_bits(j.marginal(names(g)).probs) if g else 0.0
    return h_lg + h_rg - h_lrg - h_g


def _paired_tables(p: Pmf | JointPmf, q: Pmf | JointPmf) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(p, JointPmf) != isinstance(q, JointPmf):
        raise ValueError("cannot mix Pmf and JointPmf")
    if isinstance(p, JointPmf) and p.axes != q.axes:
        raise ValueError(f"axis mismatch: {p.axes!r} vs {q.axes!r}")
    if p.probs.shape != q.probs.shape:
        raise ValueError(f"shape mismatch: {p.probs.shape} vs {q.probs.shape}")
    return p.probs, q.probs


def tv_distance(p: Pmf | JointPmf, q: Pmf | JointPmf) -> float:
    """Total variation distance, 0.5 * L1."""
    a, b = _paired_tables(p, q)
    return float(0.5 * np.abs(a - b).sum())


def kl_divergence(p: Pmf | JointPmf, q: Pmf | JointPmf) -> float:
    """D(p || q) in bits; +inf when p puts mass where q has none."""
    a, b = _paired_tables(p, q)
    a = a.ravel()
    b = b.ravel()
    support = a > 0
    if np.any(b[support] == 0):
        return float("inf")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(support, a * np.log2(np.where(support, a / np.where(b > 0, b, 1.0), 1.0)), 0.0)
    return float(terms.sum())


def sample(p: Pmf, rng: np.random.Generator, size: int | None = None):
    """Draw symbol indices from ``p`` (an int when ``size`` is None)."""
    out = rng.choice(p.alphabet_size, size=size, p=np.asarray(p.probs))
    return int(out) if size is None else out


def empirical_pmf(c: EmpiricalCounts) -> JointPmf:
    """Normalized counts as a JointPmf (requires a positive total)."""
    total = c.total
    if total == 0:
        raise ValueError("no samples to normalize")
    return JointPmf(c.axes, np.asarray(c.counts, dtype=np.float64) / total)
