"""Achievable-rate regions for coordinating two nodes over a noisy link.

Two nodes must produce action sequences whose joint law is close in total
variation to an i.i.d. target: the first node observes its actions X and
talks to the second through a noisy channel; the second must synthesize Y.
Five resources are tracked per action: shared common randomness ``r_o``,
communication ``r_c``, a satellite codebook rate ``r_a`` layered on the
channel input, and private randomness ``rho_1`` / ``rho_2`` at the two
nodes.

The module provides

* the *joint* region, where one code performs coordination and channel
  coding together (strict inequalities; a verdict carries signed slacks),
* the *separate* region, where a coordination code is glued to an ordinary
  channel code through an auxiliary variable U with X - U - Y, optionally
  crediting randomness extracted from recovered channel noise,
* two closed-form special cases (target a function of X; deterministic
  channel), and
* the binary-symmetric worked example: a grid optimizer for its minimum
  randomness sum rate, the separate baseline in closed form, the crossover
  point where the two schemes part ways, and sweep curves for plotting.

All rates and entropies are in bits per action.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .channels import Dmc, bsc, capacity
from .probkit import (
    JointPmf,
    Pmf,
    binary_entropy,
    conditional_entropy,
    conditional_mutual_information,
    mutual_information,
)

__all__ = [
    "FeasibilityError",
    "RateTuple",
    "InfoQuantities",
    "RegionVerdict",
    "CoordinationDesign",
    "AuxChain",
    "SumRateOptimum",
    "SweepPoint",
    "info_quantities",
    "check_joint_region",
    "check_separate_region",
    "special_case_function_of_x",
    "special_case_deterministic_channel",
    "bsc_example_design",
    "optimize_joint_sum_rate",
    "separate_sum_rate",
    "crossover_po",
    "sweep_curves",
]

_COND_TOL = 1e-9


class FeasibilityError(ValueError):
    """Raised when a requested operating point has an empty feasible set."""


@dataclass(frozen=True)
class RateTuple:
    """Resource rates in bits per action."""

    r_o: float
    r_c: float
    r_a: float
    rho_1: float
    rho_2: float


@dataclass(frozen=True)
class InfoQuantities:
    """The six information quantities appearing in the joint region."""

    i_xy_ac: float
    i_xy_c: float
    i_x_ac: float
    i_x_c: float
    i_b_c: float
    h_y_given_bc: float


@dataclass(frozen=True)
class RegionVerdict:
    """Feasibility verdict with per-constraint signed slacks (bits).

    A slack is how far the constraint is inside its bound; feasible means
    every strict constraint has slack > 0 and every non-strict one
    slack >= 0.
    """

    feasible: bool
    slacks: dict[str, float]


def _check_conditional(table: np.ndarray, name: str, ndim: int) -> np.ndarray:
    table = np.array(table, dtype=np.float64)
    if table.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-D, got {table.ndim}-D")
    if np.any(table < 0):
        raise ValueError(f"{name} has negative entries")
    sums = table.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > _COND_TOL):
        raise ValueError(f"{name} rows must sum to 1 within {_COND_TOL}")
    table.setflags(write=False)
    return table


@dataclass(frozen=True)
class CoordinationDesign:
    """A complete joint-scheme design.

    Factorization, with the channel sitting between the nodes:
    ``P(x,y,a,b,c) = P(a,c) P(x|a,c) P(b|a) P(y|b,c)``.

    Parameters
    ----------
    p_ac : JointPmf
        Law of the channel input A and the common layer C, axes ("a", "c").
    p_x_given_ac : ndarray, shape (|A|, |C|, |X|)
        Action synthesis at the first node.
    channel : Dmc
        The noisy link P(b|a).
    p_y_given_bc : ndarray, shape (|B|, |C|, |Y|)
        Action synthesis at the second node.
    target_q_xy : JointPmf
        The i.i.d. coordination target, axes ("x", "y").  The induced
        (X, Y) marginal must match it within 1e-9 per entry.
    """

    p_ac: JointPmf
    p_x_given_ac: np.ndarray
    channel: Dmc
    p_y_given_bc: np.ndarray
    target_q_xy: JointPmf

    def __post_init__(self) -> None:
        if self.p_ac.axes != ("a", "c"):
            raise ValueError(f'p_ac axes must be ("a", "c"), got {self.p_ac.axes!r}')
        if self.target_q_xy.axes != ("x", "y"):
            raise ValueError(
                f'target_q_xy axes must be ("x", "y"), got {self.target_q_xy.axes!r}'
            )
        x_tab = _check_conditional(self.p_x_given_ac, "p_x_given_ac", 3)
        y_tab = _check_conditional(self.p_y_given_bc, "p_y_given_bc", 3)
        na, nc = self.p_ac.probs.shape
        if x_tab.shape[:2] != (na, nc):
            raise ValueError("p_x_given_ac leading axes must match p_ac")
        if self.channel.input_size != na:
            raise ValueError("channel input alphabet must match |A|")
        if y_tab.shape[:2] != (self.channel.output_size, nc):
            raise ValueError("p_y_given_bc leading axes must be (|B|, |C|)")
        object.__setattr__(self, "p_x_given_ac", x_tab)
        object.__setattr__(self, "p_y_given_bc", y_tab)
        induced = self.full_joint().marginal(("x", "y")).probs
        err = float(np.abs(induced - self.target_q_xy.probs).max())
        if err > _COND_TOL:
            raise ValueError(
                f"induced (X,Y) law deviates from target by {err:.3e} (> {_COND_TOL})"
            )

    def full_joint(self) -> JointPmf:
        """Dense joint over axes ("x", "y", "a", "b", "c")."""
        table = np.einsum(
            "ac,acx,ab,bcy->xyabc",
            np.asarray(self.p_ac.probs),
            np.asarray(self.p_x_given_ac),
            np.asarray(self.channel.rows),
            np.asarray(self.p_y_given_bc),
        )
        return JointPmf(("x", "y", "a", "b", "c"), table)


def info_quantities(d: CoordinationDesign) -> InfoQuantities:
    """The six joint-region quantities of a design, in bits."""
    j = d.full_joint()
    return InfoQuantities(
        i_xy_ac=mutual_information(j, ("x", "y"), ("a", "c")),
        i_xy_c=mutual_information(j, ("x", "y"), "c"),
        i_x_ac=mutual_information(j, "x", ("a", "c")),
        i_x_c=mutual_information(j, "x", "c"),
        i_b_c=mutual_information(j, "b", "c"),
        h_y_given_bc=conditional_entropy(j, "y", ("b", "c")),
    )


def check_joint_region(
    d: CoordinationDesign | InfoQuantities, r: RateTuple
) -> RegionVerdict:
    """Check the joint-scheme constraints (all strict) at rate point ``r``."""
    q = d if isinstance(d, InfoQuantities) else info_quantities(d)
    slacks = {
        "total_info": r.r_a + r.r_o + r.r_c - q.i_xy_ac,
        "common_info": r.r_o + r.r_c - q.i_xy_c,
        "satellite_info": r.r_a + r.r_c - q.i_x_ac,
        "channel_floor": r.r_c - q.i_x_c,
        "channel_ceiling": q.i_b_c - r.r_c,
        "encoder_randomness": r.rho_1 - (r.r_a + r.r_c - q.i_x_ac),
        "decoder_randomness": r.rho_2 - q.h_y_given_bc,
    }
    return RegionVerdict(all(v > 0 for v in slacks.values()), slacks)


@dataclass(frozen=True)
class AuxChain:
    """Auxiliary split X - U - Y used by the separate scheme.

    Parameters
    ----------
    p_aux : Pmf
        Law of the auxiliary variable U.
    p_x_given_aux, p_y_given_aux : ndarray, shape (|U|, |X|) / (|U|, |Y|)
        The two conditional legs; X and Y are independent given U.
    """

    p_aux: Pmf
    p_x_given_aux: np.ndarray
    p_y_given_aux: np.ndarray

    def __post_init__(self) -> None:
        x_tab = _check_conditional(self.p_x_given_aux, "p_x_given_aux", 2)
        y_tab = _check_conditional(self.p_y_given_aux, "p_y_given_aux", 2)
        nu = self.p_aux.alphabet_size
        if x_tab.shape[0] != nu or y_tab.shape[0] != nu:
            raise ValueError("conditional tables must have |U| rows")
        object.__setattr__(self, "p_x_given_aux", x_tab)
        object.__setattr__(self, "p_y_given_aux", y_tab)

    def joint(self) -> JointPmf:
        table = np.einsum(
            "u,ux,uy->uxy",
            np.asarray(self.p_aux.probs),
            np.asarray(self.p_x_given_aux),
            np.asarray(self.p_y_given_aux),
        )
        return JointPmf(("u", "x", "y"), table)


def check_separate_region(
    u_chain: AuxChain, ch: Dmc, noise_entropy: float, r: RateTuple
) -> RegionVerdict:
    """Check the separate-scheme constraints at rate point ``r``.

    The communication rate must stay strictly below channel capacity (the
    channel code needs an operating margin); the remaining constraints are
    non-strict.  ``noise_entropy`` is the per-use entropy of the channel
    noise the decoder can recover and feed to an extractor; pass 0 for the
    no-extraction baseline.
    """
    j = u_chain.joint()
    i_xy_u = mutual_information(j, ("x", "y"), "u")
    i_x_u = mutual_information(j, "x", "u")
    h_y_u = conditional_entropy(j, "y", "u")
    cap, _ = capacity(ch)
    slacks = {
        "message_info": r.r_c + r.r_o - i_xy_u,
        "channel_floor": r.r_c - i_x_u,
        "capacity_ceiling": cap - r.r_c,
        "encoder_randomness": r.rho_1 - (r.r_c - i_x_u),
        "decoder_randomness": r.rho_2 - max(0.0, h_y_u - noise_entropy),
    }
    feasible = (
        slacks["capacity_ceiling"] > 0
        and all(v >= 0 for k, v in slacks.items() if k != "capacity_ceiling")
    )
    return RegionVerdict(feasible, slacks)


def special_case_function_of_x(h_y: float, ch: Dmc) -> RegionVerdict:
    """Feasibility when the target Y is a deterministic function of X.

    The whole region collapses to one strict constraint: H(Y) below
    channel capacity.
    """
    if h_y < 0:
        raise ValueError("entropy cannot be negative")
    cap, _ = capacity(ch)
    slack = cap - h_y
    return RegionVerdict(slack > 0, {"capacity_margin": slack})


def special_case_deterministic_channel(
    u_chain: AuxChain, ch: Dmc, r: RateTuple
) -> RegionVerdict:
    """Separate-style region when the channel is deterministic (noise-free).

    Capacity is ``log2`` of the number of reachable outputs; the decoder's
    randomness must cover all of H(Y|U) since no channel noise exists to
    extract from.
    """
    rows = np.asarray(ch.rows)
    if not np.all((np.abs(rows) < 1e-12) | (np.abs(rows - 1.0) < 1e-12)):
        raise ValueError("channel is not deterministic")
    reachable = np.unique(np.argmax(rows, axis=1)).size
    cap = float(np.log2(reachable))
    j = u_chain.joint()
    i_xy_u = mutual_information(j, ("x", "y"), "u")
    i_x_u = mutual_information(j, "x", "u")
    h_y_u = conditional_entropy(j, "y", "u")
    slacks = {
        "message_info": r.r_c + r.r_o - i_xy_u,
        "channel_floor": r.r_c - i_x_u,
        "capacity_ceiling": cap - r.r_c,
        "encoder_randomness": r.rho_1 - (r.r_c - i_x_u),
        "decoder_randomness": r.rho_2 - h_y_u,
    }
    return RegionVerdict(all(v >= 0 for v in slacks.values()), slacks)


# ---- the binary-symmetric worked example ------------------------------------


def bsc_example_design(
    p1: float, alpha: float, beta: float, p_o: float
) -> CoordinationDesign:
    """The worked binary design: C = A uniform, X = C + Bern(p1), noisy link
    BSC(p_o), and Y = C flipped with probability ``alpha`` when the link was
    clean and ``beta`` when it flipped.

    The induced target is X-Y through an effective BSC(p) with
    ``p = p1 + p2 - 2 p1 p2`` and ``p2 = (1-p_o) alpha + p_o beta``.
    """
    for name, v in (("p1", p1), ("alpha", alpha), ("beta", beta), ("p_o", p_o)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name}={v!r} outside [0, 1]")
    p_ac = JointPmf(("a", "c"), np.array([[0.5, 0.0], [0.0, 0.5]]))
    x_rows = bsc(p1).rows
    p_x_given_ac = np.stack([np.asarray(x_rows)] * 2, axis=0)  # X depends on c only
    p_y_given_bc = np.empty((2, 2, 2))
    for b in range(2):
        for c in range(2):
            flip = alpha if b == c else beta
            p_y_given_bc[b, c, c] = 1 - flip
            p_y_given_bc[b, c, 1 - c] = flip
    p2 = (1 - p_o) * alpha + p_o * beta
    p = p1 + p2 - 2 * p1 * p2
    target = JointPmf(
        ("x", "y"), np.array([[(1 - p) / 2, p / 2], [p / 2, (1 - p) / 2]])
    )
    return CoordinationDesign(p_ac, p_x_given_ac, bsc(p_o), p_y_given_bc, target)


def _h2_arr(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    inside = (x > 0) & (x < 1)
    xi = x[inside]
    out[inside] = -xi * np.log2(xi) - (1 - xi) * np.log2(1 - xi)
    return out


@dataclass(frozen=True)
class SumRateOptimum:
    """Grid-search optimum of the joint randomness sum rate."""

    min_sum: float
    p2: float
    alpha: float
    beta: float
    p1: float
    r_c: float


def optimize_joint_sum_rate(
    p: float, p_o: float, grid_step: float = 1e-3
) -> SumRateOptimum:
    """Minimize the joint scheme's randomness sum for the binary example.

    Grid search over (alpha, beta) in [0,1]^2 at ``grid_step``; each point
    induces p2 = (1-p_o) alpha + p_o beta and p1 = (p-p2)/(1-2 p2), and is
    feasible when p1 is a probability with h2(p1) > h2(p_o) (a nonempty
    communication-rate window).  The objective is
    ``h2(p) - h2(p2) + (1-p_o) h2(alpha) + p_o h2(beta)``; the communication
    rate at the optimum is ``1 - h2(p1)``.

    Raises
    ------
    FeasibilityError
        If no grid point is feasible (the binary-C joint scheme cannot
        operate, e.g. p_o >= p).
    """
    if not 0.0 <= p <= 0.5:
        raise ValueError(f"p={p!r} outside [0, 0.5]")
    if not 0.0 <= p_o < 0.5:
        raise ValueError(f"p_o={p_o!r} outside [0, 0.5)")
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    n = int(round(1.0 / grid_step)) + 1
    grid = np.linspace(0.0, 1.0, n)
    a = grid[:, None]
    b = grid[None, :]
    p2 = (1 - p_o) * a + p_o * b
    denom = 1 - 2 * p2
    with np.errstate(divide="ignore", invalid="ignore"):
        p1 = np.where(denom != 0, (p - p2) / np.where(denom != 0, denom, 1.0), np.nan)
    feasible = (denom != 0) & (p1 >= 0) & (p1 <= 1) & (_h2_arr(p1) > binary_entropy(p_o))
    if not feasible.any():
        raise FeasibilityError(
            f"empty feasible set for joint binary design at p={p}, p_o={p_o}"
        )
    obj = (
        binary_entropy(p)
        - _h2_arr(p2)
        + (1 - p_o) * _h2_arr(a)
        + p_o * _h2_arr(b)
    )
    obj = np.where(feasible, obj, np.inf)
    i, j = np.unravel_index(int(np.argmin(obj)), obj.shape)
    p1_opt = float(p1[i, j])
    return SumRateOptimum(
        min_sum=float(obj[i, j]),
        p2=float(p2[i, j]),
        alpha=float(grid[i]),
        beta=float(grid[j]),
        p1=p1_opt,
        r_c=1.0 - binary_entropy(p1_opt),
    )


def separate_sum_rate(p: float, p_o: float) -> float:
    """Separate-scheme randomness sum with extraction credit, closed form.

    Operating point: p1 = p_o (communication pinned at capacity) and
    p2 = (p - p_o)/(1 - 2 p_o); the sum is
    ``h2(p) - min(h2(p2), h2(p_o))``.

    Raises
    ------
    FeasibilityError
        If p_o > p (p2 would be negative: the channel is too noisy for the
        binary auxiliary chain) or p_o >= 0.5.
    """
    if not 0.0 <= p <= 0.5:
        raise ValueError(f"p={p!r} outside [0, 0.5]")
    if p_o >= 0.5:
        raise FeasibilityError("p_o >= 0.5 is degenerate (zero-capacity link)")
    if p_o > p:
        raise FeasibilityError(
            f"separate binary chain infeasible: p_o={p_o} exceeds target flip p={p}"
        )
    p2 = (p - p_o) / (1 - 2 * p_o)
    return binary_entropy(p) - min(binary_entropy(p2), binary_entropy(p_o))


def crossover_po(p: float) -> float:
    """Channel-noise level where joint and separate sum rates part ways."""
    if not 0.0 <= p <= 0.5:
        raise ValueError(f"p={p!r} outside [0, 0.5]")
    return (1.0 - sqrt(1.0 - 2.0 * p)) / 2.0


@dataclass(frozen=True)
class SweepPoint:
    """One sweep row; infeasible entries are nan, schema stays fixed."""

    p_o: float
    joint_sum: float
    sep_ext_sum: float
    sep_noext_sum: float
    joint_rc: float
    sep_rc: float
    crossover_flag: int


def sweep_curves(
    p: float, p_o_grid: np.ndarray, grid_step: float = 1e-3
) -> list[SweepPoint]:
    """Evaluate both schemes across a p_o grid (deterministic, no RNG).

    ``sep_noext_sum`` is the no-extraction baseline h2(p) (the decoder pays
    the full synthesis entropy); ``sep_rc`` is the capacity 1 - h2(p_o);
    ``crossover_flag`` marks grid points beyond the analytic crossover.
    """
    rows = []
    threshold = crossover_po(p)
    for p_o in np.asarray(p_o_grid, dtype=np.float64):
        p_o = float(p_o)
        try:
            opt = optimize_joint_sum_rate(p, p_o, grid_step)
            joint_sum, joint_rc = opt.min_sum, opt.r_c
        except FeasibilityError:
            joint_sum = joint_rc = float("nan")
        try:
            sep_ext = separate_sum_rate(p, p_o)
            sep_noext = binary_entropy(p)
        except FeasibilityError:
            sep_ext = sep_noext = float("nan")
        rows.append(
            SweepPoint(
                p_o=p_o,
                joint_sum=joint_sum,
                sep_ext_sum=sep_ext,
                sep_noext_sum=sep_noext,
                joint_rc=joint_rc,
                sep_rc=1.0 - binary_entropy(p_o),
                crossover_flag=int(p_o > threshold),
            )
        )
    return rows
