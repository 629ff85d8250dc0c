"""Eells causal strengths, odds-ratio significance filtering, and value
dependency graph construction from a preference matrix.

For an ordered requirement pair the Eells measure

    eta(i, j) = p(r_i | r_j) - p(r_i | not r_j)

contrasts how often users want r_i when they want r_j against how often they
want r_i while ignoring r_j. Positive eta means r_j's presence supports
r_i's value, negative means it hurts; |eta| is the strength. The conditional
probabilities come from a single tally pass: with u users,

    counts[i, j]     = users wanting both r_i and r_j
    counts[i, j + n] = users wanting r_i while ignoring r_j

so p(r_i | r_j) = counts[i, j] / counts[j, j] and
p(r_i | not r_j) = counts[i, j + n] / (u - counts[j, j]). Pairs without
counterfactual evidence (r_j wanted by all users or by none) get eta = 0 and
are treated as insignificant.

Sampling noise is filtered with the Woolf confidence interval of the odds
ratio

    omega = (p11 * p00) / (p10 * p01),

whose log-scale radius is z' * sqrt(1/n11 + 1/n00 + 1/n10 + 1/n01); a pair
is significant iff the exponentiated interval excludes 1. Zero cells take
the Haldane-Anscombe correction (+0.5 on all four cells). Surviving pairs
map into graph edges with strength membership(|eta|) and quality given by
the sign of eta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dependency_graph import NEGATIVE, POSITIVE, ValueDependencyGraph
from .errors import ValidationError
from .preferences import PreferenceMatrix


@dataclass(frozen=True)
class CausalAnalysis:
    """Tallies and derived matrices for every ordered requirement pair."""

    n: int
    counts: np.ndarray
    cond_pos: np.ndarray
    cond_neg: np.ndarray
    eells: np.ndarray
    user_count: int

    def __post_init__(self) -> None:
        if self.counts.shape != (self.n, 2 * self.n):
            raise ValidationError("count matrix must be n x 2n")
        for name in ("cond_pos", "cond_neg", "eells"):
            if getattr(self, name).shape != (self.n, self.n):
                raise ValidationError(f"{name} must be n x n")
        if self.user_count < 1:
            raise ValidationError("user count must be positive")

    def pair_defined(self, i: int, j: int) -> bool:
        """True when both conditionals of (i, j) exist: r_j was wanted by
        some users and ignored by others."""
        return i != j and 0 < int(self.counts[j, j]) < self.user_count


@dataclass(frozen=True)
class SignificanceConfig:
    z_prime: float = 1.96
    confidence_label: str = "95%"

    def __post_init__(self) -> None:
        if self.z_prime <= 0:
            raise ValidationError("critical value z' must be positive")


@dataclass(frozen=True)
class MembershipConfig:
    lower_cut: float = 0.0
    upper_cut: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.lower_cut <= self.upper_cut <= 1.0:
            raise ValidationError("membership cuts must satisfy 0 <= a <= b <= 1")


def compute_eells(m: PreferenceMatrix) -> CausalAnalysis:
    """One tally pass over the matrix, then element-wise ratios.

    The two count blocks come from matrix products (selected x selected and
    selected x ignored), so the whole analysis is O(k n^2).
    """
    x = m.cells.astype(np.int64)
    k = m.k
    co = x @ x.T
    anti = x @ (1 - x).T
    counts = np.hstack([co, anti])
    wanted = np.diag(co).astype(np.float64)

    pos_ok = wanted > 0
    neg_ok = wanted < k
    cond_pos = np.where(pos_ok[None, :], co / np.where(pos_ok, wanted, 1.0)[None, :], 0.0)
    cond_neg = np.where(neg_ok[None, :], anti / np.where(neg_ok, k - wanted, 1.0)[None, :], 0.0)
    eells = np.where((pos_ok & neg_ok)[None, :], cond_pos - cond_neg, 0.0)
    np.fill_diagonal(eells, 0.0)
    return CausalAnalysis(
        n=m.n, counts=counts, cond_pos=cond_pos, cond_neg=cond_neg, eells=eells, user_count=k
    )


def _contingency(analysis: CausalAnalysis, i: int, j: int) -> tuple[float, float, float, float]:
    """2x2 cell counts for the pair, Haldane-Anscombe corrected when needed."""
    if i == j:
        raise ValidationError("contingency table requires two distinct requirements")
    n = analysis.n
    n11 = float(analysis.counts[i, j])
    n10 = float(analysis.counts[i, j + n])
    n01 = float(analysis.counts[j, i + n])
    n00 = float(analysis.user_count) - n11 - n10 - n01
    if min(n11, n10, n01, n00) == 0.0:
        n11, n10, n01, n00 = n11 + 0.5, n10 + 0.5, n01 + 0.5, n00 + 0.5
    return n11, n10, n01, n00


def odds_ratio(analysis: CausalAnalysis, i: int, j: int) -> float:
    """omega = (n11 * n00) / (n10 * n01); symmetric in (i, j) exactly."""
    n11, n10, n01, n00 = _contingency(analysis, i, j)
    return (n11 * n00) / (n10 * n01)


def significance_test(
    analysis: CausalAnalysis, i: int, j: int, cfg: SignificanceConfig
) -> tuple[float, float, bool]:
    """Woolf interval for omega(i, j); significant iff it excludes 1.

    The radius written as (z'/sqrt(u)) * sqrt(sum of reciprocal joint
    probabilities) equals z' * sqrt(sum of reciprocal cell counts), which is
    what gets computed (the corrected total cancels the same way). Pairs
    without counterfactual evidence are reported insignificant regardless of
    the interval.
    """
    n11, n10, n01, n00 = _contingency(analysis, i, j)
    log_omega = math.log((n11 * n00) / (n10 * n01))
    radius = cfg.z_prime * math.sqrt(1.0 / n11 + 1.0 / n00 + 1.0 / n10 + 1.0 / n01)
    lower = math.exp(log_omega - radius)
    upper = math.exp(log_omega + radius)
    if not analysis.pair_defined(i, j):
        return lower, upper, False
    return lower, upper, not (lower <= 1.0 <= upper)


def membership(eta: float, cfg: MembershipConfig) -> float:
    """Map |eta| through the piecewise-linear membership function.

    With cuts (a, b): 0 at or below a, 1 at or above b, linear in between.
    The defaults (0, 1) reduce to rho = |eta|.
    """
    s = abs(eta)
    if s <= cfg.lower_cut:
        return 0.0
    if s >= cfg.upper_cut:
        return 1.0
    return (s - cfg.lower_cut) / (cfg.upper_cut - cfg.lower_cut)


def build_vdg(
    analysis: CausalAnalysis, sig: SignificanceConfig, mem: MembershipConfig
) -> ValueDependencyGraph:
    """Emit an edge per significant pair with non-zero membership strength.

    Edge (i -> j) states that r_i's value depends on r_j; its quality is the
    sign of eta(i, j). Insignificant pairs and strengths mapped to zero emit
    no edge (absence means strength 0 with non-specified quality).
    """
    edges: dict[tuple[int, int], tuple[float, str]] = {}
    for i in range(analysis.n):
        for j in range(analysis.n):
            if i == j or not analysis.pair_defined(i, j):
                continue
            _, _, significant = significance_test(analysis, i, j, sig)
            if not significant:
                continue
            eta = float(analysis.eells[i, j])
            rho = membership(eta, mem)
            if rho <= 0.0:
                continue
            edges[(i, j)] = (rho, POSITIVE if eta > 0 else NEGATIVE)
    return ValueDependencyGraph(n=analysis.n, edges=edges)
