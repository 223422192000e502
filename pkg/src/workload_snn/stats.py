"""Hypothesis tests, effect sizes and the bootstrap used to compare classifiers.

Tail probabilities come from the regularised incomplete gamma and beta
functions in :mod:`scipy.special`; Shapiro-Wilk is scipy's AS R94 port.
"""

from __future__ import annotations

import itertools
import zlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize, special
from scipy import stats as sps

from .errors import InvalidSpecError, RangeError, ShapeError, UnsupportedSizeError

CLIFF_CUTS = (0.147, 0.330, 0.474)
SHAPIRO_MAX_N = 5000


# --------------------------------------------------------------------------- distribution tails


def chi2_sf(x: float, df: float) -> float:
    if df <= 0:
        raise InvalidSpecError("degrees of freedom must be positive")
    if x <= 0:
        return 1.0
    return float(special.gammaincc(0.5 * df, 0.5 * x))


def t_sf(x: float, df: float) -> float:
    """Upper tail of Student's t."""
    if df <= 0:
        raise InvalidSpecError("degrees of freedom must be positive")
    half = 0.5 * float(special.betainc(0.5 * df, 0.5, df / (df + x * x)))
    return half if x >= 0 else 1.0 - half


def f_sf(x: float, d1: float, d2: float) -> float:
    if d1 <= 0 or d2 <= 0:
        raise InvalidSpecError("degrees of freedom must be positive")
    if x <= 0:
        return 1.0
    return float(special.betainc(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * x)))


# --------------------------------------------------------------------------- tests


def _groups(groups, min_size=1) -> list[np.ndarray]:
    out = [np.asarray(g, dtype=float).reshape(-1) for g in groups]
    if len(out) < 2:
        raise ShapeError("need at least two groups")
    if any(g.size < min_size for g in out):
        raise ShapeError(f"every group needs at least {min_size} value(s)")
    if any(not np.isfinite(g).all() for g in out):
        raise RangeError("groups contain non-finite values")
    return out


def shapiro_wilk(samples) -> tuple[float, float]:
    x = np.asarray(samples, dtype=float).reshape(-1)
    if not 3 <= x.size <= SHAPIRO_MAX_N:
        raise UnsupportedSizeError(f"Shapiro-Wilk needs 3..{SHAPIRO_MAX_N} values, got {x.size}")
    if np.ptp(x) == 0:
        # a constant sample is as far from normal as it gets
        return 1.0, 0.0
    res = sps.shapiro(x)
    return min(float(res.statistic), 1.0), float(res.pvalue)


def _tie_term(ranks_source: np.ndarray) -> float:
    _, counts = np.unique(ranks_source, return_counts=True)
    return float(np.sum(counts**3 - counts))


def kruskal_wallis(groups) -> tuple[float, float]:
    """Tie-corrected H statistic with a chi-square(k - 1) p-value."""
    gs = _groups(groups)
    pooled = np.concatenate(gs)
    n = pooled.size
    ties = _tie_term(pooled)
    if ties == n**3 - n:
        return 0.0, 1.0
    ranks = sps.rankdata(pooled)
    edges = np.cumsum([0] + [g.size for g in gs])
    h = 12.0 / (n * (n + 1)) * sum(
        ranks[a:b].sum() ** 2 / (b - a) for a, b in zip(edges[:-1], edges[1:])
    ) - 3.0 * (n + 1)
    h /= 1.0 - ties / (n**3 - n)
    return float(h), chi2_sf(h, len(gs) - 1)


def bonferroni(p: float, n_comparisons: int) -> float:
    return float(min(1.0, p * n_comparisons))


def conover_posthoc(groups, correction: str = "bonferroni") -> np.ndarray:
    """Symmetric matrix of pairwise Conover-Iman p-values (diagonal 1).

    Uses the tie-corrected rank variance and the Kruskal-Wallis H of the same
    groups; p-values are two-sided from t with ``N - k`` degrees of freedom.
    """
    if correction not in ("bonferroni", "none"):
        raise InvalidSpecError(f"unknown correction {correction!r}")
    gs = _groups(groups)
    k = len(gs)
    pooled = np.concatenate(gs)
    n = pooled.size
    if n <= k:
        raise ShapeError("Conover test needs more observations than groups")
    out = np.ones((k, k))
    h, _ = kruskal_wallis(gs)
    ranks = sps.rankdata(pooled)
    if _tie_term(pooled) == n**3 - n:
        return out
    edges = np.cumsum([0] + [g.size for g in gs])
    mean_ranks = [ranks[a:b].mean() for a, b in zip(edges[:-1], edges[1:])]
    s2 = (np.sum(ranks**2) - n * (n + 1) ** 2 / 4.0) / (n - 1)
    spread = s2 * (n - 1 - h) / (n - k)
    m = k * (k - 1) // 2
    for i, j in itertools.combinations(range(k), 2):
        se = np.sqrt(max(spread, 0.0) * (1.0 / gs[i].size + 1.0 / gs[j].size))
        diff = abs(mean_ranks[i] - mean_ranks[j])
        if se == 0:
            p = 1.0 if diff == 0 else 0.0
        else:
            p = min(1.0, 2.0 * t_sf(diff / se, n - k))
        if correction == "bonferroni":
            p = bonferroni(p, m)
        out[i, j] = out[j, i] = p
    return out


def one_way_anova(groups) -> tuple[float, float]:
    gs = _groups(groups, min_size=2)
    k = len(gs)
    n = sum(g.size for g in gs)
    grand = np.concatenate(gs).mean()
    ss_between = sum(g.size * (g.mean() - grand) ** 2 for g in gs)
    ss_within = sum(np.sum((g - g.mean()) ** 2) for g in gs)
    if ss_within == 0:
        return (0.0, 1.0) if ss_between == 0 else (float("inf"), 0.0)
    f = (ss_between / (k - 1)) / (ss_within / (n - k))
    return float(f), f_sf(f, k - 1, n - k)


def cliffs_delta(a, b) -> tuple[float, str]:
    """Dominance effect size over all |a|·|b| pairs, with its magnitude label."""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.size == 0 or b.size == 0:
        raise ShapeError("Cliff's delta needs two nonempty samples")
    diff = a[:, None] - b[None, :]
    more = int(np.count_nonzero(diff > 0))
    less = int(np.count_nonzero(diff < 0))
    delta = (more - less) / (a.size * b.size)
    return delta, cliff_magnitude(delta)


def cliff_magnitude(delta: float) -> str:
    d = abs(delta)
    negligible, small, medium = CLIFF_CUTS
    if d <= negligible:
        return "negligible"
    if d < small:
        return "small"
    if d <= medium:
        return "medium"
    return "large"


# --------------------------------------------------------------------------- bootstrap


@dataclass(frozen=True)
class ModelAccuracySummary:
    model: str
    mean: float
    std: float

    def __post_init__(self):
        if not (0.0 <= self.mean <= 1.0):
            raise RangeError(f"{self.model}: mean accuracy {self.mean} outside [0, 1]")
        if not (self.std >= 0.0 and np.isfinite(self.std)):
            raise RangeError(f"{self.model}: std must be finite and non-negative")


def summary_stream(summary: ModelAccuracySummary, seed: int) -> np.random.Generator:
    """RNG keyed on the seed and the summary's numbers (not its name)."""
    tag = zlib.crc32(f"{summary.mean!r}:{summary.std!r}".encode())
    return np.random.default_rng(np.random.SeedSequence([int(seed), tag]))


def truncated_params(mean: float, std: float, tail_tol: float = 1e-9) -> tuple[float, float]:
    """Location and scale whose [0, 1]-truncated normal has the given mean and std.

    When less than ``tail_tol`` of Normal(mean, std) falls outside [0, 1] the
    inputs are returned unchanged. If no solution is found the literal values
    are kept.
    """
    if std == 0:
        return mean, std
    outside = sps.norm.cdf(0.0, mean, std) + sps.norm.sf(1.0, mean, std)
    if outside < tail_tol:
        return mean, std

    def moments(theta):
        loc, scale = theta[0], np.exp(theta[1])
        a, b = (0.0 - loc) / scale, (1.0 - loc) / scale
        m, v = sps.truncnorm.stats(a, b, loc=loc, scale=scale, moments="mv")
        return [float(m) - mean, float(np.sqrt(v)) - std]

    fit = optimize.least_squares(moments, [mean, np.log(std)], xtol=1e-14, ftol=1e-14, gtol=1e-14)
    if not fit.success or max(abs(r) for r in fit.fun) > 1e-8:
        return mean, std
    return float(fit.x[0]), float(np.exp(fit.x[1]))


def bootstrap_accuracies(summary: ModelAccuracySummary, n: int = 1000, seed: int = 0,
                         match_moments: bool = True) -> np.ndarray:
    """``n`` draws from a normal truncated to [0, 1], in shuffled order.

    Draws are stratified: one uniform per probability slice ``[i/n, (i+1)/n)``
    pushed through the truncated inverse CDF, so the sample moments sit close
    to the target instead of wandering by a standard error. With
    ``match_moments`` the underlying normal is shifted and widened so that the
    truncated distribution keeps the summary's mean and std; otherwise
    Normal(mean, std) is truncated as is, which biases summaries near a bound.
    """
    if n < 1:
        raise InvalidSpecError("bootstrap size must be positive")
    if summary.std == 0:
        return np.full(n, summary.mean)
    loc, scale = (truncated_params(summary.mean, summary.std) if match_moments
                  else (summary.mean, summary.std))
    rng = summary_stream(summary, seed)
    u = (np.arange(n) + rng.random(n)) / n
    a, b = (0.0 - loc) / scale, (1.0 - loc) / scale
    draws = sps.truncnorm.ppf(u, a, b, loc=loc, scale=scale)
    return np.clip(rng.permutation(draws), 0.0, 1.0)


def pairs(names: Sequence[str]):
    return list(itertools.combinations(range(len(names)), 2))
