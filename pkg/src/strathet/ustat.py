"""Pairwise four-sample U-statistics comparing treatment effects of two strata.

For strata ``p < q`` the kernel compares a within-stratum treatment-control
difference in ``p`` with one in ``q``::

    phi = 1{yt_p - yc_p < yt_q - yc_q} + 1/2 * 1{yt_p - yc_p == yt_q - yc_q}

``U(p, q)`` averages ``phi`` over all quadruples (exact mode) or over ``M``
random quadruples (sampled mode). Alongside ``U`` every estimator returns the
per-subject projection estimates ``h`` (the mean of ``phi`` with one subject
held fixed), which feed the covariance estimate of the U vector.

Ties are decided by exact floating point equality of the two differences.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .data import CONTROL, TREATMENT, EstimatorMode, PairIndex, StratifiedDataset, TestConfig
from .errors import CountOverflow, CoverageFailed, DegenerateGroup
from .numerics import SeededStream

_INT64_MAX = np.iinfo(np.int64).max


class Mode(str, enum.Enum):
    EXACT = "exact"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class PairwiseUStat:
    """``min_draws`` is the fewest quadruples any subject appeared in (sampled mode only)."""

    pair: PairIndex
    value: float
    mode: Mode
    kernel_evals: int
    min_draws: int | None = None


@dataclass(frozen=True, eq=False)
class HProjection:
    """Uncentered projection estimates for the four arms of one pair.

    ``values[(s, arm)]`` holds one entry per subject of that arm; arms of
    strata outside the pair are implicitly all-zero (see :meth:`column`).
    """

    pair: PairIndex
    values: dict = field(default_factory=dict)

    def column(self, s: int, arm: str, n: int) -> np.ndarray:
        if self.pair.involves(s):
            return self.values[(s, arm)]
        return np.zeros(n)


@dataclass(frozen=True, eq=False)
class CovarianceEstimate:
    """Estimated asymptotic covariance of sqrt(N) * (U - theta).

    ``components`` maps each ``(stratum, arm)`` to its weighted contribution
    ``(N / n) * Cov(h columns)``; ``sigma`` is their sum.
    """

    sigma: np.ndarray
    components: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.sigma.shape[0]


def kernel(yt_p, yc_p, yt_q, yc_q):
    """Tie-aware comparison of the difference in ``p`` with the one in ``q``.

    Works elementwise on arrays as well as on scalars.
    """
    d_p = np.subtract(yt_p, yc_p)
    d_q = np.subtract(yt_q, yc_q)
    out = np.less(d_p, d_q) + 0.5 * np.equal(d_p, d_q)
    return float(out) if np.ndim(out) == 0 else out


def quadruple_count(data: StratifiedDataset, pair: PairIndex) -> int:
    count = 1
    for s in (pair.p, pair.q):
        count *= data.size(s, TREATMENT) * data.size(s, CONTROL)
    return count


def exact_pair_u(data: StratifiedDataset, pair: PairIndex) -> tuple[PairwiseUStat, HProjection]:
    """U(p, q) and its projection estimates over every quadruple.

    Instead of a four-fold loop, each stratum's differences are sorted once
    and the kernel sum for a fixed difference is read off with two binary
    searches.  Counts are accumulated as integers (twice the kernel sum), so
    the result is the same number a naive enumeration produces.
    """
    total = quadruple_count(data, pair)
    if total > _INT64_MAX // 2:
        raise CountOverflow(f"pair {pair.label}: {total} quadruples exceed the count range")

    yt_p, yc_p = data.arm(pair.p, TREATMENT), data.arm(pair.p, CONTROL)
    yt_q, yc_q = data.arm(pair.q, TREATMENT), data.arm(pair.q, CONTROL)
    d_p = yt_p[:, None] - yc_p[None, :]
    d_q = yt_q[:, None] - yc_q[None, :]
    sorted_p = np.sort(d_p, axis=None)
    sorted_q = np.sort(d_q, axis=None)

    # twice the kernel sum over stratum q for each fixed (i, j) in p
    lo = np.searchsorted(sorted_q, d_p, side="left")
    hi = np.searchsorted(sorted_q, d_p, side="right")
    twice_p = 2 * (sorted_q.size - hi) + (hi - lo)
    # twice the kernel sum over stratum p for each fixed (k, l) in q
    lo = np.searchsorted(sorted_p, d_q, side="left")
    hi = np.searchsorted(sorted_p, d_q, side="right")
    twice_q = 2 * lo + (hi - lo)

    value = int(twice_p.sum()) / (2 * total)
    n_pt, n_pc = d_p.shape
    n_qt, n_qc = d_q.shape
    h = {
        (pair.p, TREATMENT): twice_p.sum(axis=1) / (2 * n_pc * sorted_q.size),
        (pair.p, CONTROL): twice_p.sum(axis=0) / (2 * n_pt * sorted_q.size),
        (pair.q, TREATMENT): twice_q.sum(axis=1) / (2 * n_qc * sorted_p.size),
        (pair.q, CONTROL): twice_q.sum(axis=0) / (2 * n_qt * sorted_p.size),
    }
    return PairwiseUStat(pair, value, Mode.EXACT, total), HProjection(pair, h)


def sampled_pair_u(
    data: StratifiedDataset,
    pair: PairIndex,
    m: int,
    rng: SeededStream,
    max_attempts: int = 100,
) -> tuple[PairwiseUStat, HProjection]:
    """Approximate U(p, q) from ``m`` quadruples drawn with replacement.

    Every subject of the four arms must appear in at least one drawn
    quadruple, because the same draws estimate the per-subject projections;
    otherwise the whole draw is repeated, up to ``max_attempts`` times.
    """
    groups = [(pair.p, TREATMENT), (pair.p, CONTROL), (pair.q, TREATMENT), (pair.q, CONTROL)]
    arms = [data.arm(s, arm) for s, arm in groups]
    sizes = [len(a) for a in arms]
    m = int(m)
    if m < max(sizes):
        raise CoverageFailed(
            f"pair {pair.label}: M={m} draws cannot cover an arm of {max(sizes)} subjects"
        )

    gen = rng.generator
    for _ in range(max_attempts):
        idx = [gen.integers(0, n, size=m) for n in sizes]
        counts = [np.bincount(ix, minlength=n) for ix, n in zip(idx, sizes)]
        if all(c.min() > 0 for c in counts):
            break
    else:
        raise CoverageFailed(
            f"pair {pair.label}: some subject was never drawn in {max_attempts} attempts"
        )

    yt_p, yc_p, yt_q, yc_q = (a[ix] for a, ix in zip(arms, idx))
    phi = kernel(yt_p, yc_p, yt_q, yc_q)
    h = {
        g: np.bincount(ix, weights=phi, minlength=n) / c
        for g, ix, n, c in zip(groups, idx, sizes, counts)
    }
    min_draws = int(min(c.min() for c in counts))
    return PairwiseUStat(pair, float(phi.mean()), Mode.SAMPLED, m, min_draws), HProjection(pair, h)


def resolve_mode(data: StratifiedDataset, cfg: TestConfig) -> Mode:
    if cfg.estimator_mode is EstimatorMode.EXACT:
        return Mode.EXACT
    if cfg.estimator_mode is EstimatorMode.SAMPLED:
        return Mode.SAMPLED
    largest = max(quadruple_count(data, pair) for pair in data.pairs())
    return Mode.EXACT if largest <= cfg.auto_exact_threshold else Mode.SAMPLED


def pair_sample_size(data: StratifiedDataset, pair: PairIndex) -> int:
    """Number of subjects in the two strata of a pair."""
    return sum(data.size(s, arm) for s in (pair.p, pair.q) for arm in (TREATMENT, CONTROL))


def pairwise_u_vector(
    data: StratifiedDataset, cfg: TestConfig, rng: SeededStream
) -> tuple[list[PairwiseUStat], list[HProjection]]:
    """All pairwise U-statistics in lexicographic pair order.

    In sampled mode pair ``k`` draws ``sampling_multiplier`` times the pair's
    subject count from ``rng.spawn(k)``.
    """
    mode = resolve_mode(data, cfg)
    stats, projections = [], []
    for pair in data.pairs():
        if mode is Mode.EXACT:
            u, h = exact_pair_u(data, pair)
        else:
            m = cfg.sampling_multiplier * pair_sample_size(data, pair)
            u, h = sampled_pair_u(data, pair, m, rng.spawn(pair.position), cfg.max_resample_attempts)
        stats.append(u)
        projections.append(h)
    return stats, projections


def assemble_sigma(data: StratifiedDataset, projections: list[HProjection]) -> CovarianceEstimate:
    """Sum over all arms of ``(N / n) * sample covariance`` of the h columns.

    Each arm contributes the ``r x r`` covariance (divisor ``n - 1``) of its
    subjects' projection estimates across all ``r`` pairs, with zero columns
    for pairs not involving its stratum.
    """
    r = len(projections)
    big_n = data.total_size
    sigma = np.zeros((r, r))
    components = {}
    for s, arm in data.groups():
        n = data.size(s, arm)
        if n < 2:
            raise DegenerateGroup(f"stratum {data.strata[s].label!r} arm {arm} has a single subject")
        cols = np.column_stack([h.column(s, arm, n) for h in projections])
        centered = cols - cols.mean(axis=0)
        comp = (big_n / n) * (centered.T @ centered) / (n - 1)
        components[(s, arm)] = comp
        sigma += comp
    sigma = 0.5 * (sigma + sigma.T)
    return CovarianceEstimate(sigma, components)
