"""Parametric comparator and the two-sample Mann-Whitney statistic."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .data import CONTROL, TREATMENT, StratifiedDataset
from .errors import EmptySample, TooSmallArm, ZeroVariance
from .numerics import chi2_isf, chi2_sf


@dataclass(frozen=True, eq=False)
class LrtResult:
    tau_hat: np.ndarray
    s_sq: np.ndarray
    tau_bar: float
    h_statistic: float
    df: int
    p_value: float

    def reject(self, alpha: float = 0.05) -> bool:
        return self.h_statistic >= chi2_isf(alpha, self.df)

    def to_dict(self) -> dict:
        return {
            "tau_hat": self.tau_hat.tolist(),
            "s_sq": self.s_sq.tolist(),
            "tau_bar": self.tau_bar,
            "H": self.h_statistic,
            "df": self.df,
            "p_value": self.p_value,
        }


def lrt_test(data: StratifiedDataset) -> LrtResult:
    """Chi-squared test of equal stratum mean differences.

    Each stratum effect is the treatment-minus-control mean difference with
    unpooled variance ``var_t / n_t + var_c / n_c``; the statistic is the
    precision-weighted sum of squared deviations from the pooled effect,
    referred to chi-squared with ``S - 1`` degrees of freedom.
    """
    tau_hat, s_sq = [], []
    for st in data.strata:
        for arm in (TREATMENT, CONTROL):
            if st.arm(arm).size < 2:
                raise TooSmallArm(f"stratum {st.label!r} arm {arm} needs at least 2 subjects")
        t, c = st.treatment, st.control
        tau_hat.append(t.mean() - c.mean())
        s_sq.append(t.var(ddof=1) / t.size + c.var(ddof=1) / c.size)
    tau_hat = np.array(tau_hat)
    s_sq = np.array(s_sq)
    if np.any(s_sq <= 0):
        bad = [data.strata[i].label for i in np.flatnonzero(s_sq <= 0)]
        raise ZeroVariance(f"zero variance estimate in strata {bad}")
    w = 1.0 / s_sq
    tau_bar = float(np.sum(w * tau_hat) / np.sum(w))
    h = float(np.sum(w * (tau_hat - tau_bar) ** 2))
    df = data.n_strata - 1
    return LrtResult(tau_hat, s_sq, tau_bar, h, df, chi2_sf(h, df))


@dataclass(frozen=True)
class MannWhitneyResult:
    statistic: float
    p_value: float
    z: float


def mann_whitney(x, y) -> MannWhitneyResult:
    """Estimate P(X < Y) + P(X = Y) / 2 and test it against 1/2.

    The two-sided p-value comes from the normal approximation with the tie
    correction on the variance; no continuity correction.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.size == 0 or y.size == 0:
        raise EmptySample("both samples must be non-empty")
    nx, ny = x.size, y.size
    ys = np.sort(y)
    lo = np.searchsorted(ys, x, side="left")
    hi = np.searchsorted(ys, x, side="right")
    twice = int(np.sum(2 * (ny - hi) + (hi - lo)))
    statistic = twice / (2 * nx * ny)

    pooled = np.concatenate([x, y])
    n = pooled.size
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(tie_counts**3 - tie_counts))
    var_u = nx * ny / 12.0 * ((n + 1) - tie_term / (n * (n - 1))) if n > 1 else 0.0
    if var_u <= 0:
        return MannWhitneyResult(statistic, 1.0, 0.0)
    z = (twice / 2 - nx * ny / 2) / math.sqrt(var_u)
    return MannWhitneyResult(statistic, float(2 * stats.norm.sf(abs(z))), z)
