"""Heterogeneity test built on the vector of pairwise U-statistics.

The test statistic is ``U_h = N * sum((U - 1/2)^2)``. Its null distribution
has no closed form, so it is approximated by squared norms of draws from
``N(0, Sigma_hat)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import StratifiedDataset, TestConfig
from .errors import DegenerateWarning, RankZero
from .numerics import SeededStream, chi2_sf, eigen_sym, psd_factor
from .ustat import CovarianceEstimate, Mode, PairwiseUStat, assemble_sigma, pairwise_u_vector

REFERENCE_CHUNK = 1 << 16


def _u_values(u) -> np.ndarray:
    if len(u) and isinstance(u[0], PairwiseUStat):
        return np.array([x.value for x in u])
    return np.asarray(u, dtype=np.float64).reshape(-1)


def _sigma_matrix(sigma_hat) -> np.ndarray:
    if isinstance(sigma_hat, CovarianceEstimate):
        return sigma_hat.sigma
    return np.atleast_2d(np.asarray(sigma_hat, dtype=np.float64))


def u_h_statistic(u, n_total: int) -> float:
    dev = _u_values(u) - 0.5
    if dev.size == 0:
        raise ValueError("empty U vector")
    return float(n_total * np.dot(dev, dev))


def max_statistic(u, n_total: int) -> float:
    dev = _u_values(u) - 0.5
    if dev.size == 0:
        raise ValueError("empty U vector")
    return float(math.sqrt(n_total) * np.max(np.abs(dev)))


@dataclass(frozen=True, eq=False)
class ReferenceDistribution:
    """Simulated null draws, stored sorted.

    ``sq_norms`` are the squared norms used for ``U_h``; ``max_abs`` the
    largest absolute coordinate of each draw, for the max statistic.
    """

    sq_norms: np.ndarray
    max_abs: np.ndarray

    @property
    def size(self) -> int:
        return self.sq_norms.size

    def p_value(self, stat: float) -> float:
        return _upper_fraction(self.sq_norms, stat)

    def max_p_value(self, stat: float) -> float:
        return _upper_fraction(self.max_abs, stat)

    def critical_value(self, alpha: float) -> float:
        """Empirical ``100 (1 - alpha)`` percentile (inverse-ECDF order statistic).

        At ``alpha = 1`` this is the lower end of the support, 0.
        """
        b = self.size
        k = math.ceil(round((1.0 - alpha) * b, 9))
        return 0.0 if k <= 0 else float(self.sq_norms[k - 1])


def _upper_fraction(sorted_values: np.ndarray, stat: float) -> float:
    # ties count toward the null
    n_ge = sorted_values.size - np.searchsorted(sorted_values, stat, side="left")
    return float(n_ge / sorted_values.size)


def simulate_reference(sigma_hat, draws: int, rng: SeededStream) -> ReferenceDistribution:
    """Draw ``draws`` vectors from N(0, sigma_hat) in fixed-size chunks.

    Chunk ``i`` uses ``rng.spawn(i)``, so the output does not depend on how
    the chunks are scheduled.
    """
    vals, vecs = psd_factor(_sigma_matrix(sigma_hat))
    root = vecs * np.sqrt(vals)
    sq_norms = np.empty(draws)
    max_abs = np.empty(draws)
    for i, start in enumerate(range(0, draws, REFERENCE_CHUNK)):
        stop = min(start + REFERENCE_CHUNK, draws)
        z = rng.spawn(i).standard_normal((stop - start, len(vals)))
        r = z @ root.T
        sq_norms[start:stop] = np.einsum("ij,ij->i", r, r)
        max_abs[start:stop] = np.abs(r).max(axis=1)
    sq_norms.sort()
    max_abs.sort()
    return ReferenceDistribution(sq_norms, max_abs)


@dataclass(frozen=True)
class TStatistic:
    value: float
    rank: int
    p_value: float


def t_statistic(u, sigma_hat, n_total: int, tol_rank: float = 1e-8) -> TStatistic:
    """Quadratic form with the spectral generalized inverse of ``sigma_hat``.

    Referred to chi-squared with ``rank`` degrees of freedom. Reported as a
    diagnostic only; near-zero eigenvalues make it unstable.
    """
    dev = _u_values(u) - 0.5
    vals, vecs = eigen_sym(_sigma_matrix(sigma_hat))
    top = vals[0]
    keep = vals > tol_rank * top if top > 0 else np.zeros_like(vals, dtype=bool)
    k = int(keep.sum())
    if k == 0:
        raise RankZero("covariance estimate has no eigenvalue above the rank tolerance")
    proj = vecs[:, keep].T @ dev
    value = float(n_total * np.sum(proj**2 / vals[keep]))
    return TStatistic(value, k, chi2_sf(value, k))


@dataclass(frozen=True)
class MaxStatistic:
    value: float
    p_value: float


@dataclass(frozen=True, eq=False)
class HetTestResult:
    u_vector: list
    sigma_hat: CovarianceEstimate
    n_total: int
    u_h: float
    p_value: float
    reject: bool
    critical_value: float
    reference_draws_used: int
    mode: Mode
    t_statistic: TStatistic | None = None
    max_statistic: MaxStatistic | None = None
    warnings: tuple = field(default_factory=tuple)

    @property
    def u_values(self) -> np.ndarray:
        return _u_values(self.u_vector)

    def to_dict(self) -> dict:
        out = {
            "u_vector": [
                {"pair": u.pair.label, "value": u.value, "mode": u.mode.value,
                 "kernel_evals": u.kernel_evals, "min_draws": u.min_draws}
                for u in self.u_vector
            ],
            "sigma_hat": self.sigma_hat.sigma.tolist(),
            "N": self.n_total,
            "u_h": self.u_h,
            "p_value": self.p_value,
            "reject": self.reject,
            "critical_value": self.critical_value,
            "reference_draws": self.reference_draws_used,
            "warnings": list(self.warnings),
        }
        if self.t_statistic is not None:
            out["t_statistic"] = {"value": self.t_statistic.value, "rank": self.t_statistic.rank,
                                  "p_value": self.t_statistic.p_value}
        if self.max_statistic is not None:
            out["max_statistic"] = {"value": self.max_statistic.value,
                                    "p_value": self.max_statistic.p_value}
        return out


def het_test(data: StratifiedDataset, cfg: TestConfig | None = None,
             rng: SeededStream | None = None) -> HetTestResult:
    """Test equality of stratum treatment effects.

    Parameters
    ----------
    data : StratifiedDataset
        Validated outcomes, at least two subjects per arm.
    cfg : TestConfig, optional
        Defaults to :class:`TestConfig` ().
    rng : SeededStream, optional
        Defaults to a stream seeded with ``cfg.seed``. Sub-stream 0 feeds
        sampled U estimation, sub-stream 1 the reference draws.

    Returns
    -------
    HetTestResult
        ``p_value`` is the fraction of reference draws at least as large as
        ``U_h``; ``reject`` holds when ``U_h`` reaches the empirical
        ``100 (1 - alpha)`` percentile.
    """
    cfg = cfg or TestConfig()
    rng = rng or SeededStream(cfg.seed)
    u_vec, projections = pairwise_u_vector(data, cfg, rng.spawn(0))
    sigma = assemble_sigma(data, projections)
    n_total = data.total_size
    u_h = u_h_statistic(u_vec, n_total)
    ref = simulate_reference(sigma, cfg.reference_draws, rng.spawn(1))

    notes = []
    degenerate = not np.any(sigma.sigma)
    if degenerate and u_h > 0:
        msg = "covariance estimate is zero while U_h > 0; p-value set by the point-mass reference"
        warnings.warn(msg, DegenerateWarning, stacklevel=2)
        notes.append("DegenerateReference")

    critical = ref.critical_value(cfg.alpha)
    t_stat = None
    if cfg.report_t_statistic:
        try:
            t_stat = t_statistic(u_vec, sigma, n_total, cfg.tol_rank)
        except RankZero:
            notes.append("RankZero")
    max_stat = None
    if cfg.report_max_statistic:
        value = max_statistic(u_vec, n_total)
        max_stat = MaxStatistic(value, ref.max_p_value(value))

    return HetTestResult(
        u_vector=u_vec,
        sigma_hat=sigma,
        n_total=n_total,
        u_h=u_h,
        p_value=ref.p_value(u_h),
        # a point-mass reference at 0 must not reject U_h == 0
        reject=bool(u_h >= critical and not (degenerate and u_h == 0)),
        critical_value=critical,
        reference_draws_used=ref.size,
        mode=u_vec[0].mode,
        t_statistic=t_stat,
        max_statistic=max_stat,
        warnings=tuple(notes),
    )
