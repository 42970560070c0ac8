"""Nonparametric U-statistic test for treatment effect heterogeneity across strata."""

__version__ = "0.1.0"

from .data import (
    CONTROL,
    TREATMENT,
    EstimatorMode,
    PairIndex,
    StratifiedDataset,
    StratumData,
    TestConfig,
    pair_indices,
    validate,
)
from .hettest import HetTestResult, het_test, max_statistic, simulate_reference, t_statistic, u_h_statistic
from .lrt import LrtResult, lrt_test, mann_whitney
from .numerics import SeededStream, chi2_sf, eigen_sym, sample_mvn_zero_mean
from .ustat import (
    CovarianceEstimate,
    HProjection,
    PairwiseUStat,
    assemble_sigma,
    exact_pair_u,
    kernel,
    pairwise_u_vector,
    sampled_pair_u,
)
from .scenarios import DistributionSpec, ScenarioSpec, build_scenario, generate_dataset, sample_distribution
from .simulation import RejectionRateReport, desk_config, power_sweep, rejection_rate
from .io import ByColumn, ByQuantiles, ByThreshold, ingest_csv, stratify
