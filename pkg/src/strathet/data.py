"""Core containers: stratified two-arm outcomes, pair indexing and test settings."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyArm, NonFinite, TooFewStrata

TREATMENT = "t"
CONTROL = "c"
ARMS = (TREATMENT, CONTROL)


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StratumData:
    label: str
    treatment: np.ndarray
    control: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "label", str(self.label))
        object.__setattr__(self, "treatment", _frozen_array(self.treatment))
        object.__setattr__(self, "control", _frozen_array(self.control))

    def arm(self, arm: str) -> np.ndarray:
        if arm == TREATMENT:
            return self.treatment
        if arm == CONTROL:
            return self.control
        raise ValueError(f"unknown arm {arm!r}")

    def __eq__(self, other):
        if not isinstance(other, StratumData):
            return NotImplemented
        return (self.label == other.label
                and np.array_equal(self.treatment, other.treatment)
                and np.array_equal(self.control, other.control))


@dataclass(frozen=True, eq=False)
class StratifiedDataset:
    """Outcomes indexed by stratum and arm.

    Construct through :func:`validate`; instances are immutable.
    """

    strata: tuple[StratumData, ...]

    @property
    def n_strata(self) -> int:
        return len(self.strata)

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.strata]

    def arm(self, s: int, arm: str) -> np.ndarray:
        return self.strata[s].arm(arm)

    def size(self, s: int, arm: str) -> int:
        return len(self.strata[s].arm(arm))

    @property
    def total_size(self) -> int:
        return sum(len(st.treatment) + len(st.control) for st in self.strata)

    def lambda_fraction(self, s: int, arm: str) -> Fraction:
        return Fraction(self.size(s, arm), self.total_size)

    def lambda_hat(self, s: int, arm: str) -> float:
        """Plug-in allocation proportion n_s^arm / N."""
        return self.size(s, arm) / self.total_size

    def groups(self) -> Iterable[tuple[int, str]]:
        for s in range(self.n_strata):
            for arm in ARMS:
                yield s, arm

    def pairs(self) -> list["PairIndex"]:
        return pair_indices(self.n_strata)

    def __eq__(self, other):
        if not isinstance(other, StratifiedDataset):
            return NotImplemented
        return self.strata == other.strata


@dataclass(frozen=True, order=True)
class PairIndex:
    """Stratum pair ``(p, q)`` with ``p < q`` (0-based) and its position in
    the lexicographic layout (0,1), (0,2), ..., (S-2, S-1)."""

    position: int
    p: int
    q: int

    def __post_init__(self):
        if not 0 <= self.p < self.q:
            raise ValueError(f"invalid pair ({self.p}, {self.q})")

    def involves(self, s: int) -> bool:
        return s == self.p or s == self.q

    @property
    def label(self) -> str:
        return f"({self.p + 1},{self.q + 1})"


def pair_indices(n_strata: int) -> list[PairIndex]:
    out = []
    for p in range(n_strata):
        for q in range(p + 1, n_strata):
            out.append(PairIndex(len(out), p, q))
    return out


class EstimatorMode(str, enum.Enum):
    EXACT = "exact"
    SAMPLED = "sampled"
    AUTO = "auto"


@dataclass(frozen=True)
class TestConfig:
    """Settings shared by the heterogeneity test and the simulation harness.

    ``alpha`` may be exactly 1 (reject everything); values in (0, 1) are the
    usual case.
    """

    __test__ = False  # not a pytest class

    reference_draws: int = 100_000
    alpha: float = 0.05
    estimator_mode: EstimatorMode = EstimatorMode.AUTO
    sampling_multiplier: int = 1000
    auto_exact_threshold: int = 10**8
    seed: int = 0
    max_resample_attempts: int = 100
    tol_rank: float = 1e-8
    report_t_statistic: bool = False
    report_max_statistic: bool = False

    def __post_init__(self):
        object.__setattr__(self, "estimator_mode", EstimatorMode(self.estimator_mode))
        if self.reference_draws < 1000:
            raise ValueError("reference_draws must be at least 1000")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        for name in ("sampling_multiplier", "auto_exact_threshold", "max_resample_attempts"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    def as_dict(self) -> dict:
        return {
            "reference_draws": self.reference_draws,
            "alpha": self.alpha,
            "estimator_mode": self.estimator_mode.value,
            "sampling_multiplier": self.sampling_multiplier,
            "auto_exact_threshold": self.auto_exact_threshold,
            "seed": self.seed,
            "max_resample_attempts": self.max_resample_attempts,
            "tol_rank": self.tol_rank,
            "report_t_statistic": self.report_t_statistic,
            "report_max_statistic": self.report_max_statistic,
        }


def _coerce_stratum(item, index: int) -> StratumData:
    if isinstance(item, StratumData):
        return item
    if isinstance(item, Mapping):
        return StratumData(item.get("label", str(index + 1)), item["treatment"], item["control"])
    if len(item) == 3:
        label, t, c = item
        return StratumData(label, t, c)
    if len(item) == 2:
        t, c = item
        return StratumData(str(index + 1), t, c)
    raise TypeError(f"cannot interpret stratum {index}: {item!r}")


def validate(raw: StratifiedDataset | Sequence) -> StratifiedDataset:
    """Check and freeze raw stratified data.

    ``raw`` is an existing :class:`StratifiedDataset` or a sequence of strata,
    each given as ``StratumData``, a mapping with ``treatment``/``control``
    (and optional ``label``), ``(label, treatment, control)`` or
    ``(treatment, control)``.
    """
    items = raw.strata if isinstance(raw, StratifiedDataset) else list(raw)
    strata = tuple(_coerce_stratum(item, i) for i, item in enumerate(items))
    if len(strata) < 2:
        raise TooFewStrata(f"need at least 2 strata, got {len(strata)}")
    for st in strata:
        for arm in ARMS:
            values = st.arm(arm)
            if values.size == 0:
                raise EmptyArm(f"stratum {st.label!r} has an empty {arm} arm")
            if not np.all(np.isfinite(values)):
                raise NonFinite(f"stratum {st.label!r} arm {arm} has non-finite outcomes")
    return StratifiedDataset(strata)
