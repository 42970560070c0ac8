"""Outcome distributions and the three-stratum simulation scenario catalog.

Every scenario has three strata and two arms. Location scenarios put the
stratum shift ``delta_s`` on both arms and subtract the treatment effect
``tau_s`` from the control arm. Scale scenarios (A4-A6) multiply treatment
draws by ``exp(delta_s + tau_s)`` and control draws by ``exp(delta_s)``; the
test is run on log outcomes, turning scale ratios into location shifts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .data import StratifiedDataset, validate
from .errors import InvalidParam, NonPositiveForLog
from .numerics import SeededStream

FAMILIES = ("normal", "uniform", "student_t", "chisq", "exponential", "mixture")

SIZE_SETTINGS = (
    (10, 10, 10),
    (50, 50, 50),
    (100, 100, 100),
    (500, 500, 500),
    (50, 100, 150),
    (150, 100, 50),
)


@dataclass(frozen=True)
class DistributionSpec:
    """A base family, scaled then shifted: ``draw * scale_multiplier + location_shift``.

    ``params`` by family: normal ``(mu, sigma)``, uniform ``(a, b)``,
    student_t ``(nu,)``, chisq ``(nu,)``, exponential ``(rate,)``, mixture
    ``((w1, mu1, sigma1), (w2, mu2, sigma2), ...)``.
    """

    family: str
    params: tuple
    location_shift: float = 0.0
    scale_multiplier: float = 1.0

    def __post_init__(self):
        f, p = self.family, self.params
        if f not in FAMILIES:
            raise InvalidParam(f"unknown family {f!r}")
        if not self.scale_multiplier > 0:
            raise InvalidParam("scale_multiplier must be positive")
        if f == "normal" and not (len(p) == 2 and p[1] > 0):
            raise InvalidParam(f"normal needs (mu, sigma>0), got {p}")
        if f == "uniform" and not (len(p) == 2 and p[0] < p[1]):
            raise InvalidParam(f"uniform needs (a, b) with a < b, got {p}")
        if f in ("student_t", "chisq", "exponential") and not (len(p) == 1 and p[0] > 0):
            raise InvalidParam(f"{f} needs one positive parameter, got {p}")
        if f == "mixture":
            if not p or any(len(c) != 3 or c[0] < 0 or c[2] <= 0 for c in p):
                raise InvalidParam(f"mixture needs (weight, mu, sigma>0) components, got {p}")
            if not math.isclose(sum(c[0] for c in p), 1.0, abs_tol=1e-12):
                raise InvalidParam("mixture weights must sum to 1")

    def shifted(self, shift: float = 0.0, scale: float = 1.0) -> "DistributionSpec":
        return replace(self, location_shift=shift, scale_multiplier=scale)

    @property
    def positive_support(self) -> bool:
        return self.family in ("chisq", "exponential")

    def describe(self) -> str:
        base = {
            "normal": "N({},{})",
            "uniform": "U({},{})",
            "student_t": "t_{}",
            "chisq": "chi2_{}",
            "exponential": "Exp({})",
        }.get(self.family)
        if base is None:
            base = "+".join(f"{w}N({m},{s})" for w, m, s in self.params)
        else:
            base = base.format(*self.params)
        if self.scale_multiplier != 1.0:
            base = f"{self.scale_multiplier:g}*{base}"
        if self.location_shift:
            base = f"{base}{self.location_shift:+g}"
        return base


def sample_distribution(spec: DistributionSpec, n: int, rng: SeededStream) -> np.ndarray:
    gen = rng.generator
    p = spec.params
    if spec.family == "normal":
        x = gen.normal(p[0], p[1], size=n)
    elif spec.family == "uniform":
        x = gen.uniform(p[0], p[1], size=n)
    elif spec.family == "student_t":
        # normal over root of scaled chi-squared
        z = gen.standard_normal(n)
        x = z / np.sqrt(gen.chisquare(p[0], size=n) / p[0])
    elif spec.family == "chisq":
        x = gen.chisquare(p[0], size=n)
    elif spec.family == "exponential":
        x = gen.exponential(1.0 / p[0], size=n)
    else:
        weights = np.array([c[0] for c in p])
        comp = gen.choice(len(p), size=n, p=weights)
        mus = np.array([c[1] for c in p])
        sigmas = np.array([c[2] for c in p])
        x = mus[comp] + sigmas[comp] * gen.standard_normal(n)
    return x * spec.scale_multiplier + spec.location_shift


NORMAL = DistributionSpec("normal", (0.0, 1.0))
UNIFORM = DistributionSpec("uniform", (-2.0, 2.0))
T4 = DistributionSpec("student_t", (4.0,))
CHISQ1 = DistributionSpec("chisq", (1.0,))
EXP1 = DistributionSpec("exponential", (1.0,))
CHISQ4 = DistributionSpec("chisq", (4.0,))
BIMODAL = DistributionSpec("mixture", ((0.5, -5.0, 1.0), (0.5, 5.0, 1.0)))


@dataclass(frozen=True)
class _CatalogRow:
    kind: str  # "shift" or "log-scale"
    # base families ordered (1t, 1c, 2t, 2c, 3t, 3c)
    families: tuple
    delta: tuple
    tau_null: tuple
    tau_alt: tuple


def _same(f):
    return (f,) * 6


def _by_arm(ft, fc):
    return (ft, fc) * 3


def _by_stratum(f1, f2, f3):
    return (f1, f1, f2, f2, f3, f3)


_AB_DELTA = (0.0, 1.0, 2.0)
_C_DELTA = (0.0, 0.0, 0.0)

CATALOG = {
    "A1": _CatalogRow("shift", _same(NORMAL), _AB_DELTA, (1, 1, 1), (1, 1.25, 1.5)),
    "A2": _CatalogRow("shift", _same(UNIFORM), _AB_DELTA, (1, 1, 1), (1, 1.1, 1.2)),
    "A3": _CatalogRow("shift", _same(T4), _AB_DELTA, (1, 1, 1), (1, 1.25, 1.5)),
    "A4": _CatalogRow("log-scale", _same(CHISQ1), _AB_DELTA, (1, 1, 1), (1, 1.5, 2)),
    "A5": _CatalogRow("log-scale", _same(EXP1), _AB_DELTA, (1, 1, 1), (1, 1.25, 1.5)),
    "A6": _CatalogRow("log-scale", _same(CHISQ4), _AB_DELTA, (1, 1, 1), (1, 1.25, 1.5)),
    "A7": _CatalogRow("shift", _same(BIMODAL), _AB_DELTA, (1, 1, 1), (1, 2, 3)),
    "B1": _CatalogRow("shift", _by_arm(NORMAL, UNIFORM), _AB_DELTA, (0, 0, 0), (0, 0.25, 0.5)),
    "B2": _CatalogRow("shift", _by_arm(NORMAL, T4), _AB_DELTA, (0, 0, 0), (0, 0.25, 0.5)),
    "B3": _CatalogRow("shift", _by_arm(NORMAL, BIMODAL), _AB_DELTA, (0, 0, 0), (0, 1, 2)),
    "B4": _CatalogRow("shift", _by_arm(UNIFORM, T4), _AB_DELTA, (0, 0, 0), (0, 0.25, 0.5)),
    "B5": _CatalogRow("shift", _by_arm(UNIFORM, BIMODAL), _AB_DELTA, (0, 0, 0), (0, 1, 2)),
    "B6": _CatalogRow("shift", _by_arm(T4, BIMODAL), _AB_DELTA, (0, 0, 0), (0, 1, 2)),
    "C1": _CatalogRow("shift", _by_stratum(NORMAL, UNIFORM, T4), _C_DELTA, (1, 1, 1), (1, 1.25, 1.5)),
    "C2": _CatalogRow("shift", _by_stratum(NORMAL, UNIFORM, BIMODAL), _C_DELTA, (1, 1, 1), (1, 1.5, 2)),
    "C3": _CatalogRow("shift", _by_stratum(NORMAL, T4, BIMODAL), _C_DELTA, (1, 1, 1), (1, 1.5, 2)),
    "C4": _CatalogRow("shift", _by_stratum(UNIFORM, T4, BIMODAL), _C_DELTA, (1, 1, 1), (1, 1.5, 2)),
}

SCENARIO_LABELS = tuple(CATALOG)


@dataclass(frozen=True)
class ScenarioSpec:
    label: str
    variant: str
    arms: tuple  # six DistributionSpec, ordered (1t, 1c, 2t, 2c, 3t, 3c)
    sizes: tuple
    log_transform: bool
    gamma: float
    tau_1: float
    delta: tuple
    tau: tuple = field(default=())

    def __post_init__(self):
        if len(self.arms) != 6 or len(self.sizes) != 3 or len(self.delta) != 3:
            raise InvalidParam("a scenario has three strata with two arms each")
        if any(n < 1 for n in self.sizes):
            raise InvalidParam(f"arm sizes must be positive, got {self.sizes}")
        if self.gamma < 0:
            raise InvalidParam("gamma must be non-negative")
        expected = tuple(self.tau_1 + k * self.gamma for k in range(3))
        if self.tau and not np.allclose(self.tau, expected, atol=1e-12):
            raise InvalidParam(f"treatment effects {self.tau} are not tau_1 + (0, 1, 2) * gamma")
        if self.log_transform and not all(a.positive_support for a in self.arms):
            raise InvalidParam("log transform needs positive-support families")

    def with_sizes(self, sizes) -> "ScenarioSpec":
        return replace(self, sizes=tuple(int(n) for n in sizes))

    def with_gamma(self, gamma: float) -> "ScenarioSpec":
        if self.label not in CATALOG:
            raise InvalidParam(f"{self.label!r} is not a catalog scenario")
        return build_scenario(self.label, gamma=gamma, sizes=self.sizes)


def _arms_for(row: _CatalogRow, tau) -> tuple:
    arms = []
    for s in range(3):
        ft, fc = row.families[2 * s], row.families[2 * s + 1]
        d = row.delta[s]
        if row.kind == "log-scale":
            arms += [ft.shifted(scale=math.exp(d + tau[s])), fc.shifted(scale=math.exp(d))]
        else:
            arms += [ft.shifted(shift=d), fc.shifted(shift=d - tau[s])]
    return tuple(arms)


def build_scenario(label: str, variant: str = "null", sizes=(100, 100, 100),
                   gamma: float | None = None) -> ScenarioSpec:
    """Catalog scenario ``label`` (A1-A7, B1-B6, C1-C4).

    ``variant`` is ``"null"`` or ``"alternative"`` (the tabulated effects). If
    ``gamma`` is given it overrides the variant: effects become
    ``tau_1 + (0, gamma, 2 gamma)``.
    """
    try:
        row = CATALOG[label.upper()]
    except KeyError:
        raise InvalidParam(f"unknown scenario {label!r}; choose from {', '.join(CATALOG)}") from None
    label = label.upper()
    tau_1 = float(row.tau_null[0])
    if gamma is not None:
        gamma = float(gamma)
        variant = "null" if gamma == 0 else f"gamma={gamma:g}"
        tau = tuple(tau_1 + k * gamma for k in range(3))
    elif variant == "null":
        gamma, tau = 0.0, tuple(float(t) for t in row.tau_null)
    elif variant in ("alternative", "alt"):
        variant = "alternative"
        tau = tuple(float(t) for t in row.tau_alt)
        gamma = tau[1] - tau[0]
    else:
        raise InvalidParam(f"unknown variant {variant!r}")
    return ScenarioSpec(
        label=label,
        variant=variant,
        arms=_arms_for(row, tau),
        sizes=tuple(int(n) for n in sizes),
        log_transform=row.kind == "log-scale",
        gamma=gamma,
        tau_1=tau_1,
        delta=tuple(float(d) for d in row.delta),
        tau=tau,
    )


def generate_dataset(spec: ScenarioSpec, rng: SeededStream) -> StratifiedDataset:
    """One synthetic dataset; arm ``k`` (in 1t, 1c, 2t, ... order) uses ``rng.spawn(k)``."""
    strata = []
    for s in range(3):
        arms = []
        for a in range(2):
            k = 2 * s + a
            y = sample_distribution(spec.arms[k], spec.sizes[s], rng.spawn(k))
            if spec.log_transform:
                if np.any(y <= 0):
                    raise NonPositiveForLog(f"arm {k} produced a non-positive draw")
                y = np.log(y)
            arms.append(y)
        strata.append((str(s + 1), arms[0], arms[1]))
    return validate(strata)
