"""Rejection-rate estimation and power sweeps over the scenario catalog."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .data import EstimatorMode, TestConfig
from .errors import ReplicateError
from .hettest import het_test
from .lrt import lrt_test
from .numerics import SeededStream
from .scenarios import ScenarioSpec, generate_dataset

log = logging.getLogger(__name__)

CSV_COLUMNS = ("scenario", "n1", "n2", "n3", "gamma", "test", "rate", "ci_lo", "ci_hi", "L", "seed")

# "desk" runs the null table in minutes; "full" is the L = 2000, B = 1e5 grid
PROFILES = {
    "desk": {"replicates": 500, "reference_draws": 10_000},
    "full": {"replicates": 2000, "reference_draws": 100_000},
}


def desk_config(seed: int = 0, **overrides) -> TestConfig:
    kwargs = dict(reference_draws=PROFILES["desk"]["reference_draws"],
                  estimator_mode=EstimatorMode.SAMPLED, sampling_multiplier=1000, seed=seed)
    kwargs.update(overrides)
    return TestConfig(**kwargs)


def binomial_ci(count: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    rate = count / trials
    half = z * math.sqrt(rate * (1.0 - rate) / trials)
    return rate - half, rate + half


@dataclass(frozen=True)
class RejectionRateReport:
    scenario: str
    variant: str
    sizes: tuple
    gamma: float
    replicates: int
    seed: int
    u_rejections: int
    lrt_rejections: int
    u_mean_seconds: float
    lrt_mean_seconds: float

    @property
    def u_rate(self) -> float:
        return self.u_rejections / self.replicates

    @property
    def lrt_rate(self) -> float:
        return self.lrt_rejections / self.replicates

    @property
    def u_ci(self) -> tuple[float, float]:
        return binomial_ci(self.u_rejections, self.replicates)

    @property
    def lrt_ci(self) -> tuple[float, float]:
        return binomial_ci(self.lrt_rejections, self.replicates)

    def rows(self) -> list[dict]:
        out = []
        for test, rate, (lo, hi) in (("U", self.u_rate, self.u_ci), ("LRT", self.lrt_rate, self.lrt_ci)):
            out.append({
                "scenario": self.scenario,
                "n1": self.sizes[0], "n2": self.sizes[1], "n3": self.sizes[2],
                "gamma": self.gamma,
                "test": test,
                "rate": rate, "ci_lo": lo, "ci_hi": hi,
                "L": self.replicates,
                "seed": self.seed,
            })
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(u_rate=self.u_rate, lrt_rate=self.lrt_rate,
                 u_ci=list(self.u_ci), lrt_ci=list(self.lrt_ci))
        d["sizes"] = list(self.sizes)
        return d


def run_replicate(spec: ScenarioSpec, cfg: TestConfig, rng: SeededStream) -> tuple[bool, bool, float, float]:
    """Both tests on one dataset drawn from ``spec``.

    Returns (U rejects, LRT rejects, U seconds, LRT seconds).
    """
    data = generate_dataset(spec, rng.spawn(0))
    t0 = time.perf_counter()
    u = het_test(data, cfg, rng.spawn(1))
    t1 = time.perf_counter()
    lrt = lrt_test(data)
    t2 = time.perf_counter()
    return u.reject, lrt.reject(cfg.alpha), t1 - t0, t2 - t1


def _run_block(args):
    spec, cfg, seed, path, indices = args
    base = SeededStream(seed, path)
    out = []
    for i in indices:
        try:
            out.append(run_replicate(spec, cfg, base.spawn(i)))
        except Exception as exc:  # noqa: BLE001 - re-raised with the replicate index
            raise ReplicateError(i, exc) from exc
    return out


def rejection_rate(spec: ScenarioSpec, replicates: int, cfg: TestConfig,
                   rng: SeededStream, workers: int = 1) -> RejectionRateReport:
    """Fraction of ``replicates`` datasets on which each test rejects at ``cfg.alpha``.

    Replicate ``i`` uses ``rng.spawn(i)`` whatever the number of workers.
    """
    if replicates < 1:
        raise ValueError("replicates must be at least 1")
    if workers > 1:
        blocks = np.array_split(np.arange(replicates), workers * 4)
        jobs = [(spec, cfg, rng.seed, rng.path, b.tolist()) for b in blocks if b.size]
        with ProcessPoolExecutor(workers) as pool:
            results = [r for block in pool.map(_run_block, jobs) for r in block]
    else:
        results = _run_block((spec, cfg, rng.seed, rng.path, range(replicates)))
    u_rej = sum(r[0] for r in results)
    lrt_rej = sum(r[1] for r in results)
    report = RejectionRateReport(
        scenario=spec.label,
        variant=spec.variant,
        sizes=tuple(spec.sizes),
        gamma=spec.gamma,
        replicates=replicates,
        seed=rng.seed,
        u_rejections=int(u_rej),
        lrt_rejections=int(lrt_rej),
        u_mean_seconds=float(np.mean([r[2] for r in results])),
        lrt_mean_seconds=float(np.mean([r[3] for r in results])),
    )
    log.info("%s %s %s: U %.3f LRT %.3f", spec.label, spec.variant, spec.sizes,
             report.u_rate, report.lrt_rate)
    return report


def power_sweep(base: ScenarioSpec, gammas: Sequence[float], ns: Sequence[int], replicates: int,
                cfg: TestConfig, rng: SeededStream, workers: int = 1) -> list[RejectionRateReport]:
    """Rejection rates over the grid ``gammas x ns`` (equal arm sizes ``n``).

    Cell ``(i, j)`` draws from ``rng.spawn(i).spawn(j)``.
    """
    if not gammas or not ns:
        raise ValueError("empty sweep grid")
    grid = []
    for i, gamma in enumerate(gammas):
        for j, n in enumerate(ns):
            spec = base.with_gamma(gamma).with_sizes((n, n, n))
            grid.append(rejection_rate(spec, replicates, cfg, rng.spawn(i).spawn(j), workers))
    return grid


def write_csv(reports: Iterable[RejectionRateReport], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for report in reports:
            writer.writerows(report.rows())


def write_json(reports: Iterable[RejectionRateReport], path, config: TestConfig | None = None) -> None:
    payload = {"reports": [r.to_dict() for r in reports]}
    if config is not None:
        payload["config"] = config.as_dict()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
