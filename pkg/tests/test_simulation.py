import csv
import json
import math

import numpy as np
import pytest

from strathet.errors import InvalidParam, NonPositiveForLog, ReplicateError
from strathet.numerics import SeededStream
from strathet.scenarios import (
    CATALOG,
    SIZE_SETTINGS,
    BIMODAL,
    CHISQ1,
    NORMAL,
    UNIFORM,
    DistributionSpec,
    ScenarioSpec,
    build_scenario,
    generate_dataset,
    sample_distribution,
)
from strathet.simulation import (
    CSV_COLUMNS,
    binomial_ci,
    desk_config,
    power_sweep,
    rejection_rate,
    write_csv,
    write_json,
)


class TestDistributions:
    def test_normal_shift(self):
        x = sample_distribution(NORMAL.shifted(shift=2.0), 100_000, SeededStream(1))
        assert abs(x.mean() - 2.0) <= 0.02

    def test_uniform_variance(self):
        x = sample_distribution(UNIFORM, 100_000, SeededStream(2))
        assert abs(x.var() - 4 / 3) <= 0.03 * 4 / 3

    def test_mixture_moments(self):
        x = sample_distribution(BIMODAL, 100_000, SeededStream(3))
        assert abs(x.mean()) <= 0.05
        assert abs(x.var() - 26.0) <= 0.03 * 26.0

    def test_scale_before_shift(self):
        spec = DistributionSpec("normal", (1.0, 1e-9), location_shift=3.0, scale_multiplier=2.0)
        x = sample_distribution(spec, 10, SeededStream(0))
        np.testing.assert_allclose(x, 5.0, atol=1e-6)

    @pytest.mark.parametrize("family, params", [
        ("normal", (0.0, 0.0)), ("uniform", (1.0, 1.0)), ("chisq", (-1.0,)),
        ("mixture", ((0.4, 0.0, 1.0), (0.4, 1.0, 1.0))), ("gamma", (1.0,)),
    ])
    def test_invalid(self, family, params):
        with pytest.raises(InvalidParam):
            DistributionSpec(family, params)

    def test_describe(self):
        assert CHISQ1.shifted(scale=2.0).describe() == "2*chi2_1.0"
        assert "N(-5.0,1.0)" in BIMODAL.shifted(shift=1.0).describe()


class TestScenarios:
    def test_catalog_complete(self):
        assert len(CATALOG) == 17
        assert len(SIZE_SETTINGS) == 6

    def test_a1_null(self):
        spec = build_scenario("A1", sizes=(10, 10, 10))
        data = generate_dataset(spec, SeededStream(0))
        assert data.n_strata == 3
        assert all(data.size(s, a) == 10 for s, a in data.groups())
        # control shift is delta - tau
        assert [a.location_shift for a in spec.arms] == [0.0, -1.0, 1.0, 0.0, 2.0, 1.0]

    def test_a4_log_outcomes(self):
        spec = build_scenario("A4", sizes=(20, 20, 20))
        data = generate_dataset(spec, SeededStream(4))
        raw = sample_distribution(CHISQ1, 20, SeededStream(4).spawn(0))
        np.testing.assert_allclose(data.arm(0, "t"), np.log(raw) + 1.0, rtol=1e-12)

    def test_alternative_is_arithmetic(self):
        for label in CATALOG:
            spec = build_scenario(label, "alternative")
            t = spec.tau
            assert t[1] - t[0] == pytest.approx(t[2] - t[1])
            assert spec.gamma > 0

    def test_gamma_zero_equals_null(self):
        for label in ("A1", "A4", "B3", "C2"):
            assert build_scenario(label, gamma=0.0).arms == build_scenario(label).arms

    def test_unknown(self):
        with pytest.raises(InvalidParam):
            build_scenario("Z9")
        with pytest.raises(InvalidParam):
            build_scenario("A1", "sideways")

    def test_non_positive_for_log(self):
        spec = build_scenario("A4", sizes=(5, 5, 5))
        arms = (NORMAL,) + spec.arms[1:]
        # bypass construction checks to mimic a misconfigured scenario
        bad = ScenarioSpec.__new__(ScenarioSpec)
        object.__setattr__(bad, "__dict__", {**spec.__dict__, "arms": arms})
        with pytest.raises(NonPositiveForLog):
            generate_dataset(bad, SeededStream(0))

    def test_log_needs_positive_support(self):
        spec = build_scenario("A4")
        with pytest.raises(InvalidParam):
            ScenarioSpec(**{**spec.__dict__, "arms": (NORMAL,) + spec.arms[1:]})


def small_cfg(**kw):
    return desk_config(seed=1, reference_draws=1000, sampling_multiplier=50, **kw)


class TestRejectionRate:
    def test_binomial_ci(self):
        lo, hi = binomial_ci(25, 500)
        half = 1.96 * math.sqrt(0.05 * 0.95 / 500)
        assert (lo, hi) == pytest.approx((0.05 - half, 0.05 + half))

    def test_alpha_one_always_rejects(self):
        spec = build_scenario("B1", sizes=(10, 10, 10))
        rep = rejection_rate(spec, 10, small_cfg(alpha=1.0), SeededStream(2))
        assert rep.u_rate == 1.0
        assert rep.lrt_rate == 1.0

    def test_reproducible(self):
        spec = build_scenario("A2", "alternative", sizes=(15, 15, 15))
        a = rejection_rate(spec, 12, small_cfg(), SeededStream(3))
        b = rejection_rate(spec, 12, small_cfg(), SeededStream(3))
        assert (a.u_rejections, a.lrt_rejections) == (b.u_rejections, b.lrt_rejections)

    def test_workers_match_sequential(self):
        spec = build_scenario("A1", "alternative", sizes=(15, 15, 15))
        a = rejection_rate(spec, 8, small_cfg(), SeededStream(4))
        b = rejection_rate(spec, 8, small_cfg(), SeededStream(4), workers=2)
        assert (a.u_rejections, a.lrt_rejections) == (b.u_rejections, b.lrt_rejections)

    def test_replicate_error_carries_index(self):
        # arms of one subject make the covariance undefined
        spec = build_scenario("A1", sizes=(1, 1, 1))
        with pytest.raises(ReplicateError) as info:
            rejection_rate(spec, 3, small_cfg(), SeededStream(0))
        assert info.value.index == 0

    def test_strong_alternative_has_power(self):
        spec = build_scenario("A1", gamma=1.5, sizes=(40, 40, 40))
        rep = rejection_rate(spec, 10, small_cfg(), SeededStream(5))
        assert rep.u_rate >= 0.8
        assert rep.lrt_rate >= 0.8


class TestReports:
    def test_power_sweep_and_csv(self, tmp_path):
        base = build_scenario("A3", sizes=(10, 10, 10))
        reports = power_sweep(base, [0.0, 1.0], [10, 20], 4, small_cfg(), SeededStream(6))
        assert [(r.gamma, r.sizes) for r in reports] == [
            (0.0, (10, 10, 10)), (0.0, (20, 20, 20)), (1.0, (10, 10, 10)), (1.0, (20, 20, 20))]
        path = tmp_path / "grid.csv"
        write_csv(reports, path)
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert tuple(rows[0]) == CSV_COLUMNS
        assert len(rows) == 8
        assert {r["test"] for r in rows} == {"U", "LRT"}

        out = tmp_path / "grid.json"
        write_json(reports, out, small_cfg())
        payload = json.loads(out.read_text())
        assert len(payload["reports"]) == 4
        assert payload["config"]["reference_draws"] == 1000

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            power_sweep(build_scenario("A1"), [], [10], 1, small_cfg(), SeededStream(0))
