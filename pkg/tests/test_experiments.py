"""Tests for the Monte Carlo harness in services/experiments.py."""

import dataclasses

import numpy as np
import pytest

from distributions import Frechet, Normal, StrictPareto
from services import experiments
from services.errors import DegenerateExcessError, ExperimentError, TlpaInputError
from services.experiments import (ExperimentRunner, average_curves, build_preset, compare_strategies,
                                  generate_data, mixture_sample, run_case, run_experiment,
                                  run_mixture_study, run_selection_study)
from services.models import (ExperimentSpec, GibbsConfig, Mixture, SelectionGrid, ThresholdCurve,
                             ThresholdRow)
from services.threshold import scan, select
from utils.config import DEFAULT_CONFIG
from utils.helpers import repetition_seed

MIXTURE = Mixture(body=Normal(mu=5.0, sigma2=1.0), n_body=500, tail=StrictPareto(gamma=5.0), n_tail=100)


@pytest.fixture
def case_spec():
    return ExperimentSpec(name="mini-case", generator=Frechet(gamma=2.0), n_obs=40, kind="case",
                          repetitions=3, gibbs=GibbsConfig(n_pairs=50), master_seed=11, rank_range=(20, 30))


@pytest.fixture
def selection_spec():
    return ExperimentSpec(name="mini-selection", generator=Frechet(gamma=2.0), n_obs=60, kind="selection",
                          repetitions=3, grid=SelectionGrid.default(60, gamma_size=30), master_seed=5)


class TestDataGeneration:
    def test_mixture_tail_starts_at_body_maximum(self):
        data = mixture_sample(MIXTURE, seed=3)
        assert data.size == 600
        body, tail = data[:500], data[500:]
        assert np.all(tail >= body.max())
        np.testing.assert_array_equal(np.sort(data)[500:], np.sort(tail))

    def test_mixture_blocks_use_their_own_streams(self):
        data = mixture_sample(MIXTURE, seed=3)
        body = MIXTURE.body.sample(500, repetition_seed(3, 0)).values
        np.testing.assert_array_equal(data[:500], body)

    def test_generate_data_is_deterministic(self):
        first = generate_data(Frechet(gamma=2.0), 50, seed=9)
        np.testing.assert_array_equal(first, generate_data(Frechet(gamma=2.0), 50, seed=9))
        np.testing.assert_array_equal(first, Frechet(gamma=2.0).sample(50, seed=9).values)


class TestCaseExperiments:
    def test_single_repetition_equals_one_scan(self, case_spec):
        spec = dataclasses.replace(case_spec, repetitions=1)
        result = run_case(spec)
        seed = repetition_seed(spec.master_seed, 0)
        curve = scan(generate_data(spec.generator, spec.n_obs, seed), spec.rank_range, spec.gibbs.with_seed(seed))
        for name in ThresholdCurve.COLUMNS:
            np.testing.assert_array_equal(result.curve[name].to_numpy(dtype=float), curve.column(name).astype(float))
        assert list(result.curve["n_repetitions"]) == [1] * len(curve)

    def test_same_seed_same_result(self, case_spec):
        assert run_case(case_spec).curve.equals(run_case(case_spec).curve)

    def test_workers_do_not_change_the_result(self, case_spec):
        serial = run_case(case_spec, ExperimentRunner(workers=1))
        parallel = run_case(case_spec, ExperimentRunner(workers=2))
        assert serial.curve.equals(parallel.curve)
        assert [r.seed for r in serial.records] == [r.seed for r in parallel.records]

    def test_repetition_records_are_independent_of_count(self, case_spec):
        three = run_case(case_spec)
        two = run_case(dataclasses.replace(case_spec, repetitions=2))
        for a, b in zip(three.records, two.records):
            assert a.seed == b.seed
            assert a.curve.to_frame().equals(b.curve.to_frame())

    def test_case_rejects_mixture(self):
        spec = ExperimentSpec(name="m", generator=MIXTURE, n_obs=600, kind="case", repetitions=1)
        with pytest.raises(TlpaInputError):
            run_case(spec)


class TestAverageCurves:
    @staticmethod
    def _row(rank, evi):
        return ThresholdRow(rank=rank, u=float(rank), n_exceed=10 - rank, evi_sp=evi, evi_tlpa=evi, alpha_hat=1.0)

    def test_ranks_averaged_over_repetitions_that_fitted_them(self):
        first = ThresholdCurve(rows=[self._row(1, 0.4), self._row(2, 0.6)])
        second = ThresholdCurve(rows=[self._row(1, 0.6)], skipped=[(2, "insufficient tail")])
        frame = average_curves([first, second])
        assert list(frame["rank"]) == [1, 2]
        assert list(frame["n_repetitions"]) == [2, 1]
        assert frame["evi_tlpa"].tolist() == pytest.approx([0.5, 0.6])

    def test_no_curves(self):
        frame = average_curves([])
        assert frame.empty
        assert "n_repetitions" in frame.columns


class TestSelectionExperiments:
    def test_means_are_recomputable_from_records(self, selection_spec):
        result = run_selection_study(selection_spec)
        frame = result.selections_frame()
        assert len(frame) == 3
        assert result.mean_rank == pytest.approx(frame["rank"].mean())
        assert result.mean_evi == pytest.approx(frame["evi"].mean())

    def test_each_repetition_selects_on_its_own_data(self, selection_spec):
        result = run_selection_study(selection_spec)
        record = result.records[1]
        data = generate_data(selection_spec.generator, selection_spec.n_obs, record.seed)
        assert record.selection == select(data, selection_spec.grid)

    def test_summary_frame(self, selection_spec):
        summary = run_experiment(selection_spec).summary_frame()
        assert list(summary.columns) == ["experiment", "strategy", "repetitions", "failed", "mean_rank", "mean_evi"]
        assert summary.loc[0, "repetitions"] == 3

    def test_compare_strategies(self, selection_spec):
        results = compare_strategies(selection_spec)
        assert [r.spec.strategy for r in results] == ["grid", "profile"]
        assert [r.seed for r in results[0].records] == [r.seed for r in results[1].records]

    def test_compare_strategies_needs_selection(self, case_spec):
        with pytest.raises(TlpaInputError):
            compare_strategies(case_spec)

    def test_mixture_study_needs_mixture(self, selection_spec):
        with pytest.raises(TlpaInputError):
            run_mixture_study(selection_spec)


class TestFailures:
    def test_too_many_failures(self, case_spec, monkeypatch):
        def failing_scan(*args, **kwargs):
            raise DegenerateExcessError(gamma=1e-300)

        monkeypatch.setattr(experiments, "scan", failing_scan)
        with pytest.raises(ExperimentError) as excinfo:
            run_case(case_spec)
        assert excinfo.value.n_failed == 3
        assert excinfo.value.repetitions == 3

    def test_failures_within_tolerance(self, selection_spec, monkeypatch):
        def failing_select(*args, **kwargs):
            raise DegenerateExcessError(gamma=1e-300)

        monkeypatch.setattr(experiments, "select_threshold", failing_select)
        spec = dataclasses.replace(selection_spec, failure_tolerance=1.0)
        result = run_selection_study(spec)
        assert result.n_failed == 3
        assert result.mean_rank is None
        assert all("DegenerateExcessError" in r.error for r in result.records)

    def test_runner_needs_a_worker(self):
        with pytest.raises(TlpaInputError):
            ExperimentRunner(workers=0)


class TestPresets:
    def test_table1_preset(self):
        spec = build_preset("table1", DEFAULT_CONFIG, master_seed=4, repetitions=5)
        assert spec.kind == "selection"
        assert spec.n_obs == 600
        assert spec.repetitions == 5
        assert spec.grid.rank_grid[0] == 300
        assert spec.grid.rank_grid[-1] == 590
        assert spec.strategy == DEFAULT_CONFIG["selection_strategy"]

    def test_case_preset_defaults_from_config(self):
        spec = build_preset("case1", DEFAULT_CONFIG)
        assert spec.kind == "case"
        assert spec.repetitions == DEFAULT_CONFIG["repetitions"]
        assert spec.gibbs.n_pairs == DEFAULT_CONFIG["n_pairs"]
        assert spec.grid is None

    def test_unknown_preset(self):
        with pytest.raises(TlpaInputError):
            build_preset("case9", DEFAULT_CONFIG)

    @pytest.mark.parametrize("kwargs", [{"n_obs": 10}, {"repetitions": 0}, {"kind": "sweep"}, {"strategy": "bayes"},
                                        {"rank_range": (0, 5)}, {"rank_range": (30, 20)}, {"rank_range": (5, 39)}])
    def test_invalid_specs(self, kwargs):
        base = {"name": "x", "generator": Frechet(gamma=2.0), "n_obs": 40}
        with pytest.raises(TlpaInputError):
            ExperimentSpec(**{**base, **kwargs})
