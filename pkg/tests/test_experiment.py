"""Monte-Carlo risk harness, table/scatter emission, and parse-back."""

import numpy as np
import pytest

from twostage import (
    ExperimentConfig,
    PriorKind,
    PriorSpec,
    SeedSpec,
    TrainingConfig,
    WeibullParams,
    crlb,
    emit_scatter,
    fit_bayes,
    reproduce_table,
    run_mse_experiment,
)
from twostage import estimator as est
from twostage import experiment as exp

TINY_TRAIN = TrainingConfig(
    m_theta=12,
    n_obs=150,
    n_quantiles=4,
    ridge=1e-8,
    theta_distribution=PriorSpec(PriorKind.UNIFORM, 1.0, 20.0),
    seed=SeedSpec(303),
)


def tiny_config(**kwargs):
    defaults = dict(
        training=TINY_TRAIN,
        eval_points=((2.0, 2.0), (4.0, 8.0)),
        mc_runs=4,
        emit=frozenset(),
    )
    defaults.update(kwargs)
    return ExperimentConfig(**defaults)


class TestConfig:
    def test_rejects_eval_point_outside_support(self):
        with pytest.raises(ValueError):
            tiny_config(eval_points=((0.5, 2.0),))

    def test_rejects_unknown_emit(self):
        with pytest.raises(ValueError):
            tiny_config(emit=frozenset({"plots"}))

    def test_from_dict_round_trip(self):
        data = {
            "training": {
                "m_theta": 5,
                "n_obs": 80,
                "n_quantiles": 3,
                "ridge": 1e-8,
                "theta_distribution": {"kind": "reciprocal", "lower": 1, "upper": 20},
                "seed": {"root_seed": 9, "stream_index": 1},
            },
            "eval_points": [[2, 2]],
            "mc_runs": 3,
            "output_dir": "out",
            "emit": ["table"],
        }
        config = exp.config_from_dict(data)
        assert config.training.m_theta == 5
        assert config.training.theta_distribution.kind is PriorKind.RECIPROCAL
        assert config.training.seed == SeedSpec(9, 1)
        assert config.mc_runs == 3
        assert config.emit == frozenset({"table"})

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ValueError):
            exp.config_from_dict({"mc_run": 3})
        with pytest.raises(ValueError):
            exp.config_from_dict({"training": {"m": 2}})


class TestRunMseExperiment:
    def test_perfect_oracle_stub_has_zero_mse(self, monkeypatch):
        config = tiny_config(eval_points=((5.0, 7.0),), mc_runs=2)
        model = fit_bayes(TINY_TRAIN)
        monkeypatch.setattr(exp.est, "estimate", lambda model, y: (5.0, 7.0))
        report = run_mse_experiment(config, model)
        assert report.rows[0].mse_eta == 0.0
        assert report.rows[0].mse_gamma == 0.0

    def test_doubling_runs_extends_error_stream(self):
        model = fit_bayes(TINY_TRAIN)
        short = run_mse_experiment(tiny_config(mc_runs=3), model, keep_errors=True)
        long = run_mse_experiment(tiny_config(mc_runs=6), model, keep_errors=True)
        for a, b in zip(short.errors, long.errors):
            np.testing.assert_array_equal(a, b[:3])

    def test_crlb_columns_match_module_exactly(self):
        model = fit_bayes(TINY_TRAIN)
        config = tiny_config()
        report = run_mse_experiment(config, model)
        for row, point in zip(report.rows, config.eval_points):
            bounds = crlb(WeibullParams(*point), TINY_TRAIN.n_obs)
            assert (row.crlb_eta, row.crlb_gamma) == bounds
            assert row.efficiency_eta == row.mse_eta / row.crlb_eta

    def test_rejects_quantile_mismatch(self):
        model = fit_bayes(TINY_TRAIN)
        other = tiny_config(
            training=TrainingConfig(
                m_theta=4, n_obs=150, n_quantiles=5, seed=SeedSpec(1)
            )
        )
        with pytest.raises(ValueError):
            run_mse_experiment(other, model)

    @pytest.mark.parametrize("workers", [1, 3])
    def test_worker_count_does_not_change_results(self, workers):
        model = fit_bayes(TINY_TRAIN)
        base = run_mse_experiment(tiny_config(), model, workers=1)
        other = run_mse_experiment(tiny_config(), model, workers=workers)
        assert base.rows == other.rows

    def test_split_halves_agree_within_standard_errors(self):
        model = fit_bayes(TINY_TRAIN)
        report = run_mse_experiment(
            tiny_config(mc_runs=200, eval_points=((2.0, 2.0),)), model, keep_errors=True
        )
        sq = report.errors[0] ** 2
        first, second = sq[:100], sq[100:]
        for col in (0, 1):
            diff = abs(first[:, col].mean() - second[:, col].mean())
            se = np.sqrt(first[:, col].var() / 100 + second[:, col].var() / 100)
            assert diff <= 4 * se


class TestScatter:
    def test_row_count_and_determinism(self, tmp_path):
        model = fit_bayes(TINY_TRAIN)
        config = tiny_config(output_dir=tmp_path / "a", emit=frozenset({"scatter"}))
        path = emit_scatter(model, config)
        lines = path.read_text().splitlines()
        assert len(lines) == TINY_TRAIN.m_theta + 1
        config2 = tiny_config(output_dir=tmp_path / "b", emit=frozenset({"scatter"}))
        path2 = emit_scatter(model, config2)
        assert path.read_bytes() == path2.read_bytes()

    def test_rejects_quantile_mismatch(self, tmp_path):
        model = fit_bayes(TINY_TRAIN)
        other = tiny_config(
            training=TrainingConfig(m_theta=4, n_obs=150, n_quantiles=5, seed=SeedSpec(1)),
            output_dir=tmp_path,
        )
        with pytest.raises(ValueError):
            emit_scatter(model, other)

    def test_parse_back_lossless(self, tmp_path):
        model = fit_bayes(TINY_TRAIN)
        config = tiny_config(output_dir=tmp_path)
        path = emit_scatter(model, config)
        data = exp.read_scatter(path)
        assert data.shape == (TINY_TRAIN.m_theta, 4)
        # 17 significant digits round-trip float64 exactly
        rewritten = "\n".join(
            ",".join(f"{v:.17g}" for v in row) for row in data
        )
        assert rewritten in path.read_text()


class TestReports:
    def test_write_read_round_trip(self, tmp_path):
        model = fit_bayes(TINY_TRAIN)
        report = run_mse_experiment(tiny_config(), model)
        path = exp.write_risk_reports([report], tmp_path / "report.csv")
        parsed = exp.read_risk_reports(path)
        assert len(parsed) == 1
        assert parsed[0].method == report.method
        # file -> objects -> file is byte-identical
        second = exp.write_risk_reports(parsed, tmp_path / "again.csv")
        assert second.read_bytes() == path.read_bytes()


@pytest.fixture(scope="module")
def outputs(tmp_path_factory):
    out = tmp_path_factory.mktemp("table")
    config = ExperimentConfig(
        training=TINY_TRAIN,
        eval_points=exp.TABLE_POINTS,
        mc_runs=2,
        output_dir=out,
        emit=frozenset({"table", "scatter", "model"}),
    )
    reports = reproduce_table(config)
    return out, config, reports


class TestReproduceTable:
    def test_three_method_reports_with_six_rows_each(self, outputs):
        _, _, reports = outputs
        assert [r.method for r in reports] == [
            "bayes-uniform",
            "bayes-reciprocal",
            "minimax",
        ]
        assert sum(len(r.rows) for r in reports) == 18

    def test_crlb_columns_identical_across_methods(self, outputs):
        _, _, reports = outputs
        for a, b in zip(reports[0].rows, reports[1].rows):
            assert (a.crlb_eta, a.crlb_gamma) == (b.crlb_eta, b.crlb_gamma)
        for a, b in zip(reports[0].rows, reports[2].rows):
            assert (a.crlb_eta, a.crlb_gamma) == (b.crlb_eta, b.crlb_gamma)

    def test_emits_all_requested_files(self, outputs):
        out, _, _ = outputs
        names = {p.name for p in out.iterdir()}
        assert "table1.csv" in names
        for label in ("bayes-uniform", "bayes-reciprocal", "minimax"):
            assert f"model_{label}.txt" in names
            assert f"scatter_{label}.csv" in names

    def test_table_file_has_eighteen_rows(self, outputs):
        out, _, reports = outputs
        parsed = exp.read_risk_reports(out / "table1.csv")
        assert [r.method for r in parsed] == [r.method for r in reports]
        assert sum(len(r.rows) for r in parsed) == 18

    def test_saved_models_reload(self, outputs):
        out, _, _ = outputs
        model = est.load_model(out / "model_minimax.txt")
        assert model.method == "minimax"

    def test_rerun_is_byte_identical_across_worker_counts(self, outputs, tmp_path):
        out, config, _ = outputs
        from dataclasses import replace

        for workers in (1, 3):
            rerun_dir = tmp_path / f"w{workers}"
            reproduce_table(replace(config, output_dir=rerun_dir), workers=workers)
            for name in ("table1.csv", "scatter_minimax.csv", "model_bayes-uniform.txt"):
                assert (rerun_dir / name).read_bytes() == (out / name).read_bytes()
