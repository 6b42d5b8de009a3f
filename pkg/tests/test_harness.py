
import numpy as np
import pytest

import levy_lab as ll
from levy_lab.errors import ConfigurationError
from levy_lab.harness import format_float, sidecar_path, write_csv


class TestExperimentConfig:
    def test_json_round_trip(self, nig_model):
        config = ll.ExperimentConfig(
            model=nig_model,
            method="direct",
            n=123,
            delta=0.007,
            reps=9,
            level=0.85,
            base_seed=4,
            deltas=(0.01, 0.001),
            time_horizon=20.0,
            spectral=ll.SpectralConfig(h=0.3, sigma_mode="known", sigma2=0.25),
        )
        restored = ll.ExperimentConfig.from_json(config.to_json())
        assert restored == config

    def test_round_trip_preserves_awkward_floats(self, gamma_model):
        config = ll.ExperimentConfig(model=gamma_model, delta=0.1 + 2e-17, level=1 / 3)
        assert ll.ExperimentConfig.from_json(config.to_json()) == config

    def test_validation(self, gamma_model):
        with pytest.raises(ConfigurationError):
            ll.ExperimentConfig(model=gamma_model, reps=0)
        with pytest.raises(ConfigurationError):
            ll.ExperimentConfig(model=gamma_model, method="bayes")
        with pytest.raises(ConfigurationError):
            ll.ExperimentConfig(model=gamma_model, level=1.2)
        with pytest.raises(ConfigurationError):
            ll.ExperimentConfig(model=gamma_model, t_min=1.0)


class TestTruthTable:
    def test_node_values_match_pointwise_quadrature(self, gamma_model, nig_model, clip_min):
        for model in (gamma_model, nig_model):
            tx, ty = ll.truth_table(model, clip_min, -9.0, 9.0)
            idx = np.linspace(100, tx.size - 100, 9, dtype=int)
            want = np.array([ll.true_N(model, clip_min, t, tol=1e-10) for t in tx[idx]])
            assert np.max(np.abs(ty[idx] - want)) < 1e-8

    def test_interpolation_error_is_immaterial(self, gamma_model, clip_min):
        # linear interpolation between dense nodes stays orders of magnitude
        # below any band half-width used in the experiments
        tx, ty = ll.truth_table(gamma_model, clip_min, -9.0, 9.0)
        mids = 0.5 * (tx[2000:2600:100] + tx[2001:2601:100])
        got = np.interp(mids, tx, ty)
        want = np.array([ll.true_N(gamma_model, clip_min, t, tol=1e-10) for t in mids])
        assert np.max(np.abs(got - want)) < 5e-5


class TestDefaultGrid:
    def test_contains_anchor_and_clamps(self):
        tight = ll.default_t_grid(np.full(100, 0.2), points=128)
        assert tight.size == 128
        assert tight[0] == -3.0 and tight[-1] == 3.0
        spread = ll.default_t_grid(
            np.concatenate([np.full(100, 0.2), [40.0, -40.0]]),
            points=64,
            clamp=(-8.0, 8.0),
        )
        assert spread[0] == -8.0 and spread[-1] == 8.0
        wide = ll.default_t_grid(np.linspace(-6, 6, 10_000), points=64)
        assert wide[0] == pytest.approx(-6.0, abs=0.05)
        assert wide[-1] == pytest.approx(6.0, abs=0.05)


class TestRunCoverage:
    def test_degenerate_model_hits(self):
        config = ll.ExperimentConfig(
            model=ll.LevyModel.brownian(0.0),
            method="direct",
            n=50,
            delta=0.1,
            reps=1,
            base_seed=0,
        )
        report = ll.run_coverage(config, workers=1)
        assert report.hits == 1
        assert report.failures == 0
        assert report.coverage == 1.0

    def test_parallel_equals_serial(self, gamma_model):
        config = ll.ExperimentConfig(
            model=gamma_model, method="direct", n=300, delta=0.01, reps=12, base_seed=5
        )
        serial = ll.run_coverage(config, workers=1)
        parallel = ll.run_coverage(config, workers=2)
        assert serial == parallel

    def test_failures_are_counted_separately(self, gamma_model):
        # a floor above 1 guards every frequency node and fails estimation
        config = ll.ExperimentConfig(
            model=gamma_model,
            method="spectral",
            n=50,
            delta=0.01,
            reps=3,
            base_seed=1,
            spectral=ll.SpectralConfig(cf_floor=2.0),
        )
        report = ll.run_coverage(config, workers=1)
        assert report.failures == 3
        assert report.hits == 0
        assert report.hits + report.misses + report.failures == report.reps

    def test_spectral_small_run(self, gamma_model):
        config = ll.ExperimentConfig(
            model=gamma_model, method="spectral", n=400, delta=0.01, reps=6, base_seed=2
        )
        report = ll.run_coverage(config, workers=2)
        assert report.reps == 6
        assert 0.0 <= report.coverage <= 1.0


class TestRunBiasSweep:
    def test_requires_two_deltas(self, gamma_model):
        config = ll.ExperimentConfig(model=gamma_model, deltas=(0.01,))
        with pytest.raises(ConfigurationError):
            ll.run_bias_sweep(config, workers=1)

    def test_identical_deltas_give_identical_rows(self, gamma_model):
        config = ll.ExperimentConfig(
            model=gamma_model,
            method="direct",
            n=200,
            reps=3,
            base_seed=3,
            deltas=(0.01, 0.01),
        )
        rows = ll.run_bias_sweep(config, workers=1)
        assert rows[0].to_dict() == rows[1].to_dict()

    def test_error_shrinks_with_delta(self, gamma_model):
        config = ll.ExperimentConfig(
            model=gamma_model,
            method="direct",
            reps=5,
            base_seed=7,
            deltas=(0.01, 0.001),
            time_horizon=20.0,
        )
        rows = ll.run_bias_sweep(config, workers=2)
        assert rows[0].n == 2000 and rows[1].n == 20000
        assert rows[1].mean_sup_abs_error < rows[0].mean_sup_abs_error
        assert rows[1].sup_abs_bias < rows[0].sup_abs_bias


class TestRunFigure:
    def test_shapes_and_band(self, gamma_model):
        config = ll.ExperimentConfig(
            model=gamma_model, method="direct", n=200, delta=0.01, reps=4, base_seed=0,
            grid_points=64,
        )
        data = ll.run_figure(config)
        assert data.curves.shape == (4, 64)
        assert data.grid[0] == -3.0 and data.grid[-1] == 3.0
        width = data.upper - data.lower
        assert np.allclose(width, width[0])
        assert np.allclose(data.upper - data.curves[0], (data.upper - data.lower) / 2)
        # truth increases over the jump support
        assert data.truth[-1] > data.truth[0]

    def test_nig_default_range(self, nig_model):
        config = ll.ExperimentConfig(
            model=nig_model, method="direct", n=100, delta=0.01, reps=1, grid_points=16
        )
        data = ll.run_figure(config)
        assert data.grid[0] == -2.0 and data.grid[-1] == 2.0

    def test_nig_truth_grows_linearly_at_zero(self, nig_model, clip_min):
        # the high small-jump activity makes the target near-linear through 0,
        # with slope close to the density limit of x^2 nu there
        grid = np.linspace(-0.3, 0.3, 13)
        vals = ll.true_N_curve(nig_model, clip_min, grid)
        slopes = np.diff(vals) / np.diff(grid)
        alpha, beta, delta = ll.nig_shape_params(1.5, 0.1, 0.5)
        assert np.all(slopes > 0.9 * slopes.max())
        assert slopes.max() == pytest.approx(delta / np.pi, rel=0.05)

    def test_zero_reps_rejected(self, gamma_model):
        with pytest.raises(ConfigurationError):
            ll.ExperimentConfig(model=gamma_model, reps=0)


class TestWriters:
    def test_format_float_17_digits(self):
        assert format_float(0.1) == "0.10000000000000001"
        assert float(format_float(1 / 3)) == 1 / 3

    def test_write_csv_and_sidecar(self, tmp_path):
        out = tmp_path / "table.csv"
        write_csv(out, ["a", "b"], [(1, 0.5), (2, 1.0 / 3.0)])
        text = out.read_text()
        assert text.splitlines()[0] == "a,b"
        assert "0.33333333333333331" in text
        assert sidecar_path(out).name == "table.meta.json"


class TestWorkers:
    def test_env_variable_controls_pool(self, monkeypatch):
        monkeypatch.setenv("LEVY_LAB_THREADS", "3")
        assert ll.resolve_workers() == 3
        monkeypatch.setenv("LEVY_LAB_THREADS", "junk")
        with pytest.raises(ConfigurationError):
            ll.resolve_workers()
        monkeypatch.delenv("LEVY_LAB_THREADS")
        assert ll.resolve_workers(5) == 5
        assert ll.resolve_workers() >= 1
