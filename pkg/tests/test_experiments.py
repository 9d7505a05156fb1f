import numpy as np
import pytest

from graphdenoise import (
    InvalidArgumentError,
    NoiseSpec,
    add_noise,
    build_grid_graph,
    build_knn_graph,
    ccp_vs_pg_benchmark,
    dirichlet_energy,
    eigendecompose,
    make_cluster_data,
    parse_experiment_spec,
    pearson_correlation,
    relative_error,
    run_experiment,
    sample_prior,
    uniform_loss,
)
from graphdenoise.experiments import derive_rng

TINY_SPEC = """
[experiment]
name = tiny
seed = 0
repeats = 1

[graph]
kind = grid
height = 4
width = 4

[signal]
source = prior-sample
count = 2
kappa = 1.0

[noise]
kind = gaussian
levels = 0.5 1.0 2.0

[metrics]
names = relative-error

[method.gaussian]
tau = estimate

[method.local-average]
t = 1
"""


class TestNoise:
    def test_dropout_p_one_zeroes_everything(self, rng):
        f = rng.normal(size=50)
        out = add_noise(f, NoiseSpec(kind="bernoulli-dropout", p=1.0, seed=3))
        assert np.array_equal(out, np.zeros(50))

    def test_identity_cases(self, rng):
        f = rng.normal(size=20)
        assert np.array_equal(
            add_noise(f, NoiseSpec(kind="gaussian", sigma=0.0, seed=1)), f
        )
        assert np.array_equal(
            add_noise(f, NoiseSpec(kind="bernoulli-dropout", p=0.0, seed=1)), f
        )

    def test_uniform_scale_range(self, rng):
        f = rng.uniform(0.5, 2.0, size=200)
        out = add_noise(f, NoiseSpec(kind="uniform-scale", seed=9))
        assert np.all(out >= 0.0) and np.all(out <= f)

    def test_salt_pepper_values(self, rng):
        f = np.full(500, 0.5)
        out = add_noise(
            f, NoiseSpec(kind="salt-pepper", p=0.5, lo=-1.0, hi=2.0, seed=4)
        )
        changed = out != 0.5
        assert changed.any()
        assert set(np.unique(out[changed])) <= {-1.0, 2.0}

    def test_gaussian_moments_monte_carlo(self):
        n = 100_000
        f = np.zeros(n)
        out = add_noise(f, NoiseSpec(kind="gaussian", sigma=2.0, seed=11))
        assert abs(out.mean()) <= 3 * 2.0 / np.sqrt(n)
        assert out.var() == pytest.approx(4.0, rel=0.05)

    def test_deterministic_per_seed(self, rng):
        f = rng.normal(size=30)
        spec = NoiseSpec(kind="salt-pepper", p=0.3, lo=0.0, hi=1.0, seed=21)
        assert np.array_equal(add_noise(f, spec), add_noise(f, spec))

    def test_validation(self):
        with pytest.raises(InvalidArgumentError):
            NoiseSpec(kind="poisson")
        with pytest.raises(InvalidArgumentError):
            NoiseSpec(kind="gaussian", sigma=-1.0)
        with pytest.raises(InvalidArgumentError):
            NoiseSpec(kind="bernoulli-dropout", p=1.5)


class TestMetrics:
    def test_relative_error_examples(self, rng):
        f = rng.normal(size=10)
        assert relative_error(f, f) == 0.0
        assert relative_error(f, np.zeros(10)) == pytest.approx(1.0)
        assert relative_error(f, 2 * f) == pytest.approx(1.0)
        with pytest.raises(InvalidArgumentError):
            relative_error(np.zeros(10), f)

    def test_pearson_examples(self, rng):
        f = rng.normal(size=10)
        assert pearson_correlation(f, f) == pytest.approx(1.0)
        assert pearson_correlation(f, -f) == pytest.approx(-1.0)
        with pytest.raises(InvalidArgumentError):
            pearson_correlation(f, np.full(10, 3.0))


class TestClusterData:
    def test_single_cluster_low_signal_constant(self):
        _, low, _ = make_cluster_data(1, 40, seed=0)
        assert np.ptp(low[0]) == 0.0

    def test_point_count(self):
        pts, low, high = make_cluster_data(5, 200, seed=0)
        assert pts.shape == (1000, 2)
        assert low.shape[1] == 1000 and high.shape[1] == 1000

    def test_deterministic(self):
        a = make_cluster_data(3, 30, seed=7)
        b = make_cluster_data(3, 30, seed=7)
        for x, y in zip(a, b):
            assert np.array_equal(x, y)

    def test_low_frequency_smoother_than_high(self):
        pts, low, high = make_cluster_data(5, 60, seed=1, n_signals=2)
        g = build_knn_graph(pts, 10)
        for s in range(2):
            assert dirichlet_energy(g, low[s]) < dirichlet_energy(g, high[s])


class TestRngStreams:
    def test_same_path_reproduces(self):
        a = derive_rng(5, "x", 3).standard_normal(4)
        b = derive_rng(5, "x", 3).standard_normal(4)
        assert np.array_equal(a, b)

    def test_different_paths_differ(self):
        a = derive_rng(5, "x", 3).standard_normal(4)
        b = derive_rng(5, "x", 4).standard_normal(4)
        c = derive_rng(6, "x", 3).standard_normal(4)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestSpecParsing:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "tiny.spec"
        path.write_text(TINY_SPEC)
        spec = parse_experiment_spec(path)
        assert spec.name == "tiny"
        assert spec.noise_levels == (0.5, 1.0, 2.0)
        assert [m.name for m in spec.methods] == ["gaussian", "local-average"]

    def test_unknown_method_named(self, tmp_path):
        path = tmp_path / "bad.spec"
        path.write_text(TINY_SPEC + "\n[method.sorcery]\nt = 1\n")
        with pytest.raises(InvalidArgumentError, match="sorcery"):
            parse_experiment_spec(path)

    def test_missing_section(self, tmp_path):
        path = tmp_path / "bad.spec"
        path.write_text("[experiment]\nname = x\n")
        with pytest.raises(InvalidArgumentError, match="graph"):
            parse_experiment_spec(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InvalidArgumentError):
            parse_experiment_spec(tmp_path / "nope.spec")


class TestRunner:
    def test_row_counting(self, tmp_path):
        path = tmp_path / "tiny.spec"
        path.write_text(TINY_SPEC)
        spec = parse_experiment_spec(path)
        table = run_experiment(spec)
        # 2 methods x 1 param combo x 3 levels x 1 metric x 1 repeat
        assert len(table.rows) == 6

    def test_empty_method_list_empty_table(self, tmp_path):
        path = tmp_path / "tiny.spec"
        path.write_text(TINY_SPEC.split("[method.gaussian]")[0])
        table = run_experiment(parse_experiment_spec(path))
        assert len(table.rows) == 0

    def test_determinism_and_thread_invariance(self, tmp_path):
        path = tmp_path / "tiny.spec"
        path.write_text(TINY_SPEC)
        spec = parse_experiment_spec(path)

        def fingerprint(table):
            return [
                (r.method, r.param_json, r.noise_kind, r.noise_level, r.metric, r.value)
                for r in table.rows
            ]

        t1 = run_experiment(spec, threads=1)
        t2 = run_experiment(spec, threads=1)
        t3 = run_experiment(spec, threads=4)
        assert fingerprint(t1) == fingerprint(t2) == fingerprint(t3)

    def test_method_failure_becomes_error_row(self, tmp_path):
        # nuclear needs a grid; a knn graph cell must fail gracefully
        spec_text = TINY_SPEC.replace(
            "[method.gaussian]\ntau = estimate\n", "[method.nuclear]\ntau = 1\n"
        ).replace(
            "kind = grid\nheight = 4\nwidth = 4",
            "kind = synthetic-clusters\nclusters = 1\npoints-per-cluster = 40\nknn = 5",
        )
        path = tmp_path / "fail.spec"
        path.write_text(spec_text)
        table = run_experiment(parse_experiment_spec(path))
        nuc = [r for r in table.rows if r.method == "nuclear"]
        assert nuc and all(r.metric == "error" and np.isnan(r.value) for r in nuc)
        others = [r for r in table.rows if r.method == "local-average"]
        assert others and all(np.isfinite(r.value) for r in others)

    def test_csv_shape(self, tmp_path):
        path = tmp_path / "tiny.spec"
        path.write_text(TINY_SPEC)
        table = run_experiment(parse_experiment_spec(path))
        out = tmp_path / "table.csv"
        table.to_csv(out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "method,param_json,noise_kind,noise_level,metric,value,runtime_s,seed"
        assert len(lines) == 7


class TestBenchmark:
    def test_deterministic_and_beats_truth(self):
        g = build_grid_graph(8, 8)
        basis = eigendecompose(g)
        truth = sample_prior(basis, 1.0, rng_seed=2)
        truth = truth - truth.min() + 0.3
        rep1 = ccp_vs_pg_benchmark(truth, g, kappa=1.0, seed=0)
        rep2 = ccp_vs_pg_benchmark(truth, g, kappa=1.0, seed=0)
        assert np.array_equal(rep1.noisy, rep2.noisy)
        assert np.array_equal(rep1.ccp_losses, rep2.ccp_losses)
        assert np.array_equal(rep1.pg_losses, rep2.pg_losses)
        assert rep1.ccp_final_loss <= rep1.truth_loss
        assert rep1.pg_final_loss <= rep1.truth_loss
        assert rep1.ccp_outer_iterations <= 50

    def test_trace_csv(self, tmp_path):
        g = build_grid_graph(5, 5)
        basis = eigendecompose(g)
        truth = sample_prior(basis, 1.0, rng_seed=4) + 5.0
        rep = ccp_vs_pg_benchmark(truth, g, kappa=1.0, seed=1)
        out = tmp_path / "traces.csv"
        rep.write_traces_csv(out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "method,iteration,loss,elapsed_s"
        assert len(lines) == len(rep.ccp_losses) + len(rep.pg_losses) + 1
