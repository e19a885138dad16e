import numpy as np
import pytest

from eqml import data as dt
from eqml import harness as hn
from eqml import surrogate as sg
from eqml.errors import EmptyDataset, InvalidArgs
from eqml.ringgrid import build_grid


def micro_config(**overrides):
    base = dict(
        n_classes=2,
        train_per_class=8,
        test_per_class=4,
        n_rad=2,
        n_orb=2,
        height=16,
        width=16,
        depth=2,
        epochs=1,
        seeds=(0,),
        variants=("clean", "t1"),
        surrogate_epochs=3,
        eps_grid=(0.0, 0.1),
    )
    base.update(overrides)
    return hn.ExperimentConfig(**base)


def energy_split_dataset(grid, n, seed):
    """Toy task: class 0 concentrates energy on inner rings, class 1 on outer."""
    rng = np.random.default_rng(seed)
    half = grid.n_rings // 2
    values, labels = [], []
    for i in range(n):
        c = i % 2
        v = rng.uniform(0.05, 0.25, (grid.n_rings, grid.n_angles))
        if c == 0:
            v[:half] += 0.6
        else:
            v[half:] += 0.6
        values.append(np.clip(v, 0, 1))
        labels.append(c)
    return dt.Dataset(grid, np.stack(values), np.array(labels))


class TestExperimentConfig:
    def test_defaults_valid(self):
        cfg = hn.ExperimentConfig()
        assert cfg.eps_grid[0] == 0.0
        assert cfg.seeds == (0, 1, 2)

    def test_empty_seeds_rejected(self):
        with pytest.raises(InvalidArgs):
            hn.ExperimentConfig(seeds=())

    def test_eps_grid_must_start_at_zero(self):
        with pytest.raises(InvalidArgs):
            hn.ExperimentConfig(eps_grid=(0.05, 0.1))

    def test_eps_grid_must_ascend(self):
        with pytest.raises(InvalidArgs):
            hn.ExperimentConfig(eps_grid=(0.0, 0.2, 0.1))

    def test_model_cfg_override(self):
        cfg = micro_config()
        assert cfg.model_cfg().readout_mode == "standard"
        assert cfg.model_cfg("m0_suppressed").readout_mode == "m0_suppressed"

    def test_desk_scale_preset(self):
        cfg = hn.desk_scale_preset(depth=4, seeds=(7,))
        assert cfg.depth == 4
        assert cfg.seeds == (7,)


class TestResolveThreads:
    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("EQML_THREADS", "3")
        assert hn.resolve_threads(1) == 3
        assert hn.resolve_threads(None) == 3

    def test_requested(self, monkeypatch):
        monkeypatch.delenv("EQML_THREADS", raising=False)
        assert hn.resolve_threads(4) == 4
        assert hn.resolve_threads(None) == 1
        assert hn.resolve_threads(0) == 1


class TestMakeDatasets:
    def test_sizes_and_disjoint_seeds(self):
        cfg = micro_config()
        train, test = hn.make_datasets(cfg, 0)
        assert len(train) == 16
        assert len(test) == 8
        assert train.meta["seed"] == 0
        assert test.meta["seed"] == 10_000

    def test_deterministic(self):
        cfg = micro_config()
        a, _ = hn.make_datasets(cfg, 1)
        b, _ = hn.make_datasets(cfg, 1)
        assert np.array_equal(a.values, b.values)


class TestTrainQuantum:
    def test_learns_energy_split(self):
        grid = build_grid(3, 2, 32, 32)
        train = energy_split_dataset(grid, 200, seed=0)
        model_cfg = hn.ExperimentConfig(n_rad=3, n_orb=2, depth=8).model_cfg()
        params, history = hn.train_quantum(model_cfg, train, seed=0, epochs=15)
        assert len(history) == 15
        assert hn.evaluate(model_cfg, params, train) >= 0.9

    def test_zero_epochs_returns_initial(self):
        from eqml import eqmodel as eq

        grid = build_grid(2, 2, 16, 16)
        train = energy_split_dataset(grid, 8, seed=0)
        model_cfg = micro_config().model_cfg()
        params, history = hn.train_quantum(model_cfg, train, seed=5, epochs=0)
        assert history == []
        assert np.array_equal(params.theta, eq.init_params(model_cfg, 5).theta)

    def test_deterministic(self):
        grid = build_grid(2, 2, 16, 16)
        train = energy_split_dataset(grid, 12, seed=0)
        model_cfg = micro_config().model_cfg()
        a, _ = hn.train_quantum(model_cfg, train, seed=2, epochs=2)
        b, _ = hn.train_quantum(model_cfg, train, seed=2, epochs=2)
        assert np.array_equal(a.theta, b.theta)

    def test_empty_raises(self, grid22):
        empty = dt.Dataset(grid22, np.zeros((0, 4, 4)), np.zeros(0, dtype=int))
        with pytest.raises(EmptyDataset):
            hn.train_quantum(micro_config().model_cfg(), empty, 0)
        with pytest.raises(EmptyDataset):
            hn.evaluate(micro_config().model_cfg(), None, empty)


class TestProtocolMatrix:
    def test_rows_and_t1_delta_zero(self):
        cfg = micro_config()
        rows = hn.protocol_matrix(cfg)
        # per seed: one panel-a row per variant plus one panel-b row per
        # non-clean variant
        assert len(rows) == 3
        by_key = {(r.train_variant, r.eval_variant): r for r in rows}
        # the model is exactly invariant to the ring scramble, so the
        # clean-trained accuracy on the scrambled test set matches clean
        assert by_key[("clean", "t1")].accuracy == by_key[("clean", "clean")].accuracy
        for r in rows:
            assert r.surrogate == "none"
            assert r.epsilon == 0.0
            assert 0.0 <= r.accuracy <= 1.0


class TestTransferSweep:
    def _setup(self):
        cfg = micro_config(surrogate_epochs=5)
        train, test = hn.make_datasets(cfg, 0)
        model_cfg = cfg.model_cfg()
        params, _ = hn.train_quantum(model_cfg, train, 0, epochs=1)
        surrogate = hn.train_surrogate_for(cfg, train, 0)
        return cfg, model_cfg, params, surrogate, test

    def test_rows_structure(self):
        cfg, model_cfg, params, surrogate, test = self._setup()
        rows = hn.transfer_sweep(cfg, model_cfg, params, surrogate, test, 0)
        assert len(rows) == 2 * len(cfg.eps_grid)
        kinds = {(r.eval_variant, r.epsilon) for r in rows}
        assert ("whitebox", 0.0) in kinds and ("transfer", 0.1) in kinds
        # epsilon = 0 rows carry the unattacked accuracies
        wb0 = [r for r in rows if r.eval_variant == "whitebox" and r.epsilon == 0.0][0]
        assert abs(wb0.accuracy - sg.accuracy(surrogate, test.flat(), test.labels)) < 1e-12

    def test_threaded_matches_serial(self, monkeypatch):
        monkeypatch.delenv("EQML_THREADS", raising=False)
        cfg, model_cfg, params, surrogate, test = self._setup()
        serial = hn.transfer_sweep(cfg, model_cfg, params, surrogate, test, 0, threads=1)
        threaded = hn.transfer_sweep(cfg, model_cfg, params, surrogate, test, 0, threads=2)
        assert serial == threaded


class TestSurrogateFor:
    def test_kinds(self):
        cfg = micro_config()
        train, _ = hn.make_datasets(cfg, 0)
        assert isinstance(hn.train_surrogate_for(cfg, train, 0), sg.LinearModel)
        cfg_mlp = micro_config(surrogate_kind="mlp")
        assert isinstance(hn.train_surrogate_for(cfg_mlp, train, 0), sg.MlpModel)

    def test_unknown_kind(self):
        cfg = micro_config(surrogate_kind="svm")
        train, _ = hn.make_datasets(cfg, 0)
        with pytest.raises(InvalidArgs):
            hn.train_surrogate_for(cfg, train, 0)


class TestRowsCsv:
    def test_round_trip(self):
        rows = [
            hn.ResultRow("synth-rings", "clean", "t1", "none", "none", 0.0, 0, 0.875, 80),
            hn.ResultRow("synth-rings", "clean", "transfer", "lc", "pgd", 0.125, 1,
                         1 / 3, 80),
        ]
        back = hn.rows_from_csv(hn.rows_to_csv(rows))
        assert back == rows

    def test_header_checked(self):
        with pytest.raises(InvalidArgs):
            hn.rows_from_csv("wrong,header\n1,2\n")

    def test_csv_is_byte_stable(self):
        rows = [hn.ResultRow("d", "clean", "clean", "none", "none", 0.0, 0, 0.7, 10)]
        assert hn.rows_to_csv(rows) == hn.rows_to_csv(rows)
