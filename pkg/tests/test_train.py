import math

import numpy as np
import pytest

import importlib

from sparxnet import data

tr = importlib.import_module("sparxnet.train")
from sparxnet.model import ModelConfig, TemperatureSchedule
from sparxnet.nncore import LossSpec
from sparxnet.train import HpoSpace, TrainConfig


def small_dataset(n=120, seed=0):
    return data.gen_single_var(n, 2, seed=seed)


def small_model(seed=0, tau0=1.0, iterations=60):
    return ModelConfig(
        n_pathways=2,
        n_features=3,
        pathway_hidden=(8, 8),
        dropout=0.1,
        temperature=TemperatureSchedule(tau0, iterations),
        seed=seed,
    )


def small_train(seed=0, iterations=60):
    return TrainConfig(
        iterations=iterations,
        batch_size=32,
        learning_rate=0.01,
        eval_every=10,
        seed=seed,
    )


class TestTemperatureAt:
    def test_endpoints(self):
        s = TemperatureSchedule(10.0, 2000)
        assert tr.temperature_at(s, 0) == 10.0
        assert tr.temperature_at(s, 2000) == pytest.approx(0.1, rel=1e-12)

    def test_geometric_ratio_constant(self):
        s = TemperatureSchedule(5.0, 100)
        r = [tr.temperature_at(s, t + 1) / tr.temperature_at(s, t) for t in range(5)]
        assert all(x == pytest.approx(0.01 ** (1 / 100), rel=1e-12) for x in r)

    def test_midpoint(self):
        s = TemperatureSchedule(10.0, 2000)
        assert tr.temperature_at(s, 1000) == pytest.approx(1.0, rel=1e-12)

    def test_out_of_range(self):
        s = TemperatureSchedule(1.0, 10)
        with pytest.raises(ValueError):
            tr.temperature_at(s, 11)


class TestTrain:
    def test_loss_decreases(self):
        _, _, report = tr.train(small_model(), small_train(), small_dataset())
        assert report.final_train_loss < report.trace[0]["train_loss"]

    def test_trace_covers_schedule(self):
        _, tau, report = tr.train(small_model(), small_train(), small_dataset())
        iters = [row["iteration"] for row in report.trace]
        assert iters[0] == 0 and iters[-1] == 59
        # last evaluation happens at the annealing floor
        assert report.trace[-1]["tau"] == pytest.approx(0.01, rel=1e-12)

    def test_checkpoint_is_best_val(self):
        _, _, report = tr.train(small_model(), small_train(), small_dataset())
        best = min(row["val_loss"] for row in report.trace)
        assert report.final_val_loss == pytest.approx(best, rel=1e-12)
        assert report.best_iteration in [row["iteration"] for row in report.trace]

    def test_deterministic_given_seeds(self):
        a = tr.train(small_model(), small_train(), small_dataset())
        b = tr.train(small_model(), small_train(), small_dataset())
        assert a[2].to_json() == b[2].to_json()
        assert np.array_equal(a[0].routing_logits, b[0].routing_logits)
        assert all(
            np.array_equal(w1, w2)
            for p1, p2 in zip(a[0].pathways, b[0].pathways)
            for w1, w2 in zip(p1.weights, p2.weights)
        )

    def test_seed_changes_outcome(self):
        a = tr.train(small_model(), small_train(seed=0), small_dataset())
        b = tr.train(small_model(), small_train(seed=1), small_dataset())
        assert a[2].to_json() != b[2].to_json()

    def test_task_loss_mismatch(self):
        cfg = small_train()
        bce_cfg = TrainConfig(
            iterations=cfg.iterations,
            batch_size=cfg.batch_size,
            learning_rate=cfg.learning_rate,
            eval_every=cfg.eval_every,
            seed=cfg.seed,
            loss=LossSpec("bce"),
        )
        with pytest.raises(ValueError, match="task"):
            tr.train(small_model(), bce_cfg, small_dataset())

    @pytest.mark.filterwarnings("ignore:overflow")
    def test_divergence_names_iteration(self):
        # absurd learning rate on an exploding target drives the loss to NaN
        ds = small_dataset()
        ds = data.Dataset(ds.X, ds.y * 1e200, ds.feature_names, "regression")
        cfg = TrainConfig(iterations=60, batch_size=32, learning_rate=1e3,
                          eval_every=10, seed=0,
                          loss=LossSpec("truncated_square", math.inf))
        with pytest.raises(tr.TrainingDiverged, match="iteration"):
            tr.train(small_model(tau0=0.1), cfg, ds)

    def test_report_fields_consistent(self):
        params, tau, report = tr.train(small_model(), small_train(), small_dataset())
        assert len(report.selected_indices) == 2
        assert len(report.saturation) == 2
        assert all(0 < s <= 1 for s in report.saturation)
        assert report.theta_l1 == pytest.approx(float(np.abs(params.theta).sum()))
        assert all(l >= 0 for l in report.lipschitz)

    def test_wall_clock_excluded_from_canonical_json(self):
        _, _, report = tr.train(small_model(), small_train(), small_dataset())
        assert report.wall_clock > 0
        assert "wall_clock" not in report.to_json()
        assert "wall_clock" in report.to_json(include_timing=True)

    def test_trace_csv_round_trip(self):
        _, _, report = tr.train(small_model(), small_train(), small_dataset())
        lines = report.trace_csv().strip().splitlines()
        assert lines[0] == "iteration,train_loss,val_loss,tau"
        assert len(lines) == len(report.trace) + 1
        first = lines[1].split(",")
        assert int(first[0]) == report.trace[0]["iteration"]
        assert float(first[1]) == report.trace[0]["train_loss"]


class TestHpo:
    def test_sample_trial_within_ranges(self, rng):
        space = HpoSpace()
        for _ in range(200):
            hp = tr.sample_trial(space, rng)
            assert 0.1 <= hp["dropout"] <= 0.5
            assert 0.001 <= hp["learning_rate"] <= 0.01
            assert 0.1 <= hp["tau0"] <= 100.0

    def test_log_uniform_median(self, rng):
        # log-uniform over [0.1, 100] has median 10^0.5
        space = HpoSpace()
        vals = [tr.sample_trial(space, rng)["tau0"] for _ in range(4000)]
        assert np.median(np.log10(vals)) == pytest.approx(0.5, abs=0.1)

    def test_leaderboard_sorted_and_complete(self):
        space = HpoSpace(trials=4)
        res = tr.random_search_hpo(
            space, small_model(iterations=30), small_train(iterations=30),
            small_dataset(60), seed=7,
        )
        losses = [e["val_loss"] for e in res.leaderboard]
        assert losses == sorted(losses)
        assert sorted(e["trial"] for e in res.leaderboard) == [0, 1, 2, 3]

    def test_best_config_matches_top_entry(self):
        space = HpoSpace(trials=3)
        res = tr.random_search_hpo(
            space, small_model(iterations=30), small_train(iterations=30),
            small_dataset(60), seed=3,
        )
        top = res.leaderboard[0]
        assert res.best_model_config.dropout == pytest.approx(top["dropout"])
        assert res.best_train_config.learning_rate == pytest.approx(top["learning_rate"])
        assert res.best_model_config.temperature.tau0 == pytest.approx(top["tau0"])

    def test_hpo_deterministic(self):
        space = HpoSpace(trials=2)
        args = (space, small_model(iterations=20), small_train(iterations=20),
                small_dataset(50))
        a = tr.random_search_hpo(*args, seed=5)
        b = tr.random_search_hpo(*args, seed=5)
        assert a.leaderboard == b.leaderboard
