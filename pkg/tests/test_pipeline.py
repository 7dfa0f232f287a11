import json

import numpy as np
import pytest

from bankpred.data import Dataset, Label, generate_synthetic
from bankpred.errors import (
    EmptyDatasetError,
    MissingRatioForFirmError,
    SingleClassDatasetError,
    UnlabeledFirmError,
)
from bankpred.fcm import FuzzyPartition
from bankpred.ga import GaConfig
from bankpred.mars import MarsRegressor
from bankpred.pipeline import (
    ClusterModel,
    HybridModel,
    HybridPipeline,
    build_report,
    load_model,
    save_model,
)
from bankpred.ratios import RatioId, UNION_MODEL, custom_set, project

from util import make_dataset, make_statement, scale_dataset, stratified_split


def manual_two_cluster_model(constant_left=0.0, constant_right=1.0, threshold=0.5,
                             routing="soft"):
    # single NITL feature, centroids at -1 and +1 in standardized space (= raw)
    partition = FuzzyPartition(
        centroids=np.array([[-1.0], [1.0]]),
        scale_mean=np.zeros(1),
        scale_std=np.ones(1),
        fuzzifier=2.0,
    )
    return HybridModel(
        feature_set=custom_set([RatioId.NITL]),
        partition=partition,
        cluster_models=(
            ClusterModel(constant=constant_left),
            ClusterModel(constant=constant_right),
        ),
        threshold=threshold,
        routing=routing,
        seed=0,
    )


class TestTrain:
    def test_empty_dataset(self):
        with pytest.raises(EmptyDatasetError):
            HybridPipeline().fit(Dataset(()))

    def test_single_class_dataset(self):
        ds = make_dataset(*[make_statement(firm_id=f"F{i}") for i in range(5)])
        with pytest.raises(SingleClassDatasetError):
            HybridPipeline().fit(ds)

    def test_unknown_label_rejected(self):
        ds = make_dataset(
            make_statement(firm_id="a", label="bankrupt"),
            make_statement(firm_id="b", label="unknown"),
        )
        with pytest.raises(UnlabeledFirmError):
            HybridPipeline().fit(ds)

    def test_separable_data_trains_accurately(self):
        ds = generate_synthetic(200, 0.5, 4.0, seed=11)
        pipe = HybridPipeline(features="E", n_clusters=3, random_state=11).fit(ds)
        report = pipe.evaluate(ds)
        assert report.accuracy >= 0.95

    def test_single_cluster_reduces_to_plain_mars(self):
        ds = generate_synthetic(80, 0.5, 3.0, seed=2)
        pipe = HybridPipeline(features="E", n_clusters=1, random_state=2).fit(ds)
        matrix = project(ds, UNION_MODEL)
        standalone = MarsRegressor().fit(matrix.x, matrix.y.astype(float))

        cluster = pipe.model_.cluster_models[0]
        assert not cluster.is_constant
        assert json.dumps(cluster.mars.to_dict()) == json.dumps(standalone.model_.to_dict())

        predictions = pipe.predict(ds)
        raw = standalone.predict(matrix.x)
        expected = [Label.BANKRUPT if v >= 0.5 else Label.HEALTHY for v in raw]
        assert [p.prediction for p in predictions] == expected
        clipped = np.clip(raw, 0.0, 1.0)
        assert np.array_equal(np.array([p.score for p in predictions]), clipped)

    def test_tiny_clusters_get_constant_models(self):
        # 4 firms, 3 clusters: at least one cluster has < 3 firms
        ds = make_dataset(
            make_statement(firm_id="a", label="bankrupt", net_income=-200_000.0),
            make_statement(firm_id="b", label="bankrupt", net_income=-180_000.0),
            make_statement(firm_id="c", label="healthy"),
            make_statement(firm_id="d", label="healthy", net_income=80_000.0),
        )
        pipe = HybridPipeline(features="D", n_clusters=3, random_state=0).fit(ds)
        assert any(cm.is_constant for cm in pipe.model_.cluster_models)
        for cm in pipe.model_.cluster_models:
            if cm.is_constant:
                assert 0.0 <= cm.constant <= 1.0

    def test_ga_feature_selection_smoke(self):
        ds = generate_synthetic(60, 0.5, 6.0, seed=3)
        cfg = GaConfig(population_size=6, generations=2, cv_folds=2, seed=3)
        pipe = HybridPipeline(features="ga", ga_config=cfg, n_clusters=2,
                              random_state=3).fit(ds)
        assert pipe.ga_result_.evaluations > 0
        assert len(pipe.feature_set_.members) >= 1
        assert pipe.evaluate(ds).accuracy > 0.9

    @pytest.mark.parametrize("kwargs", [
        {"routing": "sideways"}, {"threshold": 0.0}, {"threshold": 1.0},
    ])
    def test_bad_config(self, kwargs):
        ds = generate_synthetic(20, 0.5, 2.0, seed=1)
        with pytest.raises(ValueError):
            HybridPipeline(**kwargs).fit(ds)


class TestPredict:
    def test_point_on_centroid_uses_that_cluster_only(self):
        model = manual_two_cluster_model(constant_left=0.25, constant_right=0.75)
        scores = model.score_rows(np.array([[1.0], [-1.0]]))
        assert scores[0] == 0.75
        assert scores[1] == 0.25

    def test_all_constant_zero_predicts_healthy(self):
        model = manual_two_cluster_model(0.0, 0.0)
        ds = make_dataset(
            make_statement(firm_id="a", label="unknown"),
            make_statement(firm_id="b", label="unknown", net_income=-50_000.0),
        )
        predictions = model.predict_dataset(ds)
        assert all(p.prediction is Label.HEALTHY and p.score == 0.0 for p in predictions)

    def test_scores_stay_in_unit_interval(self):
        ds = generate_synthetic(100, 0.4, 2.0, seed=6)
        pipe = HybridPipeline(features="E", n_clusters=3, random_state=6).fit(ds)
        scores = [p.score for p in pipe.predict(ds)]
        assert all(0.0 <= s <= 1.0 for s in scores)

    def test_hard_routing_uses_argmax_cluster(self):
        soft = manual_two_cluster_model(0.0, 1.0, routing="soft")
        hard = manual_two_cluster_model(0.0, 1.0, routing="hard")
        x = np.array([[0.2]])  # closer to +1 than -1
        assert 0.0 < soft.score_rows(x)[0] < 1.0
        assert hard.score_rows(x)[0] == 1.0

    def test_firm_with_missing_ratio_errors_individually(self):
        ds = generate_synthetic(40, 0.5, 3.0, seed=8)
        pipe = HybridPipeline(features="E", n_clusters=2, random_state=8).fit(ds)
        broken = make_statement(firm_id="broken", total_liabilities=0.0, label="unknown")
        mixed = Dataset(ds.statements[:3] + (broken,))
        predictions = pipe.predict(mixed)
        assert [p.error is None for p in predictions] == [True, True, True, False]
        assert "NITL" in predictions[3].error or "FUTL" in predictions[3].error
        assert predictions[3].score is None

    def test_threshold_boundary_is_bankrupt(self):
        model = manual_two_cluster_model(0.5, 0.5, threshold=0.5)
        ds = make_dataset(make_statement(label="unknown"))
        predictions = model.predict_dataset(ds)
        assert predictions[0].score == 0.5
        assert predictions[0].prediction is Label.BANKRUPT


class TestEvaluate:
    def test_hand_counted_confusion(self):
        labels = [Label.BANKRUPT, Label.BANKRUPT, Label.HEALTHY, Label.HEALTHY]
        predictions = [Label.HEALTHY, Label.BANKRUPT, Label.HEALTHY, Label.BANKRUPT]
        report = build_report(["a", "b", "c", "d"], labels, [0.1, 0.9, 0.2, 0.8],
                              predictions)
        assert report.type_i_error == 0.5
        assert report.type_ii_error == 0.5
        assert report.accuracy == 0.5
        assert report.true_bankrupt_pred_bankrupt == 1
        assert report.true_healthy_pred_bankrupt == 1
        assert [r.firm_id for r in report.per_firm] == ["a", "b", "c", "d"]

    def test_perfect_predictions(self):
        labels = [Label.BANKRUPT, Label.HEALTHY]
        report = build_report(["a", "b"], labels, [0.9, 0.1], labels)
        assert report.type_i_error == 0.0
        assert report.type_ii_error == 0.0
        assert report.accuracy == 1.0

    def test_empty_class_rate_is_absent_not_zero(self):
        labels = [Label.HEALTHY, Label.HEALTHY]
        report = build_report(["a", "b"], labels, [0.9, 0.1],
                              [Label.BANKRUPT, Label.HEALTHY])
        assert report.type_i_error is None
        assert report.type_ii_error == 0.5
        assert report.to_dict()["type_i_error"] is None

    def test_accuracy_is_prevalence_weighted_mix_of_errors(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(4, 40))
            labels = [Label.BANKRUPT if rng.random() < 0.5 else Label.HEALTHY
                      for _ in range(n)]
            predictions = [Label.BANKRUPT if rng.random() < 0.5 else Label.HEALTHY
                           for _ in range(n)]
            report = build_report([str(i) for i in range(n)], labels,
                                  [0.5] * n, predictions)
            nb = sum(1 for l in labels if l is Label.BANKRUPT)
            nh = n - nb
            expected = 1.0
            if nb:
                expected -= (nb / n) * report.type_i_error
            if nh:
                expected -= (nh / n) * report.type_ii_error
            assert report.accuracy == pytest.approx(expected, abs=1e-12)

    def test_unlabeled_firm_rejected(self):
        ds = generate_synthetic(30, 0.5, 3.0, seed=4)
        pipe = HybridPipeline(features="E", n_clusters=2, random_state=4).fit(ds)
        mixed = Dataset(ds.statements + (make_statement(firm_id="x", label="unknown"),))
        with pytest.raises(UnlabeledFirmError):
            pipe.evaluate(mixed)

    def test_unscorable_firm_fails_evaluation(self):
        ds = generate_synthetic(30, 0.5, 3.0, seed=4)
        pipe = HybridPipeline(features="E", n_clusters=2, random_state=4).fit(ds)
        mixed = Dataset(ds.statements + (
            make_statement(firm_id="x", total_liabilities=0.0, label="healthy"),))
        with pytest.raises(MissingRatioForFirmError):
            pipe.evaluate(mixed)


class TestScaleInvariance:
    def test_predictions_bit_identical_under_power_of_two(self):
        ds = generate_synthetic(80, 0.4, 3.0, seed=10)
        pipe = HybridPipeline(features="E", n_clusters=3, random_state=10).fit(ds)
        base = pipe.predict(ds)
        for k in (2.0 ** 10, 2.0 ** -7):
            scaled = pipe.predict(scale_dataset(ds, k))
            assert all(a.score == b.score and a.prediction == b.prediction
                       for a, b in zip(base, scaled))

    def test_model_and_predictions_identical_under_million(self):
        # generator emits whole-unit fields, so *1e6 is exact in binary floats
        ds = generate_synthetic(120, 0.4, 4.0, seed=11)
        train, test = stratified_split(ds, 0.7, seed=11)
        pipe = HybridPipeline(features="E", n_clusters=3, random_state=11).fit(train)
        pipe_scaled = HybridPipeline(features="E", n_clusters=3, random_state=11).fit(
            scale_dataset(train, 10 ** 6))
        assert json.dumps(pipe.model_.to_dict()) == json.dumps(pipe_scaled.model_.to_dict())
        base = pipe.predict(test)
        scaled = pipe.predict(scale_dataset(test, 10 ** 6))
        assert all(a.score == b.score for a, b in zip(base, scaled))


class TestSerialization:
    def test_round_trip_preserves_behavior(self, tmp_path):
        ds = generate_synthetic(90, 0.5, 3.0, seed=14)
        pipe = HybridPipeline(features="E", n_clusters=3, random_state=14).fit(ds)
        path = tmp_path / "model.json"
        save_model(pipe.model_, path)
        restored = load_model(path)
        base = pipe.predict(ds)
        loaded = restored.predict_dataset(ds)
        assert all(a.score == b.score and a.prediction == b.prediction
                   for a, b in zip(base, loaded))

    def test_model_json_schema(self, tmp_path):
        ds = make_dataset(
            make_statement(firm_id="a", label="bankrupt", net_income=-100_000.0),
            make_statement(firm_id="b", label="bankrupt", net_income=-90_000.0),
            make_statement(firm_id="c", label="healthy"),
            make_statement(firm_id="d", label="healthy", net_income=70_000.0),
        )
        pipe = HybridPipeline(features="D", n_clusters=2, random_state=1).fit(ds)
        path = tmp_path / "model.json"
        save_model(pipe.model_, path)
        payload = json.loads(path.read_text())
        assert set(payload) == {"version", "feature_set", "fcm", "cluster_models",
                                "threshold", "routing", "seed"}
        assert payload["version"] == 1
        assert payload["feature_set"]["members"] == ["TLTA", "NITL"]
        assert set(payload["fcm"]) == {"centroids", "standardization", "C", "m"}
        assert len(payload["fcm"]["standardization"]) == 2
        assert all(len(pair) == 2 for pair in payload["fcm"]["standardization"])
        for cm in payload["cluster_models"]:
            assert "constant" in cm
            assert "intercept" in cm and "terms" in cm

    def test_training_determinism_byte_identical_json(self, tmp_path):
        ds = generate_synthetic(70, 0.5, 3.0, seed=21)
        p1, p2 = tmp_path / "m1.json", tmp_path / "m2.json"
        save_model(HybridPipeline(features="E", random_state=21).fit(ds).model_, p1)
        save_model(HybridPipeline(features="E", random_state=21).fit(ds).model_, p2)
        assert p1.read_bytes() == p2.read_bytes()
