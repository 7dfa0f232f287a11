"""The hybrid classifier: selected ratios -> fuzzy clusters -> per-cluster MARS.

Training projects the chosen ratio set into a matrix, clusters the firms with
fuzzy c-means, hard-assigns each training firm to its strongest cluster and
fits one MARS regressor per cluster against the 0/1 label. Clusters with
fewer than 3 firms or only one label fall back to a constant model (the
cluster's label mean) instead of failing the run.

Prediction keeps the fuzziness: a firm's score is the membership-weighted
average of the per-cluster outputs, each clipped into [0, 1], so scores stay
probabilities and coincide with a single cluster's output exactly when the
firm sits on that centroid. ``routing="hard"`` switches to using only the
argmax cluster's model. Scores at or above the threshold mean bankrupt.

One ``random_state`` drives everything; per-stage seeds are derived with
fixed offsets (+1 clustering, +2 genetic search) so a single seed reproduces
a full run.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .data import Dataset, Label
from .errors import (
    DegenerateDesignError,
    EmptyDatasetError,
    MissingRatioForFirmError,
    SingleClassDatasetError,
    UnlabeledFirmError,
)
from .fcm import FuzzyCMeans, FuzzyPartition
from .ga import GaConfig, evolve
from .mars import MarsModel, fit_mars
from .ratios import FeatureSet, RatioId, compute_ratios, feature_set, project

logger = logging.getLogger(__name__)

MODEL_VERSION = 1
FCM_SEED_OFFSET = 1
GA_SEED_OFFSET = 2


@dataclass(frozen=True, eq=False)
class ClusterModel:
    """Either a fitted MARS model or a flagged constant fallback."""

    mars: MarsModel | None = None
    constant: float | None = None

    @property
    def is_constant(self) -> bool:
        return self.mars is None

    def predict(self, x: np.ndarray) -> np.ndarray:
        if self.mars is not None:
            return self.mars.predict(x)
        return np.full(x.shape[0], float(self.constant))

    def to_dict(self) -> dict:
        if self.mars is not None:
            return {"constant": False, **self.mars.to_dict()}
        return {"constant": True, "intercept": float(self.constant), "terms": []}

    @classmethod
    def from_dict(cls, payload: dict) -> "ClusterModel":
        if payload.get("constant"):
            return cls(mars=None, constant=float(payload["intercept"]))
        return cls(mars=MarsModel.from_dict(payload), constant=None)


@dataclass(frozen=True)
class FirmPrediction:
    firm_id: str
    score: float | None
    prediction: Label | None
    error: str | None = None


@dataclass(frozen=True)
class FirmOutcome:
    firm_id: str
    score: float
    prediction: Label
    label: Label


@dataclass(frozen=True)
class EvaluationReport:
    """Confusion counts plus the two classical error rates.

    ``type_i_error`` is the fraction of truly bankrupt firms predicted
    healthy; ``type_ii_error`` the fraction of truly healthy firms predicted
    bankrupt. A rate whose class is absent from the data is None, never 0.
    """

    n: int
    true_bankrupt_pred_bankrupt: int
    true_bankrupt_pred_healthy: int
    true_healthy_pred_bankrupt: int
    true_healthy_pred_healthy: int
    type_i_error: float | None
    type_ii_error: float | None
    accuracy: float
    per_firm: tuple[FirmOutcome, ...]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "confusion": {
                "true_bankrupt_pred_bankrupt": self.true_bankrupt_pred_bankrupt,
                "true_bankrupt_pred_healthy": self.true_bankrupt_pred_healthy,
                "true_healthy_pred_bankrupt": self.true_healthy_pred_bankrupt,
                "true_healthy_pred_healthy": self.true_healthy_pred_healthy,
            },
            "type_i_error": self.type_i_error,
            "type_ii_error": self.type_ii_error,
            "accuracy": self.accuracy,
            "per_firm": [
                {
                    "firm_id": row.firm_id,
                    "score": row.score,
                    "prediction": row.prediction.value,
                    "label": row.label.value,
                }
                for row in self.per_firm
            ],
        }


def build_report(firm_ids, labels, scores, predictions) -> EvaluationReport:
    """Assemble an EvaluationReport from parallel per-firm sequences."""
    tp = fn = fp = tn = 0
    rows = []
    for firm_id, label, score, prediction in zip(firm_ids, labels, scores, predictions):
        if label is Label.BANKRUPT:
            if prediction is Label.BANKRUPT:
                tp += 1
            else:
                fn += 1
        else:
            if prediction is Label.BANKRUPT:
                fp += 1
            else:
                tn += 1
        rows.append(FirmOutcome(firm_id, float(score), prediction, label))
    n = len(rows)
    bankrupt_total = tp + fn
    healthy_total = fp + tn
    return EvaluationReport(
        n=n,
        true_bankrupt_pred_bankrupt=tp,
        true_bankrupt_pred_healthy=fn,
        true_healthy_pred_bankrupt=fp,
        true_healthy_pred_healthy=tn,
        type_i_error=fn / bankrupt_total if bankrupt_total else None,
        type_ii_error=fp / healthy_total if healthy_total else None,
        accuracy=(tp + tn) / n if n else 0.0,
        per_firm=tuple(rows),
    )


@dataclass(frozen=True, eq=False)
class HybridModel:
    """Frozen, serializable result of a pipeline fit."""

    feature_set: FeatureSet
    partition: FuzzyPartition
    cluster_models: tuple[ClusterModel, ...]
    threshold: float
    routing: str
    seed: int
    version: int = MODEL_VERSION

    def score_rows(self, x: np.ndarray) -> np.ndarray:
        """Scores in [0, 1] for rows of the projected ratio matrix."""
        memberships = self.partition.membership_of(x)
        per_cluster = np.stack(
            [np.clip(cm.predict(x), 0.0, 1.0) for cm in self.cluster_models], axis=1
        )
        if self.routing == "hard":
            choice = np.argmax(memberships, axis=1)
            return per_cluster[np.arange(x.shape[0]), choice]
        return np.einsum("nc,nc->n", memberships, per_cluster)

    def predict_dataset(self, dataset: Dataset) -> list[FirmPrediction]:
        """Score every firm; firms with missing ratios error individually."""
        needed = self.feature_set.members
        vectors = [compute_ratios(s) for s in dataset]
        usable_rows = []
        usable_idx = []
        results: list[FirmPrediction | None] = [None] * len(vectors)
        for i, vector in enumerate(vectors):
            missing = [r for r in needed if r not in vector.values]
            if missing:
                results[i] = FirmPrediction(
                    firm_id=vector.firm_id,
                    score=None,
                    prediction=None,
                    error="missing ratios: " + ",".join(r.value for r in missing),
                )
            else:
                usable_idx.append(i)
                usable_rows.append([vector.values[r] for r in needed])
        if usable_rows:
            scores = self.score_rows(np.asarray(usable_rows, dtype=np.float64))
            for i, score in zip(usable_idx, scores):
                label = Label.BANKRUPT if score >= self.threshold else Label.HEALTHY
                results[i] = FirmPrediction(
                    firm_id=vectors[i].firm_id,
                    score=float(score),
                    prediction=label,
                )
        return results  # type: ignore[return-value]

    def evaluate(self, dataset: Dataset) -> EvaluationReport:
        """Confusion report against the dataset's labels (all firms labeled)."""
        for s in dataset:
            if s.label is Label.UNKNOWN:
                raise UnlabeledFirmError(s.firm_id)
        predictions = self.predict_dataset(dataset)
        failed = [(p.firm_id, p.error) for p in predictions if p.error]
        if failed:
            raise MissingRatioForFirmError(
                [(firm, err.split(": ", 1)[1]) for firm, err in failed]
            )
        return build_report(
            [s.firm_id for s in dataset],
            [s.label for s in dataset],
            [p.score for p in predictions],
            [p.prediction for p in predictions],
        )

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "feature_set": {
                "name": self.feature_set.name,
                "members": [r.value for r in self.feature_set.members],
            },
            "fcm": self.partition.to_dict(),
            "cluster_models": [cm.to_dict() for cm in self.cluster_models],
            "threshold": float(self.threshold),
            "routing": self.routing,
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "HybridModel":
        fs = FeatureSet(
            name=payload["feature_set"]["name"],
            members=tuple(RatioId(m) for m in payload["feature_set"]["members"]),
        )
        return cls(
            feature_set=fs,
            partition=FuzzyPartition.from_dict(payload["fcm"]),
            cluster_models=tuple(
                ClusterModel.from_dict(entry) for entry in payload["cluster_models"]
            ),
            threshold=float(payload["threshold"]),
            routing=payload.get("routing", "soft"),
            seed=int(payload["seed"]),
            version=int(payload["version"]),
        )


def save_model(model: HybridModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_model(path) -> HybridModel:
    return HybridModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


class HybridPipeline(BaseEstimator):
    """End-to-end estimator over :class:`~bankpred.data.Dataset` objects.

    Parameters
    ----------
    features : "A".."E", "ga", or a FeatureSet. "ga" runs the genetic search
        first and trains on its best ratio subset.
    n_clusters : number of fuzzy clusters (1 reduces the pipeline to a single
        global MARS classifier).
    fuzzifier : membership softness for the clustering stage.
    threshold : scores at or above this are labeled bankrupt.
    routing : "soft" blends cluster models by membership, "hard" uses only
        the strongest cluster's model.
    ga_config : optional GaConfig for ``features="ga"``; defaults to
        GaConfig(seed=random_state + 2).
    random_state : master seed; stage seeds derive from it.
    """

    def __init__(
        self,
        features="E",
        n_clusters=3,
        fuzzifier=2.0,
        fcm_max_iter=300,
        fcm_tol=1e-6,
        threshold=0.5,
        routing="soft",
        mars_max_terms=21,
        mars_max_degree=1,
        ga_config=None,
        random_state=0,
    ):
        self.features = features
        self.n_clusters = n_clusters
        self.fuzzifier = fuzzifier
        self.fcm_max_iter = fcm_max_iter
        self.fcm_tol = fcm_tol
        self.threshold = threshold
        self.routing = routing
        self.mars_max_terms = mars_max_terms
        self.mars_max_degree = mars_max_degree
        self.ga_config = ga_config
        self.random_state = random_state

    def _resolve_features(self, dataset: Dataset) -> FeatureSet:
        if isinstance(self.features, FeatureSet):
            return self.features
        name = str(self.features)
        if name.lower() == "ga":
            cfg = self.ga_config if self.ga_config is not None else GaConfig(
                seed=self.random_state + GA_SEED_OFFSET
            )
            params = self.get_params()
            params["features"] = "E"  # placeholder; fitness overrides per mask
            params["ga_config"] = None
            template = HybridPipeline(**params)
            result = evolve(dataset, cfg, template)
            self.ga_result_ = result
            logger.info("ga selected %s (fitness %.6f, %d evaluations)",
                        [r.value for r in result.best_feature_set().members],
                        result.best_fitness, result.evaluations)
            return result.best_feature_set()
        return feature_set(name)

    def fit(self, dataset: Dataset):
        if len(dataset) == 0:
            raise EmptyDatasetError("cannot train on an empty dataset")
        counts = dataset.label_counts()
        for s in dataset:
            if s.label is Label.UNKNOWN:
                raise UnlabeledFirmError(s.firm_id)
        if counts[Label.BANKRUPT] == 0 or counts[Label.HEALTHY] == 0:
            raise SingleClassDatasetError(
                "training needs at least one bankrupt and one healthy firm"
            )
        if self.routing not in ("soft", "hard"):
            raise ValueError("routing must be 'soft' or 'hard'")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie strictly in (0, 1)")

        fs = self._resolve_features(dataset)
        matrix = project(dataset, fs)

        clusterer = FuzzyCMeans(
            n_clusters=self.n_clusters,
            m=self.fuzzifier,
            max_iter=self.fcm_max_iter,
            tol=self.fcm_tol,
            random_state=self.random_state + FCM_SEED_OFFSET,
        ).fit(matrix.x)
        partition = clusterer.partition_
        assignment = partition.hard_assign()

        y = matrix.y.astype(np.float64)
        global_mean = float(y.mean())
        cluster_models = []
        for j in range(int(self.n_clusters)):
            rows = assignment == j
            n_j = int(rows.sum())
            if n_j == 0:
                cluster_models.append(ClusterModel(constant=global_mean))
                continue
            y_j = y[rows]
            if n_j < 3 or y_j.min() == y_j.max():
                cluster_models.append(ClusterModel(constant=float(y_j.mean())))
                continue
            try:
                model, _ = fit_mars(
                    matrix.x[rows],
                    y_j,
                    max_terms=self.mars_max_terms,
                    max_degree=self.mars_max_degree,
                )
                cluster_models.append(ClusterModel(mars=model))
            except DegenerateDesignError:
                cluster_models.append(ClusterModel(constant=float(y_j.mean())))

        self.model_ = HybridModel(
            feature_set=fs,
            partition=partition,
            cluster_models=tuple(cluster_models),
            threshold=float(self.threshold),
            routing=self.routing,
            seed=int(self.random_state),
        )
        self.feature_set_ = fs
        self.n_features_in_ = matrix.x.shape[1]
        return self

    def predict(self, dataset: Dataset) -> list[FirmPrediction]:
        check_is_fitted(self, "model_")
        return self.model_.predict_dataset(dataset)

    def evaluate(self, dataset: Dataset) -> EvaluationReport:
        check_is_fitted(self, "model_")
        return self.model_.evaluate(dataset)
