"""Fuzzy c-means clustering.

Minimizes J = sum_i sum_j u_ij^m ||x_i - c_j||^2 over row-stochastic
memberships U and centroids, by alternating the two closed-form updates:

    c_j  = sum_i u_ij^m x_i / sum_i u_ij^m
    u_ij = 1 / sum_k (||x_i - c_j|| / ||x_i - c_k||)^(2/(m-1))

Columns are z-scored before clustering (constant columns are centered only)
and the standardization is kept with the partition so new points transform
identically. A point that coincides with a centroid gets an indicator
membership row, which is both the formula's limit and division-safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from .errors import TooFewPointsError
from .validation import as_float_matrix, check_n_features

# Squared-distance threshold under which a point counts as sitting on a centroid.
_COINCIDENT_SQ = 1e-12 ** 2


def _squared_distances(z: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = z[:, None, :] - centroids[None, :, :]
    return np.einsum("ncp,ncp->nc", diff, diff)


def _centroid_update(z: np.ndarray, u: np.ndarray, m: float) -> np.ndarray:
    w = u ** m
    return (w.T @ z) / w.sum(axis=0)[:, None]


def _membership_update(d2: np.ndarray, m: float) -> np.ndarray:
    power = 1.0 / (m - 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        inv = d2 ** -power
        u = inv / inv.sum(axis=1, keepdims=True)
    coincident = d2 <= _COINCIDENT_SQ
    bad = coincident.any(axis=1) | ~np.isfinite(u).all(axis=1)
    if bad.any():
        u[bad] = 0.0
        u[bad, np.argmin(d2[bad], axis=1)] = 1.0
    return u


def _objective(u: np.ndarray, d2: np.ndarray, m: float) -> float:
    return float(((u ** m) * d2).sum())


@dataclass(eq=False)
class FuzzyPartition:
    """Frozen result of a fuzzy c-means fit.

    ``centroids`` live in standardized space; ``scale_mean``/``scale_std`` map
    raw features into it. ``memberships`` and the fit diagnostics are None on
    partitions restored from disk (they are recomputable, not persisted).
    """

    centroids: np.ndarray
    scale_mean: np.ndarray
    scale_std: np.ndarray
    fuzzifier: float
    memberships: np.ndarray | None = None
    objective: float | None = None
    objective_history: tuple[float, ...] = ()
    n_iter: int | None = None
    converged: bool | None = None

    @property
    def n_clusters(self) -> int:
        return self.centroids.shape[0]

    @property
    def n_features(self) -> int:
        return self.centroids.shape[1]

    def standardize(self, x: np.ndarray) -> np.ndarray:
        divisor = np.where(self.scale_std > 0, self.scale_std, 1.0)
        return (x - self.scale_mean) / divisor

    def membership_of(self, x) -> np.ndarray:
        """Row-stochastic membership of new point(s) against frozen centroids."""
        arr = as_float_matrix(x, name="x")
        check_n_features(arr, self.n_features)
        d2 = _squared_distances(self.standardize(arr), self.centroids)
        return _membership_update(d2, self.fuzzifier)

    def hard_assign(self) -> np.ndarray:
        """Argmax cluster per training row; ties go to the lowest index."""
        if self.memberships is None:
            raise ValueError("this partition carries no training memberships")
        return np.argmax(self.memberships, axis=1)

    def recompute_objective(self, z: np.ndarray) -> float:
        """J recomputed from stored U and centroids on standardized data."""
        if self.memberships is None:
            raise ValueError("this partition carries no training memberships")
        d2 = _squared_distances(z, self.centroids)
        return _objective(self.memberships, d2, self.fuzzifier)

    def to_dict(self) -> dict:
        return {
            "centroids": self.centroids.tolist(),
            "standardization": [
                [float(m), float(s)] for m, s in zip(self.scale_mean, self.scale_std)
            ],
            "C": int(self.n_clusters),
            "m": float(self.fuzzifier),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "FuzzyPartition":
        pairs = payload["standardization"]
        return cls(
            centroids=np.asarray(payload["centroids"], dtype=np.float64),
            scale_mean=np.asarray([p[0] for p in pairs], dtype=np.float64),
            scale_std=np.asarray([p[1] for p in pairs], dtype=np.float64),
            fuzzifier=float(payload["m"]),
        )


class FuzzyCMeans(ClusterMixin, BaseEstimator):
    """Fuzzy c-means estimator with a deterministic, seeded fit.

    Parameters
    ----------
    n_clusters : number of clusters C (>= 1).
    m : fuzzifier, strictly > 1; 2.0 is the usual choice.
    max_iter : iteration cap.
    tol : stop once max |u_new - u_old| falls below this.
    random_state : seed for the row-stochastic membership initialization.
    """

    def __init__(self, n_clusters=3, m=2.0, max_iter=300, tol=1e-6, random_state=0):
        self.n_clusters = n_clusters
        self.m = m
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def _validate_params(self):
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be >= 1")
        if not self.m > 1.0:
            raise ValueError("fuzzifier m must be strictly greater than 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")

    def fit(self, X, y=None, u_init=None):
        """Cluster X. ``u_init`` may pin the initial membership matrix
        (rows are renormalized); otherwise it is drawn from the seed.
        """
        self._validate_params()
        x = as_float_matrix(X)
        n, p = x.shape
        c = int(self.n_clusters)
        if n < c:
            raise TooFewPointsError(f"need at least {c} points for {c} clusters, got {n}")

        mean = x.mean(axis=0)
        std = x.std(axis=0)
        divisor = np.where(std > 0, std, 1.0)
        z = (x - mean) / divisor

        if u_init is not None:
            u = np.asarray(u_init, dtype=np.float64)
            if u.shape != (n, c):
                raise ValueError(f"u_init must have shape {(n, c)}, got {u.shape}")
            row_sums = u.sum(axis=1, keepdims=True)
            if (u < 0).any() or (row_sums <= 0).any():
                raise ValueError("u_init rows must be non-negative with positive sums")
            u = u / row_sums
        else:
            rng = np.random.default_rng(self.random_state)
            u = rng.random((n, c))
            u /= u.sum(axis=1, keepdims=True)

        fuzz = float(self.m)
        history: list[float] = []
        converged = False
        n_iter = 0
        for n_iter in range(1, int(self.max_iter) + 1):
            centroids = _centroid_update(z, u, fuzz)
            d2 = _squared_distances(z, centroids)
            u_new = _membership_update(d2, fuzz)
            history.append(_objective(u_new, d2, fuzz))
            delta = float(np.abs(u_new - u).max())
            u = u_new
            if delta < self.tol:
                converged = True
                break

        # Final centroid refresh keeps the stored (U, centroids, J) mutually
        # consistent; it can only lower J further.
        centroids = _centroid_update(z, u, fuzz)
        d2 = _squared_distances(z, centroids)
        objective = _objective(u, d2, fuzz)
        history.append(objective)

        self.partition_ = FuzzyPartition(
            centroids=centroids,
            scale_mean=mean,
            scale_std=std,
            fuzzifier=fuzz,
            memberships=u,
            objective=objective,
            objective_history=tuple(history),
            n_iter=n_iter,
            converged=converged,
        )
        self.n_features_in_ = p
        self.centroids_ = centroids
        self.memberships_ = u
        self.objective_ = objective
        self.objective_history_ = self.partition_.objective_history
        self.n_iter_ = n_iter
        self.converged_ = converged
        self.labels_ = self.partition_.hard_assign()
        return self

    def soft_predict(self, X) -> np.ndarray:
        """Membership rows for new data against the fitted centroids."""
        check_is_fitted(self, "partition_")
        return self.partition_.membership_of(X)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.soft_predict(X), axis=1)
