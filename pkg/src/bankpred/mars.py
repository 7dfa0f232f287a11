"""Multivariate adaptive regression splines (piecewise-linear hinges).

The fit is the classic two-phase procedure. The forward pass grows the model
greedily: at each step every (parent term, unused variable, observed knot)
combination proposes the reflected hinge pair

    parent * max(0, x_v - t)   and   parent * max(0, t - x_v)

and the pair with the lowest refit training RSS is added. Coefficients are
always refit jointly by least squares with a small ridge term on the normal
equations' diagonal, which keeps rank-deficient candidate bases (e.g. a knot
at the edge of the data) harmless and the scan deterministic. The backward
pass then deletes terms one at a time, each time removing the term whose
absence minimizes the generalized cross-validation score

    GCV(M) = RSS * N / (N - C(M))^2,    C(M) = M + penalty * (M - 1) / 2

and returns the model with the lowest GCV seen anywhere along the deletion
trace. Ties anywhere are broken toward lower variable index, then lower knot
value, then the earlier candidate, so identical inputs give identical models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .errors import (
    DegenerateDesignError,
    DimensionMismatchError,
    TooFewPointsError,
)
from .validation import as_float_matrix, as_float_vector, check_n_features

_DIRECTION_NAMES = {1: "plus", -1: "minus"}
_DIRECTION_VALUES = {"plus": 1, "minus": -1}


@dataclass(frozen=True)
class HingeFactor:
    """One hinge max(0, direction * (x[var] - knot)); direction is +1 or -1."""

    var: int
    knot: float
    direction: int

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return np.maximum(0.0, self.direction * (x[:, self.var] - self.knot))


@dataclass(frozen=True)
class BasisTerm:
    """Product of hinges over distinct variables."""

    factors: tuple[HingeFactor, ...]

    @property
    def degree(self) -> int:
        return len(self.factors)

    def variables(self) -> frozenset[int]:
        return frozenset(f.var for f in self.factors)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        column = self.factors[0].evaluate(x)
        for factor in self.factors[1:]:
            column = column * factor.evaluate(x)
        return column


@dataclass(frozen=True, eq=False)
class MarsModel:
    """Fitted model: intercept plus coefficient-weighted basis terms."""

    intercept: float
    terms: tuple[tuple[BasisTerm, float], ...]
    gcv: float
    training_rss: float
    config: dict

    @property
    def n_features(self) -> int:
        return int(self.config["n_features"])

    def basis_matrix(self, x: np.ndarray) -> np.ndarray:
        columns = [np.ones(x.shape[0])]
        columns.extend(term.evaluate(x) for term, _ in self.terms)
        return np.column_stack(columns)

    def predict(self, x) -> np.ndarray:
        arr = as_float_matrix(x, name="X")
        check_n_features(arr, self.n_features)
        out = np.full(arr.shape[0], self.intercept, dtype=np.float64)
        for term, coef in self.terms:
            out += coef * term.evaluate(arr)
        return out

    def to_dict(self) -> dict:
        return {
            "intercept": float(self.intercept),
            "terms": [
                {
                    "factors": [
                        {"var": f.var, "knot": f.knot, "dir": _DIRECTION_NAMES[f.direction]}
                        for f in term.factors
                    ],
                    "coef": float(coef),
                }
                for term, coef in self.terms
            ],
            "gcv": float(self.gcv),
            "config": dict(self.config),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "MarsModel":
        terms = tuple(
            (
                BasisTerm(tuple(
                    HingeFactor(int(f["var"]), float(f["knot"]), _DIRECTION_VALUES[f["dir"]])
                    for f in entry["factors"]
                )),
                float(entry["coef"]),
            )
            for entry in payload["terms"]
        )
        config = dict(payload["config"])
        return cls(
            intercept=float(payload["intercept"]),
            terms=terms,
            gcv=float(payload["gcv"]),
            training_rss=float(payload.get("training_rss", math.nan)),
            config=config,
        )


def _ridge_fit(b: np.ndarray, y: np.ndarray, eps: float) -> tuple[np.ndarray, float]:
    """Least squares on basis b with eps added to the normal-equation diagonal."""
    g = b.T @ b + eps * np.eye(b.shape[1])
    coef = np.linalg.solve(g, b.T @ y)
    resid = y - b @ coef
    return coef, float(resid @ resid)


def _scan_knot_pairs(b, g, rhs, yty, y, parent_col, xv, knots, eps):
    """RSS for adding the reflected hinge pair at every knot, in one batch.

    Returns (rss[K], solutions[K, M+2]); solutions hold the jointly refit
    coefficients for each candidate basis.
    """
    m = b.shape[1]
    k = knots.size
    hinge_plus = np.maximum(0.0, xv[:, None] - knots[None, :])
    hinge_minus = np.maximum(0.0, knots[None, :] - xv[:, None])
    cols_a = parent_col[:, None] * hinge_plus
    cols_b = parent_col[:, None] * hinge_minus

    ga = b.T @ cols_a                      # (M, K)
    gb = b.T @ cols_b
    aa = np.einsum("nk,nk->k", cols_a, cols_a)
    bb = np.einsum("nk,nk->k", cols_b, cols_b)
    ab = np.einsum("nk,nk->k", cols_a, cols_b)
    ay = cols_a.T @ y
    by = cols_b.T @ y

    normal = np.empty((k, m + 2, m + 2))
    normal[:, :m, :m] = g
    normal[:, :m, m] = ga.T
    normal[:, m, :m] = ga.T
    normal[:, :m, m + 1] = gb.T
    normal[:, m + 1, :m] = gb.T
    normal[:, m, m] = aa
    normal[:, m, m + 1] = ab
    normal[:, m + 1, m] = ab
    normal[:, m + 1, m + 1] = bb
    normal += eps * np.eye(m + 2)

    full_rhs = np.empty((k, m + 2))
    full_rhs[:, :m] = rhs
    full_rhs[:, m] = ay
    full_rhs[:, m + 1] = by

    try:
        sol = np.linalg.solve(normal, full_rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        sol = np.stack([
            np.linalg.lstsq(normal[i], full_rhs[i], rcond=None)[0] for i in range(k)
        ])
    # RSS = y'y - a'b - eps*|a|^2, exact for solutions of (G + eps I) a = b.
    rss = yty - np.einsum("km,km->k", sol, full_rhs) - eps * np.einsum("km,km->k", sol, sol)
    return rss, sol


def _gcv_score(rss: float, n: int, n_coefs: int, penalty: float) -> float:
    effective = n_coefs + penalty * (n_coefs - 1) / 2.0
    denom = n - effective
    if denom <= 0:
        return math.inf
    return rss * n / denom ** 2


@dataclass
class MarsFitDiagnostics:
    forward_rss_path: tuple[float, ...] = ()
    full_gcv: float = math.nan
    n_forward_terms: int = 0


def fit_mars(
    x,
    y,
    *,
    max_terms: int = 21,
    max_degree: int = 1,
    penalty: float | None = None,
    min_rss_improvement: float = 1e-8,
    ridge_eps: float = 1e-10,
) -> tuple[MarsModel, MarsFitDiagnostics]:
    """Run the forward/backward fit and return the pruned model.

    ``max_terms`` caps the number of coefficients including the intercept;
    ``penalty`` defaults to 3 for interaction models and 2 for additive ones.
    """
    x = as_float_matrix(x)
    y = as_float_vector(y)
    n, p = x.shape
    if y.size != n:
        raise DimensionMismatchError(n, y.size)
    if n < 3:
        raise TooFewPointsError(f"need at least 3 points, got {n}")
    if np.all(x == x[0]):
        raise DegenerateDesignError("all design rows are identical")
    if max_terms < 1:
        raise ValueError("max_terms must be >= 1")
    if max_degree < 1:
        raise ValueError("max_degree must be >= 1")
    effective_penalty = penalty if penalty is not None else (3.0 if max_degree > 1 else 2.0)
    if effective_penalty < 0:
        raise ValueError("penalty must be >= 0")

    yty = float(y @ y)
    distinct = [np.unique(x[:, v]) for v in range(p)]

    terms: list[BasisTerm] = []
    basis = np.ones((n, 1))
    coef, rss = _ridge_fit(basis, y, ridge_eps)
    rss_path = [rss]

    while len(terms) + 3 <= max_terms:
        g = basis.T @ basis
        rhs = basis.T @ y
        best = None  # (rss, parent_index, var, knot, solution)
        parents: list[int | None] = [None]
        parents.extend(i for i, t in enumerate(terms) if t.degree < max_degree)
        for parent_idx in parents:
            if parent_idx is None:
                parent_col = basis[:, 0]
                parent_vars = frozenset()
            else:
                parent_col = basis[:, parent_idx + 1]
                parent_vars = terms[parent_idx].variables()
            for var in range(p):
                if var in parent_vars:
                    continue
                knots = distinct[var]
                rss_k, sol = _scan_knot_pairs(
                    basis, g, rhs, yty, y, parent_col, x[:, var], knots, ridge_eps
                )
                k_best = int(np.argmin(rss_k))
                candidate_rss = float(rss_k[k_best])
                if best is None or candidate_rss < best[0]:
                    best = (candidate_rss, parent_idx, var, float(knots[k_best]), sol[k_best])

        if best is None:
            break
        improvement = rss_path[-1] - best[0]
        if improvement < min_rss_improvement:
            break

        _, parent_idx, var, knot, _ = best
        parent_factors = () if parent_idx is None else terms[parent_idx].factors
        plus_term = BasisTerm(parent_factors + (HingeFactor(var, knot, 1),))
        minus_term = BasisTerm(parent_factors + (HingeFactor(var, knot, -1),))
        terms.extend((plus_term, minus_term))
        basis = np.column_stack([basis, plus_term.evaluate(x), minus_term.evaluate(x)])
        coef, rss = _ridge_fit(basis, y, ridge_eps)
        rss_path.append(rss)

    n_coefs_full = 1 + len(terms)
    full_gcv = _gcv_score(rss_path[-1], n, n_coefs_full, effective_penalty)

    # Backward pruning over the whole deletion trace.
    current = list(range(len(terms)))
    best_state = (full_gcv, tuple(current), coef, rss_path[-1])
    while current:
        step_best = None  # (gcv, kept_indices, coef, rss)
        for drop in current:
            kept = [i for i in current if i != drop]
            cols = [0] + [i + 1 for i in kept]
            coef_r, rss_r = _ridge_fit(basis[:, cols], y, ridge_eps)
            gcv_r = _gcv_score(rss_r, n, 1 + len(kept), effective_penalty)
            if step_best is None or gcv_r < step_best[0]:
                step_best = (gcv_r, tuple(kept), coef_r, rss_r)
        current = list(step_best[1])
        if step_best[0] < best_state[0]:
            best_state = step_best

    final_gcv, kept, final_coef, final_rss = best_state
    model = MarsModel(
        intercept=float(final_coef[0]),
        terms=tuple((terms[i], float(c)) for i, c in zip(kept, final_coef[1:])),
        gcv=float(final_gcv),
        training_rss=float(final_rss),
        config={
            "max_terms": int(max_terms),
            "max_degree": int(max_degree),
            "penalty": float(effective_penalty),
            "min_rss_improvement": float(min_rss_improvement),
            "ridge_eps": float(ridge_eps),
            "n_features": int(p),
        },
    )
    diagnostics = MarsFitDiagnostics(
        forward_rss_path=tuple(rss_path),
        full_gcv=full_gcv,
        n_forward_terms=len(terms),
    )
    return model, diagnostics


class MarsRegressor(RegressorMixin, BaseEstimator):
    """scikit-learn style wrapper around :func:`fit_mars`.

    The fit is fully deterministic, so there is no random_state.
    """

    def __init__(self, max_terms=21, max_degree=1, penalty=None,
                 min_rss_improvement=1e-8, ridge_eps=1e-10):
        self.max_terms = max_terms
        self.max_degree = max_degree
        self.penalty = penalty
        self.min_rss_improvement = min_rss_improvement
        self.ridge_eps = ridge_eps

    def fit(self, X, y):
        model, diagnostics = fit_mars(
            X,
            y,
            max_terms=self.max_terms,
            max_degree=self.max_degree,
            penalty=self.penalty,
            min_rss_improvement=self.min_rss_improvement,
            ridge_eps=self.ridge_eps,
        )
        self.model_ = model
        self.n_features_in_ = model.n_features
        self.intercept_ = model.intercept
        self.terms_ = model.terms
        self.gcv_ = model.gcv
        self.training_rss_ = model.training_rss
        self.forward_rss_path_ = diagnostics.forward_rss_path
        self.full_gcv_ = diagnostics.full_gcv
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        return self.model_.predict(X)
