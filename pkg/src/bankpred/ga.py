"""Genetic search over ratio subsets.

A chromosome is a bit vector over a ratio universe (by default the canonical
15-ratio order). Fitness is the stratified cross-validated accuracy of the
full clustering + spline pipeline trained on the masked ratios, minus a
parsimony penalty proportional to the number of active bits. The five classic
feature sets are seeded into the initial population, so evolution starts from
every textbook model and can only improve on them.

Fitness values are memoized by mask: a mask is never evaluated twice within a
run, and everything is driven by one seeded generator, so identical inputs
produce identical results.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .data import Dataset, Label
from .errors import EmptyMaskError, InsufficientUsableFirmsError
from .ratios import (
    ALTMAN,
    CANONICAL_ORDER,
    OHLSON,
    SHUMWAY,
    UNION_MODEL,
    ZMIJEWSKI,
    FeatureSet,
    RatioId,
    compute_ratios,
    custom_set,
)

logger = logging.getLogger(__name__)

SEED_SETS = (ALTMAN, OHLSON, ZMIJEWSKI, SHUMWAY, UNION_MODEL)


@dataclass(frozen=True)
class GaConfig:
    """Knobs for :func:`evolve`; ``mutation_rate=None`` means 1/L."""

    population_size: int = 50
    generations: int = 100
    crossover_rate: float = 0.8
    mutation_rate: float | None = None
    tournament_size: int = 3
    elitism_count: int = 1
    parsimony_weight: float = 0.01
    cv_folds: int = 3
    type_i_weight: float = 0.5
    seed: int = 0

    def validate(self) -> None:
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.elitism_count >= self.population_size or self.elitism_count < 0:
            raise ValueError("elitism_count must be in [0, population_size)")
        for name in ("crossover_rate", "type_i_weight"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.mutation_rate is not None and not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be >= 2")


@dataclass(frozen=True)
class GaResult:
    best_mask: tuple[int, ...]
    best_fitness: float
    history: tuple[tuple[float, float], ...]  # per generation: (best, mean)
    evaluations: int
    universe: tuple[RatioId, ...]

    def best_feature_set(self) -> FeatureSet:
        members = [r for r, bit in zip(self.universe, self.best_mask) if bit]
        return custom_set(members)

    def history_rows(self) -> list[tuple[int, float, float]]:
        return [(g, best, mean) for g, (best, mean) in enumerate(self.history)]


def mask_for(fs: FeatureSet, universe: Sequence[RatioId]) -> np.ndarray:
    members = set(fs.members)
    return np.array([1 if r in members else 0 for r in universe], dtype=np.uint8)


def stratified_folds(labels: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    """Deal each class round-robin into k folds after a seeded shuffle.

    The fold offset carries over between classes so small classes do not all
    land in the same folds.
    """
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for value in sorted(set(labels.tolist())):
        idx = np.flatnonzero(labels == value)
        rng.shuffle(idx)
        for j, i in enumerate(idx):
            folds[(offset + j) % k].append(int(i))
        offset = (offset + idx.size) % k
    return [np.array(sorted(f), dtype=np.intp) for f in folds]


def _weighted_accuracy(n: int, fn: int, fp: int, type_i_weight: float) -> float:
    # At weight 0.5 this is exactly plain accuracy; larger weights punish
    # missed bankruptcies (type I) more than false alarms (type II).
    return 1.0 - 2.0 * (type_i_weight * fn + (1.0 - type_i_weight) * fp) / n


def mask_fitness(
    mask: np.ndarray,
    dataset: Dataset,
    pipeline_template,
    cfg: GaConfig,
    universe: Sequence[RatioId] = CANONICAL_ORDER,
) -> float:
    """Cross-validated pipeline accuracy minus the parsimony penalty.

    Labeled firms missing any masked ratio are dropped with a warning; fewer
    than 4 usable firms is an error. Deterministic for fixed inputs (folds are
    seeded from ``cfg.seed``).
    """
    mask = np.asarray(mask, dtype=np.uint8)
    if mask.size != len(universe):
        raise ValueError(f"mask length {mask.size} != universe length {len(universe)}")
    if not mask.any():
        raise EmptyMaskError("chromosome selects no ratios")
    fs = custom_set([u for u, bit in zip(universe, mask) if bit])

    labeled = [s for s in dataset if s.label is not Label.UNKNOWN]
    usable = []
    for s in labeled:
        vector = compute_ratios(s)
        if all(r in vector.values for r in fs.members):
            usable.append(s)
        else:
            logger.warning("dropping firm %s: ratios %s not all computable",
                           s.firm_id, [r.value for r in fs.members if r not in vector.values])
    if len(usable) < 4:
        raise InsufficientUsableFirmsError(len(usable))

    labels = np.array([1 if s.label is Label.BANKRUPT else 0 for s in usable])
    folds = stratified_folds(labels, cfg.cv_folds, cfg.seed)

    params = pipeline_template.get_params()
    params["features"] = fs
    params["ga_config"] = None

    accuracies = []
    for fold in folds:
        if fold.size == 0:
            logger.warning("skipping empty cross-validation fold")
            continue
        test_mask = np.zeros(len(usable), dtype=bool)
        test_mask[fold] = True
        train_ds = Dataset(tuple(s for s, t in zip(usable, test_mask) if not t),
                           provenance=dataset.provenance, seed=dataset.seed)
        test_ds = Dataset(tuple(s for s, t in zip(usable, test_mask) if t),
                          provenance=dataset.provenance, seed=dataset.seed)
        pipe = type(pipeline_template)(**params)
        pipe.fit(train_ds)
        predictions = pipe.predict(test_ds)
        fn = sum(1 for s, pred in zip(test_ds, predictions)
                 if s.label is Label.BANKRUPT and pred.prediction is Label.HEALTHY)
        fp = sum(1 for s, pred in zip(test_ds, predictions)
                 if s.label is Label.HEALTHY and pred.prediction is Label.BANKRUPT)
        accuracies.append(_weighted_accuracy(len(test_ds), fn, fp, cfg.type_i_weight))

    penalty = cfg.parsimony_weight * (float(mask.sum()) / mask.size)
    return float(np.mean(accuracies)) - penalty


def _repair(mask: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if not mask.any():
        mask[rng.integers(mask.size)] = 1
    return mask


def initial_population(
    cfg: GaConfig, universe: Sequence[RatioId], rng: np.random.Generator
) -> list[np.ndarray]:
    """Classic feature-set masks first, then seeded random masks up to size."""
    population = []
    for fs in SEED_SETS:
        if len(population) >= cfg.population_size:
            break
        population.append(_repair(mask_for(fs, universe), rng))
    while len(population) < cfg.population_size:
        mask = (rng.random(len(universe)) < 0.5).astype(np.uint8)
        population.append(_repair(mask, rng))
    return population


def _tournament(fitnesses: np.ndarray, size: int, rng: np.random.Generator) -> int:
    contenders = rng.integers(0, fitnesses.size, size=size)
    return int(contenders[np.argmax(fitnesses[contenders])])


def _crossover(a: np.ndarray, b: np.ndarray, rng: np.random.Generator):
    if a.size < 2:
        return a.copy(), b.copy()
    point = int(rng.integers(1, a.size))
    child1 = np.concatenate([a[:point], b[point:]])
    child2 = np.concatenate([b[:point], a[point:]])
    return child1, child2


def _mutate(mask: np.ndarray, rate: float, rng: np.random.Generator) -> np.ndarray:
    flips = rng.random(mask.size) < rate
    mask = np.where(flips, 1 - mask, mask).astype(np.uint8)
    return _repair(mask, rng)


def evolve(
    dataset: Dataset,
    cfg: GaConfig,
    pipeline_template,
    universe: Sequence[RatioId] = CANONICAL_ORDER,
    fitness_fn: Callable[[np.ndarray], float] | None = None,
) -> GaResult:
    """Run the generational loop and return the best chromosome found.

    ``fitness_fn`` may replace the pipeline-backed fitness (the tests use this
    to plug in cheap synthetic landscapes); by default masks are scored with
    :func:`mask_fitness` and memoized.
    """
    cfg.validate()
    universe = tuple(universe)
    length = len(universe)
    mutation_rate = cfg.mutation_rate if cfg.mutation_rate is not None else 1.0 / length
    rng = np.random.default_rng(cfg.seed)

    cache: dict[bytes, float] = {}
    evaluations = 0

    def score(mask: np.ndarray) -> float:
        nonlocal evaluations
        key = mask.tobytes()
        if key not in cache:
            if fitness_fn is not None:
                cache[key] = float(fitness_fn(mask))
            else:
                cache[key] = mask_fitness(mask, dataset, pipeline_template, cfg, universe)
            evaluations += 1
        return cache[key]

    population = initial_population(cfg, universe, rng)
    fitnesses = np.array([score(m) for m in population])

    history: list[tuple[float, float]] = []
    best_fitness = -np.inf
    best_mask = population[int(np.argmax(fitnesses))].copy()

    for _ in range(cfg.generations):
        order = np.argsort(-fitnesses, kind="stable")
        next_population = [population[i].copy() for i in order[: cfg.elitism_count]]
        while len(next_population) < cfg.population_size:
            parent1 = population[_tournament(fitnesses, cfg.tournament_size, rng)]
            parent2 = population[_tournament(fitnesses, cfg.tournament_size, rng)]
            if rng.random() < cfg.crossover_rate:
                child1, child2 = _crossover(parent1, parent2, rng)
            else:
                child1, child2 = parent1.copy(), parent2.copy()
            for child in (child1, child2):
                if len(next_population) < cfg.population_size:
                    next_population.append(_mutate(child, mutation_rate, rng))
        population = next_population
        fitnesses = np.array([score(m) for m in population])

        gen_best = int(np.argmax(fitnesses))
        if fitnesses[gen_best] > best_fitness:
            best_fitness = float(fitnesses[gen_best])
            best_mask = population[gen_best].copy()
        history.append((float(fitnesses.max()), float(fitnesses.mean())))

    return GaResult(
        best_mask=tuple(int(b) for b in best_mask),
        best_fitness=best_fitness,
        history=tuple(history),
        evaluations=evaluations,
        universe=universe,
    )
