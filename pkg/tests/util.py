"""Shared helpers for the test suite."""

from dataclasses import replace

import numpy as np

from bankpred.data import Dataset, FinancialStatement, Label

MONETARY_FIELDS = (
    "total_assets",
    "total_liabilities",
    "current_assets",
    "current_liabilities",
    "retained_earnings",
    "ebit",
    "market_value_equity",
    "sales",
    "net_income",
    "net_income_prev",
    "net_income_prev2",
    "funds_from_operations",
)

_DEFAULTS = dict(
    firm_id="F0001",
    period=2010,
    total_assets=1_000_000.0,
    total_liabilities=450_000.0,
    current_assets=300_000.0,
    current_liabilities=200_000.0,
    retained_earnings=250_000.0,
    ebit=80_000.0,
    market_value_equity=600_000.0,
    sales=1_100_000.0,
    net_income=60_000.0,
    net_income_prev=55_000.0,
    net_income_prev2=50_000.0,
    funds_from_operations=70_000.0,
    label=Label.HEALTHY,
)


def make_statement(**overrides) -> FinancialStatement:
    fields = dict(_DEFAULTS)
    fields.update(overrides)
    fields["label"] = Label(fields["label"])
    return FinancialStatement(**fields)


def make_dataset(*statements, provenance="file", seed=None) -> Dataset:
    return Dataset(tuple(statements), provenance=provenance, seed=seed)


def scale_dataset(dataset: Dataset, k) -> Dataset:
    scaled = []
    for s in dataset:
        changes = {
            f: getattr(s, f) * k for f in MONETARY_FIELDS if getattr(s, f) is not None
        }
        scaled.append(replace(s, **changes))
    return Dataset(tuple(scaled), dataset.provenance, dataset.seed)


def stratified_split(dataset: Dataset, train_frac: float, seed: int):
    """Per-label shuffle then split; returns (train, test) datasets."""
    rng = np.random.default_rng(seed)
    by_label: dict[Label, list[FinancialStatement]] = {}
    for s in dataset:
        by_label.setdefault(s.label, []).append(s)
    train, test = [], []
    for label in sorted(by_label, key=lambda l: l.value):
        statements = by_label[label]
        order = rng.permutation(len(statements))
        cut = int(round(train_frac * len(statements)))
        train.extend(statements[i] for i in order[:cut])
        test.extend(statements[i] for i in order[cut:])
    return (
        Dataset(tuple(train), dataset.provenance, dataset.seed),
        Dataset(tuple(test), dataset.provenance, dataset.seed),
    )
