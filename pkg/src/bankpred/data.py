"""Firm financial statements: CSV ingestion, validation, synthetic data.

The on-disk format is a UTF-8, comma-separated file with exactly this header::

    firm_id,period,total_assets,total_liabilities,current_assets,
    current_liabilities,retained_earnings,ebit,market_value_equity,sales,
    net_income,net_income_prev,net_income_prev2,funds_from_operations,label

(one line, no spaces). Decimal separator is '.', no thousands separators.
``net_income_prev2`` may be left empty; ``label`` is one of
bankrupt/healthy/unknown, matched case-insensitively. Row numbers in error
messages count the header as line 1.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import (
    DuplicateFirmPeriodError,
    InvalidFieldValueError,
    InvalidFractionError,
    MissingColumnError,
    NonNumericFieldError,
    NonPositiveTotalAssetsError,
    TooFewFirmsError,
)

CSV_COLUMNS = (
    "firm_id",
    "period",
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
    "label",
)

# Monetary columns that must be >= 0 (total_assets is separately required > 0).
_NONNEGATIVE_COLUMNS = frozenset(
    {"total_liabilities", "current_assets", "current_liabilities",
     "market_value_equity", "sales"}
)


class Label(str, enum.Enum):
    BANKRUPT = "bankrupt"
    HEALTHY = "healthy"
    UNKNOWN = "unknown"

    @classmethod
    def parse(cls, text: str) -> "Label":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise KeyError(text)


@dataclass(frozen=True)
class FinancialStatement:
    """One firm-period of raw accounting fields plus the bankruptcy label."""

    firm_id: str
    period: int
    total_assets: float
    total_liabilities: float
    current_assets: float
    current_liabilities: float
    retained_earnings: float
    ebit: float
    market_value_equity: float
    sales: float
    net_income: float
    net_income_prev: float
    net_income_prev2: float | None
    funds_from_operations: float
    label: Label


@dataclass(frozen=True)
class Dataset:
    statements: tuple[FinancialStatement, ...]
    provenance: str = "file"  # "file" | "synthetic"
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.statements)

    def __iter__(self) -> Iterator[FinancialStatement]:
        return iter(self.statements)

    def label_counts(self) -> dict[Label, int]:
        counts = {label: 0 for label in Label}
        for s in self.statements:
            counts[s.label] += 1
        return counts


def _parse_number(row: int, column: str, text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise NonNumericFieldError(row, column, text)
    if not math.isfinite(value):
        raise NonNumericFieldError(row, column, text)
    return value


def parse_csv(path) -> Dataset:
    """Read a dataset from ``path``, enforcing the canonical schema.

    Raises MissingColumnError, NonNumericFieldError, NonPositiveTotalAssetsError,
    DuplicateFirmPeriodError or InvalidFieldValueError with the offending
    row/column attached.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise MissingColumnError(CSV_COLUMNS[0])
        header = [h.strip() for h in header]
        for column in CSV_COLUMNS:
            if column not in header:
                raise MissingColumnError(column)
        if header != list(CSV_COLUMNS):
            raise InvalidFieldValueError(
                1, ",".join(header), "header does not match the canonical schema"
            )

        statements: list[FinancialStatement] = []
        seen: set[tuple[str, int]] = set()
        for row_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue  # tolerate blank lines
            if len(row) != len(CSV_COLUMNS):
                raise InvalidFieldValueError(
                    row_no, "", f"expected {len(CSV_COLUMNS)} fields, got {len(row)}"
                )
            record = dict(zip(CSV_COLUMNS, row))

            firm_id = record["firm_id"].strip()
            if not firm_id:
                raise InvalidFieldValueError(row_no, "firm_id", "must be non-empty")
            try:
                period = int(record["period"])
            except ValueError:
                raise NonNumericFieldError(row_no, "period", record["period"])

            values: dict[str, float | None] = {}
            for column in CSV_COLUMNS[2:-1]:
                text = record[column].strip()
                if column == "net_income_prev2" and text == "":
                    values[column] = None
                    continue
                values[column] = _parse_number(row_no, column, text)

            if values["total_assets"] <= 0:
                raise NonPositiveTotalAssetsError(row=row_no)
            for column in _NONNEGATIVE_COLUMNS:
                if values[column] < 0:
                    raise InvalidFieldValueError(row_no, column, "must be >= 0")

            try:
                label = Label.parse(record["label"])
            except KeyError:
                raise InvalidFieldValueError(
                    row_no, "label",
                    f"must be one of bankrupt/healthy/unknown, got {record['label']!r}",
                )

            key = (firm_id, period)
            if key in seen:
                raise DuplicateFirmPeriodError(firm_id, period)
            seen.add(key)

            statements.append(FinancialStatement(
                firm_id=firm_id, period=period, label=label, **values  # type: ignore[arg-type]
            ))

    return Dataset(statements=tuple(statements), provenance="file", seed=None)


def _format_number(value: float | None) -> str:
    if value is None:
        return ""
    return repr(float(value))


def write_csv(dataset: Dataset, path) -> None:
    """Serialize a dataset; parsing the result reproduces it exactly."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for s in dataset:
            writer.writerow([
                s.firm_id,
                str(s.period),
                _format_number(s.total_assets),
                _format_number(s.total_liabilities),
                _format_number(s.current_assets),
                _format_number(s.current_liabilities),
                _format_number(s.retained_earnings),
                _format_number(s.ebit),
                _format_number(s.market_value_equity),
                _format_number(s.sales),
                _format_number(s.net_income),
                _format_number(s.net_income_prev),
                _format_number(s.net_income_prev2),
                _format_number(s.funds_from_operations),
                s.label.value,
            ])


# Ratio aspects of the synthetic generator that can carry a class signal.
GENERATOR_SIGNALS = frozenset({"TLTA", "NITA", "NITL", "CACL", "FUTL"})
DEFAULT_SIGNALS = frozenset({"TLTA", "NITA", "CACL", "FUTL"})

_GENERATOR_PERIOD = 2010


def generate_synthetic(
    n_firms: int,
    bankrupt_fraction: float,
    separation: float,
    seed: int,
    signal_ratios=None,
) -> Dataset:
    """Draw a labeled dataset of plausible accounting fields.

    Healthy and bankrupt firms are drawn from per-ratio normal profiles whose
    class means differ by ``separation`` within-class standard deviations for
    every ratio named in ``signal_ratios`` (default: TLTA, NITA, CACL, FUTL,
    i.e. leverage up, profitability down, liquidity down for bankrupt firms).
    Passing e.g. ``{"NITL", "FUTL"}`` confines the class signal to
    liability-scaled profitability and cash flow, leaving asset-scaled ratios
    uninformative.

    All monetary fields are emitted as whole currency units. That keeps every
    field exactly representable after multiplying by scale factors such as
    10**6, so rescaled copies of a file produce bit-identical predictions.

    Deterministic: identical arguments yield identical datasets.
    """
    if not 0.0 < bankrupt_fraction < 1.0:
        raise InvalidFractionError(bankrupt_fraction)
    if n_firms < 4:
        raise TooFewFirmsError(n_firms)
    if separation < 0:
        raise ValueError(f"separation must be >= 0, got {separation}")
    if signal_ratios is None:
        signals = DEFAULT_SIGNALS
    else:
        signals = frozenset(signal_ratios)
        unknown = signals - GENERATOR_SIGNALS
        if unknown:
            raise ValueError(f"unsupported signal ratios: {sorted(unknown)}")

    rng = np.random.default_rng(seed)
    n_bankrupt = round(n_firms * bankrupt_fraction)
    bankrupt = np.arange(n_firms) < n_bankrupt

    def profile(mu_healthy, sigma, distress_sign, active):
        z = rng.standard_normal(n_firms)
        shift = distress_sign * separation * sigma if active else 0.0
        mu = np.where(bankrupt, mu_healthy + shift, mu_healthy)
        return mu + sigma * z

    total_assets = np.rint(np.exp(13.0 + 0.5 * rng.standard_normal(n_firms)))
    total_assets = np.maximum(total_assets, 1000.0)

    tlta = np.clip(profile(0.50, 0.12, +1, "TLTA" in signals), 0.02, None)
    cl_frac = np.clip(0.30 + 0.03 * rng.standard_normal(n_firms), 0.05, None)
    cacl = np.clip(profile(1.60, 0.20, -1, "CACL" in signals), 0.05, None)

    # Net income is anchored either to liabilities (NITL signal) or to assets.
    income_on_liabilities = "NITL" in signals and "NITA" not in signals
    if income_on_liabilities:
        ni_now = profile(0.12, 0.05, -1, True)
        ni_prev = profile(0.12, 0.05, -1, True)
        ni_prev2 = profile(0.12, 0.05, -1, True)
    else:
        ni_now = profile(0.06, 0.025, -1, "NITA" in signals)
        ni_prev = profile(0.06, 0.025, -1, "NITA" in signals)
        ni_prev2 = profile(0.06, 0.025, -1, "NITA" in signals)

    futl = profile(0.12, 0.05, -1, "FUTL" in signals)
    re_ta = 0.25 + 0.10 * rng.standard_normal(n_firms)
    ebit_ta = 0.08 + 0.04 * rng.standard_normal(n_firms)
    mve_tl = np.clip(1.20 + 0.35 * rng.standard_normal(n_firms), 0.0, None)
    sales_ta = np.clip(1.00 + 0.25 * rng.standard_normal(n_firms), 0.0, None)

    total_liabilities = np.maximum(np.rint(tlta * total_assets), 1.0)
    current_liabilities = np.maximum(np.rint(cl_frac * total_assets), 1.0)
    current_assets = np.maximum(np.rint(cacl * current_liabilities), 1.0)
    income_base = total_liabilities if income_on_liabilities else total_assets
    net_income = np.rint(ni_now * income_base)
    net_income_prev = np.rint(ni_prev * income_base)
    net_income_prev2 = np.rint(ni_prev2 * income_base)
    funds_from_operations = np.rint(futl * total_liabilities)
    retained_earnings = np.rint(re_ta * total_assets)
    ebit = np.rint(ebit_ta * total_assets)
    market_value_equity = np.maximum(np.rint(mve_tl * total_liabilities), 0.0)
    sales = np.maximum(np.rint(sales_ta * total_assets), 0.0)

    width = max(4, len(str(n_firms)))
    statements = tuple(
        FinancialStatement(
            firm_id=f"F{i + 1:0{width}d}",
            period=_GENERATOR_PERIOD,
            total_assets=float(total_assets[i]),
            total_liabilities=float(total_liabilities[i]),
            current_assets=float(current_assets[i]),
            current_liabilities=float(current_liabilities[i]),
            retained_earnings=float(retained_earnings[i]),
            ebit=float(ebit[i]),
            market_value_equity=float(market_value_equity[i]),
            sales=float(sales[i]),
            net_income=float(net_income[i]),
            net_income_prev=float(net_income_prev[i]),
            net_income_prev2=float(net_income_prev2[i]),
            funds_from_operations=float(funds_from_operations[i]),
            label=Label.BANKRUPT if bankrupt[i] else Label.HEALTHY,
        )
        for i in range(n_firms)
    )
    return Dataset(statements=statements, provenance="synthetic", seed=seed)
