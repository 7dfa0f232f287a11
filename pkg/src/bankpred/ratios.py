"""Financial ratios, classic scoring models and named feature sets.

All ratios are dimensionless, so any rescaling of a statement's monetary
fields leaves them unchanged. Each ratio is computed as a single division of
exactly-accumulated numerators and denominators; ratios whose divisor is zero
are omitted from the result (with a warning recorded per firm) rather than
silently imputed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .data import Dataset, FinancialStatement, Label
from .errors import (
    MissingRatioError,
    MissingRatioForFirmError,
    NonPositiveTotalAssetsError,
    UnknownSetNameError,
    UnlabeledFirmError,
)


class RatioId(str, enum.Enum):
    # Declaration order is the canonical order; the selection bitmask uses it.
    X1 = "X1"              # net working capital / total assets
    X2 = "X2"              # retained earnings / total assets
    X3 = "X3"              # EBIT / total assets
    X4 = "X4"              # market value of equity / total liabilities
    X5 = "X5"              # sales / total assets
    TLTA = "TLTA"          # total liabilities / total assets
    WCTA = "WCTA"          # working capital / total assets (== X1)
    CLCA = "CLCA"          # current liabilities / current assets
    NITA = "NITA"          # net income / total assets
    FUTL = "FUTL"          # funds from operations / total liabilities
    NITL = "NITL"          # net income / total liabilities
    CACL = "CACL"          # current assets / current liabilities
    OENEG = "OENEG"        # 1 if total liabilities exceed total assets
    INTWO = "INTWO"        # 1 if net income negative for the last two years
    CHIN = "CHIN"          # scaled change in net income, in [-1, 1]


CANONICAL_ORDER: tuple[RatioId, ...] = tuple(RatioId)
_ORDER_INDEX = {ratio: i for i, ratio in enumerate(CANONICAL_ORDER)}


@dataclass(frozen=True)
class RatioVector:
    """Computed ratios for one firm; absent keys mean 'not computable'."""

    values: dict[RatioId, float]
    firm_id: str
    label: Label
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class FeatureSet:
    name: str
    members: tuple[RatioId, ...]

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, ratio) -> bool:
        return ratio in self.members


ALTMAN = FeatureSet("A_Altman", (RatioId.X1, RatioId.X2, RatioId.X3, RatioId.X4, RatioId.X5))
OHLSON = FeatureSet(
    "B_Ohlson", (RatioId.TLTA, RatioId.WCTA, RatioId.CLCA, RatioId.NITA, RatioId.FUTL)
)
ZMIJEWSKI = FeatureSet("C_Zmijewski", (RatioId.TLTA, RatioId.NITL, RatioId.CACL))
SHUMWAY = FeatureSet("D_Shumway", (RatioId.TLTA, RatioId.NITL))
UNION_MODEL = FeatureSet(
    "E_Union",
    (RatioId.TLTA, RatioId.WCTA, RatioId.CLCA, RatioId.NITA,
     RatioId.FUTL, RatioId.NITL, RatioId.CACL),
)

_NAMED_SETS: dict[str, FeatureSet] = {}
for _fs in (ALTMAN, OHLSON, ZMIJEWSKI, SHUMWAY, UNION_MODEL):
    _NAMED_SETS[_fs.name.lower()] = _fs
    _NAMED_SETS[_fs.name[0].lower()] = _fs


def feature_set(name: str) -> FeatureSet:
    """Look up a named feature set by letter (``"A"``..``"E"``) or full name."""
    try:
        return _NAMED_SETS[str(name).strip().lower()]
    except KeyError:
        raise UnknownSetNameError(str(name))


def _canonical_members(members: Iterable[RatioId]) -> tuple[RatioId, ...]:
    unique = set(members)
    return tuple(sorted(unique, key=_ORDER_INDEX.__getitem__))


def custom_set(members: Iterable[RatioId]) -> FeatureSet:
    """Build a feature set from arbitrary ratios, canonically ordered."""
    ordered = _canonical_members(members)
    for named in (ALTMAN, OHLSON, ZMIJEWSKI, SHUMWAY, UNION_MODEL):
        if ordered == named.members:
            return named
    return FeatureSet("Custom", ordered)


def union_sets(sets: Sequence[FeatureSet]) -> FeatureSet:
    """Union of feature sets: commutative, associative, idempotent."""
    members: set[RatioId] = set()
    for fs in sets:
        members.update(fs.members)
    return custom_set(members)


def compute_ratios(s: FinancialStatement) -> RatioVector:
    """Compute every ratio of the canonical universe for one statement.

    Ratios with a zero divisor (X4/FUTL/NITL when total liabilities are zero,
    CACL when current liabilities are zero, CLCA when current assets are zero,
    CHIN when both income figures are zero) are left out of the map and noted
    in the vector's warning list.
    """
    ta = s.total_assets
    if ta <= 0:
        raise NonPositiveTotalAssetsError(firm_id=s.firm_id)
    tl = s.total_liabilities
    ca = s.current_assets
    cl = s.current_liabilities
    ni = s.net_income
    ni_prev = s.net_income_prev

    values: dict[RatioId, float] = {}
    warnings: list[str] = []

    working_capital = ca - cl
    values[RatioId.X1] = working_capital / ta
    values[RatioId.X2] = s.retained_earnings / ta
    values[RatioId.X3] = s.ebit / ta
    if tl != 0:
        values[RatioId.X4] = s.market_value_equity / tl
    else:
        warnings.append("X4 omitted: total_liabilities is zero")
    values[RatioId.X5] = s.sales / ta
    values[RatioId.TLTA] = tl / ta
    values[RatioId.WCTA] = values[RatioId.X1]
    if ca != 0:
        values[RatioId.CLCA] = cl / ca
    else:
        warnings.append("CLCA omitted: current_assets is zero")
    values[RatioId.NITA] = ni / ta
    if tl != 0:
        values[RatioId.FUTL] = s.funds_from_operations / tl
        values[RatioId.NITL] = ni / tl
    else:
        warnings.append("FUTL omitted: total_liabilities is zero")
        warnings.append("NITL omitted: total_liabilities is zero")
    if cl != 0:
        values[RatioId.CACL] = ca / cl
    else:
        warnings.append("CACL omitted: current_liabilities is zero")
    values[RatioId.OENEG] = 1.0 if tl > ta else 0.0
    values[RatioId.INTWO] = 1.0 if (ni < 0 and ni_prev < 0) else 0.0
    chin_denom = abs(ni) + abs(ni_prev)
    if chin_denom != 0:
        values[RatioId.CHIN] = (ni - ni_prev) / chin_denom
    else:
        warnings.append("CHIN omitted: both income figures are zero")

    return RatioVector(values=values, firm_id=s.firm_id, label=s.label,
                       warnings=tuple(warnings))


_ALTMAN_WEIGHTS = {
    RatioId.X1: 0.012,
    RatioId.X2: 0.014,
    RatioId.X3: 0.033,
    RatioId.X4: 0.006,
    RatioId.X5: 0.999,
}


def altman_z(r: RatioVector) -> float:
    """Weighted discriminant score over X1..X5."""
    total = 0.0
    for ratio, weight in _ALTMAN_WEIGHTS.items():
        if ratio not in r.values:
            raise MissingRatioError(ratio)
        total += weight * r.values[ratio]
    return total


@dataclass(frozen=True)
class OhlsonCoefficients:
    """Logit coefficients; must be supplied by the caller, never defaulted."""

    a: float
    b1: float
    b2: float
    b3: float
    b4: float
    b5: float
    b6: float
    b7: float
    b8: float

    def __post_init__(self):
        for name in ("a", "b1", "b2", "b3", "b4", "b5", "b6", "b7", "b8"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"coefficient {name} must be finite")


_OHLSON_VARIABLES = (
    RatioId.TLTA, RatioId.WCTA, RatioId.CLCA, RatioId.OENEG,
    RatioId.NITA, RatioId.FUTL, RatioId.INTWO, RatioId.CHIN,
)


def ohlson_score(r: RatioVector, c: OhlsonCoefficients) -> float:
    """Logistic bankruptcy probability over the eight logit variables."""
    t = c.a
    weights = (c.b1, c.b2, c.b3, c.b4, c.b5, c.b6, c.b7, c.b8)
    for ratio, weight in zip(_OHLSON_VARIABLES, weights):
        if ratio not in r.values:
            raise MissingRatioError(ratio)
        t += weight * r.values[ratio]
    return 1.0 / (1.0 + math.exp(-t))


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Firms x ratios matrix plus the parallel label vector.

    ``y`` is 1 for bankrupt, 0 for healthy, -1 for unknown (only possible when
    the matrix was projected with ``require_labels=False``).
    """

    x: np.ndarray
    y: np.ndarray
    firm_ids: tuple[str, ...]
    ratio_ids: tuple[RatioId, ...]


_LABEL_CODE = {Label.BANKRUPT: 1, Label.HEALTHY: 0, Label.UNKNOWN: -1}


def project(dataset: Dataset, fs: FeatureSet, *, require_labels: bool = True) -> FeatureMatrix:
    """Assemble the feature matrix for ``fs`` in firm order and set order.

    Every firm must have every ratio of the set; otherwise the full list of
    (firm, ratio) offenders is raised. With ``require_labels`` any unknown
    label is rejected.
    """
    vectors = [compute_ratios(s) for s in dataset]
    offenders = [
        (v.firm_id, ratio)
        for v in vectors
        for ratio in fs.members
        if ratio not in v.values
    ]
    if offenders:
        raise MissingRatioForFirmError(offenders)
    if require_labels:
        for v in vectors:
            if v.label is Label.UNKNOWN:
                raise UnlabeledFirmError(v.firm_id)

    x = np.array([[v.values[ratio] for ratio in fs.members] for v in vectors],
                 dtype=np.float64).reshape(len(vectors), len(fs.members))
    y = np.array([_LABEL_CODE[v.label] for v in vectors], dtype=np.int8)
    return FeatureMatrix(
        x=x,
        y=y,
        firm_ids=tuple(v.firm_id for v in vectors),
        ratio_ids=fs.members,
    )


def write_ratio_csv(dataset: Dataset, fs: FeatureSet, path) -> None:
    """Emit ``firm_id,label,<ratios...>`` in canonical set order.

    Ratios that are not computable for a firm serialize as empty fields.
    """
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("firm_id,label," + ",".join(r.value for r in fs.members) + "\n")
        for s in dataset:
            vector = compute_ratios(s)
            cells = [s.firm_id, s.label.value]
            for ratio in fs.members:
                value = vector.values.get(ratio)
                cells.append("" if value is None else repr(value))
            fh.write(",".join(cells) + "\n")
