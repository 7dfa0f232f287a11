"""Exception types shared across the package.

Every contract violation raises a dedicated subclass so callers (and the CLI)
can distinguish bad input data from bugs. All of them derive from ValueError
so generic scikit-learn-style error handling keeps working.
"""

from __future__ import annotations


class BankpredError(ValueError):
    """Base class for every error raised by this package."""


class MissingColumnError(BankpredError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"missing required column {name!r}")


class NonNumericFieldError(BankpredError):
    def __init__(self, row: int, column: str, value: str):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"row {row}: column {column!r} is not numeric: {value!r}")


class NonPositiveTotalAssetsError(BankpredError):
    def __init__(self, row: int | None = None, firm_id: str | None = None):
        self.row = row
        self.firm_id = firm_id
        where = f"row {row}" if row is not None else f"firm {firm_id!r}"
        super().__init__(f"{where}: total_assets must be > 0")


class DuplicateFirmPeriodError(BankpredError):
    def __init__(self, firm_id: str, period: int):
        self.firm_id = firm_id
        self.period = period
        super().__init__(f"duplicate (firm_id, period) pair: ({firm_id!r}, {period})")


class InvalidFieldValueError(BankpredError):
    def __init__(self, row: int, column: str, reason: str):
        self.row = row
        self.column = column
        self.reason = reason
        super().__init__(f"row {row}: column {column!r}: {reason}")


class EmptyDatasetError(BankpredError):
    pass


class InvalidFractionError(BankpredError):
    def __init__(self, value: float):
        self.value = value
        super().__init__(f"bankrupt_fraction must lie strictly in (0, 1), got {value}")


class TooFewFirmsError(BankpredError):
    def __init__(self, n_firms: int, minimum: int = 4):
        self.n_firms = n_firms
        super().__init__(f"need at least {minimum} firms, got {n_firms}")


class MissingRatioError(BankpredError):
    def __init__(self, ratio):
        self.ratio = ratio
        super().__init__(f"required ratio {getattr(ratio, 'value', ratio)} is missing")


class UnknownSetNameError(BankpredError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown feature set name {name!r}")


class MissingRatioForFirmError(BankpredError):
    def __init__(self, offenders):
        # offenders: sequence of (firm_id, ratio) pairs
        self.offenders = tuple(offenders)
        shown = ", ".join(
            f"{firm}:{getattr(ratio, 'value', ratio)}" for firm, ratio in self.offenders[:8]
        )
        more = "" if len(self.offenders) <= 8 else f" (+{len(self.offenders) - 8} more)"
        super().__init__(f"ratios not computable for some firms: {shown}{more}")


class UnlabeledFirmError(BankpredError):
    def __init__(self, firm_id: str):
        self.firm_id = firm_id
        super().__init__(f"firm {firm_id!r} has no bankrupt/healthy label")


class TooFewPointsError(BankpredError):
    pass


class NonFiniteInputError(BankpredError):
    pass


class DimensionMismatchError(BankpredError):
    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"expected {expected} feature column(s), got {got}")


class DegenerateDesignError(BankpredError):
    pass


class EmptyMaskError(BankpredError):
    pass


class InsufficientUsableFirmsError(BankpredError):
    def __init__(self, n_usable: int, minimum: int = 4):
        self.n_usable = n_usable
        super().__init__(
            f"only {n_usable} usable firm(s) left after dropping incomplete rows; "
            f"need at least {minimum}"
        )


class SingleClassDatasetError(BankpredError):
    pass
