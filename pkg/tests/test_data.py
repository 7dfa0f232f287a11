import numpy as np
import pytest

from bankpred.data import (
    CSV_COLUMNS,
    Dataset,
    Label,
    generate_synthetic,
    parse_csv,
    write_csv,
)
from bankpred.errors import (
    DuplicateFirmPeriodError,
    EmptyDatasetError,
    InvalidFieldValueError,
    InvalidFractionError,
    MissingColumnError,
    NonNumericFieldError,
    NonPositiveTotalAssetsError,
    TooFewFirmsError,
)
from bankpred.pipeline import HybridPipeline
from bankpred.ratios import RatioId, compute_ratios

from util import MONETARY_FIELDS, make_statement

HEADER = ",".join(CSV_COLUMNS)


def row(firm="F1", period=2010, ta=1000, tl=400, ca=300, cl=200, re=100, ebit=50,
        mve=500, sales=900, ni=40, ni_prev=35, ni_prev2="", ffo=60, label="healthy"):
    return (f"{firm},{period},{ta},{tl},{ca},{cl},{re},{ebit},{mve},{sales},"
            f"{ni},{ni_prev},{ni_prev2},{ffo},{label}")


def write_file(path, *lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestParseCsv:
    def test_four_row_file_preserves_order_and_values(self, tmp_path):
        path = write_file(
            tmp_path / "firms.csv",
            HEADER,
            row(firm="alpha", label="bankrupt"),
            row(firm="beta", ta=2000, label="healthy"),
            row(firm="gamma", label="UNKNOWN"),
            row(firm="delta", ni_prev2="12", label="Bankrupt"),
        )
        ds = parse_csv(path)
        assert [s.firm_id for s in ds] == ["alpha", "beta", "gamma", "delta"]
        assert ds.statements[0].label is Label.BANKRUPT
        assert ds.statements[1].total_assets == 2000.0
        assert ds.statements[2].label is Label.UNKNOWN
        assert ds.statements[2].net_income_prev2 is None
        assert ds.statements[3].net_income_prev2 == 12.0
        assert ds.provenance == "file"

    def test_header_only_file_is_empty_and_untrainable(self, tmp_path):
        ds = parse_csv(write_file(tmp_path / "empty.csv", HEADER))
        assert len(ds) == 0
        with pytest.raises(EmptyDatasetError):
            HybridPipeline().fit(ds)

    def test_zero_total_assets_rejected(self, tmp_path):
        path = write_file(tmp_path / "bad.csv", HEADER, row(), row(firm="F2", ta=0))
        with pytest.raises(NonPositiveTotalAssetsError) as exc:
            parse_csv(path)
        assert exc.value.row == 3

    def test_missing_column(self, tmp_path):
        header = ",".join(c for c in CSV_COLUMNS if c != "sales")
        path = write_file(tmp_path / "bad.csv", header)
        with pytest.raises(MissingColumnError) as exc:
            parse_csv(path)
        assert exc.value.name == "sales"

    def test_non_numeric_field(self, tmp_path):
        path = write_file(tmp_path / "bad.csv", HEADER, row(ebit="lots"))
        with pytest.raises(NonNumericFieldError) as exc:
            parse_csv(path)
        assert (exc.value.row, exc.value.column) == (2, "ebit")

    def test_duplicate_firm_period(self, tmp_path):
        path = write_file(tmp_path / "bad.csv", HEADER, row(), row())
        with pytest.raises(DuplicateFirmPeriodError) as exc:
            parse_csv(path)
        assert (exc.value.firm_id, exc.value.period) == ("F1", 2010)

    def test_same_firm_different_periods_allowed(self, tmp_path):
        path = write_file(tmp_path / "ok.csv", HEADER, row(), row(period=2011))
        assert len(parse_csv(path)) == 2

    def test_bad_label_rejected(self, tmp_path):
        path = write_file(tmp_path / "bad.csv", HEADER, row(label="solvent"))
        with pytest.raises(InvalidFieldValueError) as exc:
            parse_csv(path)
        assert exc.value.column == "label"

    def test_negative_nonnegative_field_rejected(self, tmp_path):
        path = write_file(tmp_path / "bad.csv", HEADER, row(sales=-5))
        with pytest.raises(InvalidFieldValueError) as exc:
            parse_csv(path)
        assert exc.value.column == "sales"

    def test_reordered_header_rejected(self, tmp_path):
        header = ",".join(reversed(CSV_COLUMNS))
        with pytest.raises(InvalidFieldValueError):
            parse_csv(write_file(tmp_path / "bad.csv", header))

    def test_round_trip(self, tmp_path):
        original = write_file(
            tmp_path / "in.csv",
            HEADER,
            row(firm="a", ta=1234.5, label="bankrupt"),
            row(firm="b", ni=-17.25, ni_prev2="3.5"),
        )
        ds = parse_csv(original)
        out = tmp_path / "out.csv"
        write_csv(ds, out)
        assert parse_csv(out) == ds


class TestGenerator:
    def test_determinism_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(generate_synthetic(100, 0.5, 4.0, seed=7), a)
        write_csv(generate_synthetic(100, 0.5, 4.0, seed=7), b)
        assert a.read_bytes() == b.read_bytes()

    def test_different_seed_differs(self, tmp_path):
        assert generate_synthetic(20, 0.5, 1.0, seed=1) != generate_synthetic(20, 0.5, 1.0, seed=2)

    def test_too_few_firms(self):
        with pytest.raises(TooFewFirmsError):
            generate_synthetic(3, 0.5, 1.0, seed=0)

    @pytest.mark.parametrize("frac", [0.0, 1.0, -0.2, 1.5])
    def test_invalid_fraction(self, frac):
        with pytest.raises(InvalidFractionError):
            generate_synthetic(10, frac, 1.0, seed=0)

    def test_label_count_and_invariants(self):
        ds = generate_synthetic(51, 0.3, 2.0, seed=3)
        counts = ds.label_counts()
        assert counts[Label.BANKRUPT] == round(51 * 0.3)
        assert counts[Label.UNKNOWN] == 0
        keys = {(s.firm_id, s.period) for s in ds}
        assert len(keys) == 51
        assert all(s.total_assets > 0 for s in ds)
        assert all(s.current_assets >= 0 and s.current_liabilities >= 0 for s in ds)

    def test_round_trip_through_csv(self, tmp_path):
        ds = generate_synthetic(30, 0.4, 3.0, seed=9)
        path = tmp_path / "gen.csv"
        write_csv(ds, path)
        parsed = parse_csv(path)
        assert parsed.statements == ds.statements

    def test_monetary_fields_are_integer_valued(self):
        # keeps predictions bit-identical under decimal rescaling of the CSV
        ds = generate_synthetic(25, 0.4, 4.0, seed=5)
        for s in ds:
            for field in MONETARY_FIELDS:
                assert float(getattr(s, field)).is_integer()

    def test_zero_separation_classes_overlap(self):
        # derived from the generated data itself: group means should sit well
        # inside half a pooled standard deviation of each other
        ds = generate_synthetic(100, 0.5, 0.0, seed=7)
        vectors = [compute_ratios(s) for s in ds]
        for ratio in RatioId:
            b = np.array([v.values[ratio] for v in vectors
                          if v.label is Label.BANKRUPT and ratio in v.values])
            h = np.array([v.values[ratio] for v in vectors
                          if v.label is Label.HEALTHY and ratio in v.values])
            pooled = np.sqrt((b.var(ddof=1) + h.var(ddof=1)) / 2)
            if pooled > 0:
                assert abs(b.mean() - h.mean()) < 0.5 * pooled, ratio

    def test_high_separation_matches_distress_profile(self):
        ds = generate_synthetic(200, 0.5, 4.0, seed=11)
        vectors = [compute_ratios(s) for s in ds]
        tlta_b = np.mean([v.values[RatioId.TLTA] for v in vectors if v.label is Label.BANKRUPT])
        tlta_h = np.mean([v.values[RatioId.TLTA] for v in vectors if v.label is Label.HEALTHY])
        cacl_b = np.mean([v.values[RatioId.CACL] for v in vectors if v.label is Label.BANKRUPT])
        ni_b = [s.net_income for s in ds if s.label is Label.BANKRUPT]
        assert tlta_b > 0.85 and tlta_h < 0.65
        assert cacl_b < 1.0
        assert np.mean([ni < 0 for ni in ni_b]) > 0.9

    def test_signal_restriction_leaves_other_ratios_flat(self):
        ds = generate_synthetic(240, 0.4, 4.0, seed=21, signal_ratios={"NITL", "FUTL"})
        vectors = [compute_ratios(s) for s in ds]

        def gap(ratio):
            b = np.array([v.values[ratio] for v in vectors if v.label is Label.BANKRUPT])
            h = np.array([v.values[ratio] for v in vectors if v.label is Label.HEALTHY])
            pooled = np.sqrt((b.var(ddof=1) + h.var(ddof=1)) / 2)
            return abs(b.mean() - h.mean()) / pooled

        for quiet in (RatioId.X1, RatioId.X2, RatioId.X4, RatioId.X5, RatioId.TLTA):
            assert gap(quiet) < 0.6, quiet
        assert gap(RatioId.NITL) > 2.0
        assert gap(RatioId.FUTL) > 2.0

    def test_unknown_signal_rejected(self):
        with pytest.raises(ValueError):
            generate_synthetic(10, 0.5, 1.0, seed=0, signal_ratios={"OENEG"})

    def test_negative_separation_rejected(self):
        with pytest.raises(ValueError):
            generate_synthetic(10, 0.5, -1.0, seed=0)


def test_label_counts_queryable():
    ds = Dataset((make_statement(label=Label.BANKRUPT),
                  make_statement(firm_id="F2", label=Label.UNKNOWN)))
    counts = ds.label_counts()
    assert counts == {Label.BANKRUPT: 1, Label.HEALTHY: 0, Label.UNKNOWN: 1}
