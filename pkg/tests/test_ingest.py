from datetime import date
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskdecomp.errors import ValidationError
from riskdecomp.ingest import (PricePanel, ReturnPanel, WeightSpec, format_prices,
                               format_returns, format_weights, linear_returns, make_weights,
                               normalize_prices, parse_prices, parse_returns,
                               parse_weight_column, parse_weight_spec, window_last)

DATA = Path(__file__).parent / "data"

QUARTERLY_RETURNS = np.array([
    [7.271, -10.552, -8.450, -14.478, -9.416],
    [4.302, 9.353, 8.568, 14.311, 15.508],
    [-4.498, 10.042, 14.116, 6.548, 6.806],
])


@pytest.fixture
def quarterly():
    return parse_prices((DATA / "table5_prices.tsv").read_text())


def test_quarterly_prices_parse(quarterly):
    assert quarterly.tickers == ("IEF", "IWB", "IWM", "EFA", "EEM")
    assert quarterly.dates[0] == date(2010, 3, 31)
    assert quarterly.prices.shape == (4, 5)


def test_quarterly_returns_match_published(quarterly):
    rp = linear_returns(quarterly)
    np.testing.assert_array_equal(np.round(rp.returns, 3), QUARTERLY_RETURNS)
    assert rp.periods == quarterly.dates[1:]


def test_comma_delimiter_equivalent(quarterly):
    text = (DATA / "table5_prices.tsv").read_text().replace("\t", ",")
    other = parse_prices(text)
    np.testing.assert_array_equal(other.prices, quarterly.prices)


def test_normalize_sets_anchor_row(quarterly):
    norm = normalize_prices(quarterly, "2010-03-31")
    np.testing.assert_allclose(norm.prices[0], 100.0)
    # ratios within a column survive scaling
    np.testing.assert_allclose(norm.prices[2] / norm.prices[1],
                               quarterly.prices[2] / quarterly.prices[1])


def test_normalize_level(quarterly):
    norm = normalize_prices(quarterly, date(2010, 12, 31), level=1.0)
    np.testing.assert_allclose(norm.prices[-1], 1.0)


def test_normalize_unknown_anchor(quarterly):
    with pytest.raises(ValidationError, match="anchor"):
        normalize_prices(quarterly, "2010-01-01")


@pytest.mark.parametrize("text, match", [
    ("", "empty"),
    ("date\tA\n", "empty panel"),
    ("day\tA\n2010-01-01\t1\n", "header"),
    ("date\tA\tA\n2010-01-01\t1\t2\n", "duplicate"),
    ("date\tA\n2010-01-01\t1\t2\n", "expected 2 fields"),
    ("date\tA\n01/02/2010\t1\n", "YYYY-MM-DD"),
    ("date\tA\n2010-01-01\tx\n", "line 2"),
    ("date\tA\n2010-01-01\t0\n", "non-positive"),
    ("date\tA\n2010-01-01\t-3\n", "non-positive"),
    ("date\tA\n2010-01-01\tnan\n", "non-finite"),
    ("date\tA\n2010-01-02\t1\n2010-01-01\t2\n", "non-increasing"),
    ("date\tA\n2010-01-02\t1\n2010-01-02\t2\n", "non-increasing"),
])
def test_parse_prices_rejects(text, match):
    with pytest.raises(ValidationError, match=match):
        parse_prices(text)


def test_comment_lines_ignored():
    panel = parse_prices("# source: test\ndate\tA\n2010-01-01\t1\n2010-01-02\t2\n")
    assert panel.prices.shape == (2, 1)


def test_single_row_has_no_returns():
    panel = parse_prices("date\tA\n2010-01-01\t1\n")
    with pytest.raises(ValidationError):
        linear_returns(panel)


def test_returns_roundtrip(quarterly):
    rp = linear_returns(quarterly)
    back = parse_returns(format_returns(rp))
    np.testing.assert_array_equal(back.returns, rp.returns)
    assert back.periods == rp.periods
    assert back.tickers == rp.tickers


def test_prices_roundtrip(quarterly):
    back = parse_prices(format_prices(quarterly))
    np.testing.assert_array_equal(back.prices, quarterly.prices)


def test_window_last_keeps_tail(quarterly):
    rp = linear_returns(quarterly).with_weights([2, 3, 4])
    w2 = window_last(rp, 2)
    assert w2.M == 2
    np.testing.assert_array_equal(w2.returns, rp.returns[1:])
    np.testing.assert_allclose(w2.weights, [3 / 7, 4 / 7])
    assert w2.periods == rp.periods[1:]


@pytest.mark.parametrize("M", [0, 4])
def test_window_out_of_range(quarterly, M):
    with pytest.raises(ValidationError):
        window_last(linear_returns(quarterly), M)


def test_window_253_prices_to_200_returns():
    days = np.arange(253)
    dates = [date.fromordinal(date(2009, 12, 31).toordinal() + int(i)) for i in days]
    prices = 100 + np.cumsum(np.ones((253, 2)), axis=0)
    rp = window_last(linear_returns(PricePanel(dates, ("A", "B"), prices)), 200)
    assert rp.M == 200
    assert rp.periods[-1] == dates[-1]


def test_return_panel_validation():
    with pytest.raises(ValidationError, match="rho"):
        ReturnPanel(np.ones((2, 2)), ("A", "B"), rho=0.5)
    with pytest.raises(ValidationError):
        ReturnPanel(np.ones((2, 2)), ("A",))
    with pytest.raises(ValidationError):
        ReturnPanel(np.ones((2, 2)), ("A", "B"), weights=[1, -1])
    with pytest.raises(ValidationError):
        ReturnPanel(np.ones((2, 2)), ("A", "B"), weights=[1, 2, 3])


def test_panel_weights_normalized():
    rp = ReturnPanel(np.ones((3, 1)), ("A",), weights=[2, 3, 4])
    np.testing.assert_allclose(rp.weights, [2 / 9, 3 / 9, 4 / 9])
    np.testing.assert_allclose(ReturnPanel(np.ones((4, 1)), ("A",)).omega(), 0.25)


def test_select_reorders(quarterly):
    rp = linear_returns(quarterly).select(["EEM", "IEF"])
    assert rp.tickers == ("EEM", "IEF")
    np.testing.assert_array_equal(rp.returns[:, 1], linear_returns(quarterly).returns[:, 0])
    with pytest.raises(ValidationError):
        rp.select(["XYZ"])


# -- weights -----------------------------------------------------------------

def test_late_heavy_matches_published_shape():
    w = make_weights(WeightSpec("late-heavy"), 200)
    # the published levels already sum to one, so normalization is a no-op
    np.testing.assert_allclose(w[:70], 1 / 280, rtol=1e-12)
    np.testing.assert_allclose(w[-30:], 1 / 140, rtol=1e-12)
    i = np.arange(1, 101)
    np.testing.assert_allclose(w[70:170], (1 + i / 101) / 280, rtol=1e-12)
    assert w.sum() == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("M", [100, 150, 200, 500])
def test_late_heavy_monotone(M):
    w = make_weights(WeightSpec("late-heavy"), M)
    assert np.all(np.diff(w) >= 0)
    assert w.sum() == pytest.approx(1.0)


def test_late_heavy_too_short():
    with pytest.raises(ValidationError, match="exceeds"):
        make_weights(WeightSpec("late-heavy"), 99)


@pytest.mark.parametrize("text, kind", [
    ("uniform", "uniform"),
    ("late-heavy", "late-heavy"),
    ("late-heavy:1,1,1/4,1/2", "late-heavy"),
    ("2,3,4", "explicit"),
    ("2/9,3/9,4/9", "explicit"),
])
def test_weight_spec_grammar(text, kind):
    assert parse_weight_spec(text).kind == kind


def test_weight_spec_explicit_values():
    np.testing.assert_allclose(make_weights(parse_weight_spec("2,3,4"), 3), [2 / 9, 3 / 9, 4 / 9])
    with pytest.raises(ValidationError):
        make_weights(parse_weight_spec("2,3,4"), 4)


def test_weight_spec_short_late_heavy():
    w = make_weights(parse_weight_spec("late-heavy:1,1,1/4,1/2"), 3)
    np.testing.assert_allclose(w / w[0], [1, 1.5, 2])


def test_weight_spec_file(tmp_path):
    path = tmp_path / "w.txt"
    path.write_text(format_weights(np.array([1.0, 1.0, 2.0])))
    spec = parse_weight_spec(f"@{path}")
    np.testing.assert_allclose(make_weights(spec, 3), [0.25, 0.25, 0.5])


@pytest.mark.parametrize("text", ["late-heavy:1,2", "late-heavy;1", "a,b", "late-heavy:1,1,2,1"])
def test_weight_spec_rejects(text):
    with pytest.raises(ValidationError):
        parse_weight_spec(text)


def test_weight_column_header():
    with pytest.raises(ValidationError, match="header"):
        parse_weight_column("w\n1\n")


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 100), min_size=1, max_size=40))
def test_explicit_weights_normalize(raw):
    w = make_weights(WeightSpec("explicit", raw=tuple(raw)), len(raw))
    assert w.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(w * sum(raw), raw, rtol=1e-9)
