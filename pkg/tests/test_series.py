import numpy as np
import pytest
from hypothesis import given, strategies as st

from rescurve.errors import (CutoffOutOfRange, DuplicateMonth, MalformedRow, MissingMonth,
                             NegativeValue, WindowTooLarge, ZeroOrigin)
from rescurve.series import (MonthStamp, PerformanceSeries, concat, moving_average,
                             normalize_at_origin, parse_series, split_at)


def series(values, start="2017-01"):
    return PerformanceSeries(MonthStamp.parse(start), np.asarray(values, dtype=float))


def test_monthstamp_arithmetic():
    m = MonthStamp.parse("2019-11")
    assert str(m.shift(3)) == "2020-02"
    assert str(m.shift(-11)) == "2018-12"
    assert MonthStamp.parse("2020-02") - m == 3
    assert MonthStamp(2017, 1) < MonthStamp(2017, 2) < MonthStamp(2018, 1)
    with pytest.raises(ValueError):
        MonthStamp(2017, 13)
    with pytest.raises(ValueError):
        MonthStamp.parse("2017/01")


@given(st.integers(-5000, 5000))
def test_monthstamp_ordinal_roundtrip(k):
    m = MonthStamp(2000, 6).shift(k)
    assert MonthStamp.from_ordinal(m.ordinal) == m
    assert m - MonthStamp(2000, 6) == k


def test_parse_basic():
    s = parse_series("month,value\n2017-01,100\n2017-02,110")
    assert s.start == MonthStamp(2017, 1)
    assert list(s.values) == [100, 110]


def test_parse_gap_reports_row():
    with pytest.raises(MissingMonth) as err:
        parse_series("month,value\n2017-01,100\n2017-03,120")
    assert err.value.row == 3


def test_parse_72_rows():
    months = [MonthStamp(2017, 1).shift(i) for i in range(72)]
    text = "month,value\n" + "".join(f"{m},{i}\n" for i, m in enumerate(months))
    s = parse_series(text)
    assert len(s) == 72 and str(s.end) == "2022-12"


def test_parse_unsorted_comments_and_label():
    text = "# note\nmonth,value,label\n2017-02,2,TX\n\n2017-01,1,TX\n"
    s = parse_series(text)
    assert list(s.values) == [1, 2] and s.label == "TX"


@pytest.mark.parametrize("text,exc,row", [
    ("month,value\n2017-01,1\n2017-01,2\n", DuplicateMonth, 3),
    ("month,value\n2017-01,-1\n", NegativeValue, 2),
    ("month,value\n2017-01,abc\n", MalformedRow, 2),
    ("month,value\n2017-1x,1\n", MalformedRow, 2),
    ("when,value\n2017-01,1\n", MalformedRow, 1),
    ("", MalformedRow, 1),
])
def test_parse_errors(text, exc, row):
    with pytest.raises(exc) as err:
        parse_series(text)
    assert err.value.row == row


def test_csv_roundtrip_exact():
    s = PerformanceSeries(MonthStamp(2018, 5), np.array([0.1, 1 / 3, 2e-17, 12345.678]), "x")
    back = parse_series(s.to_csv())
    assert back.start == s.start and back.label == "x"
    assert np.array_equal(back.values, s.values)


def test_moving_average_examples():
    assert np.allclose(moving_average(series([3, 6, 9]), 3).values, [3, 4.5, 6])
    assert np.allclose(moving_average(series([1, 2, 3, 4, 5, 6]), 3).values,
                       [1, 1.5, 2, 3, 4, 5])
    s = series([5, 1, 7])
    assert moving_average(s, 1) is s
    with pytest.raises(WindowTooLarge):
        moving_average(s, 4)


@given(st.lists(st.floats(0, 1e6), min_size=1, max_size=40), st.integers(1, 6))
def test_moving_average_brute_force(values, window):
    if window > len(values):
        return
    out = moving_average(series(values), window).values
    for i in range(len(values)):
        lo = max(0, i - window + 1)
        assert out[i] == pytest.approx(sum(values[lo:i + 1]) / (i + 1 - lo), rel=1e-12, abs=1e-9)


def test_normalize_examples():
    assert np.allclose(normalize_at_origin(series([100, 110, 90])).values, [1.0, 1.1, 0.9])
    assert np.allclose(normalize_at_origin(series([1, 1, 1])).values, [1, 1, 1])
    assert np.allclose(normalize_at_origin(series([50, 25])).values, [1.0, 0.5])
    with pytest.raises(ZeroOrigin):
        normalize_at_origin(series([0, 1]))


def test_split_examples():
    s = series(np.arange(72.0))
    pre, post = split_at(s, s.start.shift(36))
    assert (len(pre), len(post)) == (36, 36)
    pre, post = split_at(s, MonthStamp(2020, 1))
    assert str(pre.end) == "2019-12" and str(post.start) == "2020-01"
    with pytest.raises(CutoffOutOfRange):
        split_at(s, s.start)
    assert np.array_equal(concat(pre, post).values, s.values)
