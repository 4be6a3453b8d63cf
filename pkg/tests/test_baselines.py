import pytest
from hypothesis import given, strategies as st

from hdrelay.baselines import LinkRates, conventional_rate, conventional_split

rates = st.floats(0, 50)


def test_examples():
    assert conventional_rate(LinkRates(1, 1)) == 0.5
    assert conventional_rate(LinkRates(3.0, 0)) == 0.0
    r = LinkRates(2, 1)
    assert conventional_rate(r) == pytest.approx(2 / 3)
    assert conventional_split(r) == pytest.approx(2 / 3)


def test_negative_rates_rejected():
    with pytest.raises(ValueError):
        LinkRates(-0.1, 1)


@given(rates, rates)
def test_properties(a, b):
    r = conventional_rate(LinkRates(a, b))
    assert r <= min(a, b) + 1e-12
    assert r == conventional_rate(LinkRates(b, a))
    if a > 0 and b > 0:
        t = conventional_split(LinkRates(a, b))
        assert (1 - t) * a == pytest.approx(r, abs=1e-12 * max(1, a))
        assert t * b == pytest.approx(r, abs=1e-12 * max(1, b))
