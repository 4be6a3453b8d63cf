import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hdrelay.bsc import BscPair, bsc_rate_curves
from hdrelay.probability import ConditionalPmf, binary_entropy
from hdrelay.solver import (
    NoCrossing, RateCurves, Regime, bisect_root, concavity_violations, dmc_rate_curves,
    golden_section_max, grid_max_min, slope, solve_capacity, solve_crossing, solve_interior_max,
)

linear = RateCurves(lambda p: 1 - p, lambda p: p)


def bsc_scan_max_min(e1, e2, n=100_000):
    # vectorised closed forms on a uniform grid, independent of the solver
    h = lambda q: -np.where(q > 0, q * np.log2(np.where(q > 0, q, 1)), 0) \
        - np.where(q < 1, (1 - q) * np.log2(np.where(q < 1, 1 - q, 1)), 0)
    p = np.linspace(0, 1, n + 1)
    r1 = (1 - h(np.float64(e1))) * (1 - p)
    r2 = h(e2 * (1 - 2 * p) + p) - h(np.float64(e2))
    v = np.minimum(r1, r2)
    i = int(np.argmax(v))
    return p[i], v[i]


def test_bisect_root_and_no_sign_change():
    assert bisect_root(lambda x: x * x - 2, 0, 2) == pytest.approx(math.sqrt(2), abs=1e-9)
    with pytest.raises(NoCrossing):
        bisect_root(lambda x: x * x + 1, 0, 2)


def test_linear_crossing():
    assert solve_crossing(linear) == pytest.approx(0.5, abs=1e-9)
    sol = solve_capacity(linear)
    assert sol.p_u_star == pytest.approx(0.5, abs=1e-9)
    assert sol.capacity == pytest.approx(0.5, abs=1e-9)


def test_crossing_picks_smaller_root():
    # r2 crosses r1 at 0.2, drops below again and re-crosses later
    r2 = lambda p: 4 * p if p < 0.25 else max(0.0, 1.0 - 1.5 * (p - 0.25)) + (p > 0.7) * 5
    p = solve_crossing(RateCurves(lambda p: 1 - p, r2))
    assert p == pytest.approx(0.2, abs=1e-9)


def test_crossing_brent_agrees():
    curves = bsc_rate_curves(BscPair(0.1, 0.1))
    a = solve_crossing(curves, scan_step=1e-3)
    b = solve_crossing(curves, scan_step=0.05, method="brent")
    assert a == pytest.approx(b, abs=1e-8)


def test_no_crossing_raises():
    with pytest.raises(NoCrossing):
        solve_crossing(RateCurves(lambda p: 2.0, lambda p: p))


def test_error_free_bsc_crossing():
    p = solve_crossing(bsc_rate_curves(BscPair(0, 0)))
    assert p == pytest.approx(0.22709, abs=1e-5)
    assert abs(1 - p - binary_entropy(p)) < 1e-8


def test_bsc_crossing_matches_fine_grid():
    curves = bsc_rate_curves(BscPair(0.1, 0.1))
    p = solve_crossing(curves)
    grid = np.linspace(0, 0.5, 500_001)
    g = np.array([curves.r1(x) - curves.r2(x) for x in grid[::50]])
    i = int(np.argmax(g <= 0))
    lo = grid[(i - 1) * 50]
    fine = grid[(i - 1) * 50:(i + 1) * 50 + 1]
    gf = np.array([curves.r1(x) - curves.r2(x) for x in fine])
    oracle = fine[int(np.argmax(gf <= 0))]
    assert lo <= p and abs(p - oracle) <= 1e-6


def test_golden_section_finds_boundary_and_interior():
    x, _ = golden_section_max(lambda p: p * (1 - p), 0, 1)
    assert x == pytest.approx(0.5, abs=1e-8)
    x, _ = golden_section_max(lambda p: p, 0, 1)
    assert x == 1.0


def test_interior_max_cases():
    assert solve_interior_max(lambda p: p * (1 - p)) == pytest.approx(0.5, abs=1e-8)
    r2 = bsc_rate_curves(BscPair(0.1, 0.2)).r2
    x = solve_interior_max(r2)
    assert x == pytest.approx(0.5, abs=1e-6)
    assert abs(slope(r2, x)) < 1e-6
    # rate curve that keeps rising to the end of the interval
    assert solve_interior_max(lambda p: math.log1p(p)) == 1.0


def test_concavity_probe_reports_violation(caplog):
    assert concavity_violations(lambda p: p * (1 - p)) == []
    bumpy = lambda p: math.sin(12 * p)
    assert concavity_violations(bumpy)
    solve_interior_max(bumpy)
    assert "not concave" in caplog.text


def test_interior_max_regime_strong_source():
    r2 = bsc_rate_curves(BscPair(0.0, 0.0)).r2
    sol = solve_capacity(RateCurves(lambda p: 10 * (1 - p), r2))
    assert sol.regime is Regime.INTERIOR_MAX
    assert sol.p_u_star == pytest.approx(0.5, abs=1e-8)
    assert sol.capacity == pytest.approx(1.0, abs=1e-12)


def test_solution_invariants_on_random_bsc(rng):
    for _ in range(30):
        e1, e2 = rng.uniform(0, 0.5, size=2)
        curves = bsc_rate_curves(BscPair(e1, e2))
        sol = solve_capacity(curves)
        assert sol.capacity == min(sol.r1_at_opt, sol.r2_at_opt)
        if sol.regime is Regime.CROSSING:
            assert abs(sol.r1_at_opt - sol.r2_at_opt) <= 1e-8
            assert sol.p_u_star <= 0.5 + 1e-9
        else:
            assert sol.r2_at_opt <= sol.r1_at_opt + 1e-12


def test_grid_oracle_on_random_bsc(rng):
    for _ in range(20):
        e1, e2 = rng.uniform(0, 0.5, size=2)
        curves = bsc_rate_curves(BscPair(e1, e2))
        _, oracle = bsc_scan_max_min(e1, e2)
        assert solve_capacity(curves).capacity == pytest.approx(oracle, abs=1e-4)


def test_grid_max_min_helper():
    p, v = grid_max_min(linear, step=1e-3)
    assert p == pytest.approx(0.5) and v == pytest.approx(0.5)


@given(st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0.5, 1.0))
def test_degrading_r2_never_increases_capacity(e1, e2, scale):
    curves = bsc_rate_curves(BscPair(e1, e2))
    worse = RateCurves(curves.r1, lambda p: scale * curves.r2(p), curves.r2_argmax)
    assert solve_capacity(worse).capacity <= solve_capacity(curves).capacity + 1e-8


def test_dmc_curves_reproduce_bsc_closed_form():
    curves = dmc_rate_curves(ConditionalPmf.bsc(0.05), ConditionalPmf.bsc(0.1))
    ref = bsc_rate_curves(BscPair(0.05, 0.1))
    for p in (0.0, 0.2, 0.5, 0.9):
        assert curves.r1(p) == pytest.approx(ref.r1(p), abs=1e-9)
        assert curves.r2(p) == pytest.approx(ref.r2(p), abs=1e-9)
    assert solve_capacity(curves).capacity == pytest.approx(solve_capacity(ref).capacity, abs=1e-7)


def test_dmc_ternary_relay_alphabet():
    # a relay with two active symbols over a noiseless ternary link
    ch = ConditionalPmf.identity([0, 1, 2])
    curves = dmc_rate_curves(ConditionalPmf.identity([0, 1]), ch)
    # best p_V is uniform over {1, 2}: r2 = H(P_U) + P_U
    for p in (0.2, 0.5, 0.8):
        assert curves.r2(p) == pytest.approx(binary_entropy(p) + p, abs=1e-8)
