"""Scalar max-min engine for the half-duplex relay capacity.

The capacity is ``max over P_U of min(r1(P_U), r2(P_U))`` where ``r1`` is
the source-relay curve (non-increasing, zero at 1) and ``r2`` the
relay-destination curve (concave, zero at 0).  The optimum is either the
first crossing of the curves or the maximiser of ``r2``, whichever comes
first.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

from scipy.optimize import brentq

from .probability import ConditionalPmf, Pmf, blahut_arimoto

log = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2
P_TOL = 1e-9
RATE_TOL = 1e-8


class NoCrossing(ValueError):
    """r1 - r2 does not change sign on the search interval."""


class Regime(str, enum.Enum):
    CROSSING = "crossing"
    INTERIOR_MAX = "interior_max"


@dataclass(frozen=True)
class RateCurves:
    r1: Callable[[float], float]
    r2: Callable[[float], float]
    # known maximiser of r2, when a closed form gives it
    r2_argmax: float | None = None


@dataclass(frozen=True)
class CapacitySolution:
    p_u_star: float
    capacity: float
    regime: Regime
    r1_at_opt: float
    r2_at_opt: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    def as_dict(self) -> dict:
        return {
            "p_u_star": self.p_u_star,
            "capacity": self.capacity,
            "regime": self.regime.value,
            "r1_at_opt": self.r1_at_opt,
            "r2_at_opt": self.r2_at_opt,
        }


def bisect_root(g: Callable[[float], float], a: float, b: float, tol: float = P_TOL,
                ga: float | None = None, gb: float | None = None) -> float:
    """Bisection for a sign change of ``g`` on [a, b]."""
    ga = g(a) if ga is None else ga
    gb = g(b) if gb is None else gb
    if ga == 0:
        return a
    if gb == 0:
        return b
    if (ga > 0) == (gb > 0):
        raise NoCrossing(f"no sign change on [{a}, {b}]")
    while b - a > tol:
        m = 0.5 * (a + b)
        gm = g(m)
        if gm == 0:
            return m
        if (gm > 0) == (ga > 0):
            a, ga = m, gm
        else:
            b, gb = m, gm
    # one secant step inside the final bracket usually gains several digits
    best = (abs(ga), a) if abs(ga) <= abs(gb) else (abs(gb), b)
    if gb != ga:
        s = a - ga * (b - a) / (gb - ga)
        if a < s < b:
            gs = g(s)
            if abs(gs) < best[0]:
                best = (abs(gs), s)
    return best[1]


def solve_crossing(curves: RateCurves, tol: float = P_TOL, scan_step: float = 1e-3,
                   lo: float = 0.0, hi: float = 1.0, method: str = "bisect") -> float:
    """Smallest P_U in [lo, hi] where r1 = r2.

    Scans upward on a ``scan_step`` grid for the first sign change of
    r1 - r2, then refines inside that bracket by bisection, or by Brent's
    method (``method="brent"``) when each curve evaluation is expensive.
    """
    def g(p):
        return curves.r1(p) - curves.r2(p)

    a, ga = lo, g(lo)
    if ga <= 0:
        if abs(ga) <= RATE_TOL:
            return lo
        raise NoCrossing("r2 already exceeds r1 at the lower end")
    n = max(1, int(math.ceil((hi - lo) / scan_step)))
    for i in range(1, n + 1):
        b = min(hi, lo + i * scan_step)
        gb = g(b)
        if gb <= 0:
            if method == "brent" and gb < 0:
                return brentq(g, a, b, xtol=tol)
            return bisect_root(g, a, b, tol, ga, gb)
        a, ga = b, gb
    raise NoCrossing("r1 stays above r2 on the whole interval")


def golden_section_max(f: Callable[[float], float], a: float, b: float,
                       tol: float = P_TOL) -> tuple[float, float]:
    """Maximiser of a unimodal ``f`` on [a, b]; returns ``(x, f(x))``.

    The endpoints are compared too, so boundary maxima are found.
    """
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x, fx = (c, fc) if fc >= fd else (d, fd)
    for edge in (a, b):
        fe = f(edge)
        if fe > fx:
            x, fx = edge, fe
    return x, fx


def concavity_violations(f: Callable[[float], float], n: int = 64, slack: float = 1e-7) -> list[float]:
    """Midpoint probes where f((x+y)/2) < (f(x)+f(y))/2 - slack."""
    bad = []
    step = 1.0 / n
    vals = [f(i * step) for i in range(n + 1)]
    for i in range(1, n):
        if vals[i] < 0.5 * (vals[i - 1] + vals[i + 1]) - slack:
            bad.append(i * step)
    return bad


def solve_interior_max(r2: Callable[[float], float], tol: float = P_TOL,
                       check_concavity: bool = True) -> float:
    """Argmax of the concave relay-destination curve by golden-section search."""
    if check_concavity:
        bad = concavity_violations(r2)
        if bad:
            log.warning("r2 is not concave near P_U in %s", bad[:5])
    x, _ = golden_section_max(r2, 0.0, 1.0, tol)
    return x


def slope(f: Callable[[float], float], p: float) -> float:
    """Central difference, one-sided at the interval ends."""
    h = 1e-6 * max(1.0, abs(p))
    a, b = max(0.0, p - h), min(1.0, p + h)
    return (f(b) - f(a)) / (b - a)


def solve_capacity(curves: RateCurves, tol: float = P_TOL, scan_step: float = 1e-3,
                   check_concavity: bool = True, method: str = "bisect") -> CapacitySolution:
    diagnostics = {}
    if curves.r2_argmax is not None:
        p2 = curves.r2_argmax
    else:
        p2 = solve_interior_max(curves.r2, tol, check_concavity)
    r1_p2, r2_p2 = curves.r1(p2), curves.r2(p2)
    if r1_p2 >= r2_p2:
        # r2's own maximum is the bottleneck
        return CapacitySolution(p2, r2_p2, Regime.INTERIOR_MAX, r1_p2, r2_p2, diagnostics)
    try:
        p1 = solve_crossing(curves, tol, scan_step, 0.0, p2, method)
    except NoCrossing as exc:
        # numerical edge: fall back to the interior maximum
        diagnostics["no_crossing"] = str(exc)
        return CapacitySolution(p2, min(r1_p2, r2_p2), Regime.INTERIOR_MAX, r1_p2, r2_p2, diagnostics)
    r1v, r2v = curves.r1(p1), curves.r2(p1)
    return CapacitySolution(p1, min(r1v, r2v), Regime.CROSSING, r1v, r2v, diagnostics)


def grid_max_min(curves: RateCurves, step: float = 1e-5) -> tuple[float, float]:
    """Exhaustive max-min on a uniform grid; slow reference for tests."""
    n = int(round(1.0 / step))
    best_p, best = 0.0, -math.inf
    for i in range(n + 1):
        p = i / n
        v = min(curves.r1(p), curves.r2(p))
        if v > best:
            best_p, best = p, v
    return best_p, best


def dmc_rate_curves(channel1: ConditionalPmf, channel2: ConditionalPmf, zero=0) -> RateCurves:
    """Rate curves for arbitrary finite source-relay and relay-destination channels.

    r1 uses the capacity of ``channel1``; r2 maximises I(X2;Y2) with the
    zero symbol pinned at probability 1 - P_U (Blahut-Arimoto).
    """
    c1, _ = blahut_arimoto(channel1)
    if zero not in channel2.input_support:
        raise ValueError("relay-destination channel must accept the zero symbol")

    def r1(p):
        return c1 * (1.0 - p)

    def r2(p):
        if p <= 0:
            return 0.0
        value, _ = blahut_arimoto(channel2, fixed={zero: 1.0 - p})
        return value

    return RateCurves(r1, r2)


def best_source_input(channel1: ConditionalPmf) -> Pmf:
    return blahut_arimoto(channel1)[1]
