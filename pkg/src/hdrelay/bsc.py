"""Half-duplex relay capacity when both hops are binary symmetric channels."""
from __future__ import annotations

from dataclasses import dataclass

from .baselines import LinkRates, conventional_rate
from .probability import binary_entropy
from .solver import P_TOL, CapacitySolution, RateCurves, solve_capacity


@dataclass(frozen=True)
class BscPair:
    p_eps1: float
    p_eps2: float

    def __post_init__(self):
        for name in ("p_eps1", "p_eps2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 0.5:
                raise ValueError(f"{name}={v!r} outside [0, 0.5]; relabel the outputs instead")

    @property
    def c1(self) -> float:
        return 1.0 - binary_entropy(self.p_eps1)

    @property
    def c2(self) -> float:
        return 1.0 - binary_entropy(self.p_eps2)


def bsc_mixture_param(p_eps2: float, p_u: float) -> float:
    """Probability that the destination sees a 1: A = eps2 (1 - 2 P_U) + P_U."""
    if not (0.0 <= p_eps2 <= 1.0 and 0.0 <= p_u <= 1.0):
        raise ValueError("arguments must lie in [0, 1]")
    return p_eps2 * (1.0 - 2.0 * p_u) + p_u


def bsc_rate_curves(pair: BscPair) -> RateCurves:
    c1 = pair.c1
    h2 = binary_entropy(pair.p_eps2)

    def r1(p):
        return c1 * (1.0 - p)

    def r2(p):
        return max(0.0, binary_entropy(bsc_mixture_param(pair.p_eps2, p)) - h2)

    # A(1/2) = 1/2 maximises H(A)
    return RateCurves(r1, r2, r2_argmax=0.5)


def bsc_capacity(pair: BscPair, tol: float = P_TOL) -> CapacitySolution:
    return solve_capacity(bsc_rate_curves(pair), tol)


def bsc_conventional_rate(pair: BscPair) -> float:
    return conventional_rate(LinkRates(pair.c1, pair.c2))
