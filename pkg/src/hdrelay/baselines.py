"""Conventional (codeword-by-codeword) decode-and-forward relaying."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class LinkRates:
    c1: float  # best source-relay rate, bits/use
    c2: float  # best relay-destination rate, bits/use

    def __post_init__(self):
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("link rates must be non-negative")


def conventional_rate(rates: LinkRates) -> float:
    """Rate of fixed alternation with the time split balancing both hops."""
    c1, c2 = rates.c1, rates.c2
    if c1 == 0 or c2 == 0:
        return 0.0
    return c1 * c2 / (c1 + c2)


def conventional_split(rates: LinkRates) -> float:
    """Fraction of time the relay transmits, P_U = c1 / (c1 + c2)."""
    total = rates.c1 + rates.c2
    return rates.c1 / total if total > 0 else 0.0
