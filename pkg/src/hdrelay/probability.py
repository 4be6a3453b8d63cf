"""Finite-alphabet probability primitives and entropy expressions.

All information quantities are in bits.  Distributions are validated when
they are built and never silently renormalised.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

PROB_ATOL = 1e-12
LOG2E = 1.0 / math.log(2.0)


class SupportMismatch(ValueError):
    """Raised when a distribution and a channel disagree on the alphabet."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Pmf:
    support: tuple
    probs: np.ndarray

    def __init__(self, support: Sequence[Hashable], probs: Sequence[float]):
        support = tuple(support)
        probs = _frozen(probs)
        if probs.ndim != 1 or len(support) != probs.size:
            raise ValueError("support and probs must have the same length")
        if len(set(support)) != len(support):
            raise ValueError("support labels must be distinct")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValueError("probabilities must be finite and non-negative")
        if abs(probs.sum() - 1.0) > PROB_ATOL:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, support: Sequence[Hashable]) -> "Pmf":
        n = len(support)
        return cls(support, np.full(n, 1.0 / n))

    @classmethod
    def point(cls, support: Sequence[Hashable], at: Hashable) -> "Pmf":
        support = tuple(support)
        return cls(support, [1.0 if s == at else 0.0 for s in support])

    def __len__(self) -> int:
        return len(self.support)

    def prob(self, symbol: Hashable) -> float:
        try:
            return float(self.probs[self.support.index(symbol)])
        except ValueError:
            return 0.0

    def aligned(self, support: Sequence[Hashable]) -> np.ndarray:
        """Probabilities re-ordered onto ``support``; labels outside it must carry no mass."""
        support = tuple(support)
        index = {s: i for i, s in enumerate(support)}
        out = np.zeros(len(support))
        for s, p in zip(self.support, self.probs):
            if s in index:
                out[index[s]] = p
            elif p > 0:
                raise SupportMismatch(f"symbol {s!r} has mass but is not in {support}")
        return out


@dataclass(frozen=True)
class ConditionalPmf:
    """Channel law p(y|x): one row per input symbol, shared output alphabet."""

    input_support: tuple
    output_support: tuple
    matrix: np.ndarray = field(repr=False)

    def __init__(self, input_support, output_support, matrix):
        input_support = tuple(input_support)
        output_support = tuple(output_support)
        matrix = _frozen(matrix)
        if matrix.shape != (len(input_support), len(output_support)):
            raise ValueError(
                f"matrix shape {matrix.shape} does not match "
                f"{len(input_support)} inputs x {len(output_support)} outputs"
            )
        # validates every row
        for row in matrix:
            Pmf(output_support, row)
        if len(set(input_support)) != len(input_support):
            raise ValueError("input labels must be distinct")
        object.__setattr__(self, "input_support", input_support)
        object.__setattr__(self, "output_support", output_support)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def bsc(cls, crossover: float) -> "ConditionalPmf":
        if not 0.0 <= crossover <= 1.0:
            raise ValueError("crossover probability must lie in [0, 1]")
        p = crossover
        return cls((0, 1), (0, 1), [[1 - p, p], [p, 1 - p]])

    @classmethod
    def identity(cls, support) -> "ConditionalPmf":
        support = tuple(support)
        return cls(support, support, np.eye(len(support)))

    def row(self, x) -> Pmf:
        return Pmf(self.output_support, self.matrix[self.input_support.index(x)])

    def push_forward(self, p: Pmf) -> Pmf:
        """Output distribution induced by input ``p``."""
        px = p.aligned(self.input_support)
        py = px @ self.matrix
        # rounding can leave the sum 1 ulp away from what Pmf accepts
        return Pmf(self.output_support, py / py.sum())


@dataclass(frozen=True)
class RelayInputModel:
    """Relay input p(x2) = P_U p_V(x2) + (1 - P_U) delta(x2).

    ``p_v`` lives on the non-zero alphabet; ``zero`` is the label of the
    silent symbol.
    """

    p_u: float
    p_v: Pmf
    zero: Hashable = 0

    def __post_init__(self):
        if not 0.0 <= self.p_u <= 1.0:
            raise ValueError("p_u must lie in [0, 1]")
        if self.zero in self.p_v.support:
            raise ValueError("p_v must be defined on the non-zero symbols only")

    def input_pmf(self, support: Sequence[Hashable] | None = None) -> Pmf:
        if support is None:
            support = (self.zero,) + self.p_v.support
        support = tuple(support)
        if self.zero not in support:
            raise SupportMismatch("relay alphabet must contain the zero symbol")
        probs = self.p_u * self.p_v.aligned(support)
        probs[support.index(self.zero)] += 1.0 - self.p_u
        return Pmf(support, probs)


def _plogp(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log2(p[pos])
    return out


def entropy(p: Pmf | Sequence[float]) -> float:
    probs = p.probs if isinstance(p, Pmf) else np.asarray(p, dtype=float)
    return float(max(0.0, -_plogp(probs).sum()))


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"binary entropy undefined for p={p!r}")
    return entropy([p, 1.0 - p])


def _check_input(p: Pmf, channel: ConditionalPmf) -> np.ndarray:
    if set(p.support) - set(channel.input_support):
        raise SupportMismatch(
            f"input support {p.support} not contained in channel inputs {channel.input_support}"
        )
    return p.aligned(channel.input_support)


def mutual_information(inp: Pmf, channel: ConditionalPmf) -> float:
    """I(X;Y) = H(Y) - H(Y|X) for input ``inp`` through ``channel``."""
    px = _check_input(inp, channel)
    hy = entropy(px @ channel.matrix)
    hyx = float(-(px * _plogp(channel.matrix).sum(axis=1)).sum())
    return max(0.0, hy - hyx)


def mixture_output_entropy(model: RelayInputModel, channel: ConditionalPmf) -> float:
    """H(Y2) when the relay input follows the silence/transmit mixture."""
    if model.zero not in channel.input_support:
        raise SupportMismatch("channel must accept the zero symbol")
    pv = _check_input(model.p_v, channel)
    active = pv @ channel.matrix
    silent = channel.matrix[channel.input_support.index(model.zero)]
    return entropy(model.p_u * active + (1.0 - model.p_u) * silent)


def conditional_output_entropy(model: RelayInputModel, channel: ConditionalPmf) -> float:
    """H(Y2|X2), split into the transmitting and silent contributions."""
    if model.zero not in channel.input_support:
        raise SupportMismatch("channel must accept the zero symbol")
    pv = _check_input(model.p_v, channel)
    row_h = -_plogp(channel.matrix).sum(axis=1)
    h_active = float(pv @ row_h)
    h_silent = float(row_h[channel.input_support.index(model.zero)])
    return model.p_u * h_active + (1.0 - model.p_u) * h_silent


def relay_mutual_information(model: RelayInputModel, channel: ConditionalPmf) -> float:
    return max(0.0, mixture_output_entropy(model, channel) - conditional_output_entropy(model, channel))


# -- capacity of finite channels ------------------------------------------


def blahut_arimoto(channel: ConditionalPmf, tol: float = 1e-12, max_iter: int = 100_000,
                   fixed: dict | None = None) -> tuple[float, Pmf]:
    """Maximise I(X;Y) over the input distribution.

    ``fixed`` pins the probability of some input symbols (e.g. ``{0: 1 - P_U}``
    for the relay's silent symbol); the remaining mass is optimised.
    Returns ``(capacity_bits, maximising_pmf)``.
    """
    W = channel.matrix
    n = W.shape[0]
    fixed = dict(fixed or {})
    pinned = np.zeros(n, dtype=bool)
    pinned_mass = np.zeros(n)
    for sym, mass in fixed.items():
        i = channel.input_support.index(sym)
        pinned[i] = True
        pinned_mass[i] = mass
    free_total = 1.0 - pinned_mass.sum()
    if free_total < -PROB_ATOL or (free_total > PROB_ATOL and pinned.all()):
        raise ValueError("pinned probabilities are inconsistent")
    free_total = max(free_total, 0.0)

    p = np.where(pinned, pinned_mass, free_total / max(1, (~pinned).sum()))
    logW = np.where(W > 0, np.log(np.where(W > 0, W, 1.0)), 0.0)
    lower = 0.0
    for _ in range(max_iter):
        q = p @ W
        logq = np.where(q > 0, np.log(np.where(q > 0, q, 1.0)), 0.0)
        # D(W(.|x) || q) per input, nats
        d = (W * (logW - logq)).sum(axis=1)
        lower = float(p @ d)
        free = ~pinned
        if free_total <= 0 or not free.any():
            break
        # optimality gap over the symbols we are allowed to move
        gap = float(d[free].max()) - float(p[free] @ d[free]) / free_total
        if gap < tol:
            break
        w = p[free] * np.exp(d[free] - d[free].max())
        p = p.copy()
        p[free] = free_total * w / w.sum()
    pmf = Pmf(channel.input_support, p / p.sum())
    return lower * LOG2E, pmf


# -- Gaussian mixtures -----------------------------------------------------


@dataclass(frozen=True)
class QuadratureSpec:
    """Integration settings for Gaussian-mixture entropies.

    ``padding`` widens the range past the outermost means (in units of
    sigma).  ``method`` is ``"adaptive"`` (Gauss-Kronrod with interval
    bisection until ``abs_tol``) or ``"trapezoid"`` (fixed grid with
    spacing ``sigma / points_per_sigma``; spectrally accurate for these
    smooth integrands and much cheaper inside optimisers).
    """

    padding: float = 8.0
    abs_tol: float = 1e-8
    method: str = "adaptive"
    points_per_sigma: int = 12
    max_intervals: int = 20_000

    def __post_init__(self):
        if self.method not in ("adaptive", "trapezoid"):
            raise ValueError(f"unknown quadrature method {self.method!r}")
        if self.padding <= 0 or self.abs_tol <= 0 or self.points_per_sigma < 1:
            raise ValueError("quadrature settings must be positive")


class QuadratureError(RuntimeError):
    def __init__(self, message, achieved):
        super().__init__(f"{message} (achieved error estimate {achieved:.3g})")
        self.achieved = achieved


# Gauss-Kronrod 7/15 nodes and weights on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_GK_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_G_WEIGHTS = np.zeros(15)
_G_WEIGHTS[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


def gauss_kronrod(f, a: float, b: float, abs_tol: float, max_intervals: int = 20_000,
                  breakpoints: Sequence[float] = ()) -> tuple[float, float]:
    """Adaptive G7/K15 quadrature of a vectorised ``f`` over [a, b].

    Intervals are bisected until each carries an error estimate below its
    share of ``abs_tol``.  Returns ``(value, error_estimate)``.
    """
    edges = np.unique(np.clip(np.concatenate([[a, b], np.asarray(breakpoints, float)]), a, b))
    lo, hi = edges[:-1], edges[1:]
    total, err_total = 0.0, 0.0
    width = b - a
    n_done = 0
    while lo.size:
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        x = mid[:, None] + half[:, None] * _GK_NODES[None, :]
        fx = f(x.ravel()).reshape(x.shape)
        kron = half * (fx @ _GK_WEIGHTS)
        gauss = half * (fx @ _G_WEIGHTS)
        err = np.abs(kron - gauss)
        ok = err <= abs_tol * (2 * half) / width
        n_done += lo.size
        total += kron[ok].sum()
        err_total += err[ok].sum()
        if n_done > max_intervals and not ok.all():
            err_total += err[~ok].sum()
            total += kron[~ok].sum()
            raise QuadratureError("interval budget exhausted", err_total)
        lo, hi, mid = lo[~ok], hi[~ok], mid[~ok]
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
    return float(total), float(err_total)


def _mixture_log_density(y: np.ndarray, weights: np.ndarray, means: np.ndarray, sigmas: np.ndarray):
    z = (y[:, None] - means[None, :]) / sigmas[None, :]
    a = (np.log(weights) - np.log(sigmas * math.sqrt(2 * math.pi)))[None, :] - 0.5 * z * z
    amax = a.max(axis=1)
    return amax + np.log(np.exp(a - amax[:, None]).sum(axis=1))


def _check_mixture(weights, means, sigma):
    weights = np.asarray(weights, dtype=float)
    means = np.asarray(means, dtype=float)
    if weights.size == 0:
        raise ValueError("empty mixture")
    if weights.shape != means.shape:
        raise ValueError("weights and means must have the same length")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-10:
        raise ValueError(f"mixture weights must be non-negative and sum to 1 (sum={weights.sum()!r})")
    sigmas = np.broadcast_to(np.asarray(sigma, dtype=float), weights.shape)
    if not np.all(sigmas > 0):
        raise ValueError("sigma must be positive")
    keep = weights > 0
    return weights[keep], means[keep], sigmas[keep]


def gaussian_mixture_entropy(weights, means, sigma, quad: QuadratureSpec | None = None) -> float:
    """Differential entropy (bits) of sum_i w_i N(mean_i, sigma_i^2).

    ``sigma`` is a scalar shared by all components or one value per
    component.
    """
    quad = quad or QuadratureSpec()
    w, m, s = _check_mixture(weights, means, sigma)
    a = (m - quad.padding * s).min()
    b = (m + quad.padding * s).max()
    s_min = s.min()

    def integrand(y):
        logf = _mixture_log_density(y, w, m, s)
        return -np.exp(logf) * logf * LOG2E

    if quad.method == "trapezoid":
        h = s_min / quad.points_per_sigma
        n = int(math.ceil((b - a) / h))
        y = a + h * np.arange(n + 1)
        return float(np.trapezoid(integrand(y), y))
    # breakpoints at sigma spacing keep the first pass from missing narrow lobes
    value, _ = gauss_kronrod(integrand, a, b, quad.abs_tol, quad.max_intervals,
                             breakpoints=np.arange(a, b, s_min))
    return value


def gaussian_entropy(sigma: float) -> float:
    return 0.5 * math.log2(2 * math.pi * math.e * sigma * sigma)
