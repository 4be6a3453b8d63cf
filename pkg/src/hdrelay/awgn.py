"""Half-duplex relay rates when both hops are real AWGN channels.

The relay's active-symbol distribution is a discrete set of mass points,
symmetric around zero, with a gap around the origin.  It is searched on a
lattice ``m * delta`` (``m >= m_min``); for a fixed lattice the output
entropy is concave in the point masses, so the masses are found by a
constrained convex solve.  SNRs are linear (``P / sigma^2``) throughout.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy.optimize import minimize

from .baselines import LinkRates, conventional_rate
from .probability import LOG2E, QuadratureSpec, binary_entropy, gaussian_entropy, gaussian_mixture_entropy
from .solver import CapacitySolution, RateCurves, Regime, golden_section_max, solve_capacity, solve_crossing

NORM_ATOL = 1e-10
POWER_RTOL = 1e-6
# published point lists carry 6 significant digits
PUBLISHED_POWER_RTOL = 1e-5


@dataclass(frozen=True)
class AwgnPair:
    snr1: float
    snr2: float
    sigma2: float = 1.0

    def __post_init__(self):
        for name in ("snr1", "snr2", "sigma2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def p2(self) -> float:
        return self.snr2 * self.sigma2 ** 2

    @classmethod
    def from_db(cls, snr1_db: float, snr2_db: float, sigma2: float = 1.0) -> "AwgnPair":
        return cls(10 ** (snr1_db / 10), 10 ** (snr2_db / 10), sigma2)


@dataclass(frozen=True)
class MassPointDistribution:
    """Symmetric relay input: mass ``probs[k]`` at each of ``+locations[k]`` and ``-locations[k]``.

    The two-sided total ``2 * sum(probs)`` is 1 and the active power is
    ``2 * sum(probs * locations**2)``.
    """

    locations: np.ndarray
    probs: np.ndarray

    def __init__(self, locations, probs):
        x = np.array(locations, dtype=float)
        p = np.array(probs, dtype=float)
        if x.ndim != 1 or x.shape != p.shape or x.size == 0:
            raise ValueError("locations and probs must be equal-length, non-empty 1-d sequences")
        if np.any(x <= 0):
            raise ValueError("locations must be strictly positive (zero is the silent symbol)")
        if np.any(np.diff(x) <= 0):
            raise ValueError("locations must be strictly increasing")
        if np.any(p < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(2 * p.sum() - 1.0) > NORM_ATOL:
            raise ValueError(f"two-sided mass is {2 * p.sum()!r}, not 1")
        x.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "locations", x)
        object.__setattr__(self, "probs", p)

    @property
    def power(self) -> float:
        return float(2 * np.sum(self.probs * self.locations ** 2))

    def check_power(self, p2: float, rtol: float = POWER_RTOL) -> None:
        if abs(self.power - p2) > rtol * p2:
            raise ValueError(f"power {self.power!r} differs from {p2!r} by more than {rtol:g} relative")

    def mixture(self, p_u: float) -> tuple[np.ndarray, np.ndarray]:
        """Weights and means of the full relay input including the zero atom."""
        w = np.concatenate([[1.0 - p_u], p_u * self.probs, p_u * self.probs])
        m = np.concatenate([[0.0], self.locations, -self.locations])
        return w, m

    def scaled(self, factor: float) -> "MassPointDistribution":
        return MassPointDistribution(self.locations * factor, self.probs)

    def to_json(self) -> dict:
        return {"locations": self.locations.tolist(), "probs": self.probs.tolist()}

    @classmethod
    def from_json(cls, obj: dict, renormalize: bool = False) -> "MassPointDistribution":
        p = np.asarray(obj["probs"], dtype=float)
        if renormalize:
            p = p / (2 * p.sum())
        return cls(obj["locations"], p)


def published_distribution(snr_db: int) -> MassPointDistribution:
    """Relay distributions reported for symmetric 10 dB and 15 dB links (sigma2 = 1).

    The printed masses are rounded, so they are rescaled to unit total;
    power matches ``10**(snr_db/10)`` to about 1e-6 relative.
    """
    name = f"published_{snr_db}db.json"
    try:
        text = resources.files("hdrelay.data").joinpath(name).read_text()
    except FileNotFoundError:
        raise ValueError(f"no published distribution for {snr_db} dB") from None
    dist = MassPointDistribution.from_json(json.loads(text), renormalize=True)
    dist.check_power(10 ** (snr_db / 10), PUBLISHED_POWER_RTOL)
    return dist


def awgn_source_rate(snr1: float) -> float:
    if snr1 < 0:
        raise ValueError("snr1 must be non-negative")
    return 0.5 * math.log2(1.0 + snr1)


def awgn_relay_rate(dist: MassPointDistribution, p_u: float, sigma2: float = 1.0,
                    quad: QuadratureSpec | None = None) -> float:
    """I(X2;Y2) for the silence/transmit mixture with active symbols from ``dist``."""
    if not 0.0 <= p_u <= 1.0:
        raise ValueError("p_u must lie in [0, 1]")
    if p_u == 0:
        return 0.0
    w, m = dist.mixture(p_u)
    h = gaussian_mixture_entropy(w, m, sigma2, quad)
    return h - gaussian_entropy(sigma2)


def gaussian_input_relay_rate(snr2: float, p_u: float, quad: QuadratureSpec | None = None) -> float:
    """I(X2;Y2) when the active symbols are N(0, P2) instead of discrete (sigma2 = 1)."""
    if p_u <= 0:
        return 0.0
    if p_u >= 1:
        return 0.5 * math.log2(1.0 + snr2)
    h = gaussian_mixture_entropy([p_u, 1.0 - p_u], [0.0, 0.0], [math.sqrt(1.0 + snr2), 1.0], quad)
    return h - gaussian_entropy(1.0)


# -- mass point search -----------------------------------------------------


@dataclass(frozen=True)
class SearchSpec:
    """Budget and family for the relay mass-point search.

    Lattice spacings are searched on ``[delta_lo, delta_hi] * sqrt(P)`` (log
    grid of ``n_delta`` points, then golden-section refinement to
    ``delta_rtol``), for each gap multiplier in ``gap_multipliers``.
    ``power_convention`` is ``"active"`` (the active symbols carry power
    P2) or ``"average"`` (the whole relay input, zeros included, carries
    P2).
    """

    delta_lo: float = 0.1
    delta_hi: float = 4.0
    gap_multipliers: tuple = (1, 2, 3)
    n_delta: int = 10
    delta_rtol: float = 5e-3
    max_points: int = 48
    tail_mass: float = 1e-9
    span_sigmas: float = 6.5
    ftol: float = 1e-9
    maxiter: int = 60
    power_convention: str = "active"
    quad: QuadratureSpec = field(default_factory=lambda: QuadratureSpec(method="trapezoid", points_per_sigma=8))

    def __post_init__(self):
        if self.power_convention not in ("active", "average"):
            raise ValueError(f"unknown power convention {self.power_convention!r}")
        if not 0 < self.delta_lo < self.delta_hi:
            raise ValueError("need 0 < delta_lo < delta_hi")
        if not self.gap_multipliers or min(self.gap_multipliers) < 1:
            raise ValueError("gap multipliers must be integers >= 1")


class InfeasibleSearch(ValueError):
    pass


@dataclass
class LatticeResult:
    delta: float
    m_min: int
    rate: float
    dist: MassPointDistribution


class _LatticeProblem:
    """Output entropy of a fixed lattice as a function of the point masses.

    Works on the half line y >= 0 using the symmetry of the output density.
    """

    def __init__(self, locations: np.ndarray, p_u: float, power: float, quad: QuadratureSpec):
        self.x = locations
        self.p_u = p_u
        self.power = power
        h = 1.0 / quad.points_per_sigma
        top = locations[-1] + quad.padding
        self.y = h * np.arange(int(math.ceil(top / h)) + 1)
        self.dy = np.full(self.y.size, 2 * h)  # both half lines
        self.dy[0] = h
        self.dy[-1] = h
        norm = 1.0 / math.sqrt(2 * math.pi)
        self.phi0 = norm * np.exp(-0.5 * self.y ** 2)
        d1 = self.y[:, None] - locations[None, :]
        d2 = self.y[:, None] + locations[None, :]
        self.phi = norm * (np.exp(-0.5 * d1 ** 2) + np.exp(-0.5 * d2 ** 2))

    def density(self, q):
        f = (1.0 - self.p_u) * self.phi0 + self.p_u * (self.phi @ q)
        return np.maximum(f, 1e-300)

    def neg_entropy_and_grad(self, q):
        f = self.density(q)
        logf = np.log2(f)
        h = -np.sum(self.dy * f * logf)
        g = -self.p_u * (self.phi.T @ (self.dy * (logf + LOG2E)))
        return -h, -g

    def rate(self, q) -> float:
        return -self.neg_entropy_and_grad(q)[0] - gaussian_entropy(1.0)

    def gaussian_start(self) -> np.ndarray:
        """Gaussian-shaped masses whose power matches the target."""
        x2 = self.x ** 2

        def shaped(s):
            e = -0.5 * x2 / s ** 2
            w = np.exp(e - e.max())
            return 0.5 * w / w.sum()

        def pw(s):
            return 2 * np.sum(shaped(s) * x2)

        lo, hi = 1e-3 * math.sqrt(self.power), 1e3 * math.sqrt(self.power)
        if pw(hi) < self.power:
            return shaped(hi)
        if pw(lo) > self.power:
            return shaped(lo)
        for _ in range(80):
            mid = math.sqrt(lo * hi)
            if pw(mid) < self.power:
                lo = mid
            else:
                hi = mid
        return shaped(math.sqrt(lo * hi))

    def solve(self, spec: SearchSpec) -> np.ndarray:
        x2 = self.x ** 2
        cons = [
            {"type": "eq", "fun": lambda q: 2 * q.sum() - 1.0, "jac": lambda q: np.full(q.size, 2.0)},
            {"type": "eq", "fun": lambda q: (2 * (q * x2).sum() - self.power) / self.power,
             "jac": lambda q: 2 * x2 / self.power},
        ]
        res = minimize(self.neg_entropy_and_grad, self.gaussian_start(), jac=True, method="SLSQP",
                       bounds=[(0.0, 0.5)] * self.x.size, constraints=cons,
                       options={"ftol": spec.ftol, "maxiter": spec.maxiter})
        q = np.clip(res.x, 0.0, None)
        return q / (2 * q.sum())


def _lattice(delta: float, m_min: int, power: float, spec: SearchSpec) -> np.ndarray:
    top = spec.span_sigmas * math.sqrt(power)
    m_max = max(m_min + 1, int(math.ceil(top / delta)))
    m_max = min(m_max, m_min + spec.max_points - 1)
    return delta * np.arange(m_min, m_max + 1, dtype=float)


def _trim(locations: np.ndarray, q: np.ndarray, tail_mass: float) -> MassPointDistribution:
    keep = q > 0
    x, q = locations[keep], q[keep]
    # drop the outermost points while their two-sided mass stays negligible
    tail = 2 * np.cumsum(q[::-1])
    n_drop = int(np.searchsorted(tail, tail_mass, side="right"))
    n_drop = min(n_drop, x.size - 1)
    if n_drop:
        x, q = x[:-n_drop], q[:-n_drop]
    return MassPointDistribution(x, q / (2 * q.sum()))


def optimize_lattice(delta: float, m_min: int, p_u: float, power: float,
                     spec: SearchSpec) -> LatticeResult:
    """Best masses on the lattice ``delta * (m_min, m_min + 1, ...)``; sigma2 = 1."""
    if (m_min * delta) ** 2 >= power:
        raise InfeasibleSearch(f"lattice starting at {m_min * delta:g} cannot meet power {power:g}")
    x = _lattice(delta, m_min, power, spec)
    if (x[-1]) ** 2 <= power:
        raise InfeasibleSearch(f"lattice ending at {x[-1]:g} cannot reach power {power:g}")
    prob = _LatticeProblem(x, p_u, power, spec.quad)
    q = prob.solve(spec)
    dist = _trim(x, q, spec.tail_mass)
    rate = awgn_relay_rate(dist, p_u, 1.0, spec.quad)
    return LatticeResult(delta, m_min, rate, dist)


def _active_power(snr2: float, p_u: float, spec: SearchSpec) -> float:
    return snr2 / p_u if spec.power_convention == "average" else snr2


def optimize_mass_points(snr2: float, p_u: float, search: SearchSpec | None = None,
                         sigma2: float = 1.0, hint: LatticeResult | None = None) -> MassPointDistribution:
    """Best mass-point relay distribution found in the lattice family.

    Returned locations are in the units of ``sigma2``.
    """
    return search_mass_points(snr2, p_u, search, hint).dist.scaled(sigma2)


def search_mass_points(snr2: float, p_u: float, search: SearchSpec | None = None,
                       hint: LatticeResult | None = None) -> LatticeResult:
    """Lattice search behind :func:`optimize_mass_points` (sigma2 = 1).

    With a ``hint`` (the optimum at a nearby ``p_u``) only the hinted gap
    multiplier is searched, in a narrow spacing bracket around it.
    """
    spec = search or SearchSpec()
    if not snr2 > 0:
        raise ValueError("snr2 must be positive")
    if not 0 < p_u <= 1:
        raise ValueError("p_u must lie in (0, 1]")
    power = _active_power(snr2, p_u, spec)
    root = math.sqrt(power)
    best: LatticeResult | None = None

    def evaluate(delta, m_min):
        try:
            return optimize_lattice(delta, m_min, p_u, power, spec)
        except InfeasibleSearch:
            return None

    if hint is not None:
        plans = [(hint.m_min, hint.delta / 1.25, hint.delta * 1.25, 4)]
    else:
        plans = [(m, spec.delta_lo * root, spec.delta_hi * root, spec.n_delta) for m in spec.gap_multipliers]

    for m_min, lo, hi, n in plans:
        hi = min(hi, root / m_min * (1 - 1e-6))
        if hi <= lo:
            continue
        grid = np.geomspace(lo, hi, n)
        results = [evaluate(d, m_min) for d in grid]
        rates = [r.rate if r else -math.inf for r in results]
        i = int(np.argmax(rates))
        if results[i] is None:
            continue
        a = grid[max(i - 1, 0)]
        b = grid[min(i + 1, n - 1)]
        cache = {}

        def f(log_delta):
            r = evaluate(math.exp(log_delta), m_min)
            cache[log_delta] = r
            return r.rate if r else -math.inf

        x, _ = golden_section_max(f, math.log(a), math.log(b), tol=spec.delta_rtol)
        refined = cache.get(x) or evaluate(math.exp(x), m_min)
        for cand in (results[i], refined):
            if cand is not None and (best is None or cand.rate > best.rate):
                best = cand
    if best is None:
        raise InfeasibleSearch(f"no lattice in the search family meets power {power:g}")
    return best


# -- capacity and benchmarks -----------------------------------------------


def awgn_relay_curve(snr2: float, search: SearchSpec | None = None):
    """r2(P_U) with the mass points re-optimised at every P_U; results are cached."""
    spec = search or SearchSpec()
    cache: dict[float, LatticeResult] = {}

    def r2(p):
        if p <= 0:
            return 0.0
        if p in cache:
            return cache[p].rate
        hint = None
        if cache:
            near = min(cache, key=lambda q: abs(q - p))
            if abs(near - p) < 0.1:
                hint = cache[near]
        res = search_mass_points(snr2, p, spec, hint)
        if hint is not None:
            # a full search guards against the narrow bracket missing a better lattice
            res_full = None
            if res.rate < hint.rate - 0.05:
                res_full = search_mass_points(snr2, p, spec)
            if res_full is not None and res_full.rate > res.rate:
                res = res_full
        cache[p] = res
        return res.rate

    r2.cache = cache
    return r2


def awgn_capacity_lower(pair: AwgnPair, search: SearchSpec | None = None,
                        tol: float = 1e-7) -> CapacitySolution:
    """C_L: crossing of the source rate with the searched relay rate.

    The relay curve peaks at P_U = 1 and the source curve is linear, so
    their difference is convex with exactly one root on [0, 1].
    """
    c1 = awgn_source_rate(pair.snr1)
    r2 = awgn_relay_curve(pair.snr2, search)
    curves = RateCurves(lambda p: c1 * (1.0 - p), r2, r2_argmax=1.0)
    p = solve_crossing(curves, tol=tol, scan_step=1.0, method="brent")
    r1v, r2v = curves.r1(p), r2(p)
    res = r2.cache.get(p)
    diagnostics = {"bound": "lower"}
    if res is not None:
        diagnostics["distribution"] = res.dist.scaled(pair.sigma2)
        diagnostics["delta"] = res.delta * pair.sigma2
        diagnostics["m_min"] = res.m_min
    return CapacitySolution(p, min(r1v, r2v), Regime.CROSSING, r1v, r2v, diagnostics)


def awgn_capacity_fixed(pair: AwgnPair, dist: MassPointDistribution, tol: float = 1e-9,
                        quad: QuadratureSpec | None = None) -> CapacitySolution:
    """Crossing with a given relay distribution (locations in units of ``sigma2``)."""
    c1 = awgn_source_rate(pair.snr1)

    def r2(p):
        return awgn_relay_rate(dist, p, pair.sigma2, quad)

    curves = RateCurves(lambda p: c1 * (1.0 - p), r2)
    p = solve_crossing(curves, tol=tol, scan_step=0.05)
    r1v, r2v = curves.r1(p), r2(p)
    return CapacitySolution(p, min(r1v, r2v), Regime.CROSSING, r1v, r2v, {"bound": "lower"})


def awgn_gaussian_input_rate(pair: AwgnPair, quad: QuadratureSpec | None = None,
                             tol: float = 1e-9) -> float:
    """R_Gauss: crossing rate when the relay's active symbols are Gaussian."""
    c1 = awgn_source_rate(pair.snr1)
    curves = RateCurves(lambda p: c1 * (1.0 - p),
                        lambda p: gaussian_input_relay_rate(pair.snr2, p, quad), r2_argmax=1.0)
    p = solve_crossing(curves, tol=tol, scan_step=0.05)
    return min(curves.r1(p), curves.r2(p))


def awgn_conventional_rate(pair: AwgnPair) -> float:
    return conventional_rate(LinkRates(awgn_source_rate(pair.snr1), awgn_source_rate(pair.snr2)))


def upper_bound_curves(pair: AwgnPair) -> RateCurves:
    c1 = awgn_source_rate(pair.snr1)
    c2 = awgn_source_rate(pair.snr2)
    return RateCurves(lambda p: c1 * (1.0 - p), lambda p: c2 * p + binary_entropy(p))


def awgn_upper_bound(pair: AwgnPair) -> float:
    return solve_capacity(upper_bound_curves(pair), check_concavity=False).capacity
