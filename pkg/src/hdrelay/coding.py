"""Monte-Carlo run of the half-duplex relaying scheme over finite-alphabet links.

A transmission of N messages takes N + 1 blocks of k channel uses.  In
block b the relay sends the codeword of the message it decoded in block
b - 1; wherever that codeword is zero the relay listens, and the source
drops its own codeword into those positions.  Both hops are decoded by
joint typicality.

Codewords are indices into the channel input alphabets.  Two codebook
modes exist:

* ``"explicit"``: every codeword is materialised and every decode scans
  the whole book.  Refuses books with more than ``max_codewords`` entries.
* ``"ensemble"``: only the transmitted codeword is drawn.  Whether some
  other codeword of a random book is also typical with the received
  sequence is sampled from its exact probability, which only depends on
  the composition of the received sequence.  This reaches block lengths
  whose books would never fit in memory.

Random streams come from ``SeedSequence([seed, stream, index])``: codeword
``j`` of book ``b`` and trial ``t`` each get their own stream, so results
do not depend on evaluation order.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.stats import binom

from .probability import ConditionalPmf, Pmf, RelayInputModel, entropy, relay_mutual_information

MAX_CODEWORDS = 2 ** 20
DEFAULT_EPS_FRACTION = 0.05

# stream labels for the seed split
SOURCE_BOOK, RELAY_BOOK, TRIAL = 1, 2, 3


class RelayMode(str, enum.Enum):
    SYMBOL_SWITCHING = "symbol_switching"
    SIMULTANEOUS_DISCARD = "simultaneous_discard"


class CodebookKind(str, enum.Enum):
    SOURCE_CONDITIONAL = "source_conditional"
    RELAY_FULL = "relay_full"


class DecodingError(Exception):
    pass


class NoTypicalCodeword(DecodingError):
    pass


class AmbiguousDecode(DecodingError):
    def __init__(self, count):
        super().__init__(f"{count} codewords are jointly typical")
        self.count = count


class CodebookTooLarge(ValueError):
    pass


def _floor(x: float) -> int:
    # k * rate lands a hair under an integer surprisingly often
    return math.floor(round(x, 9))


@dataclass(frozen=True)
class CodingConfig:
    k: int
    rate: float
    p_u: float
    n_blocks: int = 1
    typicality_eps: float | None = None
    relay_mode: RelayMode = RelayMode.SYMBOL_SWITCHING
    seed: int = 0
    codebook_mode: str = "explicit"
    max_codewords: int = MAX_CODEWORDS

    def __post_init__(self):
        object.__setattr__(self, "relay_mode", RelayMode(self.relay_mode))
        if self.k < 1 or self.n_blocks < 1:
            raise ValueError("k and n_blocks must be positive")
        if self.rate < 0:
            raise ValueError("rate must be non-negative")
        if not 0.0 <= self.p_u <= 1.0:
            raise ValueError("p_u must lie in [0, 1]")
        if self.typicality_eps is not None and not self.typicality_eps > 0:
            raise ValueError("typicality_eps must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.codebook_mode not in ("explicit", "ensemble"):
            raise ValueError(f"unknown codebook mode {self.codebook_mode!r}")
        if self.codebook_mode == "explicit" and self.n_codewords > self.max_codewords:
            raise CodebookTooLarge(
                f"{self.n_codewords} codewords exceed the budget of {self.max_codewords}; "
                "use codebook_mode='ensemble'")

    @property
    def n_bits(self) -> int:
        return _floor(self.k * self.rate)

    @property
    def n_codewords(self) -> int:
        return 2 ** self.n_bits

    @property
    def source_length(self) -> int:
        return _floor(self.k * (1.0 - self.p_u))

    def eps(self, source_dist: Pmf) -> float:
        if self.typicality_eps is not None:
            return self.typicality_eps
        return DEFAULT_EPS_FRACTION * entropy(source_dist)

    def effective_rate(self) -> Fraction:
        """Bits per channel use over the N + 1 blocks: N k R / (k (N + 1))."""
        n = self.n_blocks
        return Fraction(n * self.n_bits, self.k * (n + 1))


def _stream(seed: int, label: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, label, index]))


@dataclass(frozen=True)
class Codebook:
    kind: CodebookKind
    probs: np.ndarray = field(repr=False)
    n_codewords: int
    length: int
    seed: int
    label: int
    words: np.ndarray | None = field(default=None, repr=False)

    def codeword(self, j: int) -> np.ndarray:
        if not 0 <= j < self.n_codewords:
            raise IndexError(f"message {j} out of range")
        if self.words is not None:
            return self.words[j]
        return self._draw(j)

    def _draw(self, j: int) -> np.ndarray:
        u = _stream(self.seed, self.label, j).random(self.length)
        return np.searchsorted(np.cumsum(self.probs)[:-1], u, side="right").astype(np.int8)

    def materialise(self) -> "Codebook":
        words = np.stack([self._draw(j) for j in range(self.n_codewords)]) if self.length else \
            np.zeros((self.n_codewords, 0), dtype=np.int8)
        words.setflags(write=False)
        return Codebook(self.kind, self.probs, self.n_codewords, self.length, self.seed, self.label, words)


def generate_codebooks(cfg: CodingConfig, source_dist: Pmf, relay_dist: RelayInputModel,
                       relay_support=None) -> tuple[Codebook, Codebook]:
    """Source book (length floor(k(1-P_U)), i.i.d. ``source_dist``) and relay book (length k).

    Relay symbols are zero with probability 1 - P_U and otherwise drawn from
    ``p_V``, i.e. a coin per symbol followed by a draw from ``p_V``.
    """
    px2 = relay_dist.input_pmf(relay_support)
    src = Codebook(CodebookKind.SOURCE_CONDITIONAL, np.asarray(source_dist.probs), cfg.n_codewords,
                   cfg.source_length, cfg.seed, SOURCE_BOOK)
    rel = Codebook(CodebookKind.RELAY_FULL, np.asarray(px2.probs), cfg.n_codewords, cfg.k, cfg.seed, RELAY_BOOK)
    if cfg.codebook_mode == "explicit":
        src, rel = src.materialise(), rel.materialise()
    return src, rel


# -- joint typicality ----------------------------------------------------------


def _neglog2(p):
    with np.errstate(divide="ignore"):
        return np.where(p > 0, -np.log2(np.where(p > 0, p, 1.0)), np.inf)


class JointModel:
    """Input law plus channel: the reference statistics of the typicality test."""

    def __init__(self, px, channel: ConditionalPmf):
        self.px = np.asarray(px, dtype=float)
        self.w = np.asarray(channel.matrix)
        self.pxy = self.px[:, None] * self.w
        self.py = self.pxy.sum(axis=0)
        self.lx, self.ly, self.lxy = _neglog2(self.px), _neglog2(self.py), _neglog2(self.pxy)
        self.hx, self.hy, self.hxy = entropy(self.px), entropy(self.py), entropy(self.pxy.ravel())

    def typical(self, counts: np.ndarray, eps: float) -> np.ndarray:
        """Three-way typicality test for joint type counts of shape (..., |X|, |Y|)."""
        n = counts.sum(axis=(-2, -1))
        if np.all(n == 0):
            # nothing observed: every codeword is consistent
            return np.ones(counts.shape[:-2], dtype=bool)

        def stat(c, logs):
            # 0 * inf would poison the sum; unseen pairs contribute nothing
            with np.errstate(invalid="ignore"):
                return np.where(c > 0, c * logs, 0.0).sum(axis=tuple(range(-logs.ndim, 0))) / n

        sx = stat(counts.sum(axis=-1), self.lx)
        sy = stat(counts.sum(axis=-2), self.ly)
        sxy = stat(counts, self.lxy)
        return (np.abs(sx - self.hx) < eps) & (np.abs(sy - self.hy) < eps) & (np.abs(sxy - self.hxy) < eps)

    def y_typical(self, y: np.ndarray, eps: float) -> bool:
        if y.size == 0:
            return True
        c = np.bincount(y, minlength=self.py.size)
        return bool(abs(np.where(c > 0, c * self.ly, 0.0).sum() / y.size - self.hy) < eps)

    def typical_fraction(self, y_counts: tuple, eps: float) -> float:
        """P(an independent i.i.d. codeword is jointly typical with y), given y's composition.

        Exact for binary input alphabets: the number of ones among the
        positions carrying each output symbol is binomial.
        """
        return _typical_fraction(self, tuple(int(c) for c in y_counts), eps)


@lru_cache(maxsize=4096)
def _typical_fraction(model: JointModel, y_counts: tuple, eps: float) -> float:
    if model.px.size != 2:
        raise NotImplementedError("ensemble decoding needs a binary input alphabet")
    if sum(y_counts) == 0:
        return 1.0
    p1 = model.px[1]
    grids = [np.arange(c + 1) for c in y_counts]
    mesh = np.meshgrid(*grids, indexing="ij")
    counts = np.zeros(mesh[0].shape + (2, len(y_counts)))
    weight = np.ones(mesh[0].shape)
    for b, (ones, c) in enumerate(zip(mesh, y_counts)):
        counts[..., 1, b] = ones
        counts[..., 0, b] = c - ones
        weight = weight * binom.pmf(ones, c, p1)
    return float(np.sum(weight[model.typical(counts, eps)]))


def joint_counts(words: np.ndarray, y: np.ndarray, nx: int, ny: int) -> np.ndarray:
    words = np.atleast_2d(words)
    out = np.empty((words.shape[0], nx, ny), dtype=np.int64)
    for b in range(ny):
        sel = words[:, y == b]
        for a in range(nx):
            out[:, a, b] = (sel == a).sum(axis=1)
    return out


def typical_decode(model: JointModel, y: np.ndarray, codebook: Codebook, eps: float,
                   sent: int | None = None, rng: np.random.Generator | None = None) -> int:
    """Unique codeword (prefix of length ``len(y)``) jointly typical with ``y``.

    Ensemble books need the transmitted index and a generator for the
    competitor draw.
    """
    n = y.size
    if n > codebook.length:
        raise ValueError("received sequence is longer than the codewords")
    nx, ny = model.px.size, model.py.size
    if codebook.words is not None:
        hits = np.flatnonzero(model.typical(joint_counts(codebook.words[:, :n], y, nx, ny), eps))
        if hits.size == 0:
            raise NoTypicalCodeword()
        if hits.size > 1:
            raise AmbiguousDecode(int(hits.size))
        return int(hits[0])
    if sent is None or rng is None:
        raise ValueError("ensemble decoding needs the sent index and a generator")
    if not model.y_typical(y, eps):
        raise NoTypicalCodeword()
    own = bool(model.typical(joint_counts(codebook.codeword(sent)[:n], y, nx, ny), eps)[0])
    m = codebook.n_codewords
    q = model.typical_fraction(np.bincount(y, minlength=ny), eps) if m > 1 else 0.0
    others = int(rng.binomial(m - 1, q)) if m > 1 else 0
    if others == 0:
        if own:
            return sent
        raise NoTypicalCodeword()
    if others == 1 and not own:
        j = int(rng.integers(m - 1))
        return j if j < sent else j + 1
    raise AmbiguousDecode(others + own)


def typical_decode_relay(cfg: CodingConfig, y_1r: np.ndarray, codebook: Codebook, index_set_size: int,
                         model: JointModel, eps: float, sent=None, rng=None) -> int:
    """Relay decoder; a short ``y_1r`` is matched against the truncated codebook."""
    if y_1r.size != index_set_size:
        raise ValueError("y_1r length must equal the index set size")
    return typical_decode(model, y_1r, codebook, eps, sent, rng)


def typical_decode_destination(cfg: CodingConfig, y2: np.ndarray, codebook: Codebook,
                               model: JointModel, eps: float, sent=None, rng=None) -> int:
    if y2.size != cfg.k:
        raise ValueError("y2 must have length k")
    return typical_decode(model, y2, codebook, eps, sent, rng)


# -- one block ---------------------------------------------------------------


def encode_block(cfg: CodingConfig, w_prev: int | None, w_cur: int | None, codebooks,
                 zero_index: int = 0):
    """Channel inputs for one block as seen by the source.

    Returns ``(x1, active1, x2)``.  ``x2`` is the relay codeword of
    ``w_prev`` (all zeros when ``w_prev`` is None, i.e. the first block);
    the source codeword of ``w_cur`` fills the zero positions of ``x2`` in
    order (nothing when ``w_cur`` is None, i.e. the last block).  Positions
    where ``active1`` is False carry no source transmission.
    """
    src, rel = codebooks
    if w_prev is None:
        x2 = np.full(cfg.k, zero_index, dtype=np.int8)
    else:
        x2 = rel.codeword(w_prev)
    x1 = np.zeros(cfg.k, dtype=np.int8)
    active1 = np.zeros(cfg.k, dtype=bool)
    if w_cur is not None:
        word = src.codeword(w_cur)
        slots = np.flatnonzero(x2 == zero_index)[:word.size]
        x1[slots] = word[:slots.size]
        active1[slots] = True
    return x1, active1, x2


def listen_positions(cfg: CodingConfig, x2: np.ndarray, zero_index: int = 0) -> np.ndarray:
    """Positions whose relay output reaches the decoder: zeros of x2, first floor(k(1-P_U))."""
    return np.flatnonzero(x2 == zero_index)[:cfg.source_length]


def relay_receive(cfg: CodingConfig, y1_raw: np.ndarray, x2: np.ndarray, zero_index: int = 0) -> np.ndarray:
    """Selector output y_{1|r}.

    In symbol-switching mode the relay front end is off whenever it
    transmits, so those outputs are zero; in simultaneous-discard mode they
    are received and thrown away.  Either way only zero positions of x2
    survive.
    """
    if y1_raw.shape != x2.shape or x2.size != cfg.k:
        raise ValueError("y1_raw and x2 must both have length k")
    if cfg.relay_mode is RelayMode.SYMBOL_SWITCHING:
        y1_raw = np.where(x2 == zero_index, y1_raw, 0)
    return y1_raw[listen_positions(cfg, x2, zero_index)]


def _through(channel_cum: np.ndarray, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    return (u[:, None] >= channel_cum[x]).sum(axis=1).astype(np.int8)


# -- experiment ---------------------------------------------------------------


@dataclass
class TrialReport:
    relay_decoded_ok: list
    dest_decoded_ok: list
    hd_violations: int
    zero_fraction: list
    shortfall_case_count: int
    schedule_mismatch: int
    e2e_ok: bool
    # selector outputs handed to the relay decoder, one per block
    relay_inputs: list = field(default_factory=list, repr=False)


@dataclass
class ExperimentResult:
    k: int
    rate: float
    p_u: float
    n_trials: int
    relay_err: float
    dest_err: float
    e2e_err: float
    shortfall_freq: float
    zero_fraction_mean: float
    hd_violations: int
    schedule_mismatch: int
    effective_rate: Fraction
    relay_hop_rate: float
    reports: list = field(default_factory=list, repr=False)

    CSV_FIELDS = ("k", "R", "P_U", "n_trials", "relay_err", "dest_err", "e2e_err",
                  "shortfall_freq", "zero_fraction_mean")

    def csv_row(self) -> dict:
        return {"k": self.k, "R": self.rate, "P_U": self.p_u, "n_trials": self.n_trials,
                "relay_err": self.relay_err, "dest_err": self.dest_err, "e2e_err": self.e2e_err,
                "shortfall_freq": self.shortfall_freq, "zero_fraction_mean": self.zero_fraction_mean}


def run_trial(cfg: CodingConfig, trial: int, codebooks, model1: JointModel, model2: JointModel,
              cum1: np.ndarray, cum2: np.ndarray, eps: float, zero_index: int = 0) -> TrialReport:
    rng = _stream(cfg.seed, TRIAL, trial)
    src, rel = codebooks
    m, n, k = cfg.n_codewords, cfg.n_blocks, cfg.k
    w = rng.integers(m, size=n)
    relay_hat = [None] * n   # what the relay forwards for each message
    dest_hat = [None] * n
    relay_ok, dest_ok, zero_frac, inputs = [], [], [], []
    hd = shortfall = mismatch = 0

    for b in range(n + 1):
        w_cur = int(w[b]) if b < n else None
        src_prev = int(w[b - 1]) if b > 0 else None
        relay_prev = relay_hat[b - 1] if b > 0 else None
        # the source schedules around the codeword it believes the relay sends
        x1, active1, x2_src = encode_block(cfg, src_prev, w_cur, codebooks, zero_index)
        _, _, x2 = encode_block(cfg, relay_prev, None, codebooks, zero_index)
        hd += int(np.count_nonzero(active1 & (x2_src != zero_index)))
        mismatch += int(np.count_nonzero(active1 & (x2 != zero_index)))

        # noise for all k positions in both relay modes keeps them comparable
        u1, u2 = rng.random(k), rng.random(k)
        if w_cur is not None:
            y1_raw = _through(cum1, x1, u1)
            y_1r = relay_receive(cfg, y1_raw, x2, zero_index)
            heard = listen_positions(cfg, x2, zero_index)
            inputs.append(y_1r.tobytes())
            hd += int(np.count_nonzero(x2[heard] != zero_index))
            if b > 0 and heard.size < cfg.source_length:
                shortfall += 1
            try:
                got = typical_decode_relay(cfg, y_1r, src, y_1r.size, model1, eps, sent=w_cur, rng=rng)
            except DecodingError:
                got = None
            ok = got == w_cur
            relay_ok.append(ok)
            relay_hat[b] = got if ok or got is not None else (w_cur + 1) % m

        if relay_prev is not None:
            zero_frac.append(float(np.mean(x2 == zero_index)))
            y2 = _through(cum2, x2, u2)
            try:
                got = typical_decode_destination(cfg, y2, rel, model2, eps, sent=relay_prev, rng=rng)
            except DecodingError:
                got = None
            dest_ok.append(got == relay_prev)
            dest_hat[b - 1] = got

    e2e = all(dest_hat[i] == int(w[i]) for i in range(n))
    return TrialReport(relay_ok, dest_ok, hd, zero_frac, shortfall, mismatch, e2e, inputs)


def run_experiment(cfg: CodingConfig, channel1: ConditionalPmf, channel2: ConditionalPmf, n_trials: int,
                   source_dist: Pmf | None = None, relay_dist: RelayInputModel | None = None,
                   keep_reports: bool = False) -> ExperimentResult:
    """Error rates of ``n_trials`` independent transmissions of N messages.

    ``source_dist`` defaults to uniform over the source-relay input
    alphabet and ``relay_dist`` to a single active symbol (the last
    relay-destination input) used with probability P_U.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be positive")
    if source_dist is None:
        source_dist = Pmf.uniform(channel1.input_support)
    source_dist = Pmf(channel1.input_support, source_dist.aligned(channel1.input_support))
    zero = channel2.input_support[0] if relay_dist is None else relay_dist.zero
    if relay_dist is None:
        relay_dist = RelayInputModel(cfg.p_u, Pmf.point(channel2.input_support[-1:], channel2.input_support[-1]),
                                     zero)
    if abs(relay_dist.p_u - cfg.p_u) > 1e-12:
        raise ValueError("relay_dist.p_u disagrees with the config")
    zero_index = channel2.input_support.index(zero)

    codebooks = generate_codebooks(cfg, source_dist, relay_dist, channel2.input_support)
    px2 = relay_dist.input_pmf(channel2.input_support)
    model1 = JointModel(source_dist.probs, channel1)
    model2 = JointModel(px2.probs, channel2)
    cum1 = np.cumsum(channel1.matrix, axis=1)[:, :-1]
    cum2 = np.cumsum(channel2.matrix, axis=1)[:, :-1]
    eps = cfg.eps(source_dist)

    reports = [run_trial(cfg, t, codebooks, model1, model2, cum1, cum2, eps, zero_index) for t in range(n_trials)]
    relay = [ok for r in reports for ok in r.relay_decoded_ok]
    dest = [ok for r in reports for ok in r.dest_decoded_ok]
    zf = [z for r in reports for z in r.zero_fraction]
    shortfall_blocks = n_trials * (cfg.n_blocks - 1)
    return ExperimentResult(
        k=cfg.k, rate=cfg.rate, p_u=cfg.p_u, n_trials=n_trials,
        relay_err=1.0 - float(np.mean(relay)),
        dest_err=1.0 - float(np.mean(dest)),
        e2e_err=1.0 - float(np.mean([r.e2e_ok for r in reports])),
        shortfall_freq=sum(r.shortfall_case_count for r in reports) / shortfall_blocks if shortfall_blocks else 0.0,
        zero_fraction_mean=float(np.mean(zf)),
        hd_violations=sum(r.hd_violations for r in reports),
        schedule_mismatch=sum(r.schedule_mismatch for r in reports),
        effective_rate=cfg.effective_rate(),
        relay_hop_rate=relay_mutual_information(relay_dist, channel2),
        reports=reports if keep_reports else [],
    )
