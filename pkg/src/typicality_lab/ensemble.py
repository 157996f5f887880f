"""
The branching tree of ``n`` repeated coin measurements.

Every quantity of interest depends on a history only through its spade count,
so an ensemble is stored per count class.  Materialized ensembles (``n`` up to
the enumeration cap) additionally carry the spade count of every history id,
obtained by brute-force enumeration.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

import numpy as np
from scipy.special import gammaln

from .branch import Coin, History, HistoryStats, history_stats
from .errors import CapError, DegenerateCoinError, DomainError, EmptyEnsembleError
from .extprob import ONE, ZERO, ExtProb, from_log, from_log_complement
from .tails import EXACT_SUM_LIMIT, BinomialSpec, binomial_band, deviation_band

__all__ = [
    "BranchMeasure",
    "BranchEnsemble",
    "MangledEnsemble",
    "TypicalitySummary",
    "enumerate_branches",
    "aggregate_branches",
    "history_weight",
    "typical_set",
    "sample_histories",
    "sampling_is_gaussian",
    "fit_f",
    "compose_stages",
    "mangle",
    "DEFAULT_ENUMERATION_CAP",
]

DEFAULT_ENUMERATION_CAP = 24
AGGREGATION_LIMIT = 10**7
SAMPLE_BLOCK = 4096
GAUSSIAN_SAMPLING_ABOVE = 10**6
F_NORM_TOL = 1e-10

_BYTE_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)


@dataclass(frozen=True)
class BranchMeasure:
    """Per-trial outcome law used to weigh histories.

    ``born`` uses ``|a|^2``; ``counting`` gives every branch equal weight;
    ``f_weighted`` rescales the Born weights by ``(f_spade, f_heart)`` with
    ``f_spade |a|^2 + f_heart |b|^2 = 1``.
    """

    kind: str
    coin: Optional[Coin] = None
    f_spade: Optional[float] = None
    f_heart: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("born", "counting", "f_weighted"):
            raise DomainError(f"unknown measure kind {self.kind!r}", "kind")
        if self.kind != "counting" and self.coin is None:
            raise DomainError(f"{self.kind} measure needs a coin", "coin")
        if self.kind == "f_weighted":
            if self.f_spade is None or self.f_heart is None:
                raise DomainError("f_weighted measure needs f_spade and f_heart", "f_spade")
            if self.f_spade < 0 or self.f_heart < 0:
                raise DomainError("f weights must be nonnegative", "f_spade")
            total = self.f_spade * self.coin.p_spade + self.f_heart * self.coin.p_heart
            if abs(total - 1.0) > F_NORM_TOL:
                raise DomainError(
                    f"f_spade|a|^2 + f_heart|b|^2 = {total!r}, expected 1", "f_spade"
                )

    @classmethod
    def born(cls, coin: Coin) -> "BranchMeasure":
        return cls("born", coin)

    @classmethod
    def counting(cls) -> "BranchMeasure":
        return cls("counting")

    @classmethod
    def f_weighted(cls, coin: Coin, f_spade: float, f_heart: float) -> "BranchMeasure":
        return cls("f_weighted", coin, float(f_spade), float(f_heart))

    def _weights(self) -> tuple[float, float]:
        if self.kind == "counting":
            return 0.5, 0.5
        if self.kind == "born":
            return self.coin.p_spade, self.coin.p_heart
        ws = self.f_spade * self.coin.p_spade
        wh = self.f_heart * self.coin.p_heart
        # absorb the <= 1e-10 normalization slack
        return ws / (ws + wh), wh / (ws + wh)

    @property
    def p_spade(self) -> float:
        return self._weights()[0]

    @property
    def p_heart(self) -> float:
        return self._weights()[1]

    def trial_probability(self) -> ExtProb:
        """Spade probability with its exact heart complement."""
        ps, ph = self._weights()
        if ph == 0.0:
            return ONE
        if ps == 0.0:
            return ZERO
        return ExtProb(math.log(ps), math.log(ph))

    def binomial(self, n: int) -> BinomialSpec:
        ps, ph = self._weights()
        return BinomialSpec(n, ps, ph)


def _xlogy(k: np.ndarray, log_y: float) -> np.ndarray:
    # 0 * log(0) = 0
    if log_y == -math.inf:
        return np.where(k == 0, 0.0, -math.inf)
    return k * log_y


def _popcount_chunk(start: int, stop: int, n: int) -> np.ndarray:
    ids = np.arange(start, stop, dtype=np.int64)
    counts = np.zeros(ids.shape, dtype=np.uint8)
    for shift in range(0, n, 8):
        counts += _BYTE_POPCOUNT[(ids >> shift) & 0xFF]
    return counts


@dataclass(frozen=True, eq=False)
class BranchEnsemble:
    """All ``2^n`` branches of an ``n``-trial measurement sequence.

    ``log_multiplicity[k]`` is the log number of histories with ``k`` spades.
    ``n_spade`` holds the spade count per history id when the ensemble was
    materialized by enumeration, ``None`` otherwise. History ids follow
    :meth:`History.from_id`.
    """

    n: int
    coin: Coin
    log_multiplicity: np.ndarray
    n_spade: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def materialized(self) -> bool:
        return self.n_spade is not None

    @property
    def size(self) -> int:
        return 2**self.n

    @property
    def classes(self) -> np.ndarray:
        return np.arange(self.n + 1)

    def log_branch_weights(self) -> np.ndarray:
        """``log |A_h|^2`` of one history in each spade-count class."""
        k = self.classes.astype(float)
        return _xlogy(k, math.log(self.coin.p_spade) if self.coin.p_spade else -math.inf) + _xlogy(
            self.n - k, math.log(self.coin.p_heart) if self.coin.p_heart else -math.inf
        )

    def phases(self) -> np.ndarray:
        k = self.classes.astype(float)
        pa = np.angle(self.coin.a) if self.coin.a else 0.0
        pb = np.angle(self.coin.b) if self.coin.b else 0.0
        return k * pa + (self.n - k) * pb

    def log_class_weights(self) -> np.ndarray:
        """Log Born weight of each class: ``multiplicity * |A_h|^2``."""
        return self.log_multiplicity + self.log_branch_weights()

    def class_weights(self) -> list[ExtProb]:
        return [from_log(min(float(v), 0.0)) for v in self.log_class_weights()]

    def log_total_weight(self) -> float:
        """Log of the summed Born weight; 0 up to rounding."""
        return _lse(self.log_class_weights())

    def total_weight(self) -> ExtProb:
        return from_log(min(self.log_total_weight(), 0.0))

    def _check_id(self, history_id: int) -> int:
        if not 0 <= history_id < self.size:
            raise DomainError(f"history id {history_id} out of range", "history_id")
        if self.materialized:
            return int(self.n_spade[history_id])
        return bin(history_id).count("1")

    def spade_count(self, history_id: int) -> int:
        return self._check_id(history_id)

    def amplitude(self, history_id: int) -> complex:
        """``a^{N_spade} b^{N_heart}`` in linear scale (may underflow to 0)."""
        k = self._check_id(history_id)
        return self.coin.a**k * self.coin.b ** (self.n - k)

    def born_weight(self, history_id: int) -> ExtProb:
        k = self._check_id(history_id)
        return from_log(min(float(self.log_branch_weights()[k]), 0.0))

    def entries(self) -> Iterator[tuple[int, int, ExtProb]]:
        """``(history_id, n_spade, born_weight)`` in id order."""
        if not self.materialized:
            raise CapError("entries need a materialized ensemble", "n")
        weights = [from_log(min(float(v), 0.0)) for v in self.log_branch_weights()]
        for hid, k in enumerate(self.n_spade):
            yield hid, int(k), weights[int(k)]


def enumerate_branches(
    coin: Coin, n: int, cap: int = DEFAULT_ENUMERATION_CAP, workers: int = 1
) -> BranchEnsemble:
    """Materialize all ``2^n`` histories and count spades per history.

    The id range is split into contiguous chunks (threads when
    ``workers > 1``) and merged in index order.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}", "n")
    if n > cap:
        raise CapError(
            f"n={n} exceeds the enumeration cap {cap}; use aggregate_branches or sample_histories",
            "n",
        )
    total = 2**n
    chunk = 1 << 20
    bounds = [(s, min(s + chunk, total)) for s in range(0, total, chunk)]
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _popcount_chunk(b[0], b[1], n), bounds))
    else:
        parts = [_popcount_chunk(s, e, n) for s, e in bounds]
    n_spade = np.concatenate(parts)
    n_spade.setflags(write=False)
    mult = np.bincount(n_spade, minlength=n + 1).astype(float)
    log_mult = np.log(mult)
    log_mult.setflags(write=False)
    return BranchEnsemble(n, coin, log_mult, n_spade)


def aggregate_branches(coin: Coin, n: int) -> BranchEnsemble:
    """Ensemble described only by spade-count classes (no enumeration)."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}", "n")
    if n > AGGREGATION_LIMIT:
        raise CapError(f"aggregation is limited to n <= {AGGREGATION_LIMIT}", "n")
    k = np.arange(n + 1, dtype=float)
    log_mult = gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)
    log_mult.setflags(write=False)
    return BranchEnsemble(int(n), coin, log_mult)


def _lse(v: np.ndarray) -> float:
    v = v[v > -np.inf]
    if v.size == 0:
        return -math.inf
    top = float(np.max(v))
    return top + math.log(float(np.sum(np.exp(v - top))))


def _mass(log_w: np.ndarray, mask: np.ndarray) -> ExtProb:
    """Mass of the masked classes, complement taken from the unmasked ones."""
    inside = _lse(log_w[mask])
    outside = _lse(log_w[~mask])
    if inside == -math.inf:
        return ZERO
    if outside == -math.inf:
        return ONE
    if inside <= outside:
        return from_log(min(inside, 0.0))
    return from_log_complement(min(outside, 0.0))


def history_weight(h: Union[History, HistoryStats, str], m: BranchMeasure) -> ExtProb:
    """Product-rule weight ``P_s^{N_spade} P_h^{N_heart}`` of one history."""
    stats = h if isinstance(h, HistoryStats) else history_stats(h)
    p = m.trial_probability()
    return p.pow(stats.n_spade) * p.complement().pow(stats.n_heart)


@dataclass(frozen=True)
class TypicalitySummary:
    n: int
    measure: BranchMeasure
    epsilon: float
    center: float
    typical_measure_fraction: ExtProb
    typical_count_fraction: ExtProb


def typical_set(
    n: int, m: BranchMeasure, epsilon: float, reference_center: Optional[float] = None
) -> TypicalitySummary:
    """Weight of the histories with ``|Q_spade - center| < epsilon``.

    The band is measured under ``m`` and, separately, by plain branch
    counting. ``reference_center`` defaults to the measure's own ``P_spade``.
    """
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon!r}", "epsilon")
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}", "n")
    if n > EXACT_SUM_LIMIT:
        raise DomainError(f"typical-set sums are limited to n <= {EXACT_SUM_LIMIT}", "n")
    center = m.p_spade if reference_center is None else float(reference_center)
    if not 0.0 <= center <= 1.0:
        raise DomainError(f"reference_center must lie in [0, 1], got {center!r}", "reference_center")
    if epsilon >= max(center, 1.0 - center):
        # a band this wide spans every frequency, edges included
        lo, hi = 0, int(n)
    else:
        lo, hi = deviation_band(n, center, n * epsilon, closed=False)
    return TypicalitySummary(
        n=int(n),
        measure=m,
        epsilon=epsilon,
        center=center,
        typical_measure_fraction=binomial_band(m.binomial(n), lo, hi),
        typical_count_fraction=binomial_band(BinomialSpec(n, 0.5), lo, hi),
    )


def sampling_is_gaussian(n: int) -> bool:
    """Whether :func:`sample_histories` switches to the normal approximation."""
    return n > GAUSSIAN_SAMPLING_ABOVE


def _sample_block(n: int, p: float, q: float, size: int, seed: int, block: int) -> list[int]:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))
    if not sampling_is_gaussian(n):
        return [int(k) for k in rng.binomial(n, p, size=size)]
    mean = float(n) * p
    sd = math.sqrt(float(n) * p * q)
    ks = np.floor(mean + sd * rng.standard_normal(size) + 0.5)
    return [min(max(int(k), 0), n) for k in ks]


def sample_histories(
    coin: Optional[Coin],
    n: int,
    m: Optional[BranchMeasure] = None,
    count: int = 1,
    seed: int = 0,
    workers: int = 1,
) -> list[HistoryStats]:
    """Draw ``count`` i.i.d. spade counts of ``n``-trial histories under ``m``.

    Output depends only on ``seed``: samples come in blocks of
    ``SAMPLE_BLOCK``, block ``i`` using Philox stream ``(seed, i)``, whatever
    the worker count. Above ``10^6`` trials counts are drawn from the normal
    approximation with continuity correction.
    """
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count!r}", "count")
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}", "n")
    if m is None:
        if coin is None:
            raise DomainError("need a coin or a measure", "coin")
        m = BranchMeasure.born(coin)
    ps, ph = m.p_spade, m.p_heart
    n = int(n)
    blocks = [(i, min(SAMPLE_BLOCK, count - i * SAMPLE_BLOCK)) for i in range(-(-count // SAMPLE_BLOCK))]

    def run(b):
        return _sample_block(n, ps, ph, b[1], seed, b[0])

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    return [HistoryStats(k, n - k) for part in parts for k in part]


def fit_f(coin: Coin, q_observed: float) -> tuple[float, float]:
    """f weights that turn the coin's Born law into one with ``P_spade = q``."""
    if not 0.0 <= q_observed <= 1.0:
        raise DomainError(f"q_observed must lie in [0, 1], got {q_observed!r}", "q_observed")
    pa, pb = coin.p_spade, coin.p_heart
    if pa <= 1e-15 or pb <= 1e-15:
        raise DegenerateCoinError("cannot fit f for a coin with |a|^2 in {0, 1}", "coin")
    return q_observed / pa, (1.0 - q_observed) / pb


def compose_stages(stats1: HistoryStats, stats2: HistoryStats) -> HistoryStats:
    """Pool two runs into one record."""
    return stats1 + stats2


@dataclass(frozen=True, eq=False)
class MangledEnsemble:
    """Ensemble with branches outside ``|Q - p| <= sigma_max dQ`` removed.

    Amplitudes are left as they were unless ``renormalized``; the factor
    needed to restore unit norm is always available as ``renormalization``.
    """

    base: BranchEnsemble
    reference_p: float
    sigma_max: float
    surviving_classes: np.ndarray = field(repr=False)
    retained_measure: ExtProb
    renormalization: float
    renormalized: bool = False

    def survives(self, history_id: int) -> bool:
        return bool(self.surviving_classes[self.base.spade_count(history_id)])

    def survives_mask(self) -> np.ndarray:
        if not self.base.materialized:
            raise CapError("per-history mask needs a materialized ensemble", "n")
        return self.surviving_classes[self.base.n_spade]

    def amplitude(self, history_id: int) -> complex:
        if not self.survives(history_id):
            return 0j
        amp = self.base.amplitude(history_id)
        return amp * self.renormalization if self.renormalized else amp

    def log_class_weights(self) -> np.ndarray:
        lw = np.where(self.surviving_classes, self.base.log_class_weights(), -np.inf)
        if self.renormalized:
            lw = lw - self.retained_measure.log_value
        return lw

    def total_weight(self) -> ExtProb:
        if self.renormalized:
            return ONE
        return self.retained_measure


def mangle(
    e: BranchEnsemble, reference_p: float, sigma_max: float, renormalize: bool = False
) -> MangledEnsemble:
    """Zero every branch whose frequency falls outside the boxcar window
    ``|Q - reference_p| <= sigma_max sqrt(p(1-p)/n)`` (boundary kept)."""
    if not sigma_max > 0:
        raise DomainError(f"sigma_max must be positive, got {sigma_max!r}", "sigma_max")
    if not 0.0 <= reference_p <= 1.0:
        raise DomainError(f"reference_p must lie in [0, 1], got {reference_p!r}", "reference_p")
    n = e.n
    if math.isinf(sigma_max):
        keep = np.ones(n + 1, dtype=bool)
    else:
        width = sigma_max * math.sqrt(float(n) * reference_p * (1.0 - reference_p))
        lo, hi = deviation_band(n, reference_p, width, closed=True)
        keep = np.zeros(n + 1, dtype=bool)
        keep[lo : hi + 1] = True
    keep.setflags(write=False)
    retained = _mass(e.log_class_weights(), keep)
    if retained.is_zero():
        raise EmptyEnsembleError("no branch survives the truncation", "sigma_max")
    renorm = math.exp(min(-0.5 * retained.log_value, 709.0))
    return MangledEnsemble(e, float(reference_p), float(sigma_max), keep, retained, renorm, renormalize)
