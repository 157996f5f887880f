"""
Binomial and hypergeometric laws, Gaussian/Hoeffding/Chebyshev tail bounds,
law-of-large-numbers tables and confidence intervals for a frequency.

Exact binomial masses are summed in log space.  Every band sum starts at the
largest term inside the band and walks away from the mode, so the summation
can stop once terms drop below ``1e-30`` of the first one.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import BudgetError, DomainError, RangeError
from .extprob import ONE, ZERO, ExtProb, from_log, from_log_complement, _log1mexp

__all__ = [
    "BinomialSpec",
    "TailReport",
    "WllnRow",
    "ConfidenceInterval",
    "RegimeWarning",
    "binom_log_pmf",
    "binomial_band",
    "moivre_laplace_pmf",
    "gaussian_tail",
    "gaussian_tail_leading",
    "hoeffding_bound",
    "chebyshev_bound",
    "two_sided_tail",
    "wlln_table",
    "hypergeometric_pmf",
    "confidence_interval",
    "deviation_band",
    "EXACT_SUM_LIMIT",
]

EXACT_SUM_LIMIT = 10**9
MOIVRE_LAPLACE_MIN_N = 100
GAUSSIAN_CROSSOVER = 30.0
_LOG_CUTOFF = math.log(1e-30)
_TABLE_N = 4096
_LOG_2PI = math.log(2.0 * math.pi)
_HALF_LOG_PI_OVER_2 = 0.5 * math.log(math.pi / 2.0)
_SQRT2 = math.sqrt(2.0)


class RegimeWarning(UserWarning):
    """An approximation was evaluated outside the regime it is meant for."""


@dataclass(frozen=True)
class BinomialSpec:
    """``n`` Bernoulli trials with spade probability ``p``.

    ``q`` defaults to ``1 - p``; pass it explicitly when it is known more
    accurately than the subtraction would give.
    """

    n: int
    p: float
    q: Optional[float] = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}", "n")
        object.__setattr__(self, "n", int(self.n))
        p = float(self.p)
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"p must lie in [0, 1], got {self.p!r}", "p")
        q = 1.0 - p if self.q is None else float(self.q)
        if not 0.0 <= q <= 1.0 or abs(p + q - 1.0) > 1e-12:
            raise DomainError(f"q={q!r} is not the complement of p={p!r}", "q")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def mean(self) -> float:
        """Expected frequency, which is just ``p``."""
        return self.p

    @property
    def delta_q(self) -> float:
        """Standard deviation of the observed frequency, ``sqrt(p q / n)``."""
        return math.sqrt(self.p * self.q / float(self.n))

    @property
    def sigma_limit(self) -> float:
        """Largest ``sigma`` accepted by :func:`two_sided_tail`."""
        dq = self.delta_q
        if dq == 0.0:
            return 0.0
        return min(self.p, self.q) / dq


# ---------------------------------------------------------------------------
# pmf (Loader's saddle-point form: log-gamma differences with the Stirling
# remainder and deviance terms kept separately, so no large logs cancel)

_STIRLERR_TABLE = [0.0] + [
    math.lgamma(k + 1.0) - (k + 0.5) * math.log(k) + k - 0.5 * _LOG_2PI for k in range(1, 16)
]


def _stirlerr(n: float) -> float:
    if n <= 15.0 and n == int(n):
        return _STIRLERR_TABLE[int(n)]
    nn = n * n
    s0, s1, s2, s3, s4 = 1 / 12, 1 / 360, 1 / 1260, 1 / 1680, 1 / 1188
    if n > 500:
        return (s0 - s1 / nn) / n
    if n > 80:
        return (s0 - (s1 - s2 / nn) / nn) / n
    if n > 35:
        return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / n
    return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n


def _bd0(x: float, np_: float) -> float:
    """Deviance term ``x log(x/np) + np - x`` without cancellation."""
    if abs(x - np_) < 0.1 * (x + np_):
        v = (x - np_) / (x + np_)
        s = (x - np_) * v
        ej = 2.0 * x * v
        v2 = v * v
        j = 1
        while True:
            ej *= v2
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
            j += 1
    return x * math.log(x / np_) + np_ - x


def _log_pmf(n: int, p: float, q: float, k: int) -> float:
    if p == 0.0:
        return 0.0 if k == 0 else -math.inf
    if q == 0.0:
        return 0.0 if k == n else -math.inf
    if k == 0:
        return n * math.log(q)
    if k == n:
        return n * math.log(p)
    fn, fk = float(n), float(k)
    lc = _stirlerr(fn) - _stirlerr(fk) - _stirlerr(fn - fk) - _bd0(fk, fn * p) - _bd0(fn - fk, fn * q)
    lf = _LOG_2PI + math.log(fk) + math.log1p(-fk / fn)
    return lc - 0.5 * lf


def binom_log_pmf(spec: BinomialSpec, k: int) -> ExtProb:
    """Exact binomial probability of ``k`` spades in ``spec.n`` trials."""
    if int(k) != k or not 0 <= k <= spec.n:
        raise DomainError(f"k must be an integer in [0, {spec.n}], got {k!r}", "k")
    return from_log(min(_log_pmf(spec.n, spec.p, spec.q, int(k)), 0.0))


def _walk(n: int, p: float, q: float, start: int, stop: int, cutoff: float = _LOG_CUTOFF) -> np.ndarray:
    """Log pmf from ``start`` toward ``stop`` (inclusive), assuming the terms
    decrease in that direction; stops early below the relative cutoff."""
    first = _log_pmf(n, p, q, start)
    chunks = [np.array([first])]
    if first == -math.inf:
        return chunks[0]
    step = 1 if stop >= start else -1
    remaining = abs(stop - start)
    lr = math.log(p) - math.log(q) if step > 0 else math.log(q) - math.log(p)
    k = start
    last = first
    size = 256
    while remaining > 0 and last > first + cutoff:
        m = min(size, remaining)
        offs = np.arange(m, dtype=float)
        if step > 0:
            ks = k + offs
            ratio = (n - ks) / (ks + 1.0)
        else:
            ks = k - offs
            ratio = ks / (n - ks + 1.0)
        terms = last + np.cumsum(np.log(ratio) + lr)
        chunks.append(terms)
        last = float(terms[-1])
        k += step * m
        remaining -= m
        size = min(size * 2, 1 << 20)
    return np.concatenate(chunks)


def _logsumexp(arrs: Sequence[np.ndarray]) -> float:
    arrs = [a for a in arrs if a.size]
    if not arrs:
        return -math.inf
    top = max(float(np.max(a)) for a in arrs)
    if top == -math.inf:
        return -math.inf
    total = sum(float(np.sum(np.exp(a - top))) for a in arrs)
    return top + math.log(total)


def _mode(n: int, p: float) -> int:
    return min(max(int(math.floor((n + 1) * p)), 0), n)


@lru_cache(maxsize=256)
def _log_pmf_table(n: int, p: float, q: float) -> np.ndarray:
    """Full log pmf for small ``n``, walked outward from the mode."""
    mode = _mode(n, p)
    up = _walk(n, p, q, mode, n, cutoff=-math.inf)
    down = _walk(n, p, q, mode - 1, 0, cutoff=-math.inf) if mode > 0 else np.empty(0)
    table = np.concatenate([down[::-1], up])
    table.setflags(write=False)
    return table


def _log_range_mass(n: int, p: float, q: float, lo: int, hi: int) -> float:
    lo = max(lo, 0)
    hi = min(hi, n)
    if lo > hi:
        return -math.inf
    if p == 0.0:
        return 0.0 if lo == 0 else -math.inf
    if q == 0.0:
        return 0.0 if hi == n else -math.inf
    if n <= _TABLE_N:
        return min(_logsumexp([_log_pmf_table(n, p, q)[lo : hi + 1]]), 0.0)
    mode = _mode(n, p)
    if lo <= mode <= hi:
        parts = [_walk(n, p, q, mode, hi)]
        if mode - 1 >= lo:
            parts.append(_walk(n, p, q, mode - 1, lo))
    elif hi < mode:
        parts = [_walk(n, p, q, hi, lo)]
    else:
        parts = [_walk(n, p, q, lo, hi)]
    return min(_logsumexp(parts), 0.0)


def binomial_band(spec: BinomialSpec, lo: int, hi: int) -> ExtProb:
    """``P(lo <= k <= hi)`` with an accurate complement.

    Inside and outside masses are both summed; whichever is smaller is
    authoritative and the other side is derived from it.
    """
    n, p, q = spec.n, spec.p, spec.q
    if n > EXACT_SUM_LIMIT:
        raise RangeError(f"exact summation is limited to n <= {EXACT_SUM_LIMIT}", "n")
    lo, hi = max(int(lo), 0), min(int(hi), n)
    if lo > hi:
        return ZERO
    if lo == 0 and hi == n:
        return ONE
    inside = _log_range_mass(n, p, q, lo, hi)
    outside = _logsumexp(
        [
            np.array([_log_range_mass(n, p, q, 0, lo - 1)]),
            np.array([_log_range_mass(n, p, q, hi + 1, n)]),
        ]
    )
    if inside <= outside:
        return from_log(min(inside, 0.0))
    return from_log_complement(min(outside, 0.0))


def _count_tolerance(n: int, width: float) -> float:
    return 1e-10 * max(1.0, width) + 4e-16 * float(n)


def deviation_band(n: int, center: float, half_width: float, closed: bool):
    """Integer range of ``k`` with ``|k - n*center|`` below ``half_width`` counts.

    ``closed=True`` keeps the boundary (``<=``), ``closed=False`` drops it
    (``<``). Returns ``(lo, hi)``, empty when ``lo > hi``. Boundary decisions
    absorb float rounding of the order of ``1e-10`` counts.
    """
    mid = float(n) * center
    tol = _count_tolerance(n, half_width)
    if closed:
        lo = math.ceil(mid - half_width - tol)
        hi = math.floor(mid + half_width + tol)
    else:
        lo = math.floor(mid - half_width + tol) + 1
        hi = math.ceil(mid + half_width - tol) - 1
    return max(lo, 0), min(hi, n)


# ---------------------------------------------------------------------------
# approximations and bounds


def moivre_laplace_pmf(spec: BinomialSpec, k: int) -> ExtProb:
    """Gaussian density approximation of the binomial pmf at ``k``.

    Emits :class:`RegimeWarning` for ``n < 100``. Values are capped at 1.
    """
    if not 0 <= k <= spec.n:
        raise DomainError(f"k must lie in [0, {spec.n}], got {k!r}", "k")
    if spec.n < MOIVRE_LAPLACE_MIN_N:
        warnings.warn(
            f"Moivre-Laplace approximation used with n={spec.n} < {MOIVRE_LAPLACE_MIN_N}",
            RegimeWarning,
            stacklevel=2,
        )
    dq = spec.delta_q
    if dq == 0.0:
        raise DomainError("distribution is degenerate (p in {0, 1})", "p")
    z = (k / float(spec.n) - spec.p) / dq
    lv = -0.5 * z * z - math.log(float(spec.n) * dq) - 0.5 * _LOG_2PI
    return from_log(min(lv, 0.0))


def gaussian_tail_leading(sigma: float) -> ExtProb:
    """Leading asymptotic term of the two-sided tail,
    ``2 exp(-sigma^2/2) / (sigma sqrt(2 pi))``. Valid for ``sigma >> 1``."""
    if sigma <= 0:
        raise DomainError("sigma must be positive", "sigma")
    lv = -0.5 * sigma * sigma - math.log(sigma) - _HALF_LOG_PI_OVER_2
    return from_log(min(lv, 0.0))


def _asymptotic_log_tail(sigma: float) -> float:
    # erfc series: 1 - 1/s^2 + 3/s^4 - 15/s^6 + ...
    inv = 1.0 / (sigma * sigma)
    term = 1.0
    total = 1.0
    j = 1
    while True:
        term *= -(2 * j - 1) * inv
        if abs(term) < 1e-17:
            break
        total += term
        j += 1
    return -0.5 * sigma * sigma - math.log(sigma) - _HALF_LOG_PI_OVER_2 + math.log(total)


def gaussian_tail(sigma: float) -> ExtProb:
    """``P(|Z| >= sigma)`` for a standard normal ``Z``, i.e. ``1 - erf(sigma/sqrt 2)``."""
    if sigma < 0 or math.isnan(sigma):
        raise DomainError(f"sigma must be nonnegative, got {sigma!r}", "sigma")
    if sigma == 0:
        return ONE
    if sigma <= GAUSSIAN_CROSSOVER:
        x = sigma / _SQRT2
        return ExtProb(math.log(math.erfc(x)), math.log(math.erf(x)))
    lv = _asymptotic_log_tail(sigma)
    return ExtProb(lv, _log1mexp(lv))


def _hoeffding_log(spec: BinomialSpec, sigma: float) -> float:
    dq2 = spec.p * spec.q / float(spec.n)
    via_delta = math.log(2.0) - 2.0 * float(spec.n) * sigma * sigma * dq2
    via_pq = math.log(2.0) - 2.0 * sigma * sigma * spec.p * spec.q
    if not math.isclose(via_delta, via_pq, rel_tol=1e-12, abs_tol=1e-12):
        raise ArithmeticError(f"Hoeffding forms disagree: {via_delta!r} vs {via_pq!r}")
    return via_pq


def hoeffding_bound(spec: BinomialSpec, sigma: float) -> ExtProb:
    """``2 exp(-2 sigma^2 p q)``, capped at 1."""
    return from_log(min(_hoeffding_log(spec, sigma), 0.0))


def chebyshev_bound(spec: BinomialSpec, sigma: float) -> ExtProb:
    """``dQ^2 / eps^2`` with ``eps = sigma dQ``, capped at 1."""
    dq = spec.delta_q
    eps = sigma * dq
    if eps == 0.0:
        return ONE
    return from_log(min(2.0 * math.log(dq) - 2.0 * math.log(eps), 0.0))


@dataclass(frozen=True)
class TailReport:
    """Two-sided deviation probability ``P(|Q - p| >= sigma dQ)`` four ways.

    ``asymptotic`` is set when ``n`` is too large for exact summation and
    ``exact`` holds the Gaussian value instead.
    """

    n: int
    p: float
    sigma: float
    epsilon: float
    exact: ExtProb
    hoeffding: ExtProb
    chebyshev: ExtProb
    gaussian: ExtProb
    asymptotic: bool = False
    inclusive: bool = True

    @property
    def confidence(self) -> ExtProb:
        return self.exact.complement()

    @property
    def gaussian_confidence(self) -> ExtProb:
        return self.gaussian.complement()


def _exact_tail(spec: BinomialSpec, sigma: float, inclusive: bool) -> ExtProb:
    width = sigma * math.sqrt(float(spec.n) * spec.p * spec.q)
    # the tail is the complement of the inner band
    lo, hi = deviation_band(spec.n, spec.p, width, closed=not inclusive)
    return binomial_band(spec, lo, hi).complement()


def _tail_report(spec: BinomialSpec, sigma: float, inclusive: bool = True) -> TailReport:
    gaussian = gaussian_tail(sigma)
    asymptotic = spec.n > EXACT_SUM_LIMIT
    exact = gaussian if asymptotic else _exact_tail(spec, sigma, inclusive)
    return TailReport(
        n=spec.n,
        p=spec.p,
        sigma=sigma,
        epsilon=sigma * spec.delta_q,
        exact=exact,
        hoeffding=hoeffding_bound(spec, sigma),
        chebyshev=chebyshev_bound(spec, sigma),
        gaussian=gaussian,
        asymptotic=asymptotic,
        inclusive=inclusive,
    )


def two_sided_tail(spec: BinomialSpec, sigma: float, inclusive: bool = True) -> TailReport:
    """Probability that the frequency deviates from ``p`` by ``sigma`` standard
    deviations or more.

    ``sigma`` must lie in ``(0, min(p, q) / dQ]``. With ``inclusive=False`` the
    boundary ``|Q - p| = sigma dQ`` is excluded (strict ``>``).
    """
    if not sigma > 0:
        raise RangeError(f"sigma must be positive, got {sigma!r}", "sigma")
    limit = spec.sigma_limit
    if sigma > limit * (1.0 + 1e-12):
        raise RangeError(
            f"sigma={sigma!r} exceeds min(p, 1-p)/dQ = {limit!r} for n={spec.n}, p={spec.p}",
            "sigma",
        )
    return _tail_report(spec, sigma, inclusive)


@dataclass(frozen=True)
class WllnRow:
    n: int
    epsilon: float
    exact: ExtProb
    hoeffding: ExtProb
    chebyshev: ExtProb
    gaussian: ExtProb
    asymptotic: bool = False


def wlln_table(p: float, ns: Iterable[int], epsilon: float, workers: int = 1) -> list[WllnRow]:
    """``P(|Q - p| >= epsilon)`` for each ``n`` in ``ns``, in input order."""
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon!r}", "epsilon")
    ns = list(ns)

    def row(n):
        spec = BinomialSpec(n, p)
        if spec.delta_q == 0.0:
            raise DomainError("p must lie strictly between 0 and 1", "p")
        rep = _tail_report(spec, epsilon / spec.delta_q)
        return WllnRow(n, epsilon, rep.exact, rep.hoeffding, rep.chebyshev, rep.gaussian, rep.asymptotic)

    if workers > 1 and len(ns) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(row, ns))
    return [row(n) for n in ns]


# ---------------------------------------------------------------------------
# sampling without replacement


def _log_comb(n: int, k: int) -> float:
    return math.lgamma(n + 1.0) - math.lgamma(k + 1.0) - math.lgamma(n - k + 1.0)


def hypergeometric_pmf(m_spade: int, m_heart: int, draws: int, k: int) -> ExtProb:
    """Probability of ``k`` spades in ``draws`` draws without replacement from
    an urn of ``m_spade`` spades and ``m_heart`` hearts."""
    if m_spade < 0 or m_heart < 0 or draws < 0:
        raise DomainError("urn sizes and draws must be nonnegative", "draws")
    total = m_spade + m_heart
    if draws > total:
        raise BudgetError(f"cannot draw {draws} balls from an urn of {total}", "draws")
    lo, hi = max(0, draws - m_heart), min(draws, m_spade)
    if not lo <= k <= hi:
        raise DomainError(f"k={k} outside the support [{lo}, {hi}]", "k")
    lv = _log_comb(m_spade, k) + _log_comb(m_heart, draws - k) - _log_comb(total, draws)
    return from_log(min(lv, 0.0))


# ---------------------------------------------------------------------------
# intervals


@dataclass(frozen=True)
class ConfidenceInterval:
    """``center +/- half_width``; ``lower``/``upper`` are clipped to [0, 1]."""

    center: float
    half_width: float
    method: str

    @property
    def lower(self) -> float:
        return max(0.0, self.center - self.half_width)

    @property
    def upper(self) -> float:
        return min(1.0, self.center + self.half_width)

    def __contains__(self, x: float) -> bool:
        return self.lower <= x <= self.upper


def confidence_interval(q_observed: float, n: int, sigma: float, method: str = "approximate") -> ConfidenceInterval:
    """Interval for the underlying probability given an observed frequency.

    ``approximate`` is the plug-in ``q +/- sigma sqrt(q(1-q)/n)``; ``rigorous``
    solves the quadratic for the probability exactly (the Wilson form).
    """
    if not 0.0 <= q_observed <= 1.0:
        raise DomainError(f"q_observed must lie in [0, 1], got {q_observed!r}", "q_observed")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n!r}", "n")
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma!r}", "sigma")
    fn = float(n)
    spread = q_observed * (1.0 - q_observed)
    if method == "approximate":
        return ConfidenceInterval(q_observed, sigma * math.sqrt(spread / fn), method)
    if method == "rigorous":
        s2n = sigma * sigma / fn
        center = (q_observed + 0.5 * s2n) / (1.0 + s2n)
        half = sigma * math.sqrt(spread + 0.25 * s2n) / (math.sqrt(fn) * (1.0 + s2n))
        return ConfidenceInterval(center, half, method)
    raise DomainError(f"unknown interval method {method!r}", "method")
