"""
Probabilities stored as a pair of natural logarithms.

An :class:`ExtProb` keeps ``log(x)`` and ``log(1 - x)`` side by side, so both
``1e-2174`` and ``1 - 1e-2174`` are ordinary values.  All arithmetic is in
double precision; the complement is carried along rather than recomputed from
the value whenever that would cancel.
"""

from __future__ import annotations

import functools
import math
import re
from typing import Iterable

import numpy as np

from .errors import DomainError, SaturationError

__all__ = [
    "ExtProb",
    "from_linear",
    "from_log",
    "from_log_complement",
    "mul",
    "sum_probs",
    "complement",
    "render",
    "parse",
    "ZERO",
    "ONE",
]

_LN10 = math.log(10.0)
_LOG_HALF = -math.log(2.0)
SUM_SLACK = 1e-9


def _log1mexp(lx: float) -> float:
    """``log(1 - exp(lx))`` for ``lx <= 0`` (Maechler's switch)."""
    if lx > 0:
        raise DomainError(f"log1mexp argument must be <= 0, got {lx!r}")
    if lx == -math.inf:
        return 0.0
    if lx == 0:
        return -math.inf
    if lx > _LOG_HALF:
        return math.log(-math.expm1(lx))
    return math.log1p(-math.exp(lx))


def _logaddexp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


@functools.total_ordering
class ExtProb:
    """A probability in ``[0, 1]`` held as ``(log p, log(1 - p))``.

    Instances are immutable. Construct them with :func:`from_linear`,
    :func:`from_log` or :func:`from_log_complement`; the raw constructor
    trusts the caller to supply a consistent pair.
    """

    __slots__ = ("_lv", "_lc")

    def __init__(self, log_value: float, log_complement: float):
        if math.isnan(log_value) or math.isnan(log_complement):
            raise DomainError("ExtProb logs must not be NaN")
        if log_value > 0 or log_complement > 0:
            raise DomainError(
                f"ExtProb logs must be <= 0, got ({log_value!r}, {log_complement!r})"
            )
        object.__setattr__(self, "_lv", float(log_value))
        object.__setattr__(self, "_lc", float(log_complement))

    def __setattr__(self, name, value):
        raise AttributeError("ExtProb is immutable")

    @property
    def log_value(self) -> float:
        return self._lv

    @property
    def log_complement(self) -> float:
        return self._lc

    @property
    def value(self) -> float:
        """Linear value; underflows to 0.0 below ~1e-308."""
        return math.exp(self._lv)

    @property
    def complement_value(self) -> float:
        return math.exp(self._lc)

    @property
    def log10_value(self) -> float:
        return self._lv / _LN10

    @property
    def log10_complement(self) -> float:
        return self._lc / _LN10

    def is_zero(self) -> bool:
        return self._lv == -math.inf

    def is_one(self) -> bool:
        return self._lc == -math.inf

    def complement(self) -> "ExtProb":
        return ExtProb(self._lc, self._lv)

    def __mul__(self, other: "ExtProb") -> "ExtProb":
        if not isinstance(other, ExtProb):
            return NotImplemented
        return mul(self, other)

    def __pow__(self, exponent: float) -> "ExtProb":
        return self.pow(exponent)

    def pow(self, exponent: float) -> "ExtProb":
        """``p ** exponent`` for a nonnegative (possibly huge) exponent.

        ``1 - p**k`` is recovered from ``-k * log(p)`` so values such as
        ``(1 - 1e-3000) ** 1e10`` keep an accurate complement.
        """
        if exponent < 0:
            raise DomainError("exponent must be nonnegative", "exponent")
        if exponent == 0 or self.is_one():
            return ONE
        if self.is_zero():
            return ZERO
        # log of -log(p); when log(p) underflowed, -log(1 - c) ~ c
        if self._lv < -1e-300:
            log_neg_lv = math.log(-self._lv)
        else:
            log_neg_lv = self._lc
        log_neg_new = math.log(exponent) + log_neg_lv
        if log_neg_new > 709.0:
            return ZERO
        neg_new = math.exp(log_neg_new)
        if log_neg_new < -30.0:
            lc = log_neg_new + math.log1p(-0.5 * neg_new)
        else:
            lc = math.log(-math.expm1(-neg_new))
        return ExtProb(-neg_new, min(lc, 0.0))

    def _key(self):
        # values >= 1/2 compare through their complement
        if self._lv >= _LOG_HALF:
            return (1, -self._lc)
        return (0, self._lv)

    def __eq__(self, other):
        if not isinstance(other, ExtProb):
            return NotImplemented
        return self._lv == other._lv and self._lc == other._lc

    def __lt__(self, other):
        if not isinstance(other, ExtProb):
            return NotImplemented
        return self._key() < other._key()

    def __hash__(self):
        return hash((self._lv, self._lc))

    def __float__(self):
        return self.value

    def __repr__(self):
        return f"ExtProb({render(self)})"

    def __str__(self):
        return render(self)

    def __reduce__(self):
        return (ExtProb, (self._lv, self._lc))


ZERO = ExtProb(-math.inf, 0.0)
ONE = ExtProb(0.0, -math.inf)


def from_linear(x: float) -> ExtProb:
    """Wrap a linear probability. ``0`` and ``1`` map to exact zero/one."""
    x = float(x)
    if math.isnan(x) or x < 0.0 or x > 1.0:
        raise DomainError(f"probability must lie in [0, 1], got {x!r}", "x")
    if x == 0.0:
        return ZERO
    if x == 1.0:
        return ONE
    return ExtProb(math.log(x), math.log1p(-x))


def from_log(log_value: float) -> ExtProb:
    if log_value > 0:
        raise DomainError(f"log probability must be <= 0, got {log_value!r}")
    return ExtProb(log_value, _log1mexp(log_value))


def from_log_complement(log_complement: float) -> ExtProb:
    return from_log(log_complement).complement()


def complement(p: ExtProb) -> ExtProb:
    return p.complement()


def mul(p: ExtProb, q: ExtProb) -> ExtProb:
    """Product of two probabilities.

    The complement uses ``1 - pq = (1 - p) + p (1 - q)``, a sum of
    nonnegative terms, so it never cancels.
    """
    lv = p.log_value + q.log_value
    if lv == -math.inf:
        return ZERO
    lc = _logaddexp(p.log_complement, p.log_value + q.log_complement)
    return ExtProb(lv, min(lc, 0.0))


def sum_probs(ps: Iterable[ExtProb]) -> ExtProb:
    """Sum of probabilities of disjoint events (log-sum-exp).

    Raises :class:`SaturationError` if the total exceeds one by more than
    ``1e-9`` relative.
    """
    ps = list(ps)
    if not ps:
        return ZERO
    lvs = np.fromiter((p.log_value for p in ps), dtype=float, count=len(ps))
    imax = int(np.argmax(lvs))
    top = lvs[imax]
    if top == -math.inf:
        return ZERO
    rest = np.delete(lvs, imax)
    if rest.size and np.max(rest) > -math.inf:
        lrest = float(top + math.log(np.sum(np.exp(rest - top))))
    else:
        lrest = -math.inf
    ls = _logaddexp(top, lrest)

    if top >= _LOG_HALF:
        # 1 - S = c_max - rest; exact when rest is small next to c_max
        lc_max = ps[imax].log_complement
        if lrest == -math.inf:
            return ps[imax]
        if lrest > lc_max:
            over = math.exp(lrest) - math.exp(lc_max)
            if over > SUM_SLACK:
                raise SaturationError(f"probability sum exceeds 1 by {over:.3e}")
            return ONE
        lc = lc_max + _log1mexp(lrest - lc_max)
        return ExtProb(min(ls, 0.0), lc)

    if ls > 0:
        over = math.expm1(ls)
        if over > SUM_SLACK:
            raise SaturationError(f"probability sum exceeds 1 by {over:.3e}")
        return ONE
    return ExtProb(ls, _log1mexp(ls))


# ---------------------------------------------------------------------------
# decimal rendering

_NUM_RE = re.compile(
    r"^\s*(?P<mant>[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE](?P<exp>[+-]?[0-9]+))?\s*$"
)
_COMPLEMENT_RE = re.compile(r"^\s*1\s*-\s*(?P<rest>.+)$")
_RENDER_COMPLEMENT_BELOW = math.log(1e-6)


def _render_log10(log10_x: float, digits: int) -> str:
    exp = math.floor(log10_x)
    mant = 10.0 ** (log10_x - exp)
    text = f"{mant:.{digits - 1}f}"
    if float(text) >= 10.0:
        exp += 1
        mant = 10.0 ** (log10_x - exp)
        text = f"{mant:.{digits - 1}f}"
    sign = "-" if exp < 0 else "+"
    return f"{text}e{sign}{abs(exp):02d}"


def render(p: ExtProb, digits: int = 6) -> str:
    """Scientific rendering with ``digits`` significant digits.

    Values above 0.999999 are written in complement form ``"1 - 1.00000e-2174"``.
    """
    if p.is_zero():
        return "0"
    if p.is_one():
        return "1"
    if p.log_complement < _RENDER_COMPLEMENT_BELOW:
        return "1 - " + _render_log10(p.log10_complement, digits)
    return _render_log10(p.log10_value, digits)


def _parse_log(text: str) -> float:
    m = _NUM_RE.match(text)
    if not m:
        raise DomainError(f"cannot parse probability {text!r}")
    mant = float(m.group("mant"))
    exp = int(m.group("exp") or 0)
    if mant == 0.0:
        return -math.inf
    return (math.log10(mant) + exp) * _LN10


def parse(text: str) -> ExtProb:
    """Inverse of :func:`render`; also accepts plain decimals like ``"0.25"``."""
    m = _COMPLEMENT_RE.match(text)
    if m:
        lc = _parse_log(m.group("rest"))
        if lc > 0:
            raise DomainError(f"probability out of range: {text!r}")
        return from_log_complement(lc)
    lv = _parse_log(text)
    if lv > 1e-15:
        raise DomainError(f"probability out of range: {text!r}")
    if lv >= 0:
        return ONE
    return from_log(lv)
