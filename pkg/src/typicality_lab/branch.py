"""Two-outcome quantum coins, outcome histories and their frequency counts."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DegenerateCoinError, DomainError, NonUnitaryError

__all__ = [
    "SPADE",
    "HEART",
    "Coin",
    "History",
    "HistoryStats",
    "make_coin",
    "apply_unitary",
    "history_stats",
    "HADAMARD",
    "DEFAULT_MATERIALIZATION_CAP",
]

SPADE = "S"
HEART = "H"
_SYMBOLS = {"S": SPADE, "s": SPADE, "♠": SPADE, "H": HEART, "h": HEART, "♡": HEART}

DEFAULT_MATERIALIZATION_CAP = 2**20
NORM_INPUT_TOL = 1e-3
COIN_EQ_TOL = 1e-10
UNITARY_TOL = 1e-9

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class Coin:
    """Amplitudes ``a`` (spade) and ``b`` (heart) with ``|a|^2 + |b|^2 = 1``.

    Build with :func:`make_coin`, which renormalizes.
    """

    a: complex
    b: complex

    @property
    def p_spade(self) -> float:
        """Measure of existence of the spade branch, ``|a|^2``."""
        return abs(self.a) ** 2

    @property
    def p_heart(self) -> float:
        return abs(self.b) ** 2

    @property
    def relative_phase(self) -> float:
        if self.a == 0 or self.b == 0:
            return 0.0
        return cmath.phase(self.b / self.a)

    def as_reals(self) -> tuple[float, float, float, float]:
        return (self.a.real, self.a.imag, self.b.real, self.b.imag)

    @classmethod
    def from_reals(cls, re_a, im_a, re_b, im_b) -> "Coin":
        return make_coin(complex(re_a, im_a), complex(re_b, im_b))

    def __eq__(self, other):
        # global phase is ignored; relative phase matters only when both
        # branches carry amplitude
        if not isinstance(other, Coin):
            return NotImplemented
        if abs(self.p_spade - other.p_spade) > COIN_EQ_TOL:
            return False
        if abs(self.p_heart - other.p_heart) > COIN_EQ_TOL:
            return False
        if min(self.p_spade, self.p_heart, other.p_spade, other.p_heart) <= COIN_EQ_TOL:
            return True
        d = cmath.phase(cmath.exp(1j * (self.relative_phase - other.relative_phase)))
        return abs(d) <= COIN_EQ_TOL

    __hash__ = None


def make_coin(a: complex, b: complex) -> Coin:
    a = complex(a)
    b = complex(b)
    norm2 = abs(a) ** 2 + abs(b) ** 2
    if not math.isfinite(norm2):
        raise DomainError("coin amplitudes must be finite", "a")
    if norm2 < 1e-12:
        raise DegenerateCoinError(f"coin norm {norm2:.3e} is degenerate", "a")
    if abs(norm2 - 1.0) > NORM_INPUT_TOL:
        raise DomainError(
            f"|a|^2 + |b|^2 = {norm2:.9f} is not within {NORM_INPUT_TOL:g} of 1", "a"
        )
    scale = 1.0 / math.sqrt(norm2)
    return Coin(a * scale, b * scale)


def apply_unitary(c: Coin, u) -> Coin:
    """Act with a 2x2 unitary on ``(a, b)``; e.g. a beam splitter."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise DomainError(f"unitary must be 2x2, got shape {u.shape}", "u")
    deviation = float(np.linalg.norm(u.conj().T @ u - np.eye(2)))
    if deviation > UNITARY_TOL:
        raise NonUnitaryError(f"matrix is not unitary (||U^H U - I|| = {deviation:.3e})", deviation)
    a, b = u @ np.array([c.a, c.b])
    return make_coin(complex(a), complex(b))


class History:
    """A materialized outcome sequence over ``S`` (spade) / ``H`` (heart).

    Long sequences only ever need their counts; use :class:`HistoryStats`
    for anything beyond ``cap`` outcomes.
    """

    __slots__ = ("_outcomes",)

    def __init__(self, outcomes: Union[str, Iterable[str]], cap: int = DEFAULT_MATERIALIZATION_CAP):
        try:
            text = "".join(_SYMBOLS[o] for o in outcomes)
        except KeyError as exc:
            raise DomainError(f"unknown outcome symbol {exc.args[0]!r}", "outcomes") from None
        if not text:
            raise DomainError("a history needs at least one outcome", "outcomes")
        if len(text) > cap:
            raise DomainError(
                f"history of length {len(text)} exceeds materialization cap {cap}; use HistoryStats",
                "outcomes",
            )
        self._outcomes = text

    @classmethod
    def from_id(cls, history_id: int, n: int) -> "History":
        """Inverse of :attr:`id`: bit ``n-1-i`` set means trial ``i`` was spade."""
        if not 0 <= history_id < 2**n:
            raise DomainError(f"history id {history_id} out of range for n={n}", "history_id")
        return cls(format(history_id, f"0{n}b").replace("1", SPADE).replace("0", HEART))

    @property
    def outcomes(self) -> str:
        return self._outcomes

    @property
    def id(self) -> int:
        return int(self._outcomes.replace(SPADE, "1").replace(HEART, "0"), 2)

    def __len__(self):
        return len(self._outcomes)

    def __iter__(self):
        return iter(self._outcomes)

    def __eq__(self, other):
        if not isinstance(other, History):
            return NotImplemented
        return self._outcomes == other._outcomes

    def __hash__(self):
        return hash(self._outcomes)

    def __repr__(self):
        if len(self) > 40:
            return f"History({self._outcomes[:37]}..., n={len(self)})"
        return f"History({self._outcomes!r})"

    def __str__(self):
        return self._outcomes


@dataclass(frozen=True)
class HistoryStats:
    """Outcome counts of one history. ``n == 0`` is the empty record."""

    n_spade: int
    n_heart: int

    def __post_init__(self):
        if self.n_spade < 0 or self.n_heart < 0:
            raise DomainError("counts must be nonnegative", "n_spade")

    @classmethod
    def empty(cls) -> "HistoryStats":
        return cls(0, 0)

    @property
    def n(self) -> int:
        return self.n_spade + self.n_heart

    @property
    def q_spade(self) -> Fraction:
        if self.n == 0:
            raise DomainError("frequency of an empty history is undefined", "n")
        return Fraction(self.n_spade, self.n)

    @property
    def q_heart(self) -> Fraction:
        if self.n == 0:
            raise DomainError("frequency of an empty history is undefined", "n")
        return Fraction(self.n_heart, self.n)

    def __add__(self, other: "HistoryStats") -> "HistoryStats":
        if not isinstance(other, HistoryStats):
            return NotImplemented
        return HistoryStats(self.n_spade + other.n_spade, self.n_heart + other.n_heart)


def history_stats(h: Union[History, Sequence[str], str]) -> HistoryStats:
    if not isinstance(h, History):
        h = History(h)
    n_spade = h.outcomes.count(SPADE)
    return HistoryStats(n_spade, len(h) - n_spade)
