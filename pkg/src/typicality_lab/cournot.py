"""Negligibility thresholds from a cosmological trial budget."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DomainError
from .extprob import ExtProb, from_log
from .tails import gaussian_tail

__all__ = [
    "Negligibility",
    "CournotBudget",
    "budget",
    "sigma_max_gaussian",
    "sigma_max_hoeffding",
    "classify",
    "repeat_probability",
    "BOREL_LOG10_THRESHOLD",
]

BOREL_LOG10_THRESHOLD = -1000
_LN10 = math.log(10.0)


class Negligibility(str, enum.Enum):
    ORDINARY = "ordinary"
    COSMICALLY_NEGLIGIBLE = "cosmically_negligible"
    BOREL_UNIVERSALLY_NEGLIGIBLE = "borel_universally_negligible"


def _floor_log10(x: int) -> int:
    return len(str(x)) - 1


@dataclass(frozen=True)
class CournotBudget:
    """Largest number of elementary trials the universe affords and the
    deviation it tolerates before an outcome becomes negligible.

    ``n_max`` is kept as an exact integer; ``epsilon_max_coefficient`` is the
    ``C`` in ``epsilon_max = C / sqrt(N)`` for a fair coin.
    """

    atoms: int
    time_ratio: int
    n_max: int
    sigma_max: float
    epsilon_max_coefficient: float
    method: str = "gaussian"

    @property
    def log_n_max(self) -> float:
        return math.log(self.n_max)

    @property
    def atoms_exp(self) -> int:
        return _floor_log10(self.atoms)

    @property
    def time_ratio_exp(self) -> int:
        return _floor_log10(self.time_ratio)

    @property
    def n_max_exp(self) -> int:
        return _floor_log10(self.n_max)

    @property
    def threshold(self) -> ExtProb:
        """``1 / n_max``."""
        return from_log(-self.log_n_max)

    def to_json(self) -> dict:
        return {
            "atoms_exp": self.atoms_exp,
            "time_ratio_exp": self.time_ratio_exp,
            "n_max_exp": self.n_max_exp,
            "sigma_max": float(f"{self.sigma_max:.4g}"),
            "epsilon_max_coefficient": float(f"{self.epsilon_max_coefficient:.4g}"),
        }


def sigma_max_gaussian(log_n_max: float, tol: float = 1e-12) -> float:
    """Solve ``gaussian_tail(sigma) = exp(-log_n_max)`` by bisection."""
    if log_n_max < 0:
        raise DomainError("n_max must be >= 1", "n_max")
    if log_n_max == 0:
        return 0.0
    target = -log_n_max
    lo, hi = 0.0, 1.0
    while gaussian_tail(hi).log_value > target:
        hi *= 2.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if gaussian_tail(mid).log_value > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sigma_max_hoeffding(log_n_max: float, p: float = 0.5) -> float:
    """Invert ``2 exp(-2 sigma^2 p q) = 1 / n_max`` in closed form."""
    if not 0.0 < p < 1.0:
        raise DomainError("p must lie strictly between 0 and 1", "p")
    return math.sqrt((math.log(2.0) + log_n_max) / (2.0 * p * (1.0 - p)))


def budget(atoms: int, time_ratio: int, method: str = "gaussian") -> CournotBudget:
    """Trial budget ``n_max = atoms * time_ratio`` and its ``sigma_max``.

    ``method="hoeffding"`` inverts the Hoeffding bound instead of the
    Gaussian tail.
    """
    if int(atoms) != atoms or atoms < 1:
        raise DomainError(f"atoms must be an integer >= 1, got {atoms!r}", "atoms")
    if int(time_ratio) != time_ratio or time_ratio < 1:
        raise DomainError(f"time_ratio must be an integer >= 1, got {time_ratio!r}", "time_ratio")
    atoms, time_ratio = int(atoms), int(time_ratio)
    n_max = atoms * time_ratio
    log_n = math.log(n_max)
    if method == "gaussian":
        sigma = sigma_max_gaussian(log_n)
    elif method == "hoeffding":
        sigma = sigma_max_hoeffding(log_n)
    else:
        raise DomainError(f"unknown inversion method {method!r}", "method")
    # fair coin: dQ = 0.5 / sqrt(N)
    return CournotBudget(atoms, time_ratio, n_max, sigma, 0.5 * sigma, method)


def classify(p: ExtProb, b: CournotBudget) -> Negligibility:
    """Borel tier below ``1e-1000``, cosmic tier below ``1 / n_max``."""
    if p.log_value < BOREL_LOG10_THRESHOLD * _LN10:
        return Negligibility.BOREL_UNIVERSALLY_NEGLIGIBLE
    if p.log_value < -b.log_n_max:
        return Negligibility.COSMICALLY_NEGLIGIBLE
    return Negligibility.ORDINARY


def repeat_probability(p_event: ExtProb, trials: int) -> ExtProb:
    """Chance of at least one occurrence in ``trials`` independent runs,
    ``1 - (1 - p)^trials``."""
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials!r}", "trials")
    if trials == 1:
        return p_event
    return p_event.complement().pow(trials).complement()
