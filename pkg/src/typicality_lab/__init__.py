"""Binomial typicality, branch measures and negligible probabilities."""

from .branch import HADAMARD, Coin, History, HistoryStats, apply_unitary, history_stats, make_coin
from .cournot import CournotBudget, Negligibility, budget, classify, repeat_probability
from .ensemble import (
    BranchEnsemble,
    BranchMeasure,
    MangledEnsemble,
    TypicalitySummary,
    aggregate_branches,
    compose_stages,
    enumerate_branches,
    fit_f,
    history_weight,
    mangle,
    sample_histories,
    typical_set,
)
from .errors import (
    BudgetError,
    CapError,
    DegenerateCoinError,
    DomainError,
    EmptyEnsembleError,
    NonUnitaryError,
    RangeError,
    SaturationError,
    TypicalityError,
)
from .extprob import ONE, ZERO, ExtProb, complement, from_linear, from_log, mul, parse, render, sum_probs
from .tails import (
    BinomialSpec,
    ConfidenceInterval,
    TailReport,
    binom_log_pmf,
    binomial_band,
    confidence_interval,
    gaussian_tail,
    hypergeometric_pmf,
    moivre_laplace_pmf,
    two_sided_tail,
    wlln_table,
)

__version__ = "0.1.0"
