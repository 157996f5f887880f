"""Worked scenarios: each recomputes a quoted number and reports the deviation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from .branch import HADAMARD, HistoryStats, apply_unitary, make_coin
from .cournot import budget, classify, repeat_probability
from .ensemble import (
    BranchMeasure,
    aggregate_branches,
    compose_stages,
    fit_f,
    history_weight,
    mangle,
    typical_set,
)
from .errors import DomainError
from .extprob import ExtProb, from_log, render
from .tails import BinomialSpec, confidence_interval, gaussian_tail, two_sided_tail

__all__ = ["DemoEntry", "SCENARIOS", "run_demo"]


@dataclass(frozen=True)
class DemoEntry:
    quantity: str
    computed: str
    quoted: str
    relative_deviation: Optional[float]

    def to_json(self) -> dict:
        return {
            "quantity": self.quantity,
            "computed": self.computed,
            "quoted": self.quoted,
            "relative_deviation": self.relative_deviation,
        }


def _rel(computed: float, quoted: float) -> float:
    if quoted == 0:
        return abs(computed)
    return float(f"{abs(computed - quoted) / abs(quoted):.6g}")


def _linear(name: str, computed: float, quoted: float, fmt: str = ".6g") -> DemoEntry:
    return DemoEntry(name, format(computed, fmt), format(quoted, "g"), _rel(computed, quoted))


def _near_one(name: str, p: ExtProb, quoted_log10_complement: float) -> DemoEntry:
    # compare the order of magnitude of 1 - p
    return DemoEntry(
        name,
        render(p),
        f"1 - 1e{quoted_log10_complement:+g}",
        _rel(p.log10_complement, quoted_log10_complement),
    )


def _three_sigma():
    conf = gaussian_tail(3.0).complement()
    return [_linear("confidence at sigma=3", conf.value, 0.9973)]


def _headline(n: int, sigma: float, quoted_exp: float, quoted_eps: float):
    rep = two_sided_tail(BinomialSpec(n, 0.5), sigma)
    ci = confidence_interval(0.5, n, sigma, "approximate")
    return [
        _near_one(f"confidence at N={n:.0e}, sigma={sigma:g}", rep.gaussian_confidence, quoted_exp),
        _linear("epsilon = sigma * dQ", ci.half_width, quoted_eps),
    ]


def _n10e10():
    return _headline(10**10, 10.0, -23, 4e-5)


def _n10e24():
    return _headline(10**24, 100.0, -2174, 5e-11)


def _cournot_budget():
    b = budget(10**81, 10**62)
    h = budget(10**81, 10**62, method="hoeffding")
    return [
        _linear("n_max exponent", b.n_max_exp, 143),
        _linear("sigma_max", b.sigma_max, 25.5),
        _linear("epsilon_max coefficient", b.epsilon_max_coefficient, 12),
        _linear("sigma_max (Hoeffding inversion)", h.sigma_max, 25.5),
    ]


def _super_bernoulli():
    n = 10**6
    p = from_log(-math.log(n))
    once = repeat_probability(p, n)
    hundred = repeat_probability(p, 100 * n)
    return [
        _linear("1 - (1 - 1/n)^n", once.value, 0.63),
        _linear("1 - 1/e", once.value, 1 - math.exp(-1)),
        _near_one("1 - (1 - 1/n)^(100 n)", hundred, -43),
    ]


def _bricmont():
    coin = make_coin(math.sqrt(3) / 2, 0.5)
    born = BranchMeasure.born(coin)
    out = []
    for n in (100, 1000, 10000):
        ts = typical_set(n, born, 0.1, reference_center=0.5)
        out.append(DemoEntry(f"counting measure of |Q-1/2|<0.1, N={n}", render(ts.typical_count_fraction), "-> 1", None))
        out.append(DemoEntry(f"Born measure of |Q-1/2|<0.1, N={n}", render(ts.typical_measure_fraction), "-> 0", None))
    return out


def _maverick_mz():
    fair = make_coin(1 / math.sqrt(2), 1 / math.sqrt(2))
    through = apply_unitary(apply_unitary(make_coin(1, 0), HADAMARD), HADAMARD)
    n = 10**10
    pooled = compose_stages(HistoryStats(n, 0), HistoryStats(0, n))
    f_first = fit_f(fair, 1.0)
    f_pooled = fit_f(fair, float(pooled.q_spade))
    h1 = history_weight(HistoryStats(n, 0), BranchMeasure.born(fair))
    return [
        _linear("Mach-Zehnder: weight in the lit door", through.p_spade, 1.0),
        _linear("Mach-Zehnder: weight in the dark door", through.p_heart, 0.0),
        _linear("pooled Q_spade of two maverick runs", float(pooled.q_spade), 0.5),
        _linear("f_spade fitted to the all-spade run", f_first[0], 2.0),
        _linear("f_heart fitted to the all-spade run", f_first[1], 0.0),
        _linear("f_spade fitted to the pooled run", f_pooled[0], 1.0),
        DemoEntry(
            "Born weight of one all-spade run, N=1e10",
            render(h1),
            classify(h1, budget(10**81, 10**62)).value,
            None,
        ),
    ]


def _mangle():
    fair = make_coin(1 / math.sqrt(2), 1 / math.sqrt(2))
    m100 = mangle(aggregate_branches(fair, 100), 0.5, 2.0)
    m20 = mangle(aggregate_branches(fair, 20), 0.5, 25.5)
    return [
        _linear("retained measure, N=100, sigma_max=2", m100.retained_measure.value, 0.9545),
        _linear("retained measure, N=20, sigma_max=25.5", m20.retained_measure.value, 1.0),
    ]


SCENARIOS: dict[str, Callable[[], list[DemoEntry]]] = {
    "three-sigma": _three_sigma,
    "n10e10": _n10e10,
    "n10e24": _n10e24,
    "cournot-budget": _cournot_budget,
    "super-bernoulli": _super_bernoulli,
    "bricmont": _bricmont,
    "maverick-mz": _maverick_mz,
    "mangle": _mangle,
}


def run_demo(name: str) -> list[DemoEntry]:
    try:
        scenario = SCENARIOS[name]
    except KeyError:
        raise DomainError(
            f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}", "scenario"
        ) from None
    return scenario()
