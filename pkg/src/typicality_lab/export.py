"""CSV / JSON writers for tables, ensembles, coins and budgets.

Every probability goes through :func:`typicality_lab.extprob.render`, which is
the textual contract for all machine-readable output.
"""

from __future__ import annotations

import csv
import io
from typing import Iterable, Sequence

from .branch import Coin, History, HistoryStats
from .cournot import CournotBudget
from .ensemble import BranchEnsemble, MangledEnsemble
from .extprob import render
from .tails import WllnRow

WLLN_COLUMNS = ("N", "epsilon", "exact_tail", "hoeffding", "chebyshev", "gaussian")
ENSEMBLE_COLUMNS = ("history_id", "n_spade", "born_weight")
MANGLED_COLUMNS = ENSEMBLE_COLUMNS + ("survives",)


def write_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def coin_to_json(c: Coin) -> list[float]:
    """``[re a, im a, re b, im b]``."""
    return list(c.as_reals())


def coin_from_json(values: Sequence[float]) -> Coin:
    return Coin.from_reals(*values)


def history_to_str(h: History) -> str:
    return h.outcomes


def history_from_str(text: str) -> History:
    return History(text)


def stats_to_json(s: HistoryStats) -> dict:
    out = {"n": s.n, "n_spade": s.n_spade, "n_heart": s.n_heart}
    if s.n:
        out["q_spade"] = f"{s.q_spade.numerator}/{s.q_spade.denominator}"
    return out


def wlln_rows(rows: Iterable[WllnRow]) -> list[list]:
    return [
        [r.n, repr(r.epsilon), render(r.exact), render(r.hoeffding), render(r.chebyshev), render(r.gaussian)]
        for r in rows
    ]


def wlln_csv(rows: Iterable[WllnRow]) -> str:
    return write_csv(WLLN_COLUMNS, wlln_rows(rows))


def ensemble_rows(e: BranchEnsemble) -> Iterable[list]:
    for hid, k, w in e.entries():
        yield [hid, k, render(w)]


def ensemble_csv(e: BranchEnsemble) -> str:
    return write_csv(ENSEMBLE_COLUMNS, ensemble_rows(e))


def ensemble_summary(e: BranchEnsemble) -> dict:
    return {
        "n": e.n,
        "coin": coin_to_json(e.coin),
        "histories": e.size,
        "materialized": e.materialized,
        "total_born_weight": render(e.total_weight()),
        "class_weights": [render(w) for w in e.class_weights()],
    }


def mangled_rows(m: MangledEnsemble) -> Iterable[list]:
    mask = m.survives_mask()
    for (hid, k, w), keep in zip(m.base.entries(), mask):
        yield [hid, k, render(w), "true" if keep else "false"]


def mangled_csv(m: MangledEnsemble) -> str:
    return write_csv(MANGLED_COLUMNS, mangled_rows(m))


def mangled_summary(m: MangledEnsemble) -> dict:
    return {
        "n": m.base.n,
        "reference_p": m.reference_p,
        "sigma_max": m.sigma_max,
        "surviving_classes": [int(k) for k in m.surviving_classes.nonzero()[0]],
        "retained_measure": render(m.retained_measure),
        "renormalization": m.renormalization,
        "renormalized": m.renormalized,
    }


def budget_json(b: CournotBudget) -> dict:
    return b.to_json()
