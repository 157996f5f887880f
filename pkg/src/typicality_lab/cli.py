"""
Command-line front end.

Exit status: 0 on success, 2 for invalid input (unknown subcommand, missing or
out-of-range parameter), 3 when a computation fails numerically.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Any, Callable, Optional, Sequence

from . import export
from .branch import make_coin
from .cournot import budget, classify, repeat_probability
from .demo import SCENARIOS, run_demo
from .ensemble import (
    DEFAULT_ENUMERATION_CAP,
    BranchMeasure,
    aggregate_branches,
    enumerate_branches,
    fit_f,
    mangle,
    sample_histories,
    sampling_is_gaussian,
    typical_set,
)
from .errors import TypicalityError
from .extprob import parse as parse_prob
from .extprob import render
from .tails import BinomialSpec, confidence_interval, hypergeometric_pmf, two_sided_tail, wlln_table

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


class ValidationError(Exception):
    def __init__(self, param: str, message: str):
        super().__init__(f"--{param}: {message}")
        self.param = param


@dataclass
class Report:
    command: str
    parameters: dict
    results: Any
    paper_reference: str
    table: Optional[tuple[Sequence[str], list]] = field(default=None)


# ---------------------------------------------------------------------------
# argument types


def count_arg(text: str) -> int:
    """Nonnegative integer, also as mantissa-exponent (``1e81``), kept exact."""
    try:
        d = Decimal(text.strip())
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not d.is_finite() or d != d.to_integral_value():
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(d)


def real_arg(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def complex_arg(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def counts_arg(text: str) -> list[int]:
    return [count_arg(t) for t in text.split(",") if t.strip()]


def prob_arg(text: str):
    try:
        return parse_prob(text)
    except TypicalityError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# ---------------------------------------------------------------------------
# validation helpers


def _need(args, *names):
    for name in names:
        if getattr(args, name.replace("-", "_"), None) is None:
            raise ValidationError(name, "is required")


def _check(cond: bool, param: str, message: str):
    if not cond:
        raise ValidationError(param, message)


def _check_prob(args, name: str, open_interval: bool = False):
    v = getattr(args, name.replace("-", "_"))
    if open_interval:
        _check(0.0 < v < 1.0, name, f"must lie in (0, 1), got {v!r}")
    else:
        _check(0.0 <= v <= 1.0, name, f"must lie in [0, 1], got {v!r}")


def _coin(args):
    _need(args, "a", "b")
    norm2 = abs(args.a) ** 2 + abs(args.b) ** 2
    _check(norm2 >= 1e-12, "a", "coin amplitudes are degenerate (|a|^2 + |b|^2 ~ 0)")
    _check(abs(norm2 - 1.0) <= 1e-3, "a", f"|a|^2 + |b|^2 = {norm2:.6f} is not close to 1")
    return make_coin(args.a, args.b)


def _measure(args, coin):
    kind = args.measure
    if kind == "counting":
        return BranchMeasure.counting()
    if coin is None:
        coin = _coin(args)
    if kind == "born":
        return BranchMeasure.born(coin)
    _need(args, "f-spade", "f-heart")
    _check(args.f_spade >= 0, "f-spade", "must be nonnegative")
    _check(args.f_heart >= 0, "f-heart", "must be nonnegative")
    total = args.f_spade * coin.p_spade + args.f_heart * coin.p_heart
    _check(abs(total - 1.0) <= 1e-10, "f-spade", f"f_spade|a|^2 + f_heart|b|^2 = {total!r}, expected 1")
    return BranchMeasure.f_weighted(coin, args.f_spade, args.f_heart)


def _params(args, *names) -> dict:
    out = {}
    for name in names:
        v = getattr(args, name.replace("-", "_"), None)
        if isinstance(v, complex):
            v = [v.real, v.imag]
        out[name] = v
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_tail(args) -> Report:
    _need(args, "p", "sigma")
    _check(args.n >= 1, "n", "must be >= 1")
    _check_prob(args, "p", open_interval=True)
    _check(args.sigma > 0, "sigma", "must be positive")
    spec = BinomialSpec(args.n, args.p)
    _check(
        args.sigma <= spec.sigma_limit * (1 + 1e-12),
        "sigma",
        f"must not exceed min(p, 1-p)/dQ = {spec.sigma_limit:.6g}",
    )
    rep = two_sided_tail(spec, args.sigma)
    results = {
        "delta_q": spec.delta_q,
        "epsilon": rep.epsilon,
        "exact_tail": render(rep.exact),
        "exact_is_asymptotic": rep.asymptotic,
        "hoeffding": render(rep.hoeffding),
        "chebyshev": render(rep.chebyshev),
        "gaussian_tail": render(rep.gaussian),
        "confidence": render(rep.confidence),
        "gaussian_confidence": render(rep.gaussian_confidence),
        "gaussian_confidence_percent": round(100.0 * rep.gaussian_confidence.value, 4),
    }
    return Report("tail", _params(args, "n", "p", "sigma"), results, "two-sided deviation tail: exact, Hoeffding, Chebyshev, erf")


def cmd_wlln(args) -> Report:
    _need(args, "p", "ns", "epsilon")
    _check_prob(args, "p", open_interval=True)
    _check(args.epsilon > 0, "epsilon", "must be positive")
    _check(len(args.ns) > 0 and all(n >= 1 for n in args.ns), "ns", "must be a comma list of counts >= 1")
    rows = wlln_table(args.p, args.ns, args.epsilon, workers=args.threads)
    table = export.wlln_rows(rows)
    results = [dict(zip(export.WLLN_COLUMNS, r)) for r in table]
    return Report("wlln", _params(args, "p", "ns", "epsilon"), results, "weak law of large numbers, exact tails", (export.WLLN_COLUMNS, table))


def cmd_interval(args) -> Report:
    _need(args, "q", "n", "sigma")
    _check_prob(args, "q")
    _check(args.n >= 1, "n", "must be >= 1")
    _check(args.sigma > 0, "sigma", "must be positive")
    ci = confidence_interval(args.q, args.n, args.sigma, args.method)
    results = {"center": ci.center, "half_width": ci.half_width, "lower": ci.lower, "upper": ci.upper, "method": ci.method}
    return Report("interval", _params(args, "q", "n", "sigma", "method"), results, "confidence interval for the spade probability")


def cmd_hypergeom(args) -> Report:
    _need(args, "m-spade", "m-heart", "draws", "k")
    _check(args.draws <= args.m_spade + args.m_heart, "draws", "cannot exceed the urn population m-spade + m-heart")
    lo, hi = max(0, args.draws - args.m_heart), min(args.draws, args.m_spade)
    _check(lo <= args.k <= hi, "k", f"must lie in the support [{lo}, {hi}]")
    p = hypergeometric_pmf(args.m_spade, args.m_heart, args.draws, args.k)
    return Report("hypergeom", _params(args, "m-spade", "m-heart", "draws", "k"), {"pmf": render(p)}, "urn draws without replacement")


def cmd_enumerate(args) -> Report:
    coin = _coin(args)
    _need(args, "n")
    _check(1 <= args.n <= args.cap, "n", f"must lie in [1, {args.cap}] (enumeration cap); use sample for larger n")
    e = enumerate_branches(coin, args.n, cap=args.cap, workers=args.threads)
    table = list(export.ensemble_rows(e))
    results = export.ensemble_summary(e)
    results["entries"] = [dict(zip(export.ENSEMBLE_COLUMNS, r)) for r in table]
    return Report("enumerate", _params(args, "a", "b", "n"), results, "branch amplitudes a^N_spade b^N_heart", (export.ENSEMBLE_COLUMNS, table))


def cmd_typical(args) -> Report:
    _need(args, "n", "epsilon")
    _check(args.n >= 1, "n", "must be >= 1")
    _check(args.epsilon > 0, "epsilon", "must be positive")
    if args.center is not None:
        _check_prob(args, "center")
    coin = _coin(args) if args.measure != "counting" else None
    m = _measure(args, coin)
    ts = typical_set(args.n, m, args.epsilon, args.center)
    results = {
        "center": ts.center,
        "measure_p_spade": m.p_spade,
        "typical_measure_fraction": render(ts.typical_measure_fraction),
        "typical_count_fraction": render(ts.typical_count_fraction),
    }
    return Report("typical", _params(args, "n", "epsilon", "center", "measure", "a", "b", "f-spade", "f-heart"), results, "typical set under competing branch measures")


def cmd_sample(args) -> Report:
    _need(args, "n", "count")
    _check(args.n >= 1, "n", "must be >= 1")
    _check(args.count >= 1, "count", "must be >= 1")
    coin = _coin(args) if args.measure != "counting" else None
    m = _measure(args, coin)
    stats = sample_histories(coin, args.n, m, args.count, seed=args.seed, workers=args.threads)
    header = ("sample", "n_spade", "n_heart", "q_spade")
    table = [[i, s.n_spade, s.n_heart, repr(s.n_spade / s.n)] for i, s in enumerate(stats)]
    mean = sum(s.n_spade for s in stats) / (len(stats) * args.n)
    results = {
        "p_spade": m.p_spade,
        "mean_q_spade": mean,
        "gaussian_approximation": sampling_is_gaussian(args.n),
        "samples": [dict(zip(header, r)) for r in table],
    }
    return Report("sample", _params(args, "n", "count", "measure", "a", "b", "f-spade", "f-heart", "seed"), results, "Bernoulli sequences drawn under a branch measure", (header, table))


def cmd_fit_f(args) -> Report:
    _need(args, "q")
    _check_prob(args, "q")
    coin = _coin(args)
    _check(1e-15 < coin.p_spade < 1 - 1e-15, "a", "|a|^2 must lie strictly between 0 and 1")
    fs, fh = fit_f(coin, args.q)
    results = {"f_spade": fs, "f_heart": fh, "induced_p_spade": fs * coin.p_spade}
    return Report("fit-f", _params(args, "a", "b", "q"), results, "f-distribution reproducing an observed frequency")


def cmd_mangle(args) -> Report:
    coin = _coin(args)
    _need(args, "n", "sigma-max")
    _check(args.n >= 1, "n", "must be >= 1")
    _check(args.sigma_max > 0, "sigma-max", "must be positive")
    p = coin.p_spade if args.p is None else args.p
    if args.p is not None:
        _check_prob(args, "p")
    materialize = args.n <= args.cap
    e = enumerate_branches(coin, args.n, cap=args.cap, workers=args.threads) if materialize else aggregate_branches(coin, args.n)
    m = mangle(e, p, args.sigma_max, renormalize=args.renormalize)
    results = export.mangled_summary(m)
    table = None
    if materialize:
        rows = list(export.mangled_rows(m))
        results["entries"] = [dict(zip(export.MANGLED_COLUMNS, r)) for r in rows]
        table = (export.MANGLED_COLUMNS, rows)
    return Report("mangle", _params(args, "a", "b", "n", "p", "sigma-max", "renormalize"), results, "boxcar truncation of the branch superposition", table)


def _budget_args(args):
    _check(args.atoms >= 1, "atoms", "must be >= 1")
    _check(args.tratio >= 1, "tratio", "must be >= 1")
    return budget(args.atoms, args.tratio, method=args.method)


def cmd_cournot(args) -> Report:
    b = _budget_args(args)
    results = export.budget_json(b)
    results["method"] = b.method
    return Report("cournot", _params(args, "atoms", "tratio", "method"), results, "cosmological trial budget and sigma_max")


def cmd_classify(args) -> Report:
    _need(args, "prob")
    b = _budget_args(args)
    tier = classify(args.prob, b)
    results = {"probability": render(args.prob), "threshold": render(b.threshold), "class": tier.value}
    params = {"prob": render(args.prob), "atoms": args.atoms, "tratio": args.tratio}
    return Report("classify", params, results, "Borel and cosmic negligibility thresholds")


def cmd_repeat(args) -> Report:
    _need(args, "prob", "trials")
    _check(args.trials >= 1, "trials", "must be >= 1")
    r = repeat_probability(args.prob, args.trials)
    params = {"prob": render(args.prob), "trials": args.trials}
    return Report("repeat", params, {"probability": render(r), "complement": render(r.complement())}, "repeating an experiment until a rare event shows")


def cmd_demo(args) -> Report:
    _need(args, "scenario")
    _check(args.scenario in SCENARIOS, "scenario", f"unknown scenario; choose from {', '.join(SCENARIOS)}")
    entries = run_demo(args.scenario)
    header = ("quantity", "computed", "quoted", "relative_deviation")
    table = [[e.quantity, e.computed, e.quoted, e.relative_deviation] for e in entries]
    return Report("demo", {"scenario": args.scenario}, [e.to_json() for e in entries], f"worked example: {args.scenario}", (header, table))


# ---------------------------------------------------------------------------
# parser


def _add_coin(p):
    p.add_argument("--a", type=complex_arg, help="spade amplitude, e.g. 0.866 or 0.7072j")
    p.add_argument("--b", type=complex_arg, help="heart amplitude")


def _add_measure(p):
    p.add_argument("--measure", choices=("born", "counting", "f"), default="born")
    p.add_argument("--f-spade", type=real_arg)
    p.add_argument("--f-heart", type=real_arg)


def _global_flags(parser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--format", choices=("json", "csv", "table"), default=d("json"))
    parser.add_argument("--output", default=d(None), help="write the report here instead of stdout")
    parser.add_argument("--seed", type=int, default=d(0))
    parser.add_argument("--threads", type=int, default=d(1))
    parser.add_argument("--config", default=d(None), help="flat key = value file; flags override it")


COMMANDS: dict[str, Callable] = {}
_GLOBAL_DESTS = {"format", "output", "seed", "threads"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="typicality-lab", description=__doc__.strip().splitlines()[0])
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        COMMANDS[name] = func
        return p

    p = add("tail", cmd_tail, "two-sided binomial deviation tail")
    p.add_argument("--n", type=count_arg, default=10**10)
    p.add_argument("--p", type=real_arg)
    p.add_argument("--sigma", type=real_arg)

    p = add("wlln", cmd_wlln, "exact tails for a list of N")
    p.add_argument("--p", type=real_arg)
    p.add_argument("--ns", type=counts_arg)
    p.add_argument("--epsilon", type=real_arg)

    p = add("interval", cmd_interval, "confidence interval for P_spade")
    p.add_argument("--q", type=real_arg)
    p.add_argument("--n", type=count_arg)
    p.add_argument("--sigma", type=real_arg)
    p.add_argument("--method", choices=("approximate", "rigorous"), default="approximate")

    p = add("hypergeom", cmd_hypergeom, "hypergeometric pmf")
    p.add_argument("--m-spade", type=count_arg)
    p.add_argument("--m-heart", type=count_arg)
    p.add_argument("--draws", type=count_arg)
    p.add_argument("--k", type=count_arg)

    p = add("enumerate", cmd_enumerate, "enumerate all 2^n branches")
    _add_coin(p)
    p.add_argument("--n", type=count_arg)
    p.add_argument("--cap", type=count_arg, default=DEFAULT_ENUMERATION_CAP)

    p = add("typical", cmd_typical, "typical-set fractions")
    _add_coin(p)
    _add_measure(p)
    p.add_argument("--n", type=count_arg)
    p.add_argument("--epsilon", type=real_arg)
    p.add_argument("--center", type=real_arg)

    p = add("sample", cmd_sample, "sample spade counts")
    _add_coin(p)
    _add_measure(p)
    p.add_argument("--n", type=count_arg)
    p.add_argument("--count", type=count_arg, default=1)

    p = add("fit-f", cmd_fit_f, "fit f weights to an observed frequency")
    _add_coin(p)
    p.add_argument("--q", type=real_arg)

    p = add("mangle", cmd_mangle, "truncate branches outside sigma_max")
    _add_coin(p)
    p.add_argument("--n", type=count_arg)
    p.add_argument("--p", type=real_arg, help="reference probability (default |a|^2)")
    p.add_argument("--sigma-max", type=real_arg)
    p.add_argument("--renormalize", action="store_true")
    p.add_argument("--cap", type=count_arg, default=DEFAULT_ENUMERATION_CAP)

    for name, func, help_ in (
        ("cournot", cmd_cournot, "trial budget and sigma_max"),
        ("classify", cmd_classify, "negligibility class of a probability"),
    ):
        p = add(name, func, help_)
        p.add_argument("--atoms", type=count_arg, default=10**81)
        p.add_argument("--tratio", type=count_arg, default=10**62)
        p.add_argument("--method", choices=("gaussian", "hoeffding"), default="gaussian")
        if name == "classify":
            p.add_argument("--prob", type=prob_arg)

    p = add("repeat", cmd_repeat, "probability of at least one occurrence")
    p.add_argument("--prob", type=prob_arg)
    p.add_argument("--trials", type=count_arg)

    p = add("demo", cmd_demo, "replay a worked scenario")
    p.add_argument("scenario", nargs="?", help=", ".join(SCENARIOS))

    return parser


def read_config(path: str) -> dict[str, str]:
    """``key = value`` per line; ``#`` starts a comment; keys use option names."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError("config", f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = read_config(known.config)
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for target in [parser, *sub_action.choices.values()]:
        dests = {a.dest: a for a in target._actions}
        defaults = {}
        for key, value in cfg.items():
            action = dests.get(key)
            if action is None or action.dest in ("help", "config"):
                continue
            if target is not parser and key in _GLOBAL_DESTS:
                continue
            if isinstance(action, argparse._StoreTrueAction):
                defaults[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                defaults[key] = action.type(value) if action.type else value
        target.set_defaults(**defaults)


# ---------------------------------------------------------------------------
# output


def _flatten(prefix: str, value, out: list):
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, out)
    elif isinstance(value, list) and value and isinstance(value[0], dict):
        pass
    elif isinstance(value, list):
        out.append((prefix, ";".join(str(v) for v in value)))
    else:
        out.append((prefix, value))


def format_report(report: Report, fmt: str) -> str:
    if fmt == "json":
        body = {
            "command": report.command,
            "parameters": report.parameters,
            "results": report.results,
            "paper_reference": report.paper_reference,
        }
        return json.dumps(body, indent=2) + "\n"
    if fmt == "csv":
        if report.table is not None:
            return export.write_csv(*report.table)
        rows: list = []
        _flatten("", report.results, rows)
        return export.write_csv(("key", "value"), rows)
    # table
    lines = [f"# {report.command}: {report.paper_reference}"]
    for k, v in report.parameters.items():
        lines.append(f"#   {k} = {v}")
    if report.table is not None:
        header, rows = report.table
        cells = [list(map(str, header))] + [[str(c) for c in r] for r in rows]
        widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
        for r in cells:
            lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    if isinstance(report.results, dict):
        flat: list = []
        _flatten("", report.results, flat)
        width = max((len(k) for k, _ in flat), default=0)
        for k, v in flat:
            lines.append(f"{k.ljust(width)}  {v}")
    return "\n".join(lines) + "\n"


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    """Parse ``argv``, dispatch, emit the report. Returns the exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return EXIT_VALIDATION if exc.code else EXIT_OK
        if args.command is None:
            parser.print_usage(stderr)
            print("typicality-lab: error: a subcommand is required", file=stderr)
            return EXIT_VALIDATION
        _check(args.threads >= 1, "threads", "must be >= 1")
        report = args.func(args)
    except ValidationError as exc:
        print(f"typicality-lab: error: {exc}", file=stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"typicality-lab: error: {exc}", file=stderr)
        return EXIT_VALIDATION
    except (TypicalityError, ArithmeticError, ValueError) as exc:
        param = getattr(exc, "param", None)
        where = f" (--{param.replace('_', '-')})" if param else ""
        print(f"typicality-lab: numeric error{where}: {exc}", file=stderr)
        return EXIT_NUMERIC
    text = format_report(report, args.format)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return EXIT_OK


def main() -> None:
    sys.exit(run())
