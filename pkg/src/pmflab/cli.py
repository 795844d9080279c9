"""Command-line front end.

Subcommands: estimate, risk, worstcase, solve, sweep, verify.  Reports are
JSON (schema in reports.py); sweeps are CSV with a comment line echoing the
config hash.  Exit codes: 0 all checks pass, 1 any check failed, 2 config or
IO error.  A --config JSON file overrides flag values.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .asymptotics import (
    exact_l2_risk_table,
    gap_bound,
    mass_risk_curve,
    plugin_risk_curve,
    rate_constants,
)
from .core import Counts, JointCounts, LossExponent, Pmf
from .estimators import EmptySample, joint_composition, conditional_composition
from .game import fictitious_play, geometric_sizes, solve_risk_table
from .reports import CheckRecord, ConfigError, ExperimentConfig, Report
from .risk import (
    DEFAULT_OUTCOME_CAP,
    CapExceeded,
    exact_risk_joint,
    exact_risk_univariate,
    mc_risk,
    worst_case_risk,
    worst_case_risk_joint,
    worst_case_risk_joint_limit,
)
from .verify import SUITE_NAMES, family_by_name, run_suite

__all__ = ["main", "entry", "build_parser", "read_labeled_csv", "read_unlabeled_csv"]


# ---------------------------------------------------------------------------
# dataset ingestion


class CsvFormatError(ConfigError):
    """Malformed dataset file; the message carries file and line number."""


def _read_symbol_rows(path: str, header: list[str], alphabet: list[int]) -> list[tuple[int, ...]]:
    """Parse a symbol CSV with the exact expected header.

    Alphabet sizes are declared, never inferred; any symbol outside
    [0, size) is rejected with its line number.
    """
    rows: list[tuple[int, ...]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        got = next(reader, None)
        if got is None:
            raise CsvFormatError(f"{path} line 1: empty file, expected header {','.join(header)!r}")
        if [c.strip() for c in got] != header:
            raise CsvFormatError(
                f"{path} line 1: expected header {','.join(header)!r}, got {','.join(got)!r}"
            )
        for lineno, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != len(header):
                raise CsvFormatError(
                    f"{path} line {lineno}: expected {len(header)} columns, got {len(cells)}"
                )
            symbols = []
            for name, cell, size in zip(header, cells, alphabet):
                text = cell.strip()
                try:
                    value = int(text)
                except ValueError:
                    raise CsvFormatError(
                        f"{path} line {lineno}: column {name!r} is not an integer: {text!r}"
                    ) from None
                if not 0 <= value < size:
                    raise CsvFormatError(
                        f"{path} line {lineno}: symbol {value} outside the declared "
                        f"alphabet [0, {size}) for column {name!r}"
                    )
                symbols.append(value)
            rows.append(tuple(symbols))
    return rows


def read_labeled_csv(path: str, k_x: int, k_y: int) -> JointCounts:
    """Labeled pairs: header `x,y`, integer symbols within the declared alphabets."""
    counts = np.zeros((k_x, k_y), dtype=int)
    for x, y in _read_symbol_rows(path, ["x", "y"], [k_x, k_y]):
        counts[x, y] += 1
    return JointCounts(counts)


def read_unlabeled_csv(path: str, k_x: int) -> Counts:
    """Unlabeled draws: header `x`."""
    counts = np.zeros(k_x, dtype=int)
    for (x,) in _read_symbol_rows(path, ["x"], [k_x]):
        counts[x] += 1
    return Counts(counts)


# ---------------------------------------------------------------------------
# parsing and config resolution


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pmflab",
        description="Exact-risk laboratory for pmf estimation under l_p^p loss.",
    )
    parser.add_argument("--version", action="version", version=f"pmflab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--p", type=float, default=2.0, help="loss exponent, p >= 2 (default 2)")
        sp.add_argument(
            "--kx", type=int, default=2, help="X alphabet size; the alphabet for univariate commands"
        )
        sp.add_argument("--ky", type=int, default=2, help="Y alphabet size")
        sp.add_argument("--m", type=int, default=2, help="labeled sample size")
        sp.add_argument("--n", type=int, default=4, help="unlabeled or univariate sample size")
        sp.add_argument("--seed", type=int, default=None, help="master seed for stochastic paths")
        sp.add_argument(
            "--cap", type=int, default=DEFAULT_OUTCOME_CAP, help="outcome enumeration budget"
        )
        sp.add_argument("--out", default=None, help="output path (default: stdout)")
        sp.add_argument("--config", default=None, help="JSON file whose values override flags")

    est = sub.add_parser("estimate", help="joint composition estimate from CSV datasets")
    est.add_argument("--labeled", required=True, help="CSV with header x,y")
    est.add_argument("--unlabeled", required=True, help="CSV with header x")
    est.add_argument(
        "--base",
        default="mle",
        choices=["mle", "add-constant", "uniform"],
        help="per-slice conditional rule",
    )
    common(est)

    risk = sub.add_parser("risk", help="exact or Monte Carlo risk of an estimator")
    risk.add_argument("--estimator", default="add-constant", choices=["mle", "add-constant", "uniform"])
    risk.add_argument("--truth", default=None, help="comma-separated pmf (default uniform)")
    risk.add_argument("--joint", action="store_true", help="joint composition risk at (m, n)")
    risk.add_argument("--method", default="auto", choices=["auto", "exact", "mc"])
    risk.add_argument("--draws", type=int, default=10**5, help="Monte Carlo sample count")
    common(risk)

    wc = sub.add_parser("worstcase", help="maximize exact risk over truths")
    wc.add_argument("--estimator", default="mle", choices=["mle", "add-constant", "uniform"])
    mode = wc.add_mutually_exclusive_group()
    mode.add_argument("--joint", action="store_true", help="joint composition at (m, n)")
    mode.add_argument(
        "--limit", action="store_true", help="joint composition in the large-n limit at labeled size m"
    )
    common(wc)

    solve = sub.add_parser("solve", help="bracket the minimax risk by fictitious play")
    solve.add_argument("--tol", type=float, default=1e-3, help="target bracket width")
    solve.add_argument("--max-iters", type=int, default=500)
    common(solve)

    sweep = sub.add_parser("sweep", help="emit CSV rows behind the rate plots")
    sweep.add_argument("--kind", required=True, choices=["rates", "hg", "gamma"])
    common(sweep)

    ver = sub.add_parser("verify", help="run a named invariant suite")
    ver.add_argument("--suite", required=True, choices=list(SUITE_NAMES))
    ver.add_argument("--draws", type=int, default=10**4, help="random draws for property checks")
    ver.add_argument("--datasets", type=int, default=10**3, help="random datasets for composition checks")
    common(ver)

    return parser


def _apply_config_file(args: argparse.Namespace) -> None:
    """Load --config JSON and let its entries win over command-line flags."""
    if not getattr(args, "config", None):
        return
    try:
        with open(args.config) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.config}: not valid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{args.config}: top level must be a JSON object")
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest in ("command", "config") or not hasattr(args, dest):
            raise ConfigError(f"{args.config}: key {key!r} is not an option of {args.command!r}")
        setattr(args, dest, value)


def _loss_of(args: argparse.Namespace) -> LossExponent:
    try:
        return LossExponent(float(args.p))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _alphabet(value: int, what: str) -> int:
    value = int(value)
    if value < 2:
        raise ConfigError(f"{what} must be at least 2, got {value}")
    return value


def _size(value: int, what: str) -> int:
    value = int(value)
    if value < 0:
        raise ConfigError(f"{what} cannot be negative, got {value}")
    return value


def _config_echo(args: argparse.Namespace, keys: tuple[str, ...]) -> ExperimentConfig:
    params = {key: getattr(args, key) for key in keys if getattr(args, key, None) is not None}
    return ExperimentConfig(command=args.command, params=params)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        print(text)


def _risk_payload(est) -> dict:
    payload = {"value": est.value, "method": est.method}
    if est.method == "monte-carlo":
        payload["ci_halfwidth"] = est.uncertainty
        payload["interval"] = list(est.interval)
    return payload


# ---------------------------------------------------------------------------
# handlers, one per subcommand


def _cmd_estimate(args: argparse.Namespace) -> Report:
    k_x = _alphabet(args.kx, "--kx")
    k_y = _alphabet(args.ky, "--ky")
    labeled = read_labeled_csv(args.labeled, k_x, k_y)
    unlabeled = read_unlabeled_csv(args.unlabeled, k_x)
    base = family_by_name(args.base, k_y)
    try:
        joint = joint_composition(base, unlabeled, labeled)
    except EmptySample as exc:
        raise ConfigError(str(exc)) from None
    conditional = conditional_composition(base, labeled)
    config = _config_echo(args, ("kx", "ky", "labeled", "unlabeled", "base", "seed"))
    report = Report(config=config, tool_version=__version__)
    report.results = {
        "labeled_counts": labeled.counts.tolist(),
        "unlabeled_counts": unlabeled.counts.tolist(),
        "joint": joint.probs.tolist(),
        "marginal_x": joint.marginal_x().probs.tolist(),
        "conditional": conditional.matrix.tolist(),
    }
    report.add(
        CheckRecord(
            "estimators/composition-output-valid",
            "pass" if abs(float(joint.probs.sum()) - 1.0) < 1e-12 else "fail",
            value=float(joint.probs.sum()),
            target=1.0,
            tolerance=1e-12,
        )
    )
    return report


def _parse_truth(text: str | None, k: int, what: str) -> Pmf:
    if text is None:
        return Pmf.uniform(k)
    try:
        values = [float(cell) for cell in text.split(",")]
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated floats, got {text!r}") from None
    if len(values) != k:
        raise ConfigError(f"{what}: expected {k} entries, got {len(values)}")
    try:
        return Pmf(np.array(values))
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from None


def _cmd_risk(args: argparse.Namespace) -> Report:
    loss = _loss_of(args)
    k_x = _alphabet(args.kx, "--kx")
    n = _size(args.n, "--n")
    cap = int(args.cap)
    config_keys = ("p", "kx", "ky", "m", "n", "seed", "cap", "estimator", "truth", "joint", "method", "draws")
    config = _config_echo(args, config_keys)
    report = Report(config=config, tool_version=__version__)

    if args.joint:
        k_y = _alphabet(args.ky, "--ky")
        m = _size(args.m, "--m")
        base = family_by_name(args.estimator, k_y)
        flat = _parse_truth(args.truth, k_x * k_y, "--truth").probs.reshape(k_x, k_y)
        p_xy = _joint_pmf(flat)
        est = _evaluate_risk(
            lambda: exact_risk_joint(base, p_xy, m, n, loss, cap=cap),
            lambda: mc_risk(base, p_xy, m, n, loss, draws=args.draws, seed=_need_seed(args)),
            args.method,
        )
    else:
        family = family_by_name(args.estimator, k_x)
        p_true = _parse_truth(args.truth, k_x, "--truth")
        est = _evaluate_risk(
            lambda: exact_risk_univariate(family.at(n), p_true, n, loss, cap=cap),
            lambda: mc_risk(family.at(n), p_true, None, n, loss, draws=args.draws, seed=_need_seed(args)),
            args.method,
        )
    report.results = {"risk": _risk_payload(est)}
    return report


def _joint_pmf(flat: np.ndarray):
    from .core import JointPmf

    try:
        return JointPmf(flat)
    except ValueError as exc:
        raise ConfigError(f"--truth: {exc}") from None


def _need_seed(args: argparse.Namespace) -> int:
    if args.seed is None:
        raise ConfigError("Monte Carlo evaluation is stochastic: pass --seed")
    return int(args.seed)


def _evaluate_risk(exact_fn, mc_fn, method: str):
    if method == "exact":
        try:
            return exact_fn()
        except CapExceeded as exc:
            raise ConfigError(f"{exc}; raise --cap or use --method mc") from None
    if method == "mc":
        return mc_fn()
    try:
        return exact_fn()
    except CapExceeded:
        return mc_fn()


def _cmd_worstcase(args: argparse.Namespace) -> Report:
    loss = _loss_of(args)
    k_x = _alphabet(args.kx, "--kx")
    cap = int(args.cap)
    config = _config_echo(args, ("p", "kx", "ky", "m", "n", "cap", "estimator", "joint", "limit"))
    report = Report(config=config, tool_version=__version__)

    if args.joint or args.limit:
        k_y = _alphabet(args.ky, "--ky")
        m = _size(args.m, "--m")
        base = family_by_name(args.estimator, k_y)
        if args.limit:
            found = worst_case_risk_joint_limit(base, k_x, m, loss, cap=cap)
        else:
            found = worst_case_risk_joint(base, k_x, m, _size(args.n, "--n"), loss, cap=cap)
        argmax = found.argmax.probs.tolist()
    else:
        family = family_by_name(args.estimator, k_x)
        n = _size(args.n, "--n")
        found = worst_case_risk(family.at(n), n, loss, cap=cap)
        argmax = found.argmax.probs.tolist()
    report.results = {"worst_case": {"value": found.risk.value, "argmax": argmax}}
    return report


_SOLVE_MAX_K = 4
_SOLVE_MAX_N = 12


def _cmd_solve(args: argparse.Namespace) -> Report:
    loss = _loss_of(args)
    k = _alphabet(args.kx, "--kx")
    n = _size(args.n, "--n")
    if k > _SOLVE_MAX_K:
        raise ConfigError(f"solve is desk-scale: k <= {_SOLVE_MAX_K}, got {k}")
    if n > _SOLVE_MAX_N:
        raise ConfigError(f"solve is desk-scale: n <= {_SOLVE_MAX_N}, got {n}")
    config = _config_echo(args, ("p", "kx", "n", "cap", "tol", "max_iters", "out"))
    report = Report(config=config, tool_version=__version__)

    bracket, estimator = fictitious_play(
        k, n, loss, max_iters=int(args.max_iters), tol=float(args.tol), cap=int(args.cap)
    )
    table_doc = {
        "schema_version": "1",
        "kind": "game-table",
        "k": k,
        "p": loss.p,
        "n": n,
        "lower": bracket.lower,
        "upper": bracket.upper,
        "iterations": bracket.iterations,
        "converged": bracket.converged,
        "outcomes": estimator.outcomes.tolist(),
        "estimates": estimator.estimates.tolist(),
    }
    out_path = args.out or f"game-k{k}-n{n}-p{loss.p:g}.json"
    with open(out_path, "w") as fh:
        json.dump(table_doc, fh, indent=2, sort_keys=True)

    report.results = {
        "bracket": {
            "lower": bracket.lower,
            "upper": bracket.upper,
            "width": bracket.width,
            "iterations": bracket.iterations,
        },
        "table_path": out_path,
    }
    report.add(
        CheckRecord(
            "minimax-game/bracket-valid",
            "pass" if bracket.lower <= bracket.upper + 1e-9 else "fail",
            value=[bracket.lower, bracket.upper],
            tolerance=1e-9,
        )
    )
    report.add(
        CheckRecord(
            "minimax-game/bracket-converged",
            "pass" if bracket.converged else "fail",
            value=bracket.width,
            target=float(args.tol),
            detail={"iterations": bracket.iterations},
        )
    )
    return report


def _doubling_grid(n_max: int, start: int = 4) -> list[int]:
    if n_max < start:
        raise ConfigError(f"sweep needs --n >= {start}, got {n_max}")
    grid = []
    n = start
    while n <= n_max:
        grid.append(n)
        n *= 2
    return grid


def _risk_table_for(loss: LossExponent, k: int, n_max: int, cap: int):
    if loss.p == 2.0:
        return exact_l2_risk_table(n_max, k)
    sizes = geometric_sizes(n_max)
    solved = solve_risk_table(
        k, n_max, loss, sizes=sizes, max_iters=150, rel_tol=0.08, cap=cap
    )
    return solved.table


def _cmd_sweep(args: argparse.Namespace) -> Report:
    loss = _loss_of(args)
    k = _alphabet(args.kx, "--kx")
    cap = int(args.cap)
    config = _config_echo(args, ("p", "kx", "ky", "m", "n", "cap", "kind"))
    report = Report(config=config, tool_version=__version__)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    buf.write(f"# pmflab sweep kind={args.kind} config={config.config_hash()}\n")

    if args.kind == "rates":
        grid = _doubling_grid(_size(args.n, "--n"))
        table = _risk_table_for(loss, k, grid[-1], cap)
        writer.writerow(["n", "r_lower", "r_upper", "scaled_mid"])
        for n in grid:
            lo, hi = table.entry(n)
            writer.writerow([n, f"{lo:.12g}", f"{hi:.12g}", f"{n ** (loss.p / 2) * (lo + hi) / 2:.12g}"])
        report.results = {"rows": len(grid)}
    elif args.kind == "hg":
        n = _size(args.n, "--n")
        if n < 8:
            raise ConfigError(f"hg sweep needs --n >= 8, got {n}")
        table = _risk_table_for(loss, k, n, cap)
        constants = rate_constants(table, loss)
        writer.writerow(["x", "h", "g", "rate_ratio"])
        for x in np.linspace(0.1, 0.9, 9):
            h = mass_risk_curve(x, n, loss, table)
            g = plugin_risk_curve(x, n, loss, table)
            ratio = h / (constants.c_mid * (x / n) ** (loss.p / 2))
            writer.writerow([f"{x:.2f}", f"{h:.12g}", f"{g:.12g}", f"{ratio:.12g}"])
        report.results = {"rows": 9, "c_mid": constants.c_mid}
    else:  # gamma
        k_y = _alphabet(args.ky, "--ky")
        grid = [2**e for e in range(4, 13)]
        writer.writerow(["n", "m", "limit_proxy", "pooled_proxy", "gamma"])
        for n in grid:
            m = max(2, int(round(math.sqrt(n))))
            limit_proxy, pooled_proxy = 1.0 / m, 1.0 / (m + n)
            writer.writerow(
                [n, m, f"{limit_proxy:.12g}", f"{pooled_proxy:.12g}",
                 f"{gap_bound(limit_proxy, pooled_proxy, loss, k_y):.12g}"]
            )
        report.results = {"rows": len(grid)}

    _emit(buf.getvalue(), args.out)
    report.results["out"] = args.out or "stdout"
    return report


def _cmd_verify(args: argparse.Namespace) -> Report:
    params = {
        "p": float(args.p),
        "kx": int(args.kx),
        "ky": int(args.ky),
        "m": int(args.m),
        "n": int(args.n),
        "cap": int(args.cap),
        "seed": args.seed,
        "draws": int(args.draws),
        "datasets": int(args.datasets),
    }
    if args.seed is None:
        raise ConfigError("verify runs randomized checks: pass --seed")
    config = ExperimentConfig(command="verify", params={"suite": args.suite, **params})
    report = Report(config=config, tool_version=__version__)
    for record in run_suite(args.suite, params):
        report.add(record)
    return report


_HANDLERS = {
    "estimate": _cmd_estimate,
    "risk": _cmd_risk,
    "worstcase": _cmd_worstcase,
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        _apply_config_file(args)
        report = _HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report.wall_clock = time.perf_counter() - started

    text = report.to_json()
    if args.command == "sweep":
        # the CSV already went to --out (or stdout); the report goes to stderr
        # so piping the sweep stays clean
        print(text, file=sys.stderr)
    else:
        _emit(text, args.out if args.command != "solve" else None)
    return report.exit_code()


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
