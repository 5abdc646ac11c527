"""Command-line front end.

Market parameters come from a flat key-value config file (``key = value``
per line, ``#`` comments); run options can be overridden by flags, with
precedence flag > EIHLAB_SEED (seed only) > config > default.  Reports
are a single JSON object on stdout, tables are CSV with 17-significant-
digit floats; diagnostics go to stderr.  Exit codes: 0 pass, 1 fail,
2 usage error, 3 inconclusive.

Config schema::

    market.mu_i    = 0.06          # appreciation rates, per year
    market.mu_s    = 0.05
    market.sigma_i = 0.15, 0.05    # volatility vectors (required)
    market.sigma_s = 0.25, -0.10
    market.r       = 0.02          # interest rate
    market.t       = 10.0          # horizon, years
    run.seed       = 42
    run.n_paths    = 1000000
    run.n_steps    = 256
    run.delta      = 0.05
    run.eps        = 0.05
    run.measure    = physical      # or risk-neutral
    run.workers    = 1
    run.t_grid     = 2.5, 10, 40, 160
    run.trials     = 100           # lemma crosscheck triples
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import experiments
from .analytic import DigitalSpec, Direction, digital_price, thresholds
from .market import MarketParams, Measure, reduce_dimension, simulate_paths, simulate_terminal

DEFAULT_SEED = 42

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3

_RUN_DEFAULTS = {
    "run.seed": str(DEFAULT_SEED),
    "run.n_paths": "100000",
    "run.n_steps": "256",
    "run.delta": "0.05",
    "run.eps": "0.05",
    "run.measure": "physical",
    "run.workers": "1",
    "run.t_grid": "",
    "run.trials": "100",
    "market.mu_i": "0.0",
    "market.mu_s": "0.0",
    "market.r": "0.0",
    "market.t": "1.0",
}


class UsageError(Exception):
    pass


def _parse_config_text(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def load_config(path: str | None) -> dict[str, str]:
    values = dict(_RUN_DEFAULTS)
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                values.update(_parse_config_text(fh.read()))
        except OSError as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
    return values


def _vector(values: dict[str, str], key: str) -> np.ndarray:
    if key not in values:
        raise UsageError(f"missing required config field: {key}")
    try:
        return np.array([float(x) for x in values[key].split(",")])
    except ValueError as exc:
        raise UsageError(f"bad vector for {key}: {values[key]!r}") from exc


def _real(values: dict[str, str], key: str) -> float:
    try:
        out = float(values[key])
    except ValueError as exc:
        raise UsageError(f"bad number for {key}: {values[key]!r}") from exc
    if not math.isfinite(out):
        raise UsageError(f"{key} must be finite")
    return out


def market_from_config(values: dict[str, str]) -> MarketParams:
    try:
        return MarketParams(
            mu_i=_real(values, "market.mu_i"),
            mu_s=_real(values, "market.mu_s"),
            sigma_i=_vector(values, "market.sigma_i"),
            sigma_s=_vector(values, "market.sigma_s"),
            r=_real(values, "market.r"),
            t=_real(values, "market.t"),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _resolve_seed(args, values: dict[str, str]) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("EIHLAB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"EIHLAB_SEED must be an integer, got {env!r}") from exc
    return int(_real(values, "run.seed"))


def _apply_overrides(args, values: dict[str, str]) -> None:
    if getattr(args, "paths", None) is not None:
        values["run.n_paths"] = str(args.paths)
    if getattr(args, "steps", None) is not None:
        values["run.n_steps"] = str(args.steps)
    if getattr(args, "delta", None) is not None:
        values["run.delta"] = repr(args.delta)
    if getattr(args, "eps", None) is not None:
        values["run.eps"] = repr(args.eps)
    if getattr(args, "measure", None) is not None:
        values["run.measure"] = args.measure
    if getattr(args, "workers", None) is not None:
        values["run.workers"] = str(args.workers)
    if getattr(args, "t_grid", None) is not None:
        values["run.t_grid"] = args.t_grid


def _measure(values: dict[str, str]) -> Measure:
    tag = values["run.measure"].strip().lower().replace("-", "_")
    try:
        return Measure(tag)
    except ValueError as exc:
        raise UsageError(f"unknown measure: {values['run.measure']!r}") from exc


def _fmt(value) -> str:
    if isinstance(value, (bool, int, np.integer)):
        return str(value)
    return format(float(value), ".17g")


def write_csv(stream, header: list[str], rows: list[dict]) -> None:
    stream.write(",".join(header) + "\n")
    for row in rows:
        stream.write(",".join(_fmt(row[name]) for name in header) + "\n")


def _emit(text: str, out_path: str | None) -> None:
    sys.stdout.write(text)
    if out_path:
        try:
            with open(out_path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise UsageError(f"cannot write {out_path}: {exc}") from exc


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _csv_text(header: list[str], rows: list[dict]) -> str:
    import io

    buf = io.StringIO()
    write_csv(buf, header, rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Subcommands


def cmd_price(args) -> int:
    values = load_config(args.config)
    _apply_overrides(args, values)
    params = market_from_config(values)
    delta = _real(values, "run.delta")
    reduced = reduce_dimension(params)
    try:
        a, b = thresholds(reduced, params.t, delta)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    price_low = digital_price(reduced, DigitalSpec.at_level(Direction.AT_MOST, a), params.t)
    price_high = digital_price(reduced, DigitalSpec.at_level(Direction.AT_LEAST, b), params.t)
    payload = {
        "schema_version": 1,
        "delta": delta,
        "threshold_a": a,
        "threshold_b": b,
        "price_at_most_a": price_low,
        "price_at_least_b": price_high,
        "total_price": price_low + price_high,
    }
    _emit(_json_text(payload), args.out)
    return EXIT_PASS


def cmd_thresholds(args) -> int:
    values = load_config(args.config)
    _apply_overrides(args, values)
    params = market_from_config(values)
    delta = _real(values, "run.delta")
    try:
        a, b = thresholds(reduce_dimension(params), params.t, delta)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    payload = {"schema_version": 1, "delta": delta, "a": a, "b": b,
               "log_a": math.log(a), "log_b": math.log(b)}
    _emit(_json_text(payload), args.out)
    return EXIT_PASS


def cmd_simulate(args) -> int:
    values = load_config(args.config)
    _apply_overrides(args, values)
    params = market_from_config(values)
    seed = _resolve_seed(args, values)
    measure = _measure(values)
    if args.steps is not None:
        n_steps = int(_real(values, "run.n_steps"))
        batch = simulate_paths(params, measure, n_steps, 1, seed)
        rows = [
            {"time": t, "index": i, "stock": s}
            for t, i, s in zip(batch.times, batch.index_values[0], batch.stock_values[0])
        ]
        _emit(_csv_text(["time", "index", "stock"], rows), args.out)
    else:
        n_paths = int(_real(values, "run.n_paths"))
        terminal = simulate_terminal(params, measure, n_paths, seed)
        rows = [
            {"path": k, "index_terminal": i, "stock_terminal": s}
            for k, (i, s) in enumerate(zip(terminal.index, terminal.stock))
        ]
        _emit(_csv_text(["path", "index_terminal", "stock_terminal"], rows), args.out)
    return EXIT_PASS


def _experiment_config(args, values: dict[str, str], proposition: str) -> experiments.ExperimentConfig:
    try:
        return experiments.ExperimentConfig(
            params=market_from_config(values),
            delta=_real(values, "run.delta"),
            eps=_real(values, "run.eps"),
            n_paths=int(_real(values, "run.n_paths")),
            seed=_resolve_seed(args, values),
            proposition=proposition,
            n_steps=int(_real(values, "run.n_steps")),
            n_workers=int(_real(values, "run.workers")),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


_VERIFIERS = {
    "two_sided": experiments.verify_two_sided,
    "mu_bis": experiments.verify_capm,
    "index": experiments.verify_index_premium,
}


def cmd_verify(args) -> int:
    values = load_config(args.config)
    _apply_overrides(args, values)
    if args.prop not in _VERIFIERS:
        raise UsageError(
            f"unknown proposition {args.prop!r}; expected one of {sorted(_VERIFIERS)}"
        )
    config = _experiment_config(args, values, args.prop)
    report = _VERIFIERS[args.prop](config)
    _emit(_json_text(experiments.report_to_dict(config, report)), args.out)
    print(f"runtime: {report.runtime_seconds:.2f}s", file=sys.stderr)
    if report.verdict == experiments.PASS:
        return EXIT_PASS
    if report.verdict == experiments.INCONCLUSIVE:
        return EXIT_INCONCLUSIVE
    return EXIT_FAIL


def cmd_hedge(args) -> int:
    values = load_config(args.config)
    _apply_overrides(args, values)
    config = _experiment_config(args, values, "hedging")
    rows = experiments.hedging_fidelity_study(config)
    header = ["n_steps", "median_abs_error", "rms_error", "max_abs_error",
              "analytic_negative_count", "hedged_negative_fraction", "hedged_min_wealth"]
    _emit(_csv_text(header, rows), args.out)
    return EXIT_PASS


def cmd_table(args) -> int:
    values = load_config(args.config)
    _apply_overrides(args, values)
    params = market_from_config(values)
    seed = _resolve_seed(args, values)
    delta = _real(values, "run.delta")
    eps = _real(values, "run.eps")
    n_workers = int(_real(values, "run.workers"))
    if args.study == "convergence":
        grid_text = values["run.t_grid"].strip()
        if not grid_text:
            raise UsageError("convergence table needs run.t_grid (or --t-grid)")
        t_grid = [float(x) for x in grid_text.split(",")]
        try:
            study = experiments.capm_convergence_study(
                params, delta, eps, t_grid,
                n_paths=int(_real(values, "run.n_paths")), seed=seed, n_workers=n_workers,
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        header = ["horizon", "width_mu_bis", "width_index", "width_capm1",
                  "width_capm_final", "tpd_mc_mean", "tpd_target", "tpd_se"]
        for name, slope in study.slopes.items():
            print(f"log-log slope {name}: {slope:.12f}", file=sys.stderr)
        _emit(_csv_text(header, study.rows), args.out)
        return EXIT_PASS
    if args.study == "lemma":
        try:
            rows = experiments.lemma_crosscheck(
                int(_real(values, "run.trials")), seed,
                n_mc=int(_real(values, "run.n_paths")),
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        header = ["u1", "u2", "v1", "v2", "c", "closed_form", "quadrature",
                  "abs_gap", "mc_mean", "mc_se"]
        _emit(_csv_text(header, rows), args.out)
        return EXIT_PASS
    if args.study == "hedging":
        return cmd_hedge(args)
    raise UsageError(f"unknown study: {args.study!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eihlab",
        description="Digital-claim strategies on an index: pricing, simulation, verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", metavar="PATH", help="flat key-value config file")
        p.add_argument("--seed", type=int, metavar="U64")
        p.add_argument("--paths", type=int, metavar="N")
        p.add_argument("--steps", type=int, metavar="N")
        p.add_argument("--delta", type=float, metavar="F")
        p.add_argument("--eps", type=float, metavar="F")
        p.add_argument("--out", metavar="PATH", help="also write the report here")
        p.add_argument("--measure", choices=["physical", "risk-neutral"])
        p.add_argument("--workers", type=int, metavar="N")

    p = sub.add_parser("price", help="thresholds and digital component prices")
    add_common(p)
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("thresholds", help="band edges for a given delta")
    add_common(p)
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("simulate", help="terminal pairs (or one path with --steps)")
    add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("hedge", help="discrete replication fidelity table")
    add_common(p)
    p.set_defaults(func=cmd_hedge)

    p = sub.add_parser("verify", help="run a proposition experiment")
    add_common(p)
    p.add_argument("--prop", required=True, metavar="NAME",
                   help="two_sided, mu_bis, or index")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("table", help="emit a study as CSV")
    add_common(p)
    p.add_argument("--study", required=True, choices=["convergence", "lemma", "hedging"])
    p.add_argument("--t-grid", dest="t_grid", metavar="T1,T2,...")
    p.set_defaults(func=cmd_table)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
