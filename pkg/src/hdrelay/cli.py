"""Command line: single-point capacities, parameter sweeps and coding simulations.

    hdrelay capacity bsc --eps 0 0
    hdrelay capacity awgn --snr-db 10 10
    hdrelay sweep bsc --grid 0 0.5 0.05 --curves capacity,conv --out bsc.csv
    hdrelay sweep awgn --grid 0 20 5 --snr-offset-db -10 --out awgn.csv
    hdrelay simulate run.json --out sim.csv

SNRs are given in dB here and converted to linear once, before any
library call.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import jsonschema

from . import awgn, bsc
from .coding import CodebookTooLarge, CodingConfig, ExperimentResult, run_experiment
from .probability import ConditionalPmf

CSV_SCHEMA_VERSION = 1
SIM_COLUMNS = ExperimentResult.CSV_FIELDS
CURVES = {"bsc": ("capacity", "conv"), "awgn": ("capacity", "conv", "gauss", "upper")}
SWEEP_PARAMETER = {"bsc": "p_eps", "awgn": "snr_db"}

BUDGETS = {
    "standard": awgn.SearchSpec(),
    "quick": awgn.SearchSpec(gap_multipliers=(1, 2), n_delta=6, delta_rtol=2e-2),
}

SIM_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["eps", "k", "n_trials"],
    "oneOf": [{"required": ["rate"]}, {"required": ["rate_fraction"]}],
    "properties": {
        "channel": {"const": "bsc"},
        "eps": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 0.5},
                "minItems": 2, "maxItems": 2},
        "k": {"oneOf": [{"type": "integer", "minimum": 1},
                        {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1}]},
        "rate": {"type": "number", "minimum": 0},
        "rate_fraction": {"type": "number", "minimum": 0},
        "p_u": {"type": "number", "minimum": 0, "maximum": 1},
        "n_blocks": {"type": "integer", "minimum": 1},
        "n_trials": {"type": "integer", "minimum": 1},
        "typicality_eps": {"type": "number", "exclusiveMinimum": 0},
        "relay_mode": {"enum": ["symbol_switching", "simultaneous_discard"]},
        "codebook_mode": {"enum": ["explicit", "ensemble"]},
        "max_codewords": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
    },
}


class UsageError(Exception):
    pass


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def fmt6(x) -> str:
    if isinstance(x, int) and not isinstance(x, bool):
        return str(x)
    return f"{x:.6g}"


def resolve_seed(cli_seed, config_seed=None) -> int:
    if cli_seed is not None:
        return cli_seed
    if config_seed is not None:
        return config_seed
    env = os.environ.get("HDRELAY_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"HDRELAY_SEED={env!r} is not an integer") from None
    return 0


def parse_curves(text: str, channel: str) -> list[str]:
    curves = [c.strip() for c in text.split(",") if c.strip()]
    if not curves:
        raise UsageError("--curves needs at least one curve")
    bad = [c for c in curves if c not in CURVES[channel]]
    if bad:
        raise UsageError(f"curves {bad} not available for {channel}; choose from {list(CURVES[channel])}")
    return curves


def grid_points(lo: float, hi: float, step: float) -> list[float]:
    if not step > 0:
        raise UsageError("grid step must be positive")
    if hi < lo:
        raise UsageError("grid upper end lies below the lower end")
    n = int(math.floor((hi - lo) / step + 1e-9))
    # rounding keeps 0.1-style steps from drifting
    return [round(lo + i * step, 12) for i in range(n + 1)]


# -- evaluations --------------------------------------------------------------


def bsc_point(e1: float, e2: float, curves) -> dict:
    pair = bsc.BscPair(e1, e2)
    out = {"channel": "bsc", "eps": [e1, e2]}
    if "capacity" in curves:
        sol = bsc.bsc_capacity(pair)
        out.update(sol.as_dict())
    if "conv" in curves:
        out["conv"] = bsc.bsc_conventional_rate(pair)
    return out


def awgn_point(snr1: float, snr2: float, curves, search: awgn.SearchSpec) -> dict:
    pair = awgn.AwgnPair(snr1, snr2)
    out = {"channel": "awgn", "snr": [snr1, snr2]}
    if "capacity" in curves:
        sol = awgn.awgn_capacity_lower(pair, search)
        out.update(sol.as_dict())
        out["bound"] = "lower"
        dist = sol.diagnostics.get("distribution")
        if dist is not None:
            out["distribution"] = dist.to_json()
    if "conv" in curves:
        out["conv"] = awgn.awgn_conventional_rate(pair)
    if "gauss" in curves:
        out["gauss"] = awgn.awgn_gaussian_input_rate(pair)
    if "upper" in curves:
        out["upper"] = awgn.awgn_upper_bound(pair)
    return out


def _sweep_row(job):
    channel, x, curves, offset_db, budget = job
    if channel == "bsc":
        res = bsc_point(x, x, curves)
    else:
        res = awgn_point(db_to_linear(x), db_to_linear(x + offset_db), curves, BUDGETS[budget])
    row = {SWEEP_PARAMETER[channel]: x}
    for c in curves:
        row[c] = res[c]
    return row


# -- output ---------------------------------------------------------------------


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt6(r[h]) for h in header])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_output(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    tmp = path.with_name(path.name + ".partial")
    try:
        with open(tmp, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


# -- commands -------------------------------------------------------------------


def cmd_capacity(args) -> int:
    curves = parse_curves(args.curves, args.channel) if args.curves else list(CURVES[args.channel])
    if args.channel == "bsc":
        if args.eps is None:
            raise UsageError("capacity bsc needs --eps E1 E2")
        res = bsc_point(args.eps[0], args.eps[1], curves)
    else:
        if args.snr_db is None:
            raise UsageError("capacity awgn needs --snr-db S1 S2")
        res = awgn_point(db_to_linear(args.snr_db[0]), db_to_linear(args.snr_db[1]), curves,
                         _search(args))
        res["snr_db"] = list(args.snr_db)
    res["schema_version"] = CSV_SCHEMA_VERSION
    write_output(json_text(res), args.out)
    return 0


def _search(args) -> awgn.SearchSpec:
    return replace(BUDGETS[args.budget], power_convention=args.power_convention)


def cmd_sweep(args) -> int:
    if args.grid is None:
        raise UsageError("sweep needs --grid LO HI STEP")
    curves = parse_curves(args.curves, args.channel) if args.curves is not None else list(CURVES[args.channel])
    xs = grid_points(*args.grid)
    if args.channel == "bsc" and (xs[0] < 0 or xs[-1] > 0.5):
        raise UsageError("BSC error probabilities must lie in [0, 0.5]")
    if args.power_convention != "active":
        raise UsageError("sweep uses the active-power convention; use capacity for the alternative")
    jobs = [(args.channel, x, curves, args.snr_offset_db, args.budget) for x in xs]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(j) for j in jobs]
    header = [SWEEP_PARAMETER[args.channel]] + curves
    if args.format == "csv":
        text = csv_text(header, rows)
    else:
        text = json_text({"schema_version": CSV_SCHEMA_VERSION, "columns": header, "rows": rows})
    write_output(text, args.out)
    return 0


def load_sim_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            cfg = json.load(f)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None
    errors = sorted(jsonschema.Draft202012Validator(SIM_SCHEMA).iter_errors(cfg), key=lambda e: list(e.path))
    if errors:
        lines = []
        for e in errors:
            where = "/".join(str(p) for p in e.path) or "(top level)"
            lines.append(f"  {where}: {e.message}")
        raise UsageError("invalid simulation config:\n" + "\n".join(lines))
    return cfg


def simulation_configs(raw: dict, seed: int) -> list[CodingConfig]:
    pair = bsc.BscPair(*raw["eps"])
    sol = bsc.bsc_capacity(pair)
    p_u = raw.get("p_u", sol.p_u_star)
    rate = raw["rate"] if "rate" in raw else raw["rate_fraction"] * sol.capacity
    ks = raw["k"] if isinstance(raw["k"], list) else [raw["k"]]
    extra = {key: raw[key] for key in ("n_blocks", "typicality_eps", "relay_mode", "codebook_mode", "max_codewords")
             if key in raw}
    return [CodingConfig(k=k, rate=rate, p_u=p_u, seed=seed, **extra) for k in ks]


def cmd_simulate(args) -> int:
    raw = load_sim_config(args.config)
    seed = resolve_seed(args.seed, raw.get("seed"))
    try:
        configs = simulation_configs(raw, seed)
    except CodebookTooLarge as exc:
        raise UsageError(f"refusing to build codebooks: {exc}") from None
    ch1, ch2 = ConditionalPmf.bsc(raw["eps"][0]), ConditionalPmf.bsc(raw["eps"][1])
    results = [run_experiment(c, ch1, ch2, raw["n_trials"]) for c in configs]
    rows = [r.csv_row() for r in results]
    if args.format == "csv":
        text = csv_text(SIM_COLUMNS, rows)
    else:
        for r, res in zip(rows, results):
            r.update(hd_violations=res.hd_violations, schedule_mismatch=res.schedule_mismatch,
                     effective_rate=float(res.effective_rate))
        text = json_text({"schema_version": CSV_SCHEMA_VERSION, "seed": seed, "rows": rows})
    write_output(text, args.out)
    violations = sum(r.hd_violations for r in results)
    if violations:
        print(f"error: {violations} half-duplex violations", file=sys.stderr)
        return 1
    return 0


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hdrelay", description="Half-duplex relay capacity tools.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt=True):
        sp.add_argument("--out", help="output file (default: stdout)")
        if fmt:
            sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--seed", type=int, help="master seed (fallback: $HDRELAY_SEED, then 0)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")

    def awgn_opts(sp):
        sp.add_argument("--budget", choices=sorted(BUDGETS), default="standard",
                        help="mass-point search budget")
        sp.add_argument("--power-convention", choices=("active", "average"), default="active")

    cap = sub.add_parser("capacity", help="evaluate one operating point, JSON to stdout")
    cap.add_argument("channel", choices=("bsc", "awgn"))
    cap.add_argument("--eps", type=float, nargs=2, metavar=("E1", "E2"))
    cap.add_argument("--snr-db", type=float, nargs=2, metavar=("S1", "S2"))
    cap.add_argument("--curves", help="comma-separated subset of capacity,conv,gauss,upper")
    common(cap, fmt=False)
    awgn_opts(cap)
    cap.set_defaults(func=cmd_capacity)

    sw = sub.add_parser("sweep", help="tabulate curves over a parameter grid")
    sw.add_argument("channel", choices=("bsc", "awgn"))
    sw.add_argument("--grid", type=float, nargs=3, metavar=("LO", "HI", "STEP"))
    sw.add_argument("--curves", help="comma-separated subset of capacity,conv,gauss,upper")
    sw.add_argument("--snr-offset-db", type=float, default=0.0,
                    help="relay-destination SNR minus source-relay SNR, dB")
    common(sw)
    awgn_opts(sw)
    sw.set_defaults(func=cmd_sweep)

    sim = sub.add_parser("simulate", help="Monte-Carlo run of the coding scheme")
    sim.add_argument("config", help="JSON experiment config")
    common(sim)
    sim.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
