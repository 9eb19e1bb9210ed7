"""Command-line entry point: simulate, verify suites, and AIG fixtures.

Exit codes: 0 pass, 1 verification failure, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import duality as dl
from .ancestry import compatible_set_bruteforce, run_configuration_process
from .combinatorics import SelectionRates, verify_replacement_identity
from .cylinders import Cylinder, union_configs
from .fixtures import BUNDLED, AIGFixture, FixtureError, load_bundled, random_fixture, record_fixture, replay
from .frankenstein import induced_rate_check, r_counting_generator, simulate_dual_counts
from .model import ModelParams, simulate_counts
from .reference_tables import check_exception_table, check_match_tables, check_matching_properties

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

DEFAULT_CONFIG: dict[str, Any] = {
    "seed": 0,
    "model": {"N": 5, "r": 1.0, "kappa": 0.5, "s": [0.3, 0.1], "u": 0.2, "nu0": 0.5, "nu1": None},
    "sde": {"r": 0.5, "kappa": 0.5, "sigma": [], "theta": 0.0, "nu0": 0.5, "nu1": None},
    "simulate": {"horizon": 1.0, "i0": 2, "n0": 3, "x0": 0.3, "dt": 0.001},
    "duality_exact": {"N_list": [3, 5, 8], "t_grid": [0.1, 0.5, 1.0, 2.0], "tol": 1e-10, "expm_tol": 1e-13},
    "duality_mc": {"t": 1.0, "i": 2, "n": 3, "replicates": 20000},
    "compat_oracle": {"count": 200, "max_N": 6, "max_events": 8},
    "rates": {"max_N": 5, "s": [0.3, 0.1, 0.05]},
    "identity": {"max_N": 8, "max_M": 4},
    "path_average": {"count": 100, "max_N": 5, "max_events": 6, "max_interactive": 3,
                     "kinds": ["neutral", "interactive", "interactive", "selective", "mut_del", "mut_ben"]},
    "sde_duality": {"x0": [0.3, 0.7], "n0": [1, 2, 5], "t": 1.0, "replicates": 100000,
                    "dt": 0.001, "dt_check": True},
    "generator_convergence": {
        "N_list": [50, 100, 200, 400], "k": 10, "max_slope": -0.8,
        "sde": {"r": 1.0, "kappa": 1.0, "sigma": [0.5, 0.3], "theta": 0.4, "nu0": 0.5, "nu1": None},
    },
    "fixture": {"root": [1, 2], "horizon": 1.0, "t": None},
}

SUITES = ("duality-exact", "duality-mc", "frankenstein-tables", "compat-oracle", "rates",
          "identity", "path-average", "sde-duality", "generator-convergence")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


def merge_config(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where!r} must be an object")
            out[key] = merge_config(base[key], value, where + ".")
        else:
            out[key] = value
    return out


def apply_set(config: dict, assignment: str) -> dict:
    if "=" not in assignment:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    dotted, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    override: dict = {}
    node = override
    keys = dotted.split(".")
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value
    return merge_config(config, override)


def load_config(path: str | None, sets: list[str], seed: int | None) -> dict:
    config = copy.deepcopy(DEFAULT_CONFIG)
    if path:
        try:
            doc = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        config = merge_config(config, doc)
    for s in sets:
        config = apply_set(config, s)
    if seed is not None:
        config["seed"] = seed
    if not isinstance(config["seed"], int) or isinstance(config["seed"], bool) or config["seed"] < 0:
        raise ConfigError("seed must be a nonnegative integer")
    # parameter sections are checked up front, whatever the command uses
    model_from(config["model"])
    sde_from(config["sde"])
    sde_from(config["generator_convergence"]["sde"])
    return config


def model_from(cfg: dict, **changes) -> ModelParams:
    d = {**cfg, **changes}
    try:
        return ModelParams(int(d["N"]), r=d["r"], kappa=d["kappa"], s=SelectionRates(tuple(d["s"])),
                           u=d["u"], nu0=d["nu0"], nu1=d["nu1"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model parameters: {exc}") from exc


def sde_from(cfg: dict) -> dl.SDEParams:
    try:
        return dl.SDEParams(r=float(cfg["r"]), kappa=float(cfg["kappa"]), sigma=tuple(cfg["sigma"]),
                            theta=float(cfg["theta"]), nu0=float(cfg["nu0"]),
                            nu1=None if cfg["nu1"] is None else float(cfg["nu1"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid SDE parameters: {exc}") from exc


def _seeds(seed: int, k: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(k)]


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    return x


def dumps(doc) -> str:
    return json.dumps(_jsonable(doc), indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# suites


def suite_duality_exact(cfg: dict, jobs: int) -> tuple[bool, dict, dict[str, str]]:
    c = cfg["duality_exact"]
    results, csvs = [], {}
    for N in c["N_list"]:
        rep = dl.check_factorial_duality(model_from(cfg["model"], N=N), c["t_grid"], c["tol"], c["expm_tol"])
        results.append({"N": N, "max_residual": rep.max_residual, "passed": rep.passed})
        csvs[f"duality-exact-N{N}.csv"] = rep.to_csv(SCHEMA_VERSION)
    return all(r["passed"] for r in results), {"tol": c["tol"], "results": results}, csvs


def suite_duality_mc(cfg: dict, jobs: int):
    c = cfg["duality_mc"]
    params = model_from(cfg["model"])
    rep = dl.mc_factorial_duality(params, c["t"], c["i"], c["n"], c["replicates"], cfg["seed"], jobs)
    row = rep.rows[0]
    exact = dl.lhs_factorial(params, c["t"], c["i"], c["n"])
    checks = {
        "mc_lhs_vs_rhs": row["residual"] <= 4 * math.hypot(row["se_lhs"], row["se_rhs"]),
        "mc_lhs_vs_exact": abs(row["lhs"] - exact) <= 4 * row["se_lhs"] or row["lhs"] == exact,
        "mc_rhs_vs_exact": abs(row["rhs"] - exact) <= 4 * row["se_rhs"] or row["rhs"] == exact,
    }
    return all(checks.values()), {"exact": exact, "report": rep.to_dict(), "checks": checks}, \
        {"duality-mc.csv": rep.to_csv(SCHEMA_VERSION)}


def suite_frankenstein_tables(cfg: dict, jobs: int):
    parts = {"exception_table": check_exception_table(), "matching_tables": check_match_tables(),
             "matching_properties": check_matching_properties()}
    summary = {k: {"rows": len(v), "failures": [r for r in v if not r["ok"]]} for k, v in parts.items()}
    return all(not s["failures"] for s in summary.values()), summary, {}


def suite_compat_oracle(cfg: dict, jobs: int):
    c = cfg["compat_oracle"]
    mismatches = []
    sizes = []
    for k, seed in enumerate(_seeds(cfg["seed"], c["count"])):
        fx = random_fixture(seed, max_N=c["max_N"], max_events=c["max_events"])
        aig = fx.aig()
        S = Cylinder.all_r(fx.root)
        leaves = sorted(aig.leaves)
        got = union_configs(run_configuration_process(S, aig), leaves)
        want = compatible_set_bruteforce(aig, S)
        sizes.append(len(leaves))
        if got != want:
            mismatches.append({"fixture": k, "doc": fx.to_dict()})
    return not mismatches, {"fixtures": c["count"], "max_leaves": max(sizes, default=0),
                            "mismatches": mismatches}, {}


def suite_rates(cfg: dict, jobs: int):
    c = cfg["rates"]
    failures, checked = [], 0
    for N in range(1, c["max_N"] + 1):
        params = model_from(cfg["model"], N=N, s=c["s"])
        for n in range(1, N + 1):
            for stars in range(0, N - n + 1):
                for row in induced_rate_check(params, n, stars):
                    checked += 1
                    if not row["equal"]:
                        failures.append({"N": N, "stars": stars, **row})
        A = dl.dual_generator_from_parts(params).matrix
        B = r_counting_generator(params, exact=True).matrix
        if not (A == B).all():
            failures.append({"N": N, "generator": "dual generator differs from its parts"})
    return not failures, {"rows_checked": checked, "failures": failures}, {}


IDENTITY_S = (Fraction(1, 2), Fraction(1, 3), Fraction(1, 5), Fraction(1, 7))


def suite_identity(cfg: dict, jobs: int):
    c = cfg["identity"]
    failures, checked = [], 0
    for M in range(1, c["max_M"] + 1):
        s = SelectionRates(IDENTITY_S[:M])
        for N in range(1, c["max_N"] + 1):
            for n in range(0, N + 1):
                for k in range(1, N - n + 1):
                    ok, diff = verify_replacement_identity(N, n, k, s)
                    checked += 1
                    if not ok:
                        failures.append({"M": M, "N": N, "n": n, "k": k, "residual": str(diff)})
    return not failures, {"cases": checked, "failures": failures}, {}


def path_average_fixtures(cfg: dict) -> list[AIGFixture]:
    c = cfg["path_average"]
    out = [load_bundled(name) for name in BUNDLED]
    for seed in _seeds(cfg["seed"], c["count"]):
        out.append(random_fixture(seed, max_N=c["max_N"], max_events=c["max_events"],
                                  max_interactive=c["max_interactive"], kinds=tuple(c["kinds"])))
    return out


def suite_path_average(cfg: dict, jobs: int):
    rows = []
    for k, fx in enumerate(path_average_fixtures(cfg)):
        backward = fx.backward()
        for i in range(fx.N + 1):
            rep = dl.check_path_average_identity(fx.root, backward, fx.N, i)
            rows.append({"fixture": fx.name or k, "N": fx.N, **rep.to_dict()})
    failures = [r for r in rows if not r["passed"]]
    summary = {
        "cases": len(rows),
        "failures": failures,
        "pathwise_theta_equals_frankenstein": sum(r["pathwise_equal"] for r in rows),
        "bundled": [r for r in rows if r["fixture"] in BUNDLED],
    }
    return not failures, summary, {}


def suite_sde_duality(cfg: dict, jobs: int):
    c = cfg["sde_duality"]
    sp = sde_from(cfg["sde"])
    seeds = iter(_seeds(cfg["seed"], len(c["x0"]) + len(c["n0"]) + 1))
    xs = {x0: dl.simulate_sde(sp, x0, c["t"], c["dt"], next(seeds), c["replicates"]) for x0 in c["x0"]}
    zs = {n0: dl.simulate_Z_limit(sp, n0, c["t"], next(seeds), c["replicates"]) for n0 in c["n0"]}
    rows = []
    for x0 in c["x0"]:
        for n0 in c["n0"]:
            rep = dl.check_moment_duality_mc(sp, x0, n0, c["t"], c["replicates"], cfg["seed"], c["dt"],
                                             sde_samples=xs[x0], z_samples=zs[n0])
            row = rep.rows[0]
            row["passed"] = row["residual"] < 4 * math.hypot(row["se_lhs"], row["se_rhs"])
            rows.append(row)
    passed = all(r["passed"] for r in rows)
    out: dict = {"params": sp.to_dict(), "replicates": c["replicates"], "rows": rows}
    if c["dt_check"] and c["x0"] and c["n0"]:
        x0, n0 = c["x0"][0], c["n0"][0]
        half = dl.simulate_sde(sp, x0, c["t"], c["dt"] / 2, next(seeds), c["replicates"])
        a, b = xs[x0] ** n0, half ** n0
        se = math.hypot(a.std(ddof=1), b.std(ddof=1)) / math.sqrt(len(a))
        delta = abs(float(a.mean() - b.mean()))
        out["dt_halving"] = {"x0": x0, "n0": n0, "dt": c["dt"], "abs_change": delta,
                             "combined_se": se, "passed": delta < 4 * se}
        passed &= out["dt_halving"]["passed"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(("schema_version",) + dl.REPORT_COLUMNS)
    for r in rows:
        w.writerow([SCHEMA_VERSION] + [repr(r[k]) if isinstance(r[k], float) else r[k]
                                       for k in dl.REPORT_COLUMNS])
    return passed, out, {"sde-duality.csv": buf.getvalue()}


def suite_generator_convergence(cfg: dict, jobs: int):
    c = cfg["generator_convergence"]
    rep = dl.generator_convergence_report(sde_from(c["sde"]), c["N_list"], k=c["k"], max_slope=c["max_slope"])
    return rep["passed"], rep, {}


SUITE_FUNCS: dict[str, Callable] = {
    "duality-exact": suite_duality_exact,
    "duality-mc": suite_duality_mc,
    "frankenstein-tables": suite_frankenstein_tables,
    "compat-oracle": suite_compat_oracle,
    "rates": suite_rates,
    "identity": suite_identity,
    "path-average": suite_path_average,
    "sde-duality": suite_sde_duality,
    "generator-convergence": suite_generator_convergence,
}


# ---------------------------------------------------------------------------
# commands


def _write(out: str | None, name: str, text: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    (d / name).write_text(text, newline="")


def _csv(header: tuple, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(("schema_version",) + header)
    for r in rows:
        w.writerow([SCHEMA_VERSION] + [repr(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def cmd_simulate(cfg: dict, args) -> int:
    c = cfg["simulate"]
    params = model_from(cfg["model"])
    sp = sde_from(cfg["sde"])
    T = float(c["horizon"])
    if T < 0 or not 0 <= c["i0"] <= params.N or not 0 <= c["n0"] <= params.N or not 0 <= c["x0"] <= 1:
        raise ConfigError("simulate: need horizon >= 0, 0 <= i0, n0 <= N and x0 in [0, 1]")
    s = _seeds(cfg["seed"], 4)
    files = {
        "x_counts.csv": _csv(("t", "n_unfit"), simulate_counts(params, c["i0"], T, s[0])),
        "z_counts.csv": _csv(("t", "state"), simulate_dual_counts(params, c["n0"], T, s[1])),
        "sde.csv": _csv(("t", "x"), dl.sde_path(sp, c["x0"], T, c["dt"], s[2])),
        "z_limit.csv": _csv(("t", "state"), dl.z_limit_path(sp, c["n0"], T, s[3])),
    }
    if args.out is None:
        for name, text in files.items():
            sys.stdout.write(f"# {name}\n{text}")
    else:
        for name, text in files.items():
            _write(args.out, name, text)
    return EXIT_OK


def cmd_verify(cfg: dict, args) -> int:
    passed, results, csvs = SUITE_FUNCS[args.suite](cfg, args.jobs)
    doc = {"schema_version": SCHEMA_VERSION, "suite": args.suite, "passed": bool(passed),
           "seed": cfg["seed"], "results": results}
    if args.format == "csv" and csvs:
        for name, text in csvs.items():
            _write(args.out, name, text)
        if args.out is not None:
            _write(args.out, f"{args.suite}.json", dumps(doc))
    else:
        _write(args.out, f"{args.suite}.json", dumps(doc))
    return EXIT_OK if passed else EXIT_FAIL


def cmd_fixture(cfg: dict, args) -> int:
    if args.action == "record":
        c = cfg["fixture"]
        params = model_from(cfg["model"])
        try:
            fx = record_fixture(params, float(c["horizon"]), c["root"], cfg["seed"], c["t"])
        except ValueError as exc:
            raise ConfigError(f"fixture record: {exc}") from exc
        _write(args.out, f"fixture-seed{cfg['seed']}.json", fx.to_json())
        return EXIT_OK
    if args.bundled:
        fx = load_bundled(args.bundled)
    else:
        if not args.path:
            raise ConfigError("fixture replay needs a path or --bundled NAME")
        try:
            text = Path(args.path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read fixture: {exc}") from exc
        fx = AIGFixture.from_json(text)
    ok, diffs = replay(fx)
    _write(args.out, "replay.json", dumps({"schema_version": SCHEMA_VERSION, "fixture": fx.name,
                                           "passed": ok, "differences": diffs}))
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config document")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config value (dotted key, JSON value)")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes")
    common.add_argument("--out", metavar="DIR", help="output directory (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = argparse.ArgumentParser(prog="moran-duality", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="write trajectory CSVs")
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", choices=SUITES)
    f = sub.add_parser("fixture", parents=[common], help="record or replay AIG fixtures")
    f.add_argument("action", choices=("record", "replay"))
    f.add_argument("path", nargs="?", help="fixture file to replay")
    f.add_argument("--bundled", choices=BUNDLED, help="replay a bundled fixture")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        cfg = load_config(args.config, args.set, args.seed)
        command = {"simulate": cmd_simulate, "verify": cmd_verify, "fixture": cmd_fixture}[args.command]
        return command(cfg, args)
    except (ConfigError, FixtureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, TypeError, KeyError) as exc:
        print(f"error: invalid configuration value: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
