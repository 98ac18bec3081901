"""Scenario runner: parameter sweeps and analytic-vs-numeric comparison reports.

Configs are flat ``key = value`` text files with dotted keys (one scenario per
file). Every task writes one CSV plus one JSON sidecar carrying the metadata
(parameters, truncations, tolerances, schema version) and the comparison rows.
Output is deterministic: no timestamps, fixed column order, rows sorted by the
sweep value even when computed in parallel, floats at 17 significant digits.

Exit codes: 0 all comparisons pass, 1 a tolerance failed, 2 config error,
3 solver failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analytic, dynamics, meanfield, metrology
from .dynamics import SystemParams
from .errors import ConfigError, PdclabError
from .hilbert import expectation, number_operator

SCHEMA_VERSION = 1
TASKS = ("steady_moments", "qfi", "uncertainty", "meanfield", "gap", "occupation", "sensor")

_TASK_HELP = {
    "steady_moments": "signal occupation: moment series vs Liouvillian steady state",
    "qfi": "gamma_b=0 Gaussian QFI: closed form vs moment-family route",
    "uncertainty": "delta^2 g: closed form vs independently assembled route",
    "meanfield": "phase structure: branch existence / stability / critical drive",
    "gap": "Liouvillian spectral gap of the reduced model vs rate estimate",
    "occupation": "occupation regression: three-level closed form vs exact steady state",
    "sensor": "delta^2 lambda_a sweep with optimal-coupling check",
}

_PARAM_FIELDS = (
    "g",
    "lambda_a",
    "gamma_a",
    "gamma_b",
    "kappa_e",
    "nbar",
    "omega1",
    "omega2",
)

_DEFAULTS = {
    "truncation.signal_dim": 40,
    "truncation.pump_dim": 15,
    "tolerances.rel": 1e-6,
    "tolerances.floor": 1e-12,
}

OCCUPATION_GRID = (0.02, 0.05, 0.1, 0.2, 0.5)


@dataclass
class Scenario:
    name: str
    params: SystemParams
    tasks: list[str]
    sweep: tuple[str, tuple[float, ...]] | None = None
    signal_dim: int = 40
    pump_dim: int = 15
    rel_tol: float = 1e-6
    floor: float = 1e-12


@dataclass
class ComparisonRow:
    quantity: str
    analytic: float
    numeric: float
    rel_dev: float = field(init=False)
    passed: bool = field(init=False)
    tolerance: float = 1e-6

    def __post_init__(self):
        floor = 1e-12
        self.rel_dev = abs(self.analytic - self.numeric) / max(
            abs(self.analytic), floor
        )
        self.passed = self.rel_dev < self.tolerance


# --- config parsing -------------------------------------------------------------

def _parse_scalar(key: str, raw: str):
    raw = raw.strip()
    try:
        if key.startswith("truncation."):
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"cannot parse numeric value for {key}: {raw!r}") from None


def parse_config(path: str | Path, strict: bool = True) -> Scenario:
    """Read one scenario from a dotted-key config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    known_scalar = {f"params.{f}" for f in _PARAM_FIELDS} | set(_DEFAULTS)
    raw: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        raw[key] = value

    allowed = known_scalar | {"name", "tasks", "sweep.parameter", "sweep.values"}
    unknown = sorted(set(raw) - allowed)
    if unknown and strict:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

    params_kwargs = {}
    for f in _PARAM_FIELDS:
        key = f"params.{f}"
        if key in raw:
            params_kwargs[f] = _parse_scalar(key, raw[key])
    for required in ("g", "lambda_a", "gamma_a", "gamma_b"):
        if required not in params_kwargs:
            raise ConfigError(f"missing required key params.{required}")
    try:
        params = SystemParams(**params_kwargs)
    except ValueError as exc:
        raise ConfigError(f"invalid parameters: {exc}") from None

    tasks_raw = raw.get("tasks", "")
    tasks = [t.strip() for t in tasks_raw.split(",") if t.strip()]
    if not tasks:
        raise ConfigError("empty task list")
    for t in tasks:
        if t not in TASKS:
            raise ConfigError(f"unknown task {t!r} (choose from {', '.join(TASKS)})")

    sweep = None
    if "sweep.parameter" in raw or "sweep.values" in raw:
        if not ("sweep.parameter" in raw and "sweep.values" in raw):
            raise ConfigError("sweep needs both sweep.parameter and sweep.values")
        sweep_param = raw["sweep.parameter"].strip()
        if sweep_param not in _PARAM_FIELDS:
            raise ConfigError(f"sweep.parameter must be one of {_PARAM_FIELDS}")
        try:
            values = tuple(
                float(v) for v in raw["sweep.values"].replace(",", " ").split()
            )
        except ValueError:
            raise ConfigError("sweep.values must be a list of numbers") from None
        if not values:
            raise ConfigError("sweep.values is empty")
        if any(not math.isfinite(v) for v in values):
            raise ConfigError("sweep.values must be finite")
        sweep = (sweep_param, values)

    name = raw.get("name", path.stem).strip()
    if not name or not all(c.isalnum() or c in "-_" for c in name):
        raise ConfigError(f"scenario name must be alphanumeric/-/_: {name!r}")

    return Scenario(
        name=name,
        params=params,
        tasks=tasks,
        sweep=sweep,
        signal_dim=int(raw.get("truncation.signal_dim", _DEFAULTS["truncation.signal_dim"])),
        pump_dim=int(raw.get("truncation.pump_dim", _DEFAULTS["truncation.pump_dim"])),
        rel_tol=float(raw.get("tolerances.rel", _DEFAULTS["tolerances.rel"])),
        floor=float(raw.get("tolerances.floor", _DEFAULTS["tolerances.floor"])),
    )


def _with_value(params: SystemParams, name: str, value: float) -> SystemParams:
    kwargs = {f: getattr(params, f) for f in _PARAM_FIELDS}
    kwargs[name] = value
    return SystemParams(**kwargs)


def _sweep_points(scenario: Scenario) -> list[tuple[float, SystemParams]]:
    if scenario.sweep is None:
        return [(scenario.params.g, scenario.params)]
    name, values = scenario.sweep
    return [(v, _with_value(scenario.params, name, v)) for v in sorted(values)]


def _parallel(points, worker, threads: int):
    if threads <= 1 or len(points) <= 1:
        return [worker(pt) for pt in points]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, points))


# --- tasks ----------------------------------------------------------------------

def _task_occupation(scenario: Scenario, threads: int):
    base = scenario.params
    if scenario.sweep and scenario.sweep[0] == "g":
        grid = tuple(sorted(scenario.sweep[1]))
    else:
        grid = OCCUPATION_GRID

    def worker(g: float):
        p = _with_value(base, "g", g)
        nb_three = dynamics.three_level_occupation(p)
        nb_exact = analytic.moment_ss(1, 1, p).real
        rel = abs(nb_three - nb_exact) / max(abs(nb_exact), scenario.floor)
        return {"g": g, "Nb_three_level": nb_three, "Nb_exact": nb_exact, "rel_dev": rel}

    table = _parallel(list(grid), worker, threads)
    table.sort(key=lambda row: row["g"])
    devs = [row["rel_dev"] for row in table]
    monotone = all(a < b for a, b in zip(devs, devs[1:]))
    rows = [
        ComparisonRow(
            "occupation_rel_dev_strictly_decreasing_toward_small_g",
            1.0,
            1.0 if monotone else 0.0,
            tolerance=0.5,
        ),
        ComparisonRow(
            f"occupation_Nb_three_level@g={table[0]['g']:g}",
            table[0]["Nb_three_level"],
            table[0]["Nb_exact"],
            tolerance=0.02,
        ),
    ]
    return rows, ("g", "Nb_three_level", "Nb_exact", "rel_dev"), table


def _task_steady_moments(scenario: Scenario, threads: int):
    def worker(point):
        value, p = point
        series = analytic.moment_ss(1, 1, p).real
        result, dim = dynamics.auto_truncated_steady(
            lambda d: dynamics.build_reduced_model(p, d),
            start_dim=min(scenario.signal_dim, 24),
            max_dim=scenario.signal_dim,
        )
        numeric = expectation(number_operator(result.rho.space), result.rho).real
        rel = abs(series - numeric) / max(abs(series), scenario.floor)
        return {
            "value": value,
            "Nb_series": series,
            "Nb_liouville": numeric,
            "dim": dim,
            "rel_dev": rel,
        }

    table = _parallel(_sweep_points(scenario), worker, threads)
    table.sort(key=lambda row: row["value"])
    rows = [
        ComparisonRow(
            f"Nb_series_vs_liouville@{row['value']:g}",
            row["Nb_series"],
            row["Nb_liouville"],
            tolerance=scenario.rel_tol,
        )
        for row in table
    ]
    return rows, ("value", "Nb_series", "Nb_liouville", "dim", "rel_dev"), table


def _task_qfi(scenario: Scenario, threads: int):
    if scenario.params.gamma_b != 0 or scenario.params.kappa_e <= 0:
        raise ConfigError("qfi task needs gamma_b = 0 and kappa_e > 0")

    def worker(point):
        value, p = point

        # gamma_b = 0 steady state is a displaced vacuum: moments factorize,
        # so the Gaussian model carries the amplitude and a vacuum covariance
        def fam(g):
            amp = analytic.moment_gb0(0, 1, _with_value(p, "g", g))
            disp = np.array([math.sqrt(2.0) * amp.imag, math.sqrt(2.0) * amp.real])
            return metrology.GaussianMoments(disp, 0.5 * np.eye(2))

        closed = analytic.qfi_gb0_closed(p)
        numeric = metrology.qfi_gaussian_family(fam, p.g).value
        rel = abs(closed - numeric) / max(abs(closed), scenario.floor)
        return {"value": value, "F_closed": closed, "F_gaussian": numeric, "rel_dev": rel}

    table = _parallel(_sweep_points(scenario), worker, threads)
    table.sort(key=lambda row: row["value"])
    rows = [
        ComparisonRow(
            f"qfi_gaussian_vs_closed@{row['value']:g}",
            row["F_closed"],
            row["F_gaussian"],
            tolerance=max(scenario.rel_tol, 1e-5),
        )
        for row in table
    ]
    return rows, ("value", "F_closed", "F_gaussian", "rel_dev"), table


def _task_uncertainty(scenario: Scenario, threads: int):
    p = scenario.params

    def gb0_rows(point):
        value, pp = point
        d2 = analytic.delta2_g("gb0_kappa" if pp.kappa_e > 0 else "gb0", "photon", pp)
        if pp.kappa_e > 0:
            other = 1.0 / analytic.qfi_gb0_closed(pp)
            quantity = f"delta2_g_photon_vs_qcrb@{value:g}"
            tol = 1e-10
        else:
            other = pp.g**3 / pp.lambda_a
            quantity = f"delta2_g_photon_vs_scaling@{value:g}"
            tol = 1e-12
        return (
            ComparisonRow(quantity, d2.delta2, other, tolerance=tol),
            {"value": value, "delta2_closed": d2.delta2, "delta2_other": other},
        )

    def normal_rows(point):
        value, pp = point
        printed = meanfield.delta2_g_normal(pp, 0.0, "printed").delta2
        moments = meanfield.delta2_g_normal(pp, 0.0, "moments").delta2
        return (
            ComparisonRow(
                f"delta2_g_printed_vs_moments@{value:g}",
                printed,
                moments,
                tolerance=max(scenario.rel_tol, 1e-5),
            ),
            {"value": value, "delta2_closed": printed, "delta2_other": moments},
        )

    if p.gamma_b > 0 and p.nbar != 0:
        # the two routes coincide only for a zero-temperature bath
        raise ConfigError("uncertainty task compares routes at nbar = 0")
    worker = gb0_rows if p.gamma_b == 0 else normal_rows
    results = _parallel(_sweep_points(scenario), worker, threads)
    results.sort(key=lambda pair: pair[1]["value"])
    rows = [pair[0] for pair in results]
    table = [
        {
            "value": pair[1]["value"],
            "delta2_closed": pair[1]["delta2_closed"],
            "delta2_other": pair[1]["delta2_other"],
            "rel_dev": pair[0].rel_dev,
        }
        for pair in results
    ]
    return rows, ("value", "delta2_closed", "delta2_other", "rel_dev"), table


def _task_meanfield(scenario: Scenario, threads: int):
    def worker(point):
        value, pp = point
        lam_c = analytic.critical_lambda(pp)
        sols = meanfield.steady_solutions(pp)
        branches = sum(1 for s in sols if s.branch != "normal")
        normal_stable = meanfield.build_W(pp, sols[0]).stable
        above = pp.lambda_a > lam_c
        coherent = (branches == 2) == above and normal_stable == (not above)
        return {
            "value": value,
            "lambda_a": pp.lambda_a,
            "lambda_c": lam_c,
            "branches": branches,
            "normal_stable": normal_stable,
            "coherent": coherent,
        }

    table = _parallel(_sweep_points(scenario), worker, threads)
    table.sort(key=lambda row: row["value"])
    agreement = all(row["coherent"] for row in table)
    rows = [
        ComparisonRow(
            "phase_boundary_three_way_coherence",
            1.0,
            1.0 if agreement else 0.0,
            tolerance=0.5,
        )
    ]
    cols = ("value", "lambda_a", "lambda_c", "branches", "normal_stable", "coherent")
    return rows, cols, table


def _task_gap(scenario: Scenario, threads: int):
    def worker(point):
        value, pp = point
        gap = dynamics.spectral_gap(
            dynamics.build_reduced_model(pp, min(scenario.signal_dim, 24))
        )
        estimate = (
            2.0 * (pp.kappa + pp.kappa_e) if pp.gamma_b == 0 else pp.gamma_b
        )
        return {"value": value, "gap": gap, "rate_estimate": estimate}

    table = _parallel(_sweep_points(scenario), worker, threads)
    table.sort(key=lambda row: row["value"])
    rows = [
        ComparisonRow(
            f"gap_vs_rate_estimate@{row['value']:g}",
            row["rate_estimate"],
            row["gap"],
            # the estimate is a scale, not an identity: factor-2 agreement
            tolerance=1.0,
        )
        for row in table
    ]
    return rows, ("value", "gap", "rate_estimate"), table


def _task_sensor(scenario: Scenario, threads: int):
    p = scenario.params
    if p.gamma_b != 0:
        raise ConfigError("sensor task needs gamma_b = 0")
    if scenario.sweep and scenario.sweep[0] == "g":
        grid = tuple(sorted(scenario.sweep[1]))
    else:
        g_star = math.sqrt(p.gamma_a * p.kappa_e / 2.0) if p.kappa_e > 0 else p.g
        grid = tuple(g_star * f for f in (0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0))

    def worker(g: float):
        pp = _with_value(p, "g", g)
        d2, d2_nb, _ = analytic.lambda_sensor(pp)
        return {"g": g, "delta2_lambda": d2, "delta2_vs_Nb": d2_nb}

    table = _parallel(list(grid), worker, threads)
    table.sort(key=lambda row: row["g"])
    _, _, opt = analytic.lambda_sensor(_with_value(p, "g", grid[0]))

    # delta2_lambda * Nb = lambda_a^2 holds identically; report the worst point
    worst = max(
        table,
        key=lambda row: abs(row["delta2_lambda"] - row["delta2_vs_Nb"])
        / max(abs(row["delta2_lambda"]), scenario.floor),
    )
    rows = [
        ComparisonRow(
            f"sensor_identity_delta2_vs_Nb_route@g={worst['g']:g}",
            worst["delta2_lambda"],
            worst["delta2_vs_Nb"],
            tolerance=1e-12,
        )
    ]
    if p.kappa_e > 0:
        best = min(table, key=lambda row: row["delta2_lambda"])
        g_true = math.sqrt(p.gamma_a * p.kappa_e / 2.0)
        spacing = max(
            abs(b["g"] - a["g"]) for a, b in zip(table, table[1:])
        ) if len(table) > 1 else abs(best["g"])
        rows.append(
            ComparisonRow(
                "sensor_grid_argmin_vs_closed",
                g_true,
                best["g"],
                tolerance=max(spacing / max(g_true, scenario.floor), scenario.rel_tol),
            )
        )
        rows.append(
            ComparisonRow(
                "sensor_min_value_vs_stated",
                opt.stated_value,
                opt.value,
                tolerance=1e-10,
            )
        )
    return rows, ("g", "delta2_lambda", "delta2_vs_Nb"), table


_TASK_FN = {
    "occupation": _task_occupation,
    "steady_moments": _task_steady_moments,
    "qfi": _task_qfi,
    "uncertainty": _task_uncertainty,
    "meanfield": _task_meanfield,
    "gap": _task_gap,
    "sensor": _task_sensor,
}


# --- output ----------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def write_csv(path: Path, columns, table):
    lines = [",".join(columns)]
    for row in table:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    path.write_text("\n".join(lines) + "\n", newline="\n")


def _row_dict(row: ComparisonRow) -> dict:
    d = dataclasses.asdict(row)
    d["pass"] = d.pop("passed")
    return d


def write_json(path: Path, scenario: Scenario, task: str, columns, table, rows):
    payload = {
        "schema_version": SCHEMA_VERSION,
        "scenario": scenario.name,
        "task": task,
        "params": {f: getattr(scenario.params, f) for f in _PARAM_FIELDS},
        "truncation": {
            "signal_dim": scenario.signal_dim,
            "pump_dim": scenario.pump_dim,
        },
        "tolerances": {"rel": scenario.rel_tol, "floor": scenario.floor},
        "sweep": (
            {"parameter": scenario.sweep[0], "values": list(scenario.sweep[1])}
            if scenario.sweep
            else None
        ),
        "columns": list(columns),
        "rows": [[row[c] for c in columns] for row in table],
        "comparisons": [_row_dict(r) for r in rows],
    }
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", newline="\n")


def report(rows: list[ComparisonRow]) -> str:
    """Fixed-order text table of comparison rows."""
    if not rows:
        raise ValueError("no comparison rows to report")
    header = f"{'quantity':52s} {'analytic':>24s} {'numeric':>24s} {'rel_dev':>12s} pass"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r.quantity:52s} {r.analytic:>24.17g} {r.numeric:>24.17g} "
            f"{r.rel_dev:>12.3e} {'yes' if r.passed else 'NO'}"
        )
    return "\n".join(lines)


# --- entry points -----------------------------------------------------------------

def run(config_path: str, out_dir: str = ".", threads: int = 1, strict: bool = True) -> int:
    try:
        scenario = parse_config(config_path, strict=strict)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    all_rows: list[ComparisonRow] = []
    try:
        for task in scenario.tasks:
            rows, columns, table = _TASK_FN[task](scenario, threads)
            write_csv(out / f"{scenario.name}_{task}.csv", columns, table)
            write_json(
                out / f"{scenario.name}_{task}.json",
                scenario,
                task,
                columns,
                table,
                rows,
            )
            all_rows.extend(rows)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # parameter combinations rejected by model-level validation
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PdclabError as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3

    print(report(all_rows))
    return 0 if all(r.passed for r in all_rows) else 1


def print_defaults() -> int:
    print("# scenario template: every key shown with its default")
    print("name = scenario")
    print("tasks = steady_moments            # comma list:", ", ".join(TASKS))
    for f in _PARAM_FIELDS:
        required = f in ("g", "lambda_a", "gamma_a", "gamma_b")
        mark = "required" if required else "optional"
        print(f"params.{f} = 0.0                  # {mark}")
    print("# sweep.parameter = g")
    print("# sweep.values = 0.02, 0.05, 0.1")
    for key, value in _DEFAULTS.items():
        print(f"{key} = {value}")
    return 0


def list_tasks() -> int:
    for t in TASKS:
        print(f"{t:16s} {_TASK_HELP[t]}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pdclab", description="down-conversion metrology scenario runner"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run a scenario config")
    runp.add_argument("config")
    runp.add_argument("--out-dir", default=".")
    runp.add_argument("--threads", type=int, default=1)
    runp.add_argument(
        "--strict",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="reject unknown config keys (default on)",
    )
    sub.add_parser("list-tasks", help="list task tags")
    sub.add_parser("print-defaults", help="print a config template")
    args = parser.parse_args(argv)

    if args.command == "run":
        return run(args.config, args.out_dir, args.threads, args.strict)
    if args.command == "list-tasks":
        return list_tasks()
    return print_defaults()


if __name__ == "__main__":
    sys.exit(main())
