"""
Typer CLI for ies.

Commands: run, sweep, compare, carbon, report, validate, check, diff, oracle.
Entrypoint: main() for console script ies.cli:main.
"""

import json
import logging
from pathlib import Path
from typing import Annotated

import typer
from typer import Exit

from ies import __version__
from ies.config import load_config
from ies.constants import LOCAL_DIR_NAME
from ies.exceptions import InstanceTooLarge, ModelError, ScenarioError, SolveFailed

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_LIMIT = 2
EXIT_INFEASIBLE = 3
EXIT_INPUT = 4
EXIT_INTERNAL = 10

_STATUS_EXIT = {
    "optimal": EXIT_OK,
    "gap-limit": EXIT_LIMIT,
    "node-limit": EXIT_LIMIT,
    "time-limit": EXIT_LIMIT,
    "infeasible": EXIT_INFEASIBLE,
}

_INPUT_ERRORS = (ScenarioError, ModelError, InstanceTooLarge, FileNotFoundError)

app = typer.Typer(help="ies CLI: solve, sweep and audit day-ahead electric-gas dispatch.")


def _version_callback(value: bool) -> None:
    if value:
        print(f"ies {__version__}")
        raise typer.Exit()


@app.callback()
def version_callback(
    version: Annotated[
        bool | None,
        typer.Option(
            "--version",
            "-v",
            help="Show version and exit.",
            callback=_version_callback,
            is_eager=True,
            show_default=False,
        ),
    ] = None,
    log_level: Annotated[
        str, typer.Option("--log-level", help="Logging level (DEBUG, INFO, WARNING, ERROR).")
    ] = "WARNING",
):
    """Show ies version; configure logging."""
    logging.basicConfig(
        level=getattr(logging, log_level.upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def exit_code_for(status: str) -> int:
    return _STATUS_EXIT.get(status, EXIT_INTERNAL)


def _fail(e: Exception) -> Exit:
    """Print the error and return the Exit matching its kind."""
    typer.echo(f"error: {e}", err=True)
    if isinstance(e, SolveFailed):
        return Exit(exit_code_for(e.status))
    if isinstance(e, _INPUT_ERRORS):
        return Exit(EXIT_INPUT)
    return Exit(EXIT_INTERNAL)


def _load(scenario: str, series: list[str] | None = None):
    """Scenario from a JSON path, or a bundled fixture name; then apply TARGET=CSV overrides."""
    from ies.scenario import apply_series_override, bundled_fixture, load_scenario

    path = Path(scenario)
    if not path.is_file() and not path.suffix:
        path = bundled_fixture(scenario)
    sc = load_scenario(path)
    for item in series or []:
        target, sep, csv = item.partition("=")
        if not sep or not csv:
            raise ScenarioError(item, "expected TARGET=CSV")
        sc = apply_series_override(sc, target.strip(), csv.strip())
    return sc


def _run_options(
    *,
    no_p2g: bool = False,
    rho: float | None = None,
    delta: float | None = None,
    gap: float | None = None,
    day: str | None = None,
    fleet: str = "hydrogen",
    max_nodes: int | None = None,
    time_limit: float | None = None,
):
    from ies.runner import RunOptions

    config = load_config()
    solve = config.solve_options(rel_gap_tol=gap, max_nodes=max_nodes, time_limit_s=time_limit)
    return (
        RunOptions(
            with_p2g=not no_p2g,
            rho=rho,
            delta_wp=delta,
            day=day,
            fleet=fleet,
            solve=solve,
            tightness_tol=config.tightness_tol,
        ),
        config,
    )


@app.command("run")
def run_cmd(
    scenario: str = typer.Argument(..., help="Scenario JSON file or bundled fixture name"),
    no_p2g: bool = typer.Option(False, "--no-p2g", help="Solve without the P2G plant"),
    rho: float | None = typer.Option(None, "--rho", help="Hot-spare coefficient ρ"),
    delta: float | None = typer.Option(None, "--delta", help="Curtailment penalty δ_WP ($/kWh)"),
    gap: float | None = typer.Option(None, "--gap", help="Relative optimality gap"),
    day: str | None = typer.Option(None, "--day", help="Wind profile: winter, summer or annual"),
    fleet: str = typer.Option("hydrogen", "--fleet", help="Truck fleet: hydrogen, ev or diesel"),
    max_nodes: int | None = typer.Option(None, "--max-nodes", help="Branch-and-bound node limit"),
    time_limit: float | None = typer.Option(None, "--time-limit", help="Search time limit (s)"),
    series: list[str] | None = typer.Option(
        None, "--series", help="Override a series: TARGET=CSV (repeatable)"
    ),
    dump_program: Path | None = typer.Option(
        None, "--dump-program", help="Also write the assembled program in text form"
    ),
    out: Path | None = typer.Option(None, "--out", "-o", help="Output directory"),
) -> None:
    """Solve one scenario and write its report files. Exit code follows the solver status."""
    from ies.report import report
    from ies.runner import run

    try:
        sc = _load(scenario, series)
        options, config = _run_options(
            no_p2g=no_p2g, rho=rho, delta=delta, gap=gap, day=day, fleet=fleet,
            max_nodes=max_nodes, time_limit=time_limit,
        )
        if dump_program is not None:
            from ies.conic import dump_program as dump
            from ies.model import assemble
            from ies.runner import prepare

            model = assemble(prepare(sc, options), with_p2g=options.with_p2g, fleet=options.fleet)
            dump(model.program, dump_program)
        solution = run(sc, options)
        out_dir = out if out is not None else config.out_dir
        report(solution, out_dir, feas_tol=options.solve.feas_tol)
        typer.echo(
            f"{solution.status}: total {solution.costs.total:.2f} "
            f"(gap {solution.gap:.2g}, {solution.nodes} nodes) -> {out_dir}"
        )
        code = exit_code_for(solution.status)
        if code:
            raise Exit(code)
    except Exit:
        raise
    except Exception as e:
        raise _fail(e)


def _parse_values(values: str) -> list[float]:
    try:
        return [float(v) for v in values.split(",") if v.strip()]
    except ValueError:
        raise ModelError(f"cannot parse values {values!r}")


@app.command("sweep")
def sweep_cmd(
    scenario: str = typer.Argument(..., help="Scenario JSON file or bundled fixture name"),
    param: str = typer.Option(..., "--param", help="delta_wp or rho"),
    values: str = typer.Option(..., "--values", help="Comma-separated values"),
    reference_delta: float | None = typer.Option(
        None, "--reference-delta", help="δ at which curtailment is re-priced (delta_wp sweeps)"
    ),
    workers: int | None = typer.Option(None, "--workers", help="Parallel sweep points"),
    no_p2g: bool = typer.Option(False, "--no-p2g", help="Solve without the P2G plant"),
    gap: float | None = typer.Option(None, "--gap", help="Relative optimality gap"),
    day: str | None = typer.Option(None, "--day", help="Wind profile: winter, summer or annual"),
    out: Path | None = typer.Option(None, "--out", "-o", help="Output directory"),
) -> None:
    """Solve a scenario across δ_WP or ρ values and write sweep_<param>.csv."""
    from ies.report import write_sweep
    from ies.runner import interior_minimum, sweep_penalty, sweep_reserve

    try:
        if param not in ("delta_wp", "rho"):
            raise ModelError(f"unknown sweep parameter {param!r}; expected delta_wp or rho")
        points = _parse_values(values)
        sc = _load(scenario)
        options, config = _run_options(no_p2g=no_p2g, gap=gap, day=day)
        n_workers = workers if workers is not None else config.workers
        if param == "delta_wp":
            table = sweep_penalty(sc, points, options, reference_delta=reference_delta, workers=n_workers)
            column = "assessed_total"
        else:
            table = sweep_reserve(sc, points, options, workers=n_workers)
            column = "total"
        out_dir = out if out is not None else config.out_dir
        path = write_sweep(table, out_dir, f"sweep_{param}.csv")
        typer.echo(table.to_string(index=False))
        if param == "delta_wp":
            best = interior_minimum(table, column)
            typer.echo(f"interior minimum: {best if best is not None else 'none'}")
        typer.echo(f"-> {path}")
        solved = table[column].notna().sum()
        if solved == 0:
            raise Exit(EXIT_INFEASIBLE)
        if solved < len(table):
            raise Exit(EXIT_LIMIT)
    except Exit:
        raise
    except Exception as e:
        raise _fail(e)


@app.command("compare")
def compare_cmd(
    scenario: str = typer.Argument(..., help="Scenario JSON file or bundled fixture name"),
    gap: float | None = typer.Option(None, "--gap", help="Relative optimality gap"),
    day: str | None = typer.Option(None, "--day", help="Wind profile: winter, summer or annual"),
) -> None:
    """Total cost with and without the P2G plant."""
    from ies.runner import compare_p2g

    try:
        sc = _load(scenario)
        options, _ = _run_options(gap=gap, day=day)
        comparison = compare_p2g(sc, options)
        typer.echo(json.dumps(comparison.as_dict(), indent=2, sort_keys=True))
    except Exit:
        raise
    except Exception as e:
        raise _fail(e)


def _parse_prices(items: list[str] | None) -> dict[str, float] | None:
    if not items:
        return None
    prices = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise ModelError(f"expected NAME=VALUE, got {item!r}")
        prices[name.strip()] = float(value)
    return prices


@app.command("carbon")
def carbon_cmd(
    scenario: str = typer.Argument(..., help="Scenario JSON file or bundled fixture name"),
    price: list[str] | None = typer.Option(
        None, "--price", help="Carbon price column NAME=$/tCO2 (repeatable; default: scenario prices)"
    ),
    sign: int = typer.Option(1, "--sign", help="+1 adds the carbon cost, -1 subtracts it"),
    gap: float | None = typer.Option(None, "--gap", help="Relative optimality gap"),
    out: Path | None = typer.Option(None, "--out", "-o", help="Output directory"),
) -> None:
    """Compare hydrogen, EV and diesel truck fleets under carbon prices."""
    from ies.carbon import compare_fleets, write_carbon_report

    try:
        sc = _load(scenario)
        options, config = _run_options(gap=gap)
        comparison = compare_fleets(sc, _parse_prices(price), options, sign=sign)
        out_dir = out if out is not None else config.out_dir
        csv_path, _ = write_carbon_report(comparison, out_dir)
        typer.echo(comparison.adjusted.to_string())
        for fleet, message in comparison.errors.items():
            typer.echo(f"{fleet}: {message}", err=True)
        typer.echo(f"-> {csv_path}")
        if comparison.errors:
            raise Exit(EXIT_INFEASIBLE if len(comparison.errors) == len(comparison.adjusted) else EXIT_LIMIT)
    except Exit:
        raise
    except Exception as e:
        raise _fail(e)


@app.command("report")
def report_cmd(
    run_dir: Path = typer.Argument(..., help="Run output directory"),
    output_format: str = typer.Option("text", "--format", "-f", help="Output format: text, json"),
) -> None:
    """Print the cost breakdown and solver status of an emitted run."""
    from ies.storage import load_summary

    try:
        summary = load_summary(run_dir)
        if output_format == "json":
            typer.echo(json.dumps(summary, indent=2, sort_keys=True))
            return
        typer.echo(f"{summary.get('scenario')}: {summary.get('status')} (gap {summary.get('gap')})")
        for term, value in summary.get("costs", {}).items():
            typer.echo(f"  {term:<14}{value:>18.2f}")
        typer.echo(f"  {'total':<14}{summary.get('total', 0.0):>18.2f}")
    except Exit:
        raise
    except Exception as e:
        raise _fail(e)


@app.command("validate")
def validate_cmd(
    scenario: str = typer.Argument(..., help="Scenario JSON file or bundled fixture name"),
    no_p2g: bool = typer.Option(False, "--no-p2g", help="Assemble without the P2G plant"),
) -> None:
    """Validate a scenario and print the size of its assembled program. Exit 4 on invalid input."""
    from ies.model import assemble

    try:
        sc = _load(scenario)
        model = assemble(sc, with_p2g=not no_p2g)
        counts = model.program.counts()
        typer.echo(f"{sc.name}: valid (T={sc.horizon})")
        for key, value in counts.items():
            typer.echo(f"  {key}: {value}")
    except Exit:
        raise
    except Exception as e:
        raise _fail(e)


@app.command("check")
def check_cmd(
    run_dir: Path = typer.Argument(..., help="Run output directory"),
    baseline_dir: Path | None = typer.Option(
        None, "--baseline", "-b", help="Reference run directory for the total-cost check"
    ),
    policy_path: Path | None = typer.Option(None, "--policy", help="Policy YAML file"),
    tol: float | None = typer.Option(None, "--tol", help="Relative tolerance for invariants"),
    max_gap: float | None = typer.Option(None, "--max-gap", help="Largest accepted optimality gap"),
    max_tightness: float | None = typer.Option(
        None, "--max-tightness", help="Largest accepted relative Weymouth residual"
    ),
    max_total: float | None = typer.Option(None, "--max-total", help="Total cost cap ($)"),
    total_tolerance: float | None = typer.Option(
        None, "--total-tolerance", help="Fractional tolerance against the baseline total"
    ),
    expect_status: str | None = typer.Option(None, "--expect-status", help="Expected solver status"),
    output_format: str = typer.Option("text", "--format", "-f", help="Output format: text, json, markdown"),
) -> None:
    """Check invariants from emitted files. Exit 0 = pass, 1 = fail."""
    from ies.checks import (
        CheckPolicy,
        format_report_json,
        format_report_markdown,
        format_report_text,
        run_checks,
    )
    from ies.policy import load_policy, merge_policy

    try:
        policy = CheckPolicy()
        if policy_path is not None:
            policy = load_policy(policy_path)
        else:
            default_policy = LOCAL_DIR_NAME / "policy.yaml"
            if default_policy.is_file():
                policy = load_policy(default_policy)
        policy = merge_policy(
            policy,
            {
                "tol": tol,
                "max_gap": max_gap,
                "max_tightness": max_tightness,
                "max_total": max_total,
                "total_tolerance": total_tolerance,
                "expect_status": expect_status,
            },
        )
        result = run_checks(run_dir, policy, baseline_dir)
        if output_format == "json":
            typer.echo(format_report_json(result))
        elif output_format == "markdown":
            typer.echo(format_report_markdown(result))
        else:
            typer.echo(format_report_text(result))
        if not result.passed:
            raise Exit(EXIT_CHECK_FAILED)
    except Exit:
        raise
    except Exception as e:
        raise _fail(e)


@app.command("diff")
def diff_cmd(
    run_a: Path = typer.Argument(..., help="Run directory to compare"),
    run_b: Path = typer.Argument(..., help="Reference run directory"),
) -> None:
    """Compare cost terms and solver metadata of two runs."""
    from ies.diff import compute_diff, format_diff_text

    try:
        typer.echo(format_diff_text(compute_diff(run_a, run_b)))
    except Exit:
        raise
    except Exception as e:
        raise _fail(e)


def _box(text: str) -> tuple[float, float]:
    lo, sep, hi = text.partition(",")
    if not sep:
        raise ModelError(f"expected LO,HI, got {text!r}")
    return float(lo), float(hi)


@app.command("oracle")
def oracle_cmd(
    kind: str = typer.Argument(..., help="uc, gas or mccormick"),
    scenario: str | None = typer.Argument(None, help="Scenario for uc and gas"),
    slot: int = typer.Option(0, "--slot", help="Slot whose gas demands are used (gas)"),
    resolution: int = typer.Option(41, "--resolution", help="Pressure grid points per node (gas)"),
    x: float = typer.Option(1.0, "--x", help="Direction f⁺ − f⁻ (mccormick)"),
    pi_m: float = typer.Option(0.0, "--pi-m", help="π at the from node (mccormick)"),
    pi_n: float = typer.Option(0.0, "--pi-n", help="π at the to node (mccormick)"),
    box_m: str | None = typer.Option(None, "--box-m", help="LO,HI for π_m (default: the point)"),
    box_n: str | None = typer.Option(None, "--box-n", help="LO,HI for π_n (default: the point)"),
) -> None:
    """Run a brute-force oracle for manual cross-checks."""
    from ies import oracle

    try:
        if kind == "mccormick":
            bm = _box(box_m) if box_m else (pi_m, pi_m)
            bn = _box(box_n) if box_n else (pi_n, pi_n)
            typer.echo(f"lambda_min = {oracle.mccormick_min(x, pi_m, pi_n, bm, bn):.10g}")
            return
        if kind not in ("uc", "gas"):
            raise ModelError(f"unknown oracle {kind!r}; expected uc, gas or mccormick")
        if scenario is None:
            raise ModelError(f"oracle {kind} needs a scenario")
        sc = _load(scenario)
        if kind == "uc":
            res = oracle.enumerate_uc(sc)
            typer.echo(f"{res.status}: objective {res.objective:.10g} ({res.message})")
            for unit, row in zip(sc.units, res.u):
                typer.echo(f"  unit {unit.id}: {''.join(str(v) for v in row)}")
        else:
            if not 0 <= slot < sc.horizon:
                raise ModelError(f"slot {slot} outside horizon {sc.horizon}")
            demands = {node: series[slot] for node, series in sc.gas_demands.items()}
            res = oracle.grid_search_gas(sc.gas_net, demands, resolution)
            typer.echo(f"{res.status}: objective {res.objective:.10g} ({res.message})")
            for node, pi in res.pi.items():
                typer.echo(f"  node {node}: pi {pi:.6g} supply {res.supply[node]:.6g}")
        if res.status != "optimal":
            raise Exit(EXIT_INFEASIBLE)
    except Exit:
        raise
    except Exception as e:
        raise _fail(e)


def main() -> None:
    """CLI entrypoint (console script ies.cli:main)."""
    app()


if __name__ == "__main__":
    main()
