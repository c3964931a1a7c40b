"""Command-line interface.

Subcommands:
    solve            run a preset and write its artifact files
    verify           run a preset and score its checks into verify.json
    oracle           print the closed-form plan for the fully actuated
                     L1 problem, optionally writing the exact trajectory
    maximizer-check  randomized closed-form vs brute-force comparison
    simulate         solve a preset, then integrate one closed loop

Preset configuration comes from defaults, then an optional key=value config
file (--config), then repeated --set key=value flags, in that order of
precedence. Exit codes: 0 on success/pass, 1 on check failure or solver
divergence, 2 on usage errors. The SPARSE_HJB_THREADS environment variable
caps solver threads (0 or unset picks the CPU count).
"""

from __future__ import annotations

import json
from pathlib import Path

import click
import numpy as np

from .eikonal import oracle_trajectory, oracle_value
from .eikonal import plan as eikonal_plan
from .experiments import (
    PRESET_NAMES,
    adjudicate_box_signs,
    build_preset,
    execute_preset,
    maximizer_check,
    parse_config_file,
    parse_scalar,
    run_preset,
    verify_preset,
)
from .feedback import DivergenceError, simulate, write_trajectory_csv

__all__ = ["main"]


def _merge_overrides(config_path, sets) -> dict:
    overrides = {}
    if config_path:
        try:
            overrides.update(parse_config_file(config_path))
        except ValueError as exc:
            raise click.BadParameter(str(exc), param_hint="--config")
    for item in sets:
        if "=" not in item:
            raise click.BadParameter(
                f"expected key=value, got {item!r}", param_hint="--set"
            )
        key, value = item.split("=", 1)
        overrides[key.strip()] = parse_scalar(value)
    return overrides


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.asarray([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise click.BadParameter(f"expected comma-separated floats, got {text!r}")


_PRESET_OPT = click.option(
    "--preset", required=True, type=click.Choice(PRESET_NAMES), help="Preset name."
)
_OUT_OPT = click.option(
    "--out", "out_dir", default=None, help="Output directory (default runs/<preset>)."
)
_SET_OPT = click.option(
    "--set", "sets", multiple=True, metavar="KEY=VALUE", help="Override one config key."
)
_CONFIG_OPT = click.option(
    "--config", "config_path", default=None, type=click.Path(exists=True),
    help="Flat key=value config file; --set wins over it.",
)


@click.group()
def main():
    """Grid solver toolkit for discounted control with sparse penalties."""


@main.command("solve")
@_PRESET_OPT
@_OUT_OPT
@_SET_OPT
@_CONFIG_OPT
def solve_cmd(preset, out_dir, sets, config_path):
    """Solve a preset and write value/control/sparsity/trajectory files."""
    overrides = _merge_overrides(config_path, sets)
    out = Path(out_dir) if out_dir else Path("runs") / preset
    try:
        report = run_preset(preset, out, overrides)
    except ValueError as exc:
        raise click.BadParameter(str(exc))
    except (DivergenceError, FloatingPointError) as exc:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "report.json", "w") as fh:
            json.dump({"preset": preset, "error": str(exc)}, fh, indent=2, sort_keys=True)
            fh.write("\n")
        raise click.ClickException(f"solver diverged: {exc}")
    click.echo(
        f"{preset}: {report['iterations']} iterations, "
        f"final residual {report['final_residual']:.3e}, "
        f"converged={report['converged']}"
    )
    hw = report["sparsity"]["half_widths"]
    click.echo(
        f"sparsity zero fraction {report['sparsity']['zero_fraction']:.4f}, "
        f"half widths {[round(h, 4) for h in hw]}"
    )
    click.echo(f"artifacts written to {out}")
    if not report["converged"]:
        raise click.ClickException("solver did not converge within max_iters")


@main.command("verify")
@_PRESET_OPT
@_OUT_OPT
@_SET_OPT
@_CONFIG_OPT
@click.pass_context
def verify_cmd(ctx, preset, out_dir, sets, config_path):
    """Run a preset and score its verification checks."""
    overrides = _merge_overrides(config_path, sets)
    out = Path(out_dir) if out_dir else Path("runs") / preset
    try:
        verdict = verify_preset(preset, out, overrides)
    except ValueError as exc:
        raise click.BadParameter(str(exc))
    for check in verdict["checks"]:
        status = "PASS" if check["pass"] else "FAIL"
        click.echo(
            f"[{status}] {check['name']}: measured={check['measured']} "
            f"bound={check['bound']}"
        )
    click.echo(f"verify.json written to {out}")
    if not verdict["pass"]:
        ctx.exit(1)


@main.command("oracle")
@click.option("--x0", required=True, help="Initial state, e.g. 0.4,0.8.")
@click.option("--lambda", "lam", default=0.2, show_default=True, help="Discount rate.")
@click.option("--gamma", default=1.0, show_default=True, help="Control weight.")
@click.option("--rho", default=1.0, show_default=True, help="Control ball radius.")
@click.option("--dt", "dt_sim", default=0.0125, show_default=True, help="Sample step.")
@click.option("--horizon", default=None, type=float, help="Sample horizon (default: support end + 1).")
@click.option("--out", "out_path", default=None, help="Write sampled trajectory CSV here.")
def oracle_cmd(x0, lam, gamma, rho, dt_sim, horizon, out_path):
    """Print the exact plan for the fully actuated L1 problem."""
    x = _parse_vector(x0)
    pl = eikonal_plan(x, lam, gamma, rho)
    click.echo(
        f"x0 = {[float(v) for v in x]}; lam*gamma box half-width = {lam * gamma:.6g}"
    )
    for k in range(pl.phases.shape[0]):
        click.echo(
            f"phase {k + 1}: t in [{pl.switch_times[k]:.6g}, "
            f"{pl.switch_times[k + 1]:.6g}), control = "
            f"{[round(float(v), 6) for v in pl.phases[k]]}"
        )
    if pl.phases.shape[0] == 0:
        click.echo("no active phases: the control is identically zero")
    click.echo(f"final state = {[round(float(v), 6) for v in pl.final_state]}")
    value = oracle_value(pl, x, lam, gamma, quadrature_n=400)
    click.echo(f"value = {value:.9g}")
    if out_path:
        end = horizon if horizon is not None else pl.support_end + 1.0
        traj = oracle_trajectory(pl, x, dt_sim, end)
        write_trajectory_csv(out_path, traj)
        click.echo(f"trajectory written to {out_path}")


@main.command("maximizer-check")
@click.option("--n", "n_cases", default=1000, show_default=True, help="Number of cases.")
@click.option("--seed", default=7, show_default=True, help="Random seed.")
@click.option("--signs", is_flag=True, help="Also adjudicate box-constraint signs.")
@click.option("--out", "out_path", default=None, help="Write the JSON summary here.")
@click.pass_context
def maximizer_check_cmd(ctx, n_cases, seed, signs, out_path):
    """Compare the closed-form maximizer against brute-force search."""
    summary = maximizer_check(n_cases=n_cases, seed=seed)
    click.echo(
        f"{summary['n_cases']} cases: worst g gap {summary['worst_g_gap']:.3e} "
        f"(bound {summary['g_gap_bound']:.0e}), worst control diff "
        f"{summary['worst_u_diff']:.3e} (bound {summary['u_diff_bound']:.0e})"
    )
    ok = summary["pass"]
    if signs:
        adjud = adjudicate_box_signs(n_cases=max(100, n_cases // 10), seed=seed)
        summary["sign_adjudication"] = adjud
        click.echo(
            f"box sign adjudication: {adjud['n_cases']} cases, "
            f"mismatches {adjud['sign_mismatches']}"
        )
        ok = ok and adjud["pass"]
    if out_path:
        with open(out_path, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    click.echo("PASS" if ok else "FAIL")
    if not ok:
        ctx.exit(1)


@main.command("simulate")
@_PRESET_OPT
@click.option("--x0", required=True, help="Initial state, e.g. -0.75,-0.6.")
@click.option("--horizon", required=True, type=float, help="Simulation horizon.")
@_OUT_OPT
@_SET_OPT
@_CONFIG_OPT
def simulate_cmd(preset, x0, horizon, out_dir, sets, config_path):
    """Solve a preset, then integrate one closed-loop trajectory."""
    overrides = _merge_overrides(config_path, sets)
    x = _parse_vector(x0)
    try:
        bundle = build_preset(preset, overrides)
    except ValueError as exc:
        raise click.BadParameter(str(exc))
    result = execute_preset(bundle)
    try:
        traj = simulate(result.field, x, bundle.problem, bundle.scfg, horizon)
    except DivergenceError as exc:
        raise click.ClickException(f"simulation diverged: {exc}")
    out = Path(out_dir) if out_dir else Path("runs") / preset
    out.mkdir(parents=True, exist_ok=True)
    path = out / "sim_traj.csv"
    write_trajectory_csv(path, traj)
    click.echo(
        f"final state {[round(float(v), 6) for v in traj.final_state]}, "
        f"discounted cost {traj.total_cost:.6g}"
    )
    click.echo(f"trajectory written to {path}")


if __name__ == "__main__":
    main()
