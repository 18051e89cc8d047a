"""
Command Line Interface for CoherenceForge
"""

import csv
import io
import math
import sys
from pathlib import Path
from typing import Optional

import click
from pydantic import ValidationError
from tabulate import tabulate
from colorama import init as colorama_init, Fore, Style

from . import __version__
from .config import ForgeConfig, load_config_from_env
from .models import Command, MeasureReport, OutputFormat, RunConfig, SuiteName
from .exceptions import (
    CoherenceForgeError, ConfigurationError, NoConvergenceError, StateValidationError
)

# Initialize colorama for Windows compatibility
colorama_init()

EXIT_OK = 0
EXIT_PROPERTY_FAILURE = 1
EXIT_INPUT_ERROR = 2
EXIT_NO_CONVERGENCE = 3


def print_status(message: str, passed: bool):
    """Print a green or red status line"""
    color = Fore.GREEN if passed else Fore.RED
    click.echo(f"{color}{message}{Style.RESET_ALL}")


def fail(message: str, code: int):
    click.echo(f"Error: {message}", err=True)
    sys.exit(code)


def _load_config(ctx) -> ForgeConfig:
    config_file = ctx.obj.get('config_file') if ctx.obj else None
    if config_file:
        return ForgeConfig.from_file(config_file)
    return load_config_from_env()


def _build_run_config(**kwargs) -> RunConfig:
    try:
        return RunConfig(**kwargs)
    except ValidationError as e:
        messages = "; ".join(f"{'.'.join(str(p) for p in err['loc']) or 'input'}: {err['msg']}"
                             for err in e.errors())
        raise ConfigurationError(messages)


def _load_input(run_config: RunConfig, config: ForgeConfig):
    from .states import as_density, load_state, parse_preset

    if run_config.preset:
        return as_density(parse_preset(run_config.preset))
    return as_density(load_state(run_config.input_paths[0], config.validation_tol))


def _handle_errors(ctx, func):
    """Run ``func`` and map library exceptions onto exit codes"""
    try:
        return func()
    except NoConvergenceError as e:
        fail(f"optimizer did not converge: {e}", EXIT_NO_CONVERGENCE)
    except StateValidationError as e:
        fail("invalid state:\n  - " + "\n  - ".join(e.failures), EXIT_INPUT_ERROR)
    except CoherenceForgeError as e:
        fail(str(e), EXIT_INPUT_ERROR)
    except Exception as e:
        click.echo(f"Unexpected error: {e}", err=True)
        if ctx.obj and ctx.obj.get('verbose'):
            import traceback
            traceback.print_exc()
        sys.exit(EXIT_INPUT_ERROR)


def _emit_report(report: MeasureReport, run_config: RunConfig, fmt: Optional[str]):
    rows = [[name, f"{value:.10g}"] for name, value in sorted(report.measures.items())]

    if run_config.output:
        path = Path(run_config.output)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w') as f:
            if run_config.format == OutputFormat.CSV:
                f.write(_report_csv(report))
            else:
                f.write(report.to_json() + "\n")
        click.echo(f"Report written to {path}")

    if fmt == OutputFormat.JSON.value and not run_config.output:
        click.echo(report.to_json())
    elif fmt == OutputFormat.CSV.value and not run_config.output:
        click.echo(_report_csv(report), nl=False)
    else:
        click.echo(tabulate(rows, headers=["Measure", "Value"], tablefmt="grid"))


def _report_csv(report: MeasureReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["measure", "value"])
    for name, value in sorted(report.measures.items()):
        writer.writerow([name, repr(value)])
    return buffer.getvalue()


def coherence_report(rho, config: ForgeConfig, tol: float) -> MeasureReport:
    """Every coherence measure of rho from a single fidelity optimization"""
    from .coherence import (
        c_geometric_qubit, c_l1, c_rel_entropy, g_of_fidelity, maximize_incoherent_fidelity
    )
    from .linalg import purity
    from .models import FidelityDistance
    from .states import is_incoherent

    optimum = maximize_incoherent_fidelity(rho, config.optimizer)
    measures = {
        "c_l1": c_l1(rho),
        "c_r": c_rel_entropy(rho),
        "c_g": max(g_of_fidelity(optimum.fidelity, FidelityDistance.GEOMETRIC), 0.0),
        "c_bures": max(g_of_fidelity(optimum.fidelity, FidelityDistance.BURES), 0.0),
        "c_groverian": max(g_of_fidelity(optimum.fidelity, FidelityDistance.GROVERIAN), 0.0),
    }
    if rho.dim == 2:
        measures["c_g_qubit"] = c_geometric_qubit(rho)

    metadata = {
        "dim": rho.dim,
        "purity": purity(rho),
        "incoherent": is_incoherent(rho, tol),
        "tolerance": tol,
        "optimizer": {
            "iterations": optimum.iterations,
            "starts": optimum.starts,
            "converged_starts": optimum.converged_starts,
            "exact": optimum.exact,
        },
    }
    return MeasureReport(measures=measures, metadata=metadata)


@click.group()
@click.version_option(__version__)
@click.option('--config', '-c', help='Configuration file path')
@click.option('--verbose', '-v', is_flag=True, help='Verbose output')
@click.pass_context
def main(ctx, config, verbose):
    """
    CoherenceForge - quantum coherence and entanglement toolkit

    Compute coherence measures, convert coherence into entanglement and
    verify the relations between them on seeded random states.
    """
    ctx.ensure_object(dict)
    ctx.obj['config_file'] = config
    ctx.obj['verbose'] = verbose


@main.command()
@click.option('--input', '-i', 'input_path', help='State file (JSON)')
@click.option('--preset', '-p', help='Named state: bell, plus, mc:d, diag:p, qubit:a,r')
@click.option('--output', '-o', help='Write the report to this file')
@click.option('--format', '-f', 'fmt', type=click.Choice(['json', 'csv']), help='Report format')
@click.option('--tol', default=1e-8, type=float, help='Incoherence tolerance for the report flag')
@click.pass_context
def measure(ctx, input_path, preset, output, fmt, tol):
    """
    Compute the coherence measures of a state

    Examples:

    \b
    # Maximally coherent qutrit
    coherenceforge measure --preset mc:3

    \b
    # State file, JSON report
    coherenceforge measure --input state.json --format json
    """

    def run():
        config = _load_config(ctx)
        run_config = _build_run_config(
            command=Command.MEASURE, input_paths=[input_path] if input_path else [], preset=preset,
            output=output, format=fmt or OutputFormat.JSON, tol=tol,
        )
        rho = _load_input(run_config, config)
        report = coherence_report(rho, config, run_config.tol)
        report.metadata["input"] = preset or input_path
        _emit_report(report, run_config, fmt)

    _handle_errors(ctx, run)


@main.command()
@click.option('--input', '-i', 'input_path', help='State file (JSON)')
@click.option('--preset', '-p', help='Named state: bell, plus, mc:d, diag:p, qubit:a,r')
@click.option('--ancilla-dim', '-a', type=int, help='Ancilla dimension (default: system dimension)')
@click.option('--output', '-o', help='Write the converted bipartite state to this file')
@click.option('--format', '-f', 'fmt', type=click.Choice(['json', 'csv']), help='Report format on stdout')
@click.option('--tol', default=1e-8, type=float, help='Incoherence tolerance for the report flag')
@click.pass_context
def convert(ctx, input_path, preset, ancilla_dim, output, fmt, tol):
    """
    Convert coherence into entanglement with the generalized CNOT

    Examples:

    \b
    # |+> becomes a Bell state
    coherenceforge convert --preset plus --output bell.json

    \b
    # Qutrit with a larger ancilla
    coherenceforge convert --input rho.json --ancilla-dim 4
    """
    from .conversion import convert as convert_state
    from .entanglement import (
        PPT_EXACT_DIMS, concurrence_two_qubit, e_geometric_two_qubit, e_gF_mc, e_rel_entropy_mc,
        hashing_lower_bound, mc_embed, ppt_check, ppt_is_separable_small
    )
    from .models import FidelityDistance
    from .states import is_bipartite_incoherent, save_state

    def run():
        config = _load_config(ctx)
        run_config = _build_run_config(
            command=Command.CONVERT, input_paths=[input_path] if input_path else [], preset=preset,
            ancilla_dim=ancilla_dim or config.ancilla_dim, format=fmt or OutputFormat.JSON, tol=tol,
        )
        rho = _load_input(run_config, config)
        output_state = convert_state(rho, run_config.ancilla_dim)

        report = coherence_report(rho, config, run_config.tol)
        mc = mc_embed(rho)
        report.measures["e_r"] = e_rel_entropy_mc(mc)
        report.measures["e_bures"] = e_gF_mc(mc, FidelityDistance.BURES, config.optimizer)
        report.measures["e_groverian"] = e_gF_mc(mc, FidelityDistance.GROVERIAN, config.optimizer)
        report.measures["hashing_bound"] = hashing_lower_bound(output_state)
        if output_state.dims == (2, 2):
            report.measures["concurrence"] = concurrence_two_qubit(output_state)
            report.measures["e_g"] = e_geometric_two_qubit(output_state)

        if output_state.dims in PPT_EXACT_DIMS:
            report.metadata["separable"] = ppt_is_separable_small(output_state)
        elif is_bipartite_incoherent(output_state, run_config.tol):
            report.metadata["separable"] = True
        else:
            report.metadata["ppt"] = ppt_check(output_state)
        report.metadata["dims"] = list(output_state.dims)
        report.metadata["input"] = preset or input_path

        if output:
            save_state(output_state, output)
            click.echo(f"Converted state written to {output}")

        _emit_report(report, run_config, fmt)

    _handle_errors(ctx, run)


@main.command()
@click.argument('suite', type=click.Choice([s.value for s in SuiteName]))
@click.option('--trials', '-n', type=int, help='Number of trials (default from config)')
@click.option('--seed', '-s', type=int, help='Master seed (default from config)')
@click.option('--dim', '-d', default=2, type=int, help='System dimension')
@click.option('--ancilla-dim', '-a', type=int, help='Ancilla dimension')
@click.option('--measure', '-m', type=click.Choice(['l1', 'rel_entropy', 'geometric']),
              help='Restrict monotonicity/convexity to one measure')
@click.option('--input', '-i', 'input_path', help='Channel file (JSON) used instead of sampled channels')
@click.option('--tol', default=1e-8, type=float, help='Incoherence tolerance for input classification')
@click.option('--output', '-o', help='Write JSON Lines records to this file')
@click.pass_context
def verify(ctx, suite, trials, seed, dim, ancilla_dim, measure, input_path, tol, output):
    """
    Run a verification suite on seeded random inputs

    Exit code 0 when every check passes, 1 when any check fails.

    Examples:

    \b
    # Entanglement never exceeds coherence
    coherenceforge verify theorem1 --dim 2 --trials 500

    \b
    # Relative-entropy equality for qutrits, records to a file
    coherenceforge verify cr-equality --dim 3 --trials 1000 --output cr.jsonl

    \b
    # Monotonicity of the geometric measure
    coherenceforge verify monotonicity --measure geometric --trials 500

    \b
    # A fixed channel from a file instead of sampled ones
    coherenceforge verify theorem1 --input channel.json --trials 100
    """
    from .runner import VerificationRunner
    from .suites import load_fixed_channel

    def run():
        config = _load_config(ctx)
        run_config = _build_run_config(
            command=Command.VERIFY, suite=suite, seed=config.seed if seed is None else seed,
            trials=config.trials if trials is None else trials, dim=dim, ancilla_dim=ancilla_dim or config.ancilla_dim,
            measure=measure, output=output, tol=tol, input_paths=[input_path] if input_path else [],
        )
        channel_path = run_config.input_paths[0] if run_config.input_paths else None
        if channel_path:
            load_fixed_channel(channel_path)

        runner = VerificationRunner(config)
        params = runner.default_params(
            dim=run_config.dim, ancilla_dim=run_config.ancilla_dim, measure=run_config.measure,
            incoherence_tol=run_config.tol, channel_path=channel_path,
        )
        stats = runner.run_suite_sync(run_config.suite, run_config.trials, run_config.seed, params)

        if output:
            runner.export_jsonl(output)

        worst = stats.worst_margin
        click.echo(tabulate(
            [[stats.suite, stats.total_checks, stats.passed_checks, stats.failed_checks,
              f"{worst:.3e}" if worst is not None else "N/A", f"{stats.pass_percentage:.1f}%"]],
            headers=["Suite", "Checks", "Passed", "Failed", "Worst margin", "Pass rate"],
            tablefmt="grid",
        ))

        if stats.failed_checks == 0:
            print_status(f"\n✓ All {stats.total_checks} check(s) passed", True)
            return EXIT_OK

        print_status(f"\n✗ {stats.failed_checks}/{stats.total_checks} check(s) failed", False)
        for record in runner.get_failures()[:10]:
            click.echo(f"  {record.check} trial={record.trial} seed={record.seed} margin={record.margin:.3e}")
        return EXIT_PROPERTY_FAILURE

    code = _handle_errors(ctx, run)
    sys.exit(code or EXIT_OK)


def sweep_rows(step: float):
    """Rows (r01, c_l1, c_g, concurrence, e_g) for [[1/2, r], [r, 1/2]], r in [0, 1/2]"""
    from .coherence import c_geometric_qubit, c_l1
    from .conversion import convert as convert_state
    from .entanglement import concurrence_two_qubit, e_geometric_two_qubit
    from .states import DensityMatrix

    count = int(math.ceil(0.5 / step - 1e-12))
    rows = []
    for k in range(count + 1):
        r = min(k * step, 0.5)
        rho = DensityMatrix([[0.5, r], [r, 0.5]])
        output = convert_state(rho, 2)
        rows.append([r, c_l1(rho), c_geometric_qubit(rho),
                     concurrence_two_qubit(output), e_geometric_two_qubit(output)])
    return rows


@main.command()
@click.option('--step', default=0.05, type=float, help='Increment of |rho_01|')
@click.option('--output', '-o', help='CSV output file (stdout when omitted)')
@click.pass_context
def sweep(ctx, step, output):
    """
    Tabulate qubit coherence against the entanglement it converts into

    Examples:

    \b
    # Print the default sweep
    coherenceforge sweep

    \b
    # Finer sweep to a file
    coherenceforge sweep --step 0.01 --output sweep.csv
    """

    def run():
        run_config = _build_run_config(
            command=Command.SWEEP, step=step, output=output, format=OutputFormat.CSV
        )
        rows = sweep_rows(run_config.step)

        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["r01", "c_l1", "c_g", "concurrence_of_embed", "e_g_of_embed"])
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])

        if output:
            path = Path(output)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(buffer.getvalue())
            click.echo(f"✓ {len(rows)} row(s) written to {output}")
        else:
            click.echo(buffer.getvalue(), nl=False)

    _handle_errors(ctx, run)


@main.command()
@click.option('--output', '-o', default='coherenceforge_config.yaml', help='Output file path')
@click.option('--format', '-f', default='yaml', type=click.Choice(['yaml', 'json']), help='Output format')
def init(output, format):
    """
    Create example configuration file

    Examples:

    \b
    # Create YAML config
    coherenceforge init --output config.yaml

    \b
    # Create JSON config
    coherenceforge init --output config.json --format json
    """

    try:
        if format == 'json' and not output.endswith('.json'):
            output = output.replace('.yaml', '.json').replace('.yml', '.json')

        config = ForgeConfig.create_example_config()
        config.to_file(output)

        click.echo(f"✓ Example configuration created: {output}")
        click.echo(f"Then run: coherenceforge --config {output} verify theorem1")

    except Exception as e:
        click.echo(f"Error creating configuration: {e}", err=True)
        sys.exit(EXIT_INPUT_ERROR)


@main.command()
@click.option('--config-file', '-c', required=True, help='Configuration file to validate')
def validate(config_file):
    """
    Validate configuration file

    Examples:

    \b
    # Validate config file
    coherenceforge validate --config-file config.yaml
    """

    try:
        config = ForgeConfig.from_file(config_file)

        click.echo(f"✓ Configuration file is valid: {config_file}")
        click.echo(f"  - seed {config.seed}, {config.trials} trial(s), {config.threads} thread(s)")
        click.echo(f"  - optimizer: {config.optimizer.starts} start(s), "
                   f"max {config.optimizer.max_iters} iteration(s), tol {config.optimizer.tol:g}")

    except ConfigurationError as e:
        click.echo(f"✗ Configuration error: {e}", err=True)
        sys.exit(EXIT_INPUT_ERROR)


if __name__ == '__main__':
    main()
