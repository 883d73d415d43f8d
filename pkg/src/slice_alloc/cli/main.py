"""Main CLI application for slice-alloc."""

import pathlib
import sys

from loguru import logger
from rich import console
from rich import table
import typer

import slice_alloc
from slice_alloc.cli.async_bridge import run_async
from slice_alloc.cli.async_bridge import with_progress
from slice_alloc.core import allocator
from slice_alloc.core import async_sweep
from slice_alloc.core import channel
from slice_alloc.core import config
from slice_alloc.core import errors
from slice_alloc.core import handover
from slice_alloc.core import metrics
from slice_alloc.core import report
from slice_alloc.core import scenario
from slice_alloc.core.models import allocation as allocation_models
from slice_alloc.core.models import handover as handover_models
from slice_alloc.core.models import topology as topo


app = typer.Typer(
    name="slice-alloc",
    help="Uplink resource allocation simulator for sliced two-tier networks",
    no_args_is_help=True,
)

rich_console = console.Console()
error_console = console.Console(stderr=True, highlight=False, soft_wrap=True)

ConfigOption = typer.Option(
    None,
    "--config",
    "-c",
    help="Run document (JSON, or YAML by .yaml/.yml suffix)",
    exists=True,
    dir_okay=False,
    readable=True,
)
OutputDirOption = typer.Option(
    pathlib.Path("."), "--output-dir", "-o", help="Directory for output files"
)
SeedOption = typer.Option(None, "--seed", min=0, help="Override the scenario seed")
DumpGainsOption = typer.Option(
    False, "--dump-gains", help="Also write the gain tensor as gains.csv"
)


def _fail(error: errors.SliceAllocError) -> typer.Exit:
    """Report a domain error on stderr and build the exit-1 signal."""
    error_console.print(f"{type(error).__name__}: {error}", markup=False)
    return typer.Exit(1)


def _prepare(
    config_path: pathlib.Path | None, output_dir: pathlib.Path, seed: int | None
) -> config.RunDocument:
    document = config.load_run_document(config_path).with_seed(seed)
    output_dir.mkdir(parents=True, exist_ok=True)
    return document


def _dump_gains(gains: channel.GainTensor, output_dir: pathlib.Path) -> pathlib.Path:
    path = output_dir / "gains.csv"
    try:
        gains.to_frame().to_csv(path, index=False, lineterminator="\n")
    except OSError as e:
        raise errors.ReportError(path, str(e)) from e
    return path


@app.command()
def generate(
    config_path: pathlib.Path | None = ConfigOption,
    output_dir: pathlib.Path = OutputDirOption,
    seed: int | None = SeedOption,
    dump_gains: bool = DumpGainsOption,
) -> None:
    """Generate a topology and write topology.json."""
    try:
        document = _prepare(config_path, output_dir, seed)
        topology = scenario.generate_topology(document.scenario)
        for violation in scenario.validate_topology(topology, document.scenario):
            logger.warning(f"{violation.invariant}: {violation.message}")

        path = output_dir / "topology.json"
        try:
            path.write_text(topology.to_json() + "\n", encoding="utf-8")
        except OSError as e:
            raise errors.ReportError(path, str(e)) from e
        outputs = [path]
        if dump_gains:
            outputs.append(
                _dump_gains(
                    channel.build_gain_tensor(topology, document.scenario), output_dir
                )
            )
        outputs.append(report.write_manifest(output_dir, "generate", document, outputs))
    except errors.SliceAllocError as e:
        raise _fail(e) from e

    rich_console.print(
        f"[green]Generated {topology.num_small_cells} small cells and "
        f"{len(topology.users)} users in {output_dir}[/green]"
    )


@app.command()
def solve(
    config_path: pathlib.Path | None = ConfigOption,
    output_dir: pathlib.Path = OutputDirOption,
    seed: int | None = SeedOption,
    dump_gains: bool = DumpGainsOption,
) -> None:
    """Solve one drop and write allocation, feasibility and diagnostics."""
    try:
        document = _prepare(config_path, output_dir, seed)
        topology = scenario.generate_topology(document.scenario)
        gains = channel.build_gain_tensor(topology, document.scenario)
        result = metrics.interference_fixed_point(
            topology, gains, document.scenario, document.solver, document.fixed_point
        )

        outputs = [
            report.write_json(
                allocation_models.AllocationDocument.from_allocation(
                    result.allocation, result.problem
                ),
                output_dir / "allocation.json",
            ),
            report.write_json(
                allocator.check_feasibility(result.allocation, result.problem),
                output_dir / "feasibility.json",
            ),
            report.write_json(result.diagnostics, output_dir / "diagnostics.json"),
            report.write_json(result.capacities, output_dir / "capacities.json"),
        ]
        if dump_gains:
            outputs.append(_dump_gains(gains, output_dir))
        outputs.append(report.write_manifest(output_dir, "solve", document, outputs))
    except errors.SliceAllocError as e:
        raise _fail(e) from e

    summary = table.Table(title=f"Slice capacity (seed {document.scenario.seed})")
    summary.add_column("Slice", style="cyan")
    summary.add_column("Capacity (Mbps)", justify="right")
    for slice_ in topo.Slice:
        summary.add_row(slice_.value, f"{result.capacities.of(slice_) / 1e6:.3f}")
    rich_console.print(summary)
    if not result.diagnostics.converged:
        rich_console.print(
            f"[yellow]Multipliers still moving after "
            f"{result.diagnostics.iterations} iterations; best feasible iterate "
            f"kept[/yellow]"
        )


@app.command()
def sweep(
    config_path: pathlib.Path | None = ConfigOption,
    output_dir: pathlib.Path = OutputDirOption,
    seed: int | None = SeedOption,
    charts: bool = typer.Option(
        True, "--charts/--no-charts", help="Write capacity_<slice>.svg charts"
    ),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Hide the progress bar"),
) -> None:
    """Run the small-cell density sweep and write capacity.csv."""
    try:
        document = _prepare(config_path, output_dir, seed)
        settings = config.get_runtime_settings()
        runner = async_sweep.AsyncSweepRunner(config.resolve_thread_count(settings))
        try:
            reports = run_async(
                with_progress(
                    lambda update: runner.run_sweep(document, update),
                    "Running sweep",
                    show_progress=not quiet,
                )
            )
        finally:
            runner.shutdown()
        if not reports:
            raise errors.SliceAllocError("every sweep job failed")

        outputs = report.write_report(
            reports, output_dir / "capacity.csv", charts=charts
        )
        outputs.append(report.write_manifest(output_dir, "sweep", document, outputs))
    except errors.SliceAllocError as e:
        raise _fail(e) from e

    rich_console.print(
        f"[green]Wrote {len(reports)} rows to {output_dir / 'capacity.csv'}[/green]"
    )


@app.command("handover-trace")
def handover_trace(
    trace_path: pathlib.Path = typer.Argument(
        ..., exists=True, dir_okay=False, readable=True, help="JSON array of events"
    ),
    output_dir: pathlib.Path = OutputDirOption,
    config_path: pathlib.Path | None = ConfigOption,
) -> None:
    """Validate a handover trace; exit 0 only if it reaches Complete."""
    try:
        document = _prepare(config_path, output_dir, None)
        try:
            text = trace_path.read_text(encoding="utf-8")
        except OSError as e:
            raise errors.ConfigError(f"Cannot read trace {trace_path}: {e}") from e
        report.write_manifest(output_dir, "handover-trace", document, [])
        state = handover.run_trace(handover.parse_trace(text))
    except errors.SliceAllocError as e:
        raise _fail(e) from e

    if state.phase is not handover_models.Phase.COMPLETE:
        error_console.print(
            f"Handover ended in phase {state.phase.value} after "
            f"{len(state.history)} events",
            markup=False,
        )
        raise typer.Exit(1)
    rich_console.print(
        f"[green]Handover complete after {len(state.history)} events[/green]"
    )


def _configure_logging(verbose: bool) -> None:
    level = "DEBUG" if verbose else config.get_runtime_settings().log_level
    logger.remove()
    logger.add(sys.stderr, level=level)


def version_callback(value: bool) -> None:
    """Version callback function."""
    if value:
        rich_console.print(f"slice-alloc {slice_alloc.__version__}")
        raise typer.Exit()


@app.callback()
def callback(
    version: bool | None = typer.Option(
        None,
        "--version",
        callback=version_callback,
        is_eager=True,
        help="Show version and exit",
    ),
    verbose: bool = typer.Option(
        False, "--verbose", "-v", help="Enable debug logging"
    ),
) -> None:
    """Slice-Alloc: network-slicing uplink allocation for two-tier networks."""
    _configure_logging(verbose)


def main() -> None:
    """Console entry point."""
    app()


if __name__ == "__main__":
    main()
