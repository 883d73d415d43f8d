"""Bridge for running async code from a synchronous Typer CLI."""

import asyncio
import typing

from rich import console
from rich import progress
import typer

from slice_alloc.core import errors
from slice_alloc.core.models import progress as progress_models


rich_console = console.Console(stderr=True)


def run_async(
    main_coro: typing.Coroutine[typing.Any, typing.Any, typing.Any],
) -> typing.Any:
    """Run the main async entry point."""
    try:
        return asyncio.run(main_coro)
    except KeyboardInterrupt:
        rich_console.print("\n[yellow]Operation cancelled by user.[/yellow]")
        raise typer.Exit(130) from None
    except errors.SliceAllocError:
        raise
    except Exception as e:
        rich_console.print(f"[red]Unexpected error: {e}[/red]")
        raise


async def with_progress(
    operation: typing.Callable[
        [typing.Callable[[progress_models.SweepProgress], None]],
        typing.Coroutine[typing.Any, typing.Any, typing.Any],
    ],
    description: str = "Processing...",
    show_progress: bool = True,
) -> typing.Any:
    """Run an async operation that reports :class:`SweepProgress` updates.

    ``operation`` receives the callback to call with each update.
    """
    if not show_progress:
        return await operation(lambda _: None)

    with progress.Progress(
        progress.SpinnerColumn(),
        progress.TextColumn("[progress.description]{task.description}"),
        progress.BarColumn(),
        progress.TaskProgressColumn(),
        console=rich_console,
    ) as progress_bar:
        task = progress_bar.add_task(description, total=None)

        def update(state: progress_models.SweepProgress) -> None:
            progress_bar.update(
                task,
                total=state.total,
                completed=state.completed,
                description=f"{description} ({state.status})",
            )

        try:
            result = await operation(update)
            progress_bar.update(task, description=description)
            return result
        except Exception:
            progress_bar.update(task, description=f"[red]Failed: {description}[/red]")
            raise
