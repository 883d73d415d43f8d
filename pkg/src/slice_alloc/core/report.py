"""Output files: capacity CSV, SVG charts, JSON documents and run manifests."""

import pathlib

import matplotlib
from matplotlib import figure
import pandas as pd
import pydantic

import slice_alloc
from slice_alloc.core import config as config_module
from slice_alloc.core import errors
from slice_alloc.core.models import results
from slice_alloc.core.models import topology as topo


CSV_COLUMNS = [
    "num_small_cells",
    "users_per_cell",
    "slice",
    "mean_capacity_bps",
    "std_bps",
    "num_seeds",
]
MANIFEST_NAME = "run-manifest.json"


class RunManifest(pydantic.BaseModel):
    """Everything needed to reproduce a run's outputs."""

    command: str
    version: str = slice_alloc.__version__
    seed: int
    urllc_min_rate_bps: float
    config: config_module.RunDocument
    outputs: list[str] = pydantic.Field(default_factory=list)


def reports_frame(reports: list[results.SliceReport]) -> pd.DataFrame:
    """Sorted table of reports with the CSV column names."""
    frame = pd.DataFrame(
        [
            {
                "num_small_cells": r.num_small_cells,
                "users_per_cell": r.users_per_small_cell,
                "slice": r.slice.value,
                "mean_capacity_bps": r.total_capacity,
                "std_bps": r.std_dev,
                "num_seeds": r.num_seeds,
            }
            for r in reports
        ],
        columns=CSV_COLUMNS,
    )
    return frame.sort_values(
        ["num_small_cells", "users_per_cell", "slice"], kind="stable"
    ).reset_index(drop=True)


def write_report(
    reports: list[results.SliceReport],
    path: pathlib.Path,
    *,
    charts: bool = True,
) -> list[pathlib.Path]:
    """Write the capacity CSV and, optionally, one SVG chart per slice.

    Capacities use three fixed decimals so the file never contains
    scientific notation.

    Returns:
        Paths of every file written.

    Raises:
        ValueError: If ``reports`` is empty.
        ReportError: If a file cannot be written.
    """
    if not reports:
        raise ValueError("no reports to write")
    frame = reports_frame(reports)
    try:
        frame.to_csv(path, index=False, float_format="%.3f", lineterminator="\n")
    except OSError as e:
        raise errors.ReportError(path, str(e)) from e

    written = [path]
    if charts:
        for slice_ in topo.Slice:
            chart = path.parent / f"capacity_{slice_.value}.svg"
            write_chart(frame, slice_, chart)
            written.append(chart)
    return written


def write_chart(
    frame: pd.DataFrame, slice_: topo.Slice, path: pathlib.Path
) -> None:
    """Line chart of mean capacity versus small-cell count, one line per user count."""
    rows = frame[frame["slice"] == slice_.value]
    fig = figure.Figure(figsize=(6.0, 4.0))
    ax = fig.add_subplot()
    for users, group in rows.groupby("users_per_cell", sort=True):
        ax.errorbar(
            group["num_small_cells"],
            group["mean_capacity_bps"] / 1e6,
            yerr=group["std_bps"] / 1e6,
            marker="o",
            capsize=3,
            label=f"{users} users/cell",
        )
    ax.set_xlabel("Number of small cells")
    ax.set_ylabel("Total capacity (Mbps)")
    ax.set_title(f"{slice_.value} slice")
    ax.grid(True, alpha=0.3)
    if len(rows):
        ax.legend()

    with matplotlib.rc_context({"svg.hashsalt": "slice-alloc"}):
        try:
            fig.savefig(path, format="svg", metadata={"Date": None})
        except OSError as e:
            raise errors.ReportError(path, str(e)) from e


def write_json(model: pydantic.BaseModel, path: pathlib.Path) -> pathlib.Path:
    """Write a pydantic model as indented JSON."""
    try:
        path.write_text(model.model_dump_json(indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise errors.ReportError(path, str(e)) from e
    return path


def write_manifest(
    output_dir: pathlib.Path,
    command: str,
    document: config_module.RunDocument,
    outputs: list[pathlib.Path],
) -> pathlib.Path:
    """Write ``run-manifest.json`` next to the other outputs."""
    manifest = RunManifest(
        command=command,
        seed=document.scenario.seed,
        urllc_min_rate_bps=document.scenario.urllc_min_rate,
        config=document,
        outputs=sorted(p.name for p in outputs),
    )
    return write_json(manifest, output_dir / MANIFEST_NAME)
