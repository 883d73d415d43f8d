"""Models for per-seed outcomes and aggregated sweep reports."""

import pydantic

from slice_alloc.core.models import topology as topo


class OperationResult(pydantic.BaseModel):
    """Base model for operation results."""

    success: bool
    duration: float
    error: str | None = None


class SliceCapacities(pydantic.BaseModel):
    """Total capacity per slice of one network snapshot, bps."""

    embb: float = pydantic.Field(ge=0)
    urllc: float = pydantic.Field(ge=0)
    iot: float = pydantic.Field(ge=0)

    def of(self, slice_: topo.Slice) -> float:
        """Capacity of ``slice_``."""
        return {
            topo.Slice.EMBB: self.embb,
            topo.Slice.URLLC: self.urllc,
            topo.Slice.IOT: self.iot,
        }[slice_]


class SeedOutcome(OperationResult):
    """Result of evaluating one (sweep point, users per cell, seed) job."""

    num_small_cells: int
    users_per_small_cell: int
    seed: int
    feasible: bool = pydantic.Field(
        True, description="whether the final allocation met every constraint"
    )
    capacities: SliceCapacities | None = None


class SliceReport(pydantic.BaseModel):
    """Capacity of one slice at one sweep point, aggregated over seeds."""

    num_small_cells: int = pydantic.Field(ge=0)
    users_per_small_cell: int = pydantic.Field(ge=1)
    slice: topo.Slice
    total_capacity: float = pydantic.Field(ge=0, description="mean over seeds, bps")
    std_dev: float = pydantic.Field(ge=0, description="bps")
    num_seeds: int = pydantic.Field(ge=1)
