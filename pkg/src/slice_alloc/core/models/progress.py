"""Models for tracking sweep progress."""

import pydantic


class OperationProgress(pydantic.BaseModel):
    """Generic model for reporting operation progress."""

    total: int = 0
    completed: int = 0
    status: str = "Starting..."


class SweepProgress(OperationProgress):
    """Progress of a density sweep."""

    failed: int = 0
    current_point: int | None = None
