"""Two-tier topology data models."""

import enum

import numpy as np
import numpy.typing as npt
import pydantic


MACRO = "macro"

Point = tuple[float, float]


class Slice(str, enum.Enum):
    """Network slice a user is served by."""

    EMBB = "eMBB"
    URLLC = "uRLLC"
    IOT = "IoT"


class SmallCell(pydantic.BaseModel):
    """A small-cell access point."""

    model_config = pydantic.ConfigDict(frozen=True)

    id: int = pydantic.Field(..., ge=0)
    center: Point

    @property
    def station(self) -> int:
        """Receiver index of this cell in a gain tensor (macro is 0)."""
        return self.id + 1


class User(pydantic.BaseModel):
    """An uplink transmitter attached to the macrocell or a small cell."""

    model_config = pydantic.ConfigDict(frozen=True)

    id: int = pydantic.Field(..., ge=0)
    position: Point
    attachment: int | str = pydantic.Field(
        ..., description="'macro' or the id of the serving small cell"
    )
    slice: Slice
    indoor: bool = False

    @property
    def is_macro(self) -> bool:
        """Whether the user is served by the macrocell."""
        return self.attachment == MACRO

    @property
    def station(self) -> int:
        """Receiver index of the serving station in a gain tensor."""
        if self.is_macro:
            return 0
        return int(self.attachment) + 1


class Violation(pydantic.BaseModel):
    """One broken topology invariant."""

    invariant: str
    entity_ids: list[int]
    message: str


class Topology(pydantic.BaseModel):
    """Positions and slice roles of the macrocell, small cells and users."""

    model_config = pydantic.ConfigDict(frozen=True)

    macro_position: Point = (0.0, 0.0)
    small_cells: list[SmallCell] = pydantic.Field(default_factory=list)
    users: list[User] = pydantic.Field(default_factory=list)

    @property
    def num_small_cells(self) -> int:
        """Number of small cells."""
        return len(self.small_cells)

    @property
    def num_stations(self) -> int:
        """Receivers: the macrocell plus every small cell."""
        return 1 + len(self.small_cells)

    @property
    def macro_users(self) -> list[User]:
        """Users served by the macrocell, by id."""
        return sorted((u for u in self.users if u.is_macro), key=lambda u: u.id)

    def cell_users(self, cell_id: int) -> list[User]:
        """Users camping on a small cell, by id."""
        return sorted(
            (u for u in self.users if u.attachment == cell_id), key=lambda u: u.id
        )

    def station_positions(self) -> npt.NDArray[np.float64]:
        """Receiver coordinates, shape (1 + K, 2)."""
        points = [self.macro_position] + [c.center for c in self.small_cells]
        return np.asarray(points, dtype=np.float64)

    def to_json(self) -> str:
        """Serialize to the topology JSON document."""
        return self.model_dump_json(indent=2)

    @classmethod
    def from_json(cls, document: str) -> "Topology":
        """Parse a topology JSON document."""
        return cls.model_validate_json(document)
