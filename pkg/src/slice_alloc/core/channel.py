"""Unit conversions, path loss, fading and gain tensors.

Everything past this module works in linear units (W, Hz, dimensionless
gains); dB and dBm only appear in configuration and reports.
"""

import dataclasses
import enum
import typing

import numpy as np
import numpy.typing as npt
import pandas as pd

from slice_alloc.core import errors
from slice_alloc.utils import rng as rng_streams


if typing.TYPE_CHECKING:
    from slice_alloc.core import config as config_module
    from slice_alloc.core.models import topology as topo


MIN_DISTANCE_M = 1.0
WALL_LOSS_DB = 10.0

_TINY = float(np.finfo(np.float64).tiny)


class LinkType(str, enum.Enum):
    """Propagation environment of a transmitter/receiver pair."""

    MACRO_OUTDOOR = "macro-outdoor"
    SMALLCELL_INDOOR = "smallcell-indoor"
    CROSS_WALL = "cross-wall"


def dbm_to_watt(x: float) -> float:
    """Convert dBm to watts."""
    return float(10.0 ** ((x - 30.0) / 10.0))


def watt_to_dbm(p: float) -> float:
    """Convert watts to dBm."""
    return float(10.0 * np.log10(p) + 30.0)


def path_loss_db(
    link: LinkType, distance: float | npt.NDArray[np.float64]
) -> typing.Any:
    """Path loss in dB; distances below 1 m are clamped.

    Suburban macro model ``128.1 + 37.6 log10(d_km)``, indoor model
    ``38.46 + 20 log10(d_m)``, and the macro model plus a 10 dB wall for any
    link that crosses a small-cell boundary.
    """
    d = np.maximum(np.asarray(distance, dtype=np.float64), MIN_DISTANCE_M)
    if link is LinkType.SMALLCELL_INDOOR:
        loss = 38.46 + 20.0 * np.log10(d)
    else:
        loss = 128.1 + 37.6 * np.log10(d / 1000.0)
        if link is LinkType.CROSS_WALL:
            loss = loss + WALL_LOSS_DB
    return float(loss) if np.ndim(loss) == 0 else loss


def fading_gain(rng: np.random.Generator) -> float:
    """One Rayleigh power gain: unit-mean exponential, strictly positive."""
    return max(float(rng.standard_exponential()), _TINY)


def fading_gains(
    rng: np.random.Generator, shape: tuple[int, ...]
) -> npt.NDArray[np.float64]:
    """Vectorized :func:`fading_gain`."""
    return np.maximum(rng.standard_exponential(shape), _TINY)


def link_type(user: "topo.User", station: int) -> LinkType:
    """Classify the link between a user and a receiver index (0 = macro)."""
    if station == 0:
        return LinkType.CROSS_WALL if user.indoor else LinkType.MACRO_OUTDOOR
    if not user.is_macro and user.station == station:
        return LinkType.SMALLCELL_INDOOR
    return LinkType.CROSS_WALL


@dataclasses.dataclass(frozen=True)
class GainTensor:
    """Linear power gains indexed by (transmitter user id, station, subchannel)."""

    gains: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        if self.gains.ndim != 3:
            raise ValueError(f"gain tensor must be 3-D, got shape {self.gains.shape}")
        if not np.all(np.isfinite(self.gains)) or not np.all(self.gains > 0):
            raise ValueError("gains must be finite and strictly positive")

    @property
    def num_users(self) -> int:
        """Number of transmitters."""
        return int(self.gains.shape[0])

    @property
    def num_stations(self) -> int:
        """Number of receivers (macro + small cells)."""
        return int(self.gains.shape[1])

    @property
    def num_subchannels(self) -> int:
        """Number of subchannels."""
        return int(self.gains.shape[2])

    def to_frame(self) -> pd.DataFrame:
        """Long-format table (transmitter, receiver, subchannel, gain)."""
        users, stations, subchannels = np.indices(self.gains.shape)
        return pd.DataFrame(
            {
                "transmitter": users.ravel(),
                "receiver": stations.ravel(),
                "subchannel": subchannels.ravel(),
                "gain": self.gains.ravel(),
            }
        )


def _check_dimensions(
    topology: "topo.Topology", config: "config_module.ScenarioConfig"
) -> None:
    if topology.num_small_cells != config.num_small_cells:
        raise errors.DimensionMismatch(
            f"topology has {topology.num_small_cells} small cells, "
            f"config expects {config.num_small_cells}"
        )
    if len(topology.macro_users) != config.num_macro_users:
        raise errors.DimensionMismatch(
            f"topology has {len(topology.macro_users)} macro users, "
            f"config expects {config.num_macro_users}"
        )
    for cell in topology.small_cells:
        count = len(topology.cell_users(cell.id))
        if count != config.users_per_small_cell:
            raise errors.DimensionMismatch(
                f"small cell {cell.id} has {count} users, "
                f"config expects {config.users_per_small_cell}"
            )
    if sorted(u.id for u in topology.users) != list(range(len(topology.users))):
        raise errors.DimensionMismatch("user ids must be contiguous from 0")


def build_gain_tensor(
    topology: "topo.Topology",
    config: "config_module.ScenarioConfig",
    seed: int | None = None,
    *,
    with_fading: bool = True,
) -> GainTensor:
    """Build the full gain tensor for a topology.

    Fading for each user comes from its own substream of ``seed`` (defaults
    to ``config.seed``), so a user's rows are independent of evaluation
    order and of how many other users exist.

    Raises:
        DimensionMismatch: If the topology does not match ``config``.
    """
    _check_dimensions(topology, config)
    seed = config.seed if seed is None else seed

    stations = topology.station_positions()
    num_stations = stations.shape[0]
    gains = np.empty(
        (len(topology.users), num_stations, config.num_subchannels), dtype=np.float64
    )

    for user in topology.users:
        distances = np.hypot(*(stations - np.asarray(user.position)).T)
        loss_db = np.array(
            [
                path_loss_db(link_type(user, station), distances[station])
                for station in range(num_stations)
            ]
        )
        path_gain = 10.0 ** (-loss_db / 10.0)
        if with_fading:
            fading = fading_gains(
                rng_streams.generator(seed, rng_streams.Stream.FADING, user.id),
                (num_stations, config.num_subchannels),
            )
        else:
            fading = np.ones((num_stations, config.num_subchannels))
        gains[user.id] = path_gain[:, np.newaxis] * fading

    return GainTensor(gains=gains)
