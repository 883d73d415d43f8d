"""Seeded generation of two-tier topologies."""

import itertools
import math

from loguru import logger
import numpy as np
import numpy.typing as npt

from slice_alloc.core import config as config_module
from slice_alloc.core import errors
from slice_alloc.core.models import topology as topo
from slice_alloc.utils import rng


MAX_PLACEMENT_ATTEMPTS = 10_000

# Slack for geometry checks on values that went through sin/cos.
_GEOMETRY_TOLERANCE = 1e-9


def _uniform_disc(
    generator: np.random.Generator, count: int, radius: float
) -> npt.NDArray[np.float64]:
    """Draw ``count`` points uniformly over a disc centred at the origin."""
    r = radius * np.sqrt(generator.random(count))
    theta = 2.0 * np.pi * generator.random(count)
    return np.column_stack((r * np.cos(theta), r * np.sin(theta)))


def _place_small_cells(
    config: config_module.ScenarioConfig,
) -> list[topo.SmallCell]:
    generator = rng.generator(config.seed, rng.Stream.SMALL_CELLS)
    centers = np.empty((config.num_small_cells, 2), dtype=np.float64)

    for index in range(config.num_small_cells):
        for _attempt in range(MAX_PLACEMENT_ATTEMPTS):
            candidate = _uniform_disc(generator, 1, config.macro_radius)[0]
            if index == 0:
                break
            distances = np.hypot(*(centers[:index] - candidate).T)
            if distances.min() >= config.min_small_cell_separation:
                break
        else:
            raise errors.PlacementInfeasible(index, MAX_PLACEMENT_ATTEMPTS)
        centers[index] = candidate

    return [
        topo.SmallCell(id=index, center=(float(x), float(y)))
        for index, (x, y) in enumerate(centers)
    ]


def generate_topology(config: config_module.ScenarioConfig) -> topo.Topology:
    """Draw a topology for ``config``; equal configs give equal topologies.

    The macrocell sits at the origin. Centers are drawn sequentially, so the
    first K cells of a larger deployment coincide with a K-cell deployment
    built from the same seed.

    Raises:
        PlacementInfeasible: If a small cell cannot be placed within the
            attempt budget.
    """
    cells = _place_small_cells(config)

    users: list[topo.User] = []
    macro_points = _uniform_disc(
        rng.generator(config.seed, rng.Stream.MACRO_USERS),
        config.num_macro_users,
        config.macro_radius,
    )
    for x, y in macro_points:
        users.append(
            topo.User(
                id=len(users),
                position=(float(x), float(y)),
                attachment=topo.MACRO,
                slice=topo.Slice.IOT,
                indoor=False,
            )
        )

    for cell in cells:
        offsets = _uniform_disc(
            rng.generator(config.seed, rng.Stream.SMALL_CELL_USERS, cell.id),
            config.users_per_small_cell,
            config.small_cell_radius,
        )
        for dx, dy in offsets:
            users.append(
                topo.User(
                    id=len(users),
                    position=(float(cell.center[0] + dx), float(cell.center[1] + dy)),
                    attachment=cell.id,
                    slice=topo.Slice.EMBB,
                    indoor=True,
                )
            )

    topology = assign_slices(
        topo.Topology(small_cells=cells, users=users), config.urllc_fraction
    )
    logger.debug(
        f"Generated topology seed={config.seed}: {len(cells)} small cells, "
        f"{len(users)} users"
    )
    return topology


def assign_slices(topology: topo.Topology, urllc_fraction: float) -> topo.Topology:
    """Label small-cell users uRLLC (lowest ids first) or eMBB per cell.

    Macro users keep the IoT slice.
    """
    labels: dict[int, topo.Slice] = {}
    for cell in topology.small_cells:
        members = topology.cell_users(cell.id)
        # round() guards against 0.1 * 30 style representation error
        quota = math.ceil(round(urllc_fraction * len(members), 9))
        for rank, user in enumerate(members):
            labels[user.id] = topo.Slice.URLLC if rank < quota else topo.Slice.EMBB

    users = [
        user.model_copy(update={"slice": labels[user.id]})
        if user.id in labels
        else user
        for user in topology.users
    ]
    return topology.model_copy(update={"users": users})


def validate_topology(
    topology: topo.Topology, config: config_module.ScenarioConfig
) -> list[topo.Violation]:
    """Check every topology invariant against ``config``.

    Returns:
        One violation per broken invariant instance; empty when valid.
    """
    violations: list[topo.Violation] = []
    mx, my = topology.macro_position
    cell_ids = {cell.id for cell in topology.small_cells}

    if topology.num_small_cells != config.num_small_cells:
        violations.append(
            topo.Violation(
                invariant="cell-count",
                entity_ids=sorted(cell_ids),
                message=(
                    f"expected {config.num_small_cells} small cells, "
                    f"found {topology.num_small_cells}"
                ),
            )
        )

    for cell in topology.small_cells:
        distance = math.hypot(cell.center[0] - mx, cell.center[1] - my)
        if distance > config.macro_radius + _GEOMETRY_TOLERANCE:
            violations.append(
                topo.Violation(
                    invariant="cell-in-coverage",
                    entity_ids=[cell.id],
                    message=f"small cell {cell.id} is {distance:.2f} m from the macro",
                )
            )

    for a, b in itertools.combinations(topology.small_cells, 2):
        distance = math.hypot(a.center[0] - b.center[0], a.center[1] - b.center[1])
        if distance < config.min_small_cell_separation - _GEOMETRY_TOLERANCE:
            violations.append(
                topo.Violation(
                    invariant="cell-separation",
                    entity_ids=[a.id, b.id],
                    message=(
                        f"small cells {a.id} and {b.id} are {distance:.2f} m apart"
                    ),
                )
            )

    centers = {cell.id: cell.center for cell in topology.small_cells}
    for user in topology.users:
        if user.is_macro:
            if user.slice is not topo.Slice.IOT:
                violations.append(
                    topo.Violation(
                        invariant="slice-role",
                        entity_ids=[user.id],
                        message=f"macro user {user.id} is labeled {user.slice.value}",
                    )
                )
            continue

        if user.attachment not in cell_ids:
            violations.append(
                topo.Violation(
                    invariant="attachment",
                    entity_ids=[user.id],
                    message=f"user {user.id} camps on unknown cell {user.attachment}",
                )
            )
            continue

        if user.slice is topo.Slice.IOT:
            violations.append(
                topo.Violation(
                    invariant="slice-role",
                    entity_ids=[user.id],
                    message=f"small-cell user {user.id} is labeled IoT",
                )
            )

        cx, cy = centers[int(user.attachment)]
        distance = math.hypot(user.position[0] - cx, user.position[1] - cy)
        if distance > config.small_cell_radius + _GEOMETRY_TOLERANCE:
            violations.append(
                topo.Violation(
                    invariant="user-in-cell",
                    entity_ids=[user.id, int(user.attachment)],
                    message=(
                        f"user {user.id} is {distance:.2f} m from cell "
                        f"{user.attachment}"
                    ),
                )
            )

    return violations
