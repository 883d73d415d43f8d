"""Network-level simulation: macro scheduling, co-tier fixed point and sweeps."""

import dataclasses
import time

from loguru import logger
import numpy as np
from scipy import stats

from slice_alloc.core import allocator
from slice_alloc.core import channel
from slice_alloc.core import config as config_module
from slice_alloc.core import errors
from slice_alloc.core import scenario
from slice_alloc.core.models import allocation as models
from slice_alloc.core.models import results
from slice_alloc.core.models import topology as topo


def schedule_macro(
    num_macro_users: int, num_subchannels: int, tti: int
) -> models.IntArray:
    """Round-robin macro schedule: subchannel n at TTI t serves (tN + n) mod M.

    Returns:
        Macro user id per subchannel; all -1 when there are no macro users.
    """
    if num_subchannels < 1:
        raise ValueError("num_subchannels must be >= 1")
    if num_macro_users < 1:
        return np.full(num_subchannels, -1, dtype=np.int64)
    slots = tti * num_subchannels + np.arange(num_subchannels, dtype=np.int64)
    return slots % num_macro_users


def macro_power_split(schedule: models.IntArray, p_max: float) -> models.FloatArray:
    """Uniform power: each user spreads p_max over its subchannels this TTI."""
    active = schedule >= 0
    if not active.any():
        return np.zeros(schedule.shape)
    counts = np.bincount(schedule[active])
    share = np.zeros(schedule.shape)
    share[active] = p_max / counts[schedule[active]]
    return share


def macro_uplink_capacity(
    schedule: models.IntArray,
    gains: channel.GainTensor,
    allocation: models.Allocation,
    problem: models.AllocationProblem,
    scenario_config: config_module.ScenarioConfig,
) -> float:
    """IoT uplink capacity of one TTI in bps.

    Every scheduled macro user transmits at its uniform power share; the
    macrocell sees the small-cell powers of ``allocation`` as interference.
    """
    power = macro_power_split(schedule, scenario_config.p_max)
    active = schedule >= 0
    if not active.any():
        return 0.0
    subchannels = np.arange(schedule.size)
    gain = gains.gains[np.where(active, schedule, 0), 0, subchannels]
    ratio = allocator.sinr(
        power,
        gain,
        allocator.macro_interference(allocation, problem),
        scenario_config.noise_per_subchannel,
    )
    rates = allocator.subchannel_capacity(scenario_config.subchannel_bandwidth, ratio)
    return float(np.where(active, rates, 0.0).sum())


def average_macro_capacity(
    gains: channel.GainTensor,
    allocation: models.Allocation,
    problem: models.AllocationProblem,
    scenario_config: config_module.ScenarioConfig,
    num_ttis: int,
) -> float:
    """:func:`macro_uplink_capacity` averaged over the first ``num_ttis`` TTIs."""
    return float(
        np.mean(
            [
                macro_uplink_capacity(
                    schedule_macro(
                        scenario_config.num_macro_users,
                        scenario_config.num_subchannels,
                        tti,
                    ),
                    gains,
                    allocation,
                    problem,
                    scenario_config,
                )
                for tti in range(num_ttis)
            ]
        )
    )


def neighbour_gains(
    problem: models.AllocationProblem, gains: channel.GainTensor
) -> models.FloatArray:
    """Gain from user slot (j, u) to small cell k on n, zero for k == j.

    Shape (K_src, U, K_dst, N).
    """
    K, _, _ = problem.shape
    rows = np.where(problem.valid, problem.user_ids, 0)
    stations = np.arange(1, K + 1)
    table = gains.gains[rows[:, :, np.newaxis], stations[np.newaxis, np.newaxis, :], :]
    table = np.where(problem.valid[:, :, np.newaxis, np.newaxis], table, 0.0)
    own = np.eye(K, dtype=bool)[:, np.newaxis, :, np.newaxis]
    return np.where(own, 0.0, table)


def co_tier_interference(
    allocation: models.Allocation, neighbours: models.FloatArray
) -> models.FloatArray:
    """Co-tier interference received by every small cell per subchannel, W."""
    return np.einsum("jnu,jukn->kn", allocation.power, neighbours)


@dataclasses.dataclass(frozen=True)
class FixedPointResult:
    """Final allocation of the co-tier best-response loop."""

    allocation: models.Allocation
    problem: models.AllocationProblem
    capacities: results.SliceCapacities
    diagnostics: models.SolveDiagnostics
    embb_per_round: list[float]


def _slice_totals(
    allocation: models.Allocation,
    problem: models.AllocationProblem,
    neighbours: models.FloatArray,
) -> tuple[float, float]:
    """eMBB and uRLLC totals under the undamped co-tier load of ``allocation``."""
    actual = problem.with_co_tier(co_tier_interference(allocation, neighbours))
    rates = allocator.user_rates(allocation.assign, allocation.power, actual)
    embb = np.where(problem.valid & ~problem.urllc, rates, 0.0).sum()
    urllc = np.where(problem.valid & problem.urllc, rates, 0.0).sum()
    return float(embb), float(urllc)


def interference_fixed_point(
    topology: topo.Topology,
    gains: channel.GainTensor,
    scenario_config: config_module.ScenarioConfig,
    solver: config_module.SolverParams | None = None,
    params: config_module.FixedPointParams | None = None,
) -> FixedPointResult:
    """Solve every small cell against a damped co-tier interference estimate.

    Round 0 assumes no co-tier interference. Each later round recomputes it
    from the previous allocation and blends ``damping * new + (1 - damping)
    * old`` before re-solving. Macro users follow the TTI 0 round-robin
    schedule while the small cells are solved.
    """
    params = params or config_module.FixedPointParams()
    schedule = schedule_macro(
        scenario_config.num_macro_users, scenario_config.num_subchannels, 0
    )
    problem = allocator.build_problem(
        topology,
        gains,
        scenario_config,
        solver,
        macro_schedule=schedule,
        macro_power=macro_power_split(schedule, scenario_config.p_max),
    )
    neighbours = neighbour_gains(problem, gains)

    estimate = np.zeros_like(problem.co_tier_interference)
    allocation: models.Allocation | None = None
    diagnostics: models.SolveDiagnostics | None = None
    embb_per_round: list[float] = []

    for round_index in range(params.rounds):
        if allocation is not None:
            computed = co_tier_interference(allocation, neighbours)
            estimate = params.damping * computed + (1.0 - params.damping) * estimate
            problem = problem.with_co_tier(estimate)
        allocation, _, diagnostics = allocator.solve_dual(problem, solver)
        embb, _ = _slice_totals(allocation, problem, neighbours)
        embb_per_round.append(embb)
        logger.debug(
            f"Fixed-point round {round_index}: eMBB {embb / 1e6:.3f} Mbps, "
            f"{diagnostics.iterations} iterations"
        )

    assert allocation is not None and diagnostics is not None
    embb, urllc = _slice_totals(allocation, problem, neighbours)
    iot = average_macro_capacity(
        gains, allocation, problem, scenario_config, params.num_ttis
    )
    return FixedPointResult(
        allocation=allocation,
        problem=problem,
        capacities=results.SliceCapacities(embb=embb, urllc=urllc, iot=iot),
        diagnostics=diagnostics,
        embb_per_round=embb_per_round,
    )


@dataclasses.dataclass(frozen=True)
class SweepJob:
    """One (sweep point, users per cell, seed) evaluation."""

    num_small_cells: int
    users_per_small_cell: int
    seed: int


def sweep_jobs(document: config_module.RunDocument) -> list[SweepJob]:
    """Every job of a sweep in a fixed order."""
    return [
        SweepJob(point, users, seed)
        for point in document.sweep.sweep_points
        for users in sorted(set(document.sweep.users_per_small_cell))
        for seed in sorted(set(document.sweep.seeds))
    ]


def evaluate_job(
    document: config_module.RunDocument, job: SweepJob
) -> results.SeedOutcome:
    """Generate, solve and measure one drop; domain errors become a failed outcome."""
    start_time = time.time()
    scenario_config = document.scenario.model_copy(
        update={
            "num_small_cells": job.num_small_cells,
            "users_per_small_cell": job.users_per_small_cell,
            "seed": job.seed,
        }
    )
    try:
        topology = scenario.generate_topology(scenario_config)
        gains = channel.build_gain_tensor(topology, scenario_config)
        outcome = interference_fixed_point(
            topology, gains, scenario_config, document.solver, document.fixed_point
        )
    except errors.SliceAllocError as e:
        return results.SeedOutcome(
            success=False,
            duration=time.time() - start_time,
            error=f"{type(e).__name__}: {e}",
            num_small_cells=job.num_small_cells,
            users_per_small_cell=job.users_per_small_cell,
            seed=job.seed,
        )
    residuals = outcome.diagnostics.residuals
    return results.SeedOutcome(
        success=True,
        duration=time.time() - start_time,
        num_small_cells=job.num_small_cells,
        users_per_small_cell=job.users_per_small_cell,
        seed=job.seed,
        feasible=residuals is not None and residuals.feasible,
        capacities=outcome.capacities,
    )


def aggregate(outcomes: list[results.SeedOutcome]) -> list[results.SliceReport]:
    """Mean and sample standard deviation per (point, users, slice).

    Failed and infeasible outcomes are excluded with a warning. Values are
    summed in seed order so the result does not depend on completion order.
    """
    groups: dict[tuple[int, int], list[results.SeedOutcome]] = {}
    for outcome in sorted(
        outcomes, key=lambda o: (o.num_small_cells, o.users_per_small_cell, o.seed)
    ):
        if not outcome.success or outcome.capacities is None:
            logger.warning(
                f"Excluding seed {outcome.seed} at {outcome.num_small_cells} cells, "
                f"{outcome.users_per_small_cell} users/cell: {outcome.error}"
            )
            continue
        if not outcome.feasible:
            logger.warning(
                f"Excluding seed {outcome.seed} at {outcome.num_small_cells} cells, "
                f"{outcome.users_per_small_cell} users/cell: allocation violates "
                f"a constraint"
            )
            continue
        key = (outcome.num_small_cells, outcome.users_per_small_cell)
        groups.setdefault(key, []).append(outcome)

    reports = []
    for (point, users), members in sorted(groups.items()):
        for slice_ in topo.Slice:
            values = np.array(
                [m.capacities.of(slice_) for m in members if m.capacities]
            )
            reports.append(
                results.SliceReport(
                    num_small_cells=point,
                    users_per_small_cell=users,
                    slice=slice_,
                    total_capacity=float(np.mean(values)),
                    std_dev=float(np.std(values, ddof=1)) if values.size > 1 else 0.0,
                    num_seeds=int(values.size),
                )
            )
    return reports


def run_sweep(document: config_module.RunDocument) -> list[results.SliceReport]:
    """Evaluate every sweep job sequentially and aggregate.

    The CLI runs the same jobs on a thread pool through
    :class:`slice_alloc.core.async_sweep.AsyncSweepRunner`; both paths share
    :func:`evaluate_job` and :func:`aggregate`.
    """
    jobs = sweep_jobs(document)
    logger.info(f"Running sweep of {len(jobs)} jobs")
    return aggregate([evaluate_job(document, job) for job in jobs])


def trend_correlation(
    reports: list[results.SliceReport], slice_: topo.Slice, users_per_cell: int
) -> float:
    """Spearman rank correlation of mean capacity against small-cell count.

    Returns NaN when fewer than two points exist or the curve is flat.
    """
    points = sorted(
        (r.num_small_cells, r.total_capacity)
        for r in reports
        if r.slice is slice_ and r.users_per_small_cell == users_per_cell
    )
    if len(points) < 2:
        return float("nan")
    x, y = zip(*points, strict=True)
    if len(set(y)) == 1:
        return float("nan")
    return float(stats.spearmanr(x, y)[0])
