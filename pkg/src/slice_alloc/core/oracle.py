"""Exhaustive reference solver for tiny allocation problems.

Every (cell, subchannel) slot either idles or carries one user at one level
of a uniform power grid over ``[0, p_max]``. All combinations are scored in
numpy chunks; the best feasible one under the same weighted objective as
the dual solver is returned.
"""

import math

from loguru import logger
import numpy as np

from slice_alloc.core import allocator
from slice_alloc.core import errors
from slice_alloc.core.models import allocation as models


MAX_EVALUATIONS = 10**8
CHUNK_SIZE = 1 << 15


def _slot_options(
    problem: models.AllocationProblem, levels: models.FloatArray
) -> list[list[tuple[int, float]]]:
    """Options per slot: idle first, then (user slot, power) pairs."""
    K, N, U = problem.shape
    options = []
    for k in range(K):
        users = [u for u in range(U) if problem.valid[k, u]]
        for _n in range(N):
            options.append(
                [(-1, 0.0)] + [(u, float(p)) for u in users for p in levels[1:]]
            )
    return options


def brute_force_oracle(
    problem: models.AllocationProblem, power_levels: int = 16
) -> tuple[models.Allocation, float]:
    """Grid-optimal allocation of ``problem``.

    Args:
        problem: Allocation instance; co-tier interference is taken as given.
        power_levels: Grid points over ``[0, p_max]``, both ends included.

    Returns:
        The best feasible allocation and its weighted objective in bps. Ties
        go to the first combination in enumeration order.

    Raises:
        TooLarge: If ``(U + 1)^(K N) * L^(K N)`` exceeds 1e8.
        InfeasibleMinRate: If no grid point meets every minimum rate.
    """
    if power_levels < 2:
        raise ValueError("power_levels must be at least 2")
    K, N, U = problem.shape
    slots = K * N
    bound = float(U + 1) ** slots * float(power_levels) ** slots
    if bound > MAX_EVALUATIONS:
        raise errors.TooLarge(
            f"{K} cells x {N} subchannels x {U} users at {power_levels} levels "
            f"needs {bound:.3g} evaluations (limit {MAX_EVALUATIONS:.0e})"
        )
    if slots == 0:
        return models.Allocation.empty((K, N, U)), 0.0

    levels = np.linspace(0.0, problem.p_max, power_levels)
    options = _slot_options(problem, levels)
    radix = [len(o) for o in options]
    width = max(radix)

    # Per-slot lookup tables indexed [slot, option].
    user_of = np.full((slots, width), -1, dtype=np.int64)
    power_of = np.zeros((slots, width))
    for s, slot_options in enumerate(options):
        for o, (u, p) in enumerate(slot_options):
            user_of[s, o] = u
            power_of[s, o] = p

    cell_of = np.repeat(np.arange(K), N)
    sub_of = np.tile(np.arange(N), K)
    safe_user = np.maximum(user_of, 0)
    g_own = problem.g_own[cell_of[:, None], sub_of[:, None], safe_user]
    g_macro = problem.g_macro[cell_of[:, None], sub_of[:, None], safe_user]
    rate_of = allocator.subchannel_capacity(
        problem.subchannel_bandwidth,
        allocator.sinr(
            power_of,
            g_own,
            (problem.cross_tier_interference + problem.co_tier_interference)[
                cell_of, sub_of
            ][:, None],
            problem.noise_per_subchannel,
        ),
    )
    rate_of = np.where(user_of >= 0, rate_of, 0.0)
    interference_of = np.where(user_of >= 0, power_of * g_macro, 0.0)
    weight_of = np.where(
        user_of >= 0, problem.weights[cell_of[:, None], safe_user], 0.0
    )
    objective_of = weight_of * rate_of

    # Per-user contributions [slot, option, user slot].
    owner = user_of[..., None] == np.arange(U)
    user_power_of = np.where(owner, power_of[..., None], 0.0)
    user_rate_of = np.where(owner, rate_of[..., None], 0.0)

    total = math.prod(radix)
    slot_index = np.arange(slots)
    best_index = -1
    best_value = -math.inf
    p_limit = problem.p_max * (1 + 1e-9)
    cap_limit = problem.interference_cap * (1 + 1e-9)
    needs_rate = problem.valid & (problem.min_rates > 0)

    for start in range(0, total, CHUNK_SIZE):
        flat = np.arange(start, min(start + CHUNK_SIZE, total))
        digits = np.stack(np.unravel_index(flat, radix), axis=1)
        picked = (slot_index, digits)

        objective = objective_of[picked].sum(axis=1)

        per_cell_power = user_power_of[picked].reshape(-1, K, N, U).sum(axis=2)
        per_cell_rate = user_rate_of[picked].reshape(-1, K, N, U).sum(axis=2)
        received = interference_of[picked].reshape(-1, K, N).sum(axis=1)

        ok = (per_cell_power <= p_limit).all(axis=(1, 2))
        ok &= (received <= cap_limit).all(axis=1)
        ok &= np.where(
            needs_rate,
            per_cell_rate >= problem.min_rates - allocator.RATE_ATOL_BPS,
            True,
        ).all(axis=(1, 2))
        if not ok.any():
            continue

        scored = np.where(ok, objective, -np.inf)
        winner = int(np.argmax(scored))
        if scored[winner] > best_value:
            best_value = float(scored[winner])
            best_index = int(flat[winner])

    if best_index < 0:
        k, u = (int(i[0]) for i in np.nonzero(needs_rate))
        raise errors.InfeasibleMinRate(
            int(problem.user_ids[k, u]), 0.0, float(problem.min_rates[k, u])
        )

    digits = np.array(np.unravel_index(best_index, radix))
    assign = np.zeros((K, N, U), dtype=bool)
    power = np.zeros((K, N, U))
    for s, option in enumerate(digits):
        u = int(user_of[s, option])
        if u >= 0:
            assign[cell_of[s], sub_of[s], u] = True
            power[cell_of[s], sub_of[s], u] = power_of[s, option]

    result = models.Allocation(
        assign=assign, power=power, rates=allocator.user_rates(assign, power, problem)
    )
    logger.debug(f"Oracle searched {total} combinations, best {best_value:.6g} bps")
    return result, allocator.weighted_objective(result, problem)
