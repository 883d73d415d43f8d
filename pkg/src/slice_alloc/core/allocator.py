"""Dual decomposition solver for the small-cell uplink allocation problem.

The coupled constraints (per-user power budget, uRLLC minimum rate and the
per-subchannel macro interference cap) are relaxed with multipliers. For
fixed multipliers the problem splits into one subproblem per (cell,
subchannel): every candidate user gets its water-filling power, and the user
with the largest Lagrangian value wins the subchannel. The multipliers then
follow a projected subgradient step.

Internally objectives are in bit/s/Hz and multipliers are normalized (power
in units of p_max, interference in units of the cap) so that one step size
works across scenarios. Everything reported outside this module is in bps.
"""

import dataclasses
import math
import typing

from loguru import logger
import numpy as np

from slice_alloc.core import config as config_module
from slice_alloc.core import errors
from slice_alloc.core.models import allocation as models
from slice_alloc.core.models import topology as topo


if typing.TYPE_CHECKING:
    from slice_alloc.core import channel


LN2 = math.log(2.0)

# Relative tolerance of the feasibility checks on power and interference.
FEASIBILITY_RTOL = 1e-6
# Minimum-rate shortfall tolerated by the feasibility check, bps.
RATE_ATOL_BPS = 1.0
# Headroom above the minimum rate that repaired uRLLC users are trimmed to.
MIN_RATE_MARGIN = 1e-4
TRIM_BISECTIONS = 50
WATER_FILL_BISECTIONS = 60


def sinr(
    power: typing.Any, gain: typing.Any, interference: typing.Any, noise: float
) -> typing.Any:
    """Received signal-to-interference-plus-noise ratio.

    Raises:
        ValueError: If ``noise`` is not positive.
    """
    if noise <= 0:
        raise ValueError("noise must be positive")
    return np.asarray(power) * np.asarray(gain) / (noise + np.asarray(interference))


def subchannel_capacity(bandwidth: float, sinr_value: typing.Any) -> typing.Any:
    """Shannon capacity ``B log2(1 + sinr)`` in bps."""
    return bandwidth * np.log2(1.0 + np.asarray(sinr_value))


def _water_filling(
    weight: typing.Any, price: typing.Any, inverse_quality: typing.Any, p_max: float
) -> models.FloatArray:
    """Maximizer of ``w log2(1 + p/q) - c p`` over ``[0, p_max]``."""
    weight, price, inverse_quality = np.broadcast_arrays(
        np.asarray(weight, dtype=np.float64),
        np.asarray(price, dtype=np.float64),
        np.asarray(inverse_quality, dtype=np.float64),
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        level = np.where(price > 0, weight / (LN2 * price), np.inf)
    power = np.clip(level - inverse_quality, 0.0, p_max)
    return np.where(weight > 0, power, 0.0)


def _prices(
    problem: models.AllocationProblem, duals: models.DualState
) -> models.FloatArray:
    """Per-watt price of transmitting on (k, n) for user slot u, (K, N, U)."""
    return (
        duals.lam[:, np.newaxis, :] / problem.p_max
        + duals.nu[np.newaxis, :, np.newaxis]
        * problem.g_macro
        / problem.interference_cap
    )


def _effective_weights(
    problem: models.AllocationProblem, duals: models.DualState
) -> models.FloatArray:
    return np.where(problem.valid, problem.weights + duals.mu, 0.0)


def _inverse_quality(problem: models.AllocationProblem) -> models.FloatArray:
    return problem.interference_plus_noise[:, :, np.newaxis] / problem.g_own


def kkt_power(
    k: int, n: int, u: int, duals: models.DualState, problem: models.AllocationProblem
) -> float:
    """Stationary-point power of user slot ``u`` on subchannel ``n`` of cell ``k``.

    ``p = [w p_max / (ln2 (lam + nu h)) - I/g]`` clipped to ``[0, p_max]``
    where ``h`` is the user's normalized gain towards the macrocell. A zero
    total price yields ``p_max``; a zero weight yields 0.

    The weight is ``problem.weights[k, u] + mu``. eMBB slots carry weight 1.
    uRLLC slots carry ``SolverParams.urllc_objective_weight``: at 1 this is
    the textbook ``w = 1 + mu`` form, while the default 0 leaves
    ``w = mu``, so a uRLLC user with a zero multiplier transmits nothing.
    """
    if not problem.valid[k, u]:
        return 0.0
    weight = problem.weights[k, u] + duals.mu[k, u]
    price = (
        duals.lam[k, u] / problem.p_max
        + duals.nu[n] * problem.g_macro[k, n, u] / problem.interference_cap
    )
    inverse_quality = problem.interference_plus_noise[k, n] / problem.g_own[k, n, u]
    return float(_water_filling(weight, price, inverse_quality, problem.p_max))


def _lagrangian_terms(
    problem: models.AllocationProblem, duals: models.DualState
) -> tuple[models.FloatArray, models.FloatArray]:
    """Best power and Lagrangian value of every (k, n, u); padding gets -inf."""
    weights = _effective_weights(problem, duals)[:, np.newaxis, :]
    prices = _prices(problem, duals)
    inverse_quality = _inverse_quality(problem)
    power = _water_filling(weights, prices, inverse_quality, problem.p_max)
    values = weights * np.log2(1.0 + power / inverse_quality) - prices * power
    values = np.where(problem.valid[:, np.newaxis, :], values, -np.inf)
    return power, values


def solve_subproblem(
    k: int, n: int, duals: models.DualState, problem: models.AllocationProblem
) -> tuple[int | None, float, float]:
    """Pick the user of subchannel ``n`` in cell ``k`` under fixed duals.

    Returns:
        ``(user_id, power_w, value)``; ``user_id`` is ``None`` when no user
        has a positive Lagrangian value. Ties go to the lowest user id.
    """
    power, values = _lagrangian_terms(problem, duals)
    slot = int(np.argmax(values[k, n]))
    value = float(values[k, n, slot])
    if not value > 0:
        return None, 0.0, 0.0
    return int(problem.user_ids[k, slot]), float(power[k, n, slot]), value


def user_rates(
    assign: models.BoolArray,
    power: models.FloatArray,
    problem: models.AllocationProblem,
) -> models.FloatArray:
    """Achieved rate of every user slot in bps, (K, U)."""
    ratio = sinr(
        power,
        problem.g_own,
        (problem.cross_tier_interference + problem.co_tier_interference)[
            :, :, np.newaxis
        ],
        problem.noise_per_subchannel,
    )
    capacity = subchannel_capacity(problem.subchannel_bandwidth, ratio)
    return np.asarray(np.where(assign, capacity, 0.0).sum(axis=1))


def macro_interference(
    allocation: models.Allocation, problem: models.AllocationProblem
) -> models.FloatArray:
    """Small-cell power received at the macrocell per subchannel, W."""
    return np.asarray((allocation.power * problem.g_macro).sum(axis=(0, 2)))


def _guaranteed(problem: models.AllocationProblem) -> models.BoolArray:
    """User slots with a minimum rate, (K, U)."""
    return problem.valid & (problem.min_rates > 0)


def _scale_to_budget(
    chosen: models.FloatArray, problem: models.AllocationProblem
) -> models.FloatArray:
    totals = chosen.sum(axis=1)
    over = totals > problem.p_max
    scale = np.where(over, problem.p_max / np.where(over, totals, 1.0), 1.0)
    return chosen * scale[:, np.newaxis, :]


def _scale_to_cap(
    chosen: models.FloatArray, problem: models.AllocationProblem
) -> models.FloatArray:
    """Scale transmitters on over-cap subchannels, guaranteed users last.

    Users without a minimum rate give up power first. Guaranteed users are
    scaled only when their own contribution exceeds the cap.
    """
    guaranteed = _guaranteed(problem)[:, np.newaxis, :]
    received = chosen * problem.g_macro
    protected = np.where(guaranteed, received, 0.0).sum(axis=(0, 2))
    other = received.sum(axis=(0, 2)) - protected
    cap = problem.interference_cap
    over = protected + other > cap

    headroom = np.maximum(cap - protected, 0.0)
    other_scale = np.where(
        over & (other > 0), headroom / np.where(other > 0, other, 1.0), 1.0
    )
    other_scale = np.minimum(other_scale, 1.0)
    protected_scale = np.where(
        over & (protected > cap), cap / np.where(protected > 0, protected, 1.0), 1.0
    )
    scale = np.where(
        guaranteed,
        protected_scale[np.newaxis, :, np.newaxis],
        other_scale[np.newaxis, :, np.newaxis],
    )
    return chosen * scale


def _fewest_subchannels(
    quality: models.FloatArray,
    order: models.IntArray,
    eligible: models.IntArray,
    target: models.FloatArray,
    p_max: float,
    bandwidth: float,
) -> tuple[models.IntArray, models.BoolArray]:
    """Shortest prefix of ``order`` whose equal-power rate reaches ``target``.

    Rows that cannot reach the target take the prefix with the highest rate.
    Returns the prefix length per row and whether the target was reached.
    """
    rows, N = quality.shape
    ranked = np.take_along_axis(quality, order, axis=1)
    sizes = np.arange(1, N + 1)
    in_prefix = np.arange(N)[np.newaxis, :] < sizes[:, np.newaxis]
    terms = np.log2(
        1.0 + (p_max / sizes)[np.newaxis, :, np.newaxis] * ranked[:, np.newaxis, :]
    )
    rates = bandwidth * np.where(in_prefix[np.newaxis], terms, 0.0).sum(axis=2)
    rates = np.where(sizes[np.newaxis, :] <= eligible[:, np.newaxis], rates, -np.inf)
    meets = rates >= target[:, np.newaxis]
    reached = meets.any(axis=1)
    first = np.argmax(meets, axis=1)
    best = np.argmax(rates, axis=1)
    return np.where(reached, first, best) + 1, reached


def _trim_to_target(
    power: models.FloatArray,
    quality: models.FloatArray,
    target: models.FloatArray,
    bandwidth: float,
) -> models.FloatArray:
    """Common scale factor in (0, 1] bringing each row's rate down to ``target``."""
    low = np.zeros(power.shape[0])
    high = np.ones(power.shape[0])
    for _ in range(TRIM_BISECTIONS):
        middle = 0.5 * (low + high)
        rate = bandwidth * np.log2(1.0 + middle[:, np.newaxis] * power * quality).sum(
            axis=1
        )
        enough = rate >= target
        high = np.where(enough, middle, high)
        low = np.where(enough, low, middle)
    return high


def _repair_min_rates(
    assign: models.BoolArray,
    chosen: models.FloatArray,
    scores: models.FloatArray,
    power: models.FloatArray,
    problem: models.AllocationProblem,
) -> tuple[models.BoolArray, models.FloatArray]:
    """Hand short uRLLC users the subchannels they need, then refill the rest.

    Slots are processed in order, every cell at once. A short user claims
    subchannels not held by another guaranteed user, cheapest first: the
    order is its full-power rate per unit of weighted rate it displaces.
    It spreads p_max evenly over the fewest subchannels that meet its
    minimum; when one subchannel is enough, the one displacing the least
    weighted rate is taken. Zero-weight users are trimmed to the minimum.
    Subchannels left idle go back to the best-scoring unguaranteed user.
    """
    guaranteed = _guaranteed(problem)
    if not guaranteed.any():
        return assign, chosen
    K, N, U = problem.shape
    bandwidth = problem.subchannel_bandwidth
    quality = 1.0 / _inverse_quality(problem)
    target = problem.min_rates * (1.0 + MIN_RATE_MARGIN)
    assign = assign.copy()
    chosen = chosen.copy()
    repaired = np.zeros(K, dtype=bool)

    for u in range(U):
        rates = user_rates(assign, chosen, problem)
        protected = guaranteed.copy()
        protected[:, u] = False
        locked = (assign & protected[:, np.newaxis, :]).any(axis=2)
        short = guaranteed[:, u] & (rates[:, u] < problem.min_rates[:, u])
        short &= (~locked).any(axis=1)
        cells = np.nonzero(short)[0]
        if cells.size == 0:
            continue

        own_quality = quality[cells, :, u]
        full_rate = bandwidth * np.log2(1.0 + problem.p_max * own_quality)
        others = (np.arange(U) != u)[np.newaxis, np.newaxis, :]
        carried = subchannel_capacity(bandwidth, chosen[cells] * quality[cells])
        displaced = np.where(
            others, carried * problem.weights[cells][:, np.newaxis, :], 0.0
        ).sum(axis=2)
        cell_locked = locked[cells]
        ratio = np.where(cell_locked, -np.inf, full_rate / (displaced + 1.0))
        order = np.argsort(-ratio, axis=1, kind="stable")

        count, reached = _fewest_subchannels(
            own_quality,
            order,
            (~cell_locked).sum(axis=1),
            target[cells, u],
            problem.p_max,
            bandwidth,
        )
        rank = np.argsort(order, axis=1, kind="stable")
        selected = rank < count[:, np.newaxis]

        alone = ~cell_locked & (full_rate >= target[cells, u][:, np.newaxis])
        single = reached & (count == 1) & alone.any(axis=1)
        cheapest = np.argmin(np.where(alone, displaced, np.inf), axis=1)
        selected = np.where(
            single[:, np.newaxis],
            np.arange(N)[np.newaxis, :] == cheapest[:, np.newaxis],
            selected,
        )

        share = np.where(selected, problem.p_max / count[:, np.newaxis], 0.0)
        trim = reached & (problem.weights[cells, u] == 0)
        if trim.any():
            factor = _trim_to_target(
                share[trim], own_quality[trim], target[cells[trim], u], bandwidth
            )
            share[trim] *= factor[:, np.newaxis]

        cell_assign = assign[cells]
        cell_chosen = chosen[cells]
        taken = selected[:, :, np.newaxis] & others
        cell_assign[taken] = False
        cell_chosen[taken] = 0.0
        cell_assign[:, :, u] = selected
        cell_chosen[:, :, u] = share
        assign[cells] = cell_assign
        chosen[cells] = cell_chosen
        repaired[cells] = True

    if not repaired.any():
        return assign, chosen

    idle = ~assign.any(axis=2) & repaired[:, np.newaxis]
    open_slots = (problem.valid & ~guaranteed)[:, np.newaxis, :]
    masked = np.where(open_slots, scores, -np.inf)
    winner = np.argmax(masked, axis=2)
    best = np.take_along_axis(masked, winner[..., np.newaxis], axis=2)[..., 0]
    refill = np.zeros_like(assign)
    np.put_along_axis(
        refill, winner[..., np.newaxis], (idle & (best > 0))[..., np.newaxis], 2
    )
    assign |= refill
    chosen = np.where(refill, power, chosen)
    return assign, _scale_to_budget(chosen, problem)


def round_allocation(
    scores: models.FloatArray,
    power: models.FloatArray,
    problem: models.AllocationProblem,
    *,
    repair: bool = True,
) -> models.Allocation:
    """Turn per-(k, n, u) scores into a binary assignment.

    Each (cell, subchannel) goes to its highest-scoring user if that score
    is positive, with ties going to the lowest user slot. With ``repair``:

    1. powers over a user budget are scaled down uniformly;
    2. uRLLC users below their minimum rate claim subchannels
       (see :func:`_repair_min_rates`);
    3. on subchannels over the interference cap, users without a minimum
       rate are scaled down before guaranteed users are touched.

    An already feasible binary allocation is returned unchanged.
    """
    K, N, U = problem.shape
    if K == 0 or U == 0:
        return models.Allocation.empty((K, N, U))

    masked = np.where(problem.valid[:, np.newaxis, :], scores, -np.inf)
    winner = np.argmax(masked, axis=2)
    best = np.take_along_axis(masked, winner[..., np.newaxis], axis=2)[..., 0]
    assign = np.zeros((K, N, U), dtype=bool)
    np.put_along_axis(assign, winner[..., np.newaxis], (best > 0)[..., np.newaxis], 2)
    chosen = np.where(assign, power, 0.0)

    if repair:
        chosen = _scale_to_budget(chosen, problem)
        assign, chosen = _repair_min_rates(assign, chosen, scores, power, problem)
        capped = _scale_to_cap(chosen, problem)
        assign &= ~((capped == 0) & (chosen > 0))
        chosen = capped

    return models.Allocation(
        assign=assign, power=chosen, rates=user_rates(assign, chosen, problem)
    )


def polish_powers(
    allocation: models.Allocation, problem: models.AllocationProblem
) -> models.Allocation:
    """Water-fill every weighted user's budget over its assigned subchannels.

    The assignment is kept. Zero-weight users keep their powers. The cap is
    then restored as in :func:`round_allocation`.
    """
    K, N, U = problem.shape
    if K == 0 or U == 0:
        return allocation
    active = allocation.assign & (problem.weights > 0)[:, np.newaxis, :]
    inverse_quality = np.where(active, _inverse_quality(problem), np.inf)
    low = np.zeros((K, U))
    high = np.where(
        active.any(axis=1),
        inverse_quality.min(axis=1, initial=np.inf) + problem.p_max,
        0.0,
    )
    for _ in range(WATER_FILL_BISECTIONS):
        level = 0.5 * (low + high)
        spent = np.maximum(level[:, np.newaxis, :] - inverse_quality, 0.0).sum(axis=1)
        within = spent <= problem.p_max
        low = np.where(within, level, low)
        high = np.where(within, high, level)

    filled = np.maximum(low[:, np.newaxis, :] - inverse_quality, 0.0)
    chosen = np.where(active, filled, allocation.power)
    chosen = _scale_to_cap(chosen, problem)
    assign = allocation.assign & ~(active & (chosen == 0))
    chosen = np.where(assign, chosen, 0.0)
    return models.Allocation(
        assign=assign, power=chosen, rates=user_rates(assign, chosen, problem)
    )


@dataclasses.dataclass(frozen=True)
class _Residuals:
    """Vectorized feasibility view used inside the solver loop."""

    power: models.FloatArray
    rate: models.FloatArray
    interference: models.FloatArray
    shared: models.BoolArray

    @property
    def feasible(self) -> bool:
        return bool(
            np.all(self.power >= 0)
            and np.all(self.rate >= 0)
            and np.all(self.interference >= 0)
            and not np.any(self.shared)
        )

    @property
    def rate_shortfall(self) -> float:
        return float(np.maximum(-self.rate, 0.0).sum())


def _residuals(
    allocation: models.Allocation, problem: models.AllocationProblem
) -> _Residuals:
    """Slacks scaled so that a tolerated violation maps to >= 0."""
    valid = problem.valid
    power_slack = problem.p_max - allocation.user_power
    power_ok = np.where(valid, power_slack + FEASIBILITY_RTOL * problem.p_max, 0.0)
    needs_rate = valid & (problem.min_rates > 0)
    rate_slack = allocation.rates - problem.min_rates
    rate_ok = np.where(
        needs_rate, (rate_slack + RATE_ATOL_BPS) / np.maximum(problem.min_rates, 1), 0.0
    )
    interference_slack = problem.interference_cap - macro_interference(
        allocation, problem
    )
    interference_ok = interference_slack + FEASIBILITY_RTOL * problem.interference_cap
    shared = allocation.assign.sum(axis=2) > 1
    return _Residuals(
        power=power_ok, rate=rate_ok, interference=interference_ok, shared=shared
    )


def check_feasibility(
    allocation: models.Allocation, problem: models.AllocationProblem
) -> models.FeasibilityReport:
    """Evaluate every constraint of ``problem`` on ``allocation``."""
    residuals = _residuals(allocation, problem)
    power_slack = problem.p_max - allocation.user_power
    rate_slack = allocation.rates - problem.min_rates
    interference_slack = problem.interference_cap - macro_interference(
        allocation, problem
    )
    valid_slots = list(zip(*np.nonzero(problem.valid), strict=True))
    return models.FeasibilityReport(
        feasible=residuals.feasible,
        power_slack_w={
            int(problem.user_ids[k, u]): float(power_slack[k, u])
            for k, u in valid_slots
        },
        rate_slack_bps={
            int(problem.user_ids[k, u]): float(rate_slack[k, u])
            for k, u in valid_slots
            if problem.urllc[k, u]
        },
        interference_slack_w=[float(x) for x in interference_slack],
        exclusivity_violations=[
            (int(k), int(n)) for k, n in zip(*np.nonzero(residuals.shared), strict=True)
        ],
    )


def weighted_objective(
    allocation: models.Allocation, problem: models.AllocationProblem
) -> float:
    """Weighted sum rate in bps; the quantity the solver maximizes."""
    return float(np.where(problem.valid, problem.weights * allocation.rates, 0.0).sum())


def _compress(direction: models.FloatArray) -> models.FloatArray:
    return np.sign(direction) * np.log1p(np.abs(direction))


def subgradient_update(
    duals: models.DualState,
    allocation: models.Allocation,
    problem: models.AllocationProblem,
    *,
    compress: bool = False,
) -> models.DualState:
    """One projected subgradient step with step size ``s / sqrt(t)``.

    Directions are the normalized constraint violations of ``allocation``:
    power use over budget, rate shortfall relative to the minimum, and
    macro interference over the cap. ``compress`` maps each direction
    through ``sign(v) log(1 + |v|)``. Multipliers never go negative.
    """
    step = duals.step_scale / math.sqrt(duals.iteration + 1)
    valid = problem.valid

    lam_dir = np.where(valid, allocation.user_power / problem.p_max - 1.0, 0.0)
    needs_rate = valid & (problem.min_rates > 0)
    mu_dir = np.where(
        needs_rate,
        1.0 - allocation.rates / np.where(needs_rate, problem.min_rates, 1.0),
        0.0,
    )
    nu_dir = macro_interference(allocation, problem) / problem.interference_cap - 1.0

    if compress:
        lam_dir, mu_dir, nu_dir = (_compress(d) for d in (lam_dir, mu_dir, nu_dir))

    return models.DualState(
        lam=np.maximum(duals.lam + step * lam_dir, 0.0),
        mu=np.maximum(duals.mu + step * mu_dir, 0.0),
        nu=np.maximum(duals.nu + step * nu_dir, 0.0),
        iteration=duals.iteration + 1,
        step_scale=duals.step_scale,
    )


def _dual_value_from_terms(
    values: models.FloatArray,
    duals: models.DualState,
    problem: models.AllocationProblem,
) -> float:
    valid = problem.valid
    per_slot = np.maximum(values.max(axis=2, initial=-np.inf), 0.0)
    normalized = (
        per_slot.sum()
        + np.where(valid, duals.lam, 0.0).sum()
        - np.where(valid, duals.mu * problem.min_rates, 0.0).sum()
        / problem.subchannel_bandwidth
        + duals.nu.sum()
    )
    return float(normalized * problem.subchannel_bandwidth)


def dual_value(duals: models.DualState, problem: models.AllocationProblem) -> float:
    """Dual function value in bps; an upper bound on every feasible objective."""
    K, _, U = problem.shape
    if K == 0 or U == 0:
        return float(duals.nu.sum() * problem.subchannel_bandwidth)
    _, values = _lagrangian_terms(problem, duals)
    return _dual_value_from_terms(values, duals, problem)


def max_achievable_rates(problem: models.AllocationProblem) -> models.FloatArray:
    """Rate of each slot with every subchannel at p_max and no co-tier load."""
    ratio = sinr(
        problem.p_max,
        problem.g_own,
        problem.cross_tier_interference[:, :, np.newaxis],
        problem.noise_per_subchannel,
    )
    return np.asarray(
        subchannel_capacity(problem.subchannel_bandwidth, ratio).sum(axis=1)
    )


def _check_min_rates(problem: models.AllocationProblem) -> None:
    best = max_achievable_rates(problem)
    short = problem.valid & (problem.min_rates > 0) & (best < problem.min_rates)
    if np.any(short):
        k, u = (int(i[0]) for i in np.nonzero(short))
        raise errors.InfeasibleMinRate(
            int(problem.user_ids[k, u]),
            float(best[k, u]),
            float(problem.min_rates[k, u]),
        )


def relative_gap(bound: float, value: float) -> float:
    """Duality gap ``(bound - value) / |bound|``; 1 bps floors the denominator."""
    return max(bound - value, 0.0) / max(abs(bound), 1.0)


def _diagnostics(
    problem: models.AllocationProblem,
    duals: models.DualState,
    **fields: typing.Any,
) -> models.SolveDiagnostics:
    valid = list(zip(*np.nonzero(problem.valid), strict=True))
    return models.SolveDiagnostics(
        final_lam={
            int(problem.user_ids[k, u]): float(duals.lam[k, u]) for k, u in valid
        },
        final_mu={
            int(problem.user_ids[k, u]): float(duals.mu[k, u])
            for k, u in valid
            if problem.urllc[k, u]
        },
        final_nu=[float(x) for x in duals.nu],
        **fields,
    )


def solve_dual(
    problem: models.AllocationProblem,
    params: config_module.SolverParams | None = None,
) -> tuple[models.Allocation, models.DualState, models.SolveDiagnostics]:
    """Run dual decomposition until it settles or reaches max_iters.

    The run has converged once the relative multiplier change drops below
    ``tolerance`` or the best feasible objective is within ``gap_tolerance``
    of the lowest dual bound seen.

    Every iterate's Lagrangian maximizer is repaired into a candidate
    allocation; the best feasible candidate is returned after a final
    :func:`polish_powers` pass, which is kept only if it stays feasible and
    improves the objective. When no candidate is feasible the one with the
    smallest rate shortfall is returned and ``residuals.feasible`` is false.

    Raises:
        InfeasibleMinRate: If some uRLLC user cannot reach its minimum rate
            even alone on every subchannel at full power.
    """
    params = params or config_module.SolverParams()
    K, N, U = problem.shape
    duals = models.DualState.initial(problem, params.step_scale)

    if K == 0 or U == 0:
        allocation = models.Allocation.empty((K, N, U))
        return (
            allocation,
            duals,
            _diagnostics(
                problem,
                duals,
                iterations=0,
                converged=True,
                best_iteration=0,
                best_objective_bps=0.0,
                feasible_iterations=1,
                weak_duality_holds=True,
                dual_bound_bps=dual_value(duals, problem),
                relative_gap=0.0,
                residuals=check_feasibility(allocation, problem),
            ),
        )

    _check_min_rates(problem)

    best: models.Allocation | None = None
    best_key = (-math.inf, -math.inf)
    best_iteration = 0
    feasible_iterations = 0
    dual_values: list[float] = []
    primal_values: list[float] = []
    best_feasible_value = -math.inf
    min_dual = math.inf
    converged = False

    for iteration in range(1, params.max_iters + 1):
        power, values = _lagrangian_terms(problem, duals)
        bound = _dual_value_from_terms(values, duals, problem)
        dual_values.append(bound)
        min_dual = min(min_dual, bound)

        candidate = round_allocation(values, power, problem)
        residuals = _residuals(candidate, problem)
        objective = weighted_objective(candidate, problem)
        primal_values.append(objective)

        if residuals.feasible:
            feasible_iterations += 1
            best_feasible_value = max(best_feasible_value, objective)
            key = (1.0, objective)
        else:
            key = (0.0, -residuals.rate_shortfall)
        if key > best_key:
            best, best_key, best_iteration = candidate, key, iteration

        if best_feasible_value > min_dual * (1 + 1e-9) + 1e-9:
            logger.warning(
                f"Dual bound {min_dual:.6g} below feasible objective "
                f"{best_feasible_value:.6g} at iteration {iteration}"
            )
        if (
            feasible_iterations
            and relative_gap(min_dual, best_feasible_value) <= params.gap_tolerance
        ):
            converged = True
            break

        raw = round_allocation(values, power, problem, repair=False)
        updated = subgradient_update(
            duals, raw, problem, compress=params.compress_subgradient
        )
        change = _relative_change(duals, updated)
        duals = updated
        if change < params.tolerance:
            converged = True
            break

    assert best is not None
    if feasible_iterations:
        polished = polish_powers(best, problem)
        polished_value = weighted_objective(polished, problem)
        if (
            _residuals(polished, problem).feasible
            and polished_value > best_feasible_value
        ):
            logger.debug(
                f"Power polish raised the objective from "
                f"{best_feasible_value:.6g} to {polished_value:.6g} bps"
            )
            best, best_feasible_value = polished, polished_value

    report = check_feasibility(best, problem)
    if not report.feasible:
        logger.warning(
            f"No feasible allocation found in {len(dual_values)} iterations; "
            f"returning least-violating iterate {best_iteration}"
        )
    elif not converged:
        logger.debug(f"Multipliers still moving after {params.max_iters} iterations")

    diagnostics = _diagnostics(
        problem,
        duals,
        iterations=len(dual_values),
        converged=converged,
        best_iteration=best_iteration,
        best_objective_bps=weighted_objective(best, problem),
        feasible_iterations=feasible_iterations,
        weak_duality_holds=bool(
            best_feasible_value <= min_dual * (1 + 1e-9) + 1e-9
        ),
        dual_bound_bps=min_dual,
        relative_gap=(
            relative_gap(min_dual, best_feasible_value) if feasible_iterations else None
        ),
        dual_values_bps=dual_values,
        primal_values_bps=primal_values,
        residuals=report,
    )
    return best, duals, diagnostics


def _relative_change(old: models.DualState, new: models.DualState) -> float:
    before = np.concatenate((old.lam.ravel(), old.mu.ravel(), old.nu))
    after = np.concatenate((new.lam.ravel(), new.mu.ravel(), new.nu))
    if before.size == 0:
        return 0.0
    return float(np.abs(after - before).max() / max(1.0, np.abs(before).max()))


def build_problem(
    topology: topo.Topology,
    gains: "channel.GainTensor",
    scenario: config_module.ScenarioConfig,
    solver: config_module.SolverParams | None = None,
    *,
    macro_schedule: models.IntArray | None = None,
    macro_power: models.FloatArray | None = None,
    co_tier_interference: models.FloatArray | None = None,
) -> models.AllocationProblem:
    """Assemble the small-cell allocation problem of one topology.

    Args:
        topology: Network layout; small cell k uses receiver index k + 1.
        gains: Gain tensor built for ``topology``.
        scenario: Scenario parameters (powers, cap, bandwidth, min rate).
        solver: Supplies the uRLLC objective weight. It defaults to 0, so
            uRLLC throughput above the minimum rate adds nothing to the
            objective; set it to 1 to count uRLLC and eMBB rate alike.
        macro_schedule: Macro user id per subchannel, -1 for idle; all idle
            when omitted.
        macro_power: Power of each scheduled macro user in W.
        co_tier_interference: Initial co-tier estimate, (K, N); zero when
            omitted.
    """
    solver = solver or config_module.SolverParams()
    K = topology.num_small_cells
    N = gains.num_subchannels
    members = [topology.cell_users(cell.id) for cell in topology.small_cells]
    U = max((len(m) for m in members), default=0)

    user_ids = np.full((K, U), -1, dtype=np.int64)
    urllc = np.zeros((K, U), dtype=bool)
    for k, cell_members in enumerate(members):
        for u, user in enumerate(cell_members):
            user_ids[k, u] = user.id
            urllc[k, u] = user.slice is topo.Slice.URLLC

    # Padding slots reuse user 0 so gains stay positive; they are masked out.
    rows = np.where(user_ids >= 0, user_ids, 0)
    stations = np.arange(1, K + 1)
    g_own = np.transpose(gains.gains[rows, stations[:, np.newaxis], :], (0, 2, 1))
    g_macro = np.transpose(gains.gains[rows, 0, :], (0, 2, 1))
    if K == 0 or U == 0:
        g_own = np.ones((K, N, U))
        g_macro = np.ones((K, N, U))

    if macro_schedule is None:
        macro_schedule = np.full(N, -1, dtype=np.int64)
    if macro_power is None:
        macro_power = np.zeros(N)
    active = macro_schedule >= 0
    macro_rows = np.where(active, macro_schedule, 0)
    cross_tier = np.zeros((K, N))
    if K and active.any():
        cross_tier = np.where(
            active[np.newaxis, :],
            macro_power[np.newaxis, :]
            * gains.gains[
                macro_rows[np.newaxis, :], stations[:, np.newaxis], np.arange(N)
            ],
            0.0,
        )

    weights = np.where(urllc, solver.urllc_objective_weight, 1.0)
    weights = np.where(user_ids >= 0, weights, 0.0)
    min_rates = np.where(urllc, scenario.urllc_min_rate, 0.0)

    return models.AllocationProblem(
        g_own=np.ascontiguousarray(g_own, dtype=np.float64),
        g_macro=np.ascontiguousarray(g_macro, dtype=np.float64),
        cross_tier_interference=cross_tier,
        co_tier_interference=(
            np.zeros((K, N)) if co_tier_interference is None else co_tier_interference
        ),
        macro_schedule=macro_schedule,
        macro_power=macro_power,
        noise_per_subchannel=scenario.noise_per_subchannel,
        p_max=scenario.p_max,
        interference_cap=scenario.interference_cap,
        subchannel_bandwidth=scenario.subchannel_bandwidth,
        min_rates=min_rates,
        weights=weights,
        user_ids=user_ids,
        urllc=urllc,
    )
