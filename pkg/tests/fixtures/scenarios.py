"""Scenario and allocation-problem fixtures for slice-alloc testing."""

import numpy as np
import pytest

from slice_alloc.core import channel
from slice_alloc.core import config
from slice_alloc.core.models import allocation


P_MAX = channel.dbm_to_watt(23.0)
CAP = channel.dbm_to_watt(-101.2)
BANDWIDTH = 200e3
NOISE = channel.dbm_to_watt(-174.0) * BANDWIDTH


def make_problem(
    g_own,
    g_macro=None,
    *,
    cross_tier=None,
    co_tier=None,
    p_max=P_MAX,
    interference_cap=CAP,
    noise=NOISE,
    bandwidth=BANDWIDTH,
    min_rates=None,
    weights=None,
    urllc=None,
):
    """Build an AllocationProblem from a (K, N, U) own-gain array.

    User ids are assigned cell by cell starting at 0.
    """
    g_own = np.asarray(g_own, dtype=np.float64)
    K, N, U = g_own.shape
    g_macro = (
        np.full_like(g_own, 1e-20)
        if g_macro is None
        else np.asarray(g_macro, dtype=np.float64)
    )
    urllc = np.zeros((K, U), dtype=bool) if urllc is None else np.asarray(urllc)
    return allocation.AllocationProblem(
        g_own=g_own,
        g_macro=g_macro,
        cross_tier_interference=(
            np.zeros((K, N)) if cross_tier is None else np.asarray(cross_tier)
        ),
        co_tier_interference=np.zeros((K, N)) if co_tier is None else np.asarray(co_tier),
        macro_schedule=np.full(N, -1, dtype=np.int64),
        macro_power=np.zeros(N),
        noise_per_subchannel=noise,
        p_max=p_max,
        interference_cap=interference_cap,
        subchannel_bandwidth=bandwidth,
        min_rates=np.zeros((K, U)) if min_rates is None else np.asarray(min_rates),
        weights=np.ones((K, U)) if weights is None else np.asarray(weights),
        user_ids=np.arange(K * U, dtype=np.int64).reshape(K, U),
        urllc=urllc,
    )


def random_problem(seed, K=2, N=2, U=2, min_rate=0.0, urllc_weight=0.0):
    """Small random instance with realistic path gains and a tight cap.

    With a positive ``min_rate`` slot 0 of every cell is a uRLLC user with
    that guarantee and objective weight ``urllc_weight``.
    """
    rng = np.random.default_rng(seed)
    own_path = 10.0 ** (-rng.uniform(60.0, 80.0, size=(K, 1, U)) / 10.0)
    macro_path = 10.0 ** (-rng.uniform(125.0, 140.0, size=(K, 1, U)) / 10.0)
    g_own = own_path * rng.exponential(size=(K, N, U))
    g_macro = macro_path * rng.exponential(size=(K, N, U))
    if min_rate <= 0:
        return make_problem(g_own, g_macro)
    urllc = np.zeros((K, U), dtype=bool)
    urllc[:, 0] = True
    return make_problem(
        g_own,
        g_macro,
        min_rates=np.where(urllc, min_rate, 0.0),
        weights=np.where(urllc, urllc_weight, 1.0),
        urllc=urllc,
    )


@pytest.fixture
def tiny_scenario():
    """A three-cell deployment small enough to solve in a unit test."""
    return config.ScenarioConfig(
        num_small_cells=3,
        users_per_small_cell=2,
        num_macro_users=4,
        num_subchannels=4,
        urllc_min_rate=1e6,
        seed=7,
    )


@pytest.fixture
def fast_solver():
    """Solver parameters with a short iteration budget."""
    return config.SolverParams(max_iters=80)


@pytest.fixture
def tiny_document(tiny_scenario, fast_solver):
    """A run document with a two-point, two-seed sweep."""
    return config.RunDocument(
        scenario=tiny_scenario,
        solver=fast_solver,
        fixed_point=config.FixedPointParams(rounds=2, num_ttis=2),
        sweep=config.SweepConfig(
            num_small_cells=[1, 3], users_per_small_cell=[2], seeds=[1, 2]
        ),
    )
