"""Allocation problem, primal/dual state and solver report models.

Array-valued state is held in frozen dataclasses indexed ``[k, n, u]``
(small cell, subchannel, user slot of that cell). Report models that end up
in JSON files are pydantic models.
"""

import dataclasses

import numpy as np
import numpy.typing as npt
import pydantic


FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]
BoolArray = npt.NDArray[np.bool_]


@dataclasses.dataclass(frozen=True)
class AllocationProblem:
    """One uplink allocation instance for every small cell of a network.

    Attributes:
        g_own: Gain from each user to its serving small cell, (K, N, U).
        g_macro: Gain from each user to the macrocell, (K, N, U).
        cross_tier_interference: Macro-user power received at each small
            cell per subchannel in W, (K, N).
        co_tier_interference: Neighbouring small-cell power received at each
            small cell per subchannel in W, (K, N).
        macro_schedule: Macro user id transmitting on each subchannel, -1 if
            idle, (N,).
        macro_power: Transmit power of the scheduled macro user in W, (N,).
        noise_per_subchannel: Thermal noise over one subchannel in W.
        p_max: Per-user power budget in W.
        interference_cap: Per-subchannel macro interference threshold in W.
        subchannel_bandwidth: Hz.
        min_rates: Minimum rate per user slot in bps (0 for non-uRLLC), (K, U).
        weights: Objective weight per user slot, (K, U).
        user_ids: Topology user id per slot, -1 for padding, (K, U).
        urllc: Whether the slot holds a uRLLC user, (K, U).
    """

    g_own: FloatArray
    g_macro: FloatArray
    cross_tier_interference: FloatArray
    co_tier_interference: FloatArray
    macro_schedule: IntArray
    macro_power: FloatArray
    noise_per_subchannel: float
    p_max: float
    interference_cap: float
    subchannel_bandwidth: float
    min_rates: FloatArray
    weights: FloatArray
    user_ids: IntArray
    urllc: BoolArray

    def __post_init__(self) -> None:
        if self.p_max <= 0:
            raise ValueError("p_max must be positive")
        if self.interference_cap <= 0:
            raise ValueError("interference_cap must be positive")
        if self.noise_per_subchannel <= 0:
            raise ValueError("noise_per_subchannel must be positive")
        if self.subchannel_bandwidth <= 0:
            raise ValueError("subchannel_bandwidth must be positive")
        if np.any(self.min_rates < 0):
            raise ValueError("min_rates must be non-negative")
        if np.any(self.co_tier_interference < 0):
            raise ValueError("co_tier_interference must be non-negative")
        if self.g_own.shape != self.g_macro.shape:
            raise ValueError("g_own and g_macro shapes differ")
        K, N, U = self.g_own.shape
        if self.co_tier_interference.shape != (K, N):
            raise ValueError("co_tier_interference must be (K, N)")
        if self.cross_tier_interference.shape != (K, N):
            raise ValueError("cross_tier_interference must be (K, N)")
        for name in ("min_rates", "weights", "user_ids", "urllc"):
            if getattr(self, name).shape != (K, U):
                raise ValueError(f"{name} must be (K, U)")

    @property
    def shape(self) -> tuple[int, int, int]:
        """(K, N, U)."""
        K, N, U = self.g_own.shape
        return int(K), int(N), int(U)

    @property
    def valid(self) -> BoolArray:
        """Mask of real (non-padding) user slots, (K, U)."""
        return self.user_ids >= 0

    @property
    def interference_plus_noise(self) -> FloatArray:
        """Noise plus cross- and co-tier interference per (k, n), W."""
        return (
            self.noise_per_subchannel
            + self.cross_tier_interference
            + self.co_tier_interference
        )

    def with_co_tier(self, co_tier: FloatArray) -> "AllocationProblem":
        """Copy with a new co-tier interference estimate."""
        return dataclasses.replace(self, co_tier_interference=co_tier)


@dataclasses.dataclass(frozen=True)
class Allocation:
    """Binary subchannel assignment, powers in W and achieved rates in bps."""

    assign: BoolArray
    power: FloatArray
    rates: FloatArray

    @classmethod
    def empty(cls, shape: tuple[int, int, int]) -> "Allocation":
        """Allocation with nothing assigned."""
        K, _, U = shape
        return cls(
            assign=np.zeros(shape, dtype=bool),
            power=np.zeros(shape, dtype=np.float64),
            rates=np.zeros((K, U), dtype=np.float64),
        )

    @property
    def user_power(self) -> FloatArray:
        """Total transmit power per user slot, (K, U)."""
        return np.asarray(self.power.sum(axis=1))


@dataclasses.dataclass(frozen=True)
class DualState:
    """Lagrange multipliers of the coupled constraints.

    ``lam`` prices power in units of p_max per user slot, ``mu`` weights the
    rate of uRLLC user slots, and ``nu`` prices macro interference in units
    of the interference cap per subchannel.
    """

    lam: FloatArray
    mu: FloatArray
    nu: FloatArray
    iteration: int = 0
    step_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.step_scale <= 0:
            raise ValueError("step_scale must be positive")
        for name in ("lam", "mu", "nu"):
            if np.any(getattr(self, name) < 0):
                raise ValueError(f"{name} multipliers must be non-negative")

    @classmethod
    def initial(cls, problem: AllocationProblem, step_scale: float) -> "DualState":
        """All multipliers at zero."""
        K, N, U = problem.shape
        return cls(
            lam=np.zeros((K, U)),
            mu=np.zeros((K, U)),
            nu=np.zeros(N),
            iteration=0,
            step_scale=step_scale,
        )


class FeasibilityReport(pydantic.BaseModel):
    """Constraint slacks of an allocation; negative slack is a violation."""

    feasible: bool
    power_slack_w: dict[int, float] = pydantic.Field(
        default_factory=dict, description="p_max minus total power, by user id"
    )
    rate_slack_bps: dict[int, float] = pydantic.Field(
        default_factory=dict, description="rate minus minimum rate, uRLLC users"
    )
    interference_slack_w: list[float] = pydantic.Field(
        default_factory=list, description="cap minus macro interference"
    )
    exclusivity_violations: list[tuple[int, int]] = pydantic.Field(
        default_factory=list, description="(cell, subchannel) with >1 user"
    )


class SolveDiagnostics(pydantic.BaseModel):
    """Trace of one dual decomposition run."""

    iterations: int
    converged: bool
    best_iteration: int
    best_objective_bps: float
    feasible_iterations: int
    weak_duality_holds: bool
    dual_bound_bps: float = pydantic.Field(
        0.0, description="lowest dual value seen; bounds every feasible objective"
    )
    relative_gap: float | None = pydantic.Field(
        None, description="(dual bound - best objective) / dual bound"
    )
    final_lam: dict[int, float] = pydantic.Field(
        default_factory=dict, description="power multiplier by user id"
    )
    final_mu: dict[int, float] = pydantic.Field(
        default_factory=dict, description="min-rate multiplier by uRLLC user id"
    )
    final_nu: list[float] = pydantic.Field(
        default_factory=list, description="interference multiplier by subchannel"
    )
    dual_values_bps: list[float] = pydantic.Field(default_factory=list)
    primal_values_bps: list[float] = pydantic.Field(default_factory=list)
    residuals: FeasibilityReport | None = None


class AssignmentEntry(pydantic.BaseModel):
    """One assigned (cell, subchannel, user) triple."""

    cell: int
    subchannel: int
    user: int
    power_w: float


class AllocationDocument(pydantic.BaseModel):
    """JSON form of an allocation."""

    assignments: list[AssignmentEntry]
    user_rates_bps: dict[int, float]

    @classmethod
    def from_allocation(
        cls, allocation: Allocation, problem: AllocationProblem
    ) -> "AllocationDocument":
        """Flatten an allocation into assignment triples."""
        entries = [
            AssignmentEntry(
                cell=int(k),
                subchannel=int(n),
                user=int(problem.user_ids[k, u]),
                power_w=float(allocation.power[k, n, u]),
            )
            for k, n, u in zip(*np.nonzero(allocation.assign), strict=True)
        ]
        rates = {
            int(problem.user_ids[k, u]): float(allocation.rates[k, u])
            for k, u in zip(*np.nonzero(problem.valid), strict=True)
        }
        return cls(assignments=entries, user_rates_bps=rates)
