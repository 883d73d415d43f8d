"""Tests for topology generation and validation."""

import itertools
import math

import pytest

from slice_alloc.core import config
from slice_alloc.core import errors
from slice_alloc.core import scenario
from slice_alloc.core.models import topology as topo


class TestGenerateTopology:
    """Test seeded topology generation."""

    def test_empty_small_cell_tier(self):
        """Test a deployment without small cells."""
        cfg = config.ScenarioConfig(num_small_cells=0, num_macro_users=50)
        topology = scenario.generate_topology(cfg)
        assert topology.num_small_cells == 0
        assert len(topology.users) == 50
        assert all(u.slice is topo.Slice.IOT for u in topology.users)

    def test_fifty_cells_respect_geometry(self):
        """Test separation and coverage at the densest sweep point."""
        cfg = config.ScenarioConfig(num_small_cells=50, seed=1)
        topology = scenario.generate_topology(cfg)
        for a, b in itertools.combinations(topology.small_cells, 2):
            assert math.dist(a.center, b.center) >= 20.0
        for cell in topology.small_cells:
            assert math.hypot(*cell.center) <= 500.0

    def test_deterministic(self):
        """Test that equal configs give byte-identical topologies."""
        cfg = config.ScenarioConfig(num_small_cells=10, seed=5)
        first = scenario.generate_topology(cfg)
        second = scenario.generate_topology(cfg)
        assert first.to_json() == second.to_json()

    def test_different_seeds_differ(self):
        """Test that seed pairs give different user positions."""
        for seed in range(10):
            a = scenario.generate_topology(config.ScenarioConfig(seed=seed))
            b = scenario.generate_topology(config.ScenarioConfig(seed=seed + 100))
            assert sorted(u.position for u in a.users) != sorted(
                u.position for u in b.users
            )

    def test_nested_deployments(self):
        """Test that a larger deployment extends a smaller one."""
        small = scenario.generate_topology(config.ScenarioConfig(num_small_cells=10))
        large = scenario.generate_topology(config.ScenarioConfig(num_small_cells=20))
        assert large.small_cells[:10] == small.small_cells
        assert large.macro_users == small.macro_users
        assert large.cell_users(3) == small.cell_users(3)

    def test_indoor_flags(self):
        """Test that small-cell users are indoor and macro users outdoor."""
        topology = scenario.generate_topology(config.ScenarioConfig())
        for user in topology.users:
            assert user.indoor is not user.is_macro

    def test_user_ids_contiguous(self):
        """Test macro users first, then small-cell users cell by cell."""
        cfg = config.ScenarioConfig(num_small_cells=3, num_macro_users=4)
        topology = scenario.generate_topology(cfg)
        assert [u.id for u in topology.users] == list(range(4 + 3 * 2))
        assert [u.id for u in topology.cell_users(1)] == [6, 7]

    def test_placement_infeasible(self):
        """Test that an overcrowded disc fails with PlacementInfeasible."""
        cfg = config.ScenarioConfig(
            macro_radius=30.0, min_small_cell_separation=25.0, num_small_cells=20
        )
        with pytest.raises(errors.PlacementInfeasible) as exc_info:
            scenario.generate_topology(cfg)
        assert exc_info.value.attempts == scenario.MAX_PLACEMENT_ATTEMPTS

    @pytest.mark.slow
    def test_separation_across_seeds(self):
        """Test pairwise separation for 100 seeds at 50 cells."""
        for seed in range(100):
            cfg = config.ScenarioConfig(num_small_cells=50, seed=seed)
            topology = scenario.generate_topology(cfg)
            assert scenario.validate_topology(topology, cfg) == []


class TestAssignSlices:
    """Test per-cell uRLLC/eMBB labelling."""

    @pytest.mark.parametrize(
        "users,fraction,expected_urllc",
        [(2, 0.5, 1), (4, 0.0, 0), (4, 0.5, 2), (3, 0.5, 2), (4, 1.0, 4)],
    )
    def test_quota(self, users, fraction, expected_urllc):
        """Test the ceil(fraction * users) quota per cell."""
        cfg = config.ScenarioConfig(
            num_small_cells=4, users_per_small_cell=users, urllc_fraction=fraction
        )
        topology = scenario.generate_topology(cfg)
        for cell in topology.small_cells:
            members = topology.cell_users(cell.id)
            labels = [u.slice for u in members]
            assert labels.count(topo.Slice.URLLC) == expected_urllc
            assert labels.count(topo.Slice.EMBB) == users - expected_urllc
            # lowest ids first
            assert labels == sorted(labels, key=lambda s: s is not topo.Slice.URLLC)

    def test_macro_users_stay_iot(self):
        """Test that relabelling never touches macro users."""
        topology = scenario.generate_topology(config.ScenarioConfig(num_small_cells=2))
        relabelled = scenario.assign_slices(topology, 1.0)
        assert all(u.slice is topo.Slice.IOT for u in relabelled.macro_users)


class TestValidateTopology:
    """Test invariant checking."""

    def test_generated_topology_is_valid(self):
        """Test the generator postcondition."""
        cfg = config.ScenarioConfig(num_small_cells=25, users_per_small_cell=4)
        assert scenario.validate_topology(scenario.generate_topology(cfg), cfg) == []

    def test_close_cells_flagged(self):
        """Test that two centers 5 m apart yield one separation violation."""
        cfg = config.ScenarioConfig(num_small_cells=2, num_macro_users=0)
        topology = topo.Topology(
            small_cells=[
                topo.SmallCell(id=0, center=(100.0, 0.0)),
                topo.SmallCell(id=1, center=(105.0, 0.0)),
            ]
        )
        violations = scenario.validate_topology(topology, cfg)
        assert len(violations) == 1
        assert violations[0].invariant == "cell-separation"
        assert violations[0].entity_ids == [0, 1]

    def test_macro_user_with_wrong_slice(self):
        """Test that a macro user labelled eMBB is flagged."""
        cfg = config.ScenarioConfig(num_small_cells=0, num_macro_users=1)
        topology = topo.Topology(
            users=[
                topo.User(
                    id=0, position=(1.0, 1.0), attachment=topo.MACRO, slice=topo.Slice.EMBB
                )
            ]
        )
        violations = scenario.validate_topology(topology, cfg)
        assert [v.invariant for v in violations] == ["slice-role"]
        assert violations[0].entity_ids == [0]

    def test_user_outside_its_cell(self):
        """Test that a user far from its cell is flagged."""
        cfg = config.ScenarioConfig(num_small_cells=1, num_macro_users=0)
        topology = topo.Topology(
            small_cells=[topo.SmallCell(id=0, center=(0.0, 0.0))],
            users=[
                topo.User(
                    id=0,
                    position=(50.0, 0.0),
                    attachment=0,
                    slice=topo.Slice.EMBB,
                    indoor=True,
                )
            ],
        )
        violations = scenario.validate_topology(topology, cfg)
        assert [v.invariant for v in violations] == ["user-in-cell"]

    def test_json_round_trip(self):
        """Test that a topology survives its JSON document."""
        topology = scenario.generate_topology(config.ScenarioConfig(num_small_cells=2))
        assert topo.Topology.from_json(topology.to_json()) == topology
