"""End-to-end capacity trends of the small-cell density sweep."""

import time

import pytest

from slice_alloc.core import channel
from slice_alloc.core import config
from slice_alloc.core import handover
from slice_alloc.core import metrics
from slice_alloc.core import scenario
from slice_alloc.core.models import topology as topo


DENSITIES = [10, 20, 30, 40, 50]


def _curve(reports, slice_, users):
    return {
        r.num_small_cells: r.total_capacity
        for r in reports
        if r.slice is slice_ and r.users_per_small_cell == users
    }


def _dense(reports):
    return [r for r in reports if r.num_small_cells in DENSITIES]


@pytest.mark.slow
@pytest.mark.integration
class TestDensitySweep:
    """Test the eMBB, uRLLC and IoT trends against small-cell density."""

    def test_complete(self, density_reports):
        """Test that every point, user count and slice was aggregated."""
        assert len(density_reports) == 6 * 2 * len(topo.Slice)
        assert all(r.num_seeds == 20 for r in density_reports)

    @pytest.mark.parametrize("users", [2, 4])
    def test_embb_rises_with_density(self, density_reports, users):
        """Test a strictly increasing eMBB curve."""
        curve = _curve(density_reports, topo.Slice.EMBB, users)
        values = [curve[k] for k in DENSITIES]
        assert all(a < b for a, b in zip(values, values[1:], strict=False))
        rho = metrics.trend_correlation(
            _dense(density_reports), topo.Slice.EMBB, users
        )
        assert rho >= 0.9

    @pytest.mark.parametrize("users", [2, 4])
    def test_iot_falls_with_density(self, density_reports, users):
        """Test that cross-tier interference erodes the macro capacity."""
        rho = metrics.trend_correlation(_dense(density_reports), topo.Slice.IOT, users)
        assert rho <= -0.9
        curve = _curve(density_reports, topo.Slice.IOT, users)
        assert curve[50] < curve[10]

    @pytest.mark.parametrize("users", [2, 4])
    def test_urllc_rises_with_density(self, density_reports, users):
        """Test that the uRLLC slice grows with the small-cell count."""
        rho = metrics.trend_correlation(
            _dense(density_reports), topo.Slice.URLLC, users
        )
        assert rho >= 0.9
        curve = _curve(density_reports, topo.Slice.URLLC, users)
        assert curve[50] > curve[10]

    def test_more_users_more_embb(self, density_reports):
        """Test the 4-user curve against the 2-user curve at every point."""
        two = _curve(density_reports, topo.Slice.EMBB, 2)
        four = _curve(density_reports, topo.Slice.EMBB, 4)
        for k in DENSITIES:
            assert four[k] >= two[k]

    def test_urllc_gap(self, density_reports):
        """Test the eMBB to uRLLC ratio at 50 small cells."""
        embb = _curve(density_reports, topo.Slice.EMBB, 2)[50]
        urllc = _curve(density_reports, topo.Slice.URLLC, 2)[50]
        assert 10 <= embb / urllc <= 40

    def test_zero_cell_baseline(self, density_reports):
        """Test that without small cells only the IoT slice carries traffic."""
        for users in (2, 4):
            assert _curve(density_reports, topo.Slice.EMBB, users)[0] == 0.0
            assert _curve(density_reports, topo.Slice.URLLC, users)[0] == 0.0
            iot = _curve(density_reports, topo.Slice.IOT, users)
            assert iot[0] == max(iot.values())


@pytest.mark.slow
@pytest.mark.integration
class TestFixedPointSettles:
    """Test convergence of the co-tier loop on a dense deployment."""

    def test_embb_stable_after_round_three(self):
        """Test per-round eMBB change below 1% after the third round."""
        cfg = config.ScenarioConfig(num_small_cells=25, seed=3)
        topology = scenario.generate_topology(cfg)
        gains = channel.build_gain_tensor(topology, cfg)
        result = metrics.interference_fixed_point(
            topology, gains, cfg, params=config.FixedPointParams(rounds=5)
        )
        rounds = result.embb_per_round
        for before, after in zip(rounds[3:], rounds[4:], strict=False):
            assert abs(after - before) / before < 0.01

    @pytest.mark.parametrize("num_small_cells", [10, 50])
    @pytest.mark.parametrize("users", [2, 4])
    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_final_allocation_feasible(self, num_small_cells, users, seed):
        """Test that the settled allocation meets every uRLLC guarantee."""
        cfg = config.ScenarioConfig(
            num_small_cells=num_small_cells, users_per_small_cell=users, seed=seed
        )
        topology = scenario.generate_topology(cfg)
        gains = channel.build_gain_tensor(topology, cfg)
        result = metrics.interference_fixed_point(topology, gains, cfg)
        assert result.diagnostics.residuals.feasible


@pytest.mark.integration
class TestHandoverModelCheck:
    """Test the exhaustive handover check at full depth."""

    def test_canonical_only_within_budget(self):
        """Test uniqueness of the completing trace and the runtime bound."""
        start = time.perf_counter()
        traces = handover.completing_traces(8)
        elapsed = time.perf_counter() - start
        assert traces == [tuple(kind for kind, _ in handover.CANONICAL_SEQUENCE)]
        assert elapsed < 10.0
