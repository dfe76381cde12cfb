import math

import numpy as np
import pytest

from wavesweep.driver import (DEFAULT_IC, SOD_LEFT, SOD_RIGHT, SimulationConfig,
                              TimestepController, choose_dt, gaussian_profile,
                              initial_condition, run, step)
from wavesweep.grid import BoundaryCondition, GridSpec
from wavesweep.oracles import error_norms, exact_advection
from wavesweep.parallel import StaticThreads, WorkStealing
from wavesweep.sweep import CellWise, RowWise, Tiled


def gas_spec(nx, ny):
    return GridSpec(nx=nx, ny=ny, dx=1.0 / nx, dy=1.0 / ny, num_eqn=4)


class TestChooseDt:
    def test_symmetric_speeds(self):
        ctl = TimestepController(cfl_target=0.9)
        assert choose_dt(1.0, 1.0, 0.01, 0.01, ctl) == pytest.approx(0.0045, rel=1e-12)

    def test_pure_x_motion(self):
        ctl = TimestepController(cfl_target=0.5)
        assert choose_dt(2.0, 0.0, 0.1, 0.1, ctl) == pytest.approx(0.025, rel=1e-12)

    def test_fixed_dt_bypasses_formula(self):
        ctl = TimestepController(fixed_dt=1e-3)
        assert choose_dt(0.0, 0.0, 0.1, 0.1, ctl) == 1e-3

    def test_stationary_without_fixed_dt_is_an_error(self):
        with pytest.raises(ValueError, match="stationary"):
            choose_dt(0.0, 0.0, 0.1, 0.1, TimestepController())

    def test_dt_max_and_remaining_clamp(self):
        ctl = TimestepController(cfl_target=0.9, dt_max=1e-3)
        assert choose_dt(1.0, 0.0, 1.0, 1.0, ctl) == 1e-3
        assert choose_dt(1.0, 0.0, 1.0, 1.0, ctl, remaining=1e-4) == 1e-4

    @pytest.mark.parametrize("cfl", [0.0, 1.0, -0.1, 1.5])
    def test_cfl_target_range(self, cfl):
        with pytest.raises(ValueError):
            TimestepController(cfl_target=cfl)


class TestConfig:
    def test_exactly_one_stop_rule(self):
        spec = gas_spec(8, 8)
        with pytest.raises(ValueError, match="exactly one"):
            SimulationConfig(spec=spec, kernel="euler", ic="euler-sod-x")
        with pytest.raises(ValueError, match="exactly one"):
            SimulationConfig(spec=spec, kernel="euler", ic="euler-sod-x",
                             t_final=1.0, num_steps=5)

    def test_unknown_kernel(self):
        with pytest.raises(ValueError, match="unknown kernel"):
            SimulationConfig(spec=gas_spec(8, 8), kernel="maxwell",
                             ic="euler-sod-x", num_steps=1)


class TestInitialConditions:
    def test_shock_tube_cell_values(self):
        spec = gas_spec(8, 4)
        state, _, params = initial_condition("euler-sod-x", spec)
        assert params == {"gamma": 1.4}
        assert tuple(state.interior[:, 0, 0]) == SOD_LEFT == (1.0, 0.0, 0.0, 2.5)
        assert tuple(state.interior[:, -1, 0]) == SOD_RIGHT == (0.125, 0.0, 0.0, 0.25)

    def test_pressure_pulse_is_at_rest(self):
        # odd cell count puts one cell center exactly on the bump's peak
        spec = GridSpec(nx=15, ny=15, dx=1 / 15, dy=1 / 15, num_eqn=3)
        state, _, _ = initial_condition("acoustics-pulse", spec)
        assert np.all(state.interior[1] == 0.0)
        assert np.all(state.interior[2] == 0.0)
        assert state.interior[0].max() == pytest.approx(1.0, rel=1e-12)

    def test_material_interface_aux(self):
        spec = GridSpec(nx=8, ny=4, dx=1 / 8, dy=1 / 4, num_eqn=3, num_aux=2)
        _, aux, _ = initial_condition("acoustics-var-interface", spec)
        assert np.all(aux.interior[0] == 1.0)
        assert np.all(aux.interior[1, :4] == 1.0)
        assert np.all(aux.interior[1, 4:] == 3.0)

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown initial condition"):
            initial_condition("vortex", gas_spec(8, 8))

    def test_spec_mismatch(self):
        with pytest.raises(ValueError, match="num_eqn"):
            initial_condition("advection-gaussian", gas_spec(8, 8))

    def test_every_kernel_has_a_default_ic(self):
        from wavesweep.kernels import KERNEL_NAMES
        assert set(DEFAULT_IC) == set(KERNEL_NAMES)


class TestStep:
    def test_uniform_state_is_a_fixed_point(self):
        spec = gas_spec(10, 6)
        config = SimulationConfig(spec=spec, kernel="euler", ic="euler-uniform",
                                  num_steps=1)
        state, aux, _ = initial_condition("euler-uniform", spec)
        before = state.interior.copy()
        _, report = step(state, aux, config, TimestepController())
        assert np.array_equal(state.interior, before)
        assert report.cfl == pytest.approx(0.9, abs=1e-12)
        assert report.dt > 0 and report.sweep_ms >= 0.0

    def test_single_step_conserves_mass(self):
        spec = GridSpec(nx=24, ny=24, dx=1 / 24, dy=1 / 24, num_eqn=1)
        config = SimulationConfig(spec=spec, kernel="advection",
                                  ic="advection-gaussian", num_steps=1)
        state, aux, _ = initial_condition("advection-gaussian", spec)
        total = state.interior.sum()
        step(state, aux, config, TimestepController())
        assert abs(state.interior.sum() - total) <= 1e-12 * max(1.0, abs(total))

    def test_shock_tube_keeps_y_momentum_exactly_zero(self):
        spec = gas_spec(32, 4)
        config = SimulationConfig(spec=spec, kernel="euler", ic="euler-sod-x",
                                  num_steps=1)
        state, aux, _ = initial_condition("euler-sod-x", spec)
        for _ in range(10):
            step(state, aux, config, TimestepController())
        assert np.all(state.interior[2] == 0.0)

    def test_realized_cfl_never_exceeds_target(self):
        spec = gas_spec(16, 16)
        config = SimulationConfig(spec=spec, kernel="euler", ic="euler-sod-x",
                                  num_steps=25)
        _, reports = run(config, TimestepController(cfl_target=0.8))
        for rep in reports:
            assert rep.cfl <= 0.8 + 1e-12


class TestRun:
    def test_zero_steps_returns_initial_condition(self):
        spec = gas_spec(8, 4)
        config = SimulationConfig(spec=spec, kernel="euler", ic="euler-sod-x",
                                  num_steps=0)
        state, reports = run(config)
        fresh, _, _ = initial_condition("euler-sod-x", spec)
        assert reports == []
        assert np.array_equal(state.interior, fresh.interior)

    def test_t_final_reached_exactly(self):
        spec = GridSpec(nx=16, ny=16, dx=1 / 16, dy=1 / 16, num_eqn=1)
        config = SimulationConfig(spec=spec, kernel="advection",
                                  ic="advection-gaussian", t_final=0.1)
        _, reports = run(config)
        assert math.fsum(r.dt for r in reports) == pytest.approx(0.1, abs=1e-14)

    def test_tiny_t_final_is_one_truncated_step(self):
        spec = GridSpec(nx=16, ny=16, dx=1 / 16, dy=1 / 16, num_eqn=1)
        config = SimulationConfig(spec=spec, kernel="advection",
                                  ic="advection-gaussian", t_final=1e-6)
        _, reports = run(config)
        assert len(reports) == 1
        assert reports[0].dt == pytest.approx(1e-6, abs=1e-18)

    @pytest.mark.parametrize("strategy,backend", [
        (RowWise(), StaticThreads(3)),
        (Tiled(5, 4), WorkStealing(3, 2)),
        (CellWise(), WorkStealing(2)),
    ])
    def test_determinism_across_execution_plans(self, strategy, backend):
        spec = gas_spec(20, 14)
        base = SimulationConfig(spec=spec, kernel="euler", ic="euler-sod-x",
                                num_steps=6)
        alt = SimulationConfig(spec=spec, kernel="euler", ic="euler-sod-x",
                               strategy=strategy, backend=backend, num_steps=6)
        ref, _ = run(base)
        out, _ = run(alt)
        assert np.array_equal(ref.data, out.data)

    def test_translation_error_shrinks_with_resolution(self):
        errors = []
        for n in (32, 64):
            spec = GridSpec(nx=n, ny=n, dx=1.0 / n, dy=1.0 / n, num_eqn=1)
            config = SimulationConfig(spec=spec, kernel="advection",
                                      ic="advection-gaussian", t_final=0.25)
            state, _ = run(config)
            exact = exact_advection(gaussian_profile(spec), 1.0, 1.0, 0.25, spec)
            errors.append(error_norms(state, exact).l1)
        assert errors[1] < errors[0]

    def test_variable_coefficient_run_stays_finite(self):
        spec = GridSpec(nx=32, ny=8, dx=1 / 32, dy=1 / 8, num_eqn=3, num_aux=2)
        config = SimulationConfig(spec=spec, kernel="acoustics-var",
                                  ic="acoustics-var-interface",
                                  bc_x=BoundaryCondition.EXTRAPOLATE,
                                  num_steps=20)
        state, reports = run(config)
        assert np.all(np.isfinite(state.interior))
        assert reports[0].max_speed_x == 3.0  # fast material on the right
