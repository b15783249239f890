import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hydrotwin.control import (
    BiasCommand,
    CamGrid,
    PidGains,
    PidState,
    blade_command,
    cam_lookup,
    default_cam,
    pid_step,
    reset_pid_to,
)


class TestPidStep:
    def test_proportional_only(self):
        gains = PidGains(k_p=0.01, t_i=math.inf, t_d=0.0)
        gate, _ = pid_step(gains, PidState(), q_sp=1000.0, q_act=0.0, q_bias=0.0, dt=1.0)
        assert gate == pytest.approx(10.0)

    def test_zero_error_identity(self):
        gains = PidGains()
        gate, state = pid_step(gains, PidState(), 8000.0, 8000.0, 0.0, dt=1.0)
        assert gate == 0.0
        assert state.integral_accum == 0.0

    def test_bias_shifts_error(self):
        gains = PidGains(k_p=0.01, t_i=math.inf)
        gate_plain, _ = pid_step(gains, PidState(), 7000.0, 7000.0, 1000.0, dt=1.0)
        gate_moved, _ = pid_step(gains, PidState(), 8000.0, 7000.0, 0.0, dt=1.0)
        assert gate_plain == pytest.approx(gate_moved)

    def test_setpoint_step_converges_against_reference_plant(self):
        # independent oracle: 1 s forward-Euler first-order flow plant
        gains = PidGains(k_p=0.005, t_i=120.0, t_d=0.0)
        tau_s, q_max = 180.0, 11000.0
        q = 6000.0
        gate = 100.0 * q / q_max
        state = reset_pid_to(gains, gate)
        q_sp = 8000.0
        for _ in range(60 * 60):  # 60 simulated minutes at 1 s substeps
            gate, state = pid_step(gains, state, q_sp, q, 0.0, dt=1.0)
            q_demand = q_max * gate / 100.0
            q += (q_demand - q) / tau_s
        assert abs(q_sp - q) < 0.01 * 2000.0  # error below 1% of the step

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            pid_step(PidGains(), PidState(), math.nan, 0.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            pid_step(PidGains(), PidState(), 0.0, 0.0, math.inf, 1.0)
        with pytest.raises(ValueError):
            pid_step(PidGains(), PidState(), 0.0, 0.0, 0.0, 0.0)

    @given(
        q_sp=st.floats(0, 20000),
        q_act=st.floats(0, 20000),
        q_bias=st.floats(-2000, 2000),
        integral=st.floats(-1e6, 1e6),
        prev=st.floats(-5000, 5000),
    )
    def test_output_always_within_limits(self, q_sp, q_act, q_bias, integral, prev):
        gains = PidGains(k_p=0.005, t_i=120.0, t_d=2.0)
        state = PidState(integral_accum=integral, prev_error=prev)
        gate, new_state = pid_step(gains, state, q_sp, q_act, q_bias, dt=60.0)
        assert gains.output_min <= gate <= gains.output_max
        assert gains.output_min <= new_state.last_output <= gains.output_max

    def test_anti_windup_bound_under_sustained_saturation(self):
        gains = PidGains(k_p=0.005, t_i=120.0)
        state = PidState()
        cap = gains.integral_cap()
        for _ in range(5000):
            _, state = pid_step(gains, state, 50000.0, 0.0, 0.0, dt=60.0)
            assert abs(state.integral_accum) <= cap + 1e-9

    def test_integral_frozen_while_saturated(self):
        gains = PidGains(k_p=0.01, t_i=60.0)
        state = PidState()
        gate1, s1 = pid_step(gains, state, 50000.0, 0.0, 0.0, dt=60.0)
        assert gate1 == gains.output_max
        gate2, s2 = pid_step(gains, s1, 50000.0, 0.0, 0.0, dt=60.0)
        assert gate2 == gains.output_max
        assert s2.integral_accum == s1.integral_accum

    def test_reset_pid_to_holds_operating_point(self):
        gains = PidGains()
        state = reset_pid_to(gains, 65.0)
        gate, _ = pid_step(gains, state, 8000.0, 8000.0, 0.0, dt=60.0)
        assert gate == pytest.approx(65.0)


class TestCamGrid:
    def plane_grid(self):
        gate = np.linspace(0, 100, 11)
        head = np.linspace(20, 40, 11)
        gg, hh = np.meshgrid(gate, head, indexing="ij")
        return CamGrid(gate, head, 0.3 * gg + 0.5 * hh)

    def test_node_exactness(self):
        cam = default_cam()
        for i, g in enumerate(cam.gate_axis):
            for j, h in enumerate(cam.head_axis):
                assert cam.lookup(float(g), float(h)) == pytest.approx(
                    cam.blade_table[i, j], abs=1e-12
                )

    @given(g=st.floats(0, 100), h=st.floats(20, 40))
    def test_plane_reproduction(self, g, h):
        cam = self.plane_grid()
        assert cam.lookup(g, h) == pytest.approx(0.3 * g + 0.5 * h, abs=1e-12)

    def test_edge_clamp(self):
        cam = self.plane_grid()
        assert cam.lookup(110.0, 30.0) == pytest.approx(cam.lookup(100.0, 30.0))
        assert cam.lookup(50.0, 10.0) == pytest.approx(cam.lookup(50.0, 20.0))
        assert cam.lookup(-5.0, 45.0) == pytest.approx(cam.lookup(0.0, 40.0))

    @given(g=st.floats(1, 99), h=st.floats(21, 39))
    @settings(max_examples=200)
    def test_continuity(self, g, h):
        cam = default_cam()
        a = cam.lookup(g, h)
        b = cam.lookup(g + 1e-9, h + 1e-9)
        assert abs(a - b) < 1e-6

    def test_malformed_grids_rejected_at_construction(self):
        with pytest.raises(ValueError):
            CamGrid([0.0], [20.0, 30.0], [[1.0, 2.0]])
        with pytest.raises(ValueError):
            CamGrid([0.0, 10.0, 5.0], [20.0, 30.0], np.zeros((3, 2)))
        with pytest.raises(ValueError):
            CamGrid([0.0, 10.0], [20.0, 30.0], np.zeros((3, 2)))
        with pytest.raises(ValueError):
            CamGrid([0.0, 10.0], [20.0, 30.0], [[0.0, 1.0], [2.0, 101.0]])

    def test_csv_round_trip(self, tmp_path):
        cam = default_cam()
        path = tmp_path / "cam.csv"
        cam.to_csv(path)
        loaded = CamGrid.from_csv(path)
        np.testing.assert_array_equal(loaded.gate_axis, cam.gate_axis)
        np.testing.assert_array_equal(loaded.head_axis, cam.head_axis)
        np.testing.assert_array_equal(loaded.blade_table, cam.blade_table)

    def test_csv_malformed_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x,20,30\n0,1,notanumber\n10,2,3\n")
        with pytest.raises(ValueError):
            CamGrid.from_csv(path)


class TestBladeCommand:
    def test_zero_bias_identity(self):
        assert blade_command(60.0, 0.0) == 60.0

    def test_status_example(self):
        assert blade_command(60.0, 10.0) == 70.0

    def test_clamp(self):
        assert blade_command(95.0, 10.0) == 100.0
        assert blade_command(5.0, -10.0) == 0.0

    def test_rate_limit(self):
        assert blade_command(60.0, 10.0, prev_bp=60.0, rate_limit=1.0) == 61.0
        assert blade_command(60.0, -10.0, prev_bp=60.0, rate_limit=1.0) == 59.0

    @given(b=st.floats(5, 95), bias=st.floats(-5, 5))
    def test_bias_symmetry(self, b, bias):
        up = blade_command(b, bias)
        if 0.0 < up < 100.0:
            assert blade_command(up, -bias) == pytest.approx(b, abs=1e-12)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            blade_command(math.nan, 0.0)


def test_bias_command_validation():
    with pytest.raises(ValueError):
        BiasCommand(math.inf, 0.0)
    cmd = BiasCommand(500.0, 2.0)
    assert cmd.q_bias == 500.0 and cmd.bp_bias == 2.0
