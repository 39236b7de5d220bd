import math

import numpy as np
import pytest

from airsep.mdp import (A_CLIMB, A_DESCEND, A_FAST, A_HOLD_ALT, A_HOLD_SPEED,
                        A_SLOW, INTRUDER_DIM, OWNSHIP_DIM, NormConfig,
                        RewardConfig, apply_action, build_intruder_states,
                        build_ownship_state, reward, wrap_angle)
from airsep.network import crossing_network
from airsep.scenario import generate_scenario
from airsep.world import ENVELOPES, FT_TO_M, Aircraft, WorldState

LANES = (400.0, 700.0, 1000.0, 1300.0, 1600.0)


def make_aircraft(**kw):
    defaults = dict(id="A", route=[(0.0, 0.0), (5000.0, 0.0)], wpt_idx=1,
                    x=0.0, y=0.0, z=700.0, heading=0.0, v_kt=50.0,
                    dest="B", origin="A")
    defaults.update(kw)
    return Aircraft(**defaults)


def make_obs(own=None, intruders=()):
    world_net = crossing_network()
    scen = generate_scenario(world_net, 2, 60.0, 1.0, 1.0, seed=0)
    scen.demands = []
    world = WorldState(scen, seed=0)
    own = own or make_aircraft()
    world.aircraft[own.id] = own
    for ac in intruders:
        world.aircraft[ac.id] = ac
    return world.observe(own.id, "perfect")


class TestStateVectors:
    def test_ownship_dimension(self):
        s = build_ownship_state(make_obs(), NormConfig())
        assert s.shape == (OWNSHIP_DIM,)
        assert np.isfinite(s).all()

    def test_intruder_dimension(self):
        intr = make_aircraft(id="B", x=300.0, y=100.0)
        h = build_intruder_states(make_obs(intruders=[intr]), NormConfig())
        assert len(h) == 1
        assert h[0].shape == (INTRUDER_DIM,)

    def test_no_intruders_empty_list(self):
        assert build_intruder_states(make_obs(), NormConfig()) == []

    def test_prev_action_one_hot(self):
        own = make_aircraft(prev_action=3)
        s = build_ownship_state(make_obs(own=own), NormConfig())
        one_hot = s[9:15]
        assert one_hot.tolist() == [0.0, 0.0, 0.0, 1.0, 0.0, 0.0]

    def test_waypoint_padding_repeats_final(self):
        # single remaining waypoint: the 5 offset slots all point at it
        own = make_aircraft(route=[(0.0, 0.0), (800.0, 0.0)], x=200.0)
        s = build_ownship_state(make_obs(own=own), NormConfig())
        offsets = s[15:].reshape(5, 2)
        assert np.allclose(offsets, offsets[0])
        assert offsets[0, 0] == pytest.approx(600.0 / 1000.0)

    def test_normalization_ranges(self):
        own = make_aircraft(v_kt=65.0, z=1600.0)
        s = build_ownship_state(make_obs(own=own), NormConfig())
        assert abs(s[:9]).max() <= 1.0 + 1e-9

    def test_intruder_bearing_sign(self):
        left = make_aircraft(id="L", x=100.0, y=200.0)
        right = make_aircraft(id="R", x=100.0, y=-200.0)
        h = build_intruder_states(make_obs(intruders=[left, right]), NormConfig())
        # ownship heads +x; intruders sorted by id: L then R
        assert h[0][8] > 0 > h[1][8]


class TestWrapAngle:
    def test_identity_in_range(self):
        assert wrap_angle(1.0) == 1.0

    def test_wraps_above(self):
        assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)

    def test_wraps_below(self):
        assert wrap_angle(-3 * math.pi) == pytest.approx(math.pi)


class TestApplyAction:
    def test_speed_actions(self):
        ac = make_aircraft()
        assert apply_action(ac, A_SLOW, LANES) == (-2.0, 0.0)
        assert apply_action(ac, A_HOLD_SPEED, LANES) == (0.0, 0.0)
        assert apply_action(ac, A_FAST, LANES) == (2.0, 0.0)

    def test_prev_action_recorded(self):
        ac = make_aircraft()
        apply_action(ac, A_FAST, LANES)
        assert ac.prev_action == A_FAST

    def test_climb_snaps_to_next_lane(self):
        ac = make_aircraft(z=700.0)
        dv, vz = apply_action(ac, A_CLIMB, LANES)
        assert (dv, vz) == (0.0, 500.0)
        assert ac.target_alt == 1000.0

    def test_climb_mid_lane(self):
        ac = make_aircraft(z=820.0)
        apply_action(ac, A_CLIMB, LANES)
        assert ac.target_alt == 1000.0

    def test_climb_at_ceiling_holds(self):
        ac = make_aircraft(z=1600.0)
        dv, vz = apply_action(ac, A_CLIMB, LANES)
        assert vz == 0.0
        assert ac.target_alt is None

    def test_descend_snaps_to_lower_lane(self):
        ac = make_aircraft(z=1000.0)
        dv, vz = apply_action(ac, A_DESCEND, LANES)
        assert vz == -500.0
        assert ac.target_alt == 700.0

    def test_descend_at_floor_holds(self):
        ac = make_aircraft(z=400.0)
        dv, vz = apply_action(ac, A_DESCEND, LANES)
        assert vz == 0.0

    def test_speed_action_cancels_pending_level_off(self):
        ac = make_aircraft(z=750.0)
        ac.target_alt = 1000.0
        apply_action(ac, A_FAST, LANES)
        assert ac.target_alt is None

    def test_hold_alt_cancels_latched_target(self):
        ac = make_aircraft(z=750.0)
        ac.target_alt = 1000.0
        assert apply_action(ac, A_HOLD_ALT, LANES) == (0.0, 0.0)
        assert ac.target_alt is None

    def test_vertical_rate_uses_envelope(self):
        ac = make_aircraft(z=400.0, envelope=ENVELOPES["aam"])
        _, vz = apply_action(ac, A_CLIMB, LANES)
        assert vz == 400.0

    def test_invalid_action(self):
        with pytest.raises(ValueError):
            apply_action(make_aircraft(), 6, LANES)


class TestReward:
    CFG = RewardConfig()

    def test_nmac_branch(self):
        # within both thresholds, costless action: -1 - omega
        r = reward(100.0, 50.0, A_HOLD_ALT, self.CFG)
        assert r == pytest.approx(-1.0 - 0.001, abs=1e-12)

    def test_proximity_branch(self):
        # d = 500 m, vertically separated enough not to be an NMAC
        r = reward(500.0, 300.0, A_HOLD_ALT, self.CFG)
        assert r == pytest.approx(-0.1 + 0.0001 * 500.0 - 0.001, abs=1e-12)

    def test_proximity_continuous_at_dmax(self):
        below = reward(1000.0 - 1e-9, 300.0, A_HOLD_ALT, self.CFG)
        above = reward(1000.0 + 1e-9, 300.0, A_HOLD_ALT, self.CFG)
        assert below == pytest.approx(above, abs=1e-10)

    def test_clear_branch(self):
        assert reward(5000.0, 0.0, A_HOLD_ALT, self.CFG) == pytest.approx(
            -0.001, abs=1e-12)

    def test_no_intruder(self):
        assert reward(None, 0.0, A_HOLD_ALT, self.CFG) == pytest.approx(
            -0.001, abs=1e-12)

    def test_speed_change_penalty(self):
        r = reward(None, 0.0, A_SLOW, self.CFG)
        assert r == pytest.approx(-0.001 - 0.001, abs=1e-12)

    def test_altitude_change_penalty(self):
        r = reward(None, 0.0, A_CLIMB, self.CFG)
        assert r == pytest.approx(-0.01 - 0.001, abs=1e-12)

    def test_close_but_vertically_separated_is_not_nmac(self):
        # inside the horizontal threshold but 300 ft apart vertically
        r = reward(100.0, 300.0, A_HOLD_ALT, self.CFG)
        assert r == pytest.approx(-0.001, abs=1e-12)

    def test_worst_case_stacks_penalties(self):
        r = reward(10.0, 0.0, A_CLIMB, self.CFG)
        assert r == pytest.approx(-1.0 - 0.01 - 0.001, abs=1e-12)
