"""Environment dynamics against hand-stepped oracles and basic invariants."""

import numpy as np
import pytest

from ofexi import envs


class TestWrapAngle:
    def test_identity_inside_range(self):
        for th in (-3.0, -0.5, 0.0, 0.5, 3.0):
            np.testing.assert_allclose(envs.wrap_angle(th), th, atol=1e-12)

    def test_wraps_outside_range(self):
        np.testing.assert_allclose(envs.wrap_angle(3 * np.pi / 2), -np.pi / 2,
                                   atol=1e-12)
        np.testing.assert_allclose(envs.wrap_angle(-3 * np.pi / 2), np.pi / 2,
                                   atol=1e-12)
        np.testing.assert_allclose(envs.wrap_angle(2 * np.pi), 0.0, atol=1e-12)

    def test_period(self):
        rng = np.random.default_rng(0)
        for th in rng.uniform(-20, 20, size=200):
            np.testing.assert_allclose(envs.wrap_angle(th),
                                       envs.wrap_angle(th + 2 * np.pi),
                                       atol=1e-9)


class TestPendulum:
    def test_upright_equilibrium(self):
        """theta = 0, omega = 0, u = 0 is a fixed point with zero reward."""
        state, result = envs.pendulum_step((0.0, 0.0), 0.0)
        assert state == (0.0, 0.0)
        assert result.reward == 0.0

    def test_hand_stepped_oracle(self):
        """One step from theta=1, omega=0.5, u=1.5, worked by hand:

        reward = -(1^2 + 0.1*0.25 + 0.001*2.25) = -1.02725
        omega' = 15 sin(1) + 3*1.5 = 17.122064772118447
        omega1 = 0.5 + 0.05 * omega' = 1.3561032386059224
        theta1 = 1.0 + 0.05 * omega1 = 1.0678051619302961
        """
        (theta1, omega1), result = envs.pendulum_step((1.0, 0.5), 1.5)
        np.testing.assert_allclose(result.reward, -1.02725, rtol=1e-12)
        np.testing.assert_allclose(omega1, 1.3561032386059224, rtol=1e-12)
        np.testing.assert_allclose(theta1, 1.0678051619302961, rtol=1e-12)
        np.testing.assert_allclose(result.next_obs,
                                   [np.cos(theta1), np.sin(theta1), omega1],
                                   rtol=1e-12)

    def test_velocity_update_precedes_position(self):
        """Semi-implicit: theta advances with the already-updated omega."""
        (theta1, omega1), _ = envs.pendulum_step((0.5, 0.0), 0.0)
        omega_expected = 0.05 * 15.0 * np.sin(0.5)
        np.testing.assert_allclose(omega1, omega_expected, rtol=1e-12)
        np.testing.assert_allclose(theta1, 0.5 + 0.05 * omega_expected,
                                   rtol=1e-12)

    def test_torque_clipped(self):
        (_, om_hi), r_hi = envs.pendulum_step((0.0, 0.0), 100.0)
        (_, om_two), r_two = envs.pendulum_step((0.0, 0.0), 2.0)
        np.testing.assert_allclose(om_hi, om_two, rtol=1e-12)
        np.testing.assert_allclose(r_hi.reward, r_two.reward, rtol=1e-12)

    def test_omega_clipped(self):
        (_, omega1), _ = envs.pendulum_step((np.pi / 2, 7.9), 2.0)
        assert omega1 == 8.0

    def test_reward_uses_pre_step_state(self):
        # large torque cannot change the reward of the current step beyond
        # its own quadratic cost
        _, r = envs.pendulum_step((1.0, 0.0), 2.0)
        np.testing.assert_allclose(r.reward, -(1.0 + 0.001 * 4.0), rtol=1e-12)

    def test_episode_ends_after_200_steps(self):
        env = envs.PendulumEnv()
        env.reset(seed=0)
        for k in range(200):
            result = env.step(np.array([0.0]))
            assert result.done == (k == 199)

    def test_reset_seeding(self):
        env = envs.PendulumEnv()
        a = env.reset(seed=42)
        b = env.reset(seed=42)
        np.testing.assert_allclose(a, b)
        c = env.reset()  # continues the stream, should differ
        assert not np.allclose(a, c)

    def test_initial_state_ranges(self):
        env = envs.PendulumEnv()
        rng = np.random.default_rng(5)
        for _ in range(100):
            obs = env.reset(seed=int(rng.integers(1 << 31)))
            theta = np.arctan2(obs[1], obs[0])
            assert -np.pi <= theta <= np.pi
            assert -1.0 <= obs[2] <= 1.0


class TestPointMass:
    def test_two_hand_stepped_oracles(self):
        """From p=(0.5,-0.2), v=0 with f=(1,-1) then f=(0,0):

        r1 = -(0.29 + 0.01*2) = -0.31
        v1 = 0.995*0 + 0.05*(1,-1) = (0.05,-0.05)
        p1 = (0.5025, -0.2025)
        r2 = -(0.5025^2 + 0.2025^2) = -0.2935125
        v2 = 0.995*(0.05,-0.05) = (0.04975,-0.04975)
        p2 = (0.5049875, -0.2049875)
        """
        s0 = np.array([0.5, -0.2, 0.0, 0.0])
        s1, r1 = envs.pointmass_step(s0, np.array([1.0, -1.0]))
        np.testing.assert_allclose(r1.reward, -0.31, rtol=1e-12)
        np.testing.assert_allclose(s1, [0.5025, -0.2025, 0.05, -0.05],
                                   rtol=1e-12)
        s2, r2 = envs.pointmass_step(s1, np.zeros(2))
        np.testing.assert_allclose(r2.reward, -0.2935125, rtol=1e-12)
        np.testing.assert_allclose(
            s2, [0.5049875, -0.2049875, 0.04975, -0.04975], rtol=1e-12)

    def test_dynamics_linear_in_state_and_force(self):
        """With the quadratic reward ignored, the map is affine; check
        superposition of the state transition."""
        rng = np.random.default_rng(2)
        for _ in range(20):
            sa = rng.normal(size=4)
            sb = rng.normal(size=4)
            f = rng.uniform(-1, 1, size=2)
            na, _ = envs.pointmass_step(sa, f)
            nb, _ = envs.pointmass_step(sb, f)
            nmid, _ = envs.pointmass_step(0.5 * (sa + sb), f)
            np.testing.assert_allclose(nmid, 0.5 * (na + nb), atol=1e-12)

    def test_force_clipped(self):
        s0 = np.zeros(4)
        s_big, r_big = envs.pointmass_step(s0, np.array([10.0, -10.0]))
        s_one, r_one = envs.pointmass_step(s0, np.array([1.0, -1.0]))
        np.testing.assert_allclose(s_big, s_one)
        np.testing.assert_allclose(r_big.reward, r_one.reward)

    def test_drag_shrinks_velocity(self):
        s = np.array([0.0, 0.0, 1.0, -2.0])
        s1, _ = envs.pointmass_step(s, np.zeros(2))
        np.testing.assert_allclose(s1[2:], [0.995, -1.99], rtol=1e-12)

    def test_reset_starts_at_rest_in_unit_box(self):
        env = envs.PointMassEnv()
        for seed in range(30):
            obs = env.reset(seed=seed)
            assert np.all(np.abs(obs[:2]) <= 1.0)
            np.testing.assert_allclose(obs[2:], 0.0)

    def test_episode_ends_after_200_steps(self):
        env = envs.PointMassEnv()
        env.reset(seed=1)
        for k in range(200):
            result = env.step(np.zeros(2))
            assert result.done == (k == 199)


class TestMakeEnv:
    def test_names(self):
        assert isinstance(envs.make_env("pendulum"), envs.PendulumEnv)
        assert isinstance(envs.make_env("pointmass"), envs.PointMassEnv)

    def test_unknown_name_raises(self):
        with pytest.raises(ValueError):
            envs.make_env("cartpole")

    def test_specs(self):
        pend = envs.make_env("pendulum").spec
        assert (pend.d_o, pend.d_a, pend.max_episode_steps) == (3, 1, 200)
        pm = envs.make_env("pointmass").spec
        assert (pm.d_o, pm.d_a, pm.max_episode_steps) == (4, 2, 200)
