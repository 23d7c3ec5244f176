import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from lamebands.integrate import IntegratorError, adaptive, make_plan, propagate
from lamebands.model import PotentialParams, potential_value


def reference(energy, params, x_end):
    def rhs(x, y):
        q = potential_value(x, params) - energy
        return [y[1], q * y[0], y[3], q * y[2]]

    sol = solve_ivp(rhs, (0, x_end), [1, 0, 0, 1], method="DOP853", rtol=1e-12, atol=1e-13)
    c, cp, s, sp = sol.y[:, -1]
    return np.array([[c, s], [cp, sp]])


@pytest.mark.parametrize("energy", [-1.0, 3.3, 17.0])
def test_adaptive_matches_scipy(energy):
    params = PotentialParams(3, 1, 0.7)
    res, nodes = adaptive([energy], params, params.period)
    np.testing.assert_allclose(res.state[:, :, 0], reference(energy, params, params.period), rtol=1e-7, atol=1e-8)
    assert nodes[0] == 0.0 and nodes[-1] == params.period


def test_free_particle_is_exact():
    params = PotentialParams(2, 1, 0.0)
    energies = np.array([0.25, 1.0, 6.25])
    res, _ = adaptive(energies, params, np.pi)
    k = np.sqrt(energies)
    np.testing.assert_allclose(res.c, np.cos(k * np.pi), atol=1e-9)
    np.testing.assert_allclose(res.s, np.sin(k * np.pi) / k, atol=1e-9)


def test_zero_counts_free_particle():
    params = PotentialParams(0, 0, 0.0)
    # cos(3.2 x) has zeros at (n + 1/2) pi / 3.2 < pi: three of them
    res, _ = adaptive([3.2**2], params, np.pi)
    assert res.zeros[0, 0] == 3
    assert res.zeros[1, 0] == 3


def test_plan_replay_matches_adaptive():
    params = PotentialParams(3, 2, 0.5)
    h = params.K
    plan = make_plan(params, h, -1.0, 40.0)
    energies = np.linspace(-1.0, 40.0, 23)
    replay = propagate(plan, energies)
    direct, _ = adaptive(energies, params, h)
    np.testing.assert_allclose(replay.state, direct.state, rtol=1e-7, atol=1e-8)
    np.testing.assert_array_equal(replay.zeros, direct.zeros)


def test_replay_scalar_and_vector_paths_agree():
    params = PotentialParams(3, 1, 0.3)
    plan = make_plan(params, params.K, 0.0, 30.0)
    energies = np.linspace(0.0, 30.0, 9)
    batch = propagate(plan, energies)
    single = [propagate(plan, [e]) for e in energies]
    np.testing.assert_allclose(batch.state, np.stack([s.state[:, :, 0] for s in single], axis=-1), rtol=1e-13, atol=1e-14)


def test_replay_ceiling():
    params = PotentialParams(1, 0, 0.5)
    plan = make_plan(params, params.K, 0.0, 10.0)
    with pytest.raises(ValueError):
        propagate(plan, [11.0])


def test_step_budget_raises():
    params = PotentialParams(3, 2, 0.9)
    with pytest.raises(IntegratorError) as info:
        adaptive([50.0], params, params.period, max_steps=5)
    assert info.value.m == 0.9


@given(st.floats(0.0, 0.99), st.floats(-2.0, 60.0))
def test_wronskian_is_conserved(m, energy):
    params = PotentialParams(2, 1, m)
    res, _ = adaptive([energy], params, params.period, rtol=1e-12, atol=1e-14)
    c, s, cp, sp = res.c[0], res.s[0], res.cp[0], res.sp[0]
    assert abs(c * sp - s * cp - 1) <= 1e-10 * max(1.0, abs(c * sp), abs(s * cp))


def test_recorded_path():
    params = PotentialParams(1, 0, 0.5)
    res, nodes = adaptive([2.0], params, params.K, record=True)
    assert res.path.shape == (len(nodes), 2, 2, 1)
    np.testing.assert_array_equal(res.path[-1], res.state)
