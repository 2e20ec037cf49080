import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcollide.collision import (
    AMU_IN_ME,
    BUILTIN_NAMES,
    AnalyticExp,
    CollisionSystem,
    TabulatedCurves,
    Trajectory,
    builtin_system,
    collision_energy,
    embed,
    hamiltonian,
    qubits_for,
    read_curve_file,
    reduced_mass,
    separation,
    simulation_window,
    write_curve_file,
)
from qcollide.errors import ConfigError


def test_separation_examples():
    traj = Trajectory(b=0.5, v0=2.0, mu=1.0)
    assert separation(traj, 0.0) == pytest.approx(0.5)
    assert separation(traj, 0.25) == pytest.approx(np.sqrt(0.5))
    head_on = Trajectory(b=0.0, v0=3.0, mu=1.0, t0=1.0)
    np.testing.assert_allclose(separation(head_on, [-1.0, 1.0, 2.5]), [6.0, 0.0, 4.5])


def test_collision_energy_examples():
    assert collision_energy(Trajectory(0.5, 2.0, 1.0)) == 2.0
    assert collision_energy(Trajectory(0.5, 1.0, 2.0)) == 1.0
    assert collision_energy(Trajectory(0.5, 2.0, 7349.0)) == pytest.approx(14698.0)


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory(b=-1, v0=1, mu=1)
    with pytest.raises(ValueError):
        Trajectory(b=1, v0=0, mu=1)
    with pytest.raises(ValueError):
        Trajectory(b=1, v0=1, mu=0)


def _uncoupled(eps=0.3):
    z = np.zeros(2)
    return AnalyticExp(np.array([0.0, eps]), z, np.ones(2), z, np.zeros((2, 2)), np.ones((2, 2)))


def test_uncoupled_hamiltonian_is_diagonal_plus_centrifugal():
    traj = Trajectory(b=0.5, v0=2.0, mu=10.0)
    sys = CollisionSystem(traj, _uncoupled())
    t = np.linspace(-3, 3, 7)
    H = hamiltonian(sys, t)
    cent = 0.5 * 10.0 * (0.5 * 2.0 / separation(traj, t)) ** 2
    np.testing.assert_allclose(H[:, 0, 0], cent)
    np.testing.assert_allclose(H[:, 1, 1], 0.3 + cent)
    assert np.all(H[:, 0, 1] == 0)


def test_centrifugal_at_closest_approach_equals_energy():
    sys = builtin_system("na_he_3ch")
    H = hamiltonian(sys, sys.trajectory.t0)
    U = sys.potential.matrix(sys.trajectory.b)
    np.testing.assert_allclose(np.diag(H - U), collision_energy(sys.trajectory), rtol=1e-14)


def test_hamiltonian_symmetric_and_vectorized():
    sys = builtin_system("o_h_8ch")
    t = np.linspace(-5, 5, 11)
    H = hamiltonian(sys, t)
    assert H.shape == (11, 8, 8)
    np.testing.assert_array_equal(H, np.swapaxes(H, 1, 2))
    np.testing.assert_array_equal(H[3], hamiltonian(sys, t[3]))


def test_embed():
    H = np.arange(9.0).reshape(3, 3)
    E = embed(H, 2)
    assert E.shape == (4, 4)
    np.testing.assert_array_equal(E[:3, :3], H)
    assert not E[3].any() and not E[:, 3].any()
    np.testing.assert_array_equal(embed(np.eye(4), 2), np.eye(4))
    with pytest.raises(ValueError):
        embed(np.eye(5), 2)


def test_qubits_for():
    assert [qubits_for(n) for n in (2, 3, 4, 5, 8, 9)] == [1, 2, 2, 3, 3, 4]


def test_reduced_mass_from_isotopes():
    mu = reduced_mass("Na-23", "He-4")
    assert 6000 < mu < 7000
    assert builtin_system("na_he_3ch").metadata["mu_isotopic"] == mu
    assert builtin_system("na_he_3ch", mu=1.0).trajectory.mu == 1.0
    assert AMU_IN_ME == pytest.approx(1822.888, abs=1e-3)


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_builtins(name):
    sys = builtin_system(name)
    assert sys.n == {"na_he_3ch": 3, "si_he_4ch": 4, "si_he_5ch": 5, "o_h_8ch": 8}[name]
    ta, tb = simulation_window(sys)
    assert tb > 0 > ta and ta == pytest.approx(-tb)
    H = hamiltonian(sys, np.array([ta, tb]))
    off = H[:, ~np.eye(sys.n, dtype=bool)]
    assert np.max(np.abs(off)) <= 1.0001e-6
    assert sys.metadata["synthetic"]


def test_unknown_builtin():
    with pytest.raises(ConfigError, match="unknown builtin"):
        builtin_system("h2")


def test_window_requires_reachable_cutoff():
    sys = CollisionSystem(Trajectory(b=100.0, v0=2.0, mu=1.0), builtin_system("na_he_3ch").potential)
    with pytest.raises(ValueError, match="explicit window"):
        simulation_window(sys)


def _table():
    R = np.array([1.0, 2.0, 4.0])
    U = np.zeros((3, 2, 2))
    U[:, 0, 0] = [1.0, 0.5, 0.1]
    U[:, 1, 1] = [2.0, 1.0, 0.3]
    U[:, 0, 1] = U[:, 1, 0] = [0.2, 0.1, 1e-9]
    return R, U


def test_tabulated_at_nodes_and_between():
    R, U = _table()
    tab = TabulatedCurves(R, U)
    np.testing.assert_array_equal(tab.matrix(2.0), U[1])
    np.testing.assert_allclose(tab.matrix(3.0), 0.5 * (U[1] + U[2]))
    np.testing.assert_array_equal(tab.matrix(10.0), U[2])


def test_tabulated_strict_policy():
    R, U = _table()
    tab = TabulatedCurves(R, U, policy="strict")
    with pytest.raises(ValueError, match=r"R = 0.5 bohr outside tabulated range \[1, 4\]"):
        tab.matrix(np.array([1.5, 0.5]))


def test_curve_file_round_trip(tmp_path):
    R, U = _table()
    path = tmp_path / "two.curves"
    write_curve_file(path, R, U, comment="test curves")
    tab = read_curve_file(path)
    np.testing.assert_array_equal(tab.R, R)
    np.testing.assert_array_equal(tab.U, U)
    np.testing.assert_array_equal(tab.matrix(R[0]), U[0])


@pytest.mark.parametrize(
    "text, message",
    [
        ("1.0 2.0 3.0 0.1\n", "expected header"),
        ("channels 2\n1.0 2.0 3.0\n", "expected 4 columns"),
        ("channels 2\n1.0 2.0 x 0.1\n", ":2:"),
        ("channels 2\n2.0 1 1 0\n1.0 1 1 0\n", "strictly increasing"),
        ("# only a comment\n", "missing"),
    ],
)
def test_curve_file_errors(tmp_path, text, message):
    path = tmp_path / "bad.curves"
    path.write_text(text)
    with pytest.raises(ConfigError, match=message):
        read_curve_file(path)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 3.0), st.floats(0.5, 5.0), st.floats(-20, 20))
def test_separation_at_least_impact_parameter(b, v0, t):
    traj = Trajectory(b=b, v0=v0, mu=1.0)
    R = separation(traj, t)
    assert R >= b * (1 - 1e-15)
    assert R == pytest.approx(np.hypot(b, v0 * t))
