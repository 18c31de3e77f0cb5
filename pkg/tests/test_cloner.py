import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpccm import cloner, qcore

SQ2 = math.sqrt(2)
F_OPT = 0.8535533906
THETA_GRID = [k * math.pi / 12 for k in range(24)]

# Gate matrices written out by hand in the |ab> basis, independent of the
# library's controlled-gate builder.
CNOT_A_TO_B = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def cry_b_to_a(angle):
    """Rotate qubit a by exp(-i angle sigma_y/2) when b is |1>."""
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    m = np.eye(4, dtype=complex)
    # acts on the |01>, |11> pair (indices 1 and 3)
    m[1, 1], m[1, 3] = c, -s
    m[3, 1], m[3, 3] = s, c
    return m


def oracle_product(theta):
    return CNOT_A_TO_B @ cry_b_to_a(-2 * theta) @ CNOT_A_TO_B


class TestBuildUnitary:
    def test_identity_at_zero(self):
        assert qcore.allclose(cloner.build_unitary(0.0), np.eye(4))

    def test_optimal_block(self):
        u = cloner.optimal()
        np.testing.assert_allclose(u[1:3, 1:3], [[SQ2 / 2, SQ2 / 2], [-SQ2 / 2, SQ2 / 2]], atol=1e-15)
        assert u[0, 0] == 1 and u[3, 3] == 1

    def test_inverse(self):
        for theta in (0.3, 1.7, -2.2):
            assert qcore.allclose(cloner.build_unitary(theta) @ cloner.build_unitary(-theta), np.eye(4))

    def test_unitarity(self):
        rng = np.random.default_rng(10)
        for theta in rng.uniform(-10, 10, 50):
            assert qcore.is_unitary(cloner.build_unitary(theta))

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            cloner.build_unitary(float("nan"))


class TestDecompose:
    def test_three_gates(self):
        gates = cloner.decompose(0.5)
        assert [type(g) for g in gates] == [cloner.CNOT, cloner.ControlledRy, cloner.CNOT]
        for g in gates:
            assert g.control != g.target

    @pytest.mark.parametrize("theta", [math.pi / 4, math.pi / 3])
    def test_matches_unitary(self, theta):
        product = cloner.gate_product(cloner.decompose(theta))
        assert np.max(np.abs(product - cloner.build_unitary(theta))) < 1e-12

    def test_hand_written_oracle_agrees(self):
        for theta in THETA_GRID:
            assert np.max(np.abs(oracle_product(theta) - cloner.build_unitary(theta))) < 1e-12
            assert np.max(np.abs(cloner.gate_product(cloner.decompose(theta)) - oracle_product(theta))) < 1e-12

    def test_theta_zero_cancels(self):
        gates = cloner.decompose(0.0)
        assert qcore.allclose(gates[1].matrix(), np.eye(4))
        assert qcore.allclose(cloner.gate_product(gates), np.eye(4))

    def test_same_qubit_rejected(self):
        with pytest.raises(ValueError):
            cloner.CNOT("a", "a")


class TestClone:
    def test_optimal(self):
        res = cloner.clone(0.0, math.pi / 4)
        assert qcore.allclose(res.rho_a, [[0.75, SQ2 / 4], [SQ2 / 4, 0.25]])
        assert abs(res.f_a - F_OPT) < 1e-10
        assert abs(res.f_b - F_OPT) < 1e-10
        assert qcore.allclose(res.rho_a, res.rho_b)

    @pytest.mark.parametrize("phi", [0.0, 1.1, 4.0])
    def test_no_attack(self, phi):
        res = cloner.clone(phi, 0.0)
        n = qcore.equatorial_ket(phi)
        assert qcore.allclose(res.rho_a, np.outer(n, n.conj()))
        assert qcore.allclose(res.rho_b, np.diag([1, 0]))
        assert abs(res.f_a - 1) < 1e-12
        assert abs(res.f_b - 0.5) < 1e-12

    @pytest.mark.parametrize("phi", [0.0, 1.1, 4.0])
    def test_full_transfer(self, phi):
        res = cloner.clone(phi, math.pi / 2)
        n = qcore.equatorial_ket(phi)
        assert qcore.allclose(res.rho_b, np.outer(n, n.conj()))
        assert qcore.allclose(res.rho_a, np.diag([1, 0]))
        assert abs(res.f_b - 1) < 1e-12 and abs(res.f_a - 0.5) < 1e-12

    def test_result_consistency(self):
        res = cloner.clone(2.0, 0.9)
        qcore.check_density(res.rho_ab)
        assert qcore.allclose(res.rho_a, qcore.partial_trace(res.rho_ab, "a"))
        n = qcore.equatorial_ket(2.0)
        assert abs(res.f_a - qcore.fidelity(n, res.rho_a)) < 1e-12

    def test_phase_canonical(self):
        assert cloner.canonical_phase(-0.5) == pytest.approx(2 * math.pi - 0.5)
        assert cloner.canonical_phase(2 * math.pi) == 0.0
        assert cloner.canonical_phase(7.0) == pytest.approx(7.0 - 2 * math.pi)


class TestClosedForm:
    @pytest.mark.parametrize(
        "theta, expected",
        [(math.pi / 4, (F_OPT, F_OPT)), (0.0, (1.0, 0.5)), (math.pi / 2, (0.5, 1.0))],
    )
    def test_values(self, theta, expected):
        np.testing.assert_allclose(cloner.fidelity_closed_form(theta), expected, atol=1e-10)

    def test_matches_simulation(self):
        for theta in THETA_GRID:
            fa, fb = cloner.fidelity_closed_form(theta)
            for phi in cloner.phase_grid():
                res = cloner.clone(phi, theta)
                assert abs(res.f_a - fa) < 1e-12 and abs(res.f_b - fb) < 1e-12


def test_phase_grid():
    grid = cloner.phase_grid()
    assert len(grid) == 24
    assert grid[1] == pytest.approx(math.radians(15))


@settings(max_examples=100, deadline=None)
@given(st.floats(-7, 7), st.floats(-7, 7))
def test_phase_covariance(theta, phi):
    ref = cloner.clone(0.0, theta).rho_ab
    rot = np.kron(qcore.rz(phi), qcore.rz(phi))
    assert qcore.allclose(cloner.clone(phi, theta).rho_ab, rot @ ref @ rot.conj().T)


@settings(max_examples=100, deadline=None)
@given(st.floats(-7, 7))
def test_no_cloning_circle(theta):
    res = cloner.clone(0.3, theta)
    assert abs((2 * res.f_a - 1) ** 2 + (2 * res.f_b - 1) ** 2 - 1) < 1e-9


@settings(max_examples=100, deadline=None)
@given(st.floats(-7, 7))
def test_complement_symmetry(theta):
    fa, _ = cloner.fidelity_closed_form(theta)
    _, fb = cloner.fidelity_closed_form(math.pi / 2 - theta)
    assert abs(fa - fb) < 1e-12
