"""
The two-qubit phase-covariant cloning network U(theta).

Qubit ``a`` carries the original, qubit ``b`` starts blank in |0>. At
theta = pi/4 both clones of any equatorial input reach fidelity
1/2 + sqrt(2)/4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qcore

OPTIMAL_THETA = math.pi / 4
OPTIMAL_FIDELITY = 0.5 + math.sqrt(2) / 4
TWO_PI = 2 * math.pi


def canonical_phase(phi: float) -> float:
    """Map an equatorial phase onto [0, 2*pi)."""
    if not math.isfinite(phi):
        raise ValueError(f"phase must be finite, got {phi!r}")
    p = math.fmod(phi, TWO_PI)
    if p < 0:
        p += TWO_PI
    return 0.0 if p >= TWO_PI else p


def _check_theta(theta: float) -> float:
    if not math.isfinite(theta):
        raise ValueError(f"theta must be finite, got {theta!r}")
    return float(theta)


def build_unitary(theta: float) -> np.ndarray:
    """U(theta): identity on |00>, |11>; a real rotation on the {|01>, |10>} block."""
    theta = _check_theta(theta)
    c, s = math.cos(theta), math.sin(theta)
    u = np.eye(4, dtype=complex)
    u[1, 1], u[1, 2] = c, s
    u[2, 1], u[2, 2] = -s, c
    return u


def optimal() -> np.ndarray:
    return build_unitary(OPTIMAL_THETA)


def _index(label: str) -> int:
    if label not in ("a", "b"):
        raise ValueError(f"qubit label must be 'a' or 'b', got {label!r}")
    return 0 if label == "a" else 1


def _controlled(control: str, target: str, op: np.ndarray) -> np.ndarray:
    if _index(control) == _index(target):
        raise ValueError("control and target must differ")
    p0 = np.diag([1, 0]).astype(complex)
    p1 = np.diag([0, 1]).astype(complex)
    if control == "a":
        return np.kron(p0, qcore.I2) + np.kron(p1, op)
    return np.kron(qcore.I2, p0) + np.kron(op, p1)


@dataclass(frozen=True)
class CNOT:
    control: str
    target: str

    def __post_init__(self):
        _controlled(self.control, self.target, qcore.I2)

    def matrix(self) -> np.ndarray:
        return _controlled(self.control, self.target, qcore.SIGMA_X)


@dataclass(frozen=True)
class ControlledRy:
    """Applies exp(-i angle sigma_y / 2) to ``target`` when ``control`` is |1>."""

    control: str
    target: str
    angle: float

    def __post_init__(self):
        _controlled(self.control, self.target, qcore.I2)

    def matrix(self) -> np.ndarray:
        return _controlled(self.control, self.target, qcore.ry(self.angle))


Gate = CNOT | ControlledRy


def decompose(theta: float) -> list[Gate]:
    """Three-gate circuit equal to ``build_unitary(theta)`` with no phase freedom.

    The CNOTs are controlled by the original and target the blank qubit;
    the middle gate rotates the original by -2*theta when the blank is |1>.
    """
    theta = _check_theta(theta)
    return [
        CNOT(control="a", target="b"),
        ControlledRy(control="b", target="a", angle=-2 * theta),
        CNOT(control="a", target="b"),
    ]


def gate_product(gates: list[Gate]) -> np.ndarray:
    """Matrix of a gate list applied left to right in time."""
    u = np.eye(4, dtype=complex)
    for gate in gates:
        u = gate.matrix() @ u
    return u


@dataclass(frozen=True)
class CloneResult:
    rho_ab: np.ndarray
    rho_a: np.ndarray
    rho_b: np.ndarray
    f_a: float
    f_b: float


def clone_density(rho_in: np.ndarray, theta: float) -> np.ndarray:
    """U(theta) (rho_in x |0><0|) U(theta)^dagger for a single-qubit input."""
    blank = np.diag([1, 0]).astype(complex)
    u = build_unitary(theta)
    return qcore.evolve(u, qcore.tensor(rho_in, blank))


def clone_ket(psi, theta: float) -> CloneResult:
    psi = qcore.pure_state(psi)
    if psi.shape != (2,):
        raise ValueError("the cloner takes a single-qubit input")
    rho_ab = clone_density(np.outer(psi, psi.conj()), theta)
    rho_a = qcore.partial_trace(rho_ab, "a")
    rho_b = qcore.partial_trace(rho_ab, "b")
    return CloneResult(
        rho_ab=rho_ab,
        rho_a=rho_a,
        rho_b=rho_b,
        f_a=qcore.fidelity(psi, rho_a),
        f_b=qcore.fidelity(psi, rho_b),
    )


def clone(phi: float, theta: float) -> CloneResult:
    """Clone the equatorial state with phase ``phi``."""
    return clone_ket(qcore.equatorial_ket(canonical_phase(phi)), theta)


def fidelity_closed_form(theta: float) -> tuple[float, float]:
    theta = _check_theta(theta)
    return (1 + math.cos(theta)) / 2, (1 + math.sin(theta)) / 2


def phase_grid(n: int = 24) -> list[float]:
    """Equally spaced equatorial phases k*2pi/n (15 degree steps for n=24)."""
    return [k * TWO_PI / n for k in range(n)]
