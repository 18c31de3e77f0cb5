"""
Small-dimension quantum state primitives.

Everything here works on plain complex numpy arrays of shape (2,), (4,),
(2, 2) or (4, 4). Two-qubit states use the |ab> ordering with basis
index ``2 * a_bit + b_bit``, i.e. |00>, |01>, |10>, |11>, and qubit ``a``
is always the left Kronecker factor.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

ATOL = 1e-12
PSD_ATOL = 1e-10

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)

# Deviation part of the room-temperature equilibrium state of the 13C/1H
# pair (unnormalized, traceless). The factor 4 is the 1H/13C Larmor ratio.
# Kept for reference only: the pseudo-pure input is taken as given.
THERMAL_DEVIATION = np.kron(SIGMA_Z, I2) + 4 * np.kron(I2, SIGMA_Z)


class BlochVector(NamedTuple):
    rx: float
    ry: float
    rz: float

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.rx**2 + self.ry**2 + self.rz**2))


class PauliObservable(NamedTuple):
    """A Pauli operator ``axis`` on one qubit.

    ``qubit=None`` means a bare single-qubit observable (acts on 2x2 states);
    ``"a"`` or ``"b"`` embeds it into the two-qubit space.
    """

    axis: str
    qubit: str | None = None

    def matrix(self) -> np.ndarray:
        if self.axis not in PAULI:
            raise ValueError(f"unknown Pauli axis {self.axis!r}")
        sigma = PAULI[self.axis]
        if self.qubit is None:
            return sigma
        if self.qubit == "a":
            return np.kron(sigma, I2)
        if self.qubit == "b":
            return np.kron(I2, sigma)
        raise ValueError(f"unknown qubit label {self.qubit!r}")


def _check_finite(m: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(m)):
        raise ValueError("non-finite entries in matrix")
    return m


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with ``a`` as the leftmost (qubit-a) factor."""
    return _check_finite(np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)))


def allclose(a: np.ndarray, b: np.ndarray, atol: float = ATOL) -> bool:
    return bool(np.max(np.abs(np.asarray(a) - np.asarray(b)), initial=0.0) <= atol)


def pure_state(amplitudes) -> np.ndarray:
    """Validate a normalized state vector of dimension 2 or 4."""
    psi = np.asarray(amplitudes, dtype=complex)
    if psi.ndim != 1 or psi.shape[0] not in (2, 4):
        raise ValueError(f"state vector must have dimension 2 or 4, got shape {psi.shape}")
    _check_finite(psi)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > ATOL:
        raise ValueError(f"state vector not normalized (norm={norm!r})")
    return psi


def equatorial_ket(phi: float) -> np.ndarray:
    """(|0> + e^{i phi}|1>)/sqrt(2)."""
    return np.array([1.0, np.exp(1j * phi)], dtype=complex) / np.sqrt(2.0)


def projector(psi) -> np.ndarray:
    psi = pure_state(psi)
    return np.outer(psi, psi.conj())


def check_density(rho: np.ndarray) -> np.ndarray:
    """Raise ValueError unless ``rho`` is a valid 2x2 or 4x4 density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape not in ((2, 2), (4, 4)):
        raise ValueError(f"density matrix must be 2x2 or 4x4, got {rho.shape}")
    _check_finite(rho)
    if not allclose(rho, rho.conj().T):
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > ATOL:
        raise ValueError(f"density matrix trace is {tr!r}, expected 1")
    if min_eigenvalue(rho) < -PSD_ATOL:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


def min_eigenvalue(rho: np.ndarray) -> float:
    if rho.shape == (2, 2):
        # closed form for a 2x2 Hermitian matrix
        a, d = rho[0, 0].real, rho[1, 1].real
        off = abs(rho[0, 1])
        return float((a + d) / 2 - np.sqrt(((a - d) / 2) ** 2 + off**2))
    return float(np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0])


def is_unitary(u: np.ndarray, atol: float = ATOL) -> bool:
    u = np.asarray(u)
    return allclose(u.conj().T @ u, np.eye(u.shape[0]), atol)


def evolve(u: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """U rho U^dagger."""
    return _check_finite(u @ rho @ u.conj().T)


def partial_trace(rho: np.ndarray, keep: str) -> np.ndarray:
    """Reduce a two-qubit density matrix to qubit ``keep`` ("a" or "b")."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"partial_trace expects a 4x4 matrix, got {rho.shape}")
    r = rho.reshape(2, 2, 2, 2)  # (a, b, a', b')
    if keep == "a":
        return np.einsum("ijkj->ik", r)
    if keep == "b":
        return np.einsum("ijil->jl", r)
    raise ValueError(f"keep must be 'a' or 'b', got {keep!r}")


def expectation(rho: np.ndarray, obs: PauliObservable | str) -> float:
    """Tr(rho sigma) for a Pauli observable; a bare axis string means 2x2."""
    if isinstance(obs, str):
        obs = PauliObservable(obs)
    sigma = obs.matrix()
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != sigma.shape:
        raise ValueError(
            f"observable {obs} acts on dimension {sigma.shape[0]}, state has {rho.shape[0]}"
        )
    value = np.trace(rho @ sigma)
    if abs(value.imag) >= PSD_ATOL:
        raise ValueError(f"expectation has imaginary part {value.imag!r}; rho not Hermitian?")
    return float(value.real)


def fidelity(psi, rho: np.ndarray) -> float:
    """<psi|rho|psi> for a pure reference state and a density matrix."""
    psi = pure_state(psi)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (psi.shape[0], psi.shape[0]):
        raise ValueError("state and density matrix dimensions differ")
    f = np.vdot(psi, rho @ psi)
    if abs(f.imag) >= PSD_ATOL or not (-PSD_ATOL <= f.real <= 1 + PSD_ATOL):
        raise ValueError(f"fidelity {f!r} outside [0, 1]")
    return float(min(1.0, max(0.0, f.real)))


def bloch(rho: np.ndarray) -> BlochVector:
    if np.shape(rho) != (2, 2):
        raise ValueError("bloch() needs a single-qubit density matrix")
    return BlochVector(*(expectation(rho, axis) for axis in "xyz"))


def density_from_bloch(r) -> np.ndarray:
    rx, ry, rz = (float(c) for c in r)
    if rx * rx + ry * ry + rz * rz > 1 + PSD_ATOL:
        raise ValueError("Bloch vector longer than 1")
    return (I2 + rx * SIGMA_X + ry * SIGMA_Y + rz * SIGMA_Z) / 2


def rz(angle: float) -> np.ndarray:
    """exp(-i angle sigma_z / 2)."""
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def ry(angle: float) -> np.ndarray:
    """exp(-i angle sigma_y / 2)."""
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rotation(angle: float, phase: float) -> np.ndarray:
    """Rotation by ``angle`` about the equatorial axis (cos phase, sin phase, 0)."""
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array(
        [[c, -1j * s * np.exp(-1j * phase)], [-1j * s * np.exp(1j * phase), c]],
        dtype=complex,
    )


def global_phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Max-entry distance between ``u`` and ``v`` after removing a global phase."""
    overlap = np.trace(v.conj().T @ u)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(u / phase - v)))
