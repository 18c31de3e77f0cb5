"""
Four-state key distribution with a cloning eavesdropper.

Eve runs U(theta) on each signal: qubit ``a`` travels on to Bob, qubit
``b`` stays with Eve until the bases are announced. Signals follow the
half-Pauli normalization ``s = Tr(rho sigma) / 2``, so a party guesses
Alice's bit correctly with probability ``1/2 + s`` (sign taken relative to
the sent bit).
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import cloner, qcore

RNG_SCHEME = "numpy-SeedSequence(seed,spawn_key=(pulse,))-PCG64-v1"
DRAWS_PER_PULSE = 5


class Basis(str, enum.Enum):
    X = "X"
    Y = "Y"

    @property
    def axis(self) -> str:
        return self.value.lower()


@dataclass(frozen=True)
class Bb84State:
    bit: int
    basis: Basis
    state: np.ndarray

    @property
    def label(self) -> str:
        return ("+" if self.bit == 0 else "-") + self.basis.axis


@dataclass(frozen=True)
class AttackConfig:
    """Cloner strength; theta in [0, pi/2] reads as attack strength."""

    theta: float = cloner.OPTIMAL_THETA

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ValueError(f"theta must be finite, got {self.theta!r}")


def prepare(bit: int, basis: Basis | str) -> Bb84State:
    basis = Basis(basis)
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    sign = 1 if bit == 0 else -1
    phase = 1 if basis is Basis.X else 1j
    psi = np.array([1, sign * phase], dtype=complex) / math.sqrt(2)
    return Bb84State(bit, basis, psi)


ALL_STATES = [(bit, basis) for basis in Basis for bit in (0, 1)]


def eve_intercept(state: Bb84State, cfg: AttackConfig) -> np.ndarray:
    """Joint (Bob=a, Eve=b) state after Eve's cloner."""
    rho = np.outer(state.state, state.state.conj())
    return cloner.clone_density(rho, cfg.theta)


def simulated_signals(state: Bb84State, cfg: AttackConfig) -> tuple[float, float]:
    """(s_bob, s_eve) from the simulated joint state, measured in Alice's basis."""
    rho = eve_intercept(state, cfg)
    obs = state.basis.axis
    s_bob = qcore.expectation(qcore.partial_trace(rho, "a"), obs) / 2
    s_eve = qcore.expectation(qcore.partial_trace(rho, "b"), obs) / 2
    return s_bob, s_eve


def analytic_signals(theta: float, bit: int, basis: Basis | str) -> tuple[float, float]:
    Basis(basis)
    sign = 1 if bit == 0 else -1
    return sign * math.cos(theta) / 2, sign * math.sin(theta) / 2


def error_rate(signal: float, bit: int) -> float:
    """Probability of guessing the wrong bit from a signal: 1/2 - (+-)s."""
    sign = 1 if bit == 0 else -1
    return 0.5 - sign * signal


def qber_of_theta(theta: float) -> float:
    return (1 - math.cos(theta)) / 2


def theta_of_qber(q: float) -> float:
    if not 0 <= q <= 0.5:
        raise ValueError(f"QBER must lie in [0, 1/2], got {q!r}")
    return math.acos(1 - 2 * q)


def eve_error_of_qber(q: float) -> float:
    return (1 - math.sin(theta_of_qber(q))) / 2


def mutual_information(d: float) -> float:
    """1 + d log2 d + (1 - d) log2(1 - d) bits, with 0 log 0 = 0."""
    if not 0 <= d <= 1:
        raise ValueError(f"error rate must lie in [0, 1], got {d!r}")
    total = 1.0
    for p in (d, 1 - d):
        if p > 0:
            total += p * math.log2(p)
    return max(0.0, total)


def information_crossing() -> tuple[float, float]:
    """QBER where Bob's and Eve's mutual information coincide, and the common value."""

    def gap(q):
        return mutual_information(q) - mutual_information(eve_error_of_qber(q))

    q = brentq(gap, 1e-6, 0.5 - 1e-6, xtol=1e-15, rtol=1e-15)
    return q, mutual_information(q)


@dataclass(frozen=True)
class CurveRow:
    theta: float
    state: str
    basis: str
    s_bob: float
    s_eve: float
    qber: float
    i_ab: float
    i_ae: float


CURVE_COLUMNS = ("theta", "state", "basis", "s_bob", "s_eve", "qber", "i_ab", "i_ae")


def theta_grid(points: int = 24) -> list[float]:
    if points < 2:
        raise ValueError("grid needs at least two points")
    return [k * 2 * math.pi / points for k in range(points)]


def curves(grid: list[float] | None = None) -> list[CurveRow]:
    """One analytic row per (theta, state), sorted by theta."""
    grid = theta_grid() if grid is None else list(grid)
    if not grid:
        raise ValueError("theta grid is empty")
    rows = []
    for theta in sorted(grid):
        for bit, basis in ALL_STATES:
            s_bob, s_eve = analytic_signals(theta, bit, basis)
            d_bob = error_rate(s_bob, bit)
            d_eve = error_rate(s_eve, bit)
            rows.append(
                CurveRow(
                    theta=theta,
                    state=prepare(bit, basis).label,
                    basis=basis.value,
                    s_bob=s_bob,
                    s_eve=s_eve,
                    qber=d_bob,
                    i_ab=mutual_information(min(1.0, max(0.0, d_bob))),
                    i_ae=mutual_information(min(1.0, max(0.0, d_eve))),
                )
            )
    return rows


@dataclass(frozen=True)
class BasisCounts:
    sent: int = 0
    sifted: int = 0
    bob_errors: int = 0
    eve_errors: int = 0


@dataclass(frozen=True)
class ProtocolReport:
    n_pulses: int
    n_sifted: int
    qber_bob: float
    eve_error: float
    i_ab: float
    i_ae: float
    seed: int
    theta: float
    rng: str = RNG_SCHEME
    per_basis: dict[str, BasisCounts] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def pulse_uniforms(seed: int, start: int, stop: int) -> np.ndarray:
    """Uniform draws for pulses [start, stop), one independent substream each."""
    out = np.empty((stop - start, DRAWS_PER_PULSE))
    for row, index in enumerate(range(start, stop)):
        ss = np.random.SeedSequence(seed, spawn_key=(index,))
        out[row] = np.random.Generator(np.random.PCG64(ss)).random(DRAWS_PER_PULSE)
    return out


def _snap(p: float) -> float:
    if abs(p) < qcore.ATOL:
        return 0.0
    if abs(p - 1) < qcore.ATOL:
        return 1.0
    return p


def _outcome_tables(cfg: AttackConfig):
    """P(Bob reads 0 | state, Bob basis) and P(Eve reads 0 | state) from the simulation."""
    bob = np.empty((2, 2, 2))  # [alice basis, alice bit, bob basis]
    eve = np.empty((2, 2))  # [alice basis, alice bit]
    for ib, basis in enumerate(Basis):
        for bit in (0, 1):
            rho = eve_intercept(prepare(bit, basis), cfg)
            rho_bob = qcore.partial_trace(rho, "a")
            rho_eve = qcore.partial_trace(rho, "b")
            for jb, bob_basis in enumerate(Basis):
                bob[ib, bit, jb] = _snap((1 + qcore.expectation(rho_bob, bob_basis.axis)) / 2)
            eve[ib, bit] = _snap((1 + qcore.expectation(rho_eve, basis.axis)) / 2)
    return bob, eve


def run_protocol(
    n_pulses: int, cfg: AttackConfig, seed: int = 42, workers: int = 1, chunk: int = 50_000
) -> ProtocolReport:
    """Monte Carlo run of the protocol under Eve's cloning attack.

    Pulse ``i`` draws five uniforms from its own substream: Alice's bit,
    Alice's basis, Bob's basis, Bob's outcome and Eve's outcome. Chunks may
    run on ``workers`` threads; results are concatenated in pulse order, so
    the report does not depend on ``workers``.
    """
    if n_pulses < 1:
        raise ValueError("n_pulses must be at least 1")
    bounds = [(s, min(s + chunk, n_pulses)) for s in range(0, n_pulses, chunk)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda b: pulse_uniforms(seed, *b), bounds))
    else:
        parts = [pulse_uniforms(seed, *b) for b in bounds]
    u = np.concatenate(parts)

    bob_p0, eve_p0 = _outcome_tables(cfg)
    bit = (u[:, 0] >= 0.5).astype(int)
    basis = (u[:, 1] >= 0.5).astype(int)
    bob_basis = (u[:, 2] >= 0.5).astype(int)
    bob_bit = (u[:, 3] >= bob_p0[basis, bit, bob_basis]).astype(int)
    eve_bit = (u[:, 4] >= eve_p0[basis, bit]).astype(int)

    sifted = basis == bob_basis
    bob_err = sifted & (bob_bit != bit)
    eve_err = sifted & (eve_bit != bit)
    n_sifted = int(sifted.sum())
    qber = float(bob_err.sum()) / n_sifted if n_sifted else 0.0
    eve_error = float(eve_err.sum()) / n_sifted if n_sifted else 0.0

    per_basis = {}
    for ib, b in enumerate(Basis):
        sel = basis == ib
        per_basis[b.value] = BasisCounts(
            sent=int(sel.sum()),
            sifted=int((sel & sifted).sum()),
            bob_errors=int((sel & bob_err).sum()),
            eve_errors=int((sel & eve_err).sum()),
        )
    return ProtocolReport(
        n_pulses=n_pulses,
        n_sifted=n_sifted,
        qber_bob=qber,
        eve_error=eve_error,
        i_ab=mutual_information(qber),
        i_ae=mutual_information(eve_error),
        seed=seed,
        theta=cfg.theta,
        per_basis=per_basis,
    )
