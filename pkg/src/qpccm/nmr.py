"""
Two-spin heteronuclear NMR model of the cloning network.

Dynamics run in the doubly rotating frame, so the only free-evolution term
is the scalar coupling 2*pi*J*Iz(a)*Iz(b). Larmor frequencies only show up
as carrier offsets on synthesized spectra.

Hard pulses are instantaneous rotations about an axis in the transverse
plane (x, y, -x, -y). Single-spin z rotations never appear as pulses: the
compiler tracks them as frame shifts, rewrites later pulse phases, and
declares the residual frame on the returned sequence. ``U_target`` equals
``frame_matrix(seq) @ ideal_propagator(seq)`` up to a global phase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

from . import cloner, qcore

HARD_PULSE_WIDTH = 5e-6

AXIS_PHASE = {"x": 0.0, "y": math.pi / 2, "-x": math.pi, "-y": 3 * math.pi / 2}
_PHASE_AXIS = ["x", "y", "-x", "-y"]

IZ_IZ = np.kron(qcore.SIGMA_Z, qcore.SIGMA_Z) / 4


@dataclass(frozen=True)
class SpinSystem:
    """13C (spin a) / 1H (spin b) pair. Frequencies in Hz, times in seconds."""

    omega_a: float = 1.0e8
    omega_b: float = 4.0e8
    j_coupling: float = 214.5
    t1_a: float = 17.2
    t2_a: float = 0.35
    t1_b: float = 4.8
    t2_b: float = 3.3

    def __post_init__(self):
        for name in ("omega_a", "omega_b", "j_coupling", "t1_a", "t2_a", "t1_b", "t2_b"):
            value = getattr(self, name)
            if not (value > 0) or math.isnan(value):
                raise ValueError(f"{name} must be positive, got {value!r}")
        for spin in "ab":
            t1, t2 = getattr(self, f"t1_{spin}"), getattr(self, f"t2_{spin}")
            if t2 > 2 * t1:
                raise ValueError(f"spin {spin}: T2={t2} exceeds 2*T1={2 * t1}")

    @property
    def tau1(self) -> float:
        """Coupling delay unit 1/(4J)."""
        return 1.0 / (4.0 * self.j_coupling)

    def tau2(self, theta: float) -> float:
        """Rotation-dependent delay unit theta*tau1/pi (theta taken mod 2pi)."""
        return _canonical_theta(theta) * self.tau1 / math.pi

    def times(self, spin: str) -> tuple[float, float]:
        if spin == "a":
            return self.t1_a, self.t2_a
        if spin == "b":
            return self.t1_b, self.t2_b
        raise ValueError(f"spin must be 'a' or 'b', got {spin!r}")

    def larmor(self, spin: str) -> float:
        return {"a": self.omega_a, "b": self.omega_b}[spin]

    def without_relaxation(self) -> "SpinSystem":
        return SpinSystem(
            self.omega_a, self.omega_b, self.j_coupling, math.inf, math.inf, math.inf, math.inf
        )


@dataclass(frozen=True)
class HardPulse:
    spin: str
    flip_angle: float  # radians
    axis: str
    duration: float = HARD_PULSE_WIDTH

    def __post_init__(self):
        if self.spin not in ("a", "b"):
            raise ValueError(f"pulse spin must be 'a' or 'b', got {self.spin!r}")
        if self.axis not in AXIS_PHASE:
            raise ValueError(f"pulse axis must be one of {list(AXIS_PHASE)}, got {self.axis!r}")
        if self.duration != HARD_PULSE_WIDTH:
            raise ValueError("hard pulses are fixed at 5 us")


@dataclass(frozen=True)
class Delay:
    duration: float

    def __post_init__(self):
        if not (self.duration >= 0) or not math.isfinite(self.duration):
            raise ValueError(f"delay must be a finite non-negative duration, got {self.duration!r}")


@dataclass(frozen=True)
class GradientCrush:
    """Marker for a gradient step; identity in this model."""

    duration: float = 0.0


PulseElement = HardPulse | Delay | GradientCrush


@dataclass(frozen=True)
class PulseSequence:
    """Ordered pulse/delay elements plus the declared z-frame on each spin.

    ``frame_a`` and ``frame_b`` are rotation angles (radians) of
    Rz = exp(-i angle sigma_z / 2) that must follow the sequence to reach
    the intended gate.
    """

    elements: tuple[PulseElement, ...] = ()
    frame_a: float = 0.0
    frame_b: float = 0.0

    @property
    def total_duration(self) -> float:
        return math.fsum(e.duration for e in self.elements)

    def delays(self) -> list[float]:
        return [e.duration for e in self.elements if isinstance(e, Delay)]

    def pulses(self) -> list[HardPulse]:
        return [e for e in self.elements if isinstance(e, HardPulse)]


def _canonical_theta(theta: float) -> float:
    return cloner.canonical_phase(theta)


def coupling_propagator(sys: SpinSystem, t: float) -> np.ndarray:
    """exp(-i 2 pi J t Iz Iz), diagonal with phases -+ pi J t / 2 by parity."""
    if t < 0:
        raise ValueError(f"evolution time must be non-negative, got {t!r}")
    phase = math.pi * sys.j_coupling * t / 2
    parity = np.array([1, -1, -1, 1])
    return np.diag(np.exp(-1j * phase * parity))


def _embed(op: np.ndarray, spin: str) -> np.ndarray:
    return np.kron(op, qcore.I2) if spin == "a" else np.kron(qcore.I2, op)


def pulse_unitary(pulse: HardPulse, sys: SpinSystem | None = None) -> np.ndarray:
    """Rotation of one spin; with ``sys`` given, coupling acts during the pulse."""
    phase = AXIS_PHASE[pulse.axis]
    if sys is None:
        return _embed(qcore.rotation(pulse.flip_angle, phase), pulse.spin)
    rf = (math.cos(phase) * qcore.SIGMA_X + math.sin(phase) * qcore.SIGMA_Y) / 2
    h = pulse.flip_angle / pulse.duration * _embed(rf, pulse.spin)
    h = h + 2 * math.pi * sys.j_coupling * IZ_IZ
    return expm(-1j * h * pulse.duration)


def element_unitary(
    element: PulseElement, sys: SpinSystem, include_pulse_coupling: bool = False
) -> np.ndarray:
    if isinstance(element, HardPulse):
        return pulse_unitary(element, sys if include_pulse_coupling else None)
    if isinstance(element, Delay):
        return coupling_propagator(sys, element.duration)
    return np.eye(4, dtype=complex)


def ideal_propagator(
    seq: PulseSequence, sys: SpinSystem, include_pulse_coupling: bool = False
) -> np.ndarray:
    u = np.eye(4, dtype=complex)
    for element in seq.elements:
        u = element_unitary(element, sys, include_pulse_coupling) @ u
    return u


def frame_matrix(seq: PulseSequence) -> np.ndarray:
    return np.kron(qcore.rz(seq.frame_a), qcore.rz(seq.frame_b))


def apply_frames(rho: np.ndarray, seq: PulseSequence) -> np.ndarray:
    """Apply the declared z-frame corrections to a state produced by ``seq``."""
    return qcore.evolve(frame_matrix(seq), rho)


def propagator_distance(seq: PulseSequence, target: np.ndarray, sys: SpinSystem) -> float:
    """Max-entry distance to ``target`` modulo global phase, frames applied."""
    return qcore.global_phase_distance(frame_matrix(seq) @ ideal_propagator(seq, sys), target)


class _Builder:
    """Emits pulses while tracking virtual z rotations on each spin."""

    def __init__(self):
        self.elements: list[PulseElement] = []
        self.frame = {"a": 0.0, "b": 0.0}

    def pulse(self, spin: str, angle: float, phase: float):
        if angle == 0:
            return
        actual = (phase - self.frame[spin]) % (2 * math.pi)
        quarter = actual / (math.pi / 2)
        k = round(quarter)
        if abs(quarter - k) > 1e-9:
            raise ValueError("pulse phase is not a multiple of 90 degrees")
        self.elements.append(HardPulse(spin, angle, _PHASE_AXIS[k % 4]))

    def rz(self, spin: str, angle: float):
        self.frame[spin] += angle

    def delay(self, unit: float, count: int):
        if unit > 0:
            self.elements.extend(Delay(unit) for _ in range(count))


def _rotation_sign(angle: float, theta_c: float) -> int:
    """+1 if ``angle`` is 2*theta (mod 4pi), -1 if it is -2*theta."""
    period = 4 * math.pi
    for sign in (1, -1):
        diff = (angle - sign * 2 * theta_c) % period
        if min(diff, period - diff) < 1e-9:
            return sign
    raise ValueError(f"controlled rotation angle {angle!r} is not +-2*theta for theta={theta_c!r}")


def compile(gates: list, theta: float, sys: SpinSystem) -> PulseSequence:  # noqa: A001
    """Turn the cloning circuit into hard pulses and coupling delays.

    Every delay is exactly tau1 = 1/(4J) or tau2 = theta*tau1/pi. A CNOT is
    a target-spin y pulse sandwich around a 2*tau1 coupling period; the
    controlled rotation by +-2*theta uses four tau2 periods between x pulses
    on the target, followed by a +-y pulse of flip angle theta.
    """
    theta_c = _canonical_theta(theta)
    tau1 = sys.tau1
    tau2 = sys.tau2(theta_c)
    b = _Builder()
    half_pi = math.pi / 2
    for gate in gates:
        if isinstance(gate, cloner.CNOT):
            t = gate.target
            b.pulse(t, half_pi, AXIS_PHASE["-y"])
            b.delay(tau1, 2)
            # controlled-Z = exp(-i pi/4 ZZ) followed by Rz(-pi/2) on both spins
            b.rz("a", -half_pi)
            b.rz("b", -half_pi)
            b.pulse(t, half_pi, AXIS_PHASE["y"])
        elif isinstance(gate, cloner.ControlledRy):
            sign = _rotation_sign(gate.angle, theta_c)
            if theta_c == 0:
                continue
            t = gate.target
            # exp(i sign theta/2 Zc Yt) from a 4*tau2 coupling period, then Ry(sign theta)
            first, second = ("-x", "x") if sign > 0 else ("x", "-x")
            b.pulse(t, half_pi, AXIS_PHASE[first])
            b.delay(tau2, 4)
            b.pulse(t, half_pi, AXIS_PHASE[second])
            b.pulse(t, theta_c, AXIS_PHASE["y" if sign > 0 else "-y"])
        else:
            raise TypeError(f"cannot compile gate {gate!r}")
    return PulseSequence(
        elements=tuple(b.elements),
        frame_a=b.frame["a"] % (2 * math.pi),
        frame_b=b.frame["b"] % (2 * math.pi),
    )


def compile_clone(theta: float, sys: SpinSystem | None = None) -> PulseSequence:
    sys = sys or SpinSystem()
    return compile(cloner.decompose(theta), theta, sys)


def _relax_spin(rho: np.ndarray, spin: str, t: float, t1: float, t2: float) -> np.ndarray:
    """Unital single-spin channel: transverse x exp(-t/T2), longitudinal x exp(-t/T1)."""
    if t == 0:
        return rho
    lam_xy = math.exp(-t / t2)
    lam_z = math.exp(-t / t1)
    r = rho.reshape(2, 2, 2, 2).copy()  # (a, b, a', b')
    if spin == "a":
        p0, p1 = r[0, :, 0, :].copy(), r[1, :, 1, :].copy()
        r[0, :, 1, :] *= lam_xy
        r[1, :, 0, :] *= lam_xy
        r[0, :, 0, :] = (1 + lam_z) / 2 * p0 + (1 - lam_z) / 2 * p1
        r[1, :, 1, :] = (1 - lam_z) / 2 * p0 + (1 + lam_z) / 2 * p1
    else:
        p0, p1 = r[:, 0, :, 0].copy(), r[:, 1, :, 1].copy()
        r[:, 0, :, 1] *= lam_xy
        r[:, 1, :, 0] *= lam_xy
        r[:, 0, :, 0] = (1 + lam_z) / 2 * p0 + (1 - lam_z) / 2 * p1
        r[:, 1, :, 1] = (1 - lam_z) / 2 * p0 + (1 + lam_z) / 2 * p1
    return r.reshape(4, 4)


def relax(rho: np.ndarray, t: float, sys: SpinSystem) -> np.ndarray:
    """Phenomenological T1/T2 damping of both spins over time ``t``.

    Two-spin coherences pick up the product of the per-spin factors.
    """
    for spin in "ab":
        t1, t2 = sys.times(spin)
        rho = _relax_spin(rho, spin, t, t1, t2)
    return rho


def simulate_relaxed(
    rho_in: np.ndarray,
    seq: PulseSequence,
    sys: SpinSystem,
    include_pulse_coupling: bool = False,
) -> np.ndarray:
    """Apply each element's unitary and then relaxation over its duration.

    The declared frames are not applied; use ``apply_frames`` on the result.
    """
    rho = np.asarray(rho_in, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("simulate_relaxed needs a two-spin density matrix")
    for element in seq.elements:
        rho = qcore.evolve(element_unitary(element, sys, include_pulse_coupling), rho)
        rho = relax(rho, element.duration, sys)
    return rho


@dataclass(frozen=True)
class AcquisitionConfig:
    n_samples: int = 8192
    dwell_time: float = 2e-4
    reference_phase: float = 0.0

    def __post_init__(self):
        n = self.n_samples
        if n < 2 or n & (n - 1):
            raise ValueError(f"n_samples must be a power of two >= 2, got {n!r}")
        if not (self.dwell_time > 0):
            raise ValueError(f"dwell_time must be positive, got {self.dwell_time!r}")

    @property
    def resolution(self) -> float:
        return 1.0 / (self.n_samples * self.dwell_time)


class Spectrum(NamedTuple):
    frequencies: np.ndarray  # absolute, Hz
    amplitudes: np.ndarray  # complex
    multiplet_integral: float


_SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)


def fid(rho: np.ndarray, spin: str, sys: SpinSystem, acq: AcquisitionConfig) -> np.ndarray:
    """Rotating-frame free induction decay of ``spin`` under coupling and T2."""
    rho = np.asarray(rho, dtype=complex)
    t = np.arange(acq.n_samples) * acq.dwell_time
    energies = 2 * math.pi * sys.j_coupling * np.diag(IZ_IZ).real
    detector = _embed(_SIGMA_PLUS, spin)
    # Tr(rho(t) A) = sum_jk rho_jk A_kj exp(-i (E_j - E_k) t)
    weights = rho * detector.T
    omega = energies[:, None] - energies[None, :]
    jk = np.nonzero(weights)
    signal = np.zeros(acq.n_samples, dtype=complex)
    for j, k in zip(*jk):
        signal += weights[j, k] * np.exp(-1j * omega[j, k] * t)
    _, t2 = sys.times(spin)
    return signal * np.exp(1j * acq.reference_phase) * np.exp(-t / t2)


def synthesize_spectrum(
    rho: np.ndarray, spin: str, sys: SpinSystem, acq: AcquisitionConfig | None = None
) -> Spectrum:
    """Fourier-transformed FID of one spin and the real integral of its multiplet.

    The spectral window holds only the observed nucleus, so the multiplet
    integral is the sum over the whole window. By the DFT sum rule it equals
    the real part of the first FID point.
    """
    acq = acq or AcquisitionConfig()
    if sys.j_coupling < 2 * acq.resolution:
        raise ValueError(
            f"J={sys.j_coupling} Hz not resolved: bin width {acq.resolution:.4g} Hz"
        )
    if sys.j_coupling >= 1.0 / acq.dwell_time:
        raise ValueError("multiplet wider than the spectral window")
    signal = fid(rho, spin, sys, acq)
    amplitudes = np.fft.fftshift(np.fft.fft(signal)) * acq.dwell_time
    offsets = np.fft.fftshift(np.fft.fftfreq(acq.n_samples, acq.dwell_time))
    integral = float(np.sum(amplitudes.real) * acq.resolution)
    return Spectrum(sys.larmor(spin) + offsets, amplitudes, integral)


def receiver_phase(rho_ref: np.ndarray, spin: str = "a") -> float:
    """Receiver phase that puts the reference spectrum in pure absorption."""
    coherence = np.trace(np.asarray(rho_ref) @ _embed(_SIGMA_PLUS, spin))
    if abs(coherence) < qcore.PSD_ATOL:
        raise ValueError("reference state has no transverse magnetization")
    return float(-np.angle(coherence))


def relative_length(
    rho_out: np.ndarray,
    rho_ref: np.ndarray,
    out_spin: str,
    sys: SpinSystem,
    acq: AcquisitionConfig | None = None,
    ref_spin: str = "a",
) -> float:
    """Output/reference multiplet integral ratio at a common receiver phase.

    Fidelity of the copy on ``out_spin`` is (1 + ratio) / 2.
    """
    acq = acq or AcquisitionConfig()
    acq = AcquisitionConfig(acq.n_samples, acq.dwell_time, receiver_phase(rho_ref, ref_spin))
    ref = synthesize_spectrum(rho_ref, ref_spin, sys, acq).multiplet_integral
    out = synthesize_spectrum(rho_out, out_spin, sys, acq).multiplet_integral
    return out / ref


def peak_frequencies(spectrum: Spectrum, count: int = 2) -> np.ndarray:
    """Frequencies of the ``count`` largest local maxima of |amplitude|, sorted."""
    mag = np.abs(spectrum.amplitudes)
    interior = np.nonzero((mag[1:-1] > mag[:-2]) & (mag[1:-1] >= mag[2:]))[0] + 1
    top = interior[np.argsort(mag[interior])[::-1][:count]]
    return np.sort(spectrum.frequencies[top])


def _fmt(x: float) -> str:
    return np.format_float_positional(x, precision=9, unique=False, fractional=False, trim="-")


def to_listing(seq: PulseSequence) -> str:
    """Line-oriented sequence file: PULSE / DELAY / GRAD, one per line."""
    lines = []
    for e in seq.elements:
        if isinstance(e, HardPulse):
            lines.append(f"PULSE {e.spin} {_fmt(math.degrees(e.flip_angle))} {e.axis} 5e-6")
        elif isinstance(e, Delay):
            lines.append(f"DELAY {_fmt(e.duration)}")
        else:
            lines.append("GRAD")
    return "".join(line + "\n" for line in lines)


def parse_listing(text: str, frame_a: float = 0.0, frame_b: float = 0.0) -> PulseSequence:
    elements: list[PulseElement] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        tokens = raw.split()
        if not tokens:
            continue
        try:
            kind = tokens[0]
            if kind == "PULSE" and len(tokens) == 5:
                if float(tokens[4]) != HARD_PULSE_WIDTH:
                    raise ValueError("pulse width must be 5e-6")
                elements.append(HardPulse(tokens[1], math.radians(float(tokens[2])), tokens[3]))
            elif kind == "DELAY" and len(tokens) == 2:
                elements.append(Delay(float(tokens[1])))
            elif kind == "GRAD" and len(tokens) == 1:
                elements.append(GradientCrush())
            else:
                raise ValueError(f"unrecognized element {raw.strip()!r}")
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return PulseSequence(tuple(elements), frame_a, frame_b)


@dataclass(frozen=True)
class CompilationReport:
    theta: float
    tau1: float
    tau2: float
    total_duration: float
    n_pulses: int
    n_delays: int
    frame_a: float
    frame_b: float
    distance: float


def compilation_report(seq: PulseSequence, theta: float, sys: SpinSystem) -> CompilationReport:
    return CompilationReport(
        theta=theta,
        tau1=sys.tau1,
        tau2=sys.tau2(theta),
        total_duration=seq.total_duration,
        n_pulses=len(seq.pulses()),
        n_delays=len(seq.delays()),
        frame_a=seq.frame_a,
        frame_b=seq.frame_b,
        distance=propagator_distance(seq, cloner.build_unitary(theta), sys),
    )
