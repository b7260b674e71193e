"""Protective (adiabatic) measurement of a spin-1/2 by a spin-1/2 pointer.

The detector starts in |d_down>. In the adiabatic limit it is rotated about
x by theta = pi <P_{axis,+}>, so theta/pi reads the expectation value while
the system stays in its protected eigenstate. Finite T leaves an O(1/T)
error in theta and an O(1/T^2) probability that the system flips.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .evolution import EvolutionPlan, propagator
from .linalg import InvariantError, as_density, bloch_vector, fidelity, partial_trace, spectral, tensor
from .spin import D_DOWN, SystemConfig, coupling_operators, projector, system_hamiltonian

# Rotation sense of the pointer: R_x(theta)|d_down> has Bloch vector
# (0, sin(theta), -cos(theta)); checked by a calibration run at |alpha|^2 = 1/4.
ROTATION_SENSE = 1.0
RNG_ALGORITHM = "numpy.random.Philox"


def make_rng(seed: int | None):
    """Counter-based generator plus metadata naming it."""
    rng = np.random.Generator(np.random.Philox(seed))
    meta = {"algorithm": RNG_ALGORITHM, "numpy": np.__version__, "seed": seed}
    return rng, meta


@dataclass
class ProtectiveResult:
    T: float
    final_joint: np.ndarray | None  # None when the run started from a mixed system state
    system_state: np.ndarray
    apparatus_state: np.ndarray
    system_fidelity: float
    flip_probability: float
    apparatus_bloch: np.ndarray
    theta_extracted: float
    expectation_estimate: float
    target_expectation: float
    sampling: dict | None = None

    @property
    def theta_error(self) -> float:
        return abs(self.theta_extracted - math.pi * self.target_expectation)


def rotation_angle(bloch) -> float:
    """Angle about x carrying (0, 0, -1) to the given Bloch direction, in [0, pi]."""
    return abs(math.atan2(ROTATION_SENSE * bloch[1], -bloch[2]))


def _joint_density(u: np.ndarray, rho_sys: np.ndarray) -> np.ndarray:
    rho0 = tensor(np.outer(D_DOWN, D_DOWN.conj()), rho_sys)
    return u @ rho0 @ u.conj().T


def run_protective(cfg: SystemConfig, system_state=None, *, steps: int | None = None,
                   shots: int | None = None, seed: int | None = None) -> ProtectiveResult:
    """Propagate |system> (x) |d_down> for time T and read out the pointer.

    Args:
        cfg: scenario; the fidelity reference is the protected state of ``cfg``.
        system_state: optional initial system state (vector or 2x2 density).
            Defaults to ``cfg.state``.
        steps: stepper resolution for ramped profiles (default from cfg).
        shots: if given, theta is estimated from this many sampled
            z-readouts of the pointer instead of the exact expectation.
        seed: seed for the sampling generator.
    """
    system_hamiltonian(cfg)  # raises on B0 = 0
    u = propagator(EvolutionPlan.from_config(cfg, steps))
    if system_state is None:
        system_state = cfg.state
    system_state = np.asarray(system_state, dtype=complex)
    if system_state.ndim == 1:
        final = u @ tensor(D_DOWN, system_state)
        rho_a = partial_trace(final, 0, (2, 2))
        rho_s = partial_trace(final, 1, (2, 2))
    else:
        final = None
        rho = _joint_density(u, as_density(system_state))
        rho_a = partial_trace(rho, 0, (2, 2))
        rho_s = partial_trace(rho, 1, (2, 2))

    f = fidelity(rho_s, cfg.state)
    flip = fidelity(rho_s, cfg.orthogonal_state)
    bloch = bloch_vector(rho_a)
    sampling = None
    if shots is None:
        theta = rotation_angle(bloch)
    else:
        if shots < 1:
            raise ValueError("shots must be >= 1")
        rng, meta = make_rng(seed)
        p_up = float(np.clip(rho_a[0, 0].real, 0.0, 1.0))
        n_up = int(rng.binomial(shots, p_up))
        z_hat = 2.0 * n_up / shots - 1.0
        theta = math.acos(float(np.clip(-z_hat, -1.0, 1.0)))
        sampling = dict(meta, shots=shots, n_up=n_up)
    target = fidelity(projector(cfg.meas_axis, +1), cfg.state)
    return ProtectiveResult(cfg.T, final, rho_s, rho_a, f, flip, bloch, theta,
                            theta / math.pi, target, sampling)


def eta(cfg: SystemConfig) -> complex:
    """alpha*beta / (2 B0 T)."""
    if cfg.b0 == 0:
        raise InvariantError("B0 = 0 leaves the protected state degenerate")
    return cfg.alpha * cfg.beta / (2.0 * cfg.b0 * cfg.T)


def _qs_elements(cfg: SystemConfig):
    # matrix elements of Q_S between |nu> (ground, -B0) and |chi> (+B0)
    _, q_s = coupling_operators(cfg.meas_axis)
    nu, chi = cfg.state, cfg.orthogonal_state
    return (np.vdot(nu, q_s @ nu).real, np.vdot(chi, q_s @ chi).real,
            np.vdot(chi, q_s @ nu))


def flip_probability_leading(cfg: SystemConfig) -> float:
    """First-order flip probability for a suddenly switched constant coupling.

    On the a=1 pointer branch the initial state overlaps the dressed excited
    state with amplitude eps = (Q_S)_{chi nu} / (2 B0 T). The flip amplitude is
    eps * (exp(-i E_chi T) - exp(-i E_nu T)) and the branch carries weight
    |<x-|d_down>|^2 = 1/2, giving 2 |eps|^2 sin^2(dE T / 2).
    """
    if cfg.b0 == 0:
        raise InvariantError("B0 = 0 leaves the protected state degenerate")
    if not cfg.protect:
        raise InvariantError("leading flip probability assumes a protected state")
    if cfg.profile.kind != "constant":
        raise ValueError("leading flip probability is derived for a constant coupling")
    T = cfg.T
    q_nu, q_chi, q_chinu = _qs_elements(cfg)
    eps = abs(q_chinu) / (2.0 * cfg.b0 * T)
    gap = 2.0 * cfg.b0 + (q_chi - q_nu) / T
    weight = abs(np.vdot(projector("x", -1) @ D_DOWN, D_DOWN))
    return float(weight * 4.0 * eps ** 2 * math.sin(0.5 * gap * T) ** 2)


@dataclass
class PerturbationReport:
    a_i: int
    T: float
    exact_energies: np.ndarray
    order1_energies: np.ndarray
    order2_energies: np.ndarray
    state_correction_norm: float
    matrix_elements: dict = field(default_factory=dict)

    @property
    def residual1(self) -> np.ndarray:
        return np.abs(self.exact_energies - self.order1_energies)

    @property
    def residual2(self) -> np.ndarray:
        return np.abs(self.exact_energies - self.order2_energies)


def perturbation_report(cfg: SystemConfig, a_i: int) -> PerturbationReport:
    """Exact vs perturbative energies of E^a + H_S + (a_i/T) Q_S.

    Energies are ordered (mu = nu, mu = chi), i.e. ground then excited.
    """
    if a_i not in (0, 1):
        raise ValueError("a_i must be an eigenvalue of P_{x,-}: 0 or 1")
    h_s = system_hamiltonian(cfg)
    T = cfg.T
    _, q_s = coupling_operators(cfg.meas_axis)
    basis = spectral(h_s)
    levels, vecs = basis.eigenvalues, basis.eigenvectors
    if abs(levels[1] - levels[0]) < 1e-9:
        raise InvariantError("degenerate system levels")
    q = vecs.conj().T @ q_s @ vecs
    exact = spectral(cfg.ea * np.eye(2) + h_s + (a_i / T) * q_s).eigenvalues
    order1 = cfg.ea + levels + (a_i / T) * q.diagonal().real
    second = np.array([
        sum(abs(q[m, k]) ** 2 / (levels[m] - levels[k]) for k in range(2) if k != m)
        for m in range(2)
    ])
    order2 = order1 + (a_i / T) ** 2 * second
    correction = (a_i / T) * abs(q[1, 0]) / abs(levels[0] - levels[1])
    elements = {"qs_nu": q[0, 0].real, "qs_chi": q[1, 1].real, "qs_chi_nu": complex(q[1, 0])}
    return PerturbationReport(a_i, T, exact, order1, order2, float(correction), elements)


def loglog_slope(x, y) -> tuple[float, float]:
    """Least-squares slope and intercept of log(y) against log(x)."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(slope), float(intercept)


def infidelity_envelope(cfg: SystemConfig, samples: int = 16) -> float:
    """1 - fidelity averaged over one period of the sin^2(B0 T) oscillation.

    With a constant coupling the flip probability oscillates in T with
    period pi/B0 around a mean that scales as 1/T^2; the average over
    equally spaced T in one period isolates that mean.
    """
    period = math.pi / cfg.b0
    vals = []
    for k in range(samples):
        t = cfg.T + period * k / samples
        prof = type(cfg.profile)(cfg.profile.kind, t, cfg.profile.ramp_fraction,
                                 cfg.profile.ramp_out_fraction)
        vals.append(1.0 - run_protective(cfg.replace(profile=prof)).system_fidelity)
    return float(np.mean(vals))


@dataclass
class Reconstruction:
    bloch_estimate: np.ndarray
    bloch_true: np.ndarray
    distance: float
    final_fidelity: float
    stages: dict


def reconstruct_state(cfg: SystemConfig, order: tuple = ("z", "x", "y")) -> Reconstruction:
    """Three sequential protective runs on one system, fresh pointer each time.

    The post-measurement (slightly mixed) system state of each run is the
    input to the next; nothing is reset between stages.
    """
    if not cfg.protect:
        raise InvariantError("reconstruction needs a protected state")
    state = None
    stages = {}
    for axis in order:
        res = run_protective(cfg.replace(meas_axis=axis), system_state=state)
        stages[axis] = res
        state = res.system_state
    est = np.array([2.0 * stages[a].expectation_estimate - 1.0 for a in ("x", "y", "z")])
    true = np.array([np.vdot(cfg.state, projector(a, 1) @ cfg.state).real * 2 - 1
                     for a in ("x", "y", "z")])
    return Reconstruction(est, true, float(np.linalg.norm(est - true)),
                          fidelity(state, cfg.state), stages)
