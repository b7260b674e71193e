"""N detector spins as a classical pointer.

Every detector is coupled through Q_A = -pi sum_l P_{x,-}^{(l)}, so in the
adiabatic limit each one is rotated about x by pi |alpha|^2 and the total
spin's relative fluctuation falls like 1/sqrt(N).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .evolution import EvolutionPlan, default_steps, propagator
from .linalg import evolve, tensor
from .spin import D_DOWN, IDENTITY, SIGMA, SystemConfig, projector, system_hamiltonian

BRUTE_MAX_N = 10
_AXES = ("x", "y", "z")


@dataclass
class EnsembleResult:
    n: int
    mean_spin: np.ndarray
    variance_spin: np.ndarray
    relative_fluctuation: float  # sqrt(var S_z) / N, z being the pointer readout axis
    covariance: np.ndarray
    pointer_angle: float
    angle_uncertainty: float


def _result(n: int, mean: np.ndarray, cov: np.ndarray) -> EnsembleResult:
    var = np.maximum(cov.diagonal().copy(), 0.0)
    angle = abs(math.atan2(mean[1], -mean[2]))
    # spread perpendicular to the pointer inside the y-z rotation plane
    e = np.array([0.0, math.cos(angle), math.sin(angle)])
    length = float(np.linalg.norm(mean))
    unc = math.sqrt(max(e @ cov @ e, 0.0)) / length if length > 0 else math.inf
    return EnsembleResult(n, mean, var, math.sqrt(var[2]) / n, cov, angle, unc)


def single_detector_state(cfg: SystemConfig) -> np.ndarray:
    """Leading-order pointer state exp(-i pi <P_{axis,+}> S_x)|d_down>."""
    p = np.vdot(cfg.state, projector(cfg.meas_axis, 1) @ cfg.state).real
    theta = math.pi * p
    return np.array([-1j * math.sin(theta / 2), math.cos(theta / 2)])


def ensemble_evolve_factorized(cfg: SystemConfig, n: int) -> EnsembleResult:
    """Exact statistics of the product of n identically rotated detectors."""
    if n < 1:
        raise ValueError("n must be >= 1")
    system_hamiltonian(cfg)
    d = single_detector_state(cfg)
    s_mean = np.array([np.vdot(d, SIGMA[a] @ d).real / 2 for a in _AXES])
    # pure spin-1/2: <(s_a s_b + s_b s_a)/2> = delta_ab / 4
    s_cov = 0.25 * np.eye(3) - np.outer(s_mean, s_mean)
    return _result(n, n * s_mean, n * s_cov)


def _apply_local(psi: np.ndarray, op: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    t = psi.reshape([2] * n_sites)
    t = np.moveaxis(np.tensordot(op, t, axes=([1], [site])), 0, site)
    return t.reshape(-1)


def ensemble_plan(cfg: SystemConfig, n: int, steps: int | None = None) -> EvolutionPlan:
    """Joint plan on detectors 1..n (x) system with H_I = (1/T) Q_A (x) P_{axis,+}."""
    dim = 2 ** (n + 1)
    p_minus = projector("x", -1)
    q_a = -np.pi * sum(
        tensor(*[p_minus if k == l else IDENTITY for k in range(n)]) for l in range(n)
    ) if n > 1 else -np.pi * p_minus
    h_static = cfg.ea * np.eye(dim) + tensor(np.eye(2 ** n), system_hamiltonian(cfg))
    h_coupling = tensor(q_a, projector(cfg.meas_axis, 1))
    if steps is None:
        steps = default_steps(cfg)
    return EvolutionPlan(h_static, h_coupling, cfg.profile, steps)


def ensemble_final_state(cfg: SystemConfig, n: int) -> np.ndarray:
    if n > BRUTE_MAX_N:
        raise ValueError(f"brute-force ensemble limited to n <= {BRUTE_MAX_N}, got {n}")
    if n < 1:
        raise ValueError("n must be >= 1")
    initial = tensor(*([D_DOWN] * n), cfg.state)
    plan = ensemble_plan(cfg, n)
    if plan.steps == 0:
        return evolve(plan.h_static + plan.h_coupling / cfg.T, cfg.T, initial)
    return propagator(plan) @ initial


def total_spin_statistics(psi: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean and symmetrized covariance of S = sum of detector spins.

    The system is the last tensor site.
    """
    sites = n + 1
    applied = [reduce(np.add, (_apply_local(psi, SIGMA[a] / 2, l, sites) for l in range(n)))
               for a in _AXES]
    mean = np.array([np.vdot(psi, v).real for v in applied])
    gram = np.array([[np.vdot(u, v).real for v in applied] for u in applied])
    return mean, gram - np.outer(mean, mean)


def ensemble_evolve_brute(cfg: SystemConfig, n: int) -> EnsembleResult:
    """Full 2^(n+1)-dimensional propagation, n <= 10."""
    psi = ensemble_final_state(cfg, n)
    mean, cov = total_spin_statistics(psi, n)
    return _result(n, mean, cov)


@dataclass
class FluctuationFit:
    concentrated: bool
    slope: float | None = None
    intercept: float | None = None
    residual: float | None = None


def fluctuation_scaling(cfg: SystemConfig, n_list) -> FluctuationFit:
    """Log-log slope of the relative total-spin fluctuation against N."""
    ns = sorted(int(n) for n in n_list)
    if len(ns) < 4 or ns[-1] < 4 * ns[0]:
        raise ValueError("need at least 4 values of n spanning two octaves")
    rel = np.array([ensemble_evolve_factorized(cfg, n).relative_fluctuation for n in ns])
    if np.any(rel <= 1e-15):
        return FluctuationFit(concentrated=True)
    lx, ly = np.log(ns), np.log(rel)
    coef, res, *_ = np.polyfit(lx, ly, 1, full=True)
    residual = float(res[0]) if len(res) else 0.0
    return FluctuationFit(False, float(coef[0]), float(coef[1]), residual)
