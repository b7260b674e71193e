"""Time-ordered propagation under H(t) = H_static + g(t) H_coupling."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import as_hermitian, as_state, expm_hermitian, expm_hermitian_batch, state_distance, tensor
from .spin import IDENTITY, CouplingProfile, SystemConfig, coupling_operators, system_hamiltonian


@dataclass(frozen=True)
class EvolutionPlan:
    """H(t) = h_static + g(t) * h_coupling on [0, profile.total_time].

    ``steps=0`` asks for the exact single exponential, which is only valid
    when g is constant.
    """

    h_static: np.ndarray
    h_coupling: np.ndarray
    profile: CouplingProfile
    steps: int = 0

    def __post_init__(self):
        as_hermitian(self.h_static)
        as_hermitian(self.h_coupling)
        if self.h_static.shape != self.h_coupling.shape:
            raise ValueError("static and coupling parts have different shapes")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if self.steps == 0 and self.profile.kind != "constant":
            raise ValueError("exact propagation (steps=0) needs a constant profile")

    @property
    def dim(self) -> int:
        return self.h_static.shape[0]

    def hamiltonian(self, t: float) -> np.ndarray:
        return self.h_static + self.profile.value(t) * self.h_coupling

    def with_steps(self, steps: int) -> "EvolutionPlan":
        return EvolutionPlan(self.h_static, self.h_coupling, self.profile, steps)

    @classmethod
    def from_config(cls, cfg: SystemConfig, steps: int | None = None) -> "EvolutionPlan":
        """Single detector joint Hamiltonian, apparatus (x) system."""
        q_a, q_s = coupling_operators(cfg.meas_axis)
        h_static = cfg.ea * np.eye(4) + tensor(IDENTITY, system_hamiltonian(cfg))
        h_coupling = tensor(q_a, q_s)
        if steps is None:
            steps = default_steps(cfg)
        return cls(h_static, h_coupling, cfg.profile, steps)


def default_steps(cfg: SystemConfig) -> int:
    if cfg.profile.kind == "constant":
        return 0
    return max(1000, math.ceil(20 * cfg.b0 * cfg.T))


def propagator(plan: EvolutionPlan, reverse: bool = False, chunk: int = 4096) -> np.ndarray:
    """Full propagator U(T, 0).

    Stepped plans multiply midpoint exponentials with the latest step on the
    left. ``reverse=True`` applies the same steps in the opposite order.
    """
    T = plan.profile.total_time
    if plan.steps == 0:
        # constant coupling: H commutes with itself at all times
        return expm_hermitian(plan.h_static + plan.h_coupling / T, T)
    dt = T / plan.steps
    u = np.eye(plan.dim, dtype=complex)
    starts = list(range(0, plan.steps, chunk))
    if reverse:
        starts = starts[::-1]
    for start in starts:
        k = np.arange(start, min(start + chunk, plan.steps))
        g = plan.profile.value((k + 0.5) * dt)
        hs = plan.h_static[None] + g[:, None, None] * plan.h_coupling[None]
        steps = expm_hermitian_batch(hs, dt)
        for s in (steps[::-1] if reverse else steps):
            u = s @ u
    return u


def propagate(plan: EvolutionPlan, initial, reverse: bool = False) -> np.ndarray:
    psi = as_state(initial, tol=1e-10)
    if psi.shape[0] != plan.dim:
        raise ValueError(f"state has dim {psi.shape[0]}, plan has {plan.dim}")
    return propagator(plan, reverse) @ psi


@dataclass(frozen=True)
class ConvergenceReport:
    levels: tuple
    deficits: tuple  # distance between level k and level k+1
    ratios: tuple

    def second_order(self, tol: float = 0.2) -> bool:
        return all(abs(r - 4.0) <= 4.0 * tol for r in self.ratios)

    def at_floor(self, floor: float = 1e-12) -> bool:
        return all(d < floor for d in self.deficits)


def step_convergence(plan: EvolutionPlan, initial, levels) -> ConvergenceReport:
    """Phase-insensitive distances between successive step refinements."""
    levels = sorted(int(n) for n in levels)
    if len(levels) < 3:
        raise ValueError("need at least 3 step levels")
    if levels[0] < 1:
        raise ValueError("step levels must be positive")
    finals = [propagate(plan.with_steps(n), initial) for n in levels]
    deficits = [state_distance(a, b) for a, b in zip(finals, finals[1:])]
    ratios = [a / b if b > 0 else math.inf for a, b in zip(deficits, deficits[1:])]
    return ConvergenceReport(tuple(levels), tuple(deficits), tuple(ratios))
