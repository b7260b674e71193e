"""Conventional (impulsive) measurement with a two-level detector.

The free Hamiltonians are neglected and U_M acts at once, entangling the
system with the detector; reading the detector in z collapses the system.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import InvariantError, as_state, partial_trace, tensor
from .protective import make_rng
from .spin import D_DOWN, check_click_table


@dataclass
class ImpulsiveResult:
    post_state: np.ndarray
    outcome_probs: tuple  # (p_up, p_down) of the detector in z
    sampled_counts: dict | None = None

    @property
    def system_state(self) -> np.ndarray:
        return partial_trace(self.post_state, 1, (2, 2))

    @property
    def detector_state(self) -> np.ndarray:
        return partial_trace(self.post_state, 0, (2, 2))


def impulsive_measure(system_state, u) -> ImpulsiveResult:
    """Apply U_M to |system> (x) |d_down>; u must realize the click table."""
    psi = as_state(system_state)
    if psi.shape != (2,):
        raise ValueError("system state must be a qubit")
    if not check_click_table(u):
        raise InvariantError("unitary does not realize the measurement click table")
    post = np.asarray(u, dtype=complex) @ tensor(D_DOWN, psi)
    rho_d = partial_trace(post, 0, (2, 2))
    p_up = float(np.clip(rho_d[0, 0].real, 0.0, 1.0))
    return ImpulsiveResult(post, (p_up, 1.0 - p_up))


def born_sample(result: ImpulsiveResult, shots: int, seed: int | None = None) -> dict:
    """Sample detector z-readouts from the Born probabilities.

    Independent tasks should use seeds spawned with
    ``np.random.SeedSequence(seed).spawn(k)``.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng, meta = make_rng(seed)
    n_up = int(rng.binomial(shots, result.outcome_probs[0]))
    counts = dict(meta, n_up=n_up, n_down=shots - n_up, shots=shots)
    result.sampled_counts = counts
    return counts
