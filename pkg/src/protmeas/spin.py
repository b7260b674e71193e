"""Operators for a spin-1/2 system measured by spin-1/2 detectors.

Basis conventions: ``UP = (1, 0)`` is sigma_z = +1 for the system,
``D_UP = (1, 0)`` / ``D_DOWN = (0, 1)`` for a detector. Joint operators put
the apparatus factor first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import InvariantError, is_unitary, tensor

SIGMA = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
IDENTITY = np.eye(2, dtype=complex)

UP = np.array([1, 0], dtype=complex)
DOWN = np.array([0, 1], dtype=complex)
D_UP = UP
D_DOWN = DOWN

AXES = ("x", "y", "z")


def pauli(axis: str) -> np.ndarray:
    try:
        return SIGMA[axis].copy()
    except KeyError:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}") from None


def projector(axis: str, sign: int | str = +1) -> np.ndarray:
    """P_{axis,sign} = (I + sign*sigma_axis)/2."""
    s = {"+": 1, "-": -1, 1: 1, -1: -1}.get(sign)
    if s is None:
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    return 0.5 * (IDENTITY + s * pauli(axis))


def protection_field(alpha: complex, beta: complex) -> np.ndarray:
    """Unit field direction whose sigma.n has (alpha, beta) as +1 eigenvector."""
    ab = np.conj(alpha) * beta
    return np.array([2 * ab.real, 2 * ab.imag, abs(alpha) ** 2 - abs(beta) ** 2])


def spin_dot(n_hat) -> np.ndarray:
    return sum(c * SIGMA[a] for c, a in zip(n_hat, AXES))


@dataclass(frozen=True)
class CouplingProfile:
    """Time dependence g(t) of the coupling, normalized to unit area on [0, T].

    ``cosine-ramp`` rises with a raised-cosine edge over ``ramp_fraction*T``,
    stays flat, and falls over ``ramp_out_fraction*T`` (defaults to the
    rise fraction).
    """

    kind: str = "constant"
    total_time: float = 1.0
    ramp_fraction: float = 0.1
    ramp_out_fraction: float | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "cosine-ramp"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if not self.total_time > 0:
            raise ValueError(f"total_time must be positive, got {self.total_time}")
        for f in (self.ramp_fraction, self.ramp_out):
            if not 0.0 <= f < 0.5:
                raise ValueError(f"ramp fraction must lie in [0, 0.5), got {f}")

    @property
    def ramp_out(self) -> float:
        return self.ramp_fraction if self.ramp_out_fraction is None else self.ramp_out_fraction

    @property
    def area(self) -> float:
        # unnormalized window area; each raised-cosine edge contributes half its width
        if self.kind == "constant":
            return self.total_time
        return self.total_time * (1.0 - 0.5 * (self.ramp_fraction + self.ramp_out))

    def window(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.ones_like(t)
        T = self.total_time
        t_in, t_out = self.ramp_fraction * T, self.ramp_out * T
        w = np.ones_like(t)
        if t_in > 0:
            rising = t < t_in
            w = np.where(rising, 0.5 * (1 - np.cos(np.pi * t / t_in)), w)
        if t_out > 0:
            falling = t > T - t_out
            w = np.where(falling, 0.5 * (1 - np.cos(np.pi * (T - t) / t_out)), w)
        return w

    def value(self, t):
        t_arr = np.asarray(t, dtype=float)
        eps = 1e-12 * self.total_time
        if np.any(t_arr < -eps) or np.any(t_arr > self.total_time + eps):
            raise ValueError(f"t outside [0, {self.total_time}]")
        g = self.window(t_arr) / self.area
        return float(g) if g.ndim == 0 else g


def coupling_value(profile: CouplingProfile, t: float) -> float:
    return profile.value(t)


@dataclass(frozen=True)
class SystemConfig:
    """Physical scenario for one protective measurement.

    With ``protect=True`` the field direction is the Bloch vector of
    (alpha, beta), so the unknown state is the ground state of H_S. Passing
    ``protect=False`` with an explicit ``n_hat`` models a misaligned field.
    The default coupling is constant over T = 1000.
    """

    alpha: complex
    beta: complex
    b0: float = 1.0
    ea: float = 0.5
    meas_axis: str = "z"
    profile: CouplingProfile = field(default_factory=lambda: CouplingProfile("constant", 1000.0))
    n_hat: tuple | None = None
    protect: bool = True

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise InvariantError(f"|alpha|^2 + |beta|^2 = {norm!r}, expected 1")
        if self.meas_axis not in AXES:
            raise ValueError(f"meas_axis must be one of {AXES}")
        if self.b0 < 0:
            raise ValueError("b0 must be non-negative")
        if self.n_hat is None:
            object.__setattr__(self, "n_hat", tuple(protection_field(self.alpha, self.beta)))
        n = np.asarray(self.n_hat, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise InvariantError("n_hat must be a unit vector")
        if self.protect and np.abs(n - protection_field(self.alpha, self.beta)).max() > 1e-10:
            raise InvariantError("n_hat is misaligned with the protected state")

    @classmethod
    def from_populations(cls, alpha_sq: float, rel_phase: float = 0.0, T: float = 1000.0,
                         profile: str = "constant", ramp_fraction: float = 0.1, **kw):
        if not 0.0 <= alpha_sq <= 1.0:
            raise ValueError(f"alpha_sq must lie in [0, 1], got {alpha_sq}")
        alpha = complex(math.sqrt(alpha_sq))
        beta = math.sqrt(1.0 - alpha_sq) * complex(math.cos(rel_phase), math.sin(rel_phase))
        prof = CouplingProfile(profile, T, ramp_fraction)
        return cls(alpha, beta, profile=prof, **kw)

    @property
    def T(self) -> float:
        return self.profile.total_time

    @property
    def state(self) -> np.ndarray:
        """|nu> = alpha|up> + beta|down>."""
        return np.array([self.alpha, self.beta], dtype=complex)

    @property
    def orthogonal_state(self) -> np.ndarray:
        """|chi> = beta*|up> - alpha*|down>."""
        return np.array([np.conj(self.beta), -np.conj(self.alpha)], dtype=complex)

    def replace(self, **changes) -> "SystemConfig":
        kw = dict(alpha=self.alpha, beta=self.beta, b0=self.b0, ea=self.ea,
                  meas_axis=self.meas_axis, profile=self.profile,
                  n_hat=self.n_hat, protect=self.protect)
        kw.update(changes)
        return SystemConfig(**kw)


def system_hamiltonian(cfg: SystemConfig) -> np.ndarray:
    """H_S = -B0 sigma.n."""
    if cfg.b0 == 0:
        raise InvariantError("B0 = 0 leaves the protected state degenerate")
    return -cfg.b0 * spin_dot(cfg.n_hat)


def coupling_operators(meas_axis: str) -> tuple[np.ndarray, np.ndarray]:
    """(Q_A, Q_S) = (P_{x,-}, -pi P_{axis,+})."""
    return projector("x", -1), -np.pi * projector(meas_axis, +1)


def interaction_hamiltonian(meas_axis: str, T: float) -> np.ndarray:
    """H_I = (1/T) Q_A (x) Q_S on the 4-dim apparatus (x) system space."""
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    q_a, q_s = coupling_operators(meas_axis)
    return tensor(q_a, q_s) / T


@dataclass(frozen=True)
class UnitaryFamilyParams:
    """Parameters of the most general U_M realizing the click table.

    In the two-dimensional block mixing |up d_up> and |down d_up>, columns
    stay orthogonal only if exp(i(theta3 - theta1)) = -exp(i(phi3 - phi1))
    whenever b1*b3 != 0; ``random`` draws phi3 accordingly.
    """

    theta: float = 0.0
    phi: float = 0.0
    theta1: float = 0.0
    theta3: float = 0.0
    phi1: float = 0.0
    phi3: float = 0.0
    b1: float = 1.0
    b3: float = 0.0
    sign: int = 1

    def __post_init__(self):
        if abs(self.b1 ** 2 + self.b3 ** 2 - 1.0) > 1e-12:
            raise InvariantError("b1^2 + b3^2 must equal 1")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if abs(self.b1 * self.b3) > 1e-12:
            mismatch = np.exp(1j * (self.theta3 - self.theta1)) + np.exp(1j * (self.phi3 - self.phi1))
            if abs(mismatch) > 1e-12:
                raise InvariantError("phases violate the orthogonality constraint of the mixing block")

    @classmethod
    def random(cls, rng: np.random.Generator) -> "UnitaryFamilyParams":
        theta, phi, theta1, theta3, phi1 = rng.uniform(-np.pi, np.pi, 5)
        mix = rng.uniform(0, 2 * np.pi)
        return cls(theta, phi, theta1, theta3, phi1,
                   phi1 + theta3 - theta1 + np.pi,
                   math.cos(mix), math.sin(mix), int(rng.choice([1, -1])))


# (system, apparatus)-ordered index -> (apparatus, system)-ordered index
_SWAP = np.array([0, 2, 1, 3])


def measurement_unitary(p: UnitaryFamilyParams) -> np.ndarray:
    """U_M in the joint apparatus (x) system basis.

    Written first in the (system, apparatus) ordering
    |up d_up>, |up d_down>, |down d_up>, |down d_down>, then permuted.
    """
    e = lambda x: np.exp(1j * x)  # noqa: E731
    u = np.array([
        [0, e(p.theta), 0, 0],
        [p.b1 * e(p.theta1), 0, p.b3 * e(p.theta3), 0],
        [p.sign * p.b3 * e(p.phi1), 0, p.sign * p.b1 * e(p.phi3), 0],
        [0, 0, 0, e(p.phi)],
    ], dtype=complex)
    return u[np.ix_(_SWAP, _SWAP)]


def unitary_log(u, tol: float = 1e-12) -> np.ndarray:
    """Principal matrix logarithm of a unitary, eigenphases in (-pi, pi].

    Eigenvalues within ``tol`` of -1 take phase +pi.
    """
    from scipy.linalg import schur

    u = np.asarray(u, dtype=complex)
    if not is_unitary(u):
        raise InvariantError("matrix is not unitary")
    t, z = schur(u, output="complex")
    lam = np.diag(t)
    phases = np.angle(lam)
    phases[np.abs(lam + 1.0) <= tol] = np.pi
    return (z * (1j * phases)) @ z.conj().T


def hamiltonian_from_unitary(u) -> np.ndarray:
    """H = i ln U, so that exp(-iH) = U for a unit-area coupling pulse."""
    h = 1j * unitary_log(u)
    return 0.5 * (h + h.conj().T)


def check_click_table(u, tol: float = 1e-12) -> bool:
    """True if U|up d_down> ~ |up d_up> and U|down d_down> ~ |down d_down> (up to phase)."""
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u, tol):
        return False
    for src, dst in ((tensor(D_DOWN, UP), tensor(D_UP, UP)),
                     (tensor(D_DOWN, DOWN), tensor(D_DOWN, DOWN))):
        out = u @ src
        amp = np.vdot(dst, out)
        if np.linalg.norm(out - amp * dst) > tol or abs(abs(amp) - 1.0) > tol:
            return False
    return True
