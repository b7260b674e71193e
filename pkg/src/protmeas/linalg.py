"""Dense complex linear algebra on qubit Hilbert spaces.

States are 1-D complex arrays, operators are 2-D complex arrays. Joint
spaces are always ordered apparatus first, system last, so for one
apparatus qubit and one system qubit the index is ``2*apparatus_bit +
system_bit``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-12
UNITARY_TOL = 1e-10
JACOBI_TOL = 1e-12
# dimensions at or below this use the Jacobi solver under method="auto"
JACOBI_MAX_DIM = 8


class InvariantError(ValueError):
    """An operator or state violates a structural invariant."""


@dataclass(frozen=True)
class Eigensystem:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_state(psi, tol: float = NORM_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise InvariantError(f"state must be 1-D, got shape {psi.shape}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol:
        raise InvariantError(f"state is not normalized (norm={norm!r})")
    return psi


def as_hermitian(h, tol: float = HERMITIAN_TOL) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise InvariantError(f"operator must be square, got shape {h.shape}")
    scale = max(1.0, np.abs(h).max(initial=0.0))
    if np.abs(h - h.conj().T).max(initial=0.0) > tol * scale:
        raise InvariantError("operator is not Hermitian")
    return h


def is_unitary(u, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() <= tol


def as_density(rho, tol: float = 1e-10) -> np.ndarray:
    rho = as_hermitian(rho)
    if abs(np.trace(rho).real - 1.0) > tol:
        raise InvariantError("density operator must have unit trace")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise InvariantError("density operator has a negative eigenvalue")
    return rho


def tensor(*factors) -> np.ndarray:
    """Kronecker product, leftmost factor is the slowest index.

    All factors must be states (1-D) or all operators (2-D).
    """
    if not factors:
        raise TypeError("tensor() needs at least one factor")
    arrays = [np.asarray(f, dtype=complex) for f in factors]
    kinds = {a.ndim for a in arrays}
    if len(kinds) != 1 or kinds.pop() not in (1, 2):
        raise TypeError("tensor() operands must be all states or all operators")
    return reduce(np.kron, arrays)


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    # first component with non-negligible magnitude made real positive
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        idx = np.flatnonzero(np.abs(col) > 1e-8)[0]
        col *= np.conj(col[idx]) / abs(col[idx])
    return vecs


def jacobi_eigh(h: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = 50):
    """Cyclic Jacobi diagonalization of a complex Hermitian matrix.

    Each (p, q) rotation first removes the phase of ``a[p, q]`` and then
    applies the real symmetric Jacobi rotation. Returns unsorted
    ``(eigenvalues, eigenvectors)``.
    """
    a = np.array(h, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = np.linalg.norm(a)
    if n == 1 or scale == 0.0:
        return a.diagonal().real.copy(), v
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(a.diagonal()))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-300 or r < 1e-18 * scale:
                    continue
                phase = apq / r
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2.0 * r)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # J = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                j = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                cols = [p, q]
                a[:, cols] = a[:, cols] @ j
                a[cols, :] = j.conj().T @ a[cols, :]
                v[:, cols] = v[:, cols] @ j
                a[p, q] = a[q, p] = 0.0
                a[p, p], a[q, q] = app - t * r, aqq + t * r
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    return a.diagonal().real.copy(), v


def spectral(h, method: str = "auto") -> Eigensystem:
    """Eigen-decomposition of a Hermitian operator.

    Eigenvalues come back ascending; each eigenvector has its first
    significant component real and positive. Within a degenerate cluster
    only the span is meaningful.

    Args:
        h: Hermitian matrix.
        method: ``"jacobi"``, ``"lapack"`` or ``"auto"`` (Jacobi up to
            ``JACOBI_MAX_DIM``, LAPACK above).
    """
    h = as_hermitian(h)
    if method == "auto":
        method = "jacobi" if h.shape[0] <= JACOBI_MAX_DIM else "lapack"
    if method == "jacobi":
        w, v = jacobi_eigh(h)
    elif method == "lapack":
        if not np.any(h.imag):
            w, v = np.linalg.eigh(h.real)
            v = v.astype(complex)
        else:
            w, v = np.linalg.eigh(h)
    else:
        raise ValueError(f"unknown method {method!r}")
    order = np.argsort(w, kind="stable")
    return Eigensystem(w[order], _fix_phases(v[:, order].copy()))


def expm_hermitian(h, t: float = 1.0, method: str = "auto") -> np.ndarray:
    """exp(-i h t) via the spectral decomposition."""
    es = spectral(h, method)
    v = es.eigenvectors
    return (v * np.exp(-1j * es.eigenvalues * t)) @ v.conj().T


def expm_hermitian_batch(hs: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i h dt) for a stack of Hermitian matrices of shape (k, n, n)."""
    w, v = np.linalg.eigh(hs)
    return (v * np.exp(-1j * w * dt)[:, None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def evolve(h, t: float, psi) -> np.ndarray:
    """Constant-generator evolution exp(-i h t) psi."""
    h = as_hermitian(h)
    psi = as_state(psi, tol=1e-10)
    if h.shape[0] != psi.shape[0]:
        raise ValueError(f"dimension mismatch: {h.shape[0]} vs {psi.shape[0]}")
    es = spectral(h)
    v = es.eigenvectors
    return v @ (np.exp(-1j * es.eigenvalues * t) * (v.conj().T @ psi))


def partial_trace(state, keep, dims) -> np.ndarray:
    """Reduced density operator on the factors listed in ``keep``.

    Args:
        state: state vector or density matrix on the joint space.
        keep: factor index or sequence of indices (0 is the leftmost factor).
        dims: dimension of each tensor factor.
    """
    dims = [int(d) for d in dims]
    total = int(np.prod(dims))
    keep = [keep] if np.isscalar(keep) else sorted(keep)
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"keep={keep} out of range for {len(dims)} factors")
    arr = np.asarray(state, dtype=complex)
    if arr.shape[0] != total:
        raise ValueError(f"factor dims {dims} do not multiply to {arr.shape[0]}")
    n = len(dims)
    traced = [k for k in range(n) if k not in keep]
    kdim = int(np.prod([dims[k] for k in keep]))
    if arr.ndim == 1:
        psi = arr.reshape(dims)
        psi = np.moveaxis(psi, keep, list(range(len(keep)))).reshape(kdim, -1)
        return psi @ psi.conj().T
    rho = arr.reshape(dims + dims)
    # contract each traced factor's ket index with its bra index
    letters = "abcdefghijklmnopqrstuvwxyz"
    ket = list(letters[:n])
    bra = list(letters[n:2 * n].upper())
    for k in traced:
        bra[k] = ket[k]
    out = "".join(ket[k] for k in keep) + "".join(bra[k] for k in keep)
    red = np.einsum("".join(ket) + "".join(bra) + "->" + out, rho)
    return red.reshape(kdim, kdim)


def fidelity(rho, pure) -> float:
    """<pure|rho|pure>, clipped to [0, 1]."""
    rho = np.asarray(rho, dtype=complex)
    pure = np.asarray(pure, dtype=complex)
    if rho.shape != (pure.shape[0], pure.shape[0]):
        raise ValueError(f"dimension mismatch: {rho.shape} vs {pure.shape}")
    return float(np.clip(np.vdot(pure, rho @ pure).real, 0.0, 1.0))


def state_distance(a, b) -> float:
    """Phase-insensitive distance min_phi ||a - exp(i phi) b||."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    ov = np.vdot(b, a)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.linalg.norm(a - phase * b))


def von_neumann_entropy(rho) -> float:
    w = np.linalg.eigvalsh(np.asarray(rho, dtype=complex))
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log(w)))


def bloch_vector(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    return np.array([
        2.0 * rho[0, 1].real,
        -2.0 * rho[0, 1].imag,
        (rho[0, 0] - rho[1, 1]).real,
    ])
