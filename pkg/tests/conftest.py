import numpy as np
import pytest
from scipy.optimize import brentq


def random_hermitian(rng, dim, scale=1.0):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (a + a.conj().T) / 2


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_qubit(rng):
    a, b = random_state(rng, 2)
    return a, b


def charpoly(h):
    """Characteristic polynomial coefficients by Faddeev-LeVerrier (highest power first)."""
    n = h.shape[0]
    coeffs = [1.0 + 0j]
    m = np.zeros_like(h)
    for k in range(1, n + 1):
        m = h @ m + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(h @ m) / k)
    return np.array(coeffs)


def polynomial_roots_bisection(h, grid=200001):
    """Real roots of det(x - h) found by sign changes and Brent refinement."""
    c = charpoly(np.asarray(h, dtype=complex)).real
    bound = np.abs(h).sum(axis=1).max() + 1.0
    xs = np.linspace(-bound, bound, grid)
    vals = np.polyval(c, xs)
    roots = []
    for x0, x1, v0, v1 in zip(xs, xs[1:], vals, vals[1:]):
        if v0 == 0.0:
            roots.append(x0)
        elif v0 * v1 < 0:
            roots.append(brentq(lambda x: np.polyval(c, x), x0, x1, xtol=1e-15))
    return np.array(roots)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
