"""Seeded random streams and the small dense numerics the tests need.

Covariance matrices here are tiny (dimension S(S-1)/2), so the symmetric
eigensolver is a plain cyclic Jacobi iteration.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .errors import DomainError, NoConvergence, NotPSD

_MASK64 = (1 << 64) - 1

TOL_PSD = 1e-8


class SeededStream:
    """Reproducible, splittable source of random numbers.

    A stream is identified by a root ``seed`` and a path of integer stream
    ids. Equal (seed, path) pairs replay the same sequence; distinct paths are
    independent (``numpy.random.SeedSequence`` spawn keys).  A stream is meant
    for a single consumer: hand each concurrent task its own ``spawn(i)``.
    """

    def __init__(self, seed: int, stream_id: int | tuple[int, ...] = ()):
        if isinstance(stream_id, int):
            stream_id = (stream_id,)
        self.seed = int(seed)
        self.path = tuple(int(i) & _MASK64 for i in stream_id)
        self._generator = None

    def spawn(self, stream_id: int) -> "SeededStream":
        return SeededStream(self.seed, self.path + (int(stream_id),))

    @property
    def generator(self) -> np.random.Generator:
        if self._generator is None:
            seq = np.random.SeedSequence(self.seed & _MASK64, spawn_key=self.path)
            self._generator = np.random.Generator(np.random.PCG64(seq))
        return self._generator

    def standard_normal(self, size) -> np.ndarray:
        return self.generator.standard_normal(size)

    def integers(self, high, size) -> np.ndarray:
        return self.generator.integers(0, high, size=size)

    def __repr__(self):
        return f"SeededStream(seed={self.seed}, stream_id={self.path})"


def as_symmetric(m, name: str = "matrix") -> np.ndarray:
    a = np.array(m, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    if not np.allclose(a, a.T, rtol=1e-12, atol=1e-14 * max(1.0, np.abs(a).max(initial=0.0))):
        raise ValueError(f"{name} is not symmetric")
    return 0.5 * (a + a.T)


def eigen_sym(m, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Returns
    -------
    eigenvalues : ndarray, shape (r,)
        Sorted in descending order.
    eigenvectors : ndarray, shape (r, r)
        Orthonormal columns; column ``i`` pairs with ``eigenvalues[i]``.
    """
    a = as_symmetric(m)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    upper = np.triu_indices(n, k=1)
    if n > 1 and scale > 0:
        for _ in range(max_sweeps):
            off = math.sqrt(2.0) * np.linalg.norm(a[upper])
            if off <= 1e-15 * scale:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    if apq == 0.0:
                        continue
                    diff = a[q, q] - a[p, p]
                    if abs(apq) <= 1e-18 * abs(diff):
                        # theta would overflow; small-angle limit
                        t = apq / diff
                    else:
                        theta = diff / (2.0 * apq)
                        t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    c = 1.0 / math.sqrt(t * t + 1.0)
                    s = t * c
                    col_p = a[:, p].copy()
                    col_q = a[:, q].copy()
                    a[:, p] = c * col_p - s * col_q
                    a[:, q] = s * col_p + c * col_q
                    row_p = a[p, :].copy()
                    row_q = a[q, :].copy()
                    a[p, :] = c * row_p - s * row_q
                    a[q, :] = s * row_p + c * row_q
                    a[p, q] = a[q, p] = 0.0
                    vp = v[:, p].copy()
                    vq = v[:, q].copy()
                    v[:, p] = c * vp - s * vq
                    v[:, q] = s * vp + c * vq
        else:
            raise NoConvergence(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    vals = np.diag(a).copy()
    order = np.argsort(-vals, kind="stable")
    return vals[order], v[:, order]


def psd_factor(cov, tol_psd: float = TOL_PSD) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of ``cov`` with small negative eigenvalues clamped to zero.

    Raises :class:`NotPSD` if an eigenvalue falls below
    ``-tol_psd * max(1, largest eigenvalue)``.
    """
    vals, vecs = eigen_sym(cov)
    top = vals[0] if vals.size else 0.0
    limit = tol_psd * max(1.0, top)
    if vals.size and vals[-1] < -limit:
        raise NotPSD(f"eigenvalue {vals[-1]:.3e} below -{limit:.3e}")
    return np.where(vals < 0.0, 0.0, vals), vecs


def sample_mvn_zero_mean(cov, n: int, rng: SeededStream, tol_psd: float = TOL_PSD) -> np.ndarray:
    """Draw ``n`` vectors from N(0, cov), returned as rows of an (n, r) array.

    Uses the spectral square root, so singular and nearly singular
    covariances are fine.
    """
    vals, vecs = psd_factor(cov, tol_psd)
    root = vecs * np.sqrt(vals)
    z = rng.standard_normal((int(n), len(vals)))
    return z @ root.T


def chi2_sf(x: float, df: float) -> float:
    """P(X >= x) for X ~ chi-squared with ``df`` degrees of freedom."""
    if df < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {df}")
    if not x >= 0:
        raise DomainError(f"x must be non-negative, got {x}")
    if x == 0:
        return 1.0
    return float(special.gammaincc(0.5 * df, 0.5 * x))


def chi2_isf(p: float, df: float) -> float:
    """Upper-tail quantile: the x with ``chi2_sf(x, df) == p``."""
    if df < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {df}")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if p >= 1.0:
        return 0.0
    return float(2.0 * special.gammainccinv(0.5 * df, p))
