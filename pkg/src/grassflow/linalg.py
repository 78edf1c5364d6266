"""Dense complex linear algebra primitives.

Matrices are plain complex ``numpy`` arrays throughout the package.  This
module provides the few operations everything else is built on: adjoints and
commutators, the oriented QR factorization (``isometrize``), the matrix
exponential, the spectral retraction onto rank-m projectors, and seeded
random generators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import GapTooSmall, NotAntiHermitian, RankDeficient


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used across the package.

    structural: invariant checks (idempotency, isometry defect).
    ode: post-step retraction trigger during integration.
    comparison: equality threshold for comparing computed values.
    """

    structural: float = 1e-10
    ode: float = 1e-9
    comparison: float = 1e-8

    def __post_init__(self):
        if not (self.structural > 0 and self.ode > 0 and self.comparison > 0):
            raise ValueError("tolerances must be strictly positive")
        if self.structural > self.comparison:
            raise ValueError("structural tolerance must not exceed comparison tolerance")


DEFAULT_TOLS = Tolerances()


def dag(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return a.conj().T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def frob(a: np.ndarray) -> float:
    """Frobenius norm as a plain float."""
    return float(np.linalg.norm(a))


def require_finite(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def antihermitian_defect(a: np.ndarray) -> float:
    return frob(a + dag(a))


def require_antihermitian(a: np.ndarray, tol: Tolerances = DEFAULT_TOLS,
                          name: str = "matrix") -> np.ndarray:
    a = require_finite(a, name)
    if antihermitian_defect(a) > tol.comparison * (1.0 + frob(a)):
        raise NotAntiHermitian(f"{name} is not anti-Hermitian")
    return a


def isometrize(f: np.ndarray, tol: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Oriented orthonormalization of a full-column-rank matrix.

    Returns the unique Q with f = Q R, Q* Q = I and R upper triangular with
    strictly positive real diagonal.  Column spans of Q and f coincide
    prefix-by-prefix, which is the complex analogue of matching orientations.
    """
    f = require_finite(f, "frame seed")
    if f.ndim != 2 or f.shape[0] < f.shape[1]:
        raise ValueError("expected a tall (or square) n x m matrix")
    svals = np.linalg.svd(f, compute_uv=False)
    if svals[-1] <= tol.structural:
        raise RankDeficient(
            f"smallest singular value {svals[-1]:.3e} <= structural tolerance")
    q, r = np.linalg.qr(f)
    d = np.diagonal(r).copy()
    # d cannot vanish for full-rank input; rotate phases into R
    phase = d / np.abs(d)
    return q * phase[np.newaxis, :]


def polar_retract(f: np.ndarray, tol: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Closest frame to f in Frobenius norm: the unitary polar factor U V*.

    Unlike the oriented QR, this retraction commutes with the right U(m)
    action exactly, which keeps repeated-retraction schemes gauge equivariant.
    """
    f = require_finite(f, "frame seed")
    u, s, vh = np.linalg.svd(f, full_matrices=False)
    if s[-1] <= tol.structural:
        raise RankDeficient(
            f"smallest singular value {s[-1]:.3e} <= structural tolerance")
    return u @ vh


def mat_exp(a: np.ndarray) -> np.ndarray:
    """Matrix exponential e^A (scaling-and-squaring Pade, via scipy)."""
    a = require_finite(a, "exponent")
    return scipy.linalg.expm(a)


def nearest_projector(m_mat: np.ndarray, m: int,
                      tol: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Spectral retraction onto the set of rank-m orthogonal projectors.

    Returns the orthogonal projector onto the dominant m-dimensional
    invariant subspace of the Hermitian part of ``m_mat``.  Raises
    GapTooSmall when the m-th spectral gap is below the structural tolerance
    (the dominant subspace is then ill-defined).
    """
    m_mat = require_finite(m_mat, "matrix")
    n = m_mat.shape[0]
    if not (0 < m < n):
        raise ValueError("rank m must satisfy 0 < m < n")
    if frob(m_mat - dag(m_mat)) > tol.comparison * (1.0 + frob(m_mat)):
        raise ValueError("input is not Hermitian within comparison tolerance")
    h = (m_mat + dag(m_mat)) / 2.0
    w, v = np.linalg.eigh(h)  # ascending eigenvalues
    gap = w[n - m] - w[n - m - 1]
    if gap <= tol.structural:
        raise GapTooSmall(f"spectral gap {gap:.3e} <= structural tolerance")
    top = v[:, n - m:]
    p = top @ dag(top)
    return (p + dag(p)) / 2.0


def as_rng(seed) -> np.random.Generator:
    """Accept either an integer seed or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_complex(n: int, m: int, seed) -> np.ndarray:
    rng = as_rng(seed)
    return rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))


def random_antihermitian(n: int, seed) -> np.ndarray:
    """Seeded anti-Hermitian matrix A = (G - G*)/2 with Gaussian G."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    g = random_complex(n, n, seed)
    return (g - dag(g)) / 2.0


def random_unitary(n: int, seed) -> np.ndarray:
    """Seeded Haar-ish unitary via oriented QR of a Gaussian matrix."""
    return isometrize(random_complex(n, n, seed))


def random_frame(n: int, m: int, seed) -> np.ndarray:
    """Seeded orthonormal n x m frame."""
    return isometrize(random_complex(n, m, seed))
