"""The canonical principal U(m)-bundle over the Grassmannian.

Total space: orthonormal m-frames phi (n x m arrays with phi* phi = I),
projecting to Gr_m via phi -> phi phi*.  Frame tangents are n x m arrays xi
with xi* phi + phi* xi = 0; gauge elements are m x m unitary (group) or
anti-Hermitian (algebra) arrays.  The connection form is A = phi* d(phi);
horizontal vectors are those with image orthogonal to im(phi).
"""

from __future__ import annotations

import numpy as np

from .errors import (BaseMismatch, DimensionTooSmall, NotAFrame, NotHorizontal,
                     NotTangent)
from .grassmann import BasePoint, ChartTangent, Projector, proj_from_chart
from .linalg import (DEFAULT_TOLS, Tolerances, dag, frob, isometrize,
                     require_antihermitian, require_finite)


def frame_defect(phi: np.ndarray) -> float:
    """Deviation of phi* phi from the identity."""
    return frob(dag(phi) @ phi - np.eye(phi.shape[1]))


def require_frame(phi: np.ndarray, tol: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    phi = require_finite(phi, "frame")
    if frame_defect(phi) > tol.comparison * phi.shape[1]:
        raise NotAFrame("phi* phi deviates from the identity")
    return phi


def require_frame_tangent(phi: np.ndarray, xi: np.ndarray,
                          tol: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    xi = require_finite(xi, "frame tangent")
    if frob(dag(xi) @ phi + dag(phi) @ xi) > tol.comparison * (1.0 + frob(xi)):
        raise NotTangent("xi* phi + phi* xi != 0")
    return xi


def project_frame(phi: np.ndarray, tol: Tolerances = DEFAULT_TOLS) -> Projector:
    """Bundle projection pi(phi) = phi phi*."""
    phi = require_frame(phi, tol)
    return Projector.from_frame(phi)


def connection_A(phi: np.ndarray, xi: np.ndarray,
                 tol: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Canonical connection form evaluated on a frame tangent: phi* xi.

    Anti-Hermitian by the tangent constraint; reproduces u on fundamental
    vertical vectors phi u.
    """
    phi = require_frame(phi, tol)
    xi = require_frame_tangent(phi, xi, tol)
    return dag(phi) @ xi


def split_vertical_horizontal(phi: np.ndarray, xi: np.ndarray,
                              tol: Tolerances = DEFAULT_TOLS):
    """Split a frame tangent: vertical = phi phi* xi, horizontal = (1 - phi phi*) xi."""
    phi = require_frame(phi, tol)
    xi = require_frame_tangent(phi, xi, tol)
    vertical = phi @ (dag(phi) @ xi)
    return vertical, xi - vertical


def horizontal_lift(phi: np.ndarray, mu: ChartTangent,
                    tol: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Horizontal lift of a chart tangent at X = im(phi): the ambient form of mu . phi."""
    phi = require_frame(phi, tol)
    base = mu.base
    p_phi = phi @ dag(phi)
    if frob(p_phi - base.projector.matrix) > tol.comparison * base.n:
        raise BaseMismatch("im(phi) differs from the chart base point")
    mu_ambient = base.coframe @ np.asarray(mu.block, dtype=complex) @ dag(base.frame)
    return mu_ambient @ phi


def curvature_Omega(phi: np.ndarray, u: np.ndarray, v: np.ndarray,
                    tol: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Curvature on a pair of horizontal tangents at phi: (u* v - v* u) / 2."""
    phi = require_frame(phi, tol)
    for xi in (u, v):
        xi = require_finite(xi, "horizontal tangent")
        if frob(dag(phi) @ xi) > tol.comparison * (1.0 + frob(xi)):
            raise NotHorizontal("tangent has a vertical component")
    return (dag(u) @ v - dag(v) @ u) / 2.0


def curvature_generators(w: np.ndarray, n: int,
                         tol: Tolerances = DEFAULT_TOLS):
    """Horizontal pairs at the standard frame whose curvature values sum to w.

    For codimension n - m >= m a single pair suffices: u embeds C^m
    isometrically into the complement and v = u w.  Otherwise w is
    diagonalized, w = tau* D tau, and each eigenvalue contributes a rank-one
    pair supported on a single complement direction (this only needs
    codimension 1).  Returns a list of (u, v) pairs of n x m arrays.
    """
    w = require_antihermitian(w, tol, "gauge algebra element")
    m = w.shape[0]
    if n <= m:
        raise DimensionTooSmall(f"need ambient dimension > {m}")
    if frob(w) == 0.0:
        return []
    if n - m >= m:
        u = np.zeros((n, m), dtype=complex)
        u[m:2 * m, :] = np.eye(m)
        return [(u, u @ w)]
    # -i w is Hermitian: w = v_mat diag(i lam) v_mat*, so tau = v_mat* diagonalizes w.
    lam, v_mat = np.linalg.eigh(-1j * w)
    tau = dag(v_mat)
    pairs = []
    for i in range(m):
        a = 1j * lam[i]
        if abs(a) == 0.0:
            continue
        u = np.zeros((n, m), dtype=complex)
        u[m, :] = tau[i, :]
        pairs.append((u, a * u))
    return pairs


def local_trivialization(phi: np.ndarray, f: ChartTangent,
                         tol: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Trivialization Phi_X(phi, f): the oriented orthonormalization of (1 + f) phi.

    The result is a frame over the graph of f, i.e. it projects to
    proj_from_chart(f.base, f).
    """
    phi = require_frame(phi, tol)
    base = f.base
    if frob(phi @ dag(phi) - base.projector.matrix) > tol.comparison * base.n:
        raise BaseMismatch("im(phi) differs from the chart base point")
    f_ambient = base.coframe @ np.asarray(f.block, dtype=complex) @ dag(base.frame)
    return isometrize((np.eye(base.n) + f_ambient) @ phi, tol)


__all__ = [
    "frame_defect", "require_frame", "require_frame_tangent", "project_frame",
    "connection_A", "split_vertical_horizontal", "horizontal_lift",
    "curvature_Omega", "curvature_generators", "local_trivialization",
    "proj_from_chart", "BasePoint",
]
