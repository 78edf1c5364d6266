"""The complex Grassmannian in its projector representation.

A point of Gr_m(C^n) is a rank-m Hermitian idempotent P.  Around a base
point X = im(P) the manifold is charted by Hom(X, X_perp): a chart tangent
is an (n-m) x m block in an adapted orthonormal basis [frame | coframe],
and its graph is a nearby subspace.  This module implements the chart maps,
the two tangent representations and the isomorphism between them, the
unitary action, the coadjoint-orbit symplectic form with its Hamiltonian
fields, the Grassmannian connection form F = 2P dP - dP, and covariant
derivatives along sampled curves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotAntiHermitian, NotTangent, NotUnitary, OutsideChart, SectionNotInFiber
from .linalg import (DEFAULT_TOLS, Tolerances, commutator, dag, frob, isometrize,
                     nearest_projector, require_antihermitian, require_finite)


@dataclass(frozen=True)
class Projector:
    """A point of Gr_m(C^n): an n x n Hermitian idempotent of trace m."""

    matrix: np.ndarray
    rank: int

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def defect(self) -> float:
        """Worst violation of the projector invariants."""
        p = self.matrix
        return max(frob(p @ p - p), frob(p - dag(p)),
                   abs(float(np.trace(p).real) - self.rank),
                   abs(float(np.trace(p).imag)))

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, rank: int,
                    tol: Tolerances = DEFAULT_TOLS) -> "Projector":
        matrix = require_finite(matrix, "projector")
        proj = cls(matrix=matrix, rank=rank)
        if proj.defect() > tol.structural * (1.0 + frob(matrix)):
            raise ValueError("matrix is not a rank-m orthogonal projector")
        return proj

    @classmethod
    def from_frame(cls, phi: np.ndarray) -> "Projector":
        """Projector onto the column span of an orthonormal frame: phi phi*."""
        phi = np.asarray(phi, dtype=complex)
        p = phi @ dag(phi)
        return cls(matrix=(p + dag(p)) / 2.0, rank=phi.shape[1])

    @classmethod
    def from_hermitian(cls, m_mat: np.ndarray, rank: int,
                       tol: Tolerances = DEFAULT_TOLS) -> "Projector":
        """Spectral retraction of a Hermitian matrix onto rank-m projectors."""
        return cls(matrix=nearest_projector(m_mat, rank, tol), rank=rank)

    @classmethod
    def standard(cls, n: int, m: int) -> "Projector":
        """Projector onto the span of the first m coordinate vectors."""
        p = np.zeros((n, n), dtype=complex)
        p[:m, :m] = np.eye(m)
        return cls(matrix=p, rank=m)


@dataclass(frozen=True)
class BasePoint:
    """A projector with a cached adapted basis: frame spans im(P), coframe ker(P)."""

    projector: Projector
    frame: np.ndarray    # n x m
    coframe: np.ndarray  # n x (n-m)

    @property
    def n(self) -> int:
        return self.projector.n

    @property
    def m(self) -> int:
        return self.projector.rank

    @classmethod
    def from_projector(cls, proj: Projector,
                       tol: Tolerances = DEFAULT_TOLS) -> "BasePoint":
        """Deterministic adapted basis from the eigendecomposition of P."""
        n, m = proj.n, proj.rank
        h = (proj.matrix + dag(proj.matrix)) / 2.0
        _, v = np.linalg.eigh(h)  # ascending: kernel first, image last
        frame = isometrize(v[:, n - m:], tol)
        coframe = isometrize(v[:, :n - m], tol)
        return cls(projector=proj, frame=frame, coframe=coframe)

    @classmethod
    def from_frame(cls, phi: np.ndarray,
                   tol: Tolerances = DEFAULT_TOLS) -> "BasePoint":
        """Base point over im(phi) whose frame is phi itself."""
        proj = Projector.from_frame(phi)
        n, m = proj.n, proj.rank
        h = (proj.matrix + dag(proj.matrix)) / 2.0
        _, v = np.linalg.eigh(h)
        coframe = isometrize(v[:, :n - m], tol)
        return cls(projector=proj, frame=np.asarray(phi, dtype=complex), coframe=coframe)

    @classmethod
    def standard(cls, n: int, m: int) -> "BasePoint":
        eye = np.eye(n, dtype=complex)
        return cls(projector=Projector.standard(n, m),
                   frame=eye[:, :m], coframe=eye[:, m:])


@dataclass(frozen=True)
class ChartTangent:
    """A tangent vector at a base point, as the (n-m) x m block of Hom(X, X_perp)."""

    base: BasePoint
    block: np.ndarray

    def __post_init__(self):
        expected = (self.base.n - self.base.m, self.base.m)
        if self.block.shape != expected:
            raise ValueError(f"block shape {self.block.shape} != {expected}")


@dataclass(frozen=True)
class EmbeddedTangent:
    """A tangent vector as an ambient Hermitian trace-free matrix with PV+VP=V."""

    matrix: np.ndarray


def tangency_defect(p: Projector, v: np.ndarray) -> float:
    """Violation of the embedded-tangent constraints at P."""
    pm = p.matrix
    return max(frob(pm @ v + v @ pm - v), frob(v - dag(v)),
               abs(complex(np.trace(v))))


def _require_tangent(p: Projector, v: EmbeddedTangent,
                     tol: Tolerances) -> np.ndarray:
    mat = require_finite(v.matrix, "tangent")
    if tangency_defect(p, mat) > tol.comparison * (1.0 + frob(mat)):
        raise NotTangent("matrix violates the tangency constraints at P")
    return mat


def proj_from_chart(base: BasePoint, f: ChartTangent) -> Projector:
    """The projector onto the graph of f, assembled from the chart blocks.

    Blocks (in the adapted basis): [[(1+f*f)^-1, f*(1+ff*)^-1],
    [f(1+f*f)^-1, ff*(1+ff*)^-1]], conjugated into ambient coordinates by
    [frame | coframe].  1+f*f is always invertible, so this never fails.
    """
    blk = np.asarray(f.block, dtype=complex)
    n, m = base.n, base.m
    inv_small = np.linalg.inv(np.eye(m) + dag(blk) @ blk)          # (1+f*f)^-1
    inv_big = np.linalg.inv(np.eye(n - m) + blk @ dag(blk))        # (1+ff*)^-1
    top_left = inv_small
    top_right = dag(blk) @ inv_big
    bottom_left = blk @ inv_small
    bottom_right = blk @ dag(blk) @ inv_big
    basis = np.hstack([base.frame, base.coframe])
    blocks = np.block([[top_left, top_right], [bottom_left, bottom_right]])
    p = basis @ blocks @ dag(basis)
    return Projector(matrix=(p + dag(p)) / 2.0, rank=m)


def chart_from_proj(base: BasePoint, q: Projector,
                    tol: Tolerances = DEFAULT_TOLS) -> ChartTangent:
    """Inverse chart map: f = (coframe* Q frame)(frame* Q frame)^-1.

    Raises OutsideChart when im(Q) fails to be transverse to the base's
    orthogonal complement.
    """
    top = dag(base.frame) @ q.matrix @ base.frame      # m x m
    bottom = dag(base.coframe) @ q.matrix @ base.frame
    svals = np.linalg.svd(top, compute_uv=False)
    if svals[-1] <= tol.structural:
        raise OutsideChart("frame* Q frame is numerically singular")
    return ChartTangent(base=base, block=bottom @ np.linalg.inv(top))


def tangent_embed(v: ChartTangent) -> EmbeddedTangent:
    """Ambient Hermitian matrix with adapted-basis blocks [[0, phi*], [phi, 0]]."""
    blk = np.asarray(v.block, dtype=complex)
    mat = v.base.coframe @ blk @ dag(v.base.frame)
    return EmbeddedTangent(matrix=mat + dag(mat))


def tangent_extract(base: BasePoint, v: EmbeddedTangent,
                    tol: Tolerances = DEFAULT_TOLS) -> ChartTangent:
    """Chart block phi = coframe* V frame of an embedded tangent at the base."""
    mat = _require_tangent(base.projector, v, tol)
    return ChartTangent(base=base, block=dag(base.coframe) @ mat @ base.frame)


def transported_base(u: np.ndarray, base: BasePoint,
                     tol: Tolerances = DEFAULT_TOLS) -> BasePoint:
    """The base point at u(X) with frames carried by u (then re-oriented)."""
    u = require_finite(u, "unitary")
    if frob(dag(u) @ u - np.eye(u.shape[0])) > tol.comparison * u.shape[0]:
        raise NotUnitary("matrix is not unitary")
    p = u @ base.projector.matrix @ dag(u)
    return BasePoint(projector=Projector(matrix=(p + dag(p)) / 2.0, rank=base.m),
                     frame=isometrize(u @ base.frame, tol),
                     coframe=isometrize(u @ base.coframe, tol))


def chart_transport(u: np.ndarray, f: ChartTangent,
                    tol: Tolerances = DEFAULT_TOLS) -> ChartTangent:
    """Push a chart tangent through a unitary: the block of u f u^-1 at u(X)."""
    new_base = transported_base(u, f.base, tol)
    f_ambient = f.base.coframe @ np.asarray(f.block, dtype=complex) @ dag(f.base.frame)
    pushed = u @ f_ambient @ dag(u)
    return ChartTangent(base=new_base,
                        block=dag(new_base.coframe) @ pushed @ new_base.frame)


def lie_field_chart(u: np.ndarray, base: BasePoint,
                    tol: Tolerances = DEFAULT_TOLS) -> ChartTangent:
    """Chart block of the vector field generated by u in u(n): (1-P) u restricted to X."""
    u = require_antihermitian(u, tol, "generator")
    return ChartTangent(base=base, block=dag(base.coframe) @ u @ base.frame)


def linear_hamiltonian(u: np.ndarray, p: Projector,
                       tol: Tolerances = DEFAULT_TOLS) -> float:
    """The linear Hamiltonian -i tr(u P) attached to a generator u."""
    u = require_antihermitian(u, tol, "generator")
    value = -1j * np.trace(u @ p.matrix)
    if abs(value.imag) > tol.structural * (1.0 + abs(value.real)):
        raise NotAntiHermitian("trace -i tr(uP) is not real; u is not anti-Hermitian")
    return float(value.real)


def symplectic_form(p: Projector, phi: EmbeddedTangent, psi: EmbeddedTangent,
                    tol: Tolerances = DEFAULT_TOLS) -> float:
    """Coadjoint-orbit symplectic form: Re(i tr(P [Phi, Psi]))."""
    a = _require_tangent(p, phi, tol)
    b = _require_tangent(p, psi, tol)
    return float((1j * np.trace(p.matrix @ commutator(a, b))).real)


def ham_field(u: np.ndarray, p: Projector,
              tol: Tolerances = DEFAULT_TOLS) -> EmbeddedTangent:
    """Hamiltonian vector field of the linear Hamiltonian of u: [u, P]."""
    u = require_antihermitian(u, tol, "generator")
    return EmbeddedTangent(matrix=commutator(u, p.matrix))


def grassmann_connection_F(p: Projector, v: EmbeddedTangent,
                           tol: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Connection form F = 2P dP - dP evaluated on a tangent: (2P - 1) V."""
    mat = _require_tangent(p, v, tol)
    return (2.0 * p.matrix - np.eye(p.n)) @ mat


def grassmann_curvature_F(p: Projector, phi: EmbeddedTangent, psi: EmbeddedTangent,
                          tol: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Curvature dF = 2 dP dP evaluated on a pair of tangents: 2 [Phi, Psi]."""
    a = _require_tangent(p, phi, tol)
    b = _require_tangent(p, psi, tol)
    return 2.0 * commutator(a, b)


def _sampled_derivative(samples: np.ndarray, h: float) -> np.ndarray:
    """Second-order finite differences along axis 0 (one-sided at endpoints)."""
    d = np.empty_like(samples)
    d[1:-1] = (samples[2:] - samples[:-2]) / (2.0 * h)
    d[0] = (-3.0 * samples[0] + 4.0 * samples[1] - samples[2]) / (2.0 * h)
    d[-1] = (3.0 * samples[-1] - 4.0 * samples[-2] + samples[-3]) / (2.0 * h)
    return d


def covariant_derivative_along(projectors: np.ndarray, sections: np.ndarray,
                               h: float, mode: str = "canonical",
                               tol: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Covariant derivative of a sampled section along a sampled projector path.

    ``projectors`` has shape (N, n, n) on a uniform grid with spacing ``h``;
    ``sections`` has shape (N, n).  Mode selects the bundle:
    'canonical' projects the raw derivative by P (sections of the canonical
    bundle), 'complement' by 1-P (sections of the complement bundle), and
    'sum' splits the section by P, applies each derivative, and adds
    (Whitney-sum derivative on the trivial bundle).
    """
    projectors = require_finite(projectors, "projector path")
    sections = require_finite(sections, "section samples")
    if len(projectors) != len(sections) or len(projectors) < 3:
        raise ValueError("need matching sample counts, at least 3 nodes")
    if mode not in ("canonical", "complement", "sum"):
        raise ValueError(f"unknown mode {mode!r}")

    if mode in ("canonical", "complement"):
        for p, s in zip(projectors, sections):
            fiber = p @ s if mode == "canonical" else s - p @ s
            if np.linalg.norm(fiber - s) > tol.comparison * (1.0 + np.linalg.norm(s)):
                raise SectionNotInFiber(f"section leaves the {mode} fiber")
        ds = _sampled_derivative(sections, h)
        if mode == "canonical":
            return np.einsum("kij,kj->ki", projectors, ds)
        return ds - np.einsum("kij,kj->ki", projectors, ds)

    # Whitney sum: split by P, differentiate each part in its own bundle, add.
    s1 = np.einsum("kij,kj->ki", projectors, sections)
    s2 = sections - s1
    d1 = np.einsum("kij,kj->ki", projectors, _sampled_derivative(s1, h))
    d2 = _sampled_derivative(s2, h)
    d2 = d2 - np.einsum("kij,kj->ki", projectors, d2)
    return d1 + d2
