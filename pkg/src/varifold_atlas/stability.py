"""Spectral stability of a relaxed surface.

The quadratic form of the second variation is Q(u) = u^T (S + 2C) u over
interior vertices (S cotangent stiffness, C curvature-weighted lumped
mass); the sign of the smallest generalized eigenvalue of the pencil
(S + 2C, M) decides stability, with the Gauss-image-area sufficient test
(< 2 pi implies stable) auditing the spectral verdict.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .discrete import (
    angle_defect_curvature,
    boundary_turning_total,
    cotangent_stiffness,
    mixed_voronoi_areas,
)
from .errors import ConsistencyError, GeometryError
from .trimesh import TriMesh

STABLE = "STABLE"
UNSTABLE = "UNSTABLE"
INDETERMINATE = "INDETERMINATE"

TWO_PI = 2.0 * np.pi


@dataclass
class StabilityReport:
    lambda1: float | None
    gauss_image_area: float
    stable_sufficient: bool
    verdict: str
    margin: float
    iterations: int
    residual: float | None

    def as_dict(self) -> dict:
        return {
            "lambda1": self.lambda1,
            "gauss_image_area": self.gauss_image_area,
            "stable_sufficient": self.stable_sufficient,
            "verdict": self.verdict,
            "margin": self.margin,
            "iterations": self.iterations,
            "residual": self.residual,
        }


def discrete_curvature(mesh: TriMesh) -> tuple[np.ndarray, np.ndarray]:
    """(K, vertex areas): angle-defect Gaussian curvature over mixed
    Voronoi areas; boundary vertices are excluded (K = 0)."""
    areas = mixed_voronoi_areas(mesh.vertices, mesh.triangles)
    if np.any(areas <= 0):
        raise GeometryError("degenerate triangle: nonpositive vertex area")
    K = angle_defect_curvature(mesh.vertices, mesh.triangles,
                               mesh.boundary_vertex_mask(), areas)
    return K, areas


def assemble_jacobi(mesh: TriMesh, K: np.ndarray | None = None,
                    areas: np.ndarray | None = None):
    """(A, M, interior index): A = (S + 2C) restricted to interior
    vertices, M the matching lumped mass block."""
    if K is None or areas is None:
        K, areas = discrete_curvature(mesh)
    S = cotangent_stiffness(mesh.vertices, mesh.triangles)
    C = sparse.diags(areas * K)
    M = sparse.diags(areas)
    A = (S + 2.0 * C).tocsr()
    interior = np.nonzero(~mesh.boundary_vertex_mask())[0]
    Ai = A[interior][:, interior].tocsc()
    Mi = M.tocsr()[interior][:, interior].tocsc()
    return Ai, Mi, interior


def smallest_eigenvalue(A: sparse.spmatrix, M: sparse.spmatrix,
                        tol: float = 1e-8, max_iters: int = 500):
    """Smallest eigenvalue of the symmetric pencil (A, M) by shifted
    inverse (Lanczos) iteration from the deterministic all-ones start
    vector.  The first shift sits below the Gershgorin lower bound of the
    pencil, so the extremal Ritz value converges to lambda_1 from above;
    restarts move the shift to just below the certified estimate, which
    keeps it on the lambda_1 side of the spectrum.

    Returns (lambda1, eigenvector, matvec count, relative residual).
    """
    from scipy.linalg import eigh_tridiagonal

    n = A.shape[0]
    if n == 0:
        return None, None, 0, None
    A = A.tocsr()
    Md = np.asarray(M.diagonal()).ravel()
    if np.any(Md <= 0):
        raise ConsistencyError("mass matrix must be positive")
    row_abs = np.asarray(np.abs(A).sum(axis=1)).ravel()
    diag = np.asarray(A.diagonal()).ravel()
    lower = float(np.min((diag - (row_abs - np.abs(diag))) / Md))
    upper = float(np.max((diag + (row_abs - np.abs(diag))) / Md))
    span = max(upper - lower, 1e-12)
    sigma = lower - 0.01 * span

    matvecs = 0
    lam = None
    best_u = None
    resid = np.inf
    for _ in range(8):
        try:
            lu = splu((A - sigma * M).tocsc())
        except RuntimeError:
            sigma -= 0.013 * span
            continue
        m = int(min(n, 60))
        Vb = np.zeros((n, m))
        alphas: list[float] = []
        betas: list[float] = []
        v = np.ones(n)
        v /= np.sqrt(v @ (Md * v))
        vprev = np.zeros(n)
        beta = 0.0
        steps = 0
        for j in range(m):
            Vb[:, j] = v
            w = lu.solve(Md * v)
            matvecs += 1
            steps = j + 1
            alpha = float(w @ (Md * v))
            alphas.append(alpha)
            w = w - alpha * v - beta * vprev
            # full reorthogonalization in the M-inner product
            w -= Vb[:, :j + 1] @ (Vb[:, :j + 1].T @ (Md * w))
            beta = float(np.sqrt(max(w @ (Md * w), 0.0)))
            if beta < 1e-13 * max(abs(alpha), 1.0) or matvecs >= max_iters:
                break
            betas.append(beta)
            vprev = v
            v = w / beta
        theta, S = eigh_tridiagonal(np.array(alphas), np.array(betas[:steps - 1]))
        k = int(np.argmax(np.abs(theta)))
        if theta[k] == 0.0:
            raise ConsistencyError("Lanczos breakdown: zero Ritz value")
        lam = sigma + 1.0 / theta[k]
        u = Vb[:, :steps] @ S[:, k]
        u /= np.sqrt(u @ (Md * u))
        Au = A @ u
        r = Au - lam * (Md * u)
        resid = float(np.linalg.norm(r)
                      / max(np.linalg.norm(Au) + abs(lam) * np.linalg.norm(Md * u), 1e-300))
        best_u = u
        if resid <= tol:
            return float(lam), best_u, matvecs, resid
        if matvecs >= max_iters:
            break
        # certified error bound |lambda_i - lam| <= ||M^(-1/2) r||
        rho = float(np.linalg.norm(r / np.sqrt(Md)))
        sigma = lam - max(2.0 * rho, 1e-10 * span)
    raise ConsistencyError(
        f"shifted inverse iteration did not reach tol={tol:.1e} "
        f"(residual {resid:.1e} after {matvecs} solves)"
    )


def rayleigh_quotient(A, M, u: np.ndarray) -> float:
    return float((u @ (A @ u)) / (u @ (M @ u)))


def gauss_image_area(mesh: TriMesh, K: np.ndarray | None = None,
                     areas: np.ndarray | None = None) -> tuple[float, bool]:
    """(integral of |K| dA in steradians, sufficient-stability flag):
    flag true iff the Gauss image area is below 2 pi."""
    if K is None or areas is None:
        K, areas = discrete_curvature(mesh)
    val = float(np.sum(np.abs(K) * areas))
    return val, val < TWO_PI


def gauss_bonnet_defect(mesh: TriMesh) -> float:
    """| sum K dA + boundary turning - 2 pi chi | / (2 pi): sanity measure
    used by verification."""
    K, areas = discrete_curvature(mesh)
    total = float(np.sum(K * areas))
    turning = boundary_turning_total(mesh.vertices, mesh.triangles,
                                     mesh.boundary_vertex_mask())
    chi = mesh.euler_characteristic()
    return abs(total + turning - TWO_PI * chi) / TWO_PI


def stability_verdict(mesh: TriMesh, margin: float | None = None,
                      tol: float = 1e-8) -> StabilityReport:
    """Combine the spectral sign test with the Barbosa-do Carmo
    sufficient test.  A sufficient-test pass with a spectrally negative
    lambda_1 is a contradiction and raises (mutually auditing tests)."""
    K, areas = discrete_curvature(mesh)
    A, M, interior = assemble_jacobi(mesh, K, areas)
    gauss, sufficient = gauss_image_area(mesh, K, areas)

    if A.shape[0] == 0:
        # no interior degrees of freedom: only the zero variation exists
        return StabilityReport(lambda1=None, gauss_image_area=gauss,
                               stable_sufficient=sufficient, verdict=STABLE,
                               margin=0.0, iterations=0, residual=None)

    lam, _, iters, resid = smallest_eigenvalue(A, M, tol=tol)
    if margin is None:
        Md = np.asarray(M.diagonal())
        row_abs = np.asarray(np.abs(A).sum(axis=1)).ravel()
        scale = float(np.max(row_abs / Md))
        margin = 10.0 * tol * max(scale, 1.0)

    if lam > margin:
        verdict = STABLE
    elif lam < -margin:
        verdict = UNSTABLE
    else:
        verdict = INDETERMINATE

    if sufficient:
        if verdict == UNSTABLE:
            raise ConsistencyError(
                f"stability tests disagree: Gauss image area {gauss:.4f} < 2 pi "
                f"but lambda1 = {lam:.4e} < -margin; discretization problem"
            )
        verdict = STABLE

    return StabilityReport(lambda1=lam, gauss_image_area=gauss,
                           stable_sufficient=sufficient, verdict=verdict,
                           margin=margin, iterations=iters, residual=resid)
