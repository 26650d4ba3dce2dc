import numpy as np
import pytest
import scipy.linalg as sla
from scipy import sparse
from scipy.special import jn_zeros

from varifold_atlas.errors import ConsistencyError
from varifold_atlas.meshing import MeshParams, assemble_mesh
from varifold_atlas.relax import relax
from varifold_atlas.sheets import build_complex
from varifold_atlas.stability import (
    INDETERMINATE,
    STABLE,
    UNSTABLE,
    assemble_jacobi,
    discrete_curvature,
    gauss_bonnet_defect,
    gauss_image_area,
    rayleigh_quotient,
    smallest_eigenvalue,
    stability_verdict,
)
from varifold_atlas.varifolds import enumerate_varifolds

from _fixtures import (
    LENS,
    build_all,
    disk_mesh,
    helicoid_patch,
    laplace_pencil,
    sphere_cap_mesh,
    sphere_mesh,
)

BESSEL_LAM1 = float(jn_zeros(0, 1)[0] ** 2)  # ~5.7832


def test_flat_disk_curvature_zero():
    m = disk_mesh(0.15)
    K, areas = discrete_curvature(m)
    assert np.abs(K).max() < 1e-9
    assert areas.min() > 0


def test_sphere_gauss_bonnet_closed():
    m = sphere_mesh(0.1)
    K, areas = discrete_curvature(m)
    total = float((K * areas).sum())
    assert abs(total - 4 * np.pi) / (4 * np.pi) < 0.01
    # curvature converges to 1 under refinement (area-weighted mean; the
    # pointwise max stalls at the irregular pole vertices)
    errs = []
    for h in (0.2, 0.1):
        mm = sphere_mesh(h)
        Km, am = discrete_curvature(mm)
        errs.append(float(np.average(np.abs(Km - 1.0), weights=am)))
    assert errs[1] < 0.5 * errs[0]


def test_helicoid_negative_curvature():
    m = helicoid_patch(0.05, k=0.3)
    K, _ = discrete_curvature(m)
    interior = ~m.boundary_vertex_mask()
    assert np.all(K[interior] < 0)


def test_assembly_smoke_quadratic_form():
    m = disk_mesh(0.2)
    A, M, interior = assemble_jacobi(m)
    u = np.ones(A.shape[0])
    q = float(u @ (A @ u))
    assert np.isfinite(q)
    # flat disk: Q is the Dirichlet form, positive definite
    w = sla.eigh(A.toarray(), M.toarray(), eigvals_only=True)
    assert w[0] > 0


def test_hemisphere_laplace_lambda1_is_two():
    m = sphere_cap_mesh(0.05)
    Si, Mi = laplace_pencil(m)
    lam, _, _, _ = smallest_eigenvalue(Si, Mi, tol=1e-8)
    assert abs(lam - 2.0) / 2.0 < 0.05


def test_disk_bessel_reference():
    # dense reference on a coarse mesh: the sparse solver must agree tightly
    m = disk_mesh(0.25)
    Si, Mi = laplace_pencil(m)
    dense = sla.eigh(Si.toarray(), Mi.toarray(), eigvals_only=True)[0]
    lam, u, it, res = smallest_eigenvalue(Si, Mi, tol=1e-10)
    assert abs(lam - dense) < 1e-8 * max(1, abs(dense))
    # fine mesh: within 5% of the classical Bessel value
    m2 = disk_mesh(0.07)
    Si2, Mi2 = laplace_pencil(m2)
    lam2, *_ = smallest_eigenvalue(Si2, Mi2, tol=1e-8)
    assert abs(lam2 - BESSEL_LAM1) / BESSEL_LAM1 < 0.05


def test_sparse_vs_dense_on_jacobi_pencils():
    for mesh in (disk_mesh(0.3), helicoid_patch(0.12, k=0.3), sphere_cap_mesh(0.25)):
        A, M, _ = assemble_jacobi(mesh)
        if A.shape[0] < 3:
            continue
        dense = sla.eigh(A.toarray(), M.toarray(), eigvals_only=True)[0]
        lam, u, it, res = smallest_eigenvalue(A, M, tol=1e-9)
        assert abs(lam - dense) <= 1e-7 * max(1.0, abs(dense))
        assert res <= 1e-9


def test_rayleigh_consistency():
    m = disk_mesh(0.15)
    Si, Mi = laplace_pencil(m)
    lam, u, it, res = smallest_eigenvalue(Si, Mi, tol=1e-9)
    assert abs(rayleigh_quotient(Si, Mi, u) - lam) <= 1e-8 * abs(lam)


def test_lambda1_monotone_under_domain_restriction():
    lams = []
    for r in (1.0, 0.75):
        m = disk_mesh(0.08, r=r)
        Si, Mi = laplace_pencil(m)
        lam, *_ = smallest_eigenvalue(Si, Mi, tol=1e-8)
        lams.append(lam)
    assert lams[1] >= lams[0]


def test_cap_beyond_hemisphere_unstable():
    # Jacobi problem on a sphere patch: with the pullback convention K=-1
    # the pencil is S - 2M, so lambda1 = lambda1_Laplace - 2
    for beta, expect_positive in ((np.pi / 2 + 0.25, False), (np.pi / 2 - 0.35, True)):
        m = sphere_cap_mesh(0.08, beta_max=beta)
        K = -np.ones(m.n_vertices)
        _, areas = discrete_curvature(m)
        A, M, _ = assemble_jacobi(m, K=K, areas=areas)
        lam, *_ = smallest_eigenvalue(A, M, tol=1e-8)
        assert (lam > 0) == expect_positive


def test_gauss_image_area_values():
    m = disk_mesh(0.2)
    val, flag = gauss_image_area(m)
    assert val < 1e-9 and flag
    ms = sphere_mesh(0.1)
    val_s, flag_s = gauss_image_area(ms)
    assert abs(val_s - 4 * np.pi) / (4 * np.pi) < 0.01
    assert not flag_s


def test_flat_disk_verdict_stable():
    rep = stability_verdict(disk_mesh(0.15))
    assert rep.verdict == STABLE
    assert rep.lambda1 > 0
    assert rep.stable_sufficient


def test_lens_surfaces_stable_and_audited():
    cs, arr = build_all(LENS)
    vs = enumerate_varifolds(arr)
    t = 0.02 * cs.diameter
    for v in vs:
        c = build_complex(arr, v)
        p = MeshParams(t=t, h=0.08, rho=0.25).resolved(arr)
        bundle = assemble_mesh(c, p)
        for m in bundle.components:
            rm, rep = relax(m, tol_H=p.tol_H, max_iters=p.max_iters, step_h=p.h)
            sv = stability_verdict(rm)
            assert sv.verdict == STABLE
            assert gauss_bonnet_defect(rm) < 0.02
            if sv.stable_sufficient:
                assert sv.verdict != UNSTABLE  # mutually auditing tests agree


def test_no_interior_dofs_is_vacuously_stable():
    V = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], float)
    T = np.array([[0, 1, 2]], dtype=np.int32)
    from varifold_atlas.trimesh import TriMesh

    rep = stability_verdict(TriMesh(V, T))
    assert rep.verdict == STABLE and rep.lambda1 is None
