"""
Anti-plane elasticity on a cracked mesh.

Bilinear quadrilaterals, 2x2 Gauss quadrature, Dirichlet conditions imposed by
elimination. The crack faces carry no load, which is the natural condition.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .materials import LaminateSpec
from .mesh import CrackedMesh, MeshParams, PaperStep, build_mesh

DEFAULT_TOL = 1e-10
# above this many unknowns the solver switches to preconditioned CG
DIRECT_LIMIT = 200_000

_G = 1.0 / np.sqrt(3.0)
GAUSS_POINTS = np.array([[-_G, -_G], [_G, -_G], [_G, _G], [-_G, _G]])
GAUSS_WEIGHTS = np.ones(4)


class SolverError(RuntimeError):
    pass


def _shape_derivatives(xi: float, eta: float) -> np.ndarray:
    """dN/d(xi, eta) for the 4-node bilinear element, shape (2, 4)."""
    return 0.25 * np.array([
        [-(1 - eta), (1 - eta), (1 + eta), -(1 + eta)],
        [-(1 - xi), -(1 + xi), (1 + xi), (1 - xi)],
    ])


_DN_REF = np.stack([_shape_derivatives(*q) for q in GAUSS_POINTS])  # (4 qp, 2, 4)


def element_gradients(mesh: CrackedMesh):
    """
    Physical shape-function gradients and quadrature weights.

    Returns ``B`` with shape (E, 4 qp, 2, 4) and ``wdet`` with shape (E, 4 qp)
    holding weight times Jacobian determinant.
    """
    X = mesh.nodes[mesh.elems]  # (E, 4, 2)
    J = np.einsum("qan,enb->eqab", _DN_REF, X)  # (E, q, 2, 2): dx_b/dxi_a
    det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    if np.any(det <= 0):
        raise SolverError("non-positive Jacobian in mesh")
    Jinv = np.empty_like(J)
    Jinv[..., 0, 0] = J[..., 1, 1] / det
    Jinv[..., 1, 1] = J[..., 0, 0] / det
    Jinv[..., 0, 1] = -J[..., 0, 1] / det
    Jinv[..., 1, 0] = -J[..., 1, 0] / det
    B = np.einsum("eqba,qan->eqbn", Jinv, _DN_REF)
    return B, det * GAUSS_WEIGHTS


def element_moduli(mesh: CrackedMesh, spec: Optional[LaminateSpec] = None) -> np.ndarray:
    """Per-element (mu1, mu2) from the phase map, shape (E, 2)."""
    spec = mesh.spec if spec is None else spec
    table = np.array([[spec.phase_a.mu1, spec.phase_a.mu2],
                      [spec.phase_b.mu1, spec.phase_b.mu2]])
    return table[mesh.elem_phase]


def element_matrices(mesh: CrackedMesh, moduli: np.ndarray) -> np.ndarray:
    B, wdet = element_gradients(mesh)
    CB = moduli[:, None, :, None] * B
    return np.einsum("eqbm,eqbn,eq->emn", B, CB, wdet)


def assemble(mesh: CrackedMesh, moduli: np.ndarray) -> sp.csr_matrix:
    Ke = element_matrices(mesh, moduli)
    rows = np.repeat(mesh.elems, 4, axis=1).ravel()
    cols = np.tile(mesh.elems, (1, 4)).ravel()
    n = mesh.n_nodes
    return sp.csr_matrix((Ke.ravel(), (rows, cols)), shape=(n, n))


@dataclass(frozen=True, eq=False)
class DisplacementField:
    mesh: CrackedMesh
    values: np.ndarray
    residual: float = 0.0


@dataclass(frozen=True)
class EnergySample:
    l: float
    energy: float


def solve(mesh: CrackedMesh, moduli: Optional[np.ndarray] = None, datum=None,
          tol: float = DEFAULT_TOL, method: str = "auto") -> DisplacementField:
    """
    Minimise the elastic energy with u = datum on the Dirichlet nodes.

    ``moduli`` defaults to the phase moduli of ``mesh.spec``; ``datum`` is a
    datum object (see :mod:`.mesh`) or an array of values on
    ``mesh.dirichlet_nodes``.
    """
    if not 0 < tol <= 1e-4:
        raise ValueError("tol must lie in (0, 1e-4]")
    if moduli is None:
        moduli = element_moduli(mesh)
    moduli = np.asarray(moduli, dtype=float)
    if np.any(moduli <= 0):
        raise SolverError("stiffness is not positive definite")
    datum = PaperStep() if datum is None else datum
    ud = datum if isinstance(datum, np.ndarray) else mesh.dirichlet_values(datum)

    K = assemble(mesh, moduli)
    n = mesh.n_nodes
    is_d = np.zeros(n, dtype=bool)
    is_d[mesh.dirichlet_nodes] = True
    free = np.flatnonzero(~is_d)
    u = np.zeros(n)
    u[mesh.dirichlet_nodes] = ud
    if not np.any(ud):
        return DisplacementField(mesh, u, 0.0)

    Kff = K[free][:, free].tocsc()
    rhs = -(K[free][:, mesh.dirichlet_nodes] @ ud)
    load = np.linalg.norm(rhs)
    if method == "auto":
        method = "direct" if len(free) <= DIRECT_LIMIT else "cg"
    if method == "direct":
        uf = spla.splu(Kff).solve(rhs)
    elif method == "cg":
        M = sp.diags(1.0 / Kff.diagonal())
        uf, info = spla.cg(Kff, rhs, rtol=tol, atol=0.0, M=M, maxiter=20 * len(free))
        if info != 0:
            res = np.linalg.norm(Kff @ uf - rhs) / load
            raise SolverError(f"CG did not converge: relative residual {res:.3e}")
    else:
        raise ValueError(f"unknown method {method!r}")
    res = np.linalg.norm(Kff @ uf - rhs) / load
    if res > tol:
        raise SolverError(f"relative residual {res:.3e} exceeds tolerance {tol:.1e}")
    u[free] = uf
    return DisplacementField(mesh, u, res)


def element_energy_densities(field: DisplacementField, moduli: np.ndarray):
    """
    Per-element integrals of mu1*u_x^2 and mu2*u_y^2, each of shape (E,).
    """
    mesh = field.mesh
    B, wdet = element_gradients(mesh)
    ue = field.values[mesh.elems]  # (E, 4)
    grad = np.einsum("eqbn,en->eqb", B, ue)
    ex = np.einsum("eq,eq->e", grad[..., 0] ** 2, wdet) * moduli[:, 0]
    ey = np.einsum("eq,eq->e", grad[..., 1] ** 2, wdet) * moduli[:, 1]
    return ex, ey


def condensed_energy(mesh: CrackedMesh, field: DisplacementField,
                     moduli: Optional[np.ndarray] = None) -> EnergySample:
    """Half the integral of grad u . C grad u, by element quadrature."""
    if field.mesh is not mesh and field.values.shape != (mesh.n_nodes,):
        raise ValueError("field does not belong to mesh")
    if moduli is None:
        moduli = element_moduli(mesh)
    ex, ey = element_energy_densities(DisplacementField(mesh, field.values), moduli)
    return EnergySample(mesh.crack_tip_l, 0.5 * float(np.sum(ex + ey)))


def energy_at(spec: LaminateSpec, params: MeshParams, l: float, datum=None,
              tol: float = DEFAULT_TOL) -> EnergySample:
    mesh = build_mesh(spec, params, l)
    field = solve(mesh, datum=datum, tol=tol)
    return condensed_energy(mesh, field)


def energy_curve(spec: LaminateSpec, params: MeshParams, tips: Sequence[float],
                 datum=None, tol: float = DEFAULT_TOL,
                 threads: int = 1) -> list[EnergySample]:
    """Condensed energy at each tip, ordered by tip abscissa."""
    tips = sorted(float(t) for t in tips)
    job = lambda l: energy_at(spec, params, l, datum, tol)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(job, tips))
    return [job(l) for l in tips]
