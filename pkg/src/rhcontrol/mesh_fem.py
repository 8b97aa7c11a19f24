"""Uniform P1 triangulation of the unit square and finite element assembly.

All matrices are assembled over the full node set; Dirichlet conditions are
imposed by restriction to the interior degrees of freedom (see
:class:`SpatialOperators`).
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

Coefficient = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Mesh:
    """Uniform triangulation of (0,1)^2 with nx*ny lattice nodes."""

    nx: int
    ny: int
    nodes: np.ndarray          # (n, 2) coordinates
    triangles: np.ndarray      # (nt, 3) node indices, positively oriented
    boundary_mask: np.ndarray  # (n,) True on the Dirichlet boundary

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_mask)


def build_uniform_mesh(nx: int, ny: int) -> Mesh:
    """Build the lattice mesh with nx x ny nodes and 2*(nx-1)*(ny-1) triangles."""
    if nx < 2 or ny < 2:
        raise ValueError(f"need at least 2 nodes per axis, got nx={nx}, ny={ny}")
    x = np.linspace(0.0, 1.0, nx)
    y = np.linspace(0.0, 1.0, ny)
    X, Y = np.meshgrid(x, y, indexing="xy")
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    tris = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            v00 = j * nx + i
            v10 = v00 + 1
            v01 = v00 + nx
            v11 = v01 + 1
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    triangles = np.asarray(tris, dtype=np.int64)

    bx = (nodes[:, 0] == 0.0) | (nodes[:, 0] == 1.0)
    by = (nodes[:, 1] == 0.0) | (nodes[:, 1] == 1.0)
    return Mesh(nx=nx, ny=ny, nodes=nodes, triangles=triangles,
                boundary_mask=bx | by)


def triangle_geometry(mesh: Mesh):
    """Per-triangle signed areas and P1 shape-function gradients.

    Returns (areas (nt,), grads (nt, 3, 2)) with grads[k, i] the constant
    gradient of the hat function of local vertex i on triangle k.
    """
    p = mesh.nodes[mesh.triangles]          # (nt, 3, 2)
    v0, v1, v2 = p[:, 0], p[:, 1], p[:, 2]
    d1 = v1 - v0
    d2 = v2 - v0
    areas = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    # rotate opposite edges by 90 degrees: grad_i = perp(edge opposite i)/(2A)
    e0 = v2 - v1
    e1 = v0 - v2
    e2 = v1 - v0
    grads = np.empty((p.shape[0], 3, 2))
    for i, e in enumerate((e0, e1, e2)):
        grads[:, i, 0] = -e[:, 1]
        grads[:, i, 1] = e[:, 0]
    grads /= (2.0 * areas)[:, None, None]
    return areas, grads


def _accumulate(mesh: Mesh, local: np.ndarray) -> sp.csr_matrix:
    """Scatter (nt, 3, 3) element matrices into a CSR matrix."""
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_nodes
    A = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def assemble_mass(mesh: Mesh) -> sp.csr_matrix:
    """Exact P1 mass matrix: entries (phi_j, phi_i)_{L^2}."""
    areas, _ = triangle_geometry(mesh)
    base = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    local = areas[:, None, None] * base[None, :, :]
    return _accumulate(mesh, local)


def assemble_stiffness(mesh: Mesh) -> sp.csr_matrix:
    """Exact P1 stiffness matrix: entries (grad phi_j, grad phi_i)_{L^2}."""
    areas, grads = triangle_geometry(mesh)
    local = areas[:, None, None] * np.einsum("kid,kjd->kij", grads, grads)
    return _accumulate(mesh, local)


def _edge_midpoints(mesh: Mesh) -> np.ndarray:
    """Edge-midpoint quadrature nodes, shape (nt, 3, 2)."""
    p = mesh.nodes[mesh.triangles]
    return 0.5 * (p + np.roll(p, -1, axis=1))


# values of the three hat functions at the three edge midpoints
_MID_VALS = np.array([[0.5, 0.0, 0.5],
                      [0.5, 0.5, 0.0],
                      [0.0, 0.5, 0.5]])  # [vertex, midpoint]


def assemble_reaction(mesh: Mesh, a: Coefficient, t: float) -> sp.csr_matrix:
    """Matrix of int a(t,x) phi_j phi_i dx with the 3-point midpoint rule.

    The rule is exact for quadratic integrands, hence exact when a is
    piecewise linear on the mesh.
    """
    areas, _ = triangle_geometry(mesh)
    mids = _edge_midpoints(mesh)
    avals = np.asarray(a(t, mids.reshape(-1, 2))).reshape(mids.shape[0], 3)
    if not np.all(np.isfinite(avals)):
        raise ValueError("reaction coefficient is not finite at a quadrature point")
    # local[k,i,j] = (area/3) * sum_m a_m * phi_i(m) phi_j(m)
    phi = _MID_VALS  # (3 vertices, 3 midpoints)
    local = np.einsum("k,km,im,jm->kij", areas / 3.0, avals, phi, phi)
    return _accumulate(mesh, local)


def assemble_convection(mesh: Mesh, b: Coefficient, t: float) -> sp.csr_matrix:
    """Matrix of -int (b(t,x) phi_j) . grad phi_i dx (3-point midpoint rule)."""
    areas, grads = triangle_geometry(mesh)
    mids = _edge_midpoints(mesh)
    bvals = np.asarray(b(t, mids.reshape(-1, 2))).reshape(mids.shape[0], 3, 2)
    if not np.all(np.isfinite(bvals)):
        raise ValueError("convection coefficient is not finite at a quadrature point")
    phi = _MID_VALS
    # local[k,i,j] = -(area/3) * sum_m (b_m . grad_i) phi_j(m)
    bdotg = np.einsum("kmd,kid->kim", bvals, grads)
    local = -np.einsum("k,kim,jm->kij", areas / 3.0, bdotg, phi)
    return _accumulate(mesh, local)


def project_function(mesh: Mesh, f) -> np.ndarray:
    """Nodal interpolation with Dirichlet nodes set to zero."""
    vals = np.asarray(f(mesh.nodes), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("function is not finite at a mesh node")
    vals = vals.copy()
    vals[mesh.boundary_mask] = 0.0
    return vals


@dataclass
class SpatialOperators:
    """Time-independent operators plus coefficient hooks for one problem setup."""

    mesh: Mesh
    nu: float
    M: sp.csr_matrix
    K: sp.csr_matrix
    interior: np.ndarray
    a: Optional[Coefficient] = None
    b: Optional[Coefficient] = None
    _k_factor: object = field(default=None, repr=False)
    _m_in: object = field(default=None, repr=False)
    _k_in: object = field(default=None, repr=False)

    @property
    def n_int(self) -> int:
        return self.interior.size

    @property
    def M_in(self) -> sp.csr_matrix:
        if self._m_in is None:
            self._m_in = self.M[np.ix_(self.interior, self.interior)].tocsr()
        return self._m_in

    @property
    def K_in(self) -> sp.csr_matrix:
        if self._k_in is None:
            self._k_in = self.K[np.ix_(self.interior, self.interior)].tocsr()
        return self._k_in

    def restrict(self, v_full: np.ndarray) -> np.ndarray:
        return np.asarray(v_full)[..., self.interior]

    def extend(self, v_int: np.ndarray) -> np.ndarray:
        out = np.zeros(v_int.shape[:-1] + (self.mesh.n_nodes,))
        out[..., self.interior] = v_int
        return out

    def system_matrix(self, t: float) -> sp.csr_matrix:
        """A(t) = nu*K + reaction(t) + convection(t), on interior dofs."""
        A = self.nu * self.K
        if self.a is not None:
            A = A + assemble_reaction(self.mesh, self.a, t)
        if self.b is not None:
            A = A + assemble_convection(self.mesh, self.b, t)
        return A[np.ix_(self.interior, self.interior)].tocsr()

    def stiffness_solve(self, f_int: np.ndarray) -> np.ndarray:
        if self._k_factor is None:
            self._k_factor = spla.splu(self.K_in.tocsc())
        return self._k_factor.solve(f_int)


def build_spatial_operators(mesh: Mesh, nu: float,
                            a: Optional[Coefficient] = None,
                            b: Optional[Coefficient] = None) -> SpatialOperators:
    return SpatialOperators(mesh=mesh, nu=nu,
                            M=assemble_mass(mesh), K=assemble_stiffness(mesh),
                            interior=mesh.interior, a=a, b=b)


def sobolev_norms(v: np.ndarray, ops: SpatialOperators, kind: str) -> float:
    """H, V, or Vprime norm of a dof vector (full-length or interior-length)."""
    v = np.asarray(v, dtype=float)
    if v.size == ops.mesh.n_nodes:
        v = ops.restrict(v)
    elif v.size != ops.n_int:
        raise ValueError("dof vector length matches neither full nor interior set")
    if kind == "H":
        return float(np.sqrt(max(v @ (ops.M_in @ v), 0.0)))
    if kind == "V":
        return float(np.sqrt(max(v @ (ops.K_in @ v), 0.0)))
    if kind == "Vprime":
        f = ops.M_in @ v
        return float(np.sqrt(max(f @ ops.stiffness_solve(f), 0.0)))
    raise ValueError(f"unknown norm kind {kind!r}")
