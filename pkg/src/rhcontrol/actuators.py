"""Rectangular actuator families built from uniformly partitioned parent boxes.

Each actuator is the indicator function of a sub-rectangle. Two discrete
couplings of the scalar controls to the state equation are assembled:

* ``B_load`` -- weak-form load vectors, entry (j, i) = integral of hat
  function j over rectangle i, computed exactly by clipping each triangle
  against the rectangle. This is the variational discretization of the
  indicator forcing.
* ``B_point`` -- direct nodal injection, entry (j, i) = 1 when node j lies
  strictly inside rectangle i. Each unit of control then acts as a unit
  source at every mesh node it covers, a much stronger (mesh-dependent)
  coupling. The shipped experiment configurations use this coupling; see
  the package README for the calibration that motivates the default.

``ActuatorSet.injection`` selects which matrix the time steppers and
optimizers use.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .mesh_fem import Mesh

Box = tuple[tuple[float, float], tuple[float, float]]  # ((x_lo, x_hi), (y_lo, y_hi))


@dataclass
class ActuatorSet:
    parents: list  # list of Box
    rectangles: list  # list of Box, one per actuator
    B_load: Optional[np.ndarray] = field(default=None)   # (n_nodes, N) weak-form loads
    B_point: Optional[np.ndarray] = field(default=None)  # (n_nodes, N) nodal injection
    injection: str = "nodal"

    @property
    def n_actuators(self) -> int:
        return len(self.rectangles)

    @property
    def B_active(self) -> np.ndarray:
        """Control-to-forcing matrix selected by ``injection``."""
        if self.injection == "nodal":
            if self.B_point is None:
                raise ValueError("nodal injection matrix not assembled")
            return self.B_point
        if self.injection == "load":
            if self.B_load is None:
                raise ValueError("load matrix not assembled")
            return self.B_load
        raise ValueError(f"unknown injection kind {self.injection!r}")

    @property
    def areas(self) -> np.ndarray:
        return np.array([(xr - xl) * (yr - yl)
                         for (xl, xr), (yl, yr) in self.rectangles])

    @property
    def C_U(self) -> float:
        """N * max_i ||indicator_i||_H^2 = N * max area."""
        return self.n_actuators * float(self.areas.max())


def _boxes_overlap(a: Box, b: Box) -> bool:
    (axl, axr), (ayl, ayr) = a
    (bxl, bxr), (byl, byr) = b
    return axl < bxr and bxl < axr and ayl < byr and byl < ayr


def build_rectangular_actuators(parents: Sequence[Box],
                                subdivisions: Sequence[tuple[int, int]]) -> ActuatorSet:
    """Split each parent box into a uniform d1 x d2 grid of actuator rectangles."""
    parents = [((float(xl), float(xr)), (float(yl), float(yr)))
               for (xl, xr), (yl, yr) in parents]
    if len(parents) != len(subdivisions):
        raise ValueError("one subdivision pair required per parent box")
    for (xl, xr), (yl, yr) in parents:
        if not (0.0 <= xl < xr <= 1.0 and 0.0 <= yl < yr <= 1.0):
            raise ValueError(f"parent box (({xl},{xr}),({yl},{yr})) not inside the unit square")
    for i, p in enumerate(parents):
        for q in parents[i + 1:]:
            if _boxes_overlap(p, q):
                raise ValueError("parent boxes overlap")

    rectangles: list[Box] = []
    for ((xl, xr), (yl, yr)), (d1, d2) in zip(parents, subdivisions):
        if d1 < 1 or d2 < 1:
            raise ValueError("subdivision counts must be >= 1")
        hx = (xr - xl) / d1
        hy = (yr - yl) / d2
        for k2 in range(d2):
            for k1 in range(d1):
                rectangles.append(((xl + k1 * hx, xl + (k1 + 1) * hx),
                                   (yl + k2 * hy, yl + (k2 + 1) * hy)))
    return ActuatorSet(parents=parents, rectangles=rectangles)


def coverage_fraction(acts: ActuatorSet) -> float:
    """Total actuator area relative to |Omega| = 1."""
    return float(acts.areas.sum())


def _clip_polygon(poly: np.ndarray, box: Box) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex polygon against an axis-aligned box."""
    (xl, xr), (yl, yr) = box
    # each half-plane: inside(p) iff s * p[axis] <= s * c
    for axis, c, s in ((0, xl, -1.0), (0, xr, 1.0), (1, yl, -1.0), (1, yr, 1.0)):
        if poly.shape[0] == 0:
            return poly
        out = []
        prev = poly[-1]
        prev_in = s * prev[axis] <= s * c
        for cur in poly:
            cur_in = s * cur[axis] <= s * c
            if cur_in != prev_in:
                t = (c - prev[axis]) / (cur[axis] - prev[axis])
                out.append(prev + t * (cur - prev))
            if cur_in:
                out.append(cur)
            prev, prev_in = cur, cur_in
        poly = np.asarray(out) if out else np.empty((0, 2))
    return poly


def _integrate_linear(poly: np.ndarray, value_at) -> np.ndarray:
    """Integrate linear functions over a convex polygon by fan triangulation.

    value_at maps points (k, 2) -> (k, 3); returns the three integrals.
    """
    if poly.shape[0] < 3:
        return np.zeros(3)
    total = np.zeros(3)
    v0 = poly[0]
    for i in range(1, poly.shape[0] - 1):
        tri = np.array([v0, poly[i], poly[i + 1]])
        d1 = tri[1] - tri[0]
        d2 = tri[2] - tri[0]
        area = 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])
        total += area * value_at(tri).mean(axis=0)
    return total


def assemble_actuator_loads(mesh: Mesh, acts: ActuatorSet) -> ActuatorSet:
    """Fill B_load with entries (j, i) = int_{R_i} phi_j dx (exact)."""
    tri_nodes = mesh.nodes[mesh.triangles]  # (nt, 3, 2)
    lo = tri_nodes.min(axis=1)
    hi = tri_nodes.max(axis=1)
    areas_tri = 0.5 * np.abs(
        (tri_nodes[:, 1, 0] - tri_nodes[:, 0, 0]) * (tri_nodes[:, 2, 1] - tri_nodes[:, 0, 1])
        - (tri_nodes[:, 1, 1] - tri_nodes[:, 0, 1]) * (tri_nodes[:, 2, 0] - tri_nodes[:, 0, 0]))

    B = np.zeros((mesh.n_nodes, acts.n_actuators))
    for i, box in enumerate(acts.rectangles):
        (xl, xr), (yl, yr) = box
        # triangles with bounding boxes touching the rectangle
        cand = np.flatnonzero((lo[:, 0] < xr) & (hi[:, 0] > xl)
                              & (lo[:, 1] < yr) & (hi[:, 1] > yl))
        for k in cand:
            verts = tri_nodes[k]
            inside = ((verts[:, 0] >= xl) & (verts[:, 0] <= xr)
                      & (verts[:, 1] >= yl) & (verts[:, 1] <= yr))
            if inside.all():
                # whole triangle inside: int phi_j = area/3 for each vertex
                B[mesh.triangles[k], i] += areas_tri[k] / 3.0
                continue
            poly = _clip_polygon(verts.copy(), box)
            if poly.shape[0] < 3:
                continue
            # barycentric coordinates of points w.r.t. this triangle
            T = np.column_stack([verts[1] - verts[0], verts[2] - verts[0]])
            Tinv = np.linalg.inv(T)

            def hat_values(pts, v0=verts[0], Tinv=Tinv):
                lam = (pts - v0) @ Tinv.T
                return np.column_stack([1.0 - lam.sum(axis=1), lam[:, 0], lam[:, 1]])

            B[mesh.triangles[k], i] += _integrate_linear(poly, hat_values)
    acts.B_load = B
    assemble_nodal_injection(mesh, acts)
    return acts


def assemble_nodal_injection(mesh: Mesh, acts: ActuatorSet) -> ActuatorSet:
    """Fill B_point with entries (j, i) = 1 for nodes strictly inside R_i."""
    B = np.zeros((mesh.n_nodes, acts.n_actuators))
    for i, ((xl, xr), (yl, yr)) in enumerate(acts.rectangles):
        inside = ((mesh.nodes[:, 0] > xl) & (mesh.nodes[:, 0] < xr)
                  & (mesh.nodes[:, 1] > yl) & (mesh.nodes[:, 1] < yr))
        B[inside, i] = 1.0
    acts.B_point = B
    return acts
