"""Staggered-grid (MAC) operators for Stokes flow on periodic voxel images.

Pressure lives at voxel centers, velocity components on voxel faces: the
face along axis ``a`` at grid position I sits between voxels I - e_a and
I and carries a velocity unknown only when both voxels are fluid. Faces
touching solid are eliminated, which imposes the no-slip normal velocity
exactly and keeps the Laplacian positive definite.

Wall treatment for the remaining unknowns, per stencil direction:

* same-axis neighbor face eliminated: the neighbor value is the Dirichlet
  zero one mesh width away, contributing 1 to the (scaled) diagonal;
* tangential neighbor eliminated and both voxels beside that neighbor
  face are solid: the wall runs halfway between the two face lines, and
  a linear ghost reflection (ghost value = -center value) contributes 2;
* tangential neighbor eliminated with only one solid voxel beside it:
  the neighbor face lies in the wall itself, value zero at distance one
  mesh width, contributing 1.

Scaling: the vector Laplacian carries 1/h^2 and the divergence 1/h, with
h = 1/n. This pair makes the pressure Schur complement dimensionless
with unit largest eigenvalue on connected geometries.

Velocity unknowns are numbered axis-major (all x faces, then y, then z),
row-major by face coordinate within each axis; pressure unknowns are
row-major over fluid voxels. All orderings are deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .geometry import VoxelGrid, connected_components

__all__ = [
    "DofMap",
    "StaggeredSystem",
    "assemble",
    "axis_index",
    "write_triplets",
]

_AXIS_NAMES = {"x": 0, "y": 1, "z": 2}


def axis_index(flow_dir, dim: int) -> int:
    """Normalize an axis given as 0/1/2 or 'x'/'y'/'z'."""
    if isinstance(flow_dir, str):
        try:
            flow_dir = _AXIS_NAMES[flow_dir.lower()]
        except KeyError:
            raise ValueError(f"unknown axis name {flow_dir!r}") from None
    flow_dir = int(flow_dir)
    if not 0 <= flow_dir < dim:
        raise ValueError(f"flow axis {flow_dir} out of range for dim {dim}")
    return flow_dir


@dataclass(frozen=True)
class DofMap:
    """Dense deterministic numbering of velocity faces and fluid voxels.

    ``face_ids[a]`` is grid-shaped and holds the global velocity unknown
    id of the axis-``a`` face at each position, or -1 where the face is
    eliminated. ``pressure_ids`` holds the pressure unknown id per voxel,
    -1 on solid.
    """

    face_ids: tuple
    pressure_ids: np.ndarray
    axis_counts: tuple
    axis_offsets: tuple
    m_u: int
    m_p: int

    def velocity_coords(self, axis: int) -> np.ndarray:
        """Face coordinates of axis unknowns, in unknown order, shape (count, dim)."""
        return np.argwhere(self.face_ids[axis] >= 0)

    def pressure_coords(self) -> np.ndarray:
        return np.argwhere(self.pressure_ids >= 0)


class StaggeredSystem:
    """Matrix-free discrete Stokes operators over one voxel grid.

    Use :func:`assemble` to build one. The heavy arrays are precomputed
    neighbor index tables; every apply is a few fancy-indexing gathers
    with a fixed reduction order, so repeated applies are bitwise
    reproducible.
    """

    def __init__(self, grid, dof_map, flow_dir, diag, neighbors,
                 div_in, div_out, grad_hi, grad_lo):
        self.grid = grid
        self.dof_map = dof_map
        self.flow_dir = flow_dir
        self.h = grid.physical_length / grid.n
        self.laplacian_diag = diag
        self._nb = neighbors
        self._div_in = div_in
        self._div_out = div_out
        self._grad_hi = grad_hi
        self._grad_lo = grad_lo
        self._inv_h2 = 1.0 / self.h**2
        self._inv_h = 1.0 / self.h
        force = np.zeros(dof_map.m_u)
        lo = dof_map.axis_offsets[flow_dir]
        force[lo : lo + dof_map.axis_counts[flow_dir]] = 1.0
        force.setflags(write=False)
        self.force = force

    @property
    def m_u(self) -> int:
        return self.dof_map.m_u

    @property
    def m_p(self) -> int:
        return self.dof_map.m_p

    def _check(self, vec, m, what):
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (m,):
            raise ValueError(
                f"{what} vector length mismatch: expected {m}, got {vec.shape}"
            )
        return vec

    def apply_laplacian(self, u) -> np.ndarray:
        """Negative vector Laplacian with no-slip walls, scaled by 1/h^2."""
        u = self._check(u, self.m_u, "velocity")
        padded = np.append(u, 0.0)
        return self.laplacian_diag * u - self._inv_h2 * padded[self._nb].sum(axis=1)

    def apply_divergence(self, u) -> np.ndarray:
        """Negative discrete divergence, one value per fluid voxel, scaled by 1/h."""
        u = self._check(u, self.m_u, "velocity")
        padded = np.append(u, 0.0)
        out = np.zeros(self.m_p)
        for a in range(self.grid.dim):
            out += padded[self._div_in[a]] - padded[self._div_out[a]]
        return out * self._inv_h

    def apply_gradient(self, p) -> np.ndarray:
        """Pressure gradient on velocity faces, the exact transpose of the divergence."""
        p = self._check(p, self.m_p, "pressure")
        parts = [
            (p[self._grad_hi[a]] - p[self._grad_lo[a]]) * self._inv_h
            for a in range(self.grid.dim)
        ]
        return np.concatenate(parts)

    def matrix_laplacian(self) -> sp.csr_matrix:
        """Explicit sparse Laplacian, equal to apply_laplacian on every vector."""
        m, width = self._nb.shape
        rows = np.repeat(np.arange(m), width)
        cols = self._nb.ravel()
        keep = cols < m
        mat = sp.coo_matrix(
            (
                np.concatenate(
                    [self.laplacian_diag, np.full(keep.sum(), -self._inv_h2)]
                ),
                (
                    np.concatenate([np.arange(m), rows[keep]]),
                    np.concatenate([np.arange(m), cols[keep]]),
                ),
            ),
            shape=(m, m),
        ).tocsr()
        mat.sum_duplicates()
        mat.sort_indices()
        return mat

    def matrix_divergence(self) -> sp.csr_matrix:
        """Explicit sparse divergence operator."""
        rows, cols, vals = [], [], []
        for a in range(self.grid.dim):
            for ids, sign in ((self._div_in[a], 1.0), (self._div_out[a], -1.0)):
                keep = ids < self.m_u
                rows.append(np.nonzero(keep)[0])
                cols.append(ids[keep])
                vals.append(np.full(keep.sum(), sign * self._inv_h))
        mat = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.m_p, self.m_u),
        ).tocsr()
        mat.sum_duplicates()
        mat.sort_indices()
        return mat

    def divergence_weighted_diagonal(self, face_weights) -> np.ndarray:
        """Diagonal of B W B^T for a diagonal face weighting W.

        Every divergence row holds +-1/h at the existing faces of one
        voxel, so the diagonal is the weight sum over those faces times
        1/h^2. Eliminated faces carry weight zero.
        """
        w = self._check(face_weights, self.m_u, "face weight")
        padded = np.append(w, 0.0)
        out = np.zeros(self.m_p)
        for a in range(self.grid.dim):
            out += padded[self._div_in[a]] + padded[self._div_out[a]]
        return out * self._inv_h2


def assemble(grid: VoxelGrid, flow_dir=0, *, check_connectivity: bool = True,
             require_walls: bool = True) -> StaggeredSystem:
    """Build the staggered operators for a voxel grid.

    ``check_connectivity`` and ``require_walls`` exist for degenerate
    test harnesses (all-fluid torus, deliberately split domains); the
    physical pipeline keeps both checks on.
    """
    fluid = grid.fluid
    dim = grid.dim
    flow_dir = axis_index(flow_dir, dim)
    if not fluid.any():
        raise ValueError("empty fluid domain")
    if require_walls and fluid.all():
        raise ValueError("velocity operator singular: no no-slip boundary")
    if check_connectivity:
        _, n_components = connected_components(grid)
        if n_components > 1:
            raise ValueError(
                f"fluid domain is disconnected ({n_components} components); "
                "run enforce_connectivity first"
            )

    face_masks = [fluid & np.roll(fluid, 1, axis=a) for a in range(dim)]
    axis_counts = tuple(int(mask.sum()) for mask in face_masks)
    m_u = sum(axis_counts)
    axis_offsets = tuple(sum(axis_counts[:a]) for a in range(dim))
    if require_walls and m_u == 0:
        raise ValueError("no velocity unknowns: every face touches solid")

    face_ids = []
    for a, mask in enumerate(face_masks):
        ids = np.full(fluid.shape, -1, dtype=np.int64)
        ids[mask] = axis_offsets[a] + np.arange(axis_counts[a], dtype=np.int64)
        ids.setflags(write=False)
        face_ids.append(ids)

    pressure_ids = np.full(fluid.shape, -1, dtype=np.int64)
    m_p = int(fluid.sum())
    pressure_ids[fluid] = np.arange(m_p, dtype=np.int64)
    pressure_ids.setflags(write=False)

    dof_map = DofMap(
        face_ids=tuple(face_ids),
        pressure_ids=pressure_ids,
        axis_counts=axis_counts,
        axis_offsets=axis_offsets,
        m_u=m_u,
        m_p=m_p,
    )

    inv_h2 = (grid.n / grid.physical_length) ** 2
    neighbor_cols = []
    diag_parts = []
    for a in range(dim):
        mask = face_masks[a]
        count = axis_counts[a]
        diag = np.zeros(count)
        cols = np.empty((count, 2 * dim), dtype=np.int64)
        slot = 0
        for d in range(dim):
            for s in (1, -1):
                nb = np.roll(face_ids[a], -s, axis=d)[mask]
                if d == a:
                    diag += 1.0
                else:
                    # voxels on both sides of the missing neighbor face
                    hi = np.roll(fluid, -s, axis=d)
                    lo = np.roll(np.roll(fluid, 1, axis=a), -s, axis=d)
                    both_solid = (~hi & ~lo)[mask]
                    diag += np.where((nb < 0) & both_solid, 2.0, 1.0)
                cols[:, slot] = np.where(nb < 0, m_u, nb)
                slot += 1
        neighbor_cols.append(cols)
        diag_parts.append(diag)
    neighbors = np.vstack(neighbor_cols)
    diag = np.concatenate(diag_parts) * inv_h2
    diag.setflags(write=False)

    sentinel = m_u
    div_in, div_out, grad_hi, grad_lo = [], [], [], []
    for a in range(dim):
        ids = face_ids[a]
        div_in.append(np.where(ids[fluid] < 0, sentinel, ids[fluid]))
        out_ids = np.roll(ids, -1, axis=a)[fluid]
        div_out.append(np.where(out_ids < 0, sentinel, out_ids))
        mask = face_masks[a]
        grad_hi.append(pressure_ids[mask])
        grad_lo.append(np.roll(pressure_ids, 1, axis=a)[mask])

    return StaggeredSystem(
        grid, dof_map, flow_dir, diag, neighbors,
        div_in, div_out, grad_hi, grad_lo,
    )


def write_triplets(matrix, path) -> None:
    """Write a sparse matrix as text lines ``row col value``, 0-based,
    sorted row-major, 17 significant digits."""
    csr = sp.csr_matrix(matrix)
    csr.sum_duplicates()
    csr.sort_indices()
    coo = csr.tocoo()
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for r, c, v in zip(coo.row, coo.col, coo.data):
            handle.write(f"{r} {c} {v:.17g}\n")
