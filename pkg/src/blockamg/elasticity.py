"""Rigid body modes and a structured hexahedral linear elasticity generator."""

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidMaterial
from .sparse import SparseMatrix

# local node corners of the 8-node brick, counter-clockwise per z-layer
_CORNERS = np.array([
    [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
    [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
])


@dataclass
class ProblemBundle:
    A: SparseMatrix
    coords: np.ndarray
    rhs: np.ndarray
    constrained: np.ndarray

    @property
    def ndof(self):
        return self.A.nrows


def rigid_body_modes(coords):
    """Six rigid body modes for nodes at ``coords`` (n x 3), dofs interleaved.

    Columns: translations x, y, z; rotation about z (-y, x, 0); about x
    (0, -z, y); about y (z, 0, -x).
    """
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 3:
        raise ValueError(f"coordinates must be n x 3, got {coords.shape}")
    if not np.all(np.isfinite(coords)):
        raise ValueError("coordinates must be finite")
    n = len(coords)
    x, y, z = coords.T
    B = np.zeros((n, 3, 6))
    for c in range(3):
        B[:, c, c] = 1.0
    B[:, 0, 3], B[:, 1, 3] = -y, x
    B[:, 1, 4], B[:, 2, 4] = -z, y
    B[:, 0, 5], B[:, 2, 5] = z, -x
    return np.asfortranarray(B.reshape(3 * n, 6))


def elasticity_matrix(E, nu):
    """Isotropic 6x6 constitutive matrix in Voigt order xx, yy, zz, xy, yz, zx."""
    lam = E * nu / ((1 + nu) * (1 - 2 * nu))
    mu = E / (2 * (1 + nu))
    D = np.zeros((6, 6))
    D[:3, :3] = lam
    D[np.arange(3), np.arange(3)] += 2 * mu
    D[np.arange(3, 6), np.arange(3, 6)] = mu
    return D


def hex8_stiffness(hx, hy, hz, E, nu):
    """24x24 stiffness of a trilinear brick of size hx x hy x hz (2x2x2 Gauss)."""
    D = elasticity_matrix(E, nu)
    signs = 2 * _CORNERS - 1
    g = 1 / np.sqrt(3)
    jac = np.array([hx, hy, hz]) / 2
    detj = np.prod(jac)
    K = np.zeros((24, 24))
    for xi in itertools.product((-g, g), repeat=3):
        # dN_a/dxi_d for every node a, then scale to physical coordinates
        dN = np.empty((8, 3))
        for d in range(3):
            others = [e for e in range(3) if e != d]
            dN[:, d] = signs[:, d] / 8 * np.prod(1 + signs[:, others] * np.array(xi)[others], axis=1)
        dN /= jac
        Bm = np.zeros((6, 24))
        for a in range(8):
            dx, dy, dz = dN[a]
            c = 3 * a
            Bm[0, c], Bm[1, c + 1], Bm[2, c + 2] = dx, dy, dz
            Bm[3, c], Bm[3, c + 1] = dy, dx
            Bm[4, c + 1], Bm[4, c + 2] = dz, dy
            Bm[5, c], Bm[5, c + 2] = dz, dx
        K += Bm.T @ D @ Bm * detj
    return K


def generate_hex_elasticity(nx, ny, nz, E=1.0, nu=0.3, clamp_x0=True):
    """Assemble linear elasticity on the unit cube split into nx*ny*nz bricks.

    DOFs are node-interleaved (ux, uy, uz). The right-hand side is a unit
    downward body force. With ``clamp_x0`` every DOF on the x = 0 face is
    fixed by zeroing its row and column (pattern kept) and setting the
    diagonal to one.
    """
    if min(nx, ny, nz) < 1:
        raise ValueError("element counts must be positive")
    if not E > 0 or not 0 < nu < 0.5:
        raise InvalidMaterial(f"need E > 0 and 0 < nu < 0.5, got E={E}, nu={nu}")
    hx, hy, hz = 1.0 / nx, 1.0 / ny, 1.0 / nz
    px, py, pz = nx + 1, ny + 1, nz + 1
    ii, jj, kk = np.meshgrid(np.arange(px), np.arange(py), np.arange(pz), indexing="ij")
    # node numbering: x fastest, then y, then z
    ii, jj, kk = (a.transpose(2, 1, 0).ravel() for a in (ii, jj, kk))
    coords = np.column_stack([ii * hx, jj * hy, kk * hz])

    ex, ey, ez = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    ex, ey, ez = (a.transpose(2, 1, 0).ravel() for a in (ex, ey, ez))
    conn = ((ex[:, None] + _CORNERS[:, 0])
            + px * ((ey[:, None] + _CORNERS[:, 1]) + py * (ez[:, None] + _CORNERS[:, 2])))
    edofs = (3 * conn[:, :, None] + np.arange(3)).reshape(len(conn), 24)

    Ke = hex8_stiffness(hx, hy, hz, E, nu)
    rows = np.repeat(edofs, 24, axis=1).ravel()
    cols = np.tile(edofs, (1, 24)).ravel()
    vals = np.tile(Ke.ravel(), len(conn))
    ndof = 3 * len(coords)
    A = SparseMatrix.from_scipy(sp.coo_matrix((vals, (rows, cols)), shape=(ndof, ndof)))

    rhs = np.zeros(ndof)
    np.add.at(rhs, 3 * conn.ravel() + 2, -hx * hy * hz / 8)

    constrained = np.zeros(ndof, dtype=bool)
    if clamp_x0:
        constrained[(3 * np.flatnonzero(ii == 0)[:, None] + np.arange(3)).ravel()] = True
        r = A.row_indices()
        hit = constrained[r] | constrained[A.col]
        A.val[hit] = 0.0
        A.val[hit & (r == A.col)] = 1.0
        rhs[constrained] = 0.0
    return ProblemBundle(A, coords, rhs, constrained)
