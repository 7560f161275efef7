"""Cell-centred finite differences for ``-div(lambda_-(theta) grad u) = f`` on 2-D grids.

Unknowns live at the centres of active cells.  Faces between two active cells
use the harmonic mean of the cell conductivities; faces on the rectangle edge
and faces towards a masked-out cell both use a mirrored ghost value, so the
zero boundary condition sits on the face and the discrete domain is exactly
the union of active cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.ndimage as ndi
import scipy.sparse as sp

from ._validation import ConstraintError, SolverError, check_simplex
from .core import Rectangle

# face kinds
_NONE, _INTERIOR, _GHOST, _MASKED = 0, 1, 2, 3


@dataclass(frozen=True)
class Grid2D:
    nx: int
    ny: int
    h: float
    origin: tuple
    mask: np.ndarray  # (ny, nx) bool, True for active cells

    def __post_init__(self):
        if not self.h > 0:
            raise ConstraintError("grid spacing must be positive")
        mask = np.asarray(self.mask, bool)
        if mask.shape != (self.ny, self.nx):
            raise ConstraintError(f"mask shape {mask.shape} != {(self.ny, self.nx)}")
        if not mask.any():
            raise ConstraintError("grid has no active cells")
        _, n_comp = ndi.label(mask)
        if n_comp != 1:
            raise ConstraintError(f"active cells form {n_comp} components, expected 1")
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)
        index = -np.ones(mask.shape, dtype=np.int64)
        index[mask] = np.arange(int(mask.sum()))
        index.setflags(write=False)
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_domain(cls, domain, h):
        if not isinstance(domain, Rectangle):
            raise ConstraintError("grid solver needs a rectangle domain")
        (x0, x1), (y0, y1) = domain.extents
        nx, ny = int(round((x1 - x0) / h)), int(round((y1 - y0) / h))
        if abs(nx * h - (x1 - x0)) > 1e-9 * h or abs(ny * h - (y1 - y0)) > 1e-9 * h:
            raise ConstraintError(f"extents {domain.extents} are not multiples of h = {h}")
        grid = cls(nx, ny, h, (x0, y0), np.ones((ny, nx), bool))
        if domain.disk is not None:
            cx, cy, rad = domain.disk
            X, Y = grid.centers
            grid = cls(nx, ny, h, (x0, y0), (X - cx) ** 2 + (Y - cy) ** 2 < rad**2)
        return grid

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def centers(self):
        x = self.origin[0] + (np.arange(self.nx) + 0.5) * self.h
        y = self.origin[1] + (np.arange(self.ny) + 0.5) * self.h
        return np.meshgrid(x, y)

    @property
    def n_active(self):
        return int(self.mask.sum())

    @property
    def cell_measure(self):
        return self.h * self.h

    @property
    def measures(self):
        """Measures of the active cells (staircase approximation of the domain)."""
        return np.full(self.n_active, self.cell_measure)

    @property
    def measure(self):
        return self.n_active * self.cell_measure

    def active(self, field):
        """Active-cell values of a full ``(ny, nx, ...)`` field."""
        return np.asarray(field)[self.mask]

    def full(self, values, fill=0.0):
        values = np.asarray(values)
        out = np.full(self.shape + values.shape[1:], fill, dtype=float)
        out[self.mask] = values
        return out

    def radius(self, center=(0.0, 0.0)):
        X, Y = self.centers
        return np.hypot(X - center[0], Y - center[1])

    def face_kinds(self):
        """Kinds of x-faces ``(ny, nx+1)`` and y-faces ``(ny+1, nx)``."""
        m = self.mask
        pad = np.zeros((self.ny + 2, self.nx + 2), dtype=np.int8)  # 0 outside grid
        pad[1:-1, 1:-1] = np.where(m, 2, 1)  # 1 inactive in grid, 2 active
        def kinds(left, right):
            k = np.zeros(left.shape, dtype=np.int8)
            both = (left == 2) & (right == 2)
            one = (left == 2) ^ (right == 2)
            other = np.where(left == 2, right, left)
            k[both] = _INTERIOR
            k[one & (other == 0)] = _GHOST
            k[one & (other == 1)] = _MASKED
            return k
        kx = kinds(pad[1:-1, :-1][:, : self.nx + 1], pad[1:-1, 1:][:, : self.nx + 1])
        ky = kinds(pad[:-1, 1:-1][: self.ny + 1], pad[1:, 1:-1][: self.ny + 1])
        return kx, ky


@dataclass(frozen=True)
class FaceFluxField:
    """Normal fluxes on x-faces ``sx`` (ny, nx+1) and y-faces ``sy`` (ny+1, nx).

    Positive values point in the +x / +y direction.
    """

    sx: np.ndarray
    sy: np.ndarray
    h: float

    def divergence(self):
        return (np.diff(self.sx, axis=1) + np.diff(self.sy, axis=0)) / self.h

    def __sub__(self, other):
        return FaceFluxField(self.sx - other.sx, self.sy - other.sy, self.h)

    def l2(self):
        return float(np.sqrt((np.sum(self.sx**2) + np.sum(self.sy**2)) * self.h * self.h))


def cell_lambda(grid, theta, materials):
    """``lambda_-(theta)`` on the full grid (zero outside the mask)."""
    inv = 1.0 / np.array([m.lambda_min for m in materials], float)
    th = np.asarray(theta, float)
    if th.ndim == 3:
        th = grid.active(th)
    th = check_simplex(th, len(inv))
    if th.shape[0] != grid.n_active:
        raise ConstraintError(f"theta has {th.shape[0]} rows for {grid.n_active} active cells")
    return grid.full(1.0 / (th @ inv))


def face_coefficients(grid, lam):
    """Dimensionless face conductances on x- and y-faces."""
    kx, ky = grid.face_kinds()
    lam_pad = np.pad(lam, 1)

    def coeffs(kind, left, right):
        c = np.zeros(kind.shape)
        both = kind == _INTERIOR
        c[both] = 2 * left[both] * right[both] / (left[both] + right[both])
        own = np.maximum(left, right)  # the active side (the other is zero)
        edge = (kind == _GHOST) | (kind == _MASKED)
        c[edge] = 2 * own[edge]
        return c

    cx = coeffs(kx, lam_pad[1:-1, :-1], lam_pad[1:-1, 1:])
    cy = coeffs(ky, lam_pad[:-1, 1:-1], lam_pad[1:, 1:-1])
    return cx, cy


def assemble(grid, lam):
    """Sparse SPD matrix ``A`` with ``A u = h**2 f`` on active cells."""
    cx, cy = face_coefficients(grid, lam)
    idx = grid._index
    n = grid.n_active
    diag = np.zeros(n)
    rows, cols, vals = [], [], []
    # x-faces: left cell (j, i-1), right cell (j, i)
    for c, li, ri in (
        (cx, np.pad(idx, ((0, 0), (1, 0)), constant_values=-1), np.pad(idx, ((0, 0), (0, 1)), constant_values=-1)),
        (cy, np.pad(idx, ((1, 0), (0, 0)), constant_values=-1), np.pad(idx, ((0, 1), (0, 0)), constant_values=-1)),
    ):
        for side in (li, ri):
            sel = (side >= 0) & (c > 0)
            np.add.at(diag, side[sel], c[sel])
        both = (li >= 0) & (ri >= 0) & (c > 0)
        rows += [li[both], ri[both]]
        cols += [ri[both], li[both]]
        vals += [-c[both], -c[both]]
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag)
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return A


def conjugate_gradient(A, b, x0=None, rtol=1e-10, max_iter=None):
    """Jacobi-preconditioned CG; returns ``(x, residual_history)``."""
    n = b.size
    max_iter = 10 * n if max_iter is None else max_iter
    dinv = 1.0 / A.diagonal()
    x = np.zeros(n) if x0 is None else np.array(x0, float)
    r = b - A @ x
    bnorm = np.linalg.norm(b)
    history = [np.linalg.norm(r) / bnorm]
    if history[-1] <= rtol:
        return x, history
    z = dinv * r
    p = z.copy()
    rz = r @ z
    for _ in range(max_iter):
        Ap = A @ p
        step = rz / (p @ Ap)
        x += step * p
        r -= step * Ap
        history.append(np.linalg.norm(r) / bnorm)
        if history[-1] <= rtol:
            return x, history
        z = dinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(
        f"CG stopped after {max_iter} iterations at relative residual {history[-1]:.3e}", history
    )


def solve_state(grid, theta, f, materials, u0=None, rtol=1e-10, return_info=False):
    """Solve the state equation; ``f`` is a full ``(ny, nx)`` field, returns full ``u``."""
    lam = cell_lambda(grid, theta, materials)
    f = np.asarray(f, float)
    if f.shape != grid.shape:
        raise ConstraintError(f"source shape {f.shape} != grid shape {grid.shape}")
    b = grid.active(f) * grid.cell_measure
    if not np.any(b):
        u = np.zeros(grid.shape)
        return (u, [0.0]) if return_info else u
    A = assemble(grid, lam)
    x0 = None if u0 is None else grid.active(u0)
    x, hist = conjugate_gradient(A, b, x0, rtol, max_iter=50 * (grid.nx + grid.ny))
    u = grid.full(x)
    return (u, hist) if return_info else u


def face_fluxes(grid, theta, u, materials):
    """``sigma = lambda_face * grad u`` on every face (zero on faces between inactive cells)."""
    lam = cell_lambda(grid, theta, materials)
    cx, cy = face_coefficients(grid, lam)
    up = np.pad(np.where(grid.mask, u, 0.0), 1)
    sx = cx * (up[1:-1, 1:] - up[1:-1, :-1]) / grid.h
    sy = cy * (up[1:, 1:-1] - up[:-1, 1:-1]) / grid.h
    return FaceFluxField(sx, sy, grid.h)


def _face_weights(grid):
    """Share of each face's energy attributed to an adjacent active cell."""
    kx, ky = grid.face_kinds()
    wx = np.select([kx == _INTERIOR, kx == _GHOST, kx == _MASKED], [0.5, 0.5, 0.5], 0.0)
    wy = np.select([ky == _INTERIOR, ky == _GHOST, ky == _MASKED], [0.5, 0.5, 0.5], 0.0)
    return wx, wy


def psi_field(grid, flux_list, weights, mode="energy"):
    """Cell density ``psi = sum_i w_i |sigma_i|**2`` on active cells (full field).

    ``mode="energy"`` attributes each squared face flux to its adjacent cells
    with the weights that make ``sum_cells h**2 psi / lambda`` equal to the
    discrete energy exactly.  ``mode="average"`` squares the per-axis averages
    of the face values instead.
    """
    out = np.zeros(grid.shape)
    if mode == "energy":
        wx, wy = _face_weights(grid)
    for s, w in zip(flux_list, weights):
        if mode == "energy":
            ex, ey = wx * s.sx**2, wy * s.sy**2
            part = ex[:, :-1] + ex[:, 1:] + ey[:-1, :] + ey[1:, :]
        elif mode == "average":
            ax = 0.5 * (s.sx[:, :-1] + s.sx[:, 1:])
            ay = 0.5 * (s.sy[:-1, :] + s.sy[1:, :])
            part = ax**2 + ay**2
        else:
            raise ValueError(f"unknown psi mode {mode!r}")
        out += w * part
    return np.where(grid.mask, out, 0.0)


def energy(grid, u_list, f_list, weights):
    """``sum_i w_i int f_i u_i`` by the cell rule."""
    total = 0.0
    for u, f, w in zip(u_list, f_list, weights):
        total += w * float(np.sum(grid.active(np.asarray(f) * np.asarray(u)))) * grid.cell_measure
    return total


def dirichlet_energy(grid, theta, u, materials):
    """``int lambda |grad u|**2`` from face differences (equals ``u.A.u / h**2 * h**2``)."""
    s = face_fluxes(grid, theta, u, materials)
    lam = cell_lambda(grid, theta, materials)
    cx, cy = face_coefficients(grid, lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        ex = np.where(cx > 0, s.sx**2 / cx, 0.0)
        ey = np.where(cy > 0, s.sy**2 / cy, 0.0)
    return float((ex.sum() + ey.sum()) * grid.h * grid.h)


# --------------------------------------------------------------------------- field I/O


def write_field_csv(path, grid, values):
    X, Y = grid.centers
    data = np.column_stack([X.ravel(), Y.ravel(), np.asarray(values, float).ravel()])
    np.savetxt(path, data, delimiter=",", header="x,y,value", comments="", fmt="%.17g")


def read_field_csv(path, grid=None):
    """Read an ``x,y,value`` CSV; with ``grid`` given, values are placed on its cells."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if grid is None:
        xs, ys = np.unique(data[:, 0]), np.unique(data[:, 1])
        out = np.full((ys.size, xs.size), np.nan)
        out[np.searchsorted(ys, data[:, 1]), np.searchsorted(xs, data[:, 0])] = data[:, 2]
        return out
    i = np.rint((data[:, 0] - grid.origin[0]) / grid.h - 0.5).astype(int)
    j = np.rint((data[:, 1] - grid.origin[1]) / grid.h - 0.5).astype(int)
    if np.any((i < 0) | (i >= grid.nx) | (j < 0) | (j >= grid.ny)):
        raise ConstraintError(f"{path}: coordinates fall outside the grid")
    out = np.zeros(grid.shape)
    out[j, i] = data[:, 2]
    return out


_HEADER = np.dtype([("nx", "<i8"), ("ny", "<i8"), ("h", "<f8")])


def write_field_binary(path, grid, values):
    """Header ``<i8 nx, <i8 ny, <f8 h`` followed by ``ny*nx`` row-major ``<f8`` values."""
    header = np.array([(grid.nx, grid.ny, grid.h)], dtype=_HEADER)
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())


def read_field_binary(path):
    """Returns ``(values (ny, nx), h)``."""
    raw = open(path, "rb").read()
    header = np.frombuffer(raw[: _HEADER.itemsize], dtype=_HEADER)[0]
    nx, ny, h = int(header["nx"]), int(header["ny"]), float(header["h"])
    vals = np.frombuffer(raw[_HEADER.itemsize :], dtype="<f8")
    if vals.size != nx * ny:
        raise ConstraintError(f"{path}: expected {nx * ny} values, found {vals.size}")
    return vals.reshape(ny, nx).copy(), h
