"""Discretised operators: the circulant generator H, the Kronecker sum M,
the step operator L = I + dt*M and the block-bidiagonal system A.

Convention: fields are columns and ``p_{k+1} = L p_k`` with

    (L p)(x) = stay*p(x) + sum_j [up*p(.., x_j + dx, ..) + down*p(.., x_j - dx, ..)]

so ``H[i, i+1] = D/dx^2 + a/(2dx)`` and ``H[i, i-1] = D/dx^2 - a/(2dx)``
(periodic). Mass at ``x + dx`` flows to ``x`` with weight ``up``, i.e. drift
carries probability toward -x. L is circulant, hence doubly stochastic
whenever all three weights are nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .config import check_dense
from .errors import StabilityError, ValidationError
from .model import Field


@dataclass(frozen=True)
class Stencil:
    stay: float
    up: float
    down: float
    d: int
    n_x: int

    @property
    def size(self):
        return self.n_x ** self.d

    def transposed(self):
        """Stencil of L^T (mirror image: up and down exchanged)."""
        return Stencil(self.stay, self.down, self.up, self.d, self.n_x)

    def is_nonnegative(self):
        return min(self.stay, self.up, self.down) >= 0

    def thresholds(self):
        """Cumulative cut points [stay, stay+up, stay+up+down, ...] for sampling."""
        weights = np.array([self.up, self.down] * self.d)
        return np.concatenate(([self.stay], self.stay + np.cumsum(weights)[:-1]))


def make_stencil(problem, grid):
    dt, dx, D, a = grid.dt, grid.dx, problem.D, problem.a
    return Stencil(
        stay=1.0 - 2.0 * problem.d * D * dt / dx ** 2,
        up=dt * (D / dx ** 2 + a / (2.0 * dx)),
        down=dt * (D / dx ** 2 - a / (2.0 * dx)),
        d=problem.d,
        n_x=grid.n_x,
    )


def build_H(problem, grid):
    """Dense n_x x n_x circulant generator of the 1-D semi-discretisation."""
    n, dx, D, a = grid.n_x, grid.dx, problem.D, problem.a
    if n < 2:
        raise ValidationError(f"n_x must be at least 2, got {n}")
    H = np.zeros((n, n))
    idx = np.arange(n)
    H[idx, idx] = -2.0 * D / dx ** 2
    np.add.at(H, (idx, (idx + 1) % n), D / dx ** 2 + a / (2.0 * dx))
    np.add.at(H, (idx, (idx - 1) % n), D / dx ** 2 - a / (2.0 * dx))
    return H


def build_M_dense(problem, grid):
    """Kronecker sum ``sum_j I^(j-1) (x) H (x) I^(d-j)``."""
    check_dense(grid.size)
    H = build_H(problem, grid)
    n, d = grid.n_x, problem.d
    M = np.zeros((n ** d, n ** d))
    for j in range(d):
        M += np.kron(np.kron(np.eye(n ** j), H), np.eye(n ** (d - 1 - j)))
    return M


def build_L_dense(problem, grid):
    return np.eye(grid.size) + grid.dt * build_M_dense(problem, grid)


def _check_len(values, stencil):
    if values.shape[-1] != stencil.size:
        raise ValidationError(
            f"vector of length {values.shape[-1]} does not match stencil size {stencil.size}"
        )


def apply_L_array(values, stencil):
    """``L @ values`` for a flat float vector, matrix-free."""
    src = np.ascontiguousarray(values, dtype=np.float64)
    _check_len(src, stencil)
    out = np.empty_like(src)
    kernels.apply_stencil(src, out, stencil.n_x, stencil.d, stencil.stay, stencil.up, stencil.down)
    return out


def apply_L(field, stencil):
    """One time step of the discretised equation."""
    if field.grid.n_x != stencil.n_x or field.grid.d != stencil.d:
        raise ValidationError("field grid does not match stencil")
    return Field(apply_L_array(field.values, stencil), field.grid)


def evolve_array(values, stencil, n_steps, trajectory=False):
    """Apply L ``n_steps`` times; returns the final vector or the (n_steps, N) history."""
    src = np.ascontiguousarray(values, dtype=np.float64)
    _check_len(src, stencil)
    if trajectory:
        traj = np.empty((n_steps, stencil.size))
        kernels.evolve(src, n_steps, stencil.n_x, stencil.d, stencil.stay, stencil.up,
                       stencil.down, traj)
        return traj
    return kernels.evolve(src, n_steps, stencil.n_x, stencil.d, stencil.stay, stencil.up,
                          stencil.down)


def require_stochastic(stencil):
    if not stencil.is_nonnegative():
        raise StabilityError(
            f"negative stencil weight (stay={stencil.stay:.3g}, up={stencil.up:.3g}, "
            f"down={stencil.down:.3g}); need dt <= dx^2/(2dD) and a dx/(2D) <= 1"
        )


# --------------------------------------------------------------------------
# block system  A p = b,  A = T (x) L - dt I (x) M


@dataclass(frozen=True)
class BlockSystem:
    stencil: Stencil
    n_t: int

    @property
    def size(self):
        return self.n_t * self.stencil.size


def _rows(y, bs):
    y = np.asarray(y, dtype=np.float64)
    if y.size != bs.size:
        raise ValidationError(f"vector of length {y.size} does not match system size {bs.size}")
    return y.reshape(bs.n_t, bs.stencil.size)


def _apply_rows(rows, stencil):
    out = np.empty_like(rows)
    for k in range(rows.shape[0]):
        kernels.apply_stencil(np.ascontiguousarray(rows[k]), out[k], stencil.n_x, stencil.d,
                              stencil.stay, stencil.up, stencil.down)
    return out


def apply_A(bs, y):
    """Block-bidiagonal product: ``(Ay)_1 = y_1``, ``(Ay)_k = y_k - L y_{k-1}``."""
    Y = _rows(y, bs)
    out = Y.copy()
    if bs.n_t > 1:
        out[1:] -= _apply_rows(Y[:-1], bs.stencil)
    return out.reshape(-1)


def apply_A_adjoint(bs, z):
    """``A^T z``: ``(A^T z)_k = z_k - L^T z_{k+1}``, last block unchanged."""
    Z = _rows(z, bs)
    out = Z.copy()
    if bs.n_t > 1:
        out[:-1] -= _apply_rows(Z[1:], bs.stencil.transposed())
    return out.reshape(-1)


def build_b(field0, stencil, n_t):
    """Right-hand side ``(L p0, 0, ..., 0)``."""
    b = np.zeros(n_t * stencil.size)
    b[: stencil.size] = apply_L_array(field0.values, stencil)
    return b


def build_A_dense(problem, grid, n_t=None):
    """Dense ``T (x) L - dt I (x) M`` for verification at desk scale."""
    n_t = grid.n_t if n_t is None else n_t
    check_dense(n_t * grid.size)
    M = build_M_dense(problem, grid)
    L = np.eye(grid.size) + grid.dt * M
    T = np.eye(n_t) - np.eye(n_t, k=-1)
    return np.kron(T, L) - grid.dt * np.kron(np.eye(n_t), M)


def export_matrix_text(matrix, path):
    """Write a dense matrix as whitespace-separated rows, 17 significant digits."""
    np.savetxt(path, np.asarray(matrix), fmt="%.17g")
