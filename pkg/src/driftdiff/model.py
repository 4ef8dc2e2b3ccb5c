"""Problem parameters, grid sizing, initial fields and the a-priori error bound.

Grid points along each axis are ``x_i = -L + i*dx`` for ``i = 0..n_x-1``; the
periodic endpoint ``+L`` is the same point as ``-L``. A multi-index
``(i_1, ..., i_d)`` maps to the flat index ``sum_j i_j * n_x**(d-j)``
(row-major, numpy C order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .errors import DegenerateInitialCondition, GridTooLarge, StabilityError, ValidationError

INT_MAX = 2 ** 63 - 1
STABILITY_RTOL = 1e-12


# --------------------------------------------------------------------------
# initial conditions


@dataclass(frozen=True)
class DeltaP0:
    """All mass at the origin ``x = 0``."""

    kind: str = field(default="delta", init=False)


@dataclass(frozen=True)
class TrigP0:
    """Finite Fourier series ``p0(x) = sum_k c_k exp(i pi k.x / L)``.

    ``modes`` is a tuple of ``(k, c)`` with ``k`` a d-tuple of integers and
    ``c`` complex. Real-valued series need conjugate pairs; use
    :meth:`cosines` to build one.
    """

    modes: Tuple[Tuple[Tuple[int, ...], complex], ...]
    kind: str = field(default="trig", init=False)

    @classmethod
    def cosines(cls, constant, terms):
        """``constant + sum amp * cos(pi k.x / L)`` from ``terms = [(k, amp), ...]``."""
        terms = list(terms)
        d = len(terms[0][0]) if terms else 1
        modes = {(0,) * d: complex(constant)}
        for k, amp in terms:
            k = tuple(int(v) for v in k)
            neg = tuple(-v for v in k)
            modes[k] = modes.get(k, 0) + amp / 2
            modes[neg] = modes.get(neg, 0) + amp / 2
        return cls(tuple((k, complex(c)) for k, c in modes.items()))

    @property
    def dim(self):
        return len(self.modes[0][0])

    def wavenumbers(self, L):
        return np.array([k for k, _ in self.modes], dtype=float) * (math.pi / L)

    def evaluate(self, coords, L, t=0.0, a=0.0, D=0.0):
        """Exact solution of the drift-diffusion equation at time ``t``.

        ``coords`` has shape (npoints, d). Each mode is damped and
        phase-shifted by ``exp(sum_j (i a kappa_j - D kappa_j^2) t)``.
        """
        kappa = self.wavenumbers(L)
        coef = np.array([c for _, c in self.modes], dtype=complex)
        growth = np.exp(((1j * a) * kappa - D * kappa ** 2).sum(axis=1) * t)
        phases = np.exp(1j * coords @ kappa.T)
        return phases @ (coef * growth)

    def smoothness_bound(self, L):
        """A valid zeta for this series (bounds all mixed derivatives up to order 4).

        Derivative orders 1..3 are compared against zeta*L^3, zeta*L^2, zeta*L
        as in the smoothness assumption; damping only shrinks the modes.
        """
        kappa = np.abs(self.wavenumbers(L)).max(axis=1)
        amps = np.abs(np.array([c for _, c in self.modes]))
        sums = [float((amps * kappa ** m).sum()) for m in range(1, 5)]
        return max(sums[3], sums[2] / L, sums[1] / L ** 2, sums[0] / L ** 3)


@dataclass(frozen=True)
class TableP0:
    """Tabulated values on the grid, flat in row-major order."""

    values: Tuple[float, ...]
    kind: str = field(default="table", init=False)


# --------------------------------------------------------------------------
# problem, grid, field


@dataclass(frozen=True)
class DDEProblem:
    """Constant-coefficient periodic drift-diffusion problem on [-L, L]^d x [0, T]."""

    a: float
    D: float
    L: float
    T: float
    d: int = 1
    zeta: float = 1.0
    p0: object = DeltaP0()

    def __post_init__(self):
        if not self.a >= 0:
            raise ValidationError(f"drift a must be >= 0, got {self.a}")
        for name in ("D", "L", "T", "zeta"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0, got {getattr(self, name)}")
        if int(self.d) != self.d or self.d < 1:
            raise ValidationError(f"d must be a positive integer, got {self.d}")
        object.__setattr__(self, "d", int(self.d))

    @property
    def K(self):
        """3a^2L^2 + 8aDL + 4D^2, the combination appearing in the grid sizing."""
        a, D, L = self.a, self.D, self.L
        return 3 * a * a * L * L + 8 * a * D * L + 4 * D * D


@dataclass(frozen=True)
class Grid:
    n_x: int
    n_t: int
    dx: float
    dt: float
    d: int = 1

    @classmethod
    def from_problem(cls, problem, n_x, n_t):
        if n_x < 1 or n_t < 0:
            raise ValidationError(f"bad grid sizes n_x={n_x}, n_t={n_t}")
        dt = problem.T / n_t if n_t > 0 else problem.T
        return cls(int(n_x), int(n_t), 2.0 * problem.L / n_x, dt, problem.d)

    @property
    def size(self):
        return self.n_x ** self.d

    @property
    def shape(self):
        return (self.n_x,) * self.d

    @property
    def L(self):
        return self.n_x * self.dx / 2.0

    def axis_points(self):
        return -self.L + self.dx * np.arange(self.n_x)

    def coords(self):
        """All grid points, shape (n_x^d, d), in flat-index order."""
        axes = np.meshgrid(*([self.axis_points()] * self.d), indexing="ij")
        return np.stack([ax.reshape(-1) for ax in axes], axis=1)

    def origin_index(self):
        """Flat index of x = 0 (multi-index (n_x/2, ..., n_x/2))."""
        return int(np.ravel_multi_index((self.n_x // 2,) * self.d, self.shape))


class Field:
    """Flat vector of grid values, read-only after construction."""

    __slots__ = ("values", "grid")

    def __init__(self, values, grid):
        arr = np.array(values, dtype=float, copy=True).reshape(-1)
        if arr.size != grid.size:
            raise ValidationError(f"field has {arr.size} entries, grid needs {grid.size}")
        arr.setflags(write=False)
        self.values = arr
        self.grid = grid

    def as_array(self):
        return self.values.reshape(self.grid.shape)

    @property
    def mass(self):
        return float(self.values.sum())

    def __repr__(self):
        return f"Field(n_x={self.grid.n_x}, d={self.grid.d}, mass={self.mass:.6g})"


@dataclass(frozen=True)
class Tolerances:
    eps_c: float = 0.1
    eps_q: float = 0.1
    delta: float = 0.05

    def __post_init__(self):
        if not 0 < self.eps_c < 1:
            raise ValidationError(f"eps_c must lie in (0, 1), got {self.eps_c}")
        if not 0 < self.eps_q < 1:
            raise ValidationError(f"eps_q must lie in (0, 1), got {self.eps_q}")
        if not 0 < self.delta < 1 / 3:
            raise ValidationError(f"delta must lie in (0, 1/3), got {self.delta}")
        if not self.eps_c + self.eps_q < 1:
            raise ValidationError("eps_c + eps_q must be < 1")


# --------------------------------------------------------------------------
# operations


def corollary_sizes(problem, eps_c):
    """Real-valued (n_t, n_x) that make the error bound equal ``eps_c``."""
    if not 0 < eps_c <= 1:
        raise ValidationError(f"eps_c must lie in (0, 1), got {eps_c}")
    p = problem
    n_t = p.T ** 2 * p.d ** 2 * p.zeta * p.K / (6.0 * eps_c)
    n_x = math.sqrt(p.T * p.d * p.zeta * p.L ** 2 * p.K / (3.0 * eps_c * p.D))
    return n_t, n_x


def size_grid(problem, eps_c):
    """Smallest stable grid whose error bound is at most ``eps_c``.

    n_x is rounded up to an even integer. n_t is the larger of the rounded
    Corollary value and the smallest count keeping dt <= dx^2/(2dD) for the
    rounded n_x, so the returned grid is always stochastic.
    """
    if not 0 < eps_c <= 1:
        raise ValidationError(f"eps_c must lie in (0, 1), got {eps_c}")
    nt_exact, nx_exact = corollary_sizes(problem, eps_c)
    if not (math.isfinite(nt_exact) and math.isfinite(nx_exact)) or max(nt_exact, nx_exact) > INT_MAX:
        raise GridTooLarge(f"grid too large: n_t~{nt_exact:.3g}, n_x~{nx_exact:.3g}")
    n_x = max(2, 2 * math.ceil(nx_exact / 2))
    dx = 2.0 * problem.L / n_x
    n_stable = 2.0 * problem.d * problem.D * problem.T / dx ** 2
    n_t = max(1, math.ceil(nt_exact), math.ceil(n_stable * (1 - STABILITY_RTOL)))
    if n_t > INT_MAX:
        raise GridTooLarge(f"grid too large: n_t={n_t}")
    return Grid.from_problem(problem, n_x, n_t)


@dataclass(frozen=True)
class StabilityReport:
    stochastic: bool
    drift_ok: bool
    dt_ratio: float  # dt / (dx^2 / (2 d D)); <= 1 when stochastic
    drift_ratio: float  # a dx / (2 D); <= 1 when drift_ok


def stability_check(grid, problem):
    limit = grid.dx ** 2 / (2 * problem.d * problem.D)
    dt_ratio = grid.dt / limit
    drift_ratio = problem.a * grid.dx / (2 * problem.D)
    return StabilityReport(
        stochastic=dt_ratio <= 1 + STABILITY_RTOL,
        drift_ok=drift_ratio <= 1 + STABILITY_RTOL,
        dt_ratio=dt_ratio,
        drift_ratio=drift_ratio,
    )


def sample_p0(problem, grid):
    """Raw (unnormalised) initial values at the grid points."""
    p0 = problem.p0
    if isinstance(p0, DeltaP0):
        vals = np.zeros(grid.size)
        vals[grid.origin_index()] = 1.0
        return vals
    if isinstance(p0, TrigP0):
        if p0.dim != problem.d:
            raise ValidationError(f"p0 modes are {p0.dim}-dimensional, problem has d={problem.d}")
        vals = p0.evaluate(grid.coords(), problem.L)
        if np.abs(vals.imag).max() > 1e-12 * max(1.0, np.abs(vals.real).max()):
            raise DegenerateInitialCondition("trigonometric p0 is not real-valued")
        return vals.real.copy()
    if isinstance(p0, TableP0):
        vals = np.asarray(p0.values, dtype=float).reshape(-1)
        if vals.size != grid.size:
            raise ValidationError(f"tabulated p0 has {vals.size} values, grid needs {grid.size}")
        return vals.copy()
    raise ValidationError(f"unknown p0 specification {p0!r}")


def init_field(problem, grid):
    """Sampled p0 divided by its sum, so the entries add up to one."""
    vals = sample_p0(problem, grid)
    # tolerate rounding noise around zero from trigonometric sampling
    scale = np.abs(vals).max() if vals.size else 0.0
    if (vals < -1e-12 * max(scale, 1.0)).any():
        raise DegenerateInitialCondition("degenerate initial condition: negative entry")
    vals = np.clip(vals, 0.0, None)
    total = vals.sum()
    if not total > 0:
        raise DegenerateInitialCondition("degenerate initial condition: p0 sums to zero")
    return Field(vals / total, grid)


def theorem1_bound(problem, grid):
    """A-priori infinity-norm error of forward-time centred-space at time T.

    ``T (d zeta / 2) (d dt (aL + D)^2 + (dx^2 / 3)(aL + D/2))``; valid only on
    stochastic grids.
    """
    if not stability_check(grid, problem).stochastic:
        raise StabilityError("error bound requires dt <= dx^2 / (2 d D)")
    p = problem
    aLD = p.a * p.L + p.D
    return p.T * (p.d * p.zeta / 2.0) * (
        p.d * grid.dt * aLD ** 2 + grid.dx ** 2 / 3.0 * (p.a * p.L + p.D / 2.0)
    )
