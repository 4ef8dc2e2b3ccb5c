"""Closed-form spectra of H, M, L and A, and the bounds built on them.

Each formula has a dense brute-force counterpart (eigendecomposition or SVD
of the assembled matrix) used in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.optimize import brentq

from . import operators
from .errors import RootFindingError, StabilityError, ValidationError
from .model import Field

STABLE_TOL = 1e-12


def _mode_tuple(j, d):
    if np.isscalar(j):
        j = (int(j),)
    j = tuple(int(v) for v in j)
    if len(j) != d:
        raise ValidationError(f"mode index {j} is not {d}-dimensional")
    return j


def mu(j, grid, problem):
    """Eigenvalue of the 1-D generator H for Fourier mode ``j``."""
    n = grid.n_x
    if not 0 <= j < n:
        raise ValidationError(f"mode index {j} outside [0, {n})")
    s = math.sin(math.pi * j / n)
    return complex(-4.0 * problem.D / grid.dx ** 2 * s * s,
                   problem.a / grid.dx * math.sin(2.0 * math.pi * j / n))


def mu_all(grid, problem):
    j = np.arange(grid.n_x)
    return (-4.0 * problem.D / grid.dx ** 2 * np.sin(np.pi * j / grid.n_x) ** 2
            + 1j * problem.a / grid.dx * np.sin(2.0 * np.pi * j / grid.n_x))


def l_eig(j, grid, problem):
    """Eigenvalue ``1 + dt * sum_m mu(j_m)`` of L for the multi-index ``j``."""
    j = _mode_tuple(j, problem.d)
    return 1.0 + grid.dt * sum(mu(jm, grid, problem) for jm in j)


def l_eig_all(grid, problem):
    """All n_x^d eigenvalues of L, flat in row-major mode order."""
    m = mu_all(grid, problem)
    total = np.zeros((grid.n_x,) * problem.d, dtype=complex)
    for axis in range(problem.d):
        shape = [1] * problem.d
        shape[axis] = grid.n_x
        total = total + m.reshape(shape)
    return (1.0 + grid.dt * total).reshape(-1)


def _power(z, tau):
    """z**tau by repeated squaring (elementwise for arrays)."""
    result = np.ones_like(z)
    base = np.array(z, copy=True)
    while tau:
        if tau & 1:
            result = result * base
        base = base * base
        tau >>= 1
    return result


def _mp_eig(j, grid, problem, dps):
    with mpmath.workdps(dps):
        n = grid.n_x
        dx = mpmath.mpf(2) * mpmath.mpf(problem.L) / n
        dt = mpmath.mpf(problem.T) / grid.n_t if grid.n_t else mpmath.mpf(grid.dt)
        total = mpmath.mpc(0)
        for jm in j:
            s = mpmath.sin(mpmath.pi * jm / n)
            total += (-4 * mpmath.mpf(problem.D) / dx ** 2 * s * s
                      + 1j * mpmath.mpf(problem.a) / dx * mpmath.sin(2 * mpmath.pi * jm / n))
        return 1 + dt * total


def l_eig_power(j, tau, delta, grid, problem):
    """``l_j ** tau`` to absolute accuracy ``delta``.

    l_j is computed to accuracy delta/tau, then raised by repeated squaring.
    Double precision covers delta/tau down to ~1e-13; below that the
    eigenvalue and its power are evaluated in extended precision.
    """
    if tau < 0 or int(tau) != tau:
        raise ValidationError(f"tau must be a nonnegative integer, got {tau}")
    if not delta > 0:
        raise ValidationError(f"delta must be positive, got {delta}")
    j = _mode_tuple(j, problem.d)
    lj = l_eig(j, grid, problem)
    if abs(lj) > 1 + STABLE_TOL:
        raise StabilityError(f"|l_{j}| = {abs(lj):.15g} > 1: stability violated")
    tau = int(tau)
    if tau == 0:
        return 1.0 + 0j
    if delta / tau >= 1e-13:
        return complex(_power(np.complex128(lj), tau))
    dps = int(math.ceil(-math.log10(delta / tau))) + 10
    with mpmath.workdps(dps):
        return complex(_mp_eig(j, grid, problem, dps) ** tau)


def l_eig_power_all(grid, problem, tau, delta=1e-12):
    """Vectorised :func:`l_eig_power` over every mode (double precision)."""
    lam = l_eig_all(grid, problem)
    if np.abs(lam).max() > 1 + STABLE_TOL:
        raise StabilityError(f"max |l_j| = {np.abs(lam).max():.15g} > 1: stability violated")
    if tau < 0:
        raise ValidationError("tau must be nonnegative")
    if tau and delta / tau < 1e-13:
        raise ValidationError(
            f"accuracy {delta} over {tau} steps is below double precision; use l_eig_power"
        )
    return _power(lam, int(tau))


# --------------------------------------------------------------------------
# singular values of the block system


def alpha_theta(l_mag, n_t):
    """Eigenvalues of A_j A_j^dagger via the roots of the secular equation.

    Returns ``[(theta, alpha), ...]`` with ``theta`` the ``n_t`` roots in
    (0, pi) of ``|l| sin(n_t theta) + sin((n_t + 1) theta) = 0`` and
    ``alpha = 1 + |l|^2 + 2|l| cos(theta)``.
    """
    if not 0 <= l_mag <= 1 + STABLE_TOL:
        raise ValidationError(f"|l| must lie in [0, 1], got {l_mag}")
    if n_t < 1:
        raise ValidationError("n_t must be >= 1")

    def g(theta):
        return l_mag * np.sin(n_t * theta) + np.sin((n_t + 1) * theta)

    samples = 50 * n_t
    thetas = np.pi * (np.arange(samples) + 0.5) / samples
    vals = g(thetas)
    roots = []
    for i in range(samples - 1):
        if vals[i] == 0.0:
            roots.append(thetas[i])
        elif vals[i] * vals[i + 1] < 0:
            roots.append(brentq(g, thetas[i], thetas[i + 1], xtol=1e-14, rtol=1e-15))
    if vals[-1] == 0.0:
        roots.append(thetas[-1])
    if len(roots) < n_t:
        raise RootFindingError(f"found {len(roots)} of {n_t} roots for |l|={l_mag}")
    roots = roots[:n_t]
    return [(th, 1.0 + l_mag ** 2 + 2.0 * l_mag * math.cos(th)) for th in roots]


def block_singular_values(problem, grid, n_t=None):
    """Singular values of A assembled mode by mode from :func:`alpha_theta`."""
    n_t = grid.n_t if n_t is None else n_t
    out = []
    cache = {}
    for lj in l_eig_all(grid, problem):
        key = round(abs(lj), 14)
        if key not in cache:
            cache[key] = [math.sqrt(max(al, 0.0)) for _, al in alpha_theta(min(abs(lj), 1.0), n_t)]
        out.extend(cache[key])
    return np.sort(np.array(out))


@dataclass(frozen=True)
class KappaEstimate:
    kappa: float
    regime: str  # "linear" when a^2 T / (2 n_t D) <= 1, else "drift"
    ratio: float  # a^2 T / (2 n_t D)
    lower: float
    upper: float
    sigma_min_lower: float
    sigma_max_upper: float


def kappa_A(grid, problem, n_t=None):
    """Condition-number estimate of A with the constants of the proof.

    Theta-claims are reported as the bracket [theta/pi, pi*theta] around the
    growth function theta (n_t, or sqrt(n_t^2 + n_t a^2 T / D)).
    """
    n_t = grid.n_t if n_t is None else n_t
    r = problem.a ** 2 * problem.T / (2.0 * n_t * problem.D)
    s_min = 2.0 / (n_t * math.pi)
    if r <= 1:
        s_max = 2.0
        kappa = 2.0 * n_t
        growth = float(n_t)
        regime = "linear"
    else:
        s_max = math.sqrt(1.0 + r + 2.0 * math.sqrt(r))
        kappa = n_t * s_max
        growth = math.sqrt(n_t ** 2 + n_t * problem.a ** 2 * problem.T / problem.D)
        regime = "drift"
    return KappaEstimate(kappa, regime, r, growth / math.pi, math.pi * growth, s_min, s_max)


def kappa_A_dense(problem, grid, n_t=None):
    """(kappa, sigma_min, sigma_max) of the dense block matrix by SVD."""
    A = operators.build_A_dense(problem, grid, n_t)
    s = np.linalg.svd(A, compute_uv=False)
    return s[0] / s[-1], s[-1], s[0]


# --------------------------------------------------------------------------
# condition number of L, return probability


@dataclass(frozen=True)
class KappaLCheck:
    claimed: float
    measured: float
    Y: float  # D dt / dx^2


def kappa_L_check(grid, problem):
    """Dense condition number of L inside the region where it is claimed to be 5.

    The claim needs D dt/dx^2 <= 1/5 and a/D < 2 sqrt(10). The underlying
    eigenvalue analysis also assumes (a dx / D)^2 <= 2 / Y; outside that the
    measured value can exceed 5.
    """
    Y = problem.D * grid.dt / grid.dx ** 2
    if Y > 0.2 * (1 + STABLE_TOL):
        raise ValidationError(f"need D dt/dx^2 <= 1/5, got {Y}")
    if not problem.a / problem.D < 2 * math.sqrt(10):
        raise ValidationError(f"need a/D < 2 sqrt(10), got {problem.a / problem.D}")
    if grid.n_x % 2:
        raise ValidationError("n_x must be even")
    s = np.linalg.svd(operators.build_L_dense(problem, grid), compute_uv=False)
    return KappaLCheck(5.0, float(s[0] / s[-1]), Y)


def kappa_L_spectral(grid, problem):
    """Condition number of L from |l_j| (L is normal, so these are its singular values)."""
    mags = np.abs(l_eig_all(grid, problem))
    return float(mags.max() / mags.min())


def return_prob_bound(tau, d):
    """Lower bound ``(4 sqrt(tau))^-d`` on the return probability after 2 tau steps."""
    if tau < 1:
        raise ValidationError("tau must be >= 1")
    return (4.0 * math.sqrt(tau)) ** (-d)


def return_prob(grid, problem, tau):
    """``<0| L^(2 tau) |0>`` by 2 tau stencil sweeps from the delta field.

    Requires dt = dx^2 / (2 d D) to relative precision 1e-12.
    """
    if tau < 1:
        raise ValidationError("tau must be >= 1")
    target = grid.dx ** 2 / (2 * problem.d * problem.D)
    if abs(grid.dt - target) > 1e-12 * target:
        raise ValidationError(f"return-probability bound needs dt = dx^2/(2dD) = {target}, got {grid.dt}")
    stencil = operators.make_stencil(problem, grid)
    start = np.zeros(grid.size)
    origin = grid.origin_index()
    start[origin] = 1.0
    final = operators.evolve_array(start, stencil, 2 * tau)
    return float(final[origin])


def delta_field(grid):
    vals = np.zeros(grid.size)
    vals[grid.origin_index()] = 1.0
    return Field(vals, grid)
