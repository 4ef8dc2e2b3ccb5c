"""Classical solvers for the discretised drift-diffusion equation.

Time stepping, conjugate gradient on the block system, random-walk sampling
and spectral (FFT) diagonalisation, plus the exact continuous solution for
trigonometric initial data used as a validation oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import fft, kernels, operators, spectral
from .errors import ConvergenceError, DegenerateInitialCondition, StabilityError, ValidationError
from .model import Field, TrigP0, stability_check

WALK_CHUNK = 65536


@dataclass(frozen=True)
class Trajectory:
    """Fields p_1 .. p_{n_t}, stored as an (n_t, n_x^d) array."""

    values: np.ndarray
    grid: object

    @property
    def n_t(self):
        return self.values.shape[0]

    @property
    def fields(self):
        return [Field(row, self.grid) for row in self.values]

    @property
    def final(self):
        return Field(self.values[-1], self.grid)


def _stencil_for(field0, problem):
    grid = field0.grid
    if grid.d != problem.d:
        raise ValidationError(f"field is {grid.d}-dimensional, problem has d={problem.d}")
    if not stability_check(grid, problem).stochastic:
        raise StabilityError(
            f"dt={grid.dt:.6g} exceeds dx^2/(2dD)={grid.dx ** 2 / (2 * problem.d * problem.D):.6g}"
        )
    stencil = operators.make_stencil(problem, grid)
    operators.require_stochastic(stencil)
    return stencil


def solve_timestep(field0, problem, n_t=None):
    """Repeated application of L: ``fields[k] = L^(k+1) p0``."""
    n_t = field0.grid.n_t if n_t is None else int(n_t)
    if n_t < 1:
        raise ValidationError("n_t must be >= 1 for a trajectory")
    stencil = _stencil_for(field0, problem)
    traj = operators.evolve_array(field0.values, stencil, n_t, trajectory=True)
    return Trajectory(traj, field0.grid)


# --------------------------------------------------------------------------
# conjugate gradient on the normal equations


@dataclass(frozen=True)
class CGInfo:
    iterations: int
    residual: float  # ||b - A y||_2
    target: float
    max_iter: int


def cg_max_iter(kappa_est, tol_rel):
    """Iteration cap: 10 kappa, widened by the log(2/tol) factor of the CG error bound."""
    return int(math.ceil(10 * kappa_est * max(1.0, 0.5 * math.log(2.0 / tol_rel) / 5.0)))


def cgnr(bs, b, tol_abs, max_iter):
    """CG on ``A^T A y = A^T b`` (Hestenes-Stiefel CGNR), tracking ``r = b - A y``."""
    y = np.zeros_like(b)
    r = b.copy()
    z = operators.apply_A_adjoint(bs, r)
    p = z.copy()
    zz = float(z @ z)
    rnorm = float(np.linalg.norm(r))
    it = 0
    while rnorm > tol_abs:
        if it >= max_iter:
            raise ConvergenceError(
                f"max iterations exceeded: {max_iter} iterations, residual {rnorm:.3e} > {tol_abs:.3e}"
            )
        w = operators.apply_A(bs, p)
        alpha = zz / float(w @ w)
        y += alpha * p
        r -= alpha * w
        z = operators.apply_A_adjoint(bs, r)
        zz_new = float(z @ z)
        p = z + (zz_new / zz) * p
        zz = zz_new
        rnorm = float(np.linalg.norm(r))
        it += 1
    return y, it, rnorm


def solve_cg(field0, problem, eps_c=1e-6, n_t=None, max_iter=None, return_info=False):
    """Solve the block system ``A p = b`` for the whole trajectory at once.

    Stops when ``||b - A p||_2 <= eps_c / (10 n_t) * ||b||_2``.
    """
    n_t = field0.grid.n_t if n_t is None else int(n_t)
    if n_t < 1:
        raise ValidationError("n_t must be >= 1")
    if not eps_c > 0:
        raise ValidationError("eps_c must be positive")
    stencil = _stencil_for(field0, problem)
    bs = operators.BlockSystem(stencil, n_t)
    b = operators.build_b(field0, stencil, n_t)
    bnorm = float(np.linalg.norm(b))
    tol_rel = eps_c / (10.0 * n_t)
    if max_iter is None:
        max_iter = cg_max_iter(spectral.kappa_A(field0.grid, problem, n_t).kappa, tol_rel)
    if bnorm == 0.0:
        y, it, res = np.zeros_like(b), 0, 0.0
    else:
        y, it, res = cgnr(bs, b, tol_rel * bnorm, max_iter)
    traj = Trajectory(y.reshape(n_t, stencil.size), field0.grid)
    if return_info:
        return traj, CGInfo(it, res, tol_rel * bnorm, max_iter)
    return traj


# --------------------------------------------------------------------------
# random walk


@dataclass(frozen=True)
class WalkSample:
    position: Tuple[int, ...]
    seed: Optional[int]


def make_rng(seed):
    """``(Generator, seed record)`` from an int, a SeedSequence or a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed, None
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed), seed.entropy
    return np.random.default_rng(seed), seed


def walk_step(position, stencil, rng):
    """One move of the lazy walk whose transition matrix is L."""
    operators.require_stochastic(stencil)
    n, d = stencil.n_x, stencil.d
    position = tuple(int(v) for v in position)
    if len(position) != d or not all(0 <= v < n for v in position):
        raise ValidationError(f"position {position} outside the {d}-dimensional grid of size {n}")
    rng, _ = make_rng(rng)
    flat = np.array([np.ravel_multi_index(position, (n,) * d)], dtype=np.int64)
    u = rng.random((1, 1))
    out = kernels.walk(flat, u, stencil.thresholds(), n, d)
    return tuple(int(v) for v in np.unravel_index(int(out[0]), (n,) * d))


def sample_walk(field0, problem, n_t, n_samples, seed=0, backend=None, n_workers=1):
    """Flat end positions of ``n_samples`` independent walkers after n_t steps.

    Starts are drawn from field0, so every position is an exact draw from
    ``L^{n_t} p0``. Uniforms are generated in fixed-size chunks, each from its
    own spawned stream, so results do not depend on the backend or worker count.
    """
    stencil = _stencil_for(field0, problem)
    if n_samples < 1:
        raise ValidationError("n_samples must be >= 1")
    impl = kernels.get_backend(backend)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    n_chunks = -(-n_samples // WALK_CHUNK)
    streams = ss.spawn(n_chunks)
    cdf = np.cumsum(field0.values)
    cdf /= cdf[-1]
    thresholds = stencil.thresholds()

    def run(c):
        rng = np.random.default_rng(streams[c])
        m = min(WALK_CHUNK, n_samples - c * WALK_CHUNK)
        start = np.minimum(np.searchsorted(cdf, rng.random(m), side="right"), cdf.size - 1)
        start = start.astype(np.int64)
        if n_t == 0:
            return start
        u = rng.random((m, n_t))
        return impl.walk(start, u, thresholds, stencil.n_x, stencil.d)

    if n_workers > 1 and n_chunks > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(n_workers) as pool:
            parts = list(pool.map(run, range(n_chunks)))
    else:
        parts = [run(c) for c in range(n_chunks)]
    return np.concatenate(parts)


def sample_final(field0, problem, n_t, seed=0):
    """A single exact sample of the distribution after n_t steps."""
    pos = sample_walk(field0, problem, n_t, 1, seed)
    idx = np.unravel_index(int(pos[0]), field0.grid.shape)
    record = seed.entropy if isinstance(seed, np.random.SeedSequence) else seed
    return WalkSample(tuple(int(v) for v in idx), record)


def empirical_distribution(samples, grid):
    """Normalised visit counts from flat positions or WalkSample records."""
    if len(samples) == 0:
        raise ValidationError("no samples")
    if isinstance(samples[0], WalkSample):
        flat = np.array([np.ravel_multi_index(s.position, grid.shape) for s in samples])
    else:
        flat = np.asarray(samples, dtype=np.int64)
    counts = np.bincount(flat, minlength=grid.size).astype(float)
    return Field(counts / counts.sum(), grid)


def total_variation(p, q):
    p = p.values if isinstance(p, Field) else np.asarray(p)
    q = q.values if isinstance(q, Field) else np.asarray(q)
    return 0.5 * float(np.abs(p - q).sum())


# --------------------------------------------------------------------------
# spectral solution


def solve_fft(field0, problem, n_t=None, delta=1e-12, backend=None):
    """``F^-1 Lambda^{n_t} F p0`` with the eigenvalue powers accurate to delta."""
    grid = field0.grid
    n_t = grid.n_t if n_t is None else int(n_t)
    if n_t < 0:
        raise ValidationError("n_t must be >= 0")
    if not stability_check(grid, problem).stochastic:
        raise StabilityError("spectral solve requires dt <= dx^2/(2dD)")
    if n_t == 0 or delta / n_t >= 1e-13:
        powers = spectral.l_eig_power_all(grid, problem, n_t, delta)
    else:
        modes = np.ndindex(*grid.shape)
        powers = np.array([spectral.l_eig_power(j, n_t, delta, grid, problem) for j in modes])
    coef = fft.fftn(field0.values, grid.n_x, grid.d, backend)
    out = fft.ifftn(coef * powers, grid.n_x, grid.d, backend)
    scale = max(1.0, float(np.abs(out.real).max()))
    if np.abs(out.imag).max() > 1e-10 * scale:
        raise ValidationError(f"spectral solution has imaginary residue {np.abs(out.imag).max():.3g}")
    return Field(out.real, grid)


# --------------------------------------------------------------------------
# exact continuous solution


def analytic_reference(p0, t, grid, problem):
    """Exact solution at time t for trigonometric p0, sampled on the grid (unnormalised)."""
    if not isinstance(p0, TrigP0):
        raise ValidationError("analytic reference needs a trigonometric initial condition")
    if p0.dim != grid.d:
        raise ValidationError("p0 dimension does not match grid")
    vals = p0.evaluate(grid.coords(), problem.L, t, problem.a, problem.D)
    scale = max(1.0, float(np.abs(vals.real).max()))
    if np.abs(vals.imag).max() > 1e-12 * scale:
        raise DegenerateInitialCondition("analytic reference is not real; p0 modes lack conjugate pairs")
    return Field(vals.real, grid)


def density_error(field, p0, grid, problem, t):
    """Infinity-norm error of a unit-mass grid field against the continuous density.

    The field is rescaled by the sum of the sampled initial density, the
    factor removed when the initial samples were normalised.
    """
    raw = p0.evaluate(grid.coords(), problem.L).real
    ref = analytic_reference(p0, t, grid, problem).values
    return float(np.abs(raw.sum() * field.values - ref).max())
