"""Statevector simulation of the quantum diagonalisation solver and the
measurement protocol that reads a distribution out of its amplitudes.

Amplitude ``i`` of a d log2(n_x)-qubit register is grid point ``i`` in flat
row-major order. When an ancilla is attached it is the most significant
qubit: index ``anc * n_x^d + i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from . import fft, operators, spectral
from .errors import PostselectionStarved, StabilityError, ValidationError
from .model import Field, Tolerances, stability_check

NORM_TOL = 1e-12
STARVED = 1e-15
MEDIAN_C = 18


@dataclass(frozen=True)
class Statevector:
    amps: np.ndarray
    n_x: int
    d: int
    ancilla: bool = False

    def __post_init__(self):
        if not fft.is_power_of_two(self.n_x):
            raise ValidationError(f"n_x={self.n_x} is not a power of two")
        expected = self.n_x ** self.d * (2 if self.ancilla else 1)
        if self.amps.size != expected:
            raise ValidationError(f"{self.amps.size} amplitudes, expected {expected}")
        norm = float(np.linalg.norm(self.amps))
        if abs(norm - 1.0) > 1e-10:
            raise ValidationError(f"state norm {norm} is not 1")

    @property
    def q(self):
        return self.d * (self.n_x.bit_length() - 1) + int(self.ancilla)

    @property
    def norm(self):
        return float(np.linalg.norm(self.amps))

    def label(self, index):
        """Grid multi-index (and ancilla bit, if present) of a flat amplitude index."""
        size = self.n_x ** self.d
        anc, i = divmod(int(index), size)
        mode = tuple(int(v) for v in np.unravel_index(i, (self.n_x,) * self.d))
        return (anc, mode) if self.ancilla else mode

    def probabilities(self):
        return np.abs(self.amps) ** 2


def prepare_state(field):
    """Amplitude encoding ``|p> = p / ||p||_2``."""
    vals = field.values
    if (vals < 0).any():
        raise ValidationError("amplitude encoding needs a nonnegative field")
    norm = float(np.linalg.norm(vals))
    if norm == 0.0:
        raise ValidationError("cannot encode the zero field")
    return Statevector((vals / norm).astype(complex), field.grid.n_x, field.grid.d)


def qft_axes(state, inverse=False, backend=None):
    """Unitary Fourier transform on each axis register (ancilla untouched)."""
    size = state.n_x ** state.d
    blocks = state.amps.reshape(-1, size)
    out = np.stack([fft.unitary_fftn(b, state.n_x, state.d, inverse, backend) for b in blocks])
    return Statevector(out.reshape(-1), state.n_x, state.d, state.ancilla)


def _check_stable(grid, problem):
    if not stability_check(grid, problem).stochastic:
        raise StabilityError("eigenvalue map needs dt <= dx^2/(2dD)")


def apply_eigen_ancilla(state, grid, problem, n_t, delta=1e-12):
    """Rotate an ancilla so mode j carries ``l_j^{n_t}`` on |0> and the rest on |1>.

    Returns ``(state_with_ancilla, success_prob)`` where the success
    probability is ``||Lambda^{n_t} psi||_2^2``.
    """
    if state.ancilla:
        raise ValidationError("state already carries an ancilla")
    if n_t == 0:
        lam = np.ones(grid.size, dtype=complex)
    elif delta / n_t >= 1e-13:
        _check_stable(grid, problem)
        lam = spectral.l_eig_power_all(grid, problem, n_t, delta)
    else:
        _check_stable(grid, problem)
        lam = np.array([spectral.l_eig_power(j, n_t, delta, grid, problem)
                        for j in np.ndindex(*grid.shape)])
    mag2 = np.minimum(np.abs(lam) ** 2, 1.0)
    zero = state.amps * lam
    one = state.amps * np.sqrt(1.0 - mag2)
    success = float(np.sum(np.abs(zero) ** 2))
    return Statevector(np.concatenate([zero, one]), state.n_x, state.d, True), success


def postselect(state, bit=0):
    """Exact renormalisation on the ancilla outcome; returns (state, probability)."""
    if not state.ancilla:
        raise ValidationError("no ancilla to postselect")
    size = state.n_x ** state.d
    block = state.amps[bit * size:(bit + 1) * size]
    prob = float(np.sum(np.abs(block) ** 2))
    if prob < STARVED:
        raise PostselectionStarved(f"postselection starved: success probability {prob:.3e}")
    return Statevector(block / math.sqrt(prob), state.n_x, state.d), prob


@dataclass(frozen=True)
class DiagResult:
    final: Field  # unit 2-norm, proportional to L^{n_t} p0
    success_prob: float
    repetitions: float  # amplitude-amplification rounds, 1/sqrt(success_prob)
    state: Statevector


def qft_diag_solve(field0, problem, n_t=None, delta=1e-12, backend=None):
    """Prepare, transform, apply the eigenvalue map, postselect, transform back."""
    grid = field0.grid
    n_t = grid.n_t if n_t is None else int(n_t)
    psi = prepare_state(field0)
    psi = qft_axes(psi, backend=backend)
    with_anc, _ = apply_eigen_ancilla(psi, grid, problem, n_t, delta)
    kept, prob = postselect(with_anc, 0)
    out = qft_axes(kept, inverse=True, backend=backend)
    vals = out.amps
    scale = float(np.abs(vals.real).max())
    if np.abs(vals.imag).max() > 1e-10 * max(scale, 1.0):
        raise ValidationError("output state is not real")
    return DiagResult(Field(vals.real, grid), prob, 1.0 / math.sqrt(prob), out)


def walk_reference(field0, problem, k, eta):
    """Target state of the quantum-walk routine and its query cost.

    The state ``L^k p0`` normalised is computed classically. The cost is
    ``(1/nu) sqrt(k log(1/(eta nu)))`` with ``nu = ||L^k psi_0||_2``.
    """
    if k < 0:
        raise ValidationError("k must be >= 0")
    if not 0 < eta < 1:
        raise ValidationError("eta must lie in (0, 1)")
    psi0 = prepare_state(field0)
    if k == 0:
        return psi0, 1.0
    grid = field0.grid
    _check_stable(grid, problem)
    stencil = operators.make_stencil(problem, grid)
    start = field0.values / np.linalg.norm(field0.values)
    out = operators.evolve_array(start, stencil, k)
    nu = float(np.linalg.norm(out))
    cost = math.sqrt(k * math.log(1.0 / (eta * nu))) / nu
    return Statevector((out / nu).astype(complex), grid.n_x, grid.d), cost


# --------------------------------------------------------------------------
# phase estimation and the measurement protocol


def phase_outcome_distribution(value, k_bits):
    """Exact outcome probabilities of phase estimation on the phase value/2.

    One extra register qubit is used (2^(k+1) outcomes) so that value = 1
    does not wrap round to 0.
    """
    if k_bits < 1:
        raise ValidationError("k_bits must be >= 1")
    if not 0 <= value <= 1:
        raise ValidationError(f"value must lie in [0, 1], got {value}")
    size = 2 ** (k_bits + 1)
    x = np.arange(size)
    amps = fft.fftn(np.exp(2j * np.pi * x * (value / 2.0)), size, 1) / size
    return np.abs(amps) ** 2


def _estimates_from_outcomes(m, k_bits):
    size = 2 ** (k_bits + 1)
    frac = m / size
    frac = np.where(frac > 0.75, frac - 1.0, frac)
    return np.clip(2.0 * frac, 0.0, 1.0)


def phase_estimate(value, k_bits, rng, size=None):
    """Sample phase-estimation readouts of ``value``; error <= 4/2^k w.p. >= 5/6."""
    probs = phase_outcome_distribution(value, k_bits)
    m = rng.choice(probs.size, size=size, p=probs / probs.sum())
    return _estimates_from_outcomes(np.asarray(m), k_bits) if size is not None \
        else float(_estimates_from_outcomes(np.asarray(m), k_bits))


@dataclass(frozen=True)
class MeasurementResult:
    estimates: Field
    selected: List[Tuple[int, ...]]
    n_samples: int
    repetitions: int
    k_bits: int
    error: float
    success: bool


def protocol_sizes(n_points, tol):
    """(N samples, k bits, R repetitions) for the measurement protocol."""
    n = int(math.ceil(math.log(n_points / tol.delta) / tol.eps_q))
    k = int(math.ceil(math.log2(4.0 / tol.eps_q)))
    r = int(math.ceil(MEDIAN_C * math.log(1.0 / (tol.delta * tol.eps_q))))
    return n, k, r


def measure_distribution(state_source, field_truth, tol, rng):
    """Read a distribution out of an amplitude-encoded state to infinity-norm eps_q.

    1. Born-rule samples select the coordinates worth estimating.
    2. Each selected coordinate's value is estimated by phase estimation
       (ideal phase oracle), taking the median of R repetitions.
    3. Everything else is reported as zero.
    """
    if not isinstance(tol, Tolerances):
        raise ValidationError("tol must be a Tolerances instance")
    state = state_source()
    grid = field_truth.grid
    n, k, r = protocol_sizes(grid.size, tol)
    probs = state.probabilities()
    draws = rng.choice(probs.size, size=n, p=probs / probs.sum())
    selected = np.unique(draws)
    amps = state.amps.real
    values = amps / amps.sum()
    est = np.zeros(grid.size)
    for i in selected:
        est[i] = float(np.median(phase_estimate(float(np.clip(values[i], 0, 1)), k, rng, size=r)))
    err = float(np.abs(est - field_truth.values).max())
    labels = [tuple(int(v) for v in np.unravel_index(int(i), grid.shape)) for i in selected]
    return MeasurementResult(Field(est, grid), labels, n, r, k, err, err <= tol.eps_q)


@dataclass(frozen=True)
class TrialStats:
    trials: int
    successes: int
    frequency: float
    stderr: float
    max_error: float
    n_samples: int
    repetitions: int


def run_trials(state_source, field_truth, tol, n_trials, seed=0):
    """Independent protocol runs, one spawned RNG stream per trial."""
    streams = np.random.SeedSequence(seed).spawn(n_trials)
    results = [measure_distribution(state_source, field_truth, tol, np.random.default_rng(s))
               for s in streams]
    wins = sum(r.success for r in results)
    freq = wins / n_trials
    return TrialStats(n_trials, wins, freq, math.sqrt(max(freq * (1 - freq), 1e-12) / n_trials),
                      max(r.error for r in results), results[0].n_samples, results[0].repetitions)
