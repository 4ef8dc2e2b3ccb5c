"""Acceptance criteria, one test each. Every test prints a single
``ACCEPTANCE <n> PASS|FAIL`` line with the measured quantities."""

import itertools
import json
import math
import time

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from driftdiff import cli, estimator, operators, qsim, solvers, spectral
from driftdiff.model import (DDEProblem, Field, Grid, Tolerances, TrigP0, init_field, stability_check,
                             theorem1_bound)


@pytest.fixture
def report(capsys):
    def emit(n, ok, text, elapsed=None):
        tail = f" [{elapsed:.2f} s]" if elapsed is not None else ""
        with capsys.disabled():
            print(f"\nACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'} {text}{tail}")
        assert ok, text
    return emit


def _multiset_gap(a, b):
    cost = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def _rand_field(g, seed):
    v = np.random.default_rng(seed).random(g.size)
    return Field(v / v.sum(), g)


def _grid(a, D, L, d, n_x, n_t, frac):
    dx = 2 * L / n_x
    dt = frac * dx ** 2 / (2 * d * D)
    p = DDEProblem(a=a, D=D, L=L, T=dt * n_t, d=d)
    return p, Grid.from_problem(p, n_x, n_t)


def test_01_eigenvalue_oracle(report):
    t0 = time.perf_counter()
    worst = 0.0
    for d, sizes in ((1, (4, 8, 16, 32)), (2, (4, 8))):
        for n in sizes:
            p, g = _grid(0.7, 0.9, 1.0, d, n, 4, 0.8)
            M = operators.build_M_dense(p, g)
            ev_M = np.linalg.eigvals(M)
            closed_M = (spectral.l_eig_all(g, p) - 1.0) / g.dt
            scale = max(1.0, np.abs(ev_M).max())
            worst = max(worst, _multiset_gap(closed_M, ev_M) / scale)
            ev_L = np.linalg.eigvals(operators.build_L_dense(p, g))
            worst = max(worst, _multiset_gap(spectral.l_eig_all(g, p), ev_L))
    el = time.perf_counter() - t0
    report(1, worst <= 1e-10 and el < 10,
           f"eigenvalues of M and L vs dense: max gap {worst:.2e} (tol 1e-10)", el)


def test_02_cross_solver(report):
    t0 = time.perf_counter()
    fft_gap = 0.0
    for n, d, n_t in itertools.product((4, 8, 16, 32), (1, 2), (1, 50, 512)):
        p, g = _grid(0.6, 1.0, 1.0, d, n, n_t, 0.9)
        f = _rand_field(g, n * 7 + d + n_t)
        diff = solvers.solve_fft(f, p).values - solvers.solve_timestep(f, p).final.values
        fft_gap = max(fft_gap, float(np.abs(diff).max()))
    cg_gap = 0.0
    for n, n_t in itertools.product((4, 8, 16), (1, 4, 8, 16)):
        p, g = _grid(0.6, 1.0, 1.0, 1, n, n_t, 0.9)
        f = _rand_field(g, n + 100 * n_t)
        diff = solvers.solve_cg(f, p, eps_c=1e-9).values - solvers.solve_timestep(f, p).values
        cg_gap = max(cg_gap, float(np.abs(diff).max()))
    el = time.perf_counter() - t0
    report(2, fft_gap <= 1e-8 and cg_gap <= 1e-8 and el < 60,
           f"timestep vs fft {fft_gap:.2e}, timestep vs cg {cg_gap:.2e} (tol 1e-8)", el)


def test_03_discretisation_error(report):
    t0 = time.perf_counter()
    p0 = TrigP0.cosines(1.0, [((1,), 0.5), ((2,), 0.3)])
    zeta = p0.smoothness_bound(1.0)
    errs, bounds = [], []
    for n_x, n_t in ((16, 8), (32, 32), (64, 128), (128, 512)):
        p = DDEProblem(a=0.3, D=1.0, L=1.0, T=1 / 16, zeta=zeta, p0=p0)
        g = Grid.from_problem(p, n_x, n_t)
        assert stability_check(g, p).dt_ratio == pytest.approx(1.0)
        final = solvers.solve_timestep(init_field(p, g), p).final
        errs.append(solvers.density_error(final, p0, g, p, p.T))
        bounds.append(theorem1_bound(p, g))
    ratios = [errs[i] / errs[i + 1] for i in range(3)]
    el = time.perf_counter() - t0
    ok = all(e <= b for e, b in zip(errs, bounds)) and all(3 <= r <= 5 for r in ratios) and el < 60
    report(3, ok, "errors " + ", ".join(f"{e:.3e}<={b:.3e}" for e, b in zip(errs, bounds))
           + "; ratios " + ", ".join(f"{r:.3f}" for r in ratios), el)


def test_04_condition_number(report):
    t0 = time.perf_counter()
    lines, ok = [], True
    for a, n_t in itertools.product((0.0, 0.3), (8, 16, 32, 64)):
        dx = 0.25
        p = DDEProblem(a=a, D=1.0, L=1.0, T=n_t * dx ** 2 / 2)
        g = Grid.from_problem(p, 8, n_t)
        kappa, smin, _ = spectral.kappa_A_dense(p, g)
        r, s = kappa / n_t, smin * n_t
        ok &= 0.3 <= r <= 4 and s >= 2 / math.pi - 0.05
        lines.append(f"a={a},n_t={n_t}:{r:.3f}/{s:.3f}")
    el = time.perf_counter() - t0
    report(4, ok and el < 120, "kappa/n_t, sigma_min*n_t: " + " ".join(lines), el)


def test_05_kappa_L(report):
    t0 = time.perf_counter()
    exact = []
    for n in (8, 16):
        dx = 2.0 / n
        g = Grid(n, 1, dx, 0.2 * dx ** 2, 1)
        exact.append(spectral.kappa_L_check(g, DDEProblem(a=0, D=1, L=1, T=1)).measured)
    rng = np.random.default_rng(2024)
    draws = []
    for _ in range(50):
        n = int(rng.choice([8, 16]))
        D = float(rng.uniform(0.1, 2.0))
        a = float(rng.uniform(0, 2 * math.sqrt(10))) * D
        Y = float(rng.uniform(0, 0.2))
        dx = 2.0 / n  # L = 1
        g = Grid(n, 1, dx, Y * dx ** 2 / D, 1)
        draws.append(spectral.kappa_L_check(g, DDEProblem(a=a, D=D, L=1.0, T=1.0)).measured)
    el = time.perf_counter() - t0
    ok = all(abs(k - 5) <= 1e-6 for k in exact) and max(draws) <= 5 + 1e-9
    report(5, ok, f"kappa(L) at Y=1/5: {exact[0]:.12f}, {exact[1]:.12f}; "
           f"max over 50 draws {max(draws):.9f}", el)


def test_06_return_probability(report):
    t0 = time.perf_counter()
    worst = math.inf
    for d in (1, 2, 3):
        n = 32 if d < 3 else 16
        dx = 2.0 / n
        p = DDEProblem(a=0.0, D=1.0, L=1.0, T=1.0, d=d)
        g = Grid(n, 128, dx, dx ** 2 / (2 * d), d)
        st_ = operators.make_stencil(p, g)
        v = np.zeros(g.size)
        o = g.origin_index()
        v[o] = 1.0
        traj = operators.evolve_array(v, st_, 128, trajectory=True)
        for tau in range(1, 65):
            worst = min(worst, traj[2 * tau - 1, o] / spectral.return_prob_bound(tau, d))
        assert spectral.return_prob(g, p, 64) == traj[127, o]
    el = time.perf_counter() - t0
    report(6, worst >= 1 and el < 60, f"min <0|L^2tau|0> / (4 sqrt tau)^-d over tau<=64, d<=3: {worst:.4f}", el)


def test_07_quantum_diagonalisation(report):
    t0 = time.perf_counter()
    state_gap = prob_gap = 0.0
    for n, d, n_t in itertools.product((4, 8, 16, 32), (1, 2), (1, 64, 512)):
        p, g = _grid(0.5, 1.0, 1.0, d, n, n_t, 0.9)
        f = _rand_field(g, n + d + n_t)
        res = qsim.qft_diag_solve(f, p)
        ts = solvers.solve_timestep(f, p).final.values
        state_gap = max(state_gap, float(np.abs(res.final.values - ts / np.linalg.norm(ts)).max()))
        classical = float(ts @ ts) / float(f.values @ f.values)
        prob_gap = max(prob_gap, abs(res.success_prob - classical))
    el = time.perf_counter() - t0
    report(7, state_gap <= 1e-9 and prob_gap <= 1e-12,
           f"state gap {state_gap:.2e} (tol 1e-9), success-probability gap {prob_gap:.2e} (tol 1e-12)", el)


def test_08_measurement_protocol(report):
    t0 = time.perf_counter()
    p0 = TrigP0.cosines(1.0, [((1,), 0.6)])
    p = DDEProblem(a=0.3, D=1.0, L=1.0, T=0.02, p0=p0)
    g = Grid.from_problem(p, 8, 4)
    truth = solvers.solve_timestep(init_field(p, g), p).final
    tol = Tolerances(eps_c=0.1, eps_q=0.1, delta=0.05)
    stats = qsim.run_trials(lambda: qsim.prepare_state(truth), truth, tol, 200, seed=8)
    floor = 1 - tol.delta - 3 * math.sqrt(tol.delta * (1 - tol.delta) / 200)
    n_expected = math.ceil(math.log(8 / 0.05) / 0.1)
    el = time.perf_counter() - t0
    ok = stats.frequency >= floor and stats.n_samples == n_expected and el < 600
    report(8, ok, f"success {stats.successes}/200 = {stats.frequency:.3f} >= {floor:.3f}; "
           f"N = {stats.n_samples} (expected {n_expected}), R = {stats.repetitions}", el)


def test_09_walk_sampler(report):
    t0 = time.perf_counter()
    p, g = _grid(0.5, 1.0, 1.0, 1, 16, 50, 0.8)
    f = init_field(p, g)
    pos = solvers.sample_walk(f, p, 50, 10 ** 6, seed=99)
    tv = solvers.total_variation(solvers.empirical_distribution(pos, g), solvers.solve_timestep(f, p).final)
    st_ = operators.make_stencil(p, g)
    one = solvers.sample_walk(f, p, 1, 10 ** 6, seed=100)
    o = g.origin_index()
    zs = []
    for where, prob in ((o, st_.stay), (o - 1, st_.up), (o + 1, st_.down)):
        freq = np.count_nonzero(one == where) / 10 ** 6
        zs.append(abs(freq - prob) / math.sqrt(prob * (1 - prob) / 10 ** 6))
    el = time.perf_counter() - t0
    report(9, tv <= 0.005 and max(zs) <= 3,
           f"TV {tv:.5f} (tol 0.005); one-step |z| stay/up/down " + "/".join(f"{z:.2f}" for z in zs), el)


def test_10_table_iii(report):
    t0 = time.perf_counter()
    rows = estimator.table_iii_report()
    strict_ok = all(r.ok for r in rows if r.strict)
    text = "; ".join(f"{r.method} {r.computed:.3e} vs {r.printed:.2e}"
                     f"{'' if r.ok else ' MISMATCH'}{'' if r.strict else ' (policy)'}" for r in rows)
    el = time.perf_counter() - t0
    report(10, strict_ok and el < 1, text, el)


def test_11_table_ii(report):
    rep = estimator.grid_report(estimator.table_ii_problem(), 1.0, estimator.TABLE_II_PRINTED)
    text = (f"n_t {rep.nt_exact:.4e} (printed {rep.printed_n_t:.2e}): mantissa "
            f"{'match' if rep.nt_mantissa_match else 'MISMATCH'}, exponent "
            f"{'match' if rep.nt_exponent_match else 'FLAGGED'}; n_x {rep.nx_exact:.4e} "
            f"(printed {rep.printed_n_x:.2e}) {'match' if rep.nx_match else 'FLAGGED'}")
    report(11, bool(rep.nt_mantissa_match) and rep.nt_exponent_match is False and rep.nx_match is False,
           text)


def test_12_determinism(report, tmp_path):
    small = ["--a", "0.3", "--D", "1", "--L", "1", "--T", "0.05", "--n-x", "16", "--n-t", "16"]
    runs = [["solve", "--method", "walk", "--samples", "50000", *small],
            ["compare", "--methods", "timestep,fft,cg", *small],
            ["qsim", "--mode", "measure", "--trials", "20", *small],
            ["estimate", "--table-ii"]]
    identical = True
    for i, argv in enumerate(runs):
        seen = []
        for rep in range(2):
            d = tmp_path / f"{i}-{rep}"
            assert cli.main(argv + ["--seed", "7", "--out-dir", str(d)]) == 0
            seen.append({q.name: q.read_bytes() for q in sorted(d.iterdir()) if q.name != "manifest.json"})
            json.loads((d / "manifest.json").read_text())
        identical &= bool(seen[0]) and seen[0] == seen[1]
    report(12, identical, f"{len(runs)} subcommands run twice with seed 7: outputs byte-identical = {identical}")
