import math

import pytest
from hypothesis import given, strategies as st

from driftdiff import estimator as E
from driftdiff.errors import ValidationError
from driftdiff.model import DDEProblem

P = E.table_ii_problem()


def test_table_iii_strict_rows():
    for m in E.TABLE_III_STRICT:
        assert E.estimate(m, P, 1.0, 1.0).value == pytest.approx(E.TABLE_III[m][0], rel=0.01)


def test_table_iii_report_all_rows():
    rows = {r.method: r for r in E.table_iii_report()}
    assert set(rows) == set(E.METHODS)
    assert all(r.ok for r in rows.values())


def test_eps_exponents_match_table():
    for m in E.METHODS:
        e1 = E.estimate(m, P, 1.0, 1.0).value
        e2 = E.estimate(m, P, 0.5, 1.0).value
        assert math.log2(e2 / e1) == pytest.approx(E.TABLE_III[m][1], abs=1e-12)


def test_hand_values():
    aLD = 0.2366 * 10 + 0.2455
    assert E.estimate("quantum_le", P, 1, 1).value == pytest.approx(3 ** 5 * 5000 ** 2 * aLD ** 2)
    fft = 3 ** 2.5 * 5000 ** 1.5 * 10 ** 3 * aLD ** 3 / 0.2455 ** 1.5
    assert E.estimate("classical_fft", P, 1).value == pytest.approx(fft)


def test_quantum_needs_eps_q():
    with pytest.raises(ValidationError):
        E.estimate("quantum_qft", P, 0.5)
    with pytest.raises(ValidationError):
        E.estimate("nope", P, 0.5)


@given(m=st.sampled_from(E.METHODS), eps=st.floats(1e-4, 1), logs=st.booleans())
def test_factors_recombine(m, eps, logs):
    e = E.estimate(m, P, eps, 0.3, with_logs=logs)
    assert e.recombined() == pytest.approx(e.value, rel=1e-9)


@given(m=st.sampled_from(E.METHODS), e1=st.floats(1e-4, 1), e2=st.floats(1e-4, 1))
def test_monotone_in_eps(m, e1, e2):
    lo, hi = sorted((e1, e2))
    assert E.estimate(m, P, lo, 0.5).value >= E.estimate(m, P, hi, 0.5).value
    if m in E.QUANTUM:
        assert E.estimate(m, P, 0.5, lo).value >= E.estimate(m, P, 0.5, hi).value


def test_advantage_threshold():
    adv = E.advantage_threshold(P, 1.0)
    assert adv.threshold == pytest.approx(adv.ratio, rel=1e-9)
    assert adv.ratio == pytest.approx(8.07e11 / 6.98e7, rel=0.02)
    assert E.advantage_threshold(P, 1 / 16).threshold / adv.threshold == pytest.approx(8.0)


def test_advantage_d_dependence():
    base = dict(a=0.2, D=0.5, L=1.0, T=10.0)
    t1 = E.advantage_threshold(DDEProblem(d=1, **base), 0.5).threshold
    t2 = E.advantage_threshold(DDEProblem(d=2, **base), 0.5).threshold
    aLD = 0.2 + 0.5
    one = 0.5 ** -0.25 * aLD ** 0.5 / 0.5 ** 0.5
    assert t1 == pytest.approx(one)
    assert t2 == pytest.approx(one ** 2 / 2)


def test_crossover_sweep():
    rows = E.crossover_sweep(P, [1.0, 0.1])
    assert rows[1][1] > rows[0][1]
    for _, thr, ratio in rows:
        assert thr == pytest.approx(ratio, rel=1e-9)


def test_grid_report():
    rep = E.grid_report(P, 1.0, E.TABLE_II_PRINTED)
    assert rep.nt_mantissa_match and not rep.nt_exponent_match and not rep.nx_match
    small = E.grid_report(DDEProblem(a=0, D=1, L=1, T=1), 1.0)
    assert small.n_t == 1 and small.n_x == 2
    a = E.grid_report(P, 0.5)
    b = E.grid_report(P, 0.25)
    assert b.nt_exact == pytest.approx(2 * a.nt_exact)
    assert b.nx_exact == pytest.approx(math.sqrt(2) * a.nx_exact)


def test_log_factors_at_least_one():
    for m in E.METHODS:
        assert E.log_factor(m, P, 0.5, 0.5) >= 1


def test_space_formula_grows_with_precision():
    assert E.space_qubits(P, 0.1, 0.01) > E.space_qubits(P, 0.1, 0.1)
