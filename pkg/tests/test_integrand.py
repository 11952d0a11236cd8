import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from lingrowth.calculus import Verdict
from lingrowth.errors import NotLinearGrowth, NotStrictlyConvex
from lingrowth.integrand import (
    check_hypotheses,
    conjugate_blowup_test,
    from_table,
    make_custom,
    make_prototype,
)

PS = [0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 3.0]
S = np.logspace(-3, 6, 200)


def closed(p, s):
    """Independent closed forms of the prototype family."""
    a = (1 + s ** p) ** (-1 / p)
    return a, s * a, (1 + s ** p) ** (-1 - 1 / p)


@pytest.mark.parametrize("p", PS)
def test_prototype_matches_closed_forms(p):
    I = make_prototype(p)
    a, dF, ddF = closed(p, S)
    assert np.allclose(I.a(S), a, rtol=1e-13)
    assert np.allclose(I.dF(S), dF, rtol=1e-13)
    assert np.allclose(I.ddF(S), ddF, rtol=1e-13)


def test_p2_values_at_one():
    I = make_prototype(2.0)
    one = np.array(1.0)
    assert float(I.a(one)) == pytest.approx(2 ** -0.5, abs=1e-15)
    assert float(I.dF(one)) == pytest.approx(2 ** -0.5, abs=1e-15)
    assert float(I.ddF(one)) == pytest.approx(2 ** -1.5, abs=1e-15)
    # the minimal surface integrand
    assert float(I.F(one)) == pytest.approx(math.sqrt(2) - 1, abs=1e-14)


@pytest.mark.parametrize("p", PS)
def test_F_against_quad(p):
    I = make_prototype(p)
    for s in (1e-2, 0.5, 3.0, 40.0):
        ref = quad(lambda t: t * (1 + t ** p) ** (-1 / p), 0, s, epsabs=0, epsrel=1e-13)[0]
        assert float(I.F(np.array(s))) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("p", PS)
def test_structural_invariants(p):
    I = make_prototype(p)
    s = np.logspace(-6, 8, 400)
    assert np.all(I.ddF(s) > 0)
    assert float(I.dF(np.array(1e-8))) <= 1e-4
    dF = I.dF(s)
    # 1 - F' is resolved to full relative precision even where F' rounds to 1
    tail = I.tail(s)
    assert np.all((dF > 0) & (tail > 0))
    assert np.all(np.diff(tail) < 0)
    assert np.max(np.abs(dF - I.a(s) * s)) <= 1e-12
    big = s >= 1e-3
    assert np.max(np.abs(I.da(s[big]) * s[big] + I.a(s[big]) - I.ddF(s[big]))) <= 1e-8


@pytest.mark.parametrize("p", PS)
def test_normalization(p):
    I = make_prototype(p)
    # 1 - F'(S) ~ S^{-p}/p, so slow families need a larger S to reach 1e-3
    S_norm = 1e6 if p >= 1 else 1e8
    assert abs(float(I.dF(np.array(S_norm))) - 1) <= 1e-3


@pytest.mark.parametrize("p", PS)
def test_finite_difference_consistency(p):
    I = make_prototype(p)
    s = np.logspace(-2, 3, 60)
    h = 1e-5 * s
    fd1 = (I.F(s + h) - I.F(s - h)) / (2 * h)
    fd2 = (I.tail(s - h) - I.tail(s + h)) / (2 * h)
    assert np.max(np.abs(fd1 / I.dF(s) - 1)) <= 1e-5
    assert np.max(np.abs(fd2 / I.ddF(s) - 1)) <= 1e-5


def test_limits_at_zero():
    assert float(make_prototype(2.0).a(np.array(0.0))) == 1.0
    assert float(make_prototype(2.0).dF(np.array(0.0))) == 0.0
    assert float(make_prototype(2.0).F(np.array(0.0))) == 0.0


def test_custom_recovers_p2():
    I = make_custom(lambda t: (1 + t * t) ** -1.5)
    assert float(I.dF(np.array(1.0))) == pytest.approx(2 ** -0.5, abs=1e-8)
    s = np.logspace(-3, 4, 50)
    assert np.allclose(I.F(s), np.sqrt(1 + s * s) - 1, rtol=1e-8, atol=1e-12)
    assert I.criterion.verdict is Verdict.CONVERGES


def test_custom_exponential_normalised():
    I = make_custom(lambda t: np.exp(-t))
    s = np.array([0.1, 1.0, 5.0])
    assert np.allclose(I.dF(s), -np.expm1(-s), atol=1e-10)
    assert I.L == pytest.approx(1.0, rel=1e-10)


def test_custom_rescales_to_unit_limit():
    I = make_custom(lambda t: 3.0 * (1 + t * t) ** -1.5)
    assert float(I.dF(np.array(1.0))) == pytest.approx(2 ** -0.5, abs=1e-8)


def test_custom_degenerate():
    with pytest.raises(NotStrictlyConvex):
        make_custom(lambda t: 0.0 * t)


def test_custom_superlinear_rejected():
    with pytest.raises(NotLinearGrowth):
        make_custom(lambda t: 1.0 / (1.0 + t))


def test_from_table_matches_prototype():
    t = np.logspace(-4, 6, 200)
    I = from_table(t, (1 + t ** 2) ** -1.5)
    s = np.array([0.3, 1.0, 10.0])
    assert np.allclose(I.dF(s), s / np.sqrt(1 + s * s), atol=1e-6)


@settings(max_examples=25, deadline=None)
@given(p=st.sampled_from(PS), y=st.floats(1e-6, 1 - 1e-9))
def test_inverse_roundtrip(p, y):
    I = make_prototype(p)
    s = float(I.inverse_dF(y))
    assert float(I.dF(np.array(s))) == pytest.approx(y, rel=1e-10)


@pytest.mark.parametrize("p,verdict", [(p, Verdict.DIVERGES) for p in (0.5, 0.75, 1.0)]
                         + [(p, Verdict.CONVERGES) for p in (1.25, 1.5, 2.0, 3.0)])
def test_check_hypotheses_verdicts(p, verdict):
    rep = check_hypotheses(make_prototype(p))
    assert rep.criterion_A2.verdict is verdict
    assert rep.criterion_A2.tail_exponent_estimate == pytest.approx(p, abs=0.1)
    assert rep.linear_growth and rep.C1 > 0 and rep.C2_growth > 0
    assert rep.R2_residual >= 0 and rep.R3_residual >= 0
    I = make_prototype(p)
    s = np.logspace(-6, 8, 400)
    assert np.all(I.F(s) <= s * I.dF(s) + rep.C2 + 1e-12)


def test_p2_report_details():
    rep = check_hypotheses(make_prototype(2.0))
    assert rep.bernstein_genre == pytest.approx(2.0, abs=0.1)
    assert rep.R3_residual <= 1e-6
    d = rep.to_dict()
    assert d["criterion_A2"]["verdict"] == "Converges"
    assert d["oscillation_bound"]["status"] == "verified on grid"


def test_conjugate_p1_blows_up():
    I = make_prototype(1.0)
    ys = [0.9, 1 - 1e-6, 1 - 1e-12]
    rep = conjugate_blowup_test(I, ys)
    exact = [math.log(1 / (1 - y)) - y for y in ys]
    assert np.allclose([v for _, v in rep.points], exact, rtol=1e-8)
    assert rep.points[1][1] > 10 and rep.exceeds_threshold


def test_conjugate_p2_bounded():
    I = make_prototype(2.0)
    rep = conjugate_blowup_test(I, [0.9, 1 - 1e-6, 1 - 1e-12])
    # y s - F(s) with s = y/sqrt(1-y^2) equals 1 - sqrt(1 - y^2)
    assert rep.limit_estimate < 1.0 and not rep.exceeds_threshold
    for y, v in rep.points:
        assert v == pytest.approx(1 - math.sqrt(1 - y * y), abs=1e-9)


def test_conjugate_envelope_at_one():
    I = make_prototype(1.5)
    y = float(I.dF(np.array(1.0)))
    (_, v), = conjugate_blowup_test(I, [y]).points
    assert v == pytest.approx(y - float(I.F(np.array(1.0))), abs=1e-12)
