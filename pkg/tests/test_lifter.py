import random

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import S
from invlift.desingularizer import chain_forward
from invlift.errors import DimensionMismatch, MembershipError, TruncationUnderflow
from invlift.invariants import SignedPermReal, SymmetricComplex, SymmetricRealTraceZero, sigma
from invlift.lifter import (
    LiftChart,
    LiftOptions,
    LiftProblem,
    chart_residual,
    check_real_orders,
    lift,
    lift_curve,
    lift_multi,
)
from invlift.series import substitute_power

rat = st.fractions(min_value=-3, max_value=3, max_denominator=4)


def _problem(sys, *texts, nvars=None, **opts):
    return LiftProblem(sys, tuple(S(t, nvars=nvars) for t in texts), LiftOptions(**opts))


def T(text, like):
    """Series literal with the variable count and truncation of ``like``."""
    return S(text, nvars=like.nvars, trunc=like.trunc)


def _exact(problem, charts):
    return all(all(r.is_zero() for r in chart_residual(problem, ch)) for ch in charts)


def _value(series, point):
    return sum(complex(c) * _mono(point, e) for e, c in series.coeffs.items())


def _mono(point, e):
    e = (e,) if isinstance(e, int) else e
    out = 1
    for p, k in zip(point, e):
        out *= p ** k
    return out


# -- spec examples -------------------------------------------------------------

def test_curve_square_root():
    p = _problem(SymmetricComplex(2), "0", "-t", nvars=1)
    charts = lift_curve(p)
    assert len(charts) == 2
    assert [m.gamma for ch in charts for m in ch.power_maps()] == [(2,), (2,)]
    assert sorted(m.epsilon for ch in charts for m in ch.power_maps()) == [(0,), (1,)]
    eps0 = next(ch for ch in charts if ch.power_maps()[0].epsilon == (0,))
    x = eps0.lift[0]
    assert sorted(eps0.lift, key=lambda s: complex(s.coeff((1,))).real) == [T("-t", x), T("t", x)]
    assert tuple(sigma(p.system, eps0.lift)) == (T("0", x), T("-t^2", x))
    assert _exact(p, charts)


def test_curve_split_roots():
    p = _problem(SymmetricComplex(2), "t+t^2", "t^3")
    (chart,) = lift_curve(p)
    assert not any(m.gamma != (1,) for m in chart.power_maps())
    x = chart.lift[0]
    assert sorted(chart.lift, key=lambda s: min(s.coeffs)) == [T("t", x), T("t^2", x)]
    assert _exact(p, [chart])


def test_curve_real_square():
    p = _problem(SignedPermReal(1), "t^2")
    (chart,) = lift_curve(p)
    assert chart.chain == () or not chart.power_maps()
    x = chart.lift[0]
    assert x in (T("t", x), T("-t", x))
    assert _exact(p, [chart])


def test_surface_already_monomial():
    p = _problem(SymmetricComplex(2), "0", "-x^2*y^2", nvars=2)
    (chart,) = lift_multi(p)
    assert not any(m.kind == "blowup" for m in chart.chain)
    x = chart.lift[0]
    assert sorted(chart.lift, key=lambda s: complex(s.coeff((1, 1))).real) == [T("-x*y", x), T("x*y", x)]
    assert _exact(p, [chart])


def test_surface_square_root():
    p = _problem(SymmetricComplex(2), "0", "-x*y", nvars=2)
    charts = lift_multi(p)
    assert len(charts) == 4
    assert {m.epsilon for ch in charts for m in ch.power_maps()} == {(0, 0), (0, 1), (1, 0), (1, 1)}
    for ch in charts:
        (psi,) = ch.power_maps()
        assert psi.gamma == (2, 2)
        x = ch.lift[0]
        want = substitute_power(S("-x*y"), (2, 2), psi.epsilon).with_trunc(x.trunc)
        assert tuple(sigma(p.system, ch.lift)) == (T("0", x), want)
    assert _exact(p, charts)


def test_surface_real_sum_of_squares():
    p = _problem(SignedPermReal(1), "x^2+y^2", nvars=2)
    result = lift(p)
    assert result.charts
    assert all(m.kind != "power" for ch in result.charts for m in ch.chain)
    # chart (x, xy): x^2 (1 + y^2), lift x sqrt(1 + y^2)
    (c0,) = [ch for ch in result.charts if [m.to_json() for m in ch.chain] == [{"kind": "blowup", "chart": 0}]]
    x = c0.lift[0]
    assert x * x == T("x^2+x^2*y^2", x)
    # sqrt(1 + y^2) = 1 + y^2/2 - y^4/8 + ...
    assert abs(complex(x.coeff((1, 2)))) == pytest.approx(0.5)
    assert abs(complex(x.coeff((1, 4)))) == pytest.approx(0.125)
    assert _exact(p, result.charts)


# -- real order checks ---------------------------------------------------------

def test_check_real_orders_examples():
    assert check_real_orders(SignedPermReal(1), [2]) == ((1,), True)
    assert check_real_orders(SignedPermReal(2), [(2, 0), (4, 0)]) == ((1, 0), True)
    assert check_real_orders(SignedPermReal(1), [3]) == (None, False)
    assert check_real_orders(SignedPermReal(2), [(2, 0), (2, 0)]) == ((1, 0), False)


def test_real_orders_on_concrete_family():
    sys = SignedPermReal(2)
    f = sigma(sys, [S("x", nvars=2), S("x", nvars=2)])
    result = lift(LiftProblem(sys, tuple(f)))
    assert all(c.ok for c in result.checks)


# -- invariants ------------------------------------------------------------------

def test_recursion_measure_decreases():
    p = _problem(SymmetricComplex(3), "0", "-t^2", "t^3")
    result = lift(p)
    assert result.measure_pairs
    assert all(child < parent for parent, child in result.measure_pairs)


def test_odd_gamma_gives_one_chart():
    p = _problem(SymmetricComplex(3), "0", "0", "-t")
    charts = lift_curve(p)
    gammas = {m.gamma for ch in charts for m in ch.power_maps()}
    assert gammas == {(3,)}
    assert len(charts) == 1


@given(st.lists(st.tuples(rat, rat, rat), min_size=2, max_size=3))
def test_master_identity_on_root_curves(rows):
    sys = SymmetricComplex(len(rows))
    roots = [S(f"({a})*t+({b})*t^2+({c})*t^3") for a, b, c in rows]
    p = LiftProblem(sys, tuple(sigma(sys, roots)), LiftOptions(truncation=12))
    charts = lift_curve(p)
    assert _exact(p, charts)


@given(st.lists(st.tuples(rat, rat), min_size=1, max_size=3))
def test_real_mode_has_no_power_maps(rows):
    sys = SignedPermReal(len(rows))
    roots = [S(f"({a})*t+({b})*t^2") for a, b in rows]
    p = LiftProblem(sys, tuple(sigma(sys, roots)), LiftOptions(truncation=12))
    charts = lift_curve(p)
    assert all(not ch.power_maps() for ch in charts)
    assert _exact(p, charts)


def test_trace_zero_curve():
    sys = SymmetricRealTraceZero(3)
    roots = [S("t"), S("t^2"), S("-t-t^2")]
    p = LiftProblem(sys, tuple(sigma(sys, roots)), LiftOptions(truncation=12))
    charts = lift_curve(p)
    assert _exact(p, charts)


def test_oracle_equivalence_complex_curve():
    p = _problem(SymmetricComplex(3), "0", "-t", "t^2", truncation=16)
    charts = lift_curve(p)
    rng = random.Random(3)
    for ch in charts:
        for _ in range(10):
            s = rng.uniform(0.01, 0.05) * rng.choice([1, -1])
            (t,) = chain_forward(ch.chain, (s,))
            fiber = mpmath.polyroots([1, 0, -t, -(t * t)], maxsteps=200, extraprec=60)
            vals = [_value(r, (s,)) for r in ch.lift]
            for v in vals:
                assert min(abs(v - complex(z)) for z in fiber) < 1e-9


def test_zero_data_short_circuits():
    p = _problem(SymmetricComplex(2), "0", "0", nvars=1)
    (chart,) = lift_curve(p)
    assert all(s.is_zero() for s in chart.lift)


def test_errors():
    with pytest.raises(DimensionMismatch):
        LiftProblem(SymmetricComplex(2), (S("t"),))
    with pytest.raises(MembershipError):
        lift(_problem(SignedPermReal(1), "-1-t"))
    with pytest.raises(DimensionMismatch):
        lift_multi(_problem(SymmetricComplex(2), "0", "-t"))
    with pytest.raises(TruncationUnderflow):
        lift(LiftProblem(SymmetricComplex(2), (S("0", nvars=1), S("-t^5", trunc=6))))


def test_chart_json_round_trip():
    p = _problem(SymmetricComplex(2), "0", "-x*y", nvars=2)
    for ch in lift_multi(p):
        assert LiftChart.from_json(ch.to_json()) == ch
