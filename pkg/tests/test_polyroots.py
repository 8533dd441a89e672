import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import S
from invlift.errors import InputError
from invlift.hensel import base_factor, hensel_factor
from invlift.polyroots import (
    isolate_roots,
    peval,
    poly_from_roots,
    real_roots,
    roots_list,
    squarefree_decomposition,
)
from invlift.scalar import Scalar
from invlift.series import TruncatedSeries

small = st.integers(-6, 6)


def _coeffs(values):
    return [Scalar(v) for v in values]


def test_double_root_is_one_exact_cluster():
    clusters = isolate_roots(poly_from_roots([Scalar(1), Scalar(1), Scalar(-2)]))
    assert [(c.multiplicity, c.exact_multiplicity) for c in clusters] == [(2, True), (1, True)]
    assert clusters[0].center == Scalar(1)


def test_rational_roots_are_snapped_exact():
    roots = roots_list(_coeffs([-1, 0, 1]))
    assert roots == [Scalar(1), Scalar(-1)]
    assert all(r.is_exact for r in roots)


def test_irrational_roots_against_mpmath():
    p = _coeffs([-2, 0, 0, 1])
    oracle = mpmath.polyroots([1, 0, 0, -2], maxsteps=200, extraprec=200)
    enclosures = roots_list(p, 128)
    for z in oracle:
        assert any(abs(complex(r) - complex(z)) <= float(r.rad) + 1e-30 for r in enclosures)


def test_descending_order():
    roots = roots_list(poly_from_roots(_coeffs([3, -1, 2])))
    assert [complex(r).real for r in roots] == [3, 2, -1]


@given(st.lists(small, min_size=1, max_size=5), st.lists(small, min_size=0, max_size=2))
def test_roots_of_products_of_linear_factors(reals, imags):
    roots = [Scalar(r) for r in reals] + [Scalar(0, i) for i in imags if i]
    got = roots_list(poly_from_roots(roots))
    assert sorted((complex(r).real, complex(r).imag) for r in got) == \
        sorted((complex(r).real, complex(r).imag) for r in roots)


@given(st.lists(st.fractions(-3, 3, max_denominator=7), min_size=2, max_size=6))
def test_enclosures_contain_mpmath_roots(cs):
    p = [Scalar(c) for c in cs] + [Scalar(1)]
    oracle = mpmath.polyroots([1] + [mpmath.mpf(c.numerator) / c.denominator for c in reversed(cs)],
                              maxsteps=400, extraprec=300)
    clusters = isolate_roots(p, 128)
    assert sum(c.multiplicity for c in clusters) == len(cs)
    for z in oracle:
        assert any(abs(complex(c.center) - complex(z)) <= float(c.center.rad) + 1e-12
                   for c in clusters)


def test_real_roots_ascending():
    got = real_roots(_coeffs([2, -1, -2, 1]))
    assert [float(complex(r).real) for r in got] == [-1.0, 1.0, 2.0]


def test_squarefree_decomposition():
    p = poly_from_roots([Scalar(1), Scalar(1), Scalar(1), Scalar(2)])
    parts = squarefree_decomposition(p)
    assert [(len(q) - 1, k) for q, k in parts] == [(1, 1), (1, 3)]
    assert parts[1][0] == _coeffs([-1, 1])


def test_constant_polynomial_rejected():
    with pytest.raises(InputError):
        isolate_roots(_coeffs([3]))


def test_hensel_factors_multiply_back():
    # z^2 - (t+t^2) z + t^3 = (z - t)(z - t^2): at t = 0 both roots vanish, so
    # split the shifted polynomial (z-1-t)(z+1-t^2) instead
    N = 8
    a = S("1+t", trunc=N)
    b = S("-1+t^2", trunc=N)
    coeffs = [a * b, -(a + b), TruncatedSeries.const(Scalar(1), 1, N)]
    f1, f2 = hensel_factor(coeffs, [base_factor(Scalar(1), 1), base_factor(Scalar(-1), 1)], N)
    assert -f1[0] == a
    assert -f2[0] == b


def test_peval():
    assert peval(_coeffs([1, 2, 3]), Scalar(2)) == Scalar(17)
