import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import S
from invlift.errors import DimensionMismatch, InputError, MembershipError, UnsupportedFamily
from invlift.invariants import (
    InvariantSystem,
    Membership,
    SignedPermReal,
    SymmetricComplex,
    SymmetricRealTraceZero,
    gram_matrix,
    membership_test,
    remove_fixed_points,
    roots_from_invariants,
    sigma,
    sigma_eval,
    slice_split,
)
from invlift.scalar import Scalar

rat = st.fractions(min_value=-4, max_value=4, max_denominator=6)


def _s(*values):
    return [Scalar(v) for v in values]


# -- systems --------------------------------------------------------------

@pytest.mark.parametrize("sys,degrees,D", [
    (SymmetricComplex(3), (1, 2, 3), 6),
    (SignedPermReal(3), (2, 4, 6), 48),
    (SymmetricRealTraceZero(4), (2, 3, 4), 24),
])
def test_degrees(sys, degrees, D):
    assert sys.degrees == degrees
    assert sys.D == D


def test_descriptor_round_trip():
    sys = InvariantSystem.from_json({"family": "signed_perm_real", "n": 2})
    assert sys == SignedPermReal(2)
    assert InvariantSystem.from_json(sys.to_json()) == sys


def test_unknown_family():
    with pytest.raises(UnsupportedFamily):
        InvariantSystem.from_json({"family": "e8", "n": 8})


# -- sigma --------------------------------------------------------------

def test_sigma_examples():
    assert sigma_eval(SymmetricComplex(2), _s(1, 2)) == tuple(_s(3, 2))
    assert sigma_eval(SymmetricComplex(3), _s(0, 0, 0)) == tuple(_s(0, 0, 0))
    assert sigma_eval(SignedPermReal(2), _s(1, 2)) == tuple(_s(5, 4))


def test_sigma_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        sigma_eval(SymmetricComplex(2), _s(1, 2, 3))


def test_trace_zero_requires_sum_zero():
    with pytest.raises(InputError):
        sigma_eval(SymmetricRealTraceZero(3), _s(1, 1, 1))
    assert sigma_eval(SymmetricRealTraceZero(3), _s(1, -1, 0)) == tuple(_s(2, 0))


@given(rat, rat)
def test_real_first_generator_is_squared_norm(a, b):
    v = _s(a, b, -a - b)
    norm = sum((c * c for c in v), Scalar(0))
    assert sigma_eval(SymmetricRealTraceZero(3), v)[0] == norm
    assert sigma_eval(SignedPermReal(3), v)[0] == norm


# -- roots ---------------------------------------------------------------

def test_roots_examples():
    assert roots_from_invariants(SymmetricComplex(2), _s(0, -1)) == _s(1, -1)
    assert roots_from_invariants(SymmetricComplex(2), _s(2, 1)) == _s(1, 1)
    assert roots_from_invariants(SignedPermReal(1), _s(4)) == _s(2, -2)


def test_roots_reject_non_members():
    with pytest.raises(MembershipError):
        roots_from_invariants(SignedPermReal(1), _s(-1))


@given(st.lists(st.tuples(rat, rat), min_size=1, max_size=4))
def test_root_round_trip_complex(points):
    v = [Scalar(a, b) for a, b in points]
    sys = SymmetricComplex(len(v))
    roots = roots_from_invariants(sys, sigma_eval(sys, v))
    for x in v:
        assert any(r.contains(x) for r in roots)


@given(st.lists(rat, min_size=1, max_size=3))
def test_root_round_trip_signed(values):
    v = _s(*values)
    sys = SignedPermReal(len(v))
    roots = roots_from_invariants(sys, sigma_eval(sys, v))
    for x in v:
        assert any(r.contains(x) for r in roots) and any(r.contains(-x) for r in roots)


@given(st.lists(st.tuples(rat, rat), min_size=1, max_size=3))
def test_roots_reproduce_invariants(points):
    v = [Scalar(a, b) for a, b in points]
    sys = SymmetricComplex(len(v))
    z = sigma_eval(sys, v)
    back = sigma_eval(sys, roots_from_invariants(sys, z))
    assert all(b.contains(c) for b, c in zip(back, z))


# -- fixed points and slices ----------------------------------------------

def test_remove_fixed_points_examples():
    red = remove_fixed_points(SymmetricComplex(2), (S("2*t"), S("t^2")))
    assert red.fixed == S("t")
    assert all(r.is_zero() for r in red.reduced)
    red = remove_fixed_points(SymmetricComplex(2), (S("0", nvars=1), S("-t")))
    assert red.fixed.is_zero() and red.reduced[1] == S("-t")
    red = remove_fixed_points(SymmetricComplex(3), (S("3*t"), S("3*t^2"), S("t^3")))
    assert red.fixed == S("t") and all(r.is_zero() for r in red.reduced)


def test_remove_fixed_points_then_readd_diagonal():
    sys = SymmetricComplex(3)
    roots = [S("t+t^2"), S("2*t"), S("-t^3")]
    f = sigma(sys, roots)
    red = remove_fixed_points(sys, f)
    shifted = [r - red.fixed for r in roots]
    assert tuple(sigma(sys, shifted))[1:] == tuple(red.reduced)[1:]
    assert tuple(sigma(sys, [r + red.fixed for r in shifted])) == tuple(f)


def test_remove_fixed_points_only_complex():
    with pytest.raises(UnsupportedFamily):
        remove_fixed_points(SignedPermReal(1), (S("t^2"),))


def test_slice_split_examples():
    two = slice_split(SymmetricComplex(2), _s(0, -1))
    assert [(c.size, c.center) for c in two] == [(1, Scalar(1)), (1, Scalar(-1))]
    three = slice_split(SymmetricComplex(3), sigma_eval(SymmetricComplex(3), _s(1, 1, 5)))
    assert [(c.size, c.center) for c in three] == [(1, Scalar(5)), (2, Scalar(1))]
    signed = slice_split(SignedPermReal(2), _s(5, 4))
    assert sorted(complex(c.center).real for c in signed) == [1.0, 2.0]
    assert all(c.size == 1 for c in signed)


@given(st.lists(st.integers(-3, 3), min_size=2, max_size=5))
def test_slice_sizes_sum_to_n(values):
    sys = SymmetricComplex(len(values))
    z = sigma_eval(sys, _s(*values))
    if all(c.is_zero() for c in z):
        return
    clusters = slice_split(sys, z)
    assert sum(c.size for c in clusters) == sys.n
    assert sorted(c.size for c in clusters) == sorted(values.count(v) for v in set(values))


# -- Gram matrix and membership ---------------------------------------------

def test_gram_examples():
    x, y = Scalar(Fraction(1, 2)), Scalar(3)
    assert gram_matrix(SignedPermReal(1), [x]) == [[Scalar(4) * x * x]]
    x2, y2 = x * x, y * y
    expected = [[Scalar(4) * (x2 + y2), Scalar(8) * x2 * y2],
                [Scalar(8) * x2 * y2, Scalar(4) * x2 * y2 * (x2 + y2)]]
    assert gram_matrix(SignedPermReal(2), [x, y]) == expected
    zero = gram_matrix(SymmetricRealTraceZero(3), _s(0, 0, 0))
    assert all(c.is_zero() for row in zero for c in row)


def test_gram_complex_rejected():
    with pytest.raises(UnsupportedFamily):
        gram_matrix(SymmetricComplex(2), _s(1, 2))


@pytest.mark.parametrize("sys,z,verdict", [
    (SignedPermReal(1), (1,), Membership.INSIDE),
    (SignedPermReal(1), (-1,), Membership.OUTSIDE),
    (SignedPermReal(1), (0,), Membership.INSIDE),
    (SignedPermReal(2), (2, 1), Membership.INSIDE),
    (SignedPermReal(2), (1, 1), Membership.OUTSIDE),
    (SignedPermReal(2), (2, -1), Membership.OUTSIDE),
    (SymmetricRealTraceZero(3), (-1, 0), Membership.OUTSIDE),
])
def test_membership_examples(sys, z, verdict):
    assert membership_test(sys, _s(*z)) is verdict


@given(st.lists(rat, min_size=1, max_size=3))
def test_images_are_never_outside(values):
    for sys in (SignedPermReal(len(values)),):
        assert membership_test(sys, sigma_eval(sys, _s(*values))) is Membership.INSIDE
    tz = _s(*values) + [-sum((Scalar(v) for v in values), Scalar(0))]
    sys = SymmetricRealTraceZero(len(tz))
    assert membership_test(sys, sigma_eval(sys, tz)) is Membership.INSIDE


def test_ball_input_verdicts():
    sys = SignedPermReal(1)
    assert membership_test(sys, [Scalar(1).to_ball(64)]) is Membership.INSIDE
    tiny = Scalar(0).widen(Fraction(1, 10**6)).to_ball(64)
    assert membership_test(sys, [tiny]) is Membership.INDETERMINATE


def test_membership_complex_rejected():
    with pytest.raises(UnsupportedFamily):
        membership_test(SymmetricComplex(2), _s(0, 1))


def test_random_exterior_points_rejected():
    rng = random.Random(7)
    sys = SignedPermReal(2)
    for _ in range(50):
        a = Fraction(rng.randint(1, 50), rng.randint(1, 9))
        b = a * a / 4 + Fraction(rng.randint(1, 40), rng.randint(1, 9))
        assert membership_test(sys, [Scalar(a), Scalar(b)]) is Membership.OUTSIDE
