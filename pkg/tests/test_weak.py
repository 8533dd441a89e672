import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import S
from invlift.desingularizer import chain_forward, resolve_nc_2d
from invlift.errors import CoverageGap, InputError, MissingChart
from invlift.invariants import SignedPermReal, SymmetricComplex, sigma_eval
from invlift.lifter import LiftChart, LiftProblem, lift, lift_curve, lift_multi
from invlift.scalar import Scalar
from invlift.weak import (
    FunctionLift,
    VerificationReport,
    WeakLift,
    assemble_weak_lift,
    glue_blow_down,
    glue_power_substitution,
    patch_charts,
    section_map,
    verify,
)

SC2 = SymmetricComplex(2)


def _square_root_curve():
    p = LiftProblem(SC2, (S("0", nvars=1), S("-t")))
    return p, lift_curve(p)


def _values(wl, x):
    r = wl.evaluate(x)
    return r if r == "E" else r[1]


# -- power substitutions -----------------------------------------------------------

def test_glue_square_root_orthants():
    p, charts = _square_root_curve()
    wl = glue_power_substitution(charts, (2,), (1,), data=p.f)
    assert [(s.start, s.kind) for s in wl.E] == [((0.0,), "power-axis")]
    assert _values(wl, (0.0,)) == "E"
    for x in (0.25, -0.25, 0.81, -0.04):
        vals = _values(wl, (x,))
        r = math.sqrt(abs(x))
        assert sorted(abs(v) for v in vals) == pytest.approx([r, r])
        assert vals[0] + vals[1] == pytest.approx(0)
        # sign convention per side: real values for x > 0, imaginary for x < 0
        assert all(abs((v.imag if x > 0 else v.real)) < 1e-12 for v in vals)


def test_glue_identity_substitution():
    p = LiftProblem(SC2, (S("t+t^2"), S("t^3")))
    charts = lift_curve(p)
    wl = glue_power_substitution(charts, (1,), (1,), data=p.f)
    assert wl.E == []
    vals = _values(wl, (0.5,))
    assert sorted(v.real for v in vals) == pytest.approx([0.25, 0.5])


def test_glue_four_orthants():
    p = LiftProblem(SC2, (S("0", nvars=2), S("-x*y")))
    charts = lift_multi(p)
    wl = glue_power_substitution(charts, (2, 2), (1, 1), data=p.f)
    assert len(wl.charts) == 4
    assert wl.e_measure() == pytest.approx(4.0)
    for x in [(0.3, 0.2), (-0.3, 0.2), (0.3, -0.7), (-0.5, -0.5)]:
        idx, u, _ = wl._router.route(x)
        assert chain_forward(wl.charts[idx].chain, u) == pytest.approx(x)


def test_glue_missing_epsilon():
    _, charts = _square_root_curve()
    with pytest.raises(MissingChart):
        glue_power_substitution(charts[:1], (2,), (1,))
    with pytest.raises(InputError):
        glue_power_substitution(charts, (3,), (1,))


@given(st.floats(min_value=-1, max_value=1, allow_nan=False).filter(lambda v: v != 0))
def test_orthant_maps_invert(x):
    p, charts = _square_root_curve()
    wl = glue_power_substitution(charts, (2,), (1,), data=p.f)
    idx, u, _ = wl._router.route((x,))
    assert chain_forward(wl.charts[idx].chain, u)[0] == pytest.approx(x, rel=1e-12, abs=1e-15)


# -- blow-downs ------------------------------------------------------------------

def test_blow_down_identity_tree():
    p = LiftProblem(SC2, (S("0", nvars=2), S("-x^2*y^2")))
    tree = resolve_nc_2d(S("x^2*y^2"))
    assert tree.depth() == 0
    wl = glue_blow_down(tree, lift(p).charts, data=p.f)
    assert wl.E == []
    vals = _values(wl, (0.5, 0.5))
    assert sorted(v.real for v in vals) == pytest.approx([-0.25, 0.25])


def test_blow_down_point_center():
    p = LiftProblem(SignedPermReal(1), (S("x^2+y^2"),))
    result = lift(p)
    (tree,) = result.resolutions
    wl = glue_blow_down(tree, result.charts, data=p.f)
    kinds = sorted(s.kind for s in wl.E)
    assert kinds.count("center") == 1
    assert _values(wl, (0.0, 0.0)) == "E"
    # rays into the center: the value is the Euclidean norm off E
    for angle in (0.1, 0.7, 1.3, 2.9, 4.0):
        for r in (0.5, 0.1, 0.01):
            x = (r * math.cos(angle), r * math.sin(angle))
            vals = _values(wl, x)
            if vals != "E":
                assert abs(vals[0]) == pytest.approx(r, rel=1e-6)
    assert math.isfinite(wl.e_measure())


def test_blow_down_cusp_tree():
    p = LiftProblem(SignedPermReal(1), (S("x^4+y^2"),))
    result = lift(p)
    tree = result.resolutions[0]
    wl = glue_blow_down(tree, result.charts, data=p.f)
    assert math.isfinite(wl.e_measure()) and wl.e_measure() > 0
    report = verify(wl, levels=[3, 4, 5])
    assert report.verdicts["residual"] == "pass"


def test_blow_down_coverage_gap():
    p = LiftProblem(SignedPermReal(1), (S("x^2+y^2"),))
    result = lift(p)
    with pytest.raises(CoverageGap):
        glue_blow_down(result.resolutions[0], result.charts[:1], data=p.f)


# -- patching --------------------------------------------------------------------

def _piece(center, lift_texts, data_texts):
    charts = [LiftChart(SC2, (), tuple(S(t) for t in lift_texts))]
    return WeakLift(SC2, "charts", (Fraction(1, 2),), (Fraction(center),),
                    data=tuple(S(t, nvars=1) for t in data_texts), charts=charts)


def test_patch_single_piece():
    a = _piece(0, ["1+t", "-1-t"], ["0", "-1-2*t-t^2"])
    assert patch_charts([a]) is a


@pytest.mark.parametrize("swap,jumps", [(False, 0), (True, 1)])
def test_patch_two_pieces(swap, jumps):
    a = _piece(0, ["1+t", "-1-t"], ["0", "-1-2*t-t^2"])
    lifted = ["3/2+t", "-3/2-t"]
    b = _piece(Fraction(1, 2), lifted[::-1] if swap else lifted, ["0", "-9/4-3*t-t^2"])
    wl = patch_charts([a, b])
    assert [(s.start, s.kind) for s in wl.E] == [((0.25,), "patch-seam")]
    assert (wl.center, wl.box) == ((Fraction(1, 4),), (Fraction(3, 4),))
    # selection property: every value is one of the pieces' values
    for x in (0.1, 0.3):
        vals = _values(wl, (x,))
        assert vals in (_values(a, (x,)), _values(b, (x,)))
    report = verify(wl, levels=[4, 6])
    assert all(lv.jump_count == jumps for lv in report.levels)
    if swap:
        # jump across the seam: |(1.25, -1.25) - (-1.25, 1.25)| = 2.5 sqrt 2
        assert report.levels[-1].jump_max == pytest.approx(2.5 * math.sqrt(2), rel=0.05)
    assert report.verdicts["residual"] == "pass"


# -- end-to-end --------------------------------------------------------------------

def test_assemble_square_root_curve():
    p, _ = _square_root_curve()
    wl, report = assemble_weak_lift(p, levels=[8, 10, 12])
    assert report.verdicts["residual"] == "pass"
    assert report.residual_exact > 0
    assert report.gradient_integral == pytest.approx(2.0, rel=1e-3)
    assert report.verdicts["integral"] == "consistent"
    assert report.verdicts["sbv"] == "pass"
    assert wl.e_measure() == 1.0


def test_assemble_real_square_is_lipschitz():
    p = LiftProblem(SignedPermReal(1), (S("t^2"),))
    wl, report = assemble_weak_lift(p)
    assert wl.E == []
    assert report.verdicts["lipschitz"] == "pass"


def test_assemble_surface_square_root():
    p = LiftProblem(SC2, (S("0", nvars=2), S("-x", nvars=2)))
    wl, report = assemble_weak_lift(p, levels=[3, 4, 5, 6])
    assert report.gradient_integral == pytest.approx(4.0, rel=1e-3)
    assert wl.e_measure() == pytest.approx(2.0)
    assert report.verdicts["sbv"] == "pass"


def test_broken_lift_fails_lipschitz():
    broken = FunctionLift(SignedPermReal(1), (1,), lambda x: (math.sqrt(abs(x[0])),),
                          lambda x: (abs(x[0]),))
    report = verify(broken)
    assert report.verdicts["lipschitz"] == "fail"


def test_wrong_lift_fails_residual():
    wrong = FunctionLift(SC2, (1,), lambda x: (x[0], -x[0]), lambda x: (0.0, -x[0]))
    assert verify(wrong).verdicts["residual"] == "fail"


# -- sections --------------------------------------------------------------------

@pytest.mark.parametrize("sys,z,expected", [
    (SymmetricComplex(1), [Fraction(1, 3)], [Scalar(Fraction(1, 3))]),
    (SC2, [0, -1], [Scalar(1), Scalar(-1)]),
    (SignedPermReal(1), [4], [Scalar(2)]),
])
def test_section_examples(sys, z, expected):
    wl, report = section_map(sys, box=[Fraction(1, 8)] * sys.ngens, center=z, grid=4, levels=[2, 3])
    vals, image = wl.certified_value(tuple(Fraction(c) for c in z))
    assert list(vals) == expected
    assert tuple(sigma_eval(sys, list(vals))) == tuple(image)
    assert report.verdicts["residual"] == "pass"


def test_section_marks_discriminant_as_E():
    wl, _ = section_map(SC2, box=[1, 1], grid=4, levels=[2, 3])
    assert wl.certified_value((Fraction(2), Fraction(1))) == "E"


# -- serialization ---------------------------------------------------------------

def test_weak_lift_json_round_trip():
    p, _ = _square_root_curve()
    wl, report = assemble_weak_lift(p, levels=[6, 8])
    assert WeakLift.from_json(wl.to_json()) == wl
    again = VerificationReport.from_json(report.to_json())
    assert again.to_json() == report.to_json()
    a = _piece(0, ["1+t", "-1-t"], ["0", "-1-2*t-t^2"])
    b = _piece(Fraction(1, 2), ["3/2+t", "-3/2-t"], ["0", "-9/4-3*t-t^2"])
    patched = patch_charts([a, b])
    assert WeakLift.from_json(patched.to_json()) == patched
