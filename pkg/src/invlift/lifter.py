"""Recursive lifting of invariant-valued maps through charts.

The recursion works on three kinds of data:

* complex S_m: elementary symmetric values e_1..e_m of the roots;
* B_m: values e_j(x_1^2, ..., x_m^2);
* real S_m: elementary symmetric values of m real roots.

Each call either splits the fiber into clusters (data nonzero at the
origin), or makes the data divisible by a monomial (via a power substitution
in complex mode, or directly in real mode), recurses, and multiplies back.
Every call records a termination measure (isotropy group order, order of
the data at the origin) which must strictly decrease lexicographically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from .desingularizer import (
    DEFAULT_BUDGET,
    DEFAULT_DEPTH,
    ChartMap,
    apply_chart,
    chain_from_json,
    chain_to_json,
    resolve_nc_2d,
)
from .errors import (
    BudgetExceeded,
    DimensionMismatch,
    Indeterminate,
    InputError,
    InvliftError,
    MembershipError,
    NotNormalCrossings,
    PrecisionExhausted,
    TruncationUnderflow,
    Unsupported,
    VerificationFailed,
)
from .hensel import base_factor, hensel_factor
from .invariants import (
    Family,
    InvariantSystem,
    Membership,
    e_from_monic,
    e_from_p,
    fiber_polynomial,
    membership_test,
    monic_from_e,
    p_from_e,
    sigma,
    tschirnhausen,
)
from .polyroots import isolate_roots, realify
from .scalar import DEFAULT_PRECISION, ONE, Scalar
from .series import (
    INF,
    Comparison,
    TruncatedSeries,
    divide_by_coordinate,
    monomial_order_compare,
    series_from_json,
    series_order,
    series_to_json,
    substitute_power,
)


@dataclass
class LiftOptions:
    precision: int = DEFAULT_PRECISION
    truncation: int = 8
    budget: int = DEFAULT_BUDGET
    depth: int = DEFAULT_DEPTH
    floor: int = 4
    box: tuple = (Fraction(1), Fraction(1))

    def __post_init__(self):
        if not 16 <= self.precision <= 1 << 16:
            raise InputError("precision must be between 16 and 65536 bits")
        if self.truncation < 2:
            raise InputError("truncation must be at least 2")
        if self.budget < 1 or self.depth < 1:
            raise InputError("budgets must be positive")
        if self.floor < 1:
            raise InputError("truncation floor must be at least 1")


@dataclass
class LiftProblem:
    system: InvariantSystem
    f: tuple
    options: LiftOptions = field(default_factory=LiftOptions)

    def __post_init__(self):
        self.f = tuple(self.f)
        if len(self.f) != self.system.ngens:
            raise DimensionMismatch(f"{self.system.family.value}({self.system.n}) needs "
                                    f"{self.system.ngens} components, got {len(self.f)}")
        nv = {g.nvars for g in self.f} or {1}
        if len(nv) != 1:
            raise DimensionMismatch("all components must have the same number of variables")

    @property
    def nvars(self):
        return self.f[0].nvars if self.f else 1

    @property
    def mode(self):
        return "real" if self.system.is_real else "complex"


@dataclass
class LiftChart:
    system: InvariantSystem
    chain: tuple
    lift: tuple
    monomials: tuple = ()
    box: tuple = (Fraction(1), Fraction(1))
    measures: tuple = ()

    @property
    def basepoint(self):
        return tuple(s.constant() for s in self.lift)

    @property
    def trunc(self):
        return min(s.trunc for s in self.lift) if self.lift else INF

    def power_maps(self):
        return [m for m in self.chain if m.kind == "power"]

    def to_json(self):
        return {
            "system": self.system.to_json(),
            "chain": chain_to_json(self.chain),
            "lift": [series_to_json(s) for s in self.lift],
            "monomials": [list(m) for m in self.monomials],
            "box": [str(b) for b in self.box],
            "measures": [list(m) for m in self.measures],
        }

    @staticmethod
    def from_json(obj):
        return LiftChart(InvariantSystem.from_json(obj["system"]), chain_from_json(obj["chain"]),
                         tuple(series_from_json(s) for s in obj["lift"]),
                         tuple(tuple(m) for m in obj.get("monomials", [])),
                         tuple(Fraction(b) for b in obj.get("box", ["1", "1"])),
                         tuple(tuple(m) for m in obj.get("measures", [])))


@dataclass
class _Branch:
    chain: tuple
    roots: tuple
    monomials: tuple = ()
    measures: tuple = ()


@dataclass
class LeafCheck:
    """Record of the per-leaf exponent checks (comparability, real orders)."""

    kind: str
    alphas: tuple
    delta: tuple | None
    ok: bool
    detail: str = ""


def check_real_orders(sys: InvariantSystem, alphas):
    """Real-mode order condition: alpha_1 = 2 delta and alpha_j >= d_j delta.

    ``alphas`` lists the exponent of each generator (int or tuple), None for
    identically zero components.  Returns ``(delta, verdict)``.
    """
    degs = sys.degrees
    if not alphas or alphas[0] is None:
        return None, False
    a1 = (alphas[0],) if isinstance(alphas[0], int) else tuple(alphas[0])
    if any(a % 2 for a in a1):
        return None, False
    delta = tuple(a // 2 for a in a1)
    ok = True
    for d, a in zip(degs, alphas):
        if a is None:
            continue
        a = (a,) if isinstance(a, int) else tuple(a)
        if any(ai < d * di for ai, di in zip(a, delta)):
            ok = False
    return delta, ok


def _const(c, nvars):
    return TruncatedSeries.const(c, nvars)


class _Lifter:
    def __init__(self, problem: LiftProblem):
        self.p = problem
        self.opts = problem.options
        self.q = problem.nvars
        self.one = TruncatedSeries.const(ONE, self.q)
        self.checks: list = []
        self.measure_pairs: list = []
        self.resolutions: list = []
        self.depth = 0

    # -- helpers --------------------------------------------------------
    def _zero(self):
        return TruncatedSeries.zero(self.q)

    def _hensel_trunc(self, data):
        finite = [s.trunc for s in data if s.trunc != INF]
        return min(finite) if finite else self.opts.truncation

    def _check_floor(self, data):
        for s in data:
            if s.trunc != INF and s.trunc < self.opts.floor:
                raise TruncationUnderflow(
                    f"valid order dropped to {s.trunc} (< floor {self.opts.floor}); "
                    "raise the input truncation order")

    def _enter(self, measure, parent):
        if parent is not None:
            self.measure_pairs.append((parent, measure))
            if not measure < parent:
                raise InvliftError(f"termination measure did not decrease: {parent} -> {measure}")
        self.depth += 1
        if self.depth > 4 * self.opts.depth:
            raise BudgetExceeded("lifting recursion too deep")

    def _leave(self):
        self.depth -= 1

    def _multiply_back(self, sub, exp):
        """Multiply sub-branch roots by x^exp pulled back through the sub-chain."""
        mono = apply_chart(sub.chain, TruncatedSeries.monomial(exp, ONE))
        if len(mono.coeffs) == 1:
            (e, c), = mono.coeffs.items()
            return tuple(r.mul_monomial(e, c) for r in sub.roots)
        return tuple(r * mono for r in sub.roots)

    def _combine(self, parts):
        branches = [_Branch((), ())]
        for fn, data in parts:
            new = []
            for b in branches:
                pulled = [apply_chart(b.chain, s) for s in data]
                for sb in fn(pulled):
                    prev = tuple(apply_chart(sb.chain, r) for r in b.roots)
                    new.append(_Branch(b.chain + sb.chain, prev + sb.roots,
                                       b.monomials + sb.monomials, b.measures + sb.measures))
            if len(new) > self.opts.budget:
                raise BudgetExceeded(f"more than {self.opts.budget} charts")
            branches = new
        return branches

    def _clusters(self, poly_consts, real):
        clusters = isolate_roots(poly_consts, self.opts.precision)
        for c in clusters:
            if c.multiplicity > 1 and not c.exact_multiplicity:
                raise PrecisionExhausted("cannot separate a root cluster at working precision")
            if real:
                center = c.center
                if center.im and (center.is_exact or abs(center.im) > center.rad):
                    raise MembershipError("real-mode fiber has non-real roots")
                mirror = center.conjugate()
                if not center.is_exact and any(o is not c and o.center.overlaps(mirror)
                                               for o in clusters):
                    raise PrecisionExhausted("cannot certify that a root is real")
                c.center = realify(center)
        return clusters

    def _split_factors(self, poly, clusters):
        """Hensel-factor the fiber polynomial along the clusters."""
        N = self._hensel_trunc(poly)
        bases = [base_factor(c.center, c.multiplicity) for c in clusters]
        return hensel_factor(poly, bases, N)

    # -- complex S_m --------------------------------------------------
    def lift_sc(self, e, parent=None, coincident=False):
        m = len(e)
        if m == 1:
            return [_Branch((), (e[0],))]
        f0 = e[0] * Scalar(Fraction(1, m))
        g = tschirnhausen(list(e), f0, self.one)
        if coincident:
            g = [s - _const(s.constant(), self.q) for s in g]
        if all(s.is_zero() for s in g):
            return [_Branch((), (f0,) * m)]
        out = []
        for b in self._lift_sc_reduced(g, parent):
            shift = apply_chart(b.chain, f0)
            out.append(_Branch(b.chain, tuple(r + shift for r in b.roots), b.monomials, b.measures))
        return out

    def _lift_sc_reduced(self, g, parent):
        m = len(g)
        consts = [s.constant() for s in g]
        if any(c.certainly_nonzero() for c in consts):
            measure = (math.factorial(m), 0)
            self._enter(measure, parent)
            try:
                poly = monic_from_e(g, self.one)
                clusters = self._clusters([s.constant() for s in poly], real=False)
                factors = self._split_factors(poly, clusters)
                parts = []
                for c, fac in zip(clusters, factors):
                    sub_e = e_from_monic(fac)
                    parts.append((lambda d, k=c.multiplicity: self.lift_sc(
                        d, measure, coincident=k > 1), sub_e))
                branches = self._combine(parts)
            finally:
                self._leave()
            return [_Branch(b.chain, b.roots, b.monomials, (measure,) + b.measures) for b in branches]
        if any(not c.is_zero() for c in consts):
            raise Indeterminate("cannot decide whether the fiber datum vanishes")
        if self.q == 1:
            return self._divide_sc_curve(g, parent)
        return self._divide_sc_surface(g, parent)

    def _divide_sc_curve(self, g, parent):
        m = len(g)
        D = math.factorial(m)
        orders = [None if s.is_zero() else series_order(s) for s in g]
        alpha = min((D // (j + 1)) * o for j, o in enumerate(orders) if o is not None)
        measure = (D, alpha)
        self._enter(measure, parent)
        try:
            frac = Fraction(alpha, D)
            beta, gamma = frac.numerator, frac.denominator
            eps_set = [0] if gamma % 2 else [0, 1]
            branches = []
            for eps in eps_set:
                psi = ChartMap.power((gamma,), (eps,))
                h = []
                for j, s in enumerate(g):
                    t = substitute_power(s, gamma, eps)
                    h.append(divide_by_coordinate(t, 0, (j + 1) * beta) if not t.is_zero()
                             else TruncatedSeries.zero(1, max(1, t.trunc - (j + 1) * beta)
                                                       if t.trunc != INF else INF))
                self._check_floor([s for s in h if not s.is_zero()])
                for sb in self._lift_sc_reduced(h, measure):
                    roots = self._multiply_back(sb, (beta,))
                    branches.append(_Branch((psi,) + sb.chain, roots, ((beta,),) + sb.monomials,
                                            (measure,) + sb.measures))
        finally:
            self._leave()
        return branches

    def _tracked_complex(self, g):
        degs = [j + 1 for j in range(len(g))]
        nz = [j for j, s in enumerate(g) if not s.is_zero()]
        L = math.lcm(*[degs[j] for j in nz])
        powers = {j: g[j] ** (L // degs[j]) for j in nz}
        tracked = [powers[j] for j in nz]
        labels = [("F", j) for j in nz]
        for a in range(len(nz)):
            for b in range(a + 1, len(nz)):
                diff = powers[nz[a]] - powers[nz[b]]
                if not diff.is_zero():
                    tracked.append(diff)
                    labels.append(("diff", nz[a], nz[b]))
        return L, nz, tracked, labels

    def _leaves_for(self, tracked):
        """Resolution leaves (chain, box) for the tracked set, or identity if already nc."""
        try:
            for t in tracked:
                series_order(t)
            return [((), tuple(self.opts.box))]
        except NotNormalCrossings:
            pass
        if not all(t.trunc == INF for t in tracked):
            raise Unsupported("two-variable data that is not normal crossings must be polynomial "
                              "to be resolved")
        tree = resolve_nc_2d(tracked, self.opts.budget, self.opts.depth, self.opts.box,
                             self.opts.precision, trunc=2 * self.opts.truncation)
        self.resolutions.append(tree)
        return [(leaf.chain, leaf.box) for leaf in tree.leaves()]

    def _divide_sc_surface(self, g, parent):
        m = len(g)
        L, nz, tracked, labels = self._tracked_complex(g)
        base_order = min((L // (j + 1)) * min(sum(e) for e in g[j].coeffs) for j in nz)
        measure = (math.factorial(m), base_order)
        self._enter(measure, parent)
        branches = []
        try:
            for chain, box in self._leaves_for(tracked):
                pulled = [apply_chart(chain, s) for s in g]
                alphas = {}
                for j in nz:
                    a = series_order(pulled[j])
                    alphas[j] = tuple((L // (j + 1)) * x for x in a)
                # comparability of the tracked exponents whose difference is tracked
                ok = True
                for lab in labels:
                    if lab[0] == "diff":
                        verdict = monomial_order_compare(alphas[lab[1]], alphas[lab[2]])
                        if verdict is Comparison.INCOMPARABLE:
                            ok = False
                alpha = tuple(min(alphas[j][k] for j in nz) for k in range(2))
                if alpha not in alphas.values():
                    ok = False
                self.checks.append(LeafCheck("comparability", tuple(alphas[j] for j in nz), None, ok))
                if not ok:
                    raise InvliftError("tracked exponents are not comparable on a resolved leaf")
                fr = [Fraction(a, L) for a in alpha]
                beta = tuple(x.numerator for x in fr)
                gamma = tuple(x.denominator for x in fr)
                eps_choices = [[0] if gk % 2 else [0, 1] for gk in gamma]
                for eps in product(*eps_choices):
                    psi = ChartMap.power(gamma, eps)
                    h = []
                    for j, s in enumerate(pulled):
                        t = substitute_power(s, gamma, eps)
                        if not t.is_zero():
                            t = divide_by_coordinate(t, 0, (j + 1) * beta[0])
                            t = divide_by_coordinate(t, 1, (j + 1) * beta[1])
                        h.append(t)
                    self._check_floor([s for s in h if not s.is_zero()])
                    for sb in self._lift_sc_reduced(h, measure):
                        roots = self._multiply_back(sb, beta)
                        branches.append(_Branch(tuple(chain) + (psi,) + sb.chain, roots,
                                                (beta,) + sb.monomials, (measure,) + sb.measures))
                        if len(branches) > self.opts.budget:
                            raise BudgetExceeded(f"more than {self.opts.budget} charts")
        finally:
            self._leave()
        return branches

    # -- B_m ----------------------------------------------------------
    def lift_bn(self, s, parent=None, coincident=False):
        m = len(s)
        if m == 0:
            return [_Branch((), ())]
        if coincident:
            s = [x - _const(x.constant(), self.q) for x in s]
        if all(x.is_zero() for x in s):
            return [_Branch((), (self._zero(),) * m)]
        c1 = s[0].constant()
        if c1.certainly_nonzero():
            if c1.sign_re() != 1:
                raise MembershipError("squared norm is negative at the origin")
            return self._split_bn(s, parent)
        if not c1.is_zero():
            raise Indeterminate("cannot decide whether the squared norm vanishes")
        return self._divide_real(s, _signed_perm_degrees(m), parent,
                                 lambda h, meas: self.lift_bn(h, meas), 2 ** m * math.factorial(m))

    def _split_bn(self, s, parent):
        m = len(s)
        measure = (2 ** m * math.factorial(m), 0)
        self._enter(measure, parent)
        try:
            poly = fiber_polynomial(InvariantSystem(Family.SIGNED_PERM_REAL, m), s, self.one)
            clusters = self._clusters([x.constant() for x in poly], real=True)
            factors = self._split_factors(poly, clusters)
            parts = []
            for c, fac in zip(clusters, factors):
                sign = c.center.sign_re()
                if sign == 0:
                    k = c.multiplicity // 2
                    evens = [fac[2 * i] for i in range(k + 1)]
                    sub = e_from_monic(evens)
                    parts.append((lambda d: self.lift_bn(d, measure, coincident=True), sub))
                elif sign == 1:
                    parts.append((lambda d, k=c.multiplicity: self.lift_rs(
                        d, measure, coincident=k > 1), e_from_monic(fac)))
                elif sign is None:
                    raise Indeterminate("cannot separate a root cluster from zero")
            branches = self._combine(parts)
        finally:
            self._leave()
        return [_Branch(b.chain, b.roots, b.monomials, (measure,) + b.measures) for b in branches]

    # -- real S_m -----------------------------------------------------
    def lift_rs(self, e, parent=None, coincident=False):
        m = len(e)
        if m == 1:
            return [_Branch((), (e[0],))]
        f0 = e[0] * Scalar(Fraction(1, m))
        g = tschirnhausen(list(e), f0, self.one)
        if coincident:
            g = [x - _const(x.constant(), self.q) for x in g]
        if all(x.is_zero() for x in g):
            return [_Branch((), (f0,) * m)]
        consts = [x.constant() for x in g]
        if any(c.certainly_nonzero() for c in consts):
            measure = (math.factorial(m), 0)
            self._enter(measure, parent)
            try:
                poly = monic_from_e(g, self.one)
                clusters = self._clusters([x.constant() for x in poly], real=True)
                factors = self._split_factors(poly, clusters)
                parts = [(lambda d, k=c.multiplicity: self.lift_rs(d, measure, coincident=k > 1),
                          e_from_monic(fac)) for c, fac in zip(clusters, factors)]
                branches = self._combine(parts)
            finally:
                self._leave()
            branches = [_Branch(b.chain, b.roots, b.monomials, (measure,) + b.measures)
                        for b in branches]
        elif any(not c.is_zero() for c in consts):
            raise Indeterminate("cannot decide whether the fiber datum vanishes")
        else:
            p = p_from_e(g, self.one)[1:]

            def recurse(h, meas):
                return self.lift_rs(e_from_p([self._zero()] + list(h), self.one), meas)

            branches = self._divide_real(p, _trace_zero_degrees(m), parent, recurse, math.factorial(m))
        out = []
        for b in branches:
            shift = apply_chart(b.chain, f0)
            out.append(_Branch(b.chain, tuple(r + shift for r in b.roots), b.monomials, b.measures))
        return out

    # -- real division step (shared by B_m and real S_m) ----------------
    def _divide_real(self, data, degs, parent, recurse, group_order):
        nz = [j for j, s in enumerate(data) if not s.is_zero()]
        base_order = min(sum(e) for e in data[0].coeffs) if not data[0].is_zero() else 0
        measure = (group_order, base_order)
        self._enter(measure, parent)
        branches = []
        try:
            if self.q == 1:
                leaves = [((), tuple(self.opts.box))]
            else:
                leaves = self._leaves_for([data[j] for j in nz])
            for chain, box in leaves:
                pulled = [apply_chart(chain, s) for s in data]
                alphas = [series_order(x) if not x.is_zero() else None for x in pulled]
                sysdeg = _DegreeView(degs)
                delta, ok = check_real_orders(sysdeg, alphas)
                self.checks.append(LeafCheck("real_orders", tuple(alphas), delta, ok))
                if not ok:
                    raise MembershipError("real-mode order condition fails: data is not in the "
                                          "image of the orbit map")
                dvec = delta
                h = []
                for d, x in zip(degs, pulled):
                    for axis, dk in enumerate(dvec):
                        if dk and not x.is_zero():
                            x = divide_by_coordinate(x, axis, d * dk)
                    h.append(x)
                self._check_floor([x for x in h if not x.is_zero()])
                exp = tuple(dvec)
                if sum(exp) == 0:
                    raise InvliftError("real division step without a monomial factor")
                for sb in recurse(h, measure):
                    roots = self._multiply_back(sb, exp)
                    branches.append(_Branch(tuple(chain) + sb.chain, roots, (exp,) + sb.monomials,
                                            (measure,) + sb.measures))
                    if len(branches) > self.opts.budget:
                        raise BudgetExceeded(f"more than {self.opts.budget} charts")
        finally:
            self._leave()
        return branches


class _DegreeView:
    def __init__(self, degrees):
        self.degrees = tuple(degrees)


def _signed_perm_degrees(m):
    return tuple(2 * j for j in range(1, m + 1))


def _trace_zero_degrees(m):
    return tuple(range(2, m + 1))


def _validate(problem: LiftProblem):
    sys = problem.system
    if sys.is_real:
        z0 = [s.constant() for s in problem.f]
        if any(c.im for c in z0) or any(c.im for s in problem.f for c in s.coeffs.values()):
            raise MembershipError("real-mode data must have real coefficients")
        if membership_test(sys, z0) is Membership.OUTSIDE:
            raise MembershipError("f(0) is not in the image of the orbit map")


def _run(problem: LiftProblem):
    _validate(problem)
    lf = _Lifter(problem)
    sys = problem.system
    f = list(problem.f)
    if sys.family is Family.SYMMETRIC_COMPLEX:
        branches = lf.lift_sc(f)
    elif sys.family is Family.SIGNED_PERM_REAL:
        branches = lf.lift_bn(f)
    else:
        zero = TruncatedSeries.zero(problem.nvars)
        branches = lf.lift_rs(e_from_p([zero] + f, lf.one)) if sys.n > 1 else [_Branch((), (zero,))]
    charts = []
    for b in branches:
        lift = tuple(b.roots)
        if sys.is_real:
            lift = tuple(_real_part_series(r) for r in lift)
        box = tuple(problem.options.box)
        charts.append(LiftChart(sys, tuple(b.chain), lift, tuple(b.monomials), box, tuple(b.measures)))
    return charts, lf


def _real_part_series(s: TruncatedSeries) -> TruncatedSeries:
    """Drop imaginary midpoints that are certified to be within the ball radius."""
    out = {}
    for e, c in s.coeffs.items():
        if c.im and (c.is_exact or abs(c.im) > c.rad):
            raise PrecisionExhausted("real lift acquired a non-real coefficient")
        out[e] = realify(c)
    return TruncatedSeries(s.nvars, s.trunc, out)


@dataclass
class LiftResult:
    charts: list
    checks: list
    measure_pairs: list
    resolutions: list


def lift(problem: LiftProblem) -> LiftResult:
    """Run the recursion and verify the master identity on every chart."""
    charts, lf = _run(problem)
    for ch in charts:
        resid = chart_residual(problem, ch)
        if not residual_is_zero(resid):
            raise VerificationFailed("lift does not reproduce the data on a chart")
    return LiftResult(charts, lf.checks, lf.measure_pairs, lf.resolutions)


def lift_curve(problem: LiftProblem):
    if problem.nvars != 1:
        raise DimensionMismatch("lift_curve takes one-variable data")
    return lift(problem).charts


def lift_multi(problem: LiftProblem):
    if problem.nvars != 2:
        raise DimensionMismatch("lift_multi takes two-variable data")
    return lift(problem).charts


def chart_residual(problem: LiftProblem, chart: LiftChart):
    """sigma(lift) - f o chain, per component."""
    vals = sigma(problem.system, chart.lift)
    return tuple(v - apply_chart(chart.chain, fj) for v, fj in zip(vals, problem.f))


def residual_is_zero(resid) -> bool:
    """Exact zero, or every remaining coefficient ball contains zero."""
    return all(all(c.contains_zero() and (not c.is_exact) for c in r.coeffs.values()) for r in resid)
