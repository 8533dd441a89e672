"""Representation instances and their invariant-theoretic services.

Three families are provided:

* ``symmetric_complex``: S_n permuting coordinates of C^n; generators are the
  elementary symmetric functions e_1..e_n (degrees 1..n).
* ``signed_perm_real``: B_n acting on R^n by signed permutations; generators
  e_j(x_1^2, ..., x_n^2) (degrees 2, 4, ..., 2n).
* ``symmetric_real_trace_zero``: S_n on the hyperplane {sum x = 0} of R^n
  (type A_{n-1}); generators the power sums p_2..p_n (degrees 2..n), so the
  first generator is the squared norm.
"""

from __future__ import annotations

import enum
import functools
import itertools
import math
import threading
from dataclasses import dataclass
from fractions import Fraction

from .errors import DimensionMismatch, Indeterminate, InputError, MembershipError, UnsupportedFamily
from .polyroots import isolate_roots, poly_from_roots, roots_list
from .scalar import DEFAULT_PRECISION, ONE, ZERO, Scalar
from .series import TruncatedSeries


class Family(str, enum.Enum):
    SYMMETRIC_COMPLEX = "symmetric_complex"
    SIGNED_PERM_REAL = "signed_perm_real"
    SYMMETRIC_REAL_TRACE_ZERO = "symmetric_real_trace_zero"


@dataclass(frozen=True)
class InvariantSystem:
    family: Family
    n: int

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not isinstance(self.n, int) or self.n < 1:
            raise InputError("n must be a positive integer")
        if self.n > 8:
            raise InputError("n > 8 is outside the supported desk scale")

    @property
    def is_real(self) -> bool:
        return self.family is not Family.SYMMETRIC_COMPLEX

    @property
    def dim(self) -> int:
        """Number of coordinates of a point of V (ambient coordinates for A)."""
        return self.n

    @property
    def degrees(self) -> tuple:
        if self.family is Family.SYMMETRIC_COMPLEX:
            return tuple(range(1, self.n + 1))
        if self.family is Family.SIGNED_PERM_REAL:
            return tuple(2 * j for j in range(1, self.n + 1))
        return tuple(range(2, self.n + 1))

    @property
    def ngens(self) -> int:
        return len(self.degrees)

    @property
    def D(self) -> int:
        return math.prod(self.degrees)

    @property
    def group_order(self) -> int:
        if self.family is Family.SIGNED_PERM_REAL:
            return 2 ** self.n * math.factorial(self.n)
        return math.factorial(self.n)

    @property
    def generator_names(self) -> list:
        if self.family is Family.SYMMETRIC_COMPLEX:
            return [f"e{j}(x)" for j in range(1, self.n + 1)]
        if self.family is Family.SIGNED_PERM_REAL:
            return [f"e{j}(x^2)" for j in range(1, self.n + 1)]
        return [f"p{j}(x)" for j in range(2, self.n + 1)]

    def to_json(self):
        return {"family": self.family.value, "n": self.n}

    @staticmethod
    def from_json(obj) -> "InvariantSystem":
        try:
            return InvariantSystem(Family(obj["family"]), int(obj["n"]))
        except (KeyError, TypeError) as exc:
            raise InputError(f"bad system descriptor {obj!r}") from exc
        except ValueError as exc:
            raise UnsupportedFamily(f"unknown family in {obj!r}") from exc

    def describe(self):
        return {
            "family": self.family.value,
            "n": self.n,
            "generators": self.generator_names,
            "degrees": list(self.degrees),
            "D": self.D,
            "real": self.is_real,
            "group_order": self.group_order,
        }


def SymmetricComplex(n):
    return InvariantSystem(Family.SYMMETRIC_COMPLEX, n)


def SignedPermReal(n):
    return InvariantSystem(Family.SIGNED_PERM_REAL, n)


def SymmetricRealTraceZero(n):
    return InvariantSystem(Family.SYMMETRIC_REAL_TRACE_ZERO, n)


# -- generic symmetric-function algebra (works on Scalars and series) ------

def elementary_symmetric(values, one):
    e = [one] + [one * 0] * len(values)
    for v in values:
        for j in range(len(e) - 1, 0, -1):
            e[j] = e[j] + v * e[j - 1]
    return e[1:]


def power_sums(values, k_max, one):
    out = []
    for k in range(1, k_max + 1):
        acc = one * 0
        for v in values:
            acc = acc + v ** k
        out.append(acc)
    return out


def e_from_p(p, one):
    """Newton identities: power sums p_1..p_n to e_1..e_n."""
    e = [one]
    for k in range(1, len(p) + 1):
        acc = one * 0
        for i in range(1, k + 1):
            term = e[k - i] * p[i - 1]
            acc = acc + term if i % 2 else acc - term
        e.append(acc * Scalar(Fraction(1, k)))
    return e[1:]


def p_from_e(e, one):
    """Newton identities: e_1..e_n to power sums p_1..p_n."""
    p = []
    for k in range(1, len(e) + 1):
        acc = e[k - 1] * k if k % 2 else -(e[k - 1] * k)
        for i in range(1, k):
            term = e[k - i - 1] * p[i - 1]
            acc = acc + term if (k - i) % 2 else acc - term
        p.append(acc)
    return p


def monic_from_e(e, one):
    """Ascending coefficients of prod (z - r_i) given e_j(r)."""
    n = len(e)
    coeffs = [None] * (n + 1)
    coeffs[n] = one
    for j in range(1, n + 1):
        coeffs[n - j] = e[j - 1] if j % 2 == 0 else -e[j - 1]
    return coeffs


def e_from_monic(coeffs):
    n = len(coeffs) - 1
    return [coeffs[n - j] if j % 2 == 0 else -coeffs[n - j] for j in range(1, n + 1)]


def _one_like(values):
    for v in values:
        if isinstance(v, TruncatedSeries):
            return TruncatedSeries.const(ONE, v.nvars)
    return ONE


def sigma(sys: InvariantSystem, values):
    """Generator values on a point (Scalars) or on a tuple of series."""
    values = list(values)
    if len(values) != sys.dim:
        raise DimensionMismatch(f"expected {sys.dim} coordinates, got {len(values)}")
    one = _one_like(values)
    if not isinstance(one, TruncatedSeries):
        values = [Scalar.coerce(v) for v in values]
    if sys.family is Family.SYMMETRIC_COMPLEX:
        return tuple(elementary_symmetric(values, one))
    if sys.family is Family.SIGNED_PERM_REAL:
        return tuple(elementary_symmetric([v * v for v in values], one))
    return tuple(power_sums(values, sys.n, one)[1:])


def sigma_eval(sys: InvariantSystem, v):
    """Exact (or enclosed) invariant values of a point v."""
    vals = [Scalar.coerce(c) for c in v]
    if sys.family is Family.SYMMETRIC_REAL_TRACE_ZERO:
        s = sum(vals, ZERO)
        if not s.contains_zero():
            raise InputError("points of the trace-zero family must have coordinate sum 0")
    if sys.is_real and any(c.im and (c.is_exact or abs(c.im) > c.rad) for c in vals):
        raise InputError("real families take real points")
    return sigma(sys, vals)


def fiber_polynomial(sys: InvariantSystem, z, one=ONE):
    """Monic polynomial whose roots describe the fiber over z (ascending coefficients).

    For S_n this is prod(y - x_i); for B_n it is prod(y^2 - x_i^2), of degree 2n;
    for A_{n-1} the power sums are converted with p_1 = 0.
    """
    z = list(z)
    if len(z) != sys.ngens:
        raise DimensionMismatch(f"expected {sys.ngens} invariant values, got {len(z)}")
    if sys.family is Family.SYMMETRIC_COMPLEX:
        return monic_from_e(z, one)
    if sys.family is Family.SIGNED_PERM_REAL:
        q = monic_from_e(z, one)
        zero = one * 0
        out = [zero] * (2 * sys.n + 1)
        for k, c in enumerate(q):
            out[2 * k] = c
        return out
    e = e_from_p([one * 0] + z, one)
    return monic_from_e(e, one)


# -- root recovery, fixed points, slices -----------------------------------

def roots_from_invariants(sys: InvariantSystem, z, precision: int = DEFAULT_PRECISION):
    """Certified root enclosures of the fiber polynomial, descending order.

    For signed permutations all 2n roots +-x_i of prod(y^2 - x_i^2) are
    returned; the first n are the nonnegative orbit representatives.
    """
    z = [Scalar.coerce(c) for c in z]
    if sys.is_real:
        verdict = membership_test(sys, z)
        if verdict is Membership.OUTSIDE:
            raise MembershipError(f"{[str(c) for c in z]} is not in the image of the orbit map")
    if sys.family is Family.SYMMETRIC_REAL_TRACE_ZERO and sys.n == 1:
        return [ZERO]
    return roots_list(fiber_polynomial(sys, z), precision)


def orbit_representative(sys: InvariantSystem, z, precision: int = DEFAULT_PRECISION):
    """Deterministic point of the closed orbit over z (the section's ordering rule)."""
    roots = roots_from_invariants(sys, z, precision)
    return roots[: sys.n]


@dataclass(frozen=True)
class FixedPointReduction:
    fixed: object
    system: InvariantSystem
    reduced: tuple


def tschirnhausen(e, shift, one):
    """Invariants of the roots shifted by ``-shift``."""
    n = len(e)
    a = monic_from_e(e, one)
    powers = [one]
    for _ in range(n):
        powers.append(powers[-1] * shift)
    out = []
    for k in range(n + 1):
        acc = one * 0
        for l in range(k, n + 1):
            acc = acc + a[l] * powers[l - k] * math.comb(l, k)
        out.append(acc)
    reduced = e_from_monic(out)
    reduced[0] = one * 0
    return reduced


def remove_fixed_points(sys: InvariantSystem, f):
    """Split off the diagonal part f_1/n (mean of the roots)."""
    if sys.family is not Family.SYMMETRIC_COMPLEX:
        raise UnsupportedFamily("only the complex symmetric family has a nontrivial fixed subspace")
    f = list(f)
    if len(f) != sys.n:
        raise DimensionMismatch(f"expected {sys.n} components")
    one = _one_like(f)
    f0 = f[0] * Scalar(Fraction(1, sys.n))
    reduced = tschirnhausen(f, f0, one)
    return FixedPointReduction(f0, sys, tuple(reduced))


@dataclass(frozen=True)
class SliceCluster:
    system: InvariantSystem
    center: Scalar
    size: int
    exact_multiplicity: bool


def slice_split(sys: InvariantSystem, z, precision: int = DEFAULT_PRECISION):
    """Partition the fiber over z into isotropy clusters."""
    z = [Scalar.coerce(c) for c in z]
    if all(c.is_zero() for c in z):
        raise InputError("slice splitting needs a nonzero fiber datum")
    if sys.is_real and membership_test(sys, z) is Membership.OUTSIDE:
        raise MembershipError("real-mode datum outside the image of the orbit map")
    clusters = isolate_roots(fiber_polynomial(sys, z), precision)
    out = []
    if sys.family is Family.SIGNED_PERM_REAL:
        for c in clusters:
            sign = c.center.sign_re()
            if c.center.is_exact and c.center.is_zero():
                out.append(SliceCluster(SignedPermReal(c.multiplicity // 2), c.center,
                                        c.multiplicity // 2, c.exact_multiplicity))
            elif sign == 1:
                out.append(SliceCluster(SymmetricRealTraceZero(c.multiplicity), c.center,
                                        c.multiplicity, c.exact_multiplicity))
            elif sign is None:
                raise Indeterminate("cannot separate a root cluster from zero")
        return out
    family = Family.SYMMETRIC_COMPLEX if sys.family is Family.SYMMETRIC_COMPLEX \
        else Family.SYMMETRIC_REAL_TRACE_ZERO
    for c in clusters:
        out.append(SliceCluster(InvariantSystem(family, c.multiplicity), c.center,
                                c.multiplicity, c.exact_multiplicity))
    return out


# -- Gram matrix and the real membership test --------------------------------

def gram_matrix(sys: InvariantSystem, v):
    """Matrix of inner products of invariant gradients at v (real families)."""
    if not sys.is_real:
        raise UnsupportedFamily("the Gram matrix is defined for real families only")
    v = [Scalar.coerce(c) for c in v]
    if len(v) != sys.n:
        raise DimensionMismatch(f"expected {sys.n} coordinates")
    n = sys.n
    grads = []
    if sys.family is Family.SIGNED_PERM_REAL:
        sq = [c * c for c in v]
        for j in range(1, n + 1):
            row = []
            for i in range(n):
                rest = sq[:i] + sq[i + 1:]
                e_prev = ONE if j == 1 else (elementary_symmetric(rest, ONE) + [ZERO])[j - 2]
                row.append(v[i] * e_prev * 2)
            grads.append(row)
    else:
        for k in range(2, n + 1):
            amb = [c ** (k - 1) * k for c in v]
            mean = sum(amb, ZERO) * Scalar(Fraction(1, n))
            grads.append([a - mean for a in amb])
    m = len(grads)
    return [[sum((grads[a][i] * grads[b][i] for i in range(n)), ZERO) for b in range(m)]
            for a in range(m)]


_BTILDE_LOCK = threading.Lock()


@functools.lru_cache(maxsize=None)
def _reduced_gram_cached(family: Family, n: int):
    import sympy as sp
    from sympy.polys.polyfuncs import symmetrize

    xs = sp.symbols(f"x1:{n + 1}")
    zs = sp.symbols(f"z1:{n + 1}")
    if family is Family.SIGNED_PERM_REAL:
        s = xs  # treat the variables as the squares s_i = x_i^2

        def esym(vals, k):
            if k == 0:
                return sp.Integer(1)
            return sum(sp.Mul(*c) for c in itertools.combinations(vals, k))

        entries = {}
        for j in range(1, n + 1):
            for k in range(j, n + 1):
                expr = sum(4 * s[i] * esym(s[:i] + s[i + 1:], j - 1) * esym(s[:i] + s[i + 1:], k - 1)
                           for i in range(n))
                entries[(j, k)] = sp.expand(expr)
        gens = zs[:n]
        table = {}
        for (j, k), expr in entries.items():
            sym, rem, defs = symmetrize(expr, *xs, formal=True)
            if rem != 0:
                raise AssertionError("Gram entry is not symmetric")
            sub = {name: gens[i] for i, (name, _) in enumerate(defs)}
            table[(j, k)] = sp.Poly(sp.expand(sym.subs(sub)), *gens)
        m = n
    elif family is Family.SYMMETRIC_REAL_TRACE_ZERO:
        m = n - 1
        p = [sum(x ** k for x in xs) for k in range(0, n + 1)]
        grads = {}
        for k in range(2, n + 1):
            grads[k] = [k * x ** (k - 1) - sp.Rational(k, n) * p[k - 1] for x in xs]
        gens = zs[:m]  # z1 = p2, ..., z_{n-1} = p_n
        # e_k in terms of power sums with p_1 = 0, via Newton
        psym = [sp.Integer(0)] + list(gens)
        evals = [sp.Integer(1)]
        for k in range(1, n + 1):
            acc = sum((-1) ** (i - 1) * evals[k - i] * psym[i - 1] for i in range(1, k + 1))
            evals.append(sp.expand(acc / k))
        table = {}
        for j in range(2, n + 1):
            for k in range(j, n + 1):
                expr = sp.expand(sum(a * b for a, b in zip(grads[j], grads[k])))
                sym, rem, defs = symmetrize(expr, *xs, formal=True)
                if rem != 0:
                    raise AssertionError("Gram entry is not symmetric")
                sub = {name: evals[i + 1] for i, (name, _) in enumerate(defs)}
                table[(j - 1, k - 1)] = sp.Poly(sp.expand(sym.subs(sub)), *gens) if gens else sym
    else:
        raise UnsupportedFamily("the reduced Gram matrix is defined for real families only")
    out = [[None] * m for _ in range(m)]
    for (j, k), poly in table.items():
        terms = {tuple(int(a) for a in mon): Fraction(int(c.p), int(c.q))
                 for mon, c in poly.terms()} if m else {}
        out[j - 1][k - 1] = terms
        out[k - 1][j - 1] = terms
    return out


def reduced_gram(sys: InvariantSystem):
    """Polynomial matrix B~ with B = B~ o sigma; entries map exponent tuples to rationals."""
    with _BTILDE_LOCK:
        return _reduced_gram_cached(sys.family, sys.n)


def eval_reduced_gram(sys: InvariantSystem, z):
    table = reduced_gram(sys)
    z = [Scalar.coerce(c) for c in z]
    out = []
    for row in table:
        vals = []
        for entry in row:
            acc = ZERO
            for mon, c in entry.items():
                term = Scalar(c)
                for zi, a in zip(z, mon):
                    if a:
                        term = term * zi ** a
                acc = acc + term
            vals.append(acc)
        out.append(vals)
    return out


def determinant(mat):
    n = len(mat)
    if n == 0:
        return ONE
    if n == 1:
        return mat[0][0]
    if n == 2:
        return mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0]
    total = ZERO
    for j in range(n):
        if mat[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in mat[1:]]
        term = mat[0][j] * determinant(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


class Membership(str, enum.Enum):
    INSIDE = "inside"
    INDETERMINATE = "indeterminate"
    OUTSIDE = "outside"


def membership_test(sys: InvariantSystem, z) -> Membership:
    """Decide whether z lies in sigma(V) by positive semidefiniteness of B~(z).

    Exact input is decided exactly (all principal minors, so semidefinite
    boundary points count as inside).  Ball input is inside only when all
    leading principal minors are certified positive, outside when some
    principal minor is certified negative, and indeterminate otherwise.
    """
    if not sys.is_real:
        raise UnsupportedFamily("membership is tested for real families only")
    z = [Scalar.coerce(c) for c in z]
    if len(z) != sys.ngens:
        raise DimensionMismatch(f"expected {sys.ngens} invariant values")
    for c in z:
        if c.im and (c.is_exact or abs(c.im) > c.rad):
            return Membership.OUTSIDE
    if sys.ngens == 0:
        return Membership.INSIDE
    B = eval_reduced_gram(sys, [Scalar(c.re, 0, c.rad, c.prec) if c.prec else Scalar(c.re) for c in z])
    m = len(B)
    subsets = [s for r in range(1, m + 1) for s in itertools.combinations(range(m), r)]
    exact = all(c.is_exact for c in z)
    undecided = False
    for s in subsets:
        det = determinant([[B[a][b] for b in s] for a in s])
        sgn = det.sign_re()
        if sgn == -1:
            return Membership.OUTSIDE
        if sgn is None:
            undecided = True
    if exact:
        return Membership.INSIDE
    leading_ok = True
    for r in range(1, m + 1):
        det = determinant([[B[a][b] for b in range(r)] for a in range(r)])
        if det.sign_re() != 1:
            leading_ok = False
            break
    if leading_ok:
        return Membership.INSIDE
    return Membership.INDETERMINATE if undecided or not leading_ok else Membership.INSIDE


def points_from_roots(roots):
    """Convenience: monic polynomial of given roots (for tests and fixtures)."""
    return poly_from_roots(roots)
