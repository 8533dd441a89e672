"""Truncated power series in one or two variables.

A :class:`TruncatedSeries` stores the coefficients of total degree below its
truncation order ``trunc``; everything of degree ``>= trunc`` is unknown.
``trunc`` may be ``math.inf`` for exact polynomials.  Axes are 0-based:
axis 0 is ``x1`` (or ``t``), axis 1 is ``x2``.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from math import comb

from .errors import (
    DimensionMismatch,
    Indeterminate,
    InputError,
    NotDivisible,
    NotNormalCrossings,
    TruncationUnderflow,
    ZeroToTruncation,
)
from .scalar import ONE, ZERO, Scalar, format_exact, parse_scalar, scalar_from_json, scalar_to_json

INF = math.inf


def _check_trunc(trunc):
    if trunc == INF:
        return INF
    if not isinstance(trunc, int) or isinstance(trunc, bool):
        raise InputError(f"truncation order must be an integer or inf, got {trunc!r}")
    if trunc < 1:
        raise TruncationUnderflow(f"truncation order {trunc} < 1")
    return trunc


def _raw(nvars, trunc, coeffs):
    s = object.__new__(TruncatedSeries)
    s.nvars = nvars
    s.trunc = trunc
    s.coeffs = coeffs
    return s


class TruncatedSeries:
    """Immutable truncated series; ``coeffs`` maps exponent tuples to Scalars."""

    __slots__ = ("nvars", "trunc", "coeffs")

    def __init__(self, nvars: int, trunc=INF, coeffs=None):
        if nvars not in (1, 2):
            raise InputError("only 1 or 2 variables are supported")
        trunc = _check_trunc(trunc)
        clean = {}
        for exp, c in (coeffs or {}).items():
            exp = (exp,) if isinstance(exp, int) else tuple(int(e) for e in exp)
            if len(exp) != nvars or min(exp) < 0:
                raise InputError(f"bad exponent {exp} for {nvars} variable(s)")
            c = Scalar.coerce(c)
            if sum(exp) >= trunc or c.is_zero():
                continue
            clean[exp] = clean[exp] + c if exp in clean else c
            if clean[exp].is_zero():
                del clean[exp]
        self.nvars = nvars
        self.trunc = trunc
        self.coeffs = clean

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, nvars, trunc=INF):
        return _raw(nvars, _check_trunc(trunc), {})

    @classmethod
    def const(cls, c, nvars, trunc=INF):
        return cls(nvars, trunc, {(0,) * nvars: c})

    @classmethod
    def var(cls, axis, nvars, trunc=INF):
        exp = tuple(1 if i == axis else 0 for i in range(nvars))
        return cls(nvars, trunc, {exp: ONE})

    @classmethod
    def monomial(cls, exp, c=ONE, trunc=INF):
        exp = tuple(exp)
        return cls(len(exp), trunc, {exp: c})

    # -- basic properties ---------------------------------------------
    @property
    def is_exact(self) -> bool:
        return all(c.prec is None for c in self.coeffs.values())

    def is_zero(self) -> bool:
        """No stored coefficient (exact zero up to truncation)."""
        return not self.coeffs

    def is_polynomial(self) -> bool:
        return self.trunc == INF

    def constant(self) -> Scalar:
        return self.coeffs.get((0,) * self.nvars, ZERO)

    def coeff(self, exp) -> Scalar:
        if isinstance(exp, int):
            exp = (exp,)
        return self.coeffs.get(tuple(exp), ZERO)

    def degree(self) -> int:
        return max((sum(e) for e in self.coeffs), default=-1)

    def with_trunc(self, trunc) -> "TruncatedSeries":
        trunc = _check_trunc(trunc)
        if trunc > self.trunc:
            raise InputError("cannot raise the truncation order of a series")
        return _raw(self.nvars, trunc, {e: c for e, c in self.coeffs.items() if sum(e) < trunc})

    def terms(self):
        """Coefficients in canonical order (total degree, then exponents)."""
        return sorted(self.coeffs.items(), key=lambda kv: (sum(kv[0]), kv[0]))

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.nvars == other.nvars and self.trunc == other.trunc and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.nvars, self.trunc, frozenset(self.coeffs.items())))

    def __repr__(self):
        tr = "inf" if self.trunc == INF else self.trunc
        return f"TruncatedSeries({format_series(self, strict=False)!r}, nvars={self.nvars}, trunc={tr})"

    # -- arithmetic ---------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, TruncatedSeries):
            if other.nvars != self.nvars:
                raise DimensionMismatch(f"{self.nvars} vs {other.nvars} variables")
            return other
        return TruncatedSeries.const(Scalar.coerce(other), self.nvars)

    def __add__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        trunc = min(self.trunc, other.trunc)
        out = {e: c for e, c in self.coeffs.items() if sum(e) < trunc}
        for e, c in other.coeffs.items():
            if sum(e) >= trunc:
                continue
            if e in out:
                s = out[e] + c
                if s.is_zero():
                    del out[e]
                else:
                    out[e] = s
            else:
                out[e] = c
        return _raw(self.nvars, trunc, out)

    __radd__ = __add__

    def __neg__(self):
        return _raw(self.nvars, self.trunc, {e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other):
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "TruncatedSeries":
        c = Scalar.coerce(c)
        if c.is_zero():
            return _raw(self.nvars, self.trunc, {})
        out = {}
        for e, v in self.coeffs.items():
            p = v * c
            if not p.is_zero():
                out[e] = p
        return _raw(self.nvars, self.trunc, out)

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        other = self._coerce(other)
        trunc = min(self.trunc, other.trunc)
        out = {}
        b_items = [(e, sum(e), c) for e, c in other.coeffs.items()]
        if self.nvars == 1:
            for (a,), ca in self.coeffs.items():
                for (b,), db, cb in b_items:
                    if a + b >= trunc:
                        continue
                    k = (a + b,)
                    out[k] = out[k] + ca * cb if k in out else ca * cb
        else:
            for (a0, a1), ca in self.coeffs.items():
                da = a0 + a1
                for (b0, b1), db, cb in b_items:
                    if da + db >= trunc:
                        continue
                    k = (a0 + b0, a1 + b1)
                    out[k] = out[k] + ca * cb if k in out else ca * cb
        return _raw(self.nvars, trunc, {e: c for e, c in out.items() if not c.is_zero()})

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise InputError("series powers must be nonnegative integers")
        result = TruncatedSeries.const(ONE, self.nvars, self.trunc)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def mul_monomial(self, exp, c=ONE) -> "TruncatedSeries":
        """Multiply by ``c * x^exp``; the valid order grows by ``|exp|``."""
        exp = tuple(exp)
        c = Scalar.coerce(c)
        shift = sum(exp)
        out = {}
        for e, v in self.coeffs.items():
            p = v * c
            if not p.is_zero():
                out[tuple(a + b for a, b in zip(e, exp))] = p
        return _raw(self.nvars, self.trunc + shift, out)

    # -- evaluation ---------------------------------------------------
    def evaluate(self, point) -> Scalar:
        """Value of the stored (truncated) polynomial at a point of Scalars."""
        point = [Scalar.coerce(p) for p in point]
        if len(point) != self.nvars:
            raise DimensionMismatch("evaluation point has the wrong dimension")
        powers = [dict() for _ in point]

        def pw(i, k):
            if k not in powers[i]:
                powers[i][k] = point[i] ** k
            return powers[i][k]

        total = ZERO
        for e, c in self.coeffs.items():
            term = c
            for i, k in enumerate(e):
                if k:
                    term = term * pw(i, k)
            total = total + term
        return total

    def evaluate_complex(self, point) -> complex:
        """Floating-point value (for plotting and fast predictors only)."""
        total = 0j
        for e, c in self.coeffs.items():
            term = complex(c)
            for p, k in zip(point, e):
                if k:
                    term *= p ** k
            total += term
        return total

    def to_complex_terms(self):
        return [(e, complex(c)) for e, c in self.coeffs.items()]

    # -- coordinate operations ----------------------------------------
    def divide_by_coordinate(self, axis: int, k: int) -> "TruncatedSeries":
        return divide_by_coordinate(self, axis, k)

    def substitute_power(self, gamma, epsilon) -> "TruncatedSeries":
        return substitute_power(self, gamma, epsilon)

    def translate(self, c) -> "TruncatedSeries":
        return translate(self, c)


def _as_tuple(v, nvars, name):
    if isinstance(v, int):
        v = (v,) * nvars if nvars == 1 else (v,)
    v = tuple(int(x) for x in v)
    if len(v) != nvars:
        raise DimensionMismatch(f"{name} has length {len(v)}, expected {nvars}")
    return v


def series_arith(a: TruncatedSeries, b: TruncatedSeries | None, op: str, k: int | None = None):
    """Ring operation by name: ``add``, ``sub``, ``mul`` or ``pow`` (with ``k``)."""
    if op == "pow":
        if k is None:
            raise InputError("pow requires an exponent")
        return a ** k
    if b is None:
        raise InputError(f"{op} requires two operands")
    if a.nvars != b.nvars:
        raise DimensionMismatch(f"{a.nvars} vs {b.nvars} variables")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise InputError(f"unknown series operation {op!r}")


def series_order(f: TruncatedSeries):
    """Valuation (1 variable) or normal-crossings exponent α (2 variables)."""
    certain = [e for e, c in f.coeffs.items() if c.certainly_nonzero()]
    unsure = [e for e, c in f.coeffs.items() if not c.certainly_nonzero()]
    if not certain:
        if unsure:
            raise Indeterminate("every coefficient ball contains zero")
        raise ZeroToTruncation(f"series is zero up to order {f.trunc}")
    if f.nvars == 1:
        k = min(e[0] for e in certain)
        if any(e[0] < k for e in unsure):
            raise Indeterminate("a lower-order coefficient ball contains zero")
        return k
    alpha = (min(e[0] for e in certain), min(e[1] for e in certain))
    if any(e[0] < alpha[0] or e[1] < alpha[1] for e in unsure):
        raise Indeterminate("a coefficient ball below the monomial factor contains zero")
    c = f.coeffs.get(alpha)
    if c is None:
        raise NotNormalCrossings(f"{format_series(f)} is not a monomial times a unit")
    if not c.certainly_nonzero():
        raise Indeterminate("cannot certify the unit's constant term")
    return alpha


def nc_factor(f: TruncatedSeries):
    """Return ``(alpha, unit)`` with ``f = x^alpha * unit`` up to truncation."""
    alpha = series_order(f)
    exps = (alpha,) if f.nvars == 1 else alpha
    unit = f
    for axis, k in enumerate(exps):
        if k:
            unit = divide_by_coordinate(unit, axis, k)
    return alpha, unit


def divide_by_coordinate(f: TruncatedSeries, axis: int, k: int) -> TruncatedSeries:
    if not 0 <= axis < f.nvars:
        raise DimensionMismatch(f"axis {axis} out of range for {f.nvars} variable(s)")
    if k < 0:
        raise InputError("division multiplicity must be nonnegative")
    if k == 0:
        return f
    out = {}
    for e, c in f.coeffs.items():
        if e[axis] < k:
            if c.is_exact or c.certainly_nonzero():
                mono = TruncatedSeries(f.nvars, INF, {e: c})
                raise NotDivisible(f"monomial {format_series(mono)} is not divisible by "
                                   f"x{axis + 1}^{k}")
            raise Indeterminate(f"coefficient of exponent {e} may be nonzero")
        e2 = list(e)
        e2[axis] -= k
        out[tuple(e2)] = c
    trunc = f.trunc - k
    if trunc < 1:
        raise TruncationUnderflow(f"dividing by x{axis + 1}^{k} leaves valid order {trunc}")
    return _raw(f.nvars, trunc, out)


def substitute_power(f: TruncatedSeries, gamma, epsilon) -> TruncatedSeries:
    """``f`` composed with ``x_j -> (-1)^eps_j x_j^gamma_j``."""
    gamma = _as_tuple(gamma, f.nvars, "gamma")
    epsilon = _as_tuple(epsilon, f.nvars, "epsilon")
    if min(gamma) < 1:
        raise InputError("power substitution exponents must be >= 1")
    if any(e not in (0, 1) for e in epsilon):
        raise InputError("sign bits must be 0 or 1")
    out = {}
    for e, c in f.coeffs.items():
        parity = sum(a * s for a, s in zip(e, epsilon)) & 1
        out[tuple(a * g for a, g in zip(e, gamma))] = -c if parity else c
    return _raw(f.nvars, f.trunc * min(gamma), out)


def translate(f: TruncatedSeries, c) -> TruncatedSeries:
    """``f(x + c)`` truncated at the same order."""
    c = [Scalar.coerce(v) for v in (c if isinstance(c, (list, tuple)) else [c])]
    if len(c) != f.nvars:
        raise DimensionMismatch("translation vector has the wrong dimension")
    if all(v.is_zero() for v in c):
        return f
    cpow = [[ONE] for _ in c]

    def cp(i, k):
        while len(cpow[i]) <= k:
            cpow[i].append(cpow[i][-1] * c[i])
        return cpow[i][k]

    out = {}
    for e, coef in f.coeffs.items():
        if f.nvars == 1:
            (a,) = e
            for j in range(a + 1):
                if j >= f.trunc:
                    break
                term = coef * cp(0, a - j) * comb(a, j)
                k = (j,)
                out[k] = out[k] + term if k in out else term
        else:
            a, b = e
            for j in range(a + 1):
                ta = coef * cp(0, a - j) * comb(a, j)
                for l in range(b + 1):
                    if j + l >= f.trunc:
                        break
                    term = ta * cp(1, b - l) * comb(b, l)
                    k = (j, l)
                    out[k] = out[k] + term if k in out else term
    return _raw(f.nvars, f.trunc, {k: v for k, v in out.items() if not v.is_zero()})


def shear_pullback(f: TruncatedSeries, axis: int, phi, trunc=INF) -> TruncatedSeries:
    """``f`` with coordinate ``axis`` replaced by ``x_axis + phi(x_other)``.

    ``phi`` lists the coefficients of t, t^2, ...; the result is cut at
    ``min(f.trunc, trunc)``.
    """
    if f.nvars != 2:
        raise DimensionMismatch("shears need two variables")
    if axis not in (0, 1):
        raise InputError("shear axis must be 0 or 1")
    N = min(f.trunc, trunc)
    other = 1 - axis
    exp = [0, 0]
    terms = {}
    for k, c in enumerate(phi, start=1):
        c = Scalar.coerce(c)
        if not c.is_zero():
            exp[other] = k
            terms[tuple(exp)] = c
    exp = [0, 0]
    exp[axis] = 1
    terms[tuple(exp)] = ONE
    S = _raw(2, N, {e: c for e, c in terms.items() if sum(e) < N})
    powers = [TruncatedSeries.const(ONE, 2, N)]
    out = TruncatedSeries.zero(2, N)
    for e, c in sorted(f.coeffs.items()):
        while len(powers) <= e[axis]:
            powers.append(powers[-1] * S)
        mono = [0, 0]
        mono[other] = e[other]
        out = out + powers[e[axis]].mul_monomial(tuple(mono), c).with_trunc(N)
    return out.with_trunc(N)


def blowup_pullback(f: TruncatedSeries, chart: int) -> TruncatedSeries:
    """Pull back through the point blow-up chart (x, xy) (0) or (xy, y) (1)."""
    if f.nvars != 2:
        raise DimensionMismatch("blow-ups need two variables")
    if chart not in (0, 1):
        raise InputError("blow-up chart index must be 0 or 1")
    out = {}
    for (a, b), c in f.coeffs.items():
        out[(a + b, b) if chart == 0 else (a, a + b)] = c
    # monomials of degree >= N map to degree >= N, so the order is preserved
    return _raw(2, f.trunc, out)


class Comparison(enum.Enum):
    LE = "<="
    GE = ">="
    BOTH = "both"
    INCOMPARABLE = "incomparable"


def monomial_order_compare(alpha, beta) -> Comparison:
    alpha = (alpha,) if isinstance(alpha, int) else tuple(alpha)
    beta = (beta,) if isinstance(beta, int) else tuple(beta)
    if len(alpha) != len(beta):
        raise DimensionMismatch("exponent tuples of different length")
    le = all(a <= b for a, b in zip(alpha, beta))
    ge = all(a >= b for a, b in zip(alpha, beta))
    if le and ge:
        return Comparison.BOTH
    if le:
        return Comparison.LE
    if ge:
        return Comparison.GE
    return Comparison.INCOMPARABLE


@dataclass(frozen=True)
class PuiseuxBranch:
    """``t -> series(x)`` where ``t = (-1)^epsilon x^gamma``."""

    gamma: int
    epsilon: int
    series: TruncatedSeries

    def __post_init__(self):
        if self.gamma < 1 or self.epsilon not in (0, 1):
            raise InputError("need gamma >= 1 and epsilon in {0, 1}")
        if self.series.nvars != 1:
            raise DimensionMismatch("Puiseux branches are one-variable series")

    def chart_parameter(self, t: float) -> float:
        """Real chart variable x with (-1)^eps x^gamma = t (None off the branch)."""
        s = -t if self.epsilon else t
        if s < 0:
            if self.gamma % 2 == 0:
                return None
            return -((-s) ** (1.0 / self.gamma))
        return s ** (1.0 / self.gamma)

    def evaluate(self, t: float) -> complex:
        x = self.chart_parameter(t)
        if x is None:
            raise InputError("parameter lies outside this branch's orthant")
        return self.series.evaluate_complex((x,))


# -- literal text format ------------------------------------------------

_VARS = {"x1": 0, "x2": 1, "x": 0, "y": 1, "t": 0}
_TOKEN = re.compile(r"\(|\)|\*|\^|[+-]|x1|x2|x|y|t|i|\d+(?:/\d+)?(?:\.\d+)?")


def parse_series(text: str, nvars: int | None = None, trunc=INF) -> TruncatedSeries:
    """Parse a sum of terms ``c * x1^a1 * x2^a2``.

    Coefficients are ``p/q``, ``r/s i`` or a parenthesised ``(p/q+r/s i)``;
    variables are ``x1``/``x2`` (aliases ``x``/``t`` and ``y``).  ``nvars`` is
    inferred from the variables used when not given.
    """
    src = "".join(str(text).split())
    if not src:
        raise InputError("empty series literal")
    toks = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            raise InputError(f"unexpected character {src[pos]!r} in series literal")
        toks.append(m.group())
        pos = m.end()
    terms = []
    i = 0
    used = set()
    while i < len(toks):
        sign = 1
        while i < len(toks) and toks[i] in "+-":
            if toks[i] == "-":
                sign = -sign
            i += 1
        coef = parse_scalar("1")
        exp = [0, 0]
        have = False
        while i < len(toks):
            tok = toks[i]
            if tok == "(":
                j = toks.index(")", i) if ")" in toks[i:] else -1
                if j < 0:
                    raise InputError("unbalanced parenthesis in series literal")
                coef = coef * parse_scalar("".join(toks[i + 1:j]))
                i = j + 1
            elif tok in _VARS:
                axis = _VARS[tok]
                used.add(axis)
                i += 1
                power = 1
                if i < len(toks) and toks[i] == "^":
                    if i + 1 >= len(toks) or not toks[i + 1].isdigit():
                        raise InputError("exponent must be a nonnegative integer")
                    power = int(toks[i + 1])
                    i += 2
                exp[axis] += power
            elif tok == "i":
                coef = coef * parse_scalar("i")
                i += 1
            elif tok[0].isdigit():
                val = parse_scalar(tok)
                i += 1
                if i < len(toks) and toks[i] == "i":
                    val = val * parse_scalar("i")
                    i += 1
                coef = coef * val
            else:
                raise InputError(f"unexpected token {tok!r} in series literal")
            have = True
            if i < len(toks) and toks[i] == "*":
                i += 1
                continue
            break
        if not have:
            raise InputError("dangling sign in series literal")
        terms.append((tuple(exp), coef if sign > 0 else -coef))
        if i < len(toks) and toks[i] not in "+-":
            raise InputError(f"unexpected token {toks[i]!r} in series literal")
    if nvars is None:
        nvars = 2 if 1 in used else 1
    if nvars == 1 and 1 in used:
        raise DimensionMismatch("literal uses x2 but one variable was requested")
    return TruncatedSeries(nvars, trunc, _sum_terms(terms, nvars))


def _sum_terms(terms, nvars):
    out = {}
    for e, c in terms:
        k = e[:nvars]
        out[k] = out[k] + c if k in out else c
    return out


def format_series(f: TruncatedSeries, strict: bool = True) -> str:
    """Literal text form; with ``strict=False`` balls render as ``[mid +/- rad]``."""
    if not f.coeffs:
        return "0"
    names = ["x1", "x2"] if f.nvars == 2 else ["t"]
    parts = []
    for e, c in f.terms():
        mono = [n if k == 1 else f"{n}^{k}" for n, k in zip(names, e) if k]
        if not c.is_exact:
            if strict:
                raise InputError("ball coefficients have no literal form; use JSON")
            coef = f"[{complex(c):.6g} +/- {float(c.rad):.2g}]"
            neg = False
        elif c.im and c.re:
            coef = f"({format_exact(c)})"
            neg = False
        else:
            neg = (c.re < 0) if not c.im else (c.im < 0)
            coef = format_exact(-c if neg else c)
        if mono and coef == "1":
            body = "*".join(mono)
        else:
            body = "*".join([coef] + mono)
        parts.append(("- " if neg else "+ ") + body)
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else "-" + text[2:]


def series_to_json(f: TruncatedSeries):
    return {
        "nvars": f.nvars,
        "trunc": "inf" if f.trunc == INF else f.trunc,
        "terms": [{"exp": list(e), "c": scalar_to_json(c)} for e, c in f.terms()],
    }


def series_from_json(obj, nvars=None, trunc=INF) -> TruncatedSeries:
    """Accept either the structured form or a series literal string."""
    if isinstance(obj, str):
        return parse_series(obj, nvars=nvars, trunc=trunc)
    if isinstance(obj, (int,)):
        return TruncatedSeries.const(obj, nvars or 1, trunc)
    try:
        tr = obj.get("trunc", "inf")
        tr = INF if tr in ("inf", None) else int(tr)
        return TruncatedSeries(int(obj["nvars"]), tr,
                               {tuple(t["exp"]): scalar_from_json(t["c"]) for t in obj["terms"]})
    except (KeyError, TypeError, AttributeError) as exc:
        raise InputError(f"bad series JSON: {obj!r}") from exc
