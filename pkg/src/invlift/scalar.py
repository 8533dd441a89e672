"""Exact Gaussian rationals and certified complex balls.

A :class:`Scalar` is either exact (``prec is None``, ``rad == 0``) or a ball
``{z : |z - mid| <= rad}`` whose midpoint is kept as a dyadic rational with at
most ``prec`` significant bits per component.  Ball arithmetic rounds the
midpoint and pushes every rounding error into the radius, so the true result
is always contained in the returned enclosure.
"""

from __future__ import annotations

import os
from fractions import Fraction

import mpmath
from gmpy2 import isqrt, mpq, mpz

from .errors import Indeterminate, InputError

DEFAULT_PRECISION = 128
_RAD_BITS = 32
_ZERO = mpq(0)
_ONE = mpq(1)


def max_precision() -> int:
    """Cap for automatic precision doubling (``INVLIFT_MAX_PRECISION``)."""
    raw = os.environ.get("INVLIFT_MAX_PRECISION")
    if raw is None:
        return 2048
    try:
        value = int(raw)
    except ValueError as exc:
        raise InputError(f"INVLIFT_MAX_PRECISION must be an integer, got {raw!r}") from exc
    if value < 16:
        raise InputError("INVLIFT_MAX_PRECISION must be at least 16")
    return value


def to_mpq(x) -> mpq:
    if type(x) is mpq:
        return x
    if isinstance(x, (int, mpz, Fraction)):
        return mpq(x)
    if isinstance(x, float):
        return mpq(x)
    if isinstance(x, str):
        try:
            return mpq(Fraction(x.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"bad rational literal {x!r}") from exc
    if hasattr(x, "numerator") and hasattr(x, "denominator"):
        return mpq(int(x.numerator), int(x.denominator))
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def _round(q: mpq, prec: int):
    """Nearest dyadic with ``prec`` significant bits, and the absolute error."""
    if not q:
        return q, _ZERO
    n, d = q.numerator, q.denominator
    if d & (d - 1) == 0 and n.bit_length() <= prec:
        return q, _ZERO
    s = prec - (n.bit_length() - d.bit_length())
    if s >= 0:
        m = (2 * (n << s) + d) // (2 * d)
        val = mpq(m, mpz(1) << s)
    else:
        den = d << -s
        m = (2 * n + den) // (2 * den)
        val = mpq(m << -s)
    return val, abs(q - val)


def _up(r: mpq) -> mpq:
    """Short dyadic upper bound for a nonnegative rational."""
    if not r:
        return r
    n, d = r.numerator, r.denominator
    if d & (d - 1) == 0 and n.bit_length() <= _RAD_BITS:
        return r
    s = _RAD_BITS - (n.bit_length() - d.bit_length())
    if s >= 0:
        m = -((-(n << s)) // d)
        return mpq(m, mpz(1) << s)
    den = d << -s
    m = -((-n) // den)
    return mpq(m << -s)


def sqrt_up(q: mpq) -> mpq:
    n, d = q.numerator, q.denominator
    r = isqrt(n * d)
    if r * r != n * d:
        r += 1
    return mpq(r, d)


def sqrt_lo(q: mpq) -> mpq:
    n, d = q.numerator, q.denominator
    return mpq(isqrt(n * d), d)


def _abs_up(re: mpq, im: mpq) -> mpq:
    if not im:
        return abs(re)
    if not re:
        return abs(im)
    return sqrt_up(re * re + im * im)


def _abs_lo(re: mpq, im: mpq) -> mpq:
    if not im:
        return abs(re)
    if not re:
        return abs(im)
    return sqrt_lo(re * re + im * im)


def _minprec(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _mk(re, im, rad, prec):
    s = object.__new__(Scalar)
    s.re = re
    s.im = im
    s.rad = rad
    s.prec = prec
    return s


def _ball(re, im, rad, prec):
    re2, e1 = _round(re, prec)
    im2, e2 = _round(im, prec)
    return _mk(re2, im2, _up(rad + e1 + e2), prec)


class Scalar:
    """Exact Gaussian rational or certified complex ball (immutable)."""

    __slots__ = ("re", "im", "rad", "prec")

    def __init__(self, re=0, im=0, rad=0, prec=None):
        self.re = to_mpq(re)
        self.im = to_mpq(im)
        self.rad = to_mpq(rad)
        self.prec = prec
        if self.rad < 0:
            raise InputError("ball radius must be nonnegative")
        if prec is None and self.rad:
            raise InputError("an exact scalar cannot carry a radius")
        if prec is not None and (not isinstance(prec, int) or prec < 2):
            raise InputError("ball precision must be an integer >= 2")

    # -- construction -------------------------------------------------
    @staticmethod
    def coerce(x) -> "Scalar":
        if isinstance(x, Scalar):
            return x
        if isinstance(x, complex):
            return _mk(mpq(x.real), mpq(x.imag), _ZERO, None)
        return _mk(to_mpq(x), _ZERO, _ZERO, None)

    @staticmethod
    def from_mpc(z, rad=0, prec=DEFAULT_PRECISION) -> "Scalar":
        """Ball around an mpmath number; the midpoint is converted exactly."""
        if not isinstance(z, mpmath.mpc):
            z = mpmath.mpc(z)
        return _ball(_mpf_to_mpq(z.real), _mpf_to_mpq(z.imag), to_mpq(rad), prec)

    @staticmethod
    def exact_from_mpc(z) -> "Scalar":
        if not isinstance(z, mpmath.mpc):
            z = mpmath.mpc(z)
        return _mk(_mpf_to_mpq(z.real), _mpf_to_mpq(z.imag), _ZERO, None)

    # -- predicates ---------------------------------------------------
    @property
    def is_exact(self) -> bool:
        return self.prec is None

    def is_zero(self) -> bool:
        """Exact zero (a ball is never *known* to be zero)."""
        return self.prec is None and not self.re and not self.im

    def is_real(self) -> bool:
        return not self.im

    def certainly_nonzero(self) -> bool:
        if self.prec is None:
            return bool(self.re or self.im)
        return max(abs(self.re), abs(self.im)) > self.rad or _abs_lo(self.re, self.im) > self.rad

    def contains_zero(self) -> bool:
        return not self.certainly_nonzero()

    def sign_re(self):
        """Sign of the real part: 1, -1, 0 (exact zero), or None if undecided."""
        if self.prec is None:
            return (self.re > 0) - (self.re < 0)
        if self.re > self.rad:
            return 1
        if self.re < -self.rad:
            return -1
        return None

    def abs_upper(self) -> mpq:
        return _up(_abs_up(self.re, self.im) + self.rad)

    def abs_lower(self) -> mpq:
        lo = _abs_lo(self.re, self.im) - self.rad
        return lo if lo > 0 else _ZERO

    def contains(self, other) -> bool:
        other = Scalar.coerce(other)
        dist = _abs_up(self.re - other.re, self.im - other.im)
        return dist + other.rad <= self.rad

    def overlaps(self, other) -> bool:
        other = Scalar.coerce(other)
        return _abs_lo(self.re - other.re, self.im - other.im) <= self.rad + other.rad

    # -- conversions --------------------------------------------------
    def mid(self) -> "Scalar":
        return _mk(self.re, self.im, _ZERO, None)

    def to_ball(self, prec: int) -> "Scalar":
        return _ball(self.re, self.im, self.rad, _minprec(self.prec, prec))

    def widen(self, extra) -> "Scalar":
        prec = self.prec if self.prec is not None else DEFAULT_PRECISION
        return _ball(self.re, self.im, self.rad + to_mpq(extra), prec)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def to_mpc(self):
        return mpmath.mpc(_mpq_to_mpf(self.re), _mpq_to_mpf(self.im))

    # -- arithmetic ---------------------------------------------------
    def __neg__(self):
        return _mk(-self.re, -self.im, self.rad, self.prec)

    def __pos__(self):
        return self

    def conjugate(self):
        return _mk(self.re, -self.im, self.rad, self.prec)

    def __add__(self, other):
        if not isinstance(other, Scalar):
            try:
                other = Scalar.coerce(other)
            except TypeError:
                return NotImplemented
        re = self.re + other.re
        im = self.im + other.im
        if self.prec is None and other.prec is None:
            return _mk(re, im, _ZERO, None)
        return _ball(re, im, self.rad + other.rad, _minprec(self.prec, other.prec))

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Scalar):
            try:
                other = Scalar.coerce(other)
            except TypeError:
                return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return Scalar.coerce(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, Scalar):
            try:
                other = Scalar.coerce(other)
            except TypeError:
                return NotImplemented
        a, b, c, d = self.re, self.im, other.re, other.im
        if not b and not d:
            re, im = a * c, _ZERO
        else:
            re, im = a * c - b * d, a * d + b * c
        if self.prec is None and other.prec is None:
            return _mk(re, im, _ZERO, None)
        rad = _ZERO
        if other.rad:
            rad += (abs(a) + abs(b)) * other.rad
        if self.rad:
            rad += (abs(c) + abs(d)) * self.rad + self.rad * other.rad
        return _ball(re, im, rad, _minprec(self.prec, other.prec))

    __rmul__ = __mul__

    def inverse(self) -> "Scalar":
        a, b = self.re, self.im
        den = a * a + b * b
        if self.prec is None:
            if not den:
                raise ZeroDivisionError("inverse of exact zero")
            return _mk(a / den, -b / den, _ZERO, None)
        lo = _abs_lo(a, b)
        if lo <= self.rad:
            raise Indeterminate("division by a ball that may contain zero")
        rad = self.rad / (lo * (lo - self.rad))
        return _ball(a / den, -b / den, rad, self.prec)

    def __truediv__(self, other):
        if not isinstance(other, Scalar):
            try:
                other = Scalar.coerce(other)
            except TypeError:
                return NotImplemented
        if other.prec is None and not other.im:
            if not other.re:
                raise ZeroDivisionError("division by exact zero")
            if self.prec is None:
                return _mk(self.re / other.re, self.im / other.re, _ZERO, None)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return Scalar.coerce(other) * self.inverse()

    def __pow__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        result = ONE
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    # -- comparison ---------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, Scalar):
            try:
                other = Scalar.coerce(other)
            except TypeError:
                return NotImplemented
        return (self.re == other.re and self.im == other.im and self.rad == other.rad
                and self.prec == other.prec)

    def __hash__(self):
        return hash((self.re, self.im, self.rad, self.prec))

    def sort_key(self):
        """Descending-order key used for deterministic root ordering."""
        return (-self.re, -self.im)

    def __repr__(self):
        if self.prec is None:
            return f"Scalar({format_exact(self)})"
        return f"Ball({format_exact(self.mid())} +/- {float(self.rad):.3g}, prec={self.prec})"

    __str__ = __repr__


ZERO = _mk(_ZERO, _ZERO, _ZERO, None)
ONE = _mk(_ONE, _ZERO, _ZERO, None)
I = _mk(_ZERO, _ONE, _ZERO, None)


def _mpf_to_mpq(x) -> mpq:
    sign, man, exp, _ = (x if isinstance(x, mpmath.mpf) else mpmath.mpf(x))._mpf_
    if sign:
        man = -man
    if not man:
        return _ZERO
    return mpq(man, mpz(1) << -exp) if exp < 0 else mpq(man * (mpz(1) << exp))


def _mpq_to_mpf(q: mpq):
    return mpmath.mpf(int(q.numerator)) / int(q.denominator)


def _fmt_q(q: mpq) -> str:
    if q.denominator == 1:
        return str(int(q.numerator))
    return f"{int(q.numerator)}/{int(q.denominator)}"


def format_exact(c: Scalar) -> str:
    """``p/q`` or ``p/q+r/s i`` rendering of the (mid)value."""
    if not c.im:
        return _fmt_q(c.re)
    im = _fmt_q(abs(c.im))
    if not c.re:
        return ("-" if c.im < 0 else "") + f"{im} i"
    sign = "-" if c.im < 0 else "+"
    return f"{_fmt_q(c.re)}{sign}{im} i"


def parse_scalar(text: str) -> Scalar:
    """Parse ``p/q``, ``p/q+r/s i``, ``r/s i`` or ``i`` (whitespace-insensitive)."""
    s = "".join(str(text).split())
    if not s:
        raise InputError("empty scalar literal")
    if not s.endswith("i"):
        return _mk(to_mpq(s), _ZERO, _ZERO, None)
    body = s[:-1]
    # split at the last sign that is not in leading position
    cut = max(body.rfind("+", 1), body.rfind("-", 1))
    if cut > 0 and body[cut - 1] not in "eE":
        re_txt, im_txt = body[:cut], body[cut:]
    else:
        re_txt, im_txt = "0", body
    if im_txt in ("", "+"):
        im_txt = "1"
    elif im_txt == "-":
        im_txt = "-1"
    return _mk(to_mpq(re_txt), to_mpq(im_txt), _ZERO, None)


def scalar_to_json(c: Scalar):
    if c.prec is None:
        return format_exact(c)
    return {"mid": [_fmt_q(c.re), _fmt_q(c.im)], "rad": _fmt_q(c.rad), "prec": c.prec}


def scalar_from_json(obj) -> Scalar:
    if isinstance(obj, str):
        return parse_scalar(obj)
    if isinstance(obj, dict):
        try:
            re, im = obj["mid"]
            return Scalar(to_mpq(re), to_mpq(im), to_mpq(obj["rad"]), int(obj["prec"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad ball literal {obj!r}") from exc
    raise InputError(f"bad scalar literal {obj!r}")
