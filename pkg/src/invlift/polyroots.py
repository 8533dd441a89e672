"""Univariate polynomials over Scalars and certified root isolation.

Polynomials are coefficient lists in ascending degree.  Roots are found with
Aberth iteration in mpmath and certified a posteriori: for pairwise distinct
approximations z_i, every connected component of the union of the disks
``D(z_i, n |W_i|)``, where ``W_i = p(z_i) / (lc * prod_{j != i} (z_i - z_j))`` is the
Weierstrass correction, contains exactly as many roots as disks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
from gmpy2 import mpq

from .errors import InputError, PrecisionExhausted
from .scalar import DEFAULT_PRECISION, ONE, ZERO, Scalar, max_precision, sqrt_lo, sqrt_up, to_mpq


# -- exact polynomial helpers -------------------------------------------

def trim(p):
    p = list(p)
    while p and p[-1].is_zero():
        p.pop()
    return p


def peval(p, z):
    acc = ZERO
    for c in reversed(p):
        acc = acc * z + c
    return acc


def pderiv(p):
    return [c * k for k, c in enumerate(p)][1:]


def pmul(a, b):
    if not a or not b:
        return []
    out = [ZERO] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x.is_zero():
            continue
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return trim(out)


def pdivmod(a, b):
    """Exact long division; ``b`` must have an exact nonzero leading coefficient."""
    a, b = trim(a), trim(b)
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    q = [ZERO] * max(len(a) - len(b) + 1, 0)
    r = list(a)
    lc_inv = b[-1].inverse()
    while len(r) >= len(b) and r:
        k = len(r) - len(b)
        c = r[-1] * lc_inv
        q[k] = c
        for i, y in enumerate(b):
            r[i + k] = r[i + k] - c * y
        r.pop()
        r = trim(r)
    return trim(q), r


def monic(p):
    p = trim(p)
    inv = p[-1].inverse()
    return [c * inv for c in p]


def pgcd(a, b):
    a, b = trim(a), trim(b)
    while b:
        a, b = b, pdivmod(a, b)[1]
    return monic(a) if a else []


def squarefree_decomposition(p):
    """Yun's algorithm over exact coefficients: list of (factor, multiplicity)."""
    p = monic(p)
    if len(p) <= 2:
        return [(p, 1)] if len(p) == 2 else []
    out = []
    d = pderiv(p)
    a = pgcd(p, d)
    b = pdivmod(p, a)[0]
    c = pdivmod(d, a)[0]
    k = 1
    while len(b) > 1:
        dd = [x - y for x, y in _pad(c, pderiv(b))]
        dd = trim(dd)
        g = pgcd(b, dd) if dd else monic(b)
        if len(g) > 1:
            out.append((g, k))
        b = pdivmod(b, g)[0]
        c = pdivmod(dd, g)[0] if dd else []
        k += 1
    return out


def _pad(a, b):
    n = max(len(a), len(b))
    return zip(list(a) + [ZERO] * (n - len(a)), list(b) + [ZERO] * (n - len(b)))


def poly_from_roots(roots):
    p = [ONE]
    for r in roots:
        p = pmul(p, [-Scalar.coerce(r), ONE])
    return p


# -- Aberth iteration -----------------------------------------------------

def _aberth(p, prec, maxiter=400):
    n = len(p) - 1
    with mpmath.workprec(prec + 32):
        cs = [c.to_mpc() for c in p]
        lc = cs[-1]
        bound = 1 + max(abs(c / lc) for c in cs[:-1])
        zs = [bound * mpmath.expj(2 * mpmath.pi * (k + 0.3) / n + 0.4) * (1 - 0.05 * k / n)
              for k in range(n)]
        dcs = [cs[k] * k for k in range(1, n + 1)]
        eps = mpmath.mpf(2) ** (-prec - 8)
        for _ in range(maxiter):
            biggest = 0
            for i in range(n):
                z = zs[i]
                pv = mpmath.polyval(cs[::-1], z)
                if pv == 0:
                    continue
                dv = mpmath.polyval(dcs[::-1], z)
                s = mpmath.fsum(1 / (z - zs[j]) for j in range(n) if j != i and z != zs[j])
                ratio = pv / dv if dv != 0 else pv
                w = ratio / (1 - ratio * s)
                zs[i] = z - w
                biggest = max(biggest, abs(w) / max(1, abs(zs[i])))
            if biggest < eps:
                break
        return zs


def _certify(p, approx):
    """Inclusion radii for exact dyadic approximations; None if not separated."""
    n = len(p) - 1
    lc = p[-1]
    radii = []
    for i, z in enumerate(approx):
        num = peval(p, z).abs_upper()
        den = lc
        for j, w in enumerate(approx):
            if j != i:
                den = den * (z - w)
        lo = den.abs_lower()
        if lo <= 0:
            return None
        radii.append(num * n / lo)
    return radii


@dataclass
class RootCluster:
    """A certified disk containing ``multiplicity`` roots (with multiplicity).

    ``exact_multiplicity`` is True when the roots in the disk are known to
    coincide (from an exact square-free decomposition); otherwise a cluster of
    several roots only certifies that they cannot be separated at the working
    precision.
    """

    center: Scalar
    multiplicity: int
    exact_multiplicity: bool = True
    members: list = field(default_factory=list)

    @property
    def radius(self):
        return self.center.rad


def _components(centers, radii):
    n = len(centers)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            d2 = (centers[i].re - centers[j].re) ** 2 + (centers[i].im - centers[j].im) ** 2
            if d2 <= (radii[i] + radii[j]) ** 2:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _enclose(centers, radii, idx, prec):
    k = len(idx)
    re = sum((centers[i].re for i in idx), mpq(0)) / k
    im = sum((centers[i].im for i in idx), mpq(0)) / k
    rad = mpq(0)
    for i in idx:
        d = sqrt_up((centers[i].re - re) ** 2 + (centers[i].im - im) ** 2) + radii[i]
        rad = max(rad, d)
    return Scalar(re, im, 0).widen(rad).to_ball(prec) if rad else Scalar(re, im).to_ball(prec)


def _snap(p, center, rad):
    """Try to identify an isolated root with a small Gaussian rational."""
    if not all(c.is_exact for c in p):
        return None
    for limit in (10 ** 3, 10 ** 9, 10 ** 18):
        re = Fraction(int(center.re.numerator), int(center.re.denominator)).limit_denominator(limit)
        im = Fraction(int(center.im.numerator), int(center.im.denominator)).limit_denominator(limit)
        cand = Scalar(re, im)
        dist2 = (to_mpq(re) - center.re) ** 2 + (to_mpq(im) - center.im) ** 2
        if dist2 <= rad * rad and peval(p, cand).is_zero():
            return cand
    return None


def _isolate_simple(p, prec):
    """Isolate roots of a square-free polynomial; list of (Scalar, radius)."""
    n = len(p) - 1
    if n == 1:
        root = -p[0] / p[1]
        return [(root, mpq(0) if root.is_exact else root.rad)]
    cap = max_precision()
    work = prec
    while True:
        approx = [Scalar.exact_from_mpc(z) for z in _aberth(p, work)]
        radii = _certify(p, approx)
        if radii is not None:
            comps = _components(approx, radii)
            if all(len(c) == 1 for c in comps):
                out = []
                for z, r in zip(approx, radii):
                    snapped = _snap(p, z, r)
                    out.append((snapped, mpq(0)) if snapped is not None else (z, r))
                return out
        if not all(c.is_exact for c in p) and work >= _coeff_prec(p):
            raise PrecisionExhausted("roots of a ball polynomial cannot be separated")
        if work >= cap:
            raise PrecisionExhausted(f"root isolation needs more than {cap} bits")
        work = min(2 * work, cap)


def _coeff_prec(p):
    precs = [c.prec for c in p if c.prec is not None]
    return min(precs) if precs else 10 ** 9


def isolate_roots(p, precision: int = DEFAULT_PRECISION):
    """Certified root clusters of ``p`` (ascending coefficients, nonzero leading term).

    Clusters are sorted in descending order of (real part, imaginary part).
    """
    p = trim(p)
    if len(p) < 2:
        raise InputError("need a polynomial of positive degree")
    if not p[-1].certainly_nonzero():
        raise PrecisionExhausted("leading coefficient may vanish")
    clusters = []
    if all(c.is_exact for c in p):
        prec = precision
        while True:
            parts = []
            for factor, mult in squarefree_decomposition(p):
                for z, r in _isolate_simple(factor, prec):
                    parts.append((z, r, mult))
            centers = [z.mid() for z, _, _ in parts]
            radii = [r for _, r, _ in parts]
            if all(len(c) == 1 for c in _components(centers, radii)):
                break
            if prec >= max_precision():
                raise PrecisionExhausted("roots of distinct square-free factors overlap")
            prec *= 2
        for z, r, mult in parts:
            center = z if r == 0 and z.is_exact else Scalar(z.re, z.im).widen(r).to_ball(precision)
            clusters.append(RootCluster(center, mult, True, [center] * mult))
    else:
        prec = min(precision, _coeff_prec(p))
        approx = [Scalar.exact_from_mpc(z) for z in _aberth(p, prec)]
        radii = _certify(p, approx)
        if radii is None:
            # coincident approximations: perturb deterministically
            approx = [a + Scalar(mpq(k + 1, 2 ** (prec // 2))) for k, a in enumerate(approx)]
            radii = _certify(p, approx)
            if radii is None:
                raise PrecisionExhausted("cannot certify root enclosures")
        for comp in _components(approx, radii):
            if len(comp) == 1:
                i = comp[0]
                center = Scalar(approx[i].re, approx[i].im).widen(radii[i]).to_ball(prec)
            else:
                center = _enclose(approx, radii, comp, prec)
            clusters.append(RootCluster(center, len(comp), len(comp) == 1,
                                        [center] * len(comp)))
    clusters.sort(key=lambda c: c.center.sort_key())
    return clusters


def roots_list(p, precision: int = DEFAULT_PRECISION):
    """All roots with multiplicity, descending order."""
    out = []
    for c in isolate_roots(p, precision):
        out.extend([c.center] * c.multiplicity)
    return out


def is_real_cluster(cluster, all_clusters) -> bool:
    """Certify that the root(s) in a cluster are real (real-coefficient input).

    Exact centers decide directly.  For a ball holding a single root, the
    conjugate root lies in the mirrored disk; if that disk meets no other
    cluster, the root equals its own conjugate.
    """
    c = cluster.center
    if c.is_exact:
        return not c.im
    if abs(c.im) > c.rad:
        return False
    if cluster.multiplicity != 1:
        return False
    mirror = c.conjugate()
    return not any(o is not cluster and o.center.overlaps(mirror) for o in all_clusters)


def realify(c: Scalar) -> Scalar:
    """Enclosure of a root known to be real: drop the imaginary midpoint."""
    if c.is_exact:
        return c
    return Scalar(c.re, 0).widen(c.rad + abs(c.im)).to_ball(c.prec)


def real_roots(p, precision: int = DEFAULT_PRECISION):
    """Distinct real roots of a polynomial with exact real coefficients, ascending."""
    p = trim(p)
    if any(c.im for c in p):
        re = trim([Scalar(c.re) for c in p])
        im = trim([Scalar(c.im) for c in p])
        p = pgcd(re, im)
        if len(p) < 2:
            return []
    if len(p) < 2:
        return []
    clusters = isolate_roots(p, precision)
    return sorted((realify(c.center) for c in clusters if is_real_cluster(c, clusters)),
                  key=lambda z: z.re)


def ball_sqrt_real(x: Scalar, prec: int = DEFAULT_PRECISION) -> Scalar:
    """Enclosure of the nonnegative square root of a real nonnegative ball."""
    if x.is_exact:
        n, d = x.re.numerator, x.re.denominator
        from gmpy2 import is_square, isqrt
        if x.re >= 0 and is_square(n) and is_square(d):
            return Scalar(mpq(isqrt(n), isqrt(d)))
    lo = max(x.re - x.rad, mpq(0))
    hi = x.re + x.rad
    if hi < 0:
        raise InputError("square root of a negative number")
    scale = mpq(2) ** (2 * prec)
    a = sqrt_lo(lo * scale) / mpq(2) ** prec
    b = sqrt_up(hi * scale) / mpq(2) ** prec
    return Scalar((a + b) / 2).widen((b - a) / 2).to_ball(prec)
