"""Multifactor Hensel lifting of monic polynomials with series coefficients.

Given P(z) = sum a_k(x) z^k monic and a factorization P(0, z) = prod Q_i0(z) into
pairwise coprime monic factors, compute monic Q_i(x, z) with Q_i(0, z) = Q_i0
and prod Q_i = P up to the truncation order.  The correction of each
homogeneous degree solves the linear system
``sum_i dQ_i * prod_{j != i} Q_j0 = residual`` whose matrix is inverted once.
"""

from __future__ import annotations

from .errors import Indeterminate, InputError, PrecisionExhausted
from .polyroots import pmul
from .scalar import ONE, ZERO, Scalar
from .series import INF, TruncatedSeries


def _solve_factory(matrix):
    """LU-style elimination with certified-nonzero pivots; returns a solver."""
    n = len(matrix)
    a = [row[:] for row in matrix]
    perm = list(range(n))
    for col in range(n):
        best = None
        for r in range(col, n):
            if a[r][col].certainly_nonzero():
                mag = a[r][col].abs_lower()
                if best is None or mag > best[0]:
                    best = (mag, r)
        if best is None:
            raise Indeterminate("Hensel system is singular to working precision")
        r = best[1]
        a[col], a[r] = a[r], a[col]
        perm[col], perm[r] = perm[r], perm[col]
        inv = a[col][col].inverse()
        for rr in range(col + 1, n):
            if a[rr][col].is_zero():
                continue
            fac = a[rr][col] * inv
            a[rr][col] = fac
            for cc in range(col + 1, n):
                a[rr][cc] = a[rr][cc] - fac * a[col][cc]
    inverses = [a[i][i].inverse() for i in range(n)]

    def solve(rhs):
        b = [rhs[p] for p in perm]
        for i in range(n):
            for j in range(i):
                if not a[i][j].is_zero():
                    b[i] = b[i] - a[i][j] * b[j]
        x = [ZERO] * n
        for i in range(n - 1, -1, -1):
            acc = b[i]
            for j in range(i + 1, n):
                acc = acc - a[i][j] * x[j]
            x[i] = acc * inverses[i]
        return x

    return solve


def _poly_series_mul(a, b, trunc):
    """Product of polynomials in z whose coefficients are series."""
    out = [None] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            term = x.with_trunc(min(x.trunc, trunc)) * y.with_trunc(min(y.trunc, trunc))
            out[i + j] = term if out[i + j] is None else out[i + j] + term
    return out


def hensel_factor(coeffs, base_factors, trunc):
    """Lift ``base_factors`` (ascending Scalar lists, monic) to series factors.

    ``coeffs`` is the ascending list of series coefficients of the monic P.
    Returns a list of ascending series-coefficient lists, one per factor, each
    valid to total degree ``trunc`` (capped by the coefficients' orders).
    """
    if not coeffs:
        raise InputError("empty polynomial")
    nvars = coeffs[0].nvars
    n = len(coeffs) - 1
    if sum(len(q) - 1 for q in base_factors) != n:
        raise InputError("base factor degrees do not add up")
    N = min([trunc] + [c.trunc for c in coeffs])
    if N == INF:
        raise InputError("Hensel lifting needs a finite truncation order")
    if len(base_factors) == 1:
        return [[c.with_trunc(N) for c in coeffs]]
    degs = [len(q) - 1 for q in base_factors]
    # column for (i, l): z^l * prod_{j != i} Q_j0
    columns = []
    for i, _ in enumerate(base_factors):
        cof = [ONE]
        for j, q in enumerate(base_factors):
            if j != i:
                cof = pmul(cof, q)
        for l in range(degs[i]):
            col = [ZERO] * l + cof
            col = col + [ZERO] * (n - len(col))
            columns.append(col[:n])
    matrix = [[columns[c][r] for c in range(n)] for r in range(n)]
    solve = _solve_factory(matrix)
    factors = []
    for q, d in zip(base_factors, degs):
        f = [TruncatedSeries.const(c, nvars, N) for c in q]
        f[d] = TruncatedSeries.const(ONE, nvars, N)
        factors.append(f)
    target = [c.with_trunc(N) for c in coeffs]
    for k in range(1, N):
        prod = factors[0]
        for f in factors[1:]:
            prod = _poly_series_mul(prod, f, k + 1)
        exps = {}
        for z_pow in range(n):
            resid = target[z_pow].with_trunc(min(N, k + 1)) - prod[z_pow]
            for e, c in resid.coeffs.items():
                if sum(e) == k:
                    exps.setdefault(e, [ZERO] * n)[z_pow] = c
                elif sum(e) < k and c.certainly_nonzero():
                    raise PrecisionExhausted("Hensel residual did not vanish at lower order")
        for e, rhs in sorted(exps.items()):
            x = solve(rhs)
            pos = 0
            for i, d in enumerate(degs):
                for l in range(d):
                    if not x[pos].is_zero():
                        factors[i][l] = factors[i][l] + TruncatedSeries(nvars, N, {e: x[pos]})
                    pos += 1
    return factors


def base_factor(center: Scalar, multiplicity: int):
    """(z - center)^multiplicity as an ascending coefficient list."""
    q = [ONE]
    for _ in range(multiplicity):
        q = pmul(q, [-center, ONE])
    if len(q) == 1:
        q = [ONE]
    return q
