"""Gluing chart lifts into a weak lift on a base box, and grid diagnostics.

A :class:`WeakLift` routes a base point through the chain maps of its charts:
power substitutions are inverted orthant by orthant, blow-ups are inverted
by slope, and recentring translations pick the nearest special point.  The
points where a routing decision is ambiguous (coordinate hyperplanes of
nontrivial power maps, blow-up centers, seams between charts) form the
exceptional set E, stored as parametrized segments and points.  Off E the
value is the chart series at the inverted point, snapped to the exact fiber
by matching against the roots of the fiber polynomial.

:func:`verify` samples a weak lift on a ladder of dyadic grids and reports
the master residual, boundedness, gradient integrals, jump estimates and
(for real families) Lipschitz stability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from .desingularizer import ChartMap, ResolutionTree, chain_forward, chain_from_json, chain_to_json
from .errors import (
    CoverageGap,
    DimensionMismatch,
    InputError,
    InvliftError,
    MissingChart,
    PrecisionExhausted,
    Unsupported,
)
from .invariants import (
    Family,
    InvariantSystem,
    Membership,
    fiber_polynomial,
    membership_test,
    sigma_eval,
)
from .lifter import LiftChart, LiftProblem, lift
from .polyroots import isolate_roots, realify
from .scalar import DEFAULT_PRECISION, Scalar
from .series import INF, series_from_json, series_to_json

__all__ = [
    "ESegment",
    "FunctionLift",
    "LevelStats",
    "VerificationReport",
    "WeakLift",
    "assemble_weak_lift",
    "glue_blow_down",
    "glue_power_substitution",
    "patch_charts",
    "section_map",
    "verify",
]

_E = "E"
_GAP = "gap"


# -- exceptional set ---------------------------------------------------------

def _clip(p, q, lo, hi):
    """Liang-Barsky clipping of the segment p-q to a box; None when outside."""
    t0, t1 = 0.0, 1.0
    for a, b, l, h in zip(p, q, lo, hi):
        d = b - a
        for num, den in ((a - l, -d), (h - a, d)):
            if den == 0:
                if num < 0:
                    return None
                continue
            t = num / den
            if den < 0:
                t0 = max(t0, t)
            else:
                t1 = min(t1, t)
    if t0 > t1:
        return None
    return (tuple(a + t0 * (b - a) for a, b in zip(p, q)),
            tuple(a + t1 * (b - a) for a, b in zip(p, q)))


@dataclass(frozen=True)
class ESegment:
    """Straight segment (or point) in chart coordinates, mapped to the base by ``chain``."""

    chain: tuple
    start: tuple
    end: tuple
    kind: str = "axis"

    @property
    def is_point(self):
        return self.start == self.end

    def image(self, t: float):
        p = tuple(a + t * (b - a) for a, b in zip(self.start, self.end))
        return tuple(float(v) for v in chain_forward(self.chain, p))

    def measure(self, lo, hi, pieces: int = 512) -> float:
        """Codimension-one measure inside the box [lo, hi]: a point count for q=1, a length for q=2."""
        if len(self.start) == 1:
            x = self.image(0.0)[0]
            return 1.0 if lo[0] <= x <= hi[0] else 0.0
        if self.is_point:
            return 0.0

        def polyline(k):
            pts = [self.image(i / k) for i in range(k + 1)]
            total = 0.0
            for a, b in zip(pts, pts[1:]):
                c = _clip(a, b, lo, hi)
                if c is not None:
                    total += math.dist(*c)
            return total

        chord = polyline(1)
        fine = polyline(pieces)
        return chord if abs(fine - chord) <= 1e-12 * max(1.0, chord) else fine

    def to_json(self):
        return {"chain": chain_to_json(self.chain), "start": [repr(float(v)) for v in self.start],
                "end": [repr(float(v)) for v in self.end], "kind": self.kind}

    @staticmethod
    def from_json(obj):
        return ESegment(chain_from_json(obj["chain"]), tuple(float(v) for v in obj["start"]),
                        tuple(float(v) for v in obj["end"]), obj.get("kind", "axis"))


def _dedupe(segments):
    out, seen = [], set()
    for s in segments:
        a, b = s.image(0.0), s.image(1.0)
        key = tuple(sorted((tuple(round(v, 12) for v in a), tuple(round(v, 12) for v in b))))
        if key not in seen:
            seen.add(key)
            out.append(s)
    return out


# -- float helpers -------------------------------------------------------------

def _compile(series):
    return [(e, complex(c)) for e, c in series.coeffs.items()]


def _eval_terms(terms, point):
    total = 0j
    for e, c in terms:
        term = c
        for p, k in zip(point, e):
            if k:
                term *= p ** k
        total += term
    return total


def _e_from_p_float(p):
    e = [1.0 + 0j]
    for k in range(1, len(p) + 1):
        acc = 0j
        for i in range(1, k + 1):
            acc += (1 if i % 2 else -1) * e[k - i] * p[i - 1]
        e.append(acc / k)
    return e[1:]


def fiber_roots_float(sys: InvariantSystem, z):
    """Floating-point roots of the fiber polynomial (2n values +-x_i for B_n)."""
    z = [complex(v) for v in z]
    if sys.family is Family.SYMMETRIC_REAL_TRACE_ZERO:
        e = _e_from_p_float([0j] + z)
    else:
        e = z
    desc = [1.0 + 0j] + [(-1) ** (j + 1) * c for j, c in enumerate(e)]
    r = np.roots(desc) if len(desc) > 1 else np.array([], dtype=complex)
    if sys.family is Family.SIGNED_PERM_REAL:
        s = np.sqrt(r.astype(complex))
        r = np.concatenate([s, -s])
    return [complex(v) for v in r]


def _greedy_match(pred, roots, capacity=None):
    """Assign each predicted value to the nearest unused root (global greedy order)."""
    cap = list(capacity) if capacity is not None else [1] * len(roots)
    pairs = sorted((abs(p - r), i, k) for i, p in enumerate(pred) for k, r in enumerate(roots))
    out = [None] * len(pred)
    for _, i, k in pairs:
        if out[i] is None and cap[k] > 0:
            out[i] = k
            cap[k] -= 1
    return out


def _order_key(v, scale):
    tol = 1e-9 * scale
    return (-round(v.real / tol) if tol else -v.real, -v.imag)


def ordered_roots(values):
    """Descending (real, imaginary) order with a tolerance on ties of the real part."""
    scale = max([1.0] + [abs(v) for v in values])
    return sorted(values, key=lambda v: _order_key(v, scale))


# -- the chain trie --------------------------------------------------------------

class _Node:
    __slots__ = ("children", "chart", "kind", "slope", "shifts", "gamma", "lo", "hi", "prefix")

    def __init__(self, prefix):
        self.children = {}
        self.chart = None
        self.kind = None
        self.slope = 1.0
        self.shifts = []
        self.gamma = ()
        self.lo = ()
        self.hi = ()
        self.prefix = prefix


def _normalize(chain):
    """Insert the zero recentring after a chart-0 blow-up that is not recentred."""
    out = []
    for i, m in enumerate(chain):
        out.append(m)
        if m.kind == "blowup" and m.chart == 0:
            nxt = chain[i + 1] if i + 1 < len(chain) else None
            if nxt is None or nxt.kind != "translation":
                out.append(ChartMap.translation((0, 0)))
    return tuple(out)


def _child_interval(node, key):
    """Chart-coordinate box of a child, from the parent box."""
    lo, hi = node.lo, node.hi
    if key.kind == "power":
        def inv(v, g):
            return math.copysign(abs(v) ** (1.0 / g), v)
        return (tuple(inv(a, g) for a, g in zip(lo, key.gamma)),
                tuple(inv(b, g) for b, g in zip(hi, key.gamma)))
    if key.kind == "shear":
        j, o = key.chart, 1 - key.chart
        reach = max(abs(lo[o]), abs(hi[o]))
        bound = sum(abs(complex(c)) * reach ** k for k, c in enumerate(key.shift, start=1))
        a, b = list(lo), list(hi)
        a[j] -= bound
        b[j] += bound
        return tuple(a), tuple(b)
    if key.kind == "blowup":
        s = node.slope
        if key.chart == 0:
            return (lo[0], -s), (hi[0], s)
        return (-1.0 / s, lo[1]), (1.0 / s, hi[1])
    r = [float(complex(c).real) for c in key.shift]
    cells = sorted(float(complex(k.shift[1]).real) for k in node.children)
    i = cells.index(r[1])
    cell_lo = (cells[i - 1] + cells[i]) / 2 if i > 0 else lo[1]
    cell_hi = (cells[i] + cells[i + 1]) / 2 if i + 1 < len(cells) else hi[1]
    return (lo[0] - r[0], cell_lo - r[1]), (hi[0] - r[0], cell_hi - r[1])


class _ChartRouter:
    """Point location and evaluation for a set of charts sharing a base box."""

    def __init__(self, charts, box, q):
        self.q = q
        self.root = _Node(())
        self.root.lo = tuple(-float(b) for b in box[:q])
        self.root.hi = tuple(float(b) for b in box[:q])
        self.charts = list(charts)
        self.paths = []
        for idx, ch in enumerate(self.charts):
            node = self.root
            chain = _normalize(ch.chain)
            for m in chain:
                if node.chart is not None:
                    raise Unsupported("a chart chain is a prefix of another chart chain")
                child = node.children.get(m)
                if child is None:
                    child = _Node(node.prefix + (m,))
                    node.children[m] = child
                node = child
            if node.children or node.chart is not None:
                raise Unsupported("two charts share a chain, or one chain extends another")
            node.chart = idx
            self.paths.append(chain)
        self._finish(self.root)
        self.terms = [[_compile(s) for s in ch.lift] for ch in self.charts]
        self.exact = [all(s.trunc == INF and s.is_exact for s in ch.lift) for ch in self.charts]

    def _finish(self, node):
        if node.chart is not None or not node.children:
            return
        kinds = {k.kind for k in node.children}
        if len(kinds) != 1:
            raise Unsupported("mixed substitution kinds at one chart node")
        node.kind = kinds.pop()
        if node.kind == "power":
            gammas = {k.gamma for k in node.children}
            if len(gammas) != 1:
                raise Unsupported("different power substitutions at one chart node")
            node.gamma = gammas.pop()
        elif node.kind == "translation":
            node.shifts = sorted(((tuple(float(complex(c).real) for c in k.shift), k)
                                  for k in node.children), key=lambda t: t[0])
        elif node.kind == "shear" and len(node.children) > 1:
            raise Unsupported("different shears at one chart node")
        elif node.kind == "blowup":
            c0 = node.children.get(ChartMap.blowup(0))
            rs = [abs(float(complex(k.shift[1]).real)) for k in (c0.children if c0 else ())]
            node.slope = max([1.0] + [2 * r for r in rs])
        for key, child in node.children.items():
            child.lo, child.hi = _child_interval(node, key)
            self._finish(child)

    # -- routing ------------------------------------------------------------
    def route(self, x, force=None):
        """(chart index, chart point, sides) or the markers ``_E`` / ``_GAP``.

        With ``force`` (a previous route's keys and sides) the same branches
        are taken; this evaluates a piece on the closure of its region.
        Returns None when a forced route is undefined at x.
        """
        node, u = self.root, tuple(float(v) for v in x)
        trail = []
        while node.chart is None:
            if node.kind is None:
                return _GAP
            step = force[len(trail)] if force is not None else None
            if node.kind == "power":
                g = node.gamma
                if step is not None:
                    key, side = step
                else:
                    if any(v == 0 and gj > 1 for v, gj in zip(u, g)):
                        return _E
                    side = tuple(1 if v < 0 and gj > 1 else 0 for v, gj in zip(u, g))
                    key = ChartMap.power(g, tuple(s if gj % 2 == 0 else 0 for s, gj in zip(side, g)))
                u = tuple(v if gj == 1 else (-1) ** s * abs(v) ** (1.0 / gj)
                          for v, s, gj in zip(u, side, g))
            elif node.kind == "blowup":
                a, b = u
                side = ()
                if step is not None:
                    key = step[0]
                    if (key.chart == 0 and a == 0) or (key.chart == 1 and b == 0):
                        return None
                else:
                    if a == 0 and b == 0:
                        return _E
                    lim = node.slope * abs(a)
                    if abs(b) == lim:
                        return _E
                    key = ChartMap.blowup(0 if abs(b) < lim else 1)
                u = (a, b / a) if key.chart == 0 else (a / b, b)
            elif node.kind == "shear":
                side = ()
                key = next(iter(node.children)) if step is None else step[0]
                v = list(u)
                v[key.chart] = u[key.chart] - key.phi_float(u[1 - key.chart])
                u = tuple(v)
            else:
                side = ()
                if step is not None:
                    key = step[0]
                    shift = tuple(float(complex(c).real) for c in key.shift)
                else:
                    d = sorted((math.dist(u, s), i) for i, (s, _) in enumerate(node.shifts))
                    if len(d) > 1 and d[0][0] == d[1][0]:
                        return _E
                    shift, key = node.shifts[d[0][1]]
                u = tuple(v - s for v, s in zip(u, shift))
            child = node.children.get(key)
            if child is None:
                return _GAP
            trail.append((key, side))
            node = child
        return node.chart, u, tuple(trail)

    def exceptional_set(self):
        segs = []

        def walk(node):
            if node.chart is not None:
                return
            lo, hi = node.lo, node.hi
            if node.kind == "power":
                for j, g in enumerate(node.gamma):
                    if g > 1:
                        a = list(lo)
                        b = list(hi)
                        a[j] = b[j] = 0.0
                        segs.append(ESegment(node.prefix, tuple(a), tuple(b), "power-axis"))
            elif node.kind == "blowup":
                segs.append(ESegment(node.prefix, (0.0, 0.0), (0.0, 0.0), "center"))
                s = node.slope
                for sgn in (1, -1):
                    segs.append(ESegment(node.prefix, (lo[0], sgn * s * lo[0]),
                                         (hi[0], sgn * s * hi[0]), "chart-seam"))
            elif node.kind == "translation":
                cells = [s[1] for s, _ in node.shifts]
                for a, b in zip(cells, cells[1:]):
                    m = (a + b) / 2
                    segs.append(ESegment(node.prefix, (lo[0], m), (hi[0], m), "recentring-seam"))
            for child in node.children.values():
                walk(child)

        walk(self.root)
        return _dedupe(segs)

    def leaf_chains(self):
        return [self.charts[i].chain for i in range(len(self.charts))]


# -- weak lifts ----------------------------------------------------------------

@dataclass
class WeakLift:
    """A lift defined off a closed exceptional set E of a base box.

    ``kind`` is ``charts`` (pieces come from lift charts), ``section``
    (fiberwise root selection over the invariant space) or ``patch``
    (priority gluing of ``parts`` with overlapping boxes).  ``box`` holds
    the half-widths of the base box around ``center``; ``data`` is the
    invariant-valued map being lifted, in coordinates centred at ``center``.
    """

    system: InvariantSystem
    kind: str
    box: tuple
    center: tuple = ()
    data: tuple | None = None
    charts: list = field(default_factory=list)
    parts: list = field(default_factory=list)
    E: list = field(default_factory=list)
    provenance: list = field(default_factory=list)
    precision: int = DEFAULT_PRECISION
    _router: object = field(default=None, repr=False, compare=False)
    _certified: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("charts", "section", "patch"):
            raise InputError(f"unknown weak lift kind {self.kind!r}")
        self.box = tuple(Fraction(b) for b in self.box)
        if not self.center:
            self.center = tuple(Fraction(0) for _ in self.box)
        self.center = tuple(Fraction(c) for c in self.center)
        if len(self.center) != len(self.box):
            raise DimensionMismatch("center and box dimensions differ")
        if self.data is not None:
            self.data = tuple(self.data)
        if self.kind == "charts" and self._router is None:
            self._router = _ChartRouter(self.charts, self.box, self.q)

    @property
    def q(self):
        return len(self.box)

    @property
    def lo(self):
        return tuple(float(c - b) for c, b in zip(self.center, self.box))

    @property
    def hi(self):
        return tuple(float(c + b) for c, b in zip(self.center, self.box))

    @property
    def is_real(self):
        return self.system.is_real

    def contains(self, x):
        return all(float(c - b) <= v <= float(c + b) for v, c, b in zip(x, self.center, self.box))

    # -- evaluation -----------------------------------------------------------
    def evaluate(self, x):
        """(piece key, values) for x off E; ``"E"`` on E; ``"gap"`` outside every piece."""
        if self.kind == "patch":
            k = self._owner(x)
            if k in (_E, _GAP):
                return k
            r = self.parts[k].evaluate(x)
            return r if r in (_E, _GAP, None) else ((k,) + r[0], r[1])
        if self.kind == "section":
            return self._section_value(x)
        local = tuple(float(v - c) for v, c in zip(x, self.center))
        r = self._router.route(local)
        if r in (_E, _GAP):
            return r
        idx, u, trail = r
        return (idx, tuple(s for _, s in trail)), self._chart_value(idx, u, local)

    def evaluate_in(self, key, x):
        """Value of the piece ``key`` at x, extended to the closure of its region."""
        if self.kind == "patch":
            return self.parts[key[0]].evaluate_in(key[1:], x)
        if self.kind == "section":
            r = self._section_value(x, closure=True)
            return None if r in (_E, _GAP, None) else r[1]
        idx = key[0]
        trail = [(m, s) for m, s in zip(self._router.paths[idx], key[1])]
        local = tuple(float(v - c) for v, c in zip(x, self.center))
        r = self._router.route(local, force=trail)
        if r in (_E, _GAP, None):
            return None
        return self._chart_value(idx, r[1], local)

    def target(self, x):
        """Float value of the data at x (the identity for sections)."""
        if self.kind == "section":
            return tuple(complex(v) for v in x)
        if self.kind == "patch":
            k = self._owner(x)
            if k in (_E, _GAP):
                k = next((i for i, p in enumerate(self.parts) if p.contains(x)), None)
                if k is None:
                    return None
            return self.parts[k].target(x)
        if self.data is None:
            return None
        local = tuple(float(v - c) for v, c in zip(x, self.center))
        return tuple(_eval_terms(_compile(f), local) for f in self.data)

    def _chart_value(self, idx, u, local):
        pred = [_eval_terms(t, u) for t in self._router.terms[idx]]
        if not self._router.exact[idx] and self.data is not None:
            z = [_eval_terms(_compile(f), local) for f in self.data]
            roots = fiber_roots_float(self.system, z)
            match = _greedy_match(pred, roots)
            pred = [roots[k] for k in match]
        if self.is_real:
            pred = [complex(v.real) for v in pred]
        return tuple(pred)

    def _section_value(self, z, closure=False):
        sys = self.system
        if sys.is_real:
            verdict = membership_test(sys, [Scalar(Fraction(v)) for v in z])
            if verdict is Membership.OUTSIDE:
                return None
        roots = fiber_roots_float(sys, z)
        if sys.family is Family.SIGNED_PERM_REAL:
            vals = sorted((complex(abs(r.real)) for r in roots[: sys.n]), key=lambda v: -v.real)
        else:
            vals = ordered_roots(roots)
            if sys.is_real:
                vals = [complex(v.real) for v in vals]
        if not closure and len(roots) > 1:
            scale = 1.0 + max(abs(r) for r in roots)
            sep = min(abs(a - b) for i, a in enumerate(roots) for b in roots[i + 1:])
            if sep <= 1e-9 * scale:
                return _E
        return ("section",), tuple(vals)

    # -- patching ---------------------------------------------------------------
    def _owner(self, x):
        cands = [i for i, p in enumerate(self.parts) if p.contains(x)]
        if not cands:
            return _GAP
        alive = list(cands)
        for i in cands:
            for j in cands:
                if i < j:
                    axis, seam = _seam(self.parts[i], self.parts[j])
                    if axis is None:
                        continue
                    if x[axis] == seam:
                        return _E
                    first_low = self.parts[i].center[axis] <= self.parts[j].center[axis]
                    loser = j if (x[axis] < seam) == first_low else i
                    if loser in alive:
                        alive.remove(loser)
        return alive[0] if alive else _E

    # -- exact values -------------------------------------------------------------
    def certified_value(self, x):
        """Certified fiber point at an exact base sample (matched to the float value).

        Returns ``(values, z)`` as Scalars, ``"E"`` on E, or None outside the domain.
        """
        xs = tuple(Fraction(v) for v in x)
        if xs not in self._certified:
            self._certified[xs] = self._certified_value(xs)
        return self._certified[xs]

    def _certified_value(self, xs):
        approx = self.evaluate(xs)
        if approx in (_E, _GAP) or approx is None:
            return approx
        sys = self.system
        if self.kind == "section":
            z = [Scalar(v) for v in xs]
        else:
            owner = self
            if self.kind == "patch":
                owner = self.parts[approx[0][0]]
            if owner.data is None:
                return None
            local = [Scalar(v - c) for v, c in zip(xs, owner.center)]
            z = [f.evaluate(local) for f in owner.data]
        if sys.family is Family.SYMMETRIC_REAL_TRACE_ZERO and sys.n == 1:
            return (Scalar(0),), z
        try:
            clusters = isolate_roots(fiber_polynomial(sys, z), self.precision)
        except PrecisionExhausted:
            return _E
        if self.kind == "section" and any(c.multiplicity > 1 for c in clusters):
            return _E
        centers = [c.center for c in clusters]
        match = _greedy_match(list(approx[1]), [complex(c) for c in centers],
                              [c.multiplicity for c in clusters])
        vals = [centers[k] for k in match]
        if sys.is_real:
            vals = [realify(v) for v in vals]
        return tuple(vals), z

    # -- exceptional set -------------------------------------------------------
    def e_measure(self) -> float:
        """Constructed codimension-one measure of E inside the base box."""
        lo, hi = self.lo, self.hi
        return sum(s.measure(lo, hi) for s in self.E)

    # -- serialization ---------------------------------------------------------
    def to_json(self):
        out = {
            "kind": self.kind,
            "system": self.system.to_json(),
            "box": [str(b) for b in self.box],
            "center": [str(c) for c in self.center],
            "precision": self.precision,
            "E": [s.to_json() for s in self.E],
            "provenance": list(self.provenance),
        }
        if self.data is not None:
            out["data"] = [series_to_json(f) for f in self.data]
        if self.kind == "charts":
            out["charts"] = [c.to_json() for c in self.charts]
        if self.kind == "patch":
            out["parts"] = [p.to_json() for p in self.parts]
        return out

    @staticmethod
    def from_json(obj):
        data = obj.get("data")
        return WeakLift(
            InvariantSystem.from_json(obj["system"]), obj["kind"],
            tuple(Fraction(b) for b in obj["box"]),
            tuple(Fraction(c) for c in obj.get("center", [])),
            tuple(series_from_json(f) for f in data) if data is not None else None,
            [LiftChart.from_json(c) for c in obj.get("charts", [])],
            [WeakLift.from_json(p) for p in obj.get("parts", [])],
            [ESegment.from_json(s) for s in obj.get("E", [])],
            list(obj.get("provenance", [])),
            int(obj.get("precision", DEFAULT_PRECISION)),
        )

    def __eq__(self, other):
        if not isinstance(other, WeakLift):
            return NotImplemented
        return self.to_json() == other.to_json()


def _seam(a: WeakLift, b: WeakLift):
    """Axis and position of the seam between two overlapping boxes (None if disjoint)."""
    best = None
    for j in range(a.q):
        lo = max(a.center[j] - a.box[j], b.center[j] - b.box[j])
        hi = min(a.center[j] + a.box[j], b.center[j] + b.box[j])
        if lo >= hi:
            return None, None
        if a.center[j] == b.center[j]:
            continue
        width = hi - lo
        if best is None or width < best[0]:
            best = (width, j, (lo + hi) / 2)
    if best is None:
        return None, None
    return best[1], float(best[2])


@dataclass
class FunctionLift:
    """A weak lift given by explicit formulas; used for fixtures and sensitivity checks.

    ``value(x)`` returns the lift values (or None on E) and ``data(x)`` the
    float value of the lifted map.
    """

    system: InvariantSystem
    box: tuple
    value: object
    data_fn: object
    E_points: tuple = ()
    center: tuple = ()
    precision: int = DEFAULT_PRECISION

    def __post_init__(self):
        self.box = tuple(Fraction(b) for b in self.box)
        if not self.center:
            self.center = tuple(Fraction(0) for _ in self.box)

    q = WeakLift.q
    lo = WeakLift.lo
    hi = WeakLift.hi
    is_real = WeakLift.is_real
    kind = "function"

    def evaluate(self, x):
        if tuple(float(v) for v in x) in self.E_points:
            return _E
        v = self.value(tuple(float(t) for t in x))
        return _E if v is None else (("f",), tuple(complex(t) for t in v))

    def evaluate_in(self, key, x):
        v = self.value(tuple(float(t) for t in x))
        return None if v is None else tuple(complex(t) for t in v)

    def target(self, x):
        return tuple(complex(t) for t in self.data_fn(tuple(float(v) for v in x)))

    def certified_value(self, x):
        return None

    def e_measure(self):
        return float(len(self.E_points)) if self.q == 1 else 0.0


# -- glue operations -------------------------------------------------------------

def _needed_epsilons(gamma):
    return list(product(*[(0, 1) if g % 2 == 0 else (0,) for g in gamma]))


def _from_charts(system, charts, box, data, precision, provenance):
    wl = WeakLift(system, "charts", tuple(box), data=data, charts=list(charts),
                  provenance=list(provenance), precision=precision)
    wl.E = wl._router.exceptional_set()
    return wl


def glue_power_substitution(charts, gamma, rho, system=None, data=None,
                            precision: int = DEFAULT_PRECISION) -> WeakLift:
    """Glue charts whose chains start with psi_{gamma, eps} over the orthants.

    ``rho`` is the chart box; the result lives on the box rho^gamma.  Every
    epsilon required by the parity rule must be present.
    """
    gamma = tuple(gamma)
    if not charts:
        raise MissingChart("no charts to glue")
    present = set()
    for ch in charts:
        first = ch.chain[0] if ch.chain else None
        if first is None or first.kind != "power" or first.gamma != gamma:
            raise InputError(f"chart does not start with the power substitution {gamma}")
        present.add(first.epsilon)
    missing = [e for e in _needed_epsilons(gamma) if e not in present]
    if missing:
        raise MissingChart(f"missing charts for epsilon {missing}")
    rho = tuple(Fraction(r) for r in rho)
    box = tuple(r ** g for r, g in zip(rho, gamma))
    system = system or charts[0].system
    return _from_charts(system, charts, box, data, precision,
                        [f"glued power substitution gamma={list(gamma)} over "
                         f"{len(present)} orthant charts"])


def glue_blow_down(tree: ResolutionTree, charts, system=None, data=None,
                   precision: int = DEFAULT_PRECISION, check_level: int = 5) -> WeakLift:
    """Push per-leaf lifts down through the blow-ups of a resolution tree."""
    if not charts:
        raise MissingChart("no charts to glue")
    for leaf in tree.leaves():
        n = len(leaf.chain)
        if not any(tuple(ch.chain[:n]) == tuple(leaf.chain) for ch in charts):
            raise CoverageGap(f"resolution leaf {leaf.label} has no chart")
    system = system or charts[0].system
    wl = _from_charts(system, charts, tree.box, data, precision,
                      [f"blow-down of a resolution tree with {len(tree.leaves())} leaves"])
    for x in _grid_points(wl, check_level, exact=False):
        if wl.evaluate(x) == _GAP:
            raise CoverageGap(f"base point {x} is covered by no chart and is not in E")
    return wl


def patch_charts(pieces) -> WeakLift:
    """Glue weak lifts on overlapping boxes by priority, with seams midway through overlaps."""
    pieces = list(pieces)
    if not pieces:
        raise InputError("nothing to patch")
    if len(pieces) == 1:
        return pieces[0]
    q = pieces[0].q
    if any(p.q != q for p in pieces):
        raise DimensionMismatch("patched pieces must share the base dimension")
    lo = [min(float(p.center[j] - p.box[j]) for p in pieces) for j in range(q)]
    hi = [max(float(p.center[j] + p.box[j]) for p in pieces) for j in range(q)]
    center = tuple(Fraction(a + b) / 2 for a, b in zip(lo, hi))
    box = tuple(Fraction(b - a) / 2 for a, b in zip(lo, hi))
    E = []
    for p in pieces:
        shift = tuple(float(c) for c in p.center)
        for s in p.E:
            chain = ((ChartMap.translation(shift),) + s.chain) if any(shift) else s.chain
            E.append(ESegment(chain, s.start, s.end, s.kind))
    for i, a in enumerate(pieces):
        for b in pieces[i + 1:]:
            axis, seam = _seam(a, b)
            if axis is None:
                continue
            start = [max(float(a.center[j] - a.box[j]), float(b.center[j] - b.box[j])) for j in range(q)]
            end = [min(float(a.center[j] + a.box[j]), float(b.center[j] + b.box[j])) for j in range(q)]
            start[axis] = end[axis] = seam
            E.append(ESegment((), tuple(start), tuple(end), "patch-seam"))
    out = WeakLift(pieces[0].system, "patch", box, center, parts=pieces, E=_dedupe(E),
                   provenance=[f"patched {len(pieces)} pieces by priority"],
                   precision=pieces[0].precision)
    return out


# -- verification ------------------------------------------------------------------

@dataclass
class LevelStats:
    level: int
    step: float
    samples: int
    e_samples: int
    gradient_integral: list
    gradient_total: float
    sup_gradient: float
    sup_value: float
    jump_count: int
    jump_measure: float
    jump_max: float
    skipped_cells: int

    def to_json(self):
        return {k: (repr(v) if isinstance(v, float) else
                    [repr(t) for t in v] if isinstance(v, list) else v)
                for k, v in self.__dict__.items()}

    @staticmethod
    def from_json(obj):
        kw = {}
        for k, v in obj.items():
            if k == "gradient_integral":
                kw[k] = [float(t) for t in v]
            elif isinstance(v, str):
                kw[k] = float(v)
            else:
                kw[k] = v
        return LevelStats(**kw)


@dataclass
class VerificationReport:
    """Grid diagnostics of a weak lift; verdicts are strings, never exceptions."""

    levels: list
    residual_samples: int = 0
    residual_exact: int = 0
    residual_sup: float = 0.0
    residual_certified: bool = True
    root_bound: float = 0.0
    e_measure: float = 0.0
    e_max_discriminant: float = 0.0
    integral_change: float = math.inf
    lipschitz_change: float = math.inf
    outside_samples: int = 0
    gap_samples: int = 0
    tolerances: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)

    @property
    def gradient_integral(self):
        """Finest-level estimate of the largest per-component gradient integral."""
        return max(self.levels[-1].gradient_integral) if self.levels else 0.0

    def to_json(self):
        out = {}
        for k, v in self.__dict__.items():
            if k == "levels":
                out[k] = [lv.to_json() for lv in v]
            elif k == "tolerances":
                out[k] = {t: repr(float(x)) for t, x in v.items()}
            elif isinstance(v, float):
                out[k] = repr(v)
            else:
                out[k] = v
        return out

    @staticmethod
    def from_json(obj):
        kw = {}
        for k, v in obj.items():
            if k == "levels":
                kw[k] = [LevelStats.from_json(t) for t in v]
            elif k == "tolerances":
                kw[k] = {t: float(x) for t, x in v.items()}
            elif isinstance(v, str):
                kw[k] = float(v)
            else:
                kw[k] = v
        return VerificationReport(**kw)

    def passed(self) -> bool:
        return all(v in ("pass", "consistent", "n/a") for v in self.verdicts.values())


def _grid_coords(wl, level, exact=True):
    n = 1 << level
    out = []
    for c, b in zip(wl.center, wl.box):
        pts = [c - b + Fraction(2 * k, n) * b for k in range(n + 1)]
        out.append(pts if exact else [float(p) for p in pts])
    return out


def _grid_points(wl, level, exact=True):
    return list(product(*_grid_coords(wl, level, exact)))


def _norm(vals):
    return math.sqrt(sum(abs(v) ** 2 for v in vals))


def _level_stats(wl, level, jump_tol):
    q = wl.q
    coords = _grid_coords(wl, level, exact=False)
    n = len(coords[0])
    h = coords[0][1] - coords[0][0]
    results = {}
    for idx in product(range(n), repeat=q):
        x = tuple(coords[j][i] for j, i in enumerate(idx))
        results[idx] = (x, wl.evaluate(x))
    ncomp = wl.system.dim
    integral = [0.0] * ncomp
    sup_grad = 0.0
    sup_val = 0.0
    e_samples = sum(1 for _, r in results.values() if r in (_E, None))
    for _, r in results.values():
        if r not in (_E, _GAP, None):
            sup_val = max(sup_val, max(abs(v) for v in r[1]))
    jumps = []
    skipped = 0

    def value_in(key, idx):
        x, r = results[idx]
        if r not in (_E, _GAP, None) and r[0] == key:
            return r[1]
        return wl.evaluate_in(key, x)

    offsets = list(product((0, 1), repeat=q))
    for idx in product(range(n - 1), repeat=q):
        corners = [tuple(i + o for i, o in zip(idx, off)) for off in offsets]
        keys = {results[c][1][0] for c in corners if results[c][1] not in (_E, _GAP, None)}
        if any(results[c][1] is None for c in corners):
            skipped += 1
            continue
        if not keys:
            skipped += 1
            continue
        owners = [results[c][1][0] for c in corners if results[c][1] not in (_E, _GAP, None)]
        key = max(keys, key=lambda k: (owners.count(k), -owners.index(k)))
        vals = [value_in(key, c) for c in corners]
        if any(v is None for v in vals):
            skipped += 1
            continue
        if len(keys) > 1:
            # seam inside the cell: the jump is the gap between the two pieces at a corner
            jump = max(_norm([a - b for a, b in zip(results[c][1][1], v)])
                       for c, v in zip(corners, vals)
                       if results[c][1] not in (_E, _GAP, None) and results[c][1][0] != key)
            if jump > jump_tol:
                jumps.append(jump)
        if q == 1:
            diff = [b - a for a, b in zip(vals[0], vals[1])]
            for j, d in enumerate(diff):
                integral[j] += abs(d)
            sup_grad = max(sup_grad, _norm(diff) / h)
        else:
            f00, f01, f10, f11 = vals
            gx = [((c - a) + (d - b)) / (2 * h) for a, b, c, d in zip(f00, f01, f10, f11)]
            gy = [((b - a) + (d - c)) / (2 * h) for a, b, c, d in zip(f00, f01, f10, f11)]
            for j in range(ncomp):
                integral[j] += math.hypot(abs(gx[j]), abs(gy[j])) * h * h
            sup_grad = max(sup_grad, math.sqrt(sum(abs(a) ** 2 + abs(b) ** 2 for a, b in zip(gx, gy))))
    # jumps through sampled points of E, between axis neighbours in different pieces
    for idx, (x, r) in results.items():
        if r != _E:
            continue
        for j in range(q):
            lo = idx[:j] + (idx[j] - 1,) + idx[j + 1:]
            hi = idx[:j] + (idx[j] + 1,) + idx[j + 1:]
            if lo not in results or hi not in results:
                continue
            ra, rb = results[lo][1], results[hi][1]
            if ra in (_E, _GAP, None) or rb in (_E, _GAP, None) or ra[0] == rb[0]:
                continue
            va, vb = wl.evaluate_in(ra[0], x), wl.evaluate_in(rb[0], x)
            if va is None or vb is None:
                continue
            jump = _norm([a - b for a, b in zip(va, vb)])
            if jump > jump_tol:
                jumps.append(jump)
    measure = len(jumps) * (h ** (q - 1))
    return LevelStats(level, h, len(results), e_samples, integral, sum(integral), sup_grad,
                      sup_val, len(jumps), measure, max(jumps, default=0.0), skipped)


def _root_bound(wl, points):
    bound = 0.0
    for x in points:
        z = wl.target(x)
        if z is None:
            continue
        roots = fiber_roots_float(wl.system, z)
        coeffs = np.poly(roots) if roots else np.array([1.0])
        bound = max(bound, 1.0 + float(max([0.0] + [abs(c) for c in coeffs[1:]])))
    return bound


def _discriminant(sys, z):
    roots = fiber_roots_float(sys, z)
    if sys.family is Family.SIGNED_PERM_REAL:
        roots = roots[: sys.n]
        roots = [r * r for r in roots]
    d = 1.0
    for i, a in enumerate(roots):
        for b in roots[i + 1:]:
            d *= abs(a - b) ** 2
    return d


def verify(wl, levels=None, residual_level=None, tol=1e-3, lipschitz_tol=0.05,
           jump_tol=None, residual_points=None) -> VerificationReport:
    """Sample a weak lift on dyadic grids and collect the diagnostics.

    ``levels`` is an increasing list of grid levels (2^level cells per axis).
    The certified residual uses the grid of ``residual_level`` (or explicit
    ``residual_points``).
    """
    q = wl.q
    if q not in (1, 2):
        raise Unsupported("grid diagnostics are implemented for one and two base variables")
    if levels is None:
        levels = list(range(6, 13)) if q == 1 else list(range(3, 7))
    levels = sorted(set(int(v) for v in levels))
    if len(levels) < 2:
        raise InputError("need at least two grid levels")
    precision = getattr(wl, "precision", DEFAULT_PRECISION)
    res_tol = 2.0 ** (-precision / 2)
    jump_tol = jump_tol if jump_tol is not None else 1e-6
    stats = [_level_stats(wl, L, jump_tol) for L in levels]
    report = VerificationReport(stats, tolerances={"residual": res_tol, "integral": tol,
                                                   "lipschitz": lipschitz_tol, "jump": jump_tol})
    # master residual
    if residual_level is None:
        residual_level = min(levels[-1], 6 if q == 1 else 3)
    pts = residual_points if residual_points is not None else _grid_points(wl, residual_level)
    sup = 0.0
    certified = True
    for x in pts:
        r = wl.certified_value(x)
        if r is _E or r == _E:
            continue
        if r == _GAP:
            report.gap_samples += 1
            continue
        if r is None:
            fr = wl.evaluate(x)
            if fr in (_E, _GAP, None):
                report.outside_samples += fr is None
                continue
            z = wl.target(x)
            if z is None:
                continue
            certified = False
            vals = [Scalar.coerce(complex(v)) for v in fr[1]]
            try:
                s = sigma_eval(wl.system, vals)
            except InvliftError:
                sup = math.inf
                report.residual_samples += 1
                continue
            sup = max(sup, max(abs(complex(a) - b) for a, b in zip(s, z)))
            report.residual_samples += 1
            continue
        vals, z = r
        report.residual_samples += 1
        try:
            s = sigma_eval(wl.system, vals)
        except InvliftError:
            sup = math.inf
            continue
        resid = [a - b for a, b in zip(s, z)]
        if all(c.is_zero() for c in resid):
            report.residual_exact += 1
            continue
        if not all(c.contains_zero() for c in resid):
            sup = math.inf
            continue
        sup = max(sup, max(float(c.abs_upper()) for c in resid))
    report.residual_sup = sup
    report.residual_certified = certified
    rtol = res_tol if certified else 1e-8
    report.verdicts["residual"] = "pass" if sup <= rtol and report.gap_samples == 0 else "fail"
    # boundedness against the root bound of the data
    report.root_bound = _root_bound(wl, _grid_points(wl, min(levels[-1], 6 if q == 1 else 4), exact=False))
    report.verdicts["bounded"] = ("pass" if max(s.sup_value for s in stats)
                                  <= report.root_bound * (1 + 1e-9) else "fail")
    # gradient integral: Cauchy over the last two levels
    a, b = stats[-2].gradient_total, stats[-1].gradient_total
    change = abs(b - a) / max(abs(b), 1e-300) if math.isfinite(a + b) else math.inf
    report.integral_change = change
    report.verdicts["integral"] = "consistent" if change <= tol else "inconclusive"
    # exceptional set
    report.e_measure = wl.e_measure()
    fractions = [s.e_samples / s.samples for s in stats]
    e_ok = math.isfinite(report.e_measure) and fractions[-1] <= fractions[0] + 1e-12
    report.verdicts["exceptional_set"] = "consistent" if e_ok else "inconclusive"
    # Lipschitz stability (real families)
    la, lb = stats[-2].sup_gradient, stats[-1].sup_gradient
    report.lipschitz_change = abs(lb - la) / max(abs(la), 1e-300) if math.isfinite(la + lb) else math.inf
    if wl.is_real:
        report.verdicts["lipschitz"] = "pass" if report.lipschitz_change < lipschitz_tol else "fail"
    else:
        report.verdicts["lipschitz"] = "n/a"
    totals = [s.gradient_total for s in stats]
    steps = [abs(b - a) for a, b in zip(totals, totals[1:])]
    finite = all(math.isfinite(t) for t in totals) and (
        len(steps) < 2 or steps[-1] <= steps[0] + 1e-9 * max(1.0, abs(totals[-1])))
    report.verdicts["gradient_finite"] = "consistent" if finite else "inconclusive"
    sbv = (report.verdicts["bounded"] == "pass" and finite and e_ok and report.gap_samples == 0)
    report.verdicts["sbv"] = "pass" if sbv else "fail"
    return report


def sample_rows(wl, level):
    """CSV-ready rows (x..., value re/im..., |grad|, in_E) on one grid level."""
    coords = _grid_coords(wl, level, exact=False)
    h = coords[0][1] - coords[0][0]
    rows = []
    for x in product(*coords):
        r = wl.evaluate(x)
        if r in (_E, _GAP, None):
            rows.append(list(x) + [math.nan] * (2 * wl.system.dim) + [math.nan, r != _GAP and r is not None])
            continue
        key, vals = r
        grads = []
        for j in range(wl.q):
            y = list(x)
            y[j] = x[j] + h if x[j] + h <= wl.hi[j] else x[j] - h
            other = wl.evaluate_in(key, tuple(y))
            if other is not None:
                grads.append(_norm([a - b for a, b in zip(other, vals)]) / h)
        g = math.sqrt(sum(t * t for t in grads)) if grads else math.nan
        flat = [t for v in vals for t in (v.real, v.imag)]
        rows.append(list(x) + flat + [g, False])
    return rows


# -- end-to-end ------------------------------------------------------------------

def assemble_weak_lift(p: LiftProblem, levels=None, tol=1e-3, residual_level=None):
    """Lift, glue every chart down to the base box, and verify on a grid ladder."""
    result = lift(p)
    q = p.nvars
    box = tuple(Fraction(b) for b in p.options.box[:q])
    kinds = sorted({m.kind for ch in result.charts for m in ch.chain})
    prov = [f"lifted {len(result.charts)} charts ({p.mode} mode)",
            "glued substitutions: " + (", ".join(kinds) if kinds else "none")]
    wl = _from_charts(p.system, result.charts, box, p.f, p.options.precision, prov)
    report = verify(wl, levels=levels, tol=tol, residual_level=residual_level)
    return wl, report


def section_map(sys: InvariantSystem, box=None, grid: int = 64, levels=None, tol=1e-3,
                precision: int = DEFAULT_PRECISION, center=None):
    """Section of the orbit map over a real box of invariant values.

    The section picks the fiber point by the deterministic ordering rule
    (descending real part, then imaginary part; nonnegative representatives
    for signed permutations).  Samples sit at the centres of a ``grid``-per-axis
    lattice; E is the set of samples with coincident roots.
    """
    q = sys.ngens
    box = tuple(Fraction(b) for b in (box or [1] * q))
    if len(box) != q:
        raise DimensionMismatch(f"{sys.family.value}({sys.n}) has {q} invariants")
    center = tuple(Fraction(c) for c in (center or [0] * q))
    wl = WeakLift(sys, "section", box, center, provenance=["fiberwise root selection"],
                  precision=precision)
    axes = [[c - b + (2 * k + 1) * b / grid for k in range(grid)] for c, b in zip(center, box)]
    pts = list(product(*axes))
    if q in (1, 2):
        report = verify(wl, levels=levels, tol=tol, residual_points=pts)
    else:
        report = VerificationReport([], tolerances={"residual": 2.0 ** (-precision / 2)})
        sup = 0.0
        for x in pts:
            r = wl.certified_value(x)
            if r is None or r == _E:
                continue
            vals, z = r
            report.residual_samples += 1
            resid = [a - b for a, b in zip(sigma_eval(sys, vals), z)]
            sup = max([sup] + [float(c.abs_upper()) for c in resid])
            if all(c.is_zero() for c in resid):
                report.residual_exact += 1
        report.residual_sup = sup
        report.verdicts["residual"] = "pass" if sup <= report.tolerances["residual"] else "fail"
    e_pts = [x for x in pts if wl.certified_value(x) == _E]
    report.e_max_discriminant = max([0.0] + [_discriminant(sys, [float(v) for v in x]) for x in e_pts])
    return wl, report
