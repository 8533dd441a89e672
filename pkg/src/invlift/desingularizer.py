"""Chart maps, pullbacks, and normal-crossings resolution in one and two variables."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    BudgetExceeded,
    DimensionMismatch,
    Indeterminate,
    InputError,
    NotNormalCrossings,
    PrecisionExhausted,
    Unsupported,
    ZeroToTruncation,
)
from .polyroots import real_roots
from .scalar import ZERO, Scalar, scalar_from_json, scalar_to_json
from .series import (
    INF,
    TruncatedSeries,
    blowup_pullback,
    nc_factor,
    series_from_json,
    series_order,
    series_to_json,
    shear_pullback,
    substitute_power,
    translate,
)

DEFAULT_BUDGET = 64
DEFAULT_DEPTH = 16


@dataclass(frozen=True)
class ChartMap:
    """Atomic substitution: ``translation``, ``blowup``, ``power`` or ``shear``.

    ``blowup`` is the chart (x, xy) for index 0 and (xy, y) for index 1,
    applied after moving ``center`` to the origin.  ``shear`` replaces the
    coordinate ``chart`` by ``u_chart + phi(u_other)`` where ``shift`` holds the
    coefficients of t, t^2, ... of phi; pullbacks through it are cut at
    ``order`` because phi is a truncated branch of a curve.
    """

    kind: str
    shift: tuple = ()
    chart: int = 0
    gamma: tuple = ()
    epsilon: tuple = ()
    order: float = INF

    def __post_init__(self):
        if self.kind not in ("translation", "blowup", "power", "shear"):
            raise InputError(f"unknown chart kind {self.kind!r}")
        if self.kind == "power":
            if not self.gamma or min(self.gamma) < 1 or len(self.gamma) != len(self.epsilon):
                raise InputError("power substitutions need gamma >= 1 and matching epsilon")
        if self.kind in ("blowup", "shear") and self.chart not in (0, 1):
            raise InputError("blow-up chart index must be 0 or 1")

    @staticmethod
    def translation(c):
        return ChartMap("translation", shift=tuple(Scalar.coerce(v) for v in c))

    @staticmethod
    def blowup(chart, center=None):
        return ChartMap("blowup", shift=tuple(Scalar.coerce(v) for v in (center or ())), chart=chart)

    @staticmethod
    def power(gamma, epsilon):
        return ChartMap("power", gamma=tuple(gamma), epsilon=tuple(epsilon))

    @staticmethod
    def shear(axis, phi, order=INF):
        return ChartMap("shear", shift=tuple(Scalar.coerce(v) for v in phi), chart=axis, order=order)

    def phi_float(self, t: float) -> float:
        """Value of the shear function at a real parameter."""
        return sum(complex(c).real * t ** k for k, c in enumerate(self.shift, start=1))

    @property
    def is_trivial_power(self):
        return self.kind == "power" and all(g == 1 for g in self.gamma) and not any(self.epsilon)

    def pullback(self, f: TruncatedSeries) -> TruncatedSeries:
        if self.kind == "translation":
            return translate(f, list(self.shift))
        if self.kind == "blowup":
            if self.shift and not all(c.is_zero() for c in self.shift):
                f = translate(f, list(self.shift))
            return blowup_pullback(f, self.chart)
        if self.kind == "shear":
            return shear_pullback(f, self.chart, self.shift, self.order)
        if len(self.gamma) != f.nvars:
            raise DimensionMismatch("power substitution dimension mismatch")
        return substitute_power(f, self.gamma, self.epsilon)

    def forward(self, u):
        """Image of a chart point (floats or complex) in the parent coordinates."""
        if self.kind == "translation":
            return tuple(a + complex(c).real for a, c in zip(u, self.shift))
        if self.kind == "blowup":
            x, y = u
            out = (x, x * y) if self.chart == 0 else (x * y, y)
            if self.shift:
                out = tuple(a + complex(c).real for a, c in zip(out, self.shift))
            return out
        if self.kind == "shear":
            out = list(u)
            out[self.chart] = u[self.chart] + self.phi_float(u[1 - self.chart])
            return tuple(out)
        return tuple((-1) ** e * a ** g for a, g, e in zip(u, self.gamma, self.epsilon))

    def to_json(self):
        if self.kind == "translation":
            return {"kind": "translation", "c": [scalar_to_json(c) for c in self.shift]}
        if self.kind == "blowup":
            out = {"kind": "blowup", "chart": self.chart}
            if self.shift:
                out["center"] = [scalar_to_json(c) for c in self.shift]
            return out
        if self.kind == "shear":
            return {"kind": "shear", "axis": self.chart, "phi": [scalar_to_json(c) for c in self.shift],
                    "order": "inf" if self.order == INF else str(self.order)}
        return {"kind": "power", "gamma": list(self.gamma), "epsilon": list(self.epsilon)}

    @staticmethod
    def from_json(obj):
        kind = obj.get("kind")
        if kind == "translation":
            return ChartMap.translation([scalar_from_json(c) for c in obj["c"]])
        if kind == "blowup":
            return ChartMap.blowup(int(obj["chart"]), [scalar_from_json(c) for c in obj.get("center", [])])
        if kind == "power":
            return ChartMap.power(tuple(obj["gamma"]), tuple(obj["epsilon"]))
        if kind == "shear":
            order = obj.get("order", "inf")
            return ChartMap.shear(int(obj["axis"]), [scalar_from_json(c) for c in obj["phi"]],
                                  INF if order == "inf" else int(order))
        raise InputError(f"unknown chart map {obj!r}")


def apply_chart(chain, f: TruncatedSeries) -> TruncatedSeries:
    """Pull ``f`` back through the composed substitution (root first)."""
    for m in chain:
        f = m.pullback(f)
    return f


def chain_forward(chain, u):
    """Map a leaf-chart point to root coordinates."""
    for m in reversed(chain):
        u = m.forward(u)
    return u


def chain_to_json(chain):
    return [m.to_json() for m in chain]


def chain_from_json(obj):
    return tuple(ChartMap.from_json(m) for m in obj)


# -- one variable --------------------------------------------------------

def resolve_nc_1d(fs, zero_flags=None):
    """Valuations and unit factors; flagged-zero entries give None."""
    out = []
    for i, f in enumerate(fs):
        if zero_flags and zero_flags[i]:
            out.append(None)
            continue
        if f.nvars != 1:
            raise DimensionMismatch("resolve_nc_1d takes one-variable series")
        out.append(nc_factor(f))
    return out


# -- two variables -------------------------------------------------------

@dataclass
class NCCertificate:
    alpha: tuple
    unit: TruncatedSeries

    def to_json(self):
        return {"alpha": list(self.alpha), "unit": series_to_json(self.unit)}

    @staticmethod
    def from_json(obj):
        return NCCertificate(tuple(obj["alpha"]), series_from_json(obj["unit"]))


@dataclass
class ResolutionNode:
    chain: tuple
    multiplicity: int
    box: tuple
    children: list = field(default_factory=list)
    certificates: list | None = None
    label: str = "root"
    contact: int = 0

    @property
    def is_leaf(self):
        return self.certificates is not None

    def to_json(self):
        out = {
            "label": self.label,
            "chain": chain_to_json(self.chain),
            "multiplicity": self.multiplicity,
            "contact": self.contact,
            "box": [str(b) for b in self.box],
        }
        if self.is_leaf:
            out["certificates"] = [c.to_json() for c in self.certificates]
        else:
            out["children"] = [c.to_json() for c in self.children]
        return out

    @staticmethod
    def from_json(obj):
        node = ResolutionNode(chain_from_json(obj["chain"]), int(obj["multiplicity"]),
                              tuple(Fraction(b) for b in obj["box"]), label=obj.get("label", ""),
                              contact=int(obj.get("contact", 0)))
        if "certificates" in obj:
            node.certificates = [NCCertificate.from_json(c) for c in obj["certificates"]]
        else:
            node.children = [ResolutionNode.from_json(c) for c in obj["children"]]
        return node

    def __eq__(self, other):
        if not isinstance(other, ResolutionNode):
            return NotImplemented
        return self.to_json() == other.to_json()


@dataclass
class ResolutionTree:
    tracked: tuple
    root: ResolutionNode
    box: tuple = (Fraction(1), Fraction(1))

    def leaves(self):
        out = []

        def walk(node):
            if node.is_leaf:
                out.append(node)
            for c in node.children:
                walk(c)

        walk(self.root)
        return out

    def paths(self):
        """Root-to-leaf lists of nodes."""
        out = []

        def walk(node, acc):
            acc = acc + [node]
            if node.is_leaf:
                out.append(acc)
            for c in node.children:
                walk(c, acc)

        walk(self.root, [])
        return out

    def descent_logs(self):
        """Per path, the (multiplicity, axis contact) pairs from root to leaf."""
        return [[(n.multiplicity, n.contact) for n in p] for p in self.paths()]

    def depth(self):
        return max(len(p) - 1 for p in self.paths())

    def to_json(self):
        return {
            "tracked": [series_to_json(t) for t in self.tracked],
            "box": [str(b) for b in self.box],
            "root": self.root.to_json(),
        }

    @staticmethod
    def from_json(obj):
        return ResolutionTree(tuple(series_from_json(t) for t in obj["tracked"]),
                              ResolutionNode.from_json(obj["root"]),
                              tuple(Fraction(b) for b in obj["box"]))

    def __eq__(self, other):
        if not isinstance(other, ResolutionTree):
            return NotImplemented
        return self.to_json() == other.to_json()


def _strict_order(g: TruncatedSeries) -> int:
    """Order at the origin after removing the largest monomial factor."""
    if g.is_zero():
        raise ZeroToTruncation("tracked function vanishes identically")
    a = min(e[0] for e in g.coeffs)
    b = min(e[1] for e in g.coeffs)
    return min(e[0] - a + e[1] - b for e in g.coeffs)


def _axis_contact(g: TruncatedSeries) -> int:
    """ord h(0, y) + ord h(x, 0) for g = x^a y^b h; zero when h is a unit."""
    a = min(e[0] for e in g.coeffs)
    b = min(e[1] for e in g.coeffs)
    on_y = [e[1] - b for e in g.coeffs if e[0] == a]
    on_x = [e[0] - a for e in g.coeffs if e[1] == b]
    return min(on_y) + min(on_x)


def _nc_certificates(gs):
    certs = []
    for g in gs:
        try:
            alpha, unit = nc_factor(g)
        except NotNormalCrossings:
            return None
        certs.append(NCCertificate(alpha, unit))
    return certs


def _strict_part(g: TruncatedSeries) -> TruncatedSeries:
    """h with g = x^a y^b h, valid to the correspondingly lowered order."""
    a = min(e[0] for e in g.coeffs)
    b = min(e[1] for e in g.coeffs)
    return TruncatedSeries(2, g.trunc - a - b, {(i - a, j - b): c for (i, j), c in g.coeffs.items()})


def _branch(h: TruncatedSeries, axis: int, order) -> tuple:
    """Coefficients of phi with h(x_axis = phi(x_other)) = 0, to the given order.

    ``h`` vanishes at the origin and has a nonzero linear coefficient in
    ``x_axis``; each pass fixes one more coefficient.
    """
    other = 1 - axis
    lin = [0, 0]
    lin[axis] = 1
    c = h.coeff(tuple(lin))
    N = min(order, h.trunc)
    phi = []
    exact = False
    for _ in range(int(N) + 1 if N != INF else 64):
        r = shear_pullback(h, axis, phi, N)
        rest = {e[other]: v for e, v in r.coeffs.items() if e[axis] == 0}
        if not rest:
            exact = h.trunc == INF and len(phi) < N - 1
            break
        top = max(rest)
        phi = phi + [ZERO] * (top - len(phi))
        for k, v in rest.items():
            phi[k - 1] = phi[k - 1] - v / c
    while phi and phi[-1].is_zero():
        phi.pop()
    return tuple(phi), exact


def _derivative(h: TruncatedSeries, axis: int) -> TruncatedSeries:
    out = {}
    for e, c in h.coeffs.items():
        if e[axis]:
            f = list(e)
            f[axis] -= 1
            out[tuple(f)] = c * e[axis]
    return TruncatedSeries(2, h.trunc - 1, out)


def _shear_candidate(gs, order):
    """A shear that makes every tracked function normal crossings, or None.

    Applies when each non-unit strict part is a unit times a power of one
    smooth branch transverse to the divisor; the branch comes from the
    (k-1)-th derivative of an order-k strict part, and the shear is only
    accepted after the sheared functions pass the normal-crossings test.
    ``order`` of the result is infinite when the branch is a polynomial
    graph, so the shear introduces no truncation.  The sheared coordinate
    must not divide any tracked function, otherwise the shear would destroy
    an existing monomial factor.
    """
    for axis in (1, 0):
        if any(min(e[axis] for e in g.coeffs) > 0 for g in gs):
            continue
        branches = []
        for g in gs:
            h = _strict_part(g)
            if h.constant().certainly_nonzero():
                continue
            k = min(sum(e) for e in h.coeffs)
            pure = [0, 0]
            pure[axis] = k
            if not h.coeff(tuple(pure)).certainly_nonzero():
                branches = None
                break
            for _ in range(k - 1):
                h = _derivative(h, axis)
            if h.trunc < 2:
                branches = None
                break
            branches.append(_branch(h, axis, order))
        if not branches or not branches[0][0]:
            continue
        key = [tuple(scalar_to_json(c) for c in br) for br, _ in branches]
        if not all(k == key[0] for k in key):
            continue
        exact = all(ex for _, ex in branches)
        m = ChartMap.shear(axis, branches[0][0], INF if exact else order)
        pulled = [m.pullback(g) for g in gs]
        if _nc_certificates(pulled) is not None:
            return m, pulled
    return None


def _gap_box(roots, c, parent_box):
    """Half the distance to the nearest other special point, capped by the parent box."""
    gaps = [abs(Fraction(r.re) - Fraction(c.re)) for r in roots if r is not c]
    gaps = [g for g in gaps if g > 0]
    half = min(gaps) / 2 if gaps else Fraction(1)
    return (min(parent_box[0], Fraction(1)), min(half, Fraction(1)))


def resolve_nc_2d(F, budget: int = DEFAULT_BUDGET, max_depth: int = DEFAULT_DEPTH,
                  box=(Fraction(1), Fraction(1)), precision: int = 128,
                  trunc: int = 16) -> ResolutionTree:
    """Point blow-ups until every tracked polynomial is a monomial times a unit.

    ``F`` is a polynomial or a list of polynomials (the tracked set).  Children
    of a blow-up node are: chart 0 recentred at each real special point of
    the exceptional line (roots of the strict transforms), a chart-0 leaf at
    the origin when it is not special, and the chart-1 origin.

    A point whose only non-monomial factor is a single smooth branch
    transverse to the exceptional divisor is finished by a shear that
    straightens the branch; its Taylor coefficients are exact but cut at
    ``trunc``, so such leaves certify normal crossings up to that order.
    """
    tracked = [F] if isinstance(F, TruncatedSeries) else list(F)
    if not tracked:
        raise InputError("nothing to resolve")
    for g in tracked:
        if g.nvars != 2:
            raise DimensionMismatch("resolve_nc_2d takes two-variable polynomials")
        if g.trunc != INF:
            raise Unsupported("two-variable resolution needs polynomial input")
        if g.is_zero():
            raise InputError("tracked functions must be nonzero")
        if not g.is_exact:
            raise InputError("resolution needs exact coefficients")
    leaves = [0]

    def build(gs, chain, depth, box, label):
        certs = _nc_certificates(gs)
        if certs is not None:
            leaves[0] += 1
            if leaves[0] > budget:
                raise BudgetExceeded(f"resolution needs more than {budget} leaves")
            return ResolutionNode(tuple(chain), 0, box, certificates=certs, label=label)
        if depth >= max_depth:
            raise BudgetExceeded(f"resolution depth exceeds {max_depth}")
        mult = max(_strict_order(g) for g in gs)
        contact = sum(_axis_contact(g) for g in gs)
        node = ResolutionNode(tuple(chain), mult, box, label=label, contact=contact)
        cand = _shear_candidate(gs, trunc)
        if cand is not None:
            m, pulled = cand
            node.children.append(build(pulled, list(chain) + [m], depth + 1, box, f"{label}/shear"))
            return node
        # chart 0: G(x, xy) = x^a H(x, y)
        strict0 = []
        pulled0 = []
        for g in gs:
            p = blowup_pullback(g, 0)
            pulled0.append(p)
            a = min(e[0] for e in p.coeffs)
            h_on_e = {}
            for (i, j), c in p.coeffs.items():
                if i == a:
                    h_on_e[j] = h_on_e.get(j, ZERO) + c
            deg = max(h_on_e)
            strict0.append([h_on_e.get(j, ZERO) for j in range(deg + 1)])
        special = []
        for h in strict0:
            if len(h) < 2:
                continue
            for r in real_roots(h, precision):
                if not any(r.overlaps(s) for s in special):
                    special.append(r)
        special.sort(key=lambda r: r.re)
        for r in special:
            if not r.is_exact:
                raise PrecisionExhausted(
                    f"special point at slope {float(r.re):.6g} is irrational; exact recentring "
                    "is not supported")
        has_origin = any(r.is_zero() for r in special)
        for r in special:
            sub_chain = list(chain) + [ChartMap.blowup(0)]
            sub = pulled0
            if not r.is_zero():
                t = ChartMap.translation((ZERO, r))
                sub_chain.append(t)
                sub = [t.pullback(p) for p in pulled0]
            node.children.append(build(sub, sub_chain, depth + 1, _gap_box(special, r, box),
                                       f"{label}/c0@{r.re}"))
        if not has_origin:
            node.children.append(build(pulled0, list(chain) + [ChartMap.blowup(0)], depth + 1,
                                       _gap_box(special + [Scalar(0)], Scalar(0), box),
                                       f"{label}/c0"))
        pulled1 = [blowup_pullback(g, 1) for g in gs]
        node.children.append(build(pulled1, list(chain) + [ChartMap.blowup(1)], depth + 1,
                                   (Fraction(1), Fraction(1)), f"{label}/c1"))
        return node

    root = build(tracked, [], 0, tuple(Fraction(b) for b in box), "root")
    return ResolutionTree(tuple(tracked), root, tuple(Fraction(b) for b in box))


def verify_certificates(tree: ResolutionTree):
    """Recompute every leaf certificate; returns a list of problems (empty = ok)."""
    problems = []
    for leaf in tree.leaves():
        for k, (g, cert) in enumerate(zip(tree.tracked, leaf.certificates)):
            pulled = apply_chart(leaf.chain, g)
            if not cert.unit.constant().certainly_nonzero():
                problems.append(f"{leaf.label}: unit {k} vanishes at the origin")
            resid = pulled - cert.unit.mul_monomial(cert.alpha)
            if not resid.is_zero():
                problems.append(f"{leaf.label}: factorization residual of function {k} is nonzero")
    return problems


def check_descent(log, max_steps: int = DEFAULT_DEPTH) -> bool:
    """The log strictly decreases (lexicographically) and is short enough."""
    if len(log) - 1 > max_steps:
        return False
    return all(tuple(b) < tuple(a) for a, b in zip(log, log[1:]))


def is_power_free(chain) -> bool:
    return all(m.kind != "power" for m in chain)


def series_order_or_none(f):
    try:
        return series_order(f)
    except (NotNormalCrossings, ZeroToTruncation, Indeterminate):
        return None
