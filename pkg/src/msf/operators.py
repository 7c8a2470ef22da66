"""Variable-coefficient differential operators in one and two variables.

A ``DiffOp1D`` is sum_k c_k(r) d^k/dr^k. A ``DiffOp2D`` is a sum of separable
terms cx(r) cy(r') d^i/dr^i d^j/dr'^j. Composition uses the Leibniz rule on
exact symbolic coefficients; vanishing is decided numerically by sampling.
"""

from __future__ import annotations

import math
from collections import defaultdict
from typing import Iterable, Sequence

import numpy as np

from . import functions as fn
from . import taylor
from .functions import Interval, SmoothFn

MAX_ORDER = 12
TRIM_SAMPLES = 32
TRIM_RTOL = 1e-13
ORDER_SAMPLES = 64
ORDER_RTOL = 1e-12

R = "r"
RP = "r'"


class OrderCapError(ValueError):
    pass


class AxisError(ValueError):
    pass


def probe_points(domain: Interval, n: int) -> np.ndarray:
    """n points in a finite window of ``domain`` kept clear of a finite left end."""
    a, b = domain.probe_window(3.0)
    if math.isfinite(domain.lo):
        a = domain.lo + 0.15 * (b - domain.lo)
    return np.linspace(a, b, n)


def _values(f: SmoothFn, pts: np.ndarray) -> np.ndarray:
    return np.asarray(fn.evaluate(f, pts), dtype=float)


# -- one variable ----------------------------------------------------------------


class DiffOp1D:
    """sum_k coeffs[k](var) d^k; immutable."""

    __slots__ = ("coeffs", "var", "domain")

    def __init__(self, coeffs: Sequence, var: str = R, trim: bool = True):
        cs = [fn.as_fn(c) for c in coeffs]
        dom = fn.REAL_LINE
        for c in cs:
            dom = dom.intersect(c.domain)
        while cs and cs[-1].is_zero():
            cs.pop()
        if trim and len(cs) > 1:
            pts = probe_points(dom, TRIM_SAMPLES)
            mags = [float(np.max(np.abs(_values(c, pts)))) for c in cs]
            top = max(mags)
            while len(cs) > 1 and mags[len(cs) - 1] <= TRIM_RTOL * top:
                cs.pop()
        if len(cs) - 1 > MAX_ORDER:
            raise OrderCapError(f"operator order {len(cs) - 1} exceeds cap {MAX_ORDER}")
        self.coeffs = tuple(cs)
        self.var = var
        self.domain = dom

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, k: int) -> SmoothFn:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else fn.zero(self.domain)

    def __repr__(self):
        return f"DiffOp1D(order={self.order}, var={self.var!r})"

    def _check(self, other: "DiffOp1D"):
        if self.var != other.var:
            raise AxisError(f"operators act on different variables {self.var!r}, {other.var!r}")

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = identity(self.var) * float(other)
        self._check(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return DiffOp1D([fn.add(self.coeff(k), other.coeff(k)) for k in range(n)], self.var)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __neg__(self):
        return (-1.0) * self

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return DiffOp1D([fn.scale(float(other), c) for c in self.coeffs], self.var, trim=False)
        return compose(self, other)

    def __rmul__(self, other):
        return self * other

    def __matmul__(self, other):
        return compose(self, other)


def identity(var: str = R, domain: Interval = fn.REAL_LINE) -> DiffOp1D:
    return DiffOp1D([fn.const(1.0, domain)], var)


def zero_op(var: str = R) -> DiffOp1D:
    return DiffOp1D([], var)


def schrodinger(v: SmoothFn, var: str = R) -> DiffOp1D:
    """-d^2 + v."""
    return DiffOp1D([v, fn.zero(v.domain), fn.const(-1.0, v.domain)], var)


def make_first_order(superpot: SmoothFn, sign: int, var: str = R) -> DiffOp1D:
    """-sign * d + superpot; sign=+1 gives the raising factor, -1 the lowering one."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return DiffOp1D([superpot, fn.const(-float(sign), superpot.domain)], var)


def _leibniz(p: Sequence[SmoothFn], q: Sequence[SmoothFn]) -> list[list[SmoothFn]]:
    """Bucketed coefficient pieces of (sum p_a d^a)(sum q_b d^b)."""
    n = len(p) + len(q) - 1
    out: list[list[SmoothFn]] = [[] for _ in range(max(n, 0))]
    for a, pa in enumerate(p):
        if pa.is_zero():
            continue
        for b, qb in enumerate(q):
            for k in range(a + 1):
                dq = qb.derivative(k)
                if dq.is_zero():
                    continue
                out[a + b - k].append(fn.scale(float(math.comb(a, k)), fn.mul(pa, dq)))
    return out


def compose(P: DiffOp1D, Q: DiffOp1D) -> DiffOp1D:
    P._check(Q)
    if P.order + Q.order > MAX_ORDER:
        raise OrderCapError(f"composition order {P.order + Q.order} exceeds cap {MAX_ORDER}")
    buckets = _leibniz(P.coeffs, Q.coeffs)
    return DiffOp1D([fn.add(*b) if b else fn.zero(P.domain.intersect(Q.domain)) for b in buckets], P.var)


def compose_all(*ops: DiffOp1D) -> DiffOp1D:
    out = ops[0]
    for op in ops[1:]:
        out = compose(out, op)
    return out


def power_op(P: DiffOp1D, n: int) -> DiffOp1D:
    out = identity(P.var, P.domain)
    for _ in range(n):
        out = compose(out, P)
    return out


def commutator(P, Q):
    if isinstance(P, DiffOp2D) or isinstance(Q, DiffOp2D):
        P, Q = as_2d(P), as_2d(Q)
        return compose2d(P, Q) - compose2d(Q, P)
    return compose(P, Q) - compose(Q, P)


def apply(P, f, points, g=None):
    """Symbolic application at points.

    1D: sum_k c_k f^(k). 2D: ``f`` acts on r, ``g`` on r', ``points`` is (r, r').
    """
    if isinstance(P, DiffOp2D):
        rs, rps = (np.asarray(a, dtype=float) for a in points)
        out = np.zeros(np.broadcast(rs, rps).shape)
        for (i, j), pairs in P.terms.items():
            fi = _values(f.derivative(i), rs)
            gj = _values(g.derivative(j), rps)
            for cx, cy in pairs:
                out = out + _values(cx, rs) * _values(cy, rps) * fi * gj
        return out
    pts = np.asarray(points, dtype=float)
    out = np.zeros(pts.shape)
    for k, c in enumerate(P.coeffs):
        out = out + _values(c, pts) * _values(f.derivative(k), pts)
    return out


def as_function(P: DiffOp1D, f: SmoothFn) -> SmoothFn:
    """P f as a new function node."""
    return fn.add(*(fn.mul(c, f.derivative(k)) for k, c in enumerate(P.coeffs)))


def apply_jet(P: DiffOp1D, r: float, fjet: np.ndarray) -> np.ndarray:
    """Jet of P f at r from the jet of f, using coefficient jets only.

    The result is shorter than ``fjet`` by the order of P.
    """
    n = len(fjet) - max(P.order, 0)
    if n <= 0:
        raise ValueError(f"jet of length {len(fjet)} too short for order {P.order}")
    out = np.zeros(n)
    for k, c in enumerate(P.coeffs):
        dk = taylor.series_derivative(fjet, k)[:n]
        out = out + taylor.series_mul(taylor.jet(c, r, n - 1), dk)
    return out


def leading_order(P):
    """Highest order with a coefficient not numerically zero.

    1D: an integer (-1 for the zero operator). 2D: (total, max i, max j).
    """
    if isinstance(P, DiffOp2D):
        return P.leading_order()
    if not P.coeffs:
        return -1
    pts = probe_points(P.domain, ORDER_SAMPLES)
    vals = [np.abs(_values(c, pts)) for c in P.coeffs]
    top = max(float(np.max(v)) for v in vals)
    for k in range(len(vals) - 1, -1, -1):
        if float(np.max(vals[k])) > ORDER_RTOL * top:
            return k
    return -1


# -- two variables ---------------------------------------------------------------


def _one(dom: Interval) -> SmoothFn:
    return fn.const(1.0, dom)


def _merge_pairs(pairs: Iterable[tuple[SmoothFn, SmoothFn]]) -> tuple:
    by_x: dict[int, list] = {}
    for cx, cy in pairs:
        if cx.is_zero() or cy.is_zero():
            continue
        slot = by_x.get(cx.serial)
        if slot is None:
            by_x[cx.serial] = [cx, [cy]]
        else:
            slot[1].append(cy)
    by_y: dict[int, list] = {}
    for cx, cys in by_x.values():
        cy = fn.add(*cys) if len(cys) > 1 else cys[0]
        if cy.is_zero():
            continue
        slot = by_y.get(cy.serial)
        if slot is None:
            by_y[cy.serial] = [cy, [cx]]
        else:
            slot[1].append(cx)
    out = []
    for cy, cxs in by_y.values():
        cx = fn.add(*cxs) if len(cxs) > 1 else cxs[0]
        if not cx.is_zero():
            out.append((cx, cy))
    out.sort(key=lambda t: (t[0].digest, t[1].digest))
    return tuple(out)


class DiffOp2D:
    """sum over (i, j) of sum cx(r) cy(r') d_r^i d_r'^j, canonical by (i, j)."""

    __slots__ = ("terms", "domains")

    def __init__(self, terms, domains: tuple[Interval, Interval] | None = None):
        raw = defaultdict(list)
        items = terms.items() if isinstance(terms, dict) else terms
        for key, pairs in items:
            raw[key].extend(pairs)
        canon = {}
        for key in sorted(raw):
            i, j = key
            if i + j > MAX_ORDER:
                raise OrderCapError(f"term order {i + j} exceeds cap {MAX_ORDER}")
            merged = _merge_pairs(raw[key])
            if merged:
                canon[key] = merged
        self.terms = canon
        if domains is None:
            dx, dy = fn.REAL_LINE, fn.REAL_LINE
            for pairs in canon.values():
                for cx, cy in pairs:
                    dx, dy = dx.intersect(cx.domain), dy.intersect(cy.domain)
            domains = (dx, dy)
        self.domains = domains

    def __repr__(self):
        return f"DiffOp2D(terms={len(self.terms)}, order={self.leading_order()})"

    def coefficient(self, i: int, j: int, points) -> np.ndarray:
        rs, rps = (np.asarray(a, dtype=float) for a in points)
        out = np.zeros(np.broadcast(rs, rps).shape)
        for cx, cy in self.terms.get((i, j), ()):
            out = out + _values(cx, rs) * _values(cy, rps)
        return out

    def coefficient_table(self, points) -> dict[tuple[int, int], np.ndarray]:
        return {key: self.coefficient(*key, points) for key in self.terms}

    def default_points(self, n: int = ORDER_SAMPLES, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng(seed)
        xs = probe_points(self.domains[0], 1024)
        ys = probe_points(self.domains[1], 1024)
        return rng.uniform(xs[0], xs[-1], n), rng.uniform(ys[0], ys[-1], n)

    def leading_order(self, points=None) -> tuple[int, int, int]:
        if not self.terms:
            return (-1, -1, -1)
        pts = self.default_points() if points is None else points
        table = {k: np.max(np.abs(v)) for k, v in self.coefficient_table(pts).items()}
        top = max(table.values())
        live = [k for k, v in table.items() if v > ORDER_RTOL * top]
        return (max(i + j for i, j in live), max(i for i, _ in live), max(j for _, j in live))

    def __add__(self, other: "DiffOp2D") -> "DiffOp2D":
        other = as_2d(other)
        terms = defaultdict(list)
        for op in (self, other):
            for key, pairs in op.terms.items():
                terms[key].extend(pairs)
        return DiffOp2D(terms)

    def __mul__(self, c):
        if isinstance(c, (int, float)):
            return DiffOp2D({k: [(fn.scale(float(c), cx), cy) for cx, cy in p] for k, p in self.terms.items()},
                            self.domains)
        return compose2d(self, as_2d(c))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + as_2d(other) * -1.0

    def __matmul__(self, other):
        return compose2d(self, as_2d(other))


def lift(P: DiffOp1D, axis: str | None = None) -> DiffOp2D:
    """Embed a one-variable operator along ``axis`` (defaults to its own tag)."""
    axis = P.var if axis is None else axis
    if axis == R:
        return DiffOp2D({(k, 0): [(c, _one(fn.REAL_LINE))] for k, c in enumerate(P.coeffs)})
    if axis == RP:
        return DiffOp2D({(0, k): [(_one(fn.REAL_LINE), c)] for k, c in enumerate(P.coeffs)})
    raise AxisError(f"unknown axis {axis!r}")


def tensor(Px: DiffOp1D, Py: DiffOp1D) -> DiffOp2D:
    """Px(r) Py(r'); the two factors must act on different variables."""
    if Px.var == Py.var:
        raise AxisError(f"both factors act on {Px.var!r}; a tensor product needs distinct axes")
    if Px.var == RP:
        Px, Py = Py, Px
    if Px.order + Py.order > MAX_ORDER:
        raise OrderCapError(f"tensor order {Px.order + Py.order} exceeds cap {MAX_ORDER}")
    return DiffOp2D({(i, j): [(cx, cy)] for i, cx in enumerate(Px.coeffs) for j, cy in enumerate(Py.coeffs)})


def as_2d(P) -> DiffOp2D:
    return P if isinstance(P, DiffOp2D) else lift(P)


def compose2d(P: DiffOp2D, Q: DiffOp2D) -> DiffOp2D:
    """Product of separable terms factorizes per axis, each by the Leibniz rule."""
    terms = defaultdict(list)
    cache: dict = {}

    def axis_product(c, i, d, k):
        key = (c.serial, i, d.serial, k)
        out = cache.get(key)
        if out is None:
            p = [fn.zero(c.domain)] * i + [c]
            q = [fn.zero(d.domain)] * k + [d]
            out = [(o, fn.add(*b)) for o, b in enumerate(_leibniz(p, q)) if b]
            cache[key] = out
        return out

    for (i, j), ppairs in P.terms.items():
        for (k, l), qpairs in Q.terms.items():
            if i + j + k + l > MAX_ORDER:
                raise OrderCapError(f"composition order {i + j + k + l} exceeds cap {MAX_ORDER}")
            for cx, cy in ppairs:
                for dx, dy in qpairs:
                    xs = axis_product(cx, i, dx, k)
                    ys = axis_product(cy, j, dy, l)
                    for ox, fx in xs:
                        for oy, fy in ys:
                            terms[(ox, oy)].append((fx, fy))
    return DiffOp2D(terms)


def apply2d_jets(P: DiffOp2D, r: float, rp: float, pieces):
    """Apply P to sum_s gx_s(r) gy_s(r') given as jet pairs; returns jet pairs."""
    out = []
    for (i, j), pairs in P.terms.items():
        for jx, jy in pieces:
            nx, ny = len(jx) - i, len(jy) - j
            if nx <= 0 or ny <= 0:
                raise ValueError("jets too short for operator order")
            dx = taylor.series_derivative(jx, i)
            dy = taylor.series_derivative(jy, j)
            for cx, cy in pairs:
                out.append((taylor.series_mul(taylor.jet(cx, r, nx - 1), dx),
                            taylor.series_mul(taylor.jet(cy, rp, ny - 1), dy)))
    return out


# -- residuals and summaries -----------------------------------------------------


def coefficient_values(P, points) -> list[np.ndarray]:
    if isinstance(P, DiffOp2D):
        return list(P.coefficient_table(points).values())
    pts = np.asarray(points, dtype=float)
    return [_values(c, pts) for c in P.coeffs]


def operator_scale(P, points) -> float:
    vals = coefficient_values(P, points)
    return max((float(np.max(np.abs(v))) for v in vals), default=0.0)


def pointwise_residual(P, points, scale: float = 1.0) -> float:
    """max |coefficient| / scale over every term and point (0 for the zero operator)."""
    vals = coefficient_values(P, points)
    if not vals:
        return 0.0
    if scale <= 0:
        raise ValueError("scale must be positive")
    return max(float(np.max(np.abs(v))) for v in vals) / scale


def relation_residual(P, Q, expected, points) -> float:
    """Residual of [P, Q] - expected, normalized by scale(P) * scale(Q)."""
    res = commutator(P, Q) - expected
    scale = operator_scale(P, points) * operator_scale(Q, points)
    return pointwise_residual(res, points, scale)


def summary(P, points) -> list[dict]:
    """Term table with coefficient values at the given probe points."""
    if isinstance(P, DiffOp2D):
        return [{"i": i, "j": j, "values": [float(x) for x in P.coefficient(i, j, points)]}
                for i, j in P.terms]
    pts = np.asarray(points, dtype=float)
    return [{"i": k, "j": 0, "values": [float(x) for x in _values(c, pts)]}
            for k, c in enumerate(P.coeffs)]


# -- ladder families -------------------------------------------------------------


def ladder_pair(W: SmoothFn, var: str = R) -> tuple[DiffOp1D, DiffOp1D]:
    return make_first_order(W, 1, var), make_first_order(W, -1, var)


def _omega(profile) -> SmoothFn:
    return profile if isinstance(profile, SmoothFn) else profile.omega


def make_S_ladders(W: SmoothFn, profile, base: int, var: str = R) -> DiffOp1D:
    """B+ A_base B-: third-order ladder of the deformed partner.

    ``profile`` is a deformation profile or the deformed superpotential itself.
    """
    omega = _omega(profile)
    Bp, Bm = ladder_pair(omega, var)
    A = make_first_order(W, base, var)
    return compose_all(Bp, A, Bm)


def make_M_R_ladders(W: SmoothFn, profile, var: str = R):
    """(M+, M-, R+, R-) with M+ = A+A+A-, M- = A+A-A-, R = B+ M B-."""
    omega = _omega(profile)
    Ap, Am = ladder_pair(W, var)
    Bp, Bm = ladder_pair(omega, var)
    Mp = compose_all(Ap, Ap, Am)
    Mm = compose_all(Ap, Am, Am)
    return Mp, Mm, compose_all(Bp, Mp, Bm), compose_all(Bp, Mm, Bm)
