"""Derivative-closed algebra of smooth real functions of one variable.

Nodes are immutable and hash-consed: building the same expression twice
returns the same object, so common subexpressions (and their cached
derivatives) are shared. Evaluation is vectorized over numpy arrays and
memoized per call, which keeps deep operator coefficients cheap.
"""

from __future__ import annotations

import hashlib
import math
import threading
import weakref
from dataclasses import dataclass
from itertools import count
from numbers import Real

import numpy as np
from scipy.integrate import solve_ivp

from .quadrature import CumulativeIntegral, QuadratureError, quad_tolerance

INF = math.inf
# relative size below which a cancelled coefficient is treated as exactly zero
CANCEL_RTOL = 1e-14


class DomainError(ValueError):
    """A function was evaluated outside the interval it is defined on."""


class NonFiniteError(ArithmeticError):
    """An intermediate value came out inf or nan."""


class VanishingDenominatorError(ValueError):
    """A reciprocal was requested of a function that reaches zero."""


@dataclass(frozen=True)
class Interval:
    lo: float = -INF
    hi: float = INF
    lo_closed: bool = False
    hi_closed: bool = False

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty interval ({self.lo}, {self.hi})")

    def contains(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        lo_ok = r >= self.lo if self.lo_closed else r > self.lo
        hi_ok = r <= self.hi if self.hi_closed else r < self.hi
        return lo_ok & hi_ok

    def intersect(self, other: "Interval") -> "Interval":
        if self == other:
            return self
        if self.lo > other.lo:
            lo, lc = self.lo, self.lo_closed
        elif other.lo > self.lo:
            lo, lc = other.lo, other.lo_closed
        else:
            lo, lc = self.lo, self.lo_closed and other.lo_closed
        if self.hi < other.hi:
            hi, hc = self.hi, self.hi_closed
        elif other.hi < self.hi:
            hi, hc = other.hi, other.hi_closed
        else:
            hi, hc = self.hi, self.hi_closed and other.hi_closed
        return Interval(lo, hi, lc, hc)

    def probe_window(self, half: float = 3.0) -> tuple[float, float]:
        """A finite sub-window where coefficients are probed numerically.

        Infinite ends are cut at +-``half`` (or ``half`` past a finite end);
        open finite ends are pulled in by 10% of the width, away from any
        singular endpoint.
        """
        a = self.lo if math.isfinite(self.lo) else min(-half, self.hi - 2 * half)
        b = self.hi if math.isfinite(self.hi) else max(half, a + half)
        width = b - a
        if math.isfinite(self.lo) and not self.lo_closed:
            a += 0.1 * width
        if math.isfinite(self.hi) and not self.hi_closed:
            b -= 0.1 * width
        return a, b

    def samples(self, n: int, half: float = 3.0) -> np.ndarray:
        a, b = self.probe_window(half)
        return np.linspace(a, b, n)

    def __str__(self):
        left = "[" if self.lo_closed else "("
        right = "]" if self.hi_closed else ")"
        return f"{left}{self.lo:g}, {self.hi:g}{right}"


REAL_LINE = Interval()
POSITIVE = Interval(0.0, INF)

_serials = count()
_table: "weakref.WeakValueDictionary[tuple, SmoothFn]" = weakref.WeakValueDictionary()
_table_lock = threading.RLock()


def _canon(obj):
    if isinstance(obj, tuple):
        return tuple(_canon(x) for x in obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _intern(cls, key: tuple, **attrs):
    # keys reference children by digest; serials follow creation history, digests only structure
    full = (cls.__name__,) + _canon(key)
    with _table_lock:
        node = _table.get(full)
        if node is None:
            node = object.__new__(cls)
            node.__dict__.update(attrs)
            node.serial = next(_serials)
            node.digest = hashlib.blake2b(repr(full).encode(), digest_size=16).hexdigest()
            node._deriv = None
            _table[full] = node
    return node


class SmoothFn:
    """Base class for nodes; build instances with the module-level helpers."""

    kind = "abstract"
    domain: Interval
    serial: int
    digest: str

    def __init__(self, *args, **kwargs):
        raise TypeError("use the module-level constructors (poly, exp_, add, ...)")

    # -- evaluation ------------------------------------------------------
    def __call__(self, r):
        return evaluate(self, r)

    def _ev(self, r: np.ndarray, memo: dict) -> np.ndarray:
        v = memo.get(self.serial)
        if v is None:
            v = np.broadcast_to(np.asarray(self._eval(r, memo), dtype=float), r.shape)
            finite = np.isfinite(v)
            if not finite.all():
                bad = float(r[~finite][0])
                raise NonFiniteError(f"{self.kind} node produced {v[~finite][0]} at r={bad!r}")
            memo[self.serial] = v
        return v

    def _eval(self, r, memo):
        raise NotImplementedError

    # -- calculus --------------------------------------------------------
    def derivative(self, order: int = 1) -> "SmoothFn":
        f = self
        for _ in range(order):
            d = f._deriv
            if d is None:
                d = f._derivative()
                f._deriv = d
            f = d
        return f

    def _derivative(self) -> "SmoothFn":
        raise NotImplementedError

    def children(self) -> tuple:
        return ()

    # -- queries ---------------------------------------------------------
    def constant_value(self) -> float | None:
        return None

    def is_zero(self) -> bool:
        return False

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other):
        return add(self, as_fn(other))

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, scale(-1.0, as_fn(other)))

    def __rsub__(self, other):
        return add(as_fn(other), scale(-1.0, self))

    def __neg__(self):
        return scale(-1.0, self)

    def __mul__(self, other):
        if isinstance(other, Real):
            return scale(float(other), self)
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Real):
            return scale(1.0 / float(other), self)
        return mul(self, reciprocal(other))

    def __rtruediv__(self, other):
        return mul(as_fn(other), reciprocal(self))

    def __pow__(self, p):
        return power_of(self, p)

    def __repr__(self):
        return f"<{self.kind} #{self.serial} on {self.domain}>"

    # identity semantics; interning makes structural equality coincide
    __hash__ = object.__hash__


def as_fn(x) -> SmoothFn:
    if isinstance(x, SmoothFn):
        return x
    if isinstance(x, Real):
        return const(float(x))
    raise TypeError(f"cannot use {type(x).__name__} as a function")


def evaluate(f: SmoothFn, r):
    """Evaluate ``f`` at a scalar or array of points."""
    arr = np.asarray(r, dtype=float)
    flat = np.atleast_1d(arr).ravel()
    inside = f.domain.contains(flat)
    if not inside.all():
        raise DomainError(f"{f.kind} node evaluated at r={float(flat[~inside][0])!r} outside {f.domain}")
    with np.errstate(all="ignore"):
        out = f._ev(flat, {})
    if arr.ndim == 0:
        return float(out[0])
    return np.array(out).reshape(arr.shape)


# ---------------------------------------------------------------------------
# power sums: sum of c * r**p (polynomials and real powers)


def _is_natural(p: float) -> bool:
    return p >= 0 and float(p).is_integer()


class PowerSum(SmoothFn):
    """Finite sum of c * r**p; non-natural exponents restrict to r > 0."""

    kind = "power-sum"

    @property
    def is_polynomial(self) -> bool:
        return all(_is_natural(p) for p, _ in self.terms)

    def constant_value(self):
        if not self.terms:
            return 0.0
        if len(self.terms) == 1 and self.terms[0][0] == 0:
            return self.terms[0][1]
        return None

    def is_zero(self):
        return not self.terms

    def _eval(self, r, memo):
        out = np.zeros_like(r)
        for p, c in self.terms:
            if p == 0:
                out = out + c
            elif float(p).is_integer():
                out = out + c * r ** int(p)
            else:
                out = out + c * r**p
        return out

    def _derivative(self):
        return power_sum({p - 1: c * p for p, c in self.terms if p != 0}, self.domain)


def power_sum(terms, domain: Interval = REAL_LINE) -> PowerSum:
    """Build sum(c * r**p) from a mapping or iterable of (p, c)."""
    items = terms.items() if isinstance(terms, dict) else terms
    acc: dict[float, float] = {}
    for p, c in items:
        p = float(p)
        acc[p] = acc.get(p, 0.0) + float(c)
    clean = tuple(sorted((p, c) for p, c in acc.items() if c != 0.0))
    if any(not _is_natural(p) for p, _ in clean):
        domain = domain.intersect(POSITIVE)
    return _intern(PowerSum, (clean, domain), terms=clean, domain=domain)


def const(c: float, domain: Interval = REAL_LINE) -> PowerSum:
    return power_sum({0: c}, domain)


def zero(domain: Interval = REAL_LINE) -> PowerSum:
    return power_sum({}, domain)


def identity(domain: Interval = REAL_LINE) -> PowerSum:
    return power_sum({1: 1.0}, domain)


def poly(coeffs, domain: Interval = REAL_LINE) -> PowerSum:
    """Polynomial from ascending coefficients."""
    return power_sum({k: c for k, c in enumerate(coeffs)}, domain)


def power(p: float, c: float = 1.0, domain: Interval = POSITIVE) -> PowerSum:
    return power_sum({p: c}, domain)


def _ps_mul(a: PowerSum, b: PowerSum) -> PowerSum:
    acc: dict[float, float] = {}
    for p, c in a.terms:
        for q, d in b.terms:
            acc[p + q] = acc.get(p + q, 0.0) + c * d
    return power_sum(acc, a.domain.intersect(b.domain))


# ---------------------------------------------------------------------------
# sums and products


class Sum(SmoothFn):
    kind = "sum"

    def children(self):
        return tuple(b for _, b in self.terms)

    def _eval(self, r, memo):
        out = np.zeros_like(r)
        for c, b in self.terms:
            out = out + c * b._ev(r, memo)
        return out

    def _derivative(self):
        return add(*(scale(c, b.derivative()) for c, b in self.terms))


class Product(SmoothFn):
    kind = "product"

    def children(self):
        return self.factors

    def unit(self) -> SmoothFn:
        return _make_product(1.0, self.factors, self.domain)

    def _eval(self, r, memo):
        out = np.full_like(r, self.coef)
        for f in self.factors:
            out = out * f._ev(r, memo)
        return out

    def _derivative(self):
        parts = []
        fs = self.factors
        for i, f in enumerate(fs):
            df = f.derivative()
            if df.is_zero():
                continue
            parts.append(mul(const(self.coef), df, *fs[:i], *fs[i + 1:]))
        return add(*parts) if parts else zero(self.domain)


def _domain_of(fs) -> Interval:
    dom = REAL_LINE
    for f in fs:
        dom = dom.intersect(f.domain)
    return dom


def _make_product(coef: float, factors: tuple, dom: Interval | None = None) -> SmoothFn:
    factors = tuple(sorted(factors, key=lambda f: f.digest))
    dom = _domain_of(factors) if dom is None else dom.intersect(_domain_of(factors))
    if coef == 0.0:
        return zero(dom)
    if not factors:
        return const(coef, dom)
    if len(factors) == 1 and coef == 1.0 and factors[0].domain == dom:
        return factors[0]
    key = (coef, tuple(f.digest for f in factors), dom)
    return _intern(Product, key, coef=coef, factors=factors, domain=dom)


def split_coef(f: SmoothFn) -> tuple[float, SmoothFn]:
    """Split ``f`` into a numeric coefficient and a unit-coefficient base."""
    if isinstance(f, Product):
        return f.coef, f.unit()
    if isinstance(f, PowerSum) and len(f.terms) == 1:
        p, c = f.terms[0]
        return c, power_sum({p: 1.0}, f.domain)
    return 1.0, f


def add(*fs: SmoothFn) -> SmoothFn:
    acc: dict[int, list] = {}
    ps: dict[float, float] = {}
    ps_mag: dict[float, float] = {}
    dom = REAL_LINE

    def push(c: float, f: SmoothFn):
        nonlocal dom
        if c == 0.0:
            dom = dom.intersect(f.domain)
            return
        if isinstance(f, PowerSum):
            dom = dom.intersect(f.domain)
            for p, a in f.terms:
                ps[p] = ps.get(p, 0.0) + c * a
                ps_mag[p] = max(ps_mag.get(p, 0.0), abs(c * a))
            return
        if isinstance(f, Sum):
            for a, b in f.terms:
                push(c * a, b)
            return
        if isinstance(f, Product) and f.coef != 1.0:
            push(c * f.coef, f.unit())
            return
        slot = acc.get(f.serial)
        if slot is None:
            acc[f.serial] = [c, f, abs(c)]
        else:
            slot[0] += c
            slot[2] = max(slot[2], abs(c))

    for f in fs:
        push(1.0, as_fn(f))
    for f in (slot[1] for slot in acc.values()):
        dom = dom.intersect(f.domain)
    ps_clean = {p: c for p, c in ps.items() if abs(c) > CANCEL_RTOL * ps_mag[p]}
    items = [(c, f) for c, f, mag in acc.values() if abs(c) > CANCEL_RTOL * mag]
    items.sort(key=lambda t: t[1].digest)
    if ps_clean:
        base = power_sum(ps_clean, dom)
        if not items:
            return base
        dom = dom.intersect(base.domain)
        items.append((1.0, base))
        items.sort(key=lambda t: t[1].digest)
    if not items:
        return zero(dom)
    if len(items) == 1:
        c, f = items[0]
        return _make_product(c, (f,), dom)
    key = (tuple((c, f.digest) for c, f in items), dom)
    return _intern(Sum, key, terms=tuple(items), domain=dom)


def mul(*fs: SmoothFn) -> SmoothFn:
    coef = 1.0
    ps: PowerSum | None = None
    exps: list[SmoothFn] = []
    rest: list[SmoothFn] = []
    dom = REAL_LINE

    def push(f: SmoothFn):
        nonlocal coef, ps, dom
        dom = dom.intersect(f.domain)
        if isinstance(f, Product):
            coef *= f.coef
            for g in f.factors:
                push(g)
        elif isinstance(f, PowerSum):
            cv = f.constant_value()
            if cv is not None:
                coef *= cv
            else:
                ps = f if ps is None else _ps_mul(ps, f)
        elif isinstance(f, Exp):
            exps.append(f.arg)
        else:
            rest.append(f)

    for f in fs:
        push(as_fn(f))
    if coef == 0.0:
        return zero(dom)
    if ps is not None:
        if ps.is_zero():
            return zero(dom)
        if not rest and not exps:
            return power_sum({p: coef * c for p, c in ps.terms}, dom)
        c, base = split_coef(ps)
        coef *= c
        rest.append(base)
    if exps:
        e = exp_(add(*exps))
        cv = e.constant_value()
        if cv is None:
            rest.append(e)
        else:
            coef *= cv
    # dom keeps restrictions of factors that cancelled (e.g. r * r**-1)
    return _make_product(coef, tuple(rest), dom)


def scale(c: float, f: SmoothFn) -> SmoothFn:
    return mul(const(float(c)), f)


# ---------------------------------------------------------------------------
# exp, reciprocal, real powers


class Exp(SmoothFn):
    kind = "exp"

    def children(self):
        return (self.arg,)

    def _eval(self, r, memo):
        return np.exp(self.arg._ev(r, memo))

    def _derivative(self):
        return mul(self, self.arg.derivative())


def exp_(arg: SmoothFn) -> SmoothFn:
    arg = as_fn(arg)
    cv = arg.constant_value()
    if cv is not None:
        return const(math.exp(cv), arg.domain)
    return _intern(Exp, (arg.digest,), arg=arg, domain=arg.domain)


class Reciprocal(SmoothFn):
    kind = "reciprocal"

    def children(self):
        return (self.base,)

    def _eval(self, r, memo):
        d = self.base._ev(r, memo)
        if np.any(d == 0.0):
            raise VanishingDenominatorError(f"reciprocal of zero at r={r[d == 0.0][0]!r}")
        return 1.0 / d

    def _derivative(self):
        return scale(-1.0, mul(self.base.derivative(), self, self))


def certify_nonvanishing(f: SmoothFn, n: int = 1024, half: float = 8.0) -> None:
    """Dense-sampling check that ``f`` keeps one strict sign on its domain window."""
    a, b = f.domain.probe_window(half)
    if math.isfinite(f.domain.lo) and not f.domain.lo_closed:
        a = f.domain.lo + 1e-9 * max(1.0, abs(f.domain.lo))
    pts = np.linspace(a, b, max(n, 1024))
    vals = evaluate(f, pts)
    if np.any(vals == 0.0) or (vals.min() < 0.0 < vals.max()):
        i = int(np.argmax(np.sign(vals) != np.sign(vals[0]))) if vals[0] != 0 else 0
        raise VanishingDenominatorError(
            f"{f.kind} node changes sign or vanishes near r={pts[i]!r}")


def reciprocal(f: SmoothFn, certified: bool = False) -> SmoothFn:
    """1/f. Unless ``certified``, the sign of ``f`` is checked by dense sampling."""
    f = as_fn(f)
    cv = f.constant_value()
    if cv is not None:
        if cv == 0.0:
            raise VanishingDenominatorError("reciprocal of the zero function")
        return const(1.0 / cv, f.domain)
    if isinstance(f, Exp):
        return exp_(scale(-1.0, f.arg))
    if isinstance(f, Reciprocal):
        return f.base
    if isinstance(f, PowerSum) and len(f.terms) == 1:
        p, c = f.terms[0]
        return power_sum({-p: 1.0 / c}, f.domain)
    if isinstance(f, Product):
        return mul(const(1.0 / f.coef), *(reciprocal(g, certified) for g in f.factors))
    if not certified:
        certify_nonvanishing(f)
    return _intern(Reciprocal, (f.digest,), base=f, domain=f.domain)


class PowerOf(SmoothFn):
    kind = "power-of"

    def children(self):
        return (self.base,)

    def _eval(self, r, memo):
        b = self.base._ev(r, memo)
        if not float(self.p).is_integer() and np.any(b <= 0.0):
            raise DomainError(
                f"real power {self.p} of a non-positive base at r={r[b <= 0.0][0]!r}")
        return b**self.p

    def _derivative(self):
        return mul(const(self.p), power_of(self.base, self.p - 1.0), self.base.derivative())


def power_of(f: SmoothFn, p: float) -> SmoothFn:
    f = as_fn(f)
    p = float(p)
    if p == 1.0:
        return f
    if p == 0.0:
        return const(1.0, f.domain)
    cv = f.constant_value()
    if cv is not None and (cv > 0 or p.is_integer()):
        return const(cv**p, f.domain)
    if isinstance(f, Exp):
        return exp_(scale(p, f.arg))
    if isinstance(f, PowerSum) and len(f.terms) == 1:
        q, c = f.terms[0]
        if p.is_integer() or (c > 0 and (_is_natural(q) is False or f.domain.lo >= 0)):
            return power_sum({q * p: c**p}, f.domain)
    if p == -1.0:
        return reciprocal(f)
    if p.is_integer() and p > 0:
        return mul(*([f] * int(p)))
    return _intern(PowerOf, (f.digest, p), base=f, p=p, domain=f.domain)


def sqrt_(f: SmoothFn) -> SmoothFn:
    return power_of(f, 0.5)


# ---------------------------------------------------------------------------
# quadrature-backed nodes


class Antiderivative(SmoothFn):
    """F(r) = integral of the integrand from r0 to r; dF/dr is the integrand node."""

    kind = "antiderivative"

    def children(self):
        return (self.integrand,)

    def _cumulative(self) -> CumulativeIntegral:
        cum = self.__dict__.get("_cum")
        if cum is None:
            g = self.integrand
            cum = CumulativeIntegral(lambda x: evaluate(g, x), self.r0)
            self.__dict__["_cum"] = cum
        return cum

    def _eval(self, r, memo):
        g = self.integrand
        if isinstance(g, PowerSum):
            return _powersum_integral(g, self.r0, r)
        return self._cumulative()(r)

    def _derivative(self):
        return self.integrand


def _powersum_integral(g: PowerSum, r0: float, r: np.ndarray) -> np.ndarray:
    out = np.zeros_like(r)
    for p, c in g.terms:
        if p == -1.0:
            out = out + c * np.log(r / r0)
        else:
            q = p + 1.0
            out = out + c * (r**q - r0**q) / q
    return out


def antiderivative(f: SmoothFn, r0: float) -> Antiderivative:
    f = as_fn(f)
    r0 = float(r0)
    if not f.domain.contains(r0):
        raise DomainError(f"base point r0={r0!r} outside {f.domain}")
    return _intern(Antiderivative, (f.digest, r0), integrand=f, r0=r0, domain=f.domain)


def integrating_factor(W: SmoothFn, r0: float) -> SmoothFn:
    """exp(-2 * integral of W from r0 to r), in closed form when W is a power sum."""
    r0 = float(r0)
    if not W.domain.contains(r0):
        raise DomainError(f"base point r0={r0!r} outside {W.domain}")
    if isinstance(W, PowerSum):
        log_terms = [c for p, c in W.terms if p == -1.0]
        expo: dict[float, float] = {}
        shift = 0.0
        for p, c in W.terms:
            if p == -1.0:
                continue
            q = p + 1.0
            expo[q] = expo.get(q, 0.0) - 2.0 * c / q
            shift += 2.0 * c * r0**q / q
        expo[0.0] = expo.get(0.0, 0.0) + shift
        parts = [exp_(power_sum(expo, W.domain))]
        for c in log_terms:
            # exp(-2c log(r/r0)) = r0**(2c) * r**(-2c)
            parts.append(power_sum({-2.0 * c: r0 ** (2.0 * c)}, W.domain))
        return mul(*parts)
    return exp_(scale(-2.0, antiderivative(W, r0)))


class RiccatiLambda(SmoothFn):
    """lambda = g / (C + integral of g from r0), g = exp(-2 * integral of W).

    It solves lambda' + lambda**2 + 2*W*lambda = 0, and its derivative node is
    built from that identity rather than from the quotient.
    """

    kind = "riccati-lambda"

    def children(self):
        return (self.W, self.factor, self.integral)

    def _eval(self, r, memo):
        num = self.factor._ev(r, memo)
        den = self.C + self.integral._ev(r, memo)
        if np.any(den == 0.0):
            raise VanishingDenominatorError(f"deformation denominator vanishes at r={r[den == 0.0][0]!r}")
        return num / den

    def _derivative(self):
        return add(scale(-1.0, mul(self, self)), scale(-2.0, mul(self.W, self)))


def riccati_lambda(W: SmoothFn, C: float, r0: float) -> RiccatiLambda:
    factor = integrating_factor(W, r0)
    integral = antiderivative(factor, r0)
    C = float(C)
    dom = W.domain.intersect(factor.domain)
    return _intern(RiccatiLambda, (W.digest, C, float(r0)), W=W, C=C, r0=float(r0),
                   factor=factor, integral=integral, domain=dom)


# ---------------------------------------------------------------------------
# composition and ODE-defined functions


class Compose(SmoothFn):
    """outer(inner(r)); ``outer`` is a function of the intermediate variable."""

    kind = "compose"

    def children(self):
        return (self.outer, self.inner)

    def _eval(self, r, memo):
        x = self.inner._ev(r, memo)
        ok = self.outer.domain.contains(x)
        if not ok.all():
            raise DomainError(f"inner value {x[~ok][0]!r} (r={r[~ok][0]!r}) outside {self.outer.domain}")
        return self.outer._ev(x, {})

    def _derivative(self):
        return mul(compose(self.outer.derivative(), self.inner), self.inner.derivative())


def _compose_powersum(outer: PowerSum, inner: SmoothFn) -> SmoothFn | None:
    if not isinstance(inner, PowerSum):
        return None
    if outer.is_polynomial and inner.is_polynomial:
        acc = const(0.0, inner.domain)
        pw = const(1.0, inner.domain)
        top = int(max((p for p, _ in outer.terms), default=0))
        coeffs = dict(outer.terms)
        for k in range(top + 1):
            if k:
                pw = _ps_mul(pw, inner)
            c = coeffs.get(float(k), 0.0)
            if c:
                acc = add(acc, scale(c, pw))
        return power_sum(acc.terms, inner.domain) if isinstance(acc, PowerSum) else acc
    if len(inner.terms) == 1:
        s, a = inner.terms[0]
        # (a r^s)^p = a^p r^(s p) needs a > 0 and r >= 0 unless p is natural
        if a > 0 and inner.domain.lo >= 0:
            return power_sum({s * p: c * a**p for p, c in outer.terms}, inner.domain)
    return None


def compose(outer: SmoothFn, inner: SmoothFn) -> SmoothFn:
    """outer o inner, distributing over the algebra where that stays exact."""
    outer, inner = as_fn(outer), as_fn(inner)
    cv = outer.constant_value()
    if cv is not None:
        return const(cv, inner.domain)
    if isinstance(outer, PowerSum):
        out = _compose_powersum(outer, inner)
        if out is not None:
            return out
    elif isinstance(outer, Sum):
        return add(*(scale(c, compose(b, inner)) for c, b in outer.terms))
    elif isinstance(outer, Product):
        return mul(const(outer.coef, inner.domain), *(compose(f, inner) for f in outer.factors))
    elif isinstance(outer, Exp):
        return exp_(compose(outer.arg, inner))
    elif isinstance(outer, Reciprocal):
        return reciprocal(compose(outer.base, inner), certified=True)
    elif isinstance(outer, PowerOf):
        return power_of(compose(outer.base, inner), outer.p)
    return _intern(Compose, (outer.digest, inner.digest), outer=outer, inner=inner, domain=inner.domain)


class OdeSolution(SmoothFn):
    """x(r) with x' = F(x), x(r_ref) = x_ref, tabulated by a dense ODE solve."""

    kind = "ode-solution"

    def children(self):
        return (self.F,)

    def _dense(self):
        sols = self.__dict__.get("_sols")
        if sols is None:
            F = self.F
            rhs = lambda r, x: [evaluate(F, x[0])]  # noqa: E731
            sols = []
            for end in (self.domain.lo, self.domain.hi):
                if end == self.r_ref:
                    sols.append(None)
                    continue
                sol = solve_ivp(rhs, (self.r_ref, end), [self.x_ref], method="DOP853",
                                rtol=self.tol, atol=self.tol, dense_output=True)
                if not sol.success:
                    raise QuadratureError(f"change-of-variable ODE failed: {sol.message}")
                sols.append(sol.sol)
            self.__dict__["_sols"] = sols
        return sols

    def _eval(self, r, memo):
        down, up = self._dense()
        out = np.full_like(r, self.x_ref)
        lo = r < self.r_ref
        hi = r > self.r_ref
        if lo.any():
            out[lo] = down(r[lo])[0]
        if hi.any():
            out[hi] = up(r[hi])[0]
        return out

    def _derivative(self):
        return compose(self.F, self)


def ode_solution(F: SmoothFn, r_ref: float, x_ref: float, window: tuple[float, float],
                 tol: float = 1e-12) -> OdeSolution:
    dom = Interval(float(window[0]), float(window[1]), True, True)
    if not dom.contains(r_ref):
        raise DomainError(f"reference point {r_ref!r} outside window {dom}")
    return _intern(OdeSolution, (F.digest, float(r_ref), float(x_ref), dom, tol),
                   F=F, r_ref=float(r_ref), x_ref=float(x_ref), tol=tol, domain=dom)


def quadrature_tolerance() -> float:
    return quad_tolerance()


def restrict(f: SmoothFn, domain: Interval) -> SmoothFn:
    """The same function on a narrower domain."""
    f = as_fn(f)
    dom = f.domain.intersect(domain)
    if dom == f.domain:
        return f
    if isinstance(f, PowerSum):
        return power_sum(f.terms, dom)
    return _make_product(1.0, (f,), dom)
