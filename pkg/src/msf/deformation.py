"""Riccati deformation of a superpotential: f, lambda = 1/f and omega = W + lambda.

f solves f' - 2 W f = 1. With the integrating factor g = exp(-2 int_{r0}^r W),

    f(r) = (C + int_{r0}^r g) / g,    lambda = g / (C + int_{r0}^r g).

The denominator is strictly increasing in r, so it has no zero exactly when C
lies outside the closed band [-sup I, -inf I] of its integral term I.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import functions as fn
from .functions import Interval, SmoothFn
from .master import FULL_LINE, HALF_LINE, MasterSystem, superpotential
from .quadrature import QuadratureError

HALF_LINE_EPS = 1e-3
HALF_LINE_BASE = 1.0
TAIL_TOL = 1e-14
MAX_CUT = 1e3


class InadmissibleConstantError(ValueError):
    """C makes the deformation denominator vanish somewhere on the domain."""

    def __init__(self, C: float, admissible: "AdmissibleSet"):
        self.C = C
        self.admissible = admissible
        super().__init__(f"C={C!r} is inadmissible: {admissible.describe()}")


class TailBoundError(QuadratureError):
    """No rigorous tail bound could be established on an infinite end."""


@dataclass(frozen=True)
class AdmissibleSet:
    """Admissible C = R minus the closed band [lo, hi]."""

    lo: float
    hi: float
    integral_range: tuple[float, float]
    tails: tuple[float, float]
    r0: float
    domain: Interval

    def contains(self, C: float) -> bool:
        return C < self.lo or C > self.hi

    @property
    def symmetric(self) -> bool:
        return math.isclose(-self.lo, self.hi, rel_tol=1e-9, abs_tol=1e-12)

    def describe(self) -> str:
        if self.symmetric:
            return f"admissible |C| > {self.hi:.9f}"
        return f"admissible C < {self.lo:.9f} or C > {self.hi:.9f}"


def _tail(W: SmoothFn, g: SmoothFn, I: SmoothFn, r0: float, direction: int,
          hi_limit: float) -> tuple[float, float]:
    """(I(L), bound on |int beyond L|) for the end in ``direction``.

    Beyond a cut L where W is nondecreasing and direction*W(L) > 0,
    g(r) <= g(L) exp(-2 |W(L)| |r - L|), so the tail is at most g(L) / (2 |W(L)|).
    """
    dW = W.derivative()
    step = 1.0
    while step <= MAX_CUT:
        L = r0 + direction * step
        if not W.domain.contains(L):
            break
        rate = 2.0 * direction * W(L)
        if rate > 0:
            far = L + direction * max(4.0 * step, 16.0)
            beyond = np.linspace(L, far, 257)
            if np.all(dW(beyond) >= 0.0):
                bound = g(L) / rate
                if bound < TAIL_TOL:
                    return I(L), bound
        step *= 2.0
    raise TailBoundError(f"no decaying tail found in direction {direction:+d} from r0={r0}")


def regularity_bounds(W: SmoothFn, domain: Interval, r0: float) -> AdmissibleSet:
    """Band of C for which C + int_{r0}^r g vanishes somewhere on ``domain``."""
    W = fn.restrict(W, domain)
    g = fn.integrating_factor(W, r0)
    I = fn.antiderivative(g, r0)
    ends = []
    tails = []
    for end, closed, direction in ((domain.lo, domain.lo_closed, -1), (domain.hi, domain.hi_closed, 1)):
        if math.isfinite(end):
            if not closed:
                raise ValueError(f"finite endpoint {end} must be closed; cut the domain at an epsilon")
            ends.append(I(end))
            tails.append(0.0)
        else:
            val, tail = _tail(W, g, I, r0, direction, end)
            ends.append(val)
            tails.append(tail)
    i_min, i_max = ends
    t_min, t_max = tails
    return AdmissibleSet(-(i_max + t_max), -(i_min - t_min), (i_min, i_max), (t_min, t_max),
                         float(r0), domain)


@dataclass(frozen=True)
class DeformationProfile:
    W: SmoothFn
    C: float
    r0: float
    f: SmoothFn
    lam: SmoothFn
    omega: SmoothFn
    domain: Interval
    admissible: AdmissibleSet | None = field(default=None, repr=False)

    @classmethod
    def undeformed(cls, W: SmoothFn) -> "DeformationProfile":
        """The C -> infinity limit: lambda identically zero, omega = W."""
        z = fn.zero(W.domain)
        return cls(W, math.inf, math.nan, z, z, W, W.domain)

    def describe(self) -> dict:
        return {"C": self.C, "r0": self.r0, "domain": str(self.domain)}


def solve_deformation(W: SmoothFn, C: float, r0: float,
                      domain: Interval | None = None) -> DeformationProfile:
    domain = W.domain if domain is None else W.domain.intersect(domain)
    Wd = fn.restrict(W, domain)
    adm = regularity_bounds(Wd, domain, r0)
    if not adm.contains(C):
        raise InadmissibleConstantError(float(C), adm)
    lam = fn.riccati_lambda(Wd, C, r0)
    f = fn.mul(fn.add(fn.const(float(C)), lam.integral), fn.reciprocal(lam.factor, certified=True))
    return DeformationProfile(Wd, float(C), float(r0), f, lam, Wd + lam, domain, adm)


def deformation_domain(sys: MasterSystem) -> tuple[Interval, float]:
    """Domain and base point used for a family: full line at 0, half line [1e-3, inf) at 1."""
    if sys.family == FULL_LINE:
        return fn.REAL_LINE, 0.0
    if sys.family == HALF_LINE:
        return Interval(HALF_LINE_EPS, math.inf, True, False), HALF_LINE_BASE
    dom = sys.r_domain
    return dom, 0.5 * (dom.lo + dom.hi)


def deform(sys: MasterSystem, C: float, r0: float | None = None) -> DeformationProfile:
    dom, base = deformation_domain(sys)
    return solve_deformation(superpotential(sys).W, C, base if r0 is None else r0, dom)


def deformed_potential(profile: DeformationProfile) -> SmoothFn:
    """Potential of H' = B+ B- = omega^2 - omega', written as W^2 - W' - 2 lambda'."""
    W = profile.W
    return W * W - W.derivative() - 2.0 * profile.lam.derivative()


def riccati_residual(profile: DeformationProfile, points) -> dict[str, float]:
    """Max pointwise residuals of both Riccati forms over ``points``."""
    pts = np.asarray(points, dtype=float)
    W, lam, om = profile.W, profile.lam, profile.omega
    w, dw = W(pts), W.derivative()(pts)
    lv, dl = lam(pts), lam.derivative()(pts)
    ov, do = om(pts), om.derivative()(pts)
    lam_res = float(np.max(np.abs(dl + lv * lv + 2.0 * w * lv)))
    om_res = float(np.max(np.abs(ov * ov + do - (w * w + dw))))
    return {"lambda": lam_res, "omega": om_res, "max": max(lam_res, om_res)}
