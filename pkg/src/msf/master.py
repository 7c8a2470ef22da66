"""Master-function systems: superpotential, potentials, spectrum, shape invariance.

A system is a master polynomial A(x) (degree <= 2) and a weight w(x) on an
x-interval, plus parameters (alpha, beta) and a sector index m. Everything is
built in the x variable first and then carried to r through dx/dr = sqrt(A).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import functions as fn
from .functions import INF, Interval, SmoothFn

FULL_LINE = "oscillator-like"
HALF_LINE = "radial-oscillator-like"
ALIASES = {"shifted-oscillator": FULL_LINE}
GENERIC = "generic"


class CatalogError(ValueError):
    """Unknown family name or parameters outside the family's constraints."""


@dataclass(frozen=True)
class WeightSpec:
    """w(x): ``gaussian`` is exp(-beta x^2 / 2), ``power-exponential`` is x^alpha exp(-beta x)."""

    kind: str
    alpha: float = 0.0
    beta: float = 1.0

    def log_derivative(self) -> SmoothFn:
        """w'(x)/w(x) as a function of x."""
        if self.kind == "gaussian":
            return fn.poly([0.0, -self.beta])
        if self.kind == "power-exponential":
            return fn.power_sum({-1: self.alpha, 0: -self.beta})
        raise CatalogError(f"unknown weight kind {self.kind!r}")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "gaussian":
            return np.exp(-0.5 * self.beta * x**2)
        if self.kind == "power-exponential":
            return x**self.alpha * np.exp(-self.beta * x)
        raise CatalogError(f"unknown weight kind {self.kind!r}")


@dataclass(frozen=True)
class MasterSystem:
    family: str
    A: tuple[float, float, float]
    weight: WeightSpec
    x_interval: Interval
    alpha: float
    beta: float
    m: int = 0
    # generic systems only: x(r_ref) = x_ref, ODE tabulated on r_window
    x_ref: float = 0.0
    r_window: tuple[float, float] = (-6.0, 6.0)

    def __post_init__(self):
        if not self.beta > 0:
            raise CatalogError(f"beta must be positive, got {self.beta}")
        if self.weight.kind == "power-exponential" and not self.alpha > -1:
            raise CatalogError(f"alpha must exceed -1 for x^alpha e^(-beta x), got {self.alpha}")
        if int(self.m) != self.m or self.m < 0:
            raise CatalogError(f"sector index m must be a non-negative integer, got {self.m}")
        if len(self.A) != 3:
            raise CatalogError("A must have three coefficients (a0, a1, a2)")
        _check_master_nonnegative(self.A, self.x_interval)

    @property
    def is_catalog(self) -> bool:
        return self.family in (FULL_LINE, HALF_LINE)

    @property
    def r_domain(self) -> Interval:
        if self.family == FULL_LINE:
            return fn.REAL_LINE
        if self.family == HALF_LINE:
            return fn.POSITIVE
        return Interval(self.r_window[0], self.r_window[1], True, True)

    def with_params(self, **changes) -> "MasterSystem":
        return replace(self, **changes)

    def describe(self) -> dict:
        return {
            "family": self.family,
            "A": list(self.A),
            "weight": self.weight.kind,
            "alpha": self.alpha,
            "beta": self.beta,
            "m": self.m,
        }


def _check_master_nonnegative(A, interval: Interval) -> None:
    a0, a1, a2 = A
    lo = interval.lo if math.isfinite(interval.lo) else -1e6
    hi = interval.hi if math.isfinite(interval.hi) else 1e6
    cands = [lo, hi]
    if a2 != 0:
        vertex = -a1 / (2 * a2)
        if lo < vertex < hi:
            cands.append(vertex)
    vals = [a0 + a1 * x + a2 * x * x for x in cands]
    # infinite ends: the leading coefficient decides the sign far out
    if not math.isfinite(interval.lo) and (a2 < 0 or (a2 == 0 and a1 > 0)):
        vals.append(-1.0)
    if not math.isfinite(interval.hi) and (a2 < 0 or (a2 == 0 and a1 < 0)):
        vals.append(-1.0)
    if min(vals) < -1e-14:
        raise CatalogError(f"master function A={tuple(A)} is negative on {interval}")


def catalog_families() -> dict[str, dict]:
    """Static description of the catalog, as printed by the CLI."""
    return {
        FULL_LINE: {
            "A(x)": "1",
            "w(x)": "exp(-beta x^2 / 2)",
            "x(r)": "r - 2 alpha / beta",
            "interval": "(-inf, inf)",
            "constraints": "beta > 0",
            "shape-invariance shift": "parameters unchanged",
        },
        HALF_LINE: {
            "A(x)": "x",
            "w(x)": "x^alpha exp(-beta x)",
            "x(r)": "r^2 / 4",
            "interval": "[0, inf)",
            "constraints": "beta > 0, alpha > -1, m >= 0",
            "shape-invariance shift": "alpha + m -> alpha + m + 1",
        },
        "shifted-oscillator": {
            "alias of": FULL_LINE,
            "parameters": "omega -> beta, b -> alpha",
            "constraints": "omega > 0",
        },
    }


def catalog_lookup(name: str, alpha: float = 0.0, beta: float = 1.0, m: int = 0,
                   omega: float | None = None, b: float | None = None) -> MasterSystem:
    if name == "shifted-oscillator":
        beta = beta if omega is None else omega
        alpha = alpha if b is None else b
    family = ALIASES.get(name, name)
    alpha, beta = float(alpha), float(beta)
    if family == FULL_LINE:
        return MasterSystem(FULL_LINE, (1.0, 0.0, 0.0), WeightSpec("gaussian", 0.0, beta),
                            fn.REAL_LINE, alpha, beta, int(m))
    if family == HALF_LINE:
        return MasterSystem(HALF_LINE, (0.0, 1.0, 0.0), WeightSpec("power-exponential", alpha, beta),
                            Interval(0.0, INF, True, False), alpha, beta, int(m))
    raise CatalogError(f"unknown family {name!r}; known: {sorted(catalog_families())}")


def generic_system(A, weight: WeightSpec, x_interval: Interval, m: int = 0,
                   x_ref: float = 0.0, r_window=(-6.0, 6.0)) -> MasterSystem:
    """A non-catalog system; its change of variable is integrated numerically."""
    return MasterSystem(GENERIC, tuple(float(a) for a in A), weight, x_interval,
                        weight.alpha, weight.beta, int(m), float(x_ref), tuple(r_window))


# ---------------------------------------------------------------------------
# x-variable building blocks


def _open(interval: Interval) -> Interval:
    return Interval(interval.lo, interval.hi)


def master_polynomial(sys: MasterSystem) -> SmoothFn:
    return fn.poly(sys.A, _open(sys.x_interval))


def _master_power(sys: MasterSystem, p: float) -> SmoothFn:
    """A(x)**p, exact when A is a monomial a x^q."""
    a0, a1, a2 = sys.A
    nonzero = [(q, a) for q, a in enumerate(sys.A) if a != 0]
    dom = _open(sys.x_interval)
    if len(nonzero) == 1 and nonzero[0][1] > 0:
        q, a = nonzero[0]
        return fn.power_sum({q * p: a**p}, dom)
    return fn.power_of(master_polynomial(sys), p)


def superpotential_x(sys: MasterSystem) -> SmoothFn:
    """W_m as a function of x: -(A w'/(2w) + (2m-1)/4 A') / sqrt(A)."""
    A = master_polynomial(sys)
    AL = A * sys.weight.log_derivative()
    inner = AL * 0.5 + A.derivative() * ((2 * sys.m - 1) / 4.0)
    return -(inner * _master_power(sys, -0.5))


def potential_x(sys: MasterSystem) -> SmoothFn:
    """The shape-invariant potential v_m as a function of x."""
    m = sys.m
    A = master_polynomial(sys)
    L = sys.weight.log_derivative()
    AL = A * L
    dA = A.derivative()
    inv_A = _master_power(sys, -1.0)
    return fn.add(
        AL.derivative() * -0.5,
        dA.derivative() * (-(2 * m - 1) / 4.0),
        AL * AL * inv_A * 0.25,
        dA * L * (m / 2.0),
        dA * dA * inv_A * ((4 * m * m - 1) / 16.0),
    )


# ---------------------------------------------------------------------------
# change of variable dx/dr = sqrt(A(x))


@dataclass(frozen=True)
class ChangeOfVariable:
    x_of_r: SmoothFn
    r_domain: Interval

    def residual(self, sys: MasterSystem, points=None) -> float:
        """max |x'(r) - sqrt(A(x(r)))| over sample points."""
        pts = self.r_domain.samples(64) if points is None else np.asarray(points, float)
        x = self.x_of_r(pts)
        dx = self.x_of_r.derivative()(pts)
        a0, a1, a2 = sys.A
        return float(np.max(np.abs(dx - np.sqrt(a0 + a1 * x + a2 * x * x))))


def change_of_variable(sys: MasterSystem) -> ChangeOfVariable:
    dom = sys.r_domain
    if sys.family == FULL_LINE:
        return ChangeOfVariable(fn.poly([-2.0 * sys.alpha / sys.beta, 1.0], dom), dom)
    if sys.family == HALF_LINE:
        return ChangeOfVariable(fn.power_sum({2: 0.25}, dom), dom)
    root_A = fn.power_of(fn.poly(sys.A, _open(sys.x_interval)), 0.5)
    x = fn.ode_solution(root_A, 0.0, sys.x_ref, sys.r_window, tol=1e-12)
    return ChangeOfVariable(x, dom)


def to_r(sys: MasterSystem, fx: SmoothFn) -> SmoothFn:
    cov = change_of_variable(sys)
    return fn.restrict(fn.compose(fx, cov.x_of_r), cov.r_domain)


# ---------------------------------------------------------------------------
# superpotential and potentials in r


@dataclass(frozen=True)
class SuperpotentialProfile:
    W: SmoothFn
    m: int
    system: MasterSystem = field(repr=False)


def superpotential(sys: MasterSystem) -> SuperpotentialProfile:
    return SuperpotentialProfile(to_r(sys, superpotential_x(sys)), sys.m, sys)


def potential_vm(sys: MasterSystem) -> SmoothFn:
    return to_r(sys, potential_x(sys))


def partner_potentials(prof: SuperpotentialProfile) -> tuple[SmoothFn, SmoothFn]:
    """(v1, v2) = (W^2 + W', W^2 - W')."""
    W = prof.W
    dW = W.derivative()
    return W * W + dW, W * W - dW


# ---------------------------------------------------------------------------
# spectrum


def _spectral_bracket(sys: MasterSystem, n: int, m: int) -> float:
    A = master_polynomial(sys)
    AL = A * sys.weight.log_derivative()
    bracket = AL.derivative() + A.derivative(2) * ((n + m) / 2.0)
    cv = bracket.constant_value()
    if cv is not None:
        return cv
    if isinstance(bracket, fn.PowerSum):
        raise ValueError(f"spectral bracket is not constant in x for {sys.describe()}")
    xs = bracket.domain.samples(64)
    vals = bracket(xs)
    if np.ptp(vals) > 1e-10 * (1 + np.abs(vals).max()):
        raise ValueError(f"spectral bracket varies over x (spread {np.ptp(vals):.3g})")
    return float(vals[0])


def energy(sys: MasterSystem, n: int, m: int | None = None) -> float:
    """E(n, m) = -(n - m + 1) [ (A w'/w)' + (n + m) A'' / 2 ]."""
    m = sys.m if m is None else m
    if m < 0 or n < m - 1:
        raise ValueError(f"energy needs n >= m - 1 >= -1, got n={n}, m={m}")
    if n == m - 1:
        return 0.0
    return -(n - m + 1) * _spectral_bracket(sys, n, m)


def ladder_spacing(sys: MasterSystem) -> float:
    """Constant gap E(n+1, m) - E(n, m) for catalog families."""
    if not sys.is_catalog:
        raise CatalogError("ladder spacing is only defined for catalog families")
    return energy(sys, sys.m + 1) - energy(sys, sys.m)


# ---------------------------------------------------------------------------
# shape invariance


def shifted_parameters(sys: MasterSystem) -> MasterSystem:
    """a1(a0) for the catalog families."""
    if sys.family == FULL_LINE:
        return sys
    if sys.family == HALF_LINE:
        return sys.with_params(alpha=sys.alpha + 1.0,
                               weight=replace(sys.weight, alpha=sys.alpha + 1.0))
    raise CatalogError("no parameter-shift rule for non-catalog systems")


def shape_invariance_check(sys: MasterSystem,
                           shift: Callable[[MasterSystem], MasterSystem] | None = None,
                           n_points: int = 256) -> tuple[bool, float]:
    """Is v1(r; a0) - v2(r; a1) constant on a grid? Returns (flag, mean)."""
    shift = shifted_parameters if shift is None else shift
    v1, _ = partner_potentials(superpotential(sys))
    _, v2 = partner_potentials(superpotential(shift(sys)))
    pts = sys.r_domain.samples(n_points, half=4.0)
    diff = v1(pts) - v2(pts)
    mean = float(np.mean(diff))
    return bool(np.std(diff) < 1e-9 * (1 + abs(mean))), mean
