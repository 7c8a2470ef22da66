"""Two-dimensional separable Hamiltonians and their higher-order integrals of motion.

H_s = H2(r) + H'(r'), with H2 = A+A- on the r axis and the deformed partner
H' = B+B- on the r' axis. K = H2 - H' is the separation integral; the ladder
products X+^m(r) Y-^n(r') -+ X-^m(r) Y+^n(r') give A1 and A2 once the spacings
resonate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import operators as op
from .deformation import DeformationProfile, deform, deformed_potential
from .master import FULL_LINE, HALF_LINE, MasterSystem, ladder_spacing, partner_potentials, superpotential
from .operators import R, RP, DiffOp1D, DiffOp2D

RESONANCE_RTOL = 1e-12
MAX_DENOMINATOR = 12


class ResonanceError(ValueError):
    pass


class FamilyError(ValueError):
    pass


@dataclass(frozen=True)
class Resonance:
    m: int
    n: int
    lam_x: float
    lam_y: float

    @property
    def satisfied(self) -> bool:
        return resonance_check(self.m, self.n, self.lam_x, self.lam_y)


def resonance_check(m: int, n: int, lam_x: float, lam_y: float) -> bool:
    if m <= 0 or n <= 0:
        raise ValueError("m and n must be positive integers")
    return abs(m * lam_x - n * lam_y) <= RESONANCE_RTOL * max(abs(lam_x), abs(lam_y))


def minimal_resonance(lam_x: float, lam_y: float, max_den: int = MAX_DENOMINATOR) -> Resonance:
    """Smallest positive (m, n) with m lam_x = n lam_y, for a ratio with denominator <= max_den."""
    frac = Fraction(lam_x / lam_y).limit_denominator(max_den)
    res = Resonance(frac.denominator, frac.numerator, float(lam_x), float(lam_y))
    if frac <= 0 or not res.satisfied:
        raise ResonanceError(f"spacings {lam_x!r}, {lam_y!r} have no resonance with denominator <= {max_den}")
    return res


def build_Hs(sysX: MasterSystem, profileY: DeformationProfile) -> DiffOp2D:
    """H2 of ``sysX`` along r plus the deformed partner along r'."""
    Hr, Hrp = axis_hamiltonians(sysX, profileY)
    return op.lift(Hr) + op.lift(Hrp)


def axis_hamiltonians(sysX: MasterSystem, profileY: DeformationProfile) -> tuple[DiffOp1D, DiffOp1D]:
    W = superpotential(sysX).W
    if profileY.W.domain.intersect(W.domain) != profileY.W.domain:
        raise FamilyError("deformation profile is not defined on the superpotential's domain")
    _, v2 = partner_potentials(superpotential(sysX))
    return op.schrodinger(v2, R), op.schrodinger(deformed_potential(profileY), RP)


def build_K(Hr: DiffOp1D, Hrp: DiffOp1D) -> DiffOp2D:
    if Hr.var == Hrp.var:
        raise op.AxisError("K needs one Hamiltonian per axis")
    return op.lift(Hr) - op.lift(Hrp)


def build_integrals(ladderX, ladderY, m: int, n: int,
                    spacings: tuple[float, float] | None = None) -> tuple[DiffOp2D, DiffOp2D]:
    """A1 = X+^m Y-^n - X-^m Y+^n and A2 = X+^m Y-^n + X-^m Y+^n."""
    Xp, Xm = ladderX
    Yp, Ym = ladderY
    if Xp.var == Yp.var:
        raise op.AxisError(f"both ladders act on {Xp.var!r}; integrals need distinct axes")
    if spacings is not None and not resonance_check(m, n, *spacings):
        raise ResonanceError(f"m={m}, n={n} violates resonance for spacings {spacings}")
    up = op.tensor(op.power_op(Xp, m), op.power_op(Ym, n))
    down = op.tensor(op.power_op(Xm, m), op.power_op(Yp, n))
    return up - down, up + down


@dataclass
class AssembledSystem:
    system: MasterSystem
    profile: DeformationProfile
    Hr: DiffOp1D
    Hrp: DiffOp1D
    Hs: DiffOp2D
    K: DiffOp2D
    A1: DiffOp2D
    A2: DiffOp2D
    ladders_x: tuple[DiffOp1D, DiffOp1D]
    ladders_y: tuple[DiffOp1D, DiffOp1D]
    resonance: Resonance
    orders: tuple[int, int, int] = field(default=(0, 0, 0))
    naive_order_A1: int = 0

    @property
    def a1_top_cancelled(self) -> bool:
        return self.orders[1] < self.naive_order_A1

    def probe_points(self, n: int = 100, seed: int = 0):
        return probe_points_2d(self.system, n, seed)


def probe_points_2d(sys: MasterSystem, n: int = 100, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Random probe points: [-3,3]^2 on the full line, [0.5,3]^2 on the half line."""
    rng = np.random.default_rng(seed)
    lo, hi = (-3.0, 3.0) if sys.family == FULL_LINE else (0.5, 3.0)
    return rng.uniform(lo, hi, n), rng.uniform(lo, hi, n)


def family_ladders(sys: MasterSystem, profile: DeformationProfile):
    """(X+, X-) on r and (Y+, Y-) on r' for the catalog families."""
    W = superpotential(sys).W
    if sys.family == FULL_LINE:
        X = op.ladder_pair(W, R)
        Y = (op.make_S_ladders(W, profile, 1, RP), op.make_S_ladders(W, profile, -1, RP))
    elif sys.family == HALF_LINE:
        Mp, Mm, _, _ = op.make_M_R_ladders(W, profile, R)
        _, _, Rp, Rm = op.make_M_R_ladders(W, profile, RP)
        X, Y = (Mp, Mm), (Rp, Rm)
    else:
        raise FamilyError(f"no ladder construction for family {sys.family!r}")
    return X, Y


def assemble(sys: MasterSystem, C: float, r0: float | None = None,
             profile: DeformationProfile | None = None) -> AssembledSystem:
    profile = deform(sys, C, r0) if profile is None else profile
    Hr, Hrp = axis_hamiltonians(sys, profile)
    Hs = op.lift(Hr) + op.lift(Hrp)
    K = build_K(Hr, Hrp)
    X, Y = family_ladders(sys, profile)
    step = ladder_spacing(sys)
    res = minimal_resonance(step, step)
    A1, A2 = build_integrals(X, Y, res.m, res.n, (res.lam_x, res.lam_y))
    asm = AssembledSystem(sys, profile, Hr, Hrp, Hs, K, A1, A2, X, Y, res,
                          naive_order_A1=res.m * X[0].order + res.n * Y[0].order)
    pts = asm.probe_points()
    asm.orders = tuple(P.leading_order(pts)[0] for P in (K, A1, A2))
    return asm


def commutes_residual(H: DiffOp2D, P: DiffOp2D, points) -> float:
    return op.relation_residual(H, P, op.DiffOp2D({}), points)


def fit_commutator_constant(K: DiffOp2D, A1: DiffOp2D, A2: DiffOp2D, points) -> tuple[float, float]:
    """Least-squares c in [K, A1] = c A2 and the scale-normalized residual after subtraction."""
    C = op.commutator(K, A1)
    ct = C.coefficient_table(points)
    at = A2.coefficient_table(points)
    keys = sorted(set(ct) | set(at))
    zeros = np.zeros_like(np.asarray(points[0], dtype=float))
    y = np.concatenate([ct.get(k, zeros) for k in keys])
    x = np.concatenate([at.get(k, zeros) for k in keys])
    c = float(np.dot(x, y) / np.dot(x, x)) if np.dot(x, x) > 0 else 0.0
    scale = op.operator_scale(K, points) * op.operator_scale(A1, points)
    res = float(np.max(np.abs(y - c * x))) / scale if scale > 0 else 0.0
    return c, res


def superintegrability_residuals(asm: AssembledSystem, points=None) -> dict[str, float]:
    pts = asm.probe_points() if points is None else points
    out = {
        "[Hs,K]": commutes_residual(asm.Hs, asm.K, pts),
        "[Hs,A1]": commutes_residual(asm.Hs, asm.A1, pts),
        "[Hs,A2]": commutes_residual(asm.Hs, asm.A2, pts),
    }
    c, res = fit_commutator_constant(asm.K, asm.A1, asm.A2, pts)
    out["[K,A1]-cA2"] = res
    out["c"] = c
    return out
