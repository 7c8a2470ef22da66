"""Finite-difference spectra, isospectrality matching and verification reports."""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np
from scipy import linalg

from . import operators as op
from .deformation import DeformationProfile, deformed_potential
from .functions import SmoothFn
from .master import FULL_LINE, HALF_LINE, MasterSystem, energy, ladder_spacing, potential_vm, superpotential

pointwise_residual = op.pointwise_residual

MIN_POINTS = 64
DEFAULT_N = 2000
HALF_LINE_RMIN = 1e-3


class GridError(ValueError):
    pass


class SpectrumError(RuntimeError):
    pass


@dataclass(frozen=True)
class GridSpec:
    rmin: float
    rmax: float
    n: int = DEFAULT_N
    boundary: str = "dirichlet"

    def __post_init__(self):
        if self.n < MIN_POINTS:
            raise GridError(f"grid needs at least {MIN_POINTS} points, got {self.n}")
        if not self.rmin < self.rmax:
            raise GridError(f"rmin={self.rmin} must be below rmax={self.rmax}")
        if self.boundary != "dirichlet":
            raise GridError(f"unsupported boundary {self.boundary!r}")

    @property
    def h(self) -> float:
        return (self.rmax - self.rmin) / (self.n + 1)

    def points(self) -> np.ndarray:
        """Interior nodes; the Dirichlet ends rmin and rmax are excluded."""
        return self.rmin + self.h * np.arange(1, self.n + 1)

    def refined(self) -> "GridSpec":
        """Same box with half the spacing."""
        return GridSpec(self.rmin, self.rmax, 2 * self.n + 1, self.boundary)


def default_grid(sys: MasterSystem, n: int = DEFAULT_N) -> GridSpec:
    """[-12s, 12s] on the full line, [1e-3, 14s] on the half line, s = 1/sqrt(beta)."""
    sigma = 1.0 / math.sqrt(sys.beta)
    if sys.family == FULL_LINE:
        return GridSpec(-12 * sigma, 12 * sigma, n)
    if sys.family == HALF_LINE:
        return GridSpec(HALF_LINE_RMIN, 14 * sigma, n)
    dom = sys.r_domain
    return GridSpec(dom.lo, dom.hi, n)


def check_grid(sys: MasterSystem, grid: GridSpec) -> None:
    if sys.family == HALF_LINE and grid.rmin <= 0:
        raise GridError("half-line grids need rmin > 0")


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: tuple[float, ...]
    grid: GridSpec
    order: int


def discretize_and_eigen(potential: SmoothFn, grid: GridSpec, k: int, order: int = 2) -> SpectrumResult:
    """Lowest k eigenvalues of -d^2 + v with Dirichlet ends."""
    if not 1 <= k <= grid.n:
        raise ValueError(f"k={k} must be in [1, {grid.n}]")
    r = grid.points()
    if not np.all(potential.domain.contains(r)):
        raise GridError(f"grid [{grid.rmin}, {grid.rmax}] leaves the potential's domain {potential.domain}")
    v = np.asarray(potential(r), dtype=float)
    h2 = grid.h ** 2
    try:
        if order == 2:
            d = 2.0 / h2 + v
            e = np.full(grid.n - 1, -1.0 / h2)
            w = linalg.eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, k - 1))
        elif order == 4:
            band = np.zeros((3, grid.n))
            band[0] = 30.0 / (12 * h2) + v
            band[1, :-1] = -16.0 / (12 * h2)
            band[2, :-2] = 1.0 / (12 * h2)
            w = linalg.eig_banded(band, lower=True, eigvals_only=True, select="i", select_range=(0, k - 1))
        else:
            raise ValueError(f"discretization order must be 2 or 4, got {order}")
    except linalg.LinAlgError as exc:
        raise SpectrumError(str(exc)) from exc
    return SpectrumResult(tuple(float(x) for x in np.sort(w)), grid, order)


def expected_levels(sys: MasterSystem, k: int, partner: int = 1) -> list[float]:
    """Exact levels: v_m = W^2 + W' (partner 1) from n = m, A+A- (partner 2) from n = m - 1."""
    start = sys.m if partner == 1 else sys.m - 1
    return [energy(sys, n) for n in range(start, start + k)]


def convergence_order(potential: SmoothFn, grid: GridSpec, exact: float, level: int = 0) -> float:
    """log2 of the error ratio of one level between the grid and its halved spacing."""
    coarse = discretize_and_eigen(potential, grid, level + 1).eigenvalues[level]
    fine = discretize_and_eigen(potential, grid.refined(), level + 1).eigenvalues[level]
    return math.log2(abs(coarse - exact) / abs(fine - exact))


# -- checks and reports ----------------------------------------------------------


@dataclass
class Check:
    name: str
    residual: float
    tolerance: float
    passed: bool = field(init=False)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.residual = float(self.residual)
        self.tolerance = float(self.tolerance)
        self.passed = bool(self.residual <= self.tolerance)

    def to_dict(self) -> dict:
        return {"name": self.name, "residual": _finite(self.residual), "tolerance": self.tolerance,
                "pass": self.passed, "metadata": _clean(self.metadata)}


def _finite(x: float):
    return x if math.isfinite(x) else repr(x)


def _clean(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return _finite(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def spectrum_check(sys: MasterSystem, grid: GridSpec | None = None, k: int = 6,
                   tolerance: float | None = None, order: int = 2) -> Check:
    """Max deviation of consecutive gaps of v_m from the predicted spacing beta."""
    grid = default_grid(sys) if grid is None else grid
    check_grid(sys, grid)
    levels = discretize_and_eigen(potential_vm(sys), grid, k, order)
    gaps = np.diff(levels.eigenvalues)
    step = ladder_spacing(sys)
    tol = (5e-3 if sys.family == FULL_LINE else 1e-2) if tolerance is None else tolerance
    meta = {"eigenvalues": list(levels.eigenvalues), "gaps": gaps.tolist(), "spacing": step,
            "expected": expected_levels(sys, k),
            "note": "levels follow E = beta (n - m + 1)"}
    return Check(f"spectrum_gaps[{sys.family}]", float(np.max(np.abs(gaps - step))), tol, meta)


def match_levels(reference: Iterable[float], candidate: Iterable[float], tol: float):
    """Greedy nearest matching of each reference level to an unused candidate level."""
    ref = list(reference)
    free = list(candidate)
    pairs, unmatched = [], []
    for e in ref:
        if not free:
            unmatched.append(e)
            continue
        j = int(np.argmin([abs(c - e) for c in free]))
        if abs(free[j] - e) <= tol:
            pairs.append((e, free.pop(j)))
        else:
            pairs.append((e, free[j]))
            unmatched.append(e)
    return pairs, unmatched, free


def isospectrality_check(profile: DeformationProfile, sysX: MasterSystem, grid: GridSpec | None = None,
                         k: int = 6, tolerance: float | None = None, potential: SmoothFn | None = None,
                         order: int = 2) -> Check:
    """Every low H1 level must reappear in H'; one extra H' level below them is allowed.

    The default tolerance is 5e-3 on the full line and 1e-2 on the half line, where the
    steeper levels carry larger second-order discretization error.
    """
    grid = default_grid(sysX) if grid is None else grid
    if tolerance is None:
        tolerance = 5e-3 if sysX.family == FULL_LINE else 1e-2
    check_grid(sysX, grid)
    W = superpotential(sysX).W
    v1 = W * W + W.derivative()
    vp = deformed_potential(profile) if potential is None else potential
    e1 = discretize_and_eigen(v1, grid, k, order).eigenvalues
    ep = discretize_and_eigen(vp, grid, k + 1, order).eigenvalues
    pairs, unmatched, left = match_levels(e1, ep, tolerance)
    residual = max(abs(a - b) for a, b in pairs) if pairs else math.inf
    extra = [e for e in left if e < e1[0] - tolerance]
    meta = {"H1": list(e1), "Hprime": list(ep), "pairs": [list(p) for p in pairs],
            "unmatched": unmatched, "extra_bound_state": bool(extra),
            "extra_energy": extra[0] if extra else None, "C": profile.C, "r0": profile.r0}
    return Check("isospectrality", residual, tolerance, meta)


def residual_check(name: str, residual: float, tolerance: float, **metadata) -> Check:
    return Check(name, residual, tolerance, metadata)


@dataclass
class VerificationReport:
    system: dict
    checks: list[Check]
    timestamp: str = ""

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> dict:
        failing = [c.name for c in self.checks if not c.passed]
        return {"pass": not failing, "failing": failing, "n_checks": len(self.checks)}

    def to_dict(self) -> dict:
        return {"system": _clean(self.system), "timestamp": self.timestamp,
                "checks": [c.to_dict() for c in self.checks], "summary": self.summary()}

    def to_json(self) -> str:
        # floats use the shortest repr that round-trips, so parse -> dump is byte-stable
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "VerificationReport":
        data = json.loads(text)
        checks = []
        for c in data["checks"]:
            res = c["residual"]
            chk = Check(c["name"], float(res), c["tolerance"], c["metadata"])
            checks.append(chk)
        return cls(data["system"], checks, data.get("timestamp", ""))


def emit_report(entries: list[Check], system: dict, path=None, timestamp: str | None = None) -> VerificationReport:
    if not entries:
        raise ValueError("a report needs at least one check")
    if timestamp is None:
        timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    report = VerificationReport(dict(system), list(entries), timestamp)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
    return report


def eigenvalue_csv(check: Check) -> str:
    """Rows: index, eigenvalue_H1, eigenvalue_Hprime, matched (one row per H1 level)."""
    meta = check.metadata
    unmatched = set(meta["unmatched"])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "eigenvalue_H1", "eigenvalue_Hprime", "matched"])
    for i, (a, b) in enumerate(meta["pairs"]):
        w.writerow([i, repr(float(a)), repr(float(b)), str(a not in unmatched).lower()])
    return buf.getvalue()


def spectrum_csv(result: SpectrumResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "eigenvalue"])
    for i, e in enumerate(result.eigenvalues):
        w.writerow([i, repr(e)])
    return buf.getvalue()


def profile_csv(profile: DeformationProfile, points) -> str:
    """Columns r, v2, vprime, lambda, omega for plotting."""
    r = np.asarray(points, dtype=float)
    W = profile.W
    cols = [r, (W * W - W.derivative())(r), deformed_potential(profile)(r), profile.lam(r), profile.omega(r)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "v2", "vprime", "lambda", "omega"])
    for row in zip(*cols):
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()
