"""Run configuration and the named check suite behind the command line."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import operators as op
from .assembly import assemble, superintegrability_residuals
from .deformation import deform, deformed_potential, riccati_residual
from .master import (FULL_LINE, HALF_LINE, CatalogError, MasterSystem, catalog_lookup, ladder_spacing,
                     partner_potentials, potential_vm, shape_invariance_check, superpotential)
from .verification import (Check, GridSpec, default_grid, discretize_and_eigen, expected_levels,
                           isospectrality_check, spectrum_check)

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

KNOWN_CHECKS = (
    "superpotential",
    "vm_identity",
    "shape_invariance",
    "regularity",
    "riccati",
    "ladders",
    "superintegrability",
    "orders",
    "spectrum",
    "isospectrality",
)

CLAIMED_ORDERS = {FULL_LINE: ((2,), (3,), (4,)), HALF_LINE: ((2,), (7, 8), (8,))}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    family: str = FULL_LINE
    alpha: float = 0.0
    beta: float = 2.0
    m: int = 1
    C: float = 2.0
    r0: float | None = None
    grid_n: int = 2000
    rmin: float | None = None
    rmax: float | None = None
    k: int = 6
    checks: tuple[str, ...] = KNOWN_CHECKS
    report: str | None = None
    csv: str | None = None

    def __post_init__(self):
        unknown = [c for c in self.checks if c not in KNOWN_CHECKS]
        if unknown:
            raise ConfigError(f"unknown checks {unknown}; known: {list(KNOWN_CHECKS)}")
        self.checks = tuple(self.checks)

    def system(self) -> MasterSystem:
        try:
            return catalog_lookup(self.family, alpha=self.alpha, beta=self.beta, m=self.m)
        except (CatalogError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def grid(self, sys: MasterSystem) -> GridSpec:
        g = default_grid(sys, self.grid_n)
        try:
            return GridSpec(g.rmin if self.rmin is None else self.rmin,
                            g.rmax if self.rmax is None else self.rmax, self.grid_n)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def describe(self) -> dict:
        return {"family": self.family, "alpha": self.alpha, "beta": self.beta, "m": self.m,
                "C": self.C, "r0": self.r0, "grid_n": self.grid_n, "rmin": self.rmin, "rmax": self.rmax}


_ALIASES = {"c_const": "C", "c": "C", "grid-n": "grid_n", "n": "grid_n"}


def config_from_mapping(data: dict) -> RunConfig:
    flat = dict(data)
    grid = flat.pop("grid", None)
    if isinstance(grid, dict):
        for key in ("n", "rmin", "rmax"):
            if key in grid:
                flat["grid_n" if key == "n" else key] = grid[key]
    out = {}
    names = {f.name for f in fields(RunConfig)}
    for key, val in flat.items():
        key = _ALIASES.get(key, key)
        if key not in names:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = val
    try:
        return RunConfig(**out)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".toml":
            data = tomllib.loads(text)
        elif path.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            raise ConfigError(f"config must be .json or .toml, got {path.name}")
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table/object")
    return config_from_mapping(data)


def with_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    kept = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **kept)


# -- checks ----------------------------------------------------------------------


def _line_points(sys: MasterSystem, n: int, lo: float = -6.0, hi: float = 6.0) -> np.ndarray:
    if sys.family == HALF_LINE:
        lo = 0.05
    return np.linspace(lo, hi, n)


def closed_form_W(sys: MasterSystem):
    if sys.family == FULL_LINE:
        return lambda r: 0.5 * sys.beta * (r - 2 * sys.alpha / sys.beta)
    if sys.family == HALF_LINE:
        return lambda r: -(sys.alpha + sys.m - 0.5) / r + sys.beta * r / 4
    return None


def check_superpotential(sys, **_) -> list[Check]:
    ref = closed_form_W(sys)
    pts = _line_points(sys, 100)
    W = superpotential(sys).W
    return [Check("superpotential", float(np.max(np.abs(W(pts) - ref(pts)))), 1e-12)]


def check_vm_identity(sys, **_) -> list[Check]:
    pts = _line_points(sys, 100)
    W = superpotential(sys).W
    diff = potential_vm(sys)(pts) - (W * W + W.derivative())(pts)
    return [Check("vm_identity", float(np.max(np.abs(diff))), 1e-9)]


def check_shape_invariance(sys, **_) -> list[Check]:
    flag, R = shape_invariance_check(sys)
    step = ladder_spacing(sys)
    return [Check("shape_invariance", 0.0 if flag else 1.0, 0.0, {"R": R, "flag": flag}),
            Check("shape_invariance_R", abs(R - step), 1e-9 * (1 + abs(step)), {"R": R, "beta": step})]


def check_regularity(sys, profile, **_) -> list[Check]:
    adm = profile.admissible
    margin = max(adm.lo - profile.C, profile.C - adm.hi)
    return [Check("regularity", 0.0 if adm.contains(profile.C) else 1.0, 0.0,
                  {"band": [adm.lo, adm.hi], "message": adm.describe(), "margin": margin,
                   "C": profile.C, "r0": profile.r0, "tails": list(adm.tails)})]


def check_riccati(sys, profile, **_) -> list[Check]:
    res = riccati_residual(profile, _line_points(sys, 200))
    return [Check("riccati_lambda", res["lambda"], 1e-10), Check("riccati_omega", res["omega"], 1e-10)]


def ladder_residuals(sys, profile) -> dict[str, float]:
    """Scale-normalized residuals of every ladder relation the family should satisfy."""
    W = superpotential(sys).W
    step = ladder_spacing(sys)
    Ap, Am = op.ladder_pair(W)
    H2 = op.compose(Ap, Am)
    out = {}
    if sys.family == FULL_LINE:
        pts = np.linspace(-3.0, 3.0, 64)
        Hp = op.schrodinger(deformed_potential(profile))
        Sp, Sm = op.make_S_ladders(W, profile, 1), op.make_S_ladders(W, profile, -1)
        out["[H2,A+]-bA+"] = op.relation_residual(H2, Ap, step * Ap, pts)
        out["[H2,A-]+bA-"] = op.relation_residual(H2, Am, -step * Am, pts)
        out["[H',S+]-bS+"] = op.relation_residual(Hp, Sp, step * Sp, pts)
        out["[H',S-]+bS-"] = op.relation_residual(Hp, Sm, -step * Sm, pts)
    else:
        pts = np.linspace(0.5, 3.0, 64)
        Mp, Mm, _, _ = op.make_M_R_ladders(W, profile)
        out["[H2,M+]-bM+"] = op.relation_residual(H2, Mp, step * Mp, pts)
        out["[H2,M-]+bM-"] = op.relation_residual(H2, Mm, -step * Mm, pts)
    return out


def check_ladders(sys, profile, **_) -> list[Check]:
    return [Check(f"ladder {k}", v, 1e-9) for k, v in ladder_residuals(sys, profile).items()]


def check_superintegrability(sys, profile, assembled, **_) -> list[Check]:
    res = superintegrability_residuals(assembled)
    c = res.pop("c")
    return [Check(f"superintegrability {k}", v, 1e-8, {"c": c} if k.startswith("[K") else {})
            for k, v in res.items()]


def check_orders(sys, profile, assembled, **_) -> list[Check]:
    claimed = CLAIMED_ORDERS[sys.family]
    ok = all(o in allowed for o, allowed in zip(assembled.orders, claimed))
    meta = {"orders": list(assembled.orders), "claimed": [list(a) for a in claimed],
            "naive_order_A1": assembled.naive_order_A1, "A1_top_cancelled": assembled.a1_top_cancelled}
    return [Check("integral_orders", 0.0 if ok else 1.0, 0.0, meta)]


def check_spectrum(sys, grid, k, **_) -> list[Check]:
    out = [spectrum_check(sys, grid, k)]
    _, v2 = partner_potentials(superpotential(sys))
    levels = discretize_and_eigen(v2, grid, k).eigenvalues
    exact = expected_levels(sys, k, partner=2)
    tol = 2e-3 if sys.family == FULL_LINE else 1e-2
    out.append(Check("spectrum_levels_H2", float(np.max(np.abs(np.subtract(levels, exact)))), tol,
                     {"eigenvalues": list(levels), "expected": exact}))
    return out


def check_isospectrality(sys, profile, grid, k, **_) -> list[Check]:
    return [isospectrality_check(profile, sys, grid, k)]


CHECKS = {
    "superpotential": check_superpotential,
    "vm_identity": check_vm_identity,
    "shape_invariance": check_shape_invariance,
    "regularity": check_regularity,
    "riccati": check_riccati,
    "ladders": check_ladders,
    "superintegrability": check_superintegrability,
    "orders": check_orders,
    "spectrum": check_spectrum,
    "isospectrality": check_isospectrality,
}

NEEDS_ASSEMBLY = {"superintegrability", "orders"}


def run_checks(cfg: RunConfig) -> list[Check]:
    """Run the configured checks; raises InadmissibleConstantError before any check runs."""
    sys = cfg.system()
    grid = cfg.grid(sys)
    profile = deform(sys, cfg.C, cfg.r0)
    assembled = assemble(sys, cfg.C, cfg.r0, profile) if NEEDS_ASSEMBLY & set(cfg.checks) else None
    out = []
    for name in cfg.checks:
        got = CHECKS[name](sys, profile=profile, assembled=assembled, grid=grid, k=cfg.k)
        for c in got:
            c.metadata.setdefault("group", name)
        out.extend(got)
    return out
