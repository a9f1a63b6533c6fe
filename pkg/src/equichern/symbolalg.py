"""Numeric membership checks for the algebra of transversally-negative-order symbols.

A symbol function is admitted when, for every eps, a constant c_eps bounds
|b(x, xi)| by c_eps (1 + |phi_x(xi)|^2)/(1 + |xi|^2) + eps on sampled grids
and the constant stabilizes as the xi-radius grows, and when its restriction
to the transverse covector variety decays at infinity.  Transversal
ellipticity of a symbol sigma is the membership of a (1 - sigma_hat^2) for
compactly supported cutoffs a, with sigma_hat the order-zero normalization
sigma / sqrt(1 + |x|^2 + |xi|^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import ANGLE, COMPLEX, ActionModel, phi_xi_norms_grid

STABILITY_RATIO = 1.1   # heuristic: c_eps(R)/c_eps(R/2) below this counts as stable
DECAY_DELTA = 1e-3


@dataclass(frozen=True)
class SymbolFunction:
    """A bounded symbol sampled through a vectorized evaluator.

    The evaluator maps coordinate arrays (one complex array per base and
    fiber coordinate, broadcastable) to complex values or (... , k, k)
    matrices; magnitudes are taken pointwise (operator norm for matrices).
    """

    evaluator: Callable
    x_support_radius: float
    name: str = "symbol"

    def magnitude(self, base_arrays, fiber_arrays) -> np.ndarray:
        vals = np.asarray(self.evaluator(base_arrays, fiber_arrays))
        if vals.ndim >= 2 and vals.shape[-1] == vals.shape[-2]:
            return np.linalg.svd(vals, compute_uv=False)[..., 0]
        return np.abs(vals)


@dataclass(frozen=True)
class GridSpec:
    """Sampling density for the membership checks."""

    n_x: int = 64
    n_dirs: int = 32
    n_radii: int = 24
    r_max: float = 1e3
    r_min: float = 0.5
    seed: int = 7


def _base_points(model: ActionModel, b: SymbolFunction, grid: GridSpec) -> dict:
    """Sample the base within the declared x-support."""
    base = model.base_coords
    if len(base) != 1:
        raise ValueError("grids implemented for a single base coordinate")
    c = base[0]
    if c.kind == COMPLEX:
        n_r = max(2, int(round(math.sqrt(grid.n_x))))
        n_a = max(1, grid.n_x // n_r)
        radii = np.linspace(0.0, b.x_support_radius, n_r)
        angles = np.linspace(0.0, 2 * math.pi, n_a, endpoint=False)
        pts = (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()
        return {c.name: pts}
    pts = np.linspace(0.0, 2 * math.pi, grid.n_x, endpoint=False)
    return {c.name: pts.astype(complex)}


def _fiber_directions(model: ActionModel, grid: GridSpec) -> np.ndarray:
    fibers = model.fiber_coords
    if len(fibers) != 1:
        raise ValueError("grids implemented for a single fiber coordinate")
    if fibers[0].kind == COMPLEX:
        angles = np.linspace(0.0, 2 * math.pi, grid.n_dirs, endpoint=False)
        return np.exp(1j * angles)
    return np.array([1.0, -1.0], dtype=complex)


@dataclass
class ConditionCReport:
    entries: list[dict]
    passed: bool
    r_max: float

    def to_dict(self) -> dict:
        return {"passed": bool(self.passed), "r_max": self.r_max,
                "stability_ratio_limit": STABILITY_RATIO,
                "note": "stabilization ratio is a sampling heuristic",
                "entries": self.entries}


def condition_c_fit(b: SymbolFunction, model: ActionModel,
                    eps_list: Sequence[float],
                    grid: GridSpec = GridSpec()) -> ConditionCReport:
    """Fit the minimal c_eps in the transverse-decay bound on a radial grid.

    PASS requires c_eps at radius R within STABILITY_RATIO of its value at
    R/2 for every eps, so that growing the grid no longer grows the constant.
    """
    if grid.n_dirs <= 0 or grid.n_radii <= 0:
        raise ValueError("empty grid")
    base = _base_points(model, b, grid)
    dirs = _fiber_directions(model, grid)
    radii = np.geomspace(grid.r_min, grid.r_max, grid.n_radii)
    name_x = model.base_coords[0].name
    name_f = model.fiber_coords[0].name
    x = base[name_x][:, None, None]
    xi = (dirs[:, None] * radii[None, :])[None, :, :]
    X = np.broadcast_to(x, (len(base[name_x]), len(dirs), len(radii)))
    XI = np.broadcast_to(xi, X.shape)
    mag = b.magnitude({name_x: X}, {name_f: XI})
    phi_sq, xi_sq = phi_xi_norms_grid(model, {name_x: X}, {name_f: XI})
    bound_core = (1.0 + phi_sq) / (1.0 + xi_sq)
    half_mask = np.broadcast_to((radii <= grid.r_max / 2)[None, None, :], X.shape)

    entries = []
    all_pass = True
    for eps in eps_list:
        need = np.where(mag > eps, (mag - eps) / bound_core, 0.0)
        c_full = float(need.max())
        c_half = float(np.where(half_mask, need, 0.0).max())
        if c_full < 1e-12 and c_half < 1e-12:
            ratio = 1.0
        elif c_half < 1e-12:
            ratio = math.inf
        else:
            ratio = c_full / c_half
        ok = ratio < STABILITY_RATIO
        all_pass = all_pass and ok
        entries.append({"eps": float(eps), "c_eps": c_full,
                        "c_eps_half_radius": c_half, "ratio": ratio,
                        "passed": bool(ok)})
    return ConditionCReport(entries=entries, passed=all_pass, r_max=grid.r_max)


@dataclass
class DecayReport:
    shell_radii: list[float]
    shell_sup: list[float]
    passed: bool
    vacuous: bool

    def to_dict(self) -> dict:
        return {"passed": bool(self.passed), "vacuous": bool(self.vacuous),
                "delta": DECAY_DELTA,
                "shells": [{"radius": r, "sup": s}
                           for r, s in zip(self.shell_radii, self.shell_sup)]}


def _transverse_directions(model: ActionModel, x: complex) -> np.ndarray:
    """Unit fiber covectors orthogonal to the orbit direction at x."""
    fibers = model.fiber_coords
    base = model.base_coords[0]
    if base.kind == COMPLEX:
        rho = -1j * base.weight * x
        if abs(rho) < 1e-14:
            return np.exp(1j * np.linspace(0, 2 * math.pi, 8, endpoint=False))
        # xi with Re(xi conj(rho)) = 0: the real line through i*rho
        d = 1j * rho / abs(rho)
        return np.array([d, -d])
    if base.kind == ANGLE and base.weight != 0 and fibers[0].kind != COMPLEX:
        return np.empty(0, dtype=complex)  # orbit fills the fiber pairing: only xi = 0
    return np.array([1.0, -1.0], dtype=complex)


def restriction_decay_check(b: SymbolFunction, model: ActionModel,
                            grid: GridSpec = GridSpec()) -> DecayReport:
    """Decay of |b| restricted to the transverse covector variety.

    PASS when shell suprema decrease monotonically to below DECAY_DELTA at
    the outer shell; when the variety is the zero section (compact), the
    vanishing-at-infinity condition holds vacuously.
    """
    base = _base_points(model, b, grid)
    name_x = model.base_coords[0].name
    name_f = model.fiber_coords[0].name
    radii = np.geomspace(grid.r_min, grid.r_max, grid.n_radii)
    xs, ds = [], []
    for x in base[name_x]:
        for d in _transverse_directions(model, complex(x)):
            xs.append(x)
            ds.append(d)
    if not xs:
        return DecayReport(shell_radii=list(map(float, radii)),
                           shell_sup=[0.0] * len(radii), passed=True, vacuous=True)
    xs = np.asarray(xs, dtype=complex)[:, None]
    ds = np.asarray(ds, dtype=complex)[:, None]
    XI = ds * radii[None, :]
    X = np.broadcast_to(xs, XI.shape)
    mag = b.magnitude({name_x: X}, {name_f: XI})
    sup = mag.max(axis=0)
    monotone = all(b2 <= a2 * (1 + 1e-9) + 1e-15 for a2, b2 in zip(sup, sup[1:]))
    passed = monotone and float(sup[-1]) < DECAY_DELTA
    return DecayReport(shell_radii=list(map(float, radii)),
                       shell_sup=list(map(float, sup)), passed=passed, vacuous=False)


@dataclass
class TransversalityReport:
    cutoffs: list[float]
    condition_c: list[ConditionCReport]
    decay: list[DecayReport]
    passed: bool

    def to_dict(self) -> dict:
        return {"passed": bool(self.passed),
                "cutoff_radii": self.cutoffs,
                "condition_c": [r.to_dict() for r in self.condition_c],
                "restriction_decay": [r.to_dict() for r in self.decay]}


def bump(r: np.ndarray, radius: float) -> np.ndarray:
    """Smooth compactly supported cutoff exp(1 - 1/(1 - (r/radius)^2))."""
    r = np.abs(np.asarray(r))
    t = (r / radius) ** 2
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        val = np.where(t < 1.0, np.exp(1.0 - 1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    return val


def normalized_remainder_symbol(model: ActionModel, cutoff_radius: float,
                                amplitude: float = 1.0) -> SymbolFunction:
    """a(x) (1 - sigma_hat^2) with the order-zero normalized symbol sigma_hat."""
    name_x = model.base_coords[0].name
    name_f = model.fiber_coords[0].name
    entries = model.symbol.entries
    d = model.symbol.dim

    def evaluator(base_arrays, fiber_arrays):
        x = np.asarray(base_arrays[name_x], dtype=complex)
        xi = np.asarray(fiber_arrays[name_f], dtype=complex)
        arrays = {name_x: x, name_f: xi}
        for a, bb in model.conj_pairs.items():
            if a in arrays:
                arrays[bb] = np.conj(arrays[a])
        shape = x.shape
        sig = np.zeros(shape + (d, d), dtype=complex)
        for i in range(d):
            for j in range(d):
                f = entries[i][j]
                if f.is_zero:
                    continue
                sig[..., i, j] = f.terms[0].eval_grid(arrays)
        scale = np.sqrt(1.0 + np.abs(x) ** 2 + np.abs(xi) ** 2)
        sig = sig / scale[..., None, None]
        eye = np.eye(d)
        rem = eye - np.einsum("...ij,...jk->...ik", sig, sig)
        a = amplitude * bump(x, cutoff_radius)
        return a[..., None, None] * rem

    return SymbolFunction(evaluator=evaluator, x_support_radius=cutoff_radius,
                          name=f"{model.name}: a(1 - sigma_hat^2)")


def saturating_symbol(model: ActionModel, amplitude: float = 3.0,
                      support_radius: float = 1.5) -> SymbolFunction:
    """f(x) (1 + |phi|^2)/(1 + |xi|^2): saturates the membership bound by design."""
    name_x = model.base_coords[0].name
    name_f = model.fiber_coords[0].name

    def evaluator(base_arrays, fiber_arrays):
        phi_sq, xi_sq = phi_xi_norms_grid(model, base_arrays, fiber_arrays)
        x = np.asarray(base_arrays[name_x])
        f = amplitude * bump(x, support_radius)
        return f * (1.0 + phi_sq) / (1.0 + xi_sq)

    return SymbolFunction(evaluator=evaluator, x_support_radius=support_radius,
                          name="saturating bound symbol")


def constant_in_xi_symbol(model: ActionModel, amplitude: float = 1.0,
                          support_radius: float = 1.5) -> SymbolFunction:
    """f(x), constant in xi: the negative control failing transverse decay."""
    name_x = model.base_coords[0].name

    def evaluator(base_arrays, fiber_arrays):
        x = np.asarray(base_arrays[name_x])
        xi = np.asarray(fiber_arrays[model.fiber_coords[0].name])
        return amplitude * bump(x, support_radius) * np.ones_like(np.abs(xi))

    return SymbolFunction(evaluator=evaluator, x_support_radius=support_radius,
                          name="constant-in-xi control")


def transversal_ellipticity_check(model: ActionModel,
                                  cutoff_radii: Sequence[float] = (1.0, 2.0),
                                  grid: GridSpec = GridSpec()) -> TransversalityReport:
    """Membership of a (1 - sigma_hat^2) for each cutoff radius."""
    creps, dreps = [], []
    passed = True
    for radius in cutoff_radii:
        b = normalized_remainder_symbol(model, radius)
        cr = condition_c_fit(b, model, (0.1, 0.01, 0.001), grid)
        dr = restriction_decay_check(b, model, grid)
        creps.append(cr)
        dreps.append(dr)
        passed = passed and cr.passed and dr.passed
    return TransversalityReport(cutoffs=[float(r) for r in cutoff_radii],
                                condition_c=creps, decay=dreps, passed=passed)
