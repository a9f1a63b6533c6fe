"""Circle/torus action models on flat spaces and their augmented symbols.

An action model declares coordinates with integer rotation weights, the
graded bundles the symbol acts on, an auxiliary rank-2 Clifford-model bundle
used to absorb the orbital directions, and the symbol matrix itself.  The
module provides the orbital projection (composition of the action derivative
with its metric adjoint), Clifford multiplication on the model bundle, the
graded augmentation of a symbol by orbital Clifford multiplication, a
determinant-based ellipticity scan along shells, and the two-stage linear
homotopy connecting the augmented symbol to its constant-coefficient
normal form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .exterior import NUMERIC, SYMBOLIC, ExteriorAlgebra, Poly
from .supermatrix import Grading, SuperMatrix, UnsupportedShapeError

COMPLEX = "complex"
ANGLE = "angle"
REAL = "real"


@dataclass(frozen=True)
class Coordinate:
    """A declared coordinate with its rotation weight and base/fiber role."""

    name: str
    kind: str = COMPLEX
    weight: int = 0
    role: str = "base"

    def __post_init__(self):
        if self.kind not in (COMPLEX, ANGLE, REAL):
            raise ValueError(f"unknown coordinate kind {self.kind!r}")
        if self.role not in ("base", "fiber"):
            raise ValueError(f"unknown coordinate role {self.role!r}")


@dataclass(frozen=True)
class BundleSpec:
    """Summand weights and parities of a graded equivariant bundle."""

    weights: tuple[int, ...]
    parities: tuple[int, ...]

    def __post_init__(self):
        if len(self.weights) != len(self.parities):
            raise ValueError("weights and parities must have equal length")
        if any(p not in (0, 1) for p in self.parities):
            raise ValueError("parities must be 0 or 1")

    @property
    def rank(self) -> int:
        return len(self.weights)

    def grading(self) -> Grading:
        return Grading(self.parities)


def _tensor_bundle(e: BundleSpec, w: BundleSpec) -> tuple[BundleSpec, tuple]:
    """Graded tensor product E (x) W, listing even summands first.

    Returns the combined spec and the (E index, W index) pair per summand,
    in the basis order used by augmented symbols and moments.
    """
    evens, odds = [], []
    for i, (we, pe) in enumerate(zip(e.weights, e.parities)):
        for j, (ww, pw) in enumerate(zip(w.weights, w.parities)):
            target = evens if (pe + pw) % 2 == 0 else odds
            target.append((we + ww, (i, j)))
    weights = tuple(wt for wt, _ in evens) + tuple(wt for wt, _ in odds)
    parities = (0,) * len(evens) + (1,) * len(odds)
    pairs = tuple(p for _, p in evens) + tuple(p for _, p in odds)
    return BundleSpec(weights, parities), pairs


class ActionModel:
    """Coordinates, weights, bundles and symbol of one group-action model."""

    def __init__(
        self,
        name: str,
        coordinates: Sequence[Coordinate],
        bundle_e: BundleSpec,
        bundle_w: BundleSpec | None = None,
        symbol_rows=None,
        odd_term_rows=None,
        volume: Sequence[str] | None = None,
        x_support: float = 2.0,
    ):
        self.name = name
        self.coordinates_meta = tuple(coordinates)
        coord_names: list[str] = []
        gen_names: list[str] = []
        conj_pairs: dict[str, str] = {}
        for c in self.coordinates_meta:
            if c.kind == COMPLEX:
                bar = c.name + "bar"
                coord_names += [c.name, bar]
                gen_names += ["d" + c.name, "d" + bar]
                conj_pairs[c.name] = bar
            else:
                coord_names.append(c.name)
                gen_names.append("d" + c.name)
        self.algebra = ExteriorAlgebra(gen_names, coord_names)
        self.conj_pairs = conj_pairs
        self.bundle_e = bundle_e
        self.bundle_w = bundle_w
        if bundle_w is not None:
            self.bundle_script_e, self.script_e_pairs = _tensor_bundle(bundle_e, bundle_w)
        else:
            self.bundle_script_e, self.script_e_pairs = bundle_e, None

        self.symbol = None
        if symbol_rows is not None:
            self.set_symbol(symbol_rows)

        self.odd_term = None
        if odd_term_rows is not None:
            self.set_odd_term(odd_term_rows)

        if volume is None:
            volume = []
            for c in self.coordinates_meta:
                if c.kind == COMPLEX:
                    volume += ["d" + c.name + "bar", "d" + c.name]
                else:
                    volume.append("d" + c.name)
        self.volume = tuple(volume)
        if set(self.volume) != set(self.algebra.generators):
            raise ValueError("volume ordering must use every generator exactly once")
        self.x_support = float(x_support)

    def set_symbol(self, rows) -> None:
        mat = rows if isinstance(rows, SuperMatrix) else SuperMatrix(
            self.algebra, self.bundle_e.grading(), rows)
        if mat.dim != self.bundle_e.rank:
            raise ValueError("symbol dimension must match the E bundle rank")
        is_zero = all(f.is_zero for row in mat.entries for f in row)
        if not is_zero and mat.homogeneous_parity() != 1:
            raise ValueError("symbol must be odd with respect to the E-grading")
        self.symbol = mat

    def set_odd_term(self, rows) -> None:
        mat = rows if isinstance(rows, SuperMatrix) else SuperMatrix(
            self.algebra, self.bundle_script_e.grading(), rows)
        if mat.dim != self.bundle_script_e.rank:
            raise ValueError("odd term dimension must match the full bundle rank")
        self.odd_term = mat

    # -- coordinate helpers ----------------------------------------------------

    @property
    def base_coords(self) -> tuple[Coordinate, ...]:
        return tuple(c for c in self.coordinates_meta if c.role == "base")

    @property
    def fiber_coords(self) -> tuple[Coordinate, ...]:
        return tuple(c for c in self.coordinates_meta if c.role == "fiber")

    def coord_poly(self, name: str) -> Poly:
        return self.algebra.coord(name)

    def conj_poly(self, p: Poly) -> Poly:
        """Formal conjugate: swap conjugate-pair exponents, conjugate coefficients."""
        coords = self.algebra.coordinates
        swap = {}
        for a, b in self.conj_pairs.items():
            swap[self.algebra.coord_index[a]] = self.algebra.coord_index[b]
            swap[self.algebra.coord_index[b]] = self.algebra.coord_index[a]
        out = {}
        for m, c in p.terms.items():
            m2 = list(m)
            for i, j in swap.items():
                m2[j] = m[i]
            out[tuple(m2)] = out.get(tuple(m2), 0.0) + c.conjugate()
        return Poly(self.algebra, out)

    def full_point(self, point: Mapping[str, complex]) -> dict[str, complex]:
        """Extend a point on the real locus with its conjugate coordinates."""
        out = dict(point)
        for a, b in self.conj_pairs.items():
            if a in out and b not in out:
                out[b] = complex(out[a]).conjugate()
        return out

    def evaluate_symbol(self, point: Mapping[str, complex]) -> SuperMatrix:
        return self.symbol.evaluate(self.full_point(point))

    def __repr__(self):
        return f"ActionModel({self.name!r})"


# -- infinitesimal action and orbital projection --------------------------------


def infinitesimal_generator(model: ActionModel, v: float, point: Mapping[str, complex]) -> dict:
    """Tangent components of the action derivative at a point.

    Weight-n complex coordinates contribute -i n v z (the derivative of
    exp(-tv) acting with weight n); angle coordinates rotate at rate +w v.
    """
    out: dict[str, complex] = {}
    for c in model.base_coords:
        if c.kind == COMPLEX:
            out[c.name] = -1j * c.weight * v * complex(point[c.name])
        elif c.kind == ANGLE:
            out[c.name] = complex(c.weight * v)
        else:
            out[c.name] = 0.0j
    return out


def _as_fiber_dict(model: ActionModel, xi) -> dict[str, complex]:
    fibers = model.fiber_coords
    if isinstance(xi, Mapping):
        return {f.name: complex(xi[f.name]) for f in fibers}
    if len(fibers) != 1:
        raise ValueError("scalar xi only allowed for a single fiber coordinate")
    return {fibers[0].name: complex(xi)}


def orbital_projection(model: ActionModel, point: Mapping[str, complex], xi) -> dict:
    """phi = rho rho^t: project a (co)tangent vector onto the orbit direction."""
    rho1 = infinitesimal_generator(model, 1.0, point)
    xiv = _as_fiber_dict(model, xi)
    s = 0.0
    for b, f in zip(model.base_coords, model.fiber_coords):
        if b.kind == COMPLEX:
            s += (xiv[f.name] * rho1[b.name].conjugate()).real
        else:
            s += (xiv[f.name] * rho1[b.name]).real
    return {b.name: rho1[b.name] * s for b in model.base_coords}


def rho_norm_sq(model: ActionModel, point: Mapping[str, complex]) -> float:
    rho1 = infinitesimal_generator(model, 1.0, point)
    return sum(abs(v) ** 2 for v in rho1.values())


def phi_xi_norms_grid(model: ActionModel, base_arrays: Mapping[str, np.ndarray],
                      fiber_arrays: Mapping[str, np.ndarray]):
    """Vectorized (|phi|^2, |xi|^2) over matching point/covector grids."""
    rho = {}
    for b in model.base_coords:
        z = np.asarray(base_arrays[b.name], dtype=complex)
        if b.kind == COMPLEX:
            rho[b.name] = -1j * b.weight * z
        elif b.kind == ANGLE:
            rho[b.name] = np.full_like(z, complex(b.weight))
        else:
            rho[b.name] = np.zeros_like(z)
    s = 0.0
    xi_sq = 0.0
    rho_sq = 0.0
    for b, f in zip(model.base_coords, model.fiber_coords):
        xi = np.asarray(fiber_arrays[f.name], dtype=complex)
        s = s + (xi * np.conj(rho[b.name])).real
        xi_sq = xi_sq + np.abs(xi) ** 2
        rho_sq = rho_sq + np.abs(rho[b.name]) ** 2
    return s * s * rho_sq, xi_sq


# -- Clifford model ---------------------------------------------------------------


def clifford_multiplication(model: ActionModel, w) -> SuperMatrix:
    """Left Clifford multiplication by an orbital tangent value on the W bundle."""
    if model.bundle_w is None or model.bundle_w.rank != 2:
        raise UnsupportedShapeError("Clifford multiplication needs a rank-2 W bundle")
    if isinstance(w, Mapping):
        vals = [v for v in w.values() if v != 0]
        w = vals[0] if vals else 0.0
    w = complex(w)
    alg = model.algebra
    z = alg.zero(NUMERIC)
    return SuperMatrix(alg, model.bundle_w.grading(),
                       [[z, alg.scalar(w.conjugate(), NUMERIC)],
                        [alg.scalar(w, NUMERIC), z]])


def _phi_polys(model: ActionModel) -> tuple[Poly, Poly]:
    """Orbital projection applied to the tautological covector, as (phi, conj phi)."""
    bases = model.base_coords
    fibers = model.fiber_coords
    if len(bases) != 1 or bases[0].kind != COMPLEX:
        raise UnsupportedShapeError("symbolic phi implemented for one complex base coordinate")
    b, f = bases[0], fibers[0]
    zc = model.coord_poly(b.name)
    xc = model.coord_poly(f.name)
    rho = (-1j * b.weight) * zc
    rho_bar = model.conj_poly(rho)
    x_bar = model.conj_poly(xc)
    s = (xc * rho_bar + x_bar * rho) * 0.5
    phi = rho * s
    return phi, model.conj_poly(phi)


def _augmented_from_cliff_arg(model: ActionModel, w: Poly, wbar: Poly) -> SuperMatrix:
    """sigma (x) 1 + 1 (x) c(w) on E (x) W with graded tensor signs."""
    e, wspec = model.bundle_e, model.bundle_w
    if e is None or wspec is None or e.rank != 2 or wspec.rank != 2:
        raise UnsupportedShapeError("augmentation needs rank-2 E and W bundles")
    alg = model.algebra
    zero = alg.zero(SYMBOLIC)
    sigma = model.symbol.entries
    cmat = [[None, alg.scalar(wbar)], [alg.scalar(w), None]]
    basis = list(model.script_e_pairs)
    d = len(basis)
    out = [[zero for _ in range(d)] for _ in range(d)]
    for col, (j, k) in enumerate(basis):
        for row, (i, l) in enumerate(basis):
            acc = zero
            if l == k and not sigma[i][j].is_zero:
                acc = acc + sigma[i][j]
            if i == j and cmat[l][k] is not None:
                term = cmat[l][k]
                if e.parities[i] == 1:
                    term = -term
                acc = acc + term
            out[row][col] = acc
    return SuperMatrix(alg, model.bundle_script_e.grading(), out)


def augmented_symbol(model: ActionModel) -> SuperMatrix:
    """Augment the symbol by orbital Clifford multiplication: sigma (x) 1 + 1 (x) c(phi)."""
    phi, phibar = _phi_polys(model)
    return _augmented_from_cliff_arg(model, phi, phibar)


# -- homotopy to the constant-coefficient normal form ------------------------------


@dataclass(frozen=True)
class HomotopyPath:
    """Consecutive linear interpolations between symbol matrices."""

    stages: tuple[tuple[SuperMatrix, SuperMatrix], ...]

    def __post_init__(self):
        for (a0, a1), (b0, b1) in zip(self.stages, self.stages[1:]):
            if not all(x == y for r1, r2 in zip(a1.entries, b0.entries)
                       for x, y in zip(r1, r2)):
                raise ValueError("endpoints of consecutive stages must match")

    @property
    def stage_count(self) -> int:
        return len(self.stages)

    def matrix_at(self, stage: int, s: float) -> SuperMatrix:
        a, b = self.stages[stage]
        return a.scale(1.0 - s) + b.scale(s)


def homotopy_path(model: ActionModel) -> HomotopyPath:
    """Two-stage path: flatten the orbital factor, then shear in the fiber."""
    b = model.base_coords[0]
    f = model.fiber_coords[0]
    if b.kind != COMPLEX or f.kind != COMPLEX:
        raise UnsupportedShapeError("homotopy implemented for complex base and fiber")
    zc = model.coord_poly(b.name)
    xc = model.coord_poly(f.name)
    phi, phibar = _phi_polys(model)
    w_mid = 1j * zc
    w_end = 1j * zc + xc
    stage = lambda w: _augmented_from_cliff_arg(model, w, model.conj_poly(w))
    start = _augmented_from_cliff_arg(model, phi, phibar)
    return HomotopyPath(((start, stage(w_mid)), (stage(w_mid), stage(w_end))))


# -- ellipticity scanning ------------------------------------------------------------


@dataclass(frozen=True)
class ScanGrid:
    """Shell radii and sampling controls for the determinant scan."""

    radii: tuple[float, ...] = (1.0, 1.5, 2.0, 3.0, 4.5, 6.0, 8.0)
    samples: int = 2000
    seed: int = 0
    threshold: float = 1e-6
    r0: float = 2.0
    refine: bool = True
    refine_iters: int = 80
    refine_candidates: int = 4
    degenerate_tol: float = 1e-12


@dataclass
class ShellResult:
    radius: float
    min_normalized_det: float
    median_opnorm: float
    median_det: float
    degenerate: int


@dataclass
class ScanReport:
    shells: list[ShellResult]
    growth_exponent: float
    passed: bool
    degenerate_points: list

    def to_dict(self) -> dict:
        return {
            "passed": bool(self.passed),
            "growth_exponent": float(self.growth_exponent),
            "shells": [
                {
                    "radius": s.radius,
                    "min_normalized_det": s.min_normalized_det,
                    "median_opnorm": s.median_opnorm,
                    "median_det": s.median_det,
                    "degenerate": s.degenerate,
                }
                for s in self.shells
            ],
            "degenerate_points": [[float(x) for x in p] for p in self.degenerate_points],
        }


def _real_structure(algebra: ExteriorAlgebra):
    """Split coordinates into conjugate pairs and real singles by naming."""
    coords = list(algebra.coordinates)
    pairs, singles, used = [], [], set()
    for c in coords:
        if c in used:
            continue
        if c + "bar" in coords:
            pairs.append((c, c + "bar"))
            used.update({c, c + "bar"})
        elif not c.endswith("bar"):
            singles.append(c)
            used.add(c)
    return pairs, singles


def _coords_from_real(algebra: ExteriorAlgebra, pts: np.ndarray) -> dict[str, np.ndarray]:
    pairs, singles = _real_structure(algebra)
    out = {}
    k = 0
    for a, b in pairs:
        out[a] = pts[:, k] + 1j * pts[:, k + 1]
        out[b] = pts[:, k] - 1j * pts[:, k + 1]
        k += 2
    for s in singles:
        out[s] = pts[:, k].astype(complex)
        k += 1
    return out


def _real_dim(algebra: ExteriorAlgebra) -> int:
    pairs, singles = _real_structure(algebra)
    return 2 * len(pairs) + len(singles)


def _eval_matrix_grid(matrix: SuperMatrix, arrays: Mapping[str, np.ndarray]) -> np.ndarray:
    d = matrix.dim
    n = len(next(iter(arrays.values())))
    out = np.zeros((n, d, d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            f = matrix.entries[i][j]
            if f.is_zero:
                continue
            if f.max_degree > 0:
                raise ValueError("ellipticity scan expects a degree-0 symbol matrix")
            out[:, i, j] = f.terms[0].eval_grid(arrays)
    return out


def ellipticity_scan(matrix: SuperMatrix, grid: ScanGrid = ScanGrid()) -> ScanReport:
    """Shell scan of the pointwise-normalized determinant of a symbol matrix.

    Reports min |det| of the operator-norm-normalized symbol per shell and a
    least-squares growth exponent of |det|.  Points where the symbol norm
    collapses below ``degenerate_tol`` times the shell scale count as
    determinant zeros.  The worst sample per shell is refined by a local
    search minimizing the smallest singular value, so conic zero sets are
    found and not merely straddled.
    """
    if grid.samples <= 0 or not grid.radii:
        raise ValueError("empty scan grid")
    rng = np.random.default_rng(grid.seed)
    algebra = matrix.algebra
    dim_real = _real_dim(algebra)
    d = matrix.dim

    def stats(pts: np.ndarray):
        arrays = _coords_from_real(algebra, pts)
        mats = _eval_matrix_grid(matrix, arrays)
        dets = np.abs(np.linalg.det(mats))
        svals = np.linalg.svd(mats, compute_uv=False)
        return dets, svals[:, 0], svals[:, -1]

    shells: list[ShellResult] = []
    degenerate_points = []
    log_r, log_det = [], []
    for r in grid.radii:
        dirs = rng.standard_normal((grid.samples, dim_real))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        pts = r * dirs
        dets, opnorms, smins = stats(pts)
        scale = float(np.median(opnorms))
        cand_idx = np.argsort(smins)[: grid.refine_candidates]
        cand = [pts[i] for i in cand_idx]
        if grid.refine:
            for c0 in cand_idx:
                p = dirs[c0].copy()
                step = 0.5
                best = smins[c0]
                for _ in range(grid.refine_iters):
                    prop = p + step * rng.standard_normal((24, dim_real))
                    prop /= np.linalg.norm(prop, axis=1, keepdims=True)
                    _, _, sm = stats(r * prop)
                    k = int(np.argmin(sm))
                    if sm[k] < best:
                        best = sm[k]
                        p = prop[k]
                    else:
                        step *= 0.6
                    if best < grid.degenerate_tol * max(scale, 1e-30):
                        break
                cand.append(r * p)
        cdets, copn, csmin = stats(np.asarray(cand))
        all_dets = np.concatenate([dets, cdets])
        all_opn = np.concatenate([opnorms, copn])
        floor = grid.degenerate_tol * max(scale, 1e-30)
        degenerate = all_opn < floor
        normalized = np.where(
            degenerate, 0.0, all_dets / np.maximum(all_opn, floor) ** d)
        n_deg = int(degenerate.sum())
        if n_deg:
            for idx in np.nonzero(degenerate)[0][:3]:
                pt = np.concatenate([pts, np.asarray(cand)])[idx]
                degenerate_points.append(list(pt))
        shells.append(ShellResult(
            radius=float(r),
            min_normalized_det=float(normalized.min()),
            median_opnorm=scale,
            median_det=float(np.median(dets)),
            degenerate=n_deg,
        ))
        log_r.append(np.log(r))
        log_det.append(np.log(max(float(np.median(dets)), 1e-300)))

    growth = float(np.polyfit(log_r, log_det, 1)[0]) if len(log_r) > 1 else 0.0
    passed = all(
        s.min_normalized_det > grid.threshold
        for s in shells if s.radius >= grid.r0)
    return ScanReport(shells=shells, growth_exponent=growth,
                      passed=passed, degenerate_points=degenerate_points)


# -- built-in models ------------------------------------------------------------------


def c_plane() -> ActionModel:
    """Rotation of the complex plane with the shifted Cauchy-Riemann symbol."""
    coords = (Coordinate("z", COMPLEX, 1, "base"),
              Coordinate("xi", COMPLEX, 1, "fiber"))
    e = BundleSpec((0, 1), (0, 1))
    w = BundleSpec((0, 1), (0, 1))
    model = ActionModel("c-plane", coords, e, w, symbol_rows=None, x_support=2.0)
    alg = model.algebra
    z = alg.coord("z")
    zb = alg.coord("zbar")
    x = alg.coord("xi")
    xb = alg.coord("xibar")
    zero = alg.zero(SYMBOLIC)
    sigma = [[zero, alg.scalar(zb - 1j * xb)], [alg.scalar(z + 1j * x), zero]]
    model.set_symbol(sigma)
    # superconnection odd term: i * (constant-coefficient endpoint of the homotopy)
    ltilde = _augmented_from_cliff_arg(model, 1j * z + x, model.conj_poly(1j * z + x))
    model.set_odd_term(ltilde.scale(1j))
    return model


def c_plane_uv() -> ActionModel:
    """The plane model after the shear change of variables; Gaussian weight one."""
    coords = (Coordinate("u", COMPLEX, 1, "base"),
              Coordinate("v", COMPLEX, 1, "fiber"))
    e = BundleSpec((0, 1), (0, 1))
    w = BundleSpec((0, 1), (0, 1))
    model = ActionModel("c-plane-uv", coords, e, w, x_support=2.0)
    alg = model.algebra
    u, ub = alg.coord("u"), alg.coord("ubar")
    v, vb = alg.coord("v"), alg.coord("vbar")
    zero = alg.zero(SYMBOLIC)
    sigma = [[zero, alg.scalar(ub)], [alg.scalar(u), zero]]
    model.set_symbol(sigma)
    sc = [
        [0, 0, vb, ub],
        [0, 0, u, -1 * v],
        [v, ub, 0, 0],
        [u, -1 * vb, 0, 0],
    ]
    rows = [[alg.scalar(p) if isinstance(p, Poly) else alg.scalar(float(p))
             for p in row] for row in sc]
    model.set_odd_term(SuperMatrix(alg, model.bundle_script_e.grading(), rows).scale(1j))
    return model


def zero_op_s1() -> ActionModel:
    """The zero operator on the circle with its tautological-1-form superconnection."""
    coords = (Coordinate("theta", ANGLE, 1, "base"),
              Coordinate("xi", REAL, 0, "fiber"))
    e = BundleSpec((0,), (0,))
    w = BundleSpec((0,), (0,))
    model = ActionModel("zero-op", coords, e, w,
                        volume=("dxi", "dtheta"), x_support=np.pi)
    alg = model.algebra
    zero = alg.zero(SYMBOLIC)
    model.set_symbol([[zero]])
    liouville = alg.scalar(alg.coord("xi")) * alg.gen("dtheta")
    model.set_odd_term(SuperMatrix(alg, model.bundle_script_e.grading(),
                                   [[liouville]]).scale(1j))
    return model


_BUILTINS = {"c-plane": c_plane, "c-plane-uv": c_plane_uv, "zero-op": zero_op_s1}


def builtin_model(name: str) -> ActionModel:
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise KeyError(f"unknown built-in model {name!r}") from None
