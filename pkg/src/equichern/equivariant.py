"""Cartan-model superconnection calculus for circle-action models.

Builds the equivariant curvature i dA - A^2 + mu(theta) - iota_zeta A of a
superconnection with odd term stored as iA, takes its exponential and
grading-signed trace to obtain the Chern form, and divides by the character
of the auxiliary Clifford-model bundle to obtain the transverse Chern form.
Two evaluation routes exist: a pointwise numeric one through the dense
exponential, and a symbolic one that factors the curvature body into a
shared scalar exponent plus constant offsets and expands the rest as a
finite Duhamel sum.  The symbolic route yields polynomial coefficients
times a managed scalar exponential, which is what fiberwise integration
and the closedness residual consume.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Mapping

from .exterior import SYMBOLIC, Form, Poly
from .geometry import ANGLE, COMPLEX, ActionModel, augmented_symbol
from .supermatrix import (
    SuperMatrix,
    UnsupportedShapeError,
    exp_divided_difference,
    super_exp,
)

POLE_GUARD_THETA = 1e-6
POLE_GUARD_W = 1e-8


class PoleGuardError(ValueError):
    """theta too close to a localization pole (2 pi Z) for this operation."""


@dataclass(frozen=True)
class Superconnection:
    """Trivial flat connection plus an odd matrix term (stored multiplied by i)."""

    odd_term: SuperMatrix

    def __post_init__(self):
        nonzero = any(not f.is_zero for row in self.odd_term.entries for f in row)
        if nonzero and self.odd_term.homogeneous_parity() != 1:
            raise UnsupportedShapeError("superconnection odd term must be odd")


def superconnection(model: ActionModel) -> Superconnection:
    """The model's superconnection; falls back to i times the augmented symbol."""
    if model.odd_term is not None:
        return Superconnection(model.odd_term)
    return Superconnection(augmented_symbol(model).scale(1j))


def cartan_field(model: ActionModel, theta: complex) -> dict[str, Poly]:
    """Vector-field components (dual to the generators) paired with the moment.

    Complex weight-w coordinates contribute i w theta c on dc and the
    conjugate on dcbar; angle coordinates rotate at rate w theta.  This is
    the orientation for which the Chern form is equivariantly closed against
    the moment i theta diag(weights).
    """
    comps: dict[str, Poly] = {}
    for c in model.coordinates_meta:
        if c.weight == 0:
            continue
        if c.kind == COMPLEX:
            comps["d" + c.name] = (1j * c.weight * theta) * model.coord_poly(c.name)
            bar = model.conj_pairs[c.name]
            comps["d" + bar] = (-1j * c.weight * theta) * model.coord_poly(bar)
        elif c.kind == ANGLE:
            comps["d" + c.name] = model.algebra.const(c.weight * theta)
    return comps


def moment(model: ActionModel, theta: complex) -> SuperMatrix:
    """Moment of the action: i theta times the diagonal of full-bundle weights."""
    spec = model.bundle_script_e
    if spec is None:
        raise UnsupportedShapeError("model carries no bundle weights")
    alg = model.algebra
    diag = [alg.scalar(1j * theta * w) for w in spec.weights]
    return SuperMatrix.diagonal(alg, spec.grading(), diag)


@dataclass
class EquivariantCurvature:
    """Curvature of the equivariant superconnection at a numeric theta."""

    matrix: SuperMatrix
    theta: complex

    def split_body(self) -> tuple[Poly, tuple[complex, ...], SuperMatrix]:
        """Factor the degree-0 part as shared_poly + constant diagonal offsets.

        Returns (shared polynomial, per-diagonal constant offsets, soul), the
        shape required by the closed-form Duhamel expansion.  Raises when the
        degree-0 part is non-diagonal or the diagonal entries differ by
        non-constants.
        """
        mat = self.matrix
        d = mat.dim
        alg = mat.algebra
        for i in range(d):
            for j in range(d):
                if i != j and not mat.entries[i][j].component(0).is_zero:
                    raise UnsupportedShapeError("degree-0 part is not diagonal")
        diag0 = [mat.entries[i][i].component(0) for i in range(d)]
        polys = [f.terms.get(0, alg.const(0.0)) for f in diag0]
        shared = polys[0].without_constant()
        offsets = []
        for p in polys:
            diff = p - shared
            if not diff.is_constant:
                raise UnsupportedShapeError(
                    "diagonal degree-0 entries differ by non-constant terms")
            offsets.append(diff.constant_value())
        soul_rows = []
        for i in range(d):
            row = []
            for j in range(d):
                f = mat.entries[i][j]
                if i == j:
                    f = f - diag0[i]
                row.append(f)
            soul_rows.append(row)
        soul = SuperMatrix(alg, mat.grading, soul_rows)
        return shared, tuple(offsets), soul


def equivariant_curvature(sc: Superconnection, model: ActionModel,
                          theta: complex) -> EquivariantCurvature:
    """F = dA + A^2 + mu(theta) - iota_zeta A for odd term A (already times i).

    The theta-independent part dA + A^2 and the contraction slope
    iota_{zeta(1)} A (the field is linear in theta) are cached per model.
    """
    a = sc.odd_term
    cache = getattr(model, "_curvature_cache", None)
    if cache is None or cache[0] is not a:
        static = a.d() + (a @ a)
        slope = a.interior(cartan_field(model, 1.0))
        cache = [a, static, slope, None, None]
        model._curvature_cache = cache
    _, static, slope, last_theta, last_f = cache
    if last_theta == theta and last_f is not None:
        return EquivariantCurvature(matrix=last_f, theta=theta)
    f = static + moment(model, theta) - slope.scale(theta)
    cache[3], cache[4] = theta, f
    return EquivariantCurvature(matrix=f, theta=theta)


def bundle_character(weights, parities, theta: complex) -> complex:
    """Sum of parity-signed fiber characters e^{i w theta}."""
    total = 0.0 + 0.0j
    for w, p in zip(weights, parities):
        term = cmath.exp(1j * w * theta)
        total += -term if p else term
    return total


def _near_pole(theta: complex) -> bool:
    k = round(theta.real / (2 * math.pi))
    return abs(theta - 2 * math.pi * k) < POLE_GUARD_THETA


@dataclass
class GaussianForm:
    """A form with polynomial coefficients times a managed scalar exponential."""

    exponent: Poly
    form: Form

    def scale(self, factor) -> "GaussianForm":
        return GaussianForm(self.exponent, self.form.scale(factor))

    def prefactor(self, point: Mapping[str, complex]) -> complex:
        return cmath.exp(self.exponent.evaluate(point))

    def evaluate(self, point: Mapping[str, complex]) -> Form:
        return self.form.evaluate(point).scale(self.prefactor(point))


def symbolic_chern(model: ActionModel, theta: complex,
                   moment_perturbation: tuple[int, complex] | None = None,
                   dd_tol: float = 1e-18) -> GaussianForm:
    """Supertrace of exp(curvature) with the Gaussian body factored exactly.

    The degree-0 body contributes a shared scalar exponential and constant
    diagonal offsets; the positive-degree soul enters through a finite sum
    over closed paths weighted by divided differences of exp at the offsets.
    """
    sc = superconnection(model)
    curv = equivariant_curvature(sc, model, theta)
    if moment_perturbation is not None:
        idx, amount = moment_perturbation
        bump = SuperMatrix.diagonal(
            model.algebra, curv.matrix.grading,
            [model.algebra.scalar(amount if i == idx else 0.0)
             for i in range(curv.matrix.dim)])
        curv = EquivariantCurvature(curv.matrix + bump, theta)
    shared, offsets, soul = curv.split_body()
    alg = model.algebra
    grading = curv.matrix.grading
    d = curv.matrix.dim

    total = alg.zero(SYMBOLIC)
    for i in range(d):
        diag_term = alg.scalar(cmath.exp(offsets[i]))
        total = total + (diag_term if grading.sign(i) > 0 else -diag_term)

    max_depth = len(alg.generators)
    acc = [total]

    def walk(i0: int, j: int, prod: Form, nodes: tuple):
        if len(nodes) > max_depth:
            return
        for nxt in range(d):
            edge = soul.entries[j][nxt]
            if edge.is_zero:
                continue
            p2 = prod.wedge(edge)
            if p2.is_zero:
                continue
            nodes2 = nodes + (offsets[nxt],)
            if nxt == i0:
                term = p2.scale(exp_divided_difference(nodes2, dd_tol))
                acc[0] = acc[0] + (term if grading.sign(i0) > 0 else -term)
            walk(i0, nxt, p2, nodes2)

    one = alg.one(SYMBOLIC)
    for i0 in range(d):
        walk(i0, i0, one, (offsets[i0],))
    return GaussianForm(exponent=shared, form=acc[0])


def chern_form(model: ActionModel, theta: complex, point: Mapping[str, complex],
               tol: float = 1e-12, allow_near_pole: bool = False) -> Form:
    """Pointwise Chern form: supertrace of the dense exponential of the curvature."""
    if _near_pole(theta) and not allow_near_pole:
        raise PoleGuardError(f"theta={theta} within {POLE_GUARD_THETA} of a 2*pi*Z pole")
    sc = superconnection(model)
    curv = equivariant_curvature(sc, model, theta)
    fnum = curv.matrix.evaluate(model.full_point(point))
    return super_exp(fnum, tol).supertrace()


def transverse_chern(model: ActionModel, theta: complex,
                     point: Mapping[str, complex] | None = None,
                     tol: float = 1e-12, allow_near_pole: bool = False):
    """Chern form divided by the Clifford-model bundle character.

    With a point, returns a numeric form through the dense exponential;
    without one, returns the symbolic Gaussian-factored form.
    """
    if model.bundle_w is None:
        chw = 1.0 + 0.0j
    else:
        chw = bundle_character(model.bundle_w.weights, model.bundle_w.parities, theta)
    if abs(chw) < POLE_GUARD_W and not allow_near_pole:
        raise PoleGuardError(
            f"W character {chw} below guard {POLE_GUARD_W}; theta near a pole")
    if point is not None:
        return chern_form(model, theta, point, tol, allow_near_pole).scale(1.0 / chw)
    return symbolic_chern(model, theta).scale(1.0 / chw)


def closedness_residual(model: ActionModel, theta: complex,
                        point: Mapping[str, complex],
                        moment_perturbation: tuple[int, complex] | None = None) -> float:
    """Max coefficient norm of (d - iota_zeta) applied to the Chern form at a point.

    Vanishes for a consistent moment/vector-field pair; a perturbed moment is
    the negative control.
    """
    g = symbolic_chern(model, theta, moment_perturbation=moment_perturbation)
    zeta = cartan_field(model, theta)
    # (d - iota)(e^g w) = e^g (dg ^ w + dw - iota w)
    dg = model.algebra.scalar(g.exponent).d()
    residual = dg.wedge(g.form) + g.form.d() - g.form.interior(zeta)
    pt = model.full_point(point)
    value = residual.evaluate(pt)
    return value.norm_max() * abs(g.prefactor(pt))
