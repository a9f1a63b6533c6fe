"""Z2-graded square matrices with exterior-form entries.

Provides the graded product (entrywise wedge), the grading-signed
supertrace, and two independent matrix exponentials: a scaling-and-squaring
truncated Taylor sum on a dense component array, and a Duhamel expansion in
divided differences of the diagonal degree-0 part.  The Duhamel route is a
finite sum (the soul terminates by form degree) and serves as the oracle for
the Taylor route.  Matrix grading is metadata consumed only by the
supertrace; products carry no Koszul signs beyond those of the wedge.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .exterior import (
    NUMERIC,
    SYMBOLIC,
    AlgebraMismatchError,
    BackendError,
    ExteriorAlgebra,
    Form,
)

EVEN = 0
ODD = 1


class ShapeError(ValueError):
    """Dimension or grading mismatch between graded matrices."""


class UnsupportedShapeError(ValueError):
    """Matrix shape outside what an algorithm supports (e.g. non-diagonal body)."""


class ConvergenceError(RuntimeError):
    """A truncated series failed to meet its tolerance."""


@dataclass(frozen=True)
class Grading:
    """Parity per row/column, encoding the even/odd bundle splitting."""

    parities: tuple[int, ...]

    def __post_init__(self):
        if any(p not in (EVEN, ODD) for p in self.parities):
            raise ShapeError("parities must be 0 (even) or 1 (odd)")

    @classmethod
    def from_string(cls, signs: str) -> "Grading":
        table = {"+": EVEN, "-": ODD}
        return cls(tuple(table[ch] for ch in signs))

    @property
    def dim(self) -> int:
        return len(self.parities)

    def sign(self, i: int) -> int:
        return -1 if self.parities[i] else 1


class SuperMatrix:
    """Square matrix of forms over one exterior algebra, with a grading."""

    __slots__ = ("algebra", "grading", "entries")

    def __init__(self, algebra: ExteriorAlgebra, grading: Grading, entries):
        rows = []
        for row in entries:
            cells = []
            for x in row:
                if isinstance(x, Form):
                    if x.algebra is not algebra:
                        raise AlgebraMismatchError("entry from a different algebra")
                    cells.append(x)
                else:
                    cells.append(algebra.scalar(x, SYMBOLIC))
            rows.append(tuple(cells))
        self.entries = tuple(rows)
        dim = len(self.entries)
        if any(len(r) != dim for r in self.entries):
            raise ShapeError("matrix must be square")
        if grading.dim != dim:
            raise ShapeError("grading length must equal matrix dimension")
        backends = {f.backend for row in self.entries for f in row}
        if len(backends) > 1:
            raise AlgebraMismatchError("mixed entry backends")
        self.algebra = algebra
        self.grading = grading

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, algebra, grading, backend=SYMBOLIC):
        z = algebra.zero(backend)
        d = grading.dim
        return cls(algebra, grading, [[z] * d for _ in range(d)])

    @classmethod
    def identity(cls, algebra, grading, backend=SYMBOLIC):
        d = grading.dim
        z = algebra.zero(backend)
        one = algebra.one(backend)
        return cls(algebra, grading,
                   [[one if i == j else z for j in range(d)] for i in range(d)])

    @classmethod
    def diagonal(cls, algebra, grading, diag, backend=SYMBOLIC):
        d = grading.dim
        z = algebra.zero(backend)
        cells = [[z] * d for _ in range(d)]
        for i, x in enumerate(diag):
            cells[i][i] = x if isinstance(x, Form) else algebra.scalar(x, backend)
        return cls(algebra, grading, cells)

    # -- basic properties -----------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.entries)

    @property
    def backend(self) -> str:
        for row in self.entries:
            for f in row:
                return f.backend
        return SYMBOLIC

    def _check(self, other: "SuperMatrix"):
        if self.algebra is not other.algebra:
            raise AlgebraMismatchError("matrices over different algebras")
        if self.dim != other.dim or self.grading != other.grading:
            raise ShapeError("dimension or grading mismatch")

    # -- arithmetic --------------------------------------------------------------

    def __add__(self, other: "SuperMatrix") -> "SuperMatrix":
        self._check(other)
        return SuperMatrix(self.algebra, self.grading,
                           [[a + b for a, b in zip(r1, r2)]
                            for r1, r2 in zip(self.entries, other.entries)])

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return SuperMatrix(self.algebra, self.grading,
                           [[-f for f in row] for row in self.entries])

    def scale(self, factor) -> "SuperMatrix":
        return SuperMatrix(self.algebra, self.grading,
                           [[f.scale(factor) for f in row] for row in self.entries])

    def __matmul__(self, other: "SuperMatrix") -> "SuperMatrix":
        """Matrix product; entry products are wedge products."""
        self._check(other)
        d = self.dim
        z = self.algebra.zero(self.backend)
        out = []
        for i in range(d):
            row = []
            for k in range(d):
                acc = z
                for j in range(d):
                    a = self.entries[i][j]
                    b = other.entries[j][k]
                    if a.is_zero or b.is_zero:
                        continue
                    acc = acc + a.wedge(b)
                row.append(acc)
            out.append(row)
        return SuperMatrix(self.algebra, self.grading, out)

    def map_entries(self, fn: Callable[[Form], Form]) -> "SuperMatrix":
        return SuperMatrix(self.algebra, self.grading,
                           [[fn(f) for f in row] for row in self.entries])

    def d(self) -> "SuperMatrix":
        return self.map_entries(lambda f: f.d())

    def interior(self, vector: Mapping[str, object]) -> "SuperMatrix":
        return self.map_entries(lambda f: f.interior(vector))

    def evaluate(self, point: Mapping[str, complex]) -> "SuperMatrix":
        return self.map_entries(lambda f: f.evaluate(point))

    # -- grading-aware pieces -------------------------------------------------

    def supertrace(self) -> Form:
        """Grading-signed trace; vanishes on graded commutators."""
        acc = self.algebra.zero(self.backend)
        for i in range(self.dim):
            t = self.entries[i][i]
            acc = acc + (t if self.grading.sign(i) > 0 else -t)
        return acc

    def homogeneous_parity(self) -> int | None:
        """Total parity (block parity + form degree) if homogeneous, else None."""
        seen = set()
        for i, row in enumerate(self.entries):
            for j, f in enumerate(row):
                for mask in f.terms:
                    seen.add((self.grading.parities[i] + self.grading.parities[j]
                              + mask.bit_count()) % 2)
        if len(seen) > 1:
            return None
        return seen.pop() if seen else EVEN

    def norm_max(self) -> float:
        return max((f.norm_max() for row in self.entries for f in row), default=0.0)

    def similarity(self, g: np.ndarray) -> "SuperMatrix":
        """Conjugate by a constant scalar matrix: g · self · g^{-1}."""
        ginv = np.linalg.inv(g)
        d = self.dim
        z = self.algebra.zero(self.backend)
        out = [[z] * d for _ in range(d)]
        for i in range(d):
            for l in range(d):
                acc = z
                for j in range(d):
                    for k in range(d):
                        c = g[i, j] * ginv[k, l]
                        if c == 0 or self.entries[j][k].is_zero:
                            continue
                        acc = acc + self.entries[j][k].scale(c)
                out[i][l] = acc
        return SuperMatrix(self.algebra, self.grading, out)

    # -- dense component array (numeric backend) --------------------------------

    def to_array(self) -> np.ndarray:
        if self.backend != NUMERIC:
            raise BackendError("component arrays require the numeric backend")
        d = self.dim
        out = np.zeros((d, d, self.algebra.n_components), dtype=np.complex128)
        for i, row in enumerate(self.entries):
            for j, f in enumerate(row):
                for mask, c in f.terms.items():
                    out[i, j, mask] = c
        return out

    @classmethod
    def from_array(cls, algebra, grading, arr: np.ndarray, tol: float = 0.0) -> "SuperMatrix":
        d = grading.dim
        rows = []
        for i in range(d):
            row = []
            for j in range(d):
                terms = {m: arr[i, j, m] for m in range(arr.shape[2])
                         if abs(arr[i, j, m]) > tol}
                row.append(Form(algebra, NUMERIC, terms))
            rows.append(row)
        return cls(algebra, grading, rows)

    def isclose(self, other: "SuperMatrix", tol: float = 1e-12) -> bool:
        self._check(other)
        return all(a.isclose(b, tol) for r1, r2 in zip(self.entries, other.entries)
                   for a, b in zip(r1, r2))

    def __repr__(self):
        return f"SuperMatrix(dim={self.dim}, parities={self.grading.parities})"


def smat_mul(a: SuperMatrix, b: SuperMatrix) -> SuperMatrix:
    return a @ b


def supertrace(a: SuperMatrix) -> Form:
    return a.supertrace()


def graded_commutator(a: SuperMatrix, b: SuperMatrix) -> SuperMatrix:
    """[a, b] = ab - (-1)^{|a||b|} ba for totally homogeneous a, b."""
    pa, pb = a.homogeneous_parity(), b.homogeneous_parity()
    if pa is None or pb is None:
        raise UnsupportedShapeError("graded commutator requires homogeneous operands")
    ba = b @ a
    return (a @ b) - (ba if (pa * pb) % 2 == 0 else -ba)


# -- dense-array wedge kernel ----------------------------------------------------


def _array_matmul(A: np.ndarray, B: np.ndarray, table) -> np.ndarray:
    ai, bi, sg, starts = table
    ap = np.ascontiguousarray((A[:, :, ai] * sg).transpose(2, 0, 1))
    bp = np.ascontiguousarray(B[:, :, bi].transpose(2, 0, 1))
    prod = ap @ bp
    return np.add.reduceat(prod, starts, axis=0).transpose(1, 2, 0)


def _array_norm(A: np.ndarray) -> float:
    # max row sum of coefficient l1-norms: submultiplicative for the wedge kernel
    return float(np.abs(A).sum(axis=2).sum(axis=1).max(initial=0.0))


def super_exp(a: SuperMatrix, tol: float = 1e-12) -> SuperMatrix:
    """Matrix exponential by scaling-and-squaring with a truncated Taylor sum.

    The Grassmann soul terminates exactly; the scaling controls the
    degree-0 body.  Terms are added until the next term's max coefficient
    norm drops below ``tol`` times the accumulated norm.
    """
    if a.backend != NUMERIC:
        raise BackendError("super_exp requires the numeric backend")
    if tol <= 0:
        raise ValueError("tol must be positive")
    table = a.algebra.pair_table()
    A = a.to_array()
    norm = _array_norm(A)
    s = 0 if norm <= 0.5 else max(0, math.ceil(math.log2(norm / 0.5)))
    As = A / (2.0**s)
    d = a.dim
    eye = np.zeros_like(A)
    eye[np.arange(d), np.arange(d), 0] = 1.0
    acc = eye.copy()
    term = eye.copy()
    for k in range(1, 120):
        term = _array_matmul(term, As, table) / k
        acc += term
        if np.abs(term).max() < tol * max(np.abs(acc).max(), 1.0):
            break
    else:
        raise ConvergenceError("Taylor series did not converge")
    for _ in range(s):
        acc = _array_matmul(acc, acc, table)
    return SuperMatrix.from_array(a.algebra, a.grading, acc)


# -- divided differences of exp ------------------------------------------------


def exp_divided_difference(nodes: Sequence[complex], tol: float = 1e-18) -> complex:
    """Divided difference of exp over the given nodes, confluent-safe.

    Well-separated node pairs use the classical quotient; otherwise (the
    confluence threshold |a-b| < 1e-8, and any higher order) a mean-shifted
    series in complete homogeneous symmetric polynomials is used, which
    reduces to the derivative formula at exact confluence.
    """
    xs = [complex(x) for x in nodes]
    k = len(xs) - 1
    if k < 0:
        raise ValueError("need at least one node")
    if k == 0:
        return cmath.exp(xs[0])
    if k == 1:
        scale = max(1.0, abs(xs[0]), abs(xs[1]))
        if abs(xs[0] - xs[1]) >= 1e-8 * scale:
            return (cmath.exp(xs[0]) - cmath.exp(xs[1])) / (xs[0] - xs[1])
    shift = sum(xs) / (k + 1)
    ds = [x - shift for x in xs]
    # sum_m h_m(ds) / (m+k)!  with h_m complete homogeneous symmetric
    prev = [1.0 + 0.0j] * (k + 1)
    coeff = 1.0 / math.factorial(k)
    total = coeff
    small = 0
    for m in range(1, 400):
        cur = [prev[0] * ds[0]]
        for j in range(1, k + 1):
            cur.append(cur[j - 1] + ds[j] * prev[j])
        coeff /= m + k
        term = cur[k] * coeff
        total += term
        prev = cur
        if abs(term) < tol * max(1.0, abs(total)):
            small += 1
            if small >= 3:
                break
        else:
            small = 0
    else:
        raise ConvergenceError("divided-difference series did not converge")
    return cmath.exp(shift) * total


def super_exp_duhamel(a: SuperMatrix, degree0_part: SuperMatrix | None = None,
                      tol: float = 1e-18) -> SuperMatrix:
    """Matrix exponential via the Duhamel expansion around a diagonal body.

    exp(body + soul) is the sum over products of soul entries weighted by
    simplex integrals of body exponentials, which reduce to divided
    differences of exp at the diagonal entries.  The sum is finite because
    each soul factor raises the form degree.
    """
    if a.backend != NUMERIC:
        raise BackendError("super_exp_duhamel requires the numeric backend")
    d = a.dim
    z = a.algebra.zero(NUMERIC)
    if degree0_part is None:
        degree0_part = SuperMatrix(
            a.algebra, a.grading,
            [[a.entries[i][j].component(0) if i == j else z for j in range(d)]
             for i in range(d)])
    for i in range(d):
        for j in range(d):
            body_ij = degree0_part.entries[i][j]
            if i != j and not body_ij.is_zero:
                raise UnsupportedShapeError("Duhamel expansion needs a diagonal body")
            if body_ij.max_degree > 0:
                raise UnsupportedShapeError("body must be purely degree 0")
    beta = [degree0_part.entries[i][i].terms.get(0, 0.0 + 0.0j) for i in range(d)]
    soul = a - degree0_part
    for i in range(d):
        for j in range(d):
            if not soul.entries[i][j].component(0).is_zero:
                raise UnsupportedShapeError(
                    "degree-0 content outside the diagonal body")

    out = [[z for _ in range(d)] for _ in range(d)]
    for i in range(d):
        out[i][i] = a.algebra.scalar(cmath.exp(beta[i]), NUMERIC)

    max_depth = len(a.algebra.generators)

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
            nodes2 = nodes + (beta[nxt],)
            out[i0][nxt] = out[i0][nxt] + p2.scale(
                exp_divided_difference(nodes2, tol))
            walk(i0, nxt, p2, nodes2)

    one = a.algebra.one(NUMERIC)
    for i0 in range(d):
        walk(i0, i0, one, (beta[i0],))
    return SuperMatrix(a.algebra, a.grading, out)
