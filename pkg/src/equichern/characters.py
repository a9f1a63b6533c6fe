"""Truncated formal Laurent series in t = e^{i theta} and localization arithmetic.

Implements the character-ring shadow of localization: windowed Laurent
series with Cauchy products, geometric expansion of 1/(1 - c t^m) in either
direction, the squared A-hat factor of a weight-one circle action, and the
localized-index quotient by the alternating exterior-power character of the
normal bundle.
"""

from __future__ import annotations

import cmath
import io
import csv as _csv
from dataclasses import dataclass
from typing import Iterable, Mapping

DEFAULT_WINDOW = (-64, 64)
POSITIVE = "positive"
NEGATIVE = "negative"


class WindowError(ValueError):
    """Series arithmetic produced an empty or inconsistent window."""


@dataclass(frozen=True)
class CharacterSeries:
    """Laurent coefficients on a finite validity window [n_min, n_max]."""

    coefficients: Mapping[int, complex]
    window: tuple[int, int] = DEFAULT_WINDOW

    def __post_init__(self):
        lo, hi = self.window
        if lo > hi:
            raise WindowError(f"empty window {self.window}")
        clean = {int(n): complex(c) for n, c in self.coefficients.items()
                 if lo <= n <= hi and complex(c) != 0}
        object.__setattr__(self, "coefficients", clean)

    def coeff(self, n: int) -> complex:
        lo, hi = self.window
        if not lo <= n <= hi:
            raise WindowError(f"coefficient {n} outside window {self.window}")
        return self.coefficients.get(n, 0.0 + 0.0j)

    def __add__(self, other: "CharacterSeries") -> "CharacterSeries":
        lo = max(self.window[0], other.window[0])
        hi = min(self.window[1], other.window[1])
        if lo > hi:
            raise WindowError("windows do not overlap")
        out: dict[int, complex] = {}
        for n in range(lo, hi + 1):
            c = self.coefficients.get(n, 0) + other.coefficients.get(n, 0)
            if c != 0:
                out[n] = c
        return CharacterSeries(out, (lo, hi))

    def __neg__(self):
        return CharacterSeries({n: -c for n, c in self.coefficients.items()}, self.window)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, factor: complex) -> "CharacterSeries":
        return CharacterSeries({n: factor * c for n, c in self.coefficients.items()},
                               self.window)

    def __mul__(self, other: "CharacterSeries") -> "CharacterSeries":
        """Cauchy product over the stored supports, on the intersection window.

        Coefficients outside a factor's window are treated as absent from its
        truncation; the result carries the intersection-safe window.
        """
        lo = max(self.window[0], other.window[0])
        hi = min(self.window[1], other.window[1])
        if lo > hi:
            raise WindowError("empty product window")
        out: dict[int, complex] = {}
        for n, c in self.coefficients.items():
            for m, d in other.coefficients.items():
                k = n + m
                if lo <= k <= hi:
                    out[k] = out.get(k, 0) + c * d
        return CharacterSeries(out, (lo, hi))

    def truncate(self, window: tuple[int, int]) -> "CharacterSeries":
        lo = max(window[0], self.window[0])
        hi = min(window[1], self.window[1])
        return CharacterSeries({n: c for n, c in self.coefficients.items()
                                if lo <= n <= hi}, (lo, hi))

    def is_integral(self, tol: float = 1e-9) -> bool:
        """All coefficients within tol of integers (the character-ring check)."""
        return all(abs(c.real - round(c.real)) < tol and abs(c.imag) < tol
                   for c in self.coefficients.values())

    def __eq__(self, other):
        if not isinstance(other, CharacterSeries):
            return NotImplemented
        return self.window == other.window and self.coefficients == other.coefficients

    def __repr__(self):
        terms = [f"({c})t^{n}" for n, c in sorted(self.coefficients.items())[:8]]
        more = "..." if len(self.coefficients) > 8 else ""
        return f"CharacterSeries({' + '.join(terms)}{more}, window={self.window})"


def constant_series(value: complex, window=DEFAULT_WINDOW) -> CharacterSeries:
    return CharacterSeries({0: value}, window)


def monomial(n: int, value: complex = 1.0, window=DEFAULT_WINDOW) -> CharacterSeries:
    return CharacterSeries({n: value}, window)


def series_arith(a: CharacterSeries, b: CharacterSeries, op: str) -> CharacterSeries:
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


def geometric_expand(c: complex, m: int, direction: str,
                     window=DEFAULT_WINDOW) -> CharacterSeries:
    """Expansion of 1/(1 - c t^m) in the requested power direction.

    Positive direction: sum_k c^k t^{km}.  Negative direction uses
    1/(1 - c t^m) = -c^{-1} t^{-m} / (1 - c^{-1} t^{-m}).
    """
    if m == 0:
        raise ValueError("weight m must be nonzero")
    lo, hi = window
    out: dict[int, complex] = {}
    if direction == POSITIVE:
        k = 0
        while True:
            n = k * m
            if (m > 0 and n > hi) or (m < 0 and n < lo):
                break
            if lo <= n <= hi:
                out[n] = out.get(n, 0) + c**k
            k += 1
    elif direction == NEGATIVE:
        cinv = 1.0 / c
        k = 1
        while True:
            n = -k * m
            if (m > 0 and n < lo) or (m < 0 and n > hi):
                break
            if lo <= n <= hi:
                out[n] = out.get(n, 0) - cinv**k
            k += 1
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return CharacterSeries(out, window)


def ahat_squared(theta: complex) -> complex:
    """(i theta)^2 e^{i theta} / (1 - e^{i theta})^2, the squared A-hat factor."""
    e = cmath.exp(1j * theta)
    denom = (1.0 - e) ** 2
    if abs(denom) < 1e-30:
        raise ZeroDivisionError(f"A-hat squared pole at theta={theta}")
    return (1j * theta) ** 2 * e / denom


def ahat_squared_det_form(theta: complex) -> complex:
    """The same factor via the determinant shape ((x/2)/sinh(x/2))^2 at x = i theta."""
    x = 1j * theta / 2.0
    s = cmath.sinh(x)
    if abs(s) < 1e-30:
        raise ZeroDivisionError(f"A-hat squared pole at theta={theta}")
    return (x / s) ** 2


@dataclass(frozen=True)
class PrefactoredSeries:
    """A character series carrying a separate (i theta)^k rational prefactor."""

    series: CharacterSeries
    theta_power: int


def ahat_squared_series(window=DEFAULT_WINDOW) -> PrefactoredSeries:
    """e^{i theta}/(1-e^{i theta})^2 as a series, with the (i theta)^2 flagged apart.

    The rational prefactor cancels against the Chern form's top-degree
    1/(i theta)^2 during index assembly and is therefore not expanded.
    """
    geo = geometric_expand(1.0, 1, POSITIVE, window)
    series = monomial(1, 1.0, window) * geo * geo
    return PrefactoredSeries(series=series, theta_power=2)


def localized_index(numerator: CharacterSeries, normal_weights: Iterable[int],
                    direction: str) -> CharacterSeries:
    """Numerator divided by prod_j (1 - t^{w_j}), expanded in the given direction.

    This is the quotient by the alternating sum of exterior powers of the
    normal bundle, the localization denominator at an isolated fixed set.
    """
    out = numerator
    for w in normal_weights:
        if w == 0:
            raise ValueError("normal weights must be nonzero")
        out = out * geometric_expand(1.0, w, direction, numerator.window)
    return out


def integrality_report(series: CharacterSeries, tol: float = 1e-9) -> dict:
    """Coefficient integrality check for series claimed to lie in R(T)_loc."""
    bad = {n: c for n, c in series.coefficients.items()
           if abs(c.real - round(c.real)) > tol or abs(c.imag) > tol}
    return {"integral": not bad, "tolerance": tol,
            "violations": {str(n): [c.real, c.imag] for n, c in sorted(bad.items())}}


def series_to_csv(series: CharacterSeries) -> str:
    """CSV emission with header n, re, im over the full window."""
    buf = io.StringIO()
    writer = _csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "re", "im"])
    lo, hi = series.window
    for n in range(lo, hi + 1):
        c = series.coefficients.get(n, 0.0 + 0.0j)
        writer.writerow([n, repr(c.real), repr(c.imag)])
    return buf.getvalue()


def series_from_csv(text: str) -> CharacterSeries:
    reader = _csv.reader(io.StringIO(text))
    header = next(reader)
    if [h.strip() for h in header] != ["n", "re", "im"]:
        raise ValueError("expected header n, re, im")
    coeffs = {}
    ns = []
    for row in reader:
        if not row:
            continue
        n = int(row[0])
        ns.append(n)
        coeffs[n] = float(row[1]) + 1j * float(row[2])
    if not ns:
        raise ValueError("empty series file")
    return CharacterSeries(coeffs, (min(ns), max(ns)))
