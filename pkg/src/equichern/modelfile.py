"""Structured-text model files: coordinates, bundles, symbol matrix, options.

The format is line-based with bracketed sections; symbol entries are
polynomial strings over the declared coordinates (complex literals, names,
+ - * ^, parentheses, and conj(name) for the conjugate symbol).  No code is
executed; parse errors carry line and column.

Example::

    model c-plane
    [coordinates]
    z  complex weight=1 role=base
    xi complex weight=1 role=fiber
    [bundle.E]
    summand weight=0 parity=even
    summand weight=1 parity=odd
    [bundle.W]
    summand weight=0 parity=even
    summand weight=1 parity=odd
    [symbol]
    0, conj(z) - i*conj(xi)
    z + i*xi, 0
    [options]
    x_support = 2.0
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

from .exterior import Poly
from .geometry import ActionModel, BundleSpec, Coordinate


class ModelParseError(ValueError):
    """Syntax or semantic error in a model file, with source location."""

    def __init__(self, message: str, line: int, col: int = 0):
        super().__init__(f"line {line}, col {col}: {message}")
        self.message = message
        self.line = line
        self.col = col


# -- polynomial expressions -------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<num>\d+\.\d*|\.\d+|\d+)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[+\-*^(),])
  | (?P<ws>\s+)
""", re.VERBOSE)


@dataclass
class _Token:
    kind: str
    text: str
    col: int


def _tokenize(text: str, line: int) -> list[_Token]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ModelParseError(f"unexpected character {text[pos]!r}", line, pos + 1)
        if m.lastgroup != "ws":
            out.append(_Token(m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    out.append(_Token("end", "", len(text) + 1))
    return out


class _PolyParser:
    """Recursive-descent parser producing a sparse polynomial."""

    def __init__(self, tokens: list[_Token], model: ActionModel, line: int):
        self.tokens = tokens
        self.model = model
        self.line = line
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def fail(self, msg: str):
        raise ModelParseError(msg, self.line, self.peek().col)

    def parse(self) -> Poly:
        p = self.expr()
        if self.peek().kind != "end":
            self.fail(f"unexpected {self.peek().text!r}")
        return p

    def expr(self) -> Poly:
        sign = 1.0
        while self.peek().text in ("+", "-"):
            if self.next().text == "-":
                sign = -sign
        p = self.term() * sign
        while self.peek().text in ("+", "-"):
            op = self.next().text
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self) -> Poly:
        p = self.factor()
        while self.peek().text == "*":
            self.next()
            p = p * self.factor()
        return p

    def factor(self) -> Poly:
        p = self.atom()
        if self.peek().text == "^":
            self.next()
            t = self.next()
            if t.kind != "num" or "." in t.text:
                raise ModelParseError("exponent must be a nonnegative integer",
                                      self.line, t.col)
            p = p ** int(t.text)
        return p

    def atom(self) -> Poly:
        t = self.next()
        alg = self.model.algebra
        if t.text == "-":
            return -self.atom()
        if t.text == "(":
            p = self.expr()
            closing = self.next()
            if closing.text != ")":
                raise ModelParseError("expected ')'", self.line, closing.col)
            return p
        if t.kind == "num":
            return alg.const(float(t.text))
        if t.kind == "name":
            if t.text == "i":
                return alg.const(1j)
            if t.text == "conj":
                lp = self.next()
                if lp.text != "(":
                    raise ModelParseError("expected '(' after conj", self.line, lp.col)
                name = self.next()
                if name.kind != "name":
                    raise ModelParseError("expected coordinate name in conj()",
                                          self.line, name.col)
                rp = self.next()
                if rp.text != ")":
                    raise ModelParseError("expected ')'", self.line, rp.col)
                bar = self.model.conj_pairs.get(name.text)
                if bar is None:
                    raise ModelParseError(
                        f"coordinate {name.text!r} has no conjugate", self.line, name.col)
                return alg.coord(bar)
            if t.text in alg.coord_index:
                return alg.coord(t.text)
            raise ModelParseError(f"unknown coordinate {t.text!r}", self.line, t.col)
        raise ModelParseError(f"unexpected {t.text!r}", self.line, t.col)


def parse_polynomial(text: str, model: ActionModel, line: int = 1) -> Poly:
    return _PolyParser(_tokenize(text, line), model, line).parse()


# -- model files --------------------------------------------------------------------

_KV_RE = re.compile(r"(\w+)\s*=\s*([^\s]+)")


def _parse_kv(parts: Sequence[str], line: int) -> dict[str, str]:
    out = {}
    for part in parts:
        m = _KV_RE.fullmatch(part)
        if not m:
            raise ModelParseError(f"expected key=value, got {part!r}", line)
        out[m.group(1)] = m.group(2)
    return out


def parse_model_text(text: str, source: str = "<model>") -> ActionModel:
    """Parse a model document into an ActionModel; errors carry line/column."""
    name = None
    coords: list[Coordinate] = []
    bundles: dict[str, list[tuple[int, int]]] = {}
    symbol_lines: list[tuple[int, str]] = []
    options: dict[str, str] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("model "):
            name = stripped[len("model "):].strip()
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip().lower()
            if section.startswith("bundle."):
                bundles.setdefault(section.split(".", 1)[1], [])
            continue
        if section == "coordinates":
            parts = stripped.split()
            if len(parts) < 2:
                raise ModelParseError("expected: name kind [weight=..] [role=..]",
                                      lineno)
            kv = _parse_kv(parts[2:], lineno)
            try:
                coords.append(Coordinate(parts[0], parts[1],
                                         int(kv.get("weight", "0")),
                                         kv.get("role", "base")))
            except ValueError as exc:
                raise ModelParseError(str(exc), lineno) from None
        elif section is not None and section.startswith("bundle."):
            parts = stripped.split()
            if parts[0] != "summand":
                raise ModelParseError("expected 'summand weight=.. parity=..'", lineno)
            kv = _parse_kv(parts[1:], lineno)
            parity = {"even": 0, "odd": 1}.get(kv.get("parity", "even"))
            if parity is None:
                raise ModelParseError(f"bad parity {kv.get('parity')!r}", lineno)
            bundles[section.split(".", 1)[1]].append((int(kv.get("weight", "0")), parity))
        elif section == "symbol":
            symbol_lines.append((lineno, stripped))
        elif section == "options":
            kv = _parse_kv([stripped.replace(" ", "")], lineno)
            options.update(kv)
        else:
            raise ModelParseError(f"content outside a known section: {stripped!r}",
                                  lineno)
    if name is None:
        raise ModelParseError("missing 'model <name>' header", 1)
    if not coords:
        raise ModelParseError("no coordinates declared", 1)
    if "e" not in bundles or not bundles["e"]:
        raise ModelParseError("missing [bundle.E] section", 1)

    def spec_of(key: str) -> BundleSpec | None:
        if key not in bundles or not bundles[key]:
            return None
        ws, ps = zip(*bundles[key])
        return BundleSpec(tuple(ws), tuple(ps))

    model = ActionModel(name, coords, spec_of("e"), spec_of("w"),
                        x_support=float(options.get("x_support", "2.0")))

    if symbol_lines:
        dim = model.bundle_e.rank
        if len(symbol_lines) != dim:
            raise ModelParseError(
                f"symbol must have {dim} rows, found {len(symbol_lines)}",
                symbol_lines[0][0])
        rows = []
        for r, (lineno, content) in enumerate(symbol_lines):
            cells = content.split(",")
            if len(cells) != dim:
                raise ModelParseError(
                    f"symbol row {r + 1} must have {dim} comma-separated entries",
                    lineno)
            row = []
            for c, cell in enumerate(cells):
                try:
                    poly = parse_polynomial(cell.strip(), model, lineno)
                except ModelParseError as exc:
                    raise ModelParseError(
                        f"symbol entry ({r + 1},{c + 1}): {exc.message}",
                        lineno, exc.col) from None
                row.append(model.algebra.scalar(poly))
            rows.append(row)
        try:
            model.set_symbol(rows)
        except ValueError as exc:
            raise ModelParseError(str(exc), symbol_lines[0][0]) from None
    return model


def parse_model_file(path) -> ActionModel:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model_text(fh.read(), source=str(path))


def builtin_model_text(name: str) -> str:
    """Text of a model file shipped with the package."""
    fname = name.replace("-", "_") + ".model"
    return resources.files("equichern").joinpath("models", fname).read_text()
