"""Tiny expression language for band coefficients and potentials.

Grammar (usual precedence, ^ binds tightest and associates right):

    expr  := term  (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := '-' unary | power
    power := atom ('^' unary)?
    atom  := NUMBER | 'i' | 'x' | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Numbers may carry a trailing ``i`` (``2i``, ``1.5e-3i``).  Known functions:
sin, cos, sqrt, exp, log, abs, and piecewise(breakpoint, side, low, high)
where side is the bare name ``left`` or ``right``.

Multiplication follows the convention 0 * anything = 0, so expressions like
``x * sin(1/x)`` are total on [0, 1]: at x = 0 the vanishing prefactor wins
and the product evaluates to the limit value 0.
"""

import re

import numpy as np

from .errors import ConfigError, DomainError, ExprParseError
from .symbol import PiecewisePotential

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?i?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)

_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "sqrt": lambda v: np.sqrt(v.astype(complex)),
    "exp": np.exp,
    "log": lambda v: np.log(v.astype(complex)),
    "abs": lambda v: np.abs(v).astype(complex),
}


def _tokenize(text):
    """Yield (kind, value, column) triples; column is 1-based."""
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            # Skip over whitespace-only tails before declaring a bad char.
            rest = text[pos:]
            stripped = rest.lstrip()
            if not stripped:
                break
            col = pos + (len(rest) - len(stripped)) + 1
            raise ExprParseError(f"unexpected character {stripped[0]!r}", col)
        col = m.start(m.lastgroup) + 1
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), col))
        elif m.group("name") is not None:
            tokens.append(("name", m.group("name"), col))
        else:
            tokens.append(("op", m.group("op"), col))
        pos = m.end()
    tokens.append(("eof", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op):
        kind, value, col = self.peek()
        if kind != "op" or value != op:
            raise ExprParseError(f"expected {op!r}", col)
        return self.next()

    def parse(self):
        node = self.expr()
        kind, value, col = self.peek()
        if kind != "eof":
            raise ExprParseError(f"unexpected {value!r}", col)
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.next()
                node = ("bin", value, node, self.term())
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.next()
                node = ("bin", value, node, self.unary())
            else:
                return node

    def unary(self):
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.next()
            return ("neg", self.unary())
        return self.power()

    def power(self):
        node = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.next()
            node = ("bin", "^", node, self.unary())
        return node

    def atom(self):
        kind, value, col = self.next()
        if kind == "num":
            if value.endswith("i"):
                return ("const", complex(0.0, float(value[:-1])))
            return ("const", complex(float(value)))
        if kind == "name":
            if value == "x":
                return ("var",)
            if value == "i":
                return ("const", 1j)
            if value == "piecewise":
                return self.piecewise(col)
            if value in _FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return ("call", value, arg)
            raise ExprParseError(f"unknown name {value!r}", col)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        shown = value if value else "end of input"
        raise ExprParseError(f"expected a value, got {shown}", col)

    def piecewise(self, col):
        self.expect_op("(")
        breakpoint_node = self.expr()
        self.expect_op(",")
        kind, side, side_col = self.next()
        if kind != "name" or side not in ("left", "right"):
            raise ExprParseError("piecewise side must be 'left' or 'right'",
                                 side_col)
        self.expect_op(",")
        low = self.expr()
        self.expect_op(",")
        high = self.expr()
        self.expect_op(")")
        return ("piecewise", breakpoint_node, side, low, high)


def parse_expr(text: str):
    """Parse to an AST tuple; raises ExprParseError with a 1-based column."""
    return _Parser(str(text)).parse()


def _eval(node, x):
    op = node[0]
    if op == "const":
        return np.full(x.shape, node[1])
    if op == "var":
        return x.astype(complex)
    if op == "neg":
        return -_eval(node[1], x)
    if op == "bin":
        a = _eval(node[2], x)
        b = _eval(node[3], x)
        if node[1] == "+":
            return a + b
        if node[1] == "-":
            return a - b
        if node[1] == "*":
            # 0 * anything = 0, so vanishing prefactors beat inf/nan factors.
            out = a * b
            zero = (a == 0) | (b == 0)
            if np.any(zero):
                out = np.where(zero, 0.0, out)
            return out
        if node[1] == "/":
            return a / b
        return a ** b
    if op == "call":
        return _FUNCTIONS[node[1]](_eval(node[2], x))
    # piecewise: both branches are evaluated everywhere, then masked, so any
    # junk a branch produces outside its own segment is discarded here.
    _, c_node, side, low, high = node
    c = _const_value(c_node)
    low_v = _eval(low, x)
    high_v = _eval(high, x)
    if side == "left":
        mask = x.real <= c
    else:
        mask = x.real < c
    return np.where(mask, low_v, high_v)


def _const_value(node) -> float:
    probe = np.array([0.25, 0.625])
    with np.errstate(all="ignore"):
        vals = _eval(node, probe)
    if vals[0] != vals[1]:
        raise ConfigError("piecewise breakpoint must be a constant")
    c = complex(vals[0])
    if c.imag != 0.0 or not np.isfinite(c.real):
        raise ConfigError("piecewise breakpoint must be a finite real number")
    return c.real


def compile_expr(text: str):
    """Compile to a callable of x (scalar or array), returning complex values."""
    node = parse_expr(text)

    def fn(x):
        arr = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            out = _eval(node, arr)
        return complex(out[()]) if np.ndim(x) == 0 else out

    return fn


def _segments(node):
    """Flatten nested piecewise nodes into (leaf nodes, [(breakpoint, side)])."""
    if node[0] != "piecewise":
        return [node], []
    _, c_node, side, low, high = node
    c = _const_value(c_node)
    low_leaves, low_breaks = _segments(low)
    high_leaves, high_breaks = _segments(high)
    return low_leaves + high_leaves, low_breaks + [(c, side)] + high_breaks


def _real_piece(node):
    def fn(x):
        arr = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            out = _eval(node, arr)
        scale = float(np.max(np.abs(out))) if out.size else 0.0
        if float(np.max(np.abs(out.imag), initial=0.0)) > 1e-12 * max(1.0, scale):
            raise DomainError("potential expression must be real on [0, 1]")
        return out.real

    return fn


def parse_potential(text: str, label: str = "") -> PiecewisePotential:
    """Parse a potential expression, lifting piecewise(...) nodes into segments.

    Nested piecewise calls are allowed as long as their breakpoints come out
    strictly increasing when read left to right.
    """
    leaves, breaks = _segments(parse_expr(str(text)))
    try:
        return PiecewisePotential(
            pieces=tuple(_real_piece(leaf) for leaf in leaves),
            breakpoints=tuple(c for c, _ in breaks),
            sides=tuple(side for _, side in breaks),
            label=label or str(text))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
