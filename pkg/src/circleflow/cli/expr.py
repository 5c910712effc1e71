"""Parser for nonlinearity expressions f(t, u, p) with p standing for u_x.

Grammar (usual precedence, ``^`` right-associative and binding tighter than
unary minus)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

The parse tree is built directly as sympy objects; sympy then provides the
partial derivatives and the numpy callables.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
import sympy as sp

from ..errors import ExpressionError
from ..stepper import Nonlinearity

t_sym, u_sym, p_sym, T_sym = sp.symbols("t u p T", real=True)
VARIABLES = {"t": t_sym, "u": u_sym, "p": p_sym, "T": T_sym, "pi": sp.pi}
FUNCTIONS = {"sin": sp.sin, "cos": sp.cos, "exp": sp.exp, "tanh": sp.tanh}

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
                    r"|(?P<name>[A-Za-z_]\w*)|(?P<op>\*\*|[-+*/^()]))")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(src: str) -> list[Token]:
    out, i = [], 0
    while i < len(src):
        if src[i].isspace():
            i += 1
            continue
        m = _TOKEN.match(src, i)
        if not m or m.end() == i:
            raise ExpressionError(f"unexpected character {src[i]!r}", i)
        kind = m.lastgroup
        text = m.group(kind)
        start = m.start(kind)
        if text == "**":
            text = "^"
        out.append(Token(kind, text, start))
        i = m.end()
    out.append(Token("end", "", len(src)))
    return out


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = tokenize(src)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str):
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise ExpressionError(f"expected {text!r}, found {found!r}", self.tok.pos)
        return self.advance()

    def parse(self):
        if self.tok.kind == "end":
            raise ExpressionError("empty expression", 0)
        node = self.expr()
        if self.tok.kind != "end":
            raise ExpressionError(f"unexpected {self.tok.text!r}", self.tok.pos)
        return node

    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            rhs = self.term()
            node = node + rhs if op == "+" else node - rhs
        return node

    def term(self):
        node = self.unary()
        while self.tok.text in ("*", "/"):
            op = self.advance().text
            rhs = self.unary()
            node = node * rhs if op == "*" else node / rhs
        return node

    def unary(self):
        if self.tok.text == "-":
            self.advance()
            return -self.unary()
        if self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.text == "^":
            self.advance()
            return base ** self.unary()
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return sp.Rational(tok.text) if re.fullmatch(r"\d+", tok.text) else sp.Float(tok.text, 17)
        if tok.kind == "name":
            self.advance()
            if tok.text in FUNCTIONS:
                if self.tok.text != "(":
                    raise ExpressionError(f"function {tok.text!r} needs an argument", self.tok.pos)
                self.advance()
                arg = self.expr()
                self.expect(")")
                return FUNCTIONS[tok.text](arg)
            if tok.text in VARIABLES:
                if self.tok.text == "(":
                    raise ExpressionError(f"{tok.text!r} is not a function", self.tok.pos)
                return VARIABLES[tok.text]
            raise ExpressionError(f"unknown identifier {tok.text!r}", tok.pos)
        if tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        found = tok.text or "end of input"
        raise ExpressionError(f"unexpected {found!r}", tok.pos)


def parse_expression(src: str) -> sp.Expr:
    return _Parser(src).parse()


def check_periodic_in_t(expr: sp.Expr, period_T: float) -> None:
    """t may only occur inside sin/cos of omega*t + c with omega*T/(2 pi) an integer."""
    e = expr.subs(T_sym, period_T)
    while True:
        found = {}
        for f in e.atoms(sp.sin, sp.cos):
            arg = f.args[0]
            if t_sym not in arg.free_symbols:
                continue
            omega = sp.diff(arg, t_sym)
            if omega.free_symbols:
                continue
            cycles = float(omega) * period_T / (2 * np.pi)
            if abs(cycles - round(cycles)) > 1e-9:
                raise ExpressionError(
                    f"{f} is not {period_T}-periodic in t (frequency gives {cycles:.6g} cycles)")
            found[f] = sp.Dummy()
        if not found:
            break
        e = e.xreplace(found)
    if t_sym in e.free_symbols:
        raise ExpressionError(
            "t may only appear inside sin or cos of (2*pi/T)*integer*t + constant")


def _lambdify(expr):
    fn = sp.lambdify((t_sym, u_sym, p_sym), expr, modules="numpy")

    def call(t, y, z):
        return fn(t, y, z)

    return call


def parse_nonlinearity(src: str, period_T: float = 1.0, name: str = "",
                       dissipativity=None, check: bool = True, seed: int = 7) -> Nonlinearity:
    """Nonlinearity from an expression in t, u, p (p = u_x) and the period T."""
    if not period_T > 0:
        raise ExpressionError("period T must be positive")
    expr = parse_expression(src)
    check_periodic_in_t(expr, period_T)
    expr = expr.subs(T_sym, period_T)
    fy = sp.diff(expr, u_sym)
    fz = sp.diff(expr, p_sym)
    structural = sp.expand(expr.subs(p_sym, -p_sym) - expr) == 0
    f_num, fy_num, fz_num = _lambdify(expr), _lambdify(fy), _lambdify(fz)
    symmetric = bool(structural)
    if symmetric:
        rng = np.random.default_rng(seed)
        t = rng.uniform(0, period_T, 64)
        y = rng.uniform(-3, 3, 64)
        z = rng.uniform(-3, 3, 64)
        a = np.broadcast_to(f_num(t, y, z), t.shape)
        b = np.broadcast_to(f_num(t, y, -z), t.shape)
        symmetric = bool(np.allclose(a, b, rtol=1e-12, atol=1e-12))
    nl = Nonlinearity(f_num, fy_num, fz_num, period_T, symmetric_in_z=symmetric,
                      dissipativity=dissipativity, name=name or src, check=check)
    return nl


def symbolic_partials(src: str, period_T: float = 1.0):
    """(f, df/du, df/dp) as sympy expressions, for reports and tests."""
    expr = parse_expression(src).subs(T_sym, period_T)
    return expr, sp.diff(expr, u_sym), sp.diff(expr, p_sym)
