"""Recursive-descent parser for the while language.

Grammar (ASCII; ``≤ ≥ ≠ ∧ ∨ ¬`` are accepted as aliases)::

    file     = [ "vars" ident { "," ident } ";" ] prog
    prog     = stmt { ";" stmt }
    stmt     = "skip"
             | "wait" "(" term ")"
             | ident ":=" term { "," ident ":=" term }
             | ident "'" "=" term { "," ident "'" "=" term } "&" bound
             | "if" guard "then" block [ "else" block ]
             | "while" guard block
             | block | "(" prog ")"
    block    = "{" prog "}"
    bound    = term | pred           (a constant term is a duration)
    guard    = conj { "\\/" conj }
    conj     = neg { "/\\" neg }
    neg      = "~" neg | "true" | "false" | "(" guard ")" | term relop term
    relop    = "<=" | ">=" | "<" | ">" | "=" | "!="
    term     = prod { ("+" | "-") prod }
    prod     = unary { ("*" | "/") unary }
    unary    = "-" unary | number | ident | "(" term ")"

Terms must be linear. A predicate after ``&`` may only combine ``<=`` and
``>=`` atoms with ``/\\`` and ``\\/``. Variables missing from the ``vars``
header are scope errors; without a header the variables are those used, in
order of first appearance. Derivatives left out of an ODE are zero.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..linear_ode import FALSE, TRUE, And, Atom, Dynamics, Formula, LinTerm, Not, Or, is_closed_predicate
from .syntax import Assign, Choice, PredODE, Program, Seq, Skip, Stmt, TimedODE, While, wait

KEYWORDS = {"vars", "skip", "wait", "if", "then", "else", "while", "true", "false"}
RELOPS = ("<=", ">=", "<", ">", "=", "!=")
_ALIASES = {"≤": "<=", "≥": ">=", "≠": "!=", "∧": "/\\", "∨": "\\/", "¬": "~", "==": "="}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+|\#[^\n]*|//[^\n]*)
  | (?P<nl>\n)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|<=|>=|!=|==|/\\|\\/|[<>=';,(){}&+\-*/~≤≥≠∧∨¬])
    """,
    re.VERBOSE,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int, kind: str = "syntax"):
        super().__init__(f"{line}:{col}: {kind} error: {message}")
        self.message = message
        self.line = line
        self.col = col
        self.kind = kind


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out = []
    line, start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - start + 1, "lexical")
        kind = m.lastgroup
        if kind == "nl":
            line, start = line + 1, m.end()
        elif kind != "ws":
            tok = m.group()
            tok = _ALIASES.get(tok, tok)
            if kind == "ident" and tok in KEYWORDS:
                kind = "kw"
            out.append(Token(kind, tok, line, pos - start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - start + 1))
    return out


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0
        self.names: tuple = ()
        self.index: dict = {}

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, *texts: str) -> bool:
        return self.tok.kind in ("op", "kw") and self.tok.text in texts

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        tok = self.tok
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}, found {self.describe(self.tok)}")
        return self.advance()

    def fail(self, message: str, tok: Optional[Token] = None, kind: str = "syntax"):
        tok = tok or self.tok
        raise ParseError(message, tok.line, tok.col, kind)

    @staticmethod
    def describe(tok: Token) -> str:
        return "end of input" if tok.kind == "eof" else repr(tok.text)

    # -- variables

    def header(self) -> None:
        names: list = []
        if self.at("vars"):
            self.advance()
            while True:
                tok = self.tok
                if tok.kind != "ident":
                    self.fail(f"expected a variable name, found {self.describe(tok)}")
                if tok.text in names:
                    self.fail(f"variable {tok.text!r} declared twice", tok, "scope")
                names.append(self.advance().text)
                if not self.at(","):
                    break
                self.advance()
            self.expect(";")
        else:
            for tok in self.toks:
                if tok.kind == "ident" and tok.text not in names:
                    names.append(tok.text)
        self.names = tuple(names)
        self.index = {n: i for i, n in enumerate(names)}

    def var(self) -> tuple[int, Token]:
        tok = self.tok
        if tok.kind != "ident":
            self.fail(f"expected a variable, found {self.describe(tok)}")
        if tok.text not in self.index:
            self.fail(f"undeclared variable {tok.text!r}", tok, "scope")
        self.advance()
        return self.index[tok.text], tok

    # -- terms

    @property
    def n(self) -> int:
        return len(self.names)

    def term(self) -> LinTerm:
        out = self.prod()
        while self.at("+", "-"):
            op = self.advance().text
            rhs = self.prod()
            out = out + rhs if op == "+" else out - rhs
        return out

    def prod(self) -> LinTerm:
        out = self.unary()
        while self.at("*", "/"):
            op_tok = self.advance()
            rhs = self.unary()
            if op_tok.text == "*":
                if out.is_constant:
                    out = rhs.scale(out.const)
                elif rhs.is_constant:
                    out = out.scale(rhs.const)
                else:
                    self.fail("nonlinear term: product of two variables", op_tok)
            else:
                if not rhs.is_constant:
                    self.fail("nonlinear term: division by a variable", op_tok)
                if rhs.const == 0:
                    self.fail("division by zero", op_tok)
                out = out.scale(1.0 / rhs.const)
        return out

    def unary(self) -> LinTerm:
        tok = self.tok
        if self.at("-"):
            self.advance()
            return -self.unary()
        if tok.kind == "num":
            self.advance()
            return LinTerm.constant(self.n, float(tok.text))
        if tok.kind == "ident":
            i, _ = self.var()
            return LinTerm.var(self.n, i)
        if self.at("("):
            self.advance()
            t = self.term()
            self.expect(")")
            return t
        self.fail(f"expected a term, found {self.describe(tok)}")

    def constant(self, what: str) -> float:
        tok = self.tok
        t = self.term()
        if not t.is_constant:
            self.fail(f"{what} must be a constant", tok)
        if not math.isfinite(t.const) or t.const < 0:
            self.fail(f"{what} must be finite and non-negative", tok)
        return t.const

    # -- guards

    def guard(self) -> Formula:
        out = self.conj()
        while self.at("\\/"):
            self.advance()
            out = Or(out, self.conj())
        return out

    def conj(self) -> Formula:
        out = self.neg()
        while self.at("/\\"):
            self.advance()
            out = And(out, self.neg())
        return out

    def neg(self) -> Formula:
        if self.at("~"):
            self.advance()
            return Not(self.neg())
        if self.at("true"):
            self.advance()
            return TRUE
        if self.at("false"):
            self.advance()
            return FALSE
        if self.at("("):
            # Either a parenthesised guard or a comparison whose left term
            # starts with a parenthesis.
            save = self.i
            try:
                return self.comparison()
            except ParseError:
                self.i = save
            self.advance()
            g = self.guard()
            self.expect(")")
            return g
        return self.comparison()

    def comparison(self) -> Atom:
        lhs = self.term()
        if not self.at(*RELOPS):
            self.fail(f"expected a comparison, found {self.describe(self.tok)}")
        op = self.advance().text
        return Atom(lhs, op, self.term())

    # -- statements

    def prog(self) -> Stmt:
        stmts = [self.stmt()]
        while self.at(";"):
            self.advance()
            stmts.append(self.stmt())
        out = stmts[-1]
        for s in reversed(stmts[:-1]):
            out = Seq(s, out)
        return out

    def block(self) -> Stmt:
        self.expect("{")
        body = self.prog()
        self.expect("}")
        return body

    def stmt(self) -> Stmt:
        tok = self.tok
        if self.at("skip"):
            self.advance()
            return Skip()
        if self.at("wait"):
            self.advance()
            self.expect("(")
            r = self.constant("wait time")
            self.expect(")")
            return wait(self.n, r)
        if self.at("if"):
            self.advance()
            g = self.guard()
            self.expect("then")
            then = self.block()
            orelse = Skip()
            if self.at("else"):
                self.advance()
                orelse = self.block()
            return Choice(g, then, orelse)
        if self.at("while"):
            self.advance()
            g = self.guard()
            return While(g, self.block())
        if self.at("{"):
            return self.block()
        if self.at("("):
            self.advance()
            body = self.prog()
            self.expect(")")
            return body
        if tok.kind == "ident":
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == ":=":
                return self.assign()
            if nxt.kind == "op" and nxt.text == "'":
                return self.ode()
            self.fail(f"expected ':=' or \"'\" after {tok.text!r}", nxt)
        self.fail(f"expected a statement, found {self.describe(tok)}")

    def assign(self) -> Assign:
        updates, seen = [], set()
        while True:
            i, tok = self.var()
            if i in seen:
                self.fail(f"variable {tok.text!r} assigned twice", tok, "scope")
            seen.add(i)
            self.expect(":=")
            updates.append((i, self.term()))
            if not (self.at(",") and self.peek().kind == "ident"):
                break
            self.advance()
        return Assign(tuple(updates))

    def ode(self) -> Stmt:
        n = self.n
        A, c, seen = np.zeros((n, n)), np.zeros(n), set()
        while True:
            i, tok = self.var()
            if i in seen:
                self.fail(f"derivative of {tok.text!r} given twice", tok, "scope")
            seen.add(i)
            self.expect("'")
            self.expect("=")
            rhs = self.term()
            A[i], c[i] = rhs.coeffs, rhs.const
            if not self.at(","):
                break
            self.advance()
        amp = self.expect("&")
        dyn = Dynamics(A, c)
        save = self.i
        bound_tok = self.tok
        if not self.at("true", "false", "~"):
            try:
                t = self.term()
            except ParseError:
                t = None
            if t is not None and not self.at(*RELOPS, "/\\", "\\/"):
                if not t.is_constant:
                    self.fail("a term after '&' must be a constant duration", bound_tok)
                if not math.isfinite(t.const) or t.const < 0:
                    self.fail("duration must be finite and non-negative", bound_tok)
                return TimedODE(dyn, t.const)
            self.i = save
        psi = self.guard()
        if not is_closed_predicate(psi):
            self.fail("a predicate after '&' may only combine <= and >= with /\\ and \\/", amp)
        return PredODE(dyn, psi)


def parse(text: str) -> Program:
    """Parse a program; raises :class:`ParseError` with a line and column."""
    p = _Parser(tokenize(text))
    p.header()
    body = p.prog()
    if p.tok.kind != "eof":
        p.fail(f"unexpected {p.describe(p.tok)}")
    return Program(p.names, body)


def parse_file(path) -> Program:
    return parse(Path(path).read_text(encoding="utf-8"))
