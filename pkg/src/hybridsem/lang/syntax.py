"""Abstract syntax of the while language over a fixed vector of real variables.

Terms and guards are already resolved to :mod:`hybridsem.linear_ode` objects,
so every node knows its variable count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from ..linear_ode import And, Atom, Dynamics, Formula, LinTerm, Not, Or


@dataclass(frozen=True)
class Assign:
    """Simultaneous update ``x_i := t_i`` for each ``(i, t_i)`` in ``updates``."""

    updates: tuple


@dataclass(frozen=True)
class TimedODE:
    dyn: Dynamics
    duration: float


@dataclass(frozen=True)
class PredODE:
    """Evolve along ``dyn`` until ``psi`` first holds."""

    dyn: Dynamics
    psi: Formula


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Seq:
    first: "Stmt"
    second: "Stmt"


@dataclass(frozen=True)
class Choice:
    guard: Formula
    then: "Stmt"
    orelse: "Stmt"


@dataclass(frozen=True)
class While:
    guard: Formula
    body: "Stmt"


Stmt = Union[Assign, TimedODE, PredODE, Skip, Seq, Choice, While]


@dataclass(frozen=True)
class Program:
    variables: tuple
    body: Stmt

    @property
    def dim(self) -> int:
        return len(self.variables)


def seq(*stmts: Stmt) -> Stmt:
    """Right-nested sequence; the empty sequence is ``Skip``."""
    if not stmts:
        return Skip()
    out = stmts[-1]
    for s in reversed(stmts[:-1]):
        out = Seq(s, out)
    return out


def wait(n: int, r: float) -> TimedODE:
    """Halt for ``r`` time units: all derivatives zero."""
    return TimedODE(Dynamics(np.zeros((n, n)), np.zeros(n)), float(r))


def is_instantaneous(s: Stmt) -> bool:
    """Whether ``s`` takes zero time from every state."""
    if isinstance(s, (Assign, Skip)):
        return True
    if isinstance(s, TimedODE):
        return s.duration == 0
    if isinstance(s, Seq):
        return is_instantaneous(s.first) and is_instantaneous(s.second)
    if isinstance(s, Choice):
        return is_instantaneous(s.then) and is_instantaneous(s.orelse)
    return False


def is_step_fragment(s: Stmt) -> bool:
    """Whether ``s`` only uses assignments, waits, choices and loops, so its
    trajectories are piecewise constant."""
    if isinstance(s, (Assign, Skip)):
        return True
    if isinstance(s, TimedODE):
        return not s.dyn.A.any() and not s.dyn.c.any()
    if isinstance(s, Seq):
        return is_step_fragment(s.first) and is_step_fragment(s.second)
    if isinstance(s, Choice):
        return is_step_fragment(s.then) and is_step_fragment(s.orelse)
    if isinstance(s, While):
        return is_step_fragment(s.body)
    return False


def render_term(t: LinTerm, names: tuple) -> str:
    parts = []
    for c, name in zip(t.coeffs, names):
        if c == 0:
            continue
        mag = abs(c)
        body = name if mag == 1 else f"{_num(mag)} * {name}"
        parts.append(("- " if c < 0 else "+ ") + body)
    if t.const or not parts:
        parts.append(("- " if t.const < 0 else "+ ") + _num(abs(t.const)))
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else "-" + text[2:]


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() and abs(v) < 1e15 else repr(float(v))


def render_formula(g: Formula, names: tuple) -> str:
    if isinstance(g, Atom):
        return f"{render_term(g.lhs, names)} {g.op} {render_term(g.rhs, names)}"
    if isinstance(g, And):
        return f"({render_formula(g.left, names)} /\\ {render_formula(g.right, names)})"
    if isinstance(g, Or):
        return f"({render_formula(g.left, names)} \\/ {render_formula(g.right, names)})"
    if isinstance(g, Not):
        return f"~({render_formula(g.arg, names)})"
    return "true" if g.value else "false"


def _render_ode(dyn: Dynamics, names: tuple) -> str:
    eqs = [f"{name}' = {render_term(LinTerm(tuple(dyn.A[i]), float(dyn.c[i])), names)}" for i, name in enumerate(names)]
    return ", ".join(eqs)


def render_stmt(s: Stmt, names: tuple) -> str:
    """Concrete syntax that parses back to ``s``."""
    if isinstance(s, Assign):
        return ", ".join(f"{names[i]} := {render_term(t, names)}" for i, t in s.updates)
    if isinstance(s, TimedODE):
        return f"({_render_ode(s.dyn, names)} & {_num(s.duration)})"
    if isinstance(s, PredODE):
        return f"({_render_ode(s.dyn, names)} & {render_formula(s.psi, names)})"
    if isinstance(s, Skip):
        return "skip"
    if isinstance(s, Seq):
        first = render_stmt(s.first, names)
        if isinstance(s.first, Seq):
            first = "{" + first + "}"
        return f"{first} ; {render_stmt(s.second, names)}"
    if isinstance(s, Choice):
        return f"if {render_formula(s.guard, names)} then {{{render_stmt(s.then, names)}}} else {{{render_stmt(s.orelse, names)}}}"
    return f"while {render_formula(s.guard, names)} {{{render_stmt(s.body, names)}}}"


def render(program: Program) -> str:
    return f"vars {', '.join(program.variables)};\n{render_stmt(program.body, program.variables)}\n"
