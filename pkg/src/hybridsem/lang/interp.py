"""Interpretation of programs as numeric and as exact Kleisli morphisms.

:func:`interp` gives the numeric reading over float vectors, served through
:class:`~hybridsem.lazy_traj.SegmentStream`. :func:`exact_interp` gives the
reading over rational vectors for programs whose trajectories are piecewise
constant, built from the exact monad operations and :func:`iter_h`, so the
two can be compared point for point.

Loops follow one convention throughout: the guard is checked only when an
unfolding starts, never while an ODE inside the body evolves. Within an
unfolding every point before its end is output; the end point hands its state
to the next unfolding.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Any, Optional, Sequence

import numpy as np

from ..core import INF, Inl, Inr, Space, StepEvolution, Traj, UNDEF, is_defined, unit
from ..iteration import DEFAULT_BUDGET, Exact, iter_h
from ..kleisli import KleisliMorphism, compose, fmap, plus_b
from ..lazy_traj import DEFAULT_CONFIG, Boundary, Diverge, NumericMorphism, Piece, Run, StreamConfig
from ..linear_ode import TRUE, And, Atom, BoolConst, Dynamics, Flow, Formula, LinTerm, Not, Or, eval_guard, least_crossing
from .syntax import Assign, Choice, PredODE, Program, Seq, Skip, Stmt, TimedODE, While, is_instantaneous, is_step_fragment


def _done(value):
    """A run that yields nothing and returns ``value``."""
    return value
    yield  # pragma: no cover


# ---------------------------------------------------------------- numeric


class UnitMorphism(NumericMorphism):
    def run(self, x):
        return _done(np.array(x, dtype=float))

    def at0(self, x):
        return np.array(x, dtype=float)


class AssignMorphism(NumericMorphism):
    def __init__(self, updates: Sequence[tuple]):
        self.updates = tuple(updates)

    def apply(self, x) -> np.ndarray:
        y = np.array(x, dtype=float)
        for i, t in self.updates:
            y[i] = t.eval(x)
        return y

    def run(self, x):
        return _done(self.apply(x))

    def at0(self, x):
        return self.apply(x)


class TimedODEMorphism(NumericMorphism):
    def __init__(self, dyn: Dynamics, duration: float):
        self.dyn = dyn
        self.duration = float(duration)

    def run(self, x) -> Run:
        if self.duration == 0:
            return np.array(x, dtype=float)
        flow = Flow(self.dyn, x)
        yield Piece(self.duration, flow)
        return flow(self.duration)

    def at0(self, x):
        return np.array(x, dtype=float)


class PredODEMorphism(NumericMorphism):
    """Evolve until the predicate first holds; a crossing beyond the search
    horizon gives an infinite piece flagged with a caveat."""

    def __init__(self, dyn: Dynamics, psi: Formula, config: StreamConfig = DEFAULT_CONFIG):
        self.dyn = dyn
        self.psi = psi
        self.config = config

    def crossing(self, x) -> Optional[float]:
        c = self.config
        return least_crossing(self.dyn, x, self.psi, c.horizon, c.event_tol, c.scan_step)

    def run(self, x) -> Run:
        t = self.crossing(x)
        flow = Flow(self.dyn, x)
        if t is None:
            yield Piece(INF, flow, caveat=True)
            return None
        if t == 0:
            return np.array(x, dtype=float)
        yield Piece(t, flow)
        return flow(t)

    def at0(self, x):
        return np.array(x, dtype=float)


def _map_pieces(run: Run, h) -> Run:
    """Re-yield ``run`` with ``h`` applied to every defined piece value."""
    while True:
        try:
            item = next(run)
        except StopIteration as stop:
            return stop.value
        if isinstance(item, Piece):
            ev = item.evaluate

            def mapped(s, ev=ev):
                v = ev(s)
                return h(v) if is_defined(v) else v

            item = Piece(item.length, mapped, item.caveat)
        yield item


class SeqMorphism(NumericMorphism):
    """Kleisli composite: run ``first``; each point it passes through shows
    the time-0 value of ``second`` from there; then ``second`` runs from the
    final state."""

    def __init__(self, first: NumericMorphism, second: NumericMorphism):
        self.first = first
        self.second = second

    def run(self, x) -> Run:
        mid = yield from _map_pieces(self.first.run(x), self.second.at0)
        if mid is None:
            return None
        return (yield from self.second.run(mid))

    def at0(self, x):
        v = self.first.at0(x)
        return self.second.at0(v) if is_defined(v) else UNDEF


class ChoiceMorphism(NumericMorphism):
    def __init__(self, guard: Formula, then: NumericMorphism, orelse: NumericMorphism):
        self.guard = guard
        self.then = then
        self.orelse = orelse

    def _branch(self, x) -> NumericMorphism:
        return self.then if eval_guard(self.guard, x) else self.orelse

    def run(self, x) -> Run:
        return (yield from self._branch(x).run(x))

    def at0(self, x):
        return self._branch(x).at0(x)


class WhileMorphism(NumericMorphism):
    """Iterate ``body`` while ``guard`` holds at the start of an unfolding.

    Divergence is reported when ``guard`` is literally ``true`` and the body
    never takes time, when a state repeats with no time elapsed since the
    last progress, or after ``div_window`` consecutive unfoldings that take
    no time. The last rule can misjudge a long but finite zero-time loop.
    """

    def __init__(self, guard: Formula, body: NumericMorphism, instantaneous: bool = False,
                 config: StreamConfig = DEFAULT_CONFIG):
        self.guard = guard
        self.body = body
        self.instantaneous = instantaneous
        self.config = config

    def run(self, x) -> Run:
        x = np.array(x, dtype=float)
        if self.instantaneous and self.guard == TRUE:
            yield Diverge("guard-true-instantaneous")
            return None
        seen = {x.tobytes()}
        idle = 0
        while True:
            if not eval_guard(self.guard, x):
                return x
            progressed = False
            inner = self.body.run(x)
            while True:
                try:
                    item = next(inner)
                except StopIteration as stop:
                    final = stop.value
                    break
                if isinstance(item, Piece):
                    progressed = True
                yield item
                if isinstance(item, Diverge):
                    inner.close()
                    return None
            if final is None:
                return None
            x = np.array(final, dtype=float)
            yield Boundary(x)
            if progressed:
                seen = {x.tobytes()}
                idle = 0
                continue
            key = x.tobytes()
            if key in seen:
                yield Diverge("cycle")
                return None
            seen.add(key)
            idle += 1
            if idle >= self.config.div_window:
                yield Diverge("probation")
                return None


def interp_atomic(stmt: Stmt, config: StreamConfig = DEFAULT_CONFIG) -> NumericMorphism:
    if isinstance(stmt, Assign):
        return AssignMorphism(stmt.updates)
    if isinstance(stmt, TimedODE):
        return TimedODEMorphism(stmt.dyn, stmt.duration)
    if isinstance(stmt, PredODE):
        return PredODEMorphism(stmt.dyn, stmt.psi, config)
    raise TypeError(f"not an atomic program: {stmt!r}")


def while_sem(guard: Formula, body: NumericMorphism, instantaneous: bool = False,
              config: StreamConfig = DEFAULT_CONFIG) -> WhileMorphism:
    return WhileMorphism(guard, body, instantaneous, config)


def interp_stmt(stmt: Stmt, config: StreamConfig = DEFAULT_CONFIG) -> NumericMorphism:
    if isinstance(stmt, Skip):
        return UnitMorphism()
    if isinstance(stmt, Seq):
        return SeqMorphism(interp_stmt(stmt.first, config), interp_stmt(stmt.second, config))
    if isinstance(stmt, Choice):
        return ChoiceMorphism(stmt.guard, interp_stmt(stmt.then, config), interp_stmt(stmt.orelse, config))
    if isinstance(stmt, While):
        return while_sem(stmt.guard, interp_stmt(stmt.body, config), is_instantaneous(stmt.body), config)
    return interp_atomic(stmt, config)


def interp(program, config: StreamConfig = DEFAULT_CONFIG) -> NumericMorphism:
    """Numeric morphism of a :class:`Program` or a bare statement."""
    stmt = program.body if isinstance(program, Program) else program
    return interp_stmt(stmt, config)


# ---------------------------------------------------------------- exact


def exact_term(t: LinTerm, x: Sequence[Fraction]) -> Fraction:
    return sum((Fraction(a) * v for a, v in zip(t.coeffs, x)), Fraction(t.const))


def exact_guard(g: Formula, x: Sequence[Fraction]) -> bool:
    if isinstance(g, Atom):
        a, b = exact_term(g.lhs, x), exact_term(g.rhs, x)
        return {"<=": a <= b, ">=": a >= b, "<": a < b, ">": a > b, "=": a == b, "!=": a != b}[g.op]
    if isinstance(g, And):
        return exact_guard(g.left, x) and exact_guard(g.right, x)
    if isinstance(g, Or):
        return exact_guard(g.left, x) or exact_guard(g.right, x)
    if isinstance(g, Not):
        return not exact_guard(g.arg, x)
    if isinstance(g, BoolConst):
        return g.value
    raise TypeError(f"not a formula: {g!r}")


def retag_interior(traj: Traj) -> Traj:
    """Turn every right-tagged point strictly before the duration into a
    left-tagged one with the same value; the end point keeps its tag."""
    d = traj.dur

    def fn(t):
        v = traj.ev(t)
        if isinstance(v, Inr) and t < d:
            return Inl(v.value)
        return v

    pts = list(traj.ev.points) + ([d] if d != INF else [])
    return Traj(d, StepEvolution.tabulate(pts, fn), traj.space)


def while_step(guard: Formula, body: KleisliMorphism) -> KleisliMorphism:
    """The loop morphism whose iterate is the loop: exit with ``inl x`` when
    ``guard`` fails, otherwise run ``body`` with the continuation tag
    confined to its end point."""

    def g(x):
        if not exact_guard(guard, x):
            return unit(Inl(x), Space.H)
        return retag_interior(fmap(Inr, body(x)))

    return KleisliMorphism(g, Space.H)


def exact_while(guard: Formula, body: KleisliMorphism, budget: int = DEFAULT_BUDGET) -> KleisliMorphism:
    it = iter_h(while_step(guard, body), budget)

    def run(x):
        ans = it(x)
        if not isinstance(ans, Exact):
            raise ValueError(f"loop from {x!r} did not stabilise within {budget} unfoldings")
        return ans.traj

    return KleisliMorphism(run, Space.H)


def exact_stmt(stmt: Stmt, budget: int = DEFAULT_BUDGET) -> KleisliMorphism:
    if isinstance(stmt, Skip):
        return KleisliMorphism(lambda x: unit(x, Space.H), Space.H)
    if isinstance(stmt, Assign):

        def assign(x):
            y = list(x)
            for i, t in stmt.updates:
                y[i] = exact_term(t, x)
            return unit(tuple(y), Space.H)

        return KleisliMorphism(assign, Space.H)
    if isinstance(stmt, TimedODE):
        r = Fraction(stmt.duration)
        return KleisliMorphism(lambda x: Traj(r, StepEvolution.const(x), Space.H), Space.H)
    if isinstance(stmt, Seq):
        return compose(exact_stmt(stmt.second, budget), exact_stmt(stmt.first, budget))
    if isinstance(stmt, Choice):
        return plus_b(exact_stmt(stmt.then, budget), exact_stmt(stmt.orelse, budget),
                      lambda x: exact_guard(stmt.guard, x))
    if isinstance(stmt, While):
        return exact_while(stmt.guard, exact_stmt(stmt.body, budget), budget)
    raise TypeError(f"no exact reading for {stmt!r}")


def exact_interp(program, budget: int = DEFAULT_BUDGET) -> KleisliMorphism:
    """Exact morphism over tuples of :class:`~fractions.Fraction` for a
    program built from assignments, waits, choices and loops."""
    stmt = program.body if isinstance(program, Program) else program
    if not is_step_fragment(stmt):
        raise ValueError("exact interpretation needs a program without continuous dynamics")
    return exact_stmt(stmt, budget)


def as_state(values: Sequence[Any]) -> tuple:
    return tuple(Fraction(v) for v in values)
