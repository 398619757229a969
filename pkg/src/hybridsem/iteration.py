"""Iteration on the trajectory monads.

Everything rests on the Kleene chain of approximants ``f<0> = (0, undefined)``,
``f<n+1>(x) = [unit, f<n>]*(f(x))`` in H0M. Its least upper bound is the
least fixpoint iteration of H0M; the total iteration of H is obtained by
cutting that back with ``rho``, and the progressive iteration of H+ is its
restriction to progressive morphisms.

A chain that becomes constant on every input reachable from ``x`` yields an
exact answer. Otherwise answers are served pointwise: a time is decided as
soon as some approximant defines it, or shows it to be undefined for good.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Hashable, Iterable, Optional, Union

from .core import (
    INF,
    PENDING,
    UNDEF,
    Inl,
    Inr,
    Space,
    StepEvolution,
    Time,
    Traj,
    as_time,
    check_membership,
    is_defined,
    rho,
    unit,
    upsilon,
)
from .kleisli import KleisliMorphism, bind_h0m, cotuple

DEFAULT_BUDGET = 256
REACH_LIMIT = 4096


class NotProgressive(ValueError):
    """Raised when progressive iteration is asked of a morphism whose time-0
    value at some input is not a left-tagged value."""

    def __init__(self, x: Any, value: Any):
        super().__init__(f"time-0 value {value!r} at input {x!r} is not left-tagged")
        self.x = x
        self.value = value


@dataclass(frozen=True)
class Defined:
    value: Any


@dataclass(frozen=True)
class Undefined:
    pass


@dataclass(frozen=True)
class BudgetExhausted:
    unfoldings: int


Answer = Union[Defined, Undefined, BudgetExhausted]


@dataclass(frozen=True)
class Exact:
    traj: Traj
    unfoldings: int

    stabilized = True

    def at(self, t: Any) -> Answer:
        v = self.traj.at(t)
        return Defined(v) if is_defined(v) else Undefined()

    @property
    def duration_lower_bound(self) -> Time:
        return self.traj.dur


def is_progressive(f: KleisliMorphism, domain: Optional[Iterable] = None) -> bool:
    """Whether every time-0 value of ``f`` is left-tagged."""
    return is_guarded(f, lambda v: not isinstance(v, Inl), domain)


def is_guarded(f: KleisliMorphism, forbidden: Callable[[Any], bool], domain: Optional[Iterable] = None) -> bool:
    """Whether no time-0 value of ``f`` satisfies ``forbidden``."""
    xs = f.domain if domain is None else domain
    if xs is None:
        raise ValueError("guardedness is only decided on a finite domain")
    return all(not forbidden(f(x).ev(0)) for x in xs)


_PENDING_BOTTOM = Traj(Fraction(0), StepEvolution.const(PENDING), Space.H0M)


def kleene_step(f: KleisliMorphism, approx: KleisliMorphism) -> KleisliMorphism:
    """``x |-> [unit, approx]*(f(x))`` in H0M."""
    cont = cotuple(lambda y: unit(y, Space.H0M), approx)
    if f.domain is not None:
        return KleisliMorphism({x: bind_h0m(cont, f(x)) for x in f.domain}, Space.H0M)
    return KleisliMorphism(lambda x: bind_h0m(cont, f(x)), Space.H0M)


def kleene_bottom(domain: Optional[Iterable] = None) -> KleisliMorphism:
    """The least morphism, constantly ``(0, undefined)``."""
    b = Traj(Fraction(0), StepEvolution.const(UNDEF), Space.H0M)
    if domain is not None:
        return KleisliMorphism({x: b for x in domain}, Space.H0M)
    return KleisliMorphism(lambda x: b, Space.H0M, None)


def _finalize(traj: Traj) -> Traj:
    return Traj(traj.dur, traj.ev.map(lambda v: UNDEF if v is PENDING else v), Space.H0M)


class KleeneChain:
    """Memoised approximants ``f<n>(x)`` of an H0M morphism into ``Y + X``.

    Approximants mark points they leave undefined only for lack of
    unfoldings with ``PENDING``, and genuinely undefined points with
    ``UNDEF``; a ``PENDING`` point may become defined later, an ``UNDEF`` one
    never will.
    """

    def __init__(self, f: KleisliMorphism):
        self.f = f
        self._memo: dict = {}
        self._succ: dict = {}

    def successors(self, x: Hashable) -> tuple:
        s = self._succ.get(x)
        if s is None:
            s = tuple(dict.fromkeys(v.value for v in self.f(x).ev.values() if isinstance(v, Inr)))
            self._succ[x] = s
        return s

    def reach(self, x: Hashable, limit: int = REACH_LIMIT) -> Optional[list]:
        """Inputs reachable from ``x`` through right-tagged values, or ``None``
        when there are more than ``limit`` of them."""
        seen = {x: None}
        queue = deque([x])
        while queue:
            y = queue.popleft()
            for z in self.successors(y):
                if z not in seen:
                    seen[z] = None
                    if len(seen) > limit:
                        return None
                    queue.append(z)
        return list(seen)

    def _compute(self, n: int, x: Hashable) -> Traj:
        memo = self._memo

        def cont(v):
            if isinstance(v, Inl):
                return unit(v.value, Space.H0M)
            if isinstance(v, Inr):
                return memo[(n - 1, v.value)] if n > 1 else _PENDING_BOTTOM
            raise TypeError(f"{v!r} is not a sum value")

        return bind_h0m(cont, self.f(x))

    def approx(self, n: int, x: Hashable) -> Traj:
        if n == 0:
            return _PENDING_BOTTOM
        hit = self._memo.get((n, x))
        if hit is not None:
            return hit
        # Work out which inputs each level needs, then fill levels bottom-up.
        demand = [[x]]
        for k in range(n, 1, -1):
            nxt = {}
            for y in demand[-1]:
                if (k, y) not in self._memo:
                    for z in self.successors(y):
                        nxt[z] = None
            demand.append(list(nxt))
        for k, ys in zip(range(1, n + 1), reversed(demand)):
            for y in ys:
                if (k, y) not in self._memo:
                    self._memo[(k, y)] = self._compute(k, y)
        return self._memo[(n, x)]


@dataclass
class Pointwise:
    """An iterate whose chain did not become constant within the budget.

    ``at(t)`` unfolds further on demand. With ``cut`` set, answers are those of
    the cut-back trajectory: a time after the first gap is undefined.
    """

    chain: KleeneChain
    x: Any
    budget: int
    cut: bool = False
    unfolded: int = 0

    stabilized = False

    def at(self, t: Any) -> Answer:
        t = as_time(t)
        n = 1
        while True:
            n = min(n, self.budget)
            tr = self.chain.approx(n, self.x)
            self.unfolded = max(self.unfolded, n)
            verdict = self._decide(tr, t)
            if verdict is not None:
                return verdict
            if n >= self.budget:
                return BudgetExhausted(n)
            n *= 2

    def _decide(self, tr: Traj, t: Time) -> Optional[Answer]:
        if not self.cut:
            v = tr.ev(t)
            if is_defined(v):
                return Defined(v)
            return Undefined() if v is UNDEF else None
        for kind, lo, _hi, v in tr.ev.cells():
            if lo > t:
                break
            if kind == "open" and lo == t:
                break
            if not is_defined(v):
                return Undefined() if v is UNDEF else None
        v = tr.ev(t)
        return Defined(v)

    @property
    def duration_lower_bound(self) -> Time:
        return self.chain.approx(max(self.unfolded, 1), self.x).dur


IterAnswer = Union[Exact, Pointwise]


class IterResult:
    """Per-input answers of an iteration, computed on demand and cached."""

    def __init__(self, f: KleisliMorphism, budget: int, post: Callable[[Traj], Traj], space: Space, cut: bool):
        self.f = f
        self.budget = budget
        self.chain = KleeneChain(f)
        self._post = post
        self.space = space
        self._cut = cut
        self._answers: dict = {}

    def __call__(self, x: Any) -> IterAnswer:
        ans = self._answers.get(x)
        if ans is None:
            ans = self._answers[x] = self._solve(x)
        return ans

    __getitem__ = __call__

    def _solve(self, x: Any) -> IterAnswer:
        region = self.chain.reach(x)
        if region is None:
            return Pointwise(self.chain, x, self.budget, self._cut)
        for n in range(1, self.budget + 1):
            if all(self.chain.approx(n, y) == self.chain.approx(n - 1, y) for y in region):
                # The chain was already constant from approximant n - 1 on.
                last = _finalize(self.chain.approx(n, x))
                return Exact(self._post(last), n - 1)
        return Pointwise(self.chain, x, self.budget, self._cut)

    def answers(self) -> dict:
        if self.f.domain is None:
            raise ValueError("no finite domain")
        return {x: self(x) for x in self.f.domain}

    def all_exact(self) -> bool:
        return all(isinstance(a, Exact) for a in self.answers().values())

    def as_morphism(self) -> KleisliMorphism:
        """The iterate as a finite table; requires every answer to be exact."""
        table = {}
        for x, a in self.answers().items():
            if not isinstance(a, Exact):
                raise ValueError(f"iterate at {x!r} did not stabilise within {self.budget} unfoldings")
            table[x] = a.traj
        return KleisliMorphism(table, self.space)


def iter_h0m(f: KleisliMorphism, budget: int = DEFAULT_BUDGET) -> IterResult:
    """Least fixpoint iteration in H0M."""
    return IterResult(f, budget, lambda t: t, Space.H0M, cut=False)


def _upsilon_morphism(f: KleisliMorphism) -> KleisliMorphism:
    if f.domain is not None:
        return KleisliMorphism({x: upsilon(f(x)) for x in f.domain}, Space.H0M)
    return KleisliMorphism(lambda x: upsilon(f(x)), Space.H0M)


def iter_h(f: KleisliMorphism, budget: int = DEFAULT_BUDGET) -> IterResult:
    """Total iteration in H: the H0M iterate cut back to its gap-free prefix."""
    return IterResult(_upsilon_morphism(f), budget, rho, Space.H, cut=True)


def _certify_hplus(traj: Traj) -> Traj:
    out = traj.retag(Space.HPLUS)
    v = check_membership(out)
    if v is not None:
        raise AssertionError(f"progressive iterate left H+: {v}")
    return out


class _ProgressiveResult(IterResult):
    def _solve(self, x: Any) -> IterAnswer:
        region = self.chain.reach(x)
        for y in region if region is not None else (x,):
            v = self.f(y).ev(0)
            if not isinstance(v, Inl):
                raise NotProgressive(y, v)
        return super()._solve(x)


def iter_hplus(f: KleisliMorphism, budget: int = DEFAULT_BUDGET) -> IterResult:
    """Progressive iteration in H+; requires every time-0 value to be left-tagged."""
    if f.domain is not None and not is_progressive(f):
        for x in f.domain:
            v = f(x).ev(0)
            if not isinstance(v, Inl):
                raise NotProgressive(x, v)
    g = _upsilon_morphism(f)
    return _ProgressiveResult(g, budget, _certify_hplus, Space.HPLUS, cut=False)


def wrap_basic(f: KleisliMorphism) -> KleisliMorphism:
    """``x |-> `` the trajectory of ``f(x)`` with its time-0 point left-tagged and
    every later point right-tagged."""

    def g(traj: Traj) -> Traj:
        def fn(t):
            v = traj.ev(t)
            if not is_defined(v):
                return v
            return Inl(v) if t == 0 else Inr(v)

        return Traj(traj.dur, StepEvolution.tabulate(traj.ev.points, fn), Space.HPLUS)

    if f.domain is not None:
        return KleisliMorphism({x: g(f(x)) for x in f.domain}, Space.HPLUS)
    return KleisliMorphism(lambda x: g(f(x)), Space.HPLUS)


def basic_iter(f: KleisliMorphism, budget: int = DEFAULT_BUDGET) -> IterResult:
    """Run an H+ endomorphism again from the end of each run, forever."""
    return iter_hplus(wrap_basic(f), budget)


def hat(f: KleisliMorphism) -> KleisliMorphism:
    """Split ``f : X -> H(Y + X)`` so that only its time-0 loop-backs are
    visible to an outer iteration: time-0 values ``inr x`` stay outer-right,
    everything else is pushed into the inner sum."""

    def go(traj: Traj) -> Traj:
        def fn(t):
            v = traj.ev(t)
            if not is_defined(v):
                return v
            if t == 0:
                return Inl(Inl(v.value)) if isinstance(v, Inl) else Inr(v.value)
            return Inl(v)

        return Traj(traj.dur, StepEvolution.tabulate(traj.ev.points, fn), traj.space)

    if f.domain is not None:
        return KleisliMorphism({x: go(f(x)) for x in f.domain}, f.space)
    return KleisliMorphism(lambda x: go(f(x)), f.space)
