"""Random finite instances for the law suites.

Carriers have at most four elements and evolutions at most three breakpoints
drawn from a small grid of rationals. Morphisms meant to be iterated carry a
rank on their inputs and may only loop back to inputs of lower rank, so every
input exits after at most five unfoldings and iterates are exactly
computable.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Any, Callable, Optional, Sequence

from .core import INF, UNDEF, Inl, Inr, Space, StepEvolution, Traj, is_defined, leq
from .kleisli import KleisliMorphism

GRID = tuple(Fraction(n, d) for n, d in [(1, 4), (1, 3), (1, 2), (2, 3), (1, 1), (3, 2), (2, 1), (5, 2), (3, 1)])
MAX_RANK = 4


def flatten(ev: StepEvolution, d) -> StepEvolution:
    """Make ``ev`` constant from ``d`` on."""
    if d == INF:
        return ev
    end = ev(d)
    return StepEvolution.tabulate([*ev.points, d], lambda t: ev(t) if t <= d else end)


class Gen:
    def __init__(self, rng: random.Random):
        self.rng = rng

    def carrier(self, prefix: str = "", lo: int = 1, hi: int = 4) -> list:
        n = self.rng.randint(lo, hi)
        return [f"{prefix}{i}" for i in range(n)] if prefix else list(range(n))

    def duration(self, zero_p: float = 0.2, inf_p: float = 0.15):
        r = self.rng.random()
        if r < zero_p:
            return Fraction(0)
        if r < zero_p + inf_p:
            return INF
        return self.rng.choice(GRID)

    def _value(self, pool: Sequence, undef_p: float, prev: Any):
        if prev is not None and self.rng.random() < 0.35:
            return prev
        if undef_p and self.rng.random() < undef_p:
            return UNDEF
        return self.rng.choice(pool)

    def evolution(self, pool: Sequence, undef_p: float = 0.0, k_max: int = 3) -> StepEvolution:
        bps = sorted(self.rng.sample(GRID, self.rng.randint(0, k_max)))
        pts = [Fraction(0), *bps]
        at, after = [], []
        prev = None
        for _ in pts:
            a = self._value(pool, undef_p, prev)
            b = self._value(pool, undef_p, a)
            at.append(a)
            after.append(b)
            prev = b
        return StepEvolution(pts, at, after)

    def traj(self, space: Space, pool: Sequence, first: Any = None) -> Traj:
        """A random member of ``space`` with values from ``pool``; ``first``
        forces the time-0 value."""
        space = Space(space)
        rng = self.rng
        d = self.duration()
        ev = self.evolution(pool, undef_p=0.25 if space is Space.H0M else 0.0)
        if first is not None:
            base = ev
            ev = StepEvolution.tabulate(base.points, lambda t: first if t == 0 else base(t))
        if space is Space.HPLUS:
            if d != INF and d > 0 and rng.random() < 0.3:
                return Traj(d, ev.restrict(d, closed=False), space)
            return Traj(d, flatten(ev, d), space)
        if space is Space.H and rng.random() < 0.35:
            cut = rng.choice((Fraction(0), *GRID))
            return Traj(INF, ev.restrict(cut, closed=rng.random() < 0.5), space)
        return Traj(d, flatten(ev, d), space)

    def morphism(
        self,
        space: Space,
        domain: Sequence,
        pool: Callable[[Any], Sequence],
        first: Optional[Callable[[Any], Any]] = None,
    ) -> KleisliMorphism:
        return KleisliMorphism(
            {x: self.traj(space, pool(x), None if first is None else first(x)) for x in domain}, space
        )

    def ranks(self, domain: Sequence) -> dict:
        return {x: self.rng.randint(0, MAX_RANK) for x in domain}

    def loop_pool(self, rank: dict, exits: Sequence, wrap_back: Callable[[Any], list]) -> Callable[[Any], list]:
        """Value pool per input: every exit, plus loop-backs to lower-ranked
        inputs (listed twice so loops are common)."""

        def pool(x):
            back = [v for y in rank if rank[y] < rank[x] for v in wrap_back(y)]
            return list(exits) + back + back

        return pool

    def loop_morphism(self, space: Space, X: Sequence, Y: Sequence, progressive: bool = False) -> KleisliMorphism:
        """``X -> T(Y + X)`` that exits within ``MAX_RANK + 1`` unfoldings."""
        rank = self.ranks(X)
        pool = self.loop_pool(rank, [Inl(y) for y in Y], lambda y: [Inr(y)])
        first = (lambda x: Inl(self.rng.choice(Y))) if progressive else None
        return self.morphism(space, X, pool, first)

    def above(self, a: Traj, pool: Sequence, undef_p: float = 0.25) -> Traj:
        """A random trajectory ``b`` with ``a <= b``."""
        rng = self.rng
        d = a.dur
        end_defined = d != INF and is_defined(a.ev(d))
        if end_defined:
            d2 = d
        elif d == INF:
            d2 = INF
        else:
            d2 = rng.choice([d, d + rng.choice(GRID), INF])
        pts = sorted({*a.ev.points, *rng.sample(GRID, rng.randint(0, 2)), *([d2] if d2 != INF else [])})
        at, after = [], []
        for i, p in enumerate(pts):
            for store, t in ((at, p), (after, _mid(pts, i))):
                v = a.ev(t)
                store.append(v if is_defined(v) else self._value(pool, undef_p, None))
        ev = StepEvolution(pts, at, after)
        b = Traj(d2, flatten(ev, d2), Space.H0M)
        assert leq(a, b), (a, b)
        return b


def _mid(pts: list, i: int):
    return pts[i] + 1 if i + 1 == len(pts) else (pts[i] + pts[i + 1]) / 2
