"""Kleisli structure of the four trajectory monads: units, binds, composition,
functor action and the trajectory-valued if-then-else."""

from __future__ import annotations

from typing import Any, Callable, Hashable, Iterable, Mapping, Optional, Union

from .core import (
    INF,
    Inl,
    Inr,
    Marker,
    Space,
    StepEvolution,
    Traj,
    check_membership,
    is_defined,
    rho,
    splice,
    unit,
    upsilon,
)


class KleisliMorphism:
    """A map from values to trajectories of one space.

    Built either from a finite table (a ``dict``) or from a callable; a callable
    may be given an explicit finite ``domain``. Morphisms with a finite domain
    compare by their tables.
    """

    __slots__ = ("_table", "_fn", "space", "domain")

    def __init__(
        self,
        mapping: Union[Mapping[Hashable, Traj], Callable[[Any], Traj]],
        space: Space,
        domain: Optional[Iterable[Hashable]] = None,
    ):
        self.space = Space(space)
        if isinstance(mapping, Mapping):
            self._table = dict(mapping)
            self._fn = None
            self.domain = tuple(self._table)
        else:
            self._table = None
            self._fn = mapping
            self.domain = None if domain is None else tuple(domain)

    def __call__(self, x: Any) -> Traj:
        if self._table is not None:
            try:
                return self._table[x]
            except KeyError:
                raise KeyError(f"{x!r} is outside the domain of this morphism") from None
        return self._fn(x)

    @property
    def is_finite(self) -> bool:
        return self.domain is not None

    def table(self) -> dict:
        if self.domain is None:
            raise ValueError("morphism has no finite domain")
        if self._table is not None:
            return dict(self._table)
        return {x: self._fn(x) for x in self.domain}

    def materialize(self) -> "KleisliMorphism":
        return KleisliMorphism(self.table(), self.space)

    def validate(self) -> Optional[tuple[Any, Any]]:
        """First ``(input, violation)`` whose output is not in the declared space."""
        for x in self.domain or ():
            v = check_membership(self(x), self.space)
            if v is not None:
                return (x, v)
        return None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KleisliMorphism):
            return NotImplemented
        if self.domain is None or other.domain is None:
            return self is other
        if set(self.domain) != set(other.domain):
            return False
        return all(self(x) == other(x) for x in self.domain)

    __hash__ = None

    def __repr__(self) -> str:
        if self.domain is None:
            return f"KleisliMorphism[{self.space.value}](<callable>)"
        body = ", ".join(f"{x!r}: {self(x).render()}" for x in self.domain)
        return f"KleisliMorphism[{self.space.value}]({{{body}}})"


Cont = Callable[[Any], Traj]


def _as_cont(f: Union[KleisliMorphism, Cont]) -> Cont:
    cache: dict = {}

    def go(v):
        try:
            hit = cache.get(v)
        except TypeError:
            return f(v)
        if hit is None:
            hit = cache[v] = f(v)
        return hit

    return go


def _bind_total(f: Cont, m: Traj, space: Space) -> Traj:
    """Bind in which the continuation decides everything from the points of
    ``m`` up to and including its duration."""
    d, e = m.dur, m.ev
    head = e.map(lambda v: f(v).ev(0))
    if d == INF:
        return Traj(INF, head, space)
    k = f(e(d))
    return Traj(d + k.dur, splice(head, d, k.ev, closed=True), space)


def bind_h0(f: Union[KleisliMorphism, Cont], m: Traj) -> Traj:
    return _bind_total(_as_cont(f), m, Space.H0)


def _h0m_cont(f: Union[KleisliMorphism, Cont]) -> Cont:
    g = _as_cont(f)

    def go(v):
        if isinstance(v, Marker):
            return Traj(0, StepEvolution.const(v), Space.H0M)
        return g(v)

    return go


def bind_h0m(f: Union[KleisliMorphism, Cont], m: Traj) -> Traj:
    """Bind of the monad of trajectories that may be undefined anywhere.

    Undefined points of ``m`` stay undefined and, at the endpoint, stop the
    trajectory there.
    """
    return _bind_total(_h0m_cont(f), m, Space.H0M)


def bind_hplus(f: Union[KleisliMorphism, Cont], m: Traj) -> Traj:
    g = _as_cont(f)
    d, e = m.dur, m.ev
    head = e.map(lambda v: g(v).ev(0) if is_defined(v) else v)
    if d == INF:
        return Traj(INF, head, Space.HPLUS)
    end = e(d)
    if not is_defined(end):
        return Traj(d, splice(head, d, StepEvolution.const(end), closed=False), Space.HPLUS)
    k = g(end)
    return Traj(d + k.dur, splice(head, d, k.ev, closed=False), Space.HPLUS)


def bind_h(f: Union[KleisliMorphism, Cont], m: Traj) -> Traj:
    g = _as_cont(f)
    d, e = m.dur, m.ev
    head = e.map(lambda v: g(v).ev(0) if is_defined(v) else v)
    first = head.first_undefined()
    if first is None:
        if d == INF:
            return Traj(INF, head, Space.H)
        k = g(e(d))
        return Traj(d + k.dur, splice(head, d, k.ev, closed=True), Space.H)
    u, attained = first
    return Traj(INF, head.restrict(u, closed=not attained), Space.H)


def bind_h_via_h0m(f: Union[KleisliMorphism, Cont], m: Traj) -> Traj:
    """Bind of H obtained by embedding into H0M, binding there, and cutting
    back; an independent route to :func:`bind_h`."""
    g = _as_cont(f)
    return rho(bind_h0m(lambda v: upsilon(g(v)), upsilon(m)))


_BINDS = {Space.H0: bind_h0, Space.H0M: bind_h0m, Space.HPLUS: bind_hplus, Space.H: bind_h}


def bind(f: Union[KleisliMorphism, Cont], m: Traj, space: Optional[Space] = None) -> Traj:
    space = Space(space) if space is not None else m.space
    return _BINDS[space](f, m)


def unit_of(space: Space) -> Cont:
    space = Space(space)
    return lambda v: unit(v, space)


def compose(g: KleisliMorphism, f: KleisliMorphism) -> KleisliMorphism:
    """Kleisli composite: run ``f``, then feed each point to ``g``."""
    space = f.space
    b = _BINDS[space]
    if f.domain is not None:
        return KleisliMorphism({x: b(g, f(x)) for x in f.domain}, space)
    return KleisliMorphism(lambda x: b(g, f(x)), space)


def cotuple(on_left: Cont, on_right: Cont) -> Cont:
    """``[on_left, on_right]`` on values of a binary sum."""

    def go(v):
        if isinstance(v, Inl):
            return on_left(v.value)
        if isinstance(v, Inr):
            return on_right(v.value)
        raise TypeError(f"{v!r} is not a sum value")

    return go


def sum_map(on_left: Callable[[Any], Any], on_right: Callable[[Any], Any]) -> Callable[[Any], Any]:
    """``on_left + on_right`` on values of a binary sum."""
    return lambda v: Inl(on_left(v.value)) if isinstance(v, Inl) else Inr(on_right(v.value))


def fmap(h: Callable[[Any], Any], m: Traj) -> Traj:
    """Functor action: apply ``h`` to every defined point of ``m``."""
    return Traj(m.dur, m.ev.map(lambda v: h(v) if is_defined(v) else v), m.space)


def fmap_morphism(h: Callable[[Any], Any], f: KleisliMorphism) -> KleisliMorphism:
    if f.domain is not None:
        return KleisliMorphism({x: fmap(h, f(x)) for x in f.domain}, f.space)
    return KleisliMorphism(lambda x: fmap(h, f(x)), f.space)


def plus_b(f: KleisliMorphism, g: KleisliMorphism, b: Callable[[Any], bool]) -> KleisliMorphism:
    """Run ``f`` where ``b`` holds and ``g`` elsewhere."""
    if f.domain is not None:
        return KleisliMorphism({x: f(x) if b(x) else g(x) for x in f.domain}, f.space)
    return KleisliMorphism(lambda x: f(x) if b(x) else g(x), f.space)
