"""Trajectories with durations, their step-function evolutions, and the four
trajectory spaces H0, H0M, H+ and H together with the maps between them.

Times are exact: finite times are ``Fraction`` values and the one infinite
time is ``math.inf``. An evolution is a step function over the non-negative
reals that is constant on each point of a finite breakpoint set and on each
open cell between consecutive breakpoints (the last cell extends to infinity).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Iterable, Iterator, Optional, Sequence, Union

INF = math.inf

Time = Union[Fraction, float]


class Marker:
    """A non-value placed where an evolution is undefined."""

    __slots__ = ("name", "symbol")

    def __init__(self, name: str, symbol: str):
        self.name = name
        self.symbol = symbol

    def __repr__(self) -> str:
        return self.symbol

    def __reduce__(self):
        return self.name


# Genuinely undefined.
UNDEF = Marker("UNDEF", "_")
# Undefined in an approximant only because the unfolding bottomed out; later
# approximants may define the point.
PENDING = Marker("PENDING", "?")


def is_defined(value: Any) -> bool:
    return not isinstance(value, Marker)


@dataclass(frozen=True, slots=True)
class Inl:
    """Left injection into a binary sum."""

    value: Any

    def __repr__(self) -> str:
        return f"inl({fmt_value(self.value)})"


@dataclass(frozen=True, slots=True)
class Inr:
    """Right injection into a binary sum."""

    value: Any

    def __repr__(self) -> str:
        return f"inr({fmt_value(self.value)})"


def as_time(t: Any) -> Time:
    """Normalise ``t`` to a ``Fraction`` or ``INF``."""
    if isinstance(t, Fraction):
        value = t
    elif isinstance(t, bool):
        raise TypeError("bool is not a time")
    elif isinstance(t, int):
        value = Fraction(t)
    elif isinstance(t, float):
        if math.isnan(t):
            raise ValueError("NaN is not a time")
        if t == INF:
            return INF
        value = Fraction(t)
    elif isinstance(t, str):
        s = t.strip().lower()
        if s in ("inf", "infinity", "oo"):
            return INF
        value = Fraction(s)
    else:
        raise TypeError(f"cannot interpret {t!r} as a time")
    if value < 0:
        raise ValueError(f"negative time {t!r}")
    return value


def fmt_time(t: Time) -> str:
    return "inf" if t == INF else str(t)


def fmt_value(v: Any) -> str:
    if isinstance(v, (Marker, Inl, Inr)):
        return repr(v)
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, tuple):
        return "(" + ", ".join(fmt_value(x) for x in v) + ")"
    return repr(v)


def midpoint(lo: Time, hi: Time) -> Time:
    """A representative time strictly inside the open cell ``(lo, hi)``."""
    if hi == INF:
        return lo + 1
    return (lo + hi) / 2


class StepEvolution:
    """A canonical finite step function on the non-negative reals.

    ``points`` is strictly increasing with ``points[0] == 0``. ``at[i]`` is the
    value at ``points[i]`` and ``after[i]`` the value on the open cell that
    follows it. Redundant breakpoints are dropped, so equal functions have
    equal representations.
    """

    __slots__ = ("points", "at", "after", "_hash")

    def __init__(self, points: Sequence[Time], at: Sequence[Any], after: Sequence[Any]):
        if not (len(points) == len(at) == len(after)) or not points:
            raise ValueError("points, at and after must be non-empty and of equal length")
        if points[0] != 0:
            raise ValueError("the first breakpoint must be 0")
        pts = [as_time(points[0])]
        vat = [at[0]]
        vaft = [after[0]]
        for i in range(1, len(points)):
            p = as_time(points[i])
            if p == INF or p <= pts[-1]:
                raise ValueError("breakpoints must be finite and strictly increasing")
            if at[i] == vaft[-1] and after[i] == vaft[-1]:
                continue
            pts.append(p)
            vat.append(at[i])
            vaft.append(after[i])
        self.points = tuple(pts)
        self.at = tuple(vat)
        self.after = tuple(vaft)
        self._hash = None

    @classmethod
    def const(cls, value: Any) -> "StepEvolution":
        return cls((Fraction(0),), (value,), (value,))

    @classmethod
    def tabulate(cls, candidates: Iterable[Time], fn: Callable[[Time], Any]) -> "StepEvolution":
        """Build the step function equal to ``fn`` assuming ``fn`` is constant on
        every point and open cell of the breakpoint set ``candidates`` (plus 0)."""
        pts = sorted({Fraction(0), *(as_time(c) for c in candidates if c != INF)})
        at = [fn(p) for p in pts]
        after = [fn(midpoint(pts[i], pts[i + 1] if i + 1 < len(pts) else INF)) for i in range(len(pts))]
        return cls(pts, at, after)

    def __call__(self, t: Time) -> Any:
        i = bisect.bisect_right(self.points, t) - 1
        if i < 0:
            raise ValueError(f"negative time {t!r}")
        if self.points[i] == t:
            return self.at[i]
        return self.after[i]

    def cells(self) -> Iterator[tuple[str, Time, Time, Any]]:
        """Yield ``(kind, lo, hi, value)`` for every point (``kind == 'pt'``,
        ``lo == hi``) and open cell (``kind == 'open'``) in time order."""
        n = len(self.points)
        for i in range(n):
            p = self.points[i]
            yield ("pt", p, p, self.at[i])
            yield ("open", p, self.points[i + 1] if i + 1 < n else INF, self.after[i])

    def values(self) -> set:
        return set(self.at) | set(self.after)

    def map(self, fn: Callable[[Any], Any]) -> "StepEvolution":
        cache: dict = {}

        def go(v):
            try:
                if v in cache:
                    return cache[v]
                r = cache[v] = fn(v)
                return r
            except TypeError:
                return fn(v)

        return StepEvolution(self.points, [go(v) for v in self.at], [go(v) for v in self.after])

    def is_total(self) -> bool:
        return all(is_defined(v) for v in self.at) and all(is_defined(v) for v in self.after)

    def first_undefined(self) -> Optional[tuple[Time, bool]]:
        """Infimum of the undefined times and whether it is attained, or ``None``
        when the evolution is total."""
        for kind, lo, _hi, v in self.cells():
            if not is_defined(v):
                return (lo, kind == "pt")
        return None

    def restrict(self, bound: Time, closed: bool) -> "StepEvolution":
        """Undefine everything after ``bound`` (from ``bound`` on if not ``closed``)."""
        if bound == INF:
            return self

        def fn(t):
            if t < bound or (closed and t == bound):
                return self(t)
            return UNDEF

        return StepEvolution.tabulate([*self.points, bound], fn)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StepEvolution):
            return NotImplemented
        return self.points == other.points and self.at == other.at and self.after == other.after

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.points, self.at, self.after))
        return self._hash

    def render(self) -> str:
        parts = []
        n = len(self.points)
        for i in range(n):
            p, a, b = self.points[i], self.at[i], self.after[i]
            last = i + 1 == n
            if a == b:
                if last:
                    parts.append(f"tail->{fmt_value(b)}")
                else:
                    parts.append(f"[{fmt_time(p)},{fmt_time(self.points[i + 1])})->{fmt_value(b)}")
            else:
                parts.append(f"{{{fmt_time(p)}}}->{fmt_value(a)}")
                if last:
                    parts.append(f"tail->{fmt_value(b)}")
                else:
                    parts.append(f"({fmt_time(p)},{fmt_time(self.points[i + 1])})->{fmt_value(b)}")
        return "; ".join(parts)

    def __repr__(self) -> str:
        return f"StepEvolution({self.render()})"


def splice(head: StepEvolution, d: Time, tail: StepEvolution, closed: bool = True) -> StepEvolution:
    """``head`` up to ``d`` (inclusive when ``closed``), then ``tail`` shifted by ``d``."""
    if d == INF:
        return head

    def fn(t):
        if t < d or (closed and t == d):
            return head(t)
        return tail(t - d)

    cands = [p for p in head.points if p < d]
    cands.append(d)
    cands.extend(d + p for p in tail.points)
    return StepEvolution.tabulate(cands, fn)


def sample_times(*evs: StepEvolution, extra: Iterable[Time] = ()) -> list[Time]:
    """One time per point and open cell of the common refinement of ``evs``."""
    pts = sorted({Fraction(0), *(p for e in evs for p in e.points), *(x for x in extra if x != INF)})
    out: list[Time] = []
    for i, p in enumerate(pts):
        out.append(p)
        out.append(midpoint(p, pts[i + 1] if i + 1 < len(pts) else INF))
    return out


class Space(str, Enum):
    H0 = "H0"
    H0M = "H0M"
    HPLUS = "H+"
    H = "H"


@dataclass(frozen=True)
class Traj:
    """A duration together with an evolution, tagged with the space it is
    meant to live in."""

    dur: Time
    ev: StepEvolution
    space: Space = Space.H0

    def __post_init__(self):
        object.__setattr__(self, "dur", as_time(self.dur))
        if not isinstance(self.ev, StepEvolution):
            raise TypeError("ev must be a StepEvolution")
        object.__setattr__(self, "space", Space(self.space))

    def at(self, t: Any) -> Any:
        return self.ev(as_time(t))

    def retag(self, space: Space) -> "Traj":
        return Traj(self.dur, self.ev, space)

    def render(self) -> str:
        return f"dur={fmt_time(self.dur)}; {self.ev.render()}"

    def __repr__(self) -> str:
        return f"Traj[{self.space.value}]({self.render()})"


def unit(value: Any, space: Space = Space.H0) -> Traj:
    """The trajectory that stays at ``value`` and takes no time."""
    return Traj(Fraction(0), StepEvolution.const(value), space)


def bottom(space: Space = Space.H0M) -> Traj:
    return Traj(Fraction(0), StepEvolution.const(UNDEF), space)


def const_traj(dur: Any, value: Any, space: Space = Space.H0) -> Traj:
    return Traj(as_time(dur), StepEvolution.const(value), space)


@dataclass(frozen=True)
class Violation:
    """A failed membership clause with a time that exhibits the failure."""

    clause: str
    witness: Time

    def __str__(self) -> str:
        return f"{self.clause} at t={fmt_time(self.witness)}"


def _flattening(traj: Traj) -> Optional[Violation]:
    d = traj.dur
    if d == INF:
        return None
    v = traj.ev(d)
    for kind, lo, hi, val in traj.ev.cells():
        if hi < d or (kind == "pt" and lo <= d) or (kind == "open" and hi == d):
            continue
        if val != v:
            w = lo if kind == "pt" else midpoint(max(lo, d), hi)
            return Violation("flattening", w)
    return None


def _undefined_witness(ev: StepEvolution, below: Time = INF) -> Optional[Time]:
    for kind, lo, hi, v in ev.cells():
        if lo >= below:
            return None
        if not is_defined(v):
            return lo if kind == "pt" else midpoint(lo, min(hi, below))
    return None


def check_membership(traj: Traj, space: Optional[Space] = None) -> Optional[Violation]:
    """Return the first violated membership clause of ``traj`` in ``space``
    (its own tag by default), or ``None``."""
    space = Space(space) if space is not None else traj.space
    v = _flattening(traj)
    if v is not None:
        return v
    ev = traj.ev
    if space is Space.H0:
        w = _undefined_witness(ev)
        return None if w is None else Violation("undefined-value", w)
    if space is Space.H0M:
        return None
    if space is Space.HPLUS:
        if all(not is_defined(c[3]) for c in ev.cells()):
            return Violation("nowhere-defined", Fraction(0))
        w = _undefined_witness(ev, traj.dur)
        return None if w is None else Violation("undefined-before-duration", w)
    # Space.H
    first = ev.first_undefined()
    if first is None:
        return None
    if traj.dur != INF:
        return Violation("partial-with-finite-duration", _undefined_witness(ev))
    seen_undefined = False
    for kind, lo, hi, val in ev.cells():
        if not is_defined(val):
            seen_undefined = True
        elif seen_undefined:
            return Violation("domain-not-downward-closed", lo if kind == "pt" else midpoint(lo, hi))
    return None


def is_member(traj: Traj, space: Optional[Space] = None) -> bool:
    return check_membership(traj, space) is None


def rho(traj: Traj) -> Traj:
    """Cut a trajectory back to the largest initial segment without gaps.

    Total trajectories keep their duration. Otherwise the result runs forever,
    agrees with the input up to the first undefined time (inclusive if that
    time itself is defined) and is undefined afterwards.
    """
    first = traj.ev.first_undefined()
    if first is None:
        return Traj(traj.dur, traj.ev, Space.H)
    u, attained = first
    cut = min(traj.dur, u)
    if cut == u:
        ev = traj.ev.restrict(u, closed=not attained)
    else:
        ev = traj.ev.restrict(cut, closed=True)
    ev = ev.map(lambda v: UNDEF if not is_defined(v) else v)
    return Traj(INF, ev, Space.H)


def upsilon(traj: Traj) -> Traj:
    """View a trajectory of H as one of H0M."""
    return traj.retag(Space.H0M)


def iota(traj: Traj) -> Traj:
    """View a trajectory of H+ as one of H0M."""
    return traj.retag(Space.H0M)


def leq(a: Traj, b: Traj) -> bool:
    """The definedness order: ``b`` has at least the duration of ``a``, agrees
    with it wherever ``a`` is defined, and keeps a finite duration fixed when
    ``a`` is defined at its endpoint."""
    if not a.dur <= b.dur:
        return False
    for t in sample_times(a.ev, b.ev):
        va = a.ev(t)
        if is_defined(va) and b.ev(t) != va:
            return False
    if a.dur != INF and is_defined(a.ev(a.dur)) and a.dur != b.dur:
        return False
    return True


class OrderResult(str, Enum):
    LESS = "less"
    EQUAL = "equal"
    GREATER = "greater"
    INCOMPARABLE = "incomparable"


def compare(a: Traj, b: Traj) -> OrderResult:
    below, above = leq(a, b), leq(b, a)
    if below and above:
        return OrderResult.EQUAL
    if below:
        return OrderResult.LESS
    if above:
        return OrderResult.GREATER
    return OrderResult.INCOMPARABLE


class ChainViolation(ValueError):
    """Raised when a purported chain is not increasing."""

    def __init__(self, index: int):
        super().__init__(f"chain element {index} is not below element {index + 1}")
        self.index = index


@dataclass(frozen=True)
class NotStabilized:
    last: Traj
    length: int


def join_chain(chain: Iterable[Traj], budget: Optional[int] = None) -> Union[Traj, NotStabilized]:
    """Least upper bound of an increasing chain that becomes constant.

    A chain that ends within ``budget`` elements is joined exactly (its last
    element). When the budget cuts an unending chain short, the chain counts
    as stabilised only if its last two elements coincide.
    """
    prev = None
    last_equal = False
    count = 0
    for item in chain:
        if prev is not None:
            if not leq(prev, item):
                raise ChainViolation(count - 1)
            last_equal = item == prev
        prev = item
        count += 1
        if budget is not None and count >= budget:
            return prev if last_equal else NotStabilized(prev, count)
    if prev is None:
        raise ValueError("empty chain")
    return prev
