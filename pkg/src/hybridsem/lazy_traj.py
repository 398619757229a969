"""Demand-driven numeric trajectories over real vectors.

A numeric morphism produces its trajectory from an initial state as a
generator of items: positive-length :class:`Piece` s, zero-time
:class:`Boundary` markers between loop unfoldings, and at most one
:class:`Diverge`. The generator returns the final state when the trajectory
ends. :class:`SegmentStream` consumes such a generator lazily, stamping
onsets, and answers time-indexed queries under an item budget.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, replace
from typing import Any, Callable, Generator, Iterable, Optional, Union

import numpy as np

from .core import UNDEF, is_defined
from .linear_ode import DEFAULT_EVENT_TOL, DEFAULT_HORIZON, DEFAULT_SCAN_STEP

Vector = np.ndarray


@dataclass(frozen=True)
class StreamConfig:
    budget: int = 100_000
    horizon: float = DEFAULT_HORIZON
    scan_step: float = DEFAULT_SCAN_STEP
    event_tol: float = DEFAULT_EVENT_TOL
    zeno_eps: float = 1e-12
    # Zeno is judged on three consecutive blocks of this many positive increments.
    zeno_window: int = 8
    # Consecutive zero-duration loop unfoldings after which a loop is declared
    # divergent even without a repeated state.
    div_window: int = 10_000
    # Cumulative duration beyond which a run counts as running forever.
    probe: float = 1000.0

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be at least 1")
        for name in ("horizon", "scan_step", "event_tol", "zeno_eps", "probe"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.zeno_window < 1 or self.div_window < 1:
            raise ValueError("windows must be at least 1")

    def with_(self, **kw) -> "StreamConfig":
        return replace(self, **kw)


DEFAULT_CONFIG = StreamConfig()


@dataclass(frozen=True)
class Piece:
    """A stretch of trajectory of positive (possibly infinite) length.

    ``evaluate`` maps local time in ``[0, length)`` to a state or ``UNDEF``.
    ``caveat`` marks an infinite length that only reflects a finite search
    horizon.
    """

    length: float
    evaluate: Callable[[float], Any]
    caveat: bool = False


@dataclass(frozen=True)
class Boundary:
    """End of one loop unfolding; ``state`` is passed to the next."""

    state: Vector


@dataclass(frozen=True)
class Diverge:
    """Zero-time divergence at the current time."""

    evidence: str


Item = Union[Piece, Boundary, Diverge]
Run = Generator[Item, None, Optional[Vector]]


class NumericMorphism:
    """A map from states to lazily produced trajectories."""

    def run(self, x: Vector) -> Run:
        raise NotImplementedError

    def at0(self, x: Vector) -> Any:
        """The value at time 0 of the trajectory from ``x`` (``UNDEF`` if it
        diverges there)."""
        gen = self.run(x)
        try:
            while True:
                item = next(gen)
                if isinstance(item, Piece):
                    return item.evaluate(0.0)
                if isinstance(item, Diverge):
                    return UNDEF
        except StopIteration as stop:
            return UNDEF if stop.value is None else stop.value
        finally:
            gen.close()

    def __call__(self, x: Iterable[float], config: StreamConfig = DEFAULT_CONFIG) -> "SegmentStream":
        return SegmentStream(self, np.array(list(x), dtype=float), config)


# ---------------------------------------------------------------- answers


@dataclass(frozen=True)
class Defined:
    value: Vector

    def __eq__(self, other):
        return isinstance(other, Defined) and np.array_equal(self.value, other.value)


@dataclass(frozen=True)
class UndefinedDiverged:
    at: float


@dataclass(frozen=True)
class UndefinedZeno:
    sup_estimate: float


@dataclass(frozen=True)
class BudgetExhausted:
    duration_lower_bound: float


QueryResult = Union[Defined, UndefinedDiverged, UndefinedZeno, BudgetExhausted]


@dataclass(frozen=True)
class Exact:
    value: float


@dataclass(frozen=True)
class ZenoEstimate:
    value: float
    last_increment: float


@dataclass(frozen=True)
class LowerBound:
    value: float


@dataclass(frozen=True)
class Terminates:
    duration: float
    final: Vector


@dataclass(frozen=True)
class DivergesAt:
    at: float
    evidence: str


@dataclass(frozen=True)
class Zeno:
    sup_estimate: float
    last_increment: float


@dataclass(frozen=True)
class InfiniteRun:
    probe: float
    caveat: bool = False


@dataclass(frozen=True)
class Unknown:
    lower_bound: float


Classification = Union[Terminates, DivergesAt, Zeno, InfiniteRun, Unknown]


@dataclass(frozen=True)
class Segment:
    onset: float
    length: float
    evaluate: Callable[[float], Any]


RUNNING, EXITED, DIVERGED, ZENO, ENDLESS = "running", "exited", "diverged", "zeno", "endless"


class SegmentStream:
    """Cursor over the trajectory of one morphism from one initial state.

    Items are pulled from the producer only as far as queries need. Answers
    that are ``Defined`` never change when the budget grows.
    """

    def __init__(self, morphism: NumericMorphism, x0: Vector, config: StreamConfig = DEFAULT_CONFIG):
        self.config = config
        self.x0 = x0
        self._gen = morphism.run(x0)
        self.segments: list[Segment] = []
        self._onsets: list[float] = []
        self.cum = 0.0
        self.items = 0
        self.unfoldings = 0
        self.status = RUNNING
        self.final: Optional[Vector] = None
        self.diverged_at: Optional[float] = None
        self.evidence = ""
        self.zeno_sup: Optional[float] = None
        self.last_increment = 0.0
        self.caveat = False
        self._incs: list[float] = []

    # -- production

    def _pull(self) -> bool:
        """Materialise one more item; ``False`` once the stream has settled."""
        if self.status != RUNNING:
            return False
        self.items += 1
        try:
            item = next(self._gen)
        except StopIteration as stop:
            self.status = EXITED
            self.final = stop.value
            return False
        if isinstance(item, Boundary):
            self.unfoldings += 1
        elif isinstance(item, Diverge):
            self._diverge(self.cum, item.evidence)
        elif isinstance(item, Piece):
            self._add_piece(item)
        return self.status == RUNNING

    def _diverge(self, at: float, evidence: str) -> None:
        self.status = DIVERGED
        self.diverged_at = at
        self.evidence = evidence
        self._gen.close()

    def _add_piece(self, piece: Piece) -> None:
        if not is_defined(piece.evaluate(0.0)):
            self._diverge(self.cum, "undefined-onset")
            return
        self.segments.append(Segment(self.cum, piece.length, piece.evaluate))
        self._onsets.append(self.cum)
        self.last_increment = piece.length
        if piece.length == math.inf:
            self.cum = math.inf
            self.status = ENDLESS
            self.caveat = piece.caveat
            self._gen.close()
            return
        self.cum += piece.length
        self._note_increment(piece.length)

    def _note_increment(self, inc: float) -> None:
        W = self.config.zeno_window
        incs = self._incs
        incs.append(inc)
        if len(incs) > 3 * W:
            del incs[0]
        if len(incs) < 3 * W:
            return
        a0, a1, b = sum(incs[:W]), sum(incs[W:2 * W]), sum(incs[2 * W:])
        if not (b < a1 < a0):
            return
        ratio = max(a1 / a0, b / a1)
        tail = b * ratio / (1.0 - ratio)
        if tail <= self.config.zeno_eps:
            self.status = ZENO
            self.zeno_sup = self.cum + tail
            self._gen.close()

    def _within_budget(self, budget: Optional[int]) -> bool:
        return self.items < (self.config.budget if budget is None else budget)

    # -- queries

    def at(self, t: float, budget: Optional[int] = None) -> QueryResult:
        if t < 0 or not math.isfinite(t):
            raise ValueError(f"query time must be finite and non-negative, got {t}")
        while True:
            if t < self.cum:
                i = bisect.bisect_right(self._onsets, t) - 1
                seg = self.segments[i]
                v = seg.evaluate(t - seg.onset)
                if not is_defined(v):
                    return UndefinedDiverged(t)
                return Defined(np.asarray(v, dtype=float))
            if self.status == EXITED:
                return Defined(np.asarray(self.final, dtype=float))
            if self.status == DIVERGED:
                return UndefinedDiverged(self.diverged_at)
            if self.status == ZENO:
                return UndefinedZeno(self.zeno_sup)
            if not self._within_budget(budget):
                return BudgetExhausted(self.cum)
            self._pull()

    def sample(self, grid: Iterable[float], budget: Optional[int] = None) -> list:
        return [(t, self.at(t, budget)) for t in grid]

    def _settle(self, budget: Optional[int], probe: Optional[float] = None) -> None:
        while self.status == RUNNING and self._within_budget(budget):
            if probe is not None and self.cum > probe:
                return
            self._pull()

    def duration(self, budget: Optional[int] = None) -> Union[Exact, ZenoEstimate, LowerBound]:
        self._settle(budget)
        if self.status == EXITED:
            return Exact(self.cum)
        if self.status in (DIVERGED, ENDLESS):
            return Exact(math.inf)
        if self.status == ZENO:
            return ZenoEstimate(self.zeno_sup, self.last_increment)
        return LowerBound(self.cum)

    def classify(self, budget: Optional[int] = None, probe: Optional[float] = None) -> Classification:
        probe = self.config.probe if probe is None else probe
        self._settle(budget, probe)
        if self.status == EXITED:
            return Terminates(self.cum, self.final)
        if self.status == DIVERGED:
            return DivergesAt(self.diverged_at, self.evidence)
        if self.status == ZENO:
            return Zeno(self.zeno_sup, self.last_increment)
        if self.status == ENDLESS:
            return InfiniteRun(probe, self.caveat)
        if self.cum > probe:
            return InfiniteRun(probe)
        return Unknown(self.cum)


class BasicIteration(NumericMorphism):
    """Numeric basic iteration of ``x |-> (d(x), t |-> e(x, t))``.

    From ``x`` the trajectory follows ``e(x, .)`` for ``d(x)`` time units,
    showing at each inner time ``s > 0`` the restart value ``e(e(x, s), 0)``,
    and then starts over from ``e(x, d(x))``. A zero duration ends the
    trajectory at ``e(x, 0)``.
    """

    def __init__(self, d: Callable[[Vector], float], e: Callable[[Vector, float], Vector]):
        self.d = d
        self.e = e

    def run(self, x: Vector) -> Run:
        e = self.e
        while True:
            dur = float(self.d(x))
            if dur == 0:
                return np.asarray(e(x, 0.0), dtype=float)

            def ev(s, x=x):
                if s == 0:
                    return np.asarray(e(x, 0.0), dtype=float)
                return np.asarray(e(e(x, s), 0.0), dtype=float)

            yield Piece(dur, ev)
            if dur == math.inf:
                return None
            x = np.asarray(e(x, dur), dtype=float)
            yield Boundary(x)
