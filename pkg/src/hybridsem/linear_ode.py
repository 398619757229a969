"""Affine terms, guards and predicates over real vectors, closed-form flows of
linear ODE systems, and least-crossing-time detection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import scipy.linalg

Vector = np.ndarray

DEFAULT_SCAN_STEP = 1e-3
DEFAULT_EVENT_TOL = 1e-9
DEFAULT_HORIZON = 1e6
# Bisection also stops once the bracket is this small relative to its right end,
# so that very short crossings (late bounces of a ball) keep full precision.
REL_EVENT_TOL = 1e-9


@dataclass(frozen=True)
class LinTerm:
    """``coeffs . x + const``."""

    coeffs: tuple
    const: float = 0.0

    @classmethod
    def constant(cls, n: int, value: float) -> "LinTerm":
        return cls((0.0,) * n, float(value))

    @classmethod
    def var(cls, n: int, index: int, scale: float = 1.0) -> "LinTerm":
        c = [0.0] * n
        c[index] = float(scale)
        return cls(tuple(c), 0.0)

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    @property
    def is_constant(self) -> bool:
        return not any(self.coeffs)

    def __add__(self, other: "LinTerm") -> "LinTerm":
        _same_dim(self, other)
        return LinTerm(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)), self.const + other.const)

    def __sub__(self, other: "LinTerm") -> "LinTerm":
        return self + other.scale(-1.0)

    def __neg__(self) -> "LinTerm":
        return self.scale(-1.0)

    def scale(self, r: float) -> "LinTerm":
        return LinTerm(tuple(r * a for a in self.coeffs), r * self.const)

    def eval(self, x: Sequence[float]) -> float:
        if len(x) != self.dim:
            raise ValueError(f"term over {self.dim} variables applied to a {len(x)}-vector")
        return float(sum(a * v for a, v in zip(self.coeffs, x)) + self.const)

    def eval_many(self, xs: np.ndarray) -> np.ndarray:
        return xs @ np.asarray(self.coeffs, dtype=float) + self.const


def _same_dim(a: LinTerm, b: LinTerm) -> None:
    if a.dim != b.dim:
        raise ValueError(f"terms over {a.dim} and {b.dim} variables")


_OPS = ("<=", ">=", "<", ">", "=", "!=")


@dataclass(frozen=True)
class Atom:
    lhs: LinTerm
    op: str
    rhs: LinTerm

    def __post_init__(self):
        if self.op not in _OPS:
            raise ValueError(f"unknown comparison {self.op!r}")
        _same_dim(self.lhs, self.rhs)

    def diff(self) -> LinTerm:
        return self.lhs - self.rhs


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class BoolConst:
    value: bool


Formula = Union[Atom, And, Or, Not, BoolConst]

TRUE = BoolConst(True)
FALSE = BoolConst(False)


def _cmp(op: str, a, b):
    if op == "<=":
        return a <= b
    if op == ">=":
        return a >= b
    if op == "<":
        return a < b
    if op == ">":
        return a > b
    if op == "=":
        return a == b
    return a != b


def eval_term(t: LinTerm, x: Sequence[float]) -> float:
    return t.eval(x)


def eval_guard(g: Formula, x: Sequence[float]) -> bool:
    """Exact evaluation on floats; equality means bitwise equal values."""
    if isinstance(g, Atom):
        return bool(_cmp(g.op, g.lhs.eval(x), g.rhs.eval(x)))
    if isinstance(g, And):
        return eval_guard(g.left, x) and eval_guard(g.right, x)
    if isinstance(g, Or):
        return eval_guard(g.left, x) or eval_guard(g.right, x)
    if isinstance(g, Not):
        return not eval_guard(g.arg, x)
    if isinstance(g, BoolConst):
        return g.value
    raise TypeError(f"not a formula: {g!r}")


eval_pred = eval_guard


def eval_many(g: Formula, xs: np.ndarray) -> np.ndarray:
    """Vectorised :func:`eval_guard` over the rows of ``xs``."""
    if isinstance(g, Atom):
        return _cmp(g.op, g.lhs.eval_many(xs), g.rhs.eval_many(xs))
    if isinstance(g, And):
        return eval_many(g.left, xs) & eval_many(g.right, xs)
    if isinstance(g, Or):
        return eval_many(g.left, xs) | eval_many(g.right, xs)
    if isinstance(g, Not):
        return ~eval_many(g.arg, xs)
    if isinstance(g, BoolConst):
        return np.full(len(xs), g.value)
    raise TypeError(f"not a formula: {g!r}")


def is_closed_predicate(g: Formula) -> bool:
    """Whether ``g`` uses only non-strict inequalities, conjunction and
    disjunction, so that its satisfaction set is closed."""
    if isinstance(g, Atom):
        return g.op in ("<=", ">=")
    if isinstance(g, (And, Or)):
        return is_closed_predicate(g.left) and is_closed_predicate(g.right)
    return False


def atoms(g: Formula) -> list:
    if isinstance(g, Atom):
        return [g]
    if isinstance(g, (And, Or)):
        return atoms(g.left) + atoms(g.right)
    if isinstance(g, Not):
        return atoms(g.arg)
    return []


@dataclass(frozen=True, eq=False)
class Dynamics:
    """``x' = A x + c``."""

    A: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        c = np.array(self.c, dtype=float)
        n = len(c)
        if A.shape != (n, n):
            raise ValueError(f"matrix of shape {A.shape} with {n}-vector")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(c))):
            raise ValueError("dynamics must have finite entries")
        A.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "c", c)

    @classmethod
    def from_terms(cls, rhs: Sequence[LinTerm]) -> "Dynamics":
        return cls(np.array([t.coeffs for t in rhs], dtype=float).reshape(len(rhs), len(rhs)), np.array([t.const for t in rhs]))

    @property
    def dim(self) -> int:
        return len(self.c)

    def key(self) -> tuple:
        return (self.A.tobytes(), self.c.tobytes(), self.dim)

    def __eq__(self, other):
        if not isinstance(other, Dynamics):
            return NotImplemented
        return np.array_equal(self.A, other.A) and np.array_equal(self.c, other.c)

    def __hash__(self):
        return hash(self.key())

    def augmented(self) -> np.ndarray:
        n = self.dim
        M = np.zeros((n + 1, n + 1))
        M[:n, :n] = self.A
        M[:n, n] = self.c
        return M

    @property
    def nilpotent_powers(self) -> Optional[tuple]:
        """``(M^0, ..., M^(k-1))`` when the augmented matrix ``M`` is nilpotent
        with ``M^k == 0``, else ``None``."""
        return _nilpotent_powers(self.key(), self.augmented())


_NILPOTENT_CACHE: dict = {}


def _nilpotent_powers(key, M: np.ndarray) -> Optional[tuple]:
    if key in _NILPOTENT_CACHE:
        return _NILPOTENT_CACHE[key]
    size = len(M)
    powers = [np.eye(size)]
    result = None
    P = np.eye(size)
    for _ in range(size):
        P = P @ M
        if not P.any():
            result = tuple(powers)
            break
        powers.append(P)
    _NILPOTENT_CACHE[key] = result
    return result


def flow_at(dyn: Dynamics, x0: Sequence[float], t: float) -> Vector:
    """State at time ``t`` of ``x' = A x + c`` from ``x0``: the first ``n``
    coordinates of ``exp(t M) (x0, 1)`` with ``M = [[A, c], [0, 0]]``."""
    x0 = np.asarray(x0, dtype=float)
    if t < 0 or not math.isfinite(t):
        raise ValueError(f"flow time must be finite and non-negative, got {t}")
    if t == 0:
        return x0.copy()
    if not dyn.A.any():
        return x0 + dyn.c * t
    z = np.append(x0, 1.0)
    powers = dyn.nilpotent_powers
    if powers is not None:
        out = np.zeros_like(z)
        coef = 1.0
        for j, P in enumerate(powers):
            if j:
                coef *= t / j
            out += coef * (P @ z)
        return out[:-1]
    return (scipy.linalg.expm(dyn.augmented() * t) @ z)[:-1]


class Flow:
    """The solution of a linear system from one initial state."""

    __slots__ = ("dyn", "x0", "_vecs")

    def __init__(self, dyn: Dynamics, x0: Sequence[float]):
        self.dyn = dyn
        self.x0 = np.array(x0, dtype=float)
        powers = dyn.nilpotent_powers
        z = np.append(self.x0, 1.0)
        self._vecs = None if powers is None else [P @ z for P in powers]

    def __call__(self, t: float) -> Vector:
        if t == 0:
            return self.x0.copy()
        if self._vecs is None:
            return flow_at(self.dyn, self.x0, t)
        out = self._vecs[0].copy()
        coef = 1.0
        for j in range(1, len(self._vecs)):
            coef *= t / j
            out += coef * self._vecs[j]
        return out[:-1]


def flow_many(dyn: Dynamics, x0: Sequence[float], ts: np.ndarray) -> np.ndarray:
    """Rows ``flow_at(dyn, x0, t)`` for ``t`` in ``ts``."""
    x0 = np.asarray(x0, dtype=float)
    ts = np.asarray(ts, dtype=float)
    if not dyn.A.any():
        return x0[None, :] + ts[:, None] * dyn.c[None, :]
    z = np.append(x0, 1.0)
    powers = dyn.nilpotent_powers
    if powers is not None:
        out = np.zeros((len(ts), len(z)))
        coef = np.ones_like(ts)
        for j, P in enumerate(powers):
            if j:
                coef = coef * ts / j
            out += coef[:, None] * (P @ z)[None, :]
        return out[:, :-1]
    return np.array([flow_at(dyn, x0, float(t)) for t in ts])


def _polynomial_candidates(dyn: Dynamics, x0: Vector, psi: Formula, horizon: float) -> Optional[list]:
    """Real roots in ``(0, horizon]`` of every atom of ``psi`` along the flow,
    available when the flow is polynomial in time."""
    powers = dyn.nilpotent_powers
    if powers is None and dyn.A.any():
        return None
    z = np.append(x0, 1.0)
    if powers is None:
        vecs = [z, np.append(dyn.c, 0.0)]
    else:
        vecs = [P @ z for P in powers]
    roots = set()
    for atom in atoms(psi):
        d = atom.diff()
        ell = np.append(np.asarray(d.coeffs, dtype=float), 0.0)
        # Coefficient of t^j is ell . M^j z / j!, plus the constant at j = 0.
        coeffs = [float(ell @ v) / math.factorial(j) for j, v in enumerate(vecs)]
        coeffs[0] += d.const
        while len(coeffs) > 1 and coeffs[-1] == 0.0:
            coeffs.pop()
        if len(coeffs) < 2:
            continue
        for r in np.roots(coeffs[::-1]):
            if abs(r.imag) <= 1e-7 * max(1.0, abs(r.real)) and 0.0 < r.real <= horizon:
                roots.add(float(r.real))
    return sorted(roots)


def _bisect(dyn: Dynamics, x0: Vector, psi: Formula, lo: float, hi: float, tol: float) -> float:
    for _ in range(400):
        width = hi - lo
        if width <= tol and width <= REL_EVENT_TOL * hi:
            break
        mid = lo + width / 2
        if mid <= lo or mid >= hi:
            break
        if eval_guard(psi, flow_at(dyn, x0, mid)):
            hi = mid
        else:
            lo = mid
    return hi


_SCAN_CHUNK = 4096


def least_crossing(
    dyn: Dynamics,
    x0: Sequence[float],
    psi: Formula,
    horizon: float = DEFAULT_HORIZON,
    tol: float = DEFAULT_EVENT_TOL,
    step: float = DEFAULT_SCAN_STEP,
) -> Optional[float]:
    """Least ``t <= horizon`` at which the flow from ``x0`` satisfies ``psi``,
    to within ``tol``, or ``None`` if there is none.

    For flows polynomial in time (nilpotent augmented matrix) the truth of each
    atom can only change at a real root of its polynomial, so those roots and
    the midpoints between them are the scan points; otherwise the scan walks a
    uniform grid of width ``step``. The first bracket found is refined by
    bisection and the returned time always satisfies ``psi``. A flow that
    leaves the range of floats before crossing gives ``None``.
    """
    if tol <= 0 or step <= 0:
        raise ValueError("tolerances must be positive")
    x0 = np.asarray(x0, dtype=float)
    if eval_guard(psi, x0):
        return 0.0
    roots = _polynomial_candidates(dyn, x0, psi, horizon)
    if roots is not None:
        pts = []
        prev = 0.0
        for r in roots:
            pts.append((prev + r) / 2)
            pts.append(r)
            prev = r
        # One point past the last root, and the horizon itself.
        if roots:
            pts.append(min(roots[-1] * 2 + 1.0, horizon))
        pts.append(horizon)
        pts = sorted(p for p in set(pts) if 0 < p <= horizon)
        lo = 0.0
        for p in pts:
            if eval_guard(psi, flow_at(dyn, x0, p)):
                return _bisect(dyn, x0, psi, lo, p, tol)
            lo = p
        return None
    stack = _step_powers(dyn.key(), dyn.augmented(), step)
    z0 = np.append(x0, 1.0)
    t0 = 0.0
    while t0 < horizon:
        # Restart each chunk from the exact flow to avoid accumulating drift.
        with np.errstate(over="ignore", invalid="ignore"):
            z = z0 if t0 == 0 else scipy.linalg.expm(dyn.augmented() * t0) @ z0
            ts = t0 + step * np.arange(1, _SCAN_CHUNK + 1)
            states = (stack @ z)[:, :-1]
            keep = ts <= horizon
            sat = eval_many(psi, states[keep])
        hit = np.flatnonzero(sat)
        blown = np.flatnonzero(~np.isfinite(states[keep]).all(axis=1))
        if blown.size and (not hit.size or blown[0] < hit[0]):
            return None
        if hit.size:
            i = int(hit[0])
            hi = float(ts[i])
            lo = float(ts[i - 1]) if i > 0 else t0
            return _bisect(dyn, x0, psi, lo, hi, tol)
        if not keep.all():
            break
        t0 = float(ts[-1])
    if eval_guard(psi, flow_at(dyn, x0, horizon)):
        return _bisect(dyn, x0, psi, t0, horizon, tol)
    return None


_STEP_CACHE: dict = {}


def _step_powers(key, M: np.ndarray, step: float) -> np.ndarray:
    """``exp(k h M)`` for ``k = 1 .. _SCAN_CHUNK`` stacked along axis 0."""
    hit = _STEP_CACHE.get((key, step))
    if hit is not None:
        return hit
    phi = scipy.linalg.expm(M * step)
    out = np.empty((_SCAN_CHUNK, len(M), len(M)))
    out[0] = phi
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, _SCAN_CHUNK):
            out[k] = out[k - 1] @ phi
    if len(_STEP_CACHE) > 32:
        _STEP_CACHE.clear()
    _STEP_CACHE[(key, step)] = out
    return out
