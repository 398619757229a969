"""Executable law suites with a small shrinking property-test harness.

Each law draws a random finite instance, computes both sides independently,
and compares them exactly. A failing instance is shrunk greedily (fewer
breakpoints, shorter durations, fewer distinct values) before it is
reported.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterator, Optional

from .core import (
    INF,
    UNDEF,
    Inl,
    Inr,
    Space,
    StepEvolution,
    Traj,
    bottom,
    check_membership,
    compare,
    iota,
    is_member,
    join_chain,
    leq,
    OrderResult,
    rho,
    sample_times,
    unit,
    upsilon,
)
from .generators import GRID, Gen
from .iteration import (
    Exact,
    NotProgressive,
    hat,
    is_guarded,
    is_progressive,
    iter_h,
    iter_h0m,
    iter_hplus,
)
from .kleisli import (
    KleisliMorphism,
    bind,
    bind_h,
    bind_h0m,
    bind_h_via_h0m,
    bind_hplus,
    cotuple,
    fmap,
    fmap_morphism,
    unit_of,
)


class Precondition(Exception):
    """The instance does not meet the law's hypotheses."""


@dataclass(frozen=True)
class Law:
    name: str
    generate: Callable[[Gen], dict]
    check: Callable[[dict], Optional[str]]
    doc: str = ""


@dataclass
class Failure:
    case: int
    message: str
    instance: str


@dataclass
class LawReport:
    law: str
    cases: int
    seed: int
    failures: list = field(default_factory=list)
    skipped: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> dict:
        return {
            "law": self.law,
            "cases": self.cases,
            "failures": len(self.failures),
            "skipped": self.skipped,
            "seed": self.seed,
        }

    def text(self) -> str:
        head = f"{self.law}: {self.cases} cases, {len(self.failures)} failures, {self.skipped} skipped (seed {self.seed})"
        lines = [head]
        for f in self.failures:
            lines.append(f"  case {f.case}: {f.message}")
            lines.extend("    " + ln for ln in f.instance.splitlines())
        return "\n".join(lines)


# ---------------------------------------------------------------- comparison


def same(a: Traj, b: Traj) -> bool:
    return a.dur == b.dur and a.ev == b.ev


def _answer_traj(ans) -> Traj:
    if not isinstance(ans, Exact):
        raise Precondition("iterate did not stabilise")
    return ans.traj


def iterate_table(result, domain) -> dict:
    return {x: _answer_traj(result(x)) for x in domain}


def _diff(label: str, x: Any, lhs: Traj, rhs: Traj) -> Optional[str]:
    if same(lhs, rhs):
        return None
    return f"{label} at {x!r}: {lhs.render()}  vs  {rhs.render()}"


def _first(*msgs: Optional[str]) -> Optional[str]:
    for m in msgs:
        if m:
            return m
    return None


def _member(label: str, t: Traj, space: Space) -> Optional[str]:
    v = check_membership(t, space)
    return None if v is None else f"{label} not in {Space(space).value}: {v}"


# ---------------------------------------------------------------- monad laws


def _monad_laws(space: Space) -> list:
    s = Space(space)
    b = lambda f, m: bind(f, m, s)  # noqa: E731

    def gen_left(g: Gen):
        X, Y = g.carrier(), g.carrier("y")
        return {"f": g.morphism(s, X, lambda x: Y), "X": X}

    def left(c):
        f = c["f"]
        for x in c["X"]:
            m = _diff("left unit", x, b(f, unit(x, s)), f(x))
            if m:
                return m
        return None

    def gen_right(g: Gen):
        return {"m": g.traj(s, g.carrier())}

    def right(c):
        m = c["m"]
        out = b(unit_of(s), m)
        return _first(_diff("right unit", "m", out, m), _member("result", out, s))

    def gen_assoc(g: Gen):
        X, Y, Z = g.carrier(), g.carrier("y"), g.carrier("z")
        return {
            "m": g.traj(s, X),
            "f": g.morphism(s, X, lambda x: Y),
            "g": g.morphism(s, Y, lambda y: Z),
        }

    def assoc(c):
        m, f, gg = c["m"], c["f"], c["g"]
        lhs = b(gg, b(f, m))
        rhs = b(lambda x: b(gg, f(x)), m)
        return _first(_diff("associativity", "m", lhs, rhs), _member("bind", b(f, m), s))

    tag = s.value.replace("+", "plus").lower()
    return [
        Law(f"monad-{tag}-left-unit", gen_left, left),
        Law(f"monad-{tag}-right-unit", gen_right, right),
        Law(f"monad-{tag}-assoc", gen_assoc, assoc),
    ]


def _gen_bind_h(g: Gen):
    X, Y = g.carrier(), g.carrier("y")
    return {"m": g.traj(Space.H, X), "f": g.morphism(Space.H, X, lambda x: Y)}


def _check_bind_h_oracle(c):
    m, f = c["m"], c["f"]
    direct = bind_h(f, m)
    return _first(_diff("bind in H vs cut-back H0M bind", "m", direct, bind_h_via_h0m(f, m)), _member("bind", direct, Space.H))


def _gen_rho_morphism(g: Gen):
    X, Y = g.carrier(), g.carrier("y")
    return {"m": g.traj(Space.H0M, X), "f": g.morphism(Space.H0M, X, lambda x: Y)}


def _check_rho_morphism(c):
    m, f = c["m"], c["f"]
    lhs = rho(bind_h0m(f, m))
    rhs = bind_h(lambda x: rho(f(x)), rho(m))
    return _diff("rho after bind vs bind after rho", "m", lhs, rhs)


# ---------------------------------------------------------------- order


def _gen_order(g: Gen):
    X = g.carrier()
    a = g.traj(Space.H0M, X)
    b = g.above(a, X)
    c = g.above(b, X)
    return {"a": a, "b": b, "c": c, "d": g.traj(Space.H0M, X)}


def _check_order(c):
    items = [c["a"], c["b"], c["c"], c["d"]]
    if not (leq(items[0], items[1]) and leq(items[1], items[2])):
        raise Precondition("generated chain is not increasing")
    bot = bottom()
    for i, p in enumerate(items):
        if not leq(p, p):
            return f"reflexivity fails for item {i}"
        if not leq(bot, p):
            return f"bottom is not below item {i}"
        for j, q in enumerate(items):
            if leq(p, q) and leq(q, p) and not same(p, q):
                return f"antisymmetry fails for items {i}, {j}"
            r = compare(p, q)
            if (r is OrderResult.EQUAL) != same(p, q):
                return f"compare inconsistent for items {i}, {j}"
            for k, w in enumerate(items):
                if leq(p, q) and leq(q, w) and not leq(p, w):
                    return f"transitivity fails for items {i}, {j}, {k}"
    return None


def _gen_mono(g: Gen):
    X, Y = g.carrier(), g.carrier("y")
    m = g.traj(Space.H0M, X)
    f = g.morphism(Space.H0M, X, lambda x: Y)
    f2 = KleisliMorphism({x: g.above(f(x), Y) for x in X}, Space.H0M)
    return {"m": m, "m2": g.above(m, X), "f": f, "f2": f2, "X": X}


def _check_mono(c):
    m, m2, f, f2 = c["m"], c["m2"], c["f"], c["f2"]
    if not leq(m, m2) or not all(leq(f(x), f2(x)) for x in c["X"]):
        raise Precondition("arguments not ordered")
    if not leq(bind_h0m(f, m), bind_h0m(f, m2)):
        return "bind is not monotone in its trajectory argument"
    if not leq(bind_h0m(f, m), bind_h0m(f2, m)):
        return "bind is not monotone in its morphism argument"
    return None


def _gen_cont(g: Gen):
    X, Y = g.carrier(), g.carrier("y")
    m0 = g.traj(Space.H0M, X)
    m1 = g.above(m0, X)
    m2 = g.above(m1, X)
    f0 = g.morphism(Space.H0M, X, lambda x: Y)
    f1 = KleisliMorphism({x: g.above(f0(x), Y) for x in X}, Space.H0M)
    f2 = KleisliMorphism({x: g.above(f1(x), Y) for x in X}, Space.H0M)
    return {"ms": (m0, m1, m2), "fs": (f0, f1, f2), "X": X}


def _check_cont(c):
    ms, fs = c["ms"], c["fs"]
    if not all(leq(a, b) for a, b in zip(ms, ms[1:])):
        raise Precondition("trajectories not increasing")
    if not all(leq(a(x), b(x)) for a, b in zip(fs, fs[1:]) for x in c["X"]):
        raise Precondition("morphisms not increasing")
    chain = [*ms, ms[-1]]
    top = join_chain(iter(chain))
    if not isinstance(top, Traj):
        raise Precondition("chain did not stabilise")
    f = fs[0]
    images = [bind_h0m(f, m) for m in chain]
    lhs = join_chain(iter(images))
    m = _diff("continuity in the trajectory", "chain", lhs, bind_h0m(f, top))
    if m:
        return m
    mm = ms[0]
    fchain = [*fs, fs[-1]]
    images = [bind_h0m(h, mm) for h in fchain]
    return _diff("continuity in the morphism", "chain", join_chain(iter(images)), bind_h0m(fs[-1], mm))


def _gen_strict(g: Gen):
    X, Y = g.carrier(), g.carrier("y")
    return {"f": g.morphism(Space.H0M, X, lambda x: Y)}


def _check_strict(c):
    return _diff("right strictness", "bottom", bind_h0m(c["f"], bottom()), bottom())


# ---------------------------------------------------------------- iteration


def _cont_h(F: dict) -> Callable:
    return cotuple(lambda y: unit(y, Space.H), lambda x: F[x])


def _gen_loop(space: Space, progressive: bool = False):
    def gen(g: Gen):
        X, Y = g.carrier(), g.carrier("y")
        return {"f": g.loop_morphism(space, X, Y, progressive), "X": X, "Y": Y}

    return gen


def _check_fixpoint(c):
    f, X = c["f"], c["X"]
    F = iterate_table(iter_h(f), X)
    for x in X:
        m = _diff("fixpoint", x, F[x], bind_h(_cont_h(F), f(x)))
        if m:
            return m
    return None


def _gen_naturality(g: Gen):
    X, Y, Z = g.carrier(), g.carrier("y"), g.carrier("z")
    return {"f": g.loop_morphism(Space.H, X, Y), "g": g.morphism(Space.H, Y, lambda y: Z), "X": X}


def _check_naturality(c):
    f, gg, X = c["f"], c["g"], c["X"]
    F = iterate_table(iter_h(f), X)
    lhs = {x: bind_h(gg, F[x]) for x in X}
    k = cotuple(lambda y: fmap(Inl, gg(y)), lambda x: unit(Inr(x), Space.H))
    h = KleisliMorphism({x: bind_h(k, f(x)) for x in X}, Space.H)
    rhs = iterate_table(iter_h(h), X)
    for x in X:
        m = _diff("naturality", x, lhs[x], rhs[x])
        if m:
            return m
    return None


def _gen_codiagonal(g: Gen):
    X, Y = g.carrier(), g.carrier("y")
    rank = g.ranks(X)
    pool = g.loop_pool(rank, [Inl(Inl(y)) for y in Y], lambda x: [Inl(Inr(x)), Inr(x)])
    return {"f": g.morphism(Space.H, X, pool), "X": X}


def _merge(v):
    return v.value if isinstance(v, Inl) else v


def _check_codiagonal(c):
    f, X = c["f"], c["X"]
    lhs = iterate_table(iter_h(fmap_morphism(_merge, f)), X)
    inner = KleisliMorphism(iterate_table(iter_h(f), X), Space.H)
    rhs = iterate_table(iter_h(inner), X)
    for x in X:
        m = _diff("codiagonal", x, lhs[x], rhs[x])
        if m:
            return m
    return None


def _gen_uniformity(g: Gen):
    rng = g.rng
    X, Y = g.carrier(), g.carrier("y")
    f = g.loop_morphism(Space.H, X, Y)
    extra = rng.randint(0, 4 - len(X)) if len(X) < 4 else 0
    Z = [f"z{i}" for i in range(len(X) + extra)]
    # A surjection from Z onto X: the first |X| elements hit X in order.
    h = {z: (X[i] if i < len(X) else rng.choice(X)) for i, z in enumerate(Z)}
    fibres = {x: [z for z in Z if h[z] == x] for x in X}
    sections = {z: {x: rng.choice(fibres[x]) for x in X} for z in Z}
    return {"f": f, "h": h, "sections": sections, "X": X}


def _check_uniformity(c):
    f, h, sections = c["f"], c["h"], c["sections"]
    Z = list(h)
    g = KleisliMorphism(
        {z: fmap(lambda v, s=sections[z]: Inr(s[v.value]) if isinstance(v, Inr) else v, f(h[z])) for z in Z},
        Space.H,
    )
    # Premise: f . h = H(id + h) . g.
    for z in Z:
        back = fmap(lambda v: Inr(h[v.value]) if isinstance(v, Inr) else v, g(z))
        if not same(back, f(h[z])):
            raise Precondition("uniformity premise fails")
    F = iterate_table(iter_h(f), c["X"])
    G = iterate_table(iter_h(g), Z)
    for z in Z:
        m = _diff("uniformity", z, F[h[z]], G[z])
        if m:
            return m
    return None


# ---------------------------------------------------------------- guardedness


def _left_tagged(v) -> bool:
    return isinstance(v, Inl)


def _gen_trv(g: Gen):
    X, Y = g.carrier(), g.carrier("y")
    return {"f": g.morphism(Space.HPLUS, X, lambda x: Y)}


def _check_trv(c):
    k = fmap_morphism(Inl, c["f"])
    if not is_progressive(k):
        return "post-composition with the left injection is not progressive"
    bad = k.validate()
    return None if bad is None else f"output left H+ at {bad[0]!r}: {bad[1]}"


def _progressive_into(g: Gen, X, V, W) -> KleisliMorphism:
    pool = [Inl(v) for v in V] + [Inr(w) for w in W]
    return g.morphism(Space.HPLUS, X, lambda x: pool, lambda x: Inl(g.rng.choice(V)))


def _gen_sum(g: Gen):
    X1, X2, V, W = g.carrier("a", hi=2), g.carrier("b", hi=2), g.carrier("v", hi=3), g.carrier("w", hi=3)
    return {"f": _progressive_into(g, X1, V, W), "g": _progressive_into(g, X2, V, W)}


def _check_sum(c):
    f, gg = c["f"], c["g"]
    if not (is_progressive(f) and is_progressive(gg)):
        raise Precondition("summands not progressive")
    table = {Inl(x): f(x) for x in f.domain}
    table.update({Inr(x): gg(x) for x in gg.domain})
    return None if is_progressive(KleisliMorphism(table, Space.HPLUS)) else "cotuple is not progressive"


def _gen_cmp(g: Gen):
    X, Y, Z = g.carrier(), g.carrier("y"), g.carrier("z")
    V, W = g.carrier("v", hi=3), g.carrier("w", hi=3)
    f = g.morphism(
        Space.HPLUS, X, lambda x: [Inl(y) for y in Y] + [Inr(z) for z in Z], lambda x: Inl(g.rng.choice(Y))
    )
    pool = [Inl(v) for v in V] + [Inr(w) for w in W]
    return {"f": f, "g": _progressive_into(g, Y, V, W), "h": g.morphism(Space.HPLUS, Z, lambda z: pool)}


def _check_cmp(c):
    f, gg, h = c["f"], c["g"], c["h"]
    if not (is_progressive(f) and is_progressive(gg)):
        raise Precondition("premises not progressive")
    k = KleisliMorphism({x: bind_hplus(cotuple(gg, h), f(x)) for x in f.domain}, Space.HPLUS)
    if not is_progressive(k):
        return "composite is not progressive"
    bad = k.validate()
    return None if bad is None else f"composite left H+ at {bad[0]!r}: {bad[1]}"


def swap_instance() -> KleisliMorphism:
    """Zero-duration morphism on {0, 1} that immediately loops back to the
    other input."""
    return KleisliMorphism({x: Traj(0, StepEvolution.const(Inr(1 - x)), Space.HPLUS) for x in (0, 1)}, Space.HPLUS)


# ---------------------------------------------------------------- retraction and friends


def _gen_retraction(g: Gen):
    X, Y = g.carrier(), g.carrier("y")
    return {"f": g.loop_morphism(Space.H0M, X, Y), "X": X}


def _check_retraction(c):
    f, X = c["f"], c["X"]
    lhs = iterate_table(iter_h0m(f), X)
    f2 = KleisliMorphism({x: upsilon(rho(f(x))) for x in X}, Space.H0M)
    rhs = iterate_table(iter_h0m(f2), X)
    for x in X:
        m = _diff("retraction", x, rho(lhs[x]), rho(rhs[x]))
        if m:
            return m
    return None


def gap_loop_instance() -> KleisliMorphism:
    """One input; one time unit that is a loop-back at time 0 and an exit with
    value 1 at every later time."""
    ev = StepEvolution([Fraction(0)], [Inr(0)], [Inl(1)])
    return KleisliMorphism({0: Traj(1, ev, Space.H0M)}, Space.H0M)


def embedding_witness() -> tuple:
    """``(f, m)`` where cutting back after the H0M bind differs from binding
    the embedded arguments: ``f(0)`` is the empty trajectory, ``f(v)`` for
    ``v > 0`` waits one time unit at 1, and ``m`` runs forever moving off 0
    immediately."""

    def f(v):
        if v == 0:
            return Traj(INF, StepEvolution.const(UNDEF), Space.H)
        return Traj(1, StepEvolution.const(Fraction(1)), Space.H)

    m = Traj(INF, StepEvolution([Fraction(0)], [Fraction(0)], [Fraction(1)]), Space.H)
    return f, m


def check_embedding_witness() -> Optional[str]:
    f, m = embedding_witness()
    via_h0m = bind_h0m(lambda v: upsilon(f(v)), upsilon(m))
    if is_member(via_h0m, Space.H):
        return "embedded H0M bind unexpectedly lands in H"
    direct = bind_h(f, m)
    if not is_member(direct, Space.H):
        return "bind in H leaves H"
    if same(upsilon(direct), via_h0m):
        return "embedding commutes with bind on the witness"
    if not same(rho(via_h0m), bind_h(lambda v: rho(upsilon(f(v))), rho(upsilon(m)))):
        return "cut-back does not commute with bind on the witness"
    return None


def check_gap_loop() -> Optional[str]:
    f = gap_loop_instance()
    ans = iter_h0m(f)(0)
    expected = Traj(1, StepEvolution([Fraction(0)], [UNDEF], [Fraction(1)]), Space.H0M)
    if not isinstance(ans, Exact) or not same(ans.traj, expected):
        return f"unexpected iterate {ans!r}"
    if is_member(ans.traj.retag(Space.H), Space.H):
        return "iterate should not lie in H"
    lhs = rho(ans.traj)
    f2 = KleisliMorphism({0: upsilon(rho(f(0)))}, Space.H0M)
    rhs = rho(_answer_traj(iter_h0m(f2)(0)))
    return _diff("retraction", 0, lhs, rhs)


def _gen_restriction(g: Gen):
    X, Y = g.carrier(), g.carrier("y")
    return {"f": g.loop_morphism(Space.HPLUS, X, Y, progressive=True), "X": X}


def _check_restriction(c):
    f, X = c["f"], c["X"]
    if not is_progressive(f):
        raise Precondition("not progressive")
    lhs = iterate_table(iter_hplus(f), X)
    k = KleisliMorphism({x: rho(iota(f(x))) for x in X}, Space.H)
    rhs = iterate_table(iter_h(k), X)
    for x in X:
        m = _first(_member("progressive iterate", lhs[x], Space.HPLUS), _diff("restriction", x, rho(iota(lhs[x])), rhs[x]))
        if m:
            return m
    return None


def _check_decomposition(c):
    f, X = c["f"], c["X"]
    fh = hat(f)
    for x in X:
        m = _diff("merge after split", x, fmap(_merge, fh(x)), f(x))
        if m:
            return m
    if not is_guarded(fh, lambda v: isinstance(v, Inl) and isinstance(v.value, Inr)):
        return "split morphism loops back to the inner input at time 0"
    direct = iterate_table(iter_h(f), X)
    inner = KleisliMorphism(iterate_table(iter_h(fh), X), Space.H)
    outer = iterate_table(iter_h(inner), X)
    for x in X:
        m = _diff("decomposition", x, direct[x], outer[x])
        if m:
            return m
    if all(is_member(inner(x), Space.HPLUS) for x in X) and is_progressive(inner):
        plus = KleisliMorphism({x: inner(x).retag(Space.HPLUS) for x in X}, Space.HPLUS)
        prog = iterate_table(iter_hplus(plus), X)
        for x in X:
            m = _diff("decomposition through progressive iteration", x, direct[x], rho(iota(prog[x])))
            if m:
                return m
    return None


# ---------------------------------------------------------------- registry


def _all_laws() -> dict:
    laws = []
    for s in (Space.H0, Space.H0M, Space.HPLUS, Space.H):
        laws.extend(_monad_laws(s))
    laws += [
        Law("bind-h-oracle", _gen_bind_h, _check_bind_h_oracle),
        Law("rho-morphism", _gen_rho_morphism, _check_rho_morphism),
        Law("order-partial", _gen_order, _check_order),
        Law("order-monotone", _gen_mono, _check_mono),
        Law("order-continuous", _gen_cont, _check_cont),
        Law("order-right-strict", _gen_strict, _check_strict),
        Law("fixpoint", _gen_loop(Space.H), _check_fixpoint),
        Law("naturality", _gen_naturality, _check_naturality),
        Law("codiagonal", _gen_codiagonal, _check_codiagonal),
        Law("uniformity", _gen_uniformity, _check_uniformity),
        Law("guard-trv", _gen_trv, _check_trv),
        Law("guard-sum", _gen_sum, _check_sum),
        Law("guard-cmp", _gen_cmp, _check_cmp),
        Law("retraction", _gen_retraction, _check_retraction),
        Law("restriction", _gen_restriction, _check_restriction),
        Law("decomposition", _gen_loop(Space.H), _check_decomposition),
    ]
    return {law.name: law for law in laws}


LAWS = _all_laws()

SUITES = {
    "monad": [n for n in LAWS if n.startswith("monad-")],
    "order": ["order-partial", "order-monotone", "order-continuous", "order-right-strict"],
    "iteration": ["fixpoint", "naturality", "codiagonal", "uniformity"],
    "fixpoint": ["fixpoint"],
    "naturality": ["naturality"],
    "codiagonal": ["codiagonal"],
    "uniformity": ["uniformity"],
    "guard": ["guard-trv", "guard-sum", "guard-cmp"],
    "retraction": ["retraction", "rho-morphism", "bind-h-oracle"],
    "restriction": ["restriction"],
    "decomposition": ["decomposition"],
}
SUITES["all"] = list(LAWS)
SUITES["order-suite"] = SUITES["order"]

# Named instances checked once per suite run alongside the random cases.
WITNESSES = {
    "retraction": [("gap-at-zero", check_gap_loop), ("embedding-vs-bind", check_embedding_witness)],
    "guard": [("swap", lambda: None if not is_progressive(swap_instance()) else "swap instance accepted")],
}
WITNESSES["all"] = WITNESSES["retraction"] + WITNESSES["guard"]


# ---------------------------------------------------------------- harness


def _case_rng(law: str, seed: int, case: int) -> random.Random:
    return random.Random(f"{law}/{seed}/{case}")


def _valid(law: Law, comps: dict) -> bool:
    for v in _walk(comps):
        if isinstance(v, Traj) and not is_member(v):
            return False
        if isinstance(v, KleisliMorphism) and v.validate() is not None:
            return False
    try:
        law.check(comps)
    except Precondition:
        return False
    return True


def _walk(obj) -> Iterator:
    yield obj
    if isinstance(obj, dict):
        for v in obj.values():
            yield from _walk(v)
    elif isinstance(obj, (list, tuple)):
        for v in obj:
            yield from _walk(v)
    elif isinstance(obj, KleisliMorphism) and obj.domain is not None:
        for x in obj.domain:
            yield obj(x)


def _traj_shrinks(t: Traj) -> Iterator[Traj]:
    ev = t.ev
    if t.dur != 0:
        yield Traj(0, StepEvolution.const(ev(0)), t.space)
        for g in GRID:
            if g < t.dur:
                yield Traj(g, ev, t.space)
    for i in range(1, len(ev.points)):
        pts = ev.points[:i] + ev.points[i + 1:]
        at = ev.at[:i] + ev.at[i + 1:]
        after = ev.after[:i] + ev.after[i + 1:]
        yield Traj(t.dur, StepEvolution(pts, at, after), t.space)
    vals = list(dict.fromkeys([*ev.at, *ev.after]))
    for v in vals:
        for w in vals:
            if v is not w and v != w:
                yield Traj(t.dur, ev.map(lambda u, v=v, w=w: w if u == v else u), t.space)


def _shrinks(obj) -> Iterator:
    if isinstance(obj, Traj):
        yield from _traj_shrinks(obj)
    elif isinstance(obj, KleisliMorphism) and obj.domain is not None:
        table = obj.table()
        for x in table:
            for cand in _shrinks(table[x]):
                yield KleisliMorphism({**table, x: cand}, obj.space)
    elif isinstance(obj, tuple):
        for i, item in enumerate(obj):
            for cand in _shrinks(item):
                yield obj[:i] + (cand,) + obj[i + 1:]
    elif isinstance(obj, dict):
        for k, item in obj.items():
            if isinstance(item, (Traj, KleisliMorphism, tuple)):
                for cand in _shrinks(item):
                    yield {**obj, k: cand}


def shrink(law: Law, comps: dict, max_steps: int = 200, max_tries: int = 5000) -> dict:
    """Greedily simplify a failing instance while it keeps failing."""
    tries = 0
    for _ in range(max_steps):
        improved = False
        for cand in _shrinks(comps):
            tries += 1
            if tries > max_tries:
                return comps
            if not _valid(law, cand):
                continue
            try:
                msg = law.check(cand)
            except Exception as exc:  # a crash counts as a failure
                msg = f"{type(exc).__name__}: {exc}"
            if msg:
                comps = cand
                improved = True
                break
        if not improved:
            break
    return comps


def render_instance(comps: dict) -> str:
    lines = []
    for k, v in comps.items():
        if isinstance(v, KleisliMorphism) and v.domain is not None:
            lines.append(f"{k} [{v.space.value}]:")
            lines.extend(f"  {x!r} -> {v(x).render()}" for x in v.domain)
        elif isinstance(v, Traj):
            lines.append(f"{k} [{v.space.value}]: {v.render()}")
        elif isinstance(v, tuple) and v and isinstance(v[0], (Traj, KleisliMorphism)):
            for i, item in enumerate(v):
                lines.append(render_instance({f"{k}[{i}]": item}))
        else:
            lines.append(f"{k}: {v!r}")
    return "\n".join(lines)


def check_law(law: Any, seed: int = 0, cases: int = 1000, do_shrink: bool = True, max_failures: int = 3) -> LawReport:
    """Run ``cases`` random instances of ``law`` (a name or a :class:`Law`)."""
    law = LAWS[law] if isinstance(law, str) else law
    report = LawReport(law.name, cases, seed)
    for i in range(cases):
        comps = law.generate(Gen(_case_rng(law.name, seed, i)))
        try:
            msg = law.check(comps)
        except Precondition:
            report.skipped += 1
            continue
        except NotProgressive as exc:
            msg = f"NotProgressive: {exc}"
        except Exception as exc:
            msg = f"{type(exc).__name__}: {exc}"
        if msg:
            if do_shrink:
                comps = shrink(law, comps)
                try:
                    msg = law.check(comps) or msg
                except Exception as exc:
                    msg = f"{type(exc).__name__}: {exc}"
            report.failures.append(Failure(i, msg, render_instance(comps)))
            if len(report.failures) >= max_failures:
                report.cases = i + 1
                break
    return report


def run_suite(suite: str, seed: int = 0, cases: int = 1000) -> tuple[list, list]:
    """All law reports of a suite plus ``(name, message-or-None)`` for its
    named witnesses."""
    if suite not in SUITES:
        raise KeyError(f"unknown suite {suite!r}; choose from {', '.join(sorted(SUITES))}")
    reports = [check_law(name, seed, cases) for name in SUITES[suite]]
    witnesses = [(name, fn()) for name, fn in WITNESSES.get(suite, [])]
    return reports, witnesses
