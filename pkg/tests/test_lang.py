import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridsem import lazy_traj as lt
from hybridsem.core import INF, Inl, Inr, Space, StepEvolution, Traj, unit
from hybridsem.kleisli import KleisliMorphism, fmap
from hybridsem.lang import (
    Assign,
    Choice,
    ParseError,
    PredODE,
    Program,
    Seq,
    Skip,
    TimedODE,
    While,
    exact_interp,
    interp,
    parse,
    render,
    retag_interior,
    tokenize,
    while_sem,
    while_step,
)
from hybridsem.lang.interp import as_state
from hybridsem.lang.syntax import is_instantaneous, is_step_fragment, seq, wait
from hybridsem.linear_ode import FALSE, TRUE, And, Atom, Dynamics, LinTerm, Not, Or

# ---------------------------------------------------------------- parsing


def test_parse_assignment():
    p = parse("vars x, y; x := 2 * y + 1")
    assert p.variables == ("x", "y")
    assert p.body == Assign(((0, LinTerm((0.0, 2.0), 1.0)),))


def test_parse_infers_variables_without_header():
    p = parse("y := 1 ; x := y")
    assert p.variables == ("y", "x")


def test_parse_ode_forms():
    timed = parse("vars x; x' = 1 & 2").body
    assert isinstance(timed, TimedODE) and timed.duration == 2.0
    pred = parse("vars p, v; (p' = v, v' = -9.8 & p <= 0 /\\ v <= 0)").body
    assert isinstance(pred, PredODE)
    assert pred.dyn == Dynamics(np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([0.0, -9.8]))


def test_unmentioned_derivatives_are_zero():
    ode = parse("vars x, y; (x' = y & 1)").body
    assert ode.dyn.A.tolist() == [[0.0, 1.0], [0.0, 0.0]]


def test_parse_control_flow():
    p = parse("vars x; while x <= 10 { x := x + 1 ; wait(1) }")
    assert isinstance(p.body, While)
    assert isinstance(p.body.body, Seq)
    assert p.body.body.second == wait(1, 1.0)
    c = parse("vars x; if x > 0 then { skip }").body
    assert isinstance(c, Choice) and c.orelse == Skip()


def test_unicode_and_comments():
    a = parse("vars x; # note\nif x ≤ 1 ∧ ¬(x ≠ 0) then { skip } // more")
    b = parse("vars x;\nif x <= 1 /\\ ~(x != 0) then { skip }")
    assert a == b


@pytest.mark.parametrize(
    "source,kind,line,col",
    [
        ("vars x; y := 1", "scope", 1, 9),
        ("vars x;\nwhile x <= 1 { x := 1", "syntax", 2, 22),
        ("vars x, y; x := x * y", "syntax", 1, 19),
        ("vars x; x := 1 / x", "syntax", 1, 16),
        ("vars x; x := $", "lexical", 1, 14),
        ("vars x, x; skip", "scope", 1, 9),
        ("vars x; x := 1, x := 2", "scope", 1, 17),
        ("vars x; (x' = 1 & x < 0)", "syntax", 1, 17),
    ],
)
def test_parse_errors_have_locations(source, kind, line, col):
    with pytest.raises(ParseError) as info:
        parse(source)
    err = info.value
    assert (err.kind, err.line, err.col) == (kind, line, col)
    assert str(err).startswith(f"{line}:{col}: {kind} error:")


def test_tokenize_positions():
    toks = tokenize("vars x;\n  x := 1")
    x = [t for t in toks if t.text == "x"][1]
    assert (x.line, x.col) == (2, 3)


# ---------------------------------------------------------------- render round-trip

N = 2
NAMES = ("x", "y")
numbers = st.one_of(st.integers(-5, 5).map(float), st.sampled_from([0.5, -0.25, 0.1, 9.8, 1e-3, 12345.678]))


def terms():
    return st.builds(lambda a, b, c: LinTerm((a, b), c), numbers, numbers, numbers)


def atoms(ops):
    return st.builds(Atom, terms(), st.sampled_from(ops), terms())


def guards(depth=2, ops=("<=", ">=", "<", ">", "=", "!=")):
    base = st.one_of(atoms(ops), st.just(TRUE), st.just(FALSE)) if len(ops) > 2 else atoms(ops)
    if depth == 0:
        return base
    sub = guards(depth - 1, ops)
    options = [base, st.builds(And, sub, sub), st.builds(Or, sub, sub)]
    if len(ops) > 2:
        options.append(st.builds(Not, sub))
    return st.one_of(*options)


def dynamics():
    return st.builds(lambda a, c: Dynamics(np.array(a).reshape(N, N), np.array(c)),
                     st.lists(numbers, min_size=N * N, max_size=N * N), st.lists(numbers, min_size=N, max_size=N))


def stmts(depth=2):
    assigns = st.lists(st.tuples(st.sampled_from([0, 1]), terms()), min_size=1, max_size=2,
                       unique_by=lambda u: u[0]).map(lambda us: Assign(tuple(us)))
    base = st.one_of(
        assigns,
        st.just(Skip()),
        st.builds(TimedODE, dynamics(), st.sampled_from([0.0, 0.5, 1.0, 3.0])),
        st.builds(PredODE, dynamics(), guards(1, ("<=", ">="))),
    )
    if depth == 0:
        return base
    sub = stmts(depth - 1)
    return st.one_of(base, st.builds(Seq, sub, sub), st.builds(Choice, guards(1), sub, sub),
                     st.builds(While, guards(1), sub))


@settings(max_examples=300, deadline=None)
@given(stmts())
def test_render_parse_round_trip(body):
    program = Program(NAMES, body)
    text = render(program)
    back = parse(text)
    assert render(back) == text
    assert interp(back) is not None
    assert is_step_fragment(back.body) == is_step_fragment(body)
    assert is_instantaneous(back.body) == is_instantaneous(body)


# Random stiff dynamics may overflow; both sides must still agree.
@pytest.mark.filterwarnings("ignore::RuntimeWarning")
@settings(max_examples=200, deadline=None)
@given(stmts(1), st.lists(st.floats(-3, 3), min_size=N, max_size=N))
def test_round_trip_preserves_meaning_at_start(body, x0):
    program = Program(NAMES, body)
    back = parse(render(program))
    cfg = lt.DEFAULT_CONFIG.with_(budget=200, horizon=5.0)
    a = lt.SegmentStream(interp(program, cfg), np.array(x0), cfg).at(0.0)
    b = lt.SegmentStream(interp(back, cfg), np.array(x0), cfg).at(0.0)
    assert type(a) is type(b)
    if isinstance(a, lt.Defined):
        assert np.allclose(a.value, b.value, rtol=1e-12, atol=1e-12)


# ---------------------------------------------------------------- numeric interpretation


def run(source, init, config=lt.DEFAULT_CONFIG):
    return lt.SegmentStream(interp(parse(source), config), np.array(init, dtype=float), config)


def test_skip_is_unit():
    s = run("vars x; skip", [4.0])
    assert s.at(0.0) == lt.Defined(np.array([4.0]))
    assert s.duration() == lt.Exact(0.0)


def test_oscillator():
    s = run("vars x; (x' = 1 & 1) ; (x' = -1 & 1)", [0.0])
    for t, want in [(0.0, 0.0), (0.5, 0.5), (1.0, 1.0), (1.5, 0.5), (2.0, 0.0), (3.0, 0.0)]:
        assert s.at(t).value[0] == pytest.approx(want, abs=1e-12)
    assert s.duration() == lt.Exact(2.0)


def test_cruise_body_from_110():
    s = run("vars v; if v <= 120 then { v' = 1 & 1 } else { v' = -1 & 1 }", [110.0])
    cls = s.classify()
    assert isinstance(cls, lt.Terminates) and cls.duration == 1.0 and cls.final[0] == pytest.approx(111.0)


def test_while_false_is_unit():
    s = run("vars x; while false { x := x + 1 ; wait(1) }", [2.0])
    assert s.duration() == lt.Exact(0.0) and s.at(5.0).value[0] == 2.0


def test_guard_false_from_start_is_unit():
    s = run("vars x; while x <= 0 { x' = 1 & 1 }", [3.0])
    assert s.duration() == lt.Exact(0.0) and s.at(0.0).value[0] == 3.0


def test_guard_only_checked_between_unfoldings():
    # The body overshoots the guard mid-way; the loop still finishes the unfolding.
    s = run("vars x; while x <= 0.5 { x' = 1 & 1 }", [0.0])
    assert s.duration() == lt.Exact(1.0)
    assert s.at(0.9).value[0] == pytest.approx(0.9)


def test_instantaneous_true_loop_diverges_without_unfolding():
    s = run("vars x; while true { x := x + 1 }", [0.0])
    cls = s.classify()
    assert isinstance(cls, lt.DivergesAt) and cls.at == 0.0 and s.unfoldings == 0


def test_probation_window_is_configurable():
    cfg = lt.DEFAULT_CONFIG.with_(div_window=50)
    body = interp(parse("vars x; x := x + 1"), cfg)
    m = while_sem(Atom(LinTerm((0.0,), 0.0), "<=", LinTerm((0.0,), 0.0)), body, instantaneous=False, config=cfg)
    s = lt.SegmentStream(m, np.array([0.0]), cfg)
    cls = s.classify()
    assert isinstance(cls, lt.DivergesAt) and cls.evidence == "probation" and s.unfoldings == 50


def test_zero_time_cycle_is_detected():
    s = run("vars x; while x <= 5 { x := 1 - x }", [0.0])
    cls = s.classify()
    assert isinstance(cls, lt.DivergesAt) and cls.evidence == "cycle"


def test_long_finite_zero_time_loop_terminates():
    s = run("vars x; while x <= 500 { x := x + 1 }", [0.0])
    cls = s.classify()
    assert isinstance(cls, lt.Terminates) and cls.final[0] == 501.0


# ---------------------------------------------------------------- loop semantics in the exact layer


def test_retagging_keeps_values_and_end_tag():
    t = Traj(F(2), StepEvolution([F(0), F(1), F(2)], [Inr(0), Inr(1), Inr(2)], [Inr(0), Inr(1), Inr(2)]), Space.H)
    r = retag_interior(t)
    assert r.at(F(1, 2)) == Inl(0) and r.at(F(3, 2)) == Inl(1) and r.at(F(2)) == Inr(2)


def unrolled(cap_guard, body):
    loop = f"while {cap_guard} {{ {body} }}"
    return loop, f"if {cap_guard} then {{ {body} ; {loop} }} else {{ skip }}"


ode_bodies = st.one_of(
    st.builds(lambda k, d: f"x' = {k} & {d}", st.sampled_from([1, 2, 0.5]), st.sampled_from([0.5, 1, 2])),
    st.builds(lambda d: f"if y <= 0 then {{ x' = 1, y' = 1 & {d} }} else {{ (x' = 2 & 1) ; (x' = 1 & 0.5) }}",
              st.sampled_from([0.5, 1])),
)


@settings(max_examples=60, deadline=None)
@given(ode_bodies, st.integers(0, 4), st.integers(-2, 4), st.integers(-2, 2))
def test_loop_equals_its_unrolling(body, cap, x0, y0):
    # For bodies that show their start state at time 0 the loop and its
    # one-step unrolling agree at every time.
    loop, once = unrolled(f"x <= {cap}", body)
    a = run(f"vars x, y; {loop}", [x0, y0])
    b = run(f"vars x, y; {once}", [x0, y0])
    assert a.duration() == b.duration()
    grid = [k / 8 for k in range(0, 8 * 12)]
    for (t, u), (_, v) in zip(a.sample(grid), b.sample(grid)):
        assert np.allclose(u.value, v.value, rtol=0, atol=1e-12), t


def test_unrolling_differs_inside_a_body_that_starts_with_a_jump():
    # Sequencing shows the next program's start value at interior points,
    # which the loop's own retagging avoids, so the first unfolding differs.
    loop, once = unrolled("x <= 0", "x := x + 1 ; wait(0.5)")
    x = as_state([-1])
    a = exact_interp(parse("vars x; " + loop))(x)
    b = exact_interp(parse("vars x; " + once))(x)
    assert a.dur == b.dur == 1
    assert a.at(F(1, 4)) == (F(0),) and b.at(F(1, 4)) == (F(1),)
    for t in (F(1, 2), F(3, 4), F(1), F(2)):
        assert a.at(t) == b.at(t)


@settings(max_examples=100, deadline=None)
@given(st.integers(-3, 5), st.sampled_from(["0", "0.5", "1"]), st.integers(-2, 4))
def test_unrolling_agrees_from_the_first_boundary(cap, dur, x0):
    loop, once = unrolled(f"x <= {cap}", f"x := x + 1 ; wait({dur})")
    x = as_state([x0])
    a = exact_interp(parse("vars x; " + loop))(x)
    b = exact_interp(parse("vars x; " + once))(x)
    assert a.dur == b.dur
    first = F(dur) if x0 <= cap else F(0)
    for k in range(0, 40):
        t = first + F(k, 4)
        assert a.at(t) == b.at(t)


def test_while_step_exits_when_guard_fails():
    body = KleisliMorphism(lambda x: Traj(F(1), StepEvolution.const(x), Space.H), Space.H)
    g = while_step(Atom(LinTerm((1.0,), 0.0), "<=", LinTerm((0.0,), 0.0)), body)
    assert g((F(1),)) == unit(Inl((F(1),)), Space.H)
    out = g((F(0),))
    assert out.at(F(1, 2)) == Inl((F(0),)) and out.at(F(1)) == Inr((F(0),))
    assert fmap(lambda v: v.value, out) == body((F(0),))


def test_exact_interp_requires_step_fragment():
    with pytest.raises(ValueError):
        exact_interp(parse("vars x; x' = 1 & 1"))


def test_exact_counting_loop():
    traj = exact_interp(parse("vars x; while x <= 10 { x := x + 1 ; wait(1) }"))(as_state([0]))
    assert traj.dur == 11 and traj.at(F(21, 2)) == (F(11),) and traj.at(F(0)) == (F(1),)
    assert traj.dur != INF and not math.isinf(float(traj.dur))
