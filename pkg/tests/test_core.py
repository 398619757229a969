import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from hybridsem.core import (
    INF,
    UNDEF,
    ChainViolation,
    NotStabilized,
    OrderResult,
    Space,
    StepEvolution,
    Traj,
    as_time,
    bottom,
    check_membership,
    compare,
    const_traj,
    iota,
    is_member,
    join_chain,
    leq,
    rho,
    unit,
    upsilon,
)
from hybridsem.generators import GRID, Gen

seeds = st.integers(min_value=0, max_value=2**32 - 1)
spaces = st.sampled_from(list(Space))


def gen(seed):
    return Gen(random.Random(seed))


def ev(points, at, after):
    return StepEvolution([F(p) for p in points], at, after)


# ---------------------------------------------------------------- evaluation


def test_eval_constant():
    assert StepEvolution.const("x")(F(3)) == "x"


def test_eval_piece_lookup():
    e = ev([0, 1], [5, 7], [5, 7])
    assert e(F(1)) == 7
    assert e(F(1, 2)) == 5


def test_eval_undefined_tail():
    e = ev([0, 1], [5, UNDEF], [5, UNDEF])
    assert e(F(2)) is UNDEF


def test_canonical_form_drops_redundant_points():
    assert ev([0, 1, 2], [5, 5, 5], [5, 5, 5]) == StepEvolution.const(5)
    assert ev([0, 1], [5, 5], [5, 6]).points == (0, 1)


def test_breakpoints_must_increase():
    with pytest.raises(ValueError):
        ev([0, 2, 1], [1, 2, 3], [1, 2, 3])
    with pytest.raises(ValueError):
        ev([1], [1], [1])


def test_as_time_rejects_bad_values():
    for bad in (-1, float("nan"), True):
        with pytest.raises((ValueError, TypeError)):
            as_time(bad)
    assert as_time(0.5) == F(1, 2)
    assert as_time(float("inf")) == INF


def test_render_golden():
    t = Traj(F(1), ev([0], [UNDEF], [1]), Space.H0M)
    assert t.render() == "dur=1; {0}->_; tail->1"
    t = Traj(INF, ev([0, F(1, 2)], [0, 1], [0, 1]), Space.H)
    assert t.render() == "dur=inf; [0,1/2)->0; tail->1"


@settings(max_examples=200)
@given(seeds)
def test_canonicalisation_preserves_values(seed):
    rng = random.Random(seed)
    g = Gen(rng)
    e = g.evolution([0, 1, 2], undef_p=0.3)
    pts = sorted({*e.points, *rng.sample(GRID, 3)})
    padded = StepEvolution.tabulate(pts, e)
    assert padded == e
    for _ in range(100):
        t = F(rng.randint(0, 400), rng.randint(1, 40))
        assert padded(t) == e(t)


# ---------------------------------------------------------------- membership


def test_unit_is_member_everywhere():
    for s in Space:
        assert is_member(unit("x", s))


def test_not_downward_closed_is_rejected():
    t = Traj(F(1), ev([0], [UNDEF], [1]), Space.H)
    v = check_membership(t)
    assert v is not None and v.clause in ("domain-not-downward-closed", "partial-with-finite-duration")


def test_partial_with_finite_duration_is_rejected():
    t = Traj(F(2), ev([0, 1], [1, UNDEF], [1, UNDEF]), Space.H)
    v = check_membership(t)
    assert v is not None and v.clause == "partial-with-finite-duration"


def test_flattening_violation_has_witness():
    t = Traj(F(1), ev([0, 2], [1, 2], [1, 2]), Space.H0)
    v = check_membership(t)
    assert v.clause == "flattening" and v.witness >= 1


def test_hplus_needs_definedness_before_duration():
    ok = Traj(F(1), ev([0, 1], [1, UNDEF], [1, UNDEF]), Space.HPLUS)
    assert is_member(ok)
    bad = Traj(F(2), ev([0, 1], [1, UNDEF], [1, UNDEF]), Space.HPLUS)
    assert not is_member(bad)
    assert not is_member(Traj(F(0), StepEvolution.const(UNDEF), Space.HPLUS))


@settings(max_examples=300)
@given(seeds, spaces)
def test_generated_trajectories_are_members(seed, space):
    t = gen(seed).traj(space, [0, 1, 2])
    assert check_membership(t) is None


@settings(max_examples=300)
@given(seeds)
def test_hplus_members_embed_into_h0m(seed):
    t = gen(seed).traj(Space.HPLUS, ["a", "b"])
    assert is_member(iota(t), Space.H0M)


# ---------------------------------------------------------------- retraction


def test_rho_keeps_total_trajectories():
    t = const_traj(2, "x", Space.H0M)
    assert rho(t) == t.retag(Space.H)


def test_rho_of_bottom_is_empty():
    r = rho(bottom())
    assert r.dur == INF and r.ev == StepEvolution.const(UNDEF)


def test_rho_truncates_at_first_gap():
    t = Traj(F(2), ev([0, 1, F(3, 2)], ["a", UNDEF, "a"], ["a", UNDEF, "a"]), Space.H0M)
    r = rho(t)
    assert r.dur == INF
    assert r.ev == ev([0, 1], ["a", UNDEF], ["a", UNDEF])


def test_rho_iota_of_open_trajectory():
    t = Traj(F(1), ev([0, 1], ["a", UNDEF], ["a", UNDEF]), Space.HPLUS)
    r = rho(iota(t))
    assert r.dur == INF and r.ev == t.ev and is_member(r, Space.H)


@settings(max_examples=300)
@given(seeds)
def test_rho_is_a_retraction(seed):
    g = gen(seed)
    y = g.traj(Space.H, [0, 1])
    assert rho(upsilon(y)) == y
    x = g.traj(Space.H0M, [0, 1])
    r = rho(x)
    assert is_member(r, Space.H)
    assert upsilon(r).ev == r.ev
    assert rho(upsilon(r)) == r


# ---------------------------------------------------------------- order


def test_bottom_is_least():
    assert leq(bottom(), const_traj(3, 1, Space.H0M))


def test_duration_clause():
    assert leq(const_traj(1, UNDEF, Space.H0M), const_traj(2, UNDEF, Space.H0M))
    assert not leq(const_traj(1, "x", Space.H0M), const_traj(2, "x", Space.H0M))


def test_compare():
    a, b = bottom(), const_traj(1, "x", Space.H0M)
    assert compare(a, a) is OrderResult.EQUAL
    assert compare(a, b) is OrderResult.LESS
    assert compare(b, a) is OrderResult.GREATER
    assert compare(b, const_traj(1, "y", Space.H0M)) is OrderResult.INCOMPARABLE


@settings(max_examples=300)
@given(seeds)
def test_order_is_a_partial_order(seed):
    g = gen(seed)
    a = g.traj(Space.H0M, [0, 1])
    b = g.above(a, [0, 1])
    c = g.above(b, [0, 1])
    assert leq(a, a)
    assert leq(a, c)
    assert leq(bottom(), a)
    if leq(b, a):
        assert a == b


# ---------------------------------------------------------------- chains


def test_constant_chain():
    x = const_traj(1, "y", Space.H0M)
    assert join_chain([x, x, x]) == x


def test_stabilising_chain():
    chain = [bottom(), const_traj(1, UNDEF, Space.H0M), const_traj(1, "y", Space.H0M)]
    assert join_chain(chain) == chain[-1]


def test_growing_chain_does_not_stabilise():
    def chain():
        n = 0
        while True:
            yield const_traj(n, UNDEF, Space.H0M)
            n += 1

    out = join_chain(chain(), budget=10)
    assert isinstance(out, NotStabilized) and out.length == 10


def test_chain_violation():
    with pytest.raises(ChainViolation):
        join_chain([const_traj(1, "y", Space.H0M), bottom()])
