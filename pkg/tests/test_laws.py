import pytest

from hybridsem.core import Space, Traj, const_traj
from hybridsem.generators import Gen
from hybridsem.kleisli import bind, bind_h0
from hybridsem.laws import (
    LAWS,
    SUITES,
    WITNESSES,
    Law,
    _case_rng,
    check_law,
    run_suite,
    shrink,
)


@pytest.mark.parametrize("name", sorted(LAWS))
def test_law_holds(name):
    report = check_law(name, seed=7, cases=150)
    assert report.ok, report.text()


def test_suites_name_known_laws():
    for suite, names in SUITES.items():
        assert names, suite
        assert all(n in LAWS for n in names)


def test_witnesses_pass():
    for name, fn in WITNESSES["all"]:
        assert fn() is None, name


def test_reports_are_deterministic():
    a = check_law("fixpoint", seed=3, cases=60)
    b = check_law("fixpoint", seed=3, cases=60)
    assert a.summary() == b.summary() and a.text() == b.text()


def test_run_suite_returns_witnesses():
    reports, witnesses = run_suite("retraction", seed=1, cases=20)
    assert [r.law for r in reports] == SUITES["retraction"]
    assert [w[0] for w in witnesses] == ["gap-at-zero", "embedding-vs-bind"]
    assert all(problem is None for _, problem in witnesses)


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suite("nope")


# ---------------------------------------------------------------- the harness catches broken laws


def _size(t: Traj) -> int:
    return len(t.ev.points) + (0 if t.dur == 0 else 1)


def _gen_m(g: Gen):
    return {"m": g.traj(Space.H0, g.carrier())}


def _delayed_unit(c):
    # A "unit" that waits one time unit is not a right unit.
    m = c["m"]
    out = bind_h0(lambda x: const_traj(1, x, Space.H0), m)
    return None if out == m else f"{out.render()} vs {m.render()}"


def test_broken_right_unit_is_caught_and_shrunk():
    law = Law("broken-right-unit", _gen_m, _delayed_unit)
    report = check_law(law, seed=0, cases=50, max_failures=1)
    assert not report.ok
    assert report.failures[0].case == 0
    # The shrunk witness is the smallest trajectory: no time, one value.
    assert "dur=0; tail->" in report.failures[0].instance


def _gen_assoc(g: Gen):
    X, Y, Z = g.carrier(), g.carrier("y"), g.carrier("z")
    return {"m": g.traj(Space.H0, X), "f": g.morphism(Space.H0, X, lambda x: Y),
            "g": g.morphism(Space.H0, Y, lambda y: Z)}


def _sloppy_assoc(c):
    # Sequencing that forgets the first stage's duration.
    m, f, gg = c["m"], c["f"], c["g"]
    lhs = bind(gg, bind(f, m))
    rhs = bind(gg, bind(f, Traj(0, m.ev, Space.H0)))
    return None if lhs == rhs else "duration of the first stage matters"


def test_shrinking_reduces_instances():
    law = Law("sloppy-assoc", _gen_assoc, _sloppy_assoc)
    report = check_law(law, seed=0, cases=200, do_shrink=False, max_failures=1)
    assert not report.ok
    comps = law.generate(Gen(_case_rng(law.name, 0, report.failures[0].case)))
    small = shrink(law, comps)
    assert law.check(small) is not None
    assert _size(small["m"]) <= _size(comps["m"])
    assert sum(len(small["f"](x).ev.points) for x in small["f"].domain) <= sum(
        len(comps["f"](x).ev.points) for x in comps["f"].domain)
