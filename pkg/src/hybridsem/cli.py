"""Command-line interface: ``check``, ``run``, ``demo`` and ``laws``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import lazy_traj as lt
from .lang import ParseError, interp, parse
from .linear_ode import DEFAULT_EVENT_TOL, DEFAULT_HORIZON, DEFAULT_SCAN_STEP

STATUS = {
    lt.Defined: "def",
    lt.UndefinedZeno: "zeno",
    lt.UndefinedDiverged: "div",
    lt.BudgetExhausted: "budget",
}


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------- argument parsing


def parse_grid(text: str) -> list[float]:
    """``a:b:h`` to the times ``a, a+h, ...`` up to and including ``b``.

    Times are generated in decimal arithmetic so ``0:1:0.1`` yields ``0.3``
    rather than ``0.30000000000000004``.
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must be start:stop:step, got {text!r}")
    try:
        a, b, h = (Decimal(p) for p in parts)
    except InvalidOperation:
        raise UsageError(f"grid must be numeric, got {text!r}") from None
    if not h > 0:
        raise UsageError("grid step must be positive")
    if a < 0 or b < a:
        raise UsageError("grid needs 0 <= start <= stop")
    n = int((b - a) / h)
    return [float(a + i * h) for i in range(n + 1)]


def parse_times(text: str) -> list[float]:
    try:
        ts = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"times must be numbers, got {text!r}") from None
    if any(t < 0 or not math.isfinite(t) for t in ts):
        raise UsageError("times must be finite and non-negative")
    if ts != sorted(ts):
        raise UsageError("times must be sorted")
    return ts


def parse_init(text: Optional[str], names: Sequence[str], default: Optional[Sequence[float]] = None) -> np.ndarray:
    """``x=1,v=0`` or positional ``1,0``; unnamed variables default to 0."""
    if text is None:
        if default is not None:
            return np.array(default, dtype=float)
        return np.zeros(len(names))
    items = [s.strip() for s in text.split(",") if s.strip()]
    out = np.zeros(len(names))
    try:
        if items and all("=" in s for s in items):
            for s in items:
                k, v = (p.strip() for p in s.split("=", 1))
                if k not in names:
                    raise UsageError(f"--init names unknown variable {k!r}")
                out[list(names).index(k)] = float(v)
        else:
            if len(items) != len(names):
                raise UsageError(f"--init needs {len(names)} values, got {len(items)}")
            out[:] = [float(s) for s in items]
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"--init values must be numbers, got {text!r}") from None
    return out


def stream_config(args) -> lt.StreamConfig:
    try:
        return lt.StreamConfig(
            budget=args.budget,
            horizon=args.horizon,
            scan_step=args.scan_step,
            event_tol=args.event_tol,
            zeno_eps=args.zeno_eps,
            div_window=args.div_window,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# ---------------------------------------------------------------- results


def _num(v: float):
    """JSON-safe float: infinities become strings."""
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return float(v)


def _fmt(v: float) -> str:
    return repr(float(v))


def summarize(stream: lt.SegmentStream, budget: int) -> dict:
    cls = stream.classify(budget)
    # Duration from what classification already produced; no further unfolding.
    dur = stream.duration(budget=stream.items)
    d = {"kind": type(dur).__name__, "value": _num(dur.value)}
    if isinstance(dur, lt.ZenoEstimate):
        d["last_increment"] = _num(dur.last_increment)
    c: dict = {"kind": type(cls).__name__}
    if isinstance(cls, lt.Terminates):
        c.update(duration=_num(cls.duration), final=[_num(v) for v in cls.final])
    elif isinstance(cls, lt.DivergesAt):
        c.update(at=_num(cls.at), evidence=cls.evidence)
    elif isinstance(cls, lt.Zeno):
        c.update(sup_estimate=_num(cls.sup_estimate), last_increment=_num(cls.last_increment))
    elif isinstance(cls, lt.InfiniteRun):
        c.update(probe=_num(cls.probe), horizon_caveat=cls.caveat)
    else:
        c.update(lower_bound=_num(cls.lower_bound))
    return {"duration": d, "classification": c, "unfoldings": stream.unfoldings}


def evaluate(morphism: lt.NumericMorphism, x0: np.ndarray, times: Sequence[float], config: lt.StreamConfig):
    """Sample rows ``(t, values-or-None, status)`` and a summary."""
    stream = lt.SegmentStream(morphism, x0, config)
    rows = []
    for t, ans in stream.sample(times):
        values = [float(v) for v in ans.value] if isinstance(ans, lt.Defined) else None
        rows.append((t, values, STATUS[type(ans)]))
    return rows, summarize(stream, config.budget)


def to_csv(names: Sequence[str], rows, summary: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", *names, "status"])
    for t, values, status in rows:
        cells = [_fmt(v) for v in values] if values is not None else [""] * len(names)
        w.writerow([_fmt(t), *cells, status])
    for key, val in summary.items():
        buf.write(f"# {key}: {json.dumps(val, sort_keys=True)}\n")
    return buf.getvalue()


def to_json(names: Sequence[str], rows, summary: dict) -> str:
    doc = {
        "variables": list(names),
        "rows": [{"t": t, "values": values, "status": status} for t, values, status in rows],
        "summary": summary,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def read_csv(text: str) -> tuple[list, list, dict]:
    """Inverse of :func:`to_csv`."""
    lines = text.splitlines()
    body = [ln for ln in lines if not ln.startswith("# ")]
    summary = {}
    for ln in lines:
        if ln.startswith("# "):
            key, val = ln[2:].split(": ", 1)
            summary[key] = json.loads(val)
    reader = csv.reader(body)
    header = next(reader)
    names = header[1:-1]
    rows = []
    for rec in reader:
        t, cells, status = float(rec[0]), rec[1:-1], rec[-1]
        values = [float(c) for c in cells] if status == "def" else None
        rows.append((t, values, status))
    return names, rows, summary


# ---------------------------------------------------------------- commands


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _times(args, default_grid: Optional[str] = None) -> list[float]:
    if args.times is not None:
        return parse_times(args.times)
    return parse_grid(args.grid or default_grid or "0:10:1")


def _render(args, names, morphism, x0, times, config) -> int:
    rows, summary = evaluate(morphism, x0, times, config)
    text = to_json(names, rows, summary) if args.format == "json" else to_csv(names, rows, summary)
    _emit(text, args.out)
    return 0


def _load(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return parse(text)


def cmd_check(args) -> int:
    try:
        program = _load(args.path)
    except ParseError as exc:
        print(f"{args.path}:{exc}", file=sys.stderr)
        return 1
    print(f"{args.path}: ok ({len(program.variables)} variables: {', '.join(program.variables)})")
    return 0


def cmd_run(args) -> int:
    config = stream_config(args)
    try:
        program = _load(args.path)
    except ParseError as exc:
        print(f"{args.path}:{exc}", file=sys.stderr)
        return 1
    x0 = parse_init(args.init, program.variables)
    return _render(args, program.variables, interp(program, config), x0, _times(args), config)


def cmd_demo(args) -> int:
    from .demos import DEMOS

    if args.list or args.name is None:
        for name, demo in DEMOS.items():
            print(f"{name}: {demo.description}")
        return 0
    if args.name not in DEMOS:
        raise UsageError(f"unknown demo {args.name!r}; choose from {', '.join(DEMOS)}")
    demo = DEMOS[args.name]
    if args.source:
        src = demo.source()
        sys.stdout.write(src if src is not None else f"# {demo.name} is built in: {demo.description}\n")
        return 0
    config = stream_config(args)
    names, morphism = demo.morphism(config)
    x0 = parse_init(args.init, names, demo.init)
    return _render(args, names, morphism, x0, _times(args, demo.grid), config)


def cmd_laws(args) -> int:
    from .laws import SUITES, run_suite

    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(sorted(SUITES))}")
    reports, witnesses = run_suite(args.suite, seed=args.seed, cases=args.cases)
    ok = True
    lines = []
    for r in reports:
        ok &= r.ok
        lines.append(r.text())
    for name, problem in witnesses:
        ok &= problem is None
        lines.append(f"witness {name}: {'ok' if problem is None else 'FAILED: ' + problem}")
    lines.append(f"suite {args.suite}: {'ok' if ok else 'FAILED'}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0 if ok else 1


# ---------------------------------------------------------------- entry point


def _run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--init", help="initial state, as x=1,v=0 or positionally as 1,0")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--grid", help="sample times start:stop:step (stop included)")
    g.add_argument("--times", help="comma-separated sorted sample times")
    p.add_argument("--budget", type=int, default=100_000, help="maximum stream items to unfold")
    p.add_argument("--horizon", type=float, default=DEFAULT_HORIZON, help="crossing search horizon")
    p.add_argument("--scan-step", type=float, default=DEFAULT_SCAN_STEP, help="crossing scan step")
    p.add_argument("--event-tol", type=float, default=DEFAULT_EVENT_TOL, help="crossing bisection tolerance")
    p.add_argument("--zeno-eps", type=float, default=1e-12, help="bound on the remaining Zeno tail")
    p.add_argument("--div-window", type=int, default=10_000,
                   help="zero-time unfoldings before a loop is declared divergent")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="write output to this file")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hybridsem", description="Hybrid while-programs and monad law suites.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and scope-check a program")
    p.add_argument("path")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("run", help="sample the trajectory of a program")
    p.add_argument("path")
    _run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("demo", help="run a shipped demo")
    p.add_argument("name", nargs="?")
    p.add_argument("--list", action="store_true", help="list demos")
    p.add_argument("--source", action="store_true", help="print the demo program")
    _run_flags(p)
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("laws", help="run a law suite")
    p.add_argument("--suite", default="all")
    p.add_argument("--cases", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_laws)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"hybridsem: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
