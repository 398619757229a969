"""Shipped demo programs.

Most demos are ``.hyb`` files in this directory. The two basic-iteration
demos are not expressible in the language and are built here directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Optional

import numpy as np

from ..lazy_traj import DEFAULT_CONFIG, BasicIteration, NumericMorphism, StreamConfig


@dataclass(frozen=True)
class Demo:
    name: str
    description: str
    init: tuple
    grid: str
    variables: tuple = ()
    file: Optional[str] = None
    build: Optional[Callable[[], NumericMorphism]] = None

    def source(self) -> Optional[str]:
        if self.file is None:
            return None
        return resources.files(__package__).joinpath(self.file).read_text(encoding="utf-8")

    def morphism(self, config: StreamConfig = DEFAULT_CONFIG) -> tuple[tuple, NumericMorphism]:
        """Variable names and the numeric morphism of the demo."""
        if self.build is not None:
            return self.variables, self.build()
        from ..lang import interp, parse

        program = parse(self.source())
        return program.variables, interp(program, config)


def dichotomy() -> BasicIteration:
    """Cover half of the remaining distance to 1 in each step."""
    return BasicIteration(lambda x: (1.0 - x[0]) / 2.0, lambda x, t: x + t)


def zeno_cosine_duration(x: float) -> float:
    return 2.0 * (1.0 - x) ** 2 / (3.0 - 2.0 * x)


def zeno_cosine_value(x: float, t: float) -> float:
    d = zeno_cosine_duration(x)
    if t < d:
        return (t + x) * math.cos(math.pi * t / ((1.0 - x) * (1.0 - x - t)))
    return d + x


def zeno_cosine_limit(t: float) -> float:
    """The closed form the zeno-cosine iteration reproduces from 0."""
    if t < 1.0:
        return t * math.cos(math.pi * t / (1.0 - t))
    return 1.0


def zeno_cosine() -> BasicIteration:
    """An oscillation whose amplitude tends to 1 while its frequency blows up
    before time 1, so the iterate has no continuous extension to 1."""
    return BasicIteration(
        lambda x: zeno_cosine_duration(x[0]),
        lambda x, t: np.array([zeno_cosine_value(x[0], t)]),
    )


DEMOS = {
    d.name: d
    for d in [
        Demo("bouncing-ball", "ball bouncing with restitution 0.5 (Zeno)", (1.0, 0.0), "0:1.5:0.01",
             file="bouncing-ball.hyb"),
        Demo("cruise-controller", "bang-bang velocity control around 120", (110.0,), "0:50:1",
             file="cruise-controller.hyb"),
        Demo("oscillator", "rise then fall", (0.0,), "0:2.5:0.25", file="oscillator.hyb"),
        Demo("while-true-increment", "zero-time loop that never exits", (0.0,), "0:2:1",
             file="while-true-increment.hyb"),
        Demo("while-x-le-10", "count to 11 taking one time unit per step", (0.0,), "0:12:1",
             file="while-x-le-10.hyb"),
        Demo("while-x-ge-1", "three unit-length descents from 3", (3.0,), "0:4:0.5", file="while-x-ge-1.hyb"),
        Demo("dichotomy", "halve the remaining distance to 1 (Zeno)", (0.0,), "0:1.2:0.1", variables=("x",),
             build=dichotomy),
        Demo("zeno-cosine", "oscillation with unbounded frequency before time 1", (0.0,), "0:1:0.05",
             variables=("x",), build=zeno_cosine),
    ]
}
