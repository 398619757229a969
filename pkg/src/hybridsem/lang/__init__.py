"""The while language: syntax, parser and interpreters."""

from .interp import (
    exact_interp,
    exact_while,
    interp,
    interp_atomic,
    retag_interior,
    while_sem,
    while_step,
)
from .parser import ParseError, parse, parse_file, tokenize
from .syntax import Assign, Choice, PredODE, Program, Seq, Skip, TimedODE, While, render

__all__ = [
    "Assign", "Choice", "ParseError", "PredODE", "Program", "Seq", "Skip", "TimedODE", "While",
    "exact_interp", "exact_while", "interp", "interp_atomic", "parse", "parse_file", "render",
    "retag_interior", "tokenize", "while_sem", "while_step",
]
