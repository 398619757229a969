"""Hybrid monads, their iteration operators, and an interpreter for a small
hybrid while-language over real vectors."""

from .core import (
    INF,
    PENDING,
    UNDEF,
    Inl,
    Inr,
    Space,
    StepEvolution,
    Traj,
    check_membership,
    is_member,
    join_chain,
    leq,
    rho,
    unit,
    upsilon,
    iota,
)
from .kleisli import KleisliMorphism, bind, bind_h, bind_h0, bind_h0m, bind_hplus, compose, plus_b
from .iteration import basic_iter, hat, iter_h, iter_h0m, iter_hplus, is_progressive

__version__ = "0.1.0"
