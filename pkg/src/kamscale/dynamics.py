"""The standard map on the lift, x' = x + y + eps sin x, y' = y + eps sin x."""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
from gmpy2 import mpfr


@dataclass(frozen=True)
class MapParams:
    epsilon: object

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")


@dataclass(frozen=True)
class PhasePoint:
    x: object
    y: object

    def wrapped(self) -> "PhasePoint":
        two_pi = 2 * gmpy2.const_pi()
        return PhasePoint(gmpy2.fmod(self.x, two_pi) % two_pi, self.y)


def step(p: PhasePoint, params: MapParams) -> PhasePoint:
    kick = params.epsilon * gmpy2.sin(p.x)
    y = p.y + kick
    return PhasePoint(p.x + y, y)


def tangent(p: PhasePoint, params: MapParams) -> tuple:
    """[[1 + eps cos x, 1], [eps cos x, 1]] as nested tuples."""
    a = params.epsilon * gmpy2.cos(p.x)
    one = mpfr(1)
    return ((1 + a, one), (a, one))


def step_with_tangent(p: PhasePoint, params: MapParams):
    """One sin_cos evaluation shared by the map and its Jacobian."""
    s, c = gmpy2.sin_cos(p.x)
    a = params.epsilon * c
    y = p.y + params.epsilon * s
    one = mpfr(1)
    return PhasePoint(p.x + y, y), ((1 + a, one), (a, one))


def iterate(p: PhasePoint, params: MapParams, n: int) -> PhasePoint:
    if n < 0:
        raise ValueError("n must be >= 0")
    x, y, eps = p.x, p.y, params.epsilon
    for _ in range(n):
        y = y + eps * gmpy2.sin(x)
        x = x + y
    return PhasePoint(x, y)


def det2(m) -> object:
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]
