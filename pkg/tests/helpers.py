"""Random eligible systems and constants for property tests."""

import math

from ltvcommute.commute import PairConstants, compose_constants, required_ic, solve_m1, synthesize_pair
from ltvcommute.expr import Const, T, cos, exp, sin
from ltvcommute.system import LTVSystem, generate


def random_leading(rng):
    c = Const(round(rng.uniform(0.5, 3.0), 6))
    w = Const(round(rng.uniform(0.1, 2.0), 6))
    choice = rng.integers(4)
    if choice == 0:
        return c
    if choice == 1:
        return c + Const(0.4) * sin(w * T)
    if choice == 2:
        return c * exp(Const(round(rng.uniform(-0.1, 0.1), 6)) * T)
    return (c + Const(0.1) * T) ** 2


def random_structure(rng):
    a, b, w = (Const(round(v, 6)) for v in rng.uniform((-2, -1, 0.1), (2, 1, 3)))
    choice = rng.integers(3)
    if choice == 0:
        return a + b * sin(w * T)
    if choice == 1:
        return a + b * cos(w * T) * exp(Const(-0.05) * T)
    return a + b * T / (Const(1) + T)


def random_system(rng, invariant=None):
    if invariant is None:
        invariant = rng.uniform(-3, 3)
    return generate(random_leading(rng), random_structure(rng), invariant)


def random_constants(rng):
    k2 = rng.uniform(0.2, 3.0)
    k1 = rng.choice((-1, 1)) * rng.uniform(0.2, 3.0)
    k0 = rng.uniform(-3.0, 3.0)
    return PairConstants(k2, k1, k0)


def ic_compatible_constants(rng, a0):
    """Constants whose initial-state quadratic holds for invariant ``a0 <= 1``."""
    k2 = rng.uniform(0.2, 3.0)
    k1 = rng.choice((-1, 1)) * rng.uniform(0.2, 3.0)
    k0 = 1.0 - k2 + rng.choice((-1, 1)) * abs(k1) * math.sqrt(1.0 - a0)
    return PairConstants(k2, k1, k0)


def nonzero_ic_chain(rng):
    """A, B, C sharing one nonzero state under which both (A, B) and (B, C) commute.

    Returns ``(a, b, c, k, m)``.
    """
    while True:
        a0 = rng.uniform(-3.0, 1.0)
        k = ic_compatible_constants(rng, a0)
        m2, m0 = rng.uniform(0.2, 3.0), rng.uniform(-3.0, 3.0)
        try:
            m1 = solve_m1(k, m2, m0)
        except ZeroDivisionError:
            continue
        if not 0.2 <= abs(m1) <= 20:
            continue
        m = PairConstants(m2, m1, m0)
        if abs(compose_constants(k, m).c1) < 0.1:
            continue
        a = random_system(rng, a0)
        ic = required_ic(a, k, rng.choice((-1, 1)) * rng.uniform(0.1, 2.0))
        b = synthesize_pair(a, k)
        c = synthesize_pair(b, m)
        return a.with_ic(ic), b.with_ic(ic), c.with_ic(ic), k, m


def coefficients_close(s1: LTVSystem, s2: LTVSystem, grid, tol):
    return max(
        float(max(abs(x(grid) - y(grid)) / (1 + abs(y(grid)))))
        for x, y in zip(s1.coefficients, s2.coefficients)
    ) <= tol
