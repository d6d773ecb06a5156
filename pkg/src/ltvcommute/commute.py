"""Commutativity and transitivity algebra for pairs of second-order LTV systems.

A system ``B`` commutes with an eligible system ``A`` (constant invariant
``A0``) when its coefficients are

    b2 = k2 a2
    b1 = k2 a1 + k1 a2^(1/2)
    b0 = k2 a0 + k1 f_A + k0

for constants ``k = (k2, k1, k0)`` with ``k2 > 0`` and ``k1 != 0``.  With
nonzero initial states the two systems must also share their state at ``t0``,
satisfy ``(k2 + k0 - 1)^2 = k1^2 (1 - A0)`` and have the derivative/output
ratio fixed by :func:`derivative_ratio`.

Every relation here is written for a generic ordered pair, so the same
functions serve (A, B), (B, C) and (A, C).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .expr import CoeffExpr, as_expr, constancy_of_values, sqrt
from .system import (
    DEFAULT_TOL,
    InitialState,
    LTVSystem,
    commutativity_invariant,
    default_grid,
    structure_function,
)


class InvalidConstantsError(ValueError):
    """Pair constants outside the admissible set (``c2 > 0``, ``c1 != 0``)."""


class NotEligibleError(ValueError):
    """The system's commutativity invariant is not constant; it has no commutative partners."""


class InfeasibleInitialStateError(ValueError):
    """No nonzero initial state makes the pair commute for these constants."""


@dataclass(frozen=True)
class PairConstants:
    """Constant triple linking the coefficient vectors of two commutative systems."""

    c2: float
    c1: float
    c0: float

    def __post_init__(self):
        for name in ("c2", "c1", "c0"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def __iter__(self):
        return iter((self.c2, self.c1, self.c0))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.c2, self.c1, self.c0)

    def is_feedthrough(self, tol: float = 0.0) -> bool:
        """True when the pair is related by constant gains only (``|c1| <= tol``)."""
        return abs(self.c1) <= tol

    def validate(self, tol: float = 0.0) -> "PairConstants":
        if not all(math.isfinite(c) for c in self):
            raise InvalidConstantsError(f"constants must be finite, got {self.as_tuple()}")
        if not self.c2 > 0:
            raise InvalidConstantsError(f"c2 must be positive, got {self.c2}")
        if self.is_feedthrough(tol):
            raise InvalidConstantsError(
                f"c1={self.c1} makes the pair feedthrough-derivable (gain related), which is excluded"
            )
        return self

    @classmethod
    def parse(cls, text: str) -> "PairConstants":
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected three comma-separated constants, got {text!r}")
        return cls(*(float(p) for p in parts))


class Verdict(str, Enum):
    COMMUTATIVE_ZERO_IC = "CommutativeZeroIC"
    COMMUTATIVE_NONZERO_IC = "CommutativeNonzeroIC"
    NOT_COMMUTATIVE = "NotCommutative"

    @property
    def commutative(self) -> bool:
        return self is not Verdict.NOT_COMMUTATIVE


@dataclass
class CommutativityReport:
    verdict: Verdict
    constants: Optional[PairConstants]
    invariant_A0: float
    invariant_B0: float
    residuals: dict = field(default_factory=dict)
    failed_condition: Optional[str] = None

    def __post_init__(self):
        if self.verdict is Verdict.NOT_COMMUTATIVE and not self.failed_condition:
            raise ValueError("a NotCommutative report must name the failed condition")

    @property
    def commutative(self) -> bool:
        return self.verdict.commutative

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "constants": None if self.constants is None else list(self.constants),
            "invariant_A0": self.invariant_A0,
            "invariant_B0": self.invariant_B0,
            "residuals": dict(self.residuals),
            "failed_condition": self.failed_condition,
        }


@dataclass
class TransitivityReport:
    ab: CommutativityReport
    bc: CommutativityReport
    ac: CommutativityReport
    composed_p: Optional[PairConstants]
    composition_residual: Optional[float]
    ratio_link_residual: Optional[float]
    composed_ratio_residual: Optional[float]
    composition_degenerate: bool = False
    tol: float = DEFAULT_TOL

    @property
    def hypotheses_hold(self) -> bool:
        return self.ab.commutative and self.bc.commutative

    @property
    def transitive(self) -> bool:
        """All three pairs commute and the recovered (A, C) constants match the composition."""
        return (
            self.hypotheses_hold
            and self.ac.commutative
            and self.composition_residual is not None
            and self.composition_residual <= self.tol * (1 + max(abs(c) for c in self.composed_p))
        )

    def to_dict(self) -> dict:
        return {
            "ab": self.ab.to_dict(),
            "bc": self.bc.to_dict(),
            "ac": self.ac.to_dict(),
            "composed_p": None if self.composed_p is None else list(self.composed_p),
            "composition_residual": self.composition_residual,
            "composition_degenerate": self.composition_degenerate,
            "ratio_link_residual": self.ratio_link_residual,
            "composed_ratio_residual": self.composed_ratio_residual,
            "transitive": self.transitive,
        }


# ---------------------------------------------------------------------------
# constant algebra


def invert_constants(k: PairConstants) -> PairConstants:
    """Constants expressing A in terms of B when B = pair(A, k)."""
    k2, k1, k0 = k.validate()
    return PairConstants(1.0 / k2, -k1 / k2**1.5, k1**2 / (2.0 * k2**2) - k0 / k2)


def transform_invariant(a0: float, k: PairConstants) -> float:
    """Invariant of pair(A, k) given the invariant ``a0`` of A."""
    k2, k1, k0 = k.validate()
    return k2 * a0 + k0 - k1**2 / (4.0 * k2)


def restore_invariant(b0: float, k: PairConstants) -> float:
    """Inverse of :func:`transform_invariant`: A's invariant from B's."""
    k2, k1, k0 = k.validate()
    return (b0 - k0) / k2 + k1**2 / (4.0 * k2**2)


def transform_structure(f_a, k: PairConstants) -> CoeffExpr:
    """Structure function of pair(A, k) from the structure function of A."""
    k2, k1, _ = k.validate()
    return math.sqrt(k2) * as_expr(f_a) + k1 / (2.0 * math.sqrt(k2))


def restore_structure(f_b, k: PairConstants) -> CoeffExpr:
    """Inverse of :func:`transform_structure`."""
    k2, k1, _ = k.validate()
    return as_expr(f_b) / math.sqrt(k2) - k1 / (2.0 * k2)


def compose_constants(k: PairConstants, m: PairConstants, tol: float = 0.0) -> PairConstants:
    """Constants ``p`` with pair(A, p) == pair(pair(A, k), m).

    Inputs must satisfy ``|c1| > tol``.  The result may itself be degenerate
    (``p.is_feedthrough(tol)``), meaning A and C differ by gains only.
    """
    k2, k1, k0 = k.validate(tol)
    m2, m1, m0 = m.validate(tol)
    rk2 = math.sqrt(k2)
    return PairConstants(m2 * k2, m2 * k1 + m1 * rk2, m2 * k0 + m1 * k1 / (2.0 * rk2) + m0)


def ic_ratio_term(k: PairConstants) -> float:
    """``(c2 + c0 - 1) / c1``, the constant part of the initial derivative ratio."""
    return (k.c2 + k.c0 - 1.0) / k.c1


def ic_quadratic_residual(a0: float, k: PairConstants) -> float:
    """``|(k2 + k0 - 1)^2 - k1^2 (1 - A0)|``; zero when a nonzero commuting state exists."""
    k2, k1, k0 = k
    return abs((k2 + k0 - 1.0) ** 2 - k1**2 * (1.0 - a0))


def ratio_link_gap(k: PairConstants, m: PairConstants) -> float:
    """Residual of the ratio compatibility between consecutive pairs.

    ``|(m2 + m0 - 1)/m1 - k2^(1/2) [(k2 + k0 - 1)/k1 - k1/(2 k2)]|``, zero when
    (A, pair(A, k)) and (pair(A, k), pair(., m)) commute with a shared nonzero
    state.
    """
    k2, k1, _ = k.validate()
    m.validate()
    return abs(ic_ratio_term(m) - math.sqrt(k2) * (ic_ratio_term(k) - k1 / (2.0 * k2)))


def composed_ratio_gap(k: PairConstants, p: PairConstants) -> float:
    """``|(p2 + p0 - 1)/p1 - (k2 + k0 - 1)/k1|``."""
    return abs(ic_ratio_term(p) - ic_ratio_term(k))


def solve_m1(k: PairConstants, m2: float, m0: float) -> float:
    """Choose ``m1`` so that :func:`ratio_link_gap` vanishes for ``(m2, m1, m0)``."""
    k2, k1, _ = k.validate()
    denom = math.sqrt(k2) * (ic_ratio_term(k) - k1 / (2.0 * k2))
    if denom == 0.0:
        raise ZeroDivisionError("ratio term vanishes; m1 is undetermined")
    return (m2 + m0 - 1.0) / denom


# ---------------------------------------------------------------------------
# system level


def _require_eligible(system: LTVSystem, grid, tol) -> float:
    flag, a0, residual = commutativity_invariant(system, grid, tol)
    if not flag:
        raise NotEligibleError(
            f"system not commutativity-eligible: invariant varies by {residual:.3g} on the grid"
        )
    return a0


def synthesize_pair(a: LTVSystem, k: PairConstants, grid=None, tol: float = DEFAULT_TOL) -> LTVSystem:
    """The commutative partner pair(A, k).  Its initial state is left unset."""
    k2, k1, k0 = k.validate()
    if grid is None:
        grid = default_grid(a.t0)
    _require_eligible(a, grid, tol)
    f_a = structure_function(a)
    b2 = k2 * a.a2
    b1 = k2 * a.a1 + k1 * sqrt(a.a2)
    b0 = k2 * a.a0 + k1 * f_a + k0
    return LTVSystem(b2, b1, b0, t0=a.t0)


def derivative_ratio(a: LTVSystem, k: PairConstants, t0: Optional[float] = None) -> float:
    """Ratio ``dy(t0)/y(t0)`` a shared nonzero state must have for A and pair(A, k) to commute."""
    t0 = a.t0 if t0 is None else t0
    f_a = structure_function(a)
    return -(ic_ratio_term(k) + f_a(t0)) / math.sqrt(a.a2(t0))


def required_ic(a: LTVSystem, k: PairConstants, y0: float, grid=None, tol: float = DEFAULT_TOL) -> InitialState:
    """Initial state ``(y0, rho y0)`` under which A and pair(A, k) commute."""
    k.validate()
    if grid is None:
        grid = default_grid(a.t0)
    a0 = _require_eligible(a, grid, tol)
    if a0 > 1.0 + tol:
        raise InfeasibleInitialStateError(
            f"no commuting nonzero initial state exists for these constants: invariant {a0:g} > 1 "
            "leaves the initial-state quadratic without a real solution"
        )
    residual = ic_quadratic_residual(a0, k)
    if residual > tol * (1.0 + (k.c2 + k.c0 - 1.0) ** 2 + k.c1**2):
        raise InfeasibleInitialStateError(
            f"no commuting nonzero initial state exists for these constants (quadratic residual {residual:.3g})"
        )
    return InitialState(float(y0), derivative_ratio(a, k) * float(y0))


def _scaled(value: float, tol: float, *scales: float) -> bool:
    return value <= tol * (1.0 + max((abs(s) for s in scales), default=0.0))


def check_pair(a: LTVSystem, b: LTVSystem, grid=None, tol: float = DEFAULT_TOL) -> CommutativityReport:
    """Decide whether A and B commute, recovering the constants pointwise on ``grid``.

    Failures are reported as verdicts, never raised.
    """
    if grid is None:
        grid = default_grid(a.t0)
    grid = np.asarray(grid, dtype=float)
    residuals: dict = {}

    inv_a = commutativity_invariant(a, grid, tol)
    inv_b = commutativity_invariant(b, grid, tol)
    residuals["invariant_A"] = inv_a.max_residual
    residuals["invariant_B"] = inv_b.max_residual

    def fail(label, constants=None):
        return CommutativityReport(
            Verdict.NOT_COMMUTATIVE, constants, inv_a.value, inv_b.value, residuals, label
        )

    a2, a1, a0 = (c(grid) for c in a.coefficients)
    b2, b1, b0 = (c(grid) for c in b.coefficients)
    f_a = structure_function(a)(grid)
    root_a2 = np.sqrt(a2)

    k2_row = constancy_of_values(b2 / a2, tol)
    residuals["k2"] = k2_row.max_residual
    if not k2_row.flag:
        return fail("k2 not constant")
    k2 = k2_row.value
    k1_row = constancy_of_values((b1 - k2 * a1) / root_a2, tol)
    residuals["k1"] = k1_row.max_residual
    if not k1_row.flag:
        return fail("k1 not constant")
    k1 = k1_row.value
    k0_row = constancy_of_values(b0 - k2 * a0 - k1 * f_a, tol)
    residuals["k0"] = k0_row.max_residual
    if not k0_row.flag:
        return fail("k0 not constant")
    k = PairConstants(k2, k1, k0_row.value)

    if not inv_a.flag:
        return fail("A invariant not constant", k)
    if k.c2 <= 0:
        return fail("k2 not positive", k)
    if k.is_feedthrough(tol):
        return fail("feedthrough-derivable pair, excluded", k)

    sa, sb = a.state, b.state
    if sa.is_zero and sb.is_zero:
        return CommutativityReport(Verdict.COMMUTATIVE_ZERO_IC, k, inv_a.value, inv_b.value, residuals)

    residuals["state_mismatch"] = max(abs(sa.y0 - sb.y0), abs(sa.dy0 - sb.dy0))
    quad = ic_quadratic_residual(inv_a.value, k)
    residuals["ic_quadratic"] = quad
    rho = derivative_ratio(a, k)
    deriv_gap = abs(sb.dy0 - rho * sb.y0)
    residuals["ic_derivative"] = deriv_gap

    if not _scaled(residuals["state_mismatch"], tol, sa.y0, sa.dy0):
        return fail("initial states differ", k)
    if not _scaled(quad, tol, (k.c2 + k.c0 - 1.0) ** 2, k.c1**2):
        return fail("initial-state quadratic condition violated", k)
    if not _scaled(deriv_gap, tol, sb.dy0, rho * sb.y0):
        return fail("initial derivative ratio violated", k)
    return CommutativityReport(Verdict.COMMUTATIVE_NONZERO_IC, k, inv_a.value, inv_b.value, residuals)


def check_transitivity(
    a: LTVSystem, b: LTVSystem, c: LTVSystem, grid=None, tol: float = DEFAULT_TOL
) -> TransitivityReport:
    """Check (A, B) and (B, C), compose their constants and verify (A, C) independently."""
    if grid is None:
        grid = default_grid(a.t0)
    ab = check_pair(a, b, grid, tol)
    bc = check_pair(b, c, grid, tol)
    ac = check_pair(a, c, grid, tol)
    p = None
    composition_residual = None
    link = composed_ratio = None
    degenerate = False
    if ab.commutative and bc.commutative:
        k, m = ab.constants, bc.constants
        p = compose_constants(k, m)
        degenerate = p.is_feedthrough(tol)
        if ac.constants is not None:
            composition_residual = max(abs(x - y) for x, y in zip(ac.constants, p))
        nonzero = not (a.state.is_zero and b.state.is_zero and c.state.is_zero)
        if nonzero:
            link = ratio_link_gap(k, m)
            if not degenerate:
                composed_ratio = composed_ratio_gap(k, p)
    return TransitivityReport(ab, bc, ac, p, composition_residual, link, composed_ratio, degenerate, tol)
