"""Second-order linear time-varying systems

    a2(t) y'' + a1(t) y' + a0(t) y = x(t),   t >= t0,

their structure function and commutativity invariant, JSON file I/O, and a
generator for systems that admit commutative partners.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .expr import CoeffExpr, Constancy, ExprDomainError, as_expr, differentiate, is_constant, render, sqrt

DEFAULT_SPAN = 10.0
DEFAULT_POINTS = 1001
DEFAULT_TOL = 1e-9


class InvalidSystemError(ValueError):
    """Invalid system definition or file."""


def default_grid(t0: float = 0.0, span: float = DEFAULT_SPAN, points: int = DEFAULT_POINTS) -> np.ndarray:
    return np.linspace(t0, t0 + span, points)


@dataclass(frozen=True)
class InitialState:
    y0: float
    dy0: float

    def __post_init__(self):
        if not (math.isfinite(self.y0) and math.isfinite(self.dy0)):
            raise InvalidSystemError("initial state must be finite")

    @property
    def is_zero(self) -> bool:
        return self.y0 == 0.0 and self.dy0 == 0.0


@dataclass(frozen=True)
class LTVSystem:
    """Coefficients of a second-order LTV system plus its initial time and state.

    ``ic`` of ``None`` means the relaxed (zero) initial state.
    """

    a2: CoeffExpr
    a1: CoeffExpr
    a0: CoeffExpr
    t0: float = 0.0
    ic: Optional[InitialState] = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        for attr in ("a2", "a1", "a0"):
            object.__setattr__(self, attr, as_expr(getattr(self, attr)))
        object.__setattr__(self, "t0", float(self.t0))

    @property
    def coefficients(self) -> tuple[CoeffExpr, CoeffExpr, CoeffExpr]:
        return self.a2, self.a1, self.a0

    @property
    def state(self) -> InitialState:
        return self.ic if self.ic is not None else InitialState(0.0, 0.0)

    def with_ic(self, ic: Optional[InitialState]) -> "LTVSystem":
        return replace(self, ic=ic)

    def validate(self, grid=None) -> "LTVSystem":
        """Check finiteness of all coefficients and ``a2 > 0`` on ``grid``."""
        if grid is None:
            grid = default_grid(self.t0)
        grid = np.asarray(grid, dtype=float)
        for label, coeff in zip(("a2", "a1", "a0"), self.coefficients):
            try:
                values = coeff(grid)
            except ExprDomainError as exc:
                raise InvalidSystemError(f"{label} cannot be evaluated: {exc}") from exc
            if label == "a2":
                bad = np.flatnonzero(values <= 0)
                if bad.size:
                    raise InvalidSystemError(f"a2 not strictly positive at t={grid[bad[0]]:g}")
        return self

    def to_dict(self) -> dict:
        out = {"a2": render(self.a2), "a1": render(self.a1), "a0": render(self.a0), "t0": self.t0}
        if self.ic is not None:
            out["ic"] = {"y0": self.ic.y0, "dy0": self.ic.dy0}
        return out

    @classmethod
    def from_dict(cls, data: dict, name: str = "") -> "LTVSystem":
        if not isinstance(data, dict):
            raise InvalidSystemError("system document must be a JSON object")
        missing = [k for k in ("a2", "a1", "a0") if k not in data]
        if missing:
            raise InvalidSystemError(f"missing field(s): {', '.join(missing)}")
        for k in ("a2", "a1", "a0"):
            if not isinstance(data[k], str):
                raise InvalidSystemError(f"field {k!r} must be an expression string")
        t0 = data.get("t0", 0.0)
        if isinstance(t0, bool) or not isinstance(t0, (int, float)):
            raise InvalidSystemError("field 't0' must be a number")
        ic = None
        if data.get("ic") is not None:
            raw = data["ic"]
            try:
                ic = InitialState(float(raw["y0"]), float(raw["dy0"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise InvalidSystemError("field 'ic' must be an object with numeric 'y0' and 'dy0'") from exc
        try:
            return cls(data["a2"], data["a1"], data["a0"], t0=float(t0), ic=ic, name=name)
        except ValueError as exc:
            raise InvalidSystemError(str(exc)) from exc


def load(path, grid=None) -> LTVSystem:
    """Read a system file and validate it on ``grid`` (default ``[t0, t0+10]``, 1001 points)."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidSystemError(f"{path}: not valid JSON ({exc})") from exc
    system = LTVSystem.from_dict(data, name=path.stem)
    return system.validate(grid)


def save(system: LTVSystem, path) -> None:
    Path(path).write_text(json.dumps(system.to_dict(), indent=2) + "\n")


def structure_function(system: LTVSystem) -> CoeffExpr:
    """``f = a2^(-1/2) (2 a1 - a2') / 4``."""
    a2, a1, _ = system.coefficients
    return (2 * a1 - differentiate(a2)) / (4 * sqrt(a2))


def invariant_expr(system: LTVSystem) -> CoeffExpr:
    """``a0 - f^2 - a2^(1/2) f'``; constant exactly for systems with commutative partners."""
    f = structure_function(system)
    return system.a0 - f * f - sqrt(system.a2) * differentiate(f)


def commutativity_invariant(system: LTVSystem, grid=None, tol: float = DEFAULT_TOL) -> Constancy:
    """Constancy test of the invariant; returns ``(flag, A0, residual)``."""
    if grid is None:
        grid = default_grid(system.t0)
    return is_constant(invariant_expr(system), grid, tol)


def generate(a2, f, invariant: float, t0: float = 0.0, ic: Optional[InitialState] = None, grid=None) -> LTVSystem:
    """Build the system whose structure function is ``f`` and whose invariant is ``invariant``.

    Solves ``a1 = 2 a2^(1/2) f + a2'/2`` and ``a0 = invariant + f^2 + a2^(1/2) f'``.
    """
    a2 = as_expr(a2)
    f = as_expr(f)
    if grid is None:
        grid = default_grid(t0)
    root = sqrt(a2)
    a1 = 2 * root * f + differentiate(a2) / 2
    a0 = float(invariant) + f * f + root * differentiate(f)
    return LTVSystem(a2, a1, a0, t0=t0, ic=ic).validate(grid)
