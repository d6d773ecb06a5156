"""Fixed-step simulation of cascaded second-order LTV systems.

A chain ``[S1, S2, ...]`` feeds the external input into ``S1`` and the output
of each stage into the next.  All stages share one state vector
``(y1, y1', y2, y2', ...)`` and advance together, so no interpolation of
intermediate signals is needed.
"""

from __future__ import annotations

import csv
import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .expr import CoeffExpr, as_expr
from .system import LTVSystem

BS3 = "BS3"
RK4_REFERENCE = "RK4_reference"
REFERENCE_REFINEMENT = 20


class SimulationError(RuntimeError):
    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"{message} at step {step}")
        self.step = step


@dataclass(frozen=True)
class Tableau:
    nodes: tuple[float, ...]
    matrix: tuple[tuple[float, ...], ...]
    weights: tuple[float, ...]


TABLEAUS = {
    # Bogacki-Shampine third order, without the embedded error estimate
    BS3: Tableau((0.0, 0.5, 0.75), ((), (0.5,), (0.0, 0.75)), (2 / 9, 3 / 9, 4 / 9)),
    RK4_REFERENCE: Tableau(
        (0.0, 0.5, 0.5, 1.0), ((), (0.5,), (0.0, 0.5), (0.0, 0.0, 1.0)), (1 / 6, 1 / 3, 1 / 3, 1 / 6)
    ),
}


@dataclass(frozen=True)
class SimulationConfig:
    t0: float = 0.0
    tf: float = 10.0
    step: float = 0.02
    integrator: str = BS3
    input: CoeffExpr = field(default_factory=lambda: as_expr("40*sin(10*pi*t)"))

    def __post_init__(self):
        object.__setattr__(self, "input", as_expr(self.input))
        if self.integrator not in TABLEAUS:
            raise ValueError(f"unknown integrator {self.integrator!r}; choose from {sorted(TABLEAUS)}")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not self.tf > self.t0:
            raise ValueError("tf must exceed t0")
        ratio = (self.tf - self.t0) / self.step
        if abs(ratio - round(ratio)) > np.spacing(ratio):
            raise ValueError(f"span {self.tf - self.t0} is not an integer number of steps {self.step}")

    @property
    def n_steps(self) -> int:
        return int(round((self.tf - self.t0) / self.step))

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.tf, self.n_steps + 1)

    def echo(self) -> dict:
        return {
            "t0": self.t0,
            "tf": self.tf,
            "step": self.step,
            "integrator": self.integrator,
            "input": str(self.input),
        }


@dataclass
class Trajectory:
    """Uniformly sampled chain output; ``stages[:, i]`` is the output of stage ``i``."""

    times: np.ndarray
    values: np.ndarray
    stages: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise ValueError("times and values differ in length")


class Comparison(NamedTuple):
    max_abs_diff: float
    rms_diff: float
    max_abs_diff_by_window: dict


def to_state_space(system: LTVSystem) -> Callable[[float, np.ndarray, float], np.ndarray]:
    """State-derivative function ``(t, (y, y'), u) -> (y', (u - a1 y' - a0 y) / a2)``."""
    a2, a1, a0 = system.coefficients

    def derivative(t, state, u=0.0):
        y, dy = state
        return np.array([dy, (u - a1(t) * dy - a0(t) * y) / a2(t)])

    return derivative


def _chain_matrices(chain: Sequence[LTVSystem], u: CoeffExpr, times: np.ndarray):
    """Affine right-hand side ``x' = M(t) x + g(t)`` of the chain at every time in ``times``."""
    n = len(chain)
    big_m = np.zeros((times.size, 2 * n, 2 * n))
    g = np.zeros((times.size, 2 * n))
    for i, system in enumerate(chain):
        a2, a1, a0 = (c(times) for c in system.coefficients)
        bad = np.flatnonzero(a2 <= 0)
        if bad.size:
            raise SimulationError(f"stage {i}: a2 not strictly positive at t={times[bad[0]]:g}")
        r, s = 2 * i, 2 * i + 1
        big_m[:, r, s] = 1.0
        big_m[:, s, r] = -a0 / a2
        big_m[:, s, s] = -a1 / a2
        if i == 0:
            g[:, s] = u(times) / a2
        else:
            big_m[:, s, r - 2] = 1.0 / a2
    return big_m, g


def _integrate(
    chain: Sequence[LTVSystem],
    u: CoeffExpr,
    t0: float,
    tf: float,
    n_steps: int,
    tableau: Tableau,
    sample_every: int = 1,
) -> np.ndarray:
    """Run the explicit scheme; returns the state at every ``sample_every``-th step (t0 included)."""
    if not chain:
        raise ValueError("chain must contain at least one system")
    h = (tf - t0) / n_steps
    nodes = np.asarray(tableau.nodes)
    stage_times = (t0 + h * np.arange(n_steps))[:, None] + h * nodes[None, :]
    big_m, g = _chain_matrices(chain, u, stage_times.ravel())
    s = len(nodes)

    x = np.array([v for system in chain for v in (system.state.y0, system.state.dy0)], dtype=float)
    out = np.empty((n_steps // sample_every + 1, x.size))
    out[0] = x
    k = np.empty((s, x.size))
    weights = np.asarray(tableau.weights)
    # blow-up is reported through the finiteness check below
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(n_steps):
            base = step * s
            for j in range(s):
                xs = x
                for l, coef in enumerate(tableau.matrix[j]):
                    if coef:
                        xs = xs + (h * coef) * k[l]
                k[j] = big_m[base + j] @ xs + g[base + j]
            x = x + h * (weights @ k)
            if not np.all(np.isfinite(x)):
                raise SimulationError("state became non-finite", step + 1)
            if (step + 1) % sample_every == 0:
                out[(step + 1) // sample_every] = x
    return out


def simulate_chain(chain: Sequence[LTVSystem], cfg: SimulationConfig) -> Trajectory:
    """Simulate the cascade; the first system receives ``cfg.input``.

    Each stage starts from its own initial state (zero when unset).
    """
    states = _integrate(chain, cfg.input, cfg.t0, cfg.tf, cfg.n_steps, TABLEAUS[cfg.integrator])
    return _trajectory(chain, cfg, states, cfg.step)


def reference_run(
    chain: Sequence[LTVSystem], cfg: SimulationConfig, refinement: int = REFERENCE_REFINEMENT
) -> Trajectory:
    """Classical RK4 at ``cfg.step / refinement``, sampled back onto the grid of ``cfg``."""
    states = _integrate(
        chain,
        cfg.input,
        cfg.t0,
        cfg.tf,
        cfg.n_steps * refinement,
        TABLEAUS[RK4_REFERENCE],
        sample_every=refinement,
    )
    return _trajectory(chain, cfg, states, cfg.step / refinement, integrator=RK4_REFERENCE)


def _trajectory(chain, cfg, states, inner_step, integrator=None) -> Trajectory:
    stages = states[:, 0::2]
    meta = cfg.echo()
    meta.update(
        integrator=integrator or cfg.integrator,
        inner_step=inner_step,
        chain=[system.name or f"stage{i}" for i, system in enumerate(chain)],
    )
    return Trajectory(cfg.times, stages[:, -1].copy(), stages, meta)


def integration_error(chain: Sequence[LTVSystem], cfg: SimulationConfig) -> float:
    """Max deviation of ``cfg``'s integrator from the fine RK4 reference on the same chain."""
    return compare(simulate_chain(chain, cfg), reference_run(chain, cfg)).max_abs_diff


def compare(first: Trajectory, second: Trajectory, windows: Iterable[tuple[float, float]] = ()) -> Comparison:
    """Difference metrics of two trajectories on the same grid, overall and per closed window."""
    if first.times.shape != second.times.shape or not np.allclose(first.times, second.times, rtol=0, atol=1e-12):
        raise ValueError("trajectories are sampled on different grids")
    diff = np.abs(first.values - second.values)
    by_window = {}
    for lo, hi in windows:
        mask = (first.times >= lo - 1e-12) & (first.times <= hi + 1e-12)
        if not mask.any():
            raise ValueError(f"window [{lo}, {hi}] contains no samples")
        by_window[(lo, hi)] = float(diff[mask].max())
    return Comparison(float(diff.max()), float(math.sqrt(np.mean(diff**2))), by_window)


@contextmanager
def _open_text(dest):
    if hasattr(dest, "write"):
        yield dest
    else:
        with open(dest, "w", newline="") as fh:
            yield fh


def write_csv(trajectory: Trajectory, dest) -> None:
    """Write ``t,y`` rows to a path or an open text stream."""
    with _open_text(dest) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "y"])
        for t, y in zip(trajectory.times, trajectory.values):
            writer.writerow([_fmt(t), _fmt(y)])


def write_comparison_csv(first: Trajectory, second: Trajectory, dest) -> None:
    """Write ``t,y_first,y_second,abs_diff`` rows to a path or an open text stream."""
    compare(first, second)
    with _open_text(dest) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "y_first", "y_second", "abs_diff"])
        for t, y1, y2 in zip(first.times, first.values, second.values):
            writer.writerow([_fmt(t), _fmt(y1), _fmt(y2), _fmt(abs(y1 - y2))])


def _fmt(value: float) -> str:
    return format(float(value), ".17g")
