"""Built-in scenarios `fig2`, `fig3` and `fig4`: three systems, their pair constants and a run setup.

All three start from the system

    y'' + (3 + sin t) y' + (3.25 + 0.25 sin^2 t + 1.5 sin t + 0.5 cos t) y = x

with ``B = pair(A, (1, -2, 0))`` and ``C = pair(B, m)``:

* ``fig2``: m = (1, 3, 3), every system starts at (1, -1.5).
* ``fig3``: m = (1, -1, 3), all initial states zero.
* ``fig4``: the fig2 systems with unrelated initial states.

Input ``40 sin(10 pi t)``, step 0.02, final time 10.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Mapping, Optional

from . import commute
from .commute import PairConstants
from .sim import SimulationConfig, compare, reference_run, simulate_chain, write_comparison_csv
from .system import InitialState, LTVSystem, commutativity_invariant, default_grid

SYSTEM_A = LTVSystem(
    "1", "3 + sin(t)", "3.25 + 0.25*sin(t)^2 + 1.5*sin(t) + 0.5*cos(t)", t0=0.0, name="A"
)
K_AB = PairConstants(1, -2, 0)
PAIRS = (("A", "B"), ("B", "C"), ("C", "A"))
WINDOWS = ((0.0, 1.0), (9.0, 10.0))


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    k: PairConstants
    m: PairConstants
    ics: Mapping[str, Optional[InitialState]]
    config: SimulationConfig
    description: str

    def systems(self) -> dict[str, LTVSystem]:
        a = SYSTEM_A
        b = commute.synthesize_pair(a, self.k)
        c = commute.synthesize_pair(b, self.m)
        named = {"A": a, "B": b, "C": c}
        return {
            key: LTVSystem(s.a2, s.a1, s.a0, t0=s.t0, ic=self.ics.get(key), name=key)
            for key, s in named.items()
        }


def _ics(**states) -> Mapping[str, Optional[InitialState]]:
    return MappingProxyType(states)


_RUN_CONFIG = SimulationConfig(t0=0.0, tf=10.0, step=0.02, input="40*sin(10*pi*t)")
_COMMON_IC = InitialState(1.0, -1.5)

SCENARIOS: Mapping[str, ScenarioSpec] = MappingProxyType(
    {
        "fig2": ScenarioSpec(
            "fig2",
            K_AB,
            PairConstants(1, 3, 3),
            _ics(A=_COMMON_IC, B=_COMMON_IC, C=_COMMON_IC),
            _RUN_CONFIG,
            "commutative pairs with the shared nonzero initial state (1, -1.5)",
        ),
        "fig3": ScenarioSpec(
            "fig3",
            K_AB,
            PairConstants(1, -1, 3),
            _ics(A=None, B=None, C=None),
            _RUN_CONFIG,
            "relaxed systems, C = pair(B, (1, -1, 3))",
        ),
        "fig4": ScenarioSpec(
            "fig4",
            K_AB,
            PairConstants(1, 3, 3),
            _ics(
                A=InitialState(0.4, -0.3),
                B=InitialState(0.2, -0.4),
                C=InitialState(-0.5, 0.5),
            ),
            _RUN_CONFIG,
            "systems commutative when relaxed, started from unrelated initial states",
        ),
    }
)


def get_scenario(name: str) -> ScenarioSpec:
    key = name if name.startswith("fig") else f"fig{name}"
    try:
        return SCENARIOS[key]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}") from None


def pair_runs(spec: ScenarioSpec, reference: bool = False) -> list:
    """``(label, forward, backward)`` trajectories for each scenario pair."""
    systems = spec.systems()
    run = reference_run if reference else simulate_chain
    out = []
    for x, y in PAIRS:
        chain = [systems[x], systems[y]]
        out.append((x + y, run(chain, spec.config), run(chain[::-1], spec.config)))
    return out


def summarize(spec: ScenarioSpec, grid=None, tol: float = 1e-9, reference: bool = False, runs=None) -> dict:
    """Algebraic checks plus simulation metrics for one scenario, as plain JSON data."""
    systems = spec.systems()
    a, b, c = systems["A"], systems["B"], systems["C"]
    grid = default_grid(a.t0) if grid is None else grid
    inv = {key: commutativity_invariant(s, grid, tol).value for key, s in systems.items()}
    p = commute.compose_constants(spec.k, spec.m)
    report = commute.check_transitivity(a, b, c, grid, tol)

    relaxed = all(s.state.is_zero for s in systems.values())
    if relaxed:
        quad = deriv = None
    else:
        quad = commute.ic_quadratic_residual(inv["A"], p)
        rho = commute.derivative_ratio(a, p)
        deriv = abs(c.state.dy0 - rho * c.state.y0)

    sims = {}
    for label, fwd, bwd in runs if runs is not None else pair_runs(spec):
        metrics = compare(fwd, bwd, WINDOWS)
        sims[label] = {
            "max_abs_diff": metrics.max_abs_diff,
            "rms_diff": metrics.rms_diff,
            "max_abs_diff_by_window": {f"{lo:g},{hi:g}": v for (lo, hi), v in metrics.max_abs_diff_by_window.items()},
        }
    if reference:
        for label, fwd, bwd in pair_runs(spec, reference=True):
            metrics = compare(fwd, bwd, WINDOWS)
            sims[label]["reference_max_abs_diff"] = metrics.max_abs_diff

    return {
        "scenario": spec.name,
        "description": spec.description,
        "config": spec.config.echo(),
        "systems": {key: s.to_dict() for key, s in systems.items()},
        "invariants": inv,
        "k": list(spec.k),
        "m": list(spec.m),
        "p": list(p),
        "ac_ic_quadratic_residual": quad,
        "ac_ic_derivative_residual": deriv,
        "transitivity": report.to_dict(),
        "simulations": sims,
    }


def write_scenario_outputs(spec: ScenarioSpec, directory, reference: bool = False) -> dict:
    """Write ``AB_BA.csv``, ``BC_CB.csv``, ``CA_AC.csv`` and ``summary.json``; returns the summary."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    runs = pair_runs(spec)
    for label, fwd, bwd in runs:
        write_comparison_csv(fwd, bwd, directory / f"{label}_{label[::-1]}.csv")
    summary = summarize(spec, reference=reference, runs=runs)
    (directory / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary
