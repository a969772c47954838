"""Coming-down-from-infinity rate extraction and regime verdicts.

Three regimes of the mass decay t -> ||v_t||_L1 are checked against their
targets: a finite set A of k points gives sqrt(t)*mass -> k * C1 with C1 the
mass of the single-point solution at t = 1; a positive-measure A gives
t*mass -> 2*lambda(A); a fractal A of Minkowski dimension d gives log-log
slope -(1+d)/2.  C1 carries no closed form; it is produced once by
``estimate_c1`` under pinned parameters, stored in ``data/c1_reference.json``
together with the generating configuration, and reused everywhere.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import ConvergenceError, ParameterError, WindowError
from .fields import Field
from .fitting import PowerFit, fit_power_law
from .pde import PdeParams, l1_norm, solve_pde
from .traces import CANTOR_DIMENSION, InitialTrace, IntervalSet, AtomicMeasure

__all__ = [
    "PowerFit",
    "fit_power_law",
    "C1Estimate",
    "estimate_c1",
    "pinned_c1",
    "Verdict",
    "rate_report",
    "PIN_LADDER",
]

# pin ladder geometry: halo = 4 dx and t_init = halo^2, so each level is an
# exact factor-2 spatial rescaling of the previous one
PIN_LADDER = (
    {"dx": 5e-3, "level": 0},
    {"dx": 2.5e-3, "level": 1},
    {"dx": 1.25e-3, "level": 2},
)


def ladder_params(dx: float, domain_pad: float = 6.0) -> PdeParams:
    halo = 4.0 * dx
    return PdeParams(dx=dx, t_init=halo * halo, lambda_halo=halo, domain_pad=domain_pad)


@dataclass(frozen=True)
class C1Estimate:
    """Per-level values of the single-point mass constant and an extrapolate."""

    levels: tuple[dict, ...]
    extrapolated: float
    relative_change: float

    @property
    def value(self) -> float:
        """The pinned value: the finest computed level."""
        return self.levels[-1]["c1"]


def estimate_c1(base: PdeParams | None = None, n_levels: int = 2, *,
                t_eval: float = 1.0, tol: float = 0.05) -> C1Estimate:
    """Mass of the single-point solution at t_eval, across refinement levels.

    Each level halves dx (halo and sqrt(t_init) follow, keeping the
    initialization geometrically self-similar) and evaluates
    sqrt(t) * ||v_t||_1 for the trace ({0}, 0), which is t-independent for
    the exact solution.  Levels disagreeing by more than ``tol`` raise a
    convergence failure.  The extrapolate assumes the level-to-level error
    halves (first order in the refinement parameter, conservative).
    """
    if n_levels < 2:
        raise ParameterError("need at least 2 refinement levels")
    trace = InitialTrace(IntervalSet.point(0.0), AtomicMeasure.empty())
    if base is None:
        base = ladder_params(PIN_LADDER[1]["dx"])
    levels = []
    for lev in range(n_levels):
        p = base.refined(lev)
        f = solve_pde(trace, p, [t_eval])
        val = math.sqrt(t_eval) * l1_norm(f, t_eval)
        levels.append({"level": lev, "dx": p.dx, "t_init": p.t_init,
                       "halo": p.halo, "t_eval": t_eval, "c1": val})
    vals = [d["c1"] for d in levels]
    rel = abs(vals[-1] - vals[-2]) / vals[-1]
    if rel > tol:
        raise ConvergenceError(
            f"refinement levels disagree by {rel:.3%} (> {tol:.0%}): {vals}"
        )
    extrapolated = vals[-1] + (vals[-1] - vals[-2])
    return C1Estimate(levels=tuple(levels), extrapolated=extrapolated, relative_change=rel)


def pinned_c1() -> tuple[float, dict]:
    """The checked-in reference constant and its generating record."""
    doc = json.loads(
        resources.files("cbmlab").joinpath("data/c1_reference.json").read_text()
    )
    return float(doc["c1"]), doc


@dataclass(frozen=True)
class Verdict:
    case: str
    measured: float
    target: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.measured - self.target) <= self.tolerance

    def row(self) -> tuple:
        return (self.case, self.measured, self.target, self.tolerance, self.passed)


def _usable_times(field: Field, t_init: float) -> np.ndarray:
    t = field.t_grid
    return t[t >= 10.0 * t_init]


def rate_report(
    kind: str,
    field: Field,
    trace: InitialTrace,
    *,
    t_init: float,
    c1: float | None = None,
    cantor_depth: int | None = None,
    t_eval: float = 1e-3,
    window: tuple[float, float] = (1e-3, 1e-1),
    rel_tol_points: float = 0.03,
    rel_tol_interval: float = 0.05,
    abs_tol_exponent: float = 0.05,
) -> Verdict:
    """Check one decay regime of a solved field against its target.

    ``kind`` is "points" (sqrt(t) * mass -> C1 * #A, needs ``c1``),
    "interval" (t * mass -> 2 lambda(A)), or "cantor" (log-log slope of the
    mass over ``window`` -> -(1 + log2/log3)/2, needs ``cantor_depth``).
    The fitted case requires the report times to span 1.5 decades above
    10 * t_init and the window to stay above the prefix resolution.
    """
    if kind == "points":
        if c1 is None:
            raise ParameterError("points case needs the pinned C1 value")
        if any(b > a for a, b in trace.lam.intervals):
            raise ParameterError("points case expects a finite set of degenerate intervals")
        k = len(trace.lam.intervals)
        measured = math.sqrt(t_eval) * l1_norm(field, t_eval)
        target = c1 * k
        return Verdict(case=f"points#{k}", measured=measured, target=target,
                       tolerance=rel_tol_points * target)
    if kind == "interval":
        lam = trace.lam.total_length
        if lam <= 0:
            raise ParameterError("interval case needs positive total length")
        measured = t_eval * l1_norm(field, t_eval)
        target = 2.0 * lam
        return Verdict(case=f"interval(len={lam:g})", measured=measured, target=target,
                       tolerance=rel_tol_interval * target)
    if kind == "cantor":
        if cantor_depth is None:
            raise ParameterError("cantor case needs the construction depth")
        usable = _usable_times(field, t_init)
        sel = usable[(usable >= window[0]) & (usable <= window[1])]
        if sel.size < 4:
            raise WindowError("fewer than 4 usable report times in the fit window")
        if sel.max() / sel.min() < 10.0**1.5 * (1 - 1e-9):
            raise WindowError(
                f"fit window [{sel.min():g}, {sel.max():g}] spans less than 1.5 decades"
            )
        resolution = 3.0 ** (-2 * cantor_depth)
        if window[0] < 10.0 * resolution:
            raise WindowError(
                f"window start {window[0]:g} is below the depth-{cantor_depth} prefix "
                f"resolution {resolution:g}; the decay changes regime there"
            )
        samples = [(t, l1_norm(field, t)) for t in sel]
        fit = fit_power_law(samples)
        target = -(1.0 + CANTOR_DIMENSION) / 2.0
        return Verdict(case=f"cantor(d={cantor_depth})", measured=fit.exponent,
                       target=target, tolerance=abs_tol_exponent)
    raise ParameterError(f"unknown rate case {kind!r}")
