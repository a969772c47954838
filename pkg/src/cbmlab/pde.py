"""Reaction-diffusion solver for dv/dt = v''/2 - v^2/2 with singular data.

The singular initial trace (lambda, mu) is realized at a small cutoff time
t_init: a plateau at the ceiling 2/t_init on a halo around lambda, plus
heat-mollified atoms, capped at the ceiling.  Time stepping is Strang
splitting with the reaction half-steps solved exactly,

    v <- v / (1 + v dt / 4),

which is unconditionally positive and keeps the 2/t ceiling invariant, and
an explicit centered diffusion step (zero-Dirichlet ends, dt <= dx^2/2).
Shrinking (dx, dt, t_init, halo) together is the convergence schedule; the
solver itself only ever sees regular data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConvergenceError, DomainError, ParameterError
from .fields import Field
from .spde import heat_kernel
from .traces import InitialTrace

__all__ = [
    "PdeParams",
    "solve_pde",
    "l1_norm",
    "kingman_rate",
    "envelope_halfline",
]


@dataclass(frozen=True)
class PdeParams:
    """Discretization of one PDE run.

    ``lambda_halo`` defaults to sqrt(t_init) (the natural width the solution
    develops around the singular set by time t_init) and ``cap`` defaults to
    the ceiling 2/t_init; a cap above the ceiling is rejected because 2/t is
    the maximal solution.  ``domain`` defaults to the trace support padded
    by ``domain_pad`` on both sides.  The explicit diffusion step uses
    dt = min(dt_max, dx^2/2); a dt_max above dx^2/2 is a stability error.
    """

    dx: float = 5e-3
    t_init: float = 1e-4
    lambda_halo: float | None = None
    cap: float | None = None
    dt_max: float | None = None
    domain_pad: float = 6.0
    domain: tuple[float, float] | None = None

    def __post_init__(self):
        if self.dx <= 0:
            raise ParameterError("dx must be positive")
        if self.t_init <= 0:
            raise ParameterError("t_init must be positive")
        if self.domain_pad <= 0:
            raise ParameterError("domain_pad must be positive")
        ceiling = 2.0 / self.t_init
        if self.cap is not None and self.cap > ceiling * (1 + 1e-12):
            raise ParameterError(f"cap {self.cap} exceeds the ceiling 2/t_init = {ceiling:g}")
        stab = self.dx * self.dx / 2.0
        if self.dt_max is not None and self.dt_max > stab * (1 + 1e-12):
            raise ParameterError(f"dt_max {self.dt_max} violates the bound dx^2/2 = {stab:g}")
        if self.lambda_halo is not None and self.lambda_halo < self.dx:
            raise ParameterError("lambda_halo below dx cannot be resolved on the grid")
        if self.domain is not None and not self.domain[1] > self.domain[0]:
            raise ParameterError("domain must satisfy x_lo < x_hi")

    @property
    def halo(self) -> float:
        return self.lambda_halo if self.lambda_halo is not None else max(math.sqrt(self.t_init), self.dx)

    @property
    def ceiling(self) -> float:
        return self.cap if self.cap is not None else 2.0 / self.t_init

    @property
    def dt(self) -> float:
        stab = self.dx * self.dx / 2.0
        return stab if self.dt_max is None else min(self.dt_max, stab)

    def refined(self, level: int) -> "PdeParams":
        """Halve dx and t_init per level (dt follows dx^2/2, halo sqrt(t_init))."""
        f = 2.0**level
        return PdeParams(
            dx=self.dx / f,
            t_init=self.t_init / f,
            lambda_halo=None if self.lambda_halo is None else self.lambda_halo / f,
            cap=None,
            dt_max=None if self.dt_max is None else self.dt_max / f**2,
            domain_pad=self.domain_pad,
            domain=self.domain,
        )


def _build_grid(trace: InitialTrace, params: PdeParams):
    if params.domain is not None:
        x_lo, x_hi = params.domain
    else:
        bounds = trace.support_bounds()
        if bounds is None:
            x_lo, x_hi = -params.domain_pad, params.domain_pad
        else:
            x_lo = bounds[0] - params.domain_pad
            x_hi = bounds[1] + params.domain_pad
    n = int(round((x_hi - x_lo) / params.dx)) + 1
    if n < 8:
        raise ParameterError("domain/dx give fewer than 8 nodes")
    x = x_lo + params.dx * np.arange(n)
    return x


def _initial_profile(trace: InitialTrace, params: PdeParams, x: np.ndarray) -> np.ndarray:
    v0 = np.zeros_like(x)
    for xa, w in trace.mu.atoms:
        v0 += w * heat_kernel(params.t_init, x - xa)
    if not trace.lam.is_empty:
        plateau = trace.lam.distance_to_points(x) <= params.halo
        v0 = plateau * params.ceiling + v0
    v0 = np.minimum(v0, params.ceiling)
    v0[0] = 0.0
    v0[-1] = 0.0
    return v0


def solve_pde(trace: InitialTrace, params: PdeParams, t_report) -> Field:
    """Solve with initial trace (lambda, mu); sample at the report times.

    The trace support must fit inside the padded domain.  The one exception
    is full-domain emulation: a lambda interval covering the whole domain
    stands in for an unbounded singular set, and then only interior nodes
    (away from the Dirichlet ends) are meaningful.  Every reported profile
    of a singular run is checked against the 2/t ceiling.
    """
    t_report = [float(t) for t in t_report]
    if not t_report or any(np.diff(t_report) <= 0):
        raise ParameterError("report times must be strictly increasing and nonempty")
    if t_report[0] <= params.t_init:
        raise ParameterError(
            f"first report time {t_report[0]} must exceed t_init={params.t_init}"
        )
    x = _build_grid(trace, params)
    x_lo, x_hi = x[0], x[-1]
    full_domain = (not trace.lam.is_empty) and trace.lam.contains_interval(x_lo, x_hi)
    bounds = trace.support_bounds()
    if bounds is not None and not full_domain:
        pad = params.domain_pad
        if bounds[0] < x_lo + pad - 1e-12 or bounds[1] > x_hi - pad + 1e-12:
            raise DomainError(
                f"trace support {bounds} exceeds the padded domain "
                f"[{x_lo + pad}, {x_hi - pad}]"
            )

    v = _initial_profile(trace, params, x)
    work = np.empty_like(v)
    dt_target = params.dt
    out = np.empty((len(t_report), x.size))
    t_cur = params.t_init
    for k, t_next in enumerate(t_report):
        span = t_next - t_cur
        n_sub = max(1, int(math.ceil(span / dt_target * (1.0 - 1e-12))))
        kernels.pde_explicit_segment(v, work, span / n_sub, params.dx, n_sub)
        t_cur = t_next
        out[k] = v
        if not trace.lam.is_empty:
            ceiling = 2.0 / t_next
            worst = float(np.max(v))
            if worst > ceiling * (1.0 + 1e-9):
                raise ConvergenceError(
                    f"profile at t={t_next} exceeds the 2/t ceiling: {worst} > {ceiling}"
                )
    return Field(t_grid=np.array(t_report), x_grid=x, values=out)


def l1_norm(field: Field, t: float) -> float:
    """Trapezoid-rule L1 norm of the profile at a reported time.

    Raises GridLookupError when t is not on the field's report grid.
    """
    return field.l1(t)


def kingman_rate(t: float) -> float:
    """2/t: the mean-field block-count decay from every pair merging at unit rate."""
    if t <= 0:
        raise ParameterError(f"kingman_rate needs t > 0, got {t}")
    return 2.0 / t


def envelope_halfline(t: float, x, c2: float = 2.0):
    """Half-line tail envelope (c2/t)(1 + x/sqrt(t)) exp(-x^2/2t) for x >= 0."""
    if t <= 0:
        raise ParameterError(f"envelope needs t > 0, got {t}")
    if c2 < 2.0:
        raise ParameterError(f"envelope constant must be >= 2, got {c2}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ParameterError("envelope is defined for x >= 0")
    rt = math.sqrt(t)
    out = (c2 / t) * (1.0 + x / rt) * np.exp(-(x * x) / (2.0 * t))
    return out if out.ndim else float(out)
