"""Monte-Carlo checks of the moment duality and of the mean-count rate.

The moment duality equates, for u0 = eps * 1_U and a finite particle
configuration (x_i),

    E[ (1-eps)^(number of particles in U at t) ]  =  E[ prod_i (1 - u_t(x_i)) ].

Both sides are estimated independently (particles left, noisy field right)
and compared through a z score; the identity is exact for the continuum
models, so z measures discretization bias against MC resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import DomainError, ParameterError
from .fields import Field
from .particles import CbmConfig, simulate_cbm
from .pde import PdeParams, solve_pde
from .spde import SpdeParams, indicator_ic, solve_spde
from .traces import AtomicMeasure, InitialTrace

__all__ = [
    "DualityReport",
    "shiga_check",
    "mean_count_vs_pde",
    "MeanCountTable",
    "DESK_CASES",
    "desk_positions",
]

# desk-scale duality matrix: particle counts x indicator heights x horizons
DESK_CASES = tuple(
    (n, eps, t)
    for n in (1, 2, 3, 5)
    for eps in (0.05, 0.2, 0.5)
    for t in (0.1, 0.25)
)

DESK_WINDOW = (-0.5, 0.5)


def desk_positions(n: int) -> tuple[float, ...]:
    """Fixed desk-scale initial configurations spread over [-1, 1]."""
    if n == 1:
        return (0.0,)
    return tuple(np.linspace(-1.0, 1.0, n))


@dataclass(frozen=True)
class DualityReport:
    """Two independent MC estimates of one identity plus their z distance."""

    lhs_mean: float
    lhs_se: float
    rhs_mean: float
    rhs_se: float
    n_runs_lhs: int
    n_runs_rhs: int

    @property
    def z(self) -> float:
        gap = abs(self.lhs_mean - self.rhs_mean)
        spread = math.hypot(self.lhs_se, self.rhs_se)
        if spread == 0.0:
            return 0.0 if gap == 0.0 else math.inf
        return gap / spread

    def to_dict(self) -> dict:
        return {
            "lhs_mean": self.lhs_mean,
            "lhs_se": self.lhs_se,
            "rhs_mean": self.rhs_mean,
            "rhs_se": self.rhs_se,
            "n_runs_lhs": self.n_runs_lhs,
            "n_runs_rhs": self.n_runs_rhs,
            "z": self.z,
        }


def _mean_se(samples: np.ndarray) -> tuple[float, float]:
    m = float(np.mean(samples))
    if samples.size < 2:
        return m, 0.0
    return m, float(np.std(samples, ddof=1) / math.sqrt(samples.size))


def shiga_check(
    initial: AtomicMeasure,
    U: tuple[float, float],
    eps: float,
    t: float,
    runs: int,
    seed: int = 0,
    *,
    cbm_h: float = 2.5e-4,
    spde_params: SpdeParams | None = None,
) -> DualityReport:
    """Estimate both sides of the duality identity for u0 = eps * 1_U.

    The left side runs the particle system (replica streams (0, k) under
    ``seed``), the right side the noisy field (streams (1, k)).  The domain
    of the field run must contain every particle position and U with two
    units of padding.
    """
    if not 0.0 <= eps < 1.0:
        raise ParameterError(f"eps must lie in [0, 1), got {eps}")
    n = initial.total_mass
    if n > 20:
        raise ParameterError(f"desk-scale duality check caps at 20 particles, got {n}")
    if runs < 2:
        raise ParameterError("need at least 2 runs per side")
    lo, hi = float(U[0]), float(U[1])
    if not hi > lo:
        raise ParameterError("window U must have positive length")
    if eps == 0.0:
        return DualityReport(1.0, 0.0, 1.0, 0.0, runs, runs)

    params = spde_params if spde_params is not None else SpdeParams(seed=seed)
    positions = initial.positions
    weights = initial.weights
    if positions.size == 0:
        raise ParameterError("initial configuration is empty")
    pad = 2.0
    d_lo, d_hi = params.domain
    if math.isinf(lo) or math.isinf(hi):
        if positions.min() - pad < d_lo or positions.max() + pad > d_hi:
            raise DomainError("unbounded U needs all particles inside the padded domain")
    else:
        need_lo = min(positions.min(), lo) - pad
        need_hi = max(positions.max(), hi) + pad
        if need_lo < d_lo or need_hi > d_hi:
            raise DomainError(
                f"field domain {params.domain} cannot hold particles and U with padding {pad}"
            )

    lhs = np.empty(runs)
    for rep in range(runs):
        cfg = CbmConfig(initial=initial, h=cbm_h, T=t, seed=seed)
        run = simulate_cbm(cfg, windows=[(lo, hi)], replica=(0, rep))
        z_count = run.window_counts[-1, 0]
        lhs[rep] = (1.0 - eps) ** z_count

    f0 = indicator_ic(params, lo, hi, eps) if not math.isinf(hi) else np.full(params.n_cells, eps)
    rhs = np.empty(runs)
    for rep in range(runs):
        u = solve_spde(f0, t, params, replica=(1, rep)).values[-1]
        vals = np.interp(positions, params.x_centers, u)
        rhs[rep] = float(np.prod((1.0 - vals) ** weights))

    lm, ls = _mean_se(lhs)
    rm, rs = _mean_se(rhs)
    return DualityReport(lm, ls, rm, rs, runs, runs)


@dataclass(frozen=True)
class MeanCountTable:
    """Mean particle count in U against the PDE mass for each report time."""

    t: np.ndarray
    mean_count: np.ndarray
    se_count: np.ndarray
    pde_mass: np.ndarray
    ratio: np.ndarray

    def rows(self):
        for k in range(self.t.size):
            yield (self.t[k], self.mean_count[k], self.se_count[k],
                   self.pde_mass[k], self.ratio[k])


def _window_mass(field: Field, t: float, lo: float, hi: float) -> float:
    x = field.x_grid
    row = field.row(t)
    mask = (x >= lo) & (x <= hi)
    if mask.sum() < 2:
        return 0.0
    return float(np.trapz(row[mask], x[mask]))


def mean_count_vs_pde(
    initial: AtomicMeasure,
    halo_trace: InitialTrace,
    U: tuple[float, float],
    t_list,
    runs: int,
    seed: int = 0,
    *,
    cbm_h: float = 1e-4,
    pde_params: PdeParams | None = None,
    guard: float = 0.01,
) -> MeanCountTable:
    """Ratio of the mean particle count in U to the PDE mass over U.

    ``halo_trace`` is the singular trace the finite configuration stands in
    for (N atoms at the origin approximate lambda = {0}).  The ratio is
    reported as NaN whenever both sides fall below ``guard``: there the
    comparison is vacuous (both sides are Gaussian-tail small).
    """
    t_list = sorted(float(t) for t in t_list)
    if not t_list:
        raise ParameterError("need at least one report time")
    if runs < 1:
        raise ParameterError("need at least one particle replica")
    lo, hi = float(U[0]), float(U[1])

    cfg = CbmConfig(initial=initial, h=cbm_h, T=t_list[-1], seed=seed)
    acc = np.zeros(len(t_list))
    acc2 = np.zeros(len(t_list))
    marks = [int(round(t / cbm_h)) for t in t_list]
    for rep in range(runs):
        run = simulate_cbm(cfg, windows=[(lo, hi)], replica=rep)
        vals = run.window_counts[marks, 0].astype(float)
        acc += vals
        acc2 += vals * vals
    mean = acc / runs
    if runs > 1:
        var = np.maximum(acc2 / runs - mean * mean, 0.0) * runs / (runs - 1)
        se = np.sqrt(var / runs)
    else:
        se = np.zeros_like(mean)

    params = pde_params if pde_params is not None else PdeParams(dx=2e-3, t_init=1e-5)
    f = solve_pde(halo_trace, params, t_list)
    x_lo = f.x_grid[0]
    x_hi = f.x_grid[-1]
    mass = np.array([
        _window_mass(f, t, max(lo, x_lo), min(hi, x_hi)) for t in t_list
    ])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(
            (mean < guard) & (mass < guard), np.nan, mean / mass
        )
    return MeanCountTable(
        t=np.array(t_list),
        mean_count=mean,
        se_count=se,
        pde_mass=mass,
        ratio=ratio,
    )
