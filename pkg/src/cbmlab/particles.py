"""Coalescing Brownian particles and the non-spatial Kingman baseline.

Particles carry stable integer labels and one residual exponential budget
each (initial draws have mean 2).  Per step, every close pair (i, j) with
i > j charges the expected bridge local time of their gap against particle
i's budget, lower labels first; a particle whose budget hits zero dies at
that step and the surviving lower label is logged.  Using the conditional
mean of the local-time increment instead of its random value is the model's
one discretization bias; it vanishes as h -> 0 and is validated against the
exact two-particle merge law in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from . import kernels
from .errors import ParameterError
from .rng import spawn_generator
from .traces import AtomicMeasure

__all__ = [
    "CbmConfig",
    "ParticleSystemState",
    "CbmRun",
    "KingmanRun",
    "bridge_local_time_mean",
    "step_cbm",
    "simulate_cbm",
    "simulate_kingman",
    "localtime_clock",
]

_CHUNK_STEPS = 512


def bridge_local_time_mean(a, b, h: float, var_rate: float = 2.0):
    """Expected local time at 0 over one step given bridge endpoints (a, b).

    This is the semimartingale local time of a Brownian motion whose
    quadratic variation grows at ``var_rate`` per unit time: writing
    s2 = var_rate * h and g for the Gaussian density of variance s2,

        E[L | a -> b] = erfc((|a| + |b|) / sqrt(2 s2)) / (2 g(b - a)).

    For var_rate=1 this reduces to the occupation-density integral
    int_0^h g_s(a) g_{h-s}(b) / g_h(b-a) ds; for the gap of two independent
    standard Brownian particles use var_rate=2.  Vectorized over a and b.
    """
    if h <= 0:
        raise ParameterError(f"step size must be positive, got {h}")
    if var_rate <= 0:
        raise ParameterError(f"variance rate must be positive, got {var_rate}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s2 = var_rate * h
    z = (np.abs(a) + np.abs(b)) / math.sqrt(2.0 * s2)
    d = b - a
    small = z < 26.0
    arg = np.where(small, d * d / (2.0 * s2), 0.0)
    out = np.where(small, 0.5 * math.sqrt(2.0 * math.pi * s2) * erfc(z) * np.exp(arg), 0.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class CbmConfig:
    """One particle run: initial atoms, step size, horizon, pruning, seed.

    ``pair_cutoff`` is measured in units of sqrt(2h), the standard deviation
    of a one-step gap increment; pairs farther apart contribute nothing this
    step.  Coincident initial positions are separated by a deterministic
    ladder of ``offset_jitter`` so particle order is well defined.
    """

    initial: AtomicMeasure
    h: float
    T: float
    pair_cutoff: float = 6.0
    seed: int = 0
    offset_jitter: float = 1e-9

    def __post_init__(self):
        if self.h <= 0:
            raise ParameterError("step size h must be positive")
        if self.T < 0:
            raise ParameterError("horizon T must be nonnegative")
        if self.pair_cutoff < 4.0:
            raise ParameterError(f"pair_cutoff must be at least 4, got {self.pair_cutoff}")
        if self.offset_jitter <= 0:
            raise ParameterError("offset_jitter must be positive")

    @property
    def n_particles(self) -> int:
        return self.initial.total_mass

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.T / self.h - 1e-9))

    @property
    def cutoff_distance(self) -> float:
        return self.pair_cutoff * math.sqrt(2.0 * self.h)

    def initial_positions(self) -> np.ndarray:
        pos = []
        for x, w in self.initial.atoms:
            for j in range(w):
                pos.append(x + j * self.offset_jitter)
        return np.array(pos, dtype=float)


@dataclass
class ParticleSystemState:
    """Mutable particle-system state over stable original labels.

    ``positions_all``/``budgets_all`` keep one slot per original label;
    killed labels never reappear and their slots go stale.  The ``events``
    log holds (time, survivor_label, killed_label) triples.
    """

    positions_all: np.ndarray
    alive: np.ndarray
    budgets_all: np.ndarray
    time: float = 0.0
    step_index: int = 0
    events: list = field(default_factory=list)

    @classmethod
    def from_config(cls, config: CbmConfig, rng: np.random.Generator) -> "ParticleSystemState":
        """Draw the budgets (first use of the stream) and place particles."""
        pos = config.initial_positions()
        n = pos.size
        budgets = rng.exponential(2.0, n)
        return cls(
            positions_all=pos,
            alive=np.ones(n, dtype=bool),
            budgets_all=budgets,
        )

    @property
    def labels(self) -> np.ndarray:
        return np.flatnonzero(self.alive)

    @property
    def positions(self) -> np.ndarray:
        return self.positions_all[self.alive]

    @property
    def budgets(self) -> np.ndarray:
        return self.budgets_all[self.alive]

    @property
    def n_alive(self) -> int:
        return int(np.count_nonzero(self.alive))

    def count_in(self, lo: float, hi: float) -> int:
        p = self.positions
        return int(np.count_nonzero((p > lo) & (p < hi)))


def _advance(state: ParticleSystemState, increments: np.ndarray, h: float,
             cutoff_distance: float, windows_lo, windows_hi,
             counts_out, win_counts_out, freeze_last: bool = True) -> None:
    """Run the kernel over a chunk of pre-drawn increments (steps x labels)."""
    n = state.positions_all.size
    cap = n  # at most n-1 deaths ever
    ev_step = np.empty(cap, dtype=np.int64)
    ev_surv = np.empty(cap, dtype=np.int64)
    ev_kill = np.empty(cap, dtype=np.int64)
    n_ev = kernels.cbm_segment(
        state.positions_all, state.alive, state.budgets_all, increments,
        h, cutoff_distance,
        counts_out, windows_lo, windows_hi, win_counts_out,
        ev_step, ev_surv, ev_kill, 0, state.step_index, freeze_last,
    )
    for e in range(n_ev):
        state.events.append(((ev_step[e] + 1) * h, int(ev_surv[e]), int(ev_kill[e])))
    state.step_index += increments.shape[0]
    state.time = state.step_index * h


def step_cbm(state: ParticleSystemState, h: float, cutoff: float,
             rng: np.random.Generator) -> ParticleSystemState:
    """Advance the state by one step of size h, mutating and returning it.

    ``cutoff`` is the pair-pruning radius in units of sqrt(2h).  Increments
    are drawn for every original label (dead slots included) so that runs
    sharing a generator stay coupled label-by-label regardless of deaths.
    """
    n = state.positions_all.size
    incr = rng.standard_normal((1, n)) * math.sqrt(h)
    counts = np.empty(1, dtype=np.int64)
    nw_lo = np.empty(0)
    nw_hi = np.empty(0)
    win_counts = np.empty((1, 0), dtype=np.int64)
    _advance(state, incr, h, cutoff * math.sqrt(2.0 * h), nw_lo, nw_hi, counts, win_counts,
             freeze_last=False)
    return state


@dataclass(frozen=True)
class CbmRun:
    """Trajectory summary: counts per step plus window counts and events."""

    times: np.ndarray          # (n_steps + 1,), starting at 0
    alive_counts: np.ndarray   # (n_steps + 1,)
    events: tuple              # ((time, survivor, killed), ...)
    windows: tuple             # ((lo, hi), ...)
    window_counts: np.ndarray  # (n_steps + 1, n_windows)

    def count_at(self, t: float, window: int | None = None) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if window is None:
            return int(self.alive_counts[k])
        return int(self.window_counts[k, window])


def simulate_cbm(config: CbmConfig, windows=(), replica=0) -> CbmRun:
    """Full trajectory of alive counts; deterministic under (seed, replica).

    ``windows`` is a sequence of open intervals (lo, hi) whose particle
    counts are recorded at every step alongside the total.  Use +-inf for a
    full-line window.  An empty initial measure yields the empty series.
    """
    path = (replica,) if isinstance(replica, int) else tuple(replica)
    rng = spawn_generator(config.seed, *path)
    if config.initial.is_empty:
        return CbmRun(
            times=np.zeros(1),
            alive_counts=np.zeros(1, dtype=np.int64),
            events=(),
            windows=tuple(windows),
            window_counts=np.zeros((1, len(tuple(windows))), dtype=np.int64),
        )
    state = ParticleSystemState.from_config(config, rng)
    n = state.positions_all.size
    n_steps = config.n_steps
    win = tuple((float(lo), float(hi)) for lo, hi in windows)
    win_lo = np.array([w[0] for w in win], dtype=float)
    win_hi = np.array([w[1] for w in win], dtype=float)

    counts = np.empty(n_steps + 1, dtype=np.int64)
    win_counts = np.empty((n_steps + 1, len(win)), dtype=np.int64)
    counts[0] = n
    for w in range(len(win)):
        win_counts[0, w] = state.count_in(win_lo[w], win_hi[w])

    sqrt_h = math.sqrt(config.h)
    done = 0
    while done < n_steps:
        k = min(_CHUNK_STEPS, n_steps - done)
        incr = rng.standard_normal((k, n)) * sqrt_h
        _advance(
            state, incr, config.h, config.cutoff_distance,
            win_lo, win_hi,
            counts[done + 1 : done + 1 + k],
            win_counts[done + 1 : done + 1 + k],
        )
        done += k
    times = np.arange(n_steps + 1) * config.h
    return CbmRun(
        times=times,
        alive_counts=counts,
        events=tuple(state.events),
        windows=win,
        window_counts=win_counts,
    )


@dataclass(frozen=True)
class KingmanRun:
    """Exact merge times of the non-spatial coalescent, truncated at T."""

    n_initial: int
    T: float
    jump_times: np.ndarray

    @property
    def block_counts(self) -> np.ndarray:
        """Block count right after each jump: n-1, n-2, ..."""
        return self.n_initial - 1 - np.arange(self.jump_times.size)

    def count_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = self.n_initial - np.searchsorted(self.jump_times, t, side="right")
        return out if out.ndim else int(out)


def simulate_kingman(n: int, T: float, seed: int, replica=0) -> KingmanRun:
    """Exact continuous-time simulation: from k blocks wait Exp(k(k-1)/2).

    Every pair merges at unit rate independently, so the holding time at k
    blocks is exponential with rate k(k-1)/2; the path is simulated jump by
    jump until the horizon or a single block remains.
    """
    if n < 1:
        raise ParameterError(f"need at least one block, got {n}")
    path = (replica,) if isinstance(replica, int) else tuple(replica)
    rng = spawn_generator(seed, *path)
    if n == 1:
        return KingmanRun(n_initial=1, T=T, jump_times=np.empty(0))
    ks = np.arange(n, 1, -1, dtype=float)
    waits = rng.exponential(1.0, n - 1) / (ks * (ks - 1.0) / 2.0)
    times = np.cumsum(waits)
    m = int(np.searchsorted(times, T, side="right"))
    return KingmanRun(n_initial=n, T=T, jump_times=times[:m])


def localtime_clock(t: float) -> float:
    """Expected local time at 0 of a standard Brownian motion by time t."""
    if t <= 0:
        raise ParameterError(f"localtime_clock needs t > 0, got {t}")
    return math.sqrt(2.0 * t / math.pi)
