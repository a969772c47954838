"""Space-time field container shared by the PDE and SPDE solvers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridLookupError, ParameterError

__all__ = ["Field"]


@dataclass(frozen=True)
class Field:
    """Nonnegative scalar field sampled on (time grid) x (uniform space grid).

    Arrays are frozen after construction; a Field is safe to share across
    threads.  ``values[k, i]`` is the field at time ``t_grid[k]`` and
    position ``x_grid[i]``.
    """

    t_grid: np.ndarray
    x_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        x = np.asarray(self.x_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
            raise ParameterError("t_grid must be strictly increasing and positive")
        if x.ndim != 1 or x.size < 2:
            raise ParameterError("x_grid must hold at least two nodes")
        steps = np.diff(x)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ParameterError("x_grid must be uniform")
        if v.shape != (t.size, x.size):
            raise ParameterError(f"values shape {v.shape} does not match grids {(t.size, x.size)}")
        if not np.all(np.isfinite(v)):
            raise ParameterError("field values must be finite")
        if np.any(v < 0):
            raise ParameterError("field values must be nonnegative")
        for arr in (t, x, v):
            arr.setflags(write=False)
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "x_grid", x)
        object.__setattr__(self, "values", v)

    @property
    def dx(self) -> float:
        return float(self.x_grid[1] - self.x_grid[0])

    def time_index(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.t_grid - t)))
        ref = max(abs(t), 1e-300)
        if abs(self.t_grid[k] - t) > 1e-9 * ref:
            raise GridLookupError(f"time {t} is not on the report grid")
        return k

    def row(self, t: float) -> np.ndarray:
        return self.values[self.time_index(t)]

    def l1(self, t: float) -> float:
        """Trapezoid-rule integral of the profile at time t over the domain."""
        return float(np.trapz(self.row(t), self.x_grid))
