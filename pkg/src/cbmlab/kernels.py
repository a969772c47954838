"""Hot inner loops with a numba fast path and a pure-numpy fallback.

The backend is chosen once at import time: numba is used when it imports
cleanly and the environment variable ``CBMLAB_NO_NUMBA`` is unset (or "0");
setting ``CBMLAB_NO_NUMBA=1`` forces the pure-numpy/interpreted path.  The
module exposes the active implementations under stable names plus the
per-backend variants (``*_numba`` is None when numba is off) so tests and
``benchmarks/`` can compare both.

Numerical contracts:

* ``pde_explicit_segment`` advances the reaction-diffusion field by Strang
  steps: exact half-step of v' = -v^2/2, explicit centered diffusion with
  zero-Dirichlet ends, exact half-step again.  Requires dt <= dx^2/2.
* ``spde_segment`` is the explicit Euler update of the [0,1]-valued noisy
  heat equation: the drifted value m stays in [0,1] by convexity and the
  per-cell noise increment sqrt(dt/dx)*sqrt(max(0, u(1-u)))*xi is clamped
  symmetrically to [-min(m, 1-m), +min(m, 1-m)].  The symmetric clamp keeps
  the increment exactly mean-zero, so the ensemble mean follows the discrete
  heat semigroup; a one-sided clip of u would pump mass at the front.
* ``cbm_segment`` advances the coalescing-particle state; per pair and per
  step it subtracts the closed-form expected bridge-crossing local time from
  the higher label's exponential budget (label-ascending sweep, so a death
  never depends on higher labels).

The two backends are written to execute the same floating-point expressions
elementwise; results agree bitwise except where noted in tests.
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = [
    "BACKEND",
    "NUMBA_ENABLED",
    "bridge_local_time",
    "pde_explicit_segment",
    "pde_explicit_segment_numba",
    "pde_explicit_segment_numpy",
    "spde_segment",
    "spde_segment_numba",
    "spde_segment_numpy",
    "cbm_segment",
    "cbm_segment_numba",
    "cbm_segment_python",
]


def _numba_requested() -> bool:
    return os.environ.get("CBMLAB_NO_NUMBA", "0").lower() not in ("1", "true", "yes")


NUMBA_ENABLED = False
if _numba_requested():
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False

BACKEND = "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------------------
# expected bridge local time at zero
# ---------------------------------------------------------------------------

def _bridge_impl(a: float, b: float, h: float, var_rate: float) -> float:
    """E[semimartingale local time at 0 over one step | endpoints a, b].

    For a Brownian motion X with quadratic variation var_rate * t, the
    occupation density of the (a -> b, duration h) bridge at level 0 is
    int_0^h g_s(a) g_{h-s}(b) / g_h(b-a) ds with g the centered Gaussian
    kernel of variance var_rate*s.  The Laplace transform of g_s(x) in s
    gives the closed form

        int_0^h g_s(|a|) g_{h-s}(|b|) ds = erfc((|a|+|b|)/sqrt(2 var h)) / (2 var)

    and the local time (occupation density times quadratic variation) is

        E[L] = erfc((|a|+|b|)/sqrt(2 var h)) / (2 g_h(b-a)).

    Overflow-safe: the erfc argument z bounds the exp argument by z^2.
    """
    s2 = var_rate * h
    z = (abs(a) + abs(b)) / math.sqrt(2.0 * s2)
    if z >= 26.0:
        return 0.0
    d = b - a
    return 0.5 * math.sqrt(2.0 * math.pi * s2) * math.erfc(z) * math.exp(d * d / (2.0 * s2))


# ---------------------------------------------------------------------------
# reaction-diffusion field, explicit scheme
# ---------------------------------------------------------------------------

def _pde_segment_loop(v, work, dt, dx, n_steps):
    m = v.shape[0]
    q = 0.25 * dt
    c = 0.5 * dt / (dx * dx)
    for _ in range(n_steps):
        for i in range(m):
            v[i] = v[i] / (1.0 + q * v[i])
        work[0] = 0.0
        work[m - 1] = 0.0
        for i in range(1, m - 1):
            work[i] = v[i] + c * (v[i + 1] - 2.0 * v[i] + v[i - 1])
        for i in range(m):
            v[i] = work[i] / (1.0 + q * work[i])


def _pde_segment_numpy(v, work, dt, dx, n_steps):
    q = 0.25 * dt
    c = 0.5 * dt / (dx * dx)
    for _ in range(n_steps):
        v[:] = v / (1.0 + q * v)
        work[0] = 0.0
        work[-1] = 0.0
        work[1:-1] = v[1:-1] + c * (v[2:] - 2.0 * v[1:-1] + v[:-2])
        v[:] = work / (1.0 + q * work)


# ---------------------------------------------------------------------------
# [0,1]-valued noisy heat equation, explicit Euler with clipping
# ---------------------------------------------------------------------------

def _spde_segment_loop(u, work, noise, dt, dx, periodic):
    k_steps = noise.shape[0]
    m = u.shape[0]
    c = 0.5 * dt / (dx * dx)
    amp = math.sqrt(dt / dx)
    for k in range(k_steps):
        for i in range(m):
            im = i - 1
            ip = i + 1
            if im < 0:
                im = m - 1 if periodic else 1
            if ip >= m:
                ip = 0 if periodic else m - 2
            g = u[i] * (1.0 - u[i])
            if g < 0.0:
                g = 0.0
            mean = u[i] + c * (u[ip] - 2.0 * u[i] + u[im])
            eta = amp * math.sqrt(g) * noise[k, i]
            cap = mean if mean < 1.0 - mean else 1.0 - mean
            if eta > cap:
                eta = cap
            elif eta < -cap:
                eta = -cap
            work[i] = mean + eta
        for i in range(m):
            u[i] = work[i]


def _spde_segment_numpy(u, work, noise, dt, dx, periodic):
    k_steps = noise.shape[0]
    c = 0.5 * dt / (dx * dx)
    amp = math.sqrt(dt / dx)
    up = np.empty_like(u)
    um = np.empty_like(u)
    for k in range(k_steps):
        if periodic:
            up[:-1] = u[1:]
            up[-1] = u[0]
            um[1:] = u[:-1]
            um[0] = u[-1]
        else:
            up[:-1] = u[1:]
            up[-1] = u[-2]
            um[1:] = u[:-1]
            um[0] = u[1]
        g = np.maximum(u * (1.0 - u), 0.0)
        mean = u + c * (up - 2.0 * u + um)
        eta = amp * np.sqrt(g) * noise[k]
        cap = np.minimum(mean, 1.0 - mean)
        work[:] = mean + np.clip(eta, -cap, cap)
        u[:] = work


# ---------------------------------------------------------------------------
# coalescing Brownian particles, one chunk of steps
# ---------------------------------------------------------------------------

def _make_cbm_segment(bridge, jit=None):
    def _cbm_segment(pos, alive, budgets, incr, h, cutoff_dist,
                     counts, win_lo, win_hi, win_counts,
                     ev_step, ev_surv, ev_kill, n_ev0, step0, freeze_last):
        n = pos.shape[0]
        k_steps = incr.shape[0]
        n_windows = win_lo.shape[0]
        n_ev = n_ev0
        for k in range(k_steps):
            n_alive = 0
            for lab in range(n):
                if alive[lab]:
                    n_alive += 1
            if n_alive <= 1 and n_windows == 0 and freeze_last:
                # coalescence is over and nothing position-dependent is
                # recorded; counts stay frozen
                for kk in range(k, k_steps):
                    counts[kk] = n_alive
                break
            idx = np.empty(n_alive, np.int64)
            c = 0
            for lab in range(n):
                if alive[lab]:
                    idx[c] = lab
                    c += 1
            pre = np.empty(n_alive, np.float64)
            for a in range(n_alive):
                pre[a] = pos[idx[a]]
            for a in range(n_alive):
                lab = idx[a]
                pos[lab] = pos[lab] + incr[k, lab]
            order = np.argsort(pre)
            rank = np.empty(n_alive, np.int64)
            for r in range(n_alive):
                rank[order[r]] = r
            dying = np.zeros(n_alive, np.uint8)
            nbr = np.empty(n_alive, np.int64)
            for a in range(n_alive):
                i_lab = idx[a]
                r = rank[a]
                m_nbr = 0
                rr = r - 1
                while rr >= 0:
                    b = order[rr]
                    if pre[a] - pre[b] > cutoff_dist:
                        break
                    if b < a and dying[b] == 0:
                        nbr[m_nbr] = b
                        m_nbr += 1
                    rr -= 1
                rr = r + 1
                while rr < n_alive:
                    b = order[rr]
                    if pre[b] - pre[a] > cutoff_dist:
                        break
                    if b < a and dying[b] == 0:
                        nbr[m_nbr] = b
                        m_nbr += 1
                    rr += 1
                # race in ascending label order (alive-list index order)
                for q in range(1, m_nbr):
                    key = nbr[q]
                    p = q - 1
                    while p >= 0 and nbr[p] > key:
                        nbr[p + 1] = nbr[p]
                        p -= 1
                    nbr[p + 1] = key
                for q in range(m_nbr):
                    b = nbr[q]
                    j_lab = idx[b]
                    gap_pre = pre[a] - pre[b]
                    gap_post = pos[i_lab] - pos[j_lab]
                    dl = bridge(gap_pre, gap_post, h, 2.0)
                    budgets[i_lab] -= dl
                    if budgets[i_lab] <= 0.0:
                        dying[a] = 1
                        ev_step[n_ev] = step0 + k
                        ev_surv[n_ev] = j_lab
                        ev_kill[n_ev] = i_lab
                        n_ev += 1
                        break
            cnt = 0
            for a in range(n_alive):
                if dying[a] == 1:
                    alive[idx[a]] = False
                else:
                    cnt += 1
            counts[k] = cnt
            for w in range(n_windows):
                cw = 0
                for a in range(n_alive):
                    if dying[a] == 0:
                        x = pos[idx[a]]
                        if win_lo[w] < x < win_hi[w]:
                            cw += 1
                win_counts[k, w] = cw
        return n_ev

    if jit is not None:
        return jit(_cbm_segment)
    return _cbm_segment


# ---------------------------------------------------------------------------
# backend wiring
# ---------------------------------------------------------------------------

if NUMBA_ENABLED:
    _jit = _njit(cache=True, fastmath=False)
    bridge_local_time = _jit(_bridge_impl)
    pde_explicit_segment_numba = _jit(_pde_segment_loop)
    spde_segment_numba = _jit(_spde_segment_loop)
    cbm_segment_numba = _make_cbm_segment(bridge_local_time, jit=_njit(fastmath=False))
    pde_explicit_segment = pde_explicit_segment_numba
    spde_segment = spde_segment_numba
    cbm_segment = cbm_segment_numba
else:
    bridge_local_time = _bridge_impl
    pde_explicit_segment_numba = None
    spde_segment_numba = None
    cbm_segment_numba = None
    pde_explicit_segment = _pde_segment_numpy
    spde_segment = _spde_segment_numpy
    cbm_segment = _make_cbm_segment(_bridge_impl)

pde_explicit_segment_numpy = _pde_segment_numpy
spde_segment_numpy = _spde_segment_numpy
cbm_segment_python = _make_cbm_segment(_bridge_impl)
