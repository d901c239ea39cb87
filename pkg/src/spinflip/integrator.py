"""Adaptive Dormand-Prince 5(4) integration of many autonomous orbits at once.

Each orbit carries its own step size, so a batch gives exactly the same
numbers per orbit as integrating the orbits one by one.  After every
accepted step an optional projection (renormalization) is applied.
Events are located by sign change between accepted steps and refined by
bisection, evaluating intermediate points with a single fresh step from
the start of the bracketing step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B5 - B4

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
EVENT_TIME_TOL = 1e-10


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Event:
    """Zero of ``func(y)``; ``direction`` -1/+1 keeps only falling/rising crossings."""

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    direction: int = 0
    terminal: bool = False


@dataclass
class EventRecord:
    event_id: str
    t: float
    state: np.ndarray
    orbit: int = 0


@dataclass
class BatchResult:
    t_final: np.ndarray
    y_final: np.ndarray
    stop_time: np.ndarray  # first terminal event time per orbit, nan if none
    events: list[EventRecord] = field(default_factory=list)
    steps: np.ndarray | None = None
    trajectory: list[tuple[np.ndarray, np.ndarray]] | None = None


def _step(rhs, y, h, k1):
    """One DP5 step of per-orbit size h (shape (B,)).  Returns y5, error estimate."""
    hc = h[:, None]
    ks = [k1]
    for i in range(1, 6):
        yi = y + hc * sum(a * k for a, k in zip(A[i], ks))
        ks.append(rhs(yi))
    y5 = y + hc * sum(b * k for b, k in zip(B5[:6], ks))
    ks.append(rhs(y5))
    err = hc * sum(e * k for e, k in zip(E, ks))
    return y5, err


def _error_norm(err, y, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return np.sqrt(np.mean((err / scale) ** 2, axis=1))


def _initial_step(rhs, y, rtol, atol, h_max):
    scale = atol + rtol * np.abs(y)
    f0 = rhs(y)
    d0 = np.sqrt(np.mean((y / scale) ** 2, axis=1))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2, axis=1))
    h0 = np.where((d0 < 1e-5) | (d1 < 1e-5), 1e-6, 0.01 * d0 / np.maximum(d1, 1e-300))
    return np.minimum(h0, h_max)


def integrate_batch(
    rhs: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    t_end: float | np.ndarray,
    tol: float = 1e-10,
    events: Sequence[Event] = (),
    project: Callable[[np.ndarray], np.ndarray] | None = None,
    record: bool = False,
    max_steps: int = 1_000_000,
) -> BatchResult:
    """Integrate ``y' = rhs(y)`` for every row of ``y0`` from t=0 to ``t_end``.

    ``tol`` is used as both relative and absolute tolerance.  ``t_end`` may be
    given per orbit.  Orbits stop early at their first terminal event.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    y = np.array(y0, dtype=float, ndmin=2, copy=True)
    n = y.shape[0]
    t_end = np.broadcast_to(np.asarray(t_end, dtype=float), (n,)).copy()
    rtol = atol = tol
    t = np.zeros(n)
    h = _initial_step(rhs, y, rtol, atol, np.maximum(t_end, 1e-300))
    active = t_end > 0
    stop_time = np.full(n, np.nan)
    steps = np.zeros(n, dtype=int)
    records: list[EventRecord] = []
    traj = [([0.0], [y[0].copy()])] if record else None
    if record and n != 1:
        raise ValueError("trajectory recording is only supported for a single orbit")
    g_prev = [ev.func(y) for ev in events]

    while np.any(active):
        idx = np.flatnonzero(active)
        ya, ta = y[idx], t[idx]
        ha = np.minimum(h[idx], t_end[idx] - ta)
        k1 = rhs(ya)
        y_new, err = _step(rhs, ya, ha, k1)
        y_cmp = project(y_new) if project is not None else y_new
        enorm = _error_norm(err, ya, y_new, rtol, atol)
        accept = enorm <= 1.0
        with np.errstate(divide="ignore"):
            factor = np.where(enorm == 0, MAX_FACTOR, SAFETY * enorm ** -0.2)
        factor = np.clip(factor, MIN_FACTOR, MAX_FACTOR)
        factor = np.where(accept, factor, np.minimum(factor, 1.0))
        h_next = ha * factor

        bad_rows = ~np.isfinite(enorm) | ~np.all(np.isfinite(y_new), axis=1)
        if np.any(bad_rows):
            bad = idx[bad_rows][0]
            raise IntegrationError(f"non-finite state for orbit {bad} near t={t[bad]:.17g}")
        tiny = h_next < 1e-14 * np.maximum(1.0, np.abs(ta))
        if np.any(tiny & ~accept):
            bad = idx[tiny & ~accept][0]
            raise IntegrationError(
                f"step size underflow for orbit {bad} at t={t[bad]:.17g}, state={y[bad].tolist()}"
            )

        acc = idx[accept]
        t_acc = ta[accept] + ha[accept]
        y_acc = y_cmp[accept]
        stopped_at = np.full(acc.size, np.nan)
        stopped_state = [None] * acc.size
        for e_i, ev in enumerate(events):
            g_old = g_prev[e_i][acc]
            g_new = ev.func(y_acc)
            crossing = (g_old * g_new < 0) | ((g_new == 0) & (g_old != 0))
            if ev.direction < 0:
                crossing &= g_new < g_old
            elif ev.direction > 0:
                crossing &= g_new > g_old
            if np.any(crossing):
                rows = np.flatnonzero(crossing)
                te, ye = _locate(rhs, project, ev, ya[accept][rows], ta[accept][rows], ha[accept][rows], g_old[rows])
                for r, tt, yy in zip(rows, te, ye):
                    records.append(EventRecord(ev.name, float(tt), yy, int(acc[r])))
                    if ev.terminal and not (tt >= stopped_at[r]):
                        stopped_at[r] = tt
                        stopped_state[r] = yy
            g_prev[e_i][acc] = g_new

        y[acc] = y_acc
        t[acc] = t_acc
        steps[acc] += 1
        h[idx] = h_next
        done = t_acc >= t_end[acc]
        term = ~np.isnan(stopped_at)
        for r in np.flatnonzero(term):
            y[acc[r]] = stopped_state[r]
            t[acc[r]] = stopped_at[r]
        stop_time[acc[term]] = stopped_at[term]
        active[acc[done | term]] = False
        if record and acc.size:
            traj[0][0].append(float(t[0]))
            traj[0][1].append(y[0].copy())
        if np.any(steps[idx] > max_steps):
            raise IntegrationError(f"exceeded {max_steps} steps")

    trajectory = None
    if record:
        trajectory = [(np.array(traj[0][0]), np.array(traj[0][1]))]
    if events:
        records.sort(key=lambda r: (r.orbit, r.t))
    return BatchResult(t, y, stop_time, records, steps, trajectory)


def _locate(rhs, project, ev: Event, y0, t0, h, g0):
    """Bisection for the event time inside [t0, t0 + h] for each row."""
    lo = np.zeros(h.size)
    hi = h.copy()
    k1 = rhs(y0)
    g_lo = g0.copy()
    # converged rows are frozen so each row's answer is independent of the batch
    while np.any(going := hi - lo > EVENT_TIME_TOL):
        mid = 0.5 * (lo + hi)
        y_mid, _ = _step(rhs, y0, mid, k1)
        if project is not None:
            y_mid = project(y_mid)
        g_mid = ev.func(y_mid)
        left = (np.sign(g_mid) == np.sign(g_lo)) & going
        right = ~left & going
        lo = np.where(left, mid, lo)
        g_lo = np.where(left, g_mid, g_lo)
        hi = np.where(right, mid, hi)
    y_hi, _ = _step(rhs, y0, hi, k1)
    if project is not None:
        y_hi = project(y_hi)
    return t0 + hi, list(y_hi)
