"""Adaptive embedded Runge-Kutta (Bogacki-Shampine 3(2)) with guards and events.

Shared by every particle scheme.  Beyond standard error control the stepper
supports *guards*: predicates on trial states that reject and halve any step
violating them (used for the no-collision bounds), and scalar event functions
located on the cubic-Hermite dense output.  Fully deterministic for fixed
inputs; no randomness anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class StepUnderflowError(RuntimeError):
    """Step size collapsed below 1e-14 of the integration span."""

    def __init__(self, t: float, y: np.ndarray, message: str):
        super().__init__(message)
        self.t = t
        self.y = y


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-6
    abs_tol: float = 1e-9
    max_step: float = math.inf
    safety: float = 0.9
    event_tol: float = 1e-12
    first_step: float | None = None
    max_steps: int = 50_000_000

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not 0.0 < self.safety < 1.0:
            raise ValueError("safety factor must lie in (0, 1)")


@dataclass(frozen=True)
class EventSpec:
    """Scalar event g(t, y); triggers on a sign change across an accepted step.

    direction -1: previous value > 0 and new value <= 0
    direction +1: previous value < 0 and new value >= 0
    direction  0: either
    """

    fn: Callable[[float, np.ndarray], float]
    direction: int = 0
    terminal: bool = False


@dataclass
class EventRecord:
    index: int
    t: float
    y: np.ndarray


def _hermite(t, t0, t1, y0, y1, f0, f1):
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1.0 + 2.0 * s) * (1.0 - s) ** 2
    h10 = s * (1.0 - s) ** 2
    h01 = s * s * (3.0 - 2.0 * s)
    h11 = s * s * (s - 1.0)
    return h00 * y0 + h * h10 * f0 + h01 * y1 + h * h11 * f1


@dataclass
class Solution:
    """Integration outcome; dense nodes retained only when requested."""

    ts: np.ndarray
    ys: np.ndarray
    fs: np.ndarray
    status: str
    events: list[EventRecord] = field(default_factory=list)
    n_steps: int = 0
    n_rejected: int = 0
    last_step: float = 0.0
    sample_ts: np.ndarray | None = None
    sample_ys: np.ndarray | None = None
    dense: bool = True

    @property
    def t_end(self) -> float:
        return float(self.ts[-1])

    @property
    def y_end(self) -> np.ndarray:
        return self.ys[-1]

    def eval(self, t: float) -> np.ndarray:
        if not self.dense:
            raise RuntimeError("dense output was not retained for this run")
        ts = self.ts
        if t <= ts[0]:
            return self.ys[0].copy()
        if t >= ts[-1]:
            return self.ys[-1].copy()
        i = int(np.searchsorted(ts, t, side="right") - 1)
        return _hermite(t, ts[i], ts[i + 1], self.ys[i], self.ys[i + 1],
                        self.fs[i], self.fs[i + 1])

    def eval_many(self, times) -> np.ndarray:
        return np.array([self.eval(float(t)) for t in np.atleast_1d(times)])


def _error_norm(err, y0, y1, cfg):
    scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.max(np.abs(err) / scale))


def _initial_step(t0, y0, f0, span, cfg):
    if cfg.first_step is not None:
        return min(cfg.first_step, span, cfg.max_step)
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(y0)
    d0 = float(np.max(np.abs(y0) / scale))
    d1 = float(np.max(np.abs(f0) / scale))
    h = 1e-6 * span if (d1 <= 1e-15 or d0 <= 1e-15) else 0.01 * d0 / d1
    return min(h, span, cfg.max_step)


def _locate_event(spec, g0, g1, t0, t1, interp, tol):
    """Bisection for the event time on the dense output; [t0, t1] brackets the root."""
    a, b = t0, t1
    ga = g0
    if g1 == 0.0:
        return b
    while b - a > tol:
        m = 0.5 * (a + b)
        gm = float(spec.fn(m, interp(m)))
        if gm == 0.0:
            return m
        if (ga > 0.0) == (gm > 0.0):
            a, ga = m, gm
        else:
            b = m
    return b


def integrate(rhs: Callable[[float, np.ndarray], np.ndarray], y0, t_span,
              cfg: IntegratorConfig = IntegratorConfig(),
              events: Sequence[EventSpec] = (),
              guards: Sequence[Callable[[float, np.ndarray], bool]] = (),
              sample_times: Sequence[float] | None = None,
              dense: bool = True,
              step_observer: Callable[[float, np.ndarray], None] | None = None) -> Solution:
    """Integrate y' = rhs(t, y) over t_span with error control, guards, events.

    Third-order accepted solution with embedded second-order error estimate.
    Steps violating a guard are rejected and halved; error-rejected steps use
    the standard controller.  A terminal event truncates the run at the
    located event time.  sample_times (sorted, within the span) are evaluated
    on the fly so large runs need not retain every node (dense=False).
    Raises StepUnderflowError if the step collapses below 1e-14 of the span.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    span = t1 - t0
    if not span > 0:
        raise ValueError("integration span must be positive")
    y = np.array(y0, dtype=float)
    t = t0
    f = np.asarray(rhs(t, y), dtype=float)
    h = _initial_step(t, y, f, span, cfg)
    h_min = 1e-14 * span

    ts = [t]
    ys = [y.copy()]
    fs = [f.copy()]
    samples = list(np.asarray(sample_times, dtype=float)) if sample_times is not None else []
    s_ptr = 0
    s_ts: list[float] = []
    s_ys: list[np.ndarray] = []
    while s_ptr < len(samples) and samples[s_ptr] <= t:
        s_ts.append(samples[s_ptr])
        s_ys.append(y.copy())
        s_ptr += 1
    g_prev = [float(spec.fn(t, y)) for spec in events]
    recs: list[EventRecord] = []
    status = "done"
    n_steps = 0
    n_rejected = 0

    while t < t1:
        if n_steps + n_rejected >= cfg.max_steps:
            raise StepUnderflowError(t, y, "step budget exhausted")
        h = min(h, t1 - t, cfg.max_step)
        if h < h_min:
            raise StepUnderflowError(t, y, f"step underflow at t={t}")

        k1 = f
        k2 = np.asarray(rhs(t + 0.5 * h, y + (0.5 * h) * k1), dtype=float)
        k3 = np.asarray(rhs(t + 0.75 * h, y + (0.75 * h) * k2), dtype=float)
        y_new = y + h * ((2.0 / 9.0) * k1 + (1.0 / 3.0) * k2 + (4.0 / 9.0) * k3)
        t_new = t + h

        if not all(g(t_new, y_new) for g in guards):
            h *= 0.5
            n_rejected += 1
            continue

        k4 = np.asarray(rhs(t_new, y_new), dtype=float)
        err = h * ((-5.0 / 72.0) * k1 + (1.0 / 12.0) * k2 + (1.0 / 9.0) * k3
                   + (-1.0 / 8.0) * k4)
        enorm = _error_norm(err, y, y_new, cfg)
        if enorm > 1.0:
            factor = max(0.2, cfg.safety * enorm ** (-1.0 / 3.0))
            h *= min(factor, 1.0)
            n_rejected += 1
            continue

        n_steps += 1

        def interp(tt, _t=t, _tn=t_new, _y=y, _yn=y_new, _f=k1, _fn=k4):
            return _hermite(tt, _t, _tn, _y, _yn, _f, _fn)

        t_stop = None
        triggered = None
        if events:
            for j, spec in enumerate(events):
                g_new = float(spec.fn(t_new, y_new))
                g_old = g_prev[j]
                falling = g_old > 0.0 and g_new <= 0.0
                rising = g_old < 0.0 and g_new >= 0.0
                hit = (falling and spec.direction <= 0) or (rising and spec.direction >= 0)
                if hit:
                    te = _locate_event(spec, g_old, g_new, t, t_new, interp, cfg.event_tol)
                    if triggered is None or te < triggered[1]:
                        triggered = (j, te, spec.terminal)
                g_prev[j] = g_new
            if triggered is not None:
                j, te, terminal = triggered
                ye = np.asarray(interp(te), dtype=float)
                recs.append(EventRecord(j, te, ye))
                if terminal:
                    t_stop = te
                    status = "event"

        horizon = t_new if t_stop is None else t_stop
        while s_ptr < len(samples) and samples[s_ptr] <= horizon:
            st = samples[s_ptr]
            s_ts.append(st)
            s_ys.append(np.asarray(interp(st), dtype=float))
            s_ptr += 1

        if t_stop is not None:
            y_stop = recs[-1].y
            ts.append(t_stop)
            ys.append(y_stop.copy())
            fs.append(np.asarray(rhs(t_stop, y_stop), dtype=float))
            if step_observer is not None:
                step_observer(t_stop, y_stop)
            break

        t, y, f = t_new, y_new, k4
        if dense:
            ts.append(t)
            ys.append(y.copy())
            fs.append(f.copy())
        if step_observer is not None:
            step_observer(t, y)

        if enorm == 0.0:
            factor = 5.0
        else:
            factor = min(5.0, max(0.2, cfg.safety * enorm ** (-1.0 / 3.0)))
        h *= factor

    if not dense and status == "done":
        ts.append(t)
        ys.append(y.copy())
        fs.append(f.copy())

    return Solution(np.array(ts), np.array(ys), np.array(fs), status, recs,
                    n_steps, n_rejected, h, np.array(s_ts),
                    np.array(s_ys) if s_ys else np.empty((0, len(y))), dense)
