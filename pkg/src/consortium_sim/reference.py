"""Reference (set-point) signal generators.

A reference drives production of the comparator species, so it must be
non-negative for all t >= 0; shapes that could dip below zero (sinusoid)
are clipped at zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ReferenceError(ValueError):
    """Bad reference definition or evaluation outside its domain."""


@dataclass(frozen=True)
class ReferenceSignal:
    """Piecewise-continuous scalar signal y(t), t in minutes.

    kind:
      constant   -- level
      step       -- low for t < t_step, high afterwards (right-continuous)
      trapezoid  -- ramp low->high on [t0, t1], hold, ramp back on [t2, t3],
                    hold low
      sinusoid   -- mean + amp * sin(2*pi*(t - phase)/period), clipped at 0
      piecewise  -- zero-order hold over sorted (time, level) knots
    """

    kind: str = "constant"
    level: float = 1.0
    low: float = 0.0
    high: float = 1.0
    t_step: float = 0.0
    t0: float = 0.0
    t1: float = 0.0
    t2: float = 0.0
    t3: float = 0.0
    mean: float = 0.0
    amp: float = 0.0
    period: float = 1.0
    phase: float = 0.0
    knots: tuple = field(default=())

    KINDS = ("constant", "step", "trapezoid", "sinusoid", "piecewise")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ReferenceError(f"unknown reference kind {self.kind!r}")
        if self.kind == "constant" and self.level < 0:
            raise ReferenceError("constant level must be >= 0")
        if self.kind == "step" and (self.low < 0 or self.high < 0):
            raise ReferenceError("step levels must be >= 0")
        if self.kind == "trapezoid":
            if not (self.t0 <= self.t1 <= self.t2 <= self.t3):
                raise ReferenceError("trapezoid requires t0 <= t1 <= t2 <= t3")
            if self.low < 0 or self.high < 0:
                raise ReferenceError("trapezoid levels must be >= 0")
        if self.kind == "sinusoid":
            if self.period <= 0:
                raise ReferenceError("sinusoid period must be > 0")
            if self.mean < 0:
                raise ReferenceError("sinusoid mean must be >= 0")
        if self.kind == "piecewise":
            if not self.knots:
                raise ReferenceError("piecewise needs at least one (time, level) knot")
            times = [t for t, _ in self.knots]
            if sorted(times) != times:
                raise ReferenceError("piecewise knots must be time-sorted")
            if any(v < 0 for _, v in self.knots):
                raise ReferenceError("piecewise levels must be >= 0")

    def __call__(self, t):
        return self.value(t)

    def value(self, t):
        """Evaluate at scalar or array t (minutes); t must be >= 0."""
        if isinstance(t, float):  # scalar fast path, hot inside the integrators
            if t < 0:
                raise ReferenceError("reference evaluated at negative time")
            if self.kind == "constant":
                return self.level
            if self.kind == "step":
                return self.high if t >= self.t_step else self.low
            if self.kind == "sinusoid":
                y = self.mean + self.amp * math.sin(
                    2.0 * math.pi * (t - self.phase) / self.period)
                return y if y > 0.0 else 0.0
        arr = np.asarray(t, dtype=float)
        if np.any(arr < 0):
            raise ReferenceError("reference evaluated at negative time")
        out = self._eval(arr)
        return float(out) if np.isscalar(t) or arr.ndim == 0 else out

    def _eval(self, t: np.ndarray) -> np.ndarray:
        if self.kind == "constant":
            return np.full_like(t, self.level, dtype=float)
        if self.kind == "step":
            return np.where(t >= self.t_step, self.high, self.low).astype(float)
        if self.kind == "trapezoid":
            up = self.high - self.low
            rise = np.clip((t - self.t0) / max(self.t1 - self.t0, 1e-300), 0.0, 1.0)
            fall = np.clip((t - self.t2) / max(self.t3 - self.t2, 1e-300), 0.0, 1.0)
            return self.low + up * rise - up * fall
        if self.kind == "sinusoid":
            y = self.mean + self.amp * np.sin(2.0 * math.pi * (t - self.phase) / self.period)
            return np.maximum(y, 0.0)
        # piecewise: zero-order hold, level of the last knot at or before t,
        # zero before the first knot
        times = np.array([k[0] for k in self.knots], dtype=float)
        levels = np.array([k[1] for k in self.knots], dtype=float)
        idx = np.searchsorted(times, t, side="right") - 1
        out = np.where(idx >= 0, levels[np.clip(idx, 0, len(levels) - 1)], 0.0)
        return out.astype(float)


def constant(level: float) -> ReferenceSignal:
    return ReferenceSignal(kind="constant", level=level)


def step(low: float, high: float, t_step: float) -> ReferenceSignal:
    return ReferenceSignal(kind="step", low=low, high=high, t_step=t_step)


def trapezoid(low: float, high: float, t0: float, t1: float,
              t2: float, t3: float) -> ReferenceSignal:
    return ReferenceSignal(kind="trapezoid", low=low, high=high,
                           t0=t0, t1=t1, t2=t2, t3=t3)


def sinusoid(mean: float, amp: float, period: float, phase: float = 0.0) -> ReferenceSignal:
    return ReferenceSignal(kind="sinusoid", mean=mean, amp=amp,
                           period=period, phase=phase)


def piecewise(knots) -> ReferenceSignal:
    return ReferenceSignal(kind="piecewise", knots=tuple((float(t), float(v)) for t, v in knots))
