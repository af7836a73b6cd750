"""Deterministic integration and steady-state analysis of the aggregate loop.

Provides a fixed-step RK4 scheme and an adaptive embedded Dormand-Prince
5(4) scheme, a damped-Newton steady-state solver with multi-start fallback,
and the ideal-integrator predictions used to validate regulation accuracy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (N_STATES, closed_loop_rhs, closed_loop_jacobian)
from .params import ConsortiumParams, ParameterError
from .reference import ReferenceSignal, constant

NEG_CLAMP_BAND = 1e-9  # round-off below zero tolerated and clamped


class IntegratorError(RuntimeError):
    """Generic integration failure."""


class StiffnessError(IntegratorError):
    """Step size underflow; relax tolerances or use a smaller horizon."""


class NegativityError(IntegratorError):
    """State left the physical region by more than the clamp band."""


class SteadyStateError(RuntimeError):
    """Newton iteration failed; consider a long-horizon integration instead."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration scheme selection.

    method    -- "rk4" (fixed step) or "adaptive" (embedded 5(4) pair)
    dt        -- fixed step size, minutes (rk4)
    rtol/atol -- local error tolerances (adaptive)
    max_step  -- cap on the adaptive step, also bounds output spacing
    horizon   -- final time, minutes
    """

    method: str = "adaptive"
    dt: float = 0.05
    rtol: float = 1e-7
    atol: float = 1e-10
    max_step: float = 5.0
    horizon: float = 1200.0

    def __post_init__(self):
        if self.method not in ("rk4", "adaptive"):
            raise ParameterError(f"unknown integrator method {self.method!r}")
        if self.dt <= 0 or self.max_step <= 0 or self.horizon <= 0:
            raise ParameterError("dt, max_step and horizon must be > 0")
        if self.rtol <= 0 or self.atol <= 0:
            raise ParameterError("tolerances must be > 0")


@dataclass
class Trajectory:
    """Time-ordered states with the reference evaluated alongside."""

    times: np.ndarray
    states: np.ndarray  # shape (len(times), N_STATES)
    ref_values: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if len(self.times) != len(self.states) or len(self.times) != len(self.ref_values):
            raise ValueError("trajectory arrays must have equal length")

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def component(self, idx: int) -> np.ndarray:
        return self.states[:, idx]

    def sample(self, t) -> np.ndarray:
        """Linear interpolation of every component at times t."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((len(t), self.states.shape[1]))
        for j in range(self.states.shape[1]):
            out[:, j] = np.interp(t, self.times, self.states[:, j])
        return out


def _apply_negativity_policy(y: np.ndarray, t: float) -> np.ndarray:
    low = y.min()
    if low < -NEG_CLAMP_BAND:
        raise NegativityError(
            f"state component fell to {low:.3e} at t={t:.6g} min "
            f"(beyond the {NEG_CLAMP_BAND:.0e} clamp band)")
    return np.maximum(y, 0.0)


def _rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# Dormand-Prince 5(4) coefficients
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])

MIN_STEP_FACTOR = 1e-12  # of the horizon; below this the problem is stiff


def _integrate_adaptive(f, y0, horizon, rtol, atol, max_step):
    t, y = 0.0, np.array(y0, dtype=float)
    times, states = [0.0], [y.copy()]
    h = min(max_step, max(horizon * 1e-4, 1e-6))
    min_step = horizon * MIN_STEP_FACTOR
    k_first = f(t, y)
    while t < horizon:
        h = min(h, horizon - t, max_step)
        if h < min_step:
            raise StiffnessError(
                f"step size underflow at t={t:.6g} min (h={h:.3e}); "
                "the problem is too stiff for these tolerances -- relax rtol/atol")
        ks = [k_first]
        for i in range(1, 7):
            yi = y + h * sum(a * k for a, k in zip(_DP_A[i], ks))
            ks.append(f(t + _DP_C[i] * h, yi))
        y5 = y + h * sum(b * k for b, k in zip(_DP_B5, ks) if b != 0.0)
        y4 = y + h * sum(b * k for b, k in zip(_DP_B4, ks) if b != 0.0)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
        err = math.sqrt(float(np.mean(((y5 - y4) / scale) ** 2)))
        if err <= 1.0:
            t += h
            clamped = _apply_negativity_policy(y5, t)
            times.append(t)
            states.append(clamped.copy())
            # FSAL: the seventh stage is the first of the next step unless
            # clamping moved the state
            k_first = ks[6] if np.array_equal(clamped, y5) else f(t, clamped)
            y = clamped
            h *= min(5.0, max(0.2, 0.9 * err ** -0.2 if err > 0 else 5.0))
        else:
            h *= max(0.2, 0.9 * err ** -0.2)
    return np.array(times), np.array(states)


def _integrate_rk4(f, y0, horizon, dt):
    n_steps = max(1, int(math.ceil(horizon / dt - 1e-12)))
    h = horizon / n_steps
    y = np.array(y0, dtype=float)
    times = np.empty(n_steps + 1)
    states = np.empty((n_steps + 1, len(y)))
    times[0], states[0] = 0.0, y
    for i in range(n_steps):
        t = i * h
        y = _apply_negativity_policy(_rk4_step(f, t, y, h), t + h)
        times[i + 1] = (i + 1) * h
        states[i + 1] = y
    return times, states


def integrate_rhs(f, y0, cfg: IntegratorConfig):
    """Integrate an arbitrary non-negative system dy/dt = f(t, y).

    Returns (times, states). Applies the negativity policy of `integrate`.
    """
    y0 = np.asarray(y0, dtype=float)
    if y0.min() < 0:
        raise ParameterError("initial state must be component-wise >= 0")
    if cfg.method == "rk4":
        return _integrate_rk4(f, y0, cfg.horizon, cfg.dt)
    return _integrate_adaptive(f, y0, cfg.horizon, cfg.rtol, cfg.atol, cfg.max_step)


def integrate(p: ConsortiumParams, ref: ReferenceSignal, init,
              cfg: IntegratorConfig, feedback_uptake: bool = True) -> Trajectory:
    """Integrate the closed loop from `init` (array or AggregateState)."""
    y0 = init.as_array() if hasattr(init, "as_array") else np.asarray(init, dtype=float)
    if y0.shape != (N_STATES,):
        raise ParameterError(f"initial state must have {N_STATES} components")

    def f(t, y):
        return closed_loop_rhs(t, y, p, ref, feedback_uptake=feedback_uptake)

    times, states = integrate_rhs(f, y0, cfg)
    return Trajectory(times=times, states=states, ref_values=ref.value(times))


def invert_activation(rate: float, p: ConsortiumParams) -> float:
    """Input level at which the activation function produces `rate`.

    Clips to 0 below the basal rate; raises if the demand exceeds the
    maximal rate (not realizable).
    """
    phi = (rate - p.alpha0) / (p.alpha_max - p.alpha0) if p.alpha_max > p.alpha0 else 0.0
    if phi <= 0.0:
        return 0.0
    if phi >= 1.0:
        raise ParameterError(f"activation rate {rate} not realizable (max {p.alpha_max})")
    return p.k_u * (1.0 / phi - 1.0) ** (-1.0 / p.n_u)


def steady_state_seed(p: ConsortiumParams, yd: float) -> np.ndarray:
    """Closed-form chain solve assuming an ideal comparator (seed for Newton)."""
    a = p.eta / (p.gamma + p.eta)
    if p.theta > 0 and yd > 0:
        qx_i = p.mu * yd / p.theta
    else:
        qx_i = 0.0
    qx_e = qx_i / a if qx_i > 0 else 0.0
    drain = (p.gamma_e + p.n_c * p.gamma * a) / max(p.n_t * p.eta, 1e-300)
    qx_t = qx_e * (1.0 + drain)
    xc_flux = p.gamma * qx_t + p.eta * (qx_t - qx_e)
    xc = xc_flux / p.beta_x if p.beta_x > 0 else p.alpha0 / p.gamma
    demand = p.gamma * xc
    demand = min(demand, p.alpha0 + 0.95 * (p.alpha_max - p.alpha0))
    qu_t = invert_activation(demand, p)
    qu_e = qu_t / a
    total_flux = p.gamma_e * qu_e + p.n_t * p.gamma * qu_t
    b = total_flux / max(p.n_c, 1e-300)
    qu_i = qu_e + b / p.eta
    z1 = (p.gamma * qu_i + b) / max(p.beta_u, 1e-300)
    if p.gamma_z > 0 and z1 > 0:
        z2 = max((p.mu * yd - p.gamma * z1) / (p.gamma_z * z1), 0.0)
    else:
        z2 = 0.0
    return np.array([z1, z2, qu_i, qu_e, qu_t, xc, qx_t, qx_e, qx_i])


def _fd_jacobian(residual, s, r0, scale=1e-7):
    n = len(s)
    J = np.empty((n, n))
    for j in range(n):
        h = scale * max(abs(s[j]), 1.0)
        sp = s.copy()
        sp[j] += h
        J[:, j] = (residual(sp) - r0) / h
    return J


def newton_nonneg(residual, seeds, jacobian=None, max_iter: int = 200) -> np.ndarray:
    """Damped Newton for a root of `residual` in the non-negative orthant.

    Tries each seed in turn; inside one run, iterates that would leave the
    orthant shrink the step and, failing that, fall through to the next
    seed (multi-start). Tolerance: ||r||_inf < 1e-10 * max(1, ||s||_inf).
    `jacobian(s)` defaults to forward differences.
    """
    for seed in seeds:
        s = np.maximum(np.asarray(seed, dtype=float), 0.0)
        r = residual(s)
        for _ in range(max_iter):
            norm_r = float(np.max(np.abs(r)))
            if norm_r < 1e-10 * max(1.0, float(np.max(np.abs(s)))):
                return np.maximum(s, 0.0)
            J = jacobian(s) if jacobian is not None else _fd_jacobian(residual, s, r)
            try:
                step = np.linalg.solve(J, -r)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(J + 1e-12 * np.eye(len(s)), -r, rcond=None)[0]
            improved = False
            lam = 1.0
            floor = -1e-13 * max(1.0, float(np.max(np.abs(s))))
            for _ in range(40):
                cand = s + lam * step
                if cand.min() >= floor:
                    cand = np.maximum(cand, 0.0)
                    r_cand = residual(cand)
                    if np.max(np.abs(r_cand)) < norm_r or lam < 1e-6:
                        s, r = cand, r_cand
                        improved = True
                        break
                lam *= 0.5
            if not improved:
                break  # left the orthant or stalled; try the next seed
    raise SteadyStateError("Newton iteration failed from every start point")


def find_steady_state(p: ConsortiumParams, yd: float, guess=None,
                      feedback_uptake: bool = True, max_iter: int = 200) -> np.ndarray:
    """Non-negative root of the closed-loop RHS at constant reference `yd`.

    Damped Newton on the analytic Jacobian; iterates that leave the
    non-negative orthant trigger a restart from alternative seeds. The
    result satisfies ||rhs||_inf < 1e-10 * max(1, ||s||_inf).
    """
    if yd < 0:
        raise ParameterError("reference must be >= 0")
    ref = constant(yd)

    def residual(s):
        return closed_loop_rhs(0.0, s, p, ref, feedback_uptake=feedback_uptake)

    def jac(s):
        return closed_loop_jacobian(0.0, s, p, ref, feedback_uptake=feedback_uptake)

    seeds = []
    if guess is not None:
        g = guess.as_array() if hasattr(guess, "as_array") else np.asarray(guess, float)
        seeds.append(np.maximum(g, 0.0))
    try:
        seeds.append(np.maximum(steady_state_seed(p, yd), 0.0))
    except ParameterError:
        pass
    seeds.append(np.full(N_STATES, max(yd, 0.1)))
    seeds.append(np.full(N_STATES, 1e-3))
    seeds.append(np.zeros(N_STATES))
    try:
        return newton_nonneg(residual, seeds, jacobian=jac, max_iter=max_iter)
    except SteadyStateError:
        raise SteadyStateError(
            f"no steady state found at yd={yd} after multi-start Newton; "
            "a long-horizon integration may locate an attractor") from None


def rpa_setpoint(p: ConsortiumParams, yd: float) -> float:
    """Feedback-signal level an ideal comparator enforces: mu * yd / theta."""
    if p.theta <= 0:
        raise ParameterError("rpa_setpoint requires theta > 0")
    if yd < 0:
        raise ParameterError("reference must be >= 0")
    return p.mu * yd / p.theta


def leak_error(p: ConsortiumParams, yd: float, guess=None) -> float:
    """Relative deviation of the true steady state from the ideal set-point.

    Dilution of the comparator species makes the accumulated imbalance
    leak; the deviation shrinks as sequestration flux comes to dominate.
    """
    ideal = rpa_setpoint(p, yd)
    if ideal == 0.0:
        return 0.0
    s = find_steady_state(p, yd, guess=guess)
    return abs(ideal - s[8]) / ideal


def settling_time(times: np.ndarray, values: np.ndarray, band: float = 0.05,
                  final: float | None = None) -> float:
    """First time after which `values` stays within +/-band of its final value.

    Returns NaN if the signal never enters (or leaves and re-enters past the
    end of) the band, which signals a non-settled trajectory.
    """
    if final is None:
        final = float(values[-1])
    if final == 0.0:
        inside = np.abs(values) <= band
    else:
        inside = np.abs(values - final) <= band * abs(final)
    if not inside[-1]:
        return float("nan")
    idx = len(values) - 1
    while idx > 0 and inside[idx - 1]:
        idx -= 1
    return float(times[idx])
