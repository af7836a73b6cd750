"""Right-hand sides of the consortium dynamics.

Two engineered populations close a regulation loop through two diffusible
signals. Controller cells hold a molecular comparator: a reference-induced
species and a feedback-induced species that mutually sequester one another,
so the surviving excess encodes the regulation error. The excess drives
secretion of a control signal; target cells respond to it through a
saturating activation of the controlled output and report back by secreting
a feedback signal proportional to that output.

State layout (aggregate, population-averaged concentrations):

    index  name   description
    0      Z1     reference-induced comparator species (controllers)
    1      Z2     feedback-induced comparator species (controllers)
    2      Qu_i   control signal inside controllers
    3      Qu_e   control signal, extracellular
    4      Qu_t   control signal inside targets
    5      Xc     controlled output (targets)
    6      Qx_t   feedback signal inside targets
    7      Qx_e   feedback signal, extracellular
    8      Qx_i   feedback signal inside controllers

All functions are pure; they can be evaluated concurrently from any thread.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import ConsortiumParams, ParameterError
from .reference import ReferenceSignal

STATE_FIELDS = ("Z1", "Z2", "Qu_i", "Qu_e", "Qu_t", "Xc", "Qx_t", "Qx_e", "Qx_i")
N_STATES = len(STATE_FIELDS)


@dataclass(frozen=True)
class AggregateState:
    """Population-averaged concentrations of the nine closed-loop species."""

    z1: float = 0.0
    z2: float = 0.0
    qu_i: float = 0.0
    qu_e: float = 0.0
    qu_t: float = 0.0
    xc: float = 0.0
    qx_t: float = 0.0
    qx_e: float = 0.0
    qx_i: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.z1, self.z2, self.qu_i, self.qu_e, self.qu_t,
                         self.xc, self.qx_t, self.qx_e, self.qx_i], dtype=float)

    @staticmethod
    def from_array(a) -> "AggregateState":
        a = np.asarray(a, dtype=float)
        if a.shape != (N_STATES,):
            raise ValueError(f"expected {N_STATES} components, got shape {a.shape}")
        return AggregateState(*a.tolist())


def hill_activation(q, p: ConsortiumParams):
    """Saturating activation rate of the controlled output.

    alpha0 + (alpha_max - alpha0) / (1 + (k_u/q)**n_u), with the q = 0
    value defined as alpha0 (the continuous limit). Monotone non-decreasing,
    bounded in [alpha0, alpha_max]. Accepts scalars or arrays.
    """
    if p.k_u <= 0 or p.n_u < 1:
        raise ParameterError(f"invalid activation parameters k_u={p.k_u}, n_u={p.n_u}")
    if isinstance(q, float):  # scalar fast path, hot inside the integrators
        if q < 0:
            raise ParameterError("activation input must be >= 0")
        if q == 0.0:
            return p.alpha0
        return p.alpha0 + (p.alpha_max - p.alpha0) / (1.0 + (p.k_u / q) ** p.n_u)
    q_arr = np.asarray(q, dtype=float)
    if np.any(q_arr < 0):
        raise ParameterError("activation input must be >= 0")
    span = p.alpha_max - p.alpha0
    with np.errstate(divide="ignore", over="ignore"):
        ratio = np.where(q_arr > 0, (p.k_u / np.where(q_arr > 0, q_arr, 1.0)) ** p.n_u,
                         np.inf)
    out = p.alpha0 + span / (1.0 + ratio)
    if np.isscalar(q) or q_arr.ndim == 0:
        return float(out)
    return out


def hill_derivative(q: float, p: ConsortiumParams) -> float:
    """d/dq of hill_activation at scalar q >= 0."""
    if q < 0:
        raise ParameterError("activation input must be >= 0")
    span = p.alpha_max - p.alpha0
    if q == 0.0:
        # small-q behaviour alpha0 + span*(q/k_u)**n_u
        return span / p.k_u if p.n_u == 1.0 else 0.0
    r = (p.k_u / q) ** p.n_u
    return span * p.n_u * r / (q * (1.0 + r) ** 2)


def closed_loop_rhs(t: float, s: np.ndarray, p: ConsortiumParams,
                    ref: ReferenceSignal, feedback_uptake: bool = True) -> np.ndarray:
    """Time derivative of the nine-species closed loop.

    `feedback_uptake=False` severs the controllers' reception of the
    feedback signal (open-loop configuration; combine with theta = 0).
    """
    z1, z2, qu_i, qu_e, qu_t, xc, qx_t, qx_e, qx_i = s
    yd = ref.value(float(t))
    seq = p.gamma_z * z1 * z2  # shared one-to-one sequestration flux
    up = 1.0 if feedback_uptake else 0.0

    d = np.empty(N_STATES)
    d[0] = p.mu * yd - seq - p.gamma * z1
    d[1] = p.theta * qx_i - seq - p.gamma * z2
    d[2] = p.beta_u * z1 - p.gamma * qu_i + p.eta * (qu_e - qu_i)
    d[3] = (p.n_c * p.eta * (qu_i - qu_e) + p.n_t * p.eta * (qu_t - qu_e)
            - p.gamma_e * qu_e)
    d[4] = -p.gamma * qu_t + p.eta * (qu_e - qu_t)
    # trial stages of adaptive steppers may probe slightly negative states;
    # activation of a non-positive input is basal
    d[5] = hill_activation(max(qu_t, 0.0), p) - p.gamma * xc
    d[6] = p.beta_x * xc - p.gamma * qx_t + p.eta * (qx_e - qx_t)
    d[7] = (p.n_t * p.eta * (qx_t - qx_e) + up * p.n_c * p.eta * (qx_i - qx_e)
            - p.gamma_e * qx_e)
    d[8] = -p.gamma * qx_i + up * p.eta * (qx_e - qx_i)
    return d


def closed_loop_jacobian(t: float, s: np.ndarray, p: ConsortiumParams,
                         ref: ReferenceSignal, feedback_uptake: bool = True) -> np.ndarray:
    """Analytic Jacobian of closed_loop_rhs with respect to the state."""
    z1, z2, _, _, qu_t, _, _, _, _ = s
    g, gz, e = p.gamma, p.gamma_z, p.eta
    up = 1.0 if feedback_uptake else 0.0
    J = np.zeros((N_STATES, N_STATES))
    J[0, 0] = -gz * z2 - g
    J[0, 1] = -gz * z1
    J[1, 0] = -gz * z2
    J[1, 1] = -gz * z1 - g
    J[1, 8] = p.theta
    J[2, 0] = p.beta_u
    J[2, 2] = -g - e
    J[2, 3] = e
    J[3, 2] = p.n_c * e
    J[3, 3] = -(p.n_c + p.n_t) * e - p.gamma_e
    J[3, 4] = p.n_t * e
    J[4, 3] = e
    J[4, 4] = -g - e
    J[5, 4] = hill_derivative(qu_t, p)
    J[5, 5] = -g
    J[6, 5] = p.beta_x
    J[6, 6] = -g - e
    J[6, 7] = e
    J[7, 6] = p.n_t * e
    J[7, 7] = -p.n_t * e - up * p.n_c * e - p.gamma_e
    J[7, 8] = up * p.n_c * e
    J[8, 7] = up * e
    J[8, 8] = -g - up * e
    return J


@dataclass(frozen=True)
class QsChannelState:
    """One generic sender/receiver signalling channel (well-mixed)."""

    q_s: float = 0.0  # intracellular, sender cells
    q_r: float = 0.0  # intracellular, receiver cells
    q_e: float = 0.0  # extracellular pool

    def as_array(self) -> np.ndarray:
        return np.array([self.q_s, self.q_r, self.q_e], dtype=float)

    @staticmethod
    def from_array(a) -> "QsChannelState":
        a = np.asarray(a, dtype=float)
        return QsChannelState(*a.tolist())


def qs_channel_rhs(s, f_prod: float, p: ConsortiumParams,
                   n_s: float | None = None, n_r: float | None = None) -> np.ndarray:
    """Derivatives of the generic channel [q_s, q_r, q_e].

    Sender production `f_prod` is supplied by the caller (in the closed
    loop it is beta_u * Z1 or beta_x * Xc). The extracellular balance is the
    well-mixed form; the spatially-resolved form lives in the agent engine.
    Densities default to the controller (sender) and target (receiver)
    densities of `p`.
    """
    if f_prod < 0:
        raise ParameterError(f"f_prod must be >= 0, got {f_prod}")
    q_s, q_r, q_e = (s.as_array() if isinstance(s, QsChannelState) else np.asarray(s, float))
    ns = p.n_c if n_s is None else n_s
    nr = p.n_t if n_r is None else n_r
    return np.array([
        f_prod - p.gamma_q * q_s - p.eta_s * (q_s - q_e),
        -p.gamma_q * q_r - p.eta_r * (q_r - q_e),
        p.eta_s * (q_s - q_e) * ns + p.eta_r * (q_r - q_e) * nr - p.gamma_e * q_e,
    ])
