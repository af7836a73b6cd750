"""Composable controller-population family: P, I, PI, PD, PID.

Each enabled branch is a distinct cell population with its own density,
receiving the feedback signal and the reference, and contributing its own
secretion flux of the control signal into the shared extracellular pool.

Branch mechanisms:

  I  -- the two-species sequestration comparator (the base architecture):
        reference-induced and feedback-induced species annihilate one-to-one
        and the surviving excess drives control-signal production.
  P  -- direct transcriptional activation: a reference-induced activator,
        competitively inhibited by the intracellular feedback signal,
        drives control-signal production through a saturating response.
        No state accumulates the error, so the action is proportional
        (in the small-signal sense, at the operating point).
  D  -- incoherent feedforward on the measured output: the received
        feedback signal drives a fast species and a slow species with equal
        steady-state gains. Secretion is constitutive at a basal level and
        repressed by the rectified fast-minus-slow difference, so the
        branch pushes back while the output rises and adapts to its basal
        flux for any constant input (a band-limited derivative action;
        signals cannot go negative, so damping modulates around basal).

All branch outputs share one extracellular control pool; the target
population is unchanged from the base model.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import hill_activation
from .params import ConsortiumParams, ParameterError
from .reference import ReferenceSignal

VALID_BRANCHES = ("P", "I", "D")
COMPOSITIONS = {"P": ("P",), "I": ("I",), "PI": ("P", "I"),
                "PD": ("P", "D"), "PID": ("P", "I", "D")}


@dataclass(frozen=True)
class DerivativeBranchParams:
    """Incoherent-feedforward branch constants.

    The branch tracks its input with a fast species and a slow species of
    equal steady-state gain; their difference estimates the input's rate of
    change within the band [k_slow, k_fast]. Secretion is constitutive at a
    basal level and transiently repressed while the input rises, so the
    branch opposes fast output excursions and adapts back to basal for any
    constant input.

    k_fast    -- tracking rate of the fast species (min^-1)
    k_slow    -- tracking rate of the slow species (min^-1), < k_fast
    k_d       -- dimensionless output gain
    basal     -- repression threshold / basal drive level (conc)
    out_sat   -- saturation scale of the rectified drive (conc)
    """

    k_fast: float = 5.0
    k_slow: float = 0.2
    k_d: float = 0.25
    basal: float = 0.25
    out_sat: float = 10.0

    def __post_init__(self):
        if not (0.0 < self.k_slow < self.k_fast):
            raise ParameterError(
                f"need 0 < k_slow < k_fast, got {self.k_slow}, {self.k_fast}")
        if self.k_d < 0 or self.out_sat <= 0 or self.basal < 0:
            raise ParameterError("k_d, basal must be >= 0 and out_sat > 0")

    def output_flux(self, diff: float) -> float:
        """Secretion flux given the fast-minus-slow tracking difference."""
        drive = max(self.basal - diff, 0.0)
        return self.k_d * self.k_fast * drive / (1.0 + drive / self.out_sat)

    @property
    def basal_flux(self) -> float:
        return self.output_flux(0.0)

    @property
    def ramp_slope(self) -> float:
        """Small-signal d(flux)/d(input rate) on a slow ramp (band-limited
        derivative gain); negative: rising input represses secretion."""
        lag = 1.0 / self.k_slow - 1.0 / self.k_fast
        drive = self.basal
        sat = (1.0 + drive / self.out_sat)
        dflux_ddrive = self.k_d * self.k_fast / sat ** 2
        return -dflux_ddrive * lag


@dataclass(frozen=True)
class ControllerKind:
    """Branch selection plus per-branch gains.

    kind      -- one of P, I, PI, PD, PID
    k_p       -- proportional branch gain (min^-1)
    k_p_sat   -- saturation scale of the proportional response (conc)
    k_i_ref   -- inhibition constant of the feedback signal on the
                 error-encoding activator (conc)
    deriv     -- derivative-branch constants
    densities -- optional explicit per-branch densities; by default the
                 controller density n_c is split equally across branches
    """

    kind: str = "I"
    k_p: float = 1.0
    k_p_sat: float = 6.0
    k_i_ref: float = 3.0
    deriv: DerivativeBranchParams = field(default_factory=DerivativeBranchParams)
    densities: dict | None = None

    def __post_init__(self):
        if self.kind not in COMPOSITIONS:
            raise ParameterError(f"unknown controller kind {self.kind!r}")
        if self.k_p < 0 or self.k_p_sat <= 0 or self.k_i_ref <= 0:
            raise ParameterError("invalid proportional-branch constants")

    @property
    def branches(self) -> tuple:
        return COMPOSITIONS[self.kind]


# per-branch intracellular state layouts (excluding the feedback receiver,
# which every branch carries as its last slot in the global layout)
_BRANCH_STATES = {
    "I": ("Z1", "Z2", "Qu_b"),
    "P": ("A", "Qu_b"),
    "D": ("Wf", "Ws", "Qu_b"),
}


class ConsortiumModel:
    """State-space model of an N-population controller consortium.

    Global state layout:
       [branch blocks...] , Qu_e, Qu_t, Xc, Qx_t, Qx_e, [branch Qx receivers...]

    For the pure-I composition this reduces exactly to the nine-species
    base layout (Z1, Z2, Qu_i, Qu_e, Qu_t, Xc, Qx_t, Qx_e, Qx_i).
    """

    def __init__(self, ctrl: ControllerKind, p: ConsortiumParams,
                 ref: ReferenceSignal):
        if not ctrl.branches:
            raise ParameterError("at least one controller branch is required")
        self.ctrl = ctrl
        self.p = p
        self.ref = ref
        if ctrl.densities is not None:
            unknown = set(ctrl.densities) - set(ctrl.branches)
            if unknown:
                raise ParameterError(f"densities given for absent branches {unknown}")
            self.densities = {b: float(ctrl.densities[b]) for b in ctrl.branches}
        else:
            share = p.n_c / len(ctrl.branches)
            self.densities = {b: share for b in ctrl.branches}
        self.labels: list[str] = []
        self._offsets: dict[str, int] = {}
        for b in ctrl.branches:
            self._offsets[b] = len(self.labels)
            self.labels += [f"{s}({b})" if len(ctrl.branches) > 1 else s
                            for s in _BRANCH_STATES[b]]
        self._i_shared = len(self.labels)
        self.labels += ["Qu_e", "Qu_t", "Xc", "Qx_t", "Qx_e"]
        self._i_rx = len(self.labels)
        for b in ctrl.branches:
            self.labels.append(f"Qx({b})" if len(ctrl.branches) > 1 else "Qx_i")
        self.n_states = len(self.labels)

    def _error_input(self, a: float, qx_b: float) -> float:
        """One-sided error encoding: reference-induced activator,
        competitively inhibited by the received feedback signal."""
        return a / (1.0 + qx_b / self.ctrl.k_i_ref)

    def branch_fluxes(self, t: float, y: np.ndarray) -> dict:
        """Control-signal production flux per branch cell (conc min^-1)."""
        p, c = self.p, self.ctrl
        out = {}
        for k, b in enumerate(c.branches):
            o = self._offsets[b]
            qx_b = y[self._i_rx + k]
            if b == "I":
                out[b] = p.beta_u * y[o]
            elif b == "P":
                e = self._error_input(y[o], qx_b)
                out[b] = c.k_p * e / (1.0 + e / c.k_p_sat)
            else:  # D
                out[b] = c.deriv.output_flux(y[o] - y[o + 1])
        return out

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        p, c = self.p, self.ctrl
        yd = self.ref.value(float(t))
        i_s = self._i_shared
        qu_e, qu_t, xc, qx_t, qx_e = y[i_s:i_s + 5]
        dy = np.empty_like(y)
        fluxes = self.branch_fluxes(t, y)

        qu_e_exchange = 0.0
        qx_e_exchange = 0.0
        for k, b in enumerate(c.branches):
            o = self._offsets[b]
            n_b = self.densities[b]
            i_qx = self._i_rx + k
            qx_b = y[i_qx]
            if b == "I":
                z1, z2, qu_b = y[o], y[o + 1], y[o + 2]
                seq = p.gamma_z * z1 * z2
                dy[o] = p.mu * yd - seq - p.gamma * z1
                dy[o + 1] = p.theta * qx_b - seq - p.gamma * z2
            elif b == "P":
                a = y[o]
                dy[o] = p.mu * yd - p.gamma * a
            else:
                # the tracking pair follows the received feedback signal;
                # their gap estimates how fast the measured output is rising
                wf, ws = y[o], y[o + 1]
                dy[o] = c.deriv.k_fast * (qx_b - wf)
                dy[o + 1] = c.deriv.k_slow * (qx_b - ws)
            i_qu = o + len(_BRANCH_STATES[b]) - 1
            qu_b = y[i_qu]
            dy[i_qu] = fluxes[b] - p.gamma * qu_b + p.eta * (qu_e - qu_b)
            dy[i_qx] = -p.gamma * qx_b + p.eta * (qx_e - qx_b)
            qu_e_exchange += n_b * p.eta * (qu_b - qu_e)
            qx_e_exchange += n_b * p.eta * (qx_b - qx_e)

        # shared pools and the unchanged target population
        dy[i_s] = qu_e_exchange + p.n_t * p.eta * (qu_t - qu_e) - p.gamma_e * qu_e
        dy[i_s + 1] = -p.gamma * qu_t + p.eta * (qu_e - qu_t)
        dy[i_s + 2] = hill_activation(max(float(qu_t), 0.0), p) - p.gamma * xc
        dy[i_s + 3] = p.beta_x * xc - p.gamma * qx_t + p.eta * (qx_e - qx_t)
        dy[i_s + 4] = (p.n_t * p.eta * (qx_t - qx_e) + qx_e_exchange
                       - p.gamma_e * qx_e)
        return dy

    def index_of(self, label: str) -> int:
        return self.labels.index(label)

    @property
    def xc_index(self) -> int:
        return self._i_shared + 2

    def initial_state(self, basal: np.ndarray | None = None) -> np.ndarray:
        """Zero state, or one seeded from a base-model basal state."""
        y = np.zeros(self.n_states)
        if basal is not None:
            i_s = self._i_shared
            y[i_s:i_s + 5] = basal[3:8]
            for k, b in enumerate(self.ctrl.branches):
                y[self._i_rx + k] = basal[8]
                if b == "I":
                    o = self._offsets[b]
                    y[o], y[o + 1], y[o + 2] = basal[0], basal[1], basal[2]
        return y


def branch_rhs(kind: str, state: np.ndarray, error_input: float,
               p: ConsortiumParams, ctrl: ControllerKind | None = None,
               reference: float = 0.0):
    """Derivatives and output flux of one isolated branch block.

    `state` layout per branch: I -> [Z1, Z2]; P -> [] (memoryless);
    D -> [Wf, Ws]. For P/D, `error_input` is the error-encoding species
    level; for I it is the received feedback level and `reference` drives
    the reference-induced species. Returns (dstate, production_flux).
    """
    ctrl = ctrl or ControllerKind(kind="PID")
    if error_input < 0 or reference < 0:
        raise ParameterError("branch inputs must be >= 0")
    if kind == "I":
        z1, z2 = state
        seq = p.gamma_z * z1 * z2
        dz1 = p.mu * reference - seq - p.gamma * z1
        dz2 = p.theta * error_input - seq - p.gamma * z2
        return np.array([dz1, dz2]), p.beta_u * z1
    if kind == "P":
        e = error_input
        return np.zeros(0), ctrl.k_p * e / (1.0 + e / ctrl.k_p_sat)
    if kind == "D":
        wf, ws = state
        d = ctrl.deriv
        dwf = d.k_fast * (error_input - wf)
        dws = d.k_slow * (error_input - ws)
        return np.array([dwf, dws]), d.output_flux(wf - ws)
    raise ParameterError(f"unknown branch {kind!r}")


def compose_controller(ctrl: ControllerKind, p: ConsortiumParams,
                       ref: ReferenceSignal) -> ConsortiumModel:
    """Build the extended closed-loop model for the selected composition."""
    return ConsortiumModel(ctrl, p, ref)
