"""Rate constants and kinetic parameters of the consortium model.

All quantities use (a.u. concentration, minutes, micrometres). Population
densities are dimensionless effective densities (they multiply membrane
exchange fluxes in the extracellular balance equations).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace, fields
from pathlib import Path

import yaml

DATA_DIR = Path(__file__).parent / "data"
DEFAULT_PARAMS_FILE = DATA_DIR / "default_params.yaml"


class ParameterError(ValueError):
    """A parameter lies outside its physical domain."""


@dataclass(frozen=True)
class ConsortiumParams:
    """Kinetic parameters of the two-population closed loop.

    mu        -- production of the reference-induced sequestration species
                 per unit reference input (conc min^-1 per a.u. reference)
    theta     -- activation rate of the feedback-induced sequestration
                 species by the intracellular feedback signal (min^-1)
    gamma_z   -- mutual sequestration rate of the two species (conc^-1 min^-1)
    gamma     -- dilution rate common to all intracellular species (min^-1)
    beta_u    -- control-signal production rate (min^-1)
    beta_x    -- feedback-signal production rate (min^-1)
    eta       -- membrane exchange rate of the two closed-loop QS species (min^-1)
    eta_s     -- sender membrane exchange rate, generic QS channel (min^-1)
    eta_r     -- receiver membrane exchange rate, generic QS channel (min^-1)
    gamma_q   -- intracellular QS degradation, generic channel (min^-1)
    gamma_e   -- extracellular degradation rate (min^-1)
    diff      -- spatial diffusion coefficient of extracellular QS (um^2 min^-1)
    alpha0    -- basal expression rate of the controlled output (conc min^-1)
    alpha_max -- maximal expression rate (conc min^-1)
    k_u       -- activation dissociation constant (conc)
    n_u       -- activation Hill coefficient (>= 1)
    n_c       -- controller population density (dimensionless effective)
    n_t       -- target population density (dimensionless effective)
    """

    mu: float
    theta: float
    gamma_z: float
    gamma: float
    beta_u: float
    beta_x: float
    eta: float
    eta_s: float
    eta_r: float
    gamma_q: float
    gamma_e: float
    diff: float
    alpha0: float
    alpha_max: float
    k_u: float
    n_u: float
    n_c: float
    n_t: float

    def __post_init__(self):
        for name in ("mu", "theta", "gamma_z", "gamma", "beta_u", "beta_x",
                     "eta", "eta_s", "eta_r", "gamma_q", "gamma_e", "diff",
                     "alpha0", "alpha_max", "n_c", "n_t"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0.0):
                raise ParameterError(f"{name} must be finite and >= 0, got {v!r}")
        if self.k_u <= 0.0 or not math.isfinite(self.k_u):
            raise ParameterError(f"k_u must be > 0, got {self.k_u!r}")
        if self.n_u < 1.0 or not math.isfinite(self.n_u):
            raise ParameterError(f"n_u must be >= 1, got {self.n_u!r}")
        if self.alpha_max < self.alpha0:
            raise ParameterError(
                f"alpha_max ({self.alpha_max}) must be >= alpha0 ({self.alpha0})")

    def with_overrides(self, **kw) -> "ConsortiumParams":
        return replace(self, **kw)

    def with_ratio(self, ratio: float) -> "ConsortiumParams":
        """Controller:target ratio, target density held at its current value.

        Composition sweeps scale the controller density against a fixed
        target density; per-target feedback load then stays dominated by
        extracellular turnover rather than by the number of consumers.
        """
        if ratio <= 0:
            raise ParameterError(f"ratio must be > 0, got {ratio}")
        return replace(self, n_c=ratio * self.n_t)

    def sequestration_dominant(self, boost: float = 900.0,
                               drive: float = 10.0) -> "ConsortiumParams":
        """Regime where sequestration flux dwarfs dilution of both species.

        Scales the sequestration rate up by `boost` and both comparator
        production rates by `drive` (the set-point mu/theta is preserved),
        rebalancing the sender gain so the two sequestration species stay
        near parity at the operating point.
        """
        rebalance = math.sqrt(boost / drive)
        return replace(self, gamma_z=self.gamma_z * boost,
                       mu=self.mu * drive, theta=self.theta * drive,
                       beta_u=self.beta_u * rebalance)

    def open_loop(self) -> "ConsortiumParams":
        """Severed feedback: comparator no longer reads the feedback signal.

        theta = 0 removes activation by the feedback species; the caller
        must also disable feedback uptake (see model.closed_loop_rhs's
        `feedback_uptake` flag) and rescale mu so the feed-forward
        actuation matches the closed-loop operating point.
        """
        return replace(self, theta=0.0)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def load_params(path: str | Path = DEFAULT_PARAMS_FILE) -> ConsortiumParams:
    """Load a parameter file (YAML mapping, `version` key plus fields)."""
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict) or "params" not in raw:
        raise ParameterError(f"{path}: expected a mapping with a 'params' section")
    return ConsortiumParams(**{k: float(v) for k, v in raw["params"].items()})


def default_params() -> ConsortiumParams:
    return load_params(DEFAULT_PARAMS_FILE)
