"""Calibration of the nominal parameter set.

The literature gives no complete rate table for this architecture, so the
nominal point is constructed, not measured. Two quantitative anchors drive
the choice: the closed-loop step response should settle (+/-5 % band) in
3-5 hours, and regulation should tolerate controller:target ratios from
1:5 to 5:1. Fixed biology: intracellular dilution gamma = ln 2 / 25 min^-1
(E. coli doubling every 25 min), activation cooperativity n_u = 2, fast
membrane exchange (eta = 10 min^-1, consistent with second-scale acyl-HSL
membrane equilibration), and tag-accelerated extracellular turnover
(gamma_e = 0.65 min^-1), which keeps the communication poles fast enough
for a stable loop and keeps the per-target feedback load dominated by
environmental turnover rather than by consumer count.

Free parameters are derived from two dimensionless design knobs:

  rho  -- leak ratio gamma / sqrt(gamma_z * mu * yd): sequestration-balance
          scale relative to dilution; smaller = stiffer integrator but a
          more oscillatory loop
  u0   -- comparator offset: nominal reference-species level relative to
          the balanced sequestration scale; < 1 runs the comparator with a
          standing excess of the feedback species, which damps the loop

plus the activation operating fraction phi (fraction of the dynamic range
used at the nominal reference). The grid search below picks (rho, u0) so
the nominal step response settles closest to 3.75 h inside [3, 5] h.

Run as a script to regenerate the default parameter file:

    python -m consortium_sim.calibrate [--write]
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .aggregate import (IntegratorConfig, find_steady_state, integrate,
                        invert_activation, settling_time)
from .params import ConsortiumParams, DEFAULT_PARAMS_FILE
from .reference import constant

GAMMA = math.log(2) / 25.0   # min^-1, 25-min doubling
YD_NOMINAL = 3.0             # a.u., reference level all anchors use

FIXED = dict(
    gamma=GAMMA,
    gamma_q=GAMMA,
    eta=10.0, eta_s=10.0, eta_r=10.0,
    gamma_e=0.65,
    diff=400.0,              # um^2 min^-1, acyl-HSL in crowded medium
    alpha0=0.02, alpha_max=1.0, k_u=1.0, n_u=2.0,
    n_c=0.3, n_t=0.3,
)

SETTLE_TARGET_H = 3.75
SETTLE_WINDOW_H = (3.0, 5.0)
RHO_GRID = (0.045, 0.06, 0.08)
U0_GRID = (0.2, 0.3, 0.45)
MU_NOMINAL = 0.01
PHI_NOMINAL = 0.4


def design_params(mu: float = MU_NOMINAL, rho: float = 0.06, u0: float = 0.3,
                  phi: float = PHI_NOMINAL, yd: float = YD_NOMINAL) -> ConsortiumParams:
    """Map the design knobs to a full parameter set via the steady-state chain."""
    fx = FIXED
    gamma, eta = fx["gamma"], fx["eta"]
    a = eta / (gamma + eta)
    gamma_z = gamma ** 2 / (rho ** 2 * mu * yd)
    z1_star = u0 * rho * mu * yd / gamma
    qx_e = yd / a  # set-point mu/theta = 1 maps the reference one-to-one
    load = gamma + (fx["gamma_e"] + fx["n_c"] * gamma * a) / (a * fx["n_t"])
    demand = fx["alpha0"] + (fx["alpha_max"] - fx["alpha0"]) * phi
    xc = demand / gamma
    beta_x = qx_e * load / xc
    p = ConsortiumParams(mu=mu, theta=mu, gamma_z=gamma_z, beta_u=1.0,
                         beta_x=beta_x, **fx)
    qu_t = invert_activation(demand, p)
    qu_e = qu_t / a
    export = (fx["gamma_e"] * qu_e + fx["n_t"] * gamma * qu_t) / fx["n_c"]
    qu_i = qu_e + export / eta
    beta_u = (gamma * qu_i + export) / z1_star
    return p.with_overrides(beta_u=beta_u)


def step_settling_hours(p: ConsortiumParams, yd: float = YD_NOMINAL,
                        horizon: float = 1500.0) -> float:
    """Settling time of the output after a reference step from the basal state."""
    basal = find_steady_state(p, 0.0)
    cfg = IntegratorConfig(method="adaptive", horizon=horizon,
                           max_step=1.0, rtol=1e-7, atol=1e-10)
    traj = integrate(p, constant(yd), basal, cfg)
    ts = settling_time(traj.times, traj.component(5), 0.05)
    return ts / 60.0


def calibrate(verbose: bool = True):
    """Grid-search (rho, u0); return (params, settling_hours, grid_log)."""
    log = []
    best = None
    for rho in RHO_GRID:
        for u0 in U0_GRID:
            p = design_params(rho=rho, u0=u0)
            ts = step_settling_hours(p)
            log.append((rho, u0, ts))
            if verbose:
                print(f"  rho={rho:<6} u0={u0:<5} settle={ts:6.2f} h")
            if math.isfinite(ts) and SETTLE_WINDOW_H[0] <= ts <= SETTLE_WINDOW_H[1]:
                score = abs(ts - SETTLE_TARGET_H)
                if best is None or score < best[0]:
                    best = (score, rho, u0, p, ts)
    if best is None:
        raise RuntimeError("no grid point settled inside the 3-5 h window")
    _, rho, u0, p, ts = best
    if verbose:
        print(f"selected rho={rho} u0={u0}: settling {ts:.2f} h")
    return p, ts, log


def params_to_yaml(p: ConsortiumParams, settling_h: float) -> str:
    units = {
        "mu": "conc min^-1 per a.u. reference", "theta": "min^-1",
        "gamma_z": "conc^-1 min^-1", "gamma": "min^-1  (ln 2 / 25 min doubling)",
        "beta_u": "min^-1", "beta_x": "min^-1", "eta": "min^-1",
        "eta_s": "min^-1", "eta_r": "min^-1", "gamma_q": "min^-1",
        "gamma_e": "min^-1", "diff": "um^2 min^-1", "alpha0": "conc min^-1",
        "alpha_max": "conc min^-1", "k_u": "conc", "n_u": "dimensionless",
        "n_c": "effective density", "n_t": "effective density",
    }
    lines = [
        "# Nominal parameter set, version 1.",
        "# Units: concentrations in a.u., time in minutes, lengths in micrometres.",
        "# Produced by consortium_sim.calibrate: anchored to a 3-5 h settling",
        f"# time ({settling_h:.2f} h at the nominal step) and regulation across",
        "# controller:target ratios 1:5 to 5:1. Modelling choices, not measured",
        "# ground truth.",
        "version: 1",
        "params:",
    ]
    for name, value in p.as_dict().items():
        lines.append(f"  {name}: {value!r:<22} # {units[name]}")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--write", action="store_true",
                    help=f"rewrite {DEFAULT_PARAMS_FILE}")
    ap.add_argument("--out", type=Path, default=None,
                    help="write the parameter file to this path instead")
    args = ap.parse_args(argv)
    p, ts, _ = calibrate()
    text = params_to_yaml(p, ts)
    target = args.out or (DEFAULT_PARAMS_FILE if args.write else None)
    if target is not None:
        Path(target).write_text(text)
        print(f"wrote {target}")
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
