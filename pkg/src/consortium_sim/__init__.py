"""Simulator for feedback control distributed across microbial consortia.

Aggregate ODE and spatial agent-based engines for controller/target cell
populations communicating through diffusible signals, a composable P/PI/PD/
PID controller-population family, a chemostat composition-control layer,
and a scenario-driven CLI.
"""

from .params import ConsortiumParams, ParameterError, default_params, load_params
from .reference import ReferenceSignal
from .model import AggregateState, QsChannelState, hill_activation, closed_loop_rhs, qs_channel_rhs
from .aggregate import (IntegratorConfig, Trajectory, integrate,
                        find_steady_state, rpa_setpoint, leak_error)

__version__ = "0.1.0"

__all__ = [
    "ConsortiumParams", "ParameterError", "default_params", "load_params",
    "ReferenceSignal", "AggregateState", "QsChannelState",
    "hill_activation", "closed_loop_rhs", "qs_channel_rhs",
    "IntegratorConfig", "Trajectory", "integrate",
    "find_steady_state", "rpa_setpoint", "leak_error",
    "__version__",
]
