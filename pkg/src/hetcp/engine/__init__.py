"""Simulation engines: direct Gillespie runs, the recorded graphical
representation and monotone couplings."""
from .coupling import MODES, CoupledRun, run_coupled
from .direct import run_direct, run_final
from .graphical import EventLog, evolve_by_events, generate_event_log
from .state import EMPTY, GEN, SPEC1, SPEC2, Configuration, Params, Trajectory, init_config

__all__ = ["MODES", "CoupledRun", "run_coupled", "run_direct", "run_final", "EventLog",
           "evolve_by_events", "generate_event_log", "EMPTY", "GEN", "SPEC1", "SPEC2",
           "Configuration", "Params", "Trajectory", "init_config"]
