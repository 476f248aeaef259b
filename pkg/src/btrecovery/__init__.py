"""Behavior-tree robot skills with recovery planning and multi-objective
parameter learning, evaluated in a deterministic peg-in-hole simulator."""

__version__ = "0.1.0"

from .bt import NodeStatus, TickContext, tick  # noqa: F401
from .optimizer import (ExperimentConfig, evaluate_policy, pareto_front,  # noqa: F401
                        run_experiment)
from .scenarios import load_scenario  # noqa: F401
from .world import WorldState, randomize_domain  # noqa: F401
