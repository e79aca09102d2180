from .harness import (
    DgpDraw,
    Replication,
    SimulationReport,
    generate_dgp,
    replication_seeds,
    run_replication,
    run_scenario,
)
from .scenarios import BETA_FUNCTIONS, REFERENCE_SCENARIOS, ScenarioConfig, reference_result

__all__ = [
    "BETA_FUNCTIONS",
    "DgpDraw",
    "REFERENCE_SCENARIOS",
    "Replication",
    "ScenarioConfig",
    "SimulationReport",
    "generate_dgp",
    "reference_result",
    "replication_seeds",
    "run_replication",
    "run_scenario",
]
